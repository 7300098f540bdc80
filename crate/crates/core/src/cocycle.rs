//! Transition cocycles between the charts of a piecewise linear map, as
//! matrices of Laurent monomials, with regularity and cocycle-condition
//! checks.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::json;

use crate::error::Error;
use crate::fan::Fan;
use crate::linalg::{self, QVec};
use crate::plmap::PLMap;
use crate::rat::{as_i64, fmt_rat, Rat};

/// A matrix whose entries are zero or a single Laurent monomial
/// `coeff * chi^exp` with integer exponent vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialMatrix {
    rank: usize,
    nvars: usize,
    entries: Vec<Vec<Option<(Rat, Vec<i64>)>>>,
}

/// A sum of Laurent monomials; the entry type of symbolic matrix products.
type LaurentPoly = BTreeMap<Vec<i64>, Rat>;

fn laurent_add(p: &mut LaurentPoly, exp: Vec<i64>, c: Rat) {
    let e = p.entry(exp).or_insert_with(Rat::zero);
    *e = &*e + c;
}

fn laurent_normalize(mut p: LaurentPoly) -> LaurentPoly {
    p.retain(|_, c| !c.is_zero());
    p
}

impl MonomialMatrix {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&(Rat, Vec<i64>)> {
        self.entries[i][j].as_ref()
    }

    pub fn identity(rank: usize, nvars: usize) -> Self {
        let entries = (0..rank)
            .map(|i| {
                (0..rank)
                    .map(|j| (i == j).then(|| (Rat::one(), vec![0i64; nvars])))
                    .collect()
            })
            .collect();
        MonomialMatrix { rank, nvars, entries }
    }

    pub fn is_identity(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, e)| match e {
                None => i != j,
                Some((c, exp)) => i == j && c.is_one() && exp.iter().all(|&x| x == 0),
            })
        })
    }

    /// Exponent of the determinant: all permutation terms of a transition
    /// matrix share one exponent, read off any permutation with nonzero
    /// entries.
    pub fn det_exponent(&self) -> Option<Vec<i64>> {
        fn search(
            m: &MonomialMatrix,
            row: usize,
            used: &mut Vec<bool>,
            acc: &mut Vec<i64>,
        ) -> bool {
            if row == m.rank {
                return true;
            }
            for j in 0..m.rank {
                if used[j] {
                    continue;
                }
                if let Some((_, exp)) = &m.entries[row][j] {
                    used[j] = true;
                    for (a, b) in acc.iter_mut().zip(exp) {
                        *a += b;
                    }
                    if search(m, row + 1, used, acc) {
                        return true;
                    }
                    for (a, b) in acc.iter_mut().zip(exp) {
                        *a -= b;
                    }
                    used[j] = false;
                }
            }
            false
        }
        let mut acc = vec![0i64; self.nvars];
        let mut used = vec![false; self.rank];
        search(self, 0, &mut used, &mut acc).then_some(acc)
    }

    /// Symbolic product, entries expanded as Laurent polynomials.
    pub fn laurent_product(&self, rhs: &Self) -> Vec<Vec<LaurentPoly>> {
        assert_eq!(self.rank, rhs.rank);
        let r = self.rank;
        let mut out = vec![vec![LaurentPoly::new(); r]; r];
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    if let (Some((c1, e1)), Some((c2, e2))) =
                        (&self.entries[i][k], &rhs.entries[k][j])
                    {
                        let exp: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                        laurent_add(&mut out[i][j], exp, c1 * c2);
                    }
                }
                out[i][j] = laurent_normalize(std::mem::take(&mut out[i][j]));
            }
        }
        out
    }

    fn as_laurent(&self) -> Vec<Vec<LaurentPoly>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        None => LaurentPoly::new(),
                        Some((c, exp)) => {
                            let mut p = LaurentPoly::new();
                            p.insert(exp.clone(), c.clone());
                            p
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        None => json!(null),
                        Some((c, exp)) => json!({ "coeff": fmt_rat(c), "exp": exp }),
                    })
                    .collect()
            })
            .collect();
        json!({ "rank": self.rank, "entries": rows })
    }
}

/// The transition matrix from the chart of `sigma` to the chart of
/// `sigma_prime`, in frame coordinates: entry `(i, j)` is the
/// change-of-frame coefficient times the character of the weight
/// difference. Requires integral weights.
pub fn transition(phi: &PLMap, sigma: usize, sigma_prime: usize) -> Result<MonomialMatrix, Error> {
    let r = phi.rank();
    let n = phi.fan().rank();
    let p = phi.piece(sigma);
    let p2 = phi.piece(sigma_prime);
    // columns of the frame line matrices; C maps sigma-coordinates to
    // sigma'-coordinates
    let cols = |lines: &[QVec]| linalg::transpose(&lines.to_vec());
    let inv = linalg::invert(&cols(p2.frame.lines()))
        .ok_or_else(|| Error::InvalidFrame("frame lines are dependent".into()))?;
    let c = linalg::mat_mul(&inv, &cols(p.frame.lines()));

    let int_exp = |u: &QVec| -> Result<Vec<i64>, Error> {
        u.iter()
            .map(|x| {
                as_i64(x).ok_or_else(|| {
                    Error::NotIntegral(format!(
                        "weight coordinate {} is not an integer",
                        fmt_rat(x)
                    ))
                })
            })
            .collect()
    };
    let mut entries = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            if c[i][j].is_zero() {
                row.push(None);
            } else {
                let exp: Vec<i64> = int_exp(&p2.weights[i])?
                    .iter()
                    .zip(int_exp(&p.weights[j])?)
                    .map(|(a, b)| a - b)
                    .collect();
                row.push(Some((c[i][j].clone(), exp)));
            }
        }
        entries.push(row);
    }
    Ok(MonomialMatrix { rank: r, nvars: n, entries })
}

/// Regularity of a transition matrix over the chart of the shared face:
/// every entry's exponent must pair nonnegatively with each ray of the
/// face, and the determinant's exponent must pair to zero (so the inverse
/// is regular there too).
pub fn is_regular(psi: &MonomialMatrix, fan: &Fan, tau_rays: &[usize]) -> bool {
    let pairing = |exp: &[i64], ray: &[i64]| -> i64 {
        exp.iter().zip(ray).map(|(a, b)| a * b).sum()
    };
    for row in &psi.entries {
        for e in row.iter().flatten() {
            if tau_rays.iter().any(|&t| pairing(&e.1, fan.ray(t)) < 0) {
                return false;
            }
        }
    }
    let Some(det) = psi.det_exponent() else {
        return false;
    };
    tau_rays.iter().all(|&t| pairing(&det, fan.ray(t)) == 0)
}

/// The cocycle condition over three charts, verified symbolically:
/// `psi_{b,c} psi_{a,b} = psi_{a,c}` as matrices of Laurent polynomials.
pub fn cocycle_check(phi: &PLMap, a: usize, b: usize, c: usize) -> Result<bool, Error> {
    let ab = transition(phi, a, b)?;
    let bc = transition(phi, b, c)?;
    let ac = transition(phi, a, c)?;
    Ok(bc.laurent_product(&ab) == ac.as_laurent())
}

/// `psi_{b,a} psi_{a,b} = 1` symbolically.
pub fn inverse_consistency(phi: &PLMap, a: usize, b: usize) -> Result<bool, Error> {
    let ab = transition(phi, a, b)?;
    let ba = transition(phi, b, a)?;
    let id = MonomialMatrix::identity(phi.rank(), phi.fan().rank());
    Ok(ba.laurent_product(&ab) == id.as_laurent())
}

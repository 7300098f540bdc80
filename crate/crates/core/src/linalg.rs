//! Exact linear algebra over `Q`: reduced row echelon forms, kernels, solving,
//! and canonical-form subspaces with the lattice operations (sum, intersection,
//! complement, Kronecker product).
//!
//! A [`Subspace`] is stored as its RREF basis, so subspace equality is plain
//! structural equality.

use num_traits::{One, Zero};

use crate::error::Error;
use crate::rat::{rat, Rat};

pub type QVec = Vec<Rat>;

pub fn zero_vec(n: usize) -> QVec {
    vec![Rat::zero(); n]
}

pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pairing of an integer lattice vector against a rational covector.
pub fn pair(v: &[i64], u: &[Rat]) -> Rat {
    debug_assert_eq!(v.len(), u.len());
    v.iter().zip(u).map(|(x, y)| y * rat(*x)).sum()
}

pub fn vec_add(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[Rat], b: &[Rat]) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_scale(c: &Rat, a: &[Rat]) -> QVec {
    a.iter().map(|x| c * x).collect()
}

pub fn ivec_to_qvec(v: &[i64]) -> QVec {
    v.iter().map(|x| rat(*x)).collect()
}

/// Kronecker product with the row-major index convention `(i, j) -> i * s + j`
/// where `s = b.len()`.
pub fn kronecker(a: &[Rat], b: &[Rat]) -> QVec {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Reduces `rows` to reduced row echelon form in place, dropping zero rows.
/// Returns the pivot columns in increasing order.
pub fn rref(rows: &mut Vec<QVec>) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for k in 0..ncols {
                    let sub = &f * &rows[r][k];
                    rows[i][k] = &rows[i][k] - sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[QVec]) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m);
    m.len()
}

/// Basis of the kernel `{x : A x = 0}` of the matrix with the given rows.
pub fn kernel(rows: &[QVec], ncols: usize) -> Vec<QVec> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut v = zero_vec(ncols);
        v[fc] = Rat::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[ri][fc].clone();
        }
        basis.push(v);
    }
    basis
}

/// One solution of `A x = b` (free variables set to zero), or `None` if
/// inconsistent.
pub fn solve(rows: &[QVec], rhs: &[Rat]) -> Option<QVec> {
    assert_eq!(rows.len(), rhs.len());
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut aug: Vec<QVec> = rows
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&ncols) {
        return None; // pivot in the augmented column
    }
    let mut x = zero_vec(ncols);
    for (ri, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[ri][ncols].clone();
    }
    Some(x)
}

/// Inverse of a square matrix, or `None` if singular.
pub fn invert(a: &[QVec]) -> Option<Vec<QVec>> {
    let n = a.len();
    let mut aug: Vec<QVec> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots != (0..n).collect::<Vec<_>>() {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(a: &[QVec], x: &[Rat]) -> QVec {
    a.iter().map(|row| dot(row, x)).collect()
}

pub fn mat_mul(a: &[QVec], b: &[QVec]) -> Vec<QVec> {
    let ncols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..ncols)
                .map(|j| row.iter().zip(b).map(|(x, br)| x * &br[j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[QVec]) -> Vec<QVec> {
    let ncols = a.first().map_or(0, |r| r.len());
    (0..ncols)
        .map(|j| a.iter().map(|row| row[j].clone()).collect())
        .collect()
}

pub fn identity(n: usize) -> Vec<QVec> {
    (0..n)
        .map(|i| {
            let mut r = zero_vec(n);
            r[i] = Rat::one();
            r
        })
        .collect()
}

/// A linear subspace of `Q^n` in canonical form: the basis rows are the RREF
/// of any spanning set, so two subspaces are equal iff their representations
/// are identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    basis: Vec<QVec>,
}

impl Subspace {
    /// Canonical span of a set of vectors.
    pub fn span(vectors: &[QVec], ambient: usize) -> Result<Self, Error> {
        for v in vectors {
            if v.len() != ambient {
                return Err(Error::DimensionMismatch(format!(
                    "vector of length {} in ambient dimension {}",
                    v.len(),
                    ambient
                )));
            }
        }
        let mut basis = vectors.to_vec();
        rref(&mut basis);
        Ok(Subspace { ambient, basis })
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace { ambient, basis: identity(ambient) }
    }

    pub fn line(v: &[Rat]) -> Result<Self, Error> {
        let s = Self::span(std::slice::from_ref(&v.to_vec()), v.len())?;
        if s.dim() != 1 {
            return Err(Error::InvalidInput("zero vector does not span a line".into()));
        }
        Ok(s)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QVec] {
        &self.basis
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient
    }

    fn check_ambient(&self, other: &Self) -> Result<(), Error> {
        if self.ambient != other.ambient {
            return Err(Error::AmbientMismatch(self.ambient, other.ambient));
        }
        Ok(())
    }

    /// Membership test by reducing `v` against the RREF basis.
    pub fn contains_vec(&self, v: &[Rat]) -> bool {
        if v.len() != self.ambient {
            return false;
        }
        let mut w = v.to_vec();
        for row in &self.basis {
            let pc = row.iter().position(|x| !x.is_zero()).expect("no zero basis rows");
            if !w[pc].is_zero() {
                let f = w[pc].clone();
                for k in 0..self.ambient {
                    let sub = &f * &row[k];
                    w[k] = &w[k] - sub;
                }
            }
        }
        is_zero_vec(&w)
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.ambient == other.ambient && other.basis.iter().all(|v| self.contains_vec(v))
    }

    pub fn sum(&self, other: &Self) -> Result<Self, Error> {
        self.check_ambient(other)?;
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Self::span(&rows, self.ambient)
    }

    /// Intersection via the kernel of the stacked coefficient matrix: a vector
    /// lies in both spans iff it is `x A = y B` for some coefficient rows.
    pub fn intersect(&self, other: &Self) -> Result<Self, Error> {
        self.check_ambient(other)?;
        if self.basis.is_empty() || other.basis.is_empty() {
            return Ok(Self::zero(self.ambient));
        }
        // Columns of the system are the coefficients (x, y); the equations say
        // x A - y B = 0 coordinate by coordinate.
        let a = self.dim();
        let b = other.dim();
        let mut sys = Vec::with_capacity(self.ambient);
        for k in 0..self.ambient {
            let mut row = Vec::with_capacity(a + b);
            for i in 0..a {
                row.push(self.basis[i][k].clone());
            }
            for j in 0..b {
                row.push(-other.basis[j][k].clone());
            }
            sys.push(row);
        }
        let null = kernel(&sys, a + b);
        let vectors: Vec<QVec> = null
            .iter()
            .map(|xy| {
                let mut v = zero_vec(self.ambient);
                for i in 0..a {
                    for k in 0..self.ambient {
                        let add = &xy[i] * &self.basis[i][k];
                        v[k] = &v[k] + add;
                    }
                }
                v
            })
            .collect();
        Self::span(&vectors, self.ambient)
    }

    /// Vectors extending a basis of `self` to a basis of `larger`.
    /// Requires `self` to be contained in `larger`.
    pub fn complement_basis_in(&self, larger: &Self) -> Result<Vec<QVec>, Error> {
        self.check_ambient(larger)?;
        if !larger.contains(self) {
            return Err(Error::InvalidInput(
                "complement_basis: first subspace is not contained in the second".into(),
            ));
        }
        let mut acc = self.basis.clone();
        let mut out = Vec::new();
        let mut cur_rank = self.dim();
        for v in &larger.basis {
            let mut trial = acc.clone();
            trial.push(v.clone());
            if rank(&trial) > cur_rank {
                acc.push(v.clone());
                out.push(v.clone());
                cur_rank += 1;
            }
        }
        debug_assert_eq!(cur_rank, larger.dim());
        Ok(out)
    }

    /// Kronecker product of subspaces, in `Q^{r s}` with the row-major index
    /// convention `(i, j) -> i * s + j`.
    pub fn tensor(&self, other: &Self) -> Self {
        let ambient = self.ambient * other.ambient;
        let mut vectors = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.basis {
            for b in &other.basis {
                vectors.push(kronecker(a, b));
            }
        }
        Self::span(&vectors, ambient).expect("tensor basis has consistent lengths")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_frac;

    fn qv(v: &[i64]) -> QVec {
        ivec_to_qvec(v)
    }

    #[test]
    fn canonicalize_scalar_multiples() {
        let s = Subspace::span(&[qv(&[1, 1]), qv(&[2, 2])], 2).unwrap();
        assert_eq!(s.basis(), &[qv(&[1, 1])]);
    }

    #[test]
    fn canonicalize_empty_is_zero() {
        let s = Subspace::span(&[], 3).unwrap();
        assert_eq!(s, Subspace::zero(3));
        assert_eq!(s.dim(), 0);
    }

    #[test]
    fn canonicalize_full_plane() {
        let s = Subspace::span(&[qv(&[1, 0]), qv(&[1, 1])], 2).unwrap();
        assert_eq!(s, Subspace::full(2));
    }

    #[test]
    fn canonicalize_dimension_mismatch() {
        assert!(Subspace::span(&[qv(&[1, 0, 0])], 2).is_err());
    }

    #[test]
    fn intersect_transverse_lines() {
        let x = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        let y = Subspace::span(&[qv(&[0, 1])], 2).unwrap();
        assert_eq!(x.intersect(&y).unwrap(), Subspace::zero(2));
    }

    #[test]
    fn intersect_idempotent() {
        let a = Subspace::span(&[qv(&[1, 2, 3]), qv(&[0, 1, 1])], 3).unwrap();
        assert_eq!(a.intersect(&a).unwrap(), a);
    }

    #[test]
    fn intersect_planes_in_q3() {
        // Frozen from the stacked-matrix kernel computed by hand:
        // span{e1,e2} and span{e2,e3} meet in span{e2}.
        let a = Subspace::span(&[qv(&[1, 0, 0]), qv(&[0, 1, 0])], 3).unwrap();
        let b = Subspace::span(&[qv(&[0, 1, 0]), qv(&[0, 0, 1])], 3).unwrap();
        let expect = Subspace::span(&[qv(&[0, 1, 0])], 3).unwrap();
        assert_eq!(a.intersect(&b).unwrap(), expect);
    }

    #[test]
    fn intersect_ambient_mismatch() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert!(a.intersect(&b).is_err());
    }

    #[test]
    fn sum_of_axes_is_plane() {
        let x = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        let y = Subspace::span(&[qv(&[0, 1])], 2).unwrap();
        assert_eq!(x.sum(&y).unwrap(), Subspace::full(2));
    }

    #[test]
    fn full_contains_everything() {
        let e = Subspace::full(3);
        let a = Subspace::span(&[qv(&[1, 2, 3])], 3).unwrap();
        assert!(e.contains(&a));
        assert!(e.contains(&Subspace::zero(3)));
        assert!(!a.contains(&e));
    }

    #[test]
    fn complement_of_zero_spans_everything() {
        let z = Subspace::zero(2);
        let comp = z.complement_basis_in(&Subspace::full(2)).unwrap();
        assert_eq!(comp.len(), 2);
        let s = Subspace::span(&comp, 2).unwrap();
        assert_eq!(s, Subspace::full(2));
    }

    #[test]
    fn complement_requires_containment() {
        let a = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        let b = Subspace::span(&[qv(&[0, 1])], 2).unwrap();
        assert!(a.complement_basis_in(&b).is_err());
    }

    #[test]
    fn tensor_elementary() {
        let a = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        let b = Subspace::span(&[qv(&[0, 1])], 2).unwrap();
        let t = a.tensor(&b);
        let expect = Subspace::span(&[qv(&[0, 1, 0, 0])], 4).unwrap();
        assert_eq!(t, expect);
    }

    #[test]
    fn tensor_full_is_full() {
        assert_eq!(Subspace::full(2).tensor(&Subspace::full(3)), Subspace::full(6));
    }

    #[test]
    fn solve_and_invert() {
        let a = vec![qv(&[2, 1]), qv(&[1, 1])];
        let x = solve(&a, &qv(&[3, 2])).unwrap();
        assert_eq!(mat_vec(&a, &x), qv(&[3, 2]));
        let inv = invert(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), identity(2));
        assert!(invert(&[qv(&[1, 1]), qv(&[2, 2])]).is_none());
    }

    #[test]
    fn kernel_of_rank_one() {
        let k = kernel(&[qv(&[1, 1, 1])], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(dot(&qv(&[1, 1, 1]), v).is_zero());
        }
    }

    #[test]
    fn rational_pivots_are_exact() {
        let s = Subspace::span(&[vec![rat_frac(1, 2), rat_frac(1, 3)]], 2).unwrap();
        assert_eq!(s.basis()[0], vec![rat(1), rat_frac(2, 3)]);
    }
}

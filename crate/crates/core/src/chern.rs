//! Elementary symmetric functions on prevaluations and equivariant Chern
//! classes as exact piecewise polynomials.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use num_traits::Zero;
use serde_json::json;

use crate::building::Prevaluation;
use crate::error::Error;
use crate::fan::Fan;
use crate::linalg::{self, QVec};
use crate::plmap::PLMap;
use crate::rat::{fmt_rat, rat, Rat};

/// Monomial exponent vector ordered by graded lexicographic order, so that
/// polynomial term maps have a canonical iteration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial in `nvars` variables over the rationals, stored sparsely by
/// monomial with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_term(Monomial(vec![0; nvars]), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, rat(1))
    }

    /// The linear form `x -> <x, u>`.
    pub fn linear(u: &[Rat]) -> Self {
        let mut p = Poly::zero(u.len());
        for (i, c) in u.iter().enumerate() {
            let mut e = vec![0u32; u.len()];
            e[i] = 1;
            p.add_term(Monomial(e), c.clone());
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry = &*entry + c;
        if entry.is_zero() {
            let dead: Vec<Monomial> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rat> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        let mut p = Poly::zero(self.nvars);
        for (m, v) in &self.terms {
            p.add_term(m.clone(), c * v);
        }
        p
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        let mut total = rat(0);
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (e, xi) in m.0.iter().zip(x) {
                for _ in 0..*e {
                    t = &t * xi;
                }
            }
            total = total + t;
        }
        total
    }

    /// Substitute each variable by a linear form in fresh variables `t`:
    /// `x_j = sum_k rows[k][j] t_k` (rows are the direction vectors).
    pub fn substitute_linear(&self, rows: &[QVec]) -> Poly {
        let tvars = rows.len();
        let mut out = Poly::zero(tvars);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(tvars, c.clone());
            for (j, &e) in m.0.iter().enumerate() {
                let form: QVec = rows.iter().map(|r| r[j].clone()).collect();
                let lin = Poly::linear(&form);
                for _ in 0..e {
                    term = &term * &lin;
                }
            }
            out = &out + &term;
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (m, c) in &rhs.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(&rat(-1))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = Poly::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let e: Vec<u32> = m1.0.iter().zip(&m2.0).map(|(a, b)| a + b).collect();
                p.add_term(Monomial(e), c1 * c2);
            }
        }
        p
    }
}

/// A function given by one polynomial per maximal cone of a fan, agreeing on
/// shared faces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewisePolynomial {
    fan: Fan,
    polys: Vec<Poly>,
}

impl PiecewisePolynomial {
    pub fn new(fan: Fan, polys: Vec<Poly>) -> Result<Self, Error> {
        if polys.len() != fan.max_cones().len() {
            return Err(Error::InvalidInput(format!(
                "{} polynomials for {} maximal cones",
                polys.len(),
                fan.max_cones().len()
            )));
        }
        for p in &polys {
            if p.nvars() != fan.rank() {
                return Err(Error::InvalidInput(format!(
                    "polynomial in {} variables on a rank-{} fan",
                    p.nvars(),
                    fan.rank()
                )));
            }
        }
        let pp = PiecewisePolynomial { fan, polys };
        pp.check_face_compatibility()?;
        Ok(pp)
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    /// Exact agreement on every shared face: substitute the parametrization
    /// of the face span into both cone polynomials and compare coefficients.
    fn check_face_compatibility(&self) -> Result<(), Error> {
        let nc = self.fan.max_cones().len();
        for i in 0..nc {
            for j in i + 1..nc {
                let shared: Vec<usize> = self
                    .fan
                    .cone_rays(i)
                    .iter()
                    .filter(|r| self.fan.cone_rays(j).contains(r))
                    .copied()
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                let rows: Vec<QVec> = shared
                    .iter()
                    .map(|&r| linalg::ivec_to_qvec(self.fan.ray(r)))
                    .collect();
                if self.polys[i].substitute_linear(&rows) != self.polys[j].substitute_linear(&rows)
                {
                    return Err(Error::InvalidInput(format!(
                        "polynomials of cones {i} and {j} disagree on their shared face"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[Rat]) -> Result<Rat, Error> {
        let c = self.fan.find_cone(x).ok_or(Error::OutsideSupport)?;
        Ok(self.polys[c].eval(x))
    }

    pub fn degree(&self) -> u32 {
        self.polys.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let cones: Vec<serde_json::Value> = self
            .polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let terms: Vec<serde_json::Value> = p
                    .terms()
                    .iter()
                    .map(|(m, c)| json!([m.0, fmt_rat(c)]))
                    .collect();
                json!({ "cone": i, "poly": terms })
            })
            .collect();
        json!(cones)
    }
}

/// The `i`-th elementary symmetric polynomial of the prevaluation's value
/// multiset, where each label is repeated by its graded-piece dimension.
/// Frame-independent by construction.
pub fn elementary_symmetric_value(v: &Prevaluation, i: usize) -> Result<Rat, Error> {
    let r = v.ambient_dim();
    if i < 1 || i > r {
        return Err(Error::InvalidInput(format!(
            "symmetric function index {i} out of range 1..={r}"
        )));
    }
    let mut values: Vec<Rat> = Vec::with_capacity(r);
    let mut prev_dim = 0usize;
    for (c, f) in v.labels().iter().zip(v.flag()) {
        for _ in 0..f.dim() - prev_dim {
            values.push(c.clone());
        }
        prev_dim = f.dim();
    }
    Ok(elementary_symmetric(&values, i))
}

fn elementary_symmetric(values: &[Rat], i: usize) -> Rat {
    // e[k] over a growing multiset: e_k += e_{k-1} * x
    let mut e: Vec<Rat> = vec![rat(0); i + 1];
    e[0] = rat(1);
    for x in values {
        for k in (1..=i).rev() {
            e[k] = &e[k] + &(&e[k - 1] * x);
        }
    }
    e[i].clone()
}

/// The `i`-th equivariant Chern class of a piecewise linear map: on each
/// cone the elementary symmetric polynomial of the weight linear forms.
pub fn chern_class(phi: &PLMap, i: usize) -> Result<PiecewisePolynomial, Error> {
    let r = phi.rank();
    if i < 1 || i > r {
        return Err(Error::InvalidInput(format!(
            "Chern index {i} out of range 1..={r}"
        )));
    }
    let n = phi.fan().rank();
    let polys: Vec<Poly> = phi
        .pieces()
        .iter()
        .map(|p| {
            let mut e: Vec<Poly> = (0..=i).map(|_| Poly::zero(n)).collect();
            e[0] = Poly::one(n);
            for u in &p.weights {
                let lin = Poly::linear(u);
                for k in (1..=i).rev() {
                    e[k] = &e[k] + &(&e[k - 1] * &lin);
                }
            }
            e[i].clone()
        })
        .collect();
    PiecewisePolynomial::new(phi.fan().clone(), polys)
        .map_err(|e| Error::MalformedPlMap(format!("Chern class not well defined: {e}")))
}

/// True iff `f - g` is one and the same global polynomial of degree at most
/// one on every cone, i.e. the two classes differ by a linear function.
pub fn equivalent_mod_linear(
    f: &PiecewisePolynomial,
    g: &PiecewisePolynomial,
) -> Result<bool, Error> {
    if f.fan() != g.fan() {
        return Err(Error::InvalidInput("piecewise polynomials on different fans".into()));
    }
    if f.degree() > 1 || g.degree() > 1 {
        return Err(Error::InvalidInput(
            "linear-equivalence test requires degree at most one".into(),
        ));
    }
    let diffs: Vec<Poly> = f
        .polys()
        .iter()
        .zip(g.polys())
        .map(|(a, b)| a - b)
        .collect();
    Ok(diffs.windows(2).all(|w| w[0] == w[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::ivec_to_qvec;
    use crate::rat::rat_frac;

    #[test]
    fn symmetric_values_of_constant_prevaluation() {
        let v = Prevaluation::constant(2, rat(3));
        assert_eq!(elementary_symmetric_value(&v, 1).unwrap(), rat(6));
        assert_eq!(elementary_symmetric_value(&v, 2).unwrap(), rat(9));
        assert!(elementary_symmetric_value(&v, 3).is_err());
        assert!(elementary_symmetric_value(&v, 0).is_err());
    }

    #[test]
    fn symmetric_values_of_two_step_flag() {
        use crate::linalg::Subspace;
        let line = Subspace::span(&[vec![rat(1), rat(0)]], 2).unwrap();
        let v = Prevaluation::new(vec![rat(1), rat(0)], vec![line, Subspace::full(2)]).unwrap();
        assert_eq!(elementary_symmetric_value(&v, 1).unwrap(), rat(1));
        assert_eq!(elementary_symmetric_value(&v, 2).unwrap(), rat(0));
    }

    #[test]
    fn c1_of_tangent_p2_is_one_at_ray_generators() {
        let (fan, _, phi) = fixtures::tangent_pn(2).unwrap();
        let c1 = chern_class(&phi, 1).unwrap();
        for ray in 0..3 {
            assert_eq!(c1.eval(&ivec_to_qvec(fan.ray(ray))).unwrap(), rat(1));
        }
        // on the cone of the coordinate rays, c1 = x1 + x2
        assert_eq!(c1.polys()[0], Poly::linear(&[rat(1), rat(1)]));
    }

    #[test]
    fn c2_of_tangent_p2_on_coordinate_cone_is_x1_x2() {
        let (_, _, phi) = fixtures::tangent_pn(2).unwrap();
        let c2 = chern_class(&phi, 2).unwrap();
        let x1 = Poly::linear(&[rat(1), rat(0)]);
        let x2 = Poly::linear(&[rat(0), rat(1)]);
        assert_eq!(c2.polys()[0], &x1 * &x2);
    }

    #[test]
    fn c1_of_rank1_is_the_defining_pl_function() {
        let fan = fixtures::fan_p2();
        let phi = fixtures::line_bundle(&fan, &[2, -1, 3]).unwrap();
        let c1 = chern_class(&phi, 1).unwrap();
        for (c, piece) in phi.pieces().iter().enumerate() {
            assert_eq!(c1.polys()[c], Poly::linear(&piece.weights[0]));
        }
    }

    #[test]
    fn chern_value_matches_symmetric_value_of_prevaluation() {
        let (fan, _, phi) = fixtures::tangent_pn(2).unwrap();
        for x in [[3i64, 1], [-2, 5], [0, -1], [7, 7]] {
            let xq = ivec_to_qvec(&x);
            let v = phi.evaluate(&xq).unwrap();
            for i in 1..=2 {
                assert_eq!(
                    chern_class(&phi, i).unwrap().eval(&xq).unwrap(),
                    elementary_symmetric_value(&v, i).unwrap()
                );
            }
        }
        let _ = fan;
    }

    #[test]
    fn linear_shift_is_equivalent_constant_twist_is_detected() {
        let fan = fixtures::fan_p2();
        let a = fixtures::line_bundle(&fan, &[1, 0, 2]).unwrap();
        // shift by the principal divisor of the character m = (1, -1)
        let m = [1i64, -1];
        let shifted: Vec<i64> = (0..3)
            .map(|r| {
                let v = fan.ray(r);
                [1, 0, 2][r] + v[0] * m[0] + v[1] * m[1]
            })
            .collect();
        let b = fixtures::line_bundle(&fan, &shifted).unwrap();
        let ca = chern_class(&a, 1).unwrap();
        let cb = chern_class(&b, 1).unwrap();
        assert!(equivalent_mod_linear(&ca, &cb).unwrap());

        let c = fixtures::line_bundle(&fan, &[2, 0, 2]).unwrap();
        assert!(!equivalent_mod_linear(&ca, &chern_class(&c, 1).unwrap()).unwrap());
    }

    #[test]
    fn o1_vs_o2_on_p1_not_linearly_equivalent() {
        let fan = fixtures::fan_p1();
        let c1 = chern_class(&fixtures::line_bundle(&fan, &[1, 0]).unwrap(), 1).unwrap();
        let c2 = chern_class(&fixtures::line_bundle(&fan, &[2, 0]).unwrap(), 1).unwrap();
        assert!(!equivalent_mod_linear(&c1, &c2).unwrap());
        assert!(equivalent_mod_linear(&c1, &c1).unwrap());
    }

    #[test]
    fn whitney_additivity_of_c1_under_tensor() {
        let fan = fixtures::fan_p2();
        let (_, _, phi) = fixtures::tangent_pn(2).unwrap();
        let psi = fixtures::line_bundle(&fan, &[1, -2, 0]).unwrap();
        let t = phi.tensor(&psi).unwrap();
        let lhs = chern_class(&t, 1).unwrap();
        let c_phi = chern_class(&phi, 1).unwrap();
        let c_psi = chern_class(&psi, 1).unwrap();
        for c in 0..3 {
            let expected =
                &c_phi.polys()[c].scale(&rat(1)) + &c_psi.polys()[c].scale(&rat(2));
            assert_eq!(lhs.polys()[c], expected);
        }
    }

    #[test]
    fn poly_substitution_and_eval_agree() {
        // p(x) = x1^2 - 2 x1 x2 + 1/3, restricted to the line through (2, 1)
        let x1 = Poly::linear(&[rat(1), rat(0)]);
        let x2 = Poly::linear(&[rat(0), rat(1)]);
        let p = &(&(&x1 * &x1) - &(&x1 * &x2).scale(&rat(2))) + &Poly::constant(2, rat_frac(1, 3));
        let sub = p.substitute_linear(&[vec![rat(2), rat(1)]]);
        for t in [-3i64, 0, 1, 5] {
            assert_eq!(sub.eval(&[rat(t)]), p.eval(&[rat(2 * t), rat(t)]));
        }
    }
}

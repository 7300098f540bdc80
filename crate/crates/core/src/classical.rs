//! Symplectic and even-orthogonal structures: bilinear forms, isotropic
//! flags, normal frames, one-parameter-subgroup flags, and verification of
//! per-cone certificates reducing a toric bundle to O(2r) or Sp(2r).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fan::Fan;
use crate::linalg::{self, QVec, Subspace};
use crate::rat::{fmt_rat, parse_rat, rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Symmetric,
    Skew,
}

/// A nondegenerate symmetric or skew-symmetric bilinear form on `Q^{2r}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilinearForm {
    kind: FormKind,
    gram: Vec<QVec>,
}

impl BilinearForm {
    pub fn new(kind: FormKind, gram: Vec<QVec>) -> Result<Self, Error> {
        let d = gram.len();
        if d % 2 != 0 || gram.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidInput(
                "Gram matrix must be square of even dimension".into(),
            ));
        }
        for i in 0..d {
            for j in 0..d {
                let expected = match kind {
                    FormKind::Symmetric => gram[j][i].clone(),
                    FormKind::Skew => -gram[j][i].clone(),
                };
                if gram[i][j] != expected {
                    return Err(Error::InvalidInput("Gram matrix does not match kind".into()));
                }
            }
        }
        if linalg::invert(&gram).is_none() {
            return Err(Error::DegenerateForm);
        }
        Ok(BilinearForm { kind, gram })
    }

    /// Standard form on `e_1..e_r, f_1..f_r` with `<e_i, f_i> = 1`,
    /// isotropic `e`'s and `f`'s: hyperbolic when symmetric, the standard
    /// symplectic form when skew.
    pub fn standard(kind: FormKind, r: usize) -> Self {
        let d = 2 * r;
        let mut gram = vec![linalg::zero_vec(d); d];
        for i in 0..r {
            gram[i][r + i] = rat(1);
            gram[r + i][i] = match kind {
                FormKind::Symmetric => rat(1),
                FormKind::Skew => rat(-1),
            };
        }
        BilinearForm { kind, gram }
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.gram.len()
    }

    pub fn half_rank(&self) -> usize {
        self.gram.len() / 2
    }

    pub fn apply(&self, x: &[Rat], y: &[Rat]) -> Rat {
        linalg::dot(x, &linalg::mat_vec(&self.gram, &y.to_vec()))
    }
}

/// Orthogonal complement with respect to the form.
pub fn perp(w: &Subspace, form: &BilinearForm) -> Result<Subspace, Error> {
    if w.ambient_dim() != form.dim() {
        return Err(Error::AmbientMismatch(w.ambient_dim(), form.dim()));
    }
    let rows: Vec<QVec> = w
        .basis()
        .iter()
        .map(|b| linalg::mat_vec(&linalg::transpose(&form.gram), &b.clone()))
        .collect();
    let ker = linalg::kernel(&rows, form.dim());
    Subspace::span(&ker, form.dim())
}

/// A basis `e_1..e_r, f_1..f_r` with isotropic halves pairing as
/// `<e_i, f_j> = delta_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFrame {
    pub e: Vec<QVec>,
    pub f: Vec<QVec>,
}

impl NormalFrame {
    pub fn standard(r: usize) -> Self {
        let d = 2 * r;
        let unit = |i: usize| -> QVec {
            let mut v = linalg::zero_vec(d);
            v[i] = rat(1);
            v
        };
        NormalFrame {
            e: (0..r).map(unit).collect(),
            f: (0..r).map(|i| unit(r + i)).collect(),
        }
    }

    pub fn half_rank(&self) -> usize {
        self.e.len()
    }
}

pub fn is_normal_basis(frame: &NormalFrame, form: &BilinearForm) -> bool {
    let r = form.half_rank();
    if frame.e.len() != r || frame.f.len() != r {
        return false;
    }
    let all = |a: &[QVec], b: &[QVec], expect: &dyn Fn(usize, usize) -> Rat| {
        a.iter().enumerate().all(|(i, x)| {
            b.iter()
                .enumerate()
                .all(|(j, y)| form.apply(x, y) == expect(i, j))
        })
    };
    all(&frame.e, &frame.e, &|_, _| rat(0))
        && all(&frame.f, &frame.f, &|_, _| rat(0))
        && all(&frame.e, &frame.f, &|i, j| rat(i64::from(i == j)))
}

/// A flag `F_1 < ... < F_k = E` with strictly decreasing labels whose
/// members pair off as `F_i^perp = F_{k-i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledIsotropicFlag {
    pub labels: Vec<Rat>,
    pub flag: Vec<Subspace>,
}

pub fn is_isotropic_flag(flag: &[Subspace], form: &BilinearForm) -> bool {
    let k = flag.len();
    if k == 0 || !flag[k - 1].is_full() {
        return false;
    }
    if !flag.windows(2).all(|w| w[1].contains(&w[0]) && w[0].dim() < w[1].dim()) {
        return false;
    }
    (1..=k).all(|i| {
        let rhs = if i == k {
            Subspace::zero(form.dim())
        } else {
            flag[k - i - 1].clone()
        };
        match perp(&flag[i - 1], form) {
            Ok(p) => p == rhs,
            Err(_) => false,
        }
    })
}

impl LabeledIsotropicFlag {
    pub fn validate(&self, form: &BilinearForm) -> bool {
        self.labels.len() == self.flag.len()
            && self.labels.windows(2).all(|w| w[0] > w[1])
            && is_isotropic_flag(&self.flag, form)
    }
}

/// The labeled flag of the one-parameter subgroup acting with exponents
/// `v_1 >= ... >= v_r >= 0` on the `e_i` and `-v_i` on the `f_i`: subspaces
/// are spans of frame vectors with exponent at or above each distinct label.
pub fn flag_of_one_ps(
    frame: &NormalFrame,
    exponents: &[i64],
) -> Result<LabeledIsotropicFlag, Error> {
    let r = frame.half_rank();
    if exponents.len() != r {
        return Err(Error::InvalidInput(format!(
            "{} exponents for half rank {r}",
            exponents.len()
        )));
    }
    if exponents.windows(2).any(|w| w[0] < w[1]) || exponents.iter().any(|&v| v < 0) {
        return Err(Error::InvalidInput(
            "exponents must be sorted decreasing and nonnegative".into(),
        ));
    }
    let d = 2 * r;
    let mut graded: Vec<(i64, &QVec)> = Vec::with_capacity(d);
    for (v, e) in exponents.iter().zip(&frame.e) {
        graded.push((*v, e));
    }
    for (v, f) in exponents.iter().zip(&frame.f) {
        graded.push((-*v, f));
    }
    let mut distinct: Vec<i64> = graded.iter().map(|(v, _)| *v).collect();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.reverse();
    let mut labels = Vec::with_capacity(distinct.len());
    let mut flag = Vec::with_capacity(distinct.len());
    for c in distinct {
        let span: Vec<QVec> = graded
            .iter()
            .filter(|(v, _)| *v >= c)
            .map(|(_, x)| (*x).clone())
            .collect();
        labels.push(rat(c));
        flag.push(Subspace::span(&span, d)?);
    }
    Ok(LabeledIsotropicFlag { labels, flag })
}

/// One cone's certificate: a normal frame of `E` and an integer linear map
/// from the cocharacter lattice to the exponent space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeCertificate {
    pub frame: NormalFrame,
    /// `r x n` matrix applied to ray generators.
    pub phi: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateWitness {
    pub cone: usize,
    pub ray: usize,
    pub detail: String,
}

/// Full certificate for a reduction to O(2r) / Sp(2r) on a fan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub kind: FormKind,
    pub half_rank: usize,
    pub ray_flags: Vec<LabeledIsotropicFlag>,
    pub cones: Vec<ConeCertificate>,
}

/// Check that every cone's (frame, exponent map) reproduces the prescribed
/// labeled flag on each of its rays, after normalizing exponent vectors by
/// the allowed moves: swapping `e_i` with `f_i` (sign flip) and reordering
/// pairs (sorting).
pub fn verify_certificate(
    fan: &Fan,
    cert: &Certificate,
) -> Result<Result<(), CertificateWitness>, Error> {
    let r = cert.half_rank;
    let form = BilinearForm::standard(cert.kind, r);
    if cert.ray_flags.len() != fan.rays().len() {
        return Err(Error::InvalidInput(format!(
            "{} ray flags for {} rays",
            cert.ray_flags.len(),
            fan.rays().len()
        )));
    }
    if cert.cones.len() != fan.max_cones().len() {
        return Err(Error::InvalidInput(format!(
            "{} cone certificates for {} maximal cones",
            cert.cones.len(),
            fan.max_cones().len()
        )));
    }
    for (ray, f) in cert.ray_flags.iter().enumerate() {
        if !f.validate(&form) {
            return Err(Error::InvalidInput(format!(
                "flag of ray {ray} is not a labeled isotropic flag"
            )));
        }
    }
    for (c, cc) in cert.cones.iter().enumerate() {
        if !is_normal_basis(&cc.frame, &form) {
            return Err(Error::InvalidInput(format!(
                "frame of cone {c} is not a normal basis"
            )));
        }
        if cc.phi.len() != r || cc.phi.iter().any(|row| row.len() != fan.rank()) {
            return Err(Error::InvalidInput(format!(
                "exponent map of cone {c} is not {r} x {}",
                fan.rank()
            )));
        }
        for &ray in fan.cone_rays(c) {
            let v = fan.ray(ray);
            let a: Vec<i64> = cc
                .phi
                .iter()
                .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
                .collect();
            let (frame, exps) = normalize_weyl(&cc.frame, &a);
            let got = flag_of_one_ps(&frame, &exps)?;
            let want = &cert.ray_flags[ray];
            if got.labels != want.labels || got.flag != want.flag {
                return Ok(Err(CertificateWitness {
                    cone: c,
                    ray,
                    detail: format!(
                        "exponents {a:?} induce labels {:?}, prescribed {:?}",
                        got.labels.iter().map(fmt_rat).collect::<Vec<_>>(),
                        want.labels.iter().map(fmt_rat).collect::<Vec<_>>()
                    ),
                }));
            }
        }
    }
    Ok(Ok(()))
}

/// Apply sign flips (swap `e_i <-> f_i`) and a sorting permutation so the
/// exponent vector becomes decreasing and nonnegative, moving the frame
/// along with it.
fn normalize_weyl(frame: &NormalFrame, a: &[i64]) -> (NormalFrame, Vec<i64>) {
    let mut entries: Vec<(i64, QVec, QVec)> = a
        .iter()
        .zip(frame.e.iter().zip(&frame.f))
        .map(|(&v, (e, f))| {
            if v < 0 {
                (-v, f.clone(), e.clone())
            } else {
                (v, e.clone(), f.clone())
            }
        })
        .collect();
    entries.sort_by(|x, y| y.0.cmp(&x.0));
    let exps: Vec<i64> = entries.iter().map(|t| t.0).collect();
    let e = entries.iter().map(|t| t.1.clone()).collect();
    let f = entries.iter().map(|t| t.2.clone()).collect();
    (NormalFrame { e, f }, exps)
}

// --- serialization ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CertificateDto {
    kind: FormKind,
    half_rank: usize,
    ray_flags: BTreeMap<String, Vec<(String, Vec<Vec<String>>)>>,
    cones: Vec<ConeDto>,
}

#[derive(Serialize, Deserialize)]
struct ConeDto {
    frame_e: Vec<Vec<String>>,
    frame_f: Vec<Vec<String>>,
    phi: Vec<Vec<i64>>,
}

impl Certificate {
    pub fn from_json(s: &str) -> Result<Self, Error> {
        let dto: CertificateDto =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("certificate JSON: {e}")))?;
        let d = 2 * dto.half_rank;
        let parse_rows = |rows: &[Vec<String>]| -> Result<Vec<QVec>, Error> {
            rows.iter()
                .map(|row| row.iter().map(|x| parse_rat(x)).collect())
                .collect()
        };
        let nrays = dto.ray_flags.len();
        let mut ray_flags = vec![None; nrays];
        for (key, steps) in &dto.ray_flags {
            let idx: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("bad ray index {key:?}")))?;
            if idx >= nrays {
                return Err(Error::Parse(format!("ray index {idx} out of range")));
            }
            let mut labels = Vec::new();
            let mut flag = Vec::new();
            for (label, rows) in steps {
                labels.push(parse_rat(label)?);
                flag.push(Subspace::span(&parse_rows(rows)?, d)?);
            }
            ray_flags[idx] = Some(LabeledIsotropicFlag { labels, flag });
        }
        let ray_flags = ray_flags
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| Error::Parse(format!("missing flag for ray {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let cones = dto
            .cones
            .iter()
            .map(|c| {
                Ok(ConeCertificate {
                    frame: NormalFrame { e: parse_rows(&c.frame_e)?, f: parse_rows(&c.frame_f)? },
                    phi: c.phi.clone(),
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Certificate { kind: dto.kind, half_rank: dto.half_rank, ray_flags, cones })
    }

    pub fn to_json(&self) -> String {
        let fmt_rows =
            |rows: &[QVec]| -> Vec<Vec<String>> {
                rows.iter().map(|r| r.iter().map(fmt_rat).collect()).collect()
            };
        let ray_flags = self
            .ray_flags
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let steps = f
                    .labels
                    .iter()
                    .zip(&f.flag)
                    .map(|(l, s)| (fmt_rat(l), fmt_rows(s.basis())))
                    .collect();
                (i.to_string(), steps)
            })
            .collect();
        let cones = self
            .cones
            .iter()
            .map(|c| ConeDto {
                frame_e: fmt_rows(&c.frame.e),
                frame_f: fmt_rows(&c.frame.f),
                phi: c.phi.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&CertificateDto {
            kind: self.kind,
            half_rank: self.half_rank,
            ray_flags,
            cones,
        })
        .expect("certificate serialization cannot fail")
    }
}

/// The certificate for the rank-one symplectic example on the projective
/// line: both rays carry the flag of exponent 1, certified by the standard
/// frame and the maps x -> x and x -> -x.
pub fn p1_symplectic_demo() -> (Fan, Certificate) {
    let fan = crate::fixtures::fan_p1();
    let frame = NormalFrame::standard(1);
    let flag = flag_of_one_ps(&frame, &[1]).expect("valid exponents");
    let cert = Certificate {
        kind: FormKind::Skew,
        half_rank: 1,
        ray_flags: vec![flag.clone(), flag],
        cones: vec![
            ConeCertificate { frame: frame.clone(), phi: vec![vec![1]] },
            ConeCertificate { frame, phi: vec![vec![-1]] },
        ],
    };
    (fan, cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp2() -> BilinearForm {
        BilinearForm::standard(FormKind::Skew, 1)
    }

    #[test]
    fn standard_forms_are_valid_and_degenerate_rejected() {
        for kind in [FormKind::Skew, FormKind::Symmetric] {
            let f = BilinearForm::standard(kind, 2);
            assert!(BilinearForm::new(kind, f.gram.clone()).is_ok());
        }
        let zero = vec![linalg::zero_vec(2); 2];
        assert!(matches!(
            BilinearForm::new(FormKind::Symmetric, zero),
            Err(Error::DegenerateForm)
        ));
    }

    #[test]
    fn perp_of_extremes_and_isotropic_line() {
        let form = sp2();
        assert_eq!(perp(&Subspace::zero(2), &form).unwrap(), Subspace::full(2));
        assert_eq!(perp(&Subspace::full(2), &form).unwrap(), Subspace::zero(2));
        let e1 = Subspace::span(&[vec![rat(1), rat(0)]], 2).unwrap();
        assert_eq!(perp(&e1, &form).unwrap(), e1);
    }

    #[test]
    fn perp_dimension_identity_and_involution() {
        let form = BilinearForm::standard(FormKind::Symmetric, 2);
        let w = Subspace::span(
            &[
                vec![rat(1), rat(2), rat(0), rat(-1)],
                vec![rat(0), rat(1), rat(1), rat(3)],
            ],
            4,
        )
        .unwrap();
        let p = perp(&w, &form).unwrap();
        assert_eq!(w.dim() + p.dim(), 4);
        assert_eq!(perp(&p, &form).unwrap(), w);
    }

    #[test]
    fn standard_and_rescaled_normal_bases() {
        let form = sp2();
        let mut frame = NormalFrame::standard(1);
        assert!(is_normal_basis(&frame, &form));
        frame.e[0] = linalg::vec_scale(&rat(3), &frame.e[0]);
        frame.f[0] = linalg::vec_scale(&crate::rat::rat_frac(1, 3), &frame.f[0]);
        assert!(is_normal_basis(&frame, &form));
        frame.f[0] = linalg::vec_scale(&rat(2), &frame.f[0]);
        assert!(!is_normal_basis(&frame, &form));
    }

    #[test]
    fn non_isotropic_first_step_rejected() {
        let form = BilinearForm::standard(FormKind::Symmetric, 2);
        // span(e1 + f1) is not isotropic for the hyperbolic form
        let bad = Subspace::span(&[vec![rat(1), rat(0), rat(1), rat(0)]], 4).unwrap();
        let chain = vec![bad, Subspace::full(4)];
        assert!(!is_isotropic_flag(&chain, &form));
    }

    #[test]
    fn one_ps_flag_rank_one() {
        let frame = NormalFrame::standard(1);
        let flag = flag_of_one_ps(&frame, &[1]).unwrap();
        assert_eq!(flag.labels, vec![rat(1), rat(-1)]);
        assert_eq!(flag.flag[0], Subspace::span(&[vec![rat(1), rat(0)]], 2).unwrap());
        assert!(flag.flag[1].is_full());
        assert!(flag.validate(&sp2()));
    }

    #[test]
    fn one_ps_flag_zero_exponents_is_single_step() {
        let frame = NormalFrame::standard(2);
        let flag = flag_of_one_ps(&frame, &[0, 0]).unwrap();
        assert_eq!(flag.labels, vec![rat(0)]);
        assert_eq!(flag.flag, vec![Subspace::full(4)]);
    }

    #[test]
    fn one_ps_flag_two_distinct_exponents_is_full_flag() {
        let frame = NormalFrame::standard(2);
        let flag = flag_of_one_ps(&frame, &[2, 1]).unwrap();
        assert_eq!(flag.labels, vec![rat(2), rat(1), rat(-1), rat(-2)]);
        let dims: Vec<usize> = flag.flag.iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![1, 2, 3, 4]);
        for kind in [FormKind::Skew, FormKind::Symmetric] {
            assert!(flag.validate(&BilinearForm::standard(kind, 2)));
        }
    }

    #[test]
    fn unsorted_or_negative_exponents_rejected() {
        let frame = NormalFrame::standard(2);
        assert!(flag_of_one_ps(&frame, &[1, 2]).is_err());
        assert!(flag_of_one_ps(&frame, &[1, -1]).is_err());
    }

    #[test]
    fn p1_demo_certificate_accepted_and_tamper_rejected() {
        let (fan, cert) = p1_symplectic_demo();
        assert!(verify_certificate(&fan, &cert).unwrap().is_ok());

        let mut bad = cert.clone();
        bad.ray_flags[1].labels = vec![rat(2), rat(-2)];
        // relabeling keeps the flag isotropic but breaks the certificate
        let w = verify_certificate(&fan, &bad).unwrap().unwrap_err();
        assert_eq!(w.ray, 1);
    }

    #[test]
    fn trivial_certificate_accepted() {
        let fan = crate::fixtures::fan_p1();
        let frame = NormalFrame::standard(2);
        let flag = flag_of_one_ps(&frame, &[0, 0]).unwrap();
        let cert = Certificate {
            kind: FormKind::Skew,
            half_rank: 2,
            ray_flags: vec![flag.clone(), flag],
            cones: vec![
                ConeCertificate { frame: frame.clone(), phi: vec![vec![0], vec![0]] },
                ConeCertificate { frame, phi: vec![vec![0], vec![0]] },
            ],
        };
        assert!(verify_certificate(&fan, &cert).unwrap().is_ok());
    }

    #[test]
    fn weyl_moves_leave_acceptance_invariant() {
        let (fan, mut cert) = p1_symplectic_demo();
        // swap e1 <-> f1 in cone 0 (with the sign the skew pairing needs)
        // and flip the exponent map accordingly
        let c = &mut cert.cones[0];
        let old_e = std::mem::replace(&mut c.frame.e, c.frame.f.clone());
        c.frame.f = vec![linalg::vec_scale(&rat(-1), &old_e[0])];
        c.phi[0][0] = -c.phi[0][0];
        assert!(verify_certificate(&fan, &cert).unwrap().is_ok());
    }

    #[test]
    fn certificate_json_roundtrip() {
        let (_, cert) = p1_symplectic_demo();
        let s = cert.to_json();
        assert_eq!(Certificate::from_json(&s).unwrap(), cert);
    }
}

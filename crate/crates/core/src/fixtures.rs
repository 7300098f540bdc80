//! Shared example fans and bundles used across tests, benches, and the CLI
//! `example` command.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::building::Frame;
use crate::error::Error;
use crate::fan::Fan;
use crate::linalg::{self, QVec, Subspace};
use crate::plmap::{ConePiece, PLMap, RayFiltration, RayFiltrationData};
use crate::rat::{rat, Rat};

/// The complete fan of the projective line: rays `1` and `-1`.
pub fn fan_p1() -> Fan {
    Fan::new(1, vec![vec![1], vec![-1]], vec![vec![0], vec![1]]).unwrap()
}

/// The complete fan of the projective plane.
pub fn fan_p2() -> Fan {
    fan_pn(2)
}

/// The complete fan of `P^1 x P^1`.
pub fn fan_p1xp1() -> Fan {
    Fan::new(
        2,
        vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]],
    )
    .unwrap()
}

/// The complete fan of projective `n`-space: rays `e_1, ..., e_n` and
/// `-(e_1 + ... + e_n)`; cone 0 spans all the `e_i`, cone `k >= 1` omits
/// ray `k - 1`.
pub fn fan_pn(n: usize) -> Fan {
    assert!(n >= 1);
    let mut rays: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| i64::from(j == i)).collect())
        .collect();
    rays.push(vec![-1; n]);
    let mut cones = vec![(0..n).collect::<Vec<_>>()];
    for k in 0..n {
        let mut c: Vec<usize> = (0..n).filter(|&j| j != k).collect();
        c.push(n);
        cones.push(c);
    }
    Fan::new(n, rays, cones).unwrap()
}

/// The tangent bundle of `P^n`: the fan, its Klyachko data, and the
/// piecewise linear map, with the frame on the cone of the `e_i` given by
/// the coordinate lines with coordinate weights, and on the cone omitting
/// `e_k` by shifting every weight by `-w_k`.
pub fn tangent_pn(n: usize) -> Result<(Fan, RayFiltrationData, PLMap), Error> {
    let fan = fan_pn(n);
    let e = |i: usize| -> QVec { (0..n).map(|j| rat(i64::from(j == i))).collect() };
    let last: QVec = vec![rat(-1); n];

    let mut pieces = Vec::with_capacity(n + 1);
    pieces.push(ConePiece {
        cone: 0,
        frame: Frame::new((0..n).map(e).collect())?,
        weights: (0..n).map(e).collect(),
    });
    for k in 0..n {
        let mut lines = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in (0..n).filter(|&j| j != k) {
            lines.push(e(j));
            weights.push(linalg::vec_sub(&e(j), &e(k)));
        }
        lines.push(last.clone());
        weights.push(linalg::vec_scale(&rat(-1), &e(k)));
        pieces.push(ConePiece { cone: k + 1, frame: Frame::new(lines)?, weights });
    }
    let phi = PLMap::new(fan.clone(), n, pieces)?;

    let mut filtrations = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let dir: QVec = if r < n { e(r) } else { last.clone() };
        let line = Subspace::span(&[dir], n)?;
        // in rank one the jump line is the whole space already
        let jumps = if line.is_full() {
            vec![(1, line)]
        } else {
            vec![(0, Subspace::full(n)), (1, line)]
        };
        filtrations.push(RayFiltration::new(jumps)?);
    }
    let data = RayFiltrationData::new(n, filtrations)?;
    Ok((fan, data, phi))
}

/// The line bundle of the divisor `sum a_rho D_rho`: rank one, trivial
/// frame, and on each maximal cone the covector pairing to `a_rho` on the
/// rays of the cone.
pub fn line_bundle(fan: &Fan, coeffs: &[i64]) -> Result<PLMap, Error> {
    let q: Vec<Rat> = coeffs.iter().map(|&a| rat(a)).collect();
    line_bundle_rational(fan, &q)
}

pub fn line_bundle_rational(fan: &Fan, coeffs: &[Rat]) -> Result<PLMap, Error> {
    if coeffs.len() != fan.rays().len() {
        return Err(Error::InvalidInput(format!(
            "{} divisor coefficients for {} rays",
            coeffs.len(),
            fan.rays().len()
        )));
    }
    let pieces = (0..fan.max_cones().len())
        .map(|c| {
            let u = cone_covector(fan, c, &|r| coeffs[r].clone())?;
            Ok(ConePiece { cone: c, frame: Frame::standard(1), weights: vec![u] })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    PLMap::new(fan.clone(), 1, pieces)
}

/// The covector on the span of a simplicial cone taking the prescribed
/// value on each ray generator (minimal-norm representative on
/// lower-dimensional cones).
fn cone_covector(fan: &Fan, cone: usize, value: &dyn Fn(usize) -> Rat) -> Result<QVec, Error> {
    let vmat: Vec<QVec> = fan
        .cone_rays(cone)
        .iter()
        .map(|&r| linalg::ivec_to_qvec(fan.ray(r)))
        .collect();
    let rhs: QVec = fan.cone_rays(cone).iter().map(|&r| value(r)).collect();
    let u = if vmat.len() == fan.rank() {
        linalg::solve(&vmat, &rhs)
    } else {
        let gram = linalg::mat_mul(&vmat, &linalg::transpose(&vmat));
        linalg::solve(&gram, &rhs).map(|y| linalg::mat_vec(&linalg::transpose(&vmat), &y))
    };
    u.ok_or_else(|| Error::InvalidFan(format!("cone {cone} has dependent ray generators")))
}

/// The trivial bundle of the given rank: standard frame, all weights zero.
pub fn trivial_bundle(fan: &Fan, rank: usize) -> Result<PLMap, Error> {
    let pieces = (0..fan.max_cones().len())
        .map(|c| ConePiece {
            cone: c,
            frame: Frame::standard(rank),
            weights: vec![linalg::zero_vec(fan.rank()); rank],
        })
        .collect();
    PLMap::new(fan.clone(), rank, pieces)
}

/// Rank-two data on a single simplicial cone in `Q^3` whose three rays carry
/// three pairwise distinct lines at level one. Any two lines span, so no
/// two-line frame can be adapted to all three filtrations; the solver must
/// produce a certified dimension witness.
pub fn three_lines_incompatible() -> (Fan, RayFiltrationData) {
    let fan = Fan::new(
        3,
        vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        vec![vec![0, 1, 2]],
    )
    .unwrap();
    let lines = [
        vec![rat(1), rat(0)],
        vec![rat(0), rat(1)],
        vec![rat(1), rat(1)],
    ];
    let filtrations = lines
        .iter()
        .map(|l| {
            RayFiltration::new(vec![
                (0, Subspace::full(2)),
                (1, Subspace::span(std::slice::from_ref(l), 2).unwrap()),
            ])
            .unwrap()
        })
        .collect();
    let data = RayFiltrationData::new(2, filtrations).unwrap();
    (fan, data)
}

/// A random split bundle: one global random frame twisted line-by-line by
/// random divisors. Split data is automatically compatible, so this is a
/// valid piecewise linear map for any fan; useful for fuzzing the solver
/// round trip.
pub fn random_split_bundle(fan: &Fan, rank: usize, rng: &mut ChaCha8Rng) -> Result<PLMap, Error> {
    let frame = loop {
        let lines: Vec<QVec> = (0..rank)
            .map(|_| (0..rank).map(|_| rat(rng.gen_range(-3..=3i64))).collect())
            .collect();
        if let Ok(f) = Frame::new(lines) {
            break f;
        }
    };
    let divisors: Vec<Vec<i64>> = (0..rank)
        .map(|_| (0..fan.rays().len()).map(|_| rng.gen_range(-5..=5i64)).collect())
        .collect();
    let pieces = (0..fan.max_cones().len())
        .map(|c| {
            let weights = divisors
                .iter()
                .map(|d| cone_covector(fan, c, &|r| rat(d[r])))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ConePiece { cone: c, frame: frame.clone(), weights })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    PLMap::new(fan.clone(), rank, pieces)
}

//! Piecewise linear maps to the building of `GL(E)` as per-cone
//! (frame, weight multiset) data, Klyachko ray filtrations, and the
//! compatibility solver.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::building::{Frame, Prevaluation};
use crate::error::{Error, Incompatibility, IncompatibilityKind};
use crate::fan::Fan;
use crate::linalg::{self, QVec, Subspace};
use crate::rat::{as_i64, fmt_rat, parse_rat, rat, Rat};

/// Default number of randomized retries of the greedy frame construction.
pub const DEFAULT_RETRIES: usize = 8;

/// One ray's Klyachko filtration, stored as its finite jump list:
/// `(level, subspace)` with strictly increasing levels and strictly
/// decreasing subspaces, the lowest jump carrying all of `E`. Below the
/// lowest jump the filtration is `E`, above the highest it is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayFiltration {
    jumps: Vec<(i64, Subspace)>,
}

impl RayFiltration {
    pub fn new(mut jumps: Vec<(i64, Subspace)>) -> Result<Self, Error> {
        if jumps.is_empty() {
            return Err(Error::InvalidFiltration("empty jump list".into()));
        }
        jumps.sort_by_key(|(l, _)| *l);
        for w in jumps.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidFiltration("repeated jump level".into()));
            }
            if !(w[0].1.contains(&w[1].1) && w[0].1.dim() > w[1].1.dim()) {
                return Err(Error::InvalidFiltration(
                    "subspaces must strictly decrease along increasing levels".into(),
                ));
            }
        }
        if !jumps[0].1.is_full() {
            return Err(Error::InvalidFiltration(
                "the lowest jump must carry the whole space".into(),
            ));
        }
        Ok(RayFiltration { jumps })
    }

    pub fn ambient_dim(&self) -> usize {
        self.jumps[0].1.ambient_dim()
    }

    pub fn jumps(&self) -> &[(i64, Subspace)] {
        &self.jumps
    }

    pub fn jump_levels(&self) -> Vec<i64> {
        self.jumps.iter().map(|(l, _)| *l).collect()
    }

    pub fn max_level(&self) -> i64 {
        self.jumps.last().unwrap().0
    }

    /// The filtration subspace `E^rho_i` at an arbitrary integer level.
    pub fn at(&self, i: i64) -> Subspace {
        let ambient = self.ambient_dim();
        match self.jumps.iter().find(|(l, _)| *l >= i) {
            Some((_, s)) => s.clone(),
            None => Subspace::zero(ambient),
        }
    }

    pub fn to_prevaluation(&self) -> Prevaluation {
        let jumps_desc: Vec<(i64, Subspace)> =
            self.jumps.iter().rev().cloned().collect();
        Prevaluation::from_filtration(&jumps_desc).expect("jump list is a valid flag")
    }

    pub fn from_prevaluation(v: &Prevaluation) -> Result<Self, Error> {
        let mut jumps = Vec::with_capacity(v.labels().len());
        for (c, f) in v.labels().iter().zip(v.flag()) {
            let l = as_i64(c).ok_or_else(|| {
                Error::InvalidFiltration(format!("non-integer label {}", fmt_rat(c)))
            })?;
            jumps.push((l, f.clone()));
        }
        RayFiltration::new(jumps)
    }
}

/// Klyachko input data: one filtration per ray of the fan, plus the rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayFiltrationData {
    pub rank: usize,
    pub filtrations: Vec<RayFiltration>,
}

#[derive(Serialize, Deserialize)]
struct BundleDto {
    rank: usize,
    filtrations: BTreeMap<String, Vec<(i64, Vec<Vec<String>>)>>,
}

impl RayFiltrationData {
    pub fn new(rank: usize, filtrations: Vec<RayFiltration>) -> Result<Self, Error> {
        for (i, f) in filtrations.iter().enumerate() {
            if f.ambient_dim() != rank {
                return Err(Error::InvalidFiltration(format!(
                    "filtration of ray {i} lives in dimension {}, expected {rank}",
                    f.ambient_dim()
                )));
            }
        }
        Ok(RayFiltrationData { rank, filtrations })
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let dto: BundleDto =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("bundle JSON: {e}")))?;
        let nrays = dto.filtrations.len();
        let mut filtrations = vec![None; nrays];
        for (key, jumps) in dto.filtrations {
            let idx: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("bad ray index {key:?}")))?;
            if idx >= nrays {
                return Err(Error::Parse(format!(
                    "ray index {idx} out of range (0..{nrays})"
                )));
            }
            let mut parsed = Vec::with_capacity(jumps.len());
            for (level, rows) in jumps {
                let vectors = rows
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rat(s)).collect::<Result<QVec, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                parsed.push((level, Subspace::span(&vectors, dto.rank)?));
            }
            filtrations[idx] = Some(RayFiltration::new(parsed)?);
        }
        let filtrations = filtrations
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| Error::Parse(format!("missing filtration for ray {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        RayFiltrationData::new(dto.rank, filtrations)
    }

    pub fn to_json(&self) -> String {
        let filtrations: BTreeMap<String, Vec<(i64, Vec<Vec<String>>)>> = self
            .filtrations
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let jumps = f
                    .jumps()
                    .iter()
                    .map(|(l, s)| {
                        let rows = s
                            .basis()
                            .iter()
                            .map(|row| row.iter().map(fmt_rat).collect())
                            .collect();
                        (*l, rows)
                    })
                    .collect();
                (i.to_string(), jumps)
            })
            .collect();
        serde_json::to_string_pretty(&BundleDto { rank: self.rank, filtrations })
            .expect("bundle serialization cannot fail")
    }
}

/// The linear data of a piecewise linear map on one maximal cone: a frame of
/// `E` and one weight covector per frame line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConePiece {
    pub cone: usize,
    pub frame: Frame,
    pub weights: Vec<QVec>,
}

/// A piecewise linear map `|Sigma| -> B(GL(E))`, one [`ConePiece`] per
/// maximal cone. `integral` records that all cone-ray pairings are integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLMap {
    fan: Fan,
    rank: usize,
    pieces: Vec<ConePiece>,
    integral: bool,
}

/// Outcome of the lattice integrality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Integrality {
    /// All weights lie in the character lattices; exact on smooth cones.
    Integral,
    /// Ray pairings are integral but some simplicial cone is not smooth, so
    /// only the necessary condition was checked.
    UnverifiedLattice { cones: Vec<usize> },
    NotIntegral { cone: usize, line: usize, ray: usize },
}

impl PLMap {
    pub fn new(fan: Fan, rank: usize, pieces: Vec<ConePiece>) -> Result<Self, Error> {
        if pieces.len() != fan.max_cones().len() {
            return Err(Error::MalformedPlMap(format!(
                "{} pieces for {} maximal cones",
                pieces.len(),
                fan.max_cones().len()
            )));
        }
        for (i, p) in pieces.iter().enumerate() {
            if p.cone != i {
                return Err(Error::MalformedPlMap("pieces must be indexed by cone".into()));
            }
            if p.frame.rank() != rank {
                return Err(Error::MalformedPlMap(format!(
                    "piece {i}: frame rank {} != {rank}",
                    p.frame.rank()
                )));
            }
            if p.weights.len() != rank {
                return Err(Error::MalformedPlMap(format!(
                    "piece {i}: {} weights for rank {rank}",
                    p.weights.len()
                )));
            }
            for u in &p.weights {
                if u.len() != fan.rank() {
                    return Err(Error::MalformedPlMap(format!(
                        "piece {i}: weight covector of length {} in M_Q = Q^{}",
                        u.len(),
                        fan.rank()
                    )));
                }
            }
        }
        let integral = pieces.iter().enumerate().all(|(c, p)| {
            fan.cone_rays(c).iter().all(|&r| {
                p.weights
                    .iter()
                    .all(|u| linalg::pair(fan.ray(r), u).denom().is_one())
            })
        });
        Ok(PLMap { fan, rank, pieces, integral })
    }

    pub fn fan(&self) -> &Fan {
        &self.fan
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn pieces(&self) -> &[ConePiece] {
        &self.pieces
    }

    pub fn piece(&self, cone: usize) -> &ConePiece {
        &self.pieces[cone]
    }

    pub fn integral(&self) -> bool {
        self.integral
    }

    /// The prevaluation at `x` computed through a specific maximal cone
    /// containing `x`.
    pub fn evaluate_in_cone(&self, cone: usize, x: &[Rat]) -> Result<Prevaluation, Error> {
        let piece = &self.pieces[cone];
        let values: Vec<Rat> = piece.weights.iter().map(|u| linalg::dot(x, u)).collect();
        let mut distinct: Vec<Rat> = values.clone();
        distinct.sort();
        distinct.dedup();
        distinct.reverse();
        let mut labels = Vec::new();
        let mut flag = Vec::new();
        for a in distinct {
            let lines: Vec<QVec> = piece
                .frame
                .lines()
                .iter()
                .zip(&values)
                .filter(|(_, t)| *t >= &a)
                .map(|(l, _)| l.clone())
                .collect();
            labels.push(a);
            flag.push(Subspace::span(&lines, self.rank)?);
        }
        Prevaluation::new(labels, flag)
    }

    /// The prevaluation at any point of the support.
    pub fn evaluate(&self, x: &[Rat]) -> Result<Prevaluation, Error> {
        let cone = self.fan.find_cone(x).ok_or(Error::OutsideSupport)?;
        self.evaluate_in_cone(cone, x)
    }

    /// Klyachko filtration of one ray computed through one incident cone.
    fn ray_filtration_via(&self, ray: usize, cone: usize) -> Result<RayFiltration, Error> {
        let piece = &self.pieces[cone];
        let v = self.fan.ray(ray);
        let mut pairings = Vec::with_capacity(self.rank);
        for (i, u) in piece.weights.iter().enumerate() {
            let p = linalg::pair(v, u);
            let l = as_i64(&p).ok_or_else(|| {
                Error::NotIntegral(format!(
                    "pairing of ray {ray} with weight {i} of cone {cone} is {}",
                    fmt_rat(&p)
                ))
            })?;
            pairings.push(l);
        }
        let mut levels: Vec<i64> = pairings.clone();
        levels.sort_unstable();
        levels.dedup();
        let mut jumps = Vec::with_capacity(levels.len());
        for &l in &levels {
            let lines: Vec<QVec> = piece
                .frame
                .lines()
                .iter()
                .zip(&pairings)
                .filter(|(_, p)| **p >= l)
                .map(|(line, _)| line.clone())
                .collect();
            jumps.push((l, Subspace::span(&lines, self.rank)?));
        }
        RayFiltration::new(jumps)
    }

    /// The Klyachko data of an integral piecewise linear map. Fails if the
    /// incident cones of some ray disagree (malformed hand-authored map).
    pub fn ray_filtrations(&self) -> Result<RayFiltrationData, Error> {
        let mut filtrations = Vec::with_capacity(self.fan.rays().len());
        for ray in 0..self.fan.rays().len() {
            let cones = self.fan.cones_at_ray(ray);
            if cones.is_empty() {
                return Err(Error::MalformedPlMap(format!(
                    "ray {ray} lies in no maximal cone"
                )));
            }
            let first = self.ray_filtration_via(ray, cones[0])?;
            for &c in &cones[1..] {
                let other = self.ray_filtration_via(ray, c)?;
                if other != first {
                    return Err(Error::MalformedPlMap(format!(
                        "cones {} and {c} induce different filtrations on ray {ray}",
                        cones[0]
                    )));
                }
            }
            filtrations.push(first);
        }
        RayFiltrationData::new(self.rank, filtrations)
    }

    /// Lattice integrality verdict. On smooth cones the ray-pairing test is
    /// exact; non-smooth simplicial cones only get the necessary condition
    /// and are reported as unverified.
    pub fn integrality(&self) -> Integrality {
        let mut unverified = Vec::new();
        for (c, piece) in self.pieces.iter().enumerate() {
            for &r in self.fan.cone_rays(c) {
                for (i, u) in piece.weights.iter().enumerate() {
                    if !linalg::pair(self.fan.ray(r), u).denom().is_one() {
                        return Integrality::NotIntegral { cone: c, line: i, ray: r };
                    }
                }
            }
            if !cone_is_smooth(&self.fan, c) {
                unverified.push(c);
            }
        }
        if unverified.is_empty() {
            Integrality::Integral
        } else {
            Integrality::UnverifiedLattice { cones: unverified }
        }
    }

    /// Tensor product: Kronecker frames and pointwise weight sums, in the
    /// row-major `(i, j) -> i * s + j` line order.
    pub fn tensor(&self, other: &Self) -> Result<Self, Error> {
        if self.fan != other.fan {
            return Err(Error::InvalidInput("tensor of maps on different fans".into()));
        }
        let rank = self.rank * other.rank;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for (p, q) in self.pieces.iter().zip(&other.pieces) {
            let frame = p.frame.tensor(&q.frame);
            let mut weights = Vec::with_capacity(rank);
            for u in &p.weights {
                for u2 in &q.weights {
                    weights.push(linalg::vec_add(u, u2));
                }
            }
            pieces.push(ConePiece { cone: p.cone, frame, weights });
        }
        PLMap::new(self.fan.clone(), rank, pieces)
    }

    /// Diagnostic for hand-authored maps: randomized agreement check of the
    /// induced prevaluations on shared faces of maximal cones.
    pub fn check_face_consistency(&self, samples: usize, seed: u64) -> Result<(), Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
                for _ in 0..samples {
                    let x = random_cone_point(&self.fan, &shared, &mut rng);
                    if self.evaluate_in_cone(i, &x)? != self.evaluate_in_cone(j, &x)? {
                        return Err(Error::MalformedPlMap(format!(
                            "cones {i} and {j} disagree on their shared face"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let pieces: Vec<serde_json::Value> = self
            .pieces
            .iter()
            .map(|p| {
                json!({
                    "cone": p.cone,
                    "frame": p.frame.lines().iter()
                        .map(|l| l.iter().map(fmt_rat).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "weights": p.weights.iter()
                        .map(|u| u.iter().map(fmt_rat).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "rank": self.rank, "integral": self.integral, "pieces": pieces })
    }
}

/// A nonnegative random rational combination of the given rays.
fn random_cone_point(fan: &Fan, rays: &[usize], rng: &mut ChaCha8Rng) -> QVec {
    let mut x = linalg::zero_vec(fan.rank());
    for &r in rays {
        let c = Rat::new(BigInt::from(rng.gen_range(0..=12i64)), BigInt::from(rng.gen_range(1..=4i64)));
        for (k, &v) in fan.ray(r).iter().enumerate() {
            x[k] = &x[k] + &c * rat(v);
        }
    }
    x
}

/// Smoothness of a simplicial cone: its ray generators extend to a basis of
/// the lattice, i.e. the Smith normal form of the generator matrix has all
/// elementary divisors equal to one.
pub fn cone_is_smooth(fan: &Fan, cone: usize) -> bool {
    let rows: Vec<Vec<BigInt>> = fan
        .cone_rays(cone)
        .iter()
        .map(|&r| fan.ray(r).iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    smith_divisors(rows, fan.rank())
        .iter()
        .all(|d| d.is_one())
}

/// Elementary divisors of an integer matrix (nonzero ones only).
fn smith_divisors(mut m: Vec<Vec<BigInt>>, ncols: usize) -> Vec<BigInt> {
    let mut divisors = Vec::new();
    let mut top_row = 0;
    let mut top_col = 0;
    let nrows = m.len();
    while top_row < nrows && top_col < ncols {
        // find a nonzero pivot
        let Some((pi, pj)) = (top_row..nrows)
            .flat_map(|i| (top_col..ncols).map(move |j| (i, j)))
            .filter(|&(i, j)| !m[i][j].is_zero())
            .min_by_key(|&(i, j)| m[i][j].abs())
        else {
            break;
        };
        m.swap(top_row, pi);
        for row in m.iter_mut() {
            row.swap(top_col, pj);
        }
        loop {
            let mut clean = true;
            for i in top_row + 1..nrows {
                if !m[i][top_col].is_zero() {
                    let q = &m[i][top_col] / &m[top_row][top_col];
                    for j in top_col..ncols {
                        let sub = &q * &m[top_row][j];
                        m[i][j] = &m[i][j] - sub;
                    }
                    if !m[i][top_col].is_zero() {
                        m.swap(top_row, i);
                        clean = false;
                    }
                }
            }
            for j in top_col + 1..ncols {
                if !m[top_row][j].is_zero() {
                    let q = &m[top_row][j] / &m[top_row][top_col];
                    for i in top_row..nrows {
                        let sub = &q * &m[i][top_col];
                        m[i][j] = &m[i][j] - sub;
                    }
                    if !m[top_row][j].is_zero() {
                        for row in m.iter_mut() {
                            row.swap(top_col, j);
                        }
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        divisors.push(m[top_row][top_col].abs());
        top_row += 1;
        top_col += 1;
    }
    divisors
}

/// Klyachko compatibility solver with default retry budget and seed.
pub fn compatibility_solve(fan: &Fan, data: &RayFiltrationData) -> Result<PLMap, Error> {
    compatibility_solve_with(fan, data, DEFAULT_RETRIES, 0)
}

/// Sequential lane of the solver, independent of the `parallel` feature.
pub fn compatibility_solve_seq(fan: &Fan, data: &RayFiltrationData) -> Result<PLMap, Error> {
    solve_impl(fan, data, DEFAULT_RETRIES, 0, false)
}

pub fn compatibility_solve_with(
    fan: &Fan,
    data: &RayFiltrationData,
    retries: usize,
    seed: u64,
) -> Result<PLMap, Error> {
    solve_impl(fan, data, retries, seed, cfg!(feature = "parallel"))
}

fn solve_impl(
    fan: &Fan,
    data: &RayFiltrationData,
    retries: usize,
    seed: u64,
    parallel: bool,
) -> Result<PLMap, Error> {
    let diag = fan.validate();
    if !diag.is_valid() {
        return Err(Error::InvalidFan(diag.problems.join("; ")));
    }
    if data.filtrations.len() != fan.rays().len() {
        return Err(Error::InvalidFiltration(format!(
            "{} filtrations for {} rays",
            data.filtrations.len(),
            fan.rays().len()
        )));
    }
    let cones: Vec<usize> = (0..fan.max_cones().len()).collect();
    let solve_one = |&c: &usize| solve_cone(fan, data, c, retries, seed);
    let results: Vec<Result<ConePiece, Error>> = if parallel {
        #[cfg(feature = "parallel")]
        {
            cones.par_iter().map(solve_one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            cones.iter().map(solve_one).collect()
        }
    } else {
        cones.iter().map(solve_one).collect()
    };
    let pieces = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    PLMap::new(fan.clone(), data.rank, pieces)
}

/// Per-cone solver: inclusion-exclusion multiplicities, dimension
/// consistency, greedy frame construction, weight solving, and mandatory
/// adaptedness verification with randomized retry.
fn solve_cone(
    fan: &Fan,
    data: &RayFiltrationData,
    cone: usize,
    retries: usize,
    seed: u64,
) -> Result<ConePiece, Error> {
    let r = data.rank;
    let ray_ids = fan.cone_rays(cone);
    let m = ray_ids.len();
    let filts: Vec<&RayFiltration> = ray_ids.iter().map(|&i| &data.filtrations[i]).collect();

    let mut memo: BTreeMap<Vec<i64>, Subspace> = BTreeMap::new();
    let mut meet = |tuple: &[i64]| -> Subspace {
        if let Some(s) = memo.get(tuple) {
            return s.clone();
        }
        let mut s = Subspace::full(r);
        for (j, f) in filts.iter().enumerate() {
            s = s.intersect(&f.at(tuple[j])).expect("same ambient");
            if s.dim() == 0 {
                break;
            }
        }
        memo.insert(tuple.to_vec(), s.clone());
        s
    };

    // candidate tuples: the grid of per-ray jump levels
    let level_sets: Vec<Vec<i64>> = filts.iter().map(|f| f.jump_levels()).collect();
    let mut grid: Vec<Vec<i64>> = vec![Vec::new()];
    for set in &level_sets {
        grid = grid
            .into_iter()
            .flat_map(|t| {
                set.iter().map(move |&l| {
                    let mut t2 = t.clone();
                    t2.push(l);
                    t2
                })
            })
            .collect();
    }

    let incompatible = |tuple: Vec<i64>, detail: String| {
        Error::Incompatible(Box::new(Incompatibility {
            cone,
            kind: IncompatibilityKind::DimensionWitness { tuple, detail },
        }))
    };

    // inclusion-exclusion multiplicity of each tuple
    let mut mult: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
    for a in &grid {
        let mut total: i64 = 0;
        for mask in 0u32..(1 << m) {
            let bumped: Vec<i64> = a
                .iter()
                .enumerate()
                .map(|(j, &l)| l + i64::from(mask >> j & 1))
                .collect();
            let d = meet(&bumped).dim() as i64;
            if mask.count_ones() % 2 == 0 {
                total += d;
            } else {
                total -= d;
            }
        }
        if total < 0 {
            return Err(incompatible(
                a.clone(),
                format!("multiplicity {total} is negative"),
            ));
        }
        mult.insert(a.clone(), total);
    }
    let total: i64 = mult.values().sum();
    if total != r as i64 {
        return Err(incompatible(
            vec![],
            format!("multiplicities sum to {total}, expected rank {r}"),
        ));
    }
    // dimension consistency: dim of each intersection equals the number of
    // frame lines that must live at or above the tuple
    for a in &grid {
        let expected: i64 = mult
            .iter()
            .filter(|(b, _)| b.iter().zip(a.iter()).all(|(x, y)| x >= y))
            .map(|(_, &mb)| mb)
            .sum();
        let actual = meet(a).dim() as i64;
        if expected != actual {
            return Err(incompatible(
                a.clone(),
                format!("intersection has dimension {actual} but multiplicities give {expected}"),
            ));
        }
    }

    // greedy construction in decreasing total order, with randomized retries
    let mut order: Vec<&Vec<i64>> = mult.iter().filter(|(_, &mm)| mm > 0).map(|(a, _)| a).collect();
    order.sort_by(|a, b| {
        let (sa, sb): (i64, i64) = (a.iter().sum(), b.iter().sum());
        sb.cmp(&sa).then_with(|| b.cmp(a))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (cone as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    for attempt in 0..=retries {
        let randomize = attempt > 0;
        match try_build_frame(fan, &filts, ray_ids, &order, &mult, &mut meet, r, randomize, &mut rng)
        {
            Some(piece) => {
                return Ok(ConePiece { cone, frame: piece.0, weights: piece.1 });
            }
            None => continue,
        }
    }
    Err(Error::Incompatible(Box::new(Incompatibility {
        cone,
        kind: IncompatibilityKind::SearchExhausted { retries },
    })))
}

#[allow(clippy::too_many_arguments)]
fn try_build_frame(
    fan: &Fan,
    filts: &[&RayFiltration],
    ray_ids: &[usize],
    order: &[&Vec<i64>],
    mult: &BTreeMap<Vec<i64>, i64>,
    meet: &mut impl FnMut(&[i64]) -> Subspace,
    r: usize,
    randomize: bool,
    rng: &mut ChaCha8Rng,
) -> Option<(Frame, Vec<QVec>)> {
    let m = filts.len();
    let mut chosen: Vec<QVec> = Vec::with_capacity(r);
    let mut chosen_tuples: Vec<Vec<i64>> = Vec::with_capacity(r);
    for a in order {
        let count = mult[*a] as usize;
        let inter = meet(a);
        // deeper pieces: bump any single coordinate by one
        let mut deeper = Subspace::zero(r);
        for j in 0..m {
            let mut b = (*a).clone();
            b[j] += 1;
            deeper = deeper.sum(&meet(&b)).ok()?;
        }
        let occupied = Subspace::span(&chosen, r).ok()?.sum(&deeper).ok()?;
        let low = occupied.intersect(&inter).ok()?;
        let mut cands = low.complement_basis_in(&inter).ok()?;
        if cands.len() < count {
            return None;
        }
        if randomize {
            // random triangular mix of candidates plus noise from the
            // occupied part of the intersection; stays independent mod
            // everything already placed
            let ncands = cands.len();
            for k in 0..ncands {
                let mut v = cands[k].clone();
                for l in 0..ncands {
                    if l != k && rng.gen_bool(0.5) {
                        let c = rat(rng.gen_range(-2..=2i64));
                        v = linalg::vec_add(&v, &linalg::vec_scale(&c, &cands[l].clone()));
                    }
                }
                for lb in low.basis() {
                    if rng.gen_bool(0.5) {
                        let c = rat(rng.gen_range(-2..=2i64));
                        v = linalg::vec_add(&v, &linalg::vec_scale(&c, lb));
                    }
                }
                cands[k] = v;
            }
        }
        for v in cands.into_iter().take(count) {
            chosen.push(v);
            chosen_tuples.push((*a).clone());
        }
    }
    if chosen.len() != r {
        return None;
    }
    let frame = Frame::new(chosen).ok()?;

    // weights: on a simplicial cone the pairings with the ray generators
    // determine the covector; lower-dimensional cones get the representative
    // vanishing on the orthogonal complement of the ray span
    let vmat: Vec<QVec> = ray_ids
        .iter()
        .map(|&rid| linalg::ivec_to_qvec(fan.ray(rid)))
        .collect();
    let mut weights = Vec::with_capacity(r);
    for a in &chosen_tuples {
        let rhs: QVec = a.iter().map(|&l| rat(l)).collect();
        let u = if m == fan.rank() {
            linalg::solve(&vmat, &rhs)?
        } else {
            let gram = linalg::mat_mul(&vmat, &linalg::transpose(&vmat));
            let y = linalg::solve(&gram, &rhs)?;
            linalg::mat_vec(&linalg::transpose(&vmat), &y)
        };
        weights.push(u);
    }

    // mandatory verification: the frame with these weights must reproduce
    // every incident ray filtration exactly
    for (j, f) in filts.iter().enumerate() {
        let v = fan.ray(ray_ids[j]);
        let pairings: Vec<i64> = weights
            .iter()
            .map(|u| as_i64(&linalg::pair(v, u)))
            .collect::<Option<Vec<_>>>()?;
        let mut levels: Vec<i64> = f.jump_levels();
        levels.extend(pairings.iter().copied());
        levels.push(f.max_level() + 1);
        levels.sort_unstable();
        levels.dedup();
        for &l in &levels {
            let span_lines: Vec<QVec> = frame
                .lines()
                .iter()
                .zip(&pairings)
                .filter(|(_, p)| **p >= l)
                .map(|(line, _)| line.clone())
                .collect();
            let s = Subspace::span(&span_lines, r).ok()?;
            if s != f.at(l) {
                return None;
            }
        }
    }
    Some((frame, weights))
}

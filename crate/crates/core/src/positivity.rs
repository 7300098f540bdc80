//! Wall splitting types and the nef / ample / globally-generated verdicts.
//!
//! Restricting a piecewise linear map to a wall of a complete fan splits it
//! into rank-one pieces; the multiset of their degrees decides nefness
//! (all degrees nonnegative) and ampleness (all positive). Global generation
//! is the fanwise convexity condition checked on ray generators.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::Error;
use crate::fan::Wall;
use crate::linalg::{self, QVec, Subspace};
use crate::plmap::PLMap;
use crate::rat::{rat, Rat};

/// Degrees of the rank-one pieces of a piecewise linear map restricted to
/// one wall, sorted in decreasing order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallSplitting {
    pub wall: usize,
    pub degrees: Vec<Rat>,
}

/// A wall whose splitting has a degree violating the requested positivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallWitness {
    pub wall: usize,
    pub degree: Rat,
}

/// A (cone, frame line, ray) triple violating the generation inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationWitness {
    pub cone: usize,
    pub line: usize,
    pub ray: usize,
}

/// The splitting of `phi` along one wall.
///
/// Frame lines on both sides are grouped into blocks by the restriction of
/// their weights to the span of the wall; within a block the transverse
/// components relative to a shared base covector give two filtrations of the
/// block's graded piece, and the degrees are read off their joint
/// multiplicities.
pub fn wall_splitting(phi: &PLMap, wall: &Wall, wall_id: usize) -> Result<WallSplitting, Error> {
    let fan = phi.fan();
    let r = phi.rank();
    let w: QVec = linalg::ivec_to_qvec(&wall.normal);
    let tau_rays: Vec<&[i64]> = wall.tau_rays.iter().map(|&t| fan.ray(t)).collect();
    let p = phi.piece(wall.sigma);
    let p2 = phi.piece(wall.sigma_prime);

    // block key: pairings of the weight with the wall's ray generators,
    // i.e. the restriction of the weight to the span of the wall
    let key = |u: &QVec| -> Vec<Rat> { tau_rays.iter().map(|v| linalg::pair(v, u)).collect() };
    let mut blocks: BTreeMap<Vec<String>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    let skey = |k: &[Rat]| -> Vec<String> { k.iter().map(crate::rat::fmt_rat).collect() };
    for (i, u) in p.weights.iter().enumerate() {
        blocks.entry(skey(&key(u))).or_default().0.push(i);
    }
    for (j, u) in p2.weights.iter().enumerate() {
        blocks.entry(skey(&key(u))).or_default().1.push(j);
    }

    let mut degrees: Vec<Rat> = Vec::with_capacity(r);
    for (k, (side, side2)) in &blocks {
        if side.len() != side2.len() {
            return Err(Error::MalformedPlMap(format!(
                "wall {wall_id}: block {k:?} has {} lines on one side and {} on the other",
                side.len(),
                side2.len()
            )));
        }
        // transverse components relative to the base covector of the block:
        // the difference of two weights in one block is a multiple of the
        // wall normal, since it vanishes on the wall's hyperplane
        let base = &p.weights[side[0]];
        let comp = |u: &QVec| -> Result<Rat, Error> {
            let d = linalg::vec_sub(u, base);
            let kpos = w.iter().position(|c| !c.is_zero()).expect("normal is nonzero");
            let s = &d[kpos] / &w[kpos];
            if linalg::vec_sub(&d, &linalg::vec_scale(&s, &w)).iter().any(|c| !c.is_zero()) {
                return Err(Error::MalformedPlMap(format!(
                    "wall {wall_id}: weights in block {k:?} do not differ by a multiple of the normal"
                )));
            }
            Ok(s)
        };
        let s: Vec<Rat> = side.iter().map(|&i| comp(&p.weights[i])).collect::<Result<_, _>>()?;
        // the normal is positive on sigma, so the sigma'-side components
        // enter with the opposite sign
        let s2: Vec<Rat> = side2
            .iter()
            .map(|&j| comp(&p2.weights[j]).map(|x| -x))
            .collect::<Result<_, _>>()?;

        // graded piece of the block: the span of its sigma-side lines, with
        // the sigma'-side lines projected in along the other sigma-blocks
        let block_lines: Vec<QVec> = side.iter().map(|&i| p.frame.line(i).to_vec()).collect();
        let project = block_projector(p.frame.lines(), side, r);
        let proj_lines: Vec<QVec> = side2
            .iter()
            .map(|&j| project(p2.frame.line(j)))
            .collect();

        let filtration = |vals: &[Rat], lines: &[QVec], a: &Rat| -> Result<Subspace, Error> {
            let picked: Vec<QVec> = vals
                .iter()
                .zip(lines)
                .filter(|(v, _)| *v >= a)
                .map(|(_, l)| l.clone())
                .collect();
            Subspace::span(&picked, r)
        };
        let mut fs: Vec<Rat> = s.clone();
        fs.sort();
        fs.dedup();
        let mut gs: Vec<Rat> = s2.clone();
        gs.sort();
        gs.dedup();
        let bump = |set: &[Rat], a: &Rat| -> Rat {
            // next threshold strictly above a, or past the top
            set.iter()
                .find(|b| *b > a)
                .cloned()
                .unwrap_or_else(|| set.last().unwrap() + rat(1))
        };
        let mut block_total = 0usize;
        for f in &fs {
            for g in &gs {
                let ff = filtration(&s, &block_lines, f)?;
                let fb = filtration(&s, &block_lines, &bump(&fs, f))?;
                let gg = filtration(&s2, &proj_lines, g)?;
                let gb = filtration(&s2, &proj_lines, &bump(&gs, g))?;
                let m = ff.intersect(&gg)?.dim() as i64 - fb.intersect(&gg)?.dim() as i64
                    - ff.intersect(&gb)?.dim() as i64
                    + fb.intersect(&gb)?.dim() as i64;
                if m < 0 {
                    return Err(Error::MalformedPlMap(format!(
                        "wall {wall_id}: negative joint multiplicity in block {k:?}"
                    )));
                }
                for _ in 0..m {
                    degrees.push(f + g);
                    block_total += 1;
                }
            }
        }
        if block_total != side.len() {
            return Err(Error::MalformedPlMap(format!(
                "wall {wall_id}: block {k:?} of size {} split into {} degrees",
                side.len(),
                block_total
            )));
        }
    }
    degrees.sort();
    degrees.reverse();
    Ok(WallSplitting { wall: wall_id, degrees })
}

/// Projection of `E` onto the span of the selected frame lines along the
/// remaining ones, expressed through coordinates in the (full) frame basis.
fn block_projector<'a>(
    lines: &'a [QVec],
    keep: &'a [usize],
    r: usize,
) -> impl Fn(&[Rat]) -> QVec + 'a {
    let basis: Vec<QVec> = linalg::transpose(&lines.to_vec());
    move |x: &[Rat]| -> QVec {
        let coords = linalg::solve(&basis, x).expect("frame lines form a basis");
        let mut out = linalg::zero_vec(r);
        for &i in keep {
            out = linalg::vec_add(&out, &linalg::vec_scale(&coords[i], &lines[i]));
        }
        out
    }
}

/// Splittings along every wall of the (complete) fan, in wall order.
pub fn wall_splittings(phi: &PLMap) -> Result<Vec<WallSplitting>, Error> {
    phi.fan()
        .walls()?
        .iter()
        .enumerate()
        .map(|(i, w)| wall_splitting(phi, w, i))
        .collect()
}

/// Nefness: every wall degree is nonnegative.
pub fn is_nef(phi: &PLMap) -> Result<Result<(), WallWitness>, Error> {
    positivity_witness(phi, |d| d >= &rat(0))
}

/// Ampleness: every wall degree is strictly positive.
pub fn is_ample(phi: &PLMap) -> Result<Result<(), WallWitness>, Error> {
    positivity_witness(phi, |d| d > &rat(0))
}

fn positivity_witness(
    phi: &PLMap,
    ok: impl Fn(&Rat) -> bool,
) -> Result<Result<(), WallWitness>, Error> {
    for s in wall_splittings(phi)? {
        if let Some(d) = s.degrees.iter().find(|d| !ok(d)) {
            return Ok(Err(WallWitness { wall: s.wall, degree: d.clone() }));
        }
    }
    Ok(Ok(()))
}

/// Global generation (fanwise convexity): for every maximal cone, frame
/// line, and ray of the fan, the cone's linear extension stays below the
/// map's value on that line. With evaluation as a minimum of pairings this
/// is exactly concavity of each line's piecewise linear function.
pub fn is_globally_generated(phi: &PLMap) -> Result<Result<(), GenerationWitness>, Error> {
    let fan = phi.fan();
    // completeness is assumed by the verdict, as for nef/ample
    fan.walls()?;
    for (c, piece) in phi.pieces().iter().enumerate() {
        for (i, u) in piece.weights.iter().enumerate() {
            let e = piece.frame.line(i);
            for ray in 0..fan.rays().len() {
                let v = fan.ray(ray);
                let lhs = linalg::pair(v, u);
                let val = phi
                    .evaluate(&linalg::ivec_to_qvec(v))?
                    .evaluate(e)?
                    .expect("frame line is nonzero");
                if lhs > val {
                    return Ok(Err(GenerationWitness { cone: c, line: i, ray }));
                }
            }
        }
    }
    Ok(Ok(()))
}

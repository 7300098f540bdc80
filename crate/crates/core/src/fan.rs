//! Rational simplicial fans: validation, walls, and exact membership.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::linalg::{self, QVec};
use crate::rat::Rat;

/// A fan in `Q^n` given by primitive ray generators and simplicial maximal
/// cones (as sets of ray indices). Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    rank: usize,
    rays: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
}

/// A codimension-one cone shared by exactly two maximal cones, together with
/// the primitive covector generating its orthogonal line, positive on `sigma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wall {
    pub tau_rays: Vec<usize>,
    pub sigma: usize,
    pub sigma_prime: usize,
    pub normal: Vec<i64>,
}

/// Outcome of structural validation.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub primitive: bool,
    pub simplicial: bool,
    pub faces_ok: bool,
    pub complete: bool,
    pub problems: Vec<String>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.primitive && self.simplicial && self.faces_ok
    }
}

#[derive(Serialize, Deserialize)]
struct FanDto {
    rank: usize,
    rays: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
}

fn vec_gcd(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x.abs()))
}

impl Fan {
    /// Builds a fan after basic structural checks (index ranges, duplicate
    /// rays, empty cones). Mathematical validation is separate; see
    /// [`Fan::validate`].
    pub fn new(rank: usize, rays: Vec<Vec<i64>>, max_cones: Vec<Vec<usize>>) -> Result<Self, Error> {
        if rank == 0 {
            return Err(Error::InvalidFan("rank must be positive".into()));
        }
        for (i, v) in rays.iter().enumerate() {
            if v.len() != rank {
                return Err(Error::InvalidFan(format!(
                    "ray {i} has {} coordinates, expected {rank}",
                    v.len()
                )));
            }
            if v.iter().all(|&x| x == 0) {
                return Err(Error::InvalidFan(format!("ray {i} is zero")));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, v) in rays.iter().enumerate() {
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidFan(format!("duplicate ray {i}: {v:?}")));
            }
        }
        let mut cones = Vec::with_capacity(max_cones.len());
        for (ci, cone) in max_cones.into_iter().enumerate() {
            if cone.is_empty() {
                return Err(Error::InvalidFan(format!("maximal cone {ci} is empty")));
            }
            let set: BTreeSet<usize> = cone.iter().copied().collect();
            if set.len() != cone.len() {
                return Err(Error::InvalidFan(format!("maximal cone {ci} repeats a ray")));
            }
            if let Some(&bad) = set.iter().find(|&&r| r >= rays.len()) {
                return Err(Error::InvalidFan(format!(
                    "maximal cone {ci} references unknown ray {bad}"
                )));
            }
            cones.push(set.into_iter().collect());
        }
        Ok(Fan { rank, rays, max_cones: cones })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn ray(&self, i: usize) -> &[i64] {
        &self.rays[i]
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    pub fn cone_rays(&self, cone: usize) -> &[usize] {
        &self.max_cones[cone]
    }

    /// Maximal cones containing the given ray.
    pub fn cones_at_ray(&self, ray: usize) -> Vec<usize> {
        (0..self.max_cones.len())
            .filter(|&c| self.max_cones[c].contains(&ray))
            .collect()
    }

    fn ray_matrix(&self, ray_ids: &[usize]) -> Vec<QVec> {
        ray_ids
            .iter()
            .map(|&r| linalg::ivec_to_qvec(&self.rays[r]))
            .collect()
    }

    /// Structural diagnostics: primitivity of rays, simpliciality of maximal
    /// cones, pairwise face intersections, and the completeness certificate
    /// (every facet shared by exactly two maximal cones plus connectivity of
    /// the wall-adjacency graph).
    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics {
            primitive: true,
            simplicial: true,
            faces_ok: true,
            complete: false,
            problems: Vec::new(),
        };
        for (i, v) in self.rays.iter().enumerate() {
            if vec_gcd(v) != 1 {
                d.primitive = false;
                d.problems.push(format!("ray {i} = {v:?} is not primitive"));
            }
        }
        for (ci, cone) in self.max_cones.iter().enumerate() {
            let m = self.ray_matrix(cone);
            if linalg::rank(&m) != cone.len() {
                d.simplicial = false;
                d.problems
                    .push(format!("maximal cone {ci} has linearly dependent rays"));
            }
        }
        if !d.simplicial {
            return d;
        }
        // Pairwise face checks: a ray of one cone inside another must be a
        // shared generator, and adjacent full-dimensional cones must admit a
        // separating wall normal.
        for i in 0..self.max_cones.len() {
            for j in i + 1..self.max_cones.len() {
                if let Some(problem) = self.face_problem(i, j) {
                    d.faces_ok = false;
                    d.problems.push(problem);
                }
            }
        }
        match self.facet_pairing() {
            Ok(_) => d.complete = true,
            Err(e) => d.problems.push(format!("not complete: {e}")),
        }
        d
    }

    fn face_problem(&self, i: usize, j: usize) -> Option<String> {
        let ci: BTreeSet<usize> = self.max_cones[i].iter().copied().collect();
        let cj: BTreeSet<usize> = self.max_cones[j].iter().copied().collect();
        let common: Vec<usize> = ci.intersection(&cj).copied().collect();
        for &r in ci.difference(&cj) {
            if self
                .cone_membership(j, &linalg::ivec_to_qvec(&self.rays[r]))
                .is_some()
            {
                return Some(format!(
                    "ray {r} of cone {i} lies in cone {j} but is not a shared generator"
                ));
            }
        }
        for &r in cj.difference(&ci) {
            if self
                .cone_membership(i, &linalg::ivec_to_qvec(&self.rays[r]))
                .is_some()
            {
                return Some(format!(
                    "ray {r} of cone {j} lies in cone {i} but is not a shared generator"
                ));
            }
        }
        // For full-dimensional neighbors along a facet, require an exact
        // separating hyperplane through the shared rays.
        if common.len() + 1 == self.rank
            && ci.len() == self.rank
            && cj.len() == self.rank
            && self.wall_normal(&common, i, j).is_none()
        {
            return Some(format!(
                "cones {i} and {j} share a facet but admit no separating hyperplane"
            ));
        }
        None
    }

    /// Primitive integer generator of the orthogonal line of the rays in
    /// `tau`, positive on the off-facet rays of `sigma` and negative on those
    /// of `sigma_prime`; `None` if no such covector exists.
    fn wall_normal(&self, tau: &[usize], sigma: usize, sigma_prime: usize) -> Option<Vec<i64>> {
        let m = self.ray_matrix(tau);
        let ker = linalg::kernel(&m, self.rank);
        if ker.len() != 1 {
            return None;
        }
        let mut w = primitive_integer(&ker[0]);
        let tau_set: BTreeSet<usize> = tau.iter().copied().collect();
        let side = |cone: usize, w: &[i64]| -> Option<bool> {
            // all off-tau rays strictly on one side; Some(true) = positive
            let mut sign = None;
            for &r in &self.max_cones[cone] {
                if tau_set.contains(&r) {
                    continue;
                }
                let p: i64 = self.rays[r].iter().zip(w).map(|(a, b)| a * b).sum();
                let s = if p > 0 {
                    true
                } else if p < 0 {
                    false
                } else {
                    return None;
                };
                if *sign.get_or_insert(s) != s {
                    return None;
                }
            }
            sign
        };
        match (side(sigma, &w), side(sigma_prime, &w)) {
            (Some(true), Some(false)) => Some(w),
            (Some(false), Some(true)) => {
                for x in &mut w {
                    *x = -*x;
                }
                Some(w)
            }
            _ => None,
        }
    }

    /// Facet-sharing map: each facet of each full-dimensional maximal cone,
    /// keyed by its sorted ray set, with the cones containing it.
    fn facet_pairing(&self) -> Result<BTreeMap<Vec<usize>, Vec<usize>>, Error> {
        let n = self.rank;
        let mut facets: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (ci, cone) in self.max_cones.iter().enumerate() {
            if cone.len() != n {
                return Err(Error::IncompleteFan(format!(
                    "maximal cone {ci} is not full-dimensional"
                )));
            }
            for skip in 0..n {
                let facet: Vec<usize> = cone
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &r)| r)
                    .collect();
                facets.entry(facet).or_default().push(ci);
            }
        }
        for (facet, cones) in &facets {
            if cones.len() != 2 {
                return Err(Error::IncompleteFan(format!(
                    "facet {facet:?} is shared by {} maximal cones, expected 2",
                    cones.len()
                )));
            }
        }
        // connectivity of the wall-adjacency graph
        let nc = self.max_cones.len();
        let mut seen = vec![false; nc];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for cones in facets.values() {
                if cones.contains(&c) {
                    for &d in cones {
                        if !seen[d] {
                            seen[d] = true;
                            stack.push(d);
                        }
                    }
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::IncompleteFan("wall-adjacency graph is disconnected".into()));
        }
        Ok(facets)
    }

    /// All walls of a complete fan, sorted by facet key.
    pub fn walls(&self) -> Result<Vec<Wall>, Error> {
        let facets = self.facet_pairing()?;
        let mut walls = Vec::with_capacity(facets.len());
        for (tau, cones) in facets {
            let (sigma, sigma_prime) = (cones[0], cones[1]);
            let normal = self.wall_normal(&tau, sigma, sigma_prime).ok_or_else(|| {
                Error::InvalidFan(format!("no separating normal for facet {tau:?}"))
            })?;
            walls.push(Wall { tau_rays: tau, sigma, sigma_prime, normal });
        }
        Ok(walls)
    }

    /// Barycentric coordinates of `x` in the given maximal cone, if `x` lies
    /// in it. Simpliciality makes the coordinates unique.
    pub fn cone_membership(&self, cone: usize, x: &[Rat]) -> Option<QVec> {
        let rays = &self.max_cones[cone];
        let cols = self.ray_matrix(rays);
        let system = linalg::transpose(&cols);
        let lambda = linalg::solve(&system, x)?;
        // solve() can return a spurious answer only when inconsistent was
        // caught; still verify exactly, then check nonnegativity.
        let back = linalg::mat_vec(&system, &lambda);
        if back.as_slice() != x {
            return None;
        }
        lambda.iter().all(|l| !l.is_negative()).then_some(lambda)
    }

    /// Index of some maximal cone containing `x`.
    pub fn find_cone(&self, x: &[Rat]) -> Option<usize> {
        (0..self.max_cones.len()).find(|&c| self.cone_membership(c, x).is_some())
    }

    /// A rational point in the relative interior of a maximal cone: the sum
    /// of its ray generators.
    pub fn relint_sample(&self, cone: usize) -> Vec<i64> {
        let mut s = vec![0i64; self.rank];
        for &r in &self.max_cones[cone] {
            for (k, &v) in self.rays[r].iter().enumerate() {
                s[k] += v;
            }
        }
        s
    }

    pub fn from_json(s: &str) -> Result<Self, Error> {
        let dto: FanDto =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("fan JSON: {e}")))?;
        Fan::new(dto.rank, dto.rays, dto.max_cones)
    }

    pub fn to_json(&self) -> String {
        let dto = FanDto {
            rank: self.rank,
            rays: self.rays.clone(),
            max_cones: self.max_cones.clone(),
        };
        serde_json::to_string_pretty(&dto).expect("fan serialization cannot fail")
    }
}

/// Scales a nonzero rational vector to its primitive integer representative.
pub fn primitive_integer(v: &[Rat]) -> Vec<i64> {
    let mut lcm = BigInt::one();
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    assert!(!g.is_zero(), "primitive_integer of the zero vector");
    ints.iter()
        .map(|x| i64::try_from(&(x / &g)).expect("primitive vector exceeds i64"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::ivec_to_qvec;
    use crate::rat::rat;

    #[test]
    fn p2_fan_is_valid_and_complete() {
        let fan = fixtures::fan_p2();
        let d = fan.validate();
        assert!(d.is_valid(), "{:?}", d.problems);
        assert!(d.complete);
    }

    #[test]
    fn p1_fan_is_valid_and_complete() {
        let fan = fixtures::fan_p1();
        let d = fan.validate();
        assert!(d.is_valid());
        assert!(d.complete);
    }

    #[test]
    fn non_primitive_ray_is_flagged() {
        let fan = Fan::new(2, vec![vec![2, 0], vec![0, 1]], vec![vec![0, 1]]).unwrap();
        let d = fan.validate();
        assert!(!d.primitive);
    }

    #[test]
    fn p1_single_wall() {
        let fan = fixtures::fan_p1();
        let walls = fan.walls().unwrap();
        assert_eq!(walls.len(), 1);
        let w = &walls[0];
        assert!(w.tau_rays.is_empty());
        // sigma is the first incident cone, here the +1 ray's cone
        assert_eq!(w.sigma, 0);
        assert_eq!(w.normal, vec![1]);
    }

    #[test]
    fn p2_three_walls() {
        let fan = fixtures::fan_p2();
        let walls = fan.walls().unwrap();
        assert_eq!(walls.len(), 3);
        // wall along ray (1,0) between cone{v1,v2} and cone{v1,v3}:
        // normal is (0,1), positive on the cone containing v2 = (0,1).
        let w = walls.iter().find(|w| w.tau_rays == vec![0]).unwrap();
        let positive_cone = &fan.max_cones()[w.sigma];
        assert!(positive_cone.contains(&1));
        assert_eq!(w.normal, vec![0, 1]);
    }

    #[test]
    fn p1xp1_four_walls() {
        let fan = fixtures::fan_p1xp1();
        assert!(fan.validate().complete);
        assert_eq!(fan.walls().unwrap().len(), 4);
    }

    #[test]
    fn membership_in_first_quadrant() {
        let fan = fixtures::fan_p2();
        let lam = fan
            .cone_membership(0, &ivec_to_qvec(&[1, 1]))
            .expect("(1,1) lies in cone{v1,v2}");
        assert_eq!(lam, vec![rat(1), rat(1)]);
        assert!(fan.cone_membership(0, &ivec_to_qvec(&[-1, 0])).is_none());
    }

    #[test]
    fn relint_sample_is_generator_sum() {
        let fan = fixtures::fan_p2();
        // cone{v1, v3} = cone{(1,0), (-1,-1)}
        let c = fan
            .max_cones()
            .iter()
            .position(|c| c == &vec![0, 2])
            .unwrap();
        assert_eq!(fan.relint_sample(c), vec![0, -1]);
    }

    #[test]
    fn every_point_covered_by_complete_fan() {
        let fan = fixtures::fan_p2();
        for x in [[3, -7], [0, 0], [-5, -5], [2, 9], [-1, 4]] {
            let xq = ivec_to_qvec(&[x[0], x[1]]);
            assert!(fan.find_cone(&xq).is_some(), "{x:?} not covered");
        }
    }

    #[test]
    fn json_roundtrip() {
        let fan = fixtures::fan_p2();
        let s = fan.to_json();
        assert_eq!(Fan::from_json(&s).unwrap(), fan);
    }
}

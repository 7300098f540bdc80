//! Points of the building of `GL(E)` as prevaluations / labeled flags, with
//! evaluation, the partial order, adaptedness, and tensor product.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Error;
use crate::linalg::{self, QVec, Subspace};
use crate::rat::{rat, Rat};

/// A prevaluation on `E = Q^r`: strictly decreasing rational labels attached
/// to a strictly nested flag of subspaces whose top member is all of `E`.
///
/// `evaluate` is then finite on all of `E \ {0}` and `evaluate(0)` is plus
/// infinity, represented by `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prevaluation {
    labels: Vec<Rat>,
    flag: Vec<Subspace>,
}

impl Prevaluation {
    pub fn new(labels: Vec<Rat>, flag: Vec<Subspace>) -> Result<Self, Error> {
        if labels.len() != flag.len() || labels.is_empty() {
            return Err(Error::InvalidPrevaluation(
                "labels and flag must be nonempty and of equal length".into(),
            ));
        }
        let ambient = flag[0].ambient_dim();
        for w in flag.windows(2) {
            if w[1].ambient_dim() != ambient {
                return Err(Error::InvalidPrevaluation("mixed ambient dimensions".into()));
            }
            if !(w[1].contains(&w[0]) && w[1].dim() > w[0].dim()) {
                return Err(Error::InvalidPrevaluation("flag is not strictly nested".into()));
            }
        }
        for w in labels.windows(2) {
            if w[0] <= w[1] {
                return Err(Error::InvalidPrevaluation(
                    "labels are not strictly decreasing".into(),
                ));
            }
        }
        if !flag.last().unwrap().is_full() {
            return Err(Error::InvalidPrevaluation(
                "top flag subspace must be the whole space".into(),
            ));
        }
        Ok(Prevaluation { labels, flag })
    }

    /// The constant prevaluation with a single label on all of `Q^r`.
    pub fn constant(ambient: usize, c: Rat) -> Self {
        Prevaluation { labels: vec![c], flag: vec![Subspace::full(ambient)] }
    }

    pub fn ambient_dim(&self) -> usize {
        self.flag[0].ambient_dim()
    }

    /// The value set, in strictly decreasing order.
    pub fn labels(&self) -> &[Rat] {
        &self.labels
    }

    pub fn flag(&self) -> &[Subspace] {
        &self.flag
    }

    /// `max { c_j | e in F_j }`; `None` encodes plus infinity for `e = 0`.
    pub fn evaluate(&self, e: &[Rat]) -> Result<Option<Rat>, Error> {
        if e.len() != self.ambient_dim() {
            return Err(Error::AmbientMismatch(e.len(), self.ambient_dim()));
        }
        if linalg::is_zero_vec(e) {
            return Ok(None);
        }
        for (c, f) in self.labels.iter().zip(&self.flag) {
            if f.contains_vec(e) {
                return Ok(Some(c.clone()));
            }
        }
        unreachable!("top flag subspace is all of E")
    }

    /// The filtration subspace `F_{v >= a}`.
    pub fn filtration_at(&self, a: &Rat) -> Subspace {
        let mut last = None;
        for (c, f) in self.labels.iter().zip(&self.flag) {
            if c >= a {
                last = Some(f);
            } else {
                break;
            }
        }
        last.cloned().unwrap_or_else(|| Subspace::zero(self.ambient_dim()))
    }

    /// Builds a prevaluation from filtration jumps `(level, subspace)` with
    /// strictly decreasing integer levels and strictly increasing subspaces,
    /// the largest being all of `E`.
    pub fn from_filtration(jumps: &[(i64, Subspace)]) -> Result<Self, Error> {
        let labels = jumps.iter().map(|(l, _)| rat(*l)).collect();
        let flag = jumps.iter().map(|(_, s)| s.clone()).collect();
        Prevaluation::new(labels, flag)
    }

    /// Pointwise comparison `v <= v'`, decided by filtration inclusion at the
    /// finitely many thresholds in the union of both value sets.
    pub fn leq(&self, other: &Self) -> Result<bool, Error> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::AmbientMismatch(self.ambient_dim(), other.ambient_dim()));
        }
        let thresholds: BTreeSet<&Rat> = self.labels.iter().chain(&other.labels).collect();
        for a in thresholds {
            if !other.filtration_at(a).contains(&self.filtration_at(a)) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Tensor product via the filtration formula
    /// `(F (x) F')_a = sum_{b + b' >= a} F_b (x) F'_b'` over the finite
    /// sumset of the two value sets.
    pub fn tensor(&self, other: &Self) -> Self {
        let ambient = self.ambient_dim() * other.ambient_dim();
        let mut sums: BTreeSet<Rat> = BTreeSet::new();
        for c in &self.labels {
            for c2 in &other.labels {
                sums.insert(c + c2);
            }
        }
        let mut labels = Vec::new();
        let mut flag: Vec<Subspace> = Vec::new();
        for a in sums.into_iter().rev() {
            let mut piece = Subspace::zero(ambient);
            for (c, f) in self.labels.iter().zip(&self.flag) {
                for (c2, f2) in other.labels.iter().zip(&other.flag) {
                    if c + c2 >= a {
                        piece = piece.sum(&f.tensor(f2)).expect("same ambient");
                    }
                }
            }
            if flag.last().map_or(true, |prev: &Subspace| piece.dim() > prev.dim()) {
                labels.push(a);
                flag.push(piece);
            }
        }
        Prevaluation::new(labels, flag).expect("tensor filtration is a valid flag")
    }
}

/// A frame: `r` independent lines decomposing `Q^r`. Line generators are
/// normalized so their first nonzero coordinate is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    lines: Vec<QVec>,
}

impl Frame {
    pub fn new(lines: Vec<QVec>) -> Result<Self, Error> {
        if lines.is_empty() {
            return Err(Error::InvalidFrame("empty frame".into()));
        }
        let r = lines.len();
        if lines.iter().any(|l| l.len() != r) {
            return Err(Error::InvalidFrame("frame of Q^r needs r coordinates per line".into()));
        }
        if linalg::rank(&lines) != r {
            return Err(Error::InvalidFrame("frame lines are not independent".into()));
        }
        let lines = lines
            .into_iter()
            .map(|l| {
                let lead = l.iter().find(|x| !x.is_zero()).unwrap().clone();
                linalg::vec_scale(&lead.recip(), &l)
            })
            .collect();
        Ok(Frame { lines })
    }

    pub fn standard(r: usize) -> Self {
        Frame { lines: linalg::identity(r) }
    }

    pub fn rank(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[QVec] {
        &self.lines
    }

    pub fn line(&self, i: usize) -> &QVec {
        &self.lines[i]
    }

    /// True iff every flag subspace of `v` is the span of exactly the frame
    /// lines it contains.
    pub fn is_adapted(&self, v: &Prevaluation) -> bool {
        if v.ambient_dim() != self.rank() {
            return false;
        }
        v.flag().iter().all(|f| {
            let inside: Vec<QVec> = self
                .lines
                .iter()
                .filter(|l| f.contains_vec(l))
                .cloned()
                .collect();
            inside.len() == f.dim()
                && Subspace::span(&inside, self.rank()).unwrap() == *f
        })
    }

    /// Kronecker product frame with the row-major `(i, j) -> i * s + j`
    /// convention.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut lines = Vec::with_capacity(self.rank() * other.rank());
        for a in &self.lines {
            for b in &other.lines {
                lines.push(linalg::kronecker(a, b));
            }
        }
        Frame::new(lines).expect("Kronecker products of frame lines stay independent")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ivec_to_qvec;

    fn qv(v: &[i64]) -> QVec {
        ivec_to_qvec(v)
    }

    fn two_step() -> Prevaluation {
        // span(1,0) with label 1, then E with label 0
        Prevaluation::new(
            vec![rat(1), rat(0)],
            vec![Subspace::span(&[qv(&[1, 0])], 2).unwrap(), Subspace::full(2)],
        )
        .unwrap()
    }

    #[test]
    fn evaluate_by_membership() {
        let v = two_step();
        assert_eq!(v.evaluate(&qv(&[1, 0])).unwrap(), Some(rat(1)));
        assert_eq!(v.evaluate(&qv(&[0, 1])).unwrap(), Some(rat(0)));
        assert_eq!(v.evaluate(&qv(&[1, 1])).unwrap(), Some(rat(0)));
    }

    #[test]
    fn evaluate_zero_is_infinity() {
        let v = two_step();
        assert_eq!(v.evaluate(&qv(&[0, 0])).unwrap(), None);
    }

    #[test]
    fn non_archimedean_spot_check() {
        let v = two_step();
        // v((1,0) + (-1,1)) = v(0,1) = 0 >= min(1, 0)
        let a = v.evaluate(&qv(&[1, 0])).unwrap().unwrap();
        let b = v.evaluate(&qv(&[-1, 1])).unwrap().unwrap();
        let s = v.evaluate(&qv(&[0, 1])).unwrap().unwrap();
        assert!(s >= a.min(b));
    }

    #[test]
    fn from_filtration_roundtrip() {
        let line = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        let v = Prevaluation::from_filtration(&[(1, line), (0, Subspace::full(2))]).unwrap();
        assert_eq!(v, two_step());

        let c = Prevaluation::from_filtration(&[(0, Subspace::full(1))]).unwrap();
        assert_eq!(c, Prevaluation::constant(1, rat(0)));
    }

    #[test]
    fn from_filtration_rejects_bad_input() {
        let line = Subspace::span(&[qv(&[1, 0])], 2).unwrap();
        // top not E
        assert!(Prevaluation::from_filtration(&[(0, line.clone())]).is_err());
        // not nested
        let other = Subspace::span(&[qv(&[0, 1])], 2).unwrap();
        assert!(Prevaluation::new(vec![rat(1), rat(0)], vec![line, other]).is_err());
    }

    #[test]
    fn leq_reflexive_and_shift() {
        let v = two_step();
        assert!(v.leq(&v).unwrap());
        let shifted = Prevaluation::new(
            v.labels().iter().map(|c| c + rat(1)).collect(),
            v.flag().to_vec(),
        )
        .unwrap();
        assert!(v.leq(&shifted).unwrap());
        assert!(!shifted.leq(&v).unwrap());
    }

    #[test]
    fn generic_lines_incomparable() {
        let mk = |gen: &[i64]| {
            Prevaluation::new(
                vec![rat(1), rat(0)],
                vec![Subspace::span(&[qv(gen)], 2).unwrap(), Subspace::full(2)],
            )
            .unwrap()
        };
        let v = mk(&[1, 0]);
        let w = mk(&[1, 1]);
        // each evaluates to 1 on its own line generator and 0 on the other's
        assert!(!v.leq(&w).unwrap());
        assert!(!w.leq(&v).unwrap());
    }

    #[test]
    fn adaptedness() {
        let v = two_step();
        assert!(Frame::standard(2).is_adapted(&v));
        let skew = Frame::new(vec![qv(&[1, 1]), qv(&[0, 1])]).unwrap();
        assert!(!skew.is_adapted(&v));
    }

    #[test]
    fn tensor_of_constants() {
        let a = Prevaluation::constant(1, rat(2));
        let b = Prevaluation::constant(1, rat(3));
        assert_eq!(a.tensor(&b), Prevaluation::constant(1, rat(5)));
    }

    #[test]
    fn tensor_twist_by_line() {
        // (labels (1,0) on Q^2) tensor (constant c on Q^1) shifts labels by c
        let v = two_step();
        let c = Prevaluation::constant(1, rat(4));
        let t = v.tensor(&c);
        assert_eq!(t.labels(), &[rat(5), rat(4)]);
        assert_eq!(t.flag()[0].dim(), 1);
        assert!(t.flag()[1].is_full());
    }

    #[test]
    fn tensor_elementary_values_add() {
        let v = two_step();
        let w = two_step();
        let t = v.tensor(&w);
        // e1 (x) e1 has value 1 + 1; e2 (x) e2 has value 0
        assert_eq!(t.evaluate(&qv(&[1, 0, 0, 0])).unwrap(), Some(rat(2)));
        assert_eq!(t.evaluate(&qv(&[0, 0, 0, 1])).unwrap(), Some(rat(0)));
        assert_eq!(t.evaluate(&qv(&[0, 1, 0, 0])).unwrap(), Some(rat(1)));
    }
}

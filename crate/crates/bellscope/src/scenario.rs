//! Scenarios, correlation vectors and vertex vectors.
//!
//! A scenario is a pair `(n, S)`: event indices `1..=n` and a set `S` of
//! index pairs `(i, j)` with `i < j` naming the correlated pairs. A
//! correlation vector lives in `R^(n+|S|)` and stores one probability per
//! event plus one per pair. Vertex vectors are the 0/1 points of that space;
//! they come in three nested families (classical, quantum, general).

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::arith::Scalar;

/// Hard cap on vertex enumeration: `2^(n+|S|)` may not exceed `2^20`.
pub const ENUMERATION_CAP_BITS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("event count must be at least 1")]
    NoEvents,
    #[error("pair ({0}, {1}) is out of range for n = {2}")]
    PairOutOfRange(usize, usize, usize),
    #[error("pair ({0}, {0}) correlates an event with itself")]
    SelfPair(usize),
    #[error("pair ({0}, {1}) appears more than once")]
    DuplicatePair(usize, usize),
    #[error("2^(n+|S|) = 2^{0} exceeds the enumeration cap 2^{cap}", cap = ENUMERATION_CAP_BITS)]
    TooLarge(usize),
    #[error("expected {expected} single-event entries, got {got}")]
    SinglesLength { expected: usize, got: usize },
    #[error("expected {expected} pair entries, got {got}")]
    PairsLength { expected: usize, got: usize },
    #[error("entry {label} = {value} is outside [0, 1]")]
    EntryOutOfRange { label: String, value: String },
    #[error("scenario mismatch between operands")]
    ScenarioMismatch,
}

#[derive(Debug, PartialEq, Eq)]
struct ScenarioInner {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

/// A scenario `(n, S)`. Indices are 1-based externally; pairs are normalized
/// to `i < j` and kept sorted, so equal scenarios compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    inner: Arc<ScenarioInner>,
}

impl Scenario {
    pub fn new(n: usize, pairs: &[(usize, usize)]) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::NoEvents);
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a == b {
                return Err(ScenarioError::SelfPair(a));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i < 1 || j > n {
                return Err(ScenarioError::PairOutOfRange(a, b, n));
            }
            normalized.push((i, j));
        }
        normalized.sort_unstable();
        for w in normalized.windows(2) {
            if w[0] == w[1] {
                return Err(ScenarioError::DuplicatePair(w[0].0, w[0].1));
            }
        }
        let s = Scenario {
            inner: Arc::new(ScenarioInner { n, pairs: normalized }),
        };
        if s.dim() > ENUMERATION_CAP_BITS {
            return Err(ScenarioError::TooLarge(s.dim()));
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.inner.pairs
    }

    /// Dimension of the correlation space, `n + |S|`.
    pub fn dim(&self) -> usize {
        self.inner.n + self.inner.pairs.len()
    }

    /// Position of `(i, j)` (either order) in the sorted pair list.
    pub fn pair_position(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.inner.pairs.binary_search(&key).ok()
    }

    /// The single-pair scenario `(2, {(1,2)})`.
    pub fn two_events() -> Self {
        Scenario::new(2, &[(1, 2)]).expect("static scenario")
    }

    /// The four-event two-by-two scenario `S = {(1,3),(1,4),(2,3),(2,4)}`.
    pub fn two_by_two() -> Self {
        Scenario::new(4, &[(1, 3), (1, 4), (2, 3), (2, 4)]).expect("static scenario")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, S={{", self.n())?;
        for (k, (i, j)) in self.pairs().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "({i},{j})")?;
        }
        write!(f, "}})")
    }
}

/// A correlation vector: per-event probabilities plus per-pair joint
/// probabilities, every entry in `[0, 1]`. The scalar type fixes the
/// arithmetic mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVector<S: Scalar> {
    scenario: Scenario,
    singles: Vec<S>,
    pairs: Vec<S>,
}

impl<S: Scalar> CorrelationVector<S> {
    pub fn new(scenario: Scenario, singles: Vec<S>, pairs: Vec<S>) -> Result<Self, ScenarioError> {
        if singles.len() != scenario.n() {
            return Err(ScenarioError::SinglesLength {
                expected: scenario.n(),
                got: singles.len(),
            });
        }
        if pairs.len() != scenario.pairs().len() {
            return Err(ScenarioError::PairsLength {
                expected: scenario.pairs().len(),
                got: pairs.len(),
            });
        }
        let unit_range = |v: &S| !v.is_negative() && !(v.clone() - S::one()).is_positive();
        for (idx, v) in singles.iter().enumerate() {
            if !unit_range(v) {
                return Err(ScenarioError::EntryOutOfRange {
                    label: format!("p{}", idx + 1),
                    value: v.render(),
                });
            }
        }
        for (k, v) in pairs.iter().enumerate() {
            if !unit_range(v) {
                let (i, j) = scenario.pairs()[k];
                return Err(ScenarioError::EntryOutOfRange {
                    label: format!("p{i}{j}"),
                    value: v.render(),
                });
            }
        }
        Ok(CorrelationVector { scenario, singles, pairs })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// `p_i`, 1-based.
    pub fn single(&self, i: usize) -> &S {
        &self.singles[i - 1]
    }

    pub fn singles(&self) -> &[S] {
        &self.singles
    }

    /// `p_ij` for `(i, j)` in `S` (either order).
    pub fn pair(&self, i: usize, j: usize) -> Option<&S> {
        self.scenario.pair_position(i, j).map(|k| &self.pairs[k])
    }

    pub fn pairs(&self) -> &[S] {
        &self.pairs
    }

    /// Flat coordinates: singles then pairs, in scenario order.
    pub fn coordinates(&self) -> Vec<S> {
        let mut out = self.singles.clone();
        out.extend(self.pairs.iter().cloned());
        out
    }

    /// True when every `p_ij` equals `p_i * p_j` within `tol`
    /// (`tol = 0` demands exact equality).
    pub fn is_independence_vector(&self, tol: &S) -> bool {
        self.scenario.pairs().iter().enumerate().all(|(k, &(i, j))| {
            let prod = self.singles[i - 1].clone() * self.singles[j - 1].clone();
            let delta = (self.pairs[k].clone() - prod).abs();
            delta <= tol.clone()
        })
    }

    pub fn to_float(&self) -> CorrelationVector<f64> {
        CorrelationVector {
            scenario: self.scenario.clone(),
            singles: self.singles.iter().map(Scalar::to_f64).collect(),
            pairs: self.pairs.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// Largest absolute coordinate difference; errors on scenario mismatch.
    pub fn max_delta(&self, other: &Self) -> Result<S, ScenarioError> {
        if self.scenario != other.scenario {
            return Err(ScenarioError::ScenarioMismatch);
        }
        let mut best = S::zero();
        for (a, b) in self
            .coordinates()
            .into_iter()
            .zip(other.coordinates().into_iter())
        {
            let d = (a - b).abs();
            if d > best {
                best = d;
            }
        }
        Ok(best)
    }
}

/// Vertex family membership of a 0/1 vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    /// `u_ij = eps_i * eps_j` for every pair.
    Classical,
    /// `u_ij <= eps_i * eps_j` with at least one strict inequality.
    QuantumOnly,
    /// Some pair has `u_ij > eps_i * eps_j`.
    GeneralOnly,
}

/// Which convex hull a membership query targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexFamily {
    Classical,
    Quantum,
    General,
}

impl fmt::Display for VertexFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VertexFamily::Classical => "classical",
            VertexFamily::Quantum => "quantum",
            VertexFamily::General => "general",
        };
        f.write_str(s)
    }
}

/// A 0/1 point of the correlation space, stored as bit masks.
/// Bit masks follow enumeration order: index 1 is the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexVector {
    scenario: Scenario,
    singles_bits: u32,
    pairs_bits: u32,
    kind: VertexKind,
}

impl VertexVector {
    pub fn from_bits(scenario: Scenario, singles_bits: u32, pairs_bits: u32) -> Self {
        let kind = classify_bits(&scenario, singles_bits, pairs_bits);
        VertexVector { scenario, singles_bits, pairs_bits, kind }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn kind(&self) -> VertexKind {
        self.kind
    }

    /// Truth value of event `i` (1-based).
    pub fn single(&self, i: usize) -> bool {
        let n = self.scenario.n();
        (self.singles_bits >> (n - i)) & 1 == 1
    }

    /// Pair entry by position in the scenario's sorted pair list.
    pub fn pair_at(&self, k: usize) -> bool {
        let m = self.scenario.pairs().len();
        (self.pairs_bits >> (m - 1 - k)) & 1 == 1
    }

    pub fn singles_bits(&self) -> u32 {
        self.singles_bits
    }

    pub fn pairs_bits(&self) -> u32 {
        self.pairs_bits
    }

    /// Label such as `"10;0"`: single bits, then pair bits, index 1 first.
    pub fn label(&self) -> String {
        let n = self.scenario.n();
        let m = self.scenario.pairs().len();
        let mut out = String::with_capacity(n + m + 1);
        for i in 1..=n {
            out.push(if self.single(i) { '1' } else { '0' });
        }
        out.push(';');
        for k in 0..m {
            out.push(if self.pair_at(k) { '1' } else { '0' });
        }
        out
    }

    pub fn to_vector<S: Scalar>(&self) -> CorrelationVector<S> {
        let n = self.scenario.n();
        let singles = (1..=n)
            .map(|i| if self.single(i) { S::one() } else { S::zero() })
            .collect();
        let pairs = (0..self.scenario.pairs().len())
            .map(|k| if self.pair_at(k) { S::one() } else { S::zero() })
            .collect();
        CorrelationVector {
            scenario: self.scenario.clone(),
            singles,
            pairs,
        }
    }
}

fn classify_bits(scenario: &Scenario, singles_bits: u32, pairs_bits: u32) -> VertexKind {
    let n = scenario.n();
    let m = scenario.pairs().len();
    let mut any_strict = false;
    for (k, &(i, j)) in scenario.pairs().iter().enumerate() {
        let ei = (singles_bits >> (n - i)) & 1;
        let ej = (singles_bits >> (n - j)) & 1;
        let u = (pairs_bits >> (m - 1 - k)) & 1;
        if u > ei * ej {
            return VertexKind::GeneralOnly;
        }
        if u < ei * ej {
            any_strict = true;
        }
    }
    if any_strict {
        VertexKind::QuantumOnly
    } else {
        VertexKind::Classical
    }
}

/// Classifies an arbitrary 0/1 assignment over `(singles, pairs)`.
/// `singles` and `pairs` are in scenario order.
pub fn classify_vertex(
    scenario: &Scenario,
    singles: &[bool],
    pairs: &[bool],
) -> Result<VertexKind, ScenarioError> {
    if singles.len() != scenario.n() {
        return Err(ScenarioError::SinglesLength {
            expected: scenario.n(),
            got: singles.len(),
        });
    }
    if pairs.len() != scenario.pairs().len() {
        return Err(ScenarioError::PairsLength {
            expected: scenario.pairs().len(),
            got: pairs.len(),
        });
    }
    let mut sb = 0u32;
    for &b in singles {
        sb = (sb << 1) | b as u32;
    }
    let mut pb = 0u32;
    for &b in pairs {
        pb = (pb << 1) | b as u32;
    }
    Ok(classify_bits(scenario, sb, pb))
}

/// The classical vertex of the truth assignment encoded by `assignment`
/// (`u_ij = eps_i * eps_j`). Bit `n-i` of `assignment` is the value of
/// event `i`, so index 1 is the most significant bit.
pub fn classical_vertex(scenario: &Scenario, assignment: u32) -> VertexVector {
    let n = scenario.n();
    let m = scenario.pairs().len();
    let mut pairs_bits = 0u32;
    for (k, &(i, j)) in scenario.pairs().iter().enumerate() {
        let ei = (assignment >> (n - i)) & 1;
        let ej = (assignment >> (n - j)) & 1;
        pairs_bits |= (ei & ej) << (m - 1 - k);
    }
    VertexVector::from_bits(scenario.clone(), assignment, pairs_bits)
}

/// All `2^n` classical vertices, in increasing assignment order.
pub fn enumerate_classical_vertices(scenario: &Scenario) -> Vec<VertexVector> {
    let n = scenario.n();
    (0..(1u32 << n))
        .map(|a| classical_vertex(scenario, a))
        .collect()
}

/// All `2^(n+|S|)` vertex vectors, classified, in increasing bit order
/// (single bits are the high bits).
pub fn enumerate_all_vertices(scenario: &Scenario) -> Vec<VertexVector> {
    let n = scenario.n();
    let m = scenario.pairs().len();
    let total = 1u64 << (n + m);
    let mut out = Vec::with_capacity(total as usize);
    for code in 0..total {
        let singles_bits = (code >> m) as u32;
        let pairs_bits = (code & ((1u64 << m) - 1)) as u32;
        out.push(VertexVector::from_bits(scenario.clone(), singles_bits, pairs_bits));
    }
    out
}

/// The classical and quantum-only vertices, i.e. every vertex of the
/// quantum hull, in `enumerate_all_vertices` order.
pub fn enumerate_quantum_vertices(scenario: &Scenario) -> Vec<VertexVector> {
    enumerate_all_vertices(scenario)
        .into_iter()
        .filter(|v| v.kind() != VertexKind::GeneralOnly)
        .collect()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::arith::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_fraction(n, d)
    }

    #[test]
    fn rejects_bad_scenarios() {
        assert!(matches!(Scenario::new(0, &[]), Err(ScenarioError::NoEvents)));
        assert!(matches!(
            Scenario::new(2, &[(1, 1)]),
            Err(ScenarioError::SelfPair(1))
        ));
        assert!(matches!(
            Scenario::new(2, &[(1, 3)]),
            Err(ScenarioError::PairOutOfRange(1, 3, 2))
        ));
        assert!(matches!(
            Scenario::new(3, &[(1, 2), (2, 1)]),
            Err(ScenarioError::DuplicatePair(1, 2))
        ));
        // 2^(18+3) > 2^20
        assert!(matches!(
            Scenario::new(18, &[(1, 2), (1, 3), (2, 3)]),
            Err(ScenarioError::TooLarge(21))
        ));
    }

    #[test]
    fn normalizes_pair_order() {
        let s = Scenario::new(4, &[(3, 1), (1, 4), (4, 2), (2, 3)]).unwrap();
        assert_eq!(s.pairs(), &[(1, 3), (1, 4), (2, 3), (2, 4)]);
        assert_eq!(s, Scenario::two_by_two());
        assert_eq!(s.pair_position(3, 1), Some(0));
        assert_eq!(s.pair_position(1, 2), None);
    }

    #[test]
    fn classical_vertices_of_the_two_event_scenario() {
        let s = Scenario::two_events();
        let vs = enumerate_classical_vertices(&s);
        let labels: Vec<String> = vs.iter().map(|v| v.label()).collect();
        assert_eq!(labels, vec!["00;0", "01;0", "10;0", "11;1"]);
        assert!(vs.iter().all(|v| v.kind() == VertexKind::Classical));
        let set: BTreeSet<String> = labels.into_iter().collect();
        let expected: BTreeSet<String> =
            ["00;0", "10;0", "01;0", "11;1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(set, expected);
    }

    #[test]
    fn enumeration_counts() {
        let s = Scenario::two_by_two();
        assert_eq!(enumerate_classical_vertices(&s).len(), 16);
        assert_eq!(enumerate_all_vertices(&s).len(), 256);
        let q = enumerate_quantum_vertices(&s);
        // sum over assignments of 2^(active pairs): 16 + 4*4 + 4*2 + 6*1 = 46? count directly
        let direct: usize = (0..16u32)
            .map(|a| {
                let active = s
                    .pairs()
                    .iter()
                    .filter(|&&(i, j)| (a >> (4 - i)) & 1 == 1 && (a >> (4 - j)) & 1 == 1)
                    .count();
                1usize << active
            })
            .sum();
        assert_eq!(q.len(), direct);
        assert!(q.iter().all(|v| v.kind() != VertexKind::GeneralOnly));
    }

    #[test]
    fn classify_vertex_families() {
        let s = Scenario::two_events();
        assert_eq!(
            classify_vertex(&s, &[true, true], &[false]).unwrap(),
            VertexKind::QuantumOnly
        );
        assert_eq!(
            classify_vertex(&s, &[false, false], &[true]).unwrap(),
            VertexKind::GeneralOnly
        );
        assert_eq!(
            classify_vertex(&s, &[true, true], &[true]).unwrap(),
            VertexKind::Classical
        );
        assert_eq!(
            classify_vertex(&s, &[true, false], &[false]).unwrap(),
            VertexKind::Classical
        );
    }

    #[test]
    fn classify_is_stable_under_symmetries_of_the_two_by_two_scenario() {
        // Permutations fixing S = {(1,3),(1,4),(2,3),(2,4)}: swap 1<->2,
        // swap 3<->4, and the wing swap (1,2)<->(3,4).
        let s = Scenario::two_by_two();
        let perms: Vec<[usize; 5]> = vec![
            [0, 2, 1, 3, 4],
            [0, 1, 2, 4, 3],
            [0, 3, 4, 1, 2],
            [0, 4, 3, 2, 1],
        ];
        for v in enumerate_all_vertices(&s) {
            for perm in &perms {
                let singles: Vec<bool> = (1..=4).map(|i| v.single(perm[i])).collect();
                let pairs: Vec<bool> = s
                    .pairs()
                    .iter()
                    .map(|&(i, j)| {
                        let k = s.pair_position(perm[i], perm[j]).expect("S is symmetric");
                        v.pair_at(k)
                    })
                    .collect();
                assert_eq!(
                    classify_vertex(&s, &singles, &pairs).unwrap(),
                    v.kind(),
                    "vertex {} under {:?}",
                    v.label(),
                    perm
                );
            }
        }
    }

    #[test]
    fn vector_validation() {
        let s = Scenario::two_events();
        assert!(CorrelationVector::new(s.clone(), vec![r(1, 2)], vec![r(1, 4)]).is_err());
        assert!(CorrelationVector::new(s.clone(), vec![r(1, 2), r(3, 2)], vec![r(1, 4)]).is_err());
        assert!(CorrelationVector::new(s.clone(), vec![r(1, 2), r(1, 2)], vec![r(-1, 4)]).is_err());
        let v = CorrelationVector::new(s, vec![r(2, 5), r(2, 5)], vec![r(1, 5)]).unwrap();
        assert_eq!(v.single(1), &r(2, 5));
        assert_eq!(v.pair(2, 1), Some(&r(1, 5)));
    }

    #[test]
    fn independence_is_exact_in_rational_mode() {
        let s = Scenario::two_events();
        let yes =
            CorrelationVector::new(s.clone(), vec![r(2, 5), r(2, 5)], vec![r(4, 25)]).unwrap();
        assert!(yes.is_independence_vector(&Rational::from_int(0)));
        // 1/5 differs from 4/25: not an independence vector.
        let no = CorrelationVector::new(s, vec![r(2, 5), r(2, 5)], vec![r(1, 5)]).unwrap();
        assert!(!no.is_independence_vector(&Rational::from_int(0)));
    }

    #[test]
    fn independence_accepts_tolerance_in_float_mode() {
        let s = Scenario::two_events();
        let v = CorrelationVector::new(s, vec![0.4, 0.4], vec![0.16 + 1e-12]).unwrap();
        assert!(v.is_independence_vector(&1e-9));
        assert!(!v.is_independence_vector(&1e-14));
    }

    #[test]
    fn vertex_to_vector_round_trip() {
        let s = Scenario::two_by_two();
        for v in enumerate_classical_vertices(&s) {
            let cv: CorrelationVector<Rational> = v.to_vector();
            for (k, &(i, j)) in s.pairs().iter().enumerate() {
                let prod = cv.single(i).clone() * cv.single(j).clone();
                assert_eq!(cv.pairs()[k], prod);
            }
        }
    }
}

//! Finite probability spaces and the two representation builders.
//!
//! A Kolmogorovian representation realizes a correlation vector as plain
//! event probabilities on a finite space. A conditional representation
//! realizes it as conditional probabilities `p_i = p(A_i | a_i)`,
//! `p_ij = p(A_i & A_j | a_i & a_j)` where the `a_i` are measurement-choice
//! events; it exists for vectors far outside the classical polytope, at the
//! price of possibly signaling conditionals.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::arith::Scalar;
use crate::scenario::{CorrelationVector, Scenario};
use crate::simplex::{LinearProgram, LpError, LpSolution, Rel};

/// Largest event count accepted by `build_conditional_rep` (the LP has
/// `4^n` unknowns).
pub const CONDITIONAL_BUILDER_MAX_EVENTS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepError {
    #[error("a probability space needs at least one atom")]
    EmptySpace,
    #[error("atom `{atom}` has negative weight {weight}")]
    NegativeWeight { atom: String, weight: String },
    #[error("atom weights sum to {sum}, not 1")]
    WeightSumNotOne { sum: String },
    #[error("duplicate atom label `{0}`")]
    DuplicateAtom(String),
    #[error("duplicate event name `{0}`")]
    DuplicateEvent(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown atom label `{0}`")]
    UnknownAtom(String),
    #[error("conditioning event `{0}` has probability zero")]
    ZeroProbabilityConditioning(String),
    #[error("coefficients are not convex: {0}")]
    NotConvex(String),
    #[error("{what}: expected {expected}, got {got}")]
    ReconstructionMismatch { what: String, expected: String, got: String },
    #[error("vector is inadmissible: {0}")]
    Inadmissible(String),
    #[error("no conditional representation found: {0}")]
    Unrepresentable(String),
    #[error("conditional builder supports at most {cap} events, scenario has {n}")]
    TooManyEvents { n: usize, cap: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Bit string `"0110"` for the low `n` bits of `bits`, index 1 printed first.
pub fn bits_label(bits: u32, n: usize) -> String {
    (1..=n)
        .map(|i| if (bits >> (n - i)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// A finite probability space with named events.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbSpace<S: Scalar> {
    atoms: Vec<String>,
    weights: Vec<S>,
    events: BTreeMap<String, BTreeSet<usize>>,
}

impl<S: Scalar> FiniteProbSpace<S> {
    /// Float-mode slack for the weight-sum check; exact mode demands
    /// equality.
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(atoms: Vec<(String, S)>) -> Result<Self, RepError> {
        if atoms.is_empty() {
            return Err(RepError::EmptySpace);
        }
        let mut seen = BTreeSet::new();
        let mut sum = S::zero();
        for (label, w) in &atoms {
            if !seen.insert(label.clone()) {
                return Err(RepError::DuplicateAtom(label.clone()));
            }
            if w.is_negative() {
                return Err(RepError::NegativeWeight { atom: label.clone(), weight: w.render() });
            }
            sum = sum + w.clone();
        }
        let deviation = (sum.clone() - S::one()).abs();
        let ok = if S::EXACT {
            deviation == S::zero()
        } else {
            deviation.to_f64() <= Self::SUM_TOL
        };
        if !ok {
            return Err(RepError::WeightSumNotOne { sum: sum.render() });
        }
        let (atoms, weights) = atoms.into_iter().unzip();
        Ok(FiniteProbSpace { atoms, weights, events: BTreeMap::new() })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn event_names(&self) -> impl Iterator<Item = &String> {
        self.events.keys()
    }

    pub fn event(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.events.get(name)
    }

    pub fn add_event_by_labels(&mut self, name: &str, labels: &[&str]) -> Result<(), RepError> {
        let mut set = BTreeSet::new();
        for l in labels {
            let idx = self
                .atoms
                .iter()
                .position(|a| a == l)
                .ok_or_else(|| RepError::UnknownAtom(l.to_string()))?;
            set.insert(idx);
        }
        self.insert_event(name, set)
    }

    pub fn add_event_where(
        &mut self,
        name: &str,
        mut pred: impl FnMut(&str) -> bool,
    ) -> Result<(), RepError> {
        let set = self
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| pred(a))
            .map(|(i, _)| i)
            .collect();
        self.insert_event(name, set)
    }

    fn insert_event(&mut self, name: &str, set: BTreeSet<usize>) -> Result<(), RepError> {
        if self.events.contains_key(name) {
            return Err(RepError::DuplicateEvent(name.to_string()));
        }
        self.events.insert(name.to_string(), set);
        Ok(())
    }

    fn event_set(&self, name: &str) -> Result<&BTreeSet<usize>, RepError> {
        self.events
            .get(name)
            .ok_or_else(|| RepError::UnknownEvent(name.to_string()))
    }

    fn mass(&self, set: &BTreeSet<usize>) -> S {
        set.iter()
            .fold(S::zero(), |acc, &i| acc + self.weights[i].clone())
    }

    /// Probability of the intersection of the named events
    /// (the full space when `names` is empty).
    pub fn prob_all(&self, names: &[&str]) -> Result<S, RepError> {
        let mut set: Option<BTreeSet<usize>> = None;
        for name in names {
            let ev = self.event_set(name)?;
            set = Some(match set {
                None => ev.clone(),
                Some(cur) => cur.intersection(ev).copied().collect(),
            });
        }
        Ok(match set {
            None => self.weights.iter().fold(S::zero(), |a, w| a + w.clone()),
            Some(s) => self.mass(&s),
        })
    }

    pub fn prob(&self, name: &str) -> Result<S, RepError> {
        self.prob_all(&[name])
    }

    /// `p(target-intersection | given-intersection)`; errors when the
    /// conditioning event has zero probability.
    pub fn cond_prob(&self, target: &[&str], given: &[&str]) -> Result<S, RepError> {
        let denom = self.prob_all(given)?;
        if !denom.is_positive() {
            return Err(RepError::ZeroProbabilityConditioning(given.join("&")));
        }
        let mut names: Vec<&str> = target.to_vec();
        names.extend_from_slice(given);
        Ok(self.prob_all(&names)? / denom)
    }

    pub fn to_float(&self) -> FiniteProbSpace<f64> {
        FiniteProbSpace {
            atoms: self.atoms.clone(),
            weights: self.weights.iter().map(Scalar::to_f64).collect(),
            events: self.events.clone(),
        }
    }
}

/// Builds the Kolmogorovian representation of `p` from convex coefficients
/// over truth assignments: atoms are the assignments of nonzero weight,
/// events are `A_i = {assignments with bit i set}`. The result is verified
/// against `p` before being returned.
pub fn build_kolmogorov_rep<S: Scalar>(
    p: &CorrelationVector<S>,
    lambda: &[(u32, S)],
) -> Result<FiniteProbSpace<S>, RepError> {
    let n = p.scenario().n();
    let mut sum = S::zero();
    for (_, w) in lambda {
        if w.is_negative() {
            return Err(RepError::NotConvex(format!("negative weight {}", w.render())));
        }
        sum = sum + w.clone();
    }
    if !(sum.clone() - S::one()).is_zero() {
        return Err(RepError::NotConvex(format!("weights sum to {}", sum.render())));
    }

    let atoms: Vec<(String, S)> = lambda
        .iter()
        .filter(|(_, w)| w.is_positive())
        .map(|(a, w)| (format!("ε={}", bits_label(*a, n)), w.clone()))
        .collect();
    let mut space = FiniteProbSpace::new(atoms)?;
    for i in 1..=n {
        space.add_event_where(&format!("A{i}"), |label| {
            label.as_bytes()[("ε=".len()) + i - 1] == b'1'
        })?;
    }

    for i in 1..=n {
        let got = space.prob(&format!("A{i}"))?;
        if !(got.clone() - p.single(i).clone()).is_zero() {
            return Err(RepError::ReconstructionMismatch {
                what: format!("p(A{i})"),
                expected: p.single(i).render(),
                got: got.render(),
            });
        }
    }
    for &(i, j) in p.scenario().pairs() {
        let got = space.prob_all(&[&format!("A{i}"), &format!("A{j}")])?;
        let expected = p.pair(i, j).unwrap();
        if !(got.clone() - expected.clone()).is_zero() {
            return Err(RepError::ReconstructionMismatch {
                what: format!("p(A{i}&A{j})"),
                expected: expected.render(),
                got: got.render(),
            });
        }
    }
    Ok(space)
}

/// Why a vector fails the conditional-representability conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityViolation {
    pub pair: (usize, usize),
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub violations: Vec<AdmissibilityViolation>,
}

/// A vector is admissible unless some pair has a zero-probability event with
/// nonzero joint, or two sure events with joint below one.
pub fn check_admissibility<S: Scalar>(p: &CorrelationVector<S>) -> AdmissibilityReport {
    let mut violations = Vec::new();
    for &(i, j) in p.scenario().pairs() {
        let pi = p.single(i);
        let pj = p.single(j);
        let pij = p.pair(i, j).unwrap();
        if (pi.is_zero() || pj.is_zero()) && !pij.is_zero() {
            violations.push(AdmissibilityViolation {
                pair: (i, j),
                reason: format!(
                    "p{i}{j} = {} must vanish when p{i} = {} or p{j} = {} is zero",
                    pij.render(),
                    pi.render(),
                    pj.render()
                ),
            });
        }
        if pi.is_one() && pj.is_one() && !pij.is_one() {
            violations.push(AdmissibilityViolation {
                pair: (i, j),
                reason: format!(
                    "p{i}{j} = {} must be one when p{i} and p{j} are both one",
                    pij.render()
                ),
            });
        }
    }
    AdmissibilityReport { admissible: violations.is_empty(), violations }
}

/// A probability space together with outcome events `A_i` and
/// setting events `a_i` realizing a vector conditionally.
#[derive(Debug, Clone)]
pub struct ConditionalRep<S: Scalar> {
    space: FiniteProbSpace<S>,
    scenario: Scenario,
}

impl<S: Scalar> ConditionalRep<S> {
    /// Wraps a space whose events `A1..An` and `a1..an` are already defined.
    /// Requires `p(a_i) > 0` for every event and `p(a_i & a_j) > 0` for
    /// every scenario pair.
    pub fn new(space: FiniteProbSpace<S>, scenario: Scenario) -> Result<Self, RepError> {
        for i in 1..=scenario.n() {
            for name in [format!("A{i}"), format!("a{i}")] {
                if space.event(&name).is_none() {
                    return Err(RepError::UnknownEvent(name));
                }
            }
            let setting = format!("a{i}");
            if !space.prob(&setting)?.is_positive() {
                return Err(RepError::ZeroProbabilityConditioning(setting));
            }
        }
        for &(i, j) in scenario.pairs() {
            let mass = space.prob_all(&[&format!("a{i}"), &format!("a{j}")])?;
            if !mass.is_positive() {
                return Err(RepError::ZeroProbabilityConditioning(format!("a{i}&a{j}")));
            }
        }
        Ok(ConditionalRep { space, scenario })
    }

    /// Reads an unconditional space as a conditional representation by
    /// taking every setting event to be the whole space. The represented
    /// conditionals then reduce to the plain probabilities, so the result
    /// is always non-signaling.
    pub fn from_unconditional(
        mut space: FiniteProbSpace<S>,
        scenario: Scenario,
    ) -> Result<Self, RepError> {
        for i in 1..=scenario.n() {
            space.add_event_where(&format!("a{i}"), |_| true)?;
        }
        Self::new(space, scenario)
    }

    pub fn space(&self) -> &FiniteProbSpace<S> {
        &self.space
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// `p(A_i | a_i)`.
    pub fn outcome_prob(&self, i: usize) -> Result<S, RepError> {
        self.space
            .cond_prob(&[&format!("A{i}")], &[&format!("a{i}")])
    }

    /// `p(A_i & A_j | a_i & a_j)`.
    pub fn joint_prob(&self, i: usize, j: usize) -> Result<S, RepError> {
        self.space.cond_prob(
            &[&format!("A{i}"), &format!("A{j}")],
            &[&format!("a{i}"), &format!("a{j}")],
        )
    }

    /// The correlation vector this representation realizes.
    pub fn realized_vector(&self) -> Result<CorrelationVector<S>, RepError> {
        let singles: Result<Vec<S>, RepError> =
            (1..=self.scenario.n()).map(|i| self.outcome_prob(i)).collect();
        let pairs: Result<Vec<S>, RepError> = self
            .scenario
            .pairs()
            .iter()
            .map(|&(i, j)| self.joint_prob(i, j))
            .collect();
        CorrelationVector::new(self.scenario.clone(), singles?, pairs?).map_err(|e| {
            RepError::ReconstructionMismatch {
                what: "realized vector".into(),
                expected: "entries in [0,1]".into(),
                got: e.to_string(),
            }
        })
    }

    /// Probability of the setting context where exactly the events flagged in
    /// `pattern` are measured: intersection of `a_i` (bit set) and the
    /// complements of the others.
    pub fn setting_context_prob(&self, pattern: u32) -> S {
        let n = self.scenario.n();
        let mut included: Option<BTreeSet<usize>> = None;
        let all: BTreeSet<usize> = (0..self.space.atom_count()).collect();
        for i in 1..=n {
            let ev = self.space.event(&format!("a{i}")).expect("validated").clone();
            let part: BTreeSet<usize> = if (pattern >> (n - i)) & 1 == 1 {
                ev
            } else {
                all.difference(&ev).copied().collect()
            };
            included = Some(match included {
                None => part,
                Some(cur) => cur.intersection(&part).copied().collect(),
            });
        }
        included
            .map(|set| {
                set.iter()
                    .fold(S::zero(), |acc, &i| acc + self.space.weights()[i].clone())
            })
            .unwrap_or_else(S::zero)
    }
}

/// One conditional compared against its target value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalCheck<S> {
    pub name: String,
    pub expected: S,
    pub got: S,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalVerification<S> {
    pub checks: Vec<ConditionalCheck<S>>,
    pub ok: bool,
}

/// Recomputes every represented conditional of `rep` and compares it with
/// `p` (exactly in exact mode, within the shared tolerance in float mode).
pub fn verify_conditional_rep<S: Scalar>(
    rep: &ConditionalRep<S>,
    p: &CorrelationVector<S>,
) -> Result<ConditionalVerification<S>, RepError> {
    let mut checks = Vec::new();
    for i in 1..=p.scenario().n() {
        let got = rep.outcome_prob(i)?;
        let expected = p.single(i).clone();
        let ok = (got.clone() - expected.clone()).is_zero();
        checks.push(ConditionalCheck { name: format!("p(A{i}|a{i})"), expected, got, ok });
    }
    for &(i, j) in p.scenario().pairs() {
        let got = rep.joint_prob(i, j)?;
        let expected = p.pair(i, j).unwrap().clone();
        let ok = (got.clone() - expected.clone()).is_zero();
        checks.push(ConditionalCheck {
            name: format!("p(A{i}&A{j}|a{i}&a{j})"),
            expected,
            got,
            ok,
        });
    }
    let ok = checks.iter().all(|c| c.ok);
    Ok(ConditionalVerification { checks, ok })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSignaling<S> {
    pub pair: (usize, usize),
    /// `p(A_i | a_i)` against `p(A_i | a_i & a_j)` and the mirrored check.
    pub single_given_own: (S, S),
    pub single_given_both: (S, S),
    pub signaling: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonSignalingReport<S> {
    pub pairs: Vec<PairSignaling<S>>,
    pub nonsignaling: bool,
}

/// Checks `p(A_i | a_i) = p(A_i | a_i & a_j)` (and the mirror image) for
/// every scenario pair.
pub fn check_nonsignaling<S: Scalar>(
    rep: &ConditionalRep<S>,
) -> Result<NonSignalingReport<S>, RepError> {
    let mut pairs = Vec::new();
    for &(i, j) in rep.scenario().pairs() {
        let own_i = rep.outcome_prob(i)?;
        let own_j = rep.outcome_prob(j)?;
        let both = [&format!("a{i}")[..], &format!("a{j}")[..]];
        let at_both_i = rep.space().cond_prob(&[&format!("A{i}")], &both)?;
        let at_both_j = rep.space().cond_prob(&[&format!("A{j}")], &both)?;
        let signaling = !(own_i.clone() - at_both_i.clone()).is_zero()
            || !(own_j.clone() - at_both_j.clone()).is_zero();
        pairs.push(PairSignaling {
            pair: (i, j),
            single_given_own: (own_i, own_j),
            single_given_both: (at_both_i, at_both_j),
            signaling,
        });
    }
    let nonsignaling = pairs.iter().all(|p| !p.signaling);
    Ok(NonSignalingReport { pairs, nonsignaling })
}

/// Builds a conditional representation of `p` on the product space of
/// setting patterns and outcome patterns. The setting distribution is free:
/// the LP maximizes the smallest required conditioning mass, so the builder
/// reaches every vector that any such space can carry. With
/// `require_nonsignaling` the witness is additionally forced to satisfy
/// `p(A_i | a_i & a_j) = p(A_i | a_i)`.
pub fn build_conditional_rep<S: Scalar>(
    p: &CorrelationVector<S>,
    require_nonsignaling: bool,
) -> Result<ConditionalRep<S>, RepError> {
    let scenario = p.scenario();
    let n = scenario.n();
    if n > CONDITIONAL_BUILDER_MAX_EVENTS {
        return Err(RepError::TooManyEvents { n, cap: CONDITIONAL_BUILDER_MAX_EVENTS });
    }
    let admissibility = check_admissibility(p);
    if !admissibility.admissible {
        let detail: Vec<String> =
            admissibility.violations.iter().map(|v| v.reason.clone()).collect();
        return Err(RepError::Inadmissible(detail.join("; ")));
    }

    let contexts = 1u32 << n;
    let num_w = (contexts as usize) * (contexts as usize);
    // variable layout: w(sigma, omega) at sigma * 2^n + omega, then t
    let t_var = num_w;
    let var = |sigma: u32, omega: u32| (sigma as usize) * (contexts as usize) + omega as usize;
    let bit = |bits: u32, i: usize| (bits >> (n - i)) & 1 == 1;

    let mut lp = LinearProgram::new(num_w + 1);

    let mut row = vec![S::one(); num_w];
    row.push(S::zero());
    lp.add_row(row, Rel::Eq, S::one());

    for i in 1..=n {
        let mut row = vec![S::zero(); num_w + 1];
        for sigma in 0..contexts {
            if !bit(sigma, i) {
                continue;
            }
            for omega in 0..contexts {
                let mut c = -p.single(i).clone();
                if bit(omega, i) {
                    c = c + S::one();
                }
                row[var(sigma, omega)] = c;
            }
        }
        lp.add_row(row, Rel::Eq, S::zero());

        let mut bound = vec![S::zero(); num_w + 1];
        for sigma in 0..contexts {
            if !bit(sigma, i) {
                continue;
            }
            for omega in 0..contexts {
                bound[var(sigma, omega)] = S::one();
            }
        }
        bound[t_var] = -S::one();
        lp.add_row(bound, Rel::Ge, S::zero());
    }

    for &(i, j) in scenario.pairs() {
        let pij = p.pair(i, j).unwrap().clone();
        let mut row = vec![S::zero(); num_w + 1];
        for sigma in 0..contexts {
            if !(bit(sigma, i) && bit(sigma, j)) {
                continue;
            }
            for omega in 0..contexts {
                let mut c = -pij.clone();
                if bit(omega, i) && bit(omega, j) {
                    c = c + S::one();
                }
                row[var(sigma, omega)] = c;
            }
        }
        lp.add_row(row, Rel::Eq, S::zero());

        if require_nonsignaling {
            for (x, other) in [(i, j), (j, i)] {
                let px = p.single(x).clone();
                let mut row = vec![S::zero(); num_w + 1];
                for sigma in 0..contexts {
                    if !(bit(sigma, x) && bit(sigma, other)) {
                        continue;
                    }
                    for omega in 0..contexts {
                        let mut c = -px.clone();
                        if bit(omega, x) {
                            c = c + S::one();
                        }
                        row[var(sigma, omega)] = c;
                    }
                }
                lp.add_row(row, Rel::Eq, S::zero());
            }
        }

        let mut bound = vec![S::zero(); num_w + 1];
        for sigma in 0..contexts {
            if bit(sigma, i) && bit(sigma, j) {
                for omega in 0..contexts {
                    bound[var(sigma, omega)] = S::one();
                }
            }
        }
        bound[t_var] = -S::one();
        lp.add_row(bound, Rel::Ge, S::zero());
    }

    let mut objective = vec![S::zero(); num_w + 1];
    objective[t_var] = S::one();
    lp.set_objective(objective);

    let (x, t) = match lp.solve()? {
        LpSolution::Feasible { x, objective } => (x, objective.unwrap_or_else(S::zero)),
        LpSolution::Infeasible { .. } => {
            return Err(RepError::Unrepresentable(
                "the representing equations have no solution".into(),
            ));
        }
    };
    if !t.is_positive() {
        return Err(RepError::Unrepresentable(format!(
            "every solution leaves some conditioning event at probability {} (needs > 0)",
            t.render()
        )));
    }

    let mut atoms = Vec::new();
    for sigma in 0..contexts {
        for omega in 0..contexts {
            let w = x[var(sigma, omega)].clone();
            if w.is_positive() {
                atoms.push((
                    format!("σ={}|ω={}", bits_label(sigma, n), bits_label(omega, n)),
                    w,
                ));
            }
        }
    }
    let mut space = FiniteProbSpace::new(atoms)?;
    for i in 1..=n {
        space.add_event_where(&format!("a{i}"), |label| {
            label.as_bytes()["σ=".len() + i - 1] == b'1'
        })?;
        let omega_off = "σ=".len() + n + "|ω=".len();
        space.add_event_where(&format!("A{i}"), |label| {
            label.as_bytes()[omega_off + i - 1] == b'1'
        })?;
    }
    let rep = ConditionalRep::new(space, scenario.clone())?;

    let verification = verify_conditional_rep(&rep, p)?;
    if !verification.ok {
        let bad: Vec<String> = verification
            .checks
            .iter()
            .filter(|c| !c.ok)
            .map(|c| format!("{} = {} (wanted {})", c.name, c.got.render(), c.expected.render()))
            .collect();
        return Err(RepError::ReconstructionMismatch {
            what: "conditional representation".into(),
            expected: "all represented conditionals".into(),
            got: bad.join("; "),
        });
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Rational;
    use crate::polytope::product_expansion;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_fraction(n, d)
    }

    fn vec2(p1: Rational, p2: Rational, p12: Rational) -> CorrelationVector<Rational> {
        CorrelationVector::new(Scenario::two_events(), vec![p1, p2], vec![p12]).unwrap()
    }

    /// The six-atom conditional space for (2/3, 2/3; 1/5) with measurement
    /// events, exactly as tabulated.
    fn signaling_witness() -> ConditionalRep<Rational> {
        let atoms: Vec<(String, Rational)> = vec![
            ("σ=11|ω=11".into(), r(1, 25)),
            ("σ=11|ω=00".into(), r(4, 25)),
            ("σ=01|ω=01".into(), r(9, 25)),
            ("σ=10|ω=10".into(), r(9, 25)),
            ("σ=01|ω=00".into(), r(1, 25)),
            ("σ=10|ω=00".into(), r(1, 25)),
        ];
        let mut space = FiniteProbSpace::new(atoms).unwrap();
        space.add_event_by_labels("a1", &["σ=11|ω=11", "σ=11|ω=00", "σ=10|ω=10", "σ=10|ω=00"]).unwrap();
        space.add_event_by_labels("a2", &["σ=11|ω=11", "σ=11|ω=00", "σ=01|ω=01", "σ=01|ω=00"]).unwrap();
        space.add_event_by_labels("A1", &["σ=11|ω=11", "σ=10|ω=10"]).unwrap();
        space.add_event_by_labels("A2", &["σ=11|ω=11", "σ=01|ω=01"]).unwrap();
        ConditionalRep::new(space, Scenario::two_events()).unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(matches!(
            FiniteProbSpace::<Rational>::new(vec![]),
            Err(RepError::EmptySpace)
        ));
        assert!(matches!(
            FiniteProbSpace::new(vec![("x".into(), r(1, 2))]),
            Err(RepError::WeightSumNotOne { .. })
        ));
        assert!(matches!(
            FiniteProbSpace::new(vec![("x".into(), r(3, 2)), ("y".into(), r(-1, 2))]),
            Err(RepError::NegativeWeight { .. })
        ));
        assert!(matches!(
            FiniteProbSpace::new(vec![("x".into(), r(1, 2)), ("x".into(), r(1, 2))]),
            Err(RepError::DuplicateAtom(..))
        ));
        let mut s = FiniteProbSpace::new(vec![("x".into(), r(1, 1))]).unwrap();
        s.add_event_by_labels("E", &["x"]).unwrap();
        assert!(matches!(
            s.add_event_by_labels("E", &["x"]),
            Err(RepError::DuplicateEvent(..))
        ));
        assert!(matches!(
            s.cond_prob(&["E"], &["missing"]),
            Err(RepError::UnknownEvent(..))
        ));
    }

    #[test]
    fn kolmogorov_rep_from_the_paper_expansion() {
        let p = vec2(r(2, 5), r(2, 5), r(1, 5));
        let lambda = vec![
            (0b00u32, r(2, 5)),
            (0b01, r(1, 5)),
            (0b10, r(1, 5)),
            (0b11, r(1, 5)),
        ];
        let space = build_kolmogorov_rep(&p, &lambda).unwrap();
        assert_eq!(space.atom_count(), 4);
        assert_eq!(space.prob("A1").unwrap(), r(2, 5));
        assert_eq!(space.prob("A2").unwrap(), r(2, 5));
        assert_eq!(space.prob_all(&["A1", "A2"]).unwrap(), r(1, 5));
    }

    #[test]
    fn kolmogorov_rep_of_a_vertex_is_a_point_mass() {
        let p = vec2(r(1, 1), r(1, 1), r(1, 1));
        let lambda = vec![(0b11u32, r(1, 1)), (0b00, r(0, 1))];
        let space = build_kolmogorov_rep(&p, &lambda).unwrap();
        assert_eq!(space.atom_count(), 1);
        assert_eq!(space.atoms()[0], "ε=11");
    }

    #[test]
    fn kolmogorov_rep_rejects_wrong_coefficients() {
        let p = vec2(r(2, 5), r(2, 5), r(1, 5));
        let wrong = vec![(0b00u32, r(1, 2)), (0b11, r(1, 2))];
        assert!(matches!(
            build_kolmogorov_rep(&p, &wrong),
            Err(RepError::ReconstructionMismatch { .. })
        ));
        let not_convex = vec![(0b00u32, r(2, 1)), (0b11, r(-1, 1))];
        assert!(matches!(
            build_kolmogorov_rep(&p, &not_convex),
            Err(RepError::NotConvex(..))
        ));
    }

    #[test]
    fn kolmogorov_rep_from_product_expansion() {
        let p = vec2(r(1, 4), r(1, 4), r(1, 16));
        let lambda = product_expansion(&p, &r(0, 1)).unwrap();
        let space = build_kolmogorov_rep(&p, &lambda).unwrap();
        assert_eq!(space.prob("A1").unwrap(), r(1, 4));
    }

    #[test]
    fn admissibility_conditions() {
        assert!(!check_admissibility(&vec2(r(1, 1), r(1, 1), r(0, 1))).admissible);
        assert!(!check_admissibility(&vec2(r(0, 1), r(1, 2), r(1, 4))).admissible);
        assert!(check_admissibility(&vec2(r(0, 1), r(1, 2), r(0, 1))).admissible);
        assert!(check_admissibility(&vec2(r(2, 3), r(2, 3), r(1, 5))).admissible);
        assert!(check_admissibility(&vec2(r(1, 1), r(1, 1), r(1, 1))).admissible);
    }

    #[test]
    fn tabulated_witness_realizes_the_paper_vector_and_signals() {
        let rep = signaling_witness();
        assert_eq!(rep.space().prob("a1").unwrap(), r(3, 5));
        assert_eq!(rep.space().prob("a2").unwrap(), r(3, 5));
        assert_eq!(rep.realized_vector().unwrap(), vec2(r(2, 3), r(2, 3), r(1, 5)));

        let ns = check_nonsignaling(&rep).unwrap();
        assert!(!ns.nonsignaling);
        let pair = &ns.pairs[0];
        assert!(pair.signaling);
        assert_eq!(pair.single_given_own.0, r(2, 3));
        // conditioning on both measurements drops the outcome probability
        assert_eq!(pair.single_given_both.0, r(1, 5));
        assert_eq!(pair.single_given_both.1, r(1, 5));
    }

    #[test]
    fn builder_reaches_the_signaling_example() {
        let p = vec2(r(2, 3), r(2, 3), r(1, 5));
        let rep = build_conditional_rep(&p, false).unwrap();
        assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
        // outside the Frechet band, every witness must signal
        assert!(!check_nonsignaling(&rep).unwrap().nonsignaling);
    }

    #[test]
    fn builder_reaches_heavy_pairs_with_light_singles() {
        // requires a non-uniform setting distribution
        let p = vec2(r(1, 10), r(1, 10), r(9, 10));
        let rep = build_conditional_rep(&p, false).unwrap();
        assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
    }

    #[test]
    fn builder_respects_the_nonsignaling_flag() {
        let p = vec2(r(2, 5), r(2, 5), r(1, 5));
        let rep = build_conditional_rep(&p, true).unwrap();
        assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
        assert!(check_nonsignaling(&rep).unwrap().nonsignaling);
    }

    #[test]
    fn builder_rejects_inadmissible_vectors() {
        let p = vec2(r(1, 1), r(1, 1), r(0, 1));
        assert!(matches!(
            build_conditional_rep(&p, false),
            Err(RepError::Inadmissible(..))
        ));
    }

    #[test]
    fn nonsignaling_plus_frechet_violation_is_unrepresentable() {
        // p1 + p2 - 1 = 1/3 > 1/5 = p12: no non-signaling witness exists.
        let p = vec2(r(2, 3), r(2, 3), r(1, 5));
        assert!(matches!(
            build_conditional_rep(&p, true),
            Err(RepError::Unrepresentable(..))
        ));
    }

    #[test]
    fn setting_context_masses_partition_the_space() {
        let p = vec2(r(2, 3), r(2, 3), r(1, 5));
        let rep = build_conditional_rep(&p, false).unwrap();
        let total: Rational = (0..4u32)
            .map(|pat| rep.setting_context_prob(pat))
            .fold(r(0, 1), |a, b| a + b);
        assert_eq!(total, r(1, 1));
    }
}

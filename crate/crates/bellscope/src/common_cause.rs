//! Common cause decompositions and screening verification.
//!
//! A decomposition writes a correlation vector as a convex mixture of
//! independence vectors. The propensity builder turns a decomposition plus a
//! non-signaling conditional representation into one probability space whose
//! cell partition screens off every measured pair and is independent of the
//! measurement choices; when the components are deterministic the cells
//! collapse back to a plain Kolmogorovian representation.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::arith::Scalar;
use crate::classical_rep::{
    bits_label, build_kolmogorov_rep, check_nonsignaling, ConditionalRep, FiniteProbSpace,
    RepError, CONDITIONAL_BUILDER_MAX_EVENTS,
};
use crate::polytope::{membership, Certificate, PolytopeError};
use crate::scenario::{CorrelationVector, Scenario, VertexFamily};
use crate::simplex::{LinearProgram, LpError, LpSolution, Rel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommonCauseError {
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("a decomposition needs at least one component")]
    EmptyDecomposition,
    #[error("component count {components} does not match weight count {weights}")]
    LengthMismatch { components: usize, weights: usize },
    #[error("weights are not convex: {0}")]
    NotConvex(String),
    #[error("component {index} is not an independence vector")]
    NotIndependent { index: usize },
    #[error("duplicate cell key `{0}`")]
    DuplicateCell(String),
    #[error("all parts must live on the same scenario")]
    ScenarioMismatch,
    #[error("mixture misses the target at {coord}: expected {expected}, got {got}")]
    MixtureMismatch { coord: String, expected: String, got: String },
    #[error("vector admits no deterministic decomposition: {0}")]
    NotClassical(String),
    #[error("no decomposition onto the given components: {0}")]
    NoDecomposition(String),
    #[error("the input representation signals between the wings")]
    SignalingRep,
    #[error("the representation realizes a different vector at {coord}: expected {expected}, got {got}")]
    RepMismatch { coord: String, expected: String, got: String },
    #[error("extraction needs deterministic cells; cell `{0}` is indeterministic")]
    NotDeterministic(String),
    #[error("screening re-check failed: {0}")]
    ScreeningFailed(String),
    #[error("partition cells `{0}` and `{1}` overlap")]
    PartitionNotDisjoint(String, String),
    #[error("partition does not cover the space")]
    PartitionNotCovering,
    #[error("partition cell `{0}` has probability zero")]
    PartitionCellZero(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

fn mode_tol<S: Scalar>() -> S {
    if S::EXACT {
        S::zero()
    } else {
        S::from_fraction(1, 1_000_000_000)
    }
}

/// One factorization condition `p(A_i & A_j | C ...) = p(A_i | C ...) p(A_j | C ...)`
/// evaluated in a given cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationCheck<S> {
    pub pair: (usize, usize),
    pub cell: String,
    pub joint: S,
    pub left: S,
    pub right: S,
    pub residual: S,
    pub ok: bool,
}

/// One independence condition `p(C & ctx) = p(C) p(ctx)` between a cell and
/// a measurement context.
#[derive(Debug, Clone, PartialEq)]
pub struct ConspiracyCheck<S> {
    pub cell: String,
    pub context: String,
    pub residual: S,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport<S> {
    pub factorization: Vec<FactorizationCheck<S>>,
    pub no_conspiracy: Vec<ConspiracyCheck<S>>,
    pub screens_off: bool,
}

impl<S> ScreeningReport<S> {
    pub fn worst_factorization(&self) -> Option<&FactorizationCheck<S>>
    where
        S: PartialOrd,
    {
        self.factorization
            .iter()
            .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
    }
}

/// Checks that the named partition screens off every scenario pair, and
/// (when setting events are given) that cells are independent of the
/// measurement contexts. The partition must be disjoint, cover the space,
/// and give every cell positive probability.
pub fn verify_screening<S: Scalar>(
    space: &FiniteProbSpace<S>,
    scenario: &Scenario,
    outcomes: &[String],
    settings: Option<&[String]>,
    partition: &[String],
) -> Result<ScreeningReport<S>, CommonCauseError> {
    let n = scenario.n();
    assert_eq!(outcomes.len(), n, "one outcome event per scenario event");
    if let Some(s) = settings {
        assert_eq!(s.len(), n, "one setting event per scenario event");
    }

    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for (k, name) in partition.iter().enumerate() {
        let cell = space
            .event(name)
            .ok_or_else(|| RepError::UnknownEvent(name.clone()))?;
        for other in &partition[..k] {
            let prev = space.event(other).expect("checked above");
            if cell.intersection(prev).next().is_some() {
                return Err(CommonCauseError::PartitionNotDisjoint(
                    other.clone(),
                    name.clone(),
                ));
            }
        }
        if !space.prob(name)?.is_positive() {
            return Err(CommonCauseError::PartitionCellZero(name.clone()));
        }
        covered.extend(cell.iter().copied());
    }
    if covered.len() != space.atom_count() {
        return Err(CommonCauseError::PartitionNotCovering);
    }

    let mut factorization = Vec::new();
    for &(i, j) in scenario.pairs() {
        let out_i = outcomes[i - 1].as_str();
        let out_j = outcomes[j - 1].as_str();
        for cell in partition {
            let (joint, left, right) = match settings {
                Some(s) => {
                    let set_i = s[i - 1].as_str();
                    let set_j = s[j - 1].as_str();
                    (
                        space.cond_prob(&[out_i, out_j], &[cell, set_i, set_j])?,
                        space.cond_prob(&[out_i], &[cell, set_i])?,
                        space.cond_prob(&[out_j], &[cell, set_j])?,
                    )
                }
                None => (
                    space.cond_prob(&[out_i, out_j], &[cell])?,
                    space.cond_prob(&[out_i], &[cell])?,
                    space.cond_prob(&[out_j], &[cell])?,
                ),
            };
            let residual = (joint.clone() - left.clone() * right.clone()).abs();
            let ok = residual.is_zero();
            factorization.push(FactorizationCheck {
                pair: (i, j),
                cell: cell.clone(),
                joint,
                left,
                right,
                residual,
                ok,
            });
        }
    }

    let mut no_conspiracy = Vec::new();
    if let Some(s) = settings {
        let mut contexts: Vec<(String, Vec<&str>)> = Vec::new();
        for i in 1..=n {
            contexts.push((format!("a{i}"), vec![s[i - 1].as_str()]));
        }
        for &(i, j) in scenario.pairs() {
            contexts.push((
                format!("a{i}&a{j}"),
                vec![s[i - 1].as_str(), s[j - 1].as_str()],
            ));
        }
        for cell in partition {
            let p_cell = space.prob(cell)?;
            for (label, events) in &contexts {
                let p_ctx = space.prob_all(events)?;
                let mut both = vec![cell.as_str()];
                both.extend(events.iter().copied());
                let p_both = space.prob_all(&both)?;
                let residual = (p_both - p_cell.clone() * p_ctx).abs();
                let ok = residual.is_zero();
                no_conspiracy.push(ConspiracyCheck {
                    cell: cell.clone(),
                    context: label.clone(),
                    residual,
                    ok,
                });
            }
        }
    }

    let screens_off =
        factorization.iter().all(|c| c.ok) && no_conspiracy.iter().all(|c| c.ok);
    Ok(ScreeningReport { factorization, no_conspiracy, screens_off })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionKind {
    /// Every component is a 0/1 vertex vector.
    Deterministic,
    /// Components are general independence vectors.
    Indeterministic,
}

impl std::fmt::Display for DecompositionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecompositionKind::Deterministic => "deterministic",
            DecompositionKind::Indeterministic => "indeterministic",
        })
    }
}

/// A validated convex mixture of independence vectors equal to a target
/// correlation vector. Each component carries a cell key used to label the
/// corresponding common-cause cell.
#[derive(Debug, Clone)]
pub struct CommonCauseDecomposition<S: Scalar> {
    keys: Vec<u32>,
    weights: Vec<S>,
    vectors: Vec<CorrelationVector<S>>,
    mixture: CorrelationVector<S>,
    kind: DecompositionKind,
}

impl<S: Scalar> CommonCauseDecomposition<S> {
    /// Validates an explicitly given decomposition of `p`. Keys default to
    /// the component's truth assignment when all components are vertex
    /// vectors, otherwise to the component index.
    pub fn new(
        weights: Vec<S>,
        vectors: Vec<CorrelationVector<S>>,
        p: &CorrelationVector<S>,
    ) -> Result<Self, CommonCauseError> {
        let tol = mode_tol::<S>();
        let deterministic = vectors.iter().all(|v| {
            v.singles()
                .iter()
                .all(|s| (s.clone() - S::zero()).abs() <= tol || (s.clone() - S::one()).abs() <= tol)
        });
        let n = p.scenario().n();
        let keys = if deterministic {
            vectors
                .iter()
                .map(|v| {
                    (1..=n).fold(0u32, |acc, i| {
                        (acc << 1) | u32::from((v.single(i).clone() - S::one()).abs() <= tol)
                    })
                })
                .collect()
        } else {
            (0..vectors.len() as u32).collect()
        };
        Self::with_keys(keys, weights, vectors, p)
    }

    /// As `new`, with explicit cell keys (printed as bit patterns in cell
    /// labels; must be distinct).
    pub fn with_keys(
        keys: Vec<u32>,
        weights: Vec<S>,
        vectors: Vec<CorrelationVector<S>>,
        p: &CorrelationVector<S>,
    ) -> Result<Self, CommonCauseError> {
        if vectors.is_empty() {
            return Err(CommonCauseError::EmptyDecomposition);
        }
        if weights.len() != vectors.len() || keys.len() != vectors.len() {
            return Err(CommonCauseError::LengthMismatch {
                components: vectors.len(),
                weights: weights.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for k in &keys {
            if !seen.insert(*k) {
                return Err(CommonCauseError::DuplicateCell(k.to_string()));
            }
        }

        let scenario = p.scenario();
        let tol = mode_tol::<S>();
        let mut sum = S::zero();
        for w in &weights {
            if w.is_negative() {
                return Err(CommonCauseError::NotConvex(format!(
                    "negative weight {}",
                    w.render()
                )));
            }
            sum = sum + w.clone();
        }
        if !(sum.clone() - S::one()).is_zero() {
            return Err(CommonCauseError::NotConvex(format!(
                "weights sum to {}",
                sum.render()
            )));
        }

        for (index, v) in vectors.iter().enumerate() {
            if v.scenario() != scenario {
                return Err(CommonCauseError::ScenarioMismatch);
            }
            if !v.is_independence_vector(&tol) {
                return Err(CommonCauseError::NotIndependent { index });
            }
        }

        let dim = scenario.dim();
        let target = p.coordinates();
        let names = coordinate_names(scenario);
        for k in 0..dim {
            let mixed = weights
                .iter()
                .zip(&vectors)
                .fold(S::zero(), |acc, (w, v)| {
                    acc + w.clone() * v.coordinates()[k].clone()
                });
            if !(mixed.clone() - target[k].clone()).is_zero() {
                return Err(CommonCauseError::MixtureMismatch {
                    coord: names[k].clone(),
                    expected: target[k].render(),
                    got: mixed.render(),
                });
            }
        }

        let deterministic = vectors.iter().all(|v| {
            v.singles()
                .iter()
                .all(|s| (s.clone() - S::zero()).abs() <= tol || (s.clone() - S::one()).abs() <= tol)
        });
        let kind = if deterministic {
            DecompositionKind::Deterministic
        } else {
            DecompositionKind::Indeterministic
        };
        Ok(CommonCauseDecomposition { keys, weights, vectors, mixture: p.clone(), kind })
    }

    pub fn keys(&self) -> &[u32] {
        &self.keys
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn vectors(&self) -> &[CorrelationVector<S>] {
        &self.vectors
    }

    pub fn mixture(&self) -> &CorrelationVector<S> {
        &self.mixture
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    /// Key width used when printing cell labels.
    fn key_width(&self) -> usize {
        let n = self.mixture.scenario().n();
        self.keys
            .iter()
            .map(|k| (32 - k.leading_zeros()) as usize)
            .max()
            .unwrap_or(1)
            .max(n)
    }

    pub fn cell_label(&self, index: usize) -> String {
        format!("C={}", bits_label(self.keys[index], self.key_width()))
    }
}

fn coordinate_names(scenario: &Scenario) -> Vec<String> {
    let mut names: Vec<String> = (1..=scenario.n()).map(|i| format!("p{i}")).collect();
    names.extend(scenario.pairs().iter().map(|&(i, j)| format!("p{i},{j}")));
    names
}

/// Decomposes `p` into classical vertex vectors by solving membership in
/// the classical hull; fails with the separating certificate's description
/// when `p` lies outside.
pub fn decompose_deterministic<S: Scalar>(
    p: &CorrelationVector<S>,
) -> Result<CommonCauseDecomposition<S>, CommonCauseError> {
    let result = membership(p, VertexFamily::Classical)?;
    if !result.inside {
        let why = match &result.certificate {
            Some(Certificate::Facet(f)) => {
                let bound = |b: &Option<S>| {
                    b.as_ref().map_or_else(|| "_".to_string(), Scalar::render)
                };
                format!(
                    "violates {} with value {} outside [{}, {}]",
                    f.id,
                    f.value.render(),
                    bound(&f.lower),
                    bound(&f.upper)
                )
            }
            Some(Certificate::Functional(_)) => {
                "a separating functional witnesses exclusion".to_string()
            }
            None => "outside the classical hull".to_string(),
        };
        return Err(CommonCauseError::NotClassical(why));
    }
    let coeffs = result.coefficients.expect("inside implies coefficients");
    let mut keys = Vec::new();
    let mut weights = Vec::new();
    let mut vectors = Vec::new();
    for (vertex, w) in coeffs {
        keys.push(vertex.singles_bits());
        vectors.push(vertex.to_vector::<S>());
        weights.push(w);
    }
    CommonCauseDecomposition::with_keys(keys, weights, vectors, p)
}

/// Searches for convex weights putting `p` in the hull of the given
/// independence vectors. Returns some valid decomposition when one exists;
/// the weight vector is a basic LP solution and need not be unique.
pub fn decompose_indeterministic<S: Scalar>(
    p: &CorrelationVector<S>,
    components: &[CorrelationVector<S>],
) -> Result<CommonCauseDecomposition<S>, CommonCauseError> {
    if components.is_empty() {
        return Err(CommonCauseError::EmptyDecomposition);
    }
    let tol = mode_tol::<S>();
    for (index, v) in components.iter().enumerate() {
        if v.scenario() != p.scenario() {
            return Err(CommonCauseError::ScenarioMismatch);
        }
        if !v.is_independence_vector(&tol) {
            return Err(CommonCauseError::NotIndependent { index });
        }
    }

    let m = components.len();
    let mut lp = LinearProgram::new(m);
    let coords: Vec<Vec<S>> = components.iter().map(|v| v.coordinates()).collect();
    for (k, target) in p.coordinates().into_iter().enumerate() {
        let row: Vec<S> = coords.iter().map(|c| c[k].clone()).collect();
        lp.add_row(row, Rel::Eq, target);
    }
    lp.add_row(vec![S::one(); m], Rel::Eq, S::one());

    match lp.solve()? {
        LpSolution::Feasible { x, .. } => {
            CommonCauseDecomposition::new(x, components.to_vec(), p)
        }
        LpSolution::Infeasible { .. } => Err(CommonCauseError::NoDecomposition(
            "the component hull does not contain the vector".into(),
        )),
    }
}

/// A probability space carrying outcome events, setting events, and a
/// common-cause partition whose cells reproduce the decomposition's
/// components as conditional vectors.
#[derive(Debug, Clone)]
pub struct CommonCauseExplanation<S: Scalar> {
    pub space: FiniteProbSpace<S>,
    pub scenario: Scenario,
    pub outcome_events: Vec<String>,
    pub setting_events: Vec<String>,
    pub partition: Vec<String>,
    pub cell_vectors: Vec<(String, CorrelationVector<S>)>,
    pub kind: DecompositionKind,
    pub screening: ScreeningReport<S>,
}

/// Builds the common-cause space for `p` from a decomposition and a
/// non-signaling conditional representation supplying the measurement
/// distribution. Atoms are (settings, cell, outcomes) triples; cells are
/// independent of the settings and outcomes are independent within each
/// cell, so screening holds by construction (the returned report is the
/// recomputed check on the finished space).
pub fn build_propensity_explanation<S: Scalar>(
    p: &CorrelationVector<S>,
    decomposition: &CommonCauseDecomposition<S>,
    rep: &ConditionalRep<S>,
) -> Result<CommonCauseExplanation<S>, CommonCauseError> {
    let scenario = p.scenario();
    let n = scenario.n();
    if n > CONDITIONAL_BUILDER_MAX_EVENTS {
        return Err(CommonCauseError::Rep(RepError::TooManyEvents {
            n,
            cap: CONDITIONAL_BUILDER_MAX_EVENTS,
        }));
    }
    if rep.scenario() != scenario || decomposition.mixture().scenario() != scenario {
        return Err(CommonCauseError::ScenarioMismatch);
    }

    if !check_nonsignaling(rep)?.nonsignaling {
        return Err(CommonCauseError::SignalingRep);
    }
    let realized = rep.realized_vector()?;
    let names = coordinate_names(scenario);
    for (k, (got, want)) in realized
        .coordinates()
        .into_iter()
        .zip(p.coordinates())
        .enumerate()
    {
        if !(got.clone() - want.clone()).is_zero() {
            return Err(CommonCauseError::RepMismatch {
                coord: names[k].clone(),
                expected: want.render(),
                got: got.render(),
            });
        }
    }
    for (k, (got, want)) in decomposition
        .mixture()
        .coordinates()
        .into_iter()
        .zip(p.coordinates())
        .enumerate()
    {
        if !(got.clone() - want.clone()).is_zero() {
            return Err(CommonCauseError::MixtureMismatch {
                coord: names[k].clone(),
                expected: want.render(),
                got: got.render(),
            });
        }
    }

    let contexts = 1u32 << n;
    let bit = |bits: u32, i: usize| (bits >> (n - i)) & 1 == 1;
    let mut atoms: Vec<(String, S)> = Vec::new();
    let mut cell_names: Vec<String> = Vec::new();
    let mut cell_vectors: Vec<(String, CorrelationVector<S>)> = Vec::new();

    for (idx, ((w, v), _key)) in decomposition
        .weights()
        .iter()
        .zip(decomposition.vectors())
        .zip(decomposition.keys())
        .enumerate()
    {
        if !w.is_positive() {
            continue;
        }
        let cell = decomposition.cell_label(idx);
        cell_names.push(cell.clone());
        cell_vectors.push((cell.clone(), v.clone()));
        let cell_bits = &cell["C=".len()..];

        for sigma in 0..contexts {
            let mass = rep.setting_context_prob(sigma);
            if !mass.is_positive() {
                continue;
            }
            'outcome: for omega in 0..contexts {
                let mut weight = mass.clone() * w.clone();
                for i in 1..=n {
                    if bit(omega, i) && !bit(sigma, i) {
                        continue 'outcome;
                    }
                    if !bit(sigma, i) {
                        continue;
                    }
                    let r = v.single(i).clone();
                    weight = weight
                        * if bit(omega, i) { r } else { S::one() - r };
                }
                if weight.is_positive() {
                    atoms.push((
                        format!(
                            "σ={}|ε={}|ω={}",
                            bits_label(sigma, n),
                            cell_bits,
                            bits_label(omega, n)
                        ),
                        weight,
                    ));
                }
            }
        }
    }

    let mut space = FiniteProbSpace::new(atoms)?;
    let omega_off = |label: &str| label.rfind("|ω=").expect("atom label shape") + "|ω=".len();
    for i in 1..=n {
        space.add_event_where(&format!("a{i}"), |label| {
            label.as_bytes()["σ=".len() + i - 1] == b'1'
        })?;
        space.add_event_where(&format!("A{i}"), |label| {
            label.as_bytes()[omega_off(label) + i - 1] == b'1'
        })?;
    }
    for cell in &cell_names {
        let marker = format!("|ε={}|", &cell["C=".len()..]);
        space.add_event_where(cell, |label| label.contains(&marker))?;
    }

    let outcome_events: Vec<String> = (1..=n).map(|i| format!("A{i}")).collect();
    let setting_events: Vec<String> = (1..=n).map(|i| format!("a{i}")).collect();
    let screening = verify_screening(
        &space,
        scenario,
        &outcome_events,
        Some(&setting_events),
        &cell_names,
    )?;

    Ok(CommonCauseExplanation {
        space,
        scenario: scenario.clone(),
        outcome_events,
        setting_events,
        partition: cell_names,
        cell_vectors,
        kind: decomposition.kind(),
        screening,
    })
}

impl<S: Scalar> CommonCauseExplanation<S> {
    /// The vector the explanation realizes through its conditionals.
    pub fn realized_vector(&self) -> Result<CorrelationVector<S>, CommonCauseError> {
        let rep = ConditionalRep::new(self.space.clone(), self.scenario.clone())?;
        Ok(rep.realized_vector()?)
    }

    /// Probability of a partition cell.
    pub fn cell_prob(&self, cell: &str) -> Result<S, CommonCauseError> {
        Ok(self.space.prob(cell)?)
    }
}

/// Collapses a deterministic explanation to the Kolmogorovian
/// representation carried by its cells: one atom per cell, weighted by the
/// cell probability, with `A_i` holding where the cell's component puts
/// probability one. Screening is re-verified on the way.
pub fn extract_kolmogorov_from_propensity<S: Scalar>(
    explanation: &CommonCauseExplanation<S>,
) -> Result<FiniteProbSpace<S>, CommonCauseError> {
    let n = explanation.scenario.n();
    let tol = mode_tol::<S>();

    let screening = verify_screening(
        &explanation.space,
        &explanation.scenario,
        &explanation.outcome_events,
        Some(&explanation.setting_events),
        &explanation.partition,
    )?;
    if !screening.screens_off {
        let worst = screening
            .worst_factorization()
            .map(|c| {
                format!(
                    "pair ({}, {}) in {} has residual {}",
                    c.pair.0,
                    c.pair.1,
                    c.cell,
                    c.residual.render()
                )
            })
            .unwrap_or_else(|| "a no-conspiracy condition fails".into());
        return Err(CommonCauseError::ScreeningFailed(worst));
    }

    let mut lambda: BTreeMap<u32, S> = BTreeMap::new();
    for (cell, v) in &explanation.cell_vectors {
        let mut assignment = 0u32;
        for i in 1..=n {
            let s = v.single(i);
            if (s.clone() - S::one()).abs() <= tol {
                assignment = (assignment << 1) | 1;
            } else if s.clone().abs() <= tol {
                assignment <<= 1;
            } else {
                return Err(CommonCauseError::NotDeterministic(cell.clone()));
            }
        }
        let w = explanation.cell_prob(cell)?;
        let entry = lambda.entry(assignment).or_insert_with(S::zero);
        *entry = entry.clone() + w;
    }

    let p = explanation.realized_vector()?;
    let lambda: Vec<(u32, S)> = lambda.into_iter().collect();
    Ok(build_kolmogorov_rep(&p, &lambda)?)
}

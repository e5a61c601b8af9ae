//! Convex-hull membership for the three vertex families, named facet systems
//! for the two scenarios whose facet structure is built in, and the product
//! expansion of independence vectors.
//!
//! Membership is decided by exact Phase-I simplex feasibility of
//! `sum_v lambda_v v = p, sum lambda = 1, lambda >= 0` over the family's
//! vertex list in enumeration order. Inside verdicts carry the convex
//! coefficients; outside verdicts carry a certificate, preferring a violated
//! named facet over the raw separating functional when the scenario has one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arith::{Rational, Scalar};
use crate::scenario::{
    enumerate_all_vertices, enumerate_classical_vertices, enumerate_quantum_vertices,
    CorrelationVector, Scenario, ScenarioError, VertexFamily, VertexVector,
};
use crate::simplex::{LinearProgram, LpError, LpSolution, Rel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("no built-in facet system for scenario {0}")]
    UnsupportedScenario(String),
    #[error("not an independence vector: p{i}{j} differs from p{i}*p{j} by {delta}")]
    NotIndependent { i: usize, j: usize, delta: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("membership LP reported an outside verdict but every named facet holds")]
    CertificateGap,
}

/// One evaluated inequality: `lower <= value <= upper` (absent bound = none).
#[derive(Debug, Clone, PartialEq)]
pub struct FacetCheck<S> {
    pub id: String,
    pub value: S,
    pub lower: Option<S>,
    pub upper: Option<S>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetReport<S> {
    pub checks: Vec<FacetCheck<S>>,
    pub all_satisfied: bool,
}

impl<S: Scalar> FacetReport<S> {
    pub fn first_violated(&self) -> Option<&FacetCheck<S>> {
        self.checks.iter().find(|c| !c.satisfied)
    }

    pub fn check(&self, id: &str) -> Option<&FacetCheck<S>> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Affine functional separating the point from the hull:
/// `f(x) = singles . x_s + pairs . x_p + offset` with `f(v) <= 0` on every
/// family vertex and `f(p) = value_at_point > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingFunctional<S> {
    pub singles: Vec<S>,
    pub pairs: Vec<S>,
    pub offset: S,
    pub value_at_point: S,
}

impl<S: Scalar> SeparatingFunctional<S> {
    pub fn evaluate(&self, v: &CorrelationVector<S>) -> S {
        let mut acc = self.offset.clone();
        for (c, x) in self.singles.iter().zip(v.singles()) {
            acc = acc + c.clone() * x.clone();
        }
        for (c, x) in self.pairs.iter().zip(v.pairs()) {
            acc = acc + c.clone() * x.clone();
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate<S> {
    Facet(FacetCheck<S>),
    Functional(SeparatingFunctional<S>),
}

#[derive(Debug, Clone)]
pub struct MembershipResult<S> {
    pub family: VertexFamily,
    pub inside: bool,
    /// Convex coefficients over family vertices; present iff inside.
    /// Only nonzero weights are listed, in vertex enumeration order.
    pub coefficients: Option<Vec<(VertexVector, S)>>,
    /// Present iff outside.
    pub certificate: Option<Certificate<S>>,
}

impl<S: Scalar> MembershipResult<S> {
    /// Weight of the vertex with the given label, if present.
    pub fn coefficient(&self, label: &str) -> Option<&S> {
        self.coefficients
            .as_ref()?
            .iter()
            .find(|(v, _)| v.label() == label)
            .map(|(_, w)| w)
    }

    /// Recombines the stored coefficients; `None` when outside.
    pub fn reconstruct(&self) -> Option<CorrelationVector<S>> {
        let coeffs = self.coefficients.as_ref()?;
        let scenario = coeffs.first()?.0.scenario().clone();
        let dim = scenario.dim();
        let mut acc = vec![S::zero(); dim];
        for (v, w) in coeffs {
            for (k, c) in v.to_vector::<S>().coordinates().into_iter().enumerate() {
                acc[k] = acc[k].clone() + w.clone() * c;
            }
        }
        let singles = acc[..scenario.n()].to_vec();
        let pairs = acc[scenario.n()..].to_vec();
        CorrelationVector::new(scenario, singles, pairs).ok()
    }
}

fn family_vertices(scenario: &Scenario, family: VertexFamily) -> Vec<VertexVector> {
    match family {
        VertexFamily::Classical => enumerate_classical_vertices(scenario),
        VertexFamily::Quantum => enumerate_quantum_vertices(scenario),
        VertexFamily::General => enumerate_all_vertices(scenario),
    }
}

/// Decides `p in hull(family vertices)` by LP feasibility.
pub fn membership<S: Scalar>(
    p: &CorrelationVector<S>,
    family: VertexFamily,
) -> Result<MembershipResult<S>, PolytopeError> {
    let scenario = p.scenario();
    let vertices = family_vertices(scenario, family);
    let dim = scenario.dim();
    let coords = p.coordinates();

    let mut lp = LinearProgram::new(vertices.len());
    for k in 0..dim {
        let row: Vec<S> = vertices
            .iter()
            .map(|v| {
                let n = scenario.n();
                let on = if k < n { v.single(k + 1) } else { v.pair_at(k - n) };
                if on {
                    S::one()
                } else {
                    S::zero()
                }
            })
            .collect();
        lp.add_row(row, Rel::Eq, coords[k].clone());
    }
    lp.add_row(vec![S::one(); vertices.len()], Rel::Eq, S::one());

    match lp.solve()? {
        LpSolution::Feasible { x, .. } => {
            let coefficients: Vec<(VertexVector, S)> = vertices
                .into_iter()
                .zip(x.into_iter())
                .filter(|(_, w)| !(w.clone() == S::zero()))
                .collect();
            Ok(MembershipResult {
                family,
                inside: true,
                coefficients: Some(coefficients),
                certificate: None,
            })
        }
        LpSolution::Infeasible { farkas } => {
            let certificate = pick_certificate(p, family, &farkas)?;
            Ok(MembershipResult { family, inside: false, coefficients: None, certificate: Some(certificate) })
        }
    }
}

fn pick_certificate<S: Scalar>(
    p: &CorrelationVector<S>,
    family: VertexFamily,
    farkas: &[S],
) -> Result<Certificate<S>, PolytopeError> {
    if family == VertexFamily::Classical && supported_facets(p.scenario()) {
        let report = evaluate_facets(p)?;
        if let Some(violated) = report.first_violated() {
            return Ok(Certificate::Facet(violated.clone()));
        }
        return Err(PolytopeError::CertificateGap);
    }
    let n = p.scenario().n();
    let dim = p.scenario().dim();
    let functional = SeparatingFunctional {
        singles: farkas[..n].to_vec(),
        pairs: farkas[n..dim].to_vec(),
        offset: farkas[dim].clone(),
        value_at_point: S::zero(),
    };
    let value = functional.evaluate(p);
    Ok(Certificate::Functional(SeparatingFunctional { value_at_point: value, ..functional }))
}

fn supported_facets(scenario: &Scenario) -> bool {
    *scenario == Scenario::two_events() || *scenario == Scenario::two_by_two()
}

/// Evaluates the built-in facet system. Supported scenarios: `(2, {(1,2)})`
/// and the four-event two-by-two scenario.
pub fn evaluate_facets<S: Scalar>(
    p: &CorrelationVector<S>,
) -> Result<FacetReport<S>, PolytopeError> {
    let scenario = p.scenario();
    if !supported_facets(scenario) {
        return Err(PolytopeError::UnsupportedScenario(scenario.to_string()));
    }

    let mut checks: Vec<FacetCheck<S>> = Vec::new();
    let mut push = |id: String, value: S, lower: Option<S>, upper: Option<S>| {
        let low_ok = lower
            .as_ref()
            .map(|b| !(b.clone() - value.clone()).is_positive())
            .unwrap_or(true);
        let up_ok = upper
            .as_ref()
            .map(|b| !(value.clone() - b.clone()).is_positive())
            .unwrap_or(true);
        checks.push(FacetCheck { id, value, lower, upper, satisfied: low_ok && up_ok });
    };

    for &(i, j) in scenario.pairs() {
        let pij = p.pair(i, j).expect("pair in scenario").clone();
        let pi = p.single(i).clone();
        let pj = p.single(j).clone();
        push(format!("p{i}{j}>=0"), pij.clone(), Some(S::zero()), None);
        push(format!("p{i}{j}<=p{i}"), pi.clone() - pij.clone(), Some(S::zero()), None);
        push(format!("p{i}{j}<=p{j}"), pj.clone() - pij.clone(), Some(S::zero()), None);
        push(
            format!("p{i}+p{j}-p{i}{j}<=1"),
            pi + pj - pij,
            None,
            Some(S::one()),
        );
    }
    for i in 1..=scenario.n() {
        push(format!("p{i}<=1"), p.single(i).clone(), None, Some(S::one()));
    }
    if *scenario == Scenario::two_by_two() {
        for (i, i2) in [(1usize, 2usize), (2, 1)] {
            for (j, j2) in [(3usize, 4usize), (4, 3)] {
                let expr = p.pair(i, j).unwrap().clone() + p.pair(i2, j).unwrap().clone()
                    + p.pair(i, j2).unwrap().clone()
                    - p.pair(i2, j2).unwrap().clone()
                    - p.single(i).clone()
                    - p.single(j).clone();
                push(
                    format!("CH({i},{i2};{j},{j2})"),
                    expr,
                    Some(-S::one()),
                    Some(S::zero()),
                );
            }
        }
    }

    let all_satisfied = checks.iter().all(|c| c.satisfied);
    Ok(FacetReport { checks, all_satisfied })
}

/// Expands an independence vector over the classical vertices:
/// the weight of assignment `eps` is the product over events of `p_i` (when
/// `eps_i = 1`) or `1 - p_i` (when 0). Entries are keyed by assignment and
/// follow enumeration order; they sum to 1.
pub fn product_expansion<S: Scalar>(
    p: &CorrelationVector<S>,
    tol: &S,
) -> Result<Vec<(u32, S)>, PolytopeError> {
    let scenario = p.scenario();
    if !p.is_independence_vector(tol) {
        for &(i, j) in scenario.pairs() {
            let prod = p.single(i).clone() * p.single(j).clone();
            let delta = (p.pair(i, j).unwrap().clone() - prod).abs();
            if delta > tol.clone() {
                return Err(PolytopeError::NotIndependent { i, j, delta: delta.render() });
            }
        }
    }
    let n = scenario.n();
    let mut out = Vec::with_capacity(1usize << n);
    for assignment in 0..(1u32 << n) {
        let mut w = S::one();
        for i in 1..=n {
            let on = (assignment >> (n - i)) & 1 == 1;
            let pi = p.single(i).clone();
            w = w * if on { pi } else { S::one() - pi };
        }
        out.push((assignment, w));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub scenario: Scenario,
    pub samples: usize,
    pub seed: u64,
    pub counterexamples: Vec<CorrelationVector<Rational>>,
}

impl EquivalenceReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Draws `samples` random rational vectors from the unit cube and requires
/// the LP verdict and the named-facet verdict to agree on every one.
pub fn facet_lp_equivalence_check(
    scenario: &Scenario,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceReport, PolytopeError> {
    if !supported_facets(scenario) {
        return Err(PolytopeError::UnsupportedScenario(scenario.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = Vec::new();
    for _ in 0..samples {
        let p = random_rational_vector(scenario, &mut rng, 32);
        let facet_ok = evaluate_facets(&p)?.all_satisfied;
        let lp_ok = membership(&p, VertexFamily::Classical)?.inside;
        if facet_ok != lp_ok {
            counterexamples.push(p);
        }
    }
    Ok(EquivalenceReport { scenario: scenario.clone(), samples, seed, counterexamples })
}

/// Uniform-ish random rational vector in the unit cube: each coordinate is
/// `num/den` with `den` drawn from `1..=max_den`.
pub fn random_rational_vector<R: Rng>(
    scenario: &Scenario,
    rng: &mut R,
    max_den: u32,
) -> CorrelationVector<Rational> {
    let mut draw = |_: usize| {
        let den = rng.gen_range(1..=max_den) as i64;
        let num = rng.gen_range(0..=den);
        Rational::from_fraction(num, den)
    };
    let singles: Vec<Rational> = (0..scenario.n()).map(&mut draw).collect();
    let pairs: Vec<Rational> = (0..scenario.pairs().len()).map(&mut draw).collect();
    CorrelationVector::new(scenario.clone(), singles, pairs).expect("cube vector")
}

/// Random point of the classical polytope: a convex combination of the
/// classical vertices with random rational weights.
pub fn random_hull_point<R: Rng>(
    scenario: &Scenario,
    rng: &mut R,
    max_num: u32,
) -> CorrelationVector<Rational> {
    let vertices = enumerate_classical_vertices(scenario);
    let raw: Vec<i64> = (0..vertices.len())
        .map(|_| rng.gen_range(0..=max_num) as i64)
        .collect();
    let total: i64 = raw.iter().sum::<i64>().max(1);
    let dim = scenario.dim();
    let mut acc = vec![Rational::from_int(0); dim];
    for (v, w) in vertices.iter().zip(raw.iter()) {
        let weight = Rational::from_fraction(*w, total);
        for (k, c) in v.to_vector::<Rational>().coordinates().into_iter().enumerate() {
            acc[k] = acc[k].clone() + weight.clone() * c;
        }
    }
    let singles = acc[..scenario.n()].to_vec();
    let pairs = acc[scenario.n()..].to_vec();
    CorrelationVector::new(scenario.clone(), singles, pairs).expect("hull point")
}

/// Every strictly interior point of the two-event classical polytope on the
/// lattice with denominator `den`.
pub fn classical_interior_grid_two_events(den: i64) -> Vec<CorrelationVector<Rational>> {
    let scenario = Scenario::two_events();
    let mut out = Vec::new();
    for a in 1..den {
        for b in 1..den {
            for c in 1..den {
                // strict facets: c < a, c < b, a + b - c < den
                if c < a && c < b && a + b - c < den {
                    out.push(
                        CorrelationVector::new(
                            scenario.clone(),
                            vec![Rational::from_fraction(a, den), Rational::from_fraction(b, den)],
                            vec![Rational::from_fraction(c, den)],
                        )
                        .expect("grid point"),
                    );
                }
            }
        }
    }
    out
}

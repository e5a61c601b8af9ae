//! Command bodies. Each returns an [`Outcome`]: a JSON result block plus a
//! flag for verdicts that are negative but well-posed (outside a hull,
//! inadmissible, unrepresentable, no decomposition). Malformed or unphysical
//! input is an [`CmdError::Input`]; solver breakdowns are
//! [`CmdError::Internal`].

use serde_json::{json, Map, Value};

use bellscope::arith::Scalar;
use bellscope::classical_rep::{
    build_conditional_rep, build_kolmogorov_rep, check_admissibility, check_nonsignaling,
    verify_conditional_rep, ConditionalRep, FiniteProbSpace, RepError,
};
use bellscope::common_cause::{
    build_propensity_explanation, decompose_deterministic, decompose_indeterministic,
    extract_kolmogorov_from_propensity, CommonCauseDecomposition, CommonCauseError,
    CommonCauseExplanation,
};
use bellscope::polytope::{evaluate_facets, membership, PolytopeError};
use bellscope::quantum::{
    bell_operator_value, canonical_ch_directions, singlet_pair_probability, singlet_state,
    spin_projection, trace_prob, ComplexMatrix, DensityOperator, QuantumError, Wing,
};
use bellscope::scenario::{CorrelationVector, VertexFamily};

use crate::json::{
    components_from_value, decomposition_to_value, facet_report_to_value, matrix_from_value,
    membership_to_value, nonsignaling_to_value, scalar_to_value, screening_to_value,
    space_to_value, vector_from_value, vector_to_value, verification_to_value, ParseError,
};

#[derive(Debug)]
pub enum CmdError {
    /// Bad or unphysical input: exit code 2.
    Input(String),
    /// Solver or consistency breakdown: exit code 1.
    Internal(String),
}

impl From<ParseError> for CmdError {
    fn from(e: ParseError) -> Self {
        CmdError::Input(e.0)
    }
}

pub struct Outcome {
    pub results: Value,
    /// Well-posed negative verdict: exit code 3 instead of 0.
    pub negative: bool,
}

fn ok(results: Value) -> Result<Outcome, CmdError> {
    Ok(Outcome { results, negative: false })
}

fn negative(results: Value) -> Result<Outcome, CmdError> {
    Ok(Outcome { results, negative: true })
}

fn polytope_err(e: PolytopeError) -> CmdError {
    match e {
        PolytopeError::Scenario(_)
        | PolytopeError::UnsupportedScenario(_)
        | PolytopeError::NotIndependent { .. } => CmdError::Input(e.to_string()),
        other => CmdError::Internal(other.to_string()),
    }
}

fn rep_err(e: RepError) -> CmdError {
    match e {
        RepError::Lp(_) => CmdError::Internal(e.to_string()),
        other => CmdError::Input(other.to_string()),
    }
}

fn quantum_err(e: QuantumError) -> CmdError {
    match e {
        QuantumError::CrossCheckFailed { .. } => CmdError::Internal(e.to_string()),
        other => CmdError::Input(other.to_string()),
    }
}

pub fn families_named(name: &str) -> Vec<VertexFamily> {
    match name {
        "classical" => vec![VertexFamily::Classical],
        "quantum" => vec![VertexFamily::Quantum],
        "general" => vec![VertexFamily::General],
        _ => vec![VertexFamily::Classical, VertexFamily::Quantum, VertexFamily::General],
    }
}

/// Hull membership for each requested family, plus the built-in facet
/// system when the scenario has one.
pub fn classify<S: Scalar>(input: &Value, families: &[VertexFamily]) -> Result<Outcome, CmdError> {
    let p: CorrelationVector<S> = vector_from_value(input)?;

    let mut memberships = Vec::with_capacity(families.len());
    let mut all_inside = true;
    for &family in families {
        let result = membership(&p, family).map_err(polytope_err)?;
        all_inside &= result.inside;
        memberships.push(membership_to_value(&result));
    }

    let facets = match evaluate_facets(&p) {
        Ok(report) => facet_report_to_value(&report),
        Err(PolytopeError::UnsupportedScenario(s)) => json!({
            "supported": false,
            "notice": format!("no built-in facet system for scenario {s}; LP membership above is the verdict"),
        }),
        Err(e) => return Err(polytope_err(e)),
    };

    let results = json!({
        "vector": vector_to_value(&p),
        "memberships": memberships,
        "facets": facets,
    });
    if all_inside {
        ok(results)
    } else {
        negative(results)
    }
}

/// Re-reads the realized probabilities off a finished unconditional space.
fn kolmogorov_transcript<S: Scalar>(
    space: &FiniteProbSpace<S>,
    p: &CorrelationVector<S>,
) -> Result<Value, CmdError> {
    let scenario = p.scenario();
    let mut checks = Vec::new();
    let mut push = |name: String, expected: &S, got: S| {
        let ok = expected == &got;
        checks.push(json!({
            "name": name,
            "expected": scalar_to_value(expected),
            "got": scalar_to_value(&got),
            "ok": ok,
        }));
        ok
    };
    let mut all = true;
    for i in 1..=scenario.n() {
        let got = space.prob(&format!("A{i}")).map_err(rep_err)?;
        all &= push(format!("p(A{i})"), p.single(i), got);
    }
    for &(i, j) in scenario.pairs() {
        let got = space
            .prob_all(&[&format!("A{i}"), &format!("A{j}")])
            .map_err(rep_err)?;
        all &= push(format!("p(A{i} & A{j})"), p.pair(i, j).unwrap(), got);
    }
    Ok(json!({"ok": all, "checks": checks}))
}

/// Unconditional (one event per experimental claim) representation: exists
/// exactly when the vector sits in the classical hull.
pub fn represent_kolmogorov<S: Scalar>(input: &Value) -> Result<Outcome, CmdError> {
    let p: CorrelationVector<S> = vector_from_value(input)?;
    let result = membership(&p, VertexFamily::Classical).map_err(polytope_err)?;
    if !result.inside {
        let value = membership_to_value(&result);
        return negative(json!({
            "vector": vector_to_value(&p),
            "representable": false,
            "reason": "the vector lies outside the classical hull, so no unconditional space realizes it",
            "membership": value,
        }));
    }

    let lambda: Vec<(u32, S)> = result
        .coefficients
        .as_ref()
        .expect("inside verdicts carry coefficients")
        .iter()
        .map(|(vertex, w)| (vertex.singles_bits(), w.clone()))
        .collect();
    let space = build_kolmogorov_rep(&p, &lambda).map_err(|e| CmdError::Internal(e.to_string()))?;
    let transcript = kolmogorov_transcript(&space, &p)?;

    ok(json!({
        "vector": vector_to_value(&p),
        "representable": true,
        "space": space_to_value(&space),
        "verification": transcript,
    }))
}

/// Conditional (settings and outcomes) representation via the feasibility
/// program; reports admissibility, the realized probabilities, and the
/// signaling profile of whatever witness was found.
pub fn represent_conditional<S: Scalar>(
    input: &Value,
    require_nonsignaling: bool,
) -> Result<Outcome, CmdError> {
    let p: CorrelationVector<S> = vector_from_value(input)?;
    let admissibility = check_admissibility(&p);
    let admissibility_value = json!({
        "admissible": admissibility.admissible,
        "violations": admissibility.violations.iter().map(|v| json!({
            "pair": [v.pair.0, v.pair.1],
            "reason": v.reason,
        })).collect::<Vec<_>>(),
    });

    match build_conditional_rep(&p, require_nonsignaling) {
        Ok(rep) => {
            let verification = verify_conditional_rep(&rep, &p).map_err(rep_err)?;
            let signaling = check_nonsignaling(&rep).map_err(rep_err)?;
            ok(json!({
                "vector": vector_to_value(&p),
                "representable": true,
                "admissibility": admissibility_value,
                "space": space_to_value(rep.space()),
                "verification": verification_to_value(&verification),
                "nonsignaling": nonsignaling_to_value(&signaling),
            }))
        }
        Err(e @ (RepError::Inadmissible(_) | RepError::Unrepresentable(_))) => negative(json!({
            "vector": vector_to_value(&p),
            "representable": false,
            "admissibility": admissibility_value,
            "reason": e.to_string(),
        })),
        Err(e) => Err(rep_err(e)),
    }
}

fn common_cause_outcome<S: Scalar>(
    e: CommonCauseError,
    p: &CorrelationVector<S>,
) -> Result<Outcome, CmdError> {
    match e {
        CommonCauseError::NotClassical(_)
        | CommonCauseError::NoDecomposition(_)
        | CommonCauseError::NotIndependent { .. }
        | CommonCauseError::Rep(RepError::Inadmissible(_))
        | CommonCauseError::Rep(RepError::Unrepresentable(_)) => negative(json!({
            "vector": vector_to_value(p),
            "explainable": false,
            "reason": e.to_string(),
        })),
        CommonCauseError::Rep(inner) => Err(rep_err(inner)),
        CommonCauseError::Polytope(inner) => Err(polytope_err(inner)),
        CommonCauseError::Lp(inner) => Err(CmdError::Internal(inner.to_string())),
        CommonCauseError::EmptyDecomposition
        | CommonCauseError::LengthMismatch { .. }
        | CommonCauseError::NotConvex(_)
        | CommonCauseError::DuplicateCell(_)
        | CommonCauseError::ScenarioMismatch
        | CommonCauseError::MixtureMismatch { .. } => Err(CmdError::Input(e.to_string())),
        other => Err(CmdError::Internal(other.to_string())),
    }
}

fn explanation_to_value<S: Scalar>(explanation: &CommonCauseExplanation<S>) -> Value {
    let cells: Map<String, Value> = explanation
        .cell_vectors
        .iter()
        .map(|(label, vector)| {
            let weight = explanation.cell_prob(label).expect("cells index the space");
            (
                label.clone(),
                json!({
                    "weight": scalar_to_value(&weight),
                    "vector": vector_to_value(vector),
                }),
            )
        })
        .collect();
    json!({
        "kind": explanation.kind.to_string(),
        "space": space_to_value(&explanation.space),
        "partition": explanation.partition,
        "cells": cells,
        "screening": screening_to_value(&explanation.screening),
    })
}

/// Common-cause explanation. `kind` picks what the caller wants back:
/// "propensity" stops at the three-layer space, "property" additionally
/// collapses it to an unconditional space (which needs deterministic cells).
pub fn explain<S: Scalar>(
    input: &Value,
    property: bool,
    components: Option<&Value>,
) -> Result<Outcome, CmdError> {
    let p: CorrelationVector<S> = vector_from_value(input)?;

    let decomposition: CommonCauseDecomposition<S> = match components {
        None => match decompose_deterministic(&p) {
            Ok(d) => d,
            Err(e) => return common_cause_outcome(e, &p),
        },
        Some(value) => {
            let (parts, weights) = components_from_value::<S>(value, p.scenario())?;
            let keys: Vec<u32> = parts.iter().map(|(bits, _)| *bits).collect();
            let vectors: Vec<CorrelationVector<S>> =
                parts.iter().map(|(_, v)| v.clone()).collect();
            let outcome = match weights {
                Some(named) => {
                    let mut ordered = Vec::with_capacity(keys.len());
                    for &key in &keys {
                        match named.iter().find(|(bits, _)| *bits == key) {
                            Some((_, w)) => ordered.push(w.clone()),
                            None => {
                                return Err(CmdError::Input(format!(
                                    "no weight given for component \"{}\"",
                                    bellscope::classical_rep::bits_label(key, p.scenario().n())
                                )))
                            }
                        }
                    }
                    CommonCauseDecomposition::with_keys(keys, ordered, vectors, &p)
                }
                None => decompose_indeterministic(&p, &vectors),
            };
            match outcome {
                Ok(d) => d,
                Err(e) => return common_cause_outcome(e, &p),
            }
        }
    };

    // The measurement distribution comes from a non-signaling conditional
    // witness for the same vector; anything in the classical hull has one.
    let rep: ConditionalRep<S> = match build_conditional_rep(&p, true) {
        Ok(rep) => rep,
        Err(e) => return common_cause_outcome(CommonCauseError::Rep(e), &p),
    };

    let explanation = match build_propensity_explanation(&p, &decomposition, &rep) {
        Ok(explanation) => explanation,
        Err(e) => return common_cause_outcome(e, &p),
    };

    let mut results = Map::new();
    results.insert("vector".into(), vector_to_value(&p));
    results.insert("explainable".into(), json!(true));
    results.insert("decomposition".into(), decomposition_to_value(&decomposition));
    results.insert("conditional_space".into(), space_to_value(rep.space()));
    results.insert("explanation".into(), explanation_to_value(&explanation));

    if property {
        let extracted = match extract_kolmogorov_from_propensity(&explanation) {
            Ok(space) => space,
            Err(e @ CommonCauseError::NotDeterministic(_)) => {
                results.insert("property_space".into(), Value::Null);
                results.insert("property_notice".into(), json!(e.to_string()));
                return negative(Value::Object(results));
            }
            Err(e) => return common_cause_outcome(e, &p),
        };
        let transcript = kolmogorov_transcript(&extracted, &p)?;
        results.insert("property_space".into(), space_to_value(&extracted));
        results.insert("property_verification".into(), transcript);
    }

    ok(Value::Object(results))
}

fn direction_value(d: [f64; 3]) -> Value {
    json!([d[0], d[1], d[2]])
}

/// Singlet-state predictions for four measurement directions, each pair
/// probability computed along both routes, with the two-events-per-wing
/// facet evaluation and hull verdicts on the result.
pub fn epr(directions: Option<[[f64; 3]; 4]>) -> Result<Outcome, CmdError> {
    let (a1, a2, b3, b4) = match directions {
        Some([a1, a2, b3, b4]) => (a1, a2, b3, b4),
        None => canonical_ch_directions(),
    };

    let p = bellscope::quantum::epr_correlation_vector(a1, a2, b3, b4).map_err(quantum_err)?;
    let scenario = p.scenario().clone();

    let rho = singlet_state();
    let left = [a1, a2];
    let right = [b3, b4];
    let mut singles_traced = Vec::with_capacity(4);
    for (k, &dir) in left.iter().chain(right.iter()).enumerate() {
        let wing = if k < 2 { Wing::Left } else { Wing::Right };
        let projection = spin_projection(dir, wing).map_err(quantum_err)?;
        let traced = trace_prob(&rho, &projection).map_err(quantum_err)?;
        singles_traced.push(json!(traced));
    }

    let mut routes = Map::new();
    let mut traced_pair = std::collections::BTreeMap::new();
    for &(i, j) in scenario.pairs() {
        let pair = singlet_pair_probability(left[i - 1], right[j - 3]).map_err(quantum_err)?;
        traced_pair.insert((i, j), pair.traced);
        routes.insert(
            format!("{i},{j}"),
            json!({
                "closed_form": pair.closed_form,
                "traced": pair.traced,
                "delta": pair.delta,
            }),
        );
    }

    // Clauser-Horne combination along both routes.
    let ch = |pair: &dyn Fn(usize, usize) -> f64, single: &dyn Fn(usize) -> f64| {
        pair(1, 3) + pair(2, 3) + pair(1, 4) - pair(2, 4) - single(1) - single(3)
    };
    let closed_pair = |i: usize, j: usize| *p.pair(i, j).unwrap();
    let closed_single = |i: usize| *p.single(i);
    let traced_pair_fn = |i: usize, j: usize| traced_pair[&(i, j)];
    let traced_single = |i: usize| singles_traced[i - 1].as_f64().unwrap();
    let ch_closed = ch(&closed_pair, &closed_single);
    let ch_traced = ch(&traced_pair_fn, &traced_single);

    let facets = evaluate_facets(&p).map_err(polytope_err)?;
    let classical = membership(&p, VertexFamily::Classical).map_err(polytope_err)?;
    let quantum = membership(&p, VertexFamily::Quantum).map_err(polytope_err)?;

    ok(json!({
        "directions": {
            "a1": direction_value(a1),
            "a2": direction_value(a2),
            "b3": direction_value(b3),
            "b4": direction_value(b4),
        },
        "vector": vector_to_value(&p),
        "singles_traced": singles_traced,
        "pair_routes": Value::Object(routes),
        "ch_value": {
            "closed_form": ch_closed,
            "traced": ch_traced,
            "delta": (ch_closed - ch_traced).abs(),
        },
        "facets": facet_report_to_value(&facets),
        "memberships": [membership_to_value(&classical), membership_to_value(&quantum)],
    }))
}

fn named_matrix(map: &Map<String, Value>, name: &str) -> Result<ComplexMatrix, CmdError> {
    let value = map
        .get(name)
        .ok_or_else(|| CmdError::Input(format!("missing operator \"{name}\"")))?;
    matrix_from_value(value).map_err(|e| CmdError::Input(format!("operator \"{name}\": {e}")))
}

/// Evaluates (1/2)(A1(B1+B2) + A2(B1-B2)) on each supplied state after
/// checking that the wings are commuting contractions.
pub fn bell_operator(operators: &Value, states: &Value) -> Result<Outcome, CmdError> {
    let ops = operators
        .as_object()
        .ok_or_else(|| CmdError::Input("the operators file must be a JSON object".into()))?;
    let a1 = named_matrix(ops, "A1")?;
    let a2 = named_matrix(ops, "A2")?;
    let b1 = named_matrix(ops, "B1")?;
    let b2 = named_matrix(ops, "B2")?;

    let states_list = states
        .as_object()
        .and_then(|m| m.get("states"))
        .and_then(Value::as_array)
        .ok_or_else(|| {
            CmdError::Input("the states file must be {\"states\": [matrix, ...]}".into())
        })?;
    if states_list.is_empty() {
        return Err(CmdError::Input("the states file lists no states".into()));
    }

    let bound = std::f64::consts::SQRT_2;
    let mut values = Vec::with_capacity(states_list.len());
    let mut all_within = true;
    for (index, entry) in states_list.iter().enumerate() {
        let matrix = matrix_from_value(entry)
            .map_err(|e| CmdError::Input(format!("state {index}: {e}")))?;
        let state = DensityOperator::new(matrix)
            .map_err(|e| CmdError::Input(format!("state {index}: {e}")))?;
        let value = bell_operator_value(&state, &a1, &a2, &b1, &b2).map_err(quantum_err)?;
        let within = value.abs() <= bound + 1e-9;
        all_within &= within;
        values.push(json!({
            "state": index,
            "value": value,
            "within_bound": within,
        }));
    }

    ok(json!({
        "bound": bound,
        "all_within_bound": all_within,
        "values": values,
    }))
}

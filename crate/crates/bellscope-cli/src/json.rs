//! JSON views of the library types. Exact-mode values serialize as rational
//! strings, float-mode values as JSON numbers; parsers accept decimal
//! strings, "a/b" strings, and (in float mode) bare numbers.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Value};

use bellscope::arith::Scalar;
use bellscope::classical_rep::{ConditionalVerification, FiniteProbSpace, NonSignalingReport};
use bellscope::common_cause::{CommonCauseDecomposition, ScreeningReport};
use bellscope::polytope::{Certificate, FacetReport, MembershipResult};
use bellscope::quantum::ComplexMatrix;
use bellscope::scenario::{CorrelationVector, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError(pub String);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError(msg.into()))
}

pub fn scalar_to_value<S: Scalar>(s: &S) -> Value {
    if S::EXACT {
        Value::String(s.render())
    } else {
        json!(s.to_f64())
    }
}

pub fn scalar_from_value<S: Scalar>(v: &Value) -> Result<S, ParseError> {
    match v {
        Value::String(text) => S::parse(text).map_err(|e| ParseError(e.to_string())),
        Value::Number(n) => {
            if S::EXACT {
                match n.as_i64() {
                    Some(k) => Ok(S::from_int(k)),
                    None => err(format!(
                        "exact mode needs integers or rational strings, got {n}"
                    )),
                }
            } else {
                let x = n.as_f64().ok_or_else(|| ParseError(format!("bad number {n}")))?;
                S::parse(&format!("{x}")).map_err(|e| ParseError(e.to_string()))
            }
        }
        other => err(format!("expected a number entry, got {other}")),
    }
}

pub fn vector_to_value<S: Scalar>(p: &CorrelationVector<S>) -> Value {
    let scenario = p.scenario();
    let pairs: Map<String, Value> = scenario
        .pairs()
        .iter()
        .map(|&(i, j)| (format!("{i},{j}"), scalar_to_value(p.pair(i, j).unwrap())))
        .collect();
    json!({
        "n": scenario.n(),
        "S": scenario.pairs().iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
        "singles": p.singles().iter().map(scalar_to_value).collect::<Vec<_>>(),
        "pairs": pairs,
    })
}

fn object<'v>(v: &'v Value, what: &str) -> Result<&'v Map<String, Value>, ParseError> {
    v.as_object()
        .ok_or_else(|| ParseError(format!("{what} must be a JSON object")))
}

fn field<'v>(map: &'v Map<String, Value>, name: &str) -> Result<&'v Value, ParseError> {
    map.get(name)
        .ok_or_else(|| ParseError(format!("missing field \"{name}\"")))
}

fn pair_key(key: &str) -> Result<(usize, usize), ParseError> {
    let parts: Vec<&str> = key.split(',').collect();
    if parts.len() != 2 {
        return err(format!("pair key \"{key}\" is not \"i,j\""));
    }
    let i = parts[0].trim().parse::<usize>();
    let j = parts[1].trim().parse::<usize>();
    match (i, j) {
        (Ok(i), Ok(j)) => Ok((i.min(j), i.max(j))),
        _ => err(format!("pair key \"{key}\" is not \"i,j\"")),
    }
}

pub fn scenario_from_value(map: &Map<String, Value>) -> Result<Scenario, ParseError> {
    let n = field(map, "n")?
        .as_u64()
        .ok_or_else(|| ParseError("\"n\" must be a positive integer".into()))?;
    let pairs_value = field(map, "S")?
        .as_array()
        .ok_or_else(|| ParseError("\"S\" must be an array of [i, j] pairs".into()))?;
    let mut pairs = Vec::with_capacity(pairs_value.len());
    for entry in pairs_value {
        let pair = entry
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)))
            .ok_or_else(|| ParseError(format!("\"S\" entry {entry} is not [i, j]")))?;
        pairs.push((pair.0 as usize, pair.1 as usize));
    }
    Scenario::new(n as usize, &pairs).map_err(|e| ParseError(e.to_string()))
}

pub fn vector_from_value<S: Scalar>(v: &Value) -> Result<CorrelationVector<S>, ParseError> {
    let map = object(v, "a correlation vector")?;
    let scenario = scenario_from_value(map)?;
    let (singles, pairs) = entries_from_value(map, &scenario)?;
    CorrelationVector::new(scenario, singles, pairs).map_err(|e| ParseError(e.to_string()))
}

/// Reads "singles" and "pairs" fields against a known scenario.
pub fn entries_from_value<S: Scalar>(
    map: &Map<String, Value>,
    scenario: &Scenario,
) -> Result<(Vec<S>, Vec<S>), ParseError> {
    let singles_value = field(map, "singles")?
        .as_array()
        .ok_or_else(|| ParseError("\"singles\" must be an array".into()))?;
    if singles_value.len() != scenario.n() {
        return err(format!(
            "expected {} singles, got {}",
            scenario.n(),
            singles_value.len()
        ));
    }
    let singles: Vec<S> = singles_value
        .iter()
        .map(scalar_from_value)
        .collect::<Result<_, _>>()?;

    let pairs_map = object(field(map, "pairs")?, "\"pairs\"")?;
    let mut by_pair: BTreeMap<(usize, usize), S> = BTreeMap::new();
    for (key, entry) in pairs_map {
        let pair = pair_key(key)?;
        if scenario.pair_position(pair.0, pair.1).is_none() {
            return err(format!("pair \"{key}\" is not in S"));
        }
        if by_pair.insert(pair, scalar_from_value(entry)?).is_some() {
            return err(format!("pair \"{key}\" appears twice"));
        }
    }
    let pairs: Vec<S> = scenario
        .pairs()
        .iter()
        .map(|&(i, j)| {
            by_pair
                .get(&(i, j))
                .cloned()
                .ok_or_else(|| ParseError(format!("missing pair \"{i},{j}\"")))
        })
        .collect::<Result<_, _>>()?;
    Ok((singles, pairs))
}

pub fn space_to_value<S: Scalar>(space: &FiniteProbSpace<S>) -> Value {
    let events: Map<String, Value> = space
        .event_names()
        .map(|name| {
            let labels: Vec<Value> = space
                .event(name)
                .unwrap()
                .iter()
                .map(|&idx| Value::String(space.atoms()[idx].clone()))
                .collect();
            (name.clone(), Value::Array(labels))
        })
        .collect();
    json!({
        "atoms": space.atoms(),
        "weights": space.weights().iter().map(scalar_to_value).collect::<Vec<_>>(),
        "events": events,
    })
}

pub fn membership_to_value<S: Scalar>(result: &MembershipResult<S>) -> Value {
    let mut out = Map::new();
    out.insert("family".into(), json!(result.family.to_string()));
    out.insert("inside".into(), json!(result.inside));
    if let Some(coeffs) = &result.coefficients {
        let weights: Map<String, Value> = coeffs
            .iter()
            .map(|(vertex, w)| (vertex.label(), scalar_to_value(w)))
            .collect();
        out.insert("coefficients".into(), Value::Object(weights));
    }
    if let Some(certificate) = &result.certificate {
        let value = match certificate {
            Certificate::Facet(f) => json!({
                "type": "facet",
                "id": f.id,
                "value": scalar_to_value(&f.value),
                "lower": f.lower.as_ref().map(scalar_to_value),
                "upper": f.upper.as_ref().map(scalar_to_value),
            }),
            Certificate::Functional(f) => json!({
                "type": "functional",
                "singles": f.singles.iter().map(scalar_to_value).collect::<Vec<_>>(),
                "pairs": f.pairs.iter().map(scalar_to_value).collect::<Vec<_>>(),
                "offset": scalar_to_value(&f.offset),
                "value_at_point": scalar_to_value(&f.value_at_point),
            }),
        };
        out.insert("certificate".into(), value);
    }
    Value::Object(out)
}

pub fn facet_report_to_value<S: Scalar>(report: &FacetReport<S>) -> Value {
    json!({
        "supported": true,
        "all_satisfied": report.all_satisfied,
        "checks": report.checks.iter().map(|c| json!({
            "id": c.id,
            "value": scalar_to_value(&c.value),
            "lower": c.lower.as_ref().map(scalar_to_value),
            "upper": c.upper.as_ref().map(scalar_to_value),
            "satisfied": c.satisfied,
        })).collect::<Vec<_>>(),
    })
}

pub fn verification_to_value<S: Scalar>(v: &ConditionalVerification<S>) -> Value {
    json!({
        "ok": v.ok,
        "checks": v.checks.iter().map(|c| json!({
            "name": c.name,
            "expected": scalar_to_value(&c.expected),
            "got": scalar_to_value(&c.got),
            "ok": c.ok,
        })).collect::<Vec<_>>(),
    })
}

pub fn nonsignaling_to_value<S: Scalar>(report: &NonSignalingReport<S>) -> Value {
    json!({
        "nonsignaling": report.nonsignaling,
        "pairs": report.pairs.iter().map(|p| json!({
            "pair": [p.pair.0, p.pair.1],
            "single_given_own": [
                scalar_to_value(&p.single_given_own.0),
                scalar_to_value(&p.single_given_own.1),
            ],
            "single_given_both": [
                scalar_to_value(&p.single_given_both.0),
                scalar_to_value(&p.single_given_both.1),
            ],
            "signaling": p.signaling,
        })).collect::<Vec<_>>(),
    })
}

pub fn screening_to_value<S: Scalar>(report: &ScreeningReport<S>) -> Value {
    json!({
        "screens_off": report.screens_off,
        "factorization": report.factorization.iter().map(|c| json!({
            "pair": [c.pair.0, c.pair.1],
            "cell": c.cell,
            "joint": scalar_to_value(&c.joint),
            "left": scalar_to_value(&c.left),
            "right": scalar_to_value(&c.right),
            "residual": scalar_to_value(&c.residual),
            "ok": c.ok,
        })).collect::<Vec<_>>(),
        "no_conspiracy": report.no_conspiracy.iter().map(|c| json!({
            "cell": c.cell,
            "context": c.context,
            "residual": scalar_to_value(&c.residual),
            "ok": c.ok,
        })).collect::<Vec<_>>(),
    })
}

pub fn decomposition_to_value<S: Scalar>(d: &CommonCauseDecomposition<S>) -> Value {
    let cells: Map<String, Value> = (0..d.weights().len())
        .map(|idx| {
            (
                d.cell_label(idx),
                json!({
                    "weight": scalar_to_value(&d.weights()[idx]),
                    "vector": vector_to_value(&d.vectors()[idx]),
                }),
            )
        })
        .collect();
    json!({
        "kind": d.kind().to_string(),
        "cells": cells,
    })
}

/// Component vectors for a propensity decomposition, keyed by cell bit
/// pattern, with optional explicit weights:
/// `{"components": {"11": {"singles": [...], "pairs": {...}}, ...},
///   "weights": {"11": "1/5", ...}}`.
/// Each component may also be a full correlation-vector object.
pub type ComponentsFile<S> = (Vec<(u32, CorrelationVector<S>)>, Option<Vec<(u32, S)>>);

pub fn components_from_value<S: Scalar>(
    v: &Value,
    scenario: &Scenario,
) -> Result<ComponentsFile<S>, ParseError> {
    let map = object(v, "a components file")?;
    let components_map = object(field(map, "components")?, "\"components\"")?;
    if components_map.is_empty() {
        return err("\"components\" is empty");
    }
    let mut components = Vec::new();
    for (key, entry) in components_map {
        let bits = u32::from_str_radix(key, 2)
            .map_err(|_| ParseError(format!("component key \"{key}\" is not a bit pattern")))?;
        let entry_map = object(entry, "a component")?;
        let vector = if entry_map.contains_key("n") {
            let parsed = vector_from_value::<S>(entry)?;
            if parsed.scenario() != scenario {
                return err(format!("component \"{key}\" lives on a different scenario"));
            }
            parsed
        } else {
            let (singles, pairs) = entries_from_value(entry_map, scenario)?;
            CorrelationVector::new(scenario.clone(), singles, pairs)
                .map_err(|e| ParseError(e.to_string()))?
        };
        components.push((bits, vector));
    }

    let weights = match map.get("weights") {
        None => None,
        Some(w) => {
            let weights_map = object(w, "\"weights\"")?;
            let mut out = Vec::new();
            for (key, entry) in weights_map {
                let bits = u32::from_str_radix(key, 2)
                    .map_err(|_| ParseError(format!("weight key \"{key}\" is not a bit pattern")))?;
                out.push((bits, scalar_from_value(entry)?));
            }
            Some(out)
        }
    };
    Ok((components, weights))
}

pub fn matrix_to_value(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.dim())
        .map(|r| {
            let row: Vec<Value> = (0..m.dim())
                .map(|c| {
                    let z = m.get(r, c);
                    json!([z.re, z.im])
                })
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_value(v: &Value) -> Result<ComplexMatrix, ParseError> {
    let rows = v
        .as_array()
        .ok_or_else(|| ParseError("a matrix must be an array of rows".into()))?;
    let dim = rows.len();
    if dim == 0 {
        return err("a matrix needs at least one row");
    }
    let mut m = ComplexMatrix::zeros(dim);
    for (r, row_value) in rows.iter().enumerate() {
        let row = row_value
            .as_array()
            .filter(|row| row.len() == dim)
            .ok_or_else(|| ParseError(format!("row {r} is not an array of {dim} entries")))?;
        for (c, entry) in row.iter().enumerate() {
            let parts = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .and_then(|p| Some((p[0].as_f64()?, p[1].as_f64()?)))
                .ok_or_else(|| {
                    ParseError(format!("entry ({r},{c}) is not an [re, im] pair"))
                })?;
            m.set(r, c, bellscope::quantum::Complex64::new(parts.0, parts.1));
        }
    }
    Ok(m)
}

//! Acceptance gate: one test per shipped guarantee, each printing a
//! `criterion N: pass` line (visible with `--nocapture`) and asserting its
//! own runtime budget. Tolerances are pinned here, not imported.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use bellscope::arith::{Rational, Scalar};
use bellscope::classical_rep::{
    build_conditional_rep, check_nonsignaling, verify_conditional_rep, ConditionalRep,
    FiniteProbSpace,
};
use bellscope::common_cause::{
    build_propensity_explanation, decompose_deterministic, extract_kolmogorov_from_propensity,
    CommonCauseDecomposition,
};
use bellscope::polytope::{
    classical_interior_grid_two_events, evaluate_facets, membership, random_hull_point,
    random_rational_vector,
};
use bellscope::quantum::{
    bell_operator_value, canonical_chsh_directions, quantum_common_cause_check,
    random_product_state, random_pure_state, singlet_pair_probability, singlet_state,
    wing_observable, ComplexMatrix, DensityOperator, ProjectionEvent, Wing,
};
use bellscope::scenario::{
    enumerate_classical_vertices, enumerate_quantum_vertices, CorrelationVector, Scenario,
    VertexFamily,
};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_fraction(n, d)
}

fn vector(singles: &[Rational], pairs: &[Rational], scenario: Scenario) -> CorrelationVector<Rational> {
    CorrelationVector::new(scenario, singles.to_vec(), pairs.to_vec()).unwrap()
}

fn finish(criterion: u32, budget: Duration, start: Instant, summary: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "criterion {criterion}: FAIL: exceeded {budget:?} budget ({elapsed:?})"
    );
    println!("criterion {criterion}: pass - {summary} ({elapsed:.2?})");
}

#[test]
fn criterion_1_canonical_singlet_ch_value() {
    let start = Instant::now();
    let target = -(1.0 + SQRT_2) / 2.0;

    let output = std::process::Command::new(env!("CARGO_BIN_EXE_bellscope"))
        .args(["epr", "--canonical"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "criterion 1: FAIL: epr --canonical errored");
    let report: Value = serde_json::from_slice(&output.stdout).unwrap();
    let ch = &report["results"]["ch_value"];
    let closed = ch["closed_form"].as_f64().unwrap();
    let traced = ch["traced"].as_f64().unwrap();
    assert!(
        (closed - target).abs() <= 1e-9,
        "criterion 1: FAIL: closed-form CH value {closed}, want {target}"
    );
    assert!(
        (closed - traced).abs() <= 1e-12,
        "criterion 1: FAIL: routes disagree by {}",
        (closed - traced).abs()
    );
    for (key, route) in report["results"]["pair_routes"].as_object().unwrap() {
        let delta = route["delta"].as_f64().unwrap();
        assert!(delta <= 1e-12, "criterion 1: FAIL: pair {key} routes disagree by {delta}");
    }

    finish(1, Duration::from_secs(1), start, "CH value -(1+sqrt2)/2 on both routes");
}

#[test]
fn criterion_2_singlet_probability_law_on_a_grid() {
    let start = Instant::now();

    let direction = |theta: f64| [theta.cos(), theta.sin(), 0.0];
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let ta = i as f64 * std::f64::consts::TAU / 10.0;
            let tb = (j as f64 + 0.5) * std::f64::consts::TAU / 10.0;
            let routes = singlet_pair_probability(direction(ta), direction(tb)).unwrap();
            let law = 0.5 * ((ta - tb) / 2.0).sin().powi(2);
            worst = worst.max((routes.traced - law).abs());
        }
    }
    assert!(
        worst <= 1e-12,
        "criterion 2: FAIL: trace and half-angle law differ by {worst}"
    );

    finish(2, Duration::from_secs(5), start, &format!("100 direction pairs, worst gap {worst:.2e}"));
}

#[test]
fn criterion_3_facet_and_lp_verdicts_agree_at_n2() {
    let start = Instant::now();
    let scenario = Scenario::two_events();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut inside_count = 0usize;
    for round in 0..10_000 {
        let p = random_rational_vector(&scenario, &mut rng, 60);
        let by_facets = evaluate_facets(&p).unwrap().all_satisfied;
        let by_lp = membership(&p, VertexFamily::Classical).unwrap();
        assert_eq!(
            by_lp.inside, by_facets,
            "criterion 3: FAIL: verdicts split on round {round}: {p:?}"
        );
        if by_lp.inside {
            inside_count += 1;
            assert_eq!(
                by_lp.reconstruct().as_ref(),
                Some(&p),
                "criterion 3: FAIL: expansion does not rebuild {p:?}"
            );
            // the two-event expansion is unique, so the solver must land on it
            let coefficient = |label: &str| {
                by_lp.coefficient(label).cloned().unwrap_or_else(Rational::zero)
            };
            let (p1, p2) = (p.single(1).clone(), p.single(2).clone());
            let p12 = p.pair(1, 2).unwrap().clone();
            assert_eq!(coefficient("11;1"), p12);
            assert_eq!(coefficient("10;0"), p1.clone() - p12.clone());
            assert_eq!(coefficient("01;0"), p2.clone() - p12.clone());
            assert_eq!(coefficient("00;0"), Rational::one() - p1 - p2 + p12);
        }
    }
    assert!(inside_count > 1_000, "criterion 3: FAIL: sampling is off ({inside_count} inside)");

    finish(
        3,
        Duration::from_secs(30),
        start,
        &format!("10000 vectors, {inside_count} inside with exact unique expansions"),
    );
}

#[test]
fn criterion_4_two_event_reference_points_reproduce_exactly() {
    let start = Instant::now();
    let scenario = Scenario::two_events();

    // unique expansion of (2/5, 2/5; 1/5)
    let p = vector(&[r(2, 5), r(2, 5)], &[r(1, 5)], scenario.clone());
    let result = membership(&p, VertexFamily::Classical).unwrap();
    assert!(result.inside);
    let coefficient =
        |label: &str| result.coefficient(label).cloned().unwrap_or_else(Rational::zero);
    assert_eq!(coefficient("11;1"), r(1, 5));
    assert_eq!(coefficient("10;0"), r(1, 5));
    assert_eq!(coefficient("01;0"), r(1, 5));
    assert_eq!(coefficient("00;0"), r(2, 5));
    let decomposition = decompose_deterministic(&p).unwrap();
    for (key, weight) in decomposition.keys().iter().zip(decomposition.weights()) {
        let expected = match key {
            0b00 => r(2, 5),
            _ => r(1, 5),
        };
        assert_eq!(weight, &expected, "criterion 4: FAIL: cell {key:02b}");
    }

    // (2/3, 2/3; 1/5) breaks exactly the additivity facet, at 17/15
    let q = vector(&[r(2, 3), r(2, 3)], &[r(1, 5)], scenario.clone());
    let facets = evaluate_facets(&q).unwrap();
    let broken = facets.check("p1+p2-p12<=1").unwrap();
    assert!(!broken.satisfied);
    assert_eq!(broken.value, r(17, 15));
    assert!(facets.checks.iter().all(|c| c.satisfied || c.id == "p1+p2-p12<=1"));
    assert!(!membership(&q, VertexFamily::Classical).unwrap().inside);

    // the six-atom selective-measurement table realizes the same conditionals
    // and signals between the wings
    let mut space = FiniteProbSpace::new(vec![
        ("σ=11|ω=11".into(), r(1, 25)),
        ("σ=11|ω=00".into(), r(4, 25)),
        ("σ=01|ω=01".into(), r(9, 25)),
        ("σ=10|ω=10".into(), r(9, 25)),
        ("σ=01|ω=00".into(), r(1, 25)),
        ("σ=10|ω=00".into(), r(1, 25)),
    ])
    .unwrap();
    space
        .add_event_where("a1", |label| label.starts_with("σ=1"))
        .unwrap();
    space
        .add_event_where("a2", |label| label.starts_with("σ=11") || label.starts_with("σ=01"))
        .unwrap();
    space
        .add_event_where("A1", |label| label.ends_with("ω=11") || label.ends_with("ω=10"))
        .unwrap();
    space
        .add_event_where("A2", |label| label.ends_with("ω=11") || label.ends_with("ω=01"))
        .unwrap();
    let rep = ConditionalRep::new(space, scenario).unwrap();
    assert_eq!(rep.realized_vector().unwrap(), q);
    assert!(verify_conditional_rep(&rep, &q).unwrap().ok);
    let signaling = check_nonsignaling(&rep).unwrap();
    assert!(!signaling.nonsignaling);
    assert_eq!(signaling.pairs[0].single_given_both.0, r(1, 5));
    assert_eq!(rep.space().cond_prob(&["A1"], &["a1", "a2"]).unwrap(), r(1, 5));

    finish(4, Duration::from_secs(1), start, "expansion weights, 17/15 facet, signaling table");
}

#[test]
fn criterion_5_interior_grid_round_trip_is_exact() {
    let start = Instant::now();

    let grid = classical_interior_grid_two_events(20);
    assert!(!grid.is_empty());
    for p in &grid {
        let rep = build_conditional_rep(p, true).unwrap();
        let decomposition = decompose_deterministic(p).unwrap();
        let explanation = build_propensity_explanation(p, &decomposition, &rep).unwrap();

        let screening = &explanation.screening;
        assert!(screening.screens_off, "criterion 5: FAIL: screening broke at {p:?}");
        assert!(
            screening.factorization.iter().all(|c| c.residual.is_zero())
                && screening.no_conspiracy.iter().all(|c| c.residual.is_zero()),
            "criterion 5: FAIL: nonzero residual at {p:?}"
        );

        let extracted = extract_kolmogorov_from_propensity(&explanation).unwrap();
        assert_eq!(extracted.prob("A1").unwrap(), *p.single(1));
        assert_eq!(extracted.prob("A2").unwrap(), *p.single(2));
        assert_eq!(
            extracted.prob_all(&["A1", "A2"]).unwrap(),
            *p.pair(1, 2).unwrap()
        );
    }

    finish(
        5,
        Duration::from_secs(60),
        start,
        &format!("{} interior vectors round-tripped with zero residuals", grid.len()),
    );
}

#[test]
fn criterion_6_indeterministic_four_cell_instance_screens() {
    let start = Instant::now();
    let scenario = Scenario::two_events();

    let hi = (3.0 + 5f64.sqrt()) / 8.0;
    let lo = (3.0 - 5f64.sqrt()) / 8.0;
    let component = |x: f64| {
        CorrelationVector::new(scenario.clone(), vec![x, x], vec![x * x]).unwrap()
    };
    let p = CorrelationVector::new(scenario.clone(), vec![0.4, 0.4], vec![0.2]).unwrap();
    let decomposition = CommonCauseDecomposition::with_keys(
        vec![0b11, 0b10, 0b01, 0b00],
        vec![0.2, 0.2, 0.2, 0.4],
        vec![component(0.25), component(hi), component(lo), component(0.5)],
        &p,
    )
    .unwrap();

    let rep = build_conditional_rep(&p, true).unwrap();
    let explanation = build_propensity_explanation(&p, &decomposition, &rep).unwrap();
    assert!(explanation.screening.screens_off);
    let worst = explanation
        .screening
        .factorization
        .iter()
        .map(|c| c.residual)
        .chain(explanation.screening.no_conspiracy.iter().map(|c| c.residual))
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-9, "criterion 6: FAIL: worst residual {worst}");

    finish(6, Duration::from_secs(1), start, &format!("four indeterministic cells, worst residual {worst:.2e}"));
}

#[test]
fn criterion_7_bell_operator_bounds_hold() {
    let start = Instant::now();

    let (a1, a2, b1, b2) = canonical_chsh_directions();
    let a1 = wing_observable(a1, Wing::Left).unwrap();
    let a2 = wing_observable(a2, Wing::Left).unwrap();
    let b1 = wing_observable(b1, Wing::Right).unwrap();
    let b2 = wing_observable(b2, Wing::Right).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut largest = 0.0f64;
    for _ in 0..1_000 {
        let state = random_pure_state(&mut rng, 4);
        let value = bell_operator_value(&state, &a1, &a2, &b1, &b2).unwrap();
        largest = largest.max(value.abs());
        assert!(value.abs() <= SQRT_2 + 1e-9, "criterion 7: FAIL: pure state gave {value}");
    }
    for _ in 0..1_000 {
        let state = random_product_state(&mut rng);
        let value = bell_operator_value(&state, &a1, &a2, &b1, &b2).unwrap();
        assert!(value.abs() <= 1.0 + 1e-9, "criterion 7: FAIL: product state gave {value}");
    }
    let attained = bell_operator_value(&singlet_state(), &a1, &a2, &b1, &b2).unwrap();
    assert!(
        (attained.abs() - SQRT_2).abs() <= 1e-9,
        "criterion 7: FAIL: singlet attains {attained}, want sqrt 2 in modulus"
    );

    finish(
        7,
        Duration::from_secs(30),
        start,
        &format!("2000 states bounded, singlet attains {attained:.6}"),
    );
}

#[test]
fn criterion_8_diagonal_common_causes_collapse_to_the_state_vector() {
    let start = Instant::now();
    let scenario = Scenario::two_events();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dim = 8usize;

    let mut screened = 0usize;
    for _ in 0..100 {
        use rand::Rng;
        let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let rho = DensityOperator::new(ComplexMatrix::from_real_diag(&weights)).unwrap();

        let mask_projection = |mask: u32| {
            let diag: Vec<f64> =
                (0..dim).map(|k| if mask >> k & 1 == 1 { 1.0 } else { 0.0 }).collect();
            ProjectionEvent::new(ComplexMatrix::from_real_diag(&diag)).unwrap()
        };
        let events = vec![
            mask_projection(rng.gen_range(0..1u32 << dim)),
            mask_projection(rng.gen_range(0..1u32 << dim)),
        ];

        // the atomic partition always screens; a random 3-cell one rarely does
        let atomic: Vec<ProjectionEvent> =
            (0..dim).map(|k| mask_projection(1 << k)).collect();
        let mut coarse_masks = [0u32; 3];
        for k in 0..dim {
            coarse_masks[rng.gen_range(0..3)] |= 1 << k;
        }
        let coarse: Vec<ProjectionEvent> = coarse_masks
            .iter()
            .filter(|&&mask| mask != 0)
            .map(|&mask| mask_projection(mask))
            .collect();

        for partition in [&atomic, &coarse] {
            let report =
                quantum_common_cause_check(&scenario, &rho, &events, partition).unwrap();
            if !report.screens_off {
                continue;
            }
            screened += 1;
            assert!(
                report.max_delta <= 1e-9,
                "criterion 8: FAIL: collapse drifts by {}",
                report.max_delta
            );
            let verdict = membership(&report.collapsed, VertexFamily::Classical).unwrap();
            assert!(verdict.inside, "criterion 8: FAIL: collapsed vector left the hull");
        }
    }
    assert!(screened >= 100, "criterion 8: FAIL: only {screened} partitions screened");

    finish(
        8,
        Duration::from_secs(30),
        start,
        &format!("{screened} screening partitions collapsed onto the state vector"),
    );
}

fn quantum_mix(scenario: &Scenario, rng: &mut ChaCha8Rng) -> CorrelationVector<Rational> {
    use rand::Rng;
    let vertices = enumerate_quantum_vertices(scenario);
    let raw: Vec<i64> = (0..vertices.len()).map(|_| rng.gen_range(0..=6i64)).collect();
    let total = raw.iter().sum::<i64>().max(1);
    let mut acc = vec![Rational::zero(); scenario.dim()];
    for (v, w) in vertices.iter().zip(&raw) {
        let weight = Rational::from_fraction(*w, total);
        for (slot, coord) in acc.iter_mut().zip(v.to_vector::<Rational>().coordinates()) {
            *slot = slot.clone() + weight.clone() * coord;
        }
    }
    CorrelationVector::new(
        scenario.clone(),
        acc[..scenario.n()].to_vec(),
        acc[scenario.n()..].to_vec(),
    )
    .unwrap()
}

/// Draws one sample per round (classical mix, quantum mix, or cube point)
/// and asserts the chain of hull verdicts on it.
fn nesting_round<S: Scalar>(p: &CorrelationVector<S>, kind: usize) {
    let inside = |family| membership(p, family).unwrap().inside;
    let in_classical = inside(VertexFamily::Classical);
    let in_quantum = inside(VertexFamily::Quantum);
    let in_general = inside(VertexFamily::General);
    assert!(
        (!in_classical || in_quantum) && (!in_quantum || in_general),
        "criterion 9: FAIL: nesting broke on {p:?} \
         (c={in_classical}, q={in_quantum}, u={in_general})"
    );
    match kind {
        0..=3 => assert!(in_classical, "criterion 9: FAIL: hull sample escaped its hull"),
        4..=6 => assert!(in_quantum, "criterion 9: FAIL: quantum mix escaped its hull"),
        _ => assert!(in_general, "criterion 9: FAIL: a cube point left the cube"),
    }
}

#[test]
fn criterion_9_hulls_nest_and_the_quantum_one_is_strictly_larger() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    for scenario in [Scenario::two_events(), Scenario::two_by_two()] {
        assert!(
            enumerate_quantum_vertices(&scenario).len()
                > enumerate_classical_vertices(&scenario).len()
        );
        // the small scenario runs in exact arithmetic; the four-event one in
        // floats, where the larger vertex families stay cheap
        let exact = scenario.n() == 2;
        for round in 0..1_000 {
            let kind = round % 10;
            let p = match kind {
                0..=3 => random_hull_point(&scenario, &mut rng, 12),
                4..=6 => quantum_mix(&scenario, &mut rng),
                _ => random_rational_vector(&scenario, &mut rng, 24),
            };
            if exact {
                nesting_round(&p, kind);
            } else {
                nesting_round(&p.to_float(), kind);
            }
        }
    }

    // strictness witness at n=2: both claims true exactly
    let witness = vector(
        &[r(1, 1), r(1, 1)],
        &[r(0, 1)],
        Scenario::two_events(),
    );
    assert!(!membership(&witness, VertexFamily::Classical).unwrap().inside);
    assert!(membership(&witness, VertexFamily::Quantum).unwrap().inside);

    finish(
        9,
        Duration::from_secs(30),
        start,
        "2000 vectors nest; (1,1;0) separates quantum from classical",
    );
}

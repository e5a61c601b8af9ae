//! Randomized invariants over the classical pipeline: exact independence
//! checks, convexity of expansions, membership reconstruction, certificate
//! soundness, representation builders, and the decomposition round trip.

use bellscope::arith::{Rational, Scalar};
use bellscope::classical_rep::{
    build_conditional_rep, build_kolmogorov_rep, check_nonsignaling, verify_conditional_rep,
    ConditionalRep, RepError,
};
use bellscope::common_cause::{
    build_propensity_explanation, decompose_deterministic, extract_kolmogorov_from_propensity,
    CommonCauseError,
};
use bellscope::polytope::{membership, product_expansion, Certificate};
use bellscope::scenario::{enumerate_quantum_vertices, CorrelationVector, Scenario, VertexFamily};
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_fraction(n, d)
}

fn unit_rational() -> impl Strategy<Value = Rational> {
    (1i64..=24).prop_flat_map(|d| (0i64..=d).prop_map(move |n| r(n, d)))
}

fn interior_rational() -> impl Strategy<Value = Rational> {
    (2i64..=24).prop_flat_map(|d| (1i64..d).prop_map(move |n| r(n, d)))
}

fn vec2(p1: Rational, p2: Rational, p12: Rational) -> CorrelationVector<Rational> {
    CorrelationVector::new(Scenario::two_events(), vec![p1, p2], vec![p12]).unwrap()
}

/// Convex mixtures of the four classical vertices of the n=2 scenario.
fn hull_point() -> impl Strategy<Value = CorrelationVector<Rational>> {
    (0i64..=8, 0i64..=8, 0i64..=8, 1i64..=8).prop_map(|(w00, w01, w10, w11)| {
        let total = w00 + w01 + w10 + w11;
        vec2(
            r(w10 + w11, total),
            r(w01 + w11, total),
            r(w11, total),
        )
    })
}

/// Vectors with `p1 + p2 − p12 > 1`: inside the unit cube and the Frechet
/// band, outside the classical hull.
fn bell_violating_point() -> impl Strategy<Value = CorrelationVector<Rational>> {
    (13i64..=23, 13i64..=23)
        .prop_flat_map(|(na, nb)| {
            (1i64..=(na + nb - 25)).prop_map(move |nc| vec2(r(na, 24), r(nb, 24), r(nc, 24)))
        })
}

/// Vectors with `p12 > min(p1, p2)`: outside even the quantum hull.
fn outside_quantum_point() -> impl Strategy<Value = CorrelationVector<Rational>> {
    (1i64..=23, 1i64..=23)
        .prop_flat_map(|(na, nb)| {
            let lo = na.min(nb) + 1;
            (lo..=24).prop_map(move |nc| vec2(r(na, 24), r(nb, 24), r(nc, 24)))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn independence_is_decided_exactly(a in unit_rational(), b in unit_rational()) {
        let product = vec2(a.clone(), b.clone(), a.clone() * b.clone());
        prop_assert!(product.is_independence_vector(&Rational::zero()));

        let nudged = a.clone() * b.clone() + r(1, 97);
        if nudged <= Rational::one() {
            let off = vec2(a, b, nudged);
            prop_assert!(!off.is_independence_vector(&Rational::zero()));
        }
    }

    #[test]
    fn product_expansions_are_convex_and_rebuild(a in unit_rational(), b in unit_rational()) {
        let p = vec2(a.clone(), b.clone(), a * b);
        let lambda = product_expansion(&p, &Rational::zero()).unwrap();
        let mut total = Rational::zero();
        for (_, w) in &lambda {
            prop_assert!(!w.is_negative());
            total = total + w.clone();
        }
        prop_assert_eq!(total, Rational::one());
        // the expansion is a valid Kolmogorovian representation
        build_kolmogorov_rep(&p, &lambda).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn membership_reconstructs_hull_points(p in hull_point()) {
        let result = membership(&p, VertexFamily::Classical).unwrap();
        prop_assert!(result.inside);
        prop_assert_eq!(result.reconstruct().unwrap(), p);
    }

    #[test]
    fn kolmogorov_reps_pass_the_unconditional_reading(p in hull_point()) {
        let result = membership(&p, VertexFamily::Classical).unwrap();
        let lambda: Vec<(u32, Rational)> = result
            .coefficients
            .unwrap()
            .into_iter()
            .map(|(v, w)| (v.singles_bits(), w))
            .collect();
        let space = build_kolmogorov_rep(&p, &lambda).unwrap();
        let rep = ConditionalRep::from_unconditional(space, Scenario::two_events()).unwrap();
        prop_assert!(check_nonsignaling(&rep).unwrap().nonsignaling);
        prop_assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
    }

    #[test]
    fn separating_functionals_are_sound_outside_the_quantum_hull(p in outside_quantum_point()) {
        let result = membership(&p, VertexFamily::Quantum).unwrap();
        prop_assert!(!result.inside);
        match result.certificate.unwrap() {
            Certificate::Functional(f) => {
                prop_assert!(f.value_at_point.is_positive());
                for v in enumerate_quantum_vertices(p.scenario()) {
                    prop_assert!(!f.evaluate(&v.to_vector()).is_positive());
                }
            }
            Certificate::Facet(facet) => prop_assert!(!facet.satisfied),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conditional_builder_reaches_interior_vectors(
        p1 in interior_rational(),
        p2 in interior_rational(),
        p12 in interior_rational(),
    ) {
        let p = vec2(p1, p2, p12);
        let rep = build_conditional_rep(&p, false).unwrap();
        prop_assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
    }

    #[test]
    fn inadmissible_vectors_fail_before_any_solve(
        a in interior_rational(),
        c in interior_rational(),
    ) {
        let zero_first = vec2(Rational::zero(), a.clone(), c.clone());
        prop_assert!(matches!(
            build_conditional_rep(&zero_first, false),
            Err(RepError::Inadmissible(..))
        ));
        let zero_second = vec2(a, Rational::zero(), c);
        prop_assert!(matches!(
            build_conditional_rep(&zero_second, false),
            Err(RepError::Inadmissible(..))
        ));
    }

    #[test]
    fn bell_violations_are_representable_but_not_explainable(p in bell_violating_point()) {
        let rep = build_conditional_rep(&p, false).unwrap();
        prop_assert!(verify_conditional_rep(&rep, &p).unwrap().ok);
        prop_assert!(matches!(
            decompose_deterministic(&p),
            Err(CommonCauseError::NotClassical(..))
        ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// Decompose, explain, extract: the full round trip over random
    /// classical points, with the explanation space itself checked to be
    /// non-signaling.
    #[test]
    fn explanation_round_trip_recovers_the_vector(p in hull_point()) {
        let decomposition = decompose_deterministic(&p).unwrap();
        prop_assert_eq!(decomposition.mixture(), &p);

        let lambda: Vec<(u32, Rational)> = decomposition
            .keys()
            .iter()
            .copied()
            .zip(decomposition.weights().iter().cloned())
            .collect();
        let base = build_kolmogorov_rep(&p, &lambda).unwrap();
        let rep = ConditionalRep::from_unconditional(base, Scenario::two_events()).unwrap();

        let explanation = build_propensity_explanation(&p, &decomposition, &rep).unwrap();
        prop_assert!(explanation.screening.screens_off);

        let as_conditional = ConditionalRep::new(
            explanation.space.clone(),
            explanation.scenario.clone(),
        )
        .unwrap();
        prop_assert!(check_nonsignaling(&as_conditional).unwrap().nonsignaling);

        let extracted = extract_kolmogorov_from_propensity(&explanation).unwrap();
        for i in 1..=2 {
            prop_assert_eq!(&extracted.prob(&format!("A{i}")).unwrap(), p.single(i));
        }
        prop_assert_eq!(
            extracted.prob_all(&["A1", "A2"]).unwrap(),
            p.pair(1, 2).unwrap().clone()
        );
    }
}

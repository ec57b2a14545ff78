use proptest::prelude::*;
use rwce::mc::{estimate_hit_probability, Harness, HitQuery};
use rwce::walk::{exact_hit_probability, VertexSet};
use rwce::{EnvironmentSpec, Rule, Topology, Vertex};

fn segment_query(env: EnvironmentSpec, start: i64, target: i64) -> HitQuery {
    HitQuery {
        topology: Topology::LineN,
        env,
        start: Vertex::Int(start),
        target: VertexSet::point(Vertex::Int(target)),
        stop: VertexSet::point(Vertex::Int(0)),
        step_cap: 1_000_000,
    }
}

#[test]
fn gamblers_ruin_three_of_ten() {
    let exact = exact_hit_probability(&[1.0; 10], 3).unwrap();
    assert!((exact - 0.3).abs() < 1e-15);
    let q = segment_query(EnvironmentSpec::Constant { c: 1.0 }, 3, 10);
    let r = estimate_hit_probability(&q, 10_000, 11, &Harness::new(0)).unwrap();
    let sigma = (0.3f64 * 0.7 / 10_000.0).sqrt();
    assert_eq!(r.capped, 0);
    assert!((r.estimate.estimate - 0.3).abs() < 3.0 * sigma, "{:?}", r.estimate);
}

/// Twenty frozen geometric environments: an adaptive edge whose target equals
/// its base never changes anything.
#[test]
fn frozen_weights_match_the_exact_solver() {
    let harness = Harness::new(0);
    let mut scenario = 0u64;
    for base in [0.5, 0.8, 1.0, 1.25, 2.0] {
        for (start, v) in [(1i64, 4i32), (3, 8), (5, 12), (2, 15)] {
            let rule = Rule::Geometric { scale: 1.5, base };
            let env = EnvironmentSpec::AdaptiveEdge {
                base: rule.clone(),
                target: rule,
                edges: Default::default(),
            };
            let weights: Vec<f64> = (0..v).map(|j| 1.5 * f64::powi(base, j)).collect();
            let exact = exact_hit_probability(&weights, start as usize).unwrap();
            let q = segment_query(env, start, v as i64);
            let r = estimate_hit_probability(&q, 4000, 100 + scenario, &harness).unwrap();
            let sigma = (exact * (1.0 - exact) / 4000.0).sqrt().max(1e-3);
            assert!(
                (r.estimate.estimate - exact).abs() < 4.0 * sigma,
                "base {base} start {start} v {v}: {} vs {exact}",
                r.estimate.estimate
            );
            scenario += 1;
        }
    }
}

#[test]
fn adaptive_bias_is_a_two_to_one_ruin() {
    // the boosted right edge makes every interior step go right with odds 2:1
    let ruin = |s: i32, v: i32| (1.0 - 0.5f64.powi(s)) / (1.0 - 0.5f64.powi(v));
    let harness = Harness::new(0);
    for (s, v, seed) in [(1, 5, 1), (2, 6, 2), (3, 10, 3)] {
        let q = segment_query(EnvironmentSpec::AdaptiveBias, s as i64, v as i64);
        let r = estimate_hit_probability(&q, 10_000, seed, &harness).unwrap();
        let p = ruin(s, v);
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        assert!((r.estimate.estimate - p).abs() < 4.0 * sigma, "{s}->{v}: {} vs {p}", r.estimate.estimate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exact_solver_is_a_resistance_ratio(
        weights in prop::collection::vec(1e-3f64..1e3, 2..40),
        pick in 0.0f64..1.0,
    ) {
        let v = weights.len();
        let start = ((pick * (v + 1) as f64) as usize).min(v);
        let r = |k: usize| weights[..k].iter().map(|c| 1.0 / c).sum::<f64>();
        let oracle = r(start) / r(v);
        let got = exact_hit_probability(&weights, start).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-9 * oracle.max(1e-300) + 1e-12, "{got} vs {oracle}");
    }
}

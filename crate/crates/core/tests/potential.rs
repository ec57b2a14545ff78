use proptest::prelude::*;
use rwce::mc::shipped_scenarios;
use rwce::potential::{
    martingale_monitor, potential_from_flow, tree_effective_resistance, tree_unit_current_flow, Direction,
    PotentialSequence,
};
use rwce::walk::run;
use rwce::{Edge, Environment, RootedTree};

/// Series-parallel resistance from `v` to depth `radius`, computed from
/// explicit child lists and a weight per child.
fn oracle_resistance(children: &[Vec<usize>], w: &[f64], depth: &[u32], v: usize, radius: u32) -> f64 {
    if depth[v] == radius {
        return 0.0;
    }
    let g: f64 = children[v]
        .iter()
        .map(|&c| {
            let r = 1.0 / w[c] + oracle_resistance(children, w, depth, c, radius);
            if r.is_finite() {
                1.0 / r
            } else {
                0.0
            }
        })
        .sum();
    1.0 / g
}

#[test]
fn binary_tree_depth_twelve() {
    let tree = RootedTree::regular(2, 12).unwrap();
    let r = tree_effective_resistance(&tree, |_| 1.0, 12).unwrap();
    assert!((r - (1.0 - 2f64.powi(-12))).abs() <= 1e-12, "{r}");
    let flow = tree_unit_current_flow(&tree, |_| 1.0, 12).unwrap();
    assert!((flow.root_outflow(&tree) - 1.0).abs() <= 1e-12);
    for v in 1..tree.len() as u32 {
        if tree.depth(v) < 12 {
            assert!(flow.node_residual(&tree, v).abs() <= 1e-12, "node {v}");
        }
    }
    let f = potential_from_flow(&tree, |_| 1.0, &flow).unwrap();
    for v in tree.level_vertices(12) {
        assert!((f[v as usize] - r).abs() <= 1e-12, "boundary {v}: {}", f[v as usize]);
    }
}

fn small_tree() -> impl Strategy<Value = Vec<Vec<usize>>> {
    // child counts per vertex in breadth-first order, depth <= 5
    prop::collection::vec(0usize..4, 1..60).prop_map(|counts| {
        let mut children: Vec<Vec<usize>> = vec![Vec::new()];
        let mut depth = vec![0u32];
        let mut next = 0;
        while next < children.len() && next < counts.len() {
            if depth[next] < 5 {
                for _ in 0..counts[next] {
                    let c = children.len();
                    children.push(Vec::new());
                    depth.push(depth[next] + 1);
                    children[next].push(c);
                }
            }
            next += 1;
        }
        children
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn resistance_matches_series_parallel_and_rayleigh(
        children in small_tree(),
        raw in prop::collection::vec(0.01f64..100.0, 400),
        bump in 1.0f64..10.0,
        pick in 0usize..400,
    ) {
        let tree = RootedTree::from_children(&children).unwrap();
        prop_assume!(tree.max_depth() >= 1);
        let radius = tree.max_depth();
        let n = children.len();
        let mut depth = vec![0u32; n];
        for (p, cs) in children.iter().enumerate() {
            for &c in cs {
                depth[c] = depth[p] + 1;
            }
        }
        let w: Vec<f64> = raw[..n].to_vec();
        let weight = |e: Edge| match e {
            Edge::Tree(c, _) => w[c as usize],
            _ => unreachable!(),
        };
        let r = tree_effective_resistance(&tree, weight, radius).unwrap();
        let oracle = oracle_resistance(&children, &w, &depth, 0, radius);
        prop_assert!((r - oracle).abs() <= 1e-9 * oracle, "{r} vs {oracle}");

        // raising one conductance cannot raise the resistance
        let k = 1 + pick % (n - 1).max(1);
        let mut w2 = w.clone();
        w2[k.min(n - 1)] *= bump;
        let r2 = tree_effective_resistance(&tree, |e| match e {
            Edge::Tree(c, _) => w2[c as usize],
            _ => unreachable!(),
        }, radius).unwrap();
        prop_assert!(r2 <= r * (1.0 + 1e-12), "{r2} > {r}");
    }
}

fn line_potential(name: &str) -> PotentialSequence {
    match name {
        "inc_rec_N" | "dec_tra_N" => PotentialSequence::LineToZero,
        "inc_tra_N" => PotentialSequence::LineToInfinity {
            horizon: 60,
            analytic_tail: true,
        },
        _ => PotentialSequence::LineToInfinity {
            horizon: 10,
            analytic_tail: false,
        },
    }
}

#[test]
fn monitors_on_the_line_scenarios() {
    for sc in shipped_scenarios().into_iter().filter(|s| s.theorem.as_str().ends_with("_N")) {
        let topo = sc.topology.build().unwrap();
        let env = Environment::new(&sc.env, &topo).unwrap();
        let potential = line_potential(sc.theorem.as_str());
        for seed in 0..100 {
            let tr = run(&topo, env.clone(), sc.start, 1000, seed).unwrap();
            let rep = martingale_monitor(&tr, &topo, &env, seed, &potential).unwrap();
            assert_ne!(rep.direction, Direction::Neither);
            assert!(rep.max_abs_residual() <= 1e-12, "{} seed {seed}", sc.name);
            assert!(rep.drift_has_sign(1e-12), "{} seed {seed}", sc.name);
        }
    }
}

#[test]
fn monitor_on_the_tree_scenario() {
    let sc = shipped_scenarios()
        .into_iter()
        .find(|s| s.theorem.as_str() == "inc_rec_T")
        .unwrap();
    let topo = sc.topology.build().unwrap();
    let tree = topo.as_tree().unwrap().clone();
    let env = Environment::new(&sc.env, &topo).unwrap();
    let state = env.initial_state();
    let flow = tree_unit_current_flow(&tree, |e| state.weight(e, 0), sc.level).unwrap();
    let potential = PotentialSequence::TreeFlowVoltage {
        flow: std::sync::Arc::new(flow),
    };
    for seed in 0..20 {
        let tr = run(&topo, env.clone(), sc.start, 1000, seed).unwrap();
        let rep = martingale_monitor(&tr, &topo, &env, seed, &potential).unwrap();
        assert_eq!(rep.direction, Direction::Super);
        assert!(rep.drift_has_sign(1e-12), "seed {seed}");
    }
}

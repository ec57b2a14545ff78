//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Always exits 0 so the workspace test run reports the lines without
//! aborting; set `RWCE_ACCEPTANCE_STRICT=1` to exit 1 on any failure.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rwce::env::always_right_probability;
use rwce::maw::{
    count_separated_tan_points, coupled_step, d_bound_statistic, drift_experiment, is_tan_point, run_coupled,
    srw_path, CoupledState, Site, TanCheck, WidthRule, JOINT, JOINT_DENOM,
};
use rwce::mc::{
    check_theorem_bound, derive_trial_seed, estimate_hit_probability, recurrence_profile, shipped_scenarios, Harness,
    HitQuery, Verdict,
};
use rwce::potential::{
    martingale_monitor, potential_from_flow, tree_effective_resistance, tree_unit_current_flow, Direction,
    PotentialSequence,
};
use rwce::walk::{exact_hit_probability, run, transition_distribution, Recording, RunOptions, VertexSet};
use rwce::{ConductanceState, Edge, Environment, EnvironmentSpec, Monotonicity, RootedTree, Rule, Topology, Vertex, Walker};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1: transition law against C(x,v) / sum of C(x,.) in canonical order

fn law_case(topology: &Topology, at: Vertex, expected: &[(Vertex, Edge)], rng: &mut Pcg64Mcg) -> Result<(), String> {
    let weights: HashMap<Edge, f64> = expected.iter().map(|&(_, e)| (e, 10f64.powf(rng.gen_range(-3.0..3.0)))).collect();
    let env = Environment::new(&EnvironmentSpec::Constant { c: 1.0 }, topology).map_err(|e| e.to_string())?;
    let mut st = Walker::new(topology.clone(), env, at, 0).map_err(|e| e.to_string())?.state().clone();
    let mut cs = ConductanceState::new(Rule::Constant { c: 1.0 }, Monotonicity::None, None, None);
    for (&e, &c) in &weights {
        cs.apply(e, c, 0).map_err(|e| e.to_string())?;
    }
    st.conductances = cs;
    let got = transition_distribution(topology, &st).map_err(|e| e.to_string())?;
    let total: f64 = weights.values().sum();
    ensure(got.len() == expected.len(), || format!("{at}: {} neighbors", got.len()))?;
    for ((v, p), (u, e)) in got.iter().zip(expected) {
        ensure(v == u, || format!("{at}: neighbor {v} where {u} expected"))?;
        let want = weights[e] / total;
        ensure((p - want).abs() <= 1e-15, || format!("{at}: {p} vs {want}"))?;
    }
    let s: f64 = got.iter().map(|(_, p)| p).sum();
    ensure((s - 1.0).abs() <= 1e-15, || format!("{at}: sum {s}"))
}

fn transition_law() -> Outcome {
    let mut rng = Pcg64Mcg::seed_from_u64(1);
    let tree = RootedTree::regular(3, 5).map_err(|e| e.to_string())?;
    let tree_topo = Topology::tree(tree.clone());
    for _ in 0..1000 {
        let x: i64 = rng.gen_range(-40..40);
        let y: i64 = rng.gen_range(-40..40);
        match rng.gen_range(0..4) {
            0 => {
                let x = x.abs();
                let mut exp = Vec::new();
                if x > 0 {
                    exp.push((Vertex::Int(x - 1), Edge::Line(x - 1)));
                }
                exp.push((Vertex::Int(x + 1), Edge::Line(x)));
                law_case(&Topology::LineN, Vertex::Int(x), &exp, &mut rng)?;
            }
            1 => {
                let exp = [(Vertex::Int(x - 1), Edge::Line(x - 1)), (Vertex::Int(x + 1), Edge::Line(x))];
                law_case(&Topology::LineZ, Vertex::Int(x), &exp, &mut rng)?;
            }
            2 => {
                let exp = [
                    (Vertex::Site(x - 1, y), Edge::Horizontal(x - 1, y)),
                    (Vertex::Site(x, y + 1), Edge::Vertical(x, y)),
                    (Vertex::Site(x + 1, y), Edge::Horizontal(x, y)),
                    (Vertex::Site(x, y - 1), Edge::Vertical(x, y - 1)),
                ];
                law_case(&Topology::Lattice2D, Vertex::Site(x, y), &exp, &mut rng)?;
            }
            _ => {
                // complete ternary tree in breadth-first labels: parent (v-1)/3, children 3v+1..3v+3
                let v = rng.gen_range(0..tree.len() as u32);
                let d = tree.depth(v);
                let mut exp = Vec::new();
                if v > 0 {
                    exp.push((Vertex::Node((v - 1) / 3), Edge::Tree(v, d - 1)));
                }
                if d < 5 {
                    for c in 3 * v + 1..=3 * v + 3 {
                        exp.push((Vertex::Node(c), Edge::Tree(c, d)));
                    }
                }
                law_case(&tree_topo, Vertex::Node(v), &exp, &mut rng)?;
            }
        }
    }
    Ok("1000 configurations within 1e-15".into())
}

// 2: gambler's ruin

fn gamblers_ruin() -> Outcome {
    let exact = exact_hit_probability(&[1.0; 10], 3).map_err(|e| e.to_string())?;
    ensure((exact - 0.3).abs() < 1e-15, || format!("exact {exact}"))?;
    let q = HitQuery {
        topology: Topology::LineN,
        env: EnvironmentSpec::Constant { c: 1.0 },
        start: Vertex::Int(3),
        target: VertexSet::point(Vertex::Int(10)),
        stop: VertexSet::point(Vertex::Int(0)),
        step_cap: 1_000_000,
    };
    let trials = 10_000;
    let r = estimate_hit_probability(&q, trials, 2, &Harness::new(0)).map_err(|e| e.to_string())?;
    let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
    let p = r.estimate.estimate;
    let detail = format!("p = {p:.4}, oracle {exact}, 3 sigma = {:.4}", 3.0 * sigma);
    ensure(r.capped == 0 && (p - exact).abs() <= 3.0 * sigma, || detail.clone())?;
    Ok(detail)
}

// 3: potentials along the four line scenarios

fn monitors() -> Outcome {
    let mut worst = 0.0f64;
    let mut n = 0;
    for sc in shipped_scenarios().into_iter().filter(|s| s.theorem.as_str().ends_with("_N")) {
        let topo = sc.topology.build().map_err(|e| e.to_string())?;
        let env = Environment::new(&sc.env, &topo).map_err(|e| e.to_string())?;
        let potential = match sc.theorem.as_str() {
            "inc_rec_N" | "dec_tra_N" => PotentialSequence::LineToZero,
            "inc_tra_N" => PotentialSequence::LineToInfinity {
                horizon: 60,
                analytic_tail: true,
            },
            _ => PotentialSequence::LineToInfinity {
                horizon: 10,
                analytic_tail: false,
            },
        };
        for seed in 0..100 {
            let tr = run(&topo, env.clone(), sc.start, 1000, seed).map_err(|e| e.to_string())?;
            let rep = martingale_monitor(&tr, &topo, &env, seed, &potential).map_err(|e| e.to_string())?;
            ensure(rep.direction != Direction::Neither, || format!("{}: no drift direction", sc.name))?;
            worst = worst.max(rep.max_abs_residual());
            ensure(rep.max_abs_residual() <= 1e-12, || format!("{} seed {seed}: residual {}", sc.name, rep.max_abs_residual()))?;
            ensure(rep.drift_has_sign(1e-12), || format!("{} seed {seed}: drift sign", sc.name))?;
        }
        n += 1;
    }
    ensure(n == 4, || format!("{n} line scenarios"))?;
    Ok(format!("4 scenarios x 100 runs, max residual {worst:.1e}, drift signs hold"))
}

// 4: binary tree electricity

fn tree_electricity() -> Outcome {
    let tree = RootedTree::regular(2, 12).map_err(|e| e.to_string())?;
    let r = tree_effective_resistance(&tree, |_| 1.0, 12).map_err(|e| e.to_string())?;
    let want = 1.0 - 2f64.powi(-12);
    ensure((r - want).abs() <= 1e-12, || format!("R = {r}, expected {want}"))?;
    let flow = tree_unit_current_flow(&tree, |_| 1.0, 12).map_err(|e| e.to_string())?;
    ensure((flow.root_outflow(&tree) - 1.0).abs() <= 1e-12, || "root outflow".into())?;
    let mut worst = 0.0f64;
    for v in 1..tree.len() as u32 {
        if tree.depth(v) < 12 {
            worst = worst.max(flow.node_residual(&tree, v).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("node residual {worst}"))?;
    let f = potential_from_flow(&tree, |_| 1.0, &flow).map_err(|e| e.to_string())?;
    for v in tree.level_vertices(12) {
        ensure((f[v as usize] - r).abs() <= 1e-12, || format!("boundary voltage {}", f[v as usize]))?;
    }
    Ok(format!("R = {r:.15}, max node residual {worst:.1e}"))
}

// 5: theorem bounds

fn theorem_bounds() -> Outcome {
    let harness = Harness::new(0);
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for sc in shipped_scenarios() {
        let r = check_theorem_bound(&sc, &harness).map_err(|e| e.to_string())?;
        lines.push(format!("{} {:.4}/{:.4}", r.theorem, r.estimate.estimate, r.bound));
        if r.verdict != Verdict::Consistent {
            bad.push(format!("{}: {}", r.scenario, r.verdict.as_str()));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("all consistent ({})", lines.join(", ")))
}

// 6: traveling wave

fn wave_transience() -> Outcome {
    let harness = Harness::new(0);
    let wave = EnvironmentSpec::Wave { period: 100, high: 100.0 };
    let steps = 100_000u64;
    let profile = recurrence_profile(&Topology::LineN, &wave, 100, steps, 6, &harness).map_err(|e| e.to_string())?;
    let min_final = profile.trials.iter().map(|p| p.final_displacement).min().unwrap_or(0);
    let mean_speed =
        profile.trials.iter().map(|p| p.final_displacement).sum::<u64>() as f64 / profile.trials.len() as f64 / steps as f64;
    let pilot_steps = 10_000_000u64;
    let env = Environment::new(&wave, &Topology::LineN).map_err(|e| e.to_string())?;
    let pilot = Walker::new(Topology::LineN, env, Vertex::Int(0), 60)
        .and_then(|w| {
            w.run(
                pilot_steps,
                &RunOptions {
                    recording: Recording::Off,
                    ..Default::default()
                },
            )
        })
        .map_err(|e| e.to_string())?;
    let pilot_speed = pilot.final_position.as_int().unwrap_or(0) as f64 / pilot_steps as f64;
    let detail = format!("min final {min_final}, mean speed {mean_speed:.4}, pilot speed {pilot_speed:.4}");
    ensure(min_final > 1000 && mean_speed > 0.2 && pilot_speed > 0.2, || detail.clone())?;
    // the short runs should move at the pilot's speed
    ensure((mean_speed - pilot_speed).abs() < 0.05, || detail.clone())?;
    Ok(detail)
}

// 7: decaying front

fn decay_front_run(seed: u64) -> (bool, bool) {
    let topo = Topology::LineN;
    let env = Environment::new(&EnvironmentSpec::DecayFront, &topo).expect("decay_front on line_n");
    let mut w = Walker::new(topo, env, Vertex::Int(0), seed).expect("origin");
    let mut all_right = true;
    for t in 0..100_000u64 {
        let mv = w.step().expect("step");
        if t < 30 && mv.to != Vertex::Int(t as i64 + 1) {
            all_right = false;
        }
        if t == 29 && all_right {
            return (true, false);
        }
        if mv.to == Vertex::Int(0) {
            return (false, true);
        }
    }
    (false, false)
}

fn mixed_type() -> Outcome {
    let p = always_right_probability(30);
    // at time t < 30 the walker sits at t with left weight 2^-(t-1) and right weight 1
    let oracle: f64 = (1..30).map(|t| 1.0 / (1.0 + 2f64.powi(1 - t))).product();
    ensure((p - oracle).abs() <= 1e-12, || format!("always_right_probability {p} vs product {oracle}"))?;
    let trials = 100_000u64;
    let runs = Harness::new(0).map(trials, |i| decay_front_run(derive_trial_seed(7, i)));
    let right = runs.iter().filter(|r| r.0).count() as u64;
    let returned = runs.iter().filter(|r| r.1).count() as u64;
    let left = trials - right;
    let frac = right as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let detail = format!("all-right {frac:.5} vs {p:.5} (3 sigma {:.5}), returned {returned}/{left}", 3.0 * sigma);
    ensure((frac - p).abs() <= 3.0 * sigma, || detail.clone())?;
    ensure(returned as f64 >= 0.99 * left as f64, || detail.clone())?;
    Ok(detail)
}

// 8: coupling table

fn coupling() -> Outcome {
    ensure(JOINT_DENOM == 28, || format!("denominator {JOINT_DENOM}"))?;
    let rows: Vec<u32> = JOINT.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u32> = (0..4).map(|m| JOINT.iter().map(|r| r[m]).sum()).collect();
    // 7/28 = 1/4; 4/28 = 1/7 and 8/28 = 2/7
    ensure(rows == [7, 7, 7, 7], || format!("row sums {rows:?}"))?;
    ensure(cols == [4, 8, 8, 8], || format!("column sums {cols:?}"))?;
    let draws = 1_000_000u64;
    let moves = Harness::new(0).map(draws, |i| {
        let mut st = CoupledState::new(derive_trial_seed(8, i));
        let mv = coupled_step(&mut st);
        (mv.srw as usize, mv.maw as usize)
    });
    let mut srw = [0u64; 4];
    let mut maw = [0u64; 4];
    for (s, m) in moves {
        srw[s] += 1;
        maw[m] += 1;
    }
    let mut worst = 0.0f64;
    for (counts, probs) in [(srw, [0.25; 4]), (maw, [1.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0])] {
        for (k, q) in counts.iter().zip(probs) {
            let z = (*k as f64 / draws as f64 - q).abs() / (q * (1.0 - q) / draws as f64).sqrt();
            worst = worst.max(z);
        }
    }
    ensure(worst < 4.0, || format!("max |z| = {worst:.2}"))?;
    Ok(format!("exact marginals, max |z| = {worst:.2} over 10^6 draws"))
}

// 9: drift of the monotone adaptive walk

fn maw_drift() -> Outcome {
    let ns: Vec<u64> = (14..=20).map(|k| 1u64 << k).collect();
    // coupled_checkpoints asserts (E-R)_1 never decreases on every step of every run
    let table = drift_experiment(&ns, 50, 9, &Harness::new(0));
    let slope = table.slope.ok_or("no slope")?;
    let detail = format!("slope {slope:.4}; (E-R)_1 nondecreasing on all 50 runs");
    ensure((0.6..=0.95).contains(&slope), || format!("{detail}; slope outside [0.6, 0.95]"))?;
    Ok(detail)
}

// 10: tan points

fn brute_tan(path: &[Site], m: usize, eps: f64, rule: WidthRule) -> Option<bool> {
    let n = path.len() - 1;
    let k = (n as f64).powf(eps).ceil() as usize;
    if !((m as f64) > (n as f64).powf(2.0 * eps) && m <= n && m >= k) {
        return None;
    }
    let (x, y) = path[m];
    if path[m - k..=m].contains(&(x - 1, y)) {
        return Some(false);
    }
    let w = rule.width(n as u64);
    let inside = path[..=m - k].iter().any(|p| {
        let (dx, dy) = (p.0 - x, p.1 - y);
        dx >= -1 && (dy.abs() as f64) <= w * ((dx + 2) as f64).sqrt()
    });
    Some(!inside)
}

fn tan_points() -> Outcome {
    let eps = 0.1;
    let rule = WidthRule::Constant(1.0);
    for seed in 0..10 {
        let path = srw_path(400, seed);
        for m in 0..path.len() {
            let want = match brute_tan(&path, m, eps, rule) {
                None => TanCheck::OutOfWindow,
                Some(true) => TanCheck::Tan,
                Some(false) => TanCheck::NotTan,
            };
            let got = is_tan_point(&path, m, eps, rule);
            ensure(got == want, || format!("seed {seed} m {m}: {got:?} vs {want:?}"))?;
        }
        let tr = run_coupled(600, seed);
        let d = tr.differences();
        let mut best = 0.0f64;
        for k in 0..d.len() {
            for l in k + 1..d.len() {
                best = best.max((d[l].1 - d[k].1).abs() as f64 / (((d[l].0 - d[k].0) as f64) + 1.0).sqrt());
            }
        }
        let got = d_bound_statistic(&tr).value;
        ensure(got == best, || format!("D statistic seed {seed}: {got} vs {best}"))?;
    }
    let harness = Harness::new(0);
    let mean = |n: u64| {
        let counts = harness.map(20, |i| count_separated_tan_points(&srw_path(n, derive_trial_seed(10 + n, i)), eps, rule).separated.len());
        counts.iter().sum::<usize>() as f64 / 20.0
    };
    let (a, b) = (mean(10_000), mean(100_000));
    let detail = format!("brute-force agreement; separated mean {a:.2} -> {b:.2}, ratio {:.2}", b / a);
    ensure(a > 0.0 && b >= 2.0 * a, || detail.clone())?;
    Ok(detail)
}

// 11: determinism of the reproduce suites through the binary

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.file_name().to_string_lossy().into_owned();
        // the summary records wall-clock time and the worker count
        if name != "run_summary.json" {
            files.insert(name, fs::read(entry.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn reproduce(suite: &str, workers: &str, dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_rwce"))
        .args(["reproduce", suite, "--workers", workers, "--out"])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    // a failed suite check exits 3 but still writes every output
    ensure(matches!(out.status.code(), Some(0 | 3)), || {
        format!("{suite}: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    snapshot(dir)
}

fn determinism() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("rwce-acceptance-{}", std::process::id()));
    let mut counted = 0;
    let result = (|| {
        for suite in ["theorems", "maw", "examples"] {
            let a = reproduce(suite, "1", &tmp.join(format!("{suite}-a")))?;
            let b = reproduce(suite, "1", &tmp.join(format!("{suite}-b")))?;
            let c = reproduce(suite, "8", &tmp.join(format!("{suite}-c")))?;
            ensure(!a.is_empty(), || format!("{suite}: no outputs"))?;
            ensure(a == b, || format!("{suite}: repeated runs differ"))?;
            ensure(a == c, || format!("{suite}: 1 and 8 workers differ"))?;
            counted += a.len();
        }
        Ok(())
    })();
    let _ = fs::remove_dir_all(&tmp);
    result.map(|()| format!("{counted} files identical across runs and workers 1/8"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("transition law", transition_law),
        ("gambler's ruin", gamblers_ruin),
        ("harmonicity and drift monitors", monitors),
        ("tree electricity", tree_electricity),
        ("theorem bounds", theorem_bounds),
        ("wave transience", wave_transience),
        ("decay front mixed type", mixed_type),
        ("coupling exactness", coupling),
        ("maw drift", maw_drift),
        ("tan points", tan_points),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 && std::env::var("RWCE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

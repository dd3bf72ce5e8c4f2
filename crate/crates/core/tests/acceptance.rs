//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `cargo test --test acceptance -- --nocapture` to
//! see them). Tolerances are pinned in the assertions.

use dngd::algorithms::{
    init_acc_dgd, init_acc_dngd_nsc_from, init_acc_dngd_sc, init_cngd_nsc, init_cngd_sc,
    step_acc_dgd, step_acc_dngd_nsc, step_acc_dngd_sc, step_cngd_nsc, step_cngd_sc, AlgoState,
};
use dngd::analysis::{
    certify_momentum_decay, certify_nsc_gain, certify_sc_gain, check_inexact_gradient,
    linear_rate, loglog_slope, TraceRecord,
};
use dngd::graphs::{gen_erdos_renyi, gen_grid2d, gen_k_cycle};
use dngd::harness::{emit_csv, parse_config, run};
use dngd::linalg::column_means;
use dngd::objectives::{gen_case1, ObjectiveSuite};
use dngd::schedule::StepSchedule;
use dngd::weights::laplacian_weights;
use nalgebra::{DMatrix, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn case1_setup(
    seed: u64,
    n: usize,
) -> (ObjectiveSuite, dngd::weights::WeightMatrix, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gen_erdos_renyi(n, 0.3, &mut rng, 100).unwrap();
    let w = laplacian_weights(&g).unwrap();
    let suite = gen_case1(n, 50, 3, &mut rng).unwrap();
    let x0 = DMatrix::from_fn(n, 3, |_, _| rng.random::<f64>() * 10.0 - 5.0);
    (suite, w, x0)
}

fn means(m: &DMatrix<f64>) -> RowDVector<f64> {
    column_means(m)
}

/// Relative gradient-tracking error, normalized by the natural scale of
/// the stacked gradients.
fn tracking_rel_err(st: &AlgoState, n: usize) -> f64 {
    let resid = (means(&st.s) - means(&st.prev_grad)).norm();
    let scale = (st.prev_grad.norm() / (n as f64).sqrt()).max(1e-30);
    resid / scale
}

#[test]
fn criterion_1_exact_invariants() {
    let n = 20;
    let (suite, w, x0) = case1_setup(4, n);

    // doubly stochastic to 1e-12
    let wm = w.matrix();
    for i in 0..n {
        let rs: f64 = (0..n).map(|j| wm[(i, j)]).sum();
        let cs: f64 = (0..n).map(|j| wm[(j, i)]).sum();
        assert!((rs - 1.0).abs() <= 1e-12 && (cs - 1.0).abs() <= 1e-12);
    }

    let eta = 0.1 / suite.l();
    let sched = StepSchedule::Vanishing { eta: 0.5 / suite.l(), t0: 1, beta: 0.61 };
    let fixed = StepSchedule::Fixed { eta: 0.2 / suite.l() };
    let mut sc = init_acc_dngd_sc(&suite, &w, eta, &x0).unwrap();
    let mut nsc = init_acc_dngd_nsc_from(
        &suite,
        &w,
        &sched,
        dngd::algorithms::InitMode::Relaxed,
        &x0,
    )
    .unwrap();
    let mut adgd = init_acc_dgd(&suite, &x0).unwrap();
    let alpha = sc.alpha;

    for _ in 0..1000 {
        // strongly convex variant: per-step average-sequence identities
        let (ybar, vbar, g) = (means(&sc.y), means(&sc.v), means(&sc.prev_grad));
        sc = step_acc_dngd_sc(sc, &suite, &w).unwrap();
        assert!((means(&sc.x) - (&ybar - &g * eta)).norm() <= 1e-12);
        assert!(
            (means(&sc.v) - (&vbar * (1.0 - alpha) + &ybar * alpha - &g * (eta / alpha))).norm()
                <= 1e-12
        );
        assert!(
            (means(&sc.y) - (means(&sc.x) + means(&sc.v) * alpha) / (1.0 + alpha)).norm() <= 1e-12
        );

        // general-convex variant
        let eta_t = sched.eta(nsc.t).unwrap();
        let alpha_t = nsc.alpha;
        let (ybar, vbar, g) = (means(&nsc.y), means(&nsc.v), means(&nsc.prev_grad));
        nsc = step_acc_dngd_nsc(nsc, &suite, &w, &sched).unwrap();
        assert!((means(&nsc.x) - (&ybar - &g * eta_t)).norm() <= 1e-12);
        assert!((means(&nsc.v) - (&vbar - &g * (eta_t / alpha_t))).norm() <= 1e-12);
        let a1 = nsc.alpha;
        assert!(
            (means(&nsc.y) - (means(&nsc.x) * (1.0 - a1) + means(&nsc.v) * a1)).norm() <= 1e-12
        );

        adgd = step_acc_dgd(adgd, &suite, &w, &fixed).unwrap();

        // gradient tracking at 1e-10 relative for all three
        assert!(tracking_rel_err(&sc, n) <= 1e-10, "sc t = {}", sc.t);
        assert!(tracking_rel_err(&nsc, n) <= 1e-10, "nsc t = {}", nsc.t);
        assert!(tracking_rel_err(&adgd, n) <= 1e-10, "acc_dgd t = {}", adgd.t);
    }
    println!("ACCEPTANCE criterion 1 (exact invariants over 1000 steps): PASS");
}

#[test]
fn criterion_2_single_agent_degeneration() {
    // case 1, strongly convex pair
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let suite = gen_case1(1, 25, 3, &mut rng).unwrap();
    let g1 = dngd::graphs::Graph::new(1, []).unwrap();
    let w = laplacian_weights(&g1).unwrap();
    let x0 = DMatrix::from_fn(1, 3, |_, _| rng.random::<f64>() * 10.0 - 5.0);
    let eta = 0.5 / suite.l();
    let mut dist = init_acc_dngd_sc(&suite, &w, eta, &x0).unwrap();
    let mut cent = init_cngd_sc(&suite, eta, &RowDVector::from(x0.row(0))).unwrap();
    for _ in 0..200 {
        dist = step_acc_dngd_sc(dist, &suite, &w).unwrap();
        cent = step_cngd_sc(cent, &suite).unwrap();
        for (a, b) in [(&dist.x, &cent.x), (&dist.v, &cent.v), (&dist.y, &cent.y)] {
            assert!((a - b).norm() <= 1e-12, "sc mismatch at t = {}", dist.t);
        }
    }

    // case 1 and case 3, general-convex pair with fixed step
    let single_case3 = ObjectiveSuite::from_text(
        "dngd-suite v1\nkind case3\nn 1\ndim 4\nL 3.3e1\nmu 0e0\nfstar 0e0\nxstar 0e0 0e0 0e0 0e0\na 1e0 -5e-1 2.5e-1 1e0\nb 0e0 0e0 0e0 0e0\n",
    )
    .unwrap();
    let mut r2 = ChaCha8Rng::seed_from_u64(18);
    for suite in [gen_case1(1, 25, 3, &mut r2).unwrap(), single_case3] {
        let x0 = DMatrix::from_fn(1, suite.dim(), |_, _| r2.random::<f64>() * 4.0 - 2.0);
        let sched = StepSchedule::Fixed { eta: 0.4 / suite.l() };
        let alpha0 = (sched.eta(0).unwrap() * suite.l()).sqrt();
        let mut dist = init_acc_dngd_nsc_from(
            &suite,
            &w,
            &sched,
            dngd::algorithms::InitMode::Relaxed,
            &x0,
        )
        .unwrap();
        let mut cent = init_cngd_nsc(&suite, &sched, alpha0, &RowDVector::from(x0.row(0))).unwrap();
        for _ in 0..200 {
            dist = step_acc_dngd_nsc(dist, &suite, &w, &sched).unwrap();
            cent = step_cngd_nsc(cent, &suite, &sched).unwrap();
            for (a, b) in [(&dist.x, &cent.x), (&dist.v, &cent.v), (&dist.y, &cent.y)] {
                assert!((a - b).norm() <= 1e-12, "nsc mismatch at t = {}", dist.t);
            }
        }
    }
    println!("ACCEPTANCE criterion 2 (n = 1 degeneration to centralized, 200 steps): PASS");
}

#[test]
fn criterion_3_spectral_certification() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut total_checks = 0usize;
    for sigma in [0.3, 0.6, 0.9] {
        for l in [1.0, 100.0] {
            for mu_ratio in [1e-3, 1e-1] {
                let rep = certify_sc_gain(sigma, l, mu_ratio * l, 100, &mut rng).unwrap();
                assert!(
                    rep.ok(),
                    "sc gain violations at sigma={sigma}, L={l}, mu/L={mu_ratio}: {:?}",
                    rep.violations
                );
                assert!(rep.max_eig_residual <= 1e-10);
                total_checks += rep.checks;
            }
            let rep = certify_nsc_gain(sigma, l, 100, &mut rng).unwrap();
            assert!(
                rep.ok(),
                "nsc gain violations at sigma={sigma}, L={l}: {:?}",
                rep.violations
            );
            assert!(rep.max_eig_residual <= 1e-10);
            total_checks += rep.checks;
        }
    }
    for l in [1.0, 100.0] {
        for beta in [0.61, 1.0, 1.39] {
            let rep = certify_momentum_decay(1.0 / (8.0 * l), 1, beta, l, 10_000).unwrap();
            assert!(
                rep.ok(),
                "momentum decay violations at L={l}, beta={beta}: {:?}",
                rep.violations
            );
            total_checks += rep.checks;
        }
    }
    println!("ACCEPTANCE criterion 3 (spectral certification, {total_checks} checks, 0 violations): PASS");
}

#[test]
fn criterion_4_sigma_reproduction() {
    let grid = laplacian_weights(&gen_grid2d(5, 5).unwrap()).unwrap();
    assert!(
        (grid.sigma() - 0.92361).abs() <= 1e-3,
        "grid sigma = {}",
        grid.sigma()
    );
    let kcycle = laplacian_weights(&gen_k_cycle(100, 20).unwrap()).unwrap();
    assert!(
        (kcycle.sigma() - 0.74566).abs() <= 1e-3,
        "k-cycle sigma = {}",
        kcycle.sigma()
    );
    println!(
        "ACCEPTANCE criterion 4 (sigma reproduction: grid {:.5}, k-cycle {:.5}): PASS",
        grid.sigma(),
        kcycle.sigma()
    );
}

const CRIT5_CONFIG: &str = r#"
[graph]
family = "erdos_renyi"
n = 20
p = 0.3

[weights]
method = "laplacian"

[objective]
case = "case1"

[run]
iterations = 20000
record_every = 10
seed = 4

[[algorithm]]
name = "acc_dngd_sc"
step = { eta_over_l = 0.111 }
"#;

#[test]
fn criterion_5_linear_rate() {
    let cfg = parse_config(CRIT5_CONFIG).unwrap();
    let result = run(&cfg).unwrap();
    let trace = &result.traces[0].1;
    assert!(!result.summaries[0].diverged);

    // final error within budget
    let final_err = trace.last().unwrap().avg_obj_err;
    assert!(final_err <= 1e-8, "final error {final_err:e}");

    // linear fit over the window where the error lies in [1e-9, 1e-2]
    let in_window: Vec<&TraceRecord> = trace
        .iter()
        .filter(|r| r.avg_obj_err >= 1e-9 && r.avg_obj_err <= 1e-2)
        .collect();
    assert!(in_window.len() >= 10, "window too thin: {}", in_window.len());
    let t_min = in_window.first().unwrap().t;
    let t_max = in_window.last().unwrap().t;
    let (rate, r2) = linear_rate(trace, t_min, t_max).unwrap();
    assert!(r2 >= 0.99, "r^2 = {r2}");
    assert!(rate < 1.0);
    println!(
        "ACCEPTANCE criterion 5 (linear rate: r^2 = {r2:.5}, rate = {rate:.5}, final = {final_err:.2e}): PASS"
    );
}

const CRIT6_CONFIG: &str = r#"
[graph]
family = "erdos_renyi"
n = 20
p = 0.3

[weights]
method = "laplacian"

[objective]
case = "case3"

[run]
iterations = 10000
record_every = 10
seed = 5

[[algorithm]]
name = "acc_dngd_nsc"
label = "nsc_vanishing"
step = { eta_over_l = 0.5, beta = 0.61, t0 = 1 }

[[algorithm]]
name = "acc_dngd_nsc"
label = "nsc_fixed"
step = { eta_over_l = 0.5 }

[[algorithm]]
name = "cngd_nsc"
step = { eta_over_l = 1.0, alpha0 = 0.5 }
"#;

#[test]
fn criterion_6_sublinear_rates() {
    let cfg = parse_config(CRIT6_CONFIG).unwrap();
    let result = run(&cfg).unwrap();
    let slope_of = |label: &str| {
        let trace = &result
            .traces
            .iter()
            .find(|(l, _)| l == label)
            .unwrap()
            .1;
        loglog_slope(trace, 1000, 10_000).unwrap()
    };
    let s_vanish = slope_of("nsc_vanishing");
    let s_fixed = slope_of("nsc_fixed");
    let s_cngd = slope_of("cngd_nsc");
    assert!(s_vanish <= -1.2, "vanishing slope {s_vanish}");
    assert!(s_fixed <= -1.8, "fixed slope {s_fixed}");
    assert!(s_cngd <= -1.9, "centralized slope {s_cngd}");
    println!(
        "ACCEPTANCE criterion 6 (sublinear slopes {s_vanish:.2} / {s_fixed:.2} / {s_cngd:.2}): PASS"
    );
}

fn crit7_config_case1(graph: &str, acc_step: f64) -> String {
    format!(
        r#"
{graph}

[weights]
method = "laplacian"

[objective]
case = "case1"

[run]
iterations = 5000
record_every = 50
seed = 4

[[algorithm]]
name = "acc_dngd_sc"
step = {{ eta_over_l = {acc_step} }}

[[algorithm]]
name = "extra"
step = {{ eta_over_l = 0.6 }}

[[algorithm]]
name = "dgd"
step = {{ invsqrt_c_over_l = 1.0 }}
"#
    )
}

fn crit7_config_case3(graph: &str, nsc_fixed_step: f64) -> String {
    format!(
        r#"
{graph}

[weights]
method = "laplacian"

[objective]
case = "case3"

[run]
iterations = 5000
record_every = 50
seed = 4

[[algorithm]]
name = "acc_dngd_nsc"
label = "nsc_vanishing"
step = {{ eta_over_l = 0.5, beta = 0.61, t0 = 1 }}

[[algorithm]]
name = "acc_dngd_nsc"
label = "nsc_fixed"
step = {{ eta_over_l = {nsc_fixed_step} }}

[[algorithm]]
name = "dng"
step = {{ harmonic_c_over_l = 0.5 }}
"#
    )
}

const GRAPH_RANDOM: &str = "[graph]\nfamily = \"erdos_renyi\"\nn = 20\np = 0.3";
const GRAPH_KCYCLE: &str = "[graph]\nfamily = \"k_cycle\"\nn = 20\nk = 4";
const GRAPH_GRID: &str = "[graph]\nfamily = \"grid2d\"\nrows = 5\ncols = 5";

#[test]
fn criterion_7_ordering_reproduction() {
    // tuned steps per topology, scaled to the generated suite's L
    let case1 = [
        ("random", GRAPH_RANDOM, 0.111),
        ("kcycle", GRAPH_KCYCLE, 0.0848),
        ("grid", GRAPH_GRID, 0.039),
    ];
    for (name, graph, acc) in case1 {
        let cfg = parse_config(&crit7_config_case1(graph, acc)).unwrap();
        let result = run(&cfg).unwrap();
        let err_of = |label: &str| {
            let s = result.summaries.iter().find(|s| s.label == label).unwrap();
            if s.diverged {
                f64::INFINITY
            } else {
                s.final_avg_err
            }
        };
        let (acc_e, extra_e, dgd_e) = (err_of("acc_dngd_sc"), err_of("extra"), err_of("dgd"));
        assert!(
            acc_e <= extra_e && extra_e <= dgd_e,
            "{name}: ordering broken: acc {acc_e:e}, extra {extra_e:e}, dgd {dgd_e:e}"
        );
    }

    let case3 = [
        ("random", GRAPH_RANDOM, 0.5),
        ("kcycle", GRAPH_KCYCLE, 0.4),
        ("grid", GRAPH_GRID, 0.3),
    ];
    for (name, graph, fixed) in case3 {
        let cfg = parse_config(&crit7_config_case3(graph, fixed)).unwrap();
        let result = run(&cfg).unwrap();
        let err_of = |label: &str| {
            let s = result.summaries.iter().find(|s| s.label == label).unwrap();
            // a diverged baseline is beaten by anything finite
            if s.diverged {
                f64::INFINITY
            } else {
                s.final_avg_err
            }
        };
        let dng_e = err_of("dng");
        for nsc in ["nsc_vanishing", "nsc_fixed"] {
            let e = err_of(nsc);
            assert!(
                e.is_finite() && e < dng_e,
                "{name}: {nsc} ({e:e}) must beat dng ({dng_e:e})"
            );
        }
    }
    println!("ACCEPTANCE criterion 7 (orderings on random/k-cycle/grid at t = 5000): PASS");
}

#[test]
fn criterion_8_inexact_gradient_property() {
    let (suite, w, x0) = case1_setup(4, 20);
    let mut st = init_acc_dngd_sc(&suite, &w, 0.1 / suite.l(), &x0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut checkpoints = 0;
    for t in 0..2000u64 {
        if t % 200 == 0 {
            let rep = check_inexact_gradient(&st, &suite, 100, &mut rng).unwrap();
            assert!(
                rep.ok(),
                "violations at checkpoint t = {t}: {:?}",
                rep.violations
            );
            checkpoints += 1;
        }
        st = step_acc_dngd_sc(st, &suite, &w).unwrap();
    }
    assert_eq!(checkpoints, 10);
    println!("ACCEPTANCE criterion 8 (inexact-gradient sandwich, 10 checkpoints x 100 points): PASS");
}

fn crit9_config(case: &str, step: f64) -> String {
    format!(
        r#"
[graph]
family = "grid2d"
rows = 5
cols = 5

[weights]
method = "laplacian"

[objective]
case = "{case}"

[run]
iterations = 10000
record_every = 100
seed = 4

[time_varying]
remove_fraction = 0.75

[[algorithm]]
name = "{algo}"
step = {{ eta_over_l = {step} }}
"#,
        algo = if case == "case1" { "acc_dngd_sc" } else { "acc_dngd_nsc" },
    )
}

#[test]
fn criterion_9_time_varying_convergence() {
    // thresholds and horizons pinned from pilot runs: both cases reach
    // max individual error < 1e-6 well inside 10^4 iterations
    for (case, step) in [("case1", 0.0076), ("case3", 0.3)] {
        let cfg = parse_config(&crit9_config(case, step)).unwrap();
        let result = run(&cfg).unwrap();
        assert!(!result.summaries[0].diverged, "{case} diverged");
        let trace = &result.traces[0].1;
        let hit = trace
            .iter()
            .find(|r| r.max_individual_err < 1e-6)
            .map(|r| r.t);
        assert!(
            hit.is_some(),
            "{case}: no iterate below 1e-6 within 10^4 iterations"
        );
        let last = trace.last().unwrap();
        assert!(
            last.max_individual_err < 1e-6,
            "{case}: final max individual error {:e}",
            last.max_individual_err
        );
    }
    println!("ACCEPTANCE criterion 9 (time-varying graph convergence below 1e-6): PASS");
}

#[test]
fn criterion_10_byte_identical_outputs() {
    let cfg = parse_config(&crit7_config_case1(GRAPH_RANDOM, 0.111)).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    emit_csv(&run(&cfg).unwrap(), d1.path()).unwrap();
    emit_csv(&run(&cfg).unwrap(), d2.path()).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(d1.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.len() >= 5, "expected traces + summary + meta");
    for name in &names {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across reruns");
    }
    println!("ACCEPTANCE criterion 10 (byte-identical reruns of criterion 7's config): PASS");
}

//! Declarative experiment execution: build graph, weights and objective
//! suite from a config, run every algorithm from a shared initial point
//! with split seed streams, and emit CSV traces.

pub mod config;
pub mod presets;

use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use config::{
    emit_config, parse_config, AlgorithmSpec, ExperimentConfig, GraphSpec, ObjectiveSpec, RunSpec,
    StepSpec, TimeVaryingSpec, WeightsSpec,
};
pub use presets::{find_preset, Preset, PRESETS};

use crate::algorithms::{self, AlgoState, AlgoTag, InitMode};
use crate::analysis::{linear_rate, loglog_slope, record, TraceRecord};
use crate::error::{Error, Result};
use crate::graphs::{gen_erdos_renyi, gen_grid2d, gen_k_cycle, sample_time_varying, Graph};
use crate::objectives::{gen_case1, gen_case2, gen_case3, ObjectiveSuite};
use crate::schedule::StepSchedule;
use crate::weights::{laplacian_weights, metropolis_weights, WeightMatrix};

// seed streams split off the master seed
const STREAM_GRAPH: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_INIT: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The graph used at iteration `t` of a time-varying run; identical for
/// every algorithm in the run.
fn time_varying_weights(ground: &Graph, remove_fraction: f64, master: u64, t: u64) -> WeightMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(t)));
    let g = sample_time_varying(ground, remove_fraction, &mut rng);
    metropolis_weights(&g)
}

pub fn build_graph(spec: &GraphSpec, default_seed: u64) -> Result<Graph> {
    match spec.family.as_str() {
        "erdos_renyi" => {
            let mut rng = stream_rng(spec.seed.unwrap_or(default_seed), STREAM_GRAPH);
            gen_erdos_renyi(
                spec.n.unwrap_or(0),
                spec.p.unwrap_or(-1.0),
                &mut rng,
                spec.max_retries.unwrap_or(100),
            )
        }
        "k_cycle" => gen_k_cycle(spec.n.unwrap_or(0), spec.k.unwrap_or(0)),
        "grid2d" => gen_grid2d(spec.rows.unwrap_or(0), spec.cols.unwrap_or(0)),
        other => Err(Error::Validation {
            field: "graph.family".into(),
            msg: format!("unknown family `{other}`"),
        }),
    }
}

fn build_weights(method: &str, g: &Graph) -> Result<WeightMatrix> {
    match method {
        "laplacian" => laplacian_weights(g),
        "metropolis" => Ok(metropolis_weights(g)),
        other => Err(Error::Validation {
            field: "weights.method".into(),
            msg: format!("unknown method `{other}`"),
        }),
    }
}

fn build_suite(spec: &ObjectiveSpec, n: usize, default_seed: u64) -> Result<ObjectiveSuite> {
    let mut rng = stream_rng(spec.seed.unwrap_or(default_seed), STREAM_DATA);
    match spec.case.as_str() {
        "case1" => gen_case1(
            n,
            spec.samples_per_agent.unwrap_or(50),
            spec.dim.unwrap_or(3),
            &mut rng,
        ),
        "case2" => gen_case2(
            n,
            spec.samples_per_agent.unwrap_or(100),
            spec.dim.unwrap_or(3),
            &mut rng,
        ),
        "case3" => gen_case3(n, spec.dim.unwrap_or(4), &mut rng),
        other => Err(Error::Validation {
            field: "objective.case".into(),
            msg: format!("unknown case `{other}`"),
        }),
    }
}

/// An algorithm spec with its schedule resolved against the suite
/// constants, ready to init and step.
pub struct ResolvedAlgorithm {
    pub tag: AlgoTag,
    pub label: String,
    pub schedule: StepSchedule,
    pub alpha0: Option<f64>,
}

impl ResolvedAlgorithm {
    pub fn resolve(
        spec: &AlgorithmSpec,
        idx: usize,
        l: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<Self> {
        let path = format!("algorithm[{idx}].step");
        let (schedule, alpha0) = spec.step.resolve(spec.name, l, mu, sigma, &path)?;
        Ok(Self {
            tag: spec.name,
            label: spec.label(),
            schedule,
            alpha0,
        })
    }

    fn fixed_eta(&self) -> Result<f64> {
        match self.schedule {
            StepSchedule::Fixed { eta } => Ok(eta),
            other => Err(Error::InvalidParam(format!(
                "{} needs a fixed step, got {other:?}",
                self.tag.as_str()
            ))),
        }
    }

    fn harmonic_c(&self) -> Result<f64> {
        match self.schedule {
            StepSchedule::Harmonic { c } => Ok(c),
            other => Err(Error::InvalidParam(format!(
                "dng needs a harmonic step rule, got {other:?}"
            ))),
        }
    }

    pub fn init(
        &self,
        suite: &ObjectiveSuite,
        w: &WeightMatrix,
        x0: &DMatrix<f64>,
    ) -> Result<AlgoState> {
        let x0_row: RowDVector<f64> = crate::linalg::column_means(x0);
        match self.tag {
            AlgoTag::AccDngdSc => algorithms::init_acc_dngd_sc(suite, w, self.fixed_eta()?, x0),
            AlgoTag::AccDngdNsc => algorithms::init_acc_dngd_nsc_from(
                suite,
                w,
                &self.schedule,
                InitMode::Relaxed,
                x0,
            ),
            AlgoTag::CngdSc => algorithms::init_cngd_sc(suite, self.fixed_eta()?, &x0_row),
            AlgoTag::CngdNsc => {
                let eta0 = self.schedule.eta(0)?;
                let default = (eta0 * suite.l()).sqrt();
                let alpha0 = self
                    .alpha0
                    .unwrap_or(if default < 1.0 { default } else { 0.5 });
                algorithms::init_cngd_nsc(suite, &self.schedule, alpha0, &x0_row)
            }
            AlgoTag::Cgd => algorithms::init_cgd(suite, self.fixed_eta()?, &x0_row),
            AlgoTag::Dgd => algorithms::init_dgd(suite, x0),
            AlgoTag::Dng => {
                self.harmonic_c()?;
                algorithms::init_dng(suite, x0)
            }
            AlgoTag::Dnc => algorithms::init_dnc(suite, self.fixed_eta()?, x0),
            AlgoTag::Extra => algorithms::init_extra(suite, self.fixed_eta()?, x0),
            AlgoTag::AccDgd => algorithms::init_acc_dgd(suite, x0),
        }
    }

    pub fn step(
        &self,
        st: AlgoState,
        suite: &ObjectiveSuite,
        w: &WeightMatrix,
    ) -> Result<AlgoState> {
        match self.tag {
            AlgoTag::AccDngdSc => algorithms::step_acc_dngd_sc(st, suite, w),
            AlgoTag::AccDngdNsc => algorithms::step_acc_dngd_nsc(st, suite, w, &self.schedule),
            AlgoTag::CngdSc => algorithms::step_cngd_sc(st, suite),
            AlgoTag::CngdNsc => algorithms::step_cngd_nsc(st, suite, &self.schedule),
            AlgoTag::Cgd => algorithms::step_cgd(st, suite),
            AlgoTag::Dgd => algorithms::step_dgd(st, suite, w, &self.schedule),
            AlgoTag::Dng => algorithms::step_dng(st, suite, w, self.harmonic_c()?),
            AlgoTag::Dnc => algorithms::step_dnc(st, suite, w, algorithms::dnc_default_tau),
            AlgoTag::Extra => algorithms::step_extra(st, suite, w),
            AlgoTag::AccDgd => algorithms::step_acc_dgd(st, suite, w, &self.schedule),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlgoSummary {
    pub label: String,
    pub final_avg_err: f64,
    pub final_max_err: f64,
    pub linear_rate: Option<f64>,
    pub linear_r2: Option<f64>,
    pub loglog_slope: Option<f64>,
    pub diverged: bool,
    pub diverged_at: Option<u64>,
    pub comm_total: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub sigma: f64,
    pub l: f64,
    pub mu: f64,
    pub fstar: f64,
    pub traces: Vec<(String, Vec<TraceRecord>)>,
    pub summaries: Vec<AlgoSummary>,
}

/// Build problem instance, run every algorithm from the shared initial
/// point, collect traces. One algorithm blowing up (non-finite iterates)
/// is recorded in its summary and never disturbs the others.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let master = cfg.run.seed;
    let ground = build_graph(&cfg.graph, master)?;
    let weights = build_weights(&cfg.weights.method, &ground)?;
    let suite = build_suite(&cfg.objective, ground.n(), master)?;
    let record_every = cfg.run.record_every.unwrap_or(1).max(1);
    let iterations = cfg.run.iterations;

    // shared Gaussian initial point, one row per agent
    let mut init_rng = stream_rng(master, STREAM_INIT);
    let normal = Normal::new(0.0, 5.0).unwrap();
    let mut x0 = DMatrix::zeros(suite.n(), suite.dim());
    for i in 0..suite.n() {
        for j in 0..suite.dim() {
            x0[(i, j)] = normal.sample(&mut init_rng);
        }
    }

    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    for (idx, spec) in cfg.algorithms.iter().enumerate() {
        let resolved =
            ResolvedAlgorithm::resolve(spec, idx, suite.l(), suite.mu(), weights.sigma())?;
        let started = Instant::now();
        let mut st = resolved.init(&suite, &weights, &x0)?;
        let mut trace: Vec<TraceRecord> = Vec::new();
        let mut diverged_at = None;
        loop {
            if st.t % record_every == 0 || st.t == iterations {
                match record(&st, &suite, suite.fstar()) {
                    Ok(r) => trace.push(r),
                    // objective overflow counts as divergence even while the
                    // iterates themselves are still finite
                    Err(Error::NonFinite(_)) => {
                        diverged_at = Some(trace.last().map_or(0, |r| r.t));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if st.t >= iterations {
                break;
            }
            let step_result = if let Some(tv) = &cfg.time_varying {
                let wt = time_varying_weights(&ground, tv.remove_fraction, master, st.t);
                resolved.step(st, &suite, &wt)
            } else {
                resolved.step(st, &suite, &weights)
            };
            match step_result {
                Ok(next) => st = next,
                Err(Error::NonFinite(_)) => {
                    diverged_at = Some(trace.last().map_or(0, |r| r.t));
                    break;
                }
                Err(e) => return Err(e),
            }
        }

        let last = trace.last().copied();
        let burn_in = (iterations / 10).max(100).min(iterations.saturating_sub(1));
        let (lr, lr2) = match linear_rate(&trace, burn_in, iterations) {
            Ok((r, r2)) => (Some(r), Some(r2)),
            Err(_) => (None, None),
        };
        let slope = loglog_slope(&trace, burn_in.max(1), iterations).ok();
        summaries.push(AlgoSummary {
            label: resolved.label.clone(),
            final_avg_err: last.map_or(f64::NAN, |r| r.avg_obj_err),
            final_max_err: last.map_or(f64::NAN, |r| r.max_individual_err),
            linear_rate: lr,
            linear_r2: lr2,
            loglog_slope: slope,
            diverged: diverged_at.is_some(),
            diverged_at,
            comm_total: last.map_or(0, |r| r.comm_count),
            wall_time_s: started.elapsed().as_secs_f64(),
        });
        traces.push((resolved.label, trace));
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        sigma: weights.sigma(),
        l: suite.l(),
        mu: suite.mu(),
        fstar: suite.fstar(),
        traces,
        summaries,
    })
}

pub const TRACE_HEADER: &str =
    "t,avg_obj_err,max_individual_err,consensus_y,consensus_s,grad_norm,eta_t,alpha_t,comm_count";

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            r.t,
            r.avg_obj_err,
            r.max_individual_err,
            r.consensus_y,
            r.consensus_s,
            r.grad_norm,
            r.eta_t,
            r.alpha_t,
            r.comm_count
        ));
    }
    out
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

/// One `<label>.csv` per algorithm, a `summary.csv`, and a `meta.toml`
/// echoing the config (with the instance constants as comments, so the
/// file still parses as a config).
pub fn emit_csv(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (label, trace) in &result.traces {
        std::fs::write(dir.join(format!("{label}.csv")), trace_csv(trace))?;
    }
    let mut summary = String::from(
        "algorithm,final_avg_obj_err,final_max_individual_err,linear_rate,linear_r2,loglog_slope,diverged,diverged_at,comm_total\n",
    );
    for s in &result.summaries {
        summary.push_str(&format!(
            "{},{:e},{:e},{},{},{},{},{},{}\n",
            s.label,
            s.final_avg_err,
            s.final_max_err,
            opt_fmt(s.linear_rate),
            opt_fmt(s.linear_r2),
            opt_fmt(s.loglog_slope),
            s.diverged,
            s.diverged_at.map_or(String::new(), |t| t.to_string()),
            s.comm_total
        ));
    }
    std::fs::write(dir.join("summary.csv"), summary)?;

    let meta = format!(
        "# sigma = {:e}\n# L = {:e}\n# mu = {:e}\n# fstar = {:e}\n{}",
        result.sigma,
        result.l,
        result.mu,
        result.fstar,
        emit_config(&result.config)
    );
    std::fs::write(dir.join("meta.toml"), meta)?;
    Ok(())
}

/// Compact graph descriptions for the command line:
/// `grid2d:5x5`, `k_cycle:100,20`, `erdos_renyi:100,0.3[,seed]`.
pub fn parse_graph_spec_str(text: &str) -> Result<GraphSpec> {
    let (family, rest) = text.split_once(':').ok_or_else(|| Error::Parse {
        line: 0,
        msg: format!("graph spec `{text}` missing `family:params`"),
    })?;
    let bad = |msg: String| Error::Parse { line: 0, msg };
    let mut spec = GraphSpec {
        family: String::new(),
        n: None,
        p: None,
        k: None,
        rows: None,
        cols: None,
        seed: None,
        max_retries: None,
    };
    match family {
        "grid2d" => {
            let (r, c) = rest
                .split_once('x')
                .ok_or_else(|| bad(format!("grid2d wants RxC, got `{rest}`")))?;
            spec.family = "grid2d".into();
            spec.rows = Some(r.parse().map_err(|e| bad(format!("{e}")))?);
            spec.cols = Some(c.parse().map_err(|e| bad(format!("{e}")))?);
        }
        "k_cycle" | "kcycle" => {
            let (n, k) = rest
                .split_once(',')
                .ok_or_else(|| bad(format!("k_cycle wants N,K, got `{rest}`")))?;
            spec.family = "k_cycle".into();
            spec.n = Some(n.parse().map_err(|e| bad(format!("{e}")))?);
            spec.k = Some(k.parse().map_err(|e| bad(format!("{e}")))?);
        }
        "erdos_renyi" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() < 2 {
                return Err(bad(format!("erdos_renyi wants N,P[,SEED], got `{rest}`")));
            }
            spec.family = "erdos_renyi".into();
            spec.n = Some(parts[0].parse().map_err(|e| bad(format!("{e}")))?);
            spec.p = Some(parts[1].parse().map_err(|e| bad(format!("{e}")))?);
            if parts.len() > 2 {
                spec.seed = Some(parts[2].parse().map_err(|e| bad(format!("{e}")))?);
            }
        }
        other => return Err(bad(format!("unknown graph family `{other}`"))),
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(algos: &str) -> String {
        format!(
            r#"
[graph]
family = "grid2d"
rows = 3
cols = 3

[weights]
method = "laplacian"

[objective]
case = "case1"
samples_per_agent = 15

[run]
iterations = 100
record_every = 10
seed = 11

{algos}
"#
        )
    }

    #[test]
    fn run_minimal_and_record_count() {
        let cfg = parse_config(&small_config(
            "[[algorithm]]\nname = \"acc_dngd_sc\"\nstep = { eta_over_l = 0.1 }\n",
        ))
        .unwrap();
        let result = run(&cfg).unwrap();
        assert_eq!(result.traces.len(), 1);
        let trace = &result.traces[0].1;
        // t = 0, 10, ..., 100
        assert_eq!(trace.len(), 11);
        assert_eq!(trace[0].t, 0);
        assert_eq!(trace[10].t, 100);
        // the error must drop and communication must advance
        assert!(trace[10].avg_obj_err < trace[0].avg_obj_err);
        assert_eq!(trace[10].comm_count, 100);
        assert!(!result.summaries[0].diverged);
    }

    #[test]
    fn emit_and_reparse_meta() {
        let cfg = parse_config(&small_config(
            "[[algorithm]]\nname = \"extra\"\nstep = { eta_over_l = 0.5 }\n",
        ))
        .unwrap();
        let result = run(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_csv(&result, dir.path()).unwrap();
        let trace_text = std::fs::read_to_string(dir.path().join("extra.csv")).unwrap();
        assert!(trace_text.starts_with(TRACE_HEADER));
        assert_eq!(trace_text.lines().count(), 12); // header + 11 rows
        let meta = std::fs::read_to_string(dir.path().join("meta.toml")).unwrap();
        let cfg2 = parse_config(&meta).unwrap();
        assert_eq!(cfg, cfg2);
        assert!(std::fs::read_to_string(dir.path().join("summary.csv"))
            .unwrap()
            .contains("extra"));
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(trace_csv(&[]), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn byte_identical_reruns() {
        let cfg = parse_config(&small_config(
            "[[algorithm]]\nname = \"acc_dngd_sc\"\nstep = { eta_over_l = 0.1 }\n\n[[algorithm]]\nname = \"dgd\"\nstep = { invsqrt_c_over_l = 1.0 }\n",
        ))
        .unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        emit_csv(&run(&cfg).unwrap(), d1.path()).unwrap();
        emit_csv(&run(&cfg).unwrap(), d2.path()).unwrap();
        for name in ["acc_dngd_sc.csv", "dgd.csv", "summary.csv", "meta.toml"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn divergence_is_isolated() {
        // a wildly over-stepped CGD blows up; the tracking method proceeds
        let text = small_config(
            "[[algorithm]]\nname = \"cgd\"\nstep = { eta = 1.0 }\n\n[[algorithm]]\nname = \"acc_dngd_sc\"\nstep = { eta_over_l = 0.1 }\n",
        )
        .replace("iterations = 100", "iterations = 3000");
        let cfg = parse_config(&text).unwrap();
        let result = run(&cfg).unwrap();
        let cgd = &result.summaries[0];
        assert!(cgd.diverged, "cgd should diverge at eta = 1.0");
        let acc = &result.summaries[1];
        assert!(!acc.diverged);
        assert!(acc.final_avg_err < 1e-6, "err = {:e}", acc.final_avg_err);
        // the survivor's trace is complete
        assert_eq!(result.traces[1].1.last().unwrap().t, 3000);
    }

    #[test]
    fn time_varying_run_converges_and_is_deterministic() {
        let text = r#"
[graph]
family = "grid2d"
rows = 3
cols = 3

[weights]
method = "laplacian"

[objective]
case = "case1"
samples_per_agent = 15

[run]
iterations = 2000
record_every = 100
seed = 5

[time_varying]
remove_fraction = 0.75

[[algorithm]]
name = "acc_dngd_sc"
step = { eta_over_l = 0.01 }
"#;
        let cfg = parse_config(text).unwrap();
        let r1 = run(&cfg).unwrap();
        let r2 = run(&cfg).unwrap();
        assert_eq!(r1.traces[0].1, r2.traces[0].1);
        let trace = &r1.traces[0].1;
        assert!(
            trace.last().unwrap().avg_obj_err < trace[0].avg_obj_err * 1e-3,
            "time-varying run failed to make progress"
        );
    }

    #[test]
    fn graph_spec_strings() {
        let g = parse_graph_spec_str("grid2d:5x5").unwrap();
        assert_eq!((g.rows, g.cols), (Some(5), Some(5)));
        let g = parse_graph_spec_str("k_cycle:100,20").unwrap();
        assert_eq!((g.n, g.k), (Some(100), Some(20)));
        let g = parse_graph_spec_str("erdos_renyi:30,0.3,7").unwrap();
        assert_eq!(g.seed, Some(7));
        assert!(parse_graph_spec_str("grid2d").is_err());
        assert!(parse_graph_spec_str("ring:5").is_err());
    }

    #[test]
    fn centralized_and_dnc_through_runner() {
        let cfg = parse_config(&small_config(
            "[[algorithm]]\nname = \"cngd_nsc\"\nstep = { eta_over_l = 1.0, alpha0 = 0.5 }\n\n[[algorithm]]\nname = \"dnc\"\nstep = { eta_over_l = 1.0 }\n\n[[algorithm]]\nname = \"dng\"\nstep = { harmonic_c_over_l = 0.5 }\n",
        ))
        .unwrap();
        let result = run(&cfg).unwrap();
        for s in &result.summaries {
            assert!(!s.diverged, "{} diverged", s.label);
            assert!(s.final_avg_err < result.traces[0].1[0].avg_obj_err);
        }
        // D-NC communicates more than one round per iteration
        let dnc_trace = &result.traces[1].1;
        assert!(dnc_trace.last().unwrap().comm_count > 100);
    }
}

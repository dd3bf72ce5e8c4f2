//! Experiment configuration: TOML with flat sections, unknown keys
//! rejected. The grammar is documented in the repository README.

use serde::{Deserialize, Serialize};

use crate::algorithms::bounds::{nsc_fixed_step_bound, sc_step_bound};
use crate::algorithms::AlgoTag;
use crate::error::{Error, Result};
use crate::harness::presets::find_preset;
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub weights: WeightsSpec,
    pub objective: ObjectiveSpec,
    pub run: RunSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_varying: Option<TimeVaryingSpec>,
    #[serde(rename = "algorithm")]
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// `erdos_renyi`, `k_cycle` or `grid2d`.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    /// Seed for the graph stream; defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSpec {
    /// `laplacian` or `metropolis`.
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// `case1`, `case2` or `case3`.
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_agent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Seed for the data stream; defaults to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub iterations: u64,
    /// Master seed; graph/data/init/time-varying streams split from it.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeVaryingSpec {
    pub remove_fraction: f64,
    /// Only rule: `per_iteration` (graph at iteration t drawn from a
    /// dedicated stream shared by all algorithms in the run).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reseed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: AlgoTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub step: StepSpec,
}

impl AlgorithmSpec {
    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.name.as_str().to_string())
    }
}

/// Exactly one base key (`preset` | `eta` | `eta_over_l` | `harmonic_c` |
/// `harmonic_c_over_l` | `invsqrt_c` | `invsqrt_c_over_l` |
/// `bound_fraction`); `t0`/`beta` turn an eta form into a vanishing rule;
/// `alpha0` applies to the centralized general-convex method.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_over_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_c_over_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invsqrt_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invsqrt_c_over_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
}

fn validation(field: &str, msg: impl Into<String>) -> Error {
    Error::Validation {
        field: field.into(),
        msg: msg.into(),
    }
}

impl StepSpec {
    fn base_count(&self) -> usize {
        [
            self.preset.is_some(),
            self.eta.is_some(),
            self.eta_over_l.is_some(),
            self.harmonic_c.is_some(),
            self.harmonic_c_over_l.is_some(),
            self.invsqrt_c.is_some(),
            self.invsqrt_c_over_l.is_some(),
            self.bound_fraction.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.base_count() != 1 {
            return Err(validation(
                path,
                "need exactly one of preset / eta / eta_over_l / harmonic_c(_over_l) / invsqrt_c(_over_l) / bound_fraction",
            ));
        }
        if let Some(b) = self.beta {
            if !(0.0 < b && b < 2.0) {
                return Err(validation(&format!("{path}.beta"), format!("beta = {b} outside (0, 2)")));
            }
            if self.eta.is_none() && self.eta_over_l.is_none() {
                return Err(validation(&format!("{path}.beta"), "beta needs an eta base"));
            }
        }
        if let Some(t0) = self.t0 {
            if t0 < 1 {
                return Err(validation(&format!("{path}.t0"), "t0 must be >= 1"));
            }
        }
        if let Some(name) = &self.preset {
            if find_preset(name).is_none() {
                return Err(validation(&format!("{path}.preset"), format!("unknown preset `{name}`")));
            }
        }
        if let Some(a) = self.alpha0 {
            if !(0.0 < a && a < 1.0) {
                return Err(validation(&format!("{path}.alpha0"), "alpha0 must lie in (0, 1)"));
            }
        }
        for (key, v) in [
            ("eta", self.eta),
            ("eta_over_l", self.eta_over_l),
            ("harmonic_c", self.harmonic_c),
            ("harmonic_c_over_l", self.harmonic_c_over_l),
            ("invsqrt_c", self.invsqrt_c),
            ("invsqrt_c_over_l", self.invsqrt_c_over_l),
            ("bound_fraction", self.bound_fraction),
        ] {
            if let Some(v) = v {
                if v <= 0.0 || !v.is_finite() {
                    return Err(validation(&format!("{path}.{key}"), format!("{key} = {v} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Turns this step spec into a schedule once the suite constants are
    /// known.
    pub fn resolve(
        &self,
        tag: AlgoTag,
        l: f64,
        mu: f64,
        sigma: f64,
        path: &str,
    ) -> Result<(StepSchedule, Option<f64>)> {
        self.validate(path)?;
        let with_beta = |eta: f64| -> StepSchedule {
            match self.beta {
                Some(beta) => StepSchedule::Vanishing {
                    eta,
                    t0: self.t0.unwrap_or(1),
                    beta,
                },
                None => StepSchedule::Fixed { eta },
            }
        };
        if let Some(name) = &self.preset {
            let p = find_preset(name).expect("validated");
            if p.algo != tag {
                return Err(validation(
                    &format!("{path}.preset"),
                    format!("preset `{name}` targets {}, not {}", p.algo.as_str(), tag.as_str()),
                ));
            }
            return Ok((p.schedule, self.alpha0.or(p.alpha0)));
        }
        let schedule = if let Some(eta) = self.eta {
            with_beta(eta)
        } else if let Some(r) = self.eta_over_l {
            with_beta(r / l)
        } else if let Some(c) = self.harmonic_c {
            StepSchedule::Harmonic { c }
        } else if let Some(r) = self.harmonic_c_over_l {
            StepSchedule::Harmonic { c: r / l }
        } else if let Some(c) = self.invsqrt_c {
            StepSchedule::InvSqrt { c }
        } else if let Some(r) = self.invsqrt_c_over_l {
            StepSchedule::InvSqrt { c: r / l }
        } else if let Some(frac) = self.bound_fraction {
            let bound = match tag {
                AlgoTag::AccDngdSc => sc_step_bound(sigma, l, mu)?,
                AlgoTag::AccDngdNsc => nsc_fixed_step_bound(sigma, l, mu)?,
                _ => {
                    return Err(validation(
                        &format!("{path}.bound_fraction"),
                        "bound_fraction applies only to the accelerated tracking methods",
                    ))
                }
            };
            StepSchedule::Fixed { eta: frac * bound }
        } else {
            unreachable!("validated base_count == 1")
        };
        schedule.validate()?;
        Ok((schedule, self.alpha0))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match self.graph.family.as_str() {
            "erdos_renyi" => {
                let n = self.graph.n.ok_or_else(|| validation("graph.n", "required for erdos_renyi"))?;
                let p = self.graph.p.ok_or_else(|| validation("graph.p", "required for erdos_renyi"))?;
                if n < 2 {
                    return Err(validation("graph.n", "need n >= 2"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(validation("graph.p", format!("p = {p} outside [0, 1]")));
                }
            }
            "k_cycle" => {
                let n = self.graph.n.ok_or_else(|| validation("graph.n", "required for k_cycle"))?;
                let k = self.graph.k.ok_or_else(|| validation("graph.k", "required for k_cycle"))?;
                if n < 3 || k < 1 {
                    return Err(validation("graph", "k_cycle needs n >= 3, k >= 1"));
                }
            }
            "grid2d" => {
                let r = self.graph.rows.ok_or_else(|| validation("graph.rows", "required for grid2d"))?;
                let c = self.graph.cols.ok_or_else(|| validation("graph.cols", "required for grid2d"))?;
                if r * c < 2 {
                    return Err(validation("graph", "grid2d needs rows*cols >= 2"));
                }
            }
            other => {
                return Err(validation("graph.family", format!("unknown family `{other}`")));
            }
        }
        match self.weights.method.as_str() {
            "laplacian" | "metropolis" => {}
            other => return Err(validation("weights.method", format!("unknown method `{other}`"))),
        }
        match self.objective.case.as_str() {
            "case1" | "case2" | "case3" => {}
            other => return Err(validation("objective.case", format!("unknown case `{other}`"))),
        }
        if self.run.iterations < 1 {
            return Err(validation("run.iterations", "must be >= 1"));
        }
        if let Some(re) = self.run.record_every {
            if re < 1 {
                return Err(validation("run.record_every", "must be >= 1"));
            }
        }
        if let Some(tv) = &self.time_varying {
            if !(0.0..=1.0).contains(&tv.remove_fraction) {
                return Err(validation("time_varying.remove_fraction", "must lie in [0, 1]"));
            }
            if let Some(rule) = &tv.reseed {
                if rule != "per_iteration" {
                    return Err(validation("time_varying.reseed", format!("unknown rule `{rule}`")));
                }
            }
        }
        if self.algorithms.is_empty() {
            return Err(validation("algorithm", "need at least one algorithm"));
        }
        let mut labels = std::collections::BTreeSet::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            let path = format!("algorithm[{i}].step");
            a.step.validate(&path)?;
            if !labels.insert(a.label()) {
                return Err(validation(
                    &format!("algorithm[{i}].label"),
                    format!("duplicate label `{}`", a.label()),
                ));
            }
        }
        Ok(())
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].lines().count())
            .unwrap_or(0);
        Error::Parse {
            line,
            msg: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text form; `parse(emit(parse(text)))` is a fixed point.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
[graph]
family = "grid2d"
rows = 5
cols = 5

[weights]
method = "laplacian"

[objective]
case = "case1"

[run]
iterations = 1000
seed = 7

[[algorithm]]
name = "acc_dngd_sc"
step = { eta_over_l = 0.111 }
"#;

    #[test]
    fn parses_minimal() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.graph.family, "grid2d");
        assert_eq!(cfg.run.iterations, 1000);
        assert_eq!(cfg.algorithms.len(), 1);
        assert_eq!(cfg.algorithms[0].label(), "acc_dngd_sc");
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = MINIMAL.replace("[weights]", "[weights]\nbogus = 3");
        assert!(matches!(parse_config(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_beta_out_of_range() {
        let bad = MINIMAL.replace(
            "step = { eta_over_l = 0.111 }",
            "step = { eta_over_l = 0.111, beta = 2.5 }",
        );
        let err = parse_config(&bad).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert!(field.contains("beta"), "{field}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn preset_resolves_to_published_values() {
        let text = MINIMAL.replace(
            "step = { eta_over_l = 0.111 }",
            "step = { preset = \"fig1_random_acc_dngd_sc\" }",
        );
        let cfg = parse_config(&text).unwrap();
        let (sched, _) = cfg.algorithms[0]
            .step
            .resolve(AlgoTag::AccDngdSc, 650.0, 0.8, 0.6, "algorithm[0].step")
            .unwrap();
        assert_eq!(sched, StepSchedule::Fixed { eta: 0.00017 });
        let p = find_preset("fig1_random_acc_dngd_sc").unwrap();
        assert_eq!(p.alpha0, Some(0.011821));
    }

    #[test]
    fn round_trip_fixed_point() {
        let cfg = parse_config(MINIMAL).unwrap();
        let emitted = emit_config(&cfg);
        let cfg2 = parse_config(&emitted).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(emit_config(&cfg2), emitted);
    }

    #[test]
    fn rejects_unknown_preset_and_wrong_algo() {
        let bad = MINIMAL.replace(
            "step = { eta_over_l = 0.111 }",
            "step = { preset = \"no_such_preset\" }",
        );
        assert!(matches!(parse_config(&bad), Err(Error::Validation { .. })));

        let text = MINIMAL.replace(
            "step = { eta_over_l = 0.111 }",
            "step = { preset = \"fig1_random_dgd\" }",
        );
        let cfg = parse_config(&text).unwrap();
        let err = cfg.algorithms[0]
            .step
            .resolve(AlgoTag::AccDngdSc, 650.0, 0.8, 0.6, "algorithm[0].step")
            .unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn rejects_duplicate_labels() {
        let dup = format!(
            "{MINIMAL}\n[[algorithm]]\nname = \"acc_dngd_sc\"\nstep = {{ eta = 1e-4 }}\n"
        );
        assert!(matches!(parse_config(&dup), Err(Error::Validation { .. })));
    }
}

//! Named step-size presets for the benchmark figures. Values are the tuned
//! settings published with the reference experiments; the momentum
//! coefficients are informational for the distributed methods (recomputed
//! from the generated suite at init) and initial values for the
//! centralized general-convex method.

#![allow(clippy::approx_constant)] // published tuned values, e.g. alpha0 = 0.70711

use crate::algorithms::AlgoTag;
use crate::schedule::StepSchedule;

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub algo: AlgoTag,
    pub schedule: StepSchedule,
    pub alpha0: Option<f64>,
}

use AlgoTag::*;
use StepSchedule::*;

macro_rules! preset {
    ($name:literal, $algo:expr, $sched:expr) => {
        Preset { name: $name, algo: $algo, schedule: $sched, alpha0: None }
    };
    ($name:literal, $algo:expr, $sched:expr, $alpha:literal) => {
        Preset { name: $name, algo: $algo, schedule: $sched, alpha0: Some($alpha) }
    };
}

pub const PRESETS: &[Preset] = &[
    // figure 1: least squares (strongly convex)
    preset!("fig1_random_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.00017 }, 0.011821),
    preset!("fig1_random_dng", Dng, Harmonic { c: 0.00076687 }),
    preset!("fig1_random_dgd", Dgd, InvSqrt { c: 0.0015337 }),
    preset!("fig1_random_extra", Extra, Fixed { eta: 0.00092025 }),
    preset!("fig1_random_acc_dgd", AccDgd, Fixed { eta: 0.00030675 }),
    preset!("fig1_random_cgd", Cgd, Fixed { eta: 0.0015337 }),
    preset!("fig1_random_cngd_sc", CngdSc, Fixed { eta: 0.0015337 }, 0.035508),
    preset!("fig1_kcycle_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.00013 }, 0.010338),
    preset!("fig1_kcycle_dng", Dng, Harmonic { c: 0.00076687 }),
    preset!("fig1_kcycle_dgd", Dgd, InvSqrt { c: 0.0015337 }),
    preset!("fig1_kcycle_extra", Extra, Fixed { eta: 0.00092025 }),
    preset!("fig1_kcycle_acc_dgd", AccDgd, Fixed { eta: 0.00015337 }),
    preset!("fig1_kcycle_cgd", Cgd, Fixed { eta: 0.0015337 }),
    preset!("fig1_kcycle_cngd_sc", CngdSc, Fixed { eta: 0.0015337 }, 0.035508),
    preset!("fig1_grid_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.00006 }, 0.0071159),
    preset!("fig1_grid_dng", Dng, Harmonic { c: 0.00076687 }),
    preset!("fig1_grid_dgd", Dgd, InvSqrt { c: 0.0015337 }),
    preset!("fig1_grid_extra", Extra, Fixed { eta: 0.00092025 }),
    preset!("fig1_grid_acc_dgd", AccDgd, Fixed { eta: 0.00010736 }),
    preset!("fig1_grid_cgd", Cgd, Fixed { eta: 0.0015337 }),
    preset!("fig1_grid_cngd_sc", CngdSc, Fixed { eta: 0.0015337 }, 0.035977),
    // figure 2: logistic regression (strongly convex near the optimum)
    preset!("fig2_random_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.03 }, 0.016707),
    preset!("fig2_random_dng", Dng, Harmonic { c: 0.16334 }),
    preset!("fig2_random_dgd", Dgd, InvSqrt { c: 0.32667 }),
    preset!("fig2_random_extra", Extra, Fixed { eta: 0.16334 }),
    preset!("fig2_random_acc_dgd", AccDgd, Fixed { eta: 0.081669 }),
    preset!("fig2_random_cgd", Cgd, Fixed { eta: 0.32667 }),
    preset!("fig2_random_cngd_sc", CngdSc, Fixed { eta: 0.32667 }, 0.055131),
    preset!("fig2_kcycle_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.015 }, 0.011814),
    preset!("fig2_kcycle_dng", Dng, Harmonic { c: 0.16334 }),
    preset!("fig2_kcycle_dgd", Dgd, InvSqrt { c: 0.32667 }),
    preset!("fig2_kcycle_extra", Extra, Fixed { eta: 0.081669 }),
    preset!("fig2_kcycle_acc_dgd", AccDgd, Fixed { eta: 0.032667 }),
    preset!("fig2_kcycle_cgd", Cgd, Fixed { eta: 0.32667 }),
    preset!("fig2_kcycle_cngd_sc", CngdSc, Fixed { eta: 0.32667 }, 0.055131),
    preset!("fig2_grid_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.015 }, 0.014345),
    preset!("fig2_grid_dng", Dng, Harmonic { c: 0.2116 }),
    preset!("fig2_grid_dgd", Dgd, InvSqrt { c: 0.42319 }),
    preset!("fig2_grid_extra", Extra, Fixed { eta: 0.2116 }),
    preset!("fig2_grid_acc_dgd", AccDgd, Fixed { eta: 0.063479 }),
    preset!("fig2_grid_cgd", Cgd, Fixed { eta: 0.42319 }),
    preset!("fig2_grid_cngd_sc", CngdSc, Fixed { eta: 0.42319 }, 0.076193),
    // figure 3: flat-bottomed piecewise objective (convex, not strongly)
    preset!(
        "fig3_random_acc_dngd_nsc_vanishing",
        AccDngdNsc,
        Vanishing { eta: 0.0027642, t0: 1, beta: 0.61 },
        0.70711
    ),
    preset!("fig3_random_acc_dngd_nsc_fixed", AccDngdNsc, Fixed { eta: 0.0027642 }, 0.70711),
    preset!("fig3_random_dng", Dng, Harmonic { c: 0.0027642 }),
    preset!("fig3_random_dgd", Dgd, InvSqrt { c: 0.0055283 }),
    preset!("fig3_random_extra", Extra, Fixed { eta: 0.0055283 }),
    preset!("fig3_random_acc_dgd", AccDgd, Fixed { eta: 0.0027642 }),
    preset!("fig3_random_cgd", Cgd, Fixed { eta: 0.0055283 }),
    preset!("fig3_random_cngd_nsc", CngdNsc, Fixed { eta: 0.0055283 }, 0.5),
    preset!(
        "fig3_kcycle_acc_dngd_nsc_vanishing",
        AccDngdNsc,
        Vanishing { eta: 0.0027642, t0: 1, beta: 0.61 },
        0.70711
    ),
    preset!("fig3_kcycle_acc_dngd_nsc_fixed", AccDngdNsc, Fixed { eta: 0.0022113 }, 0.63246),
    preset!("fig3_kcycle_dng", Dng, Harmonic { c: 0.0027642 }),
    preset!("fig3_kcycle_dgd", Dgd, InvSqrt { c: 0.0055283 }),
    preset!("fig3_kcycle_extra", Extra, Fixed { eta: 0.0055283 }),
    preset!("fig3_kcycle_acc_dgd", AccDgd, Fixed { eta: 0.0022113 }),
    preset!("fig3_kcycle_cgd", Cgd, Fixed { eta: 0.0055283 }),
    preset!("fig3_kcycle_cngd_nsc", CngdNsc, Fixed { eta: 0.0055283 }, 0.5),
    preset!(
        "fig3_grid_acc_dngd_nsc_vanishing",
        AccDngdNsc,
        Vanishing { eta: 0.0024928, t0: 1, beta: 0.61 },
        0.70711
    ),
    preset!("fig3_grid_acc_dngd_nsc_fixed", AccDngdNsc, Fixed { eta: 0.0014957 }, 0.54772),
    preset!("fig3_grid_dng", Dng, Harmonic { c: 0.0024928 }),
    preset!("fig3_grid_dgd", Dgd, InvSqrt { c: 0.0049856 }),
    preset!("fig3_grid_extra", Extra, Fixed { eta: 0.0049856 }),
    preset!("fig3_grid_acc_dgd", AccDgd, Fixed { eta: 0.0014957 }),
    preset!("fig3_grid_cgd", Cgd, Fixed { eta: 0.0049856 }),
    preset!("fig3_grid_cngd_nsc", CngdNsc, Fixed { eta: 0.0049856 }, 0.5),
    // figure 5: time-varying grid
    preset!("fig5_case1_acc_dngd_sc", AccDngdSc, Fixed { eta: 0.000011717 }, 0.0031445),
    preset!("fig5_case3_acc_dngd_nsc", AccDngdNsc, Fixed { eta: 0.0014957 }, 0.54772),
];

pub fn find_preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_unique() {
        let mut names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), PRESETS.len());
    }

    #[test]
    fn schedules_valid() {
        for p in PRESETS {
            p.schedule.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }

    #[test]
    fn lookup() {
        let p = find_preset("fig1_random_acc_dngd_sc").unwrap();
        assert_eq!(p.schedule, StepSchedule::Fixed { eta: 0.00017 });
        assert!(find_preset("nope").is_none());
    }
}

//! Closed-form step-size bounds under which the accelerated
//! gradient-tracking methods are proven to converge. These are exposed for
//! inspection and for `bound_fraction` step specs; the shipped presets use
//! larger tuned steps because the proof constants are loose.

use crate::error::{Error, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if !(0.0 < sigma && sigma < 1.0) {
        return Err(Error::InvalidParam(format!("sigma = {sigma} outside (0, 1)")));
    }
    Ok(())
}

fn check_l_mu(l: f64, mu: f64) -> Result<()> {
    if !(l > 0.0 && mu > 0.0 && mu <= l) {
        return Err(Error::InvalidParam(format!(
            "need 0 < mu <= L (mu = {mu}, L = {l})"
        )));
    }
    Ok(())
}

/// Step-size bound for the strongly convex accelerated method:
/// `sigma^3 (1-sigma)^3 / (250^2 L) * (mu/L)^{3/7}`.
pub fn sc_step_bound(sigma: f64, l: f64, mu: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_l_mu(l, mu)?;
    Ok(sigma.powi(3) * (1.0 - sigma).powi(3) / (250.0 * 250.0 * l) * (mu / l).powf(3.0 / 7.0))
}

/// Fixed-step bound for the general-convex method on linear-map composite
/// objectives: `min(sigma^2 / (9^3 L), mu^{1.5} (1-sigma)^3 / (L^{2.5} 6912^{1.5}))`.
pub fn nsc_fixed_step_bound(sigma: f64, l: f64, mu: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_l_mu(l, mu)?;
    let first = sigma * sigma / (729.0 * l);
    let second = mu.powf(1.5) * (1.0 - sigma).powi(3) / (l.powf(2.5) * 6912.0f64.powf(1.5));
    Ok(first.min(second))
}

/// Per-condition verdicts for the vanishing-step convergence requirements.
#[derive(Debug, Clone, Copy)]
pub struct VanishingStepReport {
    pub t0_min: f64,
    pub cond_i: bool,
    pub eta_max_ratio: f64,
    pub cond_ii: bool,
    pub eta_max_level_set: f64,
    pub cond_iii: bool,
}

impl VanishingStepReport {
    pub fn ok(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

/// Checks the three vanishing-step conditions exactly as stated:
/// (i) a lower bound on `t0`, (ii) an `eta` cap from the network constant,
/// (iii) an `eta` cap involving the level-set diameter `r_level` and the
/// initial distance `v0_dist` (inputs, since no recipe computes them).
pub fn nsc_vanishing_conditions(
    sigma: f64,
    l: f64,
    beta: f64,
    t0: u64,
    eta: f64,
    r_level: f64,
    v0_dist: f64,
) -> Result<VanishingStepReport> {
    check_sigma(sigma)?;
    if l <= 0.0 {
        return Err(Error::InvalidParam(format!("L = {l}")));
    }
    if !(0.6 < beta && beta < 2.0) {
        return Err(Error::InvalidParam(format!("beta = {beta} outside (0.6, 2)")));
    }
    if t0 < 1 {
        return Err(Error::InvalidParam("t0 must be >= 1".into()));
    }
    if eta <= 0.0 || r_level <= 0.0 || v0_dist <= 0.0 {
        return Err(Error::InvalidParam(
            "eta, r_level and v0_dist must be positive".into(),
        ));
    }

    let ratio_cap = (((sigma + 3.0) / (sigma + 2.0)) * 0.75)
        .powf(sigma / (28.0 * beta))
        .min((16.0 / (15.0 + sigma)).powf(1.0 / beta));
    let t0_min = 1.0 / (ratio_cap - 1.0);
    let cond_i = (t0 as f64) > t0_min;

    let eta_max_ratio = (sigma * sigma / (729.0 * l)).min((1.0 - sigma).powi(3) / (6144.0 * l));
    let cond_ii = eta < eta_max_ratio;

    let d = 1.0 / ((t0 as f64 + 3.0).powi(2) * (16.0 + 6.0 / (2.0 - beta)).exp());
    let eta_max_level_set = (d * (beta - 0.6) * (1.0 - sigma).powi(2)
        / (9216.0
            * (t0 as f64 + 1.0).powf(2.0 - beta)
            * l.powf(2.0 / 3.0)
            * (4.0 + r_level * r_level / (v0_dist * v0_dist))))
    .powf(1.5);
    let cond_iii = eta < eta_max_level_set;

    Ok(VanishingStepReport {
        t0_min,
        cond_i,
        eta_max_ratio,
        cond_ii,
        eta_max_level_set,
        cond_iii,
    })
}

//! Step-size schedules and the momentum-coefficient recursion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size rule evaluated at an iteration counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// `eta_t = eta`
    Fixed { eta: f64 },
    /// `eta_t = eta / (t + t0)^beta`
    Vanishing { eta: f64, t0: u64, beta: f64 },
    /// `eta_t = c / (t + 1)`
    Harmonic { c: f64 },
    /// `eta_t = c / sqrt(t)`, defined for `t >= 1`
    InvSqrt { c: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Fixed { eta } if eta > 0.0 => Ok(()),
            StepSchedule::Vanishing { eta, t0, beta } if eta > 0.0 && t0 >= 1 && beta > 0.0 && beta < 2.0 => Ok(()),
            StepSchedule::Harmonic { c } if c > 0.0 => Ok(()),
            StepSchedule::InvSqrt { c } if c > 0.0 => Ok(()),
            other => Err(Error::InvalidParam(format!("bad schedule {other:?}"))),
        }
    }

    /// Scheduled value at iteration `t`.
    pub fn eta(&self, t: u64) -> Result<f64> {
        self.validate()?;
        match *self {
            StepSchedule::Fixed { eta } => Ok(eta),
            StepSchedule::Vanishing { eta, t0, beta } => {
                Ok(eta / ((t + t0) as f64).powf(beta))
            }
            StepSchedule::Harmonic { c } => Ok(c / (t + 1) as f64),
            StepSchedule::InvSqrt { c } => {
                if t < 1 {
                    Err(Error::InvalidParam("inv-sqrt schedule needs t >= 1".into()))
                } else {
                    Ok(c / (t as f64).sqrt())
                }
            }
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        true // every variant above is non-increasing in t
    }
}

/// Unique root in (0, 1) of
/// `alpha_next^2 = (eta_next / eta_t) * (1 - alpha_next) * alpha_t^2`,
/// in closed form.
pub fn next_alpha(alpha_t: f64, eta_t: f64, eta_next: f64) -> Result<f64> {
    if !(0.0 < alpha_t && alpha_t < 1.0) {
        return Err(Error::InvalidParam(format!("alpha_t = {alpha_t} outside (0, 1)")));
    }
    if eta_t <= 0.0 || eta_next <= 0.0 {
        return Err(Error::InvalidParam("step sizes must be positive".into()));
    }
    if eta_next > eta_t * (1.0 + 1e-12) {
        return Err(Error::InvalidParam(format!(
            "eta_next = {eta_next} exceeds eta_t = {eta_t}; schedule must be non-increasing"
        )));
    }
    Ok(2.0 / (1.0 + (1.0 + 4.0 * eta_t / (eta_next * alpha_t * alpha_t)).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_at_zero_is_eta() {
        let s = StepSchedule::Vanishing { eta: 0.5, t0: 1, beta: 0.61 };
        assert_eq!(s.eta(0).unwrap(), 0.5);
    }

    #[test]
    fn fixed_and_harmonic() {
        assert_eq!(StepSchedule::Fixed { eta: 0.003 }.eta(12345).unwrap(), 0.003);
        assert!((StepSchedule::Harmonic { c: 0.1 }.eta(9).unwrap() - 0.01).abs() < 1e-18);
    }

    #[test]
    fn invsqrt_needs_t_ge_1() {
        let s = StepSchedule::InvSqrt { c: 1.0 };
        assert!(s.eta(0).is_err());
        assert_eq!(s.eta(4).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StepSchedule::Vanishing { eta: 0.5, t0: 1, beta: 2.0 }.validate().is_err());
        assert!(StepSchedule::Vanishing { eta: 0.5, t0: 0, beta: 0.5 }.validate().is_err());
        assert!(StepSchedule::Fixed { eta: 0.0 }.validate().is_err());
    }

    #[test]
    fn next_alpha_constant_eta_known_value() {
        // alpha^2 = (1 - alpha) * 0.25 has root 2 / (1 + sqrt(17))
        let a = next_alpha(0.5, 1.0, 1.0).unwrap();
        let expect = 2.0 / (1.0 + 17.0f64.sqrt());
        assert!((a - expect).abs() < 1e-15, "a = {a}");
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn next_alpha_defining_residual() {
        let cases = [(0.9, 1.0, 1.0), (0.5, 0.01, 0.009), (0.1, 2.0, 1.5), (0.70710678, 0.5, 0.37)];
        for (a, et, en) in cases {
            let an = next_alpha(a, et, en).unwrap();
            let residual = an * an - (en / et) * (1.0 - an) * a * a;
            assert!(residual.abs() <= 1e-12, "residual {residual}");
            assert!(an > 0.0 && an < 1.0);
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn next_alpha_decreasing() {
        let mut a = 0.70710678118;
        let sched = StepSchedule::Vanishing { eta: 0.5, t0: 1, beta: 0.61 };
        for t in 0..500 {
            let an = next_alpha(a, sched.eta(t).unwrap(), sched.eta(t + 1).unwrap()).unwrap();
            assert!(an < a, "alpha must decrease (t = {t})");
            a = an;
        }
    }
}

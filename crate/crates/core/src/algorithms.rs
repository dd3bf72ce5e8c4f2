//! The nine optimization methods behind one init/step interface.
//!
//! Distributed methods hold n-by-N iterate matrices (row i belongs to
//! agent i); centralized methods use the same state with n = 1. A step
//! consumes one stacked gradient evaluation; the previous gradient matrix
//! is cached in the state so tracking updates reuse it.
//!
//! The gradient-tracking update is computed as `(W s - grad_prev) + grad_new`.
//! With a single agent and W = [1] this keeps `s` bit-identical to the
//! current gradient, so the distributed methods degenerate to their
//! centralized counterparts exactly, not just approximately.

pub mod bounds;

use nalgebra::{DMatrix, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::objectives::ObjectiveSuite;
use crate::schedule::{next_alpha, StepSchedule};
use crate::weights::WeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoTag {
    AccDngdSc,
    AccDngdNsc,
    CngdSc,
    CngdNsc,
    Cgd,
    Dgd,
    Dng,
    Dnc,
    Extra,
    AccDgd,
}

impl AlgoTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgoTag::AccDngdSc => "acc_dngd_sc",
            AlgoTag::AccDngdNsc => "acc_dngd_nsc",
            AlgoTag::CngdSc => "cngd_sc",
            AlgoTag::CngdNsc => "cngd_nsc",
            AlgoTag::Cgd => "cgd",
            AlgoTag::Dgd => "dgd",
            AlgoTag::Dng => "dng",
            AlgoTag::Dnc => "dnc",
            AlgoTag::Extra => "extra",
            AlgoTag::AccDgd => "acc_dgd",
        }
    }

    pub fn is_centralized(&self) -> bool {
        matches!(self, AlgoTag::CngdSc | AlgoTag::CngdNsc | AlgoTag::Cgd)
    }

    /// Whether the method maintains a separate `y` sequence whose rows are
    /// the points gradients are evaluated at.
    pub fn uses_y_iterates(&self) -> bool {
        matches!(
            self,
            AlgoTag::AccDngdSc
                | AlgoTag::AccDngdNsc
                | AlgoTag::CngdSc
                | AlgoTag::CngdNsc
                | AlgoTag::Dng
                | AlgoTag::Dnc
        )
    }

    /// Whether the method maintains a gradient-tracking sequence `s`.
    pub fn uses_tracking(&self) -> bool {
        matches!(
            self,
            AlgoTag::AccDngdSc | AlgoTag::AccDngdNsc | AlgoTag::AccDgd
        )
    }
}

/// Iterate state shared by all methods. Matrices the method does not use
/// stay at their initial copies.
#[derive(Debug, Clone)]
pub struct AlgoState {
    pub algo: AlgoTag,
    pub t: u64,
    pub x: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub s: DMatrix<f64>,
    /// Previous primary iterate (EXTRA difference term, D-NG momentum).
    pub prev_x: DMatrix<f64>,
    /// Stacked gradients at the current evaluation points.
    pub prev_grad: DMatrix<f64>,
    pub alpha: f64,
    pub eta: f64,
    pub comm_rounds: u64,
}

impl AlgoState {
    fn new(algo: AlgoTag, x0: &DMatrix<f64>, grad: DMatrix<f64>) -> Self {
        Self {
            algo,
            t: 0,
            x: x0.clone(),
            v: x0.clone(),
            y: x0.clone(),
            s: grad.clone(),
            prev_x: x0.clone(),
            prev_grad: grad,
            alpha: 0.0,
            eta: 0.0,
            comm_rounds: 0,
        }
    }

    fn guard_finite(&self, pieces: &[&DMatrix<f64>]) -> Result<()> {
        for m in pieces {
            if !all_finite(m) {
                return Err(Error::NonFinite(format!(
                    "{} iterate at iteration {}",
                    self.algo.as_str(),
                    self.t + 1
                )));
            }
        }
        Ok(())
    }
}

/// Initial condition for the general-convex accelerated method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every row of `s` starts at the exact average gradient (requires one
    /// initial coordination round).
    Exact,
    /// Each agent starts `s` from its own local gradient.
    Relaxed,
}

fn check_shape(suite: &ObjectiveSuite, x0: &DMatrix<f64>) -> Result<()> {
    if x0.nrows() != suite.n() || x0.ncols() != suite.dim() {
        return Err(Error::InvalidParam(format!(
            "initial point is {}x{}, suite needs {}x{}",
            x0.nrows(),
            x0.ncols(),
            suite.n(),
            suite.dim()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// accelerated gradient-tracking pair
// ---------------------------------------------------------------------------

pub fn init_acc_dngd_sc(
    suite: &ObjectiveSuite,
    _w: &WeightMatrix,
    eta: f64,
    x0: &DMatrix<f64>,
) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    if suite.mu() <= 0.0 {
        return Err(Error::NotStronglyConvex);
    }
    if eta <= 0.0 {
        return Err(Error::InvalidParam(format!("eta = {eta}")));
    }
    let alpha = (suite.mu() * eta).sqrt();
    if alpha > 1.0 {
        return Err(Error::InvalidParam(format!(
            "alpha = sqrt(mu * eta) = {alpha} must not exceed 1"
        )));
    }
    let grad = suite.grad_matrix(x0)?;
    let mut st = AlgoState::new(AlgoTag::AccDngdSc, x0, grad);
    st.alpha = alpha;
    st.eta = eta;
    Ok(st)
}

pub fn step_acc_dngd_sc(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
) -> Result<AlgoState> {
    let wm = w.matrix();
    let (eta, alpha) = (st.eta, st.alpha);
    let wy = wm * &st.y;
    let wv = wm * &st.v;
    let x1 = &wy - &st.s * eta;
    let v1 = &wv * (1.0 - alpha) + &wy * alpha - &st.s * (eta / alpha);
    let y1 = (&x1 + &v1 * alpha) / (1.0 + alpha);
    st.guard_finite(&[&x1, &v1, &y1])?;
    let g1 = suite.grad_matrix(&y1)?;
    let s1 = (wm * &st.s - &st.prev_grad) + &g1;
    st.guard_finite(&[&s1])?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.v = v1;
    st.y = y1;
    st.s = s1;
    st.prev_grad = g1;
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

/// Zero initial point, per the method's stated initial condition.
pub fn init_acc_dngd_nsc(
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    schedule: &StepSchedule,
    mode: InitMode,
) -> Result<AlgoState> {
    let zeros = DMatrix::zeros(suite.n(), suite.dim());
    init_acc_dngd_nsc_from(suite, w, schedule, mode, &zeros)
}

/// Same method started from an arbitrary shared point (what the harness
/// uses so every algorithm in a run sees the same start).
pub fn init_acc_dngd_nsc_from(
    suite: &ObjectiveSuite,
    _w: &WeightMatrix,
    schedule: &StepSchedule,
    mode: InitMode,
    x0: &DMatrix<f64>,
) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    schedule.validate()?;
    let eta0 = schedule.eta(0)?;
    if eta0 * suite.l() >= 1.0 {
        return Err(Error::StepTooLarge {
            eta0,
            l: suite.l(),
        });
    }
    let local = suite.grad_matrix(x0)?;
    let s = match mode {
        InitMode::Relaxed => local.clone(),
        InitMode::Exact => {
            let mean = crate::linalg::column_means(&local);
            DMatrix::from_fn(suite.n(), suite.dim(), |_, j| mean[j])
        }
    };
    let mut st = AlgoState::new(AlgoTag::AccDngdNsc, x0, local);
    st.s = s;
    st.alpha = (eta0 * suite.l()).sqrt();
    st.eta = eta0;
    Ok(st)
}

pub fn step_acc_dngd_nsc(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    schedule: &StepSchedule,
) -> Result<AlgoState> {
    let wm = w.matrix();
    let eta_t = schedule.eta(st.t)?;
    let eta_next = schedule.eta(st.t + 1)?;
    let alpha_t = st.alpha;
    let wy = wm * &st.y;
    let wv = wm * &st.v;
    let x1 = &wy - &st.s * eta_t;
    let v1 = &wv - &st.s * (eta_t / alpha_t);
    let alpha_next = next_alpha(alpha_t, eta_t, eta_next)?;
    let y1 = &x1 * (1.0 - alpha_next) + &v1 * alpha_next;
    st.guard_finite(&[&x1, &v1, &y1])?;
    let g1 = suite.grad_matrix(&y1)?;
    let s1 = (wm * &st.s - &st.prev_grad) + &g1;
    st.guard_finite(&[&s1])?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.v = v1;
    st.y = y1;
    st.s = s1;
    st.prev_grad = g1;
    st.alpha = alpha_next;
    st.eta = eta_next;
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

// ---------------------------------------------------------------------------
// centralized counterparts (n = 1 states over the global objective)
// ---------------------------------------------------------------------------

fn global_grad_row(suite: &ObjectiveSuite, point: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = suite.global_grad(&RowDVector::from(point.row(0)))?;
    Ok(DMatrix::from_rows(&[g]))
}

fn init_centralized(
    suite: &ObjectiveSuite,
    tag: AlgoTag,
    x0: &RowDVector<f64>,
) -> Result<AlgoState> {
    if x0.len() != suite.dim() {
        return Err(Error::InvalidParam("initial point dimension mismatch".into()));
    }
    let x0m = DMatrix::from_rows(std::slice::from_ref(x0));
    let grad = global_grad_row(suite, &x0m)?;
    Ok(AlgoState::new(tag, &x0m, grad))
}

pub fn init_cgd(suite: &ObjectiveSuite, eta: f64, x0: &RowDVector<f64>) -> Result<AlgoState> {
    if eta <= 0.0 {
        return Err(Error::InvalidParam(format!("eta = {eta}")));
    }
    let mut st = init_centralized(suite, AlgoTag::Cgd, x0)?;
    st.eta = eta;
    Ok(st)
}

pub fn step_cgd(mut st: AlgoState, suite: &ObjectiveSuite) -> Result<AlgoState> {
    let x1 = &st.x - &st.prev_grad * st.eta;
    st.guard_finite(&[&x1])?;
    let g1 = global_grad_row(suite, &x1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1.clone());
    st.y = x1;
    st.prev_grad = g1.clone();
    st.s = g1;
    st.t += 1;
    Ok(st)
}

pub fn init_cngd_sc(suite: &ObjectiveSuite, eta: f64, x0: &RowDVector<f64>) -> Result<AlgoState> {
    if suite.mu() <= 0.0 {
        return Err(Error::NotStronglyConvex);
    }
    if eta <= 0.0 {
        return Err(Error::InvalidParam(format!("eta = {eta}")));
    }
    let alpha = (suite.mu() * eta).sqrt();
    if alpha > 1.0 {
        return Err(Error::InvalidParam(format!("alpha = {alpha} must not exceed 1")));
    }
    let mut st = init_centralized(suite, AlgoTag::CngdSc, x0)?;
    st.eta = eta;
    st.alpha = alpha;
    Ok(st)
}

pub fn step_cngd_sc(mut st: AlgoState, suite: &ObjectiveSuite) -> Result<AlgoState> {
    let (eta, alpha) = (st.eta, st.alpha);
    let g = &st.prev_grad;
    let x1 = &st.y - g * eta;
    let v1 = &st.v * (1.0 - alpha) + &st.y * alpha - g * (eta / alpha);
    let y1 = (&x1 + &v1 * alpha) / (1.0 + alpha);
    st.guard_finite(&[&x1, &v1, &y1])?;
    let g1 = global_grad_row(suite, &y1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.v = v1;
    st.y = y1;
    st.prev_grad = g1.clone();
    st.s = g1;
    st.t += 1;
    Ok(st)
}

pub fn init_cngd_nsc(
    suite: &ObjectiveSuite,
    schedule: &StepSchedule,
    alpha0: f64,
    x0: &RowDVector<f64>,
) -> Result<AlgoState> {
    schedule.validate()?;
    if !(0.0 < alpha0 && alpha0 < 1.0) {
        return Err(Error::InvalidParam(format!("alpha0 = {alpha0} outside (0, 1)")));
    }
    let mut st = init_centralized(suite, AlgoTag::CngdNsc, x0)?;
    st.alpha = alpha0;
    st.eta = schedule.eta(0)?;
    Ok(st)
}

pub fn step_cngd_nsc(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    schedule: &StepSchedule,
) -> Result<AlgoState> {
    let eta_t = schedule.eta(st.t)?;
    let eta_next = schedule.eta(st.t + 1)?;
    let alpha_t = st.alpha;
    let g = &st.prev_grad;
    let x1 = &st.y - g * eta_t;
    let v1 = &st.v - g * (eta_t / alpha_t);
    let alpha_next = next_alpha(alpha_t, eta_t, eta_next)?;
    let y1 = &x1 * (1.0 - alpha_next) + &v1 * alpha_next;
    st.guard_finite(&[&x1, &v1, &y1])?;
    let g1 = global_grad_row(suite, &y1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.v = v1;
    st.y = y1;
    st.prev_grad = g1.clone();
    st.s = g1;
    st.alpha = alpha_next;
    st.eta = eta_next;
    st.t += 1;
    Ok(st)
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

pub fn init_dgd(suite: &ObjectiveSuite, x0: &DMatrix<f64>) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    let grad = suite.grad_matrix(x0)?;
    Ok(AlgoState::new(AlgoTag::Dgd, x0, grad))
}

/// Consensus plus local-gradient step. The schedule is queried one-based
/// (step from `t` uses `eta(t + 1)`), matching diminishing rules that are
/// undefined at zero.
pub fn step_dgd(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    schedule: &StepSchedule,
) -> Result<AlgoState> {
    let eta_t = schedule.eta(st.t + 1)?;
    let x1 = w.matrix() * &st.x - &st.prev_grad * eta_t;
    st.guard_finite(&[&x1])?;
    let g1 = suite.grad_matrix(&x1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1.clone());
    st.y = x1;
    st.prev_grad = g1;
    st.eta = eta_t;
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

pub fn init_dng(suite: &ObjectiveSuite, x0: &DMatrix<f64>) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    let grad = suite.grad_matrix(x0)?;
    Ok(AlgoState::new(AlgoTag::Dng, x0, grad))
}

/// Diminishing-step distributed Nesterov: descent along local gradients
/// with `eta_t = c / (t + 1)` and `t / (t + 3)` momentum.
pub fn step_dng(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    c: f64,
) -> Result<AlgoState> {
    if c <= 0.0 {
        return Err(Error::InvalidParam(format!("c = {c}")));
    }
    let eta_t = c / (st.t + 1) as f64;
    let momentum = st.t as f64 / (st.t as f64 + 3.0);
    let x1 = w.matrix() * &st.y - &st.prev_grad * eta_t;
    let y1 = &x1 + (&x1 - &st.x) * momentum;
    st.guard_finite(&[&x1, &y1])?;
    let g1 = suite.grad_matrix(&y1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.y = y1;
    st.prev_grad = g1;
    st.eta = eta_t;
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

pub fn init_dnc(suite: &ObjectiveSuite, eta: f64, x0: &DMatrix<f64>) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    if eta <= 0.0 || eta > 1.0 / suite.l() * (1.0 + 1e-12) {
        return Err(Error::InvalidParam(format!(
            "dnc needs 0 < eta <= 1/L (eta = {eta:e}, 1/L = {:e})",
            1.0 / suite.l()
        )));
    }
    let grad = suite.grad_matrix(x0)?;
    let mut st = AlgoState::new(AlgoTag::Dnc, x0, grad);
    st.eta = eta;
    Ok(st)
}

/// Default inner-consensus length: `ceil(log2(t + 2))`.
pub fn dnc_default_tau(t: u64) -> u32 {
    64 - (t + 1).leading_zeros()
}

/// Inner-loop consensus method: each gradient step is followed by
/// `tau(t)` consensus multiplications on both lines; the communication
/// counter advances by `2 * tau(t)`.
pub fn step_dnc(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    tau: impl Fn(u64) -> u32,
) -> Result<AlgoState> {
    let wm = w.matrix();
    let reps = tau(st.t);
    let apply = |m: DMatrix<f64>| -> DMatrix<f64> {
        let mut out = m;
        for _ in 0..reps {
            out = wm * out;
        }
        out
    };
    let momentum = st.t as f64 / (st.t as f64 + 3.0);
    let x1 = apply(&st.y - &st.prev_grad * st.eta);
    let y1 = apply(&x1 + (&x1 - &st.x) * momentum);
    st.guard_finite(&[&x1, &y1])?;
    let g1 = suite.grad_matrix(&y1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1);
    st.y = y1;
    st.prev_grad = g1;
    st.t += 1;
    st.comm_rounds += 2 * reps as u64;
    Ok(st)
}

pub fn init_extra(suite: &ObjectiveSuite, eta: f64, x0: &DMatrix<f64>) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    if eta <= 0.0 {
        return Err(Error::InvalidParam(format!("eta = {eta}")));
    }
    let grad = suite.grad_matrix(x0)?;
    let mut st = AlgoState::new(AlgoTag::Extra, x0, grad);
    st.eta = eta;
    Ok(st)
}

/// Exact first-order method with the difference update
/// `x(t+2) = (I + W) x(t+1) - (W + I)/2 x(t) - eta (grad(t+1) - grad(t))`.
/// In this state, `s` holds the gradients at `prev_x`.
pub fn step_extra(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
) -> Result<AlgoState> {
    let wm = w.matrix();
    let x1 = if st.t == 0 {
        wm * &st.x - &st.prev_grad * st.eta
    } else {
        let wx = wm * &st.x;
        let wtilde_prev = (wm * &st.prev_x + &st.prev_x) * 0.5;
        (&wx + &st.x) - wtilde_prev - (&st.prev_grad - &st.s) * st.eta
    };
    st.guard_finite(&[&x1])?;
    let g1 = suite.grad_matrix(&x1)?;
    st.prev_x = std::mem::replace(&mut st.x, x1.clone());
    st.y = x1;
    st.s = std::mem::replace(&mut st.prev_grad, g1);
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

pub fn init_acc_dgd(suite: &ObjectiveSuite, x0: &DMatrix<f64>) -> Result<AlgoState> {
    check_shape(suite, x0)?;
    let grad = suite.grad_matrix(x0)?;
    Ok(AlgoState::new(AlgoTag::AccDgd, x0, grad))
}

/// Gradient-tracking descent without momentum:
/// `x(t+1) = W x(t) - eta_t s(t)`, `s(t+1) = W s(t) + grad(t+1) - grad(t)`.
pub fn step_acc_dgd(
    mut st: AlgoState,
    suite: &ObjectiveSuite,
    w: &WeightMatrix,
    schedule: &StepSchedule,
) -> Result<AlgoState> {
    let wm = w.matrix();
    let eta_t = schedule.eta(st.t)?;
    let x1 = wm * &st.x - &st.s * eta_t;
    st.guard_finite(&[&x1])?;
    let g1 = suite.grad_matrix(&x1)?;
    let s1 = (wm * &st.s - &st.prev_grad) + &g1;
    st.guard_finite(&[&s1])?;
    st.prev_x = std::mem::replace(&mut st.x, x1.clone());
    st.y = x1;
    st.s = s1;
    st.prev_grad = g1;
    st.eta = eta_t;
    st.t += 1;
    st.comm_rounds += 1;
    Ok(st)
}

//! Convergence metrics, empirical rate fits, the two 3x3 gain matrices
//! that drive the consensus-error analysis, and numeric certification of
//! their spectral bounds.

use nalgebra::{Complex, Matrix3, RowDVector, Vector3};
use rand::Rng;

use crate::algorithms::AlgoState;
use crate::error::{Error, Result};
use crate::linalg::{column_means, consensus_norm, eigenvalues_3, fit_line, power_iteration_3};
use crate::objectives::ObjectiveSuite;
use crate::schedule::next_alpha;

/// Per-iteration convergence and consensus metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    /// `(1/n) sum_i f(x_i(t)) - fstar`
    pub avg_obj_err: f64,
    /// `max_i f(y_i(t)) - fstar` (x rows when the method has no y sequence)
    pub max_individual_err: f64,
    /// `|| y(t) - 1 ybar(t) ||_F`
    pub consensus_y: f64,
    /// `|| s(t) - 1 g(t) ||_F` (0 for methods without tracking)
    pub consensus_s: f64,
    /// `|| g(t) ||` with `g` the average of the current local gradients
    pub grad_norm: f64,
    pub eta_t: f64,
    pub alpha_t: f64,
    pub comm_count: u64,
}

/// Pure function of (state, suite, fstar).
pub fn record(state: &AlgoState, suite: &ObjectiveSuite, fstar: f64) -> Result<TraceRecord> {
    let x_vals = suite.row_values(&state.x)?;
    let avg_obj_err = x_vals.mean() - fstar;
    let eval_points = if state.algo.uses_y_iterates() {
        &state.y
    } else {
        &state.x
    };
    let ind_vals = if state.algo.uses_y_iterates() {
        suite.row_values(eval_points)?
    } else {
        x_vals
    };
    let max_individual_err =
        ind_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - fstar;

    let g = column_means(&state.prev_grad);
    let consensus_s = if state.algo.uses_tracking() {
        let mut acc = 0.0;
        for i in 0..state.s.nrows() {
            for j in 0..state.s.ncols() {
                let d = state.s[(i, j)] - g[j];
                acc += d * d;
            }
        }
        acc.sqrt()
    } else {
        0.0
    };

    Ok(TraceRecord {
        t: state.t,
        avg_obj_err,
        max_individual_err,
        consensus_y: consensus_norm(eval_points),
        consensus_s,
        grad_norm: g.norm(),
        eta_t: state.eta,
        alpha_t: state.alpha,
        comm_count: state.comm_rounds,
    })
}

fn window(trace: &[TraceRecord], t_min: u64, t_max: u64) -> Result<Vec<&TraceRecord>> {
    if t_max <= t_min {
        return Err(Error::InvalidParam(format!(
            "window [{t_min}, {t_max}] is empty"
        )));
    }
    let picked: Vec<&TraceRecord> = trace
        .iter()
        .filter(|r| r.t >= t_min && r.t <= t_max)
        .collect();
    if picked.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "window [{t_min}, {t_max}] holds {} records, need >= 3",
            picked.len()
        )));
    }
    for r in &picked {
        if r.avg_obj_err <= 0.0 {
            return Err(Error::NonPositiveError { t: r.t });
        }
    }
    Ok(picked)
}

/// Least-squares slope of `log(avg_obj_err)` against `log(t)`.
pub fn loglog_slope(trace: &[TraceRecord], t_min: u64, t_max: u64) -> Result<f64> {
    if t_min < 1 {
        return Err(Error::InvalidParam("loglog window needs t_min >= 1".into()));
    }
    let picked = window(trace, t_min, t_max)?;
    let xs: Vec<f64> = picked.iter().map(|r| (r.t as f64).ln()).collect();
    let ys: Vec<f64> = picked.iter().map(|r| r.avg_obj_err.ln()).collect();
    Ok(fit_line(&xs, &ys).0)
}

/// Least-squares fit of `log(avg_obj_err)` against `t`; returns
/// `(rate, r_squared)` with `rate = exp(slope)`.
pub fn linear_rate(trace: &[TraceRecord], t_min: u64, t_max: u64) -> Result<(f64, f64)> {
    let picked = window(trace, t_min, t_max)?;
    let xs: Vec<f64> = picked.iter().map(|r| r.t as f64).collect();
    let ys: Vec<f64> = picked.iter().map(|r| r.avg_obj_err.ln()).collect();
    let (slope, _, r2) = fit_line(&xs, &ys);
    Ok((slope.exp(), r2))
}

// ---------------------------------------------------------------------------
// gain matrices
// ---------------------------------------------------------------------------

const EIG_RESIDUAL_TOL: f64 = 1e-10;
const CHARPOLY_TOL: f64 = 1e-8;

/// Consensus-error transition matrix of the strongly convex method, with
/// `alpha = sqrt(mu eta)`.
#[derive(Debug, Clone)]
pub struct GainMatrixSc {
    pub m: Matrix3<f64>,
    pub eta: f64,
    pub sigma: f64,
    pub l: f64,
    pub mu: f64,
    pub alpha: f64,
    /// Perron root (spectral radius) from power iteration.
    pub rho: f64,
    /// Perron vector (unit norm).
    pub perron: Vector3<f64>,
    /// `|| G v - rho v ||` achieved by the eigen-solve.
    pub eig_residual: f64,
}

pub fn gain_matrix_sc(eta: f64, sigma: f64, l: f64, mu: f64) -> Result<GainMatrixSc> {
    if !(0.0 < sigma && sigma < 1.0) || eta <= 0.0 || l <= 0.0 || mu <= 0.0 || mu > l {
        return Err(Error::InvalidParam(
            "gain matrix needs eta > 0, sigma in (0,1), 0 < mu <= L".into(),
        ));
    }
    let alpha = (mu * eta).sqrt();
    let el = eta * l;
    let m = Matrix3::new(
        (1.0 - alpha) * sigma,
        alpha * sigma,
        el / alpha,
        (1.0 - alpha) / (1.0 + alpha) * alpha * sigma,
        (1.0 + alpha * alpha) / (1.0 + alpha) * sigma,
        2.0 * el,
        alpha * sigma,
        2.0,
        sigma + 2.0 * el,
    );
    let (rho, perron, eig_residual) = power_iteration_3(&m, 1e-13, 200_000);
    Ok(GainMatrixSc {
        m,
        eta,
        sigma,
        l,
        mu,
        alpha,
        rho,
        perron,
        eig_residual,
    })
}

impl GainMatrixSc {
    /// Printed characteristic polynomial, used as an independent check on
    /// the eigen-solve.
    pub fn char_poly(&self, zeta: f64) -> f64 {
        let (s, el, a) = (self.sigma, self.eta * self.l, self.alpha);
        let k1 = 4.0 * el + s * el;
        let k2 = 2.0 * el * el * (4.0 + s)
            + el * s * (2.0 + a * s)
            + 2.0 * el * a * a * s * (2.0 + a * s) / (1.0 + a);
        let p0 = (zeta - s) * (zeta - (1.0 - a) / (1.0 + a) * s) * (zeta - s - 2.0 * el);
        p0 - (k1 * (zeta - s - 2.0 * el) + k2)
    }

    pub fn dense_eigenvalues(&self) -> Vec<Complex<f64>> {
        eigenvalues_3(&self.m)
    }
}

/// Consensus-error transition matrix of the general-convex method, with
/// its Perron root `theta` and eigenvector `chi` normalized `chi_3 = 1`.
#[derive(Debug, Clone)]
pub struct GainMatrixNsc {
    pub m: Matrix3<f64>,
    pub eta: f64,
    pub sigma: f64,
    pub l: f64,
    pub theta: f64,
    pub chi: Vector3<f64>,
    pub eig_residual: f64,
}

pub fn gain_matrix_nsc(eta: f64, sigma: f64, l: f64) -> Result<GainMatrixNsc> {
    if !(0.0 < sigma && sigma < 1.0) || eta <= 0.0 || l <= 0.0 {
        return Err(Error::InvalidParam(
            "gain matrix needs eta > 0, sigma in (0,1), L > 0".into(),
        ));
    }
    let m = Matrix3::new(
        sigma,
        0.0,
        eta,
        sigma,
        sigma,
        2.0 * eta,
        l,
        2.0 * l,
        sigma + 2.0 * eta * l,
    );
    let (theta, v, eig_residual) = power_iteration_3(&m, 1e-13, 200_000);
    if v[2].abs() < 1e-300 {
        return Err(Error::InvalidParam("degenerate Perron vector".into()));
    }
    let chi = v / v[2];
    Ok(GainMatrixNsc {
        m,
        eta,
        sigma,
        l,
        theta,
        chi,
        eig_residual,
    })
}

impl GainMatrixNsc {
    pub fn char_poly(&self, zeta: f64) -> f64 {
        let (s, el) = (self.sigma, self.eta * self.l);
        (zeta - s) * (zeta - s) * (zeta - s - 2.0 * el)
            - 5.0 * el * (zeta - s - 2.0 * el)
            - 2.0 * el * s
            - 10.0 * el * el
    }

    pub fn dense_eigenvalues(&self) -> Vec<Complex<f64>> {
        eigenvalues_3(&self.m)
    }
}

// ---------------------------------------------------------------------------
// certification
// ---------------------------------------------------------------------------

/// One failed inequality, with enough context to reproduce it.
#[derive(Debug, Clone)]
pub struct Violation {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub params: Vec<(String, f64)>,
}

/// One evaluated inequality `lhs <= rhs (+ tol)`, kept for the audit CSV.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub params: Vec<(String, f64)>,
}

/// Outcome of sampling one certification family. Violations are reported,
/// not thrown: the bounds are proved in exact arithmetic, so the runs
/// absorb float slack through `tol` and surface anything left as data.
#[derive(Debug, Clone)]
pub struct CertReport {
    pub name: String,
    pub samples: usize,
    pub checks: usize,
    pub tol: f64,
    pub max_eig_residual: f64,
    pub violations: Vec<Violation>,
    /// Every evaluated inequality, for the audit CSV.
    pub rows: Vec<CheckRow>,
    /// Auxiliary fitted quantities (for decay-order reporting).
    pub notes: Vec<(String, f64)>,
}

impl CertReport {
    fn new(name: &str, tol: f64) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            checks: 0,
            tol,
            max_eig_residual: 0.0,
            violations: Vec::new(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, lhs: f64, rhs: f64, params: &[(&str, f64)]) {
        self.checks += 1;
        let pass = lhs <= rhs + self.tol;
        let params: Vec<(String, f64)> =
            params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        if !pass {
            self.violations.push(Violation {
                check: name.into(),
                lhs,
                rhs,
                params: params.clone(),
            });
        }
        self.rows.push(CheckRow {
            check: name.into(),
            lhs,
            rhs,
            pass,
            params,
        });
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Full audit table: every check with its computed quantity, bound,
    /// margin and parameters.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,lhs,rhs,margin,pass,params\n");
        for r in &self.rows {
            let params = r
                .params
                .iter()
                .map(|(k, x)| format!("{k}={x:e}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{},{}\n",
                r.check,
                r.lhs,
                r.rhs,
                r.rhs - r.lhs,
                r.pass,
                params
            ));
        }
        out
    }
}

const CERT_TOL: f64 = 1e-9;

fn log_uniform<R: Rng>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Spectral-radius sandwich for the strongly convex gain matrix:
/// `sigma + (sigma eta L)^{1/3} < rho(G) < sigma + 4 (eta L)^{1/3} < (1+sigma)/2`
/// over the admissible step range, sampled log-uniformly.
pub fn certify_sc_gain<R: Rng>(
    sigma: f64,
    l: f64,
    mu: f64,
    eta_samples: usize,
    rng: &mut R,
) -> Result<CertReport> {
    let mut rep = CertReport::new("sc_gain_radius", CERT_TOL);
    let hi = ((1.0 - sigma).powi(3) / (512.0 * l)).min(sigma.powi(3) / (64.0 * l));
    let lo = hi * 1e-6;
    for k in 0..eta_samples {
        // pin one sample just below the admissible ceiling
        let eta = if k == 0 {
            hi * 0.999
        } else {
            log_uniform(lo, hi, rng)
        };
        let g = gain_matrix_sc(eta, sigma, l, mu)?;
        rep.samples += 1;
        rep.max_eig_residual = rep.max_eig_residual.max(g.eig_residual);
        let el = eta * l;
        let params: &[(&str, f64)] = &[("eta", eta), ("sigma", sigma), ("L", l), ("mu", mu)];
        rep.check("rho_lower", sigma + (sigma * el).cbrt(), g.rho, params);
        rep.check("rho_upper", g.rho, sigma + 4.0 * el.cbrt(), params);
        rep.check(
            "upper_below_theta",
            sigma + 4.0 * el.cbrt(),
            (1.0 + sigma) / 2.0,
            params,
        );
        rep.check("eig_residual", g.eig_residual, EIG_RESIDUAL_TOL, params);
        rep.check("char_poly_root", g.char_poly(g.rho).abs(), CHARPOLY_TOL, params);
        // dense route: Perron root must be real, simple, strictly dominant
        let evs = g.dense_eigenvalues();
        let max_dense = evs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        rep.check("dense_vs_power", (max_dense - g.rho).abs(), 1e-9, params);
        let mut moduli: Vec<f64> = evs.iter().map(|c| c.norm()).collect();
        moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
        rep.check(
            "perron_strictly_dominant",
            moduli[1],
            g.rho - 0.5 * (sigma * el).cbrt(),
            params,
        );
    }
    Ok(rep)
}

/// Eigenstructure bounds for the general-convex gain matrix: the radius
/// sandwich, the Perron-vector component bounds, and the component
/// log-Lipschitz ratio bound on step pairs.
pub fn certify_nsc_gain<R: Rng>(
    sigma: f64,
    l: f64,
    eta_samples: usize,
    rng: &mut R,
) -> Result<CertReport> {
    let mut rep = CertReport::new("nsc_gain_eigenstructure", CERT_TOL);

    // radius sandwich and chi_2 bound on eta L < 1
    let hi8 = 0.999 / l;
    for k in 0..eta_samples {
        let eta = if k == 0 { hi8 } else { log_uniform(hi8 * 1e-6, hi8, rng) };
        let g = gain_matrix_nsc(eta, sigma, l)?;
        rep.samples += 1;
        rep.max_eig_residual = rep.max_eig_residual.max(g.eig_residual);
        let el = eta * l;
        let params: &[(&str, f64)] = &[("eta", eta), ("sigma", sigma), ("L", l)];
        rep.check("theta_above_sigma", sigma, g.theta, params);
        rep.check("theta_upper", g.theta, sigma + 4.0 * el.cbrt(), params);
        rep.check(
            "chi2_bound",
            g.chi[1],
            2.0 / l.powf(2.0 / 3.0) * eta.cbrt(),
            params,
        );
        rep.check("chi3_normalized", (g.chi[2] - 1.0).abs(), 0.0, params);
        rep.check("eig_residual", g.eig_residual, EIG_RESIDUAL_TOL, params);
        rep.check("char_poly_root", g.char_poly(g.theta).abs(), CHARPOLY_TOL, params);
        let max_dense = g
            .dense_eigenvalues()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        rep.check("dense_vs_power", (max_dense - g.theta).abs(), 1e-9, params);
    }

    // radius lower bound and chi_1 bound on eta < sqrt(sigma) / (2 sqrt(2) L)
    let hi9 = sigma.sqrt() / (2.0 * 2.0f64.sqrt() * l) * 0.999;
    for k in 0..eta_samples {
        let eta = if k == 0 { hi9 } else { log_uniform(hi9 * 1e-6, hi9, rng) };
        let g = gain_matrix_nsc(eta, sigma, l)?;
        rep.samples += 1;
        rep.max_eig_residual = rep.max_eig_residual.max(g.eig_residual);
        let el = eta * l;
        let params: &[(&str, f64)] = &[("eta", eta), ("sigma", sigma), ("L", l)];
        rep.check("theta_lower", sigma + (sigma * el).cbrt(), g.theta, params);
        rep.check("chi1_bound", g.chi[0], eta / (sigma * el).cbrt(), params);
        // closed forms of the Perron components derived from the
        // eigenvector equations, cross-checked against power iteration
        let gap = g.theta - sigma;
        let chi1_closed = eta / gap;
        let chi2_closed = gap / (2.0 * l) - eta - eta / (2.0 * gap);
        rep.check(
            "chi1_closed_form",
            (g.chi[0] - chi1_closed).abs(),
            1e-9 * chi1_closed.max(1e-30),
            params,
        );
        rep.check(
            "chi2_closed_form",
            (g.chi[1] - chi2_closed).abs(),
            1e-9 * chi2_closed.abs().max(1e-30),
            params,
        );
    }

    // component ratio bounds on pairs in (0, sigma^2 / (9^3 L))
    let hi10 = sigma * sigma / (729.0 * l) * 0.999;
    for k in 0..eta_samples {
        let (z1, z2) = if k == 0 {
            // equality case: the ratio bound must hold with ratio exactly 1
            let z = log_uniform(hi10 * 1e-4, hi10, rng);
            (z, z)
        } else {
            let a = log_uniform(hi10 * 1e-4, hi10, rng);
            let b = log_uniform(hi10 * 1e-4, hi10, rng);
            (a.max(b), a.min(b))
        };
        let g1 = gain_matrix_nsc(z1, sigma, l)?;
        let g2 = gain_matrix_nsc(z2, sigma, l)?;
        rep.samples += 1;
        let params: &[(&str, f64)] = &[("zeta1", z1), ("zeta2", z2), ("sigma", sigma), ("L", l)];
        rep.check(
            "chi2_ratio",
            g1.chi[1] / g2.chi[1],
            (z1 / z2).powf(28.0 / sigma),
            params,
        );
        rep.check(
            "chi1_ratio",
            g1.chi[0] / g2.chi[0],
            (z1 / z2).powf(6.0 / sigma),
            params,
        );
    }
    Ok(rep)
}

/// Decay bounds of the momentum coefficient and its running product under
/// a vanishing step: `alpha_t <= 2/(t+1)` and
/// `lambda_t >= D(beta, t0) / (t + t0)^{2 - beta}`; the product's decay
/// order is reported as a fitted log-log slope.
pub fn certify_momentum_decay(
    eta: f64,
    t0: u64,
    beta: f64,
    l: f64,
    horizon: u64,
) -> Result<CertReport> {
    if t0 < 1 {
        return Err(Error::InvalidParam("t0 must be >= 1".into()));
    }
    if !(0.0..2.0).contains(&beta) {
        return Err(Error::InvalidParam(format!("beta = {beta} outside [0, 2)")));
    }
    if horizon < 10 {
        return Err(Error::InvalidParam("horizon too short".into()));
    }
    let eta_at = |t: u64| eta / ((t + t0) as f64).powf(beta);
    let eta0 = eta_at(0);
    if eta0 >= 1.0 / (4.0 * l) {
        return Err(Error::InvalidParam(format!(
            "eta0 = {eta0:e} must be below 1/(4L) = {:e}",
            1.0 / (4.0 * l)
        )));
    }
    let mut rep = CertReport::new("momentum_decay", CERT_TOL);
    let d_const = 1.0 / ((t0 as f64 + 3.0).powi(2) * (16.0 + 6.0 / (2.0 - beta)).exp());

    let mut alpha = (eta0 * l).sqrt();
    let mut lambda = 1.0f64;
    let mut log_ts = Vec::new();
    let mut log_lambdas = Vec::new();
    rep.check("lambda0_is_one", (lambda - 1.0).abs(), 0.0, &[]);
    for t in 0..=horizon {
        rep.samples += 1;
        let params: &[(&str, f64)] = &[("t", t as f64), ("beta", beta), ("t0", t0 as f64)];
        rep.check("alpha_upper", alpha, 2.0 / (t as f64 + 1.0), params);
        rep.check(
            "lambda_lower",
            d_const / ((t + t0) as f64).powf(2.0 - beta),
            lambda,
            params,
        );
        if t >= horizon / 10 && t >= 1 {
            log_ts.push((t as f64).ln());
            log_lambdas.push(lambda.ln());
        }
        // advance: lambda_{t+1} = (1 - alpha_t) lambda_t
        lambda *= 1.0 - alpha;
        alpha = next_alpha(alpha, eta_at(t), eta_at(t + 1))?;
    }
    let (slope, _, _) = fit_line(&log_ts, &log_lambdas);
    rep.notes.push(("lambda_decay_slope".into(), slope));
    rep.notes.push(("expected_order".into(), -(2.0 - beta)));
    Ok(rep)
}

/// Sandwich inequalities certifying that the average of local gradients
/// behaves as an inexact gradient of the global objective at the average
/// evaluation point, with error controlled by the consensus distance.
pub fn check_inexact_gradient<R: Rng>(
    state: &AlgoState,
    suite: &ObjectiveSuite,
    samples: usize,
    rng: &mut R,
) -> Result<CertReport> {
    let mut rep = CertReport::new("inexact_gradient", CERT_TOL);
    let y = if state.algo.uses_y_iterates() {
        &state.y
    } else {
        &state.x
    };
    let grads = suite.grad_matrix(y)?;
    let ybar = column_means(y);
    let g = column_means(&grads);
    // f_hat = (1/n) sum_i [ f_i(y_i) + <grad_i, ybar - y_i> ]
    let mut f_hat = 0.0;
    for i in 0..suite.n() {
        let yi = RowDVector::from(y.row(i));
        let gi = RowDVector::from(grads.row(i));
        f_hat += suite.local_value(i, &yi)? + gi.dot(&(&ybar - &yi));
    }
    f_hat /= suite.n() as f64;
    let cons_sq = consensus_norm(y).powi(2);
    // the logistic suite's mu is a local Hessian estimate, not a global
    // strong-convexity constant; the lower bound only uses a true one
    let mu = match suite.kind() {
        crate::objectives::SuiteKind::Case1 => suite.mu(),
        _ => 0.0,
    };
    let l = suite.l();

    for k in 0..=samples {
        // include omega = ybar itself, then Gaussian perturbations at
        // mixed scales
        let omega = if k == 0 {
            ybar.clone()
        } else {
            let scale = [0.1, 1.0, 10.0][k % 3];
            &ybar
                + RowDVector::from_fn(suite.dim(), |_, _| {
                    (rng.random::<f64>() * 2.0 - 1.0) * scale
                })
        };
        rep.samples += 1;
        let f_omega = suite.global_value(&omega)?;
        let d = &omega - &ybar;
        let base = f_hat + g.dot(&d);
        let params: &[(&str, f64)] = &[("k", k as f64)];
        rep.check(
            "lower_bound",
            base + 0.5 * mu * d.norm_squared(),
            f_omega,
            params,
        );
        rep.check(
            "upper_bound",
            f_omega,
            base + l * d.norm_squared() + l / suite.n() as f64 * cons_sq,
            params,
        );
    }
    Ok(rep)
}

//! Synthetic objective suites: per-agent least squares (case 1), logistic
//! regression (case 2) and a flat-bottomed piecewise polynomial (case 3),
//! with smoothness/strong-convexity constants and a reference optimum.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::schedule::next_alpha;

pub const CASE3_EXPONENT: i32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Case1,
    Case2,
    Case3,
}

impl SuiteKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteKind::Case1 => "case1",
            SuiteKind::Case2 => "case2",
            SuiteKind::Case3 => "case3",
        }
    }
}

/// `n` local cost functions over `R^dim` plus global constants.
///
/// Case 1/2 hold per-agent feature rows (intercept column fixed to 1) and
/// targets; case 3 holds direction vectors `a_i` and linear terms `b_i`
/// with the last agent's `b` forced so the `b_i` sum to zero.
#[derive(Debug, Clone)]
pub struct ObjectiveSuite {
    kind: SuiteKind,
    n: usize,
    dim: usize,
    features: Vec<DMatrix<f64>>,
    targets: Vec<DVector<f64>>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    l: f64,
    mu: f64,
    fstar: f64,
    xstar: RowDVector<f64>,
}

impl ObjectiveSuite {
    pub fn kind(&self) -> SuiteKind {
        self.kind
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Global smoothness constant.
    pub fn l(&self) -> f64 {
        self.l
    }
    /// Strong-convexity constant; 0 when the suite is not strongly convex.
    /// For case 2 this is the smallest eigenvalue of the global Hessian at
    /// the optimum (a local estimate, never used inside algorithm updates).
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn fstar(&self) -> f64 {
        self.fstar
    }
    pub fn xstar(&self) -> &RowDVector<f64> {
        &self.xstar
    }

    fn check_input(&self, i: usize, x: &RowDVector<f64>) -> Result<()> {
        if i >= self.n {
            return Err(Error::InvalidParam(format!("agent {i} out of range")));
        }
        if x.len() != self.dim {
            return Err(Error::InvalidParam(format!(
                "point has dimension {}, suite has {}",
                x.len(),
                self.dim
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("objective input".into()));
        }
        Ok(())
    }

    pub fn local_value(&self, i: usize, x: &RowDVector<f64>) -> Result<f64> {
        self.check_input(i, x)?;
        let v = match self.kind {
            SuiteKind::Case1 => {
                let u = &self.features[i];
                let r = u * x.transpose() - &self.targets[i];
                r.norm_squared() / u.nrows() as f64
            }
            SuiteKind::Case2 => {
                let u = &self.features[i];
                let z = u * x.transpose();
                let mut acc = 0.0;
                for m in 0..u.nrows() {
                    acc += softplus(z[m]) - self.targets[i][m] * z[m];
                }
                acc / u.nrows() as f64
            }
            SuiteKind::Case3 => {
                let z = self.a.row(i).dot(x);
                let linear = self.b.row(i).dot(x);
                let m = CASE3_EXPONENT;
                if z.abs() <= 1.0 {
                    z.powi(m) / m as f64 + linear
                } else {
                    z.abs() - (m - 1) as f64 / m as f64 + linear
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("local value of agent {i}")))
        }
    }

    pub fn local_grad(&self, i: usize, x: &RowDVector<f64>) -> Result<RowDVector<f64>> {
        self.check_input(i, x)?;
        let g = match self.kind {
            SuiteKind::Case1 => {
                let u = &self.features[i];
                let r = u * x.transpose() - &self.targets[i];
                (u.transpose() * r).transpose() * (2.0 / u.nrows() as f64)
            }
            SuiteKind::Case2 => {
                let u = &self.features[i];
                let z = u * x.transpose();
                let mut g = RowDVector::zeros(self.dim);
                for m in 0..u.nrows() {
                    let c = sigmoid(z[m]) - self.targets[i][m];
                    g += u.row(m) * c;
                }
                g / u.nrows() as f64
            }
            SuiteKind::Case3 => {
                let z = self.a.row(i).dot(x);
                let m = CASE3_EXPONENT;
                let coeff = if z.abs() <= 1.0 { z.powi(m - 1) } else { z.signum() };
                self.a.row(i) * coeff + self.b.row(i)
            }
        };
        if g.iter().all(|v| v.is_finite()) {
            Ok(g)
        } else {
            Err(Error::NonFinite(format!("local gradient of agent {i}")))
        }
    }

    /// `f(x) = (1/n) sum_i f_i(x)`
    pub fn global_value(&self, x: &RowDVector<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.local_value(i, x)?;
        }
        Ok(acc / self.n as f64)
    }

    pub fn global_grad(&self, x: &RowDVector<f64>) -> Result<RowDVector<f64>> {
        let mut acc = RowDVector::zeros(self.dim);
        for i in 0..self.n {
            acc += self.local_grad(i, x)?;
        }
        Ok(acc / self.n as f64)
    }

    /// Stacked gradients: row `i` is the local gradient of agent `i` at the
    /// `i`-th row of `points`.
    pub fn grad_matrix(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.n, self.dim);
        for i in 0..self.n {
            let g = self.local_grad(i, &RowDVector::from(points.row(i)))?;
            out.set_row(i, &g);
        }
        Ok(out)
    }

    /// Global objective value `f(row_i)` for every row.
    pub fn row_values(&self, points: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(points.nrows());
        for i in 0..points.nrows() {
            out[i] = self.global_value(&RowDVector::from(points.row(i)))?;
        }
        Ok(out)
    }

    /// Self-describing flat text layout; round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("dngd-suite v1\n");
        s.push_str(&format!("kind {}\n", self.kind.as_str()));
        s.push_str(&format!("n {}\n", self.n));
        s.push_str(&format!("dim {}\n", self.dim));
        s.push_str(&format!("L {:e}\n", self.l));
        s.push_str(&format!("mu {:e}\n", self.mu));
        s.push_str(&format!("fstar {:e}\n", self.fstar));
        s.push_str(&format!("xstar {}\n", join_floats(self.xstar.iter())));
        match self.kind {
            SuiteKind::Case1 | SuiteKind::Case2 => {
                for i in 0..self.n {
                    let u = &self.features[i];
                    s.push_str(&format!("agent {} {}\n", i, u.nrows()));
                    for m in 0..u.nrows() {
                        s.push_str(&format!(
                            "row {} {:e}\n",
                            join_floats(u.row(m).iter()),
                            self.targets[i][m]
                        ));
                    }
                }
            }
            SuiteKind::Case3 => {
                for i in 0..self.n {
                    s.push_str(&format!("a {}\n", join_floats(self.a.row(i).iter())));
                    s.push_str(&format!("b {}\n", join_floats(self.b.row(i).iter())));
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().peekable();
        let mut expect = |prefix: &str| -> Result<(usize, String)> {
            let (idx, line) = lines.next().ok_or(Error::Parse {
                line: 0,
                msg: format!("missing `{prefix}` line"),
            })?;
            let rest = line.strip_prefix(prefix).ok_or(Error::Parse {
                line: idx + 1,
                msg: format!("expected line starting with `{prefix}`"),
            })?;
            Ok((idx + 1, rest.trim().to_string()))
        };
        expect("dngd-suite v1")?;
        let (ln, kind_s) = expect("kind ")?;
        let kind = match kind_s.as_str() {
            "case1" => SuiteKind::Case1,
            "case2" => SuiteKind::Case2,
            "case3" => SuiteKind::Case3,
            other => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unknown kind `{other}`"),
                })
            }
        };
        let parse_num = |s: &str, ln: usize| -> Result<f64> {
            s.parse().map_err(|e| Error::Parse {
                line: ln,
                msg: format!("{e}"),
            })
        };
        let (ln, n_s) = expect("n ")?;
        let n = parse_num(&n_s, ln)? as usize;
        let (ln, dim_s) = expect("dim ")?;
        let dim = parse_num(&dim_s, ln)? as usize;
        let (ln, l_s) = expect("L ")?;
        let l = parse_num(&l_s, ln)?;
        let (ln, mu_s) = expect("mu ")?;
        let mu = parse_num(&mu_s, ln)?;
        let (ln, f_s) = expect("fstar ")?;
        let fstar = parse_num(&f_s, ln)?;
        let (ln, x_s) = expect("xstar ")?;
        let xs: Vec<f64> = x_s
            .split_whitespace()
            .map(|t| parse_num(t, ln))
            .collect::<Result<_>>()?;
        let xstar = RowDVector::from_vec(xs);

        let mut features = Vec::new();
        let mut targets = Vec::new();
        let mut a = DMatrix::zeros(0, 0);
        let mut b = DMatrix::zeros(0, 0);
        match kind {
            SuiteKind::Case1 | SuiteKind::Case2 => {
                for _ in 0..n {
                    let (ln, hdr) = expect("agent ")?;
                    let mut it = hdr.split_whitespace();
                    let _idx: usize = parse_num(it.next().unwrap_or(""), ln)? as usize;
                    let m: usize = parse_num(it.next().unwrap_or(""), ln)? as usize;
                    let mut u = DMatrix::zeros(m, dim);
                    let mut v = DVector::zeros(m);
                    for r in 0..m {
                        let (ln, row) = expect("row ")?;
                        let vals: Vec<f64> = row
                            .split_whitespace()
                            .map(|t| parse_num(t, ln))
                            .collect::<Result<_>>()?;
                        if vals.len() != dim + 1 {
                            return Err(Error::Parse {
                                line: ln,
                                msg: format!("expected {} values, got {}", dim + 1, vals.len()),
                            });
                        }
                        for c in 0..dim {
                            u[(r, c)] = vals[c];
                        }
                        v[r] = vals[dim];
                    }
                    features.push(u);
                    targets.push(v);
                }
            }
            SuiteKind::Case3 => {
                a = DMatrix::zeros(n, dim);
                b = DMatrix::zeros(n, dim);
                for i in 0..n {
                    let (ln, arow) = expect("a ")?;
                    let av: Vec<f64> = arow
                        .split_whitespace()
                        .map(|t| parse_num(t, ln))
                        .collect::<Result<_>>()?;
                    let (ln2, brow) = expect("b ")?;
                    let bv: Vec<f64> = brow
                        .split_whitespace()
                        .map(|t| parse_num(t, ln2))
                        .collect::<Result<_>>()?;
                    for c in 0..dim {
                        a[(i, c)] = av[c];
                        b[(i, c)] = bv[c];
                    }
                }
            }
        }
        Ok(Self {
            kind,
            n,
            dim,
            features,
            targets,
            a,
            b,
            l,
            mu,
            fstar,
            xstar,
        })
    }
}

fn join_floats<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `ln(1 + e^z)` evaluated as `max(z, 0) + ln(1 + e^{-|z|})`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Least-squares suite: feature entries Gaussian with variance 400
/// (intercept fixed to 1), targets from a hidden parameter plus Gaussian
/// noise with variance 100; reference optimum from the aggregate normal
/// equations.
pub fn gen_case1<R: Rng>(
    n: usize,
    samples_per_agent: usize,
    dim: usize,
    rng: &mut R,
) -> Result<ObjectiveSuite> {
    check_gen_params(n, samples_per_agent, dim)?;
    let feat = Normal::new(0.0, 20.0).unwrap();
    let noise = Normal::new(0.0, 10.0).unwrap();
    let xt = RowDVector::from_fn(dim, |_, _| rng.random::<f64>());
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = DMatrix::zeros(samples_per_agent, dim);
        let mut v = DVector::zeros(samples_per_agent);
        for m in 0..samples_per_agent {
            for c in 0..dim - 1 {
                u[(m, c)] = feat.sample(rng);
            }
            u[(m, dim - 1)] = 1.0;
            v[m] = u.row(m).dot(&xt) + noise.sample(rng);
        }
        features.push(u);
        targets.push(v);
    }

    let mut l = f64::NEG_INFINITY;
    let mut mu = f64::INFINITY;
    let mut h_bar = DMatrix::zeros(dim, dim);
    let mut c_bar = DVector::zeros(dim);
    for i in 0..n {
        let u = &features[i];
        let h = u.transpose() * u * (2.0 / samples_per_agent as f64);
        let evs = sym_eigenvalues(&h);
        l = l.max(evs[dim - 1]);
        mu = mu.min(evs[0]);
        c_bar += u.transpose() * &targets[i] * (2.0 / samples_per_agent as f64);
        h_bar += h;
    }
    h_bar /= n as f64;
    c_bar /= n as f64;

    // exact solve of the aggregate normal equations, with iterative refinement
    let lu = h_bar.clone().lu();
    let mut x = lu.solve(&c_bar).ok_or(Error::SingularSystem)?;
    for _ in 0..2 {
        let r = &c_bar - &h_bar * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    let xstar = x.transpose();

    let mut suite = ObjectiveSuite {
        kind: SuiteKind::Case1,
        n,
        dim,
        features,
        targets,
        a: DMatrix::zeros(0, 0),
        b: DMatrix::zeros(0, 0),
        l,
        mu,
        fstar: 0.0,
        xstar: xstar.clone(),
    };
    suite.fstar = suite.global_value(&xstar)?;
    Ok(suite)
}

/// Logistic-regression suite: feature entries Gaussian with variance 100
/// (intercept 1), Bernoulli labels from a hidden parameter; `mu` is the
/// smallest eigenvalue of the global Hessian at the reference optimum.
pub fn gen_case2<R: Rng>(
    n: usize,
    samples_per_agent: usize,
    dim: usize,
    rng: &mut R,
) -> Result<ObjectiveSuite> {
    check_gen_params(n, samples_per_agent, dim)?;
    let feat = Normal::new(0.0, 10.0).unwrap();
    let xt = RowDVector::from_fn(dim, |_, _| rng.random::<f64>());
    let mut features = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = DMatrix::zeros(samples_per_agent, dim);
        let mut v = DVector::zeros(samples_per_agent);
        for m in 0..samples_per_agent {
            for c in 0..dim - 1 {
                u[(m, c)] = feat.sample(rng);
            }
            u[(m, dim - 1)] = 1.0;
            let p = sigmoid(u.row(m).dot(&xt));
            v[m] = if rng.random_bool(p) { 1.0 } else { 0.0 };
        }
        features.push(u);
        targets.push(v);
    }

    let mut l = f64::NEG_INFINITY;
    for u in &features {
        let h = u.transpose() * u / (4.0 * samples_per_agent as f64);
        l = l.max(sym_eigenvalues(&h)[dim - 1]);
    }

    let mut suite = ObjectiveSuite {
        kind: SuiteKind::Case2,
        n,
        dim,
        features,
        targets,
        a: DMatrix::zeros(0, 0),
        b: DMatrix::zeros(0, 0),
        l,
        mu: 0.0,
        fstar: 0.0,
        xstar: RowDVector::zeros(dim),
    };
    let (xstar, fstar) = match solve_reference(&suite, 1e-12) {
        Ok(pair) => pair,
        Err(Error::NoConvergence { grad_norm, tol }) => {
            // uniform labels on some agent can make the optimum escape to
            // infinity; surface that case distinctly
            for (i, t) in suite.targets.iter().enumerate() {
                let first = t[0];
                if t.iter().all(|&v| v == first) {
                    return Err(Error::DegenerateLabels { agent: i });
                }
            }
            return Err(Error::NoConvergence { grad_norm, tol });
        }
        Err(e) => return Err(e),
    };

    // local effective strong convexity: smallest Hessian eigenvalue at xstar
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..n {
        let u = &suite.features[i];
        let mut hi = DMatrix::zeros(dim, dim);
        for m in 0..u.nrows() {
            let s = sigmoid(u.row(m).dot(&xstar));
            let row = u.row(m);
            hi += row.transpose() * row * (s * (1.0 - s));
        }
        hess += hi / u.nrows() as f64;
    }
    hess /= n as f64;
    suite.mu = sym_eigenvalues(&hess)[0].max(0.0);
    suite.xstar = xstar;
    suite.fstar = fstar;
    Ok(suite)
}

/// Flat-bottomed piecewise suite: `a_i`, `b_i` standard Gaussian, last
/// agent's `b` forced so the `b_i` sum to zero; convex and smooth but not
/// strongly convex.
pub fn gen_case3<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<ObjectiveSuite> {
    check_gen_params(n, 1, dim)?;
    if n < 2 {
        return Err(Error::InvalidParam("case 3 needs n >= 2".into()));
    }
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut a = DMatrix::zeros(n, dim);
    let mut b = DMatrix::zeros(n, dim);
    for i in 0..n {
        for c in 0..dim {
            a[(i, c)] = std_normal.sample(rng);
            if i < n - 1 {
                b[(i, c)] = std_normal.sample(rng);
            }
        }
    }
    for c in 0..dim {
        let mut s = 0.0;
        for i in 0..n - 1 {
            s += b[(i, c)];
        }
        b[(n - 1, c)] = -s;
    }

    let l = (0..n)
        .map(|i| (CASE3_EXPONENT - 1) as f64 * a.row(i).norm_squared())
        .fold(f64::NEG_INFINITY, f64::max);

    let mut suite = ObjectiveSuite {
        kind: SuiteKind::Case3,
        n,
        dim,
        features: Vec::new(),
        targets: Vec::new(),
        a,
        b,
        l,
        mu: 0.0,
        fstar: 0.0,
        xstar: RowDVector::zeros(dim),
    };
    let (xstar, fstar) = solve_reference(&suite, 1e-12)?;
    suite.xstar = xstar;
    suite.fstar = fstar;
    Ok(suite)
}

fn check_gen_params(n: usize, samples: usize, dim: usize) -> Result<()> {
    if n == 0 || samples == 0 || dim == 0 {
        return Err(Error::InvalidParam(
            "n, samples_per_agent and dim must be positive".into(),
        ));
    }
    Ok(())
}

/// Reference optimum. Case 1 uses the exact aggregate linear solve at
/// generation time; this routine covers the iterative path (cases 2 and 3,
/// and re-solves): accelerated gradient descent with gradient-based
/// adaptive restarts, run until `||grad f|| <= tol`.
pub fn solve_reference(suite: &ObjectiveSuite, tol: f64) -> Result<(RowDVector<f64>, f64)> {
    if tol < 1e-12 {
        return Err(Error::InvalidParam(format!("tol = {tol:e} below 1e-12")));
    }
    if suite.kind == SuiteKind::Case1 {
        // re-derive via the normal equations
        let dim = suite.dim;
        let mut h_bar = DMatrix::zeros(dim, dim);
        let mut c_bar = DVector::zeros(dim);
        for i in 0..suite.n {
            let u = &suite.features[i];
            h_bar += u.transpose() * u * (2.0 / u.nrows() as f64);
            c_bar += u.transpose() * &suite.targets[i] * (2.0 / u.nrows() as f64);
        }
        h_bar /= suite.n as f64;
        c_bar /= suite.n as f64;
        let lu = h_bar.clone().lu();
        let mut x = lu.solve(&c_bar).ok_or(Error::SingularSystem)?;
        for _ in 0..2 {
            let r = &c_bar - &h_bar * &x;
            if let Some(dx) = lu.solve(&r) {
                x += dx;
            }
        }
        let xstar = x.transpose();
        let fstar = suite.global_value(&xstar)?;
        return Ok((xstar, fstar));
    }

    let eta = 1.0 / suite.l;
    let alpha0 = 0.9;
    let mut x = RowDVector::zeros(suite.dim);
    let mut v = x.clone();
    let mut y = x.clone();
    let mut alpha = alpha0;
    let mut best: Option<(f64, RowDVector<f64>)> = None;
    const MAX_ITERS: usize = 1_000_000;
    for _ in 0..MAX_ITERS {
        let g = suite.global_grad(&y)?;
        let gnorm = g.norm();
        if best.as_ref().is_none_or(|(bn, _)| gnorm < *bn) {
            best = Some((gnorm, y.clone()));
        }
        if gnorm <= tol {
            let fstar = suite.global_value(&y)?;
            return Ok((y, fstar));
        }
        let x_next = &y - &g * eta;
        let v_next = &v - &g * (eta / alpha);
        let alpha_next = next_alpha(alpha, eta, eta)?;
        let y_next = &x_next * (1.0 - alpha_next) + &v_next * alpha_next;
        // restart the momentum when it stops making progress
        if g.dot(&(&x_next - &x)) > 0.0 {
            alpha = alpha0;
            v = x_next.clone();
            y = x_next.clone();
        } else {
            alpha = alpha_next;
            v = v_next;
            y = y_next;
        }
        x = x_next;
    }
    let (grad_norm, _) = best.unwrap();
    Err(Error::NoConvergence { grad_norm, tol })
}

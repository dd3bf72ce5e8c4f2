//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{Complex, DMatrix, DVector, Matrix3, RowDVector, Vector3};

/// Column means of an n-by-N matrix with compensated (Kahan) summation.
///
/// The average-sequence identities are checked at 1e-12, so the row means
/// must not lose more than one ulp per entry.
pub fn column_means(m: &DMatrix<f64>) -> RowDVector<f64> {
    let n = m.nrows();
    let mut out = RowDVector::zeros(m.ncols());
    for j in 0..m.ncols() {
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for i in 0..n {
            let y = m[(i, j)] - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        out[j] = sum / n as f64;
    }
    out
}

/// Frobenius distance of the rows of `m` from their common mean,
/// `|| m - 1 * mean ||_F`.
pub fn consensus_norm(m: &DMatrix<f64>) -> f64 {
    let mean = column_means(m);
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = m[(i, j)] - mean[j];
            acc += d * d;
        }
    }
    acc.sqrt()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Largest singular value of `m`, i.e. its spectral norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Dominant eigenpair of a (small) nonnegative matrix by power iteration.
///
/// Converges when the iterate satisfies `||G v - theta v|| <= tol` or the
/// iteration budget runs out; returns the pair along with the achieved
/// residual so callers can reject bad samples.
pub fn power_iteration_3(g: &Matrix3<f64>, tol: f64, max_iter: usize) -> (f64, Vector3<f64>, f64) {
    let mut v = Vector3::new(1.0, 1.0, 1.0).normalize();
    let mut theta = 0.0;
    let mut resid = f64::INFINITY;
    for _ in 0..max_iter {
        let w = g * v;
        let norm = w.norm();
        if norm == 0.0 {
            return (0.0, v, 0.0);
        }
        let v_new = w / norm;
        theta = v_new.dot(&(g * v_new));
        resid = (g * v_new - theta * v_new).norm();
        v = v_new;
        if resid <= tol {
            break;
        }
    }
    (theta, v, resid)
}

/// All three eigenvalues of a 3x3 real matrix via the dense solver.
pub fn eigenvalues_3(g: &Matrix3<f64>) -> Vec<Complex<f64>> {
    let d = DMatrix::from_fn(3, 3, |i, j| g[(i, j)]);
    d.complex_eigenvalues().iter().copied().collect()
}

/// Eigenvalues of a small symmetric matrix via cyclic Jacobi rotations.
/// Returned in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    assert_eq!(m.nrows(), m.ncols());
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut evs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    DVector::from_vec(evs)
}

/// Least-squares line fit `y ~ slope * x + intercept`; returns
/// `(slope, intercept, r_squared)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let p = slope * x + intercept;
        ss_res += (y - p) * (y - p);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

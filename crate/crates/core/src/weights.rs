//! Doubly stochastic consensus matrices and their averaging constant
//! (second-largest singular value).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::linalg::spectral_norm;

/// Dense doubly stochastic consensus matrix with the graph's sparsity
/// pattern plus a strictly positive diagonal, and its cached averaging
/// constant `sigma`.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    n: usize,
    w: DMatrix<f64>,
    sigma: f64,
}

impl WeightMatrix {
    fn from_matrix(w: DMatrix<f64>) -> Result<Self> {
        let n = w.nrows();
        let sigma = second_singular(&w)?;
        Ok(Self { n, w, sigma })
    }

    /// Wraps an explicit matrix after checking double stochasticity.
    pub fn try_from_matrix(w: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Second-largest singular value; per-round consensus contraction factor.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{:e}", self.w[(i, j)])).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// `W = I - L / tau` with `tau = d_max + 1`; connected input required so
/// that `sigma < 1`.
pub fn laplacian_weights(g: &Graph) -> Result<WeightMatrix> {
    if !g.is_connected() {
        return Err(Error::NotConnected { attempts: 1 });
    }
    let n = g.n();
    let degrees = g.degrees();
    let tau = (*degrees.iter().max().unwrap() + 1) as f64;
    let mut w = DMatrix::zeros(n, n);
    for (a, b) in g.edges() {
        w[(a, b)] = 1.0 / tau;
        w[(b, a)] = 1.0 / tau;
    }
    for i in 0..n {
        w[(i, i)] = 1.0 - degrees[i] as f64 / tau;
    }
    WeightMatrix::from_matrix(w)
}

/// Metropolis rule `w_ij = 1 / (1 + max(d_i, d_j))` with the diagonal
/// absorbing the remainder. Works on disconnected graphs (`sigma` may
/// equal 1), which is what time-varying runs need.
pub fn metropolis_weights(g: &Graph) -> WeightMatrix {
    let n = g.n();
    let degrees = g.degrees();
    let mut w = DMatrix::zeros(n, n);
    for (a, b) in g.edges() {
        let v = 1.0 / (1.0 + degrees[a].max(degrees[b]) as f64);
        w[(a, b)] = v;
        w[(b, a)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    WeightMatrix::from_matrix(w).expect("metropolis weights are doubly stochastic")
}

/// Spectral norm of `W - (1/n) 1 1^T`, the second-largest singular value of
/// a doubly stochastic `W`. Rejects inputs whose row or column sums deviate
/// from 1 by more than 1e-10.
pub fn second_singular(w: &DMatrix<f64>) -> Result<f64> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::InvalidParam(format!(
            "matrix is {}x{}, expected square",
            w.nrows(),
            w.ncols()
        )));
    }
    let mut max_dev = 0.0f64;
    for i in 0..n {
        let rs: f64 = (0..n).map(|j| w[(i, j)]).sum();
        let cs: f64 = (0..n).map(|j| w[(j, i)]).sum();
        max_dev = max_dev.max((rs - 1.0).abs()).max((cs - 1.0).abs());
    }
    if max_dev > 1e-10 {
        return Err(Error::NotDoublyStochastic { max_dev });
    }
    let b = w - DMatrix::from_element(n, n, 1.0 / n as f64);
    Ok(spectral_norm(&b))
}

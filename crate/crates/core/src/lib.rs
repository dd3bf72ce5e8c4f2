//! Distributed Nesterov gradient methods over simulated communication
//! graphs.
//!
//! The crate has five layers:
//!
//! - [`graphs`] / [`weights`]: topology generators and doubly stochastic
//!   consensus matrices with their averaging constant `sigma`.
//! - [`objectives`]: the three synthetic cost-function suites (least
//!   squares, logistic regression, a flat-bottomed piecewise polynomial)
//!   with smoothness constants and a high-precision reference optimum.
//! - [`algorithms`]: nine optimization methods behind one stepping
//!   interface - the accelerated gradient-tracking pair (strongly convex
//!   and general convex), their centralized counterparts, and the
//!   comparison baselines (DGD, D-NG, D-NC, EXTRA, Acc-DGD) - plus step
//!   schedules and closed-form step-size bounds.
//! - [`analysis`]: convergence metrics, empirical rate fits, 3x3 gain
//!   matrices and numeric certification of the spectral and momentum-decay
//!   bounds that govern the methods' convergence proofs.
//! - [`harness`]: declarative experiment configs, deterministic seeded
//!   execution, CSV trace emission.
//!
//! ```
//! use dngd::{algorithms, graphs, objectives, weights};
//! use nalgebra::{DMatrix, RowDVector};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let graph = graphs::gen_erdos_renyi(8, 0.5, &mut rng, 50)?;
//! let w = weights::laplacian_weights(&graph)?;
//! let suite = objectives::gen_case1(8, 20, 3, &mut rng)?;
//!
//! let x0 = DMatrix::zeros(8, 3);
//! let mut state = algorithms::init_acc_dngd_sc(&suite, &w, 0.1 / suite.l(), &x0)?;
//! let start = suite.global_value(&RowDVector::from(state.x.row(0)))? - suite.fstar();
//! for _ in 0..500 {
//!     state = algorithms::step_acc_dngd_sc(state, &suite, &w)?;
//! }
//! let err = suite.global_value(&RowDVector::from(state.x.row(0)))? - suite.fstar();
//! assert!(err < start / 100.0);
//! # Ok::<(), dngd::Error>(())
//! ```

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod graphs;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod schedule;
pub mod weights;

pub use error::{Error, Result};

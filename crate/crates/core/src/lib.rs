//! Thermodynamic formalism for finite families of matrices.
//!
//! The crate computes rigorous finite-depth bounds on the pressure function
//! `P(q) = lim (1/n) log Σ_{|J|=n} ‖M_J‖^q`, Lyapunov exponents of shift-invariant
//! measures, finite-level approximants of equilibrium (Gibbs) states, the
//! block upper-triangular decomposition of reducible families, and the
//! singular-value-function pressure with the associated affinity dimension.
//!
//! | module | contents |
//! |---|---|
//! | [`matfam`] | matrices, families, words, norms, exterior powers |
//! | [`decomp`] | irreducibility, invariant subspaces, block triangularization |
//! | [`pressure`] | partition sums and pressure bounds |
//! | [`ergodic`] | shift-invariant measures, entropy, Lyapunov exponents |
//! | [`gibbs`] | cylinder distributions, Cesàro averages, Gibbs ratios |
//! | [`svf`] | singular value function pressure, affinity dimension |
//! | [`cli`] | file formats and command dispatch for the `matpress` binary |

pub mod cli;
pub mod decomp;
pub mod ergodic;
pub mod error;
pub mod gibbs;
pub mod matfam;
pub mod pressure;
pub mod svf;
pub mod tree;

pub use error::{Error, Result};
pub use matfam::{Field, Matrix, MatrixFamily, Norm, Scalar, Word};

//! Transformer attention read as gradient ascent on the log normalizer of an
//! exponential family.
//!
//! * [`expfam`]: closed-form log normalizers, gradients, Hessians, the Jensen
//!   bound for general Gaussian mixtures, and the Fenchel conjugate.
//! * [`attention`]: the pointwise attention update operator and a
//!   conventional softmax-attention layer it is equivalent to.
//! * [`dynamics`]: the renormalization operator, composed layer steps,
//!   trajectory simulation, and the exact equilibrium check.
//! * [`oracle`]: finite differences, Monte Carlo and grid search, kept
//!   independent of the closed forms they verify.

pub mod attention;
pub mod check;
pub mod dynamics;
pub mod error;
pub mod expfam;
pub mod instances;
pub mod linalg;
pub mod oracle;
pub mod sampling;
pub mod stats;

pub use attention::{
    attention_update, self_attention_update, softmax_attention_layer, AttentionConfig,
    BilinearForm, ParamEnsemble,
};
pub use dynamics::{
    equilibrium_affine_check, layer_step, moments, renormalize, simulate, simulate_observed,
    BandStatus, EnsembleMoments, EquilibriumMonitor, EquilibriumReport, EquilibriumVerdict,
    MeasurePolicy, Phase, PushforwardImage, RenormSpec, Trajectory, TrajectoryRecord,
};
pub use error::{Error, Result};
pub use expfam::{
    attention_weights, fenchel_conjugate, grad_log_partition, grad_lower_bound,
    hessian_log_partition, log_partition, lower_bound_log_partition, ConjugateSolution, DualParam,
    IntrinsicMeasure, NaturalParam,
};
pub use linalg::PsdMatrix;
pub use nalgebra::{DMatrix, DVector};

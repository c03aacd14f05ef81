//! Poincaré-ball geometry, a hyperbolic Siamese change-detection head and
//! Gromov δ-hyperbolicity estimation.
//!
//! - [`ball`]: Möbius addition, distance, exponential map and their derivatives.
//! - [`hyplayers`]: feature clipping, origin lift, hyperbolic logistic regression, BCE.
//! - [`hyperbolicity`]: Gromov products, min-max products, δ and relative δ.
//! - [`siamese`]: weight-tied encoder, change feature, heads, training and metrics.
//! - [`synthdata`]: seeded hierarchical pair generator.
//! - [`io`]: CSV, config and model file formats.

pub mod ball;
pub mod error;
pub mod gradcheck;
pub mod hyperbolicity;
pub mod hyplayers;
pub mod io;
pub mod linalg;
pub mod siamese;
pub mod synthdata;

pub use ball::{Curvature, PoincareBall};
pub use error::{Error, Result};
pub use hyperbolicity::Metric;
pub use hyplayers::{ClipRadius, HypBlrParams, Hyperplane, Label};
pub use linalg::Jacobian;
pub use io::RunConfig;
pub use siamese::{HeadMode, Model, PairSample, TrainConfig};
pub use synthdata::HierarchySpec;

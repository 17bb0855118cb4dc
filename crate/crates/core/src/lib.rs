//! Point-cloud serialization and masking toolkit.
//!
//! The data path mirrors a masked-autoencoder pre-training pipeline for point
//! clouds at desk scale:
//!
//! 1. [`pointcloud`]: load, normalize, farthest-point sample, group by KNN and
//!    encode each patch into a token with a tiny shared MLP.
//! 2. [`scan`]: serialize points or tokens with the 3D zigzag scan, or with
//!    one of the baseline curves (Hilbert, Z-order, their transposed variants,
//!    random), and measure how local the resulting sequence is.
//! 3. [`masking`]: mask the most redundant tokens by cosine-similarity row
//!    sums, then randomly mask a share of the remaining ones.
//! 4. [`ssm`]: a linear state-space recurrence, Chamfer-L2 and a small
//!    masked-patch reconstruction loop with analytic gradients.

pub mod error;
pub mod masking;
pub mod pipeline;
pub mod pointcloud;
pub mod rng;
pub mod scan;
pub mod ssm;
pub mod synthetic;

pub use error::{Error, Result};
pub use pointcloud::{Point3, PointCloud};

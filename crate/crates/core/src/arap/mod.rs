//! As-rigid-as-possible surface deformation and the compression / lobe
//! deformation generators used for synthetic training pairs.

mod generators;
mod laplacian;
mod solver;

pub use generators::{gen_compression, gen_lobe, geodesic_ball, CompressionParams, LobeParams};
pub use laplacian::{build_laplacian, cotangent_weights, WeightScheme};
pub use solver::{arap_energy, arap_solve, ArapConfig, ArapResult, ArapSolver, DeformationConstraints};

//! Linear-elastic finite elements on tetrahedra and correspondence-driven
//! registration solved by conjugate gradient.

mod cg;
mod interp;
mod registration;
mod stiffness;

pub use cg::{conjugate_gradient, CgOptions, CgResult, Preconditioner};
pub use interp::TetInterpolator;
pub use registration::{
    snap_matches, solve_registration, Registration, RegistrationConfig, SolveReport, SolveStep, VertexTarget,
};
pub use stiffness::{
    assemble_at, assemble_stiffness, element_stiffness, shape_gradients, ElementMatrix, MaterialParams,
    StiffnessMatrix,
};

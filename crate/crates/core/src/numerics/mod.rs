//! Numerical building blocks shared by the physics modules.

pub mod interp;
pub mod linalg;
pub mod ode;
pub mod oscillatory;
pub mod quad;

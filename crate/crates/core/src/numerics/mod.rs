//! Generic numerical building blocks shared by the physics modules.

pub mod diff;
pub mod fit;
pub mod interp;
pub mod ode;
pub mod quad;
pub mod sparse;

//! Outer problem around two peaks at `±a`: the elliptic equations for Ω and Z
//! on a punctured disk, and their matching constants `A` and `B`.

pub mod grid;
pub mod singular;
pub mod solve;

pub use grid::{CompositeGrid, NodeKind, OuterDomain};
pub use singular::{drift, g_closed, w0_grad, w0_grad_taylor, Expansion, SingularBasis, Vec2, PEAK};
pub use solve::{refine, solve_level, LevelSolution, LevelSummary, OuterStudy, RefinementEntry};

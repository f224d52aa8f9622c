//! Numerical laboratory for quasilinear elliptic systems with Uhlenbeck
//! structure, `-div(a(|∇u|)∇u) = f`.
//!
//! The crate bundles the Orlicz and Lorentz machinery that measures data and
//! solutions, a P1 finite-element energy minimiser for Dirichlet and Neumann
//! problems on convex domains, and the experiments that compare the computed
//! `‖∇u‖_∞` with `b⁻¹(‖f‖_{L^{n,1}})`.

pub mod checks;
pub mod cli;
pub mod mesh;
pub mod nonlinearity;
pub mod quadrature;
pub mod rearrangement;
pub mod rhs;
pub mod solver;
pub mod verify;

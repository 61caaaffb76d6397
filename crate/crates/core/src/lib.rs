//! Finite-difference solvers for distributed optimal control of the
//! Cahn–Hilliard equation.
//!
//! The optimality system couples the controlled state equation
//! `y_t = Δ(y³ − y) − ε²Δ²y + u` with the backward adjoint equation
//! `−p_t = f'(y)Δp − ε²Δ²p + ŷ − y`, `p(T) = 0`, through `u = p/λ`, under
//! zero-flux boundary conditions. Three time discretizations of the state
//! equation are provided (see [`SchemeKind`]); the coupled system is solved by
//! forward–backward sweeps ([`solve_ocp`]) with a dense monolithic oracle
//! ([`solve_monolithic_tiny`]) for cross-checking.
//!
//! Everything is generic over [`Real`]; the `*64` aliases fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dense;
pub mod error;
pub mod expr;
pub mod grid;
pub mod harness;
pub mod linsolve;
pub mod norms;
pub mod ocp;
pub mod ops;
pub mod scalar;
pub mod schemes;

pub use error::{Error, Result};
pub use expr::{parse, Expr, ParseError};
pub use grid::{Axis, Field, SpaceGrid, TimeGrid, Trajectory};
pub use linsolve::{
    assemble, factorize, solve, Coefficient, FactoredOperator, Placement, SparseOperator,
};
pub use norms::{inner_product, mass, norm_l2, norm_max, seminorm_h1, seminorm_h2};
pub use ocp::{
    backward_solve, control_from_adjoint, cost_functional, forward_solve, solve_monolithic_tiny,
    solve_ocp, ProblemSpec, Solution, SweepConfig,
};
pub use ops::{bilaplacian, diff_backward, laplacian};
pub use scalar::Real;
pub use schemes::{
    adjoint_step, f_eval, f_prime, f_tilde, state_step_s1, state_step_s2, state_step_s3,
    AdjointVariant, NewtonConfig, SchemeKind, StateStepper, StepParams, StepReport,
};

pub type SpaceGrid64 = SpaceGrid<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type Field64 = Field<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type Solution64 = Solution<f64>;
pub type SweepConfig64 = SweepConfig<f64>;

pub type Field32 = Field<f32>;
pub type ProblemSpec32 = ProblemSpec<f32>;

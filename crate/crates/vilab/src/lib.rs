//! Numerical laboratory for obstacle problems with mixed boundary conditions.
//!
//! The crate discretizes the complementarity problem u ≥ 0, −Δu − g ≥ 0,
//! u(−Δu − g) = 0 on the unit interval/square with a Dirichlet trace or a
//! Robin (heat-exchange) condition on part of the boundary, solves the
//! resulting linear complementarity problems with two independent algorithms,
//! verifies the monotonicity/continuity/convexity estimates that the solution
//! map satisfies, optimizes the distributed control g against a quadratic
//! cost, and runs the h→∞ studies where the Robin problems approach the
//! Dirichlet one.
//!
//! Modules follow the pipeline: [`grid`]/[`fields`] describe the data,
//! [`assembly`] builds the discrete operators, [`solver`] produces states,
//! [`estimates`] checks the inequality suite, [`control`] optimizes g,
//! [`convergence`] sweeps h, and [`suite`]/[`report`] batch and export.

pub mod assembly;
pub mod control;
pub mod convergence;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod grid;
pub mod report;
pub mod solver;
pub mod sparse;
pub mod suite;

mod eigen;

pub use assembly::{
    assemble, assemble_template, assemble_with, calibrate_lambda1, coercivity_for_mode,
    estimate_coercivity, trace_operator_norm, MassKind, Mode, ProblemTemplate, Subspace, ViProblem,
};
pub use control::{
    check_convexity_gap, cost_gradient, eval_cost, minimize_cost, uniqueness_probe, ControlProblem,
    ControlResult, OptimizerConfig,
};
pub use convergence::{
    fit_rate, h_sweep_control, h_sweep_state, ControlSweep, ControlSweepVerdict, StateSweepVerdict,
    SweepColumn, SweepRow, SweepTable,
};
pub use error::{Error, Result};
pub use estimates::{
    check_continuity, check_h_lipschitz, check_lemma_h_bounds, check_lemma_l3,
    check_mignot_monotony, check_monotone_in_g, check_sandwich, check_theorem1, compute_alpha_beta,
    tol_check, ComboFamily, ContinuityStudy, ConvexCombo, EstimateReport,
};
pub use fields::FieldSpec;
pub use grid::{build_grid, BoundaryLabel, Grid, GridFunction, Role, Side};
pub use solver::{
    pdas, psor, psor_from, solve_dirichlet_vi, solve_robin_vi, solve_vi, write_solution_csv,
    SolverConfig, SolverId, ViSolution,
};

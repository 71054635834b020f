//! Bond percolation on rank-1 inhomogeneous random graphs with power-law
//! weights (τ ∈ (2,3)): exact samplers, component extraction, the limiting
//! hub graph and Durrett–Kesten model, and the branching-process fixed
//! point behind the √n-sized giant.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod components;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod fixedpoint;
pub mod graphgen;
pub mod limitmodel;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod weights;

pub use components::{connected_components, hub_containment, l2_weight_mass, ComponentSummary};
pub use constants::{
    a_alpha, b_alpha, critical_constants, derive_exponents, lambda_crit, CriticalConstants, DerivedExponents, Kernel,
    ModelParams,
};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, Regime, RegimeReport};
pub use fixedpoint::{build_kernel_grid, operator_norm, solve_rho, zeta_infinity, FixedPointSolution, KernelGrid};
pub use graphgen::{edge_prob, sample_graph, sample_restricted, two_step_count, PercolatedGraph};
pub use limitmodel::{LimitParams, LimitSampler};
pub use weights::{build_weights, WeightSequence};

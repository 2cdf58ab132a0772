//! Guided-wave dispersion curves from semi-analytical finite element (SAFE)
//! cross-section models.
//!
//! The pipeline is: build a [`CrossSectionMesh`], [`assemble`] the
//! wavenumber-parameterized family `K(k) = K1 + ik K2 + k² K3` with mass `M`,
//! then [`run_adaptive`] to sample `k`, track modes by MAC with optimal
//! assignment, and refine wherever tracking is ambiguous.
//!
//! Everything is non-dimensional: lengths are divided by the characteristic
//! length `a`, and eigenvalues are `λ = (ωa/c_T)²`.

pub mod adaptive;
pub mod assembly;
pub mod eigensolve;
pub mod error;
pub mod hungarian;
pub mod materials;
pub mod mesh;
pub mod perturbation;
pub mod quadrature;
pub mod sparse;
pub mod tracking;
pub mod verify;

pub use adaptive::{
    run_adaptive, uniform_grid, uniform_sweep, AdaptiveConfig, Branch, BranchSample, DispersionDataset,
    IntervalDiagnostics, IterationDiagnostics,
};
pub use assembly::{assemble, SafeMatrices, Scales};
pub use eigensolve::{cluster_degenerate, solve_modes, ModeSet, ModeWindow};
pub use error::{Error, Result};
pub use hungarian::{hungarian, Assignment};
pub use materials::{Layup, Material, Ply};
pub use mesh::{build_annulus_mesh, build_lshape_mesh, build_plate_mesh, CrossSectionMesh, LShape};
pub use perturbation::{estimate_step_bound, two_state_eigenvalues, StepBoundEstimate, TwoStateModel};
pub use sparse::CsrMatrix;
pub use tracking::{mac, match_interval, subspace_mac, IntervalMatch};

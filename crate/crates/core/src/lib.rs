//! Rolling of convex bodies of revolution on a rough plane under the
//! no-slip and no-twist ("rubber") constraints.
//!
//! The crate covers the meridian geometry of the body, the compressed
//! kinetic-energy coefficients, the one-degree-of-freedom reduced flow in the
//! nutation angle, reconstruction of the full motion from a reduced
//! trajectory, an independent constrained-Lagrangian integrator used as an
//! oracle, and numerical certification of the identities behind the
//! reduction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod body;
pub mod certify;
pub mod coefficients;
pub mod error;
pub mod interp;
pub mod ode;
pub mod oracle;
pub mod quad;
pub mod reconstruction;
pub mod reduced;
pub mod root;
pub mod surface;
pub mod trajectory;

pub use algebra::{bracket_curvature, conformal_check, jk_coefficient, phi_simple_check, ConnectionFrame};
pub use body::BodyParams;
pub use certify::{certify, CertificationConfig, CertificationReport, CheckResult, Tolerances};
pub use coefficients::{Coefficients, NoseModel};
pub use error::{Error, Result};
pub use ode::Method;
pub use oracle::{ConstrainedSystem, FullInitial};
pub use reconstruction::{attitude, reconstruct, steady_circle, PlanarPose, SteadyCircle};
pub use reduced::{
    bifurcation_scan, find_equilibria, hamiltonian, integrate_reduced, integrate_reduced_partial, integrate_tau,
    phase_portrait, BifurcationDiagram, BifurcationKind, Equilibrium, PhaseGrid, ReducedState, Stability,
};
pub use surface::{ContactGeometry, Curvature, Geometry, ProfileKind, SurfaceProfile, ThetaDomain};
pub use trajectory::{FullSample, FullTrajectory, ReducedSample, ReducedTrajectory, TauSample, TauTrajectory};

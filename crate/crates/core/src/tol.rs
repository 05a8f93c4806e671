//! Default tolerances and numerical parameters.
//!
//! Every threshold that appears in a report is one of these or an explicit
//! override carried in [`Tolerances`].

use serde::{Deserialize, Serialize};

/// Points per axis for default grids.
pub const GRID_POINTS: usize = 17;
/// Half-width of the band excluded around declared singular sets.
pub const EXCLUSION_BAND: f64 = 0.05;
/// Central-difference step for maps given numerically.
pub const FD_STEP: f64 = 1e-5;
/// Smallest admissible `σ_min / σ_max` of a matrix that must be invertible.
pub const CONDITIONING: f64 = 1e-8;
/// Residual of `d`, `ᵇd` on closed forms.
pub const CLOSEDNESS: f64 = 1e-8;
/// Smallest admissible |top power| for nondegeneracy.
pub const NONDEGENERACY: f64 = 1e-6;
/// Smallest admissible |transverse derivative| at a zero of the top power.
pub const TRANSVERSALITY: f64 = 1e-4;
/// Bisection tolerance for locus roots.
pub const ROOT: f64 = 1e-10;
/// Distance of a located root from the declared singular hypersurface.
pub const LOCUS_OFFSET: f64 = 1e-9;
/// Closed-form twist against the integrated Hamiltonian flow.
pub const FLOW: f64 = 1e-6;
/// Defining equations of the Reeb data.
pub const REEB: f64 = 1e-10;
/// Schouten-bracket residual separating Poisson from non-Poisson.
pub const BRACKET: f64 = 1e-7;
/// Pointwise agreement of two routes to the same field.
pub const ROUND_TRIP: f64 = 1e-8;
/// Chart-overlap compatibility and seam closedness.
pub const SEAM: f64 = 1e-6;
/// Bivector components normal to a located singular locus.
pub const TANGENCY: f64 = 1e-8;
/// Symplectomorphism residual with an analytic Jacobian.
pub const SYMPLECTIC_ANALYTIC: f64 = 1e-6;
/// Symplectomorphism residual with a finite-difference Jacobian.
pub const SYMPLECTIC_FD: f64 = 1e-4;
/// Cotangent-sphere constraint residual.
pub const CONSTRAINT: f64 = 1e-10;

/// Tolerance set used by verification routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub closedness: f64,
    pub nondegeneracy: f64,
    pub transversality: f64,
    pub conditioning: f64,
    pub bracket: f64,
    pub round_trip: f64,
    pub seam: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closedness: CLOSEDNESS,
            nondegeneracy: NONDEGENERACY,
            transversality: TRANSVERSALITY,
            conditioning: CONDITIONING,
            bracket: BRACKET,
            round_trip: ROUND_TRIP,
            seam: SEAM,
        }
    }
}

impl Tolerances {
    /// Overrides the residual tolerances (closedness, bracket, round trip,
    /// seam) with a single value, leaving margins untouched.
    pub fn with_residual(mut self, tol: f64) -> Self {
        self.closedness = tol;
        self.bracket = tol;
        self.round_trip = tol;
        self.seam = tol;
        self
    }
}

//! Numerical toolkit for one-dimensional bifurcation dynamics: normal forms of
//! transcritical and pitchfork type, their fixed-point structure, and explicit
//! topological conjugacies between a time-h flow map and its one-step
//! discretization near the bifurcation point.
//!
//! The crate is organized bottom-up:
//!
//! * [`maps`] — parameter-dependent scalar maps: interval normal forms with
//!   bounded higher-order tails, a catalog of closed-form example maps, the
//!   exact solution flow of the quadratic model problem, and numerical
//!   differentiation with accuracy control.
//! * [`rk`] — Runge–Kutta one-step methods (explicit and implicit) applied to
//!   scalar right-hand sides, plus structural checks that a method preserves
//!   the equilibrium and the degeneracies a pitchfork point requires.
//! * [`fixedpoints`] — fixed-point location, branch tracing over a parameter
//!   range, and bifurcation-type classification from partial derivatives.
//! * [`conjugacy`] — fundamental domain sequences and the piecewise
//!   construction of the conjugacy `J` with `J ∘ g = G ∘ J`, evaluated
//!   pointwise to machine-level residuals.
//! * [`estimates`] — closed-form envelope sequences, explicit error bounds
//!   with their constants, optimality gaps, decay checks, and order-of-
//!   convergence fits, all reported as pass/fail [`estimates::EstimateReport`]s.
//! * [`experiments`] — the quadratic-model numerical experiment: fourth-order
//!   Runge–Kutta orbits against the exact flow, linear/quadratic coefficient
//!   alignment, long-time orbit closeness, step-size sweeps, and phase
//!   portraits.
//!
//! # Example
//!
//! Build the transcritical normal-form pair (zero tail vs. `h^p` tail),
//! construct the conjugacy on the inner region of the lower half-line and
//! check its defining identity on a grid:
//!
//! ```
//! use bifconj::conjugacy::{build_conjugacy, conjugacy_residual};
//! use bifconj::maps::{make_tc_normal_form, Tail};
//! use bifconj::{HalfPlane, Region};
//!
//! let big = make_tc_normal_form(Tail::Zero, 1.0, 1.0).unwrap();
//! let small = make_tc_normal_form(Tail::HpPower(1), 1.0, 1.0).unwrap();
//! let j = build_conjugacy(&big, &small, 0.1, 0.005, Region::Inner, HalfPlane::Lower).unwrap();
//! let residual = conjugacy_residual(&j, 256).unwrap();
//! assert!(residual < 1e-10);
//! ```

pub mod conjugacy;
pub mod estimates;
pub mod experiments;
pub mod fixedpoints;
pub mod maps;
pub mod rk;

use serde::Serialize;

/// Errors shared by all modules of the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside its documented domain (wrong sign, empty list,
    /// malformed configuration, …). The message names the violated constraint.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter left the validity region of a construction. The message
    /// states the violated inequality with its numeric sides.
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    /// A root bracket did not straddle a sign change.
    #[error("bracket failure for {what}: f({lo:e}) = {f_lo:e} and f({hi:e}) = {f_hi:e} have no sign change")]
    BracketFailure {
        what: String,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Richardson-extrapolated differencing stagnated before reaching the
    /// requested accuracy.
    #[error("derivative of order {order} reached accuracy {achieved:e}, required {required:e}")]
    DerivativeAccuracy {
        order: u32,
        achieved: f64,
        required: f64,
    },

    /// The fixed-point iteration for implicit Runge–Kutta stages did not
    /// converge.
    #[error("implicit stage solve stalled after {iterations} iterations, residual {residual:e}")]
    ImplicitSolve { iterations: usize, residual: f64 },

    /// A closed-form expression hit a (near-)zero denominator.
    #[error("pole encountered in {what}: denominator {denominator:e}")]
    Pole { what: String, denominator: f64 },

    /// Inversion of a monotone map failed to meet its residual target.
    #[error("monotone inversion failed: {0}")]
    InversionFailure(String),

    /// An orbit walk exceeded its iteration cap without reaching its target.
    #[error("iteration depth cap of {0} exceeded")]
    DepthCap(usize),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Which scalar bifurcation a normal form models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BifKind {
    /// Transcritical: quadratic leading nonlinearity, two crossing branches.
    Tc,
    /// Pitchfork: cubic leading nonlinearity, one- to three-branch transition.
    Pf,
}

impl BifKind {
    /// Exponent of `|x|` in the closeness measure `|G - g| ≤ c h^{p+1} |x|^ω`:
    /// 3 for transcritical, 4 for pitchfork.
    pub fn closeness_exponent(self) -> u32 {
        match self {
            BifKind::Tc => 3,
            BifKind::Pf => 4,
        }
    }
}

impl std::fmt::Display for BifKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BifKind::Tc => write!(f, "tc"),
            BifKind::Pf => write!(f, "pf"),
        }
    }
}

/// Region of the conjugacy construction relative to the starting point of the
/// fundamental-domain decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// Between the two local fixed points (e.g. `[ω₋, 0]`).
    Inner,
    /// Beyond the bifurcating branch, from a seed `z₀` up to the nearest
    /// fixed point.
    Outer,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Inner => write!(f, "inner"),
            Region::Outer => write!(f, "outer"),
        }
    }
}

/// Side of the origin on which a conjugacy is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfPlane {
    /// `x ≤ 0`.
    Lower,
    /// `x ≥ 0`.
    Upper,
}

impl std::fmt::Display for HalfPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HalfPlane::Lower => write!(f, "lower"),
            HalfPlane::Upper => write!(f, "upper"),
        }
    }
}

//! Parameter-dependent scalar maps.
//!
//! The central type is [`NormalForm`]: the one-step interval normal form of a
//! transcritical or pitchfork point,
//!
//! ```text
//! transcritical:  N(h, x, α) = (1 + hα) x + s h x² + h x³ τ(h, x, α)
//! pitchfork:      N(h, x, α) = (1 + hα) x + s h x³ + h x⁴ τ(h, x, α)
//! ```
//!
//! with `s = ±1` and a higher-order tail `τ` whose value and first two `x`-
//! derivatives and first `α`-derivative are bounded by a constant `K` on the
//! validity box of the form. The box shrinks with `K`; its constants are the
//! ones under which every estimate in [`crate::estimates`] is proved.
//!
//! The module also provides the closed-form [`CatalogMap`]s used by the
//! counterexample and classification suites, the exact solution flow of the
//! quadratic model problem `x' = αx + x²` ([`tc_model_exact_flow`]), and
//! Richardson-extrapolated numerical differentiation ([`map_derivative`] and
//! friends) with a checked accuracy contract.

use std::fmt;
use std::sync::Arc;

use crate::{BifKind, Error, Result};

/// Absolute accuracy floors for the numerical derivatives, by `x`-order.
///
/// Below these magnitudes the relative-accuracy contract of
/// [`map_derivative`] is not enforceable in f64 (the value is
/// indistinguishable from zero at the attainable rounding floor), so the
/// estimate is accepted once its error estimate drops under the floor. The
/// floors sit two decades under the 1e−7 zero-test tolerance used by the
/// bifurcation classifier, so a "numerically zero" verdict is still sound.
/// Second and third differences divide by δ² and δ³ and amplify evaluation
/// noise accordingly (implicit stage solves evaluate to ~1e−14), hence the
/// wider floors at higher orders.
const DERIV_ABS_FLOOR: [f64; 4] = [1e-11, 1e-11, 1e-9, 1e-9];

/// Relative accuracy required of [`map_derivative`] results.
const DERIV_REL_TARGET: f64 = 1e-7;

/// Validity box `(0, h₀] × [−ε₀, ε₀] × [−α₀, α₀]` of a construction in the
/// `(h, x, α)` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityBox {
    /// Upper bound for the step size `h`.
    pub h0: f64,
    /// Half-width of the state interval.
    pub eps0: f64,
    /// Half-width of the parameter interval.
    pub alpha0: f64,
}

impl ValidityBox {
    /// A box imposing no restriction.
    pub fn unbounded() -> Self {
        ValidityBox {
            h0: f64::INFINITY,
            eps0: f64::INFINITY,
            alpha0: f64::INFINITY,
        }
    }

    /// Whether `(h, x, α)` lies inside the box (with `h > 0`).
    pub fn contains(&self, h: f64, x: f64, alpha: f64) -> bool {
        h > 0.0 && h <= self.h0 && x.abs() <= self.eps0 && alpha.abs() <= self.alpha0
    }

    /// Component-wise intersection.
    pub fn intersect(&self, other: &ValidityBox) -> ValidityBox {
        ValidityBox {
            h0: self.h0.min(other.h0),
            eps0: self.eps0.min(other.eps0),
            alpha0: self.alpha0.min(other.alpha0),
        }
    }

    /// Error naming the violated face, or `Ok` if `(h, α)` is admissible
    /// (the `x` component is checked by the operations that own a state).
    pub fn check_params(&self, h: f64, alpha: f64) -> Result<()> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
        }
        if h > self.h0 {
            return Err(Error::ConstraintViolation(format!(
                "h <= h0 violated: h = {h:e}, h0 = {:e}",
                self.h0
            )));
        }
        if alpha.abs() > self.alpha0 {
            return Err(Error::ConstraintViolation(format!(
                "|alpha| <= alpha0 violated: |alpha| = {:e}, alpha0 = {:e}",
                alpha.abs(),
                self.alpha0
            )));
        }
        Ok(())
    }
}

/// A parameter-dependent scalar map `(h, x, α) ↦ y`.
///
/// `h` is the step size of the underlying one-step method, `x` the state and
/// `α` the bifurcation parameter. Implementations must be deterministic.
pub trait Map1: Send + Sync {
    /// Evaluate the map. Errors signal poles or domain violations.
    fn eval(&self, h: f64, x: f64, alpha: f64) -> Result<f64>;

    /// The box on which the map's guarantees hold. Defaults to unbounded.
    fn domain(&self) -> ValidityBox {
        ValidityBox::unbounded()
    }
}

/// Higher-order tail of a normal form.
///
/// The tail multiplies `h x³` (transcritical) or `h x⁴` (pitchfork). Catalog
/// variants have closed-form bounds; [`Tail::Custom`] closures are bound-
/// checked by grid sampling when a normal form is constructed around them.
#[derive(Clone)]
pub enum Tail {
    /// `τ ≡ 0`: the polynomial truncation of the normal form.
    Zero,
    /// `τ(h, x, α) = h^p`: the minimal order-`p` perturbation.
    HpPower(u32),
    /// `τ(h, x, α) = sin x`: a smooth, uniformly bounded sample tail.
    Sin,
    /// User-supplied tail with a display name.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    },
}

impl Tail {
    /// Tail value `τ(h, x, α)`.
    #[inline]
    pub fn value(&self, h: f64, x: f64, alpha: f64) -> f64 {
        match self {
            Tail::Zero => 0.0,
            // Small exponents are unrolled: `powi` with a runtime exponent
            // compiles to a library call, and this sits in the innermost
            // loop of every orbit walk.
            Tail::HpPower(1) => h,
            Tail::HpPower(2) => h * h,
            Tail::HpPower(3) => h * h * h,
            Tail::HpPower(p) => h.powi(*p as i32),
            Tail::Sin => x.sin(),
            Tail::Custom { f, .. } => f(h, x, alpha),
        }
    }

    /// `∂τ/∂x`, analytic for catalog tails, central-difference for custom
    /// ones (step `1e−6`, ample for the uses the crate makes of it).
    #[inline]
    pub fn dx(&self, h: f64, x: f64, alpha: f64) -> f64 {
        match self {
            Tail::Zero | Tail::HpPower(_) => 0.0,
            Tail::Sin => x.cos(),
            Tail::Custom { f, .. } => {
                let d = 1e-6 * x.abs().max(1.0);
                (f(h, x + d, alpha) - f(h, x - d, alpha)) / (2.0 * d)
            }
        }
    }

    fn name(&self) -> String {
        match self {
            Tail::Zero => "zero".to_string(),
            Tail::HpPower(p) => format!("hp_power:{p}"),
            Tail::Sin => "sin".to_string(),
            Tail::Custom { name, .. } => format!("custom:{name}"),
        }
    }

    /// Looks up a catalog tail by its command-line name: `zero`,
    /// `hp_power:p` (order `p` in 1..=8), or `sin`.
    pub fn from_name(name: &str) -> Result<Tail> {
        if let Some(ps) = name.strip_prefix("hp_power:") {
            let p: u32 = ps.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "invalid hp_power order '{ps}' (expected an integer in 1..=8)"
                ))
            })?;
            if !(1..=8).contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "hp_power order must lie in 1..=8, got {p}"
                )));
            }
            return Ok(Tail::HpPower(p));
        }
        match name {
            "zero" => Ok(Tail::Zero),
            "sin" => Ok(Tail::Sin),
            other => Err(Error::InvalidInput(format!(
                "unknown tail '{other}' (expected one of: zero, hp_power:p, sin)"
            ))),
        }
    }
}

impl fmt::Debug for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tail({})", self.name())
    }
}

/// One-step interval normal form of a transcritical or pitchfork point.
///
/// Construct through [`make_tc_normal_form`] / [`make_pf_normal_form`], which
/// validate the sign `s`, the tail bound `K` and fix the validity box.
#[derive(Debug, Clone)]
pub struct NormalForm {
    kind: BifKind,
    s: f64,
    tail: Tail,
    k_bound: f64,
    validity: ValidityBox,
}

impl NormalForm {
    /// Which bifurcation the form models.
    pub fn kind(&self) -> BifKind {
        self.kind
    }

    /// Sign `s = ±1` of the leading nonlinearity.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Bound `K` on the tail and its controlled derivatives.
    pub fn k_bound(&self) -> f64 {
        self.k_bound
    }

    /// The validity box of the form.
    pub fn validity(&self) -> ValidityBox {
        self.validity
    }

    /// The tail `τ`.
    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    /// Human-readable summary (`tc[s=+1, tail=hp_power:2, K=1]`).
    pub fn describe(&self) -> String {
        format!(
            "{}[s={:+}, tail={}, K={}]",
            self.kind,
            self.s as i32,
            self.tail.name(),
            self.k_bound
        )
    }

    /// Map value `N(h, x, α)`. Infallible; box membership is the caller's
    /// concern (the operations that own parameters check it).
    #[inline]
    pub fn value(&self, h: f64, x: f64, alpha: f64) -> f64 {
        let x2 = x * x;
        let lin = (1.0 + h * alpha) * x;
        match self.kind {
            BifKind::Tc => {
                lin + self.s * h * x2 + h * x2 * x * self.tail.value(h, x, alpha)
            }
            BifKind::Pf => {
                lin + self.s * h * x2 * x + h * x2 * x2 * self.tail.value(h, x, alpha)
            }
        }
    }

    /// `∂N/∂x`, using the analytic tail derivative where available.
    #[inline]
    pub fn dx(&self, h: f64, x: f64, alpha: f64) -> f64 {
        let t = self.tail.value(h, x, alpha);
        let tx = self.tail.dx(h, x, alpha);
        let x2 = x * x;
        match self.kind {
            BifKind::Tc => {
                1.0 + h * alpha + 2.0 * self.s * h * x + h * x2 * (3.0 * t + x * tx)
            }
            BifKind::Pf => {
                1.0 + h * alpha
                    + 3.0 * self.s * h * x2
                    + h * x2 * x * (4.0 * t + x * tx)
            }
        }
    }

    /// Solve `N(h, u, α) = y` for `u` on an interval where the map is
    /// monotone increasing. Guarded Newton iteration from `u = y` with a
    /// bisection fallback; the result satisfies
    /// `|N(h, u, α) − y| ≤ 1e−14 · max(1, |y|)`.
    pub fn invert(&self, h: f64, y: f64, alpha: f64) -> Result<f64> {
        let scale = y.abs().max(1.0);
        // The iteration is run until its step underflows, not to a fixed
        // residual: near the origin the map moves points by far less than
        // any absolute tolerance, and accepting early would return the seed
        // itself as its own preimage. The slope is frozen at the current
        // iterate and refreshed only every eighth step: the map is a
        // near-identity perturbation, so a stale slope costs a contraction
        // factor of order `h·|u − u*|` per step while saving the derivative
        // evaluation that full Newton would spend on it.
        let mut u = y;
        let mut best = (f64::INFINITY, y);
        let mut d = self.dx(h, y, alpha);
        if d.abs() >= 1e-8 {
            for i in 0..60 {
                let r = self.value(h, u, alpha) - y;
                if r.abs() < best.0 {
                    best = (r.abs(), u);
                }
                if r == 0.0 {
                    return Ok(u);
                }
                if i % 8 == 7 {
                    d = self.dx(h, u, alpha);
                    if d.abs() < 1e-8 {
                        break;
                    }
                }
                let next = u - r / d;
                if next == u {
                    break;
                }
                u = next;
            }
        }
        if best.0 <= 1e-14 * scale {
            return Ok(best.1);
        }
        // Newton stalled: bracket around y and bisect. The map is x plus an
        // O(h·x²) correction, so a window of width 4·|N(y)−y| + tiny covers
        // the preimage on any interval where the map is increasing.
        let r0 = self.value(h, y, alpha) - y;
        let w = 4.0 * r0.abs() + 1e-9 * scale;
        let (mut lo, mut hi) = (y - w, y + w);
        let f_lo = self.value(h, lo, alpha) - y;
        let f_hi = self.value(h, hi, alpha) - y;
        if f_lo > 0.0 || f_hi < 0.0 {
            return Err(Error::InversionFailure(format!(
                "no increasing bracket around y = {y:e} (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.value(h, mid, alpha) - y;
            if fm == 0.0 || hi - lo <= f64::EPSILON * mid.abs() {
                return Ok(mid);
            }
            if fm < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if (self.value(h, mid, alpha) - y).abs() <= 1e-14 * scale {
            Ok(mid)
        } else {
            Err(Error::InversionFailure(format!(
                "residual target 1e-14 not met at y = {y:e}"
            )))
        }
    }
}

impl Map1 for NormalForm {
    fn eval(&self, h: f64, x: f64, alpha: f64) -> Result<f64> {
        Ok(self.value(h, x, alpha))
    }

    fn domain(&self) -> ValidityBox {
        self.validity
    }
}

/// Validity box of the transcritical normal form for tail bound `K`.
pub fn tc_validity_box(k_bound: f64) -> ValidityBox {
    ValidityBox {
        h0: 1.0 / 5.0,
        eps0: (1.0f64 / 25.0).min(1.0 / (25.0 * k_bound)),
        alpha0: (1.0f64 / 51.0).min(1.0 / (51.0 * k_bound)),
    }
}

/// Validity box of the pitchfork normal form for tail bound `K`.
pub fn pf_validity_box(k_bound: f64) -> ValidityBox {
    ValidityBox {
        h0: (1.0f64 / 10.0).min(8.0 * k_bound * k_bound),
        eps0: (1.0f64 / 10.0).min(1.0 / (5.0 * k_bound)),
        alpha0: (1.0f64 / 288.0).min(1.0 / (72.0 * k_bound * k_bound)),
    }
}

/// Build the transcritical normal form
/// `N(h, x, α) = (1 + hα) x + s h x² + h x³ τ(h, x, α)`.
///
/// Validates `s = ±1`, `K > 0`, and that `|τ|, |∂τ/∂x|, |∂²τ/∂x²|, |∂τ/∂α|`
/// stay within `K` on the validity box (closed-form for catalog tails, grid
/// sampling with 201 points per axis for custom tails).
pub fn make_tc_normal_form(tail: Tail, k_bound: f64, s: f64) -> Result<NormalForm> {
    make_normal_form(BifKind::Tc, tail, k_bound, s)
}

/// Build the pitchfork normal form
/// `N(h, x, α) = (1 + hα) x + s h x³ + h x⁴ τ(h, x, α)`.
///
/// Same validation as [`make_tc_normal_form`], with the pitchfork box.
pub fn make_pf_normal_form(tail: Tail, k_bound: f64, s: f64) -> Result<NormalForm> {
    make_normal_form(BifKind::Pf, tail, k_bound, s)
}

fn make_normal_form(kind: BifKind, tail: Tail, k_bound: f64, s: f64) -> Result<NormalForm> {
    if s != 1.0 && s != -1.0 {
        return Err(Error::InvalidInput(format!(
            "s must be +1 or -1 exactly, got {s}"
        )));
    }
    if !(k_bound > 0.0) || !k_bound.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tail bound K must be positive and finite, got {k_bound}"
        )));
    }
    let validity = match kind {
        BifKind::Tc => tc_validity_box(k_bound),
        BifKind::Pf => pf_validity_box(k_bound),
    };
    check_tail_bound(&tail, k_bound, &validity)?;
    Ok(NormalForm {
        kind,
        s,
        tail,
        k_bound,
        validity,
    })
}

/// Verify `|τ|, |τ_x|, |τ_xx|, |τ_α| ≤ K` on the box.
fn check_tail_bound(tail: &Tail, k: f64, vbox: &ValidityBox) -> Result<()> {
    let fail = |which: &str, value: f64| {
        Err(Error::ConstraintViolation(format!(
            "tail bound violated: |{which}| = {value:e} exceeds K = {k:e} on the validity box"
        )))
    };
    match tail {
        Tail::Zero => Ok(()),
        Tail::HpPower(p) => {
            // Value h^p maximal at h0; all controlled derivatives vanish.
            let worst = vbox.h0.powi(*p as i32);
            if worst <= k * (1.0 + 1e-12) {
                Ok(())
            } else {
                fail("tau", worst)
            }
        }
        Tail::Sin => {
            // |sin x| ≤ ε₀ on the box but |cos x| reaches ~1 at x = 0.
            if 1.0 <= k * (1.0 + 1e-12) {
                Ok(())
            } else {
                fail("dtau/dx", 1.0)
            }
        }
        Tail::Custom { f, .. } => {
            const N: usize = 201;
            let tol = k * (1.0 + 1e-6) + 1e-9;
            let lin = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (N - 1) as f64;
            // Pass 1: x-lines at every (h, α) node — checks the value and
            // the first two x-derivatives via lattice differences.
            let dx = 2.0 * vbox.eps0 / (N - 1) as f64;
            let mut line = [0.0f64; N];
            for ih in 0..N {
                let h = lin(vbox.h0 / N as f64, vbox.h0, ih);
                for ia in 0..N {
                    let alpha = lin(-vbox.alpha0, vbox.alpha0, ia);
                    for (ix, v) in line.iter_mut().enumerate() {
                        let x = lin(-vbox.eps0, vbox.eps0, ix);
                        *v = f(h, x, alpha);
                        if v.abs() > tol {
                            return fail("tau", v.abs());
                        }
                    }
                    for ix in 1..N - 1 {
                        let d1 = (line[ix + 1] - line[ix - 1]) / (2.0 * dx);
                        if d1.abs() > tol {
                            return fail("dtau/dx", d1.abs());
                        }
                        let d2 = (line[ix + 1] - 2.0 * line[ix] + line[ix - 1]) / (dx * dx);
                        if d2.abs() > tol {
                            return fail("d2tau/dx2", d2.abs());
                        }
                    }
                }
            }
            // Pass 2: α-lines at every (h, x) node — checks |∂τ/∂α|.
            let da = 2.0 * vbox.alpha0 / (N - 1) as f64;
            for ih in 0..N {
                let h = lin(vbox.h0 / N as f64, vbox.h0, ih);
                for ix in 0..N {
                    let x = lin(-vbox.eps0, vbox.eps0, ix);
                    for (ia, v) in line.iter_mut().enumerate() {
                        let alpha = lin(-vbox.alpha0, vbox.alpha0, ia);
                        *v = f(h, x, alpha);
                    }
                    for ia in 1..N - 1 {
                        let d1 = (line[ia + 1] - line[ia - 1]) / (2.0 * da);
                        if d1.abs() > tol {
                            return fail("dtau/dalpha", d1.abs());
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

/// Closed-form example maps used by the classification and counterexample
/// suites. `p` is the order parameter of the underlying one-step method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogMap {
    /// `h^{2p+1} + (1 + hα) x + h x²`: constant defect of order `2p`;
    /// no fixed point at the origin, no bifurcation for `|α| < 2 h^p`.
    PerturbedConstant2p { p: u32 },
    /// `h^{3p+1} + (1 + hα) x + h x³`: constant defect of order `3p`.
    PerturbedConstant3p { p: u32 },
    /// `(1 + hα) x + h^{p+1} x² + h x³`: quadratic coefficient of order
    /// `p`, so the map is transcritical, not pitchfork.
    SmallQuadratic { p: u32 },
    /// `(1 + hα − h^{p+1}) x + hα x² + h x³`: multiplier ≠ 1 at the origin.
    ShiftedMultiplier { p: u32 },
    /// `α² + (1 + α) x + x²`: classical example with
    /// `g_{xα}² − g_{xx} g_{αα} < 0`, hence no transcritical point.
    WigginsCounterexample,
    /// `(1 + hα) x + h x²`: transcritical normal form, zero tail.
    TcPhi,
    /// `(1 + hα) x − h x³`: pitchfork normal form, zero tail.
    PfPhi,
    /// Exact time-`h` solution flow of `x' = αx + x²`.
    Section5Phi,
    /// Classical fourth-order Runge–Kutta step for `x' = αx + x²`.
    Section5Rk4,
}

impl CatalogMap {
    /// Look up a catalog map by its command-line name. Maps with an order
    /// parameter take it from `p`.
    pub fn from_name(name: &str, p: u32) -> Result<CatalogMap> {
        let m = match name {
            "example21" => CatalogMap::PerturbedConstant2p { p },
            "example25" => CatalogMap::PerturbedConstant3p { p },
            "example26" => CatalogMap::SmallQuadratic { p },
            "example27" => CatalogMap::ShiftedMultiplier { p },
            "wiggins-counterexample" => CatalogMap::WigginsCounterexample,
            "tc-phi" => CatalogMap::TcPhi,
            "pf-phi" => CatalogMap::PfPhi,
            "section5-phi" => CatalogMap::Section5Phi,
            "section5-rk4" => CatalogMap::Section5Rk4,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown catalog map '{other}' (expected one of: example21, example25, \
                     example26, example27, wiggins-counterexample, tc-phi, pf-phi, \
                     section5-phi, section5-rk4)"
                )))
            }
        };
        if !(1..=8).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "order parameter p must lie in 1..=8, got {p}"
            )));
        }
        Ok(m)
    }

    /// The command-line name of the map.
    pub fn name(&self) -> &'static str {
        match self {
            CatalogMap::PerturbedConstant2p { .. } => "example21",
            CatalogMap::PerturbedConstant3p { .. } => "example25",
            CatalogMap::SmallQuadratic { .. } => "example26",
            CatalogMap::ShiftedMultiplier { .. } => "example27",
            CatalogMap::WigginsCounterexample => "wiggins-counterexample",
            CatalogMap::TcPhi => "tc-phi",
            CatalogMap::PfPhi => "pf-phi",
            CatalogMap::Section5Phi => "section5-phi",
            CatalogMap::Section5Rk4 => "section5-rk4",
        }
    }
}

impl Map1 for CatalogMap {
    fn eval(&self, h: f64, x: f64, alpha: f64) -> Result<f64> {
        let v = match *self {
            CatalogMap::PerturbedConstant2p { p } => {
                h.powi(2 * p as i32 + 1) + (1.0 + h * alpha) * x + h * x * x
            }
            CatalogMap::PerturbedConstant3p { p } => {
                h.powi(3 * p as i32 + 1) + (1.0 + h * alpha) * x + h * x * x * x
            }
            CatalogMap::SmallQuadratic { p } => {
                (1.0 + h * alpha) * x + h.powi(p as i32 + 1) * x * x + h * x * x * x
            }
            CatalogMap::ShiftedMultiplier { p } => {
                (1.0 + h * alpha - h.powi(p as i32 + 1)) * x
                    + h * alpha * x * x
                    + h * x * x * x
            }
            CatalogMap::WigginsCounterexample => alpha * alpha + (1.0 + alpha) * x + x * x,
            CatalogMap::TcPhi => (1.0 + h * alpha) * x + h * x * x,
            CatalogMap::PfPhi => (1.0 + h * alpha) * x - h * x * x * x,
            CatalogMap::Section5Phi => return tc_model_exact_flow(h, x, alpha),
            CatalogMap::Section5Rk4 => {
                let f = |u: f64| alpha * u + u * u;
                let k1 = f(x);
                let k2 = f(x + 0.5 * h * k1);
                let k3 = f(x + 0.5 * h * k2);
                let k4 = f(x + h * k3);
                x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            }
        };
        Ok(v)
    }
}

/// A named closure satisfying [`Map1`], for ad-hoc maps.
#[derive(Clone)]
pub struct ParamMap {
    name: String,
    f: Arc<dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync>,
    domain: ValidityBox,
}

impl ParamMap {
    /// Wrap a closure as a map with an unbounded domain.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        ParamMap {
            name: name.into(),
            f: Arc::new(f),
            domain: ValidityBox::unbounded(),
        }
    }

    /// Restrict the map's domain box.
    pub fn with_domain(mut self, domain: ValidityBox) -> Self {
        self.domain = domain;
        self
    }

    /// The display name.
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for ParamMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ParamMap({})", self.name)
    }
}

impl Map1 for ParamMap {
    fn eval(&self, h: f64, x: f64, alpha: f64) -> Result<f64> {
        (self.f)(h, x, alpha)
    }

    fn domain(&self) -> ValidityBox {
        self.domain
    }
}

/// Exact time-`h` solution flow of the quadratic model `x' = αx + x²`:
///
/// ```text
/// Φ(h, x₀, α) = x₀ α e^{αh} / (α + x₀ (1 − e^{αh}))    for α ≠ 0,
/// Φ(h, x₀, 0) = x₀ / (1 − h x₀).
/// ```
///
/// The `α = 0` branch is taken for `|α| < 1e−12`; the two branches agree to
/// machine precision across that threshold. The normalized denominator
/// `1 − x₀(1 − e^{αh})/α` equals 1 at `h = 0` and reaches 0 exactly at the
/// blow-up time of solutions that escape in finite time, so a value below
/// `1e−14` — within rounding of the pole, or past it — is reported as
/// [`Error::Pole`].
pub fn tc_model_exact_flow(h: f64, x0: f64, alpha: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
    }
    if alpha.abs() < 1e-12 {
        let den = 1.0 - h * x0;
        if den < 1e-14 {
            return Err(Error::Pole {
                what: "quadratic model flow (alpha = 0 branch)".to_string(),
                denominator: den,
            });
        }
        Ok(x0 / den)
    } else {
        let u = alpha * h;
        // (1 − e^u)/α = −h·expm1(u)/u, kept in this form so the branch
        // stays well-conditioned as α → 0 and matches the α = 0 branch to
        // machine precision at the switch.
        let em1_over_u = if u == 0.0 { 1.0 } else { u.exp_m1() / u };
        let den_over_alpha = 1.0 - x0 * h * em1_over_u;
        if den_over_alpha < 1e-14 {
            return Err(Error::Pole {
                what: "quadratic model flow".to_string(),
                denominator: alpha * den_over_alpha,
            });
        }
        Ok(x0 * u.exp() / den_over_alpha)
    }
}

/// Exact time-`h` flow of the decoupled linear equation `y' = −y`.
pub fn model_y_flow(h: f64, y0: f64) -> f64 {
    y0 * (-h).exp()
}

/// Richardson-extrapolated central differences over the step sequence
/// `δ_k = 1e−2 · 2^{−k}`. `sample(δ)` evaluates the base stencil; its error
/// must expand in even powers of `δ`. Returns the best estimate once its
/// error estimate meets `max(rel · |value|, floor)`, and
/// [`Error::DerivativeAccuracy`] if the table stagnates above the target.
pub(crate) fn richardson<F>(mut sample: F, order: u32, rel: f64, floor: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const MAX_ROWS: usize = 11;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(MAX_ROWS);
    let mut best = f64::NAN;
    let mut best_err = f64::INFINITY;
    for k in 0..MAX_ROWS {
        let delta = 1e-2 * 0.5f64.powi(k as i32);
        let mut row = vec![sample(delta)?];
        for j in 1..=k {
            let pow = 4f64.powi(j as i32);
            let extrap = (pow * row[j - 1] - table[k - 1][j - 1]) / (pow - 1.0);
            row.push(extrap);
        }
        if k >= 1 {
            let mut row_best_err = f64::INFINITY;
            for j in 1..=k {
                let err = (row[j] - row[j - 1])
                    .abs()
                    .max((row[j] - table[k - 1][j - 1]).abs());
                if err < best_err {
                    best_err = err;
                    best = row[j];
                }
                row_best_err = row_best_err.min(err);
            }
            let tol = rel * best.abs().max(f64::MIN_POSITIVE);
            if best_err <= tol.max(floor) {
                return Ok(best);
            }
            // Once rounding noise dominates, further rows only diverge.
            if k >= 4 && row_best_err > 8.0 * best_err {
                break;
            }
        }
        table.push(row);
    }
    if best_err <= (rel * best.abs()).max(floor) {
        Ok(best)
    } else {
        Err(Error::DerivativeAccuracy {
            order,
            achieved: best_err,
            required: (rel * best.abs()).max(floor),
        })
    }
}

/// `∂^order N / ∂x^order` at `(h, x, α)` for `order ∈ {1, 2, 3}`, accurate to
/// `1e−7` relative (with small absolute floors near zero; see
/// [`Error::DerivativeAccuracy`] for the failure mode).
pub fn map_derivative(map: &dyn Map1, order: u32, h: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!(
            "derivative order must be 1..=3, got {order}"
        )));
    }
    let floor = DERIV_ABS_FLOOR[order as usize];
    let f = |u: f64| map.eval(h, u, alpha);
    match order {
        1 => richardson(
            |d| Ok((f(x + d)? - f(x - d)?) / (2.0 * d)),
            1,
            DERIV_REL_TARGET,
            floor,
        ),
        2 => {
            let f0 = f(x)?;
            richardson(
                |d| Ok((f(x + d)? - 2.0 * f0 + f(x - d)?) / (d * d)),
                2,
                DERIV_REL_TARGET,
                floor,
            )
        }
        3 => richardson(
            |d| {
                Ok(
                    (f(x + 2.0 * d)? - 2.0 * f(x + d)? + 2.0 * f(x - d)? - f(x - 2.0 * d)?)
                        / (2.0 * d * d * d),
                )
            },
            3,
            DERIV_REL_TARGET,
            floor,
        ),
        _ => unreachable!("validated above"),
    }
}

/// `∂^order N / ∂α^order` at `(h, x, α)` for `order ∈ {1, 2}`, same accuracy
/// contract as [`map_derivative`].
pub fn map_alpha_derivative(
    map: &dyn Map1,
    order: u32,
    h: f64,
    x: f64,
    alpha: f64,
) -> Result<f64> {
    let f = |a: f64| map.eval(h, x, a);
    match order {
        1 => richardson(
            |d| Ok((f(alpha + d)? - f(alpha - d)?) / (2.0 * d)),
            1,
            DERIV_REL_TARGET,
            DERIV_ABS_FLOOR[1],
        ),
        2 => {
            let f0 = f(alpha)?;
            richardson(
                |d| Ok((f(alpha + d)? - 2.0 * f0 + f(alpha - d)?) / (d * d)),
                2,
                DERIV_REL_TARGET,
                DERIV_ABS_FLOOR[2],
            )
        }
        _ => Err(Error::InvalidInput(format!(
            "alpha-derivative order must be 1 or 2, got {order}"
        ))),
    }
}

/// Mixed partial `∂²N / ∂x ∂α` at `(h, x, α)`, same accuracy contract as
/// [`map_derivative`].
pub fn map_mixed_derivative(map: &dyn Map1, h: f64, x: f64, alpha: f64) -> Result<f64> {
    richardson(
        |d| {
            Ok((map.eval(h, x + d, alpha + d)? - map.eval(h, x + d, alpha - d)?
                - map.eval(h, x - d, alpha + d)?
                + map.eval(h, x - d, alpha - d)?)
                / (4.0 * d * d))
        },
        2,
        DERIV_REL_TARGET,
        DERIV_ABS_FLOOR[2],
    )
}

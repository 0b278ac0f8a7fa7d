//! Construction and evaluation of topological conjugacies between two
//! one-dimensional normal-form maps sharing a bifurcation structure.
//!
//! Between consecutive fixed points both maps act monotonically, so the
//! interval splits into fundamental domains `[g(x₀), x₀]`, `[g²(x₀), g(x₀)]`,
//! … obtained by iterating a seed point. A conjugacy `J` with
//! `J ∘ N_φ = N_Φ ∘ J` is fixed by choosing it linear on one anchor domain
//! and extending by the recursions `J = N_Φ ∘ J ∘ N_φ^{[-1]}` (toward the
//! attracting end) and `J = N_Φ^{[-1]} ∘ J ∘ N_φ` (toward the repelling
//! end); fixed points map to their counterparts.
//!
//! The module builds such maps on the inner region (between the trivial and
//! the bifurcating fixed point) and on the outer region (beyond a seed `z₀`
//! on the far side of the bifurcating branch), on either half-plane. It also
//! exposes the raw fundamental sequences used by the quantitative estimates.

use crate::fixedpoints::branch_root_raw;
use crate::maps::{NormalForm, Tail};
use crate::{BifKind, Error, HalfPlane, Region, Result};

/// Controls for sequence generation and conjugacy construction.
///
/// Defaults enforce every parameter-box precondition, truncate orbits when
/// they come within `1e-14` of their limit, and cap orbit length at `10^6`
/// entries.
#[derive(Debug, Clone, Copy)]
pub struct SequenceOptions {
    /// Skip the validity-box checks on `(h, α)` and the seed windows.
    /// Dynamical preconditions (monotone motion toward the correct limit)
    /// are still enforced. Intended for exploring parameters slightly
    /// beyond the proven boxes; results carry an `in_box = false` marker.
    pub allow_outside_box: bool,
    /// Orbits stop once within this distance of their limiting fixed point.
    pub truncation_tol: f64,
    /// Hard cap on orbit length (and on evaluation walk depth).
    pub n_max: usize,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        SequenceOptions {
            allow_outside_box: false,
            truncation_tol: 1e-14,
            n_max: 1_000_000,
        }
    }
}

/// Options for [`build_conjugacy_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Outer-region seed. Defaults to `−ε₀` (lower half-plane) or `+ε₀`
    /// (upper half-plane), with `ε₀` from the intersected validity boxes.
    pub z0: Option<f64>,
    /// Sequence and box-enforcement controls.
    pub seq: SequenceOptions,
}

/// Fundamental-domain orbit data for one normal form on one region.
///
/// For the inner region: `x_seq` is the forward orbit of the seed `x₀`
/// (monotone toward the attracting end) and `y_seq` the backward orbit
/// (`y₀ = x₀`, monotone toward the repelling end; formally `y_{−1} = x₁`).
/// For the outer region only `z_seq` is populated: the orbit of the seed
/// `z₀` moving toward the region's limiting fixed point, iterated forward
/// where the motion is toward the limit and through the inverse map where
/// the forward motion escapes.
#[derive(Debug, Clone)]
pub struct FundamentalSequences {
    /// Inner forward orbit (seed first); empty for outer regions.
    pub x_seq: Vec<f64>,
    /// Inner backward orbit (seed first); empty for outer regions.
    pub y_seq: Vec<f64>,
    /// Outer orbit (seed first); empty for inner regions.
    pub z_seq: Vec<f64>,
    /// Inner seed (`−α/3`, `−√(α/8)`, or the mirrored value), when inner.
    pub x0: Option<f64>,
    /// Outer seed, when outer.
    pub z0: Option<f64>,
    /// Limits `(x-orbit limit, y-orbit limit)` for inner regions; for outer
    /// regions both entries hold the single `z`-orbit limit.
    pub limits: (f64, f64),
    /// Which region the sequences describe.
    pub region: Region,
    /// Which half-plane the sequences live on.
    pub half_plane: HalfPlane,
    /// Whether `(h, α)` and the seed passed the validity-box checks.
    pub in_box: bool,
}

/// A step through a normal-form map: forward application or monotone
/// inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepDir {
    Forward,
    Backward,
}

impl StepDir {
    fn opposite(self) -> StepDir {
        match self {
            StepDir::Forward => StepDir::Backward,
            StepDir::Backward => StepDir::Forward,
        }
    }
}

/// One-step polynomial specialization of a normal form at fixed `(h, α)`,
/// available when the tail is constant in `x` (the catalog tails). It
/// strips the enum dispatch out of the innermost walk loops; the forward
/// evaluation mirrors [`NormalForm::value`] operation for operation, so the
/// specialized walk rounds identically to the generic one.
#[derive(Clone, Copy)]
struct PolyStep {
    kind: BifKind,
    /// `1 + hα`.
    b: f64,
    /// `s·h`.
    sh: f64,
    h: f64,
    /// Constant tail value `τ(h, α)`.
    t: f64,
}

impl PolyStep {
    fn of(nf: &NormalForm, h: f64, alpha: f64) -> Option<PolyStep> {
        let t = match nf.tail() {
            Tail::Zero | Tail::HpPower(_) => nf.tail().value(h, 0.0, alpha),
            _ => return None,
        };
        Some(PolyStep {
            kind: nf.kind(),
            b: 1.0 + h * alpha,
            sh: nf.s() * h,
            h,
            t,
        })
    }

    #[inline]
    fn fwd(&self, x: f64) -> f64 {
        let x2 = x * x;
        match self.kind {
            BifKind::Tc => self.b * x + self.sh * x2 + self.h * x2 * x * self.t,
            BifKind::Pf => self.b * x + self.sh * x2 * x + self.h * x2 * x2 * self.t,
        }
    }

    #[inline]
    fn slope(&self, x: f64) -> f64 {
        let x2 = x * x;
        match self.kind {
            BifKind::Tc => self.b + 2.0 * self.sh * x + 3.0 * self.h * self.t * x2,
            BifKind::Pf => self.b + 3.0 * self.sh * x2 + 4.0 * self.h * self.t * x2 * x,
        }
    }

    /// Frozen-slope Newton preimage with the same acceptance residual as
    /// [`NormalForm::invert`]; `None` sends the caller to the generic
    /// inversion with its bisection fallback.
    ///
    /// Consecutive inversions along a walk invert nearly identical points, so
    /// `seed` carries the previous correction and slope forward as the next
    /// starting guess; the iteration still polishes until the residual hits
    /// exact zero or the iterate stalls, so the accepted root does not depend
    /// on the guess.
    #[inline]
    fn inv(&self, y: f64, seed: &mut Option<InvSeed>) -> Option<f64> {
        let (mut u, mut d) = match *seed {
            Some(s) => (y + s.delta, s.d),
            None => (y, self.slope(y)),
        };
        if d.abs() < 1e-8 {
            *seed = None;
            return None;
        }
        let mut best = (f64::INFINITY, y);
        for i in 0..32 {
            let r = self.fwd(u) - y;
            let ra = r.abs();
            if ra < best.0 {
                best = (ra, u);
            }
            if r == 0.0 {
                best = (0.0, u);
                break;
            }
            if i % 8 == 7 {
                d = self.slope(u);
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
        if best.0 <= 1e-14 * y.abs().max(1.0) {
            *seed = Some(InvSeed {
                delta: best.1 - y,
                d,
            });
            Some(best.1)
        } else {
            *seed = None;
            None
        }
    }

    #[inline]
    fn step(
        &self,
        dir: StepDir,
        nf: &NormalForm,
        h: f64,
        alpha: f64,
        x: f64,
        seed: &mut Option<InvSeed>,
    ) -> Result<f64> {
        match dir {
            StepDir::Forward => Ok(self.fwd(x)),
            StepDir::Backward => match self.inv(x, seed) {
                Some(u) => Ok(u),
                None => nf.invert(h, x, alpha),
            },
        }
    }
}

/// Warm-start state threaded between consecutive [`PolyStep::inv`] calls of
/// one walk: the last accepted correction `u - y` and the last Newton slope.
#[derive(Clone, Copy)]
struct InvSeed {
    delta: f64,
    d: f64,
}

/// Pre-walk resolution of one evaluation point: either finished outright
/// (anchor segment, limit snap) or assigned its side walk with the clamped
/// abscissa.
enum Classified {
    Done(ConjEval),
    Walk(SideWalk, f64),
}

/// One interleaved walk slot in [`ConjugacyMap::eval_many`].
struct Lane {
    idx: usize,
    walk: SideWalk,
    unwind: StepDir,
    phase: LanePhase,
    sseed: Option<InvSeed>,
    tseed: Option<InvSeed>,
}

/// Walk progress of a lane: stepping into the anchor, or unwinding the
/// recorded depth back out through the target map.
#[derive(Clone, Copy)]
enum LanePhase {
    In { w: f64, depth: usize },
    Out { v: f64, left: usize },
}

/// Linear anchor segment: `J` interpolates `(lo, im_lo) — (hi, im_hi)`.
#[derive(Debug, Clone, Copy)]
struct Anchor {
    lo: f64,
    hi: f64,
    im_lo: f64,
    im_hi: f64,
}

impl Anchor {
    fn eval(&self, x: f64) -> f64 {
        if self.hi == self.lo {
            return 0.5 * (self.im_lo + self.im_hi);
        }
        let t = (x - self.lo) / (self.hi - self.lo);
        self.im_lo + t * (self.im_hi - self.im_lo)
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Walk data for the points on one side of the anchor: the source-map step
/// that moves them toward the anchor, and the limiting fixed point (with its
/// image) they accumulate at.
#[derive(Debug, Clone, Copy)]
struct SideWalk {
    into_anchor: StepDir,
    limit: f64,
    limit_image: f64,
}

/// Evaluation result carrying the depth-cap flag.
#[derive(Debug, Clone, Copy)]
pub struct ConjEval {
    /// The conjugacy value `J(x)`.
    pub value: f64,
    /// True when the walk hit the depth cap and the value was snapped to
    /// the limiting fixed point's image.
    pub snapped: bool,
    /// Number of fundamental domains crossed to reach the anchor.
    pub depth: usize,
}

/// A topological conjugacy between two normal-form maps on one region of
/// one half-plane. Immutable after construction; evaluation is pure and
/// reentrant.
#[derive(Debug, Clone)]
pub struct ConjugacyMap {
    source: NormalForm,
    target: NormalForm,
    h: f64,
    alpha: f64,
    region: Region,
    half_plane: HalfPlane,
    interval: (f64, f64),
    interval_images: (f64, f64),
    anchor: Anchor,
    below: Option<SideWalk>,
    above: Option<SideWalk>,
    seed: f64,
    n_max: usize,
    in_box: bool,
}

fn require_kind(nf: &NormalForm, kind: BifKind, what: &str) -> Result<()> {
    if nf.kind() != kind {
        return Err(Error::InvalidInput(format!(
            "{what}: expected a {kind} normal form, got {}",
            nf.kind()
        )));
    }
    Ok(())
}

/// Inner-region seed on the chosen half-plane: one third of the way from
/// the trivial to the bifurcating fixed point in the leading-order sense
/// (`∓α/3` transcritical, `∓√(α/8)` pitchfork).
fn inner_seed(kind: BifKind, alpha: f64, half_plane: HalfPlane) -> Result<f64> {
    match (kind, half_plane) {
        (BifKind::Tc, HalfPlane::Lower) => {
            if alpha <= 0.0 {
                return Err(Error::ConstraintViolation(format!(
                    "inner region on the lower half-plane requires alpha > 0 \
                     for the transcritical form, got alpha = {alpha:e}"
                )));
            }
            Ok(-alpha / 3.0)
        }
        (BifKind::Tc, HalfPlane::Upper) => {
            if alpha >= 0.0 {
                return Err(Error::ConstraintViolation(format!(
                    "inner region on the upper half-plane requires alpha < 0 \
                     for the transcritical form, got alpha = {alpha:e}"
                )));
            }
            Ok(-alpha / 3.0)
        }
        (BifKind::Pf, hp) => {
            if alpha <= 0.0 {
                return Err(Error::ConstraintViolation(format!(
                    "inner region requires alpha > 0 for the pitchfork form, \
                     got alpha = {alpha:e}"
                )));
            }
            let m = (alpha / 8.0).sqrt();
            Ok(match hp {
                HalfPlane::Lower => -m,
                HalfPlane::Upper => m,
            })
        }
    }
}

/// The bifurcating-branch fixed point relevant to `half_plane`, or `0.0`
/// when the half-plane's outer limit is the trivial fixed point.
fn outer_limit(nf: &NormalForm, h: f64, alpha: f64, half_plane: HalfPlane) -> Result<f64> {
    let upper = half_plane == HalfPlane::Upper;
    match nf.kind() {
        BifKind::Tc => {
            // The nonzero branch sits on the lower half for α > 0 and on the
            // upper half for α < 0 (with the standard s = +1); elsewhere the
            // outer orbit limits on the trivial fixed point.
            if alpha != 0.0 && (-nf.s() * alpha > 0.0) == upper {
                Ok(branch_root_raw(nf, h, alpha, upper)?.x)
            } else {
                Ok(0.0)
            }
        }
        BifKind::Pf => {
            if -nf.s() * alpha > 0.0 {
                Ok(branch_root_raw(nf, h, alpha, upper)?.x)
            } else {
                Ok(0.0)
            }
        }
    }
}

fn step(nf: &NormalForm, dir: StepDir, h: f64, x: f64, alpha: f64) -> Result<f64> {
    match dir {
        StepDir::Forward => Ok(nf.value(h, x, alpha)),
        StepDir::Backward => nf.invert(h, x, alpha),
    }
}

/// Iterate `nf` (forward or backward) from `seed` until the orbit is within
/// `tol` of `limit` or `n_max` entries are stored. The orbit must move
/// strictly monotonically toward `limit`; a violation reports the given
/// context string.
fn monotone_orbit(
    nf: &NormalForm,
    dir: StepDir,
    h: f64,
    alpha: f64,
    seed: f64,
    limit: f64,
    opts: &SequenceOptions,
    what: &str,
) -> Result<Vec<f64>> {
    let mut seq = Vec::new();
    let mut w = seed;
    seq.push(w);
    while (w - limit).abs() > opts.truncation_tol && seq.len() < opts.n_max {
        let next = step(nf, dir, h, w, alpha)?;
        let toward = (limit - w).signum();
        if (next - w).signum() != toward || (next - limit).abs() >= (w - limit).abs() {
            return Err(Error::ConstraintViolation(format!(
                "{what}: monotonicity violation at step {} (got {next:e} after {w:e}, \
                 limit {limit:e}) signals parameters outside the validity box",
                seq.len()
            )));
        }
        // Clamp a terminal overshoot past the limit to the limit itself.
        w = if (next - limit).signum() == (w - limit).signum() || next == limit {
            next
        } else {
            limit
        };
        seq.push(w);
    }
    Ok(seq)
}

/// Fundamental sequences for the inner region on the lower half-plane with
/// every validity-box precondition enforced: the forward orbit `x_seq` of
/// the seed (`−α/3` transcritical, `−√(α/8)` pitchfork), and the backward
/// orbit `y_seq` from the same seed toward the trivial fixed point.
///
/// `kind` must match the normal form; requires `0 < h ≤ h₀` and
/// `0 < α ≤ α₀` (transcritical lower half; see
/// [`inner_sequences_with`] for the mirrored and relaxed variants).
pub fn inner_sequences(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    kind: BifKind,
) -> Result<FundamentalSequences> {
    inner_sequences_with(
        nf,
        h,
        alpha,
        kind,
        HalfPlane::Lower,
        &SequenceOptions::default(),
    )
}

/// [`inner_sequences`] generalized to both half-planes and relaxed
/// parameter checking.
pub fn inner_sequences_with(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    kind: BifKind,
    half_plane: HalfPlane,
    opts: &SequenceOptions,
) -> Result<FundamentalSequences> {
    require_kind(nf, kind, "inner_sequences")?;
    let in_box = nf.validity().check_params(h, alpha).is_ok();
    if !opts.allow_outside_box {
        nf.validity().check_params(h, alpha)?;
    }
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "h must be positive and finite, alpha finite: h = {h:e}, alpha = {alpha:e}"
        )));
    }
    let x0 = inner_seed(kind, alpha, half_plane)?;
    // Resolve attracting/repelling roles from the motion at the seed: the
    // forward orbit runs toward the attracting end.
    let (attr, rep) = resolve_inner_ends(nf, h, alpha, half_plane, x0)?;
    let x_seq = monotone_orbit(nf, StepDir::Forward, h, alpha, x0, attr, opts, "x_seq")?;
    let y_seq = monotone_orbit(nf, StepDir::Backward, h, alpha, x0, rep, opts, "y_seq")?;
    Ok(FundamentalSequences {
        x_seq,
        y_seq,
        z_seq: Vec::new(),
        x0: Some(x0),
        z0: None,
        limits: (attr, rep),
        region: Region::Inner,
        half_plane,
        in_box,
    })
}

/// The two fixed points bounding the inner region, ordered as
/// `(attracting, repelling)` for the forward dynamics, derived from the
/// sign of the motion at the seed.
fn resolve_inner_ends(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    half_plane: HalfPlane,
    x0: f64,
) -> Result<(f64, f64)> {
    let upper = half_plane == HalfPlane::Upper;
    let branch = branch_root_raw(nf, h, alpha, upper)?.x;
    let motion = nf.value(h, x0, alpha) - x0;
    if motion == 0.0 {
        return Err(Error::ConstraintViolation(format!(
            "degenerate dynamics: the inner seed {x0:e} is a fixed point"
        )));
    }
    // The branch point and 0 bound the region; motion points at the
    // attracting one.
    if (motion > 0.0) == (branch > x0) {
        Ok((branch, 0.0))
    } else {
        Ok((0.0, branch))
    }
}

/// Outer-region orbit of the seed `z0` with every validity-box
/// precondition enforced: requires `2α₀ < |z0| < 1/(2K)` (transcritical)
/// or `√(2α₀) < |z0| < 1/(2K)` (pitchfork) and `−α₀ ≤ α ≤ α₀`. The orbit
/// moves toward the limiting fixed point of the half-plane `z0` lies on,
/// iterated through the inverse map where the forward motion escapes.
pub fn outer_sequence(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    z0: f64,
) -> Result<FundamentalSequences> {
    outer_sequence_with(nf, h, alpha, z0, &SequenceOptions::default())
}

/// [`outer_sequence`] with relaxed parameter checking.
pub fn outer_sequence_with(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    z0: f64,
    opts: &SequenceOptions,
) -> Result<FundamentalSequences> {
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() || !z0.is_finite() || z0 == 0.0 {
        return Err(Error::InvalidInput(format!(
            "need finite h > 0, finite alpha, finite nonzero z0: \
             h = {h:e}, alpha = {alpha:e}, z0 = {z0:e}"
        )));
    }
    let in_box =
        nf.validity().check_params(h, alpha).is_ok() && seed_window_ok(nf, z0).is_ok();
    if !opts.allow_outside_box {
        nf.validity().check_params(h, alpha)?;
        seed_window_ok(nf, z0)?;
    }
    let half_plane = if z0 < 0.0 {
        HalfPlane::Lower
    } else {
        HalfPlane::Upper
    };
    let limit = outer_limit(nf, h, alpha, half_plane)?;
    if (z0 < 0.0 && z0 >= limit) || (z0 > 0.0 && z0 <= limit) {
        return Err(Error::ConstraintViolation(format!(
            "outer seed z0 = {z0:e} must lie strictly beyond the limiting \
             fixed point {limit:e}"
        )));
    }
    // Walk toward the limit: forward when the forward motion points at the
    // limit, through the inverse map when it escapes.
    let motion = nf.value(h, z0, alpha) - z0;
    if motion == 0.0 {
        return Err(Error::ConstraintViolation(format!(
            "degenerate dynamics: the outer seed {z0:e} is a fixed point"
        )));
    }
    let dir = if (motion > 0.0) == (limit > z0) {
        StepDir::Forward
    } else {
        StepDir::Backward
    };
    let z_seq = monotone_orbit(nf, dir, h, alpha, z0, limit, opts, "z_seq")?;
    if z_seq.len() >= 2 && (z_seq[1] - z0).signum() != (limit - z0).signum() {
        return Err(Error::ConstraintViolation(
            "z1 <= z0 signals a validity-box violation".to_string(),
        ));
    }
    Ok(FundamentalSequences {
        x_seq: Vec::new(),
        y_seq: Vec::new(),
        z_seq,
        x0: None,
        z0: Some(z0),
        limits: (limit, limit),
        region: Region::Outer,
        half_plane,
        in_box,
    })
}

/// Checks the outer seed window `2α₀ < |z0| < 1/(2K)` (transcritical) or
/// `√(2α₀) < |z0| < 1/(2K)` (pitchfork) for one normal form.
fn seed_window_ok(nf: &NormalForm, z0: f64) -> Result<()> {
    let a0 = nf.validity().alpha0;
    let k = nf.k_bound().max(f64::MIN_POSITIVE);
    let lo = match nf.kind() {
        BifKind::Tc => 2.0 * a0,
        BifKind::Pf => (2.0 * a0).sqrt(),
    };
    let hi = 0.5 / k;
    if !(z0.abs() > lo && z0.abs() < hi) {
        return Err(Error::ConstraintViolation(format!(
            "outer seed window violated: need {lo:e} < |z0| < {hi:e}, got |z0| = {:e}",
            z0.abs()
        )));
    }
    Ok(())
}

/// Builds the conjugacy from the dynamics of `source` onto the dynamics of
/// `target` on the requested region and half-plane, with all validity-box
/// preconditions enforced and default seeds. See [`build_conjugacy_with`].
pub fn build_conjugacy(
    target: &NormalForm,
    source: &NormalForm,
    h: f64,
    alpha: f64,
    region: Region,
    half_plane: HalfPlane,
) -> Result<ConjugacyMap> {
    build_conjugacy_with(target, source, h, alpha, region, half_plane, &BuildOptions::default())
}

/// Builds the conjugacy `J` with `J ∘ source = target ∘ J`, linear on the
/// anchor fundamental domain spanned by the seed and its image, extended
/// over the whole region by the conjugacy recursions, and mapping fixed
/// points to fixed points.
///
/// Both forms must share kind and orientation `s`. Unless
/// `opts.seq.allow_outside_box` is set, `(h, α)` must lie in both validity
/// boxes, the outer seed in both seed windows, and the inner region
/// requires the half-plane on which it exists (`α > 0` on the lower
/// half-plane; the transcritical mirror needs `α < 0`).
pub fn build_conjugacy_with(
    target: &NormalForm,
    source: &NormalForm,
    h: f64,
    alpha: f64,
    region: Region,
    half_plane: HalfPlane,
    opts: &BuildOptions,
) -> Result<ConjugacyMap> {
    if source.kind() != target.kind() {
        return Err(Error::InvalidInput(format!(
            "normal-form kinds differ: source {} vs target {}",
            source.kind(),
            target.kind()
        )));
    }
    if source.s() != target.s() {
        return Err(Error::InvalidInput(format!(
            "normal-form orientations differ: source s = {:+} vs target s = {:+}",
            source.s(),
            target.s()
        )));
    }
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need finite h > 0 and finite alpha: h = {h:e}, alpha = {alpha:e}"
        )));
    }
    let kind = source.kind();
    let box_both = source.validity().intersect(&target.validity());
    let mut in_box = box_both.check_params(h, alpha).is_ok();
    if !opts.seq.allow_outside_box {
        box_both.check_params(h, alpha)?;
    }

    let (interval, interval_images, anchor, below, above, seed) = match region {
        Region::Inner => {
            let x0 = inner_seed(kind, alpha, half_plane)?;
            let (attr_s, rep_s) = resolve_inner_ends(source, h, alpha, half_plane, x0)?;
            let (attr_t, rep_t) = resolve_inner_ends(target, h, alpha, half_plane, x0)?;
            // The roles must agree for a conjugacy to exist.
            if (attr_s - rep_s).signum() != (attr_t - rep_t).signum() {
                return Err(Error::ConstraintViolation(
                    "source and target dynamics orient the inner region oppositely".to_string(),
                ));
            }
            let x1 = source.value(h, x0, alpha);
            let im_x1 = target.value(h, x0, alpha);
            if x1 == x0 {
                return Err(Error::ConstraintViolation(
                    "degenerate fundamental domain: source map fixes the seed".to_string(),
                ));
            }
            if (im_x1 - x0).signum() != (x1 - x0).signum() {
                return Err(Error::ConstraintViolation(
                    "source and target move the seed in opposite directions".to_string(),
                ));
            }
            let anchor = if x1 < x0 {
                Anchor { lo: x1, hi: x0, im_lo: im_x1, im_hi: x0 }
            } else {
                Anchor { lo: x0, hi: x1, im_lo: x0, im_hi: im_x1 }
            };
            // Interval spans the two fixed points; the anchor sits inside.
            let lo_end = attr_s.min(rep_s);
            let hi_end = attr_s.max(rep_s);
            let (im_lo_end, im_hi_end) = if attr_s < rep_s {
                (attr_t, rep_t)
            } else {
                (rep_t, attr_t)
            };
            // Side walks: points on the attracting side step backward into
            // the anchor, points on the repelling side step forward.
            let attr_walk = SideWalk {
                into_anchor: StepDir::Backward,
                limit: attr_s,
                limit_image: attr_t,
            };
            let rep_walk = SideWalk {
                into_anchor: StepDir::Forward,
                limit: rep_s,
                limit_image: rep_t,
            };
            let (below, above) = if attr_s < x0 {
                (Some(attr_walk), Some(rep_walk))
            } else {
                (Some(rep_walk), Some(attr_walk))
            };
            (
                (lo_end, hi_end),
                (im_lo_end, im_hi_end),
                anchor,
                below,
                above,
                x0,
            )
        }
        Region::Outer => {
            let z0 = match opts.z0 {
                Some(z) => z,
                None => {
                    let e0 = box_both.eps0;
                    match half_plane {
                        HalfPlane::Lower => -e0,
                        HalfPlane::Upper => e0,
                    }
                }
            };
            if (half_plane == HalfPlane::Lower) != (z0 < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "outer seed z0 = {z0:e} lies on the wrong half-plane"
                )));
            }
            if !opts.seq.allow_outside_box {
                seed_window_ok(source, z0)?;
                seed_window_ok(target, z0)?;
            } else {
                in_box = in_box
                    && seed_window_ok(source, z0).is_ok()
                    && seed_window_ok(target, z0).is_ok();
            }
            let limit_s = outer_limit(source, h, alpha, half_plane)?;
            let limit_t = outer_limit(target, h, alpha, half_plane)?;
            if (z0 < 0.0 && (z0 >= limit_s || z0 >= limit_t))
                || (z0 > 0.0 && (z0 <= limit_s || z0 <= limit_t))
            {
                return Err(Error::ConstraintViolation(format!(
                    "outer seed z0 = {z0:e} must lie strictly beyond both limiting \
                     fixed points ({limit_s:e} and {limit_t:e})"
                )));
            }
            let motion_s = source.value(h, z0, alpha) - z0;
            let motion_t = target.value(h, z0, alpha) - z0;
            if motion_s == 0.0 || motion_t == 0.0 {
                return Err(Error::ConstraintViolation(
                    "degenerate dynamics: the outer seed is a fixed point".to_string(),
                ));
            }
            if motion_s.signum() != motion_t.signum() {
                return Err(Error::ConstraintViolation(
                    "source and target move the outer seed in opposite directions".to_string(),
                ));
            }
            // Build the anchor by stepping the seed toward the limit: with
            // the forward map when the motion contracts onto the limit,
            // through the inverse map when the forward motion escapes.
            let escaping = (motion_s > 0.0) != (limit_s > z0);
            let (z1, im_z1) = if escaping {
                (source.invert(h, z0, alpha)?, target.invert(h, z0, alpha)?)
            } else {
                (source.value(h, z0, alpha), target.value(h, z0, alpha))
            };
            let anchor = if z1 < z0 {
                Anchor { lo: z1, hi: z0, im_lo: im_z1, im_hi: z0 }
            } else {
                Anchor { lo: z0, hi: z1, im_lo: z0, im_hi: im_z1 }
            };
            // Single walk side: between the limit and the anchor.
            let walk = SideWalk {
                into_anchor: if escaping {
                    StepDir::Forward
                } else {
                    StepDir::Backward
                },
                limit: limit_s,
                limit_image: limit_t,
            };
            let (interval, images, below, above) = if limit_s < anchor.lo {
                (
                    (limit_s, z0.max(z1)),
                    (limit_t, anchor.im_hi.max(anchor.im_lo)),
                    Some(walk),
                    None,
                )
            } else {
                (
                    (z0.min(z1), limit_s),
                    (anchor.im_lo.min(anchor.im_hi), limit_t),
                    None,
                    Some(walk),
                )
            };
            (interval, images, anchor, below, above, z0)
        }
    };

    Ok(ConjugacyMap {
        source: source.clone(),
        target: target.clone(),
        h,
        alpha,
        region,
        half_plane,
        interval,
        interval_images,
        anchor,
        below,
        above,
        seed,
        n_max: opts.seq.n_max,
        in_box,
    })
}

impl ConjugacyMap {
    /// Closed interval `[lo, hi]` on which the conjugacy is defined.
    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Images of the interval endpoints (fixed points map to fixed points).
    pub fn interval_images(&self) -> (f64, f64) {
        self.interval_images
    }

    /// The region this map covers.
    pub fn region(&self) -> Region {
        self.region
    }

    /// The half-plane this map covers.
    pub fn half_plane(&self) -> HalfPlane {
        self.half_plane
    }

    /// Step size used at construction.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Parameter value used at construction.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Anchor seed (`x₀` inner, `z₀` outer); `J` fixes it.
    pub fn seed(&self) -> f64 {
        self.seed
    }

    /// Anchor fundamental domain `[lo, hi]`.
    pub fn anchor_domain(&self) -> (f64, f64) {
        (self.anchor.lo, self.anchor.hi)
    }

    /// Whether all validity-box checks passed at construction.
    pub fn in_box(&self) -> bool {
        self.in_box
    }

    /// The map whose dynamics form the domain side.
    pub fn source(&self) -> &NormalForm {
        &self.source
    }

    /// The map whose dynamics form the image side.
    pub fn target(&self) -> &NormalForm {
        &self.target
    }

    /// Evaluates the conjugacy, reporting walk depth and whether the value
    /// was snapped at the depth cap. `x` must lie in the interval (up to a
    /// `1e-12`-scale tolerance at the endpoints).
    pub fn eval_detailed(&self, x: f64) -> Result<ConjEval> {
        let (walk, x) = match self.classify(x)? {
            Classified::Done(ev) => return Ok(ev),
            Classified::Walk(walk, x) => (walk, x),
        };
        // Counting walk: step the point into the anchor, recording depth,
        // then unwind the same depth through the target map. Catalog tails
        // take the polynomial fast path; custom tails the generic one.
        let unwind = walk.into_anchor.opposite();
        match (
            PolyStep::of(&self.source, self.h, self.alpha),
            PolyStep::of(&self.target, self.h, self.alpha),
        ) {
            (Some(sp), Some(tp)) => {
                let mut sp_seed = None;
                let mut tp_seed = None;
                self.walk_to_anchor(
                    x,
                    walk,
                    |w| {
                        sp.step(
                            walk.into_anchor,
                            &self.source,
                            self.h,
                            self.alpha,
                            w,
                            &mut sp_seed,
                        )
                    },
                    |v| tp.step(unwind, &self.target, self.h, self.alpha, v, &mut tp_seed),
                )
            }
            _ => self.walk_to_anchor(
                x,
                walk,
                |w| step(&self.source, walk.into_anchor, self.h, w, self.alpha),
                |v| step(&self.target, unwind, self.h, v, self.alpha),
            ),
        }
    }

    /// Validation, clamping, and the walk-free fast paths shared by the
    /// scalar and batched evaluators: anchor points and points at a walk
    /// limit resolve immediately; everything else gets its side walk.
    fn classify(&self, x: f64) -> Result<Classified> {
        let (lo, hi) = self.interval;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !x.is_finite() || x < lo - slack || x > hi + slack {
            return Err(Error::InvalidInput(format!(
                "x = {x:e} outside the conjugacy interval [{lo:e}, {hi:e}]"
            )));
        }
        let x = x.clamp(lo, hi);
        if self.anchor.contains(x) {
            return Ok(Classified::Done(ConjEval {
                value: self.anchor.eval(x),
                snapped: false,
                depth: 0,
            }));
        }
        let walk = if x < self.anchor.lo { self.below } else { self.above };
        let walk = walk.ok_or_else(|| {
            Error::InvalidInput(format!(
                "x = {x:e} lies beyond the anchor on a side with no dynamics"
            ))
        })?;
        // Points within fixed-point resolution of the limit map to its image.
        if (x - walk.limit).abs() <= 1e-12 * (1.0 + walk.limit.abs()) {
            return Ok(Classified::Done(ConjEval {
                value: walk.limit_image,
                snapped: false,
                depth: 0,
            }));
        }
        Ok(Classified::Walk(walk, x))
    }

    /// Evaluates the conjugacy at every point of `xs`, bit-identically to
    /// per-point [`eval_conjugacy`] calls. Walks from different points are
    /// independent serial recursions, so on the catalog tails this routine
    /// interleaves several of them in one loop and lets the CPU pipeline
    /// overlap their dependency chains; custom tails fall back to the scalar
    /// path. When several points would fail, which error surfaces is
    /// unspecified.
    pub fn eval_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let (sp, tp) = match (
            PolyStep::of(&self.source, self.h, self.alpha),
            PolyStep::of(&self.target, self.h, self.alpha),
        ) {
            (Some(sp), Some(tp)) => (sp, tp),
            _ => {
                return xs.iter().map(|&x| eval_conjugacy(self, x)).collect();
            }
        };
        const LANES: usize = 4;
        let mut vals = vec![f64::NAN; xs.len()];
        let mut lanes: [Option<Lane>; LANES] = [None, None, None, None];
        let mut pending = 0usize;
        let mut active = 0usize;
        loop {
            // Refill idle lanes, resolving walk-free points on the spot.
            for slot in lanes.iter_mut() {
                if slot.is_some() {
                    continue;
                }
                while pending < xs.len() {
                    let idx = pending;
                    pending += 1;
                    match self.classify(xs[idx])? {
                        Classified::Done(ev) => vals[idx] = ev.value,
                        Classified::Walk(walk, x) => {
                            *slot = Some(Lane {
                                idx,
                                walk,
                                unwind: walk.into_anchor.opposite(),
                                phase: LanePhase::In { w: x, depth: 0 },
                                sseed: None,
                                tseed: None,
                            });
                            active += 1;
                            break;
                        }
                    }
                }
            }
            if active == 0 {
                break;
            }
            // Advance every active lane by one walk unit. The per-lane states
            // carry no cross-lane data, so their floating-point chains retire
            // in parallel.
            for slot in lanes.iter_mut() {
                let Some(lane) = slot else { continue };
                match lane.phase {
                    LanePhase::In { w, depth } => {
                        if self.anchor.contains(w) {
                            let v = self.anchor.eval(w);
                            if depth == 0 {
                                vals[lane.idx] = v;
                                *slot = None;
                                active -= 1;
                            } else {
                                lane.phase = LanePhase::Out { v, left: depth };
                            }
                            continue;
                        }
                        if depth >= self.n_max {
                            vals[lane.idx] = lane.walk.limit_image;
                            *slot = None;
                            active -= 1;
                            continue;
                        }
                        let next = sp.step(
                            lane.walk.into_anchor,
                            &self.source,
                            self.h,
                            self.alpha,
                            w,
                            &mut lane.sseed,
                        )?;
                        if next == w {
                            // Rounding stall: same snap as the scalar walk.
                            vals[lane.idx] = lane.walk.limit_image;
                            *slot = None;
                            active -= 1;
                            continue;
                        }
                        // Guard against a rounding overshoot across the anchor.
                        let w = if (next < self.anchor.lo && w > self.anchor.hi)
                            || (next > self.anchor.hi && w < self.anchor.lo)
                        {
                            if w < self.anchor.lo {
                                self.anchor.lo
                            } else {
                                self.anchor.hi
                            }
                        } else {
                            next
                        };
                        lane.phase = LanePhase::In {
                            w,
                            depth: depth + 1,
                        };
                    }
                    LanePhase::Out { v, left } => {
                        let v = tp.step(
                            lane.unwind,
                            &self.target,
                            self.h,
                            self.alpha,
                            v,
                            &mut lane.tseed,
                        )?;
                        if left == 1 {
                            vals[lane.idx] = v;
                            *slot = None;
                            active -= 1;
                        } else {
                            lane.phase = LanePhase::Out { v, left: left - 1 };
                        }
                    }
                }
            }
        }
        Ok(vals)
    }

    fn walk_to_anchor(
        &self,
        x: f64,
        walk: SideWalk,
        mut into: impl FnMut(f64) -> Result<f64>,
        mut out: impl FnMut(f64) -> Result<f64>,
    ) -> Result<ConjEval> {
        let mut w = x;
        let mut depth = 0usize;
        while !self.anchor.contains(w) {
            if depth >= self.n_max {
                return Ok(ConjEval {
                    value: walk.limit_image,
                    snapped: true,
                    depth,
                });
            }
            let next = into(w)?;
            depth += 1;
            if next == w {
                // Rounding stall (only possible within rounding distance of
                // the limit): treat as a depth-cap snap.
                return Ok(ConjEval {
                    value: walk.limit_image,
                    snapped: true,
                    depth,
                });
            }
            // Guard against a rounding overshoot straight across the anchor.
            w = if (next < self.anchor.lo && w > self.anchor.hi)
                || (next > self.anchor.hi && w < self.anchor.lo)
            {
                if w < self.anchor.lo {
                    self.anchor.lo
                } else {
                    self.anchor.hi
                }
            } else {
                next
            };
        }
        let mut v = self.anchor.eval(w);
        for _ in 0..depth {
            v = out(v)?;
        }
        Ok(ConjEval {
            value: v,
            snapped: false,
            depth,
        })
    }
}

/// Evaluates the conjugacy at `x`. See [`ConjugacyMap::eval_detailed`] for
/// the depth-cap contract.
pub fn eval_conjugacy(j: &ConjugacyMap, x: f64) -> Result<f64> {
    Ok(j.eval_detailed(x)?.value)
}

/// Maximum conjugation defect `|J(N_φ(x)) − N_Φ(J(x))|` over a uniform grid
/// of `grid_size ≥ 2` points on the interval. Where the forward image of a
/// grid point leaves the region (escaping outer dynamics), the equivalent
/// inverse-form defect `|J(N_φ^{[-1]}(x)) − N_Φ^{[-1]}(J(x))|` is used.
pub fn conjugacy_residual(j: &ConjugacyMap, grid_size: usize) -> Result<f64> {
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    let (lo, hi) = j.interval;
    let xs: Vec<f64> = (0..grid_size)
        .map(|i| {
            let t = i as f64 / (grid_size - 1) as f64;
            lo + t * (hi - lo)
        })
        .collect();
    let jxs = j.eval_many(&xs)?;
    // Forward images that stay in the interval are batched together; the
    // boundary points fall back to the inverse-form defect one by one.
    let mut worst = 0.0f64;
    let mut fwd_idx = Vec::with_capacity(grid_size);
    let mut fwd_pts = Vec::with_capacity(grid_size);
    for (i, (&x, &jx)) in xs.iter().zip(&jxs).enumerate() {
        let xf = j.source.value(j.h, x, j.alpha);
        if xf >= lo && xf <= hi {
            fwd_idx.push(i);
            fwd_pts.push(xf);
        } else {
            let xb = j.source.invert(j.h, x, j.alpha)?;
            if xb < lo || xb > hi {
                // The grid point is isolated under both step directions;
                // only the anchor identity is available, which holds by
                // construction.
            } else {
                let lhs = eval_conjugacy(j, xb)?;
                let rhs = j.target.invert(j.h, jx, j.alpha)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    let jfs = j.eval_many(&fwd_pts)?;
    for (&i, &jf) in fwd_idx.iter().zip(&jfs) {
        let rhs = j.target.value(j.h, jxs[i], j.alpha);
        worst = worst.max((jf - rhs).abs());
    }
    Ok(worst)
}

/// Conjugation defect at one point: `|J(N_φ(x)) − N_Φ(J(x))|` when the
/// forward image of `x` stays inside the interval, else the inverse-form
/// defect `|J(N_φ^{[-1]}(x)) − N_Φ^{[-1]}(J(x))|`; points isolated under
/// both step directions report `0`. [`conjugacy_residual`] is the grid
/// maximum of this quantity.
pub fn pointwise_defect(j: &ConjugacyMap, x: f64) -> Result<f64> {
    let (lo, hi) = j.interval;
    let jx = eval_conjugacy(j, x)?;
    let xf = j.source.value(j.h, x, j.alpha);
    if xf >= lo && xf <= hi {
        let lhs = eval_conjugacy(j, xf)?;
        let rhs = j.target.value(j.h, jx, j.alpha);
        Ok((lhs - rhs).abs())
    } else {
        let xb = j.source.invert(j.h, x, j.alpha)?;
        if xb < lo || xb > hi {
            Ok(0.0)
        } else {
            let lhs = eval_conjugacy(j, xb)?;
            let rhs = j.target.invert(j.h, jx, j.alpha)?;
            Ok((lhs - rhs).abs())
        }
    }
}

/// Solves `N(x) = y` for `x` on the monotone branch through bisection with
/// a Newton accelerator; the residual satisfies
/// `|N(x) − y| ≤ 1e-14 · max(1, |y|)`. `y` outside the attainable image
/// reports a bracket failure.
pub fn monotone_inverse(nf: &NormalForm, h: f64, alpha: f64, y: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() || !y.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need finite h > 0, alpha, y: h = {h:e}, alpha = {alpha:e}, y = {y:e}"
        )));
    }
    nf.invert(h, y, alpha)
}

//! Fixed points of parameter-dependent scalar maps: location, stability,
//! branch diagrams over a parameter range, and classification of the
//! bifurcation at the origin from partial derivatives.
//!
//! Roots of `g(x) = N(h, x, α) − x` are found by a sign-change scan over 2048
//! subintervals followed by bisection and Newton polish; the dedicated
//! solvers [`tc_nonzero_fixed_point`] and [`pf_negative_fixed_point`] start
//! instead from the a-priori brackets of the bifurcating branch
//! (`(−3α/2, −6α/7)` scaled by the nonlinearity sign for the transcritical
//! form, `(−√(2α), −(4/5)√α)` for the pitchfork form) and therefore cannot
//! pick up the wrong root.

use rayon::prelude::*;
use serde::Serialize;

use crate::estimates::{EstimateReport, ReportContext};
use crate::maps::{
    map_alpha_derivative, map_derivative, map_mixed_derivative, Map1, NormalForm,
};
use crate::{BifKind, Error, Result};

/// Number of scan subintervals used by [`find_fixed_points`].
const SCAN_CELLS: usize = 2048;

/// Zero-test tolerance of the bifurcation classifier.
const CLASSIFY_TOL: f64 = 1e-7;

/// Stability of a fixed point, from the multiplier `m = ∂N/∂x` with a
/// `1e−10` band around `|m| = 1` reported as neutral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Attracting,
    Neutral,
    Repelling,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Attracting => write!(f, "attracting"),
            Stability::Neutral => write!(f, "neutral"),
            Stability::Repelling => write!(f, "repelling"),
        }
    }
}

impl Stability {
    /// Classify a multiplier.
    pub fn from_multiplier(m: f64) -> Stability {
        if m.abs() < 1.0 - 1e-10 {
            Stability::Attracting
        } else if m.abs() > 1.0 + 1e-10 {
            Stability::Repelling
        } else {
            Stability::Neutral
        }
    }
}

/// A located fixed point. `residual = |N(h, x, α) − x|` is at most
/// `1e−12 · max(1, |x|)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    pub multiplier: f64,
    pub stability: Stability,
    pub residual: f64,
}

/// Result of a fixed-point scan over an interval.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointScan {
    /// Isolated fixed points, in increasing `x` order.
    pub points: Vec<FixedPoint>,
    /// `true` when the map is the identity on the interval to within
    /// `1e−13` at every scan node — the points list is then empty.
    pub continuum: bool,
}

/// Locate the fixed points of `map` in `interval = (lo, hi)` at parameters
/// `(h, α)`.
///
/// Sign changes of `g(x) = N(x) − x` across 2048 subintervals are refined by
/// bisection and Newton polish to residual `≤ 1e−13 · max(1, |x|)`; roots
/// closer than `1e−10` are merged. Tangential roots without a sign change
/// are found only when they fall on a scan node (the origin of an even
/// window always does).
pub fn find_fixed_points(
    map: &dyn Map1,
    h: f64,
    alpha: f64,
    interval: (f64, f64),
) -> Result<FixedPointScan> {
    let (lo, hi) = interval;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!(
            "interval must be finite with lo < hi, got ({lo}, {hi})"
        )));
    }
    let g = |x: f64| -> Result<f64> { Ok(map.eval(h, x, alpha)? - x) };
    let nodes: Vec<f64> = (0..=SCAN_CELLS)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN_CELLS as f64)
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&x| g(x)).collect::<Result<_>>()?;

    if nodes
        .iter()
        .zip(&values)
        .all(|(&x, &v)| v.abs() <= 1e-13 * x.abs().max(1.0))
    {
        return Ok(FixedPointScan {
            points: Vec::new(),
            continuum: true,
        });
    }

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..=SCAN_CELLS {
        if values[i] == 0.0 {
            roots.push(nodes[i]);
        }
        if i < SCAN_CELLS && values[i] * values[i + 1] < 0.0 {
            roots.push(refine_root(&g, nodes[i], nodes[i + 1], values[i])?);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);

    let mut points = Vec::with_capacity(roots.len());
    for x in roots {
        let residual = g(x)?.abs();
        if residual > 1e-12 * x.abs().max(1.0) {
            return Err(Error::InversionFailure(format!(
                "fixed-point residual {residual:e} at x = {x:e} misses the 1e-12 target"
            )));
        }
        let multiplier = map_derivative(map, 1, h, x, alpha)?;
        points.push(FixedPoint {
            x,
            multiplier,
            stability: Stability::from_multiplier(multiplier),
            residual,
        });
    }
    Ok(FixedPointScan {
        points,
        continuum: false,
    })
}

/// Bisection to near machine width, assuming `g(a)` and `g(b)` have opposite
/// signs, followed by a secant polish.
fn refine_root(g: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64, ga: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut g_lo = ga;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration for the bifurcating branch of a normal form, on the
/// reduced equation `F(x) = 0` with `N(x) − x = h x F(x)`.
fn bracketed_branch_root(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    bracket: (f64, f64),
    what: &str,
    reduced: &dyn Fn(f64) -> f64,
) -> Result<FixedPoint> {
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let (f_lo, f_hi) = (reduced(lo), reduced(hi));
    if f_lo == 0.0 || f_hi == 0.0 || f_lo * f_hi > 0.0 {
        return Err(Error::BracketFailure {
            what: what.to_string(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let mut x = {
        let (mut a, mut b, mut fa) = (lo, hi, f_lo);
        for _ in 0..90 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = reduced(mid);
            if fm == 0.0 {
                break;
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    // Newton polish on the map equation itself to pin the residual.
    for _ in 0..4 {
        let r = nf.value(h, x, alpha) - x;
        if r == 0.0 {
            break;
        }
        let d = nf.dx(h, x, alpha) - 1.0;
        if d.abs() < 1e-300 {
            break;
        }
        x -= r / d;
    }
    let residual = (nf.value(h, x, alpha) - x).abs();
    if residual > 1e-13 * x.abs().max(1.0) {
        return Err(Error::InversionFailure(format!(
            "{what}: residual {residual:e} misses the 1e-13 target at x = {x:e}"
        )));
    }
    let multiplier = nf.dx(h, x, alpha);
    Ok(FixedPoint {
        x,
        multiplier,
        stability: Stability::from_multiplier(multiplier),
        residual,
    })
}

/// Bifurcating-branch fixed point of a normal form without validity-box
/// enforcement (the public wrappers add it; the conjugacy builder may relax
/// it deliberately). For the pitchfork form `upper` selects the sign of the
/// root; the transcritical branch root's sign is `−s·α` and `upper` only
/// cross-checks the request.
pub(crate) fn branch_root_raw(
    nf: &NormalForm,
    h: f64,
    alpha: f64,
    upper: bool,
) -> Result<FixedPoint> {
    let s = nf.s();
    match nf.kind() {
        BifKind::Tc => {
            if alpha == 0.0 {
                return Err(Error::InvalidInput(
                    "alpha must be nonzero (the branches cross at alpha = 0)".to_string(),
                ));
            }
            if upper != (-s * alpha > 0.0) {
                return Err(Error::ConstraintViolation(format!(
                    "no nonzero fixed point on the {} half-line for s = {s:+}, alpha = {alpha:e}",
                    if upper { "upper" } else { "lower" }
                )));
            }
            let reduced = move |x: f64| alpha + s * x + x * x * nf.tail().value(h, x, alpha);
            bracketed_branch_root(
                nf,
                h,
                alpha,
                (-1.5 * s * alpha, -(6.0 / 7.0) * s * alpha),
                "tc nonzero fixed point",
                &reduced,
            )
        }
        BifKind::Pf => {
            let mu = -s * alpha;
            if mu <= 0.0 {
                return Err(Error::ConstraintViolation(format!(
                    "-s * alpha > 0 violated (nontrivial branches absent): s = {s:+}, alpha = {alpha:e}"
                )));
            }
            let sign = if upper { 1.0 } else { -1.0 };
            let reduced =
                move |x: f64| alpha + s * x * x + x * x * x * nf.tail().value(h, x, alpha);
            bracketed_branch_root(
                nf,
                h,
                alpha,
                (sign * (2.0 * mu).sqrt(), sign * 0.8 * mu.sqrt()),
                "pf branch fixed point",
                &reduced,
            )
        }
    }
}

/// The nonzero fixed point of a transcritical normal form, solved from the
/// reduced equation `α + s x + x² τ(h, x, α) = 0` inside its a-priori
/// bracket between `−(3/2) s α` and `−(6/7) s α`.
///
/// Requires `α ≠ 0` and `(h, α)` inside the form's validity box. The
/// residual satisfies `|N(x) − x| ≤ 1e−13 · max(1, |x|)`.
pub fn tc_nonzero_fixed_point(nf: &NormalForm, h: f64, alpha: f64) -> Result<FixedPoint> {
    if nf.kind() != BifKind::Tc {
        return Err(Error::InvalidInput(
            "tc_nonzero_fixed_point expects a transcritical form".to_string(),
        ));
    }
    nf.validity().check_params(h, alpha)?;
    branch_root_raw(nf, h, alpha, -nf.s() * alpha > 0.0)
}

/// The negative fixed point of a pitchfork normal form, solved from the
/// reduced equation `α + s x² + x³ τ(h, x, α) = 0` inside its a-priori
/// bracket `(−√(2μ), −(4/5)√μ)` with `μ = −s α`.
///
/// Requires `μ > 0` (for the standard `s = −1` form: `α > 0`) and `(h, α)`
/// inside the validity box. Residual contract as in
/// [`tc_nonzero_fixed_point`].
pub fn pf_negative_fixed_point(nf: &NormalForm, h: f64, alpha: f64) -> Result<FixedPoint> {
    if nf.kind() != BifKind::Pf {
        return Err(Error::InvalidInput(
            "pf_negative_fixed_point expects a pitchfork form".to_string(),
        ));
    }
    nf.validity().check_params(h, alpha)?;
    branch_root_raw(nf, h, alpha, false)
}

/// One fixed point on a traced branch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchPoint {
    pub alpha: f64,
    pub x: f64,
    pub multiplier: f64,
    pub stability: Stability,
}

/// A maximal chain of fixed points linked across the parameter grid.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
    /// Parameter values where the multiplier crosses 1 along the branch
    /// (linearly interpolated): the stability changes there.
    pub multiplier_crossings: Vec<f64>,
}

/// A branch diagram over a parameter range.
#[derive(Debug, Clone, Serialize)]
pub struct BranchDiagram {
    pub alpha_grid: Vec<f64>,
    pub branches: Vec<Branch>,
    pub x_window: (f64, f64),
}

/// Trace fixed-point branches of `map` over `n_alpha` evenly spaced
/// parameter values in `alpha_range`, scanning `x_window` at each.
///
/// Points at consecutive parameter values are linked to the nearest open
/// branch end, capped at ten times the scan resolution
/// `(window width)/2048` — larger jumps start a new branch. Where branches
/// collide (as transcritical branches do at `α = 0`), one chain continues
/// and the other ends, with a fresh id on the far side.
pub fn trace_branches(
    map: &dyn Map1,
    h: f64,
    alpha_range: (f64, f64),
    n_alpha: usize,
    x_window: (f64, f64),
) -> Result<BranchDiagram> {
    if n_alpha < 2 {
        return Err(Error::InvalidInput(format!(
            "n_alpha must be at least 2, got {n_alpha}"
        )));
    }
    let (a_lo, a_hi) = alpha_range;
    if !(a_lo < a_hi) {
        return Err(Error::InvalidInput(format!(
            "alpha range must satisfy lo < hi, got ({a_lo}, {a_hi})"
        )));
    }
    let alpha_grid: Vec<f64> = (0..n_alpha)
        .map(|i| a_lo + (a_hi - a_lo) * i as f64 / (n_alpha - 1) as f64)
        .collect();
    let scans: Vec<FixedPointScan> = alpha_grid
        .par_iter()
        .map(|&alpha| find_fixed_points(map, h, alpha, x_window))
        .collect::<Result<_>>()?;
    if let Some(i) = scans.iter().position(|s| s.continuum) {
        return Err(Error::InvalidInput(format!(
            "map has a continuum of fixed points at alpha = {:e}; no branch diagram exists",
            alpha_grid[i]
        )));
    }

    let jump_cap = 10.0 * (x_window.1 - x_window.0) / SCAN_CELLS as f64;
    let mut branches: Vec<Branch> = Vec::new();
    let mut open: Vec<usize> = Vec::new(); // indices into `branches`
    for (ia, scan) in scans.iter().enumerate() {
        let alpha = alpha_grid[ia];
        // Candidate links, nearest first, matched greedily one-to-one.
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (oi, &bi) in open.iter().enumerate() {
            let last_x = branches[bi].points.last().expect("open branch non-empty").x;
            for (pi, p) in scan.points.iter().enumerate() {
                let d = (p.x - last_x).abs();
                if d <= jump_cap {
                    cands.push((d, oi, pi));
                }
            }
        }
        cands.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("distances are finite"));
        let mut open_taken = vec![false; open.len()];
        let mut point_taken = vec![false; scan.points.len()];
        let mut next_open: Vec<usize> = Vec::new();
        for (_, oi, pi) in cands {
            if open_taken[oi] || point_taken[pi] {
                continue;
            }
            open_taken[oi] = true;
            point_taken[pi] = true;
            let bi = open[oi];
            let p = &scan.points[pi];
            branches[bi].points.push(BranchPoint {
                alpha,
                x: p.x,
                multiplier: p.multiplier,
                stability: p.stability,
            });
            next_open.push(bi);
        }
        for (pi, p) in scan.points.iter().enumerate() {
            if point_taken[pi] {
                continue;
            }
            let id = branches.len();
            branches.push(Branch {
                id,
                points: vec![BranchPoint {
                    alpha,
                    x: p.x,
                    multiplier: p.multiplier,
                    stability: p.stability,
                }],
                multiplier_crossings: Vec::new(),
            });
            next_open.push(id);
        }
        open = next_open;
    }

    for b in &mut branches {
        for w in b.points.windows(2) {
            let (m0, m1) = (w[0].multiplier - 1.0, w[1].multiplier - 1.0);
            if m0 * m1 < 0.0 {
                let t = m0 / (m0 - m1);
                b.multiplier_crossings
                    .push(w[0].alpha + t * (w[1].alpha - w[0].alpha));
            } else if m0 == 0.0 && m1 != 0.0 {
                // A multiplier exactly 1 counts as a crossing at that node
                // (counted once, on the window it opens).
                b.multiplier_crossings.push(w[0].alpha);
            }
        }
    }
    Ok(BranchDiagram {
        alpha_grid,
        branches,
        x_window,
    })
}

/// Verdict of [`classify_bifurcation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Transcritical,
    Pitchfork,
    Fold,
    None,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Transcritical => write!(f, "transcritical"),
            Verdict::Pitchfork => write!(f, "pitchfork"),
            Verdict::Fold => write!(f, "fold"),
            Verdict::None => write!(f, "none"),
        }
    }
}

/// One checked derivative condition with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub value: f64,
    pub satisfied: bool,
}

/// Outcome of classifying the bifurcation of a map at `(x, α) = (0, 0)`.
#[derive(Debug, Clone, Serialize)]
pub struct BifClass {
    pub verdict: Verdict,
    /// Conditions in the order they were decided; evaluation stops at the
    /// first structural failure.
    pub conditions: Vec<ConditionReport>,
    /// `g_xα² − g_xx · g_αα`, evaluated only on the transcritical path.
    pub discriminant: Option<f64>,
}

/// Classify the bifurcation of `g(x, α) = map(h, x, α)` at the origin from
/// numerically computed partial derivatives (zero tests at `1e−7`).
///
/// Decision order: `g(0,0) = 0` and `g_x(0,0) = 1` are structural — failing
/// either yields `None`. With `g_α ≠ 0`, a nonzero `g_xx` makes a fold.
/// With `g_α = 0` and `g_xx ≠ 0`, the verdict is transcritical exactly when
/// the discriminant `g_xα² − g_xx g_αα` is positive. With `g_xx = 0`, the
/// verdict is pitchfork exactly when both `g_xxx` and `g_xα` are nonzero.
pub fn classify_bifurcation(map: &dyn Map1, h: f64) -> Result<BifClass> {
    classify_bifurcation_with_tol(map, h, CLASSIFY_TOL)
}

/// [`classify_bifurcation`] with an explicit zero-test tolerance. Verdicts
/// on well-separated examples are stable under moderate tolerance changes
/// (halving the default does not flip any catalog example).
pub fn classify_bifurcation_with_tol(map: &dyn Map1, h: f64, tol: f64) -> Result<BifClass> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "classification tolerance must be positive and finite, got {tol:e}"
        )));
    }
    let mut conditions = Vec::new();
    let mut check = |name: &str, value: f64, satisfied: bool| -> bool {
        conditions.push(ConditionReport {
            name: name.to_string(),
            value,
            satisfied,
        });
        satisfied
    };

    let g0 = map.eval(h, 0.0, 0.0)?;
    if !check("g(0,0) = 0", g0, g0.abs() <= tol) {
        return Ok(BifClass {
            verdict: Verdict::None,
            conditions,
            discriminant: None,
        });
    }
    let gx = map_derivative(map, 1, h, 0.0, 0.0)?;
    if !check("g_x(0,0) = 1", gx, (gx - 1.0).abs() <= tol) {
        return Ok(BifClass {
            verdict: Verdict::None,
            conditions,
            discriminant: None,
        });
    }
    let ga = map_alpha_derivative(map, 1, h, 0.0, 0.0)?;
    let gxx = map_derivative(map, 2, h, 0.0, 0.0)?;
    if ga.abs() > tol {
        check("g_alpha(0,0) != 0", ga, true);
        let is_fold = check("g_xx(0,0) != 0", gxx, gxx.abs() > tol);
        return Ok(BifClass {
            verdict: if is_fold { Verdict::Fold } else { Verdict::None },
            conditions,
            discriminant: None,
        });
    }
    check("g_alpha(0,0) = 0", ga, true);
    if gxx.abs() > tol {
        check("g_xx(0,0) != 0", gxx, true);
        let gxa = map_mixed_derivative(map, h, 0.0, 0.0)?;
        let gaa = map_alpha_derivative(map, 2, h, 0.0, 0.0)?;
        let disc = gxa * gxa - gxx * gaa;
        let is_tc = check("g_xalpha^2 - g_xx*g_alphaalpha > 0", disc, disc > 0.0);
        return Ok(BifClass {
            verdict: if is_tc {
                Verdict::Transcritical
            } else {
                Verdict::None
            },
            conditions,
            discriminant: Some(disc),
        });
    }
    check("g_xx(0,0) = 0", gxx, true);
    let gxxx = map_derivative(map, 3, h, 0.0, 0.0)?;
    let gxa = map_mixed_derivative(map, h, 0.0, 0.0)?;
    let cubic_ok = check("g_xxx(0,0) != 0", gxxx, gxxx.abs() > tol);
    let cross_ok = check("g_xalpha(0,0) != 0", gxa, gxa.abs() > tol);
    Ok(BifClass {
        verdict: if cubic_ok && cross_ok {
            Verdict::Pitchfork
        } else {
            Verdict::None
        },
        conditions,
        discriminant: None,
    })
}

/// Fitted branch-scaling constants from [`verify_asymmetric_pf_branches`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PfBranchFit {
    /// `max |ρ₀(α)| / |α|` over the probed grid (0 when the middle branch
    /// sits at the origin identically).
    pub c0: f64,
    /// `min |ρ±(α)| / √|α|`.
    pub c1: f64,
    /// `max |ρ±(α)| / √|α|`.
    pub c2: f64,
    /// Fitted exponent of `|ρ±|` against `|α|` (0.5 for a true pitchfork).
    pub slope: f64,
    /// Sign of the parameter side carrying three branches.
    pub three_branch_side: f64,
}

/// Confirm the one-sided three-branch structure of a pitchfork map and fit
/// its scaling constants.
///
/// The map must classify as a pitchfork. The sign of `g_xxx · g_xα` predicts
/// the parameter side with three fixed points; that side is probed on 16
/// log-spaced magnitudes in `[α₀/64, α₀]` (`α₀ = alpha0_probe`) and the
/// opposite side once at `α₀`. Any branch-count mismatch (≠ 3 on the
/// three-branch side, ≠ 1 on the other) is an error. The returned report
/// passes when the nontrivial branches scale like `√|α|` within ±0.1 in the
/// fitted exponent; the middle branch is checked to stay within `c0 |α|` of
/// the origin with the fitted `c0` finite.
pub fn verify_asymmetric_pf_branches(
    map: &dyn Map1,
    h: f64,
    alpha0_probe: f64,
) -> Result<(EstimateReport, PfBranchFit)> {
    if !(alpha0_probe > 0.0) || !alpha0_probe.is_finite() {
        return Err(Error::InvalidInput(format!(
            "alpha0_probe must be positive and finite, got {alpha0_probe}"
        )));
    }
    let class = classify_bifurcation(map, h)?;
    if class.verdict != Verdict::Pitchfork {
        return Err(Error::ConstraintViolation(format!(
            "map classifies as {}, not pitchfork",
            class.verdict
        )));
    }
    let gxxx = map_derivative(map, 3, h, 0.0, 0.0)?;
    let gxa = map_mixed_derivative(map, h, 0.0, 0.0)?;
    // Three branches appear where the cubic term can balance the linear
    // drift: on the α < 0 side when g_xxx·g_xα > 0, else on α > 0.
    let side = if gxxx * gxa > 0.0 { -1.0 } else { 1.0 };
    // Window wide enough for ρ± ≈ ±√(6 |g_xα / g_xxx| |α|) with margin.
    let w = 5.0 * (6.0 * (gxa / gxxx).abs() * alpha0_probe).sqrt();

    let n_probe = 16;
    let mut c0 = 0.0f64;
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    let mut log_pairs: Vec<(f64, f64)> = Vec::new();
    for i in 0..n_probe {
        let mag = alpha0_probe * 64f64.powf(-(i as f64) / (n_probe - 1) as f64);
        let alpha = side * mag;
        let scan = find_fixed_points(map, h, alpha, (-w, w))?;
        if scan.points.len() != 3 {
            return Err(Error::ConstraintViolation(format!(
                "expected 3 fixed points at alpha = {alpha:e}, found {}",
                scan.points.len()
            )));
        }
        let mut xs: Vec<f64> = scan.points.iter().map(|p| p.x).collect();
        xs.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("finite"));
        let rho0 = xs[0];
        c0 = c0.max(rho0.abs() / mag);
        for &rho in &xs[1..] {
            let ratio = rho.abs() / mag.sqrt();
            c1 = c1.min(ratio);
            c2 = c2.max(ratio);
            log_pairs.push((mag.ln(), rho.abs().ln()));
        }
    }
    let opposite = find_fixed_points(map, h, -side * alpha0_probe, (-w, w))?;
    if opposite.points.len() != 1 {
        return Err(Error::ConstraintViolation(format!(
            "expected 1 fixed point at alpha = {:e}, found {}",
            -side * alpha0_probe,
            opposite.points.len()
        )));
    }

    let n = log_pairs.len() as f64;
    let mean_x = log_pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = log_pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = log_pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = log_pairs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;

    let fit = PfBranchFit {
        c0,
        c1,
        c2,
        slope,
        three_branch_side: side,
    };
    let report = EstimateReport::new(
        "pf-asymmetric-branch-scaling",
        (slope - 0.5).abs(),
        0.1,
        c2,
        ReportContext {
            h: Some(h),
            alpha: Some(side * alpha0_probe),
            kind: Some(BifKind::Pf),
            ..ReportContext::default()
        },
    );
    Ok((report, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_pf_normal_form, make_tc_normal_form, CatalogMap, ParamMap, Tail};
    use approx::assert_relative_eq;

    #[test]
    fn scan_finds_both_tc_roots() {
        let m = CatalogMap::TcPhi;
        let scan = find_fixed_points(&m, 0.1, 0.01, (-0.05, 0.05)).unwrap();
        assert!(!scan.continuum);
        assert_eq!(scan.points.len(), 2);
        assert_relative_eq!(scan.points[0].x, -0.01, epsilon = 1e-12);
        assert!(scan.points[1].x.abs() <= 1e-12);
        // Multipliers: 1 − hα at the branch point, 1 + hα at the origin.
        assert_eq!(scan.points[0].stability, Stability::Attracting);
        assert_eq!(scan.points[1].stability, Stability::Repelling);
    }

    #[test]
    fn scan_detects_identity_continuum() {
        let id = ParamMap::new("identity", |_, x, _| Ok(x));
        let scan = find_fixed_points(&id, 0.1, 0.0, (-1.0, 1.0)).unwrap();
        assert!(scan.continuum);
        assert!(scan.points.is_empty());
    }

    #[test]
    fn scan_finds_tangential_root_on_node() {
        // At α = 0 the two transcritical branches collide at the origin with
        // no sign change; the origin is a scan node of an even window.
        let m = CatalogMap::TcPhi;
        let scan = find_fixed_points(&m, 0.1, 0.0, (-0.04, 0.04)).unwrap();
        assert_eq!(scan.points.len(), 1);
        assert_eq!(scan.points[0].x, 0.0);
    }

    #[test]
    fn tc_branch_root_zero_tail_is_minus_alpha() {
        let nf = make_tc_normal_form(Tail::Zero, 1.0, 1.0).unwrap();
        let fp = tc_nonzero_fixed_point(&nf, 0.1, 0.015).unwrap();
        assert_relative_eq!(fp.x, -0.015, max_relative = 1e-13);
        assert!(fp.residual <= 1e-13);
        assert_eq!(fp.stability, Stability::Attracting);
    }

    #[test]
    fn tc_branch_root_hp_tail_matches_closed_form() {
        // With τ = h^p the reduced equation is quadratic:
        // α + x + h^p x² = 0, root (−1 + √(1 − 4 h^p α)) / (2 h^p).
        let (h, alpha, p) = (0.1f64, 0.0125, 1);
        let nf = make_tc_normal_form(Tail::HpPower(p), 1.0, 1.0).unwrap();
        let hp = h.powi(p as i32);
        let expect = (-1.0 + (1.0 - 4.0 * hp * alpha).sqrt()) / (2.0 * hp);
        let fp = tc_nonzero_fixed_point(&nf, h, alpha).unwrap();
        assert_relative_eq!(fp.x, expect, max_relative = 1e-12);
    }

    #[test]
    fn tc_branch_root_stays_in_bracket() {
        let nf = make_tc_normal_form(Tail::Sin, 1.0, 1.0).unwrap();
        for &alpha in &[0.003, 0.01, 0.019, -0.003, -0.019] {
            let fp = tc_nonzero_fixed_point(&nf, 0.2, alpha).unwrap();
            let (lo, hi) = (-1.5 * alpha, -(6.0 / 7.0) * alpha);
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            assert!(fp.x > lo && fp.x < hi, "alpha = {alpha}: x = {}", fp.x);
        }
    }

    #[test]
    fn tc_branch_root_rejects_alpha_outside_box() {
        let nf = make_tc_normal_form(Tail::Zero, 1.0, 1.0).unwrap();
        let err = tc_nonzero_fixed_point(&nf, 0.1, 0.1).unwrap_err();
        assert!(err.to_string().contains("alpha0"), "{err}");
        assert!(tc_nonzero_fixed_point(&nf, 0.1, 0.0).is_err());
    }

    #[test]
    fn pf_branch_root_zero_tail_is_minus_sqrt_alpha() {
        let nf = make_pf_normal_form(Tail::Zero, 1.0, -1.0).unwrap();
        let alpha = 0.003;
        let fp = pf_negative_fixed_point(&nf, 0.1, alpha).unwrap();
        assert_relative_eq!(fp.x, -alpha.sqrt(), max_relative = 1e-13);
        assert!(fp.x > -(2.0 * alpha).sqrt() && fp.x < -0.8 * alpha.sqrt());
    }

    #[test]
    fn pf_branch_root_requires_branch_side() {
        let nf = make_pf_normal_form(Tail::Zero, 1.0, -1.0).unwrap();
        let err = pf_negative_fixed_point(&nf, 0.1, -0.003).unwrap_err();
        assert!(matches!(err, Error::ConstraintViolation(_)), "{err}");
    }

    #[test]
    fn branch_diagram_links_across_parameter_grid() {
        // The parameter step (2e−4) stays under the jump cap
        // 10 · 0.08 / 2048 ≈ 3.9e−4, so the moving branch x = −α links up.
        let m = CatalogMap::TcPhi;
        let d = trace_branches(&m, 0.1, (-0.018, 0.018), 181, (-0.04, 0.04)).unwrap();
        assert_eq!(d.alpha_grid.len(), 181);
        // Away from the collision the diagram carries exactly two points per
        // parameter value: x = 0 and x = −α.
        let total: usize = d.branches.iter().map(|b| b.points.len()).sum();
        assert_eq!(total, 2 * 181 - 1); // the collision node holds one point
        let longest = d.branches.iter().map(|b| b.points.len()).max().unwrap();
        assert!(longest >= 181, "longest chain spans the whole range");
        // The trivial branch changes stability at α = 0 (multiplier 1 + hα).
        let trivial = d
            .branches
            .iter()
            .find(|b| b.points.iter().all(|p| p.x.abs() < 1e-9))
            .expect("trivial branch present");
        assert_eq!(trivial.multiplier_crossings.len(), 1);
        assert!(trivial.multiplier_crossings[0].abs() < 1e-6);
    }

    #[test]
    fn classify_tc_normal_form() {
        let c = classify_bifurcation(&CatalogMap::TcPhi, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::Transcritical);
        let disc = c.discriminant.unwrap();
        assert_relative_eq!(disc, 0.01, max_relative = 1e-6); // g_xα² = h²
    }

    #[test]
    fn classify_pf_normal_form() {
        let c = classify_bifurcation(&CatalogMap::PfPhi, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::Pitchfork);
        assert!(c.discriminant.is_none());
    }

    #[test]
    fn classify_exact_flow_as_transcritical() {
        let c = classify_bifurcation(&CatalogMap::Section5Phi, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::Transcritical);
    }

    #[test]
    fn classify_rejects_wiggins_counterexample() {
        // g = α² + (1+α)x + x²: all structural conditions hold but the
        // discriminant is 1 − 4 = −3 < 0.
        let c = classify_bifurcation(&CatalogMap::WigginsCounterexample, 1.0).unwrap();
        assert_eq!(c.verdict, Verdict::None);
        assert_relative_eq!(c.discriminant.unwrap(), -3.0, max_relative = 1e-6);
    }

    #[test]
    fn classify_counterexample_catalog() {
        // Constant defect: no fixed point at the origin.
        let c = classify_bifurcation(&CatalogMap::PerturbedConstant2p { p: 1 }, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::None);
        assert!(!c.conditions[0].satisfied);

        let c = classify_bifurcation(&CatalogMap::PerturbedConstant3p { p: 1 }, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::None);

        // Small quadratic term: still transcritical, not pitchfork.
        let c = classify_bifurcation(&CatalogMap::SmallQuadratic { p: 2 }, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::Transcritical);

        // Multiplier ≠ 1 at the origin: the second structural check fails.
        let c = classify_bifurcation(&CatalogMap::ShiftedMultiplier { p: 1 }, 0.1).unwrap();
        assert_eq!(c.verdict, Verdict::None);
        assert_eq!(c.conditions[1].name, "g_x(0,0) = 1");
        assert!(!c.conditions[1].satisfied);
    }

    #[test]
    fn classify_fold_map() {
        let fold = ParamMap::new("fold", |_, x, a| Ok(a + x + x * x));
        let c = classify_bifurcation(&fold, 1.0).unwrap();
        assert_eq!(c.verdict, Verdict::Fold);
    }

    #[test]
    fn asymmetric_branch_structure_of_pf_form() {
        let (report, fit) = verify_asymmetric_pf_branches(&CatalogMap::PfPhi, 0.1, 0.002).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(fit.three_branch_side, 1.0);
        // ρ± = ±√α exactly for the zero-tail form.
        assert_relative_eq!(fit.c1, 1.0, max_relative = 1e-6);
        assert_relative_eq!(fit.c2, 1.0, max_relative = 1e-6);
        assert!(fit.c0 <= 1e-6);
        assert_relative_eq!(fit.slope, 0.5, max_relative = 1e-3);
    }

    #[test]
    fn asymmetric_branch_structure_with_quartic_term() {
        // Adding an x⁴ term keeps the pitchfork but bends the branches:
        // the fit still sees √α scaling.
        let bent = ParamMap::new("bent", |h: f64, x: f64, a: f64| {
            Ok((1.0 + h * a) * x - h * x * x * x + h * x * x * x * x)
        });
        let (report, fit) = verify_asymmetric_pf_branches(&bent, 0.1, 0.002).unwrap();
        assert!(report.passed, "{report:?}");
        assert!(fit.c0 <= 1e-6);
        assert!(fit.c1 < 1.0 && fit.c2 > 1.0 - 1e-3);
    }

    #[test]
    fn asymmetric_branch_check_rejects_non_pitchfork() {
        let err = verify_asymmetric_pf_branches(&CatalogMap::TcPhi, 0.1, 0.002).unwrap_err();
        assert!(err.to_string().contains("not pitchfork"), "{err}");
    }
}

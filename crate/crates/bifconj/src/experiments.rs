//! The planar model experiment: exact time-`h` flow of the quadratic model
//! system versus its classical fourth-order Runge–Kutta discretization.
//!
//! The two maps share the equilibrium at the origin but disagree in their
//! linear multipliers and quadratic coefficients by terms of order `(αh)⁴`.
//! [`compute_alignment`] produces the parameter shift `α̃` that matches the
//! multipliers exactly and the state rescaling `ρ` that matches the
//! quadratic coefficients; [`delta_sequence`] and
//! [`orbit_closeness_experiment`] then measure the normalized orbit
//! difference `δ(n) = h^{−4}·|Φ(nh, x₀, α) − ρ^{−1}·φ^{[n]}(ρx₀; α̃)|`,
//! which stays bounded uniformly in `n` precisely because of the alignment.
//! [`h_sweep`] drives conjugacy construction over step-size grids for order
//! fitting, and [`portrait_orbits`] tabulates planar orbits of the model.
//!
//! Alignment quantities are carried as offsets from their trivial values
//! (`delta_alpha = (α̃ − α)/α`, `delta_rho = ρ − 1`): at the step sizes of
//! interest the offsets are comparable to the rounding error of `α` and
//! `ρ` themselves, so forming them by subtraction of the full quantities
//! would destroy them. All series manipulations below keep the offsets as
//! first-class values instead.

use rayon::prelude::*;
use serde::Serialize;

use crate::conjugacy::{build_conjugacy_with, BuildOptions, SequenceOptions};
use crate::estimates::{order_fit, sup_id_minus_j, OrderFit};
use crate::maps::{
    make_pf_normal_form, make_tc_normal_form, model_y_flow, tc_model_exact_flow, NormalForm,
    Tail,
};
use crate::rk::{rk_apply, Rhs, RkMethod};
use crate::{BifKind, Error, HalfPlane, Region, Result};

/// Order of the Runge–Kutta discretization used throughout this module.
pub const MODEL_ORDER: u32 = 4;

/// Coefficients of the degree-6 polynomial `R` with `c₂_rk4 = h·R(αh)`:
/// the quadratic-in-`x` coefficient of one classical RK4 step applied to
/// `x' = αx + x²` (ascending powers).
const RK4_QUAD: [f64; 7] = [
    1.0,
    3.0 / 2.0,
    7.0 / 6.0,
    5.0 / 8.0,
    5.0 / 24.0,
    5.0 / 96.0,
    1.0 / 96.0,
];

/// `g_m − r_m` for `m = 4, 5, 6`, where `g_m = (2^{m+1} − 1)/(m+1)!` are
/// the series coefficients of the flow's quadratic coefficient `h·G(αh)`,
/// `G(u) = e^u(e^u − 1)/u`. The two series agree through `u³`.
const QUAD_DIFF: [f64; 3] = [1.0 / 20.0, 17.0 / 480.0, 149.0 / 10080.0];

/// Degree-4 truncated exponential `P₄(u) = 1 + u + u²/2 + u³/6 + u⁴/24`:
/// the linear multiplier of one RK4 step at the origin.
fn p4(u: f64) -> f64 {
    1.0 + u * (1.0 + u * (0.5 + u * (1.0 / 6.0 + u / 24.0)))
}

/// `P₄^{(m)}(u)/m!` for `m = 1..4`.
fn p4_taylor(u: f64) -> [f64; 4] {
    [
        1.0 + u * (1.0 + u * (0.5 + u / 6.0)),
        0.5 * (1.0 + u * (1.0 + 0.5 * u)),
        (1.0 + u) / 6.0,
        1.0 / 24.0,
    ]
}

/// `e^u − P₄(u) = Σ_{k≥5} u^k/k!`, summed directly so it keeps full
/// relative precision where the subtraction would lose every digit.
fn p4_tail(u: f64) -> f64 {
    let mut term = u.powi(5) / 120.0;
    let mut sum = 0.0;
    for k in 5..60 {
        sum += term;
        term *= u / (k as f64 + 1.0);
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
    }
    sum
}

/// `R(v)` by Horner evaluation.
fn rk4_quad_coeff(v: f64) -> f64 {
    let mut acc = 0.0;
    for &c in RK4_QUAD.iter().rev() {
        acc = acc * v + c;
    }
    acc
}

/// `G(u) = e^u (e^u − 1)/u`, the flow's quadratic coefficient over `h`.
fn flow_quad_coeff(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.exp() * u.exp_m1() / u
    }
}

/// `g_m = (2^{m+1} − 1)/(m+1)!`.
fn flow_quad_series_coeff(m: u32) -> f64 {
    let mut fact = 1.0f64;
    for k in 2..=(m + 1) {
        fact *= k as f64;
    }
    (2.0f64.powi(m as i32 + 1) - 1.0) / fact
}

/// Residuals of the computed alignment offsets against their leading
/// series `u⁴/120 − u⁵/144` (for `(α̃ − α)/α`) and `u⁴/20 − 5u⁵/96` (for
/// `ρ − 1`), with `u = αh`. Both are of order `u⁶` when the alignment is
/// computed correctly.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesResiduals {
    pub alpha_tilde: f64,
    pub rho: f64,
}

/// The parameter shift and state rescaling matching the RK4 step to the
/// exact flow at the origin.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentPair {
    pub h: f64,
    pub alpha: f64,
    /// Parameter at which the RK4 multiplier equals the flow multiplier:
    /// `P₄(α̃h) = e^{αh}`.
    pub alpha_tilde: f64,
    /// Quadratic-coefficient ratio `c₂_flow(h, α) / c₂_rk4(h, α̃)`.
    pub rho: f64,
    /// `(α̃ − α)/α`, exact to relative rounding error (0 when `α = 0`).
    pub delta_alpha: f64,
    /// `ρ − 1`, exact to relative rounding error.
    pub delta_rho: f64,
    /// Quadratic expansion coefficient of the flow at `(h, α)`.
    pub c2_flow: f64,
    /// Quadratic expansion coefficient of the RK4 step at `(h, α̃)`.
    pub c2_rk4: f64,
    /// Residuals against the leading series expansions.
    pub series_check: SeriesResiduals,
}

impl AlignmentPair {
    /// `u = αh`.
    pub fn u(&self) -> f64 {
        self.alpha * self.h
    }

    /// `v = α̃h`, reconstructed from the offset at full precision.
    pub fn v(&self) -> f64 {
        let u = self.u();
        u + self.delta_alpha * u
    }

    /// Linear multiplier of the flow at the origin, `e^{αh}`.
    pub fn flow_multiplier(&self) -> f64 {
        self.u().exp()
    }

    /// Linear multiplier of the aligned RK4 step at the origin, `P₄(α̃h)`.
    pub fn rk4_multiplier(&self) -> f64 {
        p4(self.v())
    }
}

/// Computes the alignment `(α̃, ρ)` of the RK4 step to the exact flow of
/// the quadratic model at `(h, α)`.
///
/// `α̃` solves the multiplier-matching equation `P₄(α̃h) = e^{αh}` (Newton
/// from `α̃ = α`, performed on the offset `w = α̃h − αh` so the root keeps
/// full relative precision), and `ρ = c₂_flow(h, α)/c₂_rk4(h, α̃)` is the
/// quadratic-coefficient ratio, assembled from the two coefficient series
/// term by term for the same reason. Requires `|αh| < 1/2`.
pub fn compute_alignment(h: f64, alpha: f64) -> Result<AlignmentPair> {
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need finite h > 0 and finite alpha, got h = {h:e}, alpha = {alpha:e}"
        )));
    }
    let u = alpha * h;
    if u.abs() >= 0.5 {
        return Err(Error::InvalidInput(format!(
            "alignment requires |alpha * h| < 1/2, got {:e}",
            u.abs()
        )));
    }
    if u == 0.0 {
        return Ok(AlignmentPair {
            h,
            alpha,
            alpha_tilde: alpha,
            rho: 1.0,
            delta_alpha: 0.0,
            delta_rho: 0.0,
            c2_flow: h,
            c2_rk4: h,
            series_check: SeriesResiduals {
                alpha_tilde: 0.0,
                rho: 0.0,
            },
        });
    }

    // Multiplier matching: with v = u + w, P₄(v) − P₄(u) = Σ_m c_m w^m
    // must equal e^u − P₄(u) = Σ_{k≥5} u^k/k!; Newton in w.
    let target = p4_tail(u);
    let c = p4_taylor(u);
    let mut w = target / c[0];
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let f = w * (c[0] + w * (c[1] + w * (c[2] + w * c[3]))) - target;
        let df = c[0] + w * (2.0 * c[1] + w * (3.0 * c[2] + 4.0 * c[3] * w));
        residual = f.abs();
        let next = w - f / df;
        if next == w {
            converged = true;
            break;
        }
        w = next;
    }
    if !converged && residual > 1e-6 * target.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::ImplicitSolve {
            iterations: 50,
            residual,
        });
    }
    let delta_alpha = w / u;
    let v = u + w;

    // Quadratic-coefficient ratio: ρ − 1 = (G(u) − R(v)) / R(v), with the
    // numerator assembled as
    //   Σ_{m=4}^{6}(g_m − r_m) u^m  +  Σ_{m≥7} g_m u^m
    //   − Σ_{m=1}^{6} r_m (v^m − u^m),
    // where v^m − u^m = w · Σ_{j<m} v^j u^{m−1−j} carries the offset `w`
    // as an exact factor.
    let mut numer = 0.0;
    for (i, &d) in QUAD_DIFF.iter().enumerate() {
        numer += d * u.powi(i as i32 + 4);
    }
    for m in 7..=40u32 {
        let term = flow_quad_series_coeff(m) * u.powi(m as i32);
        numer += term;
        if term.abs() <= f64::EPSILON * numer.abs() {
            break;
        }
    }
    for (m, &r) in RK4_QUAD.iter().enumerate().skip(1) {
        let mut s = 0.0;
        for j in 0..m {
            s += v.powi(j as i32) * u.powi((m - 1 - j) as i32);
        }
        numer -= r * w * s;
    }
    let r_v = rk4_quad_coeff(v);
    let delta_rho = numer / r_v;

    let u4 = u.powi(4);
    let u5 = u.powi(5);
    let series_check = SeriesResiduals {
        alpha_tilde: (delta_alpha - (u4 / 120.0 - u5 / 144.0)).abs(),
        rho: (delta_rho - (u4 / 20.0 - 5.0 * u5 / 96.0)).abs(),
    };
    Ok(AlignmentPair {
        h,
        alpha,
        alpha_tilde: alpha * (1.0 + delta_alpha),
        rho: 1.0 + delta_rho,
        delta_alpha,
        delta_rho,
        c2_flow: h * flow_quad_coeff(u),
        c2_rk4: h * r_v,
        series_check,
    })
}

/// A normalized orbit-difference record.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitDiff {
    /// `δ(n)` for `n = 0..=N`.
    pub values: Vec<f64>,
    /// `max_n δ(n)`.
    pub sup: f64,
    pub h: f64,
    pub x0: f64,
    pub alpha: f64,
    /// Offset added to `α̃` before running the discrete orbit (0 for the
    /// aligned run).
    pub perturbation: f64,
}

/// Normalized difference between the aligned normal-form orbits of the
/// model: `δ(n) = h^{−4}·|Φ(nh, x₀, α) − ρ^{−1}·φ^{[n]}(ρx₀; α̃)|`, where
/// `Φ` is the exact flow (evaluated through its semi-group closed form)
/// and `φ` the RK4 step. Requires `x₀ ≤ 0` and `|αh| < 1/2`.
pub fn delta_sequence(h: f64, x0: f64, alpha: f64, n_steps: usize) -> Result<OrbitDiff> {
    orbit_closeness_experiment(h, x0, alpha, n_steps, 0.0)
}

/// [`delta_sequence`] with an explicit offset added to the aligned
/// parameter `α̃` of the discrete orbit. The aligned run (`perturb = 0`)
/// stays uniformly bounded in `n`; already a perturbation of `1e−7`
/// destroys the alignment and inflates the supremum by orders of
/// magnitude.
pub fn orbit_closeness_experiment(
    h: f64,
    x0: f64,
    alpha: f64,
    n_steps: usize,
    perturb_alpha_tilde: f64,
) -> Result<OrbitDiff> {
    if !(x0 <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "the orbit experiment requires x0 <= 0 (pole-free forward flow), got {x0:e}"
        )));
    }
    if !perturb_alpha_tilde.is_finite() {
        return Err(Error::InvalidInput(
            "perturbation must be finite".to_string(),
        ));
    }
    let pair = compute_alignment(h, alpha)?;
    let alpha_run = pair.alpha_tilde + perturb_alpha_tilde;
    let method = RkMethod::rk4(Rhs::TcModel);
    let hp_inv = h.powi(-(MODEL_ORDER as i32));
    let mut y = pair.rho * x0;
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut sup = 0.0f64;
    for n in 0..=n_steps {
        let flow = if n == 0 {
            x0
        } else {
            tc_model_exact_flow(n as f64 * h, x0, alpha)?
        };
        let delta = hp_inv * (flow - y / pair.rho).abs();
        sup = sup.max(delta);
        values.push(delta);
        if n < n_steps {
            y = rk_apply(&method, h, y, alpha_run)?;
        }
    }
    Ok(OrbitDiff {
        values,
        sup,
        h,
        x0,
        alpha,
        perturbation: perturb_alpha_tilde,
    })
}

/// Step-size sweep configuration: which normal-form pair to build
/// (`tail` vs. the zero tail), over which `(h, α)` grid, and on which
/// region of the phase line.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub kind: BifKind,
    pub p: u32,
    pub h_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub region: Region,
    /// Tail of the target normal form; the source always carries the zero
    /// tail. With `Tail::Zero` the pair is identical and the sweep is
    /// degenerate by construction.
    pub tail: Tail,
    /// Half-plane override; inferred from `kind`/`region`/`α` when absent.
    pub half_plane: Option<HalfPlane>,
    /// Grid size for the `sup |id − J|` measurement.
    pub grid_size: usize,
}

impl SweepConfig {
    /// Parses the flat `key=value` sweep format:
    ///
    /// ```text
    /// kind=tc
    /// p=1
    /// h=0.1,0.05,0.025,0.0125
    /// alpha=0.005
    /// region=inner
    /// tail=hp_power
    /// ```
    ///
    /// Blank lines and `#` comments are ignored. Optional keys:
    /// `half_plane=lower|upper` and `grid=<n>` (default 4096). Unknown or
    /// duplicate keys are rejected.
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let mut kind = None;
        let mut p = None;
        let mut h_values = None;
        let mut alpha_values = None;
        let mut region = None;
        let mut tail_name = None;
        let mut half_plane = None;
        let mut grid_size = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!(
                    "sweep config line {} is not key=value: '{line}'",
                    lineno + 1
                ))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let dup = |what: &str| {
                Error::InvalidInput(format!("duplicate sweep config key '{what}'"))
            };
            let bad = |what: &str, v: &str, hint: &str| {
                Error::InvalidInput(format!("invalid {what} '{v}' (expected {hint})"))
            };
            match key {
                "kind" => {
                    if kind.is_some() {
                        return Err(dup(key));
                    }
                    kind = Some(match value {
                        "tc" => BifKind::Tc,
                        "pf" => BifKind::Pf,
                        _ => return Err(bad("kind", value, "tc or pf")),
                    });
                }
                "p" => {
                    if p.is_some() {
                        return Err(dup(key));
                    }
                    let n: u32 = value
                        .parse()
                        .map_err(|_| bad("p", value, "an integer in 1..=6"))?;
                    if !(1..=6).contains(&n) {
                        return Err(bad("p", value, "an integer in 1..=6"));
                    }
                    p = Some(n);
                }
                "h" | "alpha" => {
                    let slot = if key == "h" {
                        &mut h_values
                    } else {
                        &mut alpha_values
                    };
                    if slot.is_some() {
                        return Err(dup(key));
                    }
                    let parsed: std::result::Result<Vec<f64>, _> =
                        value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    let list = parsed
                        .map_err(|_| bad(key, value, "a comma-separated list of numbers"))?;
                    if list.is_empty() || list.iter().any(|v| !v.is_finite()) {
                        return Err(bad(key, value, "finite numbers"));
                    }
                    *slot = Some(list);
                }
                "region" => {
                    if region.is_some() {
                        return Err(dup(key));
                    }
                    region = Some(match value {
                        "inner" => Region::Inner,
                        "outer" => Region::Outer,
                        _ => return Err(bad("region", value, "inner or outer")),
                    });
                }
                "tail" => {
                    if tail_name.is_some() {
                        return Err(dup(key));
                    }
                    match value {
                        "zero" | "hp_power" | "sin" => tail_name = Some(value.to_string()),
                        _ => return Err(bad("tail", value, "zero, hp_power, or sin")),
                    }
                }
                "half_plane" => {
                    if half_plane.is_some() {
                        return Err(dup(key));
                    }
                    half_plane = Some(match value {
                        "lower" => HalfPlane::Lower,
                        "upper" => HalfPlane::Upper,
                        _ => return Err(bad("half_plane", value, "lower or upper")),
                    });
                }
                "grid" => {
                    if grid_size.is_some() {
                        return Err(dup(key));
                    }
                    let n: usize = value
                        .parse()
                        .map_err(|_| bad("grid", value, "an integer >= 16"))?;
                    if n < 16 {
                        return Err(bad("grid", value, "an integer >= 16"));
                    }
                    grid_size = Some(n);
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown sweep config key '{other}'"
                    )));
                }
            }
        }
        let missing =
            |what: &str| Error::InvalidInput(format!("sweep config is missing '{what}'"));
        let p = p.ok_or_else(|| missing("p"))?;
        let tail = match tail_name.ok_or_else(|| missing("tail"))?.as_str() {
            "zero" => Tail::Zero,
            "hp_power" => Tail::HpPower(p),
            "sin" => Tail::Sin,
            _ => unreachable!(),
        };
        Ok(SweepConfig {
            kind: kind.ok_or_else(|| missing("kind"))?,
            p,
            h_values: h_values.ok_or_else(|| missing("h"))?,
            alpha_values: alpha_values.ok_or_else(|| missing("alpha"))?,
            region: region.ok_or_else(|| missing("region"))?,
            tail,
            half_plane,
            grid_size: grid_size.unwrap_or(4096),
        })
    }
}

/// One row of a sweep table. `slope_so_far` is the order-fit slope over
/// all step sizes processed so far at this row's `α` (NaN until four
/// measurements are available, or when the sweep is degenerate).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub h: f64,
    pub alpha: f64,
    pub sup: f64,
    pub slope_so_far: f64,
}

/// Result of [`h_sweep`]: rows ordered by the configured `(h, α)` grid,
/// final per-`α` order fits, and the failures encountered (their rows
/// carry NaN sups).
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// `(α, fit)` for each configured α with at least four measurements.
    pub fits: Vec<(f64, OrderFit)>,
    /// All measured sups at or below 1e−12: the two normal forms are
    /// numerically identical and order fitting is skipped.
    pub degenerate: bool,
    /// `(h, α, error)` for cells whose construction or measurement failed.
    pub failures: Vec<(f64, f64, String)>,
}

fn sweep_forms(config: &SweepConfig) -> Result<(NormalForm, NormalForm)> {
    let s = match config.kind {
        BifKind::Tc => 1.0,
        BifKind::Pf => -1.0,
    };
    let make = |tail: Tail| match config.kind {
        BifKind::Tc => make_tc_normal_form(tail, 1.0, s),
        BifKind::Pf => make_pf_normal_form(tail, 1.0, s),
    };
    Ok((make(config.tail.clone())?, make(Tail::Zero)?))
}

fn sweep_half_plane(config: &SweepConfig, alpha: f64) -> HalfPlane {
    if let Some(hp) = config.half_plane {
        return hp;
    }
    match (config.kind, config.region) {
        // The transcritical inner region exists on the half-line carrying
        // the nonzero branch, which flips with the sign of α.
        (BifKind::Tc, Region::Inner) if alpha < 0.0 => HalfPlane::Upper,
        _ => HalfPlane::Lower,
    }
}

/// Builds the configured conjugacy for every `(h, α)` cell, measures
/// `sup |id − J|`, and fits `log sup` against `log h` per `α`. Cells run
/// in parallel; rows are ordered by the configured grid regardless of
/// completion order, and per-cell failures are recorded without aborting
/// the sweep.
pub fn h_sweep(config: &SweepConfig) -> Result<SweepTable> {
    let (target, source) = sweep_forms(config)?;
    let cells: Vec<(f64, f64)> = config
        .h_values
        .iter()
        .flat_map(|&h| config.alpha_values.iter().map(move |&a| (h, a)))
        .collect();
    let sups: Vec<std::result::Result<f64, String>> = cells
        .par_iter()
        .map(|&(h, alpha)| {
            let half = sweep_half_plane(config, alpha);
            let strict = BuildOptions::default();
            let built = match build_conjugacy_with(
                &target,
                &source,
                h,
                alpha,
                config.region,
                half,
                &strict,
            ) {
                Ok(j) => Ok(j),
                Err(Error::ConstraintViolation(_)) => {
                    let relaxed = BuildOptions {
                        z0: None,
                        seq: SequenceOptions {
                            allow_outside_box: true,
                            ..SequenceOptions::default()
                        },
                    };
                    build_conjugacy_with(
                        &target,
                        &source,
                        h,
                        alpha,
                        config.region,
                        half,
                        &relaxed,
                    )
                }
                Err(e) => Err(e),
            };
            built
                .and_then(|j| sup_id_minus_j(&j, config.grid_size))
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut failures = Vec::new();
    let mut ok_sups = Vec::new();
    for (&(h, alpha), s) in cells.iter().zip(&sups) {
        match s {
            Ok(v) => ok_sups.push(*v),
            Err(e) => failures.push((h, alpha, e.clone())),
        }
    }
    let degenerate = !ok_sups.is_empty() && ok_sups.iter().all(|&s| s <= 1e-12);

    let mut rows = Vec::with_capacity(cells.len());
    for (i, (&(h, alpha), s)) in cells.iter().zip(&sups).enumerate() {
        let sup = *s.as_ref().unwrap_or(&f64::NAN);
        let slope_so_far = if degenerate {
            f64::NAN
        } else {
            let (mut hs, mut ss) = (Vec::new(), Vec::new());
            for (&(hh, aa), prev) in cells.iter().zip(&sups).take(i + 1) {
                if aa == alpha {
                    if let Ok(v) = prev {
                        if *v > 0.0 {
                            hs.push(hh);
                            ss.push(*v);
                        }
                    }
                }
            }
            match order_fit(&hs, &ss) {
                Ok(f) => f.slope,
                Err(_) => f64::NAN,
            }
        };
        rows.push(SweepRow {
            h,
            alpha,
            sup,
            slope_so_far,
        });
    }

    let mut fits = Vec::new();
    if !degenerate {
        for &alpha in &config.alpha_values {
            let (mut hs, mut ss) = (Vec::new(), Vec::new());
            for (&(hh, aa), s) in cells.iter().zip(&sups) {
                if aa == alpha {
                    if let Ok(v) = s {
                        if *v > 0.0 {
                            hs.push(hh);
                            ss.push(*v);
                        }
                    }
                }
            }
            if let Ok(f) = order_fit(&hs, &ss) {
                fits.push((alpha, f));
            }
        }
    }
    Ok(SweepTable {
        rows,
        fits,
        degenerate,
        failures,
    })
}

/// One sample of a planar model orbit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PortraitRow {
    pub point_id: usize,
    pub n: usize,
    pub x: f64,
    pub y: f64,
}

/// Planar orbits of the decoupled model system `x' = αx + x²`, `y' = −y`
/// under the exact time-`nh` flow: rows `(point_id, n, x_n, y_n)` for
/// `n = 0..=N` per initial point, with `x_n = Φ(nh, x₀, α)` through the
/// semi-group closed form and `y_n = y₀·e^{−nh}`. Pole errors from orbits
/// that blow up in finite time are propagated.
pub fn portrait_orbits(
    h: f64,
    alpha: f64,
    initial_points: &[(f64, f64)],
    n_steps: usize,
) -> Result<Vec<PortraitRow>> {
    if !(h > 0.0) || !h.is_finite() || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need finite h > 0 and finite alpha, got h = {h:e}, alpha = {alpha:e}"
        )));
    }
    if initial_points.is_empty() {
        return Err(Error::InvalidInput(
            "portrait needs at least one initial point".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(initial_points.len() * (n_steps + 1));
    for (point_id, &(x0, y0)) in initial_points.iter().enumerate() {
        if !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "initial point {point_id} is not finite: ({x0:e}, {y0:e})"
            )));
        }
        for n in 0..=n_steps {
            let t = n as f64 * h;
            let x = if n == 0 {
                x0
            } else {
                tc_model_exact_flow(t, x0, alpha)?
            };
            rows.push(PortraitRow {
                point_id,
                n,
                x,
                y: model_y_flow(t, y0),
            });
        }
    }
    Ok(rows)
}

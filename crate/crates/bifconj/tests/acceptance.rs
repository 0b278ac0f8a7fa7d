//! End-to-end acceptance gate: the ten headline guarantees of the library,
//! each checked at its stated tolerance and wall-clock budget. One PASS/FAIL
//! line is printed per criterion (run with `--nocapture` to see them on
//! success; on failure the summary panics with every failing line).

use std::time::Instant;

use bifconj::conjugacy::{
    build_conjugacy_with, conjugacy_residual, BuildOptions, ConjugacyMap, SequenceOptions,
};
use bifconj::estimates::{catalog_pair, fixed_point_gap_relaxed, run_suite, EstimateReport};
use bifconj::experiments::{
    compute_alignment, delta_sequence, h_sweep, orbit_closeness_experiment, SweepConfig,
};
use bifconj::fixedpoints::{classify_bifurcation, find_fixed_points, Verdict};
use bifconj::maps::{CatalogMap, Tail};
use bifconj::{BifKind, Error, HalfPlane, Region};

const SEED: u64 = 42;

/// Runs one criterion body, enforces its wall-clock budget, and prints the
/// PASS/FAIL line. The body returns a short success detail or a failure
/// description.
fn run_criterion(
    failures: &mut Vec<String>,
    idx: usize,
    budget_s: f64,
    label: &str,
    body: impl FnOnce() -> Result<String, String>,
) {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed().as_secs_f64();
    let line = match &outcome {
        Ok(detail) if elapsed <= budget_s => {
            format!("criterion {idx:2}  PASS  {elapsed:7.2} s / {budget_s:3.0} s  {label}: {detail}")
        }
        Ok(detail) => format!(
            "criterion {idx:2}  FAIL  {elapsed:7.2} s / {budget_s:3.0} s  {label}: \
             over budget ({detail})"
        ),
        Err(why) => {
            format!("criterion {idx:2}  FAIL  {elapsed:7.2} s / {budget_s:3.0} s  {label}: {why}")
        }
    };
    println!("{line}");
    if !line.contains("  PASS  ") {
        failures.push(line);
    }
}

/// Asserts that every report in a named suite passed; returns a count line.
fn suite_all_pass(names: &[&str]) -> Result<String, String> {
    let mut total = 0usize;
    for name in names {
        let reports = run_suite(name, SEED).map_err(|e| format!("suite {name} errored: {e}"))?;
        let bad: Vec<&EstimateReport> = reports.iter().filter(|r| !r.passed).collect();
        if !bad.is_empty() {
            return Err(format!(
                "suite {name}: {}/{} reports failed; first: {} measured {:e} vs bound {:e} ({:?})",
                bad.len(),
                reports.len(),
                bad[0].name,
                bad[0].measured,
                bad[0].bound,
                bad[0].context.detail
            ));
        }
        total += reports.len();
    }
    Ok(format!("{total} reports, zero violations"))
}

/// The (kind, p, h, α, region, half-plane) lattice shared by criteria 2
/// and 4: inner cells only where the region exists for the sign of α,
/// outer cells everywhere.
fn lattice_cells() -> Vec<(BifKind, u32, f64, f64, Region, HalfPlane)> {
    let mut cells = Vec::new();
    for kind in [BifKind::Tc, BifKind::Pf] {
        for p in [1u32, 2] {
            for h in [0.1f64, 0.05] {
                for alpha in [0.005f64, 0.002, -0.005, -0.002] {
                    match kind {
                        BifKind::Tc => {
                            let half = if alpha > 0.0 {
                                HalfPlane::Lower
                            } else {
                                HalfPlane::Upper
                            };
                            cells.push((kind, p, h, alpha, Region::Inner, half));
                        }
                        BifKind::Pf if alpha > 0.0 => {
                            for half in [HalfPlane::Lower, HalfPlane::Upper] {
                                cells.push((kind, p, h, alpha, Region::Inner, half));
                            }
                        }
                        BifKind::Pf => {}
                    }
                    for half in [HalfPlane::Lower, HalfPlane::Upper] {
                        cells.push((kind, p, h, alpha, Region::Outer, half));
                    }
                }
            }
        }
    }
    cells
}

/// Builds the catalog-pair conjugacy for one lattice cell, falling back to
/// the relaxed (outside-box) build only when the strict one rejects the
/// parameters.
fn build_lattice_cell(
    kind: BifKind,
    p: u32,
    h: f64,
    alpha: f64,
    region: Region,
    half: HalfPlane,
) -> Result<ConjugacyMap, String> {
    let (big, small) = catalog_pair(kind, p).map_err(|e| e.to_string())?;
    match build_conjugacy_with(&big, &small, h, alpha, region, half, &BuildOptions::default()) {
        Ok(j) => Ok(j),
        Err(Error::ConstraintViolation(_)) => {
            let relaxed = BuildOptions {
                z0: None,
                seq: SequenceOptions {
                    allow_outside_box: true,
                    ..SequenceOptions::default()
                },
            };
            build_conjugacy_with(&big, &small, h, alpha, region, half, &relaxed)
                .map_err(|e| format!("relaxed build failed: {e}"))
        }
        Err(e) => Err(format!("build failed: {e}")),
    }
}

fn criterion_1_decay_oracle() -> Result<String, String> {
    suite_all_pass(&["huls"])
}

fn criterion_2_conjugacy_residual() -> Result<String, String> {
    let cells = lattice_cells();
    let mut worst = 0.0f64;
    for &(kind, p, h, alpha, region, half) in &cells {
        let cell = format!("{kind} p={p} h={h} alpha={alpha} {region} {half}");
        let j = build_lattice_cell(kind, p, h, alpha, region, half)
            .map_err(|e| format!("{cell}: {e}"))?;
        let residual = conjugacy_residual(&j, 1024).map_err(|e| format!("{cell}: {e}"))?;
        if residual > 1e-10 {
            return Err(format!("{cell}: residual {residual:e} > 1e-10"));
        }
        worst = worst.max(residual);
    }
    Ok(format!(
        "{} cells on 1024-point grids, worst residual {worst:e} <= 1e-10",
        cells.len()
    ))
}

fn criterion_3_envelopes() -> Result<String, String> {
    suite_all_pass(&["tc-envelopes", "pf-envelopes"])
}

fn criterion_4_explicit_bounds() -> Result<String, String> {
    let sups = suite_all_pass(&["tc-bounds", "pf-bounds"])?;
    // Fixed-point gap upper bounds on the same (p, h) lattice, α > 0 where
    // the bifurcating branch exists.
    let mut gaps = 0usize;
    for kind in [BifKind::Tc, BifKind::Pf] {
        for p in [1u32, 2] {
            for h in [0.1f64, 0.05] {
                for alpha in [0.005f64, 0.002] {
                    let (big, small) = catalog_pair(kind, p).map_err(|e| e.to_string())?;
                    let report = fixed_point_gap_relaxed(&big, &small, h, alpha)
                        .map_err(|e| format!("gap {kind} p={p} h={h} alpha={alpha}: {e}"))?;
                    if !report.passed {
                        return Err(format!(
                            "gap {kind} p={p} h={h} alpha={alpha}: measured {:e} > bound {:e}",
                            report.measured, report.bound
                        ));
                    }
                    gaps += 1;
                }
            }
        }
    }
    Ok(format!("sup bounds: {sups}; {gaps} gap bounds, zero violations"))
}

fn criterion_5_optimality() -> Result<String, String> {
    suite_all_pass(&["optimality"])
}

fn criterion_6_order_fit() -> Result<String, String> {
    let mut details = Vec::new();
    for p in [1u32, 2] {
        let config = SweepConfig {
            kind: BifKind::Tc,
            p,
            h_values: vec![0.1, 0.05, 0.025, 0.0125],
            alpha_values: vec![0.005],
            region: Region::Inner,
            tail: Tail::HpPower(p),
            half_plane: None,
            grid_size: 4096,
        };
        let table = h_sweep(&config).map_err(|e| format!("sweep p={p}: {e}"))?;
        if !table.failures.is_empty() {
            return Err(format!("sweep p={p}: cell failures {:?}", table.failures));
        }
        if table.degenerate || table.fits.len() != 1 {
            return Err(format!(
                "sweep p={p}: degenerate={} fits={}",
                table.degenerate,
                table.fits.len()
            ));
        }
        let slope = table.fits[0].1.slope;
        if (slope - p as f64).abs() > 0.15 {
            return Err(format!("sweep p={p}: slope {slope:.4} outside {p} +/- 0.15"));
        }
        details.push(format!("p={p}: slope {slope:.3}"));
    }
    Ok(details.join(", "))
}

fn criterion_7_rk_structure() -> Result<String, String> {
    suite_all_pass(&["rk-conditions"])
}

fn criterion_8_classification() -> Result<String, String> {
    // Constant-defect quadratic example: fixed points exist exactly when
    // the fixed-point equation's discriminant α² − 4h^{2p} is positive.
    for p in [1u32, 2] {
        for h in [0.1f64, 0.05] {
            let threshold = 2.0 * h.powi(p as i32);
            for factor in [0.5f64, 1.5, -0.5, -1.5] {
                let alpha = factor * threshold;
                let discriminant = alpha * alpha - threshold * threshold;
                let map = CatalogMap::PerturbedConstant2p { p };
                let scan = find_fixed_points(&map, h, alpha, (-1.0, 1.0))
                    .map_err(|e| format!("scan p={p} h={h} alpha={alpha}: {e}"))?;
                if scan.points.is_empty() != (discriminant < 0.0) {
                    return Err(format!(
                        "constant-defect map at p={p}, h={h}, alpha={alpha}: \
                         {} fixed points but discriminant {discriminant:e}",
                        scan.points.len()
                    ));
                }
            }
        }
    }

    // Near-miss examples must never classify as pitchfork: the classifier
    // has to resolve the constant defect (order h^{3p+1}), the small
    // quadratic term (order h^{p+1}), and the multiplier shift (h^{p+1}).
    let not_pf: Vec<(CatalogMap, f64)> = vec![
        (CatalogMap::PerturbedConstant3p { p: 1 }, 0.1),
        (CatalogMap::PerturbedConstant3p { p: 1 }, 0.05),
        (CatalogMap::PerturbedConstant3p { p: 2 }, 0.15),
        (CatalogMap::SmallQuadratic { p: 1 }, 0.1),
        (CatalogMap::SmallQuadratic { p: 2 }, 0.05),
        (CatalogMap::ShiftedMultiplier { p: 1 }, 0.1),
        (CatalogMap::ShiftedMultiplier { p: 2 }, 0.05),
    ];
    for (map, h) in not_pf {
        let class = classify_bifurcation(&map, h).map_err(|e| e.to_string())?;
        if class.verdict == Verdict::Pitchfork {
            return Err(format!(
                "{} at h={h} classified as pitchfork",
                map.name()
            ));
        }
    }

    // Negative-discriminant example, and the two normal forms themselves.
    let wiggins = classify_bifurcation(&CatalogMap::WigginsCounterexample, 0.1)
        .map_err(|e| e.to_string())?;
    if wiggins.verdict != Verdict::None {
        return Err(format!("negative-discriminant example: {}", wiggins.verdict));
    }
    match wiggins.discriminant {
        Some(d) if d < 0.0 => {}
        other => return Err(format!("expected negative discriminant, got {other:?}")),
    }
    let tc = classify_bifurcation(&CatalogMap::TcPhi, 0.1).map_err(|e| e.to_string())?;
    if tc.verdict != Verdict::Transcritical {
        return Err(format!("transcritical form classified as {}", tc.verdict));
    }
    let pf = classify_bifurcation(&CatalogMap::PfPhi, 0.1).map_err(|e| e.to_string())?;
    if pf.verdict != Verdict::Pitchfork {
        return Err(format!("pitchfork form classified as {}", pf.verdict));
    }
    Ok("gap law, seven not-pitchfork verdicts, none/tc/pf verdicts".to_string())
}

fn criterion_9_alignment() -> Result<String, String> {
    let (h, alpha, x0, n) = (1e-3f64, -0.5f64, -1.0f64, 3000usize);
    let pair = compute_alignment(h, alpha).map_err(|e| e.to_string())?;
    let tol = (alpha * h).abs().powi(6);
    if pair.series_check.alpha_tilde > tol || pair.series_check.rho > tol {
        return Err(format!(
            "series residuals {:e}/{:e} exceed |alpha h|^6 = {tol:e}",
            pair.series_check.alpha_tilde, pair.series_check.rho
        ));
    }

    let base = delta_sequence(h, x0, alpha, n).map_err(|e| e.to_string())?;
    let half_sup = base.values[..=n / 2]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if base.sup > 1.05 * half_sup {
        return Err(format!(
            "no plateau: sup {:e} over {n} steps vs {half_sup:e} over {}",
            base.sup,
            n / 2
        ));
    }

    let perturbed =
        orbit_closeness_experiment(h, x0, alpha, n, 1e-7).map_err(|e| e.to_string())?;
    if perturbed.sup < 10.0 * base.sup {
        return Err(format!(
            "perturbation ratio {:.2} < 10",
            perturbed.sup / base.sup
        ));
    }
    Ok(format!(
        "series residuals {:.1e}/{:.1e}, plateau ratio {:.4}, perturbation ratio {:.0}",
        pair.series_check.alpha_tilde,
        pair.series_check.rho,
        base.sup / half_sup,
        perturbed.sup / base.sup
    ))
}

fn criterion_10_decay_and_monotonicity() -> Result<String, String> {
    suite_all_pass(&["zn-decay", "alpha-monotonicity"])
}

#[test]
fn acceptance() {
    let mut failures = Vec::new();
    run_criterion(&mut failures, 1, 1.0, "decay recursion closed form", || {
        criterion_1_decay_oracle()
    });
    run_criterion(&mut failures, 2, 30.0, "conjugacy residuals", || {
        criterion_2_conjugacy_residual()
    });
    run_criterion(&mut failures, 3, 60.0, "envelope sandwiches", || {
        criterion_3_envelopes()
    });
    run_criterion(&mut failures, 4, 120.0, "explicit-constant bounds", || {
        criterion_4_explicit_bounds()
    });
    run_criterion(&mut failures, 5, 5.0, "fixed-point gap optimality", || {
        criterion_5_optimality()
    });
    run_criterion(&mut failures, 6, 60.0, "order fit over h", || {
        criterion_6_order_fit()
    });
    run_criterion(&mut failures, 7, 5.0, "runge-kutta preservation", || {
        criterion_7_rk_structure()
    });
    run_criterion(&mut failures, 8, 10.0, "counterexample classification", || {
        criterion_8_classification()
    });
    run_criterion(&mut failures, 9, 60.0, "orbit alignment experiment", || {
        criterion_9_alignment()
    });
    run_criterion(&mut failures, 10, 30.0, "decay and monotonicity", || {
        criterion_10_decay_and_monotonicity()
    });
    assert!(
        failures.is_empty(),
        "acceptance failures:\n{}",
        failures.join("\n")
    );
}

//! End-to-end experiment pipeline: validate the coefficient assumptions,
//! solve the free-boundary problem, extract and check the free boundary,
//! measure the barrier constants, verify the super-solution flux, measure
//! porosity and the box-counting dimension, and write all artifacts.
//!
//! Every stage is deterministic; the only non-reproducible output, the
//! wall-clock log, goes to its own file so the main report is byte-stable
//! across identical runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::barrier::{
    clearance_radius, estimate_c2, gradient_trace_bound, measure_c1, solve_barrier,
    supersolution_flux_check, BarrierConstants, BarrierGrid, TraceSample,
};
use crate::config::RunConfig;
use crate::domain::{validate_assumptions, ValidationReport};
use crate::error::{Error, Result};
use crate::free_boundary::{check_structure, extract_profile, fb_cells, StructureReport};
use crate::grid::GridField;
use crate::linsolve::LinearSolveInfo;
use crate::porosity::{
    box_dimension, porosity_sweep, predicted_constants, DimensionFit, PorositySweep, SweepOptions,
};
use crate::report::{fmt_float, write_field_csv, write_json, write_rows_csv, Timings};
use crate::solver::{residual_report, solve_vi, ResidualMetrics, SolverParams};

/// Which stages to run after validation.
#[derive(Debug, Clone, Copy)]
pub struct StageSet {
    pub solve: bool,
    pub barrier: bool,
    pub porosity: bool,
    pub dimension: bool,
}

impl StageSet {
    pub fn all() -> Self {
        Self { solve: true, barrier: true, porosity: true, dimension: true }
    }

    pub fn validate_only() -> Self {
        Self { solve: false, barrier: false, porosity: false, dimension: false }
    }

    pub fn solve_only() -> Self {
        Self { solve: true, barrier: false, porosity: false, dimension: false }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub force: bool,
    /// Overrides the config's output directory.
    pub out_dir: Option<PathBuf>,
    pub stages: StageSet,
}

/// Domain facts echoed into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSummary {
    pub dim: usize,
    pub rho: f64,
    pub l: f64,
    pub grid_shape: Vec<usize>,
    pub h_grid: f64,
    pub gamma: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub converged: bool,
    pub complementarity: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
    pub residuals: ResidualMetrics,
    pub last_linear: Option<LinearSolveInfo>,
}

/// Closed-form reference available for single-column runs with constant
/// coefficients: the pressure is the positive part of an affine profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticColumnCheck {
    pub level: f64,
    pub support_end: f64,
    pub sup_error: f64,
    pub phi_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBoundarySummary {
    pub cells: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub u_threshold: f64,
    /// Cover cells divided by total grid cells.
    pub cell_fraction: f64,
}

/// One bounds check of a solved cap problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsCheck {
    pub epsilon: f64,
    pub r: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub bound: f64,
    pub within_bounds: bool,
    pub graph_max_abs: f64,
    pub trace_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluxSummary {
    pub epsilon: f64,
    pub r: f64,
    pub min_flux: f64,
    pub pass: bool,
    pub samples: usize,
    pub trace_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierStage {
    pub constants: BarrierConstants,
    pub c2_samples: Vec<TraceSample>,
    pub bounds_sweep: Vec<BoundsCheck>,
    pub flux_sweep: Vec<FluxSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorosityStage {
    pub c0: f64,
    pub delta: f64,
    pub delta0: f64,
    pub radii: Vec<f64>,
    pub min_delta_hat: Option<f64>,
    pub slack: Option<f64>,
    pub pass: Option<bool>,
    pub measurements: usize,
    pub degenerate: usize,
    pub constructive: usize,
    pub constructive_contradictions: usize,
    pub constructive_floor_failures: usize,
    pub constructive_delta0_clear: bool,
}

/// The full porosity artifact written to `porosity.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PorosityArtifact {
    pub constants: BarrierConstants,
    pub c0: f64,
    pub delta: f64,
    pub delta0: f64,
    pub sweep: PorositySweep,
    pub dimension: Option<DimensionFit>,
}

/// Entry of the exported barrier sweep array.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub epsilon: f64,
    pub r: f64,
    pub trace_bound: f64,
    pub flux_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub domain: DomainSummary,
    pub validation: ValidationReport,
    pub validation_passed: bool,
    pub forced: bool,
    pub solve: Option<SolveSummary>,
    pub analytic_column: Option<AnalyticColumnCheck>,
    pub structure: Option<StructureReport>,
    pub free_boundary: Option<FreeBoundarySummary>,
    pub barrier: Option<BarrierStage>,
    pub porosity: Option<PorosityStage>,
    pub dimension: Option<DimensionFit>,
    pub notes: Vec<String>,
    pub manifest: Vec<String>,
    pub timings_file: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub aborted_on_validation: bool,
    pub solver_converged: Option<bool>,
    pub out_dir: PathBuf,
}

/// Runs the configured stages and writes every artifact under the output
/// directory. Validation failures abort (without `force`) after writing the
/// report; solver non-convergence is recorded, not fatal.
pub fn run_pipeline(cfg: &RunConfig, opts: &PipelineOptions) -> Result<RunOutcome> {
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    std::fs::create_dir_all(&out_dir)?;
    let mut timings = Timings::default();
    let mut manifest: Vec<String> = Vec::new();
    let mut notes: Vec<String> = Vec::new();

    let t = Instant::now();
    let spec = cfg.build_domain()?;
    let cf = cfg.build_coefficients(&spec)?;
    let bc = cfg.build_boundary(&spec)?;
    timings.record("setup", t.elapsed().as_secs_f64());

    let domain = DomainSummary {
        dim: spec.dim(),
        rho: spec.rho,
        l: spec.l,
        grid_shape: spec.grid().shape().to_vec(),
        h_grid: spec.h_grid(),
        gamma: cfg.gamma_src.clone(),
    };

    let t = Instant::now();
    let validation = validate_assumptions(&cf, cfg.tol_mono);
    timings.record("validate", t.elapsed().as_secs_f64());
    let validation_passed = validation.passed();

    let mut report = RunReport {
        config: cfg.name.clone(),
        domain,
        validation,
        validation_passed,
        forced: opts.force,
        solve: None,
        analytic_column: None,
        structure: None,
        free_boundary: None,
        barrier: None,
        porosity: None,
        dimension: None,
        notes: Vec::new(),
        manifest: Vec::new(),
        timings_file: "timings.txt".into(),
    };

    if !validation_passed && !opts.force {
        if let Some(fail) = report.validation.first_failure() {
            report.notes.push(format!("aborted: {} failed ({})", fail.name, fail.detail));
        }
        finalize(&out_dir, &mut report, manifest, &timings)?;
        return Ok(RunOutcome {
            report,
            aborted_on_validation: true,
            solver_converged: None,
            out_dir,
        });
    }
    if !validation_passed {
        notes.push("validation failed but the run was forced".into());
    }

    let mut solver_converged = None;
    let mut sol_opt = None;
    let mut fb_opt = None;
    let params = cfg.solver_params(spec.grid());

    if opts.stages.solve {
        let t = Instant::now();
        let sol = solve_vi(&cf, &bc, &params)?;
        timings.record("solve", t.elapsed().as_secs_f64());
        solver_converged = Some(sol.converged);
        if !sol.converged {
            notes.push(format!(
                "solver hit the iteration cap ({}); best iterate reported",
                params.max_iterations
            ));
        }
        let residuals = residual_report(&sol, &cf)?;
        report.solve = Some(SolveSummary {
            iterations: sol.iterations,
            converged: sol.converged,
            complementarity: sol.complementarity,
            u_min: sol.u.min(),
            u_max: sol.u.max(),
            chi_min: sol.chi.min(),
            chi_max: sol.chi.max(),
            residuals,
            last_linear: sol.last_linear.clone(),
        });
        write_field_csv(&out_dir.join("solution.csv"), &["u", "chi"], &[&sol.u, &sol.chi])?;
        manifest.push("solution.csv".into());

        report.analytic_column = analytic_column_check(cfg, &spec, &bc, &sol, &params);

        let t = Instant::now();
        let profile = extract_profile(&sol, params.u_threshold)?;
        let fb = fb_cells(&profile, spec.grid());
        let structure = check_structure(&sol, params.u_threshold)?;
        timings.record("free-boundary", t.elapsed().as_secs_f64());

        let phi_rows: Vec<Vec<f64>> = profile
            .lateral_points
            .iter()
            .zip(&profile.phi)
            .map(|(lat, phi)| {
                let mut row = lat.clone();
                row.push(*phi);
                row
            })
            .collect();
        let mut phi_header: Vec<String> =
            (1..spec.dim()).map(|d| format!("x{d}")).collect();
        phi_header.push("phi".into());
        let phi_header_refs: Vec<&str> = phi_header.iter().map(|s| s.as_str()).collect();
        write_rows_csv(&out_dir.join("phi.csv"), &phi_header_refs, &phi_rows)?;
        manifest.push("phi.csv".into());

        let cell_rows: Vec<Vec<f64>> = fb.centers.clone();
        let cell_header: Vec<String> = (1..=spec.dim()).map(|d| format!("x{d}")).collect();
        let cell_header_refs: Vec<&str> = cell_header.iter().map(|s| s.as_str()).collect();
        write_rows_csv(&out_dir.join("fb_cells.csv"), &cell_header_refs, &cell_rows)?;
        manifest.push("fb_cells.csv".into());

        let total_cells: usize =
            spec.grid().shape().iter().map(|&c| c - 1).product::<usize>().max(1);
        report.free_boundary = Some(FreeBoundarySummary {
            cells: fb.len(),
            phi_min: profile.phi.iter().cloned().fold(f64::INFINITY, f64::min),
            phi_max: profile.phi.iter().cloned().fold(0.0, f64::max),
            u_threshold: params.u_threshold,
            cell_fraction: fb.len() as f64 / total_cells as f64,
        });
        report.structure = Some(structure);
        sol_opt = Some(sol);
        fb_opt = Some(fb);
    }

    if opts.stages.barrier {
        if spec.dim() < 2 {
            notes.push("barrier stage skipped: needs at least one lateral axis".into());
        } else if let Some(sol) = &sol_opt {
            let t = Instant::now();
            let x0 = match &cfg.barrier_x0 {
                Some(x0) => x0.clone(),
                None => {
                    let mut c = vec![0.0; spec.dim()];
                    c[spec.dim() - 1] = spec.l / 2.0;
                    c
                }
            };
            let r0 = clearance_radius(&spec, &x0)?;
            let c1 = measure_c1(sol, &x0, r0);
            let cutoff = crate::barrier::make_cutoff();
            let grid_spec = BarrierGrid::Local { nodes_per_r: cfg.nodes_per_r };
            let c2est = estimate_c2(&cf, &x0, &cfg.barrier_epsilons, &grid_spec)?;
            let eps0 = crate::barrier::epsilon0(
                cf.h_lower,
                c2est.c2,
                cf.sigma_bound,
                cutoff.theta0,
                cf.p,
                spec.dim(),
            )?;
            let r1 = r0.min(eps0);
            let constants = BarrierConstants {
                x0: x0.clone(),
                r0,
                c1,
                c2: c2est.c2,
                c3: cf.sigma_bound * c1 + cf.h_upper,
                theta0: cutoff.theta0,
                epsilon0: eps0,
                r1,
            };

            // Bounds sweep: every configured data size at every working radius.
            let radii: Vec<f64> = cfg
                .flux_radius_fractions
                .iter()
                .map(|f| f * r1)
                .filter(|r| *r > 0.0 && 2.0 * *r <= r0)
                .collect();
            let mut bounds_sweep = Vec::new();
            let mut sweep_entries: Vec<SweepEntry> = Vec::new();
            for &eps in &cfg.barrier_epsilons {
                for &r in &radii {
                    let inst = solve_barrier(&cf, &x0, r, eps, &grid_spec)?;
                    let bound = eps * r;
                    let trace = gradient_trace_bound(&inst);
                    bounds_sweep.push(BoundsCheck {
                        epsilon: eps,
                        r,
                        v_min: inst.v_min,
                        v_max: inst.v_max,
                        bound,
                        within_bounds: inst.v_min >= 0.0 && inst.v_max <= bound,
                        graph_max_abs: inst.graph_max_abs,
                        trace_bound: trace,
                    });
                    sweep_entries.push(SweepEntry {
                        epsilon: eps,
                        r,
                        trace_bound: trace,
                        flux_min: None,
                    });
                    let name = format!("barrier_{eps:.6e}_{r:.6e}.csv");
                    write_field_csv(&out_dir.join(&name), &["v"], &[&inst.v])?;
                    manifest.push(name);
                }
            }

            // Super-solution flux sweep at the derived data size.
            let mut flux_sweep = Vec::new();
            for &r in &radii {
                if r >= r1 {
                    continue;
                }
                let inst = solve_barrier(&cf, &x0, r, eps0, &grid_spec)?;
                let trace = gradient_trace_bound(&inst);
                let fluxes =
                    supersolution_flux_check(&inst, &cf, &constants, 1e-6 * cf.h_upper)?;
                flux_sweep.push(FluxSummary {
                    epsilon: eps0,
                    r,
                    min_flux: fluxes.min_flux,
                    pass: fluxes.pass,
                    samples: fluxes.samples.len(),
                    trace_bound: trace,
                });
                sweep_entries.push(SweepEntry {
                    epsilon: eps0,
                    r,
                    trace_bound: trace,
                    flux_min: Some(fluxes.min_flux),
                });
            }
            write_json(&out_dir.join("barrier_sweep.json"), &sweep_entries)?;
            manifest.push("barrier_sweep.json".into());
            timings.record("barrier", t.elapsed().as_secs_f64());

            report.barrier = Some(BarrierStage {
                constants,
                c2_samples: c2est.samples,
                bounds_sweep,
                flux_sweep,
            });
        } else {
            notes.push("barrier stage skipped: no solution".into());
        }
    }

    if opts.stages.porosity {
        match (&sol_opt, &fb_opt, &report.barrier) {
            (Some(sol), Some(fb), Some(stage)) if !fb.is_empty() => {
                if stage.constants.c1 > 0.0 {
                    let t = Instant::now();
                    let (c0, delta, delta0) =
                        predicted_constants(stage.constants.c1, stage.constants.epsilon0)?;
                    let radii: Vec<f64> = cfg
                        .porosity_radius_fractions
                        .iter()
                        .map(|f| f * stage.constants.r1)
                        .filter(|r| *r > 0.0 && *r < stage.constants.r1)
                        .collect();
                    let sweep_opts = SweepOptions {
                        constructive_stride: cfg.fb_sample_stride,
                        search_resolution: cfg.search_resolution,
                        u_threshold: params.u_threshold,
                    };
                    let sweep =
                        porosity_sweep(fb, sol, &radii, c0, delta, delta0, &sweep_opts)?;
                    timings.record("porosity", t.elapsed().as_secs_f64());

                    let porosity_rows: Vec<Vec<f64>> = sweep
                        .measurements
                        .iter()
                        .map(|m| {
                            let mut row = m.x0.clone();
                            row.push(m.r);
                            row.push(m.delta_hat);
                            row.extend(m.witness.iter());
                            row
                        })
                        .collect();
                    let mut header: Vec<String> =
                        (1..=spec.dim()).map(|d| format!("x{d}")).collect();
                    header.push("r".into());
                    header.push("delta_hat".into());
                    for d in 1..=spec.dim() {
                        header.push(format!("witness_x{d}"));
                    }
                    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
                    write_rows_csv(&out_dir.join("porosity.csv"), &header_refs, &porosity_rows)?;
                    manifest.push("porosity.csv".into());

                    report.porosity = Some(PorosityStage {
                        c0,
                        delta,
                        delta0,
                        radii: radii.clone(),
                        min_delta_hat: sweep.min_delta_hat,
                        slack: sweep.slack,
                        pass: sweep.pass,
                        measurements: sweep.measurements.len(),
                        degenerate: sweep.measurements.iter().filter(|m| m.degenerate).count(),
                        constructive: sweep.constructive.len(),
                        constructive_contradictions: sweep
                            .constructive
                            .iter()
                            .filter(|w| w.contradiction)
                            .count(),
                        constructive_floor_failures: sweep
                            .constructive
                            .iter()
                            .filter(|w| !w.contradiction && !w.exceeds_floor)
                            .count(),
                        constructive_delta0_clear: sweep
                            .constructive
                            .iter()
                            .filter(|w| !w.contradiction)
                            .all(|w| w.delta0_ball_clear),
                    });

                    // Full artifact, dimension fit attached below if it runs.
                    let artifact = PorosityArtifact {
                        constants: stage.constants.clone(),
                        c0,
                        delta,
                        delta0,
                        sweep,
                        dimension: None,
                    };
                    write_json(&out_dir.join("porosity.json"), &artifact)?;
                    manifest.push("porosity.json".into());
                } else {
                    notes.push("porosity stage skipped: zero measured gradient bound".into());
                }
            }
            (_, Some(fb), _) if fb.is_empty() => {
                notes.push("porosity stage skipped: empty free boundary".into());
            }
            _ => notes.push("porosity stage skipped: missing prerequisites".into()),
        }
    }

    if opts.stages.dimension {
        if let Some(fb) = &fb_opt {
            if fb.is_empty() {
                notes.push("dimension stage skipped: empty free boundary".into());
            } else {
                let t = Instant::now();
                let fit = box_dimension(fb, &cfg.dimension_scales, spec.grid().origin())?;
                timings.record("dimension", t.elapsed().as_secs_f64());
                report.dimension = Some(fit);
            }
        } else {
            notes.push("dimension stage skipped: no solution".into());
        }
    }

    report.notes = notes;
    finalize(&out_dir, &mut report, manifest, &timings)?;
    Ok(RunOutcome { report, aborted_on_validation: false, solver_converged, out_dir })
}

fn finalize(
    out_dir: &Path,
    report: &mut RunReport,
    mut manifest: Vec<String>,
    timings: &Timings,
) -> Result<()> {
    timings.write(&out_dir.join("timings.txt"))?;
    manifest.push("timings.txt".into());
    manifest.push("run_report.json".into());
    manifest.sort();
    report.manifest = manifest;
    write_json(&out_dir.join("run_report.json"), report)?;
    Ok(())
}

fn analytic_column_check(
    cfg: &RunConfig,
    spec: &crate::domain::DomainSpec,
    bc: &crate::solver::BoundaryData,
    sol: &crate::solver::Solution,
    params: &SolverParams,
) -> Option<AnalyticColumnCheck> {
    if spec.dim() != 1 {
        return None;
    }
    let grid = spec.grid();
    // Constant coefficients make the column profile affine up to its support.
    let a0 = sol_coeff_constant(&cfg.a_src)?;
    let h0 = sol_coeff_constant(std::slice::from_ref(&cfg.h_src))?;
    let level = bc.values.values[0];
    if level <= 0.0 {
        return None;
    }
    let support_end = level * a0 / h0;
    if support_end >= spec.l {
        return None;
    }
    let exact = GridField::from_fn(grid, |p| (level - (h0 / a0) * p[0]).max(0.0));
    let sup_error = sol.u.sup_distance(&exact);
    let profile = extract_profile(sol, params.u_threshold).ok()?;
    let phi_error = (profile.phi[0] - support_end).abs();
    Some(AnalyticColumnCheck { level, support_end, sup_error, phi_error })
}

fn sol_coeff_constant(srcs: &[String]) -> Option<f64> {
    // Treat plain numeric literals as constants.
    if srcs.len() != 1 {
        return None;
    }
    srcs[0].trim().parse::<f64>().ok()
}

/// Renders a run report as a human-readable summary.
pub fn render_summary(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("run: {}\n", report.config));
    out.push_str(&format!(
        "domain: n={} rho={} l={} grid={:?} h={}\n",
        report.domain.dim,
        fmt_float(report.domain.rho),
        fmt_float(report.domain.l),
        report.domain.grid_shape,
        fmt_float(report.domain.h_grid),
    ));
    out.push_str(&format!(
        "validation: {}\n",
        if report.validation_passed { "pass" } else { "FAIL" }
    ));
    for check in &report.validation.checks {
        out.push_str(&format!(
            "  {}: {} ({})\n",
            check.name,
            if check.passed { "pass" } else { "FAIL" },
            check.detail
        ));
    }
    if let Some(s) = &report.solve {
        out.push_str(&format!(
            "solve: {} iterations, converged={}, complementarity={}\n",
            s.iterations,
            s.converged,
            fmt_float(s.complementarity)
        ));
        out.push_str(&format!(
            "  pde residual sup={} smooth={} top-flux violation={}\n",
            fmt_float(s.residuals.pde_residual_sup),
            fmt_float(s.residuals.pde_residual_smooth),
            fmt_float(s.residuals.top_flux_violation),
        ));
    }
    if let Some(a) = &report.analytic_column {
        out.push_str(&format!(
            "analytic column: sup error={} phi error={} (support end {})\n",
            fmt_float(a.sup_error),
            fmt_float(a.phi_error),
            fmt_float(a.support_end),
        ));
    }
    if let Some(st) = &report.structure {
        out.push_str(&format!(
            "structure: down-closed violations={} chi-monotone violations={} zero-ball violations={} mismatch fraction={}\n",
            st.down_closed_violations,
            st.chi_monotone_violations,
            st.zero_ball_violations,
            fmt_float(st.indicator_mismatch_fraction),
        ));
    }
    if let Some(fb) = &report.free_boundary {
        out.push_str(&format!(
            "free boundary: {} cells, phi in [{}, {}]\n",
            fb.cells,
            fmt_float(fb.phi_min),
            fmt_float(fb.phi_max)
        ));
    }
    if let Some(b) = &report.barrier {
        let c = &b.constants;
        out.push_str(&format!(
            "barrier: c1={} c2={} theta0={} epsilon0={} r0={} r1={}\n",
            fmt_float(c.c1),
            fmt_float(c.c2),
            fmt_float(c.theta0),
            fmt_float(c.epsilon0),
            fmt_float(c.r0),
            fmt_float(c.r1),
        ));
        for f in &b.flux_sweep {
            out.push_str(&format!(
                "  flux r={}: min={} {}\n",
                fmt_float(f.r),
                fmt_float(f.min_flux),
                if f.pass { "pass" } else { "FAIL" }
            ));
        }
    }
    if let Some(p) = &report.porosity {
        out.push_str(&format!(
            "porosity: delta0={} min delta_hat={} slack={} pass={}\n",
            fmt_float(p.delta0),
            p.min_delta_hat.map(fmt_float).unwrap_or_else(|| "-".into()),
            p.slack.map(fmt_float).unwrap_or_else(|| "-".into()),
            p.pass.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    if let Some(d) = &report.dimension {
        out.push_str(&format!(
            "dimension: slope={} residual={}\n",
            fmt_float(d.slope),
            fmt_float(d.residual)
        ));
    }
    for n in &report.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    out
}

/// Loads a written run report back for re-rendering.
pub fn load_report(run_dir: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(run_dir.join("run_report.json"))
        .map_err(|e| Error::Usage(format!("cannot read run report: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Usage(format!("bad run report: {e}")))
}

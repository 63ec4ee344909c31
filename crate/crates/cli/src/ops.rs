//! Named operations shared by scenarios and subcommands.

use crate::error::{core, CliError, CliResult};
use crate::render::{parse_curves, render_svg, RenderOptions};
use expose_core::ballexpose::{build_exposer, image_curves, image_curves_csv, verify_exposer, BallDumbbellConfig, ExposerGrid};
use expose_core::convexify::{
    analytic_convexity, boundary_c1_probe, boundary_profiles, boundary_slices, build_convexifier, verify_map, GridSpec,
};
use expose_core::geometry::certify_convexity_at;
use expose_core::hull::hull_evidence_demo;
use expose_core::onevar::{dumbbell_pair, mobius_fuzz, points_to_csv, translation_defect};
use expose_core::peak::{make_convex_peak, make_levi_peak};
use expose_core::report::from_pairs;
use expose_core::{LocalDomain, C64, TOOL_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Peak construction used by the convexifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakChoice {
    /// `exp` of the holomorphic second-order part of the defining function; works on
    /// non-convex strongly pseudoconvex boundaries.
    #[default]
    Levi,
    /// Supporting-hyperplane peak; requires a convex boundary point.
    Convex,
}

fn default_grid() -> GridSpec {
    GridSpec { per_axis: 40, radius: 0.2, seed: 7 }
}
fn default_ball_eps() -> f64 {
    BallDumbbellConfig::default().eps
}
fn default_tube() -> f64 {
    BallDumbbellConfig::default().tube_c
}
fn default_dim() -> usize {
    2
}
fn default_per_axis() -> usize {
    ExposerGrid::default().per_axis
}
fn default_ball_per_axis() -> usize {
    ExposerGrid::default().ball_per_axis
}
fn default_rays() -> usize {
    8
}

/// One step of a scenario. Paths are relative to the scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Operation {
    MobiusFuzz {
        samples: u64,
        seed: u64,
    },
    Convexify {
        domain: PathBuf,
        zeta: Vec<[f64; 2]>,
        eps: f64,
        #[serde(default)]
        peak: PeakChoice,
        #[serde(default = "default_grid")]
        grid: GridSpec,
    },
    Dumbbell {
        a: f64,
        b: f64,
        delta: f64,
    },
    BallExpose {
        r: f64,
        s: f64,
        nu_list: Vec<u32>,
        #[serde(default = "default_ball_eps")]
        eps: f64,
        #[serde(default = "default_tube")]
        tube_c: f64,
        #[serde(default = "default_dim")]
        n: usize,
        #[serde(default = "default_per_axis")]
        per_axis: usize,
        #[serde(default = "default_ball_per_axis")]
        ball_per_axis: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_rays")]
        rays: usize,
    },
    HullDemo {
        rho0: f64,
        count: usize,
        degree: u32,
        #[serde(default)]
        seed: u64,
    },
    Render {
        input: PathBuf,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        marks: Vec<[f64; 2]>,
    },
}

/// A file produced by an operation, named relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub suffix: String,
    pub contents: String,
}

/// Result of one operation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// Envelope with version, seeds, grids, tolerances, verdict and the module report.
    pub report: Value,
    pub failures: Vec<String>,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::MobiusFuzz { .. } => "mobius-fuzz",
            Operation::Convexify { .. } => "convexify",
            Operation::Dumbbell { .. } => "dumbbell",
            Operation::BallExpose { .. } => "ball-expose",
            Operation::HullDemo { .. } => "hull-demo",
            Operation::Render { .. } => "render",
        }
    }

    /// Input files the operation reads.
    pub fn inputs(&self) -> Vec<&Path> {
        match self {
            Operation::Convexify { domain, .. } => vec![domain.as_path()],
            Operation::Render { input, .. } => vec![input.as_path()],
            _ => Vec::new(),
        }
    }

    pub fn execute(&self, base: &Path) -> CliResult<Outcome> {
        match self {
            Operation::MobiusFuzz { samples, seed } => run_mobius(*samples, *seed),
            Operation::Convexify { domain, zeta, eps, peak, grid } => {
                run_convexify(&base.join(domain), domain, zeta, *eps, *peak, grid)
            }
            Operation::Dumbbell { a, b, delta } => run_dumbbell(*a, *b, *delta),
            Operation::BallExpose { r, s, nu_list, eps, tube_c, n, per_axis, ball_per_axis, seed, rays } => {
                let config = BallDumbbellConfig { r: *r, s: *s, eps: *eps, nu: nu_list.first().copied().unwrap_or(2), tube_c: *tube_c };
                let grid = ExposerGrid { per_axis: *per_axis, ball_per_axis: *ball_per_axis, seed: *seed, ..ExposerGrid::default() };
                run_ball_expose(&config, *n, nu_list, &grid, *rays)
            }
            Operation::HullDemo { rho0, count, degree, seed } => run_hull(*rho0, *count, *degree, *seed),
            Operation::Render { input, scale, marks } => run_render(&base.join(input), input, *scale, marks),
        }
    }
}

fn envelope(op: &str, seeds: Value, grid: Value, tolerances: Value, failures: &[String], report: Value) -> Value {
    json!({
        "tool_version": TOOL_VERSION,
        "op": op,
        "seeds": seeds,
        "grid": grid,
        "tolerances": tolerances,
        "ok": failures.is_empty(),
        "failures": failures,
        "report": report,
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn check(failures: &mut Vec<String>, cond: bool, msg: impl FnOnce() -> String) {
    if !cond {
        failures.push(msg());
    }
}

pub fn run_mobius(samples: u64, seed: u64) -> CliResult<Outcome> {
    if samples == 0 {
        return Err(CliError::input("mobius-fuzz: samples must be positive"));
    }
    let r = mobius_fuzz(samples, seed);
    let mut failures = Vec::new();
    check(&mut failures, r.violations == 0, || format!("{} dichotomy violations", r.violations));
    let report = envelope(
        "mobius-fuzz",
        json!({ "sampler": seed }),
        json!({ "samples": samples }),
        json!({ "dichotomy": r.tolerance }),
        &failures,
        to_value(&r),
    );
    Ok(Outcome { report, failures, artifacts: Vec::new() })
}

/// Tolerances of the convexifier verdict.
pub const TANGENCY_TOL: f64 = 1e-8;
pub const FIXED_POINT_TOL: f64 = 1e-12;
const SLICE_SAMPLES: usize = 200;

pub fn load_domain(path: &Path, shown: &Path) -> CliResult<LocalDomain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read domain file {}: {e}", shown.display())))?;
    LocalDomain::from_json_str(&text).map_err(|e| CliError::input(format!("domain file {}: {e}", shown.display())))
}

pub fn run_convexify(
    path: &Path,
    shown: &Path,
    zeta: &[[f64; 2]],
    eps: f64,
    peak: PeakChoice,
    grid: &GridSpec,
) -> CliResult<Outcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::input(format!("convexify: eps must lie in (0, 1), got {eps}")));
    }
    if grid.per_axis < 2 || !(grid.radius > 0.0) {
        return Err(CliError::input("convexify: grid needs per_axis >= 2 and a positive radius"));
    }
    let domain = load_domain(path, shown)?;
    if zeta.len() != domain.n() {
        return Err(CliError::input(format!("convexify: zeta has {} coordinates, domain has {}", zeta.len(), domain.n())));
    }
    let zeta = from_pairs(zeta);
    let baseline = certify_convexity_at(&domain, &zeta).map_err(core("geometry"))?;
    let peak_fn = match peak {
        PeakChoice::Levi => make_levi_peak(&domain, &zeta),
        PeakChoice::Convex => make_convex_peak(&domain, &zeta),
    }
    .map_err(core("peak"))?;
    let (map, params) = build_convexifier(&domain, &zeta, &peak_fn, eps).map_err(core("convexify"))?;
    let verification = verify_map(&map, &domain, &zeta, eps, grid).map_err(core("convexify"))?;
    let probe = boundary_c1_probe(&map, &domain, &zeta, &params).map_err(core("convexify"))?;
    let analytic = analytic_convexity(&domain, &zeta, params.scale).map_err(core("convexify"))?;
    let slices = boundary_slices(&map, &domain, &zeta, &params, SLICE_SAMPLES).map_err(core("convexify"))?;
    let profiles = boundary_profiles(&map, &domain, &zeta, &params, SLICE_SAMPLES).map_err(core("convexify"))?;

    let v = &verification;
    let mut failures = params.invariant_violations();
    check(&mut failures, v.c1_dist < eps, || format!("c1_dist {:e} not below eps {eps}", v.c1_dist));
    check(&mut failures, v.injectivity_certified, || format!("injectivity not certified (kappa {:e})", v.kappa));
    check(&mut failures, v.collisions == 0, || format!("{} grid collisions", v.collisions));
    check(&mut failures, v.convexity_eig > 0.0, || format!("convexity_eig {:e} not positive", v.convexity_eig));
    check(&mut failures, v.tangency_err < TANGENCY_TOL, || format!("tangency_err {:e}", v.tangency_err));
    check(&mut failures, v.fixed_point_err < FIXED_POINT_TOL, || format!("fixed_point_err {:e}", v.fixed_point_err));
    check(&mut failures, v.jacobian_err < FIXED_POINT_TOL, || format!("jacobian_err {:e}", v.jacobian_err));

    let peak_report = peak_fn.report.clone();
    let report = envelope(
        "convexify",
        json!({ "grid": grid.seed, "peak_decay": peak_report.as_ref().map(|r| r.seed) }),
        to_value(grid),
        json!({
            "c1_dist": eps,
            "kappa": 1.0,
            "tangency_err": TANGENCY_TOL,
            "fixed_point_err": FIXED_POINT_TOL,
            "jacobian_err": FIXED_POINT_TOL,
            "annulus_target": params.annulus_target,
        }),
        &failures,
        json!({
            "domain": shown.display().to_string(),
            "zeta": expose_core::report::pairs(zeta.as_slice()),
            "eps": eps,
            "peak": peak,
            "peak_report": peak_report,
            "baseline_convexity": baseline,
            "analytic_convexity": analytic,
            "params": params,
            "per_annulus_ok": params.per_annulus_ok(),
            "boundary_c1_probe": probe,
            "verification": verification,
        }),
    );
    Ok(Outcome {
        report,
        failures,
        artifacts: vec![
            Artifact { suffix: "slices.csv".into(), contents: image_curves_csv(&slices) },
            Artifact { suffix: "profiles.csv".into(), contents: image_curves_csv(&profiles) },
        ],
    })
}

/// Tolerances of the dumbbell verdict.
pub const CENTER_TOL: f64 = 1e-8;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const EXCLUDED_RADIUS: f64 = 0.3;
const DEFECT_RADIAL: usize = 60;
const DEFECT_ANGULAR: usize = 256;
const SYMMETRY_RADIAL: usize = 20;
const SYMMETRY_ANGULAR: usize = 64;

fn polar_grid(radial: usize, angular: usize, max_radius: f64) -> impl Iterator<Item = C64> {
    (1..=radial).flat_map(move |i| {
        let rad = max_radius * i as f64 / radial as f64;
        (0..angular).map(move |j| C64::from_polar(rad, 2.0 * PI * j as f64 / angular as f64))
    })
}

pub fn run_dumbbell(a: f64, b: f64, delta: f64) -> CliResult<Outcome> {
    if !(delta > 0.0) {
        return Err(CliError::input(format!("dumbbell: delta must be positive, got {delta}")));
    }
    let pair = dumbbell_pair(a, b, delta).map_err(core("onevar"))?;
    let d = &pair.diagnostics;
    let symmetry_defect = polar_grid(SYMMETRY_RADIAL, SYMMETRY_ANGULAR, 0.99)
        .map(|z| (pair.f.eval(z.conj()) - pair.f.eval(z).conj()).norm())
        .fold(0.0, f64::max);
    let reflection_defect = polar_grid(SYMMETRY_RADIAL, SYMMETRY_ANGULAR, 0.99)
        .map(|z| (pair.g.eval(z) - (C64::new(a + b, 0.0) - pair.f.eval(-z))).norm())
        .fold(0.0, f64::max);
    let defect = translation_defect(&pair, EXCLUDED_RADIUS, DEFECT_RADIAL, DEFECT_ANGULAR);
    let mut failures = Vec::new();
    check(&mut failures, d.f_at_zero_error < CENTER_TOL, || format!("|f(0) - a| = {:e}", d.f_at_zero_error));
    check(&mut failures, symmetry_defect < SYMMETRY_TOL, || format!("real-symmetry defect {symmetry_defect:e}"));
    check(&mut failures, d.injective, || "image boundary not simple or winding differs from 1".into());
    check(&mut failures, pair.r_value > 0.0 && pair.one_minus_r > 0.0, || format!("r_value {} outside (0,1)", pair.r_value));

    let mut image: Vec<C64> = expose_core::onevar::dumbbell::upper_image_boundary(&pair.welded);
    let upper = image.clone();
    image.extend(upper[1..upper.len() - 1].iter().rev().map(|w| w.conj()));
    let report = envelope(
        "dumbbell",
        json!({}),
        json!({
            "region_nodes": pair.region.boundary.len(),
            "symmetry": { "radial": SYMMETRY_RADIAL, "angular": SYMMETRY_ANGULAR, "max_radius": 0.99 },
            "translation": { "radial": DEFECT_RADIAL, "angular": DEFECT_ANGULAR, "excluded_radius": EXCLUDED_RADIUS },
        }),
        json!({ "f_at_zero": CENTER_TOL, "real_symmetry": SYMMETRY_TOL, "consistency": 1e-5 }),
        &failures,
        json!({
            "a": a,
            "b": b,
            "delta": delta,
            "r_value": pair.r_value,
            "one_minus_r": pair.one_minus_r,
            "log_one_minus_r": pair.log_one_minus_r,
            "f_at_minus_one": [pair.f_at_minus_one.re, pair.f_at_minus_one.im],
            "f_at_one": [pair.f_at_one.re, pair.f_at_one.im],
            "left_endpoint_gap": (pair.f_at_minus_one - (a - 1.0)).norm(),
            "right_endpoint_gap": (pair.f_at_one - (b + 1.0)).norm(),
            "real_symmetry_defect": symmetry_defect,
            "reflection_defect": reflection_defect,
            "translation_defect": defect,
            "region_symmetry_defect": pair.region.symmetry_defect(),
            "diagnostics": d,
        }),
    );
    let curves = vec![("region_boundary".to_string(), pair.region.boundary.clone()), ("image_boundary".to_string(), image)];
    Ok(Outcome {
        report,
        failures,
        artifacts: vec![
            Artifact { suffix: "region.csv".into(), contents: points_to_csv(&pair.region.boundary) },
            Artifact { suffix: "curves.csv".into(), contents: image_curves_csv(&curves) },
        ],
    })
}

const RAY_SAMPLES: usize = 200;

pub fn run_ball_expose(
    config: &BallDumbbellConfig,
    n: usize,
    nus: &[u32],
    grid: &ExposerGrid,
    rays: usize,
) -> CliResult<Outcome> {
    if n < 1 {
        return Err(CliError::input("ball-expose: dimension must be at least 1"));
    }
    let report = verify_exposer(config, n, nus, grid).map_err(core("ballexpose"))?;
    let mut failures = Vec::new();
    check(&mut failures, report.identity_sup_decreasing, || "identity sup not strictly decreasing in nu".into());
    for r in &report.per_nu {
        check(&mut failures, r.endpoint_error < 1e-8, || format!("nu {}: endpoint error {:e}", r.nu, r.endpoint_error));
        check(&mut failures, r.iv_violations == 0, || format!("nu {}: {} near-point violations", r.nu, r.iv_violations));
        check(&mut failures, r.v_violations == 0, || format!("nu {}: {} isotopy violations", r.nu, r.v_violations));
        check(&mut failures, r.mechanism_violations == 0, || format!("nu {}: {} mechanism violations", r.nu, r.mechanism_violations));
    }
    for m in &report.mechanism_sweep {
        check(&mut failures, m.violations == 0, || format!("r {}: {} mechanism violations", m.r, m.violations));
    }
    let mut curves = Vec::new();
    for &nu in nus {
        let phi = build_exposer(&config.with_nu(nu), n).map_err(core("ballexpose"))?;
        for (name, pts) in image_curves(&phi, rays, RAY_SAMPLES) {
            curves.push((format!("nu{nu}_{name}"), pts));
        }
    }
    let envelope = envelope(
        "ball-expose",
        json!({ "grid": grid.seed }),
        to_value(grid),
        json!({ "membership": grid.tolerance, "endpoint": 1e-8 }),
        &failures,
        to_value(&report),
    );
    Ok(Outcome {
        report: envelope,
        failures,
        artifacts: vec![Artifact { suffix: "images.csv".into(), contents: image_curves_csv(&curves) }],
    })
}

pub fn run_hull(rho0: f64, count: usize, degree: u32, seed: u64) -> CliResult<Outcome> {
    let r = hull_evidence_demo(rho0, count, degree, seed).map_err(core("hull"))?;
    let mut failures = Vec::new();
    check(&mut failures, r.violations == 0, || format!("{} maximum-principle violations", r.violations));
    let report = envelope(
        "hull-demo",
        json!({ "polynomials": seed }),
        json!({ "circle_samples": r.circle_samples, "poly_count": count, "degree": degree }),
        json!({ "ratio": 1.0 }),
        &failures,
        to_value(&r),
    );
    Ok(Outcome { report, failures, artifacts: Vec::new() })
}

pub fn run_render(path: &Path, shown: &Path, scale: Option<f64>, marks: &[[f64; 2]]) -> CliResult<Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read data file {}: {e}", shown.display())))?;
    let curves = parse_curves(&text)?;
    let opts = RenderOptions {
        scale,
        stretch: false,
        center: None,
        marks: marks.iter().map(|m| (m[0], m[1])).collect(),
        source: shown.display().to_string(),
    };
    let svg = render_svg(&curves, &opts)?;
    let report = envelope(
        "render",
        json!({}),
        json!({ "curves": curves.len(), "points": curves.iter().map(|c| c.points.len()).sum::<usize>() }),
        json!({}),
        &[],
        json!({ "input": shown.display().to_string() }),
    );
    Ok(Outcome { report, failures: Vec::new(), artifacts: vec![Artifact { suffix: "figure.svg".into(), contents: svg }] })
}

/// Figures drawn automatically for CSV artifacts of an operation.
pub fn figure_for(op: &Operation, artifact: &Artifact) -> CliResult<Option<String>> {
    if !artifact.suffix.ends_with(".csv") {
        return Ok(None);
    }
    let curves = parse_curves(&artifact.contents)?;
    let marks = match op {
        Operation::BallExpose { r, s, .. } => vec![(s + r, 0.0)],
        Operation::Convexify { .. } if artifact.suffix == "slices.csv" => vec![(0.0, 0.0)],
        _ => Vec::new(),
    };
    let stretch = matches!(op, Operation::Convexify { .. });
    let opts = RenderOptions { scale: None, stretch, center: None, marks, source: artifact.suffix.clone() };
    render_svg(&curves, &opts).map(Some)
}

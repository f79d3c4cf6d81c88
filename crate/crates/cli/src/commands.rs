//! The five subcommands. Each builds a [`Report`]; per-point work runs on
//! the ambient rayon pool and is collected in input order.

use crate::report::{Check, Record, Report};
use crate::{CliError, RunArgs};
use dirac_surface::dirac::{
    assemble_grid_operator, eigenvalues, fourier_spectrum, multiset_distance, DiracError, SymbolData,
};
use dirac_surface::expr::{parse_immersion_file, ImmersionSpec};
use dirac_surface::geometry::{tube_metric_at, GeometryError, DEFAULT_STEP, MINIMAL_TRACE};
use dirac_surface::weierstrass::{reconstruct, WeierstrassError};
use nalgebra::Matrix4;
use rayon::prelude::*;

const BILINEAR_TOL: f64 = 1e-8;
const IMAG_TOL: f64 = 1e-10;
const ORTHONORMAL_TOL: f64 = 1e-12;
const AGREEMENT_TOL: f64 = 1e-10;
const MIN_RATIO: f64 = 3.5;
const EXACT_RESIDUAL: f64 = 1e-12;
const FRAME_TOL: f64 = 1e-10;
const ANTISYMMETRY_TOL: f64 = 1e-8;
const CLIFFORD_TOL: f64 = 1e-10;
const FOURIER_TOL: f64 = 1e-10;
const ZERO_EIGEN: f64 = 1e-10;
const MIN_SLOPE: f64 = 1.9;
const TUBE_OFFSETS: [f64; 3] = [0.04, 0.02, 0.01];

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Eval { .. } => CliError::Input(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<DiracError> for CliError {
    fn from(e: DiracError) -> Self {
        match e {
            DiracError::Geometry(g) => g.into(),
            DiracError::NotPeriodic | DiracError::GridTooSmall(_) => CliError::Input(e.to_string()),
            DiracError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<WeierstrassError> for CliError {
    fn from(e: WeierstrassError) -> Self {
        match e {
            WeierstrassError::Dirac(d) => d.into(),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

fn header(report: &mut Report, args: &RunArgs, step: f64) {
    report.header.flag("gauged", args.gauged).num("step", step);
}

/// `--at` points, else the `--grid` interior lattice, else `default`.
fn sample_points(spec: &ImmersionSpec, args: &RunArgs, default: [usize; 2]) -> Result<Vec<[f64; 2]>, CliError> {
    if args.at.is_empty() {
        let [n1, n2] = args.grid.unwrap_or(default);
        return Ok(spec.interior_lattice(n1, n2));
    }
    let points: Vec<[f64; 2]> = args.at.chunks(2).map(|c| [c[0], c[1]]).collect();
    for s in &points {
        for alpha in 0..2 {
            if !s[alpha].is_finite() || (!spec.periodic[alpha] && !spec.domain[alpha].contains(s[alpha])) {
                return Err(CliError::Input(format!(
                    "point ({}, {}) lies outside the domain of {}",
                    s[0], s[1], spec.name
                )));
            }
        }
    }
    Ok(points)
}

fn rows4(v: &[nalgebra::Vector4<f64>; 2]) -> [[f64; 4]; 2] {
    v.map(|x| [x[0], x[1], x[2], x[3]])
}

fn rows2(m: &nalgebra::Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn frame_defect(f: &Matrix4<f64>) -> f64 {
    (f.transpose() * f - Matrix4::identity()).amax()
}

pub fn frame(spec: &ImmersionSpec, args: &RunArgs) -> Result<Report, CliError> {
    let h = args.step.unwrap_or(DEFAULT_STEP);
    let points = sample_points(spec, args, [3, 3])?;
    let data = points
        .par_iter()
        .map(|s| SymbolData::at(spec, *s, h))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new("frame", &spec.name);
    header(&mut report, args, h);
    let mut frame_defects = Vec::new();
    let mut antisymmetry = Vec::new();
    let mut clifford = Vec::new();
    for d in &data {
        let (f, c, g) = (&d.frame, &d.connection, &d.gauge);
        let symbol = d.symbol(args.gauged);
        frame_defects.push(frame_defect(&f.frame_matrix()));
        antisymmetry.push(c.antisymmetry_defect());
        clifford.push(symbol.clifford_defect(&f.g_inv));
        let mut r = Record::new();
        r.nums("s", &f.s)
            .nums("x", f.x.as_slice())
            .rows("g", &rows2(&f.g))
            .num("det_g", f.det_g)
            .rows("ehat", &rows4(&f.ehat))
            .rows("n", &rows4(&f.n))
            .num("trace3", c.trace3)
            .num("trace4", c.trace4)
            .num("mean_curvature", c.mean_curvature_norm())
            .nums("torsion", &c.torsion())
            .nums("omega", &d.spin.omega)
            .num("theta", g.theta)
            .num("hat_trace3", g.hat_trace3)
            .num("hat_trace4", g.hat_trace4)
            .nums("hat_torsion", &g.hat_torsion)
            .flag("gauge_degenerate", g.degenerate);
        report.records.push(r);
    }
    report.summary.int("points", data.len() as u64);
    report.checks = vec![
        Check::at_most("frame_orthonormal", frame_defects, FRAME_TOL),
        Check::at_most("torsion_antisymmetry", antisymmetry, ANTISYMMETRY_TOL),
        Check::at_most("symbol_clifford_relation", clifford, CLIFFORD_TOL),
    ];
    Ok(report)
}

pub fn verify(spec: &ImmersionSpec, args: &RunArgs) -> Result<Report, CliError> {
    let h = args
        .step
        .unwrap_or(dirac_surface::weierstrass::DEFAULT_RESIDUAL_STEPS[0]);
    let steps = [h, h / 2.0, h / 4.0];
    let points = sample_points(spec, args, [9, 9])?;
    let results = points
        .par_iter()
        .map(|s| -> Result<_, CliError> {
            let report = reconstruct(spec, *s, args.gauged, &steps)?;
            let plain = if args.gauged {
                Some(reconstruct(spec, *s, false, &[])?)
            } else {
                None
            };
            let data = SymbolData::at(spec, *s, DEFAULT_STEP)?;
            Ok((report, plain, data))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new("verify", &spec.name);
    header(&mut report, args, h);
    let mut converged = Vec::new();
    let mut agreement = Vec::new();
    let mut min_ratio = f64::INFINITY;
    for (rec, plain, data) in &results {
        let exact = rec.residual_dirac.iter().all(|(_, r)| *r <= EXACT_RESIDUAL);
        let ratio = (!exact).then(|| rec.convergence_ratio());
        if let Some(q) = ratio {
            min_ratio = min_ratio.min(q);
        }
        converged.push(rec.residual_converges(MIN_RATIO, EXACT_RESIDUAL));
        let mut r = Record::new();
        r.nums("s", &rec.s)
            .rows("w", &rows4(&rec.w))
            .rows("t", &rows4(&rec.t))
            .num("residual_bilinear", rec.residual_bilinear)
            .num("imag_bilinear", rec.imag_bilinear)
            .num("orthonormality", rec.orthonormality)
            .nums("residual_steps", &steps)
            .nums(
                "residual_dirac",
                &rec.residual_dirac.iter().map(|p| p.1).collect::<Vec<_>>(),
            )
            .opt("convergence_ratio", ratio)
            .nums("torsion", &data.connection.torsion())
            .num("theta", data.gauge.theta)
            .nums("hat_torsion", &data.gauge.hat_torsion);
        if let Some(p) = plain {
            let gap = (0..2).map(|a| (p.w[a] - rec.w[a]).amax()).fold(0.0, f64::max);
            agreement.push(gap);
            r.num("plain_agreement", gap);
        }
        report.records.push(r);
    }
    report
        .summary
        .int("points", results.len() as u64)
        .num(
            "max_residual_bilinear",
            results.iter().map(|r| r.0.residual_bilinear).fold(0.0, f64::max),
        )
        .opt("min_convergence_ratio", min_ratio.is_finite().then_some(min_ratio));
    report.checks = vec![
        Check::at_most(
            "residual_bilinear",
            results.iter().map(|r| r.0.residual_bilinear),
            BILINEAR_TOL,
        ),
        Check::at_most("imag_bilinear", results.iter().map(|r| r.0.imag_bilinear), IMAG_TOL),
        Check::at_most(
            "orthonormality",
            results.iter().map(|r| r.0.orthonormality),
            ORTHONORMAL_TOL,
        ),
        Check::all("dirac_residual_convergence", converged),
    ];
    if args.gauged {
        report
            .checks
            .push(Check::at_most("plain_agreement", agreement, AGREEMENT_TOL));
    }
    Ok(report)
}

pub fn spectrum(spec: &ImmersionSpec, args: &RunArgs) -> Result<Report, CliError> {
    if !args.at.is_empty() {
        return Err(CliError::Input("spectrum takes --grid, not --at".into()));
    }
    let h = args.step.unwrap_or(DEFAULT_STEP);
    let [n1, n2] = args.grid.unwrap_or([8, 8]);
    let dim = 4 * n1 * n2;
    if dim > args.cap {
        return Err(DiracError::CapExceeded { dim, cap: args.cap }.into());
    }
    let op = assemble_grid_operator(spec, n1, n2, args.gauged, h)?;
    let values = eigenvalues(&op, args.cap)?;

    let mut report = Report::new("spectrum", &spec.name);
    header(&mut report, args, h);
    let constant = op.is_constant_coefficient(1e-12);
    let fourier_gap = if constant {
        let expected = fourier_spectrum(&op.symbols[0], op.dims, op.spacing)?;
        Some(multiset_distance(&values, &expected))
    } else {
        None
    };
    report
        .summary
        .nums("dims", &[n1 as f64, n2 as f64])
        .int("dimension", dim as u64)
        .flag("constant_coefficient", constant)
        .int(
            "zero_count",
            values.iter().filter(|z| z.norm() <= ZERO_EIGEN).count() as u64,
        )
        .num("max_abs_real", values.iter().map(|z| z.re.abs()).fold(0.0, f64::max))
        .num("max_abs_imag", values.iter().map(|z| z.im.abs()).fold(0.0, f64::max))
        .opt("fourier_distance", fourier_gap);
    for (k, z) in values.iter().enumerate() {
        let mut r = Record::new();
        r.int("index", k as u64).num("re", z.re).num("im", z.im);
        report.records.push(r);
    }
    if let Some(gap) = fourier_gap {
        report.checks.push(Check::at_most("fourier_match", [gap], FOURIER_TOL));
    }
    Ok(report)
}

/// Least-squares slope of `ys` against `xs`.
fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn tube(spec: &ImmersionSpec, args: &RunArgs) -> Result<Report, CliError> {
    let h = args.step.unwrap_or(DEFAULT_STEP);
    let points = sample_points(spec, args, [3, 3])?;
    let samples = points
        .par_iter()
        .map(|s| -> Result<_, CliError> {
            let c = SymbolData::at(spec, *s, h)?.connection;
            let t = c.mean_curvature_norm();
            // along the mean-curvature vector, or the first normal on minimal points
            let dir = if t > MINIMAL_TRACE {
                [c.trace3 / t, c.trace4 / t]
            } else {
                [1.0, 0.0]
            };
            let sweep = TUBE_OFFSETS
                .iter()
                .map(|eps| tube_metric_at(spec, *s, [eps * dir[0], eps * dir[1]], h))
                .collect::<Result<Vec<_>, _>>()?;
            let zero = tube_metric_at(spec, *s, [0.0, 0.0], h)?;
            Ok((*s, dir, sweep, zero))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = Report::new("tube", &spec.name);
    header(&mut report, args, h);
    let mut quadratic = Vec::new();
    let mut zero_gaps = Vec::new();
    for (s, dir, sweep, zero) in &samples {
        let deviation: Vec<f64> = sweep.iter().map(|t| (t.rho_exact - t.rho_leading).abs()).collect();
        let exact = deviation.iter().all(|d| *d <= EXACT_RESIDUAL);
        let slope = (!exact).then(|| {
            let xs: Vec<f64> = TUBE_OFFSETS.iter().map(|e| e.ln()).collect();
            let ys: Vec<f64> = deviation.iter().map(|d| d.ln()).collect();
            fit_slope(&xs, &ys)
        });
        quadratic.push(slope.is_none_or(|m| m >= MIN_SLOPE));
        let zero_gap = (zero.rho_exact - zero.rho_leading).abs();
        zero_gaps.push(zero_gap);
        let mut r = Record::new();
        r.nums("s", s)
            .nums("direction", dir)
            .nums("epsilon", &TUBE_OFFSETS)
            .nums("rho", &sweep.iter().map(|t| t.rho).collect::<Vec<_>>())
            .nums("rho_exact", &sweep.iter().map(|t| t.rho_exact).collect::<Vec<_>>())
            .nums("rho_leading", &sweep.iter().map(|t| t.rho_leading).collect::<Vec<_>>())
            .nums("deviation", &deviation)
            .opt("slope", slope)
            .rows("g_tube", &rows2(&sweep[0].g_tube))
            .flag("zero_offset_exact", zero_gap == 0.0);
        report.records.push(r);
    }
    report.summary.int("points", samples.len() as u64);
    report.checks = vec![
        Check::all("quadratic_deviation", quadratic),
        Check::at_most("zero_offset_agreement", zero_gaps, 0.0),
    ];
    Ok(report)
}

pub fn parse_check(spec: &ImmersionSpec, args: &RunArgs) -> Result<Report, CliError> {
    let mut report = Report::new("parse-check", &spec.name);
    header(&mut report, args, args.step.unwrap_or(DEFAULT_STEP));
    let names = &spec.params;
    let mut r = Record::new();
    r.text("name", &spec.name)
        .text("param1", &names[0])
        .text("param2", &names[1]);
    for (k, x) in spec.coords.iter().enumerate() {
        r.text(&format!("x{}", k + 1), &x.display(names).to_string());
    }
    r.rows("domain", &spec.domain.map(|i| [i.lo, i.hi]))
        .value(
            "periodic",
            spec.periodic.iter().copied().map(serde_json::Value::from).collect(),
        )
        .text("frame_rotation", &spec.frame_rotation.display(names).to_string());
    report.records.push(r);
    let round_trip = parse_immersion_file(&spec.to_file_string()).as_ref() == Ok(spec);
    report.checks.push(Check::all("round_trip", [round_trip]));
    Ok(report)
}

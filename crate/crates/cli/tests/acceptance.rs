//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use dirac_surface::clifford::{basis_round, basis_square, conj, gammas, so4_pairing, spin_lift, CMat4};
use dirac_surface::corpus;
use dirac_surface::dirac::{
    assemble_grid_operator, eigenvalues, fourier_spectrum, multiset_distance, DiscreteOperator, DEFAULT_EIGEN_CAP,
};
use dirac_surface::expr::{parse_expression, ImmersionSpec};
use dirac_surface::geometry::{connection_at, tube_metric_at, DEFAULT_STEP};
use dirac_surface::weierstrass::{gauge_covariance_defect, reconstruct, DEFAULT_RESIDUAL_STEPS};
use nalgebra::{Complex, DVector, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

type C64 = Complex<f64>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs(m: &CMat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let g = gammas();
    let mut exact = true;
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j {
                CMat4::identity() * C64::from(2.0)
            } else {
                CMat4::zeros()
            };
            exact &= g[i] * g[j] + g[j] * g[i] == expected;
        }
    }
    let square = basis_square();
    let mut orthonormal = true;
    for a in 0..4 {
        for b in 0..4 {
            let expected = if a == b { C64::from(1.0) } else { C64::from(0.0) };
            orthonormal &= (conj(&square[a]) * square[b])[0] == expected;
        }
    }
    let round = basis_round();
    let mut worst: f64 = 0.0;
    for (k, psi) in round.iter().enumerate() {
        let v = so4_pairing(&conj(psi), psi);
        for (j, c) in v.iter().enumerate() {
            let expected = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((c - C64::from(expected)).norm());
        }
    }
    // entries scaled by 1/√2 square to 1/2 up to one rounding of 1/√2
    let vectors = worst <= 4.0 * f64::EPSILON;
    outcome(
        exact && orthonormal && vectors,
        format!("anticommutators exact: {exact}, orthonormal relation exact: {orthonormal}, SO(4) vectors max deviation {worst:.1e}"),
    )
}

fn random_rotation(rng: &mut impl Rng) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    for i in 0..4 {
        for j in (i + 1)..4 {
            let x = rng.gen_range(-3.0..3.0);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    a.exp()
}

fn criterion_2() -> Outcome {
    let seed = std::env::var("DIRAC_SURFACE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(7u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gammas();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let r = random_rotation(&mut rng);
        let lift = spin_lift(&r).expect("rotation");
        let u_inv = lift.inverse();
        for i in 0..4 {
            let rhs = (0..4).fold(CMat4::zeros(), |acc, mu| acc + g[mu] * C64::from(r[(i, mu)]));
            worst = worst.max(max_abs(&(lift.u * g[i] * u_inv - rhs)));
        }
    }
    let mut quarter = Matrix4::identity();
    quarter[(2, 2)] = 0.0;
    quarter[(3, 3)] = 0.0;
    quarter[(2, 3)] = 1.0;
    quarter[(3, 2)] = -1.0;
    let a = C64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
    let expected = CMat4::from_diagonal(&Vector4::new(a, a.conj(), a.conj(), a));
    let closed = max_abs(&(spin_lift(&quarter).expect("rotation").u - expected));
    outcome(
        worst <= 1e-10 && closed <= 1e-12,
        format!("seed {seed}: conjugation defect {worst:.1e} over 100 rotations, quarter turn {closed:.1e}"),
    )
}

fn with_rotation(spec: &ImmersionSpec, theta: &str) -> ImmersionSpec {
    let names = [spec.params[0].as_str(), spec.params[1].as_str()];
    ImmersionSpec {
        frame_rotation: parse_expression(theta, names).expect("valid"),
        ..spec.clone()
    }
}

fn criterion_3() -> Outcome {
    let mut trace_gap: f64 = 0.0;
    let mut antisymmetry: f64 = 0.0;
    let mut covariance: f64 = 0.0;
    for name in ["clifford", "sphere"] {
        let spec = corpus::load(name);
        let [p, q] = [spec.params[0].clone(), spec.params[1].clone()];
        // θ₀ = 0.4 p + 0.3 sin(p q), ∂θ₀ = (0.4 + 0.3 q cos(pq), 0.3 p cos(pq))
        let rotated = with_rotation(&spec, &format!("0.4*{p} + 0.3*sin({p}*{q})"));
        for s in spec.interior_lattice(9, 9) {
            let c0 = connection_at(&spec, s, DEFAULT_STEP).expect("regular");
            let c1 = connection_at(&rotated, s, DEFAULT_STEP).expect("regular");
            trace_gap = trace_gap.max((c0.trace3.hypot(c0.trace4) - 2.0).abs());
            antisymmetry = antisymmetry.max(c0.antisymmetry_defect()).max(c1.antisymmetry_defect());
            let cs = (s[0] * s[1]).cos();
            let grad = [0.4 + 0.3 * s[1] * cs, 0.3 * s[0] * cs];
            for alpha in 0..2 {
                let shift = c1.torsion()[alpha] - c0.torsion()[alpha];
                covariance = covariance.max((shift - grad[alpha]).abs());
            }
        }
    }
    outcome(
        trace_gap <= 1e-8 && antisymmetry <= 1e-8 && covariance <= 1e-6,
        format!(
            "|trace| - 2: {trace_gap:.1e}, antisymmetry {antisymmetry:.1e}, torsion shift vs gradient {covariance:.1e}"
        ),
    )
}

fn tube_slope(spec: &ImmersionSpec, s: [f64; 2]) -> f64 {
    let c = connection_at(spec, s, DEFAULT_STEP).expect("regular");
    let t = c.mean_curvature_norm();
    let dir = [c.trace3 / t, c.trace4 / t];
    let pts: Vec<(f64, f64)> = [0.04f64, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let tube = tube_metric_at(spec, s, [eps * dir[0], eps * dir[1]], DEFAULT_STEP).expect("regular");
            (eps.ln(), (tube.rho_exact - tube.rho_leading).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_4() -> Outcome {
    let mut slope = f64::INFINITY;
    for name in ["clifford", "graph"] {
        let spec = corpus::load(name);
        for s in spec.interior_lattice(3, 3) {
            slope = slope.min(tube_slope(&spec, s));
        }
    }
    let plane = corpus::load("plane");
    let mut flat: f64 = 0.0;
    for s in plane.interior_lattice(9, 9) {
        for q in [[0.3, 0.0], [0.0, -0.5], [0.2, 0.7]] {
            let t = tube_metric_at(&plane, s, q, DEFAULT_STEP).expect("regular");
            flat = flat.max((t.rho - 1.0).abs());
        }
    }
    outcome(
        slope >= 1.9 && flat <= 1e-12,
        format!("min log-log slope {slope:.4} (clifford, graph), plane |rho - 1| {flat:.1e}"),
    )
}

#[derive(Default)]
struct Sweep {
    bilinear: f64,
    imag: f64,
    orthonormality: f64,
    min_ratio: f64,
    unconverged: usize,
    points: usize,
}

fn sweep(spec: &ImmersionSpec, gauged: bool, into: &mut Sweep) {
    for s in spec.interior_lattice(9, 9) {
        let r = reconstruct(spec, s, gauged, &DEFAULT_RESIDUAL_STEPS).expect("regular");
        into.points += 1;
        into.bilinear = into.bilinear.max(r.residual_bilinear);
        into.imag = into.imag.max(r.imag_bilinear);
        into.orthonormality = into.orthonormality.max(r.orthonormality);
        if !r.residual_converges(3.5, 1e-12) {
            into.unconverged += 1;
        }
        if r.residual_dirac.iter().any(|p| p.1 > 1e-12) {
            into.min_ratio = into.min_ratio.min(r.convergence_ratio());
        }
    }
}

impl Sweep {
    fn new() -> Sweep {
        Sweep {
            min_ratio: f64::INFINITY,
            ..Sweep::default()
        }
    }

    fn pass(&self) -> bool {
        self.bilinear <= 1e-8 && self.imag <= 1e-10 && self.orthonormality <= 1e-12 && self.unconverged == 0
    }

    fn describe(&self) -> String {
        format!(
            "{} points: |W - T| {:.1e}, imag {:.1e}, orthonormality {:.1e}, min residual ratio {:.3}, unconverged {}",
            self.points, self.bilinear, self.imag, self.orthonormality, self.min_ratio, self.unconverged
        )
    }
}

fn criterion_5() -> Outcome {
    let mut s = Sweep::new();
    for (name, _) in corpus::BUNDLED {
        sweep(&corpus::load(name), false, &mut s);
    }
    outcome(s.pass(), s.describe())
}

fn test_field(s: [f64; 2]) -> Vector4<C64> {
    let [u, v] = s;
    Vector4::new(
        C64::new(u.cos(), v.sin()),
        C64::new(0.3 + (u * v).sin(), 0.0),
        C64::new(0.0, (u - v).cos()),
        C64::from_polar(1.0, 2.0 * u + v),
    )
}

fn criterion_6() -> Outcome {
    let spec = corpus::load("clifford-rotated");
    let mut s = Sweep::new();
    sweep(&spec, true, &mut s);
    let mut agreement: f64 = 0.0;
    for p in spec.interior_lattice(9, 9) {
        let plain = reconstruct(&spec, p, false, &[]).expect("regular");
        let gauged = reconstruct(&spec, p, true, &[]).expect("regular");
        for alpha in 0..2 {
            agreement = agreement.max((plain.w[alpha] - gauged.w[alpha]).amax());
        }
    }
    let mut covariance_ratio = f64::INFINITY;
    for p in spec.interior_lattice(3, 3) {
        let d = gauge_covariance_defect(&spec, p, test_field, &DEFAULT_RESIDUAL_STEPS).expect("regular");
        for w in d.windows(2) {
            if w[0].1 > 1e-12 {
                covariance_ratio = covariance_ratio.min(w[0].1 / w[1].1);
            }
        }
    }
    outcome(
        s.pass() && agreement <= 1e-10 && covariance_ratio >= 3.5,
        format!(
            "gauged on clifford-rotated, {}; gauged vs plain {agreement:.1e}; gauge covariance min ratio {covariance_ratio:.3}",
            s.describe()
        ),
    )
}

/// λ = ±√(1 − 2[(sin mh/h)² + (sin nh/h)²]), each sign twice.
fn clifford_closed_form(n: usize) -> Vec<C64> {
    let h = 2.0 * PI / n as f64;
    let mut out = Vec::new();
    for m1 in 0..n {
        for m2 in 0..n {
            let k = [m1, m2].map(|m| (m as f64 * h).sin() / h);
            let lambda = C64::from(1.0 - 2.0 * (k[0] * k[0] + k[1] * k[1])).sqrt();
            out.extend([lambda, lambda, -lambda, -lambda]);
        }
    }
    out
}

fn mean_curvature_term(b: &CMat4) -> CMat4 {
    let g = gammas();
    [2, 3].iter().fold(CMat4::zeros(), |acc, &i| {
        acc + g[i] * C64::from((g[i] * b).trace().re / 4.0)
    })
}

fn ibp_defect(op: &DiscreteOperator) -> f64 {
    let phi = op.sample(|[u, v]| {
        Vector4::new(
            C64::from_polar(1.0, u),
            C64::new(v.cos(), (u + v).sin()),
            C64::from(0.5),
            C64::new(0.0, (2.0 * v).sin()),
        )
    });
    let psi = op.sample(|[u, v]| {
        Vector4::new(
            C64::from((u - v).sin()),
            C64::from_polar(1.0, -v),
            C64::new(u.cos() * v.cos(), 0.2),
            C64::new(1.0, u.sin()),
        )
    });
    let mean = op.block_diagonal(|k| mean_curvature_term(&op.symbols[k].b));
    let d_phi: DVector<C64> = &op.matrix * &phi;
    let d_psi: DVector<C64> = &op.matrix * &psi;
    let b_psi: DVector<C64> = &mean * &psi;
    (op.inner(&phi, &d_psi) + op.inner(&d_phi, &psi) - op.inner(&phi, &b_psi) * 2.0).norm()
}

fn criterion_7() -> Outcome {
    let clifford = assemble_grid_operator(&corpus::load("clifford"), 8, 8, false, DEFAULT_STEP).expect("grid");
    let spectrum = eigenvalues(&clifford, DEFAULT_EIGEN_CAP).expect("spectrum");
    let closed = multiset_distance(&spectrum, &clifford_closed_form(8));

    let torus = assemble_grid_operator(&corpus::load("plane-torus"), 8, 8, false, DEFAULT_STEP).expect("grid");
    let flat = eigenvalues(&torus, DEFAULT_EIGEN_CAP).expect("spectrum");
    let real_part = flat.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let zeros = flat.iter().filter(|z| z.norm() <= 1e-10).count();
    let oracle = fourier_spectrum(&torus.symbols[0], torus.dims, torus.spacing).expect("blocks");
    let fourier = multiset_distance(&flat, &oracle);
    // wavevectors with sin(m h) = sin(n h) = 0: m, n ∈ {0, N/2}
    let zero_modes = (0..8)
        .filter(|m| (2.0 * PI * *m as f64 / 8.0).sin().abs() < 1e-12)
        .count()
        .pow(2);

    let spec = corpus::load("torus-revolution");
    let coarse = ibp_defect(&assemble_grid_operator(&spec, 8, 8, false, DEFAULT_STEP).expect("grid"));
    let fine = ibp_defect(&assemble_grid_operator(&spec, 16, 16, false, DEFAULT_STEP).expect("grid"));
    let clifford_ibp = ibp_defect(&clifford);

    outcome(
        closed <= 1e-10
            && real_part <= 1e-10
            && zeros == 4 * zero_modes
            && zero_modes == 4
            && fourier <= 1e-10
            && clifford_ibp <= 1e-12
            && coarse / fine >= 3.5,
        format!(
            "clifford 8x8 vs closed form {closed:.1e}; plane-torus max |Re| {real_part:.1e}, {zeros} zero eigenvalues \
             = {zero_modes} zero modes x 4 components, Fourier {fourier:.1e}; IBP clifford {clifford_ibp:.1e}, \
             torus of revolution N=8 -> 16 ratio {:.3}",
            coarse / fine
        ),
    )
}

fn corpus_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.imm"))
}

fn criterion_8() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dirac-surface"))
            .arg("verify")
            .arg(corpus_file("clifford"))
            .arg("--json")
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let identical = a.stdout == b.stdout;
    let ok = a.status.success() && b.status.success();
    outcome(
        identical && ok && !a.stdout.is_empty(),
        format!(
            "two runs of `verify clifford.imm`: {} bytes, identical {identical}, exit 0 {ok}",
            a.stdout.len()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("Clifford axioms", Duration::from_secs(1), criterion_1),
        ("spin lift", Duration::from_secs(1), criterion_2),
        ("geometry", Duration::from_secs(5), criterion_3),
        ("tube density", Duration::from_secs(5), criterion_4),
        ("Weierstrass relation", Duration::from_secs(30), criterion_5),
        ("gauged Weierstrass relation", Duration::from_secs(30), criterion_6),
        ("spectrum", Duration::from_secs(60), criterion_7),
        ("determinism", Duration::from_secs(60), criterion_8),
    ];
    let mut failures = 0;
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] criterion {} ({name}): {} [{:.3} s, budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

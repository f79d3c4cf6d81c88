//! Frame-derived kernel spinors of the Dirac operator and the
//! reconstruction of tangent vectors from their bilinears.

use num_complex::Complex64;

use crate::clifford::{
    basis_round, basis_square, conj, gauge_rotation, spin_lift, CMat4, CliffordError, CoSpinor, SpinMatrix, SpinorVec,
};
use crate::dirac::{apply_pointwise, DiracError, SymbolData};
use crate::expr::ImmersionSpec;
use crate::geometry::{frame_at, FrameData, GeometryError, Stencil, Vec4, DEFAULT_STEP, MINIMAL_TRACE};
use thiserror::Error;

/// Residual step sizes used by default: each halves the previous one.
pub const DEFAULT_RESIDUAL_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeierstrassError {
    #[error(transparent)]
    Dirac(#[from] DiracError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error("spin lift changes sheet discontinuously near ({}, {})", point[0], point[1])]
    SheetJump { point: [f64; 2] },
}

impl From<GeometryError> for WeierstrassError {
    fn from(e: GeometryError) -> Self {
        WeierstrassError::Dirac(DiracError::Geometry(e))
    }
}

/// The four spinors UΨ^{[a]} and UΨ^{(k)} at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub s: [f64; 2],
    pub lift: SpinMatrix,
    /// The spin matrix actually applied: `lift.u`, or G(−ϑ/2)·`lift.u` when gauged.
    pub u: CMat4,
    pub gauged: bool,
    /// Gauge angle ϑ used (0 when not gauged).
    pub theta: f64,
    pub psi_square: [SpinorVec; 4],
    pub psi_round: [SpinorVec; 4],
}

impl KernelBasis {
    pub fn cospinors_square(&self) -> [CoSpinor; 4] {
        self.psi_square.each_ref().map(conj)
    }

    /// Σ_a b_a ψ^{[a]}.
    pub fn combination(&self, b: &[Complex64; 4]) -> SpinorVec {
        (0..4).fold(SpinorVec::zeros(), |acc, a| acc + self.psi_square[a] * b[a])
    }

    /// Largest |conj(ψ^{[a]})ψ^{[b]} − δ^{ab}|.
    pub fn orthonormality_defect(&self) -> f64 {
        let bars = self.cospinors_square();
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max(((bars[a] * self.psi_square[b])[0] - target).norm());
            }
        }
        worst
    }

    fn negated(&self) -> KernelBasis {
        KernelBasis {
            u: -self.u,
            psi_square: self.psi_square.map(|p| -p),
            psi_round: self.psi_round.map(|p| -p),
            ..self.clone()
        }
    }
}

/// Gauge angle of `frame`, shifted by a multiple of 2π to lie within π of
/// `near` when given.
fn gauge_angle(frame: &FrameData, near: Option<f64>) -> f64 {
    let [t3, t4] = frame.traces();
    if t3.hypot(t4) < MINIMAL_TRACE {
        return near.unwrap_or(0.0);
    }
    let theta = (-t4).atan2(t3);
    match near {
        Some(reference) => {
            let turns = ((reference - theta) / std::f64::consts::TAU).round();
            theta + turns * std::f64::consts::TAU
        }
        None => theta,
    }
}

fn basis_for_frame(frame: &FrameData, gauged: bool, theta: f64) -> Result<KernelBasis, WeierstrassError> {
    let lift = spin_lift(&frame.frame_matrix())?;
    let (u, theta) = if gauged {
        (gauge_rotation(-0.5 * theta) * lift.u, theta)
    } else {
        (lift.u, 0.0)
    };
    Ok(KernelBasis {
        s: frame.s,
        u,
        gauged,
        theta,
        psi_square: basis_square().map(|p| u * p),
        psi_round: basis_round().map(|p| u * p),
        lift,
    })
}

/// Kernel spinors built from the frame at `s`. The gauged basis applies
/// G(−ϑ/2) = exp(−σ³⁴ϑ/2) after the spin lift.
pub fn kernel_basis_at(spec: &ImmersionSpec, s: [f64; 2], gauged: bool) -> Result<KernelBasis, WeierstrassError> {
    let frame = frame_at(spec, s)?;
    let theta = gauge_angle(&frame, None);
    basis_for_frame(&frame, gauged, theta)
}

/// Kernel basis at a stencil point, on the same normal branch, gauge-angle
/// branch and spin sheet as `center`.
fn neighbour_basis(
    spec: &ImmersionSpec,
    center_frame: &FrameData,
    center: &KernelBasis,
    s: [f64; 2],
) -> Result<KernelBasis, WeierstrassError> {
    let frame = frame_at(spec, s)?.aligned_to(center_frame);
    let theta = gauge_angle(&frame, Some(center.theta));
    let basis = basis_for_frame(&frame, center.gauged, theta)?;
    let same = (basis.u - center.u).norm();
    let flipped = (basis.u + center.u).norm();
    let aligned = if same > flipped { basis.negated() } else { basis };
    // the field must stay close to the centre on a small stencil
    if same.min(flipped) > 1.0 {
        return Err(WeierstrassError::SheetJump { point: center.s });
    }
    Ok(aligned)
}

/// Per-point verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub s: [f64; 2],
    pub gauged: bool,
    /// Reconstructed tangents W[α].
    pub w: [Vec4; 2],
    /// True tangents from the jets.
    pub t: [Vec4; 2],
    pub residual_bilinear: f64,
    /// Largest imaginary part among the reconstruction bilinears.
    pub imag_bilinear: f64,
    pub orthonormality: f64,
    /// `(h, max_a ‖D ψ^{[a]}‖)`.
    pub residual_dirac: Vec<(f64, f64)>,
    /// residual(h) / residual(h/2) for successive steps.
    pub convergence_ratios: Vec<f64>,
}

impl ReconstructionReport {
    pub fn convergence_ratio(&self) -> f64 {
        self.convergence_ratios.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Residuals shrink at second order, or vanish outright.
    pub fn residual_converges(&self, min_ratio: f64, exact: f64) -> bool {
        self.residual_dirac.iter().all(|(_, r)| *r <= exact) || self.convergence_ratio() >= min_ratio
    }
}

/// Max over the kernel basis of the pointwise Dirac residual, for each step.
pub fn dirac_residual(
    spec: &ImmersionSpec,
    s: [f64; 2],
    steps: &[f64],
    gauged: bool,
) -> Result<Vec<(f64, f64)>, WeierstrassError> {
    let stencil = Stencil::new(spec, s, DEFAULT_STEP)?;
    let data = SymbolData::from_stencil(&stencil);
    dirac_residual_with(spec, &data, steps, gauged)
}

fn dirac_residual_with(
    spec: &ImmersionSpec,
    data: &SymbolData,
    steps: &[f64],
    gauged: bool,
) -> Result<Vec<(f64, f64)>, WeierstrassError> {
    let symbol = data.symbol(gauged);
    let center = basis_for_frame(&data.frame, gauged, gauge_angle(&data.frame, None))?;
    let s = data.frame.s;
    steps
        .iter()
        .map(|&h| {
            let mut worst: f64 = 0.0;
            for a in 0..4 {
                let field = |p: [f64; 2]| -> Result<SpinorVec, WeierstrassError> {
                    if p == s {
                        Ok(center.psi_square[a])
                    } else {
                        Ok(neighbour_basis(spec, &data.frame, &center, p)?.psi_square[a])
                    }
                };
                worst = worst.max(apply_pointwise(&symbol, field, s, h)?.norm());
            }
            Ok((h, worst))
        })
        .collect()
}

fn ratios(residuals: &[(f64, f64)]) -> Vec<f64> {
    residuals.windows(2).map(|w| w[0].1 / w[1].1).collect()
}

/// Reconstructs ∂_α x from the bilinears of UΨ^{(i)} and measures the Dirac
/// residual over `steps`.
pub fn reconstruct(
    spec: &ImmersionSpec,
    s: [f64; 2],
    gauged: bool,
    steps: &[f64],
) -> Result<ReconstructionReport, WeierstrassError> {
    let stencil = Stencil::new(spec, s, DEFAULT_STEP)?;
    let data = SymbolData::from_stencil(&stencil);
    let frame = &data.frame;
    let basis = basis_for_frame(frame, gauged, gauge_angle(frame, None))?;
    let a = data.coefficients();

    let mut w = [Vec4::zeros(); 2];
    let mut imag: f64 = 0.0;
    for i in 0..4 {
        let psi = &basis.psi_round[i];
        let bar = conj(psi);
        let bilinear: [Complex64; 2] = [0, 1].map(|beta| (bar * a[beta] * psi)[0]);
        for b in &bilinear {
            imag = imag.max(b.im.abs());
        }
        for (alpha, row) in w.iter_mut().enumerate() {
            row[i] = (0..2).map(|beta| frame.g[(alpha, beta)] * bilinear[beta].re).sum();
        }
    }
    let t = frame.e;
    let residual_bilinear = (0..2).map(|alpha| (w[alpha] - t[alpha]).amax()).fold(0.0, f64::max);
    let residual_dirac = dirac_residual_with(spec, &data, steps, gauged)?;
    Ok(ReconstructionReport {
        s,
        gauged,
        w,
        t,
        residual_bilinear,
        imag_bilinear: imag,
        orthonormality: basis.orthonormality_defect(),
        convergence_ratios: ratios(&residual_dirac),
        residual_dirac,
    })
}

/// Largest |D^ϑψ − G(−ϑ/2) D (G(ϑ/2)ψ)| at `s` for each step, with ϑ the
/// gauge-angle field and ψ a test field.
pub fn gauge_covariance_defect(
    spec: &ImmersionSpec,
    s: [f64; 2],
    psi: impl Fn([f64; 2]) -> SpinorVec,
    steps: &[f64],
) -> Result<Vec<(f64, f64)>, WeierstrassError> {
    let stencil = Stencil::new(spec, s, DEFAULT_STEP)?;
    let data = SymbolData::from_stencil(&stencil);
    let theta0 = gauge_angle(&data.frame, None);
    let plain = data.symbol(false);
    let gauged = data.symbol(true);
    steps
        .iter()
        .map(|&h| {
            let lhs = apply_pointwise(&gauged, |p| Ok::<_, WeierstrassError>(psi(p)), s, h)?;
            let rotated = |p: [f64; 2]| -> Result<SpinorVec, WeierstrassError> {
                let theta = if p == s {
                    theta0
                } else {
                    gauge_angle(&frame_at(spec, p)?.aligned_to(&data.frame), Some(theta0))
                };
                Ok(gauge_rotation(0.5 * theta) * psi(p))
            };
            let rhs = gauge_rotation(-0.5 * theta0) * apply_pointwise(&plain, rotated, s, h)?;
            Ok((h, (lhs - rhs).norm()))
        })
        .collect()
}

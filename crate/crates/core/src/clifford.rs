//! Gamma matrices of E⁴, constant spinor bases, spin lifts of SO(4) frames
//! and the bilinear pairings between spinors.
//!
//! Index conventions: gammas are numbered 1..=4 in the public API and 0..=3
//! in arrays. A 4×4 rotation `R` acts on ambient vectors; its columns are the
//! images of the standard basis.

use nalgebra::{Matrix2, Matrix4, RowVector4, Vector4};
use num_complex::Complex64;
use thiserror::Error;

pub type CMat2 = Matrix2<Complex64>;
pub type CMat4 = Matrix4<Complex64>;
pub type SpinorVec = Vector4<Complex64>;
pub type CoSpinor = RowVector4<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliffordError {
    #[error("gamma index {0} out of range 1..=4")]
    IndexOutOfRange(usize),
    #[error("matrix is not special orthogonal (orthogonality defect {orthogonality:.3e}, det {det})")]
    NotSpecialOrthogonal { orthogonality: f64, det: f64 },
}

/// Pauli matrices τ₁, τ₂, τ₃ (array index 0..=2).
pub fn pauli(k: usize) -> CMat2 {
    match k {
        0 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        1 => Matrix2::new(ZERO, -I, I, ZERO),
        2 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {k} out of range"),
    }
}

/// Kronecker product `a ⊗ b`; row `2r + c` pairs row `r` of `a` with row `c` of `b`.
pub fn kron(a: &CMat2, b: &CMat2) -> CMat4 {
    CMat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// γ^i for i in 1..=4: τ₁⊗τ₁, τ₁⊗τ₂, τ₁⊗τ₃, τ₂⊗I.
pub fn gamma(i: usize) -> Result<CMat4, CliffordError> {
    match i {
        1..=3 => Ok(kron(&pauli(0), &pauli(i - 1))),
        4 => Ok(kron(&pauli(1), &CMat2::identity())),
        _ => Err(CliffordError::IndexOutOfRange(i)),
    }
}

/// All four gammas, array index `i - 1`.
pub fn gammas() -> [CMat4; 4] {
    std::array::from_fn(|k| gamma(k + 1).expect("index in range"))
}

/// σ³⁴ = γ³γ⁴ = i·diag(1, −1, −1, 1), the generator of normal-plane rotations.
pub fn sigma34() -> CMat4 {
    let g = gammas();
    g[2] * g[3]
}

/// Ψ^{[a]}: the standard unit spinors.
pub fn basis_square() -> [SpinorVec; 4] {
    std::array::from_fn(|a| {
        let mut v = SpinorVec::zeros();
        v[a] = ONE;
        v
    })
}

/// Ψ^{(k)}: constant spinors whose bilinear vectors are the standard basis of E⁴.
pub fn basis_round() -> [SpinorVec; 4] {
    let h = Complex64::new(0.5, 0.0);
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let hi = I * 0.5;
    [
        SpinorVec::new(h, h, h, h),
        SpinorVec::new(h, hi, h, hi),
        SpinorVec::new(r, ZERO, r, ZERO),
        SpinorVec::new(h, h, hi, hi),
    ]
}

/// Hermitian conjugate row of a spinor.
pub fn conj(psi: &SpinorVec) -> CoSpinor {
    psi.adjoint()
}

/// Inverse of [`conj`].
pub fn unconj(psi_bar: &CoSpinor) -> SpinorVec {
    psi_bar.adjoint()
}

/// Components `psi_bar · γ^j · psi`, j = 1..=4.
pub fn so4_pairing(psi_bar: &CoSpinor, psi: &SpinorVec) -> [Complex64; 4] {
    let g = gammas();
    std::array::from_fn(|j| (psi_bar * g[j] * psi)[0])
}

/// ι_g(a) = τ₁ ⊗ a, embedding the 2D Clifford generators as γ¹, γ².
pub fn iota_g(a: &CMat2) -> CMat4 {
    kron(&pauli(0), a)
}

/// ι_r(a) = I ⊗ a, the ring embedding.
pub fn iota_r(a: &CMat2) -> CMat4 {
    kron(&CMat2::identity(), a)
}

/// exp(σ³⁴θ) = cos θ·I + sin θ·σ³⁴.
pub fn gauge_rotation(theta: f64) -> CMat4 {
    let (s, c) = theta.sin_cos();
    CMat4::identity() * Complex64::from(c) + sigma34() * Complex64::from(s)
}

/// Spin transformation covering a frame rotation.
///
/// `u` satisfies `u γ^i u⁻¹ = Σ_μ R[i][μ] γ^μ`. The lift is only defined up
/// to a global sign; every bilinear is insensitive to it. With this
/// convention `lift(R₁R₂) = ±lift(R₂)·lift(R₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMatrix {
    /// e^{−Ω}.
    pub u: CMat4,
    /// Ω = ¼ Σ A_ij γ^i γ^j.
    pub generator: CMat4,
    /// The rotation has an invariant plane turned by π, where the principal
    /// logarithm is ambiguous; one branch was chosen.
    pub near_pi: bool,
}

impl SpinMatrix {
    pub fn identity() -> SpinMatrix {
        SpinMatrix {
            u: CMat4::identity(),
            generator: CMat4::zeros(),
            near_pi: false,
        }
    }

    /// The inverse, which equals the adjoint for a unitary `u`.
    pub fn inverse(&self) -> CMat4 {
        self.u.adjoint()
    }

    pub fn apply(&self, psi: &SpinorVec) -> SpinorVec {
        self.u * psi
    }
}

/// Tolerance for the special-orthogonal precondition of [`spin_lift`].
pub const SO4_TOLERANCE: f64 = 1e-10;
const NEAR_PI: f64 = 1e-9;

/// Spin lift of a rotation via its principal logarithm.
pub fn spin_lift(r: &Matrix4<f64>) -> Result<SpinMatrix, CliffordError> {
    let orthogonality = (r.transpose() * r - Matrix4::identity()).abs().max();
    let det = r.determinant();
    if orthogonality > SO4_TOLERANCE || (det - 1.0).abs() > SO4_TOLERANCE {
        return Err(CliffordError::NotSpecialOrthogonal { orthogonality, det });
    }
    let (a, near_pi) = principal_log(r);
    let g = gammas();
    let mut generator = CMat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            if i != j && a[(i, j)] != 0.0 {
                generator += g[i] * g[j] * Complex64::from(0.25 * a[(i, j)]);
            }
        }
    }
    let u = (-generator).exp();
    Ok(SpinMatrix { u, generator, near_pi })
}

/// Quaternion product of 4-vectors `(w, x, y, z)`.
fn quat_mul(p: &Vector4<f64>, q: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    )
}

fn quat_conj(q: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(q[0], -q[1], -q[2], -q[3])
}

/// Matrix of x ↦ p x.
fn left_mul(p: &Vector4<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| quat_mul(p, &Vector4::ith(c, 1.0))[r])
}

/// Matrix of x ↦ x q̄.
fn right_conj_mul(q: &Vector4<f64>) -> Matrix4<f64> {
    let qb = quat_conj(q);
    Matrix4::from_fn(|r, c| quat_mul(&Vector4::ith(c, 1.0), &qb)[r])
}

/// Real antisymmetric `A` with `exp(A) = R` and all rotation angles in
/// `[0, π]`, from the factorisation `R x = p x q̄` into commuting left and
/// right isoclinic rotations. The flag marks an invariant plane at angle π.
pub fn principal_log(r: &Matrix4<f64>) -> (Matrix4<f64>, bool) {
    // M[a][b] = ¼ tr((L_a R_b)ᵀ R) = p_a q_b since the L_a R_b are an orthogonal basis
    let units: [Vector4<f64>; 4] = std::array::from_fn(|k| Vector4::ith(k, 1.0));
    let m = Matrix4::from_fn(|a, b| {
        let basis = left_mul(&units[a]) * right_conj_mul(&units[b]);
        0.25 * basis.component_mul(r).sum()
    });
    let col = (0..4)
        .max_by(|&x, &y| m.column(x).norm().total_cmp(&m.column(y).norm()))
        .expect("four columns");
    let mut p: Vector4<f64> = m.column(col).normalize();
    let mut q: Vector4<f64> = (m.transpose() * p).normalize();

    let angle = |v: &Vector4<f64>| v.fixed_rows::<3>(1).norm().atan2(v[0]);
    let (mut a, mut b) = (angle(&p), angle(&q));
    if a + b > std::f64::consts::PI {
        p = -p;
        q = -q;
        a = angle(&p);
        b = angle(&q);
    }
    let near_pi = (a + b - std::f64::consts::PI).abs() < NEAR_PI;

    let axis = |v: &Vector4<f64>| -> Vector4<f64> {
        let im = Vector4::new(0.0, v[1], v[2], v[3]);
        let n = im.norm();
        if n > 0.0 {
            im / n
        } else {
            Vector4::new(0.0, 1.0, 0.0, 0.0)
        }
    };
    // left_mul(û) and right_conj_mul(v̂) square to −I, so exp(a·L) = L(p)
    let log = left_mul(&axis(&p)) * a + right_conj_mul(&axis(&q)) * b;
    (0.5 * (log - log.transpose()), near_pi)
}

/// Checks that `so4_pairing` of two spinors is real up to `tol`.
pub fn is_real_vector(v: &[Complex64; 4], tol: f64) -> bool {
    v.iter().all(|c| c.im.abs() <= tol)
}

//! Moving frames, induced metric, second fundamental form, normal
//! connection, gauge angle and tube metric of an immersed surface.
//!
//! Index conventions: `α, β ∈ {0, 1}` for the parameters and `ȧ, ḃ ∈ {0, 1}`
//! for the normals n₃, n₄.

use nalgebra::{Matrix2, Matrix4, Vector4};
use thiserror::Error;

use crate::expr::{EvalError, ImmersionSpec};

pub type Vec4 = Vector4<f64>;

/// Default finite-difference step in parameter units.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Standard basis vectors whose residual falls below this are skipped when
/// building the normal frame.
pub const PIVOT_SKIP: f64 = 1e-6;
/// Relative Gram residual below which the tangents count as dependent.
pub const DEGENERATE_GRAM: f64 = 1e-10;
/// Largest componentwise jump of an aligned normal between a point and its
/// stencil neighbours.
pub const BRANCH_JUMP: f64 = 0.5;
/// Mean-curvature magnitude below which the gauge angle is undefined.
pub const MINIMAL_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("at ({}, {}): {source}", point[0], point[1])]
    Eval {
        point: [f64; 2],
        #[source]
        source: EvalError,
    },
    #[error("degenerate immersion at ({}, {}): tangents are not independent", point[0], point[1])]
    Degenerate { point: [f64; 2] },
    #[error(
        "normal frame jumps near ({}, {}) (deviation {deviation:.3} after sign alignment)",
        point[0],
        point[1]
    )]
    FrameBranch { point: [f64; 2], deviation: f64 },
}

/// Pointwise frame data.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub s: [f64; 2],
    pub x: Vec4,
    /// Coordinate tangents `e[α] = ∂_α x`.
    pub e: [Vec4; 2],
    /// Second derivatives ∂₁∂₁x, ∂₁∂₂x, ∂₂∂₂x.
    pub d2x: [Vec4; 3],
    pub ehat: [Vec4; 2],
    /// Normals n₃, n₄.
    pub n: [Vec4; 2],
    pub g: Matrix2<f64>,
    pub g_inv: Matrix2<f64>,
    pub det_g: f64,
}

impl FrameData {
    pub fn d2(&self, alpha: usize, beta: usize) -> &Vec4 {
        &self.d2x[alpha + beta]
    }

    /// Columns ehat₁, ehat₂, n₃, n₄.
    pub fn frame_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_columns(&[self.ehat[0], self.ehat[1], self.n[0], self.n[1]])
    }

    /// Zweibein `f[(a, α)] = ehat_a · e_α`.
    pub fn zweibein(&self) -> Matrix2<f64> {
        Matrix2::from_fn(|a, alpha| self.ehat[a].dot(&self.e[alpha]))
    }

    /// Copy with both normals negated, which keeps the orientation.
    pub fn with_flipped_normals(&self) -> FrameData {
        FrameData {
            n: [-self.n[0], -self.n[1]],
            ..self.clone()
        }
    }

    /// n₃·n₃' + n₄·n₄', twice the cosine of the normal-plane angle between
    /// two oriented frames.
    pub fn normal_overlap(&self, other: &FrameData) -> f64 {
        self.n[0].dot(&other.n[0]) + self.n[1].dot(&other.n[1])
    }

    /// Flips the normal pair if that brings it closer to `reference`'s.
    pub fn aligned_to(&self, reference: &FrameData) -> FrameData {
        if self.normal_overlap(reference) < 0.0 {
            self.with_flipped_normals()
        } else {
            self.clone()
        }
    }

    fn normal_deviation(&self, reference: &FrameData) -> f64 {
        (0..2).map(|k| (self.n[k] - reference.n[k]).amax()).fold(0.0, f64::max)
    }

    /// Mean-curvature traces Γ^α_{ȧα} = −g^{αγ} n_ȧ·∂_α∂_γ x.
    pub fn traces(&self) -> [f64; 2] {
        let t = self.gamma_tan();
        [t[0][0][0] + t[0][1][1], t[1][0][0] + t[1][1][1]]
    }

    /// Γ^β_{ȧα} indexed `[ȧ][α][β]`, from the exact second jets.
    pub fn gamma_tan(&self) -> [[[f64; 2]; 2]; 2] {
        let mut out = [[[0.0; 2]; 2]; 2];
        for (a, plane) in out.iter_mut().enumerate() {
            for (alpha, row) in plane.iter_mut().enumerate() {
                for (beta, value) in row.iter_mut().enumerate() {
                    *value = -(0..2)
                        .map(|gamma| self.g_inv[(beta, gamma)] * self.n[a].dot(self.d2(alpha, gamma)))
                        .sum::<f64>();
                }
            }
        }
        out
    }
}

/// Orthonormal frame at `s`.
///
/// Tangents are Gram–Schmidt of (e₁, e₂). Normals are Gram–Schmidt of the
/// standard basis in index order, skipping vectors already (nearly) in the
/// span, with n₄ flipped if needed so the frame is positively oriented,
/// then rotated by the spec's frame-rotation angle θ as
/// n₃ = cos θ ñ₃ − sin θ ñ₄, n₄ = sin θ ñ₃ + cos θ ñ₄.
pub fn frame_at(spec: &ImmersionSpec, s: [f64; 2]) -> Result<FrameData, GeometryError> {
    let eval_err = |source| GeometryError::Eval { point: s, source };
    let jets = spec.position_jets(s).map_err(eval_err)?;
    let theta = spec.frame_rotation_at(s).map_err(eval_err)?;

    let x = Vec4::from_fn(|i, _| jets[i].value);
    let e = [0, 1].map(|alpha| Vec4::from_fn(|i, _| jets[i].grad[alpha]));
    let d2x = [0, 1, 2].map(|k| Vec4::from_fn(|i, _| jets[i].hess[k]));

    let degenerate = GeometryError::Degenerate { point: s };
    let n1 = e[0].norm();
    if n1 <= DEGENERATE_GRAM {
        return Err(degenerate);
    }
    let ehat1 = e[0] / n1;
    let mut r2 = e[1] - ehat1 * ehat1.dot(&e[1]);
    r2 -= ehat1 * ehat1.dot(&r2);
    let n2 = r2.norm();
    if n2 <= DEGENERATE_GRAM * e[1].norm().max(1.0) {
        return Err(degenerate);
    }
    let ehat = [ehat1, r2 / n2];

    let mut span: Vec<Vec4> = ehat.to_vec();
    for k in 0..4 {
        if span.len() == 4 {
            break;
        }
        let mut v = Vec4::ith(k, 1.0);
        for _ in 0..2 {
            for b in &span {
                v -= b * b.dot(&v);
            }
        }
        let norm = v.norm();
        if norm >= PIVOT_SKIP {
            span.push(v / norm);
        }
    }
    let mut n = [span[2], span[3]];
    if Matrix4::from_columns(&[ehat[0], ehat[1], n[0], n[1]]).determinant() < 0.0 {
        n[1] = -n[1];
    }
    if theta != 0.0 {
        let (sn, cs) = theta.sin_cos();
        n = [n[0] * cs - n[1] * sn, n[0] * sn + n[1] * cs];
    }

    let g = Matrix2::from_fn(|a, b| e[a].dot(&e[b]));
    let det_g = g.determinant();
    let g_inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det_g;
    Ok(FrameData {
        s,
        x,
        e,
        d2x,
        ehat,
        n,
        g,
        g_inv,
        det_g,
    })
}

/// Frames at `s` and at `s ± h δ_α`, `s ± (h/2) δ_α`, with every normal
/// pair sign-aligned to the centre.
#[derive(Debug, Clone)]
pub struct Stencil {
    pub h: f64,
    pub center: FrameData,
    /// `[α][k]` for offsets −h, −h/2, +h/2, +h.
    pub around: [[FrameData; 4]; 2],
}

const OFFSETS: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

impl Stencil {
    pub fn new(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<Stencil, GeometryError> {
        let center = frame_at(spec, s)?;
        Stencil::around_frame(spec, center, h)
    }

    /// Builds the stencil around an already computed (and possibly
    /// re-aligned) centre frame.
    pub fn around_frame(spec: &ImmersionSpec, center: FrameData, h: f64) -> Result<Stencil, GeometryError> {
        let s = center.s;
        let mut around: [[Option<FrameData>; 4]; 2] = Default::default();
        for alpha in 0..2 {
            for (k, offset) in OFFSETS.iter().enumerate() {
                let mut p = s;
                p[alpha] += offset * h;
                let frame = frame_at(spec, p)?.aligned_to(&center);
                let deviation = frame.normal_deviation(&center);
                if deviation > BRANCH_JUMP {
                    return Err(GeometryError::FrameBranch { point: s, deviation });
                }
                around[alpha][k] = Some(frame);
            }
        }
        let around = around.map(|row| row.map(|f| f.expect("filled above")));
        Ok(Stencil { h, center, around })
    }

    /// Richardson-extrapolated central difference of `f` along `alpha`:
    /// (4 D(h/2) − D(h)) / 3.
    pub fn derivative<T, F>(&self, alpha: usize, f: F) -> T
    where
        F: Fn(&FrameData) -> T,
        T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let [m1, m2, p2, p1] = &self.around[alpha];
        let coarse = (f(p1) - f(m1)) * (1.0 / (2.0 * self.h));
        let fine = (f(p2) - f(m2)) * (1.0 / self.h);
        fine * (4.0 / 3.0) + coarse * (-1.0 / 3.0)
    }

    /// Plain central difference with step `h` (no extrapolation).
    pub fn central<T, F>(&self, alpha: usize, f: F) -> T
    where
        F: Fn(&FrameData) -> T,
        T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let [m1, _, _, p1] = &self.around[alpha];
        (f(p1) - f(m1)) * (1.0 / (2.0 * self.h))
    }

    /// ∂_α n_ȧ indexed `[ȧ][α]`.
    pub fn normal_derivatives(&self) -> [[Vec4; 2]; 2] {
        [0, 1].map(|a| [0, 1].map(|alpha| self.derivative(alpha, |f| f.n[a])))
    }
}

/// Connection coefficients at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionData {
    /// Γ^β_{ȧα} indexed `[ȧ][α][β]`.
    pub gamma_tan: [[[f64; 2]; 2]; 2],
    /// Γ^ȧ_{αḃ} = ∂_α n_ḃ · n_ȧ indexed `[ȧ][α][ḃ]`.
    pub gamma_nor: [[[f64; 2]; 2]; 2],
    pub trace3: f64,
    pub trace4: f64,
    /// ∂_α of (trace3, trace4) indexed `[ȧ][α]`.
    pub trace_grad: [[f64; 2]; 2],
}

impl ConnectionData {
    /// Torsion Γ³_{α4} for α = 1, 2.
    pub fn torsion(&self) -> [f64; 2] {
        [self.gamma_nor[0][0][1], self.gamma_nor[0][1][1]]
    }

    /// √(trace3² + trace4²), independent of the normal frame.
    pub fn mean_curvature_norm(&self) -> f64 {
        self.trace3.hypot(self.trace4)
    }

    /// Largest |Γ^ȧ_{αḃ} + Γ^ḃ_{αȧ}|.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for alpha in 0..2 {
                for b in 0..2 {
                    worst = worst.max((self.gamma_nor[a][alpha][b] + self.gamma_nor[b][alpha][a]).abs());
                }
            }
        }
        worst
    }
}

pub fn connection_at(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<ConnectionData, GeometryError> {
    Ok(connection_from_stencil(&Stencil::new(spec, s, h)?))
}

pub fn connection_from_stencil(stencil: &Stencil) -> ConnectionData {
    let center = &stencil.center;
    let dn = stencil.normal_derivatives();
    let mut gamma_nor = [[[0.0; 2]; 2]; 2];
    for (a, plane) in gamma_nor.iter_mut().enumerate() {
        for (alpha, row) in plane.iter_mut().enumerate() {
            for (b, value) in row.iter_mut().enumerate() {
                *value = dn[b][alpha].dot(&center.n[a]);
            }
        }
    }
    let [trace3, trace4] = center.traces();
    let trace_grad = [0, 1].map(|a| [0, 1].map(|alpha| stencil.derivative(alpha, |f| f.traces()[a])));
    ConnectionData {
        gamma_tan: center.gamma_tan(),
        gamma_nor,
        trace3,
        trace4,
        trace_grad,
    }
}

/// The normal-frame rotation that zeroes the second trace.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeData {
    pub theta: f64,
    pub hat_trace3: f64,
    pub hat_trace4: f64,
    /// Γ̂³_{α4} = Γ³_{α4} + ∂_α ϑ.
    pub hat_torsion: [f64; 2],
    pub dtheta: [f64; 2],
    /// The point is minimal; ϑ is set to 0 and its gradient to 0.
    pub degenerate: bool,
}

pub fn gauge_at(conn: &ConnectionData) -> GaugeData {
    let (t3, t4) = (conn.trace3, conn.trace4);
    let r2 = t3 * t3 + t4 * t4;
    let degenerate = r2.sqrt() < MINIMAL_TRACE;
    let (theta, dtheta) = if degenerate {
        (0.0, [0.0; 2])
    } else {
        // ϑ = atan2(−t4, t3), differentiated through the traces
        let d = [0, 1].map(|alpha| (t4 * conn.trace_grad[0][alpha] - t3 * conn.trace_grad[1][alpha]) / r2);
        ((-t4).atan2(t3), d)
    };
    let torsion = conn.torsion();
    GaugeData {
        theta,
        hat_trace3: r2.sqrt(),
        hat_trace4: 0.0,
        hat_torsion: [torsion[0] + dtheta[0], torsion[1] + dtheta[1]],
        dtheta,
        degenerate,
    }
}

/// Metric and density of the tubular neighbourhood at normal offset `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSample {
    pub q: [f64; 2],
    /// Leading-order surface block of the tube metric.
    pub g_tube: Matrix2<f64>,
    /// Density from the numerical first fundamental form; equal to `rho_exact`.
    pub rho: f64,
    pub rho_exact: f64,
    /// (1 + Γ^α_{ȧα} q^ȧ)².
    pub rho_leading: f64,
}

pub fn tube_metric_at(spec: &ImmersionSpec, s: [f64; 2], q: [f64; 2], h: f64) -> Result<TubeSample, GeometryError> {
    let stencil = Stencil::new(spec, s, h)?;
    let f = &stencil.center;
    let gt = f.gamma_tan();
    let g = f.g;

    let mut g_tube = g;
    for alpha in 0..2 {
        for beta in 0..2 {
            let mut v = 0.0;
            for a in 0..2 {
                for gamma in 0..2 {
                    v += (gt[a][alpha][gamma] * g[(gamma, beta)] + g[(alpha, gamma)] * gt[a][beta][gamma]) * q[a];
                }
                for b in 0..2 {
                    for gamma in 0..2 {
                        for delta in 0..2 {
                            v += gt[a][alpha][delta] * g[(delta, gamma)] * gt[b][beta][gamma] * q[a] * q[b];
                        }
                    }
                }
            }
            g_tube[(alpha, beta)] += v;
        }
    }

    let [t3, t4] = f.traces();
    let rho_leading = (1.0 + t3 * q[0] + t4 * q[1]).powi(2);

    let rho_exact = if q == [0.0, 0.0] {
        1.0
    } else {
        // X(s, q) = x + q^ȧ n_ȧ has metric [[G, C], [Cᵀ, I]]
        let dn = stencil.normal_derivatives();
        let dx = [0, 1].map(|alpha| f.e[alpha] + dn[0][alpha] * q[0] + dn[1][alpha] * q[1]);
        let big_g = Matrix2::from_fn(|a, b| dx[a].dot(&dx[b]));
        let c = Matrix2::from_fn(|alpha, a| dx[alpha].dot(&f.n[a]));
        (big_g - c * c.transpose()).determinant() / f.det_g
    };

    Ok(TubeSample {
        q,
        g_tube,
        rho: rho_exact,
        rho_exact,
        rho_leading,
    })
}

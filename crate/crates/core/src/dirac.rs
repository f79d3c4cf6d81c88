//! The submanifold Dirac operator: pointwise symbols, finite-difference
//! application and periodic grid discretisation with dense spectra.
//!
//! With orthonormal frame (ehat₁, ehat₂, n₃, n₄) the operator reads
//!
//! ```text
//! D = A^α (∂_α + ½ω_α γ¹γ² + ½T_α σ³⁴) + ½γ³ tr₃ + ½γ⁴ tr₄
//! ```
//!
//! where A^α = (f⁻¹)^α_a γ^a, ω_α = ehat₁·∇_α ehat₂ is the 2D spin
//! connection, T_α = n₃·∂_α n₄ the normal connection and tr the
//! mean-curvature traces. The gauged operator conjugates D by the normal-plane
//! spin rotation through half the gauge angle, which trades T for
//! T̂ = T + ∂ϑ and the trace pair for (|tr|, 0).

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::clifford::{gamma, gammas, gauge_rotation, iota_r, pauli, sigma34, CMat4, SpinorVec};
use crate::expr::ImmersionSpec;
use crate::geometry::{
    connection_from_stencil, frame_at, gauge_at, ConnectionData, FrameData, GaugeData, GeometryError, Stencil,
};

/// Default largest matrix dimension handed to the dense eigensolver.
pub const DEFAULT_EIGEN_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiracError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("grid operators need a domain periodic in both parameters")]
    NotPeriodic,
    #[error("grid size {0} is below the minimum of 4")]
    GridTooSmall(usize),
    #[error("normal frame cannot be aligned consistently around the grid (site {site:?})")]
    Monodromy { site: [usize; 2] },
    #[error("matrix dimension {dim} exceeds the eigensolver cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
}

/// Zweibein and 2D spin connection.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConnection2D {
    /// `f[(a, α)] = ehat_a · e_α`.
    pub zweibein: Matrix2<f64>,
    /// `(f⁻¹)[(α, a)]`, the coordinate components of ehat_a.
    pub zweibein_inv: Matrix2<f64>,
    /// ω_α^{12} for α = 1, 2.
    pub omega: [f64; 2],
}

/// Levi-Civita symbols Γ^β_{αγ} indexed `[β][α][γ]` from exact metric derivatives.
pub fn christoffel(frame: &FrameData) -> [[[f64; 2]; 2]; 2] {
    // dg[γ][(α, β)] = ∂_γ g_{αβ}
    let dg = [0, 1].map(|c| Matrix2::from_fn(|a, b| frame.d2(c, a).dot(&frame.e[b]) + frame.e[a].dot(frame.d2(c, b))));
    let mut out = [[[0.0; 2]; 2]; 2];
    for (beta, plane) in out.iter_mut().enumerate() {
        for (alpha, row) in plane.iter_mut().enumerate() {
            for (gam, value) in row.iter_mut().enumerate() {
                *value = 0.5
                    * (0..2)
                        .map(|d| {
                            frame.g_inv[(beta, d)] * (dg[alpha][(d, gam)] + dg[gam][(d, alpha)] - dg[d][(alpha, gam)])
                        })
                        .sum::<f64>();
            }
        }
    }
    out
}

pub fn spin_connection_from_stencil(stencil: &Stencil) -> SpinConnection2D {
    let frame = &stencil.center;
    let f = frame.zweibein();
    let f_inv = f.try_inverse().expect("frame_at rejects degenerate tangents");
    let christ = christoffel(frame);
    let df_inv = [0, 1].map(|alpha| {
        stencil.derivative(alpha, |fr: &FrameData| {
            fr.zweibein()
                .try_inverse()
                .expect("frame_at rejects degenerate tangents")
        })
    });
    // ehat_a · ∇_α ehat_b
    let connection = |alpha: usize, a: usize, b: usize| -> f64 {
        (0..2)
            .map(|beta| {
                let cov = df_inv[alpha][(beta, b)]
                    + (0..2)
                        .map(|gam| christ[beta][alpha][gam] * f_inv[(gam, b)])
                        .sum::<f64>();
                f[(a, beta)] * cov
            })
            .sum()
    };
    let omega = [0, 1].map(|alpha| 0.5 * (connection(alpha, 0, 1) - connection(alpha, 1, 0)));
    SpinConnection2D {
        zweibein: f,
        zweibein_inv: f_inv,
        omega,
    }
}

pub fn spin_connection_at(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<SpinConnection2D, DiracError> {
    Ok(spin_connection_from_stencil(&Stencil::new(spec, s, h)?))
}

/// First-order operator `A^α ∂_α + B` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSymbol {
    pub a: [CMat4; 2],
    pub b: CMat4,
}

impl OperatorSymbol {
    /// Largest |A^αA^β + A^βA^α − 2g^{αβ}I|.
    pub fn clifford_defect(&self, g_inv: &Matrix2<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for alpha in 0..2 {
            for beta in 0..2 {
                let m = self.a[alpha] * self.a[beta] + self.a[beta] * self.a[alpha]
                    - CMat4::identity() * Complex64::from(2.0 * g_inv[(alpha, beta)]);
                worst = worst.max(m.iter().map(|c| c.norm()).fold(0.0, f64::max));
            }
        }
        worst
    }

    pub fn max_difference(&self, other: &OperatorSymbol) -> f64 {
        let d = |x: &CMat4, y: &CMat4| (x - y).iter().map(|c| c.norm()).fold(0.0, f64::max);
        d(&self.a[0], &other.a[0])
            .max(d(&self.a[1], &other.a[1]))
            .max(d(&self.b, &other.b))
    }
}

/// Everything the symbol needs at one point, computed from one stencil.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolData {
    pub frame: FrameData,
    pub connection: ConnectionData,
    pub gauge: GaugeData,
    pub spin: SpinConnection2D,
}

impl SymbolData {
    pub fn from_stencil(stencil: &Stencil) -> SymbolData {
        let connection = connection_from_stencil(stencil);
        let gauge = gauge_at(&connection);
        SymbolData {
            frame: stencil.center.clone(),
            spin: spin_connection_from_stencil(stencil),
            connection,
            gauge,
        }
    }

    pub fn at(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<SymbolData, DiracError> {
        Ok(SymbolData::from_stencil(&Stencil::new(spec, s, h)?))
    }

    /// A^α = ι_g(σ^α) = (f⁻¹)^α_a γ^a.
    pub fn coefficients(&self) -> [CMat4; 2] {
        let g = gammas();
        let f_inv = &self.spin.zweibein_inv;
        [0, 1].map(|alpha| g[0] * Complex64::from(f_inv[(alpha, 0)]) + g[1] * Complex64::from(f_inv[(alpha, 1)]))
    }

    pub fn symbol(&self, gauged: bool) -> OperatorSymbol {
        let a = self.coefficients();
        let spin_part = iota_r(&(pauli(0) * pauli(1)));
        let sigma = sigma34();
        let (torsion, zeroth) = if gauged {
            let zeroth = gamma(3).expect("in range") * Complex64::from(0.5 * self.gauge.hat_trace3);
            (self.gauge.hat_torsion, zeroth)
        } else {
            let g = gammas();
            let zeroth = g[2] * Complex64::from(0.5 * self.connection.trace3)
                + g[3] * Complex64::from(0.5 * self.connection.trace4);
            (self.connection.torsion(), zeroth)
        };
        let mut b = zeroth;
        for alpha in 0..2 {
            let inner = spin_part * Complex64::from(0.5 * self.spin.omega[alpha])
                + sigma * Complex64::from(0.5 * torsion[alpha]);
            b += a[alpha] * inner;
        }
        OperatorSymbol { a, b }
    }

    /// Half-angle normal-plane rotation G(ϑ/2) relating the two symbols:
    /// gauged = G(ϑ/2)⁻¹ · plain · G(ϑ/2) with ϑ as a field.
    pub fn gauge_half_rotation(&self) -> CMat4 {
        gauge_rotation(0.5 * self.gauge.theta)
    }
}

pub fn dirac_symbol(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<OperatorSymbol, DiracError> {
    Ok(SymbolData::at(spec, s, h)?.symbol(false))
}

pub fn gauged_dirac_symbol(spec: &ImmersionSpec, s: [f64; 2], h: f64) -> Result<OperatorSymbol, DiracError> {
    Ok(SymbolData::at(spec, s, h)?.symbol(true))
}

/// `A^α (ψ(s + hδ_α) − ψ(s − hδ_α)) / 2h + B ψ(s)`.
pub fn apply_pointwise<E>(
    symbol: &OperatorSymbol,
    mut psi: impl FnMut([f64; 2]) -> Result<SpinorVec, E>,
    s: [f64; 2],
    h: f64,
) -> Result<SpinorVec, E> {
    let mut out = symbol.b * psi(s)?;
    for alpha in 0..2 {
        let mut plus = s;
        let mut minus = s;
        plus[alpha] += h;
        minus[alpha] -= h;
        let diff = (psi(plus)? - psi(minus)?) / Complex64::from(2.0 * h);
        out += symbol.a[alpha] * diff;
    }
    Ok(out)
}

/// A first-order operator discretised on a periodic grid.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub dims: [usize; 2],
    pub spacing: [f64; 2],
    /// Parameter values of the sites; site `(i, j)` is entry `i * dims[1] + j`.
    pub sites: Vec<[f64; 2]>,
    pub symbols: Vec<OperatorSymbol>,
    pub matrix: DMatrix<Complex64>,
    /// √det g, one entry per matrix row.
    pub weight: DVector<f64>,
    pub gauged: bool,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn site_index(&self, i: usize, j: usize) -> usize {
        i * self.dims[1] + j
    }

    /// True when every site carries the same symbol to `tol`.
    pub fn is_constant_coefficient(&self, tol: f64) -> bool {
        self.symbols.iter().all(|s| s.max_difference(&self.symbols[0]) <= tol)
    }

    /// ⟨φ, ψ⟩_W = Σ W φ̄ ψ h₁h₂.
    pub fn inner(&self, phi: &DVector<Complex64>, psi: &DVector<Complex64>) -> Complex64 {
        let cell = self.spacing[0] * self.spacing[1];
        phi.iter()
            .zip(psi.iter())
            .zip(self.weight.iter())
            .map(|((p, q), w)| p.conj() * q * (w * cell))
            .sum()
    }

    /// Samples a spinor field at the grid sites.
    pub fn sample(&self, field: impl Fn([f64; 2]) -> SpinorVec) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim());
        for (k, s) in self.sites.iter().enumerate() {
            out.fixed_rows_mut::<4>(4 * k).copy_from(&field(*s));
        }
        out
    }

    /// Block-diagonal operator applying `m(site)` at every site.
    pub fn block_diagonal(&self, m: impl Fn(usize) -> CMat4) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..self.sites.len() {
            out.fixed_view_mut::<4, 4>(4 * k, 4 * k).copy_from(&m(k));
        }
        out
    }
}

/// Computes frames at the sites and aligns their normal pairs by
/// breadth-first search from site (0, 0), then checks every grid edge.
fn aligned_frames(spec: &ImmersionSpec, sites: &[[f64; 2]], dims: [usize; 2]) -> Result<Vec<FrameData>, DiracError> {
    let mut frames = sites
        .par_iter()
        .map(|s| frame_at(spec, *s))
        .collect::<Result<Vec<_>, _>>()?;
    let [n1, n2] = dims;
    let index = |i: usize, j: usize| i * n2 + j;
    let neighbours = |i: usize, j: usize| {
        [
            ((i + 1) % n1, j),
            ((i + n1 - 1) % n1, j),
            (i, (j + 1) % n2),
            (i, (j + n2 - 1) % n2),
        ]
    };
    let mut seen = vec![false; frames.len()];
    let mut queue = VecDeque::from([(0, 0)]);
    seen[0] = true;
    while let Some((i, j)) = queue.pop_front() {
        for (a, b) in neighbours(i, j) {
            let k = index(a, b);
            if !seen[k] {
                seen[k] = true;
                frames[k] = frames[k].aligned_to(&frames[index(i, j)]);
                queue.push_back((a, b));
            }
        }
    }
    for i in 0..n1 {
        for j in 0..n2 {
            for (a, b) in neighbours(i, j) {
                if frames[index(i, j)].normal_overlap(&frames[index(a, b)]) <= 0.0 {
                    return Err(DiracError::Monodromy { site: [i, j] });
                }
            }
        }
    }
    Ok(frames)
}

/// Periodic central-difference discretisation on an `n1 × n2` grid.
pub fn assemble_grid_operator(
    spec: &ImmersionSpec,
    n1: usize,
    n2: usize,
    gauged: bool,
    h: f64,
) -> Result<DiscreteOperator, DiracError> {
    if !spec.is_fully_periodic() {
        return Err(DiracError::NotPeriodic);
    }
    if n1.min(n2) < 4 {
        return Err(DiracError::GridTooSmall(n1.min(n2)));
    }
    let dims = [n1, n2];
    let spacing = [spec.domain[0].width() / n1 as f64, spec.domain[1].width() / n2 as f64];
    let sites: Vec<[f64; 2]> = (0..n1)
        .flat_map(|i| {
            (0..n2).map(move |j| {
                [
                    spec.domain[0].lo + i as f64 * spacing[0],
                    spec.domain[1].lo + j as f64 * spacing[1],
                ]
            })
        })
        .collect();
    let frames = aligned_frames(spec, &sites, dims)?;
    let data = frames
        .into_par_iter()
        .map(|frame| Ok(SymbolData::from_stencil(&Stencil::around_frame(spec, frame, h)?)))
        .collect::<Result<Vec<_>, DiracError>>()?;
    let symbols: Vec<OperatorSymbol> = data.iter().map(|d| d.symbol(gauged)).collect();

    let dim = 4 * n1 * n2;
    let mut matrix = DMatrix::zeros(dim, dim);
    let mut weight = DVector::zeros(dim);
    for i in 0..n1 {
        for j in 0..n2 {
            let k = i * n2 + j;
            let sym = &symbols[k];
            let mut block = |col: usize, m: &CMat4| {
                let mut view = matrix.fixed_view_mut::<4, 4>(4 * k, 4 * col);
                view += m;
            };
            block(k, &sym.b);
            let steps = [
                (0, ((i + 1) % n1) * n2 + j, ((i + n1 - 1) % n1) * n2 + j),
                (1, i * n2 + (j + 1) % n2, i * n2 + (j + n2 - 1) % n2),
            ];
            for (alpha, plus, minus) in steps {
                let c = sym.a[alpha] / Complex64::from(2.0 * spacing[alpha]);
                block(plus, &c);
                block(minus, &-c);
            }
            let w = data[k].frame.det_g.sqrt();
            weight.rows_mut(4 * k, 4).fill(w);
        }
    }
    Ok(DiscreteOperator {
        dims,
        spacing,
        sites,
        symbols,
        matrix,
        weight,
        gauged,
    })
}

/// Full spectrum of a dense complex matrix, sorted by real part then
/// imaginary part.
pub fn eigenvalues_of(matrix: &DMatrix<Complex64>, cap: usize) -> Result<Vec<Complex64>, DiracError> {
    let dim = matrix.nrows();
    if dim > cap {
        return Err(DiracError::CapExceeded { dim, cap });
    }
    let dense = faer::Mat::<Complex64>::from_fn(dim, dim, |r, c| matrix[(r, c)]);
    let mut values = dense.eigenvalues().map_err(|_| DiracError::NoConvergence)?;
    sort_spectrum(&mut values);
    Ok(values)
}

pub fn eigenvalues(op: &DiscreteOperator, cap: usize) -> Result<Vec<Complex64>, DiracError> {
    eigenvalues_of(&op.matrix, cap)
}

pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Spectrum of a constant-coefficient operator from its Fourier blocks
/// `i Σ_α sin(m_α h_α)/h_α A^α + B`, m_α = 0..N_α.
pub fn fourier_spectrum(
    symbol: &OperatorSymbol,
    dims: [usize; 2],
    spacing: [f64; 2],
) -> Result<Vec<Complex64>, DiracError> {
    let mut values = Vec::with_capacity(4 * dims[0] * dims[1]);
    for m1 in 0..dims[0] {
        for m2 in 0..dims[1] {
            let k = [(m1, 0), (m2, 1)].map(|(m, alpha)| {
                let phase = 2.0 * std::f64::consts::PI * m as f64 / dims[alpha] as f64;
                phase.sin() / spacing[alpha]
            });
            let block = symbol.a[0] * Complex64::new(0.0, k[0]) + symbol.a[1] * Complex64::new(0.0, k[1]) + symbol.b;
            let dyn_block = DMatrix::from_iterator(4, 4, block.iter().copied());
            values.extend(eigenvalues_of(&dyn_block, 4)?);
        }
    }
    sort_spectrum(&mut values);
    Ok(values)
}

/// Largest distance in a greedy nearest-neighbour matching of two multisets.
/// Returns `f64::INFINITY` when the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (best, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("sizes match");
        used[best] = true;
        worst = worst.max(d);
    }
    worst
}

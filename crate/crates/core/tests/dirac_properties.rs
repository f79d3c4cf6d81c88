use dirac_surface::clifford::{gamma, CMat4};
use dirac_surface::corpus;
use dirac_surface::dirac::{assemble_grid_operator, DiscreteOperator};
use dirac_surface::geometry::{connection_at, DEFAULT_STEP};
use nalgebra::{DVector, Vector4};
use num_complex::Complex64;

fn phi(s: [f64; 2]) -> Vector4<Complex64> {
    let [u, v] = s;
    Vector4::new(
        Complex64::from_polar(1.0, u),
        Complex64::new(v.cos(), (u + v).sin()),
        Complex64::new(0.5, 0.0),
        Complex64::new(0.0, (2.0 * v).sin()),
    )
}

fn psi(s: [f64; 2]) -> Vector4<Complex64> {
    let [u, v] = s;
    Vector4::new(
        Complex64::new((u - v).sin(), 0.0),
        Complex64::from_polar(1.0, -v),
        Complex64::new(u.cos() * v.cos(), 0.2),
        Complex64::new(1.0, u.sin()),
    )
}

/// Part of the zeroth-order term along γ³ and γ⁴. The other terms are
/// products of one or three gammas from {γ¹, γ²} and {γ^a γ³γ⁴}, all
/// orthogonal to these two.
fn mean_curvature_term(b: &CMat4) -> CMat4 {
    [3, 4].iter().fold(CMat4::zeros(), |acc, &i| {
        let g = gamma(i).unwrap();
        acc + g * Complex64::from((g * b).trace().re / 4.0)
    })
}

/// |⟨φ, Dψ⟩ + ⟨Dφ, ψ⟩ − 2⟨φ, B_H ψ⟩| with B_H the mean-curvature coupling.
fn ibp_defect(op: &DiscreteOperator) -> f64 {
    let (p, q) = (op.sample(phi), op.sample(psi));
    let mean = op.block_diagonal(|k| mean_curvature_term(&op.symbols[k].b));
    let dp: DVector<Complex64> = &op.matrix * &p;
    let dq: DVector<Complex64> = &op.matrix * &q;
    let bq: DVector<Complex64> = &mean * &q;
    (op.inner(&p, &dq) + op.inner(&dp, &q) - op.inner(&p, &bq) * 2.0).norm()
}

#[test]
fn integration_by_parts_is_exact_on_clifford() {
    for n in [8, 16] {
        let op = assemble_grid_operator(&corpus::load("clifford"), n, n, false, DEFAULT_STEP).unwrap();
        assert!(ibp_defect(&op) <= 1e-12, "N = {n}");
    }
}

#[test]
fn integration_by_parts_converges_on_torus_of_revolution() {
    let spec = corpus::load("torus-revolution");
    let coarse = ibp_defect(&assemble_grid_operator(&spec, 8, 8, false, DEFAULT_STEP).unwrap());
    let fine = ibp_defect(&assemble_grid_operator(&spec, 16, 16, false, DEFAULT_STEP).unwrap());
    assert!(coarse / fine >= 3.5, "{coarse:e} -> {fine:e}");
}

#[test]
fn mean_curvature_term_matches_the_traces() {
    let spec = corpus::load("torus-revolution");
    let op = assemble_grid_operator(&spec, 8, 8, false, DEFAULT_STEP).unwrap();
    for (k, s) in op.sites.iter().enumerate() {
        let term = mean_curvature_term(&op.symbols[k].b);
        let c = connection_at(&spec, *s, DEFAULT_STEP).unwrap();
        let expected =
            gamma(3).unwrap() * Complex64::from(0.5 * c.trace3) + gamma(4).unwrap() * Complex64::from(0.5 * c.trace4);
        // normals on the grid may be flipped relative to the standalone frame
        let gap = (term - expected).norm().min((term + expected).norm());
        assert!(gap <= 1e-8, "{s:?}");
    }
}

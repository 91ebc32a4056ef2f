//! Built-in reference models used throughout the test suites and the README.
//!
//! Each constructor returns a fully admissible parameter set with a known
//! closed-form story, so solver output can be checked against independent
//! oracles.

use crate::expr::ExprDef;
use crate::model::{AffineParams, Atom, JumpMeasure};
use crate::model::{TailDecay};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// One-factor pure-jump model on R_+ with κ_1 = Σ_n δ_n / n² and the drift
/// β_1 = Σ 1/n² = π²/6 that cancels the jump compensator.
///
/// The wedge moment Σ n·n^{-2} = Σ 1/n diverges, so the easy sufficient
/// conservativeness condition fails, yet R_1(u) = Σ (e^{un}-1)/n² satisfies
/// the Osgood condition and the process is conservative.
pub fn dirac_series() -> AffineParams {
    let mu = JumpMeasure::SeriesAtomic {
        point_exprs: vec![ExprDef::parse("n").unwrap()],
        weight_expr: ExprDef::parse("1/n^2").unwrap(),
        tail: TailDecay { c: 1.0, p: 2.0 },
        truncation_tol: 1e-10,
    };
    AffineParams::new(
        1,
        0,
        vec![DMatrix::zeros(1, 1); 2],
        vec![vec![0.0], vec![PI * PI / 6.0]],
        vec![0.0, 0.0],
        vec![JumpMeasure::zero(), mu],
    )
    .unwrap()
}

/// One-sided stable-1/2 model: κ_1(dξ) = ξ^{-3/2} dξ on (0, ∞) with drift
/// β_1 = ∫ h dκ_1 = 4, so R_1(u) = -2√π·(-u)^{1/2}.
///
/// The restricted flow separates: -ψ(t,u) = ((-u)^{1/2} + √π t)², the Osgood
/// integral converges, and the minimal solution from zero is ψ(t,0) = -π t².
/// The process is not conservative.
pub fn stable_half() -> AffineParams {
    let kappa = JumpMeasure::Density {
        density_expr: ExprDef::parse("xi1^(-1.5)").unwrap(),
        domain: vec![(Some(0.0), None)],
        tail_zero: -1.5,
        tail_inf: -1.5,
        quadrature_tol: 1e-8,
    };
    AffineParams::new(
        1,
        0,
        vec![DMatrix::zeros(1, 1); 2],
        vec![vec![0.0], vec![4.0]],
        vec![0.0, 0.0],
        vec![JumpMeasure::zero(), kappa],
    )
    .unwrap()
}

/// Two-component model on R_+ × R with paired jumps (n, n) of weight
/// 1/((1+n)n²) driven by the first coordinate, drift chosen so that E(X²) is
/// a positive local martingale:
///
///   β_1 = ( Σ 1/((1+n)n²), Σ (1-n)/((1+n)n²) ).
///
/// Reweighting by (1+ξ₂) turns the jump weights into exactly 1/n², i.e. the
/// first-coordinate marginal of the star measure is the `dirac_series`
/// measure, and E(X²) is in fact a true martingale.
pub fn paired_jump() -> AffineParams {
    let kappa = JumpMeasure::SeriesAtomic {
        point_exprs: vec![ExprDef::parse("n").unwrap(), ExprDef::parse("n").unwrap()],
        weight_expr: ExprDef::parse("1/((1+n)*n^2)").unwrap(),
        tail: TailDecay { c: 1.0, p: 3.0 },
        truncation_tol: 1e-10,
    };
    // Σ 1/((1+n)n²) = π²/6 - 1 and Σ (n-1)/((1+n)n²) = 2 - π²/6, both by
    // partial fractions and telescoping. The second fixes the drift identity
    // β²_1 = -Σ (ξ₂ - h₂(ξ)) κ_1 = -(2 - π²/6).
    let beta1_1 = PI * PI / 6.0 - 1.0;
    let beta1_2 = PI * PI / 6.0 - 2.0;
    AffineParams::new(
        1,
        1,
        vec![DMatrix::zeros(2, 2); 3],
        vec![vec![0.0, 0.0], vec![beta1_1, beta1_2], vec![0.0, 0.0]],
        vec![0.0; 3],
        vec![JumpMeasure::zero(), kappa, JumpMeasure::zero()],
    )
    .unwrap()
}

/// Pure drift on R_+: R_1(u) = b·u — the Lipschitz reference case.
pub fn linear_drift(b: f64) -> AffineParams {
    AffineParams::new(
        1,
        0,
        vec![DMatrix::zeros(1, 1); 2],
        vec![vec![0.0], vec![b]],
        vec![0.0, 0.0],
        vec![JumpMeasure::zero(); 2],
    )
    .unwrap()
}

/// Brownian component with unit diffusion on coordinate i (1-based) of an
/// m = 0, n = dim state space; all drifts zero.
pub fn pure_diffusion(dim: usize, i: usize) -> AffineParams {
    let mut a0 = DMatrix::zeros(dim, dim);
    a0[(i - 1, i - 1)] = 1.0;
    let mut alpha = vec![a0];
    alpha.extend(std::iter::repeat(DMatrix::zeros(dim, dim)).take(dim));
    AffineParams::new(
        0,
        dim,
        alpha,
        vec![vec![0.0; dim]; dim + 1],
        vec![0.0; dim + 1],
        vec![JumpMeasure::zero(); dim + 1],
    )
    .unwrap()
}

/// State-independent compound Poisson: κ_0 a single atom at `point` with
/// total rate `rate`, on an m = 0, n = dim space.
pub fn poisson_atom(dim: usize, point: Vec<f64>, rate: f64) -> AffineParams {
    let kappa0 = JumpMeasure::FiniteAtomic {
        atoms: vec![Atom::new(point, rate)],
    };
    let mut kappa = vec![kappa0];
    kappa.extend(std::iter::repeat(JumpMeasure::zero()).take(dim));
    AffineParams::new(
        0,
        dim,
        vec![DMatrix::zeros(dim, dim); dim + 1],
        vec![vec![0.0; dim]; dim + 1],
        vec![0.0; dim + 1],
        kappa,
    )
    .unwrap()
}

/// Finite-activity heavy-jump surrogate on R_+: atoms at ξ = 1..N with
/// weights 1/n², jumps driven by the state coordinate itself.
pub fn heavy_jump_truncated(n_atoms: usize) -> AffineParams {
    let atoms: Vec<Atom> = (1..=n_atoms)
        .map(|k| Atom::new(vec![k as f64], 1.0 / (k as f64 * k as f64)))
        .collect();
    AffineParams::new(
        1,
        0,
        vec![DMatrix::zeros(1, 1); 2],
        vec![vec![0.0], vec![0.0]],
        vec![0.0, 0.0],
        vec![JumpMeasure::zero(), JumpMeasure::FiniteAtomic { atoms }],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_admissibility;

    #[test]
    fn reference_models_are_admissible() {
        for (name, p) in [
            ("dirac_series", dirac_series()),
            ("stable_half", stable_half()),
            ("paired_jump", paired_jump()),
            ("linear_drift", linear_drift(-0.5)),
            ("pure_diffusion", pure_diffusion(2, 2)),
            ("poisson_atom", poisson_atom(1, vec![1.0], 2.0)),
            ("heavy_jump_truncated", heavy_jump_truncated(50)),
        ] {
            let v = validate_admissibility(&p);
            assert!(v.is_empty(), "{name}: {v:?}");
        }
    }

    #[test]
    fn paired_jump_drift_matches_series() {
        // oracle: direct partial sums with telescoping remainder
        let n = 1_000_000u64;
        let s1: f64 = (1..=n)
            .map(|k| {
                let k = k as f64;
                1.0 / ((1.0 + k) * k * k)
            })
            .sum();
        let s2: f64 = (1..=n)
            .map(|k| {
                let k = k as f64;
                (k - 1.0) / ((1.0 + k) * k * k)
            })
            .sum();
        let p = paired_jump();
        assert!((p.beta(1)[0] - s1).abs() < 1e-5, "{} vs {}", p.beta(1)[0], s1);
        assert!((p.beta(1)[1] + s2).abs() < 1e-5, "{} vs {}", p.beta(1)[1], s2);
    }
}

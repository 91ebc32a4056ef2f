//! Jump-measure representations.
//!
//! A measure κ on D∖{0} comes in three concrete kinds:
//!
//! * `FiniteAtomic` — an explicit list of weighted atoms; every integral is an
//!   exact finite sum.
//! * `SeriesAtomic` — atoms generated by expressions in the index `n ≥ 1`
//!   with a declared power-law weight tail `w(n) ~ c·n^{-p}`. The declared
//!   exponent is what makes convergence classification decidable rather than
//!   heuristic.
//! * `Density` — a density expression over a coordinate box, with declared
//!   edge exponents at the origin and at infinity.
//!
//! The zero measure is a `FiniteAtomic` with no atoms.

use crate::expr::ExprDef;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(point: Vec<f64>, weight: f64) -> Self {
        Atom { point, weight }
    }
}

/// Declared asymptotic weight decay: weight(n) ~ c·n^{-p}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDecay {
    pub c: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpMeasure {
    FiniteAtomic {
        atoms: Vec<Atom>,
    },
    SeriesAtomic {
        point_exprs: Vec<ExprDef>,
        weight_expr: ExprDef,
        tail: TailDecay,
        truncation_tol: f64,
    },
    Density {
        density_expr: ExprDef,
        /// Per-coordinate interval; `None` bound = infinite.
        domain: Vec<(Option<f64>, Option<f64>)>,
        tail_zero: f64,
        tail_inf: f64,
        quadrature_tol: f64,
    },
}

impl JumpMeasure {
    pub fn zero() -> Self {
        JumpMeasure::FiniteAtomic { atoms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, JumpMeasure::FiniteAtomic { atoms } if atoms.is_empty())
    }

    /// Point dimension, if the representation pins one down.
    pub fn dim(&self) -> Option<usize> {
        match self {
            JumpMeasure::FiniteAtomic { atoms } => atoms.first().map(|a| a.point.len()),
            JumpMeasure::SeriesAtomic { point_exprs, .. } => Some(point_exprs.len()),
            JumpMeasure::Density { domain, .. } => Some(domain.len()),
        }
    }

    /// Evaluate the n-th series atom (n ≥ 1). Valid at real n as well, which
    /// the tail-integral machinery relies on.
    pub fn series_point(&self, n: f64) -> Option<Vec<f64>> {
        match self {
            JumpMeasure::SeriesAtomic { point_exprs, .. } => {
                Some(point_exprs.iter().map(|e| e.eval(n, &[])).collect())
            }
            _ => None,
        }
    }

    pub fn series_weight(&self, n: f64) -> Option<f64> {
        match self {
            JumpMeasure::SeriesAtomic { weight_expr, .. } => Some(weight_expr.eval(n, &[])),
            _ => None,
        }
    }
}

/// Empirically estimated asymptotic behaviour of a scalar sequence g(n) (or a
/// function along a coordinate ray).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// All probed values were exactly zero.
    EventuallyZero,
    /// |g| ~ n^e with a stable log-log slope.
    Power(f64),
    /// Log-log slope keeps increasing — faster than any power.
    Superpolynomial,
    /// No stable classification.
    Irregular,
}

impl Growth {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            Growth::Power(e) => Some(*e),
            Growth::EventuallyZero => Some(f64::NEG_INFINITY),
            _ => None,
        }
    }
}

/// Probe |g| at geometric arguments 2^3 .. 2^40 and classify the growth from
/// the log-log slopes. Stable slopes at the far end give `Power`;
/// monotonically accelerating slopes (or finite values climbing into
/// overflow) give `Superpolynomial`.
pub fn estimate_growth<F: Fn(f64) -> f64>(g: F) -> Growth {
    const KS: [f64; 15] = [
        3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 36.0, 40.0,
    ];
    let vals: Vec<f64> = KS.iter().map(|&k| g(k.exp2()).abs()).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        // Overflow at large arguments is itself superpolynomial growth when
        // the values were already climbing steeply beforehand.
        let finite: Vec<f64> = vals
            .iter()
            .take_while(|v| v.is_finite())
            .copied()
            .collect();
        if finite.len() >= 3 && finite.windows(2).all(|w| w[1] >= w[0]) {
            return Growth::Superpolynomial;
        }
        return Growth::Irregular;
    }
    if vals.iter().all(|&v| v == 0.0) {
        return Growth::EventuallyZero;
    }
    if vals.iter().any(|&v| v == 0.0) {
        // zeros mixed with non-zeros: only trust an all-zero tail
        if vals.iter().skip_while(|&&v| v != 0.0).all(|&v| v == 0.0)
            && vals.last() == Some(&0.0)
        {
            return Growth::EventuallyZero;
        }
        return Growth::Irregular;
    }
    let slopes: Vec<f64> = vals
        .windows(2)
        .zip(KS.windows(2))
        .map(|(w, k)| (w[1].ln() - w[0].ln()) / ((k[1] - k[0]) * std::f64::consts::LN_2))
        .collect();
    let last = *slopes.last().unwrap();
    let tail = &slopes[slopes.len().saturating_sub(3)..];
    let stable = tail.iter().all(|s| (s - last).abs() <= 0.02 * (1.0 + last.abs()));
    if stable {
        return Growth::Power(last);
    }
    let accelerating = slopes.windows(2).all(|w| w[1] >= w[0] - 1e-9) && last > 2.0;
    if accelerating {
        Growth::Superpolynomial
    } else {
        Growth::Irregular
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprDef;

    fn series(points: &[&str], w: &str, c: f64, p: f64) -> JumpMeasure {
        JumpMeasure::SeriesAtomic {
            point_exprs: points.iter().map(|s| ExprDef::parse(s).unwrap()).collect(),
            weight_expr: ExprDef::parse(w).unwrap(),
            tail: TailDecay { c, p },
            truncation_tol: 1e-10,
        }
    }

    #[test]
    fn growth_classification() {
        assert!(matches!(estimate_growth(|x| x), Growth::Power(e) if (e - 1.0).abs() < 1e-9));
        assert!(
            matches!(estimate_growth(|x| 3.0 / (x * x)), Growth::Power(e) if (e + 2.0).abs() < 1e-9)
        );
        assert!(matches!(estimate_growth(|x| (1.0 + x).ln()), Growth::Power(e) if e.abs() < 0.05));
        assert!(matches!(estimate_growth(|x| x.exp() - 1.0), Growth::Superpolynomial));
        assert!(matches!(estimate_growth(|_| 0.0), Growth::EventuallyZero));
        // bounded coordinate: |h| of a shrinking point is eventually the point itself
        assert!(
            matches!(estimate_growth(|x| (1.0 / x).min(1.0)), Growth::Power(e) if (e + 1.0).abs() < 0.05)
        );
    }

    #[test]
    fn series_points_evaluate_at_real_arguments() {
        let m = series(&["n", "n"], "1/((1+n)*n^2)", 1.0, 3.0);
        assert_eq!(m.series_point(2.0).unwrap(), vec![2.0, 2.0]);
        let w = m.series_weight(2.5).unwrap();
        assert!((w - 1.0 / (3.5 * 6.25)).abs() < 1e-15);
        assert_eq!(m.dim(), Some(2));
    }

    #[test]
    fn zero_measure() {
        assert!(JumpMeasure::zero().is_zero());
        assert_eq!(JumpMeasure::zero().dim(), None);
    }
}

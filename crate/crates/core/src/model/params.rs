//! Admissible parameter tuples (α, β, γ, κ) on the state space R_+^m × R^n.
//!
//! `AffineParams::new` checks only dimensional consistency; the structural
//! admissibility conditions are checked by [`validate_admissibility`], which
//! returns one record per violated bullet so callers can report all of them
//! at once. Integral conditions are resolved through the measure engine and
//! may come back inconclusive; such records carry `conclusive: false`.

use super::measure::JumpMeasure;
use super::{classify_moment, measure_integral, MomentKind, Outcome, DRIFT_SLACK, MOMENT_TOL};
use nalgebra::DMatrix;
use std::fmt;
use thiserror::Error;

/// Componentwise truncation: h_k(ξ) = 0 if ξ_k = 0, else (1 ∧ |ξ_k|)·ξ_k/|ξ_k|,
/// which is exactly a clamp to [-1, 1].
pub fn truncation_h_scalar(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

pub fn truncation_h(xi: &[f64]) -> Vec<f64> {
    xi.iter().map(|&x| truncation_h_scalar(x)).collect()
}

#[derive(Debug, Error, Clone)]
pub enum ParamsError {
    #[error("state dimension must satisfy d = m + n >= 1")]
    ZeroDimension,
    #[error("{field} must have d+1 = {expected} entries, got {got}")]
    WrongCount {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("alpha[{j}] must be {d}x{d}")]
    WrongMatrixShape { j: usize, d: usize },
    #[error("beta[{j}] must have length {d}")]
    WrongVectorLength { j: usize, d: usize },
    #[error("kappa[{j}] has point dimension {got}, expected {d}")]
    WrongMeasureDim { j: usize, got: usize, d: usize },
    #[error("kappa[{j}] references coordinate xi{k} beyond dimension {d}")]
    BadCoordinateIndex { j: usize, k: usize, d: usize },
}

/// Full admissible-parameter tuple; the single source of truth for a process.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineParams {
    m: usize,
    n: usize,
    alpha: Vec<DMatrix<f64>>,
    beta: Vec<Vec<f64>>,
    gamma: Vec<f64>,
    kappa: Vec<JumpMeasure>,
}

impl AffineParams {
    pub fn new(
        m: usize,
        n: usize,
        alpha: Vec<DMatrix<f64>>,
        beta: Vec<Vec<f64>>,
        gamma: Vec<f64>,
        kappa: Vec<JumpMeasure>,
    ) -> Result<Self, ParamsError> {
        let d = m + n;
        if d == 0 {
            return Err(ParamsError::ZeroDimension);
        }
        let check_count = |field: &'static str, got: usize| {
            if got != d + 1 {
                Err(ParamsError::WrongCount {
                    field,
                    expected: d + 1,
                    got,
                })
            } else {
                Ok(())
            }
        };
        check_count("alpha", alpha.len())?;
        check_count("beta", beta.len())?;
        check_count("gamma", gamma.len())?;
        check_count("kappa", kappa.len())?;
        for (j, a) in alpha.iter().enumerate() {
            if a.nrows() != d || a.ncols() != d {
                return Err(ParamsError::WrongMatrixShape { j, d });
            }
        }
        for (j, b) in beta.iter().enumerate() {
            if b.len() != d {
                return Err(ParamsError::WrongVectorLength { j, d });
            }
        }
        for (j, k) in kappa.iter().enumerate() {
            if let Some(dim) = k.dim() {
                if dim != d {
                    return Err(ParamsError::WrongMeasureDim { j, got: dim, d });
                }
            }
            let max_xi = match k {
                JumpMeasure::SeriesAtomic {
                    point_exprs,
                    weight_expr,
                    ..
                } => point_exprs
                    .iter()
                    .map(|e| e.max_xi_index())
                    .chain([weight_expr.max_xi_index()])
                    .max()
                    .unwrap_or(0),
                JumpMeasure::Density { density_expr, .. } => density_expr.max_xi_index(),
                JumpMeasure::FiniteAtomic { .. } => 0,
            };
            if max_xi > d {
                return Err(ParamsError::BadCoordinateIndex { j, k: max_xi, d });
            }
        }
        Ok(AffineParams {
            m,
            n,
            alpha,
            beta,
            gamma,
            kappa,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub fn alpha(&self, j: usize) -> &DMatrix<f64> {
        &self.alpha[j]
    }

    pub fn beta(&self, j: usize) -> &[f64] {
        &self.beta[j]
    }

    pub fn gamma(&self, j: usize) -> f64 {
        self.gamma[j]
    }

    pub fn kappa(&self, j: usize) -> &JumpMeasure {
        &self.kappa[j]
    }

    pub fn alphas(&self) -> &[DMatrix<f64>] {
        &self.alpha
    }

    pub fn betas(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gamma
    }

    pub fn kappas(&self) -> &[JumpMeasure] {
        &self.kappa
    }

    /// i-th column of alpha[j], 1-based i.
    pub fn alpha_col(&self, j: usize, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|r| self.alpha[j][(r, i - 1)]).collect()
    }

    pub fn gamma_is_zero(&self) -> bool {
        self.gamma.iter().all(|&g| g == 0.0)
    }

    pub fn has_jumps(&self) -> bool {
        self.kappa.iter().any(|k| !k.is_zero())
    }
}

/// One violated admissibility bullet. `conclusive: false` marks records that
/// hinge on an integral the engine could not classify.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Violation {
    pub rule: String,
    pub indices: Vec<usize>,
    pub message: String,
    pub value: Option<f64>,
    pub conclusive: bool,
}

impl Violation {
    fn new(rule: &str, indices: Vec<usize>, message: String, value: Option<f64>) -> Self {
        Violation {
            rule: rule.into(),
            indices,
            message,
            value,
            conclusive: true,
        }
    }

    fn inconclusive(rule: &str, indices: Vec<usize>, message: String) -> Self {
        Violation {
            rule: rule.into(),
            indices,
            message,
            value: None,
            conclusive: false,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.message)?;
        if !self.conclusive {
            write!(f, " (inconclusive)")?;
        }
        Ok(())
    }
}

/// Check every admissibility bullet; an empty list means admissible.
pub fn validate_admissibility(params: &AffineParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = params.m();
    let d = params.dim();

    for j in 0..=d {
        let a = params.alpha(j);
        let scale = a.amax().max(1.0);
        // symmetry and positive semidefiniteness
        for k in 0..d {
            for l in (k + 1)..d {
                if (a[(k, l)] - a[(l, k)]).abs() > 1e-12 * scale {
                    out.push(Violation::new(
                        "alpha.symmetric",
                        vec![j, k + 1, l + 1],
                        format!("alpha[{j}] is not symmetric at ({},{})", k + 1, l + 1),
                        Some(a[(k, l)] - a[(l, k)]),
                    ));
                }
            }
        }
        let sym = 0.5 * (a + a.transpose());
        let min_eig = sym
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * scale {
            out.push(Violation::new(
                "alpha.psd",
                vec![j],
                format!("alpha[{j}] has negative eigenvalue {min_eig:.3e}"),
                Some(min_eig),
            ));
        }
        if j >= m + 1 && a.amax() != 0.0 {
            out.push(Violation::new(
                "alpha.state_zero",
                vec![j],
                format!("alpha[{j}] must vanish for j >= m+1"),
                Some(a.amax()),
            ));
        }
        if j <= m {
            for k in 1..=m {
                for l in 1..=m {
                    if !(k == l && l == j) && a[(k - 1, l - 1)] != 0.0 {
                        out.push(Violation::new(
                            "alpha.block",
                            vec![j, k, l],
                            format!("alpha[{j}]^({k},{l}) must vanish unless k = l = j"),
                            Some(a[(k - 1, l - 1)]),
                        ));
                    }
                }
            }
        }

        // killing rates
        let g = params.gamma(j);
        if g < 0.0 {
            out.push(Violation::new(
                "gamma.nonnegative",
                vec![j],
                format!("gamma[{j}] = {g} is negative"),
                Some(g),
            ));
        }
        if j >= m + 1 && g != 0.0 {
            out.push(Violation::new(
                "gamma.state_zero",
                vec![j],
                format!("gamma[{j}] must vanish for j >= m+1"),
                Some(g),
            ));
        }

        // jump measures
        let kap = params.kappa(j);
        if j >= m + 1 {
            if !kap.is_zero() {
                out.push(Violation::new(
                    "kappa.state_zero",
                    vec![j],
                    format!("kappa[{j}] must be the zero measure for j >= m+1"),
                    None,
                ));
            }
            // beta structural zeros
            for k in 1..=m {
                let b = params.beta(j)[k - 1];
                if b != 0.0 {
                    out.push(Violation::new(
                        "beta.state_zero",
                        vec![j, k],
                        format!("beta[{j}]^{k} must vanish for j >= m+1"),
                        Some(b),
                    ));
                }
            }
            continue;
        }

        out.extend(measure_support_violations(kap, j, m));

        // moment conditions and cross drifts for 0 <= j <= m
        let h2 = classify_moment(kap, MomentKind::HSquare);
        match h2.outcome {
            Outcome::Holds => {}
            Outcome::Fails => out.push(Violation::new(
                "kappa.h_square",
                vec![j],
                format!("∫ ‖h‖² dkappa[{j}] diverges"),
                None,
            )),
            Outcome::Inconclusive => out.push(Violation::inconclusive(
                "kappa.h_square",
                vec![j],
                format!("∫ ‖h‖² dkappa[{j}] could not be classified"),
            )),
        }
        for k in 1..=m {
            if k == j {
                continue;
            }
            let habs = classify_moment(kap, MomentKind::HAbs(k));
            match habs.outcome {
                Outcome::Holds => {
                    let hk = measure_integral(
                        kap,
                        move |xi| truncation_h_scalar(xi[k - 1]),
                        MOMENT_TOL,
                    );
                    match hk {
                        Ok(r) if r.is_finite() => {
                            let slack = params.beta(j)[k - 1] - r.value().unwrap();
                            if slack < -DRIFT_SLACK {
                                out.push(Violation::new(
                                    "beta.cross_drift",
                                    vec![j, k],
                                    format!(
                                        "beta[{j}]^{k} - ∫ h_{k} dkappa[{j}] = {slack:.6e} < 0"
                                    ),
                                    Some(slack),
                                ));
                            }
                        }
                        _ => out.push(Violation::inconclusive(
                            "beta.cross_drift",
                            vec![j, k],
                            format!("∫ h_{k} dkappa[{j}] could not be evaluated"),
                        )),
                    }
                }
                Outcome::Fails => out.push(Violation::new(
                    "kappa.cross_moment",
                    vec![j, k],
                    format!("∫ |h_{k}| dkappa[{j}] diverges"),
                    None,
                )),
                Outcome::Inconclusive => out.push(Violation::inconclusive(
                    "kappa.cross_moment",
                    vec![j, k],
                    format!("∫ |h_{k}| dkappa[{j}] could not be classified"),
                )),
            }
        }
    }
    out
}

/// Representation-level invariants of a single measure: positive weights,
/// support inside D∖{0}, declared series exponent > 1, nonnegative density.
fn measure_support_violations(kap: &JumpMeasure, j: usize, m: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    match kap {
        JumpMeasure::FiniteAtomic { atoms } => {
            for (i, a) in atoms.iter().enumerate() {
                if !(a.weight > 0.0) {
                    out.push(Violation::new(
                        "measure.weight_positive",
                        vec![j, i],
                        format!("kappa[{j}] atom {i} has nonpositive weight {}", a.weight),
                        Some(a.weight),
                    ));
                }
                if a.point.iter().all(|&x| x == 0.0) {
                    out.push(Violation::new(
                        "measure.support",
                        vec![j, i],
                        format!("kappa[{j}] atom {i} sits at the origin"),
                        None,
                    ));
                }
                for k in 0..m.min(a.point.len()) {
                    if a.point[k] < 0.0 {
                        out.push(Violation::new(
                            "measure.support",
                            vec![j, i, k + 1],
                            format!(
                                "kappa[{j}] atom {i} has negative coordinate {} in the cone part",
                                a.point[k]
                            ),
                            Some(a.point[k]),
                        ));
                    }
                }
            }
        }
        JumpMeasure::SeriesAtomic {
            point_exprs,
            weight_expr,
            tail,
            ..
        } => {
            if !(tail.p > 1.0) {
                out.push(Violation::new(
                    "measure.tail_exponent",
                    vec![j],
                    format!("kappa[{j}] declares tail exponent p = {} <= 1", tail.p),
                    Some(tail.p),
                ));
            }
            for nn in 1..=64u64 {
                let w = weight_expr.eval(nn as f64, &[]);
                if !(w > 0.0) && w != 0.0 {
                    out.push(Violation::new(
                        "measure.weight_positive",
                        vec![j, nn as usize],
                        format!("kappa[{j}] series weight at n = {nn} is {w}"),
                        Some(w),
                    ));
                    break;
                }
                for (k, e) in point_exprs.iter().enumerate().take(m) {
                    let x = e.eval(nn as f64, &[]);
                    if x < 0.0 {
                        out.push(Violation::new(
                            "measure.support",
                            vec![j, nn as usize, k + 1],
                            format!("kappa[{j}] series point has negative cone coordinate at n = {nn}"),
                            Some(x),
                        ));
                        return out;
                    }
                }
            }
        }
        JumpMeasure::Density {
            density_expr,
            domain,
            ..
        } => {
            for (k, &(lo, _)) in domain.iter().enumerate().take(m) {
                if lo.map_or(true, |v| v < 0.0) {
                    out.push(Violation::new(
                        "measure.support",
                        vec![j, k + 1],
                        format!("kappa[{j}] density domain extends below 0 in cone coordinate {}", k + 1),
                        lo,
                    ));
                }
            }
            // sample for negativity on a coarse grid
            let probes = density_probe_points(domain);
            for p in probes {
                let v = density_expr.eval(0.0, &p);
                if v < 0.0 {
                    out.push(Violation::new(
                        "measure.density_nonnegative",
                        vec![j],
                        format!("kappa[{j}] density is negative at {p:?}"),
                        Some(v),
                    ));
                    break;
                }
            }
        }
    }
    out
}

fn density_probe_points(domain: &[(Option<f64>, Option<f64>)]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .map(|&(lo, hi)| match (lo, hi) {
            (Some(a), Some(b)) => vec![a + 0.25 * (b - a), a + 0.5 * (b - a), a + 0.75 * (b - a)],
            (Some(a), None) => vec![a + 0.5, a + 2.0, a + 40.0],
            (None, Some(b)) => vec![b - 40.0, b - 2.0, b - 0.5],
            (None, None) => vec![-10.0, 0.5, 10.0],
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::new();
        for p in &points {
            for &x in &axis {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprDef;
    use crate::model::measure::TailDecay;
    use proptest::prelude::*;

    fn dirac_series_params() -> AffineParams {
        // m = 1, n = 0; kappa_1 = Σ δ_n / n², beta_1 = Σ 1/n² = π²/6
        let mu = JumpMeasure::SeriesAtomic {
            point_exprs: vec![ExprDef::parse("n").unwrap()],
            weight_expr: ExprDef::parse("1/n^2").unwrap(),
            tail: TailDecay { c: 1.0, p: 2.0 },
            truncation_tol: 1e-10,
        };
        AffineParams::new(
            1,
            0,
            vec![DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)],
            vec![vec![0.0], vec![std::f64::consts::PI.powi(2) / 6.0]],
            vec![0.0, 0.0],
            vec![JumpMeasure::zero(), mu],
        )
        .unwrap()
    }

    #[test]
    fn truncation_definition() {
        assert_eq!(truncation_h(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(truncation_h(&[0.5, -3.0]), vec![0.5, -1.0]);
        assert_eq!(truncation_h(&[7.0]), vec![1.0]);
    }

    proptest! {
        #[test]
        fn truncation_is_idempotent(xs in proptest::collection::vec(-1e6f64..1e6, 1..6)) {
            let h1 = truncation_h(&xs);
            let h2 = truncation_h(&h1);
            prop_assert_eq!(h1, h2);
        }

        #[test]
        fn truncation_bounded_and_identity_inside(x in -1e3f64..1e3) {
            let h = truncation_h_scalar(x);
            prop_assert!(h.abs() <= 1.0);
            if x.abs() <= 1.0 {
                prop_assert_eq!(h, x);
            }
        }
    }

    #[test]
    fn dirac_series_is_admissible() {
        let p = dirac_series_params();
        let v = validate_admissibility(&p);
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn negative_gamma_is_one_record() {
        let p = dirac_series_params();
        let bad = AffineParams::new(
            p.m(),
            p.n(),
            p.alphas().to_vec(),
            p.betas().to_vec(),
            vec![0.0, -1.0],
            p.kappas().to_vec(),
        )
        .unwrap();
        let v = validate_admissibility(&bad);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, "gamma.nonnegative");
    }

    #[test]
    fn alpha_block_structure_is_enforced() {
        // m = 1, d = 2, alpha_1 with a nonzero (1,2) entry inside the cone block
        // is fine (k or l beyond m is allowed); a nonzero (1,1) entry in alpha_2
        // violates nothing since 2 > m... the violating case is alpha_0^{11}.
        let mut a0 = DMatrix::zeros(2, 2);
        a0[(0, 0)] = 1.0; // k = l = 1 but j = 0: forbidden
        let p = AffineParams::new(
            1,
            1,
            vec![a0, DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)],
            vec![vec![0.0; 2]; 3],
            vec![0.0; 3],
            vec![JumpMeasure::zero(); 3],
        )
        .unwrap();
        let v = validate_admissibility(&p);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].rule, "alpha.block");
        assert_eq!(v[0].indices, vec![0, 1, 1]);
    }

    #[test]
    fn psd_violation_detected() {
        let mut a1 = DMatrix::zeros(1, 1);
        a1[(0, 0)] = -0.5;
        let p = AffineParams::new(
            1,
            0,
            vec![DMatrix::zeros(1, 1), a1],
            vec![vec![0.0], vec![0.0]],
            vec![0.0, 0.0],
            vec![JumpMeasure::zero(), JumpMeasure::zero()],
        )
        .unwrap();
        let v = validate_admissibility(&p);
        assert!(v.iter().any(|x| x.rule == "alpha.psd"), "{v:?}");
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(
            AffineParams::new(0, 0, vec![], vec![], vec![], vec![]),
            Err(ParamsError::ZeroDimension)
        ));
        assert!(AffineParams::new(
            1,
            0,
            vec![DMatrix::zeros(1, 1)],
            vec![vec![0.0], vec![0.0]],
            vec![0.0, 0.0],
            vec![JumpMeasure::zero(), JumpMeasure::zero()],
        )
        .is_err());
    }
}

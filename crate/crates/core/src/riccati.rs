//! Evaluation of R_0..R_d and numerical solution of the generalized Riccati
//! flow ∂_t ψ = R(ψ), ψ(0,u) = u, with ψ_0 integrated alongside.
//!
//! ```text
//! R_j(u) = ½⟨α_j u, u⟩ + ⟨β_j, u⟩ − γ_j + ∫ (e^{⟨u,ξ⟩} − 1 − ⟨u, h(ξ)⟩) κ_j(dξ)
//! ```
//!
//! The jump integrals are evaluated through per-measure plans built once per
//! context: an exact atom prefix plus an Euler–Maclaurin tail on a fixed
//! exp-sinh rule for series measures, and fixed double-exponential node sets
//! (split at the truncation kinks) for densities.
//!
//! The integrator is a Dormand–Prince 5(4) embedded pair with step rejection.
//! On the restricted real system the state is kept in the closed negative
//! orthant: a step that would cross 0 by more than the tolerance is rejected,
//! smaller excursions are clamped. Interior solutions are unique; the
//! boundary is where uniqueness can fail, which is exactly what
//! [`minimal_solution_zero`] probes with its shrinking-start schedule.

use crate::model::{
    validate_admissibility, AffineParams, Evidence, JumpMeasure, Verdict, Violation,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

const T_MAX: f64 = 4.3;
/// Mesh of the tanh-sinh rule used on finite density segments.
const PLAN_H_DENSITY: f64 = 1.0 / 128.0;
/// Series plans sum this many atoms exactly before the tail takes over.
const SERIES_PREFIX: usize = 2048;
/// Unbounded directions use the plain substitution x = a + e^v with a
/// uniform trapezoid in v: the e^{u·ξ} saturation front then always has
/// width O(1) in v no matter how small |u| is, where a sinh-compressed rule
/// would squeeze it into a sub-mesh spike. Convergence stays geometric in
/// 1/h because the integrand decays exponentially at both ends of the
/// v-axis.
const EXPV_H: f64 = 0.2;
const EXPV_MIN: f64 = -42.0;
const EXPV_MAX: f64 = 62.0;

/// Nodes (x, fine weight, coarse weight) for ∫_a^∞ (or the mirrored
/// ∫_{-∞}^b with `sign = -1`).
fn exp_tail_axis(anchor: f64, sign: f64) -> Vec<(f64, f64, f64)> {
    let steps = ((EXPV_MAX - EXPV_MIN) / EXPV_H) as i64;
    let mut out = Vec::with_capacity(steps as usize + 1);
    for idx in 0..=steps {
        let v = EXPV_MIN + idx as f64 * EXPV_H;
        let e = v.exp();
        let x = anchor + sign * e;
        if !x.is_finite() {
            continue;
        }
        let fine = e * EXPV_H;
        let coarse = if idx % 2 == 0 { 2.0 * fine } else { 0.0 };
        out.push((x, fine, coarse));
    }
    out
}

#[derive(Debug, Error)]
pub enum RiccatiError {
    #[error("parameters are not admissible: {0:?}")]
    Inadmissible(Vec<Violation>),
    #[error("u outside C_-^m x iR^n at component {index}: {value}")]
    DomainViolation { index: usize, value: Complex64 },
    #[error("jump integral for kappa[{j}] could not be planned: {detail}")]
    UnplannableMeasure { j: usize, detail: String },
    #[error("step size underflow at t = {t}; boundary non-uniqueness suspected")]
    StepSizeUnderflow { t: f64, state: Vec<Complex64> },
    #[error(
        "minimal-solution trajectories not monotone across epsilon {eps_coarse} -> {eps_fine} (violation {violation:.3e})"
    )]
    NonMonotone {
        eps_coarse: f64,
        eps_fine: f64,
        violation: f64,
    },
    #[error("invalid input: {0}")]
    BadInput(String),
}

// ---------------------------------------------------------------------------
// Measure plans
// ---------------------------------------------------------------------------

/// Node set with points, truncation values, and fine/coarse rule weights
/// (already multiplied by measure weights or density values).
struct PlanNodes {
    /// flattened points, d per node
    pts: Vec<f64>,
    /// flattened h(point), d per node
    hs: Vec<f64>,
    cw_fine: Vec<f64>,
    /// same node list; zero where the coarse rule has no node
    cw_coarse: Vec<f64>,
}

struct EmSample {
    point: Vec<f64>,
    h: Vec<f64>,
    w: f64,
}

enum MeasurePlan {
    Empty,
    /// Exact atoms (finite measures and series prefixes).
    Atoms {
        atoms: PlanNodes,
        tail: Option<SeriesTailPlan>,
    },
    Density(PlanNodes),
}

/// Euler–Maclaurin closure of a series tail:
/// Σ_{n>N} g(n) ≈ ∫_N^∞ g − g(N)/2 − g'(N)/12.
struct SeriesTailPlan {
    quad: PlanNodes,
    /// samples at N-1, N, N+1 for g(N) and the centered g'(N)
    em: [EmSample; 3],
}

fn plan_nodes_new() -> PlanNodes {
    PlanNodes {
        pts: Vec::new(),
        hs: Vec::new(),
        cw_fine: Vec::new(),
        cw_coarse: Vec::new(),
    }
}

fn push_node(nodes: &mut PlanNodes, point: &[f64], cw_fine: f64, cw_coarse: f64) {
    nodes.pts.extend_from_slice(point);
    nodes
        .hs
        .extend(point.iter().map(|&x| x.clamp(-1.0, 1.0)));
    nodes.cw_fine.push(cw_fine);
    nodes.cw_coarse.push(cw_coarse);
}

fn build_plan(measure: &JumpMeasure, j: usize, d: usize) -> Result<MeasurePlan, RiccatiError> {
    let bad = |detail: String| RiccatiError::UnplannableMeasure { j, detail };
    match measure {
        JumpMeasure::FiniteAtomic { atoms } if atoms.is_empty() => Ok(MeasurePlan::Empty),
        JumpMeasure::FiniteAtomic { atoms } => {
            let mut nodes = plan_nodes_new();
            for a in atoms {
                if !a.weight.is_finite() || a.point.iter().any(|x| !x.is_finite()) {
                    return Err(bad("non-finite atom".into()));
                }
                push_node(&mut nodes, &a.point, a.weight, a.weight);
            }
            Ok(MeasurePlan::Atoms {
                atoms: nodes,
                tail: None,
            })
        }
        JumpMeasure::SeriesAtomic { .. } => {
            let mut nodes = plan_nodes_new();
            for k in 1..=SERIES_PREFIX {
                let p = measure.series_point(k as f64).unwrap();
                let w = measure.series_weight(k as f64).unwrap();
                if !w.is_finite() || p.iter().any(|x| !x.is_finite()) {
                    return Err(bad(format!("series atom at n = {k} is not finite")));
                }
                push_node(&mut nodes, &p, w, w);
            }
            let n0 = SERIES_PREFIX as f64;
            let mut quad = plan_nodes_new();
            for (x, fine_w, coarse_w) in exp_tail_axis(n0, 1.0) {
                let p = measure.series_point(x).unwrap();
                let w = measure.series_weight(x).unwrap();
                if w.is_finite() && p.iter().all(|v| v.is_finite()) {
                    push_node(&mut quad, &p, w * fine_w, w * coarse_w);
                }
            }
            let em_at = |x: f64| -> Result<EmSample, RiccatiError> {
                let point = measure.series_point(x).unwrap();
                let w = measure.series_weight(x).unwrap();
                if !w.is_finite() || point.iter().any(|v| !v.is_finite()) {
                    return Err(RiccatiError::UnplannableMeasure {
                        j,
                        detail: format!("series term at n = {x} is not finite"),
                    });
                }
                Ok(EmSample {
                    h: point.iter().map(|&v| v.clamp(-1.0, 1.0)).collect(),
                    point,
                    w,
                })
            };
            let em = [em_at(n0 - 1.0)?, em_at(n0)?, em_at(n0 + 1.0)?];
            Ok(MeasurePlan::Atoms {
                atoms: nodes,
                tail: Some(SeriesTailPlan { quad, em }),
            })
        }
        JumpMeasure::Density {
            density_expr,
            domain,
            ..
        } => {
            if domain.len() != d {
                return Err(bad(format!(
                    "density domain dimension {} does not match d = {d}",
                    domain.len()
                )));
            }
            if domain.len() > 2 {
                return Err(bad(
                    "density flow plans support at most two coordinates".into(),
                ));
            }
            let axes: Vec<Vec<(f64, f64, f64)>> = domain
                .iter()
                .map(|&(lo, hi)| density_axis_nodes(lo, hi))
                .collect();
            let mut nodes = plan_nodes_new();
            let mut point = vec![0.0; domain.len()];
            tensor_density_nodes(&axes, density_expr, &mut point, 0, 1.0, 1.0, &mut nodes);
            if nodes.cw_fine.is_empty() {
                return Err(bad("no usable density nodes".into()));
            }
            Ok(MeasurePlan::Density(nodes))
        }
    }
}

/// Per-coordinate double-exponential nodes (x, fine weight, coarse weight),
/// split at the truncation kinks so every segment is analytic.
fn density_axis_nodes(lo: Option<f64>, hi: Option<f64>) -> Vec<(f64, f64, f64)> {
    let interior = |x: f64| lo.map_or(true, |a| x > a) && hi.map_or(true, |b| x < b);
    let mut cuts: Vec<f64> = [-1.0, 0.0, 1.0]
        .into_iter()
        .filter(|&x| interior(x))
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut segs = Vec::new();
    let mut left = lo;
    for c in cuts {
        segs.push((left, Some(c)));
        left = Some(c);
    }
    segs.push((left, hi));

    let mut out = Vec::new();
    for (a, b) in segs {
        match (a, b) {
            (Some(a), Some(b)) => {
                let steps = (2.0 * T_MAX / PLAN_H_DENSITY) as i64;
                for idx in 0..=steps {
                    let t = -T_MAX + idx as f64 * PLAN_H_DENSITY;
                    let s = std::f64::consts::FRAC_PI_2 * t.sinh();
                    let em = (-2.0 * s.abs()).exp();
                    let dist = 2.0 * em / (1.0 + em);
                    let w = 0.5 * (b - a);
                    let x = if t >= 0.0 { b - w * dist } else { a + w * dist };
                    let dxdt =
                        std::f64::consts::FRAC_PI_2 * t.cosh() * w * dist * (2.0 / (1.0 + em));
                    if x.is_finite() && dxdt.is_finite() && dxdt > 0.0 {
                        let fine = dxdt * PLAN_H_DENSITY;
                        let coarse = if idx % 2 == 0 { 2.0 * fine } else { 0.0 };
                        out.push((x, fine, coarse));
                    }
                }
            }
            (Some(a), None) => out.extend(exp_tail_axis(a, 1.0)),
            (None, Some(b)) => out.extend(exp_tail_axis(b, -1.0)),
            (None, None) => unreachable!("a cut at 0 always splits the full line"),
        }
    }
    out
}

fn tensor_density_nodes(
    axes: &[Vec<(f64, f64, f64)>],
    density: &crate::expr::ExprDef,
    point: &mut Vec<f64>,
    depth: usize,
    wf: f64,
    wc: f64,
    nodes: &mut PlanNodes,
) {
    if depth == axes.len() {
        let rho = density.eval(0.0, point);
        if rho.is_finite() && rho != 0.0 {
            push_node(nodes, point, rho * wf, rho * wc);
        }
        return;
    }
    for &(x, fine, coarse) in &axes[depth] {
        point[depth] = x;
        tensor_density_nodes(axes, density, point, depth + 1, wf * fine, wc * coarse, nodes);
    }
}

// ---------------------------------------------------------------------------
// RContext
// ---------------------------------------------------------------------------

/// Admissible parameters plus everything precomputed to evaluate R fast.
/// Immutable and shareable across threads; solver state lives per call.
pub struct RContext {
    params: AffineParams,
    plans: Vec<MeasurePlan>,
    warnings: Vec<Violation>,
}

impl RContext {
    /// Build a context, insisting the parameters are admissible. Violations
    /// that are merely inconclusive (unclassifiable integrals) are kept as
    /// warnings rather than errors.
    pub fn new(params: AffineParams) -> Result<Self, RiccatiError> {
        let violations = validate_admissibility(&params);
        let (inconclusive, conclusive): (Vec<_>, Vec<_>) =
            violations.into_iter().partition(|v| !v.conclusive);
        if !conclusive.is_empty() {
            return Err(RiccatiError::Inadmissible(conclusive));
        }
        Self::with_warnings(params, inconclusive)
    }

    /// Skip the admissibility pass (for callers that already validated).
    pub fn new_unvalidated(params: AffineParams) -> Result<Self, RiccatiError> {
        Self::with_warnings(params, Vec::new())
    }

    fn with_warnings(
        params: AffineParams,
        warnings: Vec<Violation>,
    ) -> Result<Self, RiccatiError> {
        let d = params.dim();
        let plans = params
            .kappas()
            .iter()
            .enumerate()
            .map(|(j, k)| build_plan(k, j, d))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RContext {
            params,
            plans,
            warnings,
        })
    }

    pub fn params(&self) -> &AffineParams {
        &self.params
    }

    pub fn warnings(&self) -> &[Violation] {
        &self.warnings
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    // -- real restricted evaluation ------------------------------------------

    /// ∫ (e^{⟨u_I,ξ_I⟩} − 1 − ⟨u_I, h_I(ξ)⟩) κ_j(dξ) for real u supported on
    /// the first `u.len()` coordinates. exp_m1 keeps the u → 0⁻ regime exact,
    /// which the Osgood analysis depends on.
    fn jump_real(&self, j: usize, u: &[f64]) -> f64 {
        let mu = u.len();
        let d = self.dim();
        let f = |pts: &[f64], hs: &[f64]| -> f64 {
            let mut dot = 0.0;
            let mut doth = 0.0;
            for k in 0..mu {
                dot += u[k] * pts[k];
                doth += u[k] * hs[k];
            }
            dot.exp_m1() - doth
        };
        match &self.plans[j] {
            MeasurePlan::Empty => 0.0,
            MeasurePlan::Atoms { atoms, tail } => {
                let mut sum = 0.0;
                for i in 0..atoms.cw_fine.len() {
                    sum += f(&atoms.pts[i * d..(i + 1) * d], &atoms.hs[i * d..(i + 1) * d])
                        * atoms.cw_fine[i];
                }
                if let Some(tp) = tail {
                    let mut fine = 0.0;
                    for i in 0..tp.quad.cw_fine.len() {
                        fine += f(
                            &tp.quad.pts[i * d..(i + 1) * d],
                            &tp.quad.hs[i * d..(i + 1) * d],
                        ) * tp.quad.cw_fine[i];
                    }
                    let g = |s: &EmSample| f(&s.point, &s.h) * s.w;
                    let g_m = g(&tp.em[0]);
                    let g_0 = g(&tp.em[1]);
                    let g_p = g(&tp.em[2]);
                    sum += fine - g_0 / 2.0 - (g_p - g_m) / 24.0;
                }
                sum
            }
            MeasurePlan::Density(nodes) => {
                let mut sum = 0.0;
                for i in 0..nodes.cw_fine.len() {
                    sum += f(&nodes.pts[i * d..(i + 1) * d], &nodes.hs[i * d..(i + 1) * d])
                        * nodes.cw_fine[i];
                }
                sum
            }
        }
    }

    fn r_restricted_raw(&self, j: usize, u: &[f64]) -> f64 {
        let m = self.m();
        let a = self.params.alpha(j);
        let mut quad = 0.0;
        for k in 0..m {
            for l in 0..m {
                let c = a[(k, l)];
                if c != 0.0 {
                    quad += c * u[k] * u[l];
                }
            }
        }
        let beta = self.params.beta(j);
        let lin: f64 = (0..m).map(|k| beta[k] * u[k]).sum();
        0.5 * quad + lin - self.params.gamma(j) + self.jump_real(j, u)
    }

    /// R_j evaluated at real (u_I, 0); valid for 0 <= j <= d.
    pub fn eval_r_restricted_component(&self, j: usize, u_i: &[f64]) -> Result<f64, RiccatiError> {
        self.check_restricted_domain(u_i)?;
        Ok(self.r_restricted_raw(j, u_i))
    }

    /// First m components of R at (u_I, 0) — the restricted field driving
    /// the conservativeness analysis.
    pub fn eval_r_restricted(&self, u_i: &[f64]) -> Result<Vec<f64>, RiccatiError> {
        self.check_restricted_domain(u_i)?;
        Ok((1..=self.m())
            .map(|j| self.r_restricted_raw(j, u_i))
            .collect())
    }

    fn check_restricted_domain(&self, u_i: &[f64]) -> Result<(), RiccatiError> {
        if u_i.len() != self.m() {
            return Err(RiccatiError::BadInput(format!(
                "expected {} components, got {}",
                self.m(),
                u_i.len()
            )));
        }
        for (k, &v) in u_i.iter().enumerate() {
            if v > 0.0 || !v.is_finite() {
                return Err(RiccatiError::DomainViolation {
                    index: k + 1,
                    value: Complex64::new(v, 0.0),
                });
            }
        }
        Ok(())
    }

    fn rhs_restricted(&self, y: &[f64], dy: &mut [f64]) {
        // y = [psi_1..psi_m, psi_0]; inputs clamped into the closed orthant
        let m = self.m();
        let mut buf = [0.0f64; 16];
        let u = &mut buf[..m];
        for k in 0..m {
            u[k] = y[k].min(0.0);
        }
        for j in 1..=m {
            dy[j - 1] = self.r_restricted_raw(j, u);
        }
        dy[m] = self.r_restricted_raw(0, u);
    }

    // -- complex evaluation ----------------------------------------------------

    fn jump_complex(&self, j: usize, u: &[Complex64]) -> Complex64 {
        let d = self.dim();
        let f = |pts: &[f64], hs: &[f64]| -> Complex64 {
            let mut dot = Complex64::new(0.0, 0.0);
            let mut doth = Complex64::new(0.0, 0.0);
            for k in 0..d {
                dot += u[k] * pts[k];
                doth += u[k] * hs[k];
            }
            dot.exp() - 1.0 - doth
        };
        match &self.plans[j] {
            MeasurePlan::Empty => Complex64::new(0.0, 0.0),
            MeasurePlan::Atoms { atoms, tail } => {
                let mut sum = Complex64::new(0.0, 0.0);
                for i in 0..atoms.cw_fine.len() {
                    sum += f(&atoms.pts[i * d..(i + 1) * d], &atoms.hs[i * d..(i + 1) * d])
                        * atoms.cw_fine[i];
                }
                if let Some(tp) = tail {
                    let mut fine = Complex64::new(0.0, 0.0);
                    for i in 0..tp.quad.cw_fine.len() {
                        fine += f(
                            &tp.quad.pts[i * d..(i + 1) * d],
                            &tp.quad.hs[i * d..(i + 1) * d],
                        ) * tp.quad.cw_fine[i];
                    }
                    let g = |s: &EmSample| f(&s.point, &s.h) * s.w;
                    let g_m = g(&tp.em[0]);
                    let g_0 = g(&tp.em[1]);
                    let g_p = g(&tp.em[2]);
                    sum += fine - g_0 / 2.0 - (g_p - g_m) / 24.0;
                }
                sum
            }
            MeasurePlan::Density(nodes) => {
                let mut sum = Complex64::new(0.0, 0.0);
                for i in 0..nodes.cw_fine.len() {
                    sum += f(&nodes.pts[i * d..(i + 1) * d], &nodes.hs[i * d..(i + 1) * d])
                        * nodes.cw_fine[i];
                }
                sum
            }
        }
    }

    /// R_j at u ∈ C_-^m × iR^n.
    pub fn eval_r(&self, j: usize, u: &[Complex64]) -> Result<Complex64, RiccatiError> {
        self.check_domain(u)?;
        Ok(self.r_complex_raw(j, u))
    }

    fn check_domain(&self, u: &[Complex64]) -> Result<(), RiccatiError> {
        let m = self.m();
        let d = self.dim();
        if u.len() != d {
            return Err(RiccatiError::BadInput(format!(
                "expected {} components, got {}",
                d,
                u.len()
            )));
        }
        for (k, &v) in u.iter().enumerate() {
            let bad_cone = k < m && v.re > 1e-12;
            let bad_linear = k >= m && v.re.abs() > 1e-12;
            if bad_cone || bad_linear || !v.re.is_finite() || !v.im.is_finite() {
                return Err(RiccatiError::DomainViolation {
                    index: k + 1,
                    value: v,
                });
            }
        }
        Ok(())
    }

    fn r_complex_raw(&self, j: usize, u: &[Complex64]) -> Complex64 {
        let d = self.dim();
        let a = self.params.alpha(j);
        let mut quad = Complex64::new(0.0, 0.0);
        for k in 0..d {
            for l in 0..d {
                let c = a[(k, l)];
                if c != 0.0 {
                    quad += u[k] * u[l] * c;
                }
            }
        }
        let beta = self.params.beta(j);
        let mut lin = Complex64::new(0.0, 0.0);
        for k in 0..d {
            lin += u[k] * beta[k];
        }
        0.5 * quad + lin - self.params.gamma(j) + self.jump_complex(j, u)
    }

    fn rhs_complex(&self, y: &[f64], dy: &mut [f64]) {
        // y = [Re psi_1..d, Im psi_1..d, Re psi0, Im psi0]
        let d = self.dim();
        let m = self.m();
        let mut u = vec![Complex64::new(0.0, 0.0); d];
        for k in 0..d {
            let re = if k < m { y[k].min(0.0) } else { y[k] };
            u[k] = Complex64::new(re, y[d + k]);
        }
        for j in 1..=d {
            let r = self.r_complex_raw(j, &u);
            dy[j - 1] = r.re;
            dy[d + j - 1] = r.im;
        }
        let r0 = self.r_complex_raw(0, &u);
        dy[2 * d] = r0.re;
        dy[2 * d + 1] = r0.im;
    }

    /// Directional finite difference (R_j(u + e·dir) − R_j(u − e·dir)) / (2e).
    pub fn derivative_r_fd(
        &self,
        j: usize,
        u: &[Complex64],
        dir: &[Complex64],
        step: f64,
    ) -> Result<Complex64, RiccatiError> {
        if step <= 0.0 {
            return Err(RiccatiError::BadInput("step must be positive".into()));
        }
        let up: Vec<Complex64> = u.iter().zip(dir).map(|(a, b)| a + b * step).collect();
        let um: Vec<Complex64> = u.iter().zip(dir).map(|(a, b)| a - b * step).collect();
        let rp = self.eval_r(j, &up)?;
        let rm = self.eval_r(j, &um)?;
        Ok((rp - rm) / (2.0 * step))
    }
}

// ---------------------------------------------------------------------------
// Flow solving
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize)]
pub struct FlowDiagnostics {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub boundary_rejections: usize,
    pub clamped_points: usize,
    pub rhs_evaluations: usize,
    /// min over the grid of the distance of ψ_I to the boundary of R_-^m
    pub min_boundary_distance: f64,
    pub max_error_estimate: f64,
}

/// Trajectory of (ψ(t,u), ψ_0(t,u)) on a time grid.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub u0: Vec<Complex64>,
    pub times: Vec<f64>,
    pub psi0: Vec<Complex64>,
    pub psi: Vec<Vec<Complex64>>,
    pub diagnostics: FlowDiagnostics,
}

impl FlowResult {
    pub fn terminal_psi(&self) -> &[Complex64] {
        self.psi.last().expect("non-empty grid")
    }

    pub fn terminal_psi0(&self) -> Complex64 {
        *self.psi0.last().expect("non-empty grid")
    }

    /// JSON export with complex numbers as [re, im] pairs.
    pub fn export(&self) -> serde_json::Value {
        let pair = |c: &Complex64| serde_json::json!([c.re, c.im]);
        serde_json::json!({
            "u0": self.u0.iter().map(pair).collect::<Vec<_>>(),
            "times": self.times,
            "psi0": self.psi0.iter().map(pair).collect::<Vec<_>>(),
            "psi": self.psi.iter().map(|row| row.iter().map(pair).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "diagnostics": serde_json::to_value(&self.diagnostics).unwrap(),
        })
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One integration pass hitting every grid time exactly (steps clamp to the
/// next output time, so recorded states are solver states, not interpolants).
/// First `clamp_m` components are kept <= 0: crossings beyond `tol` reject
/// the step, smaller ones are clamped.
fn integrate<F>(
    rhs: F,
    y0: &[f64],
    times: &[f64],
    tol: f64,
    clamp_m: usize,
) -> Result<(Vec<Vec<f64>>, FlowDiagnostics), (f64, Vec<f64>, FlowDiagnostics)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut diag = FlowDiagnostics {
        min_boundary_distance: f64::INFINITY,
        ..Default::default()
    };
    let mut y = y0.to_vec();
    let mut t = times[0];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let mut err_vec = vec![0.0; dim];

    rhs(&y, &mut k[0]);
    diag.rhs_evaluations += 1;

    fn record(diag: &mut FlowDiagnostics, clamp_m: usize, y: &[f64], out: &mut Vec<Vec<f64>>) {
        if clamp_m > 0 {
            let dist = y[..clamp_m]
                .iter()
                .fold(f64::INFINITY, |acc, &v| acc.min(-v));
            diag.min_boundary_distance = diag.min_boundary_distance.min(dist);
        }
        out.push(y.to_vec());
    }
    record(&mut diag, clamp_m, &y, &mut out);

    let horizon = *times.last().unwrap() - times[0];
    // First step from the state/derivative scales; a fixed fraction of the
    // horizon overshoots badly when the start sits near the non-Lipschitz
    // boundary (|y| tiny, y' ~ sqrt-type) and the embedded estimate cannot
    // be trusted to catch a single huge leap.
    let d0 = y.iter().fold(0.0f64, |a, &v| a.max(v.abs())) + tol;
    let d1 = k[0].iter().fold(0.0f64, |a, &v| a.max(v.abs())) + 1e-30;
    let mut h = (0.01 * d0 / d1).min(horizon / 100.0).min(0.1).max(1e-12);

    for &t_target in &times[1..] {
        while t < t_target - 1e-14 * t_target.abs().max(1.0) {
            let mut step_h = h.min(t_target - t);
            loop {
                for s in 1..7 {
                    for i in 0..dim {
                        let mut acc = 0.0;
                        for (j, kj) in k.iter().enumerate().take(s) {
                            let a = A[s - 1][j];
                            if a != 0.0 {
                                acc += a * kj[i];
                            }
                        }
                        y_stage[i] = y[i] + step_h * acc;
                    }
                    rhs(&y_stage, &mut k[s]);
                    diag.rhs_evaluations += 1;
                }
                let mut err_acc = 0.0;
                let mut boundary_violation = 0.0f64;
                for i in 0..dim {
                    let mut acc5 = 0.0;
                    let mut acc4 = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        if B5[j] != 0.0 {
                            acc5 += B5[j] * kj[i];
                        }
                        if B4[j] != 0.0 {
                            acc4 += B4[j] * kj[i];
                        }
                    }
                    y_new[i] = y[i] + step_h * acc5;
                    err_vec[i] = step_h * (acc5 - acc4);
                    let sc = tol + tol * y[i].abs().max(y_new[i].abs());
                    let e = err_vec[i] / sc;
                    err_acc += e * e;
                    if i < clamp_m {
                        boundary_violation = boundary_violation.max(y_new[i]);
                    }
                }
                let err_norm = (err_acc / dim as f64).sqrt().max(1e-16);
                diag.max_error_estimate = diag.max_error_estimate.max(err_norm * tol);

                if boundary_violation > tol {
                    diag.boundary_rejections += 1;
                    step_h *= 0.5;
                    if step_h < 1e-13 * t.abs().max(1.0) {
                        return Err((t, y.clone(), diag));
                    }
                    continue;
                }
                if err_norm <= 1.0 {
                    let clamped = boundary_violation > 0.0;
                    if clamped {
                        for v in y_new[..clamp_m].iter_mut() {
                            if *v > 0.0 {
                                *v = 0.0;
                            }
                        }
                        diag.clamped_points += 1;
                    }
                    t += step_h;
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6); // FSAL
                    if clamped {
                        rhs(&y, &mut k[0]);
                        diag.rhs_evaluations += 1;
                    }
                    diag.accepted_steps += 1;
                    let scale = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0);
                    h = (step_h * scale).min(horizon.max(1e-12));
                    break;
                }
                diag.rejected_steps += 1;
                let scale = (0.9 * err_norm.powf(-0.2)).clamp(0.2, 0.9);
                step_h *= scale;
                if step_h < 1e-13 * t.abs().max(1.0) {
                    return Err((t, y.clone(), diag));
                }
            }
        }
        t = t_target;
        record(&mut diag, clamp_m, &y, &mut out);
    }
    Ok((out, diag))
}

/// Default solver tolerance (mixed absolute/relative per-step control).
pub const DEFAULT_FLOW_TOL: f64 = 1e-10;

impl RContext {
    /// Solve the generalized Riccati flow from `u0` over `[0, horizon]` on a
    /// uniform 201-point grid. Dispatches to the restricted real system when
    /// `u0` is real, nonpositive, and supported on the first m coordinates.
    pub fn solve_flow(
        &self,
        u0: &[Complex64],
        horizon: f64,
        tol: f64,
    ) -> Result<FlowResult, RiccatiError> {
        let grid: Vec<f64> = (0..=200).map(|i| horizon * i as f64 / 200.0).collect();
        self.solve_flow_grid(u0, &grid, tol)
    }

    pub fn solve_flow_grid(
        &self,
        u0: &[Complex64],
        times: &[f64],
        tol: f64,
    ) -> Result<FlowResult, RiccatiError> {
        if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) || times[0] != 0.0 {
            return Err(RiccatiError::BadInput(
                "times must start at 0 and strictly increase".into(),
            ));
        }
        if !(tol > 0.0) {
            return Err(RiccatiError::BadInput("tol must be positive".into()));
        }
        self.check_domain(u0)?;
        let m = self.m();
        let d = self.dim();
        let real_mode = u0.iter().all(|c| c.im == 0.0) && u0[m..].iter().all(|c| c.re == 0.0);

        if real_mode {
            let y0: Vec<f64> = u0[..m].iter().map(|c| c.re).chain([0.0]).collect();
            let (states, diagnostics) =
                integrate(|y, dy| self.rhs_restricted(y, dy), &y0, times, tol, m).map_err(
                    |(t, y, _)| RiccatiError::StepSizeUnderflow {
                        t,
                        state: y.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                    },
                )?;
            let psi: Vec<Vec<Complex64>> = states
                .iter()
                .map(|s| {
                    (0..d)
                        .map(|kk| {
                            if kk < m {
                                Complex64::new(s[kk], 0.0)
                            } else {
                                Complex64::new(0.0, 0.0)
                            }
                        })
                        .collect()
                })
                .collect();
            let psi0 = states.iter().map(|s| Complex64::new(s[m], 0.0)).collect();
            Ok(FlowResult {
                u0: u0.to_vec(),
                times: times.to_vec(),
                psi0,
                psi,
                diagnostics,
            })
        } else {
            let mut y0 = vec![0.0; 2 * d + 2];
            for kk in 0..d {
                y0[kk] = u0[kk].re;
                y0[d + kk] = u0[kk].im;
            }
            let (states, diagnostics) =
                integrate(|y, dy| self.rhs_complex(y, dy), &y0, times, tol, m).map_err(
                    |(t, y, _)| RiccatiError::StepSizeUnderflow {
                        t,
                        state: (0..d).map(|kk| Complex64::new(y[kk], y[d + kk])).collect(),
                    },
                )?;
            let psi: Vec<Vec<Complex64>> = states
                .iter()
                .map(|s| (0..d).map(|kk| Complex64::new(s[kk], s[d + kk])).collect())
                .collect();
            let psi0 = states
                .iter()
                .map(|s| Complex64::new(s[2 * d], s[2 * d + 1]))
                .collect();
            Ok(FlowResult {
                u0: u0.to_vec(),
                times: times.to_vec(),
                psi0,
                psi,
                diagnostics,
            })
        }
    }

    /// Restricted real flow from u_I ⪯ 0.
    pub fn solve_flow_restricted(
        &self,
        u_i: &[f64],
        horizon: f64,
        tol: f64,
    ) -> Result<FlowResult, RiccatiError> {
        let grid: Vec<f64> = (0..=200).map(|i| horizon * i as f64 / 200.0).collect();
        self.solve_flow_restricted_grid(u_i, &grid, tol)
    }

    pub fn solve_flow_restricted_grid(
        &self,
        u_i: &[f64],
        times: &[f64],
        tol: f64,
    ) -> Result<FlowResult, RiccatiError> {
        let m = self.m();
        if u_i.len() != m {
            return Err(RiccatiError::BadInput(format!("expected {m} components")));
        }
        let mut u0 = vec![Complex64::new(0.0, 0.0); self.dim()];
        for k in 0..m {
            u0[k] = Complex64::new(u_i[k], 0.0);
        }
        self.solve_flow_grid(&u0, times, tol)
    }
}

// ---------------------------------------------------------------------------
// Minimal solution at the boundary start
// ---------------------------------------------------------------------------

/// Convergence is declared when successive sup-differences drop below this.
pub const MINIMAL_SOLUTION_CONV_TOL: f64 = 1e-7;

/// Default shrinking-start schedule 1e-2 .. 1e-9.
pub fn default_epsilon_schedule() -> Vec<f64> {
    (2..=9).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone)]
pub struct MinimalSolution {
    /// Trajectory at the smallest epsilon — the plain limit estimate of
    /// ψ_I(t, 0).
    pub flow: FlowResult,
    /// sup_t ‖ψ_I(t, -ε_k·1) − ψ_I(t, -ε_{k+1}·1)‖_∞ across the schedule.
    pub sup_differences: Vec<f64>,
    /// Whether the last successive difference fell below
    /// [`MINIMAL_SOLUTION_CONV_TOL`].
    pub converged: bool,
    /// sup_t ‖ψ_I(t, -ε_last·1)‖_∞ of the limit estimate.
    pub sup_abs: f64,
}

impl MinimalSolution {
    pub fn convergence_error(&self) -> f64 {
        self.sup_differences
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    }
}

/// Solve the restricted flow from u_I = -ε·(1,..,1) over a strictly
/// decreasing ε schedule and report the pointwise limit estimate of
/// ψ_I(t, 0). Trajectories must be monotone in ε (larger ε stays below);
/// a violation indicates a solver fault and is an error.
pub fn minimal_solution_zero(
    ctx: &RContext,
    horizon: f64,
    schedule: &[f64],
    tol: f64,
) -> Result<MinimalSolution, RiccatiError> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) || schedule[0] <= 0.0 {
        return Err(RiccatiError::BadInput(
            "epsilon schedule must be strictly decreasing and positive".into(),
        ));
    }
    let m = ctx.m();
    if m == 0 {
        return Err(RiccatiError::BadInput(
            "minimal solution needs at least one cone coordinate (m >= 1)".into(),
        ));
    }
    let mut prev: Option<(f64, FlowResult)> = None;
    let mut sup_differences = Vec::new();
    for &eps in schedule {
        let u: Vec<f64> = vec![-eps; m];
        let flow = ctx.solve_flow_restricted(&u, horizon, tol)?;
        if let Some((eps_coarse, prev_flow)) = &prev {
            let mut sup = 0.0f64;
            let mut violation = 0.0f64;
            let mut scale = 1.0f64;
            for (a, b) in prev_flow.psi.iter().zip(flow.psi.iter()) {
                for kk in 0..m {
                    let lo = a[kk].re; // coarser epsilon: more negative
                    let hi = b[kk].re;
                    sup = sup.max((hi - lo).abs());
                    violation = violation.max(lo - hi);
                    scale = scale.max(lo.abs());
                }
            }
            // genuine comparison-theorem breaches are O(scale); trajectories
            // may still cross at the level of accumulated solver noise
            let comparison_slack = 50.0 * tol + 1e-9 + 1e-5 * scale;
            if violation > comparison_slack {
                return Err(RiccatiError::NonMonotone {
                    eps_coarse: *eps_coarse,
                    eps_fine: eps,
                    violation,
                });
            }
            sup_differences.push(sup);
        }
        prev = Some((eps, flow));
    }
    let flow = prev.unwrap().1;
    let sup_abs = flow
        .psi
        .iter()
        .flat_map(|row| row[..m].iter())
        .fold(0.0f64, |acc, c| acc.max(c.re.abs()));
    let converged = sup_differences
        .last()
        .map(|&dd| dd < MINIMAL_SOLUTION_CONV_TOL)
        .unwrap_or(false);
    Ok(MinimalSolution {
        flow,
        sup_differences,
        converged,
        sup_abs,
    })
}

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

/// Quasimonotonicity probe for an arbitrary field on R_-^m: draw x ⪯ y with
/// x_i = y_i and check f_i(x) <= f_i(y) + tol.
pub fn qmi_check_field<F>(field: F, m: usize, samples: usize, seed: u64, tol: f64) -> Verdict
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let criterion = "quasimonotone-increasing";
    if m < 2 {
        return Verdict::holds(criterion).with(Evidence::new(
            "m < 2: condition is vacuous (x = y forced)",
            m as f64,
            0.0,
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for trial in 0..samples {
        let i = rng.gen_range(0..m);
        let y: Vec<f64> = (0..m).map(|_| -rng.gen_range(0.0..3.0f64)).collect();
        let mut x = y.clone();
        for (kk, xv) in x.iter_mut().enumerate() {
            if kk != i {
                *xv -= rng.gen_range(0.0..2.0f64);
            }
        }
        let fx = field(&x);
        let fy = field(&y);
        if fx[i] > fy[i] + tol {
            return Verdict::fails(criterion).with(Evidence::new(
                format!(
                    "witness trial {trial}: f_{}(x) - f_{}(y) with x = {x:?}, y = {y:?}",
                    i + 1,
                    i + 1
                ),
                fx[i] - fy[i],
                tol,
            ));
        }
    }
    Verdict::holds(criterion).with(Evidence::new("random pairs checked", samples as f64, tol))
}

/// Check that R_I is quasimonotone increasing on R_-^m by random sampling.
pub fn check_quasimonotone(ctx: &RContext, samples: usize, seed: u64) -> Verdict {
    qmi_check_field(
        |u| {
            ctx.eval_r_restricted(u)
                .expect("sampler stays inside the domain")
        },
        ctx.m(),
        samples,
        seed,
        1e-9,
    )
}

/// Semigroup residual ‖ψ(s+t, u) − ψ(t, ψ(s, u))‖_∞ for interior real u.
pub fn flow_property_check(
    ctx: &RContext,
    u_i: &[f64],
    s: f64,
    t: f64,
    tol: f64,
) -> Result<f64, RiccatiError> {
    if u_i.iter().any(|&v| v >= 0.0) {
        return Err(RiccatiError::BadInput(
            "flow property check needs interior u (strictly negative)".into(),
        ));
    }
    let m = ctx.m();
    let direct = ctx.solve_flow_restricted_grid(u_i, &[0.0, s, s + t], tol)?;
    let mid: Vec<f64> = direct.psi[1][..m].iter().map(|c| c.re).collect();
    let endpoint: Vec<f64> = direct.psi[2][..m].iter().map(|c| c.re).collect();
    let second = ctx.solve_flow_restricted_grid(&mid, &[0.0, t], tol)?;
    let composed: Vec<f64> = second.psi[1][..m].iter().map(|c| c.re).collect();
    Ok(endpoint
        .iter()
        .zip(&composed)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Outcome;
    use crate::models;
    use std::f64::consts::PI;

    fn ctx(p: AffineParams) -> RContext {
        RContext::new(p).unwrap()
    }

    #[test]
    fn r_is_linear_for_pure_drift() {
        let c = ctx(models::linear_drift(-0.7));
        let r = c.eval_r_restricted(&[-2.0]).unwrap();
        assert!((r[0] - (-0.7) * (-2.0)).abs() < 1e-14);
        let r = c.eval_r_restricted(&[0.0]).unwrap();
        assert_eq!(r[0], 0.0);
    }

    #[test]
    fn r_vanishes_at_zero_without_killing() {
        for p in [
            models::dirac_series(),
            models::stable_half(),
            models::paired_jump(),
        ] {
            let c = ctx(p);
            let u = vec![0.0; c.m()];
            for v in c.eval_r_restricted(&u).unwrap() {
                assert!(v.abs() < 1e-10, "{v}");
            }
        }
    }

    #[test]
    fn dirac_series_r_matches_partial_sum_oracle() {
        // oracle: Σ (e^{un} - 1)/n² by direct summation; e^{uN} has fully
        // decayed at N = 2·10^5 for every probed u, so the remainder is
        // -Σ_{n>N} 1/n² = -(1/N - 1/(2N²) + O(N^{-3})).
        let n_oracle = 200_000u64;
        let oracle = |u: f64| -> f64 {
            let partial: f64 = (1..=n_oracle)
                .map(|k| {
                    let k = k as f64;
                    (u * k).exp_m1() / (k * k)
                })
                .sum();
            let nn = n_oracle as f64;
            partial - (1.0 / nn - 1.0 / (2.0 * nn * nn) + 1.0 / (6.0 * nn * nn * nn))
        };
        let c = ctx(models::dirac_series());
        for u in [-0.5, -1.0, -2.0, -0.01] {
            let r = c.eval_r_restricted(&[u]).unwrap()[0];
            let want = oracle(u);
            assert!((r - want).abs() < 1e-9, "u={u}: {r} vs {want}");
        }
    }

    #[test]
    fn dirac_series_r_deep_osgood_regime() {
        // R(u) = -u·ln(-u)... integrating R'(s) = -ln(1-e^s) term by term:
        // R(u) = -u ln(-u) + u - u²/4 + O(u³), so at u = -y,
        // R(-y) = -y (ln(1/y) + 1) - y²/4.
        let c = ctx(models::dirac_series());
        for y in [1e-6f64, 1e-9, 1e-12, 1e-14] {
            let r = c.eval_r_restricted(&[-y]).unwrap()[0];
            let want = -y * ((1.0 / y).ln() + 1.0) - y * y / 4.0;
            assert!(
                (r - want).abs() <= want.abs() * 1e-4,
                "y={y}: {r} vs {want}"
            );
            assert!(r < 0.0);
        }
    }

    #[test]
    fn stable_half_r_closed_form() {
        // R(u) = -2√π (-u)^{1/2}
        let c = ctx(models::stable_half());
        for u in [-1.0f64, -0.25, -4.0] {
            let want = -2.0 * PI.sqrt() * (-u).sqrt();
            let got = c.eval_r_restricted(&[u]).unwrap()[0];
            assert!(
                (got - want).abs() < 1e-7 * (1.0 + want.abs()),
                "u={u}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn derivative_matches_log_formula() {
        // R'(u) = -ln(1 - e^u) for the dirac-series field
        let c = ctx(models::dirac_series());
        let dir = [Complex64::new(1.0, 0.0)];
        for u in [-0.5f64, -2.0] {
            let got = c
                .derivative_r_fd(1, &[Complex64::new(u, 0.0)], &dir, 1e-5)
                .unwrap();
            let want = -(-u.exp_m1()).ln(); // -ln(1 - e^u)
            assert!((got.re - want).abs() < 1e-6, "u={u}: {} vs {want}", got.re);
            assert!(got.im.abs() < 1e-12);
        }
    }

    #[test]
    fn linear_flow_closed_form() {
        let b = -0.8;
        let c = ctx(models::linear_drift(b));
        let r = c.solve_flow_restricted(&[-1.5], 2.0, 1e-10).unwrap();
        for (i, t) in r.times.iter().enumerate() {
            let want = -1.5 * (b * t).exp();
            let got = r.psi[i][0].re;
            assert!((got - want).abs() < 1e-8, "t={t}: {got} vs {want}");
        }
        assert_eq!(r.terminal_psi0().re, 0.0);
    }

    #[test]
    fn dirac_series_flow_matches_fixed_step_rk4() {
        let c = ctx(models::dirac_series());
        let tol = 1e-10;
        let r = c.solve_flow_restricted(&[-1.0], 1.0, tol).unwrap();
        // independent fixed-step RK4 reference on the same field
        let f = |u: f64| c.eval_r_restricted(&[u.min(0.0)]).unwrap()[0];
        let steps = 2000;
        let dt = 1.0 / steps as f64;
        let mut y = -1.0f64;
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f(y + 0.5 * dt * k1);
            let k3 = f(y + 0.5 * dt * k2);
            let k4 = f(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        let got = r.terminal_psi()[0].re;
        assert!((got - y).abs() < 1e-8, "{got} vs {y}");
    }

    #[test]
    fn stable_half_flow_separates() {
        // -ψ(t, u) = ((-u)^{1/2} + √π t)²
        let c = ctx(models::stable_half());
        let r = c.solve_flow_restricted(&[-1.0], 1.0, 1e-10).unwrap();
        for (i, t) in r.times.iter().enumerate() {
            let want = -(1.0 + PI.sqrt() * t).powi(2);
            let got = r.psi[i][0].re;
            assert!(
                (got - want).abs() < 1e-5 * (1.0 + want.abs()),
                "t={t}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn domain_preserved_from_tiny_interior_start() {
        let c = ctx(models::dirac_series());
        let r = c.solve_flow_restricted(&[-1e-8], 5.0, 1e-10).unwrap();
        for row in &r.psi {
            assert!(row[0].re <= 0.0);
        }
    }

    #[test]
    fn minimal_solution_stable_half_is_quadratic() {
        let c = ctx(models::stable_half());
        let ms = minimal_solution_zero(&c, 1.0, &default_epsilon_schedule(), 1e-10).unwrap();
        for (i, t) in ms.flow.times.iter().enumerate() {
            if *t < 0.1 {
                continue;
            }
            let want = -PI * t * t;
            let got = ms.flow.psi[i][0].re;
            assert!(((got - want) / want).abs() < 1e-3, "t={t}: {got} vs {want}");
        }
        assert!(ms.sup_abs > 3.0);
    }

    #[test]
    fn minimal_solution_linear_is_zero() {
        let c = ctx(models::linear_drift(-1.0));
        let ms = minimal_solution_zero(&c, 4.0, &default_epsilon_schedule(), 1e-10).unwrap();
        assert!(ms.sup_abs <= 1e-7, "{}", ms.sup_abs);
        assert!(ms.converged);
    }

    #[test]
    fn qmi_verdicts() {
        let c = ctx(models::paired_jump());
        assert_eq!(check_quasimonotone(&c, 500, 7).outcome, Outcome::Holds);

        // vacuous for m = 1
        let c1 = ctx(models::dirac_series());
        assert_eq!(check_quasimonotone(&c1, 100, 7).outcome, Outcome::Holds);

        // planted non-qmi field: f_1 decreasing in x_2
        let v = qmi_check_field(|x| vec![-x[1], x[1]], 2, 500, 7, 1e-9);
        assert_eq!(v.outcome, Outcome::Fails, "{v}");
    }

    #[test]
    fn flow_property_residuals() {
        let tol = 1e-10;
        for (p, slack) in [
            (models::linear_drift(-0.6), 2.0),
            (models::dirac_series(), 50.0),
            (models::stable_half(), 50.0),
        ] {
            let c = ctx(p);
            let res = flow_property_check(&c, &[-1.0], 0.5, 0.5, tol).unwrap();
            assert!(res <= slack * tol, "residual {res} > {slack}x{tol}");
        }
    }

    #[test]
    fn monotone_in_initial_condition() {
        let c = ctx(models::dirac_series());
        let a = c.solve_flow_restricted(&[-2.0], 1.0, 1e-10).unwrap();
        let b = c.solve_flow_restricted(&[-1.0], 1.0, 1e-10).unwrap();
        for (ra, rb) in a.psi.iter().zip(b.psi.iter()) {
            assert!(ra[0].re <= rb[0].re + 1e-8);
        }
    }

    #[test]
    fn characteristic_function_bound_on_imaginary_inputs() {
        let c = ctx(models::paired_jump());
        let u = [Complex64::new(0.0, 1.3), Complex64::new(0.0, -0.7)];
        let r = c.solve_flow(&u, 1.0, 1e-10).unwrap();
        for (row, p0) in r.psi.iter().zip(r.psi0.iter()) {
            for x1 in [0.0, 1.0, 5.0] {
                for x2 in [-3.0, 0.0, 3.0] {
                    let exponent = p0 + row[0] * x1 + row[1] * x2;
                    assert!(exponent.re <= 1e-9, "Re exponent = {}", exponent.re);
                }
            }
        }
    }

    #[test]
    fn self_convergence_under_tolerance_halving() {
        let c = ctx(models::dirac_series());
        let fine = c.solve_flow_restricted(&[-1.0], 1.0, 1e-12).unwrap();
        let want = fine.terminal_psi()[0].re;
        let err_at = |tol: f64| {
            (c.solve_flow_restricted(&[-1.0], 1.0, tol)
                .unwrap()
                .terminal_psi()[0]
                .re
                - want)
                .abs()
        };
        let e1 = err_at(1e-6);
        let e2 = err_at(5e-7);
        assert!(e2 <= e1 / 2.0 + 1e-13, "{e2} vs {e1}");
    }

    #[test]
    fn inadmissible_params_rejected() {
        let p = AffineParams::new(
            1,
            0,
            vec![nalgebra::DMatrix::zeros(1, 1); 2],
            vec![vec![0.0], vec![0.0]],
            vec![-1.0, 0.0],
            vec![JumpMeasure::zero(); 2],
        )
        .unwrap();
        assert!(matches!(
            RContext::new(p),
            Err(RiccatiError::Inadmissible(_))
        ));
    }
}

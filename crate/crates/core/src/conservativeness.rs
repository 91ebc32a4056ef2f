//! Conservativeness decisions: does the process survive forever, i.e. is the
//! zero function the only R_-^m-valued solution of the restricted Riccati
//! system started at 0?
//!
//! The decision path is
//!
//! 1. any nonzero killing rate γ means mass is lost — `Fails`;
//! 2. the easy moment condition ∫(|ξ_k| ∧ |ξ_k|²) κ_j(dξ) < ∞ for all
//!    1 ≤ j,k ≤ m makes the field locally Lipschitz and forces uniqueness —
//!    `Holds` (vacuously so for continuous models and for m = 0);
//! 3. for m = 1 the Osgood dichotomy is exact: the process is conservative
//!    iff ∫_{0-} du/R_1(u,0) = -∞, decided here by dyadically shrinking
//!    partial integrals;
//! 4. otherwise the minimal-solution probe over a shrinking ε-schedule gives
//!    a numeric answer that may legitimately be `Inconclusive`.
//!
//! Once conservativeness is decided by a criterion, the survival identity
//! ψ_0(t,0) = 0, ψ_I(t,0) = 0 pins the minimal solution exactly; the
//! ε-schedule limit is only used (and only meaningful) on the
//! non-conservative side, where the nontrivial branch is an attractor rather
//! than a repeller.

use crate::model::{classify_moment, AffineParams, Evidence, MomentKind, Outcome, Verdict};
use crate::quad::tanh_sinh;
use crate::riccati::{
    default_epsilon_schedule, minimal_solution_zero, MinimalSolution, RContext, RiccatiError,
    DEFAULT_FLOW_TOL,
};
use serde::Serialize;

/// Outer endpoint of the Osgood integration window.
const OSGOOD_DELTA: f64 = 1e-2;
/// Number of dyadic halvings; the innermost endpoint is δ·2^-64 ≈ 5.4e-22.
/// Convergent integrals of |u|^a type need this depth to go Cauchy at 1e-9;
/// 40 levels would leave a √u tail of ~1e-6, far above the Cauchy tolerance.
const OSGOOD_LEVELS: usize = 64;
/// Cauchy tolerance over the last 10 levels for declaring convergence.
const OSGOOD_CAUCHY_TOL: f64 = 1e-9;
/// Threshold on sup_t |ψ_I(t,0)| for declaring conservativeness numerically.
pub const MINIMAL_SUP_TOL: f64 = 1e-6;

/// Everything the verdict consulted, in order.
#[derive(Debug, Clone, Serialize)]
pub struct ConservativenessReport {
    pub overall: Verdict,
    pub gamma_check: Verdict,
    /// per-(j,k) wedge-moment verdicts for 1 <= j,k <= m
    pub moment_check: Vec<MomentEntry>,
    pub moment_overall: Verdict,
    /// `None` when not applicable (m != 1 or an earlier criterion decided).
    pub osgood: Option<Verdict>,
    /// sup_t |ψ_I(t,0)| estimate over the horizon.
    pub minimal_solution_sup: f64,
    pub minimal_solution_error: f64,
    pub horizon: f64,
    pub decision_path: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEntry {
    pub j: usize,
    pub k: usize,
    pub verdict: Verdict,
}

/// Holds iff every killing rate is exactly zero. γ is user input, not a
/// computed quantity, so no tolerance is applied.
pub fn necessary_gamma_check(params: &AffineParams) -> Verdict {
    let criterion = "gamma-zero";
    for j in 0..=params.dim() {
        let g = params.gamma(j);
        if g != 0.0 {
            return Verdict::fails(criterion).with(Evidence::new(
                format!("gamma[{j}] is nonzero"),
                g,
                0.0,
            ));
        }
    }
    Verdict::holds(criterion)
}

/// The easy sufficient condition: all wedge moments
/// ∫ (|ξ_k| ∧ |ξ_k|²) κ_j(dξ) finite for 1 <= j,k <= m.
pub fn sufficient_moment_check(params: &AffineParams) -> Verdict {
    moment_matrix(params).1
}

fn moment_matrix(params: &AffineParams) -> (Vec<MomentEntry>, Verdict) {
    let m = params.m();
    let criterion = "wedge-moment";
    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for j in 1..=m {
        for k in 1..=m {
            let v = classify_moment(params.kappa(j), MomentKind::Wedge(k));
            outcomes.push(v.outcome);
            entries.push(MomentEntry { j, k, verdict: v });
        }
    }
    let overall = match Outcome::all(outcomes) {
        Outcome::Holds => Verdict::holds(criterion).with(Evidence::new(
            "all wedge moments finite",
            (m * m) as f64,
            0.0,
        )),
        Outcome::Fails => {
            let mut v = Verdict::fails(criterion);
            for e in entries.iter().filter(|e| e.verdict.outcome == Outcome::Fails) {
                v = v.with(Evidence::new(
                    format!("wedge moment (j={}, k={}) diverges", e.j, e.k),
                    f64::INFINITY,
                    0.0,
                ));
            }
            v
        }
        Outcome::Inconclusive => Verdict::inconclusive(
            criterion,
            Evidence::new("some wedge moments could not be classified", f64::NAN, 0.0),
        ),
    };
    (entries, overall)
}

/// Osgood dichotomy for m = 1: decide whether ∫_{0-} du / R_1(u, 0) = -∞.
///
/// Partial integrals over [-δ, -δ·2^-k] either go Cauchy (convergent ⇒ a
/// nontrivial solution escapes ⇒ `Fails`) or keep decreasing at a linear or
/// slower-divergent rate in the level index (`Holds`). A field that is zero
/// or nonnegative near 0⁻ cannot push solutions away from zero at all, which
/// is the vacuous `Holds` branch.
pub fn osgood_check(ctx: &RContext) -> Result<Verdict, RiccatiError> {
    let criterion = "osgood";
    if ctx.m() != 1 {
        return Err(RiccatiError::BadInput(
            "the Osgood dichotomy applies to m = 1 only".into(),
        ));
    }

    let mut any_negative = false;
    let mut any_positive = false;
    for k in 0..=OSGOOD_LEVELS {
        let u = -OSGOOD_DELTA * 0.5f64.powi(k as i32);
        let r = ctx.eval_r_restricted(&[u])?[0];
        if r < -1e-300 {
            any_negative = true;
        }
        if r > 1e-300 {
            any_positive = true;
        }
    }
    if !any_negative {
        return Ok(Verdict::holds(criterion).with(Evidence::new(
            "R_1 >= 0 on the probed left neighborhood; no escape from zero is possible",
            0.0,
            0.0,
        )));
    }
    if any_positive {
        return Ok(Verdict::inconclusive(
            criterion,
            Evidence::new(
                "R_1 changes sign near 0-; dyadic integral test not applicable",
                f64::NAN,
                0.0,
            ),
        ));
    }

    // Partial integrals I_k = ∫_{-δ}^{-δ 2^-k} du / R(u), one dyadic slice at
    // a time; 1/R is smooth inside each slice.
    let mut partials = Vec::with_capacity(OSGOOD_LEVELS);
    let mut total = 0.0f64;
    for k in 1..=OSGOOD_LEVELS {
        let a = -OSGOOD_DELTA * 0.5f64.powi(k as i32 - 1);
        let b = -OSGOOD_DELTA * 0.5f64.powi(k as i32);
        let slice = tanh_sinh(
            |u| 1.0 / ctx.eval_r_restricted(&[u]).map(|r| r[0]).unwrap_or(f64::NAN),
            a,
            b,
            1e-10,
        );
        total += slice.value;
        partials.push(total);
    }
    let last = *partials.last().unwrap();
    let window = &partials[OSGOOD_LEVELS - 10..];
    let cauchy = window.iter().all(|&v| (last - v).abs() <= OSGOOD_CAUCHY_TOL);
    if cauchy {
        return Ok(Verdict::fails(criterion)
            .with(Evidence::new(
                "partial integrals Cauchy over the last 10 levels (integral converges)",
                (last - window[0]).abs(),
                OSGOOD_CAUCHY_TOL,
            ))
            .with(Evidence::new("integral estimate", last, OSGOOD_CAUCHY_TOL)));
    }

    // Divergence: increments stay negative and do not collapse geometrically
    // over the last 15 levels (covers both -c·k and -c·ln k profiles).
    let increments: Vec<f64> = partials.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &increments[increments.len() - 15..];
    let all_negative = tail.iter().all(|&d| d < 0.0);
    let max = tail.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
    let min = tail.iter().fold(f64::INFINITY, |a, &d| a.min(d.abs()));
    let floor = 1e-7 * (1.0 + last.abs());
    if all_negative && min >= floor && max / min <= 50.0 {
        return Ok(Verdict::holds(criterion)
            .with(Evidence::new(
                "partial integrals decrease without bound (linear-or-slower divergence)",
                last,
                0.0,
            ))
            .with(Evidence::new(
                "last-level increment",
                *tail.last().unwrap(),
                floor,
            )));
    }
    Ok(Verdict::inconclusive(
        criterion,
        Evidence::new(
            format!(
                "neither Cauchy nor clearly divergent after {OSGOOD_LEVELS} levels (I = {last:.6e})"
            ),
            last,
            OSGOOD_CAUCHY_TOL,
        ),
    ))
}

/// Full conservativeness decision; the horizon only matters when the
/// minimal-solution probe is reached (and for the attached ψ values).
pub fn conservativeness_verdict(
    ctx: &RContext,
    horizon: f64,
) -> Result<ConservativenessReport, RiccatiError> {
    let params = ctx.params();
    let mut path = Vec::new();

    let gamma_check = necessary_gamma_check(params);
    path.push(format!("gamma-zero: {}", gamma_check.outcome));
    let (moment_entries, moment_overall) = moment_matrix(params);
    path.push(format!("wedge-moment: {}", moment_overall.outcome));

    if gamma_check.outcome == Outcome::Fails {
        let overall = Verdict::fails("gamma-zero").with(Evidence::new(
            "nonzero killing rate: transition mass decays",
            1.0,
            0.0,
        ));
        return Ok(ConservativenessReport {
            overall,
            gamma_check,
            moment_check: moment_entries,
            moment_overall,
            osgood: None,
            minimal_solution_sup: f64::NAN,
            minimal_solution_error: f64::NAN,
            horizon,
            decision_path: path,
        });
    }

    if moment_overall.outcome == Outcome::Holds {
        path.push("decided: moment condition sufficient".into());
        return Ok(ConservativenessReport {
            overall: Verdict::holds("wedge-moment"),
            gamma_check,
            moment_check: moment_entries,
            moment_overall,
            osgood: None,
            // survival identity: a decided-conservative process has
            // ψ_I(·,0) ≡ 0 exactly
            minimal_solution_sup: 0.0,
            minimal_solution_error: 0.0,
            horizon,
            decision_path: path,
        });
    }

    if params.m() == 1 {
        let osgood = osgood_check(ctx)?;
        path.push(format!("osgood: {}", osgood.outcome));
        match osgood.outcome {
            Outcome::Holds => {
                path.push("decided: Osgood integral diverges".into());
                return Ok(ConservativenessReport {
                    overall: osgood.clone(),
                    gamma_check,
                    moment_check: moment_entries,
                    moment_overall,
                    osgood: Some(osgood),
                    minimal_solution_sup: 0.0,
                    minimal_solution_error: 0.0,
                    horizon,
                    decision_path: path,
                });
            }
            Outcome::Fails => {
                path.push("decided: Osgood integral converges".into());
                let ms = minimal_solution_zero(
                    ctx,
                    horizon,
                    &default_epsilon_schedule(),
                    DEFAULT_FLOW_TOL,
                )?;
                return Ok(ConservativenessReport {
                    overall: osgood.clone(),
                    gamma_check,
                    moment_check: moment_entries,
                    moment_overall,
                    osgood: Some(osgood),
                    minimal_solution_sup: ms.sup_abs,
                    minimal_solution_error: ms.convergence_error(),
                    horizon,
                    decision_path: path,
                });
            }
            Outcome::Inconclusive => {
                path.push("osgood inconclusive; falling through to minimal solution".into());
            }
        }
    }

    // General-m numeric probe.
    let ms = minimal_solution_zero(ctx, horizon, &default_epsilon_schedule(), DEFAULT_FLOW_TOL)?;
    let sup = ms.sup_abs;
    let conv_err = ms.convergence_error();
    path.push(format!(
        "minimal-solution: sup = {sup:.3e}, convergence error = {conv_err:.3e}"
    ));
    let criterion = "minimal-solution";
    let overall = if sup <= MINIMAL_SUP_TOL {
        Verdict::holds(criterion).with(Evidence::new(
            "sup_t |psi_I(t,0)| below threshold",
            sup,
            MINIMAL_SUP_TOL,
        ))
    } else if sup >= 100.0 * conv_err {
        Verdict::fails(criterion)
            .with(Evidence::new("sup_t |psi_I(t,0)|", sup, MINIMAL_SUP_TOL))
            .with(Evidence::new("schedule convergence error", conv_err, 0.0))
    } else {
        Verdict::inconclusive(
            criterion,
            Evidence::new(
                "limit estimate not separated from its convergence error",
                sup,
                100.0 * conv_err,
            ),
        )
    };
    Ok(ConservativenessReport {
        overall,
        gamma_check,
        moment_check: moment_entries,
        moment_overall,
        osgood: None,
        minimal_solution_sup: sup,
        minimal_solution_error: conv_err,
        horizon,
        decision_path: path,
    })
}

/// Survival probability p_t(x, D) = exp(ψ_0(t,0) + ⟨ψ_I(t,0), x_I⟩).
///
/// For a decided-conservative model this is exactly 1; otherwise the minimal
/// solution supplies ψ. The result is clamped to [0, 1].
pub fn survival_probability(
    ctx: &RContext,
    report: &ConservativenessReport,
    x: &[f64],
    t: f64,
) -> Result<f64, RiccatiError> {
    if x.len() != ctx.dim() {
        return Err(RiccatiError::BadInput(format!(
            "state must have {} coordinates",
            ctx.dim()
        )));
    }
    if !ctx.params().gamma_is_zero() {
        return Err(RiccatiError::BadInput(
            "survival identity requires gamma = 0".into(),
        ));
    }
    if report.overall.outcome == Outcome::Holds {
        return Ok(1.0);
    }
    let ms = minimal_solution_for(ctx, t.max(report.horizon))?;
    Ok(survival_from_minimal(ctx, &ms, x, t))
}

pub(crate) fn minimal_solution_for(
    ctx: &RContext,
    horizon: f64,
) -> Result<MinimalSolution, RiccatiError> {
    minimal_solution_zero(ctx, horizon, &default_epsilon_schedule(), DEFAULT_FLOW_TOL)
}

pub(crate) fn survival_from_minimal(
    ctx: &RContext,
    ms: &MinimalSolution,
    x: &[f64],
    t: f64,
) -> f64 {
    let m = ctx.m();
    let times = &ms.flow.times;
    let idx = match times.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1).min(times.len() - 1),
    };
    let mut expo = ms.flow.psi0[idx].re;
    for k in 0..m {
        expo += ms.flow.psi[idx][k].re * x[k];
    }
    expo.exp().clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use std::f64::consts::PI;

    fn ctx(p: AffineParams) -> RContext {
        RContext::new(p).unwrap()
    }

    #[test]
    fn gamma_checks() {
        assert_eq!(
            necessary_gamma_check(&models::dirac_series()).outcome,
            Outcome::Holds
        );
        let p = models::dirac_series();
        let bad = AffineParams::new(
            p.m(),
            p.n(),
            p.alphas().to_vec(),
            p.betas().to_vec(),
            vec![0.1, 0.0],
            p.kappas().to_vec(),
        )
        .unwrap();
        assert_eq!(necessary_gamma_check(&bad).outcome, Outcome::Fails);
        // exact-zero policy, even for a value below every other tolerance
        let tiny = AffineParams::new(
            p.m(),
            p.n(),
            p.alphas().to_vec(),
            p.betas().to_vec(),
            vec![0.0, 1e-12],
            p.kappas().to_vec(),
        )
        .unwrap();
        assert_eq!(necessary_gamma_check(&tiny).outcome, Outcome::Fails);
    }

    #[test]
    fn moment_check_outcomes() {
        assert_eq!(
            sufficient_moment_check(&models::dirac_series()).outcome,
            Outcome::Fails
        );
        assert_eq!(
            sufficient_moment_check(&models::stable_half()).outcome,
            Outcome::Fails
        );
        assert_eq!(
            sufficient_moment_check(&models::heavy_jump_truncated(200)).outcome,
            Outcome::Holds
        );
        // no cone coordinates: vacuous
        assert_eq!(
            sufficient_moment_check(&models::pure_diffusion(1, 1)).outcome,
            Outcome::Holds
        );
    }

    #[test]
    fn osgood_dichotomy() {
        let v = osgood_check(&ctx(models::dirac_series())).unwrap();
        assert_eq!(v.outcome, Outcome::Holds, "{v}");

        let v = osgood_check(&ctx(models::stable_half())).unwrap();
        assert_eq!(v.outcome, Outcome::Fails, "{v}");

        // linear field: logarithmic divergence
        let v = osgood_check(&ctx(models::linear_drift(-0.5))).unwrap();
        assert_eq!(v.outcome, Outcome::Holds, "{v}");

        // identically zero field: vacuous Holds
        let v = osgood_check(&ctx(models::linear_drift(0.0))).unwrap();
        assert_eq!(v.outcome, Outcome::Holds, "{v}");
    }

    #[test]
    fn verdict_dirac_series_via_osgood() {
        let c = ctx(models::dirac_series());
        let r = conservativeness_verdict(&c, 10.0).unwrap();
        assert_eq!(r.overall.outcome, Outcome::Holds, "{:?}", r.decision_path);
        assert_eq!(r.moment_overall.outcome, Outcome::Fails);
        assert_eq!(r.osgood.as_ref().unwrap().outcome, Outcome::Holds);
        assert!(r.minimal_solution_sup <= MINIMAL_SUP_TOL);
    }

    #[test]
    fn verdict_stable_half_fails() {
        let c = ctx(models::stable_half());
        let r = conservativeness_verdict(&c, 1.0).unwrap();
        assert_eq!(r.overall.outcome, Outcome::Fails, "{:?}", r.decision_path);
        assert!(r.minimal_solution_sup > 3.0);
    }

    #[test]
    fn verdict_diffusion_only_via_moments() {
        let c = ctx(models::pure_diffusion(2, 1));
        let r = conservativeness_verdict(&c, 5.0).unwrap();
        assert_eq!(r.overall.outcome, Outcome::Holds);
        assert_eq!(r.overall.criterion, "wedge-moment");
    }

    #[test]
    fn survival_probabilities() {
        let c = ctx(models::dirac_series());
        let rep = conservativeness_verdict(&c, 10.0).unwrap();
        for (x, t) in [(0.0, 1.0), (2.0, 5.0), (10.0, 10.0)] {
            let p = survival_probability(&c, &rep, &[x], t).unwrap();
            assert!((p - 1.0).abs() <= 1e-6, "{p}");
        }

        let c = ctx(models::stable_half());
        let rep = conservativeness_verdict(&c, 1.0).unwrap();
        let p = survival_probability(&c, &rep, &[1.0], 1.0).unwrap();
        let want = (-PI).exp();
        assert!((p - want).abs() < 1e-3, "{p} vs {want}");
        // nonincreasing in t and in the cone coordinate
        let p_earlier = survival_probability(&c, &rep, &[1.0], 0.5).unwrap();
        assert!(p <= p_earlier + 1e-12);
        let p_bigger_x = survival_probability(&c, &rep, &[2.0], 1.0).unwrap();
        assert!(p_bigger_x <= p + 1e-12);
    }

    #[test]
    fn osgood_and_minimal_solution_never_contradict() {
        for p in [
            models::dirac_series(),
            models::stable_half(),
            models::linear_drift(-1.0),
        ] {
            let c = ctx(p);
            let osgood = osgood_check(&c).unwrap();
            if osgood.outcome == Outcome::Fails {
                let ms = minimal_solution_for(&c, 1.0).unwrap();
                assert!(ms.sup_abs > MINIMAL_SUP_TOL, "sup {}", ms.sup_abs);
            }
        }
    }
}

//! Parameter and measure representations, admissibility validation, and the
//! measure-integration engine behind every moment check.

mod integrate;
mod measure;
mod params;
mod specfile;

pub use integrate::{measure_integral, measure_integral_expr, total_mass, MeasureError};
pub use measure::{Atom, Growth, JumpMeasure, TailDecay};
pub use params::{truncation_h, truncation_h_scalar, validate_admissibility, AffineParams, Violation};
pub use specfile::{load_spec, params_from_spec, params_to_spec, save_spec, MeasureSpec, ProcessSpec, SpecError};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Three-valued outcome of a semidecidable check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Holds,
    Fails,
    Inconclusive,
}

impl Outcome {
    /// Conjunction over stages: any Fails wins, then any Inconclusive.
    pub fn all<I: IntoIterator<Item = Outcome>>(iter: I) -> Outcome {
        let mut out = Outcome::Holds;
        for o in iter {
            match o {
                Outcome::Fails => return Outcome::Fails,
                Outcome::Inconclusive => out = Outcome::Inconclusive,
                Outcome::Holds => {}
            }
        }
        out
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Holds => 0,
            Outcome::Fails => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Holds => write!(f, "Holds"),
            Outcome::Fails => write!(f, "Fails"),
            Outcome::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// One numeric fact supporting a verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evidence {
    pub description: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Evidence {
    pub fn new(description: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Evidence {
            description: description.into(),
            value,
            tolerance,
        }
    }
}

/// Outcome of a single check together with the rule that decided it and the
/// numbers it was decided on. An `Inconclusive` verdict always carries at
/// least one evidence entry saying why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub criterion: String,
    pub evidence: Vec<Evidence>,
}

impl Verdict {
    pub fn holds(criterion: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Holds,
            criterion: criterion.into(),
            evidence: Vec::new(),
        }
    }

    pub fn fails(criterion: impl Into<String>) -> Self {
        Verdict {
            outcome: Outcome::Fails,
            criterion: criterion.into(),
            evidence: Vec::new(),
        }
    }

    pub fn inconclusive(criterion: impl Into<String>, why: Evidence) -> Self {
        Verdict {
            outcome: Outcome::Inconclusive,
            criterion: criterion.into(),
            evidence: vec![why],
        }
    }

    pub fn with(mut self, e: Evidence) -> Self {
        self.evidence.push(e);
        self
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.outcome, self.criterion)?;
        for e in &self.evidence {
            write!(f, "\n    {} = {:.6e} (tol {:.1e})", e.description, e.value, e.tolerance)?;
        }
        Ok(())
    }
}

/// Result of a numeric ∫ f dκ. `Finite` guarantees the error bound met the
/// requested tolerance; divergence is only reported when a tail comparison
/// was conclusive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum IntegralStatus {
    Finite { value: f64, error_bound: f64 },
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntegralResult {
    pub status: IntegralStatus,
    /// Series terms or quadrature nodes consumed.
    pub nodes_used: usize,
    pub note: String,
}

impl IntegralResult {
    pub fn finite(value: f64, error_bound: f64, nodes_used: usize, note: impl Into<String>) -> Self {
        IntegralResult {
            status: IntegralStatus::Finite { value, error_bound },
            nodes_used,
            note: note.into(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self.status {
            IntegralStatus::Finite { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn error_bound(&self) -> Option<f64> {
        match self.status {
            IntegralStatus::Finite { error_bound, .. } => Some(error_bound),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.status, IntegralStatus::Finite { .. })
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self.status, IntegralStatus::Divergent)
    }
}

/// Moment integrands recurring in the admissibility and martingale checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// ‖h(ξ)‖²
    HSquare,
    /// |h_k(ξ)|, 1-based coordinate
    HAbs(usize),
    /// |ξ_i| on {|ξ_i| > 1}
    BigJumpAbs(usize),
    /// ξ_i − h_i(ξ) (signed compensator gap; classified via its absolute value)
    CompensatorGap(usize),
    /// |ξ_k| ∧ |ξ_k|²
    Wedge(usize),
}

impl MomentKind {
    pub fn label(&self) -> String {
        match self {
            MomentKind::HSquare => "h_square".into(),
            MomentKind::HAbs(k) => format!("h_abs({k})"),
            MomentKind::BigJumpAbs(i) => format!("big_jump_abs({i})"),
            MomentKind::CompensatorGap(i) => format!("compensator_gap({i})"),
            MomentKind::Wedge(k) => format!("wedge({k})"),
        }
    }

    pub fn integrand(&self) -> impl Fn(&[f64]) -> f64 + Copy + Send + Sync {
        let kind = *self;
        move |xi: &[f64]| match kind {
            MomentKind::HSquare => xi.iter().map(|&x| {
                let h = truncation_h_scalar(x);
                h * h
            }).sum(),
            MomentKind::HAbs(k) => truncation_h_scalar(xi[k - 1]).abs(),
            MomentKind::BigJumpAbs(i) => {
                let x = xi[i - 1];
                if x.abs() > 1.0 {
                    x.abs()
                } else {
                    0.0
                }
            }
            MomentKind::CompensatorGap(i) => {
                let x = xi[i - 1];
                x - truncation_h_scalar(x)
            }
            MomentKind::Wedge(k) => {
                let a = xi[k - 1].abs();
                a.min(a * a)
            }
        }
    }
}

/// Classify ∫ of the named moment integrand against κ: Holds = finite,
/// Fails = divergent, otherwise Inconclusive with the engine's evidence.
pub fn classify_moment(measure: &JumpMeasure, kind: MomentKind) -> Verdict {
    let label = format!("moment:{}", kind.label());
    let f = kind.integrand();
    // Classified on |integrand| so signed kinds cannot cancel their own tail.
    let res = match kind {
        MomentKind::CompensatorGap(_) => measure_integral(measure, move |xi| f(xi).abs(), MOMENT_TOL),
        _ => measure_integral(measure, f, MOMENT_TOL),
    };
    match res {
        Ok(r) => match r.status {
            IntegralStatus::Finite { value, error_bound } => Verdict::holds(&label)
                .with(Evidence::new("integral value", value, MOMENT_TOL))
                .with(Evidence::new("error bound", error_bound, MOMENT_TOL)),
            IntegralStatus::Divergent => Verdict::fails(&label).with(Evidence::new(
                format!("divergent: {}", r.note),
                f64::INFINITY,
                MOMENT_TOL,
            )),
            IntegralStatus::Inconclusive => Verdict::inconclusive(
                &label,
                Evidence::new(
                    format!("integral inconclusive after {} terms: {}", r.nodes_used, r.note),
                    f64::NAN,
                    MOMENT_TOL,
                ),
            ),
        },
        Err(e) => Verdict::inconclusive(&label, Evidence::new(format!("{e}"), f64::NAN, MOMENT_TOL)),
    }
}

/// Default tolerance for analytic moment integrals.
pub const MOMENT_TOL: f64 = 1e-10;
/// Default relative tolerance for density quadrature.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Slack for admissibility inequalities evaluated through integrals.
pub const DRIFT_SLACK: f64 = 1e-9;

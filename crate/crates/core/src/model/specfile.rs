//! Process spec files: the on-disk JSON description of an affine model.
//!
//! Top-level keys `m`, `n`, `alpha` (d+1 row-major d×d matrices), `beta`
//! (d+1 length-d arrays), `gamma` (d+1 reals), `kappa` (d+1 measure
//! descriptors, `null` meaning the zero measure; an empty or missing array
//! also means all-zero measures). `null` interval bounds are infinite.
//! Expression strings survive a load/save round trip verbatim.

use super::measure::{Atom, JumpMeasure, TailDecay};
use super::params::{AffineParams, ParamsError};
use crate::expr::ExprDef;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec file: {0}")]
    Io(#[from] std::io::Error),
    #[error("spec parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("spec field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub m: usize,
    pub n: usize,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub kappa: Vec<Option<MeasureSpec>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    FiniteAtoms {
        atoms: Vec<AtomSpec>,
    },
    Series {
        point_exprs: Vec<ExprDef>,
        weight_expr: ExprDef,
        tail: TailSpec,
        #[serde(default = "default_series_tol")]
        tol: f64,
    },
    Density {
        expr: ExprDef,
        domain: Vec<[Option<f64>; 2]>,
        tail_zero: f64,
        tail_inf: f64,
        #[serde(default = "default_density_tol")]
        tol: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub point: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailSpec {
    pub c: f64,
    pub p: f64,
}

fn default_series_tol() -> f64 {
    1e-10
}

fn default_density_tol() -> f64 {
    1e-8
}

impl MeasureSpec {
    fn into_measure(self) -> JumpMeasure {
        match self {
            MeasureSpec::FiniteAtoms { atoms } => JumpMeasure::FiniteAtomic {
                atoms: atoms
                    .into_iter()
                    .map(|a| Atom::new(a.point, a.weight))
                    .collect(),
            },
            MeasureSpec::Series {
                point_exprs,
                weight_expr,
                tail,
                tol,
            } => JumpMeasure::SeriesAtomic {
                point_exprs,
                weight_expr,
                tail: TailDecay {
                    c: tail.c,
                    p: tail.p,
                },
                truncation_tol: tol,
            },
            MeasureSpec::Density {
                expr,
                domain,
                tail_zero,
                tail_inf,
                tol,
            } => JumpMeasure::Density {
                density_expr: expr,
                domain: domain.into_iter().map(|[lo, hi]| (lo, hi)).collect(),
                tail_zero,
                tail_inf,
                quadrature_tol: tol,
            },
        }
    }

    fn from_measure(m: &JumpMeasure) -> Option<MeasureSpec> {
        if m.is_zero() {
            return None;
        }
        Some(match m {
            JumpMeasure::FiniteAtomic { atoms } => MeasureSpec::FiniteAtoms {
                atoms: atoms
                    .iter()
                    .map(|a| AtomSpec {
                        point: a.point.clone(),
                        weight: a.weight,
                    })
                    .collect(),
            },
            JumpMeasure::SeriesAtomic {
                point_exprs,
                weight_expr,
                tail,
                truncation_tol,
            } => MeasureSpec::Series {
                point_exprs: point_exprs.clone(),
                weight_expr: weight_expr.clone(),
                tail: TailSpec {
                    c: tail.c,
                    p: tail.p,
                },
                tol: *truncation_tol,
            },
            JumpMeasure::Density {
                density_expr,
                domain,
                tail_zero,
                tail_inf,
                quadrature_tol,
            } => MeasureSpec::Density {
                expr: density_expr.clone(),
                domain: domain.iter().map(|&(lo, hi)| [lo, hi]).collect(),
                tail_zero: *tail_zero,
                tail_inf: *tail_inf,
                tol: *quadrature_tol,
            },
        })
    }
}

pub fn params_from_spec(spec: ProcessSpec) -> Result<AffineParams, SpecError> {
    let d = spec.m + spec.n;
    if d == 0 {
        return Err(field_err("m/n", "state dimension m + n must be at least 1"));
    }
    if spec.alpha.len() != d + 1 {
        return Err(field_err(
            "alpha",
            format!("expected {} matrices, got {}", d + 1, spec.alpha.len()),
        ));
    }
    let mut alpha = Vec::with_capacity(d + 1);
    for (j, flat) in spec.alpha.iter().enumerate() {
        if flat.len() != d * d {
            return Err(field_err(
                format!("alpha[{j}]"),
                format!("expected {} row-major entries, got {}", d * d, flat.len()),
            ));
        }
        alpha.push(DMatrix::from_row_slice(d, d, flat));
    }
    if spec.beta.len() != d + 1 {
        return Err(field_err(
            "beta",
            format!("expected {} vectors, got {}", d + 1, spec.beta.len()),
        ));
    }
    for (j, b) in spec.beta.iter().enumerate() {
        if b.len() != d {
            return Err(field_err(
                format!("beta[{j}]"),
                format!("expected length {}, got {}", d, b.len()),
            ));
        }
    }
    if spec.gamma.len() != d + 1 {
        return Err(field_err(
            "gamma",
            format!("expected {} entries, got {}", d + 1, spec.gamma.len()),
        ));
    }
    let kappa: Vec<JumpMeasure> = if spec.kappa.is_empty() {
        vec![JumpMeasure::zero(); d + 1]
    } else if spec.kappa.len() == d + 1 {
        spec.kappa
            .into_iter()
            .map(|k| k.map(MeasureSpec::into_measure).unwrap_or_else(JumpMeasure::zero))
            .collect()
    } else {
        return Err(field_err(
            "kappa",
            format!("expected {} descriptors (or an empty array), got {}", d + 1, spec.kappa.len()),
        ));
    };
    Ok(AffineParams::new(
        spec.m, spec.n, alpha, spec.beta, spec.gamma, kappa,
    )?)
}

pub fn params_to_spec(params: &AffineParams) -> ProcessSpec {
    let d = params.dim();
    ProcessSpec {
        m: params.m(),
        n: params.n(),
        alpha: (0..=d)
            .map(|j| {
                let a = params.alpha(j);
                (0..d)
                    .flat_map(|r| (0..d).map(move |c| a[(r, c)]))
                    .collect()
            })
            .collect(),
        beta: params.betas().to_vec(),
        gamma: params.gammas().to_vec(),
        kappa: params.kappas().iter().map(MeasureSpec::from_measure).collect(),
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<AffineParams, SpecError> {
    let text = std::fs::read_to_string(path)?;
    let spec: ProcessSpec = serde_json::from_str(&text)?;
    params_from_spec(spec)
}

pub fn save_spec(params: &AffineParams, path: impl AsRef<Path>) -> Result<(), SpecError> {
    let spec = params_to_spec(params);
    let text = serde_json::to_string_pretty(&spec)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRAC_SERIES: &str = r#"{
        "m": 1, "n": 0,
        "alpha": [[0.0], [0.0]],
        "beta": [[0.0], [1.6449340668482264]],
        "gamma": [0.0, 0.0],
        "kappa": [null, {"kind":"series","point_exprs":["n"],"weight_expr":"1/n^2","tail":{"c":1.0,"p":2.0},"tol":1e-10}]
    }"#;

    #[test]
    fn parses_series_spec() {
        let spec: ProcessSpec = serde_json::from_str(DIRAC_SERIES).unwrap();
        let p = params_from_spec(spec).unwrap();
        assert_eq!(p.m(), 1);
        assert_eq!(p.n(), 0);
        assert!(p.kappa(0).is_zero());
        match p.kappa(1) {
            JumpMeasure::SeriesAtomic { weight_expr, .. } => {
                assert_eq!(weight_expr.src(), "1/n^2");
            }
            other => panic!("wrong kind {other:?}"),
        }
    }

    #[test]
    fn empty_kappa_means_zero_measures() {
        let text = r#"{"m":0,"n":1,"alpha":[[0.25],[0.0]],"beta":[[0.0],[0.0]],"gamma":[0.0,0.0],"kappa":[]}"#;
        let spec: ProcessSpec = serde_json::from_str(text).unwrap();
        let p = params_from_spec(spec).unwrap();
        assert!(p.kappa(0).is_zero() && p.kappa(1).is_zero());
    }

    #[test]
    fn round_trip_preserves_expressions_verbatim() {
        let spec: ProcessSpec = serde_json::from_str(DIRAC_SERIES).unwrap();
        let p = params_from_spec(spec).unwrap();
        let back = params_to_spec(&p);
        let json = serde_json::to_string(&back).unwrap();
        assert!(json.contains("\"1/n^2\""), "{json}");
        let p2 = params_from_spec(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn dimension_mismatch_names_the_field() {
        let text = r#"{"m":1,"n":1,"alpha":[[0.0],[0.0],[0.0]],"beta":[[0,0],[0,0],[0,0]],"gamma":[0,0,0],"kappa":[]}"#;
        let spec: ProcessSpec = serde_json::from_str(text).unwrap();
        let err = params_from_spec(spec).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("alpha[0]"), "{msg}");
    }

    #[test]
    fn malformed_expression_is_a_descriptive_parse_error() {
        let text = r#"{"m":1,"n":0,"alpha":[[0],[0]],"beta":[[0],[0]],"gamma":[0,0],
            "kappa":[null,{"kind":"series","point_exprs":["n"],"weight_expr":"1//n","tail":{"c":1,"p":2}}]}"#;
        let err = serde_json::from_str::<ProcessSpec>(text).unwrap_err();
        assert!(format!("{err}").contains("unexpected character"), "{err}");
    }

    #[test]
    fn density_domain_null_bound() {
        let text = r#"{"m":1,"n":0,"alpha":[[0],[0]],"beta":[[4],[0]],"gamma":[0,0],
            "kappa":[{"kind":"density","expr":"xi1^(-1.5)","domain":[[0,null]],"tail_zero":-1.5,"tail_inf":-1.5,"tol":1e-8}, null]}"#;
        let spec: ProcessSpec = serde_json::from_str(text).unwrap();
        let p = params_from_spec(spec).unwrap();
        match p.kappa(0) {
            JumpMeasure::Density { domain, .. } => assert_eq!(domain[0], (Some(0.0), None)),
            other => panic!("wrong kind {other:?}"),
        }
    }
}

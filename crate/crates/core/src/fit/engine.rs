//! Multi-start driver around the bounded Levenberg–Marquardt solver.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::lm::{minimize, LmOptions, Problem};

/// One fitted parameter with its standard error (infinite when the local
/// curvature is singular; serialized as null).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedParam {
    pub name: String,
    pub value: f64,
    pub error: f64,
}

/// Outcome of a converged fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: String,
    pub parameters: Vec<FittedParam>,
    /// √(Σ weighted residual²).
    pub residual_norm: f64,
    pub converged: bool,
    pub n_points: usize,
    #[serde(default)]
    pub flags: Vec<String>,
    #[serde(default)]
    pub derived: BTreeMap<String, f64>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FittedParam> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// Value of a parameter; panics on an unknown name.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no parameter `{name}` in {}", self.model_id))
            .value
    }

    pub fn error(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("no parameter `{name}` in {}", self.model_id))
            .error
    }
}

pub(crate) struct Model<'a> {
    pub lower: Vec<f64>,
    pub scale: Vec<f64>,
    pub m: usize,
    pub residuals: &'a (dyn Fn(&[f64], &mut [f64]) -> bool + Sync),
}

pub(crate) struct Best {
    pub x: Vec<f64>,
    pub rss: f64,
    pub errors: Vec<f64>,
}

/// Runs LM from every start in parallel and keeps the lowest residual among
/// converged runs; ties go to the lowest start index.
pub(crate) fn multistart(model: &Model<'_>, starts: &[Vec<f64>]) -> Result<Best> {
    let problem = Problem {
        m: model.m,
        lower: &model.lower,
        scale: &model.scale,
        residuals: model.residuals,
    };
    let opts = LmOptions::default();
    let outcomes: Vec<_> = starts.par_iter().map(|x0| minimize(&problem, x0, &opts)).collect();
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    let mut any = false;
    for (i, out) in outcomes.into_iter().enumerate() {
        let Some(out) = out else { continue };
        any = true;
        if !out.converged || !out.rss.is_finite() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, _, r)| out.rss < *r) {
            best = Some((i, out.x, out.rss));
        }
    }
    let (_, x, rss) = best.ok_or_else(|| {
        Error::NonConvergence(if any {
            format!("no start out of {} converged", starts.len())
        } else {
            "model could not be evaluated at any start".into()
        })
    })?;
    let errors = problem.standard_errors(&x, rss);
    Ok(Best { x, rss, errors })
}

pub(crate) fn to_result(model_id: &str, names: &[&str], best: &Best, n_points: usize) -> FitResult {
    FitResult {
        model_id: model_id.to_string(),
        parameters: names
            .iter()
            .zip(best.x.iter().zip(&best.errors))
            .map(|(n, (v, e))| FittedParam {
                name: n.to_string(),
                value: *v,
                error: *e,
            })
            .collect(),
        residual_norm: best.rss.sqrt(),
        converged: true,
        n_points,
        flags: Vec::new(),
        derived: BTreeMap::new(),
    }
}

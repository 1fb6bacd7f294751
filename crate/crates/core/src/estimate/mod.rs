//! Maximum-likelihood reconstruction over the Cholesky parameters.

mod gradient;
mod likelihood;
mod simplex;

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{factor_to_density, params_to_factor, DensityMatrix, ParamVector};
use crate::povm::{MeasurementRecord, SchemeConfig};

pub use gradient::{projected_lbfgs, AscentOutcome};
pub use likelihood::{gradient_log_likelihood, log_likelihood, Likelihood, PROB_FLOOR};
pub use simplex::{nelder_mead, SimplexOutcome};
use simplex::relative_spread;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Simplex,
    Gradient,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" => Ok(Self::Simplex),
            "gradient" => Ok(Self::Gradient),
            other => Err(Error::InvalidParameter(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialFactor {
    /// `T = I/√M`.
    #[default]
    MaximallyMixed,
    Params(ParamVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Iteration cap per run; `None` means `200·M²`.
    pub max_iter: Option<usize>,
    /// Relative change of `L` that counts as converged.
    pub ftol: f64,
    pub step: f64,
    /// Fresh-simplex restarts from the incumbent; stops early once a restart
    /// no longer moves `L`.
    pub restarts: usize,
    pub kind: OptimizerKind,
    pub initial: InitialFactor,
    pub exec: Exec,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iter: None,
            ftol: 1e-8,
            step: 0.1,
            restarts: 3,
            kind: OptimizerKind::Simplex,
            initial: InitialFactor::MaximallyMixed,
            exec: Exec::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ftol > 0.0 && self.ftol.is_finite()) {
            return Err(Error::InvalidParameter("function tolerance must be positive".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter("simplex step must be positive".into()));
        }
        if self.max_iter == Some(0) {
            return Err(Error::InvalidParameter("max iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, dim: usize) -> usize {
        self.max_iter.unwrap_or(200 * dim * dim)
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub density: DensityMatrix,
    /// Optimal parameters scaled to `Tr(T†T) = 1`.
    pub params: ParamVector,
    /// `L` at `params`.
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `Tr(T†T)` at the optimum before the final rescaling.
    pub raw_trace: f64,
    /// Best `L` after each iteration, across all runs.
    pub history: Vec<f64>,
}

fn unit_trace(t: &[f64]) -> Vec<f64> {
    let s = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    t.iter().map(|x| x / s).collect()
}

pub fn mle_estimate(records: &[MeasurementRecord], cfg: &SchemeConfig, opt: &OptimizerConfig) -> Result<EstimationResult> {
    let lik = Likelihood::new(records, cfg, opt.exec)?;
    estimate_with(&lik, opt)
}

/// [`mle_estimate`] over prepared forms.
pub fn estimate_with(lik: &Likelihood, opt: &OptimizerConfig) -> Result<EstimationResult> {
    opt.validate()?;
    let dim = lik.dim();
    let start = match &opt.initial {
        InitialFactor::MaximallyMixed => ParamVector::maximally_mixed(dim),
        InitialFactor::Params(p) if p.dim() == dim => p.clone(),
        InitialFactor::Params(p) => {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            })
        }
    };
    let cap = opt.iteration_cap(dim);
    let wrap = |x: &[f64]| ParamVector::new(dim, x.to_vec());

    let (x, iterations, converged, history) = match opt.kind {
        OptimizerKind::Simplex => {
            let f = |x: &[f64]| wrap(x).and_then(|p| lik.value(&p)).unwrap_or(f64::NEG_INFINITY);
            let mut incumbent = start.into_vec();
            let mut best = f64::NEG_INFINITY;
            let mut history = Vec::new();
            let mut iterations = 0;
            let mut converged = false;
            // each run gets its own budget; a fresh simplex also rescues a
            // run that degenerated before reaching the cap
            for run in 0..=opt.restarts {
                let x0 = if run == 0 { incumbent.clone() } else { unit_trace(&incumbent) };
                let out = nelder_mead(f, &x0, opt.step, opt.ftol, cap);
                iterations += out.iterations;
                converged = out.converged;
                history.extend_from_slice(&out.history);
                incumbent = out.x;
                log::debug!("simplex run {run}: L = {} after {} iterations", out.value, out.iterations);
                let settled = relative_spread(out.value, best) < opt.ftol;
                best = out.value;
                if converged && settled {
                    break;
                }
            }
            (incumbent, iterations, converged, history)
        }
        OptimizerKind::Gradient => {
            let out = projected_lbfgs(
                |x| lik.value_and_gradient(&wrap(x)?),
                start.as_slice(),
                opt.ftol,
                cap,
            )?;
            (out.x, out.iterations, out.converged, out.history)
        }
    };

    let raw = wrap(&x)?;
    let raw_trace = raw.gram_trace();
    if raw_trace == 0.0 {
        return Err(Error::DegenerateFactor);
    }
    let params = ParamVector::new(dim, unit_trace(raw.as_slice()))?;
    let loglik = lik.value(&params)?;
    if !loglik.is_finite() {
        return Err(Error::NonFinite("log-likelihood"));
    }
    let density = factor_to_density(&params_to_factor(&params))?;
    Ok(EstimationResult {
        density,
        params,
        loglik,
        iterations,
        converged,
        raw_trace,
        history,
    })
}

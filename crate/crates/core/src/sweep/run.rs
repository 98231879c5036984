//! Evaluation of sweep grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{cache_key, Cache};
use super::config::{Observable, PointParams, SweepSpec};
use crate::criticality::{
    a2_order_parameter, a2_order_parameter_exact, chi_prime_order, classify_phase, label_from_boundary,
    order_parameter_analytic, OrderParameterForm, PhaseLabel,
};
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::hamiltonians::{a2_params, anisotropic_params, effective_params};
use crate::spectra::{build_model, converge_in_truncation, GroundStateResult, Model};

/// Everything computed at one grid point. Absent values stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointOutcome {
    pub phase: Option<PhaseLabel>,
    pub n_b_analytic: Option<f64>,
    pub n_b_numeric: Option<f64>,
    /// Rescaled auxiliary occupation; full model only.
    pub n_a_numeric: Option<f64>,
    pub energy: Option<f64>,
    pub gap01: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    /// Axis coordinates in axis order.
    pub coords: Vec<f64>,
    #[serde(flatten)]
    pub outcome: PointOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub records: Vec<PointRecord>,
}

impl SweepResult {
    /// Records that carry a hard failure.
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.error.is_some()).count()
    }

    /// Values of one column, `None` where absent.
    pub fn column(&self, f: impl Fn(&PointOutcome) -> Option<f64>) -> Vec<Option<f64>> {
        self.records.iter().map(|r| f(&r.outcome)).collect()
    }
}

/// Numerical ground-state evaluation of one point.
pub type NumericEvaluator = dyn Fn(&PointParams, &SweepSpec) -> Result<GroundStateResult> + Sync;

fn is_instability(e: &Error) -> bool {
    matches!(
        e,
        Error::SqueezedFrameUnstable { .. } | Error::UnstablePhase { .. } | Error::UnstableRegime { .. }
    )
}

/// Phase label of a point; `Err` only for failures that are not instabilities.
pub fn phase_of(point: &PointParams, tol: f64) -> Result<PhaseLabel> {
    let p = &point.params;
    let (g, j) = (point.g_tilde(), point.j_tilde());
    let frame = match point.model {
        Model::Full | Model::Effective | Model::SqueezedRabi => effective_params(p).map(|_| ()),
        Model::EffectiveA2 { d_tilde } => a2_params(p, d_tilde).map(|_| ()),
        Model::Anisotropic { j1, j2 } => {
            return match anisotropic_params(p, j1, j2) {
                Ok(ap) => Ok(label_from_boundary(ap.chi_prime(p.omega_q()), tol)),
                Err(e) if is_instability(&e) => Ok(PhaseLabel::Unstable),
                Err(e) => Err(e),
            }
        }
    };
    match frame {
        Err(e) if is_instability(&e) => Ok(PhaseLabel::Unstable),
        Err(e) => Err(e),
        Ok(()) => Ok(classify_phase(g, j, point.d_tilde(), tol)),
    }
}

/// Closed-form order parameter of a stable point.
pub fn analytic_order_parameter(point: &PointParams, form: OrderParameterForm) -> Result<f64> {
    let p = &point.params;
    match point.model {
        Model::Full | Model::Effective | Model::SqueezedRabi => order_parameter_analytic(p, form),
        Model::EffectiveA2 { d_tilde } => match form {
            OrderParameterForm::Dimensionless => a2_order_parameter(point.g_tilde(), point.j_tilde(), d_tilde),
            OrderParameterForm::Exact => a2_order_parameter_exact(p, d_tilde),
        },
        Model::Anisotropic { j1, j2 } => Ok(chi_prime_order(anisotropic_params(p, j1, j2)?.chi_prime(p.omega_q()))),
    }
}

/// Default numerics: escalate through the configured truncation schedule.
pub fn default_numerics(point: &PointParams, spec: &SweepSpec) -> Result<GroundStateResult> {
    let opts = SolverOptions {
        tol: spec.numerics.solver_tol,
        ..SolverOptions::default()
    };
    converge_in_truncation(
        |t| build_model(&point.model, &point.params, t),
        &spec.schedule(),
        spec.numerics.observable_tol,
        &opts,
    )
}

fn evaluate(spec: &SweepSpec, point: &PointParams, numerics: &NumericEvaluator) -> PointOutcome {
    let mut out = PointOutcome::default();
    let phase = match phase_of(point, spec.numerics.boundary_tol) {
        Ok(ph) => ph,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.phase = Some(phase);
    if phase == PhaseLabel::Unstable {
        return out;
    }
    if spec.wants(Observable::Analytic) {
        match analytic_order_parameter(point, spec.numerics.analytic_form) {
            Ok(v) => out.n_b_analytic = Some(v),
            // beyond the closed form's domain, though the frame exists
            Err(e) if is_instability(&e) || matches!(e, Error::InvalidParameter(_)) => {}
            Err(e) => out.error = Some(e.to_string()),
        }
    }
    if spec.wants(Observable::Numeric) {
        match numerics(point, spec) {
            Ok(r) => {
                out.n_b_numeric = Some(r.n_b_rescaled);
                out.n_a_numeric = r.n_a_rescaled;
                out.energy = Some(r.energy);
                out.gap01 = Some(r.gap_01);
                out.converged = Some(r.converged);
            }
            Err(Error::NoConvergence { .. }) => out.converged = Some(false),
            Err(e) => out.error = Some(e.to_string()),
        }
    }
    out
}

/// Evaluates every grid point with the default numerics.
pub fn run_sweep(spec: &SweepSpec, workers: usize, cache: Option<&Cache>) -> Result<SweepResult> {
    run_sweep_with(spec, workers, cache, &default_numerics)
}

/// As [`run_sweep`] with a caller-supplied numerical evaluator.
pub fn run_sweep_with(
    spec: &SweepSpec,
    workers: usize,
    cache: Option<&Cache>,
    numerics: &NumericEvaluator,
) -> Result<SweepResult> {
    spec.validate()?;
    let grid = spec.grid();
    // resolve everything up front so that config errors abort before any work
    let points = grid.iter().map(|c| spec.resolve(c)).collect::<Result<Vec<_>>>()?;
    let cache = cache.filter(|_| spec.wants(Observable::Numeric));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<PointOutcome> = pool.install(|| {
        points
            .par_iter()
            .map(|pt| {
                let key = cache.map(|_| cache_key(spec, pt));
                if let (Some(c), Some(k)) = (cache, &key) {
                    if let Some(hit) = c.get(k) {
                        return hit;
                    }
                }
                let out = evaluate(spec, pt, numerics);
                if let (Some(c), Some(k)) = (cache, &key) {
                    if out.error.is_none() {
                        // a failed write only costs a recomputation later
                        let _ = c.put(k, &out);
                    }
                }
                out
            })
            .collect()
    });
    let records = grid
        .into_iter()
        .zip(outcomes)
        .map(|(coords, outcome)| PointRecord { coords, outcome })
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        records,
    })
}

//! Sweep configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criticality::{OrderParameterForm, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::hamiltonians::ModelParams;
use crate::hilbert::Truncation;
use crate::spectra::Model;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Full,
    Effective,
    EffectiveA2,
    Anisotropic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Effective => "effective",
            ModelKind::EffectiveA2 => "effective_a2",
            ModelKind::Anisotropic => "anisotropic",
        }
    }

    /// Parameter names that may be swept for this model.
    pub fn axis_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Full | ModelKind::Effective => &["g_tilde", "j_tilde", "g", "j"],
            ModelKind::EffectiveA2 => &["g_tilde", "j_tilde", "g", "j", "d_tilde"],
            ModelKind::Anisotropic => &["g_tilde", "g", "j1", "j2"],
        }
    }

    pub fn default_schedule(self) -> Vec<[usize; 2]> {
        match self {
            ModelKind::Full => vec![[8, 60], [12, 90], [16, 130]],
            _ => vec![[0, 130], [0, 200], [0, 300]],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl Axis {
    pub fn linear(name: &str, min: f64, max: f64, count: usize) -> Self {
        Self {
            name: name.to_string(),
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => (0..self.count)
                .map(|k| {
                    if k + 1 == self.count {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

/// Parameters held constant over the sweep. Frequencies are in units of `omega_b`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j2: Option<f64>,
}

impl Fixed {
    fn entries(&self) -> BTreeMap<&'static str, f64> {
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("omega_a", self.omega_a),
            ("omega_q", self.omega_q),
            ("g", self.g),
            ("g_tilde", self.g_tilde),
            ("j", self.j),
            ("j_tilde", self.j_tilde),
            ("d_tilde", self.d_tilde),
            ("j1", self.j1),
            ("j2", self.j2),
        ] {
            if let Some(v) = v {
                m.insert(k, v);
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Analytic,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Truncation schedule as `[n_a_max, n_b_max]` pairs; `n_a_max` is ignored
    /// by effective models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<[usize; 2]>>,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_observable_tol")]
    pub observable_tol: f64,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
    #[serde(default = "default_form")]
    pub analytic_form: OrderParameterForm,
}

fn default_solver_tol() -> f64 {
    1e-9
}
fn default_observable_tol() -> f64 {
    1e-3
}
fn default_boundary_tol() -> f64 {
    BOUNDARY_TOL
}
fn default_form() -> OrderParameterForm {
    OrderParameterForm::Dimensionless
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            schedule: None,
            solver_tol: default_solver_tol(),
            observable_tol: default_observable_tol(),
            boundary_tol: default_boundary_tol(),
            analytic_form: default_form(),
        }
    }
}

fn default_observables() -> Vec<Observable> {
    vec![Observable::Analytic]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: ModelKind,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default)]
    pub numerics: Numerics,
    pub axes: Vec<Axis>,
}

/// One resolved grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointParams {
    pub params: ModelParams,
    pub model: Model,
    /// Every named parameter of the point (fixed and swept), by name.
    pub named: BTreeMap<&'static str, f64>,
}

impl PointParams {
    pub fn g_tilde(&self) -> f64 {
        self.params.dimensionless().g_tilde
    }
    pub fn j_tilde(&self) -> f64 {
        self.params.dimensionless().j_tilde
    }
    pub fn d_tilde(&self) -> f64 {
        match self.model {
            Model::EffectiveA2 { d_tilde } => d_tilde,
            _ => 0.0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

const ALL_NAMES: [&str; 9] = ["omega_a", "omega_q", "g", "g_tilde", "j", "j_tilde", "d_tilde", "j1", "j2"];

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn schedule(&self) -> Vec<Truncation> {
        let raw = self.numerics.schedule.clone().unwrap_or_else(|| self.model.default_schedule());
        raw.into_iter()
            .map(|[na, nb]| match self.model {
                ModelKind::Full => Truncation::full(na, nb),
                _ => Truncation::effective(nb),
            })
            .collect()
    }

    pub fn wants(&self, o: Observable) -> bool {
        self.observables.contains(&o)
    }

    pub fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Axis coordinates of every point, row-major (last axis fastest).
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::new()];
        for vals in &values {
            let mut next = Vec::with_capacity(out.len() * vals.len());
            for prefix in &out {
                for v in vals {
                    let mut p = prefix.clone();
                    p.push(*v);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(config_err(format!("expected one or two axes, found {}", self.axes.len())));
        }
        let valid = self.model.axis_names();
        for (i, a) in self.axes.iter().enumerate() {
            if !valid.contains(&a.name.as_str()) {
                return Err(config_err(format!(
                    "axis '{}' is not valid for model '{}'; valid names: {}",
                    a.name,
                    self.model.as_str(),
                    valid.join(", ")
                )));
            }
            if a.count < 2 {
                return Err(config_err(format!("axis '{}' needs count >= 2", a.name)));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return Err(config_err(format!("axis '{}' has an invalid range", a.name)));
            }
            if self.axes[..i].iter().any(|b| b.name == a.name) {
                return Err(config_err(format!("axis '{}' listed twice", a.name)));
            }
        }
        if self.observables.is_empty() {
            return Err(config_err("observables must not be empty"));
        }
        let sched = self.schedule();
        if sched.len() < 2 {
            return Err(config_err("truncation schedule needs at least two entries"));
        }
        for w in sched.windows(2) {
            let grows = w[1].n_b_max() >= w[0].n_b_max()
                && w[1].n_a_max() >= w[0].n_a_max()
                && (w[1].n_b_max() > w[0].n_b_max() || w[1].n_a_max() > w[0].n_a_max());
            if !grows {
                return Err(config_err("truncation schedule must be strictly increasing"));
            }
        }
        if !(self.numerics.solver_tol > 0.0 && self.numerics.observable_tol > 0.0 && self.numerics.boundary_tol >= 0.0) {
            return Err(config_err("tolerances must be positive"));
        }
        let first: Vec<f64> = self.axes.iter().map(|a| a.min).collect();
        self.resolve(&first)?;
        Ok(())
    }

    /// Combines fixed values and axis coordinates into model parameters.
    pub fn resolve(&self, coords: &[f64]) -> Result<PointParams> {
        let mut named = self.fixed.entries();
        for (a, &v) in self.axes.iter().zip(coords) {
            let key = ALL_NAMES
                .iter()
                .find(|n| **n == a.name)
                .ok_or_else(|| config_err(format!("unknown axis '{}'", a.name)))?;
            if named.insert(key, v).is_some() {
                return Err(config_err(format!("'{}' is both fixed and swept", a.name)));
            }
        }
        let get = |k: &str| named.get(k).copied();
        let need = |k: &str| get(k).ok_or_else(|| config_err(format!("missing parameter '{k}'")));
        let one_of = |a: &str, b: &str| -> Result<(Option<f64>, Option<f64>)> {
            match (get(a), get(b)) {
                (Some(_), Some(_)) => Err(config_err(format!("give either '{a}' or '{b}', not both"))),
                pair => Ok(pair),
            }
        };
        let omega_a = need("omega_a")?;
        let omega_q = need("omega_q")?;
        let g = match one_of("g", "g_tilde")? {
            (Some(g), None) => g,
            (None, Some(gt)) => gt * (omega_a * omega_q).sqrt() / 2.0,
            _ => return Err(config_err("missing parameter 'g' or 'g_tilde'")),
        };
        let (model, j) = match self.model {
            ModelKind::Anisotropic => {
                for k in ["j", "j_tilde", "d_tilde"] {
                    if get(k).is_some() {
                        return Err(config_err(format!("'{k}' does not apply to the anisotropic model")));
                    }
                }
                let (j1, j2) = (need("j1")?, need("j2")?);
                (Model::Anisotropic { j1, j2 }, 0.5 * (j1 + j2))
            }
            kind => {
                for k in ["j1", "j2"] {
                    if get(k).is_some() {
                        return Err(config_err(format!("'{k}' only applies to the anisotropic model")));
                    }
                }
                let j = match one_of("j", "j_tilde")? {
                    (Some(j), None) => j,
                    (None, Some(jt)) => jt * omega_a.sqrt() / 2.0,
                    _ => return Err(config_err("missing parameter 'j' or 'j_tilde'")),
                };
                let model = match kind {
                    ModelKind::Full => Model::Full,
                    ModelKind::Effective => Model::Effective,
                    _ => Model::EffectiveA2 {
                        d_tilde: get("d_tilde").unwrap_or(0.0),
                    },
                };
                if kind != ModelKind::EffectiveA2 && get("d_tilde").is_some() {
                    return Err(config_err("'d_tilde' only applies to the effective_a2 model"));
                }
                (model, j)
            }
        };
        let params = ModelParams::in_units_of_omega_b(omega_a, omega_q, g, j).map_err(|e| config_err(e.to_string()))?;
        Ok(PointParams { params, model, named })
    }
}

//! Config-driven Wigner tomography of mode b.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::{format_float, write_table};
use crate::criticality::{np_solution, sp_solution, Branch, PhaseLabel};
use crate::eigen::{lowest_eigenpairs, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonians::{build_effective, effective_params, ModelParams};
use crate::hilbert::{Factor, Truncation, C64};
use crate::sweep::run::phase_of;
use crate::sweep::config::PointParams;
use crate::spectra::Model;
use crate::tomography::{
    cat_from_parts, project_qubit, reduce, squeeze_mode_b, wigner, DensityMatrix, GridSpec, WignerFrame, WignerGrid,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSource {
    /// Ground state of the effective model by exact diagonalization.
    Ed,
    /// Closed-form squeezed vacuum (normal phase) or squeezed cat.
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Trace out the qubit.
    None,
    /// Measure the qubit in the normalized sum of the two branch low-spin
    /// states of the superradiant solution.
    BranchSum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    pub omega_a: f64,
    pub omega_q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_tilde: Option<f64>,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    #[serde(default = "default_source")]
    pub source: StateSource,
    #[serde(default = "default_frame")]
    pub frame: WignerFrame,
    #[serde(default = "default_projection")]
    pub projection: Projection,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    pub grid: GridSpec,
}

fn default_cutoff() -> usize {
    130
}
fn default_source() -> StateSource {
    StateSource::Ed
}
fn default_frame() -> WignerFrame {
    WignerFrame::Lab
}
fn default_projection() -> Projection {
    Projection::None
}
fn default_solver_tol() -> f64 {
    1e-9
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerReport {
    pub phase: PhaseLabel,
    /// Outcome probability of the qubit measurement, when one was made.
    pub projection_probability: Option<f64>,
    pub purity: f64,
    /// Norm lost when undoing the frame squeeze.
    pub squeeze_defect: f64,
    /// `sqrt2 exp(r) |alpha|` from the superradiant solution (frame squeeze
    /// dropped in the squeezed frame).
    pub predicted_lobe_x: Option<f64>,
    /// Peaks of the `x` marginal left and right of the origin.
    pub marginal_peaks: (Option<f64>, Option<f64>),
    pub min: f64,
    pub max: f64,
    pub integral: f64,
    pub grid: WignerGrid,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl WignerSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: WignerSpec = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        spec.params()?;
        if spec.cutoff < 2 || spec.grid.nx == 0 || spec.grid.ny == 0 {
            return Err(config_err("cutoff must be at least 2 and the grid non-empty"));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams> {
        let g = match (self.g, self.g_tilde) {
            (Some(g), None) => g,
            (None, Some(gt)) => gt * (self.omega_a * self.omega_q).sqrt() / 2.0,
            _ => return Err(config_err("give exactly one of 'g' and 'g_tilde'")),
        };
        let j = match (self.j, self.j_tilde) {
            (Some(j), None) => j,
            (None, Some(jt)) => jt * self.omega_a.sqrt() / 2.0,
            _ => return Err(config_err("give exactly one of 'j' and 'j_tilde'")),
        };
        ModelParams::in_units_of_omega_b(self.omega_a, self.omega_q, g, j).map_err(|e| config_err(e.to_string()))
    }
}

/// Normalized `|down>_+ + |down>_-` of the superradiant solution.
pub fn branch_sum_spinor(p: &ModelParams) -> Result<[C64; 2]> {
    let plus = sp_solution(p, Branch::Plus)?.spin_minus_coeffs;
    let minus = sp_solution(p, Branch::Minus)?.spin_minus_coeffs;
    let s = [plus[0] + minus[0], plus[1] + minus[1]];
    let n = (s[0] * s[0] + s[1] * s[1]).sqrt();
    if n < 1e-12 {
        return Err(Error::VanishingProbability { probability: n * n });
    }
    Ok([C64::new(s[0] / n, 0.0), C64::new(s[1] / n, 0.0)])
}

pub fn run_wigner(spec: &WignerSpec) -> Result<WignerReport> {
    let p = spec.params()?;
    let point = PointParams {
        params: p,
        model: Model::Effective,
        named: Default::default(),
    };
    let phase = phase_of(&point, crate::criticality::BOUNDARY_TOL)?;
    if phase == PhaseLabel::Unstable {
        return Err(Error::WrongPhase {
            requested: PhaseLabel::Normal,
            actual: phase,
        });
    }
    let r = effective_params(&p)?.r;
    let frame_r = match spec.frame {
        WignerFrame::Lab => r,
        WignerFrame::Squeezed => 0.0,
    };
    let trunc = Truncation::effective(spec.cutoff);
    let basis = trunc.basis();
    let (mut psi, mut squeeze_defect) = match spec.source {
        StateSource::Ed => {
            let h = build_effective(&p, &trunc)?;
            let opts = SolverOptions {
                tol: spec.solver_tol,
                ..SolverOptions::default()
            };
            let s = lowest_eigenpairs(&h, 2, &opts)?;
            (s.eigenvectors[0].clone(), 0.0)
        }
        StateSource::Analytic => {
            let cat = match phase {
                PhaseLabel::Superradiant => {
                    let sp = sp_solution(&p, Branch::Plus)?;
                    cat_from_parts(sp.alpha, frame_r, sp.r_sp, sp.spin_minus_coeffs, spec.cutoff)?
                }
                _ => {
                    let np = np_solution(&p)?;
                    cat_from_parts(0.0, frame_r, np.r_np, [0.0, 1.0], spec.cutoff)?
                }
            };
            (cat.state, cat.renormalization_defect)
        }
    };
    if spec.frame == WignerFrame::Squeezed && spec.source == StateSource::Ed {
        let (s, d) = squeeze_mode_b(&psi, &basis, -r)?;
        let n = s.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        psi = s.into_iter().map(|x| x / n).collect();
        squeeze_defect += d;
    }
    let (rho, projection_probability) = match spec.projection {
        Projection::None => (reduce(&psi, &basis, Factor::ModeB)?, None),
        Projection::BranchSum => {
            let spinor = branch_sum_spinor(&p)?;
            let (state, prob, rest) = project_qubit(&psi, &basis, spinor)?;
            (DensityMatrix::pure(rest, &state)?, Some(prob))
        }
    };
    let predicted_lobe_x = match phase {
        PhaseLabel::Superradiant => {
            let sp = sp_solution(&p, Branch::Plus)?;
            Some(std::f64::consts::SQRT_2 * frame_r.exp() * sp.alpha.abs())
        }
        _ => None,
    };
    let grid = wigner(&rho, &spec.grid)?;
    Ok(WignerReport {
        phase,
        projection_probability,
        purity: rho.purity(),
        squeeze_defect,
        predicted_lobe_x,
        marginal_peaks: grid.marginal_peaks(),
        min: grid.min(),
        max: grid.max(),
        integral: grid.integral(),
        grid,
    })
}

/// Long-format `x,y,w` table, `x` fastest.
pub fn wigner_csv(grid: &WignerGrid) -> Result<String> {
    let rows = grid.y_values.iter().enumerate().flat_map(|(iy, &y)| {
        grid.x_values
            .iter()
            .enumerate()
            .map(move |(ix, &x)| vec![format_float(x), format_float(y), format_float(grid.at(ix, iy))])
    });
    write_table(&["x", "y", "w"], rows)
}

/// Scalar summary of a report as JSON, without the grid values.
pub fn wigner_summary_json(report: &WignerReport) -> Result<String> {
    let mut v = serde_json::to_value(report)?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("grid");
        obj.insert("tail_population".into(), report.grid.tail_population.into());
        obj.insert("tail_warning".into(), report.grid.tail_warning.into());
        obj.insert("max_imaginary".into(), report.grid.max_imaginary.into());
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_sum_is_down_for_symmetric_branches() {
        let p = ModelParams::in_units_of_omega_b(40.0, 5.0, 3.4, 3.0).unwrap();
        let s = branch_sum_spinor(&p).unwrap();
        assert!(s[0].norm() < 1e-12 && (s[1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip_and_rejection() {
        let text = r#"
omega_a = 40.0
omega_q = 5.0
g = 2.0
j = 3.0
[grid]
x_min = -3.0
x_max = 3.0
nx = 5
y_min = -3.0
y_max = 3.0
ny = 5
"#;
        let spec = WignerSpec::from_toml_str(text).unwrap();
        assert_eq!(WignerSpec::from_toml_str(&spec.to_toml_string().unwrap()).unwrap(), spec);
        assert!(WignerSpec::from_toml_str(&text.replace("g = 2.0", "g = 2.0\ng_tilde = 0.1")).is_err());
        assert!(WignerSpec::from_toml_str(&text.replace("ny = 5", "ny = 5\nnz = 1")).is_err());
    }

    #[test]
    fn small_normal_phase_run() {
        let spec = WignerSpec {
            omega_a: 40.0,
            omega_q: 5.0,
            g: Some(1.0),
            g_tilde: None,
            j: Some(1.0),
            j_tilde: None,
            cutoff: 30,
            source: StateSource::Ed,
            frame: WignerFrame::Lab,
            projection: Projection::None,
            solver_tol: 1e-9,
            grid: GridSpec::square(4.0, 21),
        };
        let rep = run_wigner(&spec).unwrap();
        assert_eq!(rep.phase, PhaseLabel::Normal);
        assert!(rep.purity > 0.99);
        assert!(rep.min > -1e-6);
        assert!((rep.integral - 1.0).abs() < 0.02);
        let csv = wigner_csv(&rep.grid).unwrap();
        assert_eq!(csv.lines().count(), 1 + 21 * 21);
        let mut sq = spec.clone();
        sq.frame = WignerFrame::Squeezed;
        sq.source = StateSource::Analytic;
        let rep2 = run_wigner(&sq).unwrap();
        assert!(rep2.max > 0.3);
    }
}

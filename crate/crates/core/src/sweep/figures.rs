//! One-command reproduction targets. Each writes its data, the preset that
//! produced it, and a plotting-script stub.

use std::path::{Path, PathBuf};

use super::cache::Cache;
use super::config::{Axis, Fixed, ModelKind, Numerics, Observable, SweepSpec};
use super::output::{format_float, render, write_table, Format};
use super::run::run_sweep;
use super::wigner::{run_wigner, wigner_csv, wigner_summary_json, Projection, StateSource, WignerSpec};
use crate::criticality::{critical_coupling_dimensionless, OrderParameterForm};
use crate::error::{Error, Result};
use crate::hamiltonians::{anisotropic_params, ModelParams};
use crate::tomography::{GridSpec, WignerFrame};

pub const FIGURES: [&str; 12] = [
    "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b", "fig7", "fig8",
];

/// Frequencies shared by every target, in units of `omega_b`.
pub const OMEGA_A: f64 = 40.0;
pub const OMEGA_Q: f64 = 5.0;

/// Hopping pairs `(j1, j2)` of the anisotropy curves.
pub const ANISOTROPY_PAIRS: [(f64, f64); 3] = [(2.5, 3.5), (3.5, 2.5), (3.0, 3.0)];

/// Coupling of the hopping-ratio map and its `j1 x j2` window.
pub const RATIO_G: f64 = 2.5;
pub const RATIO_RANGE: (f64, f64) = (2.0, 4.0);
pub const RATIO_POINTS: usize = 81;

#[derive(Clone, Debug)]
pub enum FigurePlan {
    /// Labelled sweeps; a single sweep is written as `<name>.<ext>`.
    Sweeps(Vec<(String, SweepSpec)>),
    Wigner(WignerSpec),
    HoppingRatio,
}

#[derive(Clone, Debug)]
pub struct FigureOptions {
    pub workers: usize,
    pub cache: Option<Cache>,
    pub solver_tol: Option<f64>,
    pub format: Format,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            cache: None,
            solver_tol: None,
            format: Format::Csv,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub name: String,
    pub files: Vec<PathBuf>,
    /// Points that carry a hard failure.
    pub failures: usize,
}

fn unknown(name: &str) -> Error {
    Error::UnknownFigure {
        name: name.to_string(),
        valid: FIGURES.join(", "),
    }
}

fn fixed(entries: &[(&str, f64)]) -> Fixed {
    let mut f = Fixed {
        omega_a: Some(OMEGA_A),
        omega_q: Some(OMEGA_Q),
        ..Fixed::default()
    };
    for &(k, v) in entries {
        let slot = match k {
            "g" => &mut f.g,
            "j" => &mut f.j,
            "j_tilde" => &mut f.j_tilde,
            "d_tilde" => &mut f.d_tilde,
            "j1" => &mut f.j1,
            "j2" => &mut f.j2,
            _ => unreachable!("preset key {k}"),
        };
        *slot = Some(v);
    }
    f
}

fn sweep(model: ModelKind, numeric: bool, fixed: Fixed, axes: Vec<Axis>) -> SweepSpec {
    let mut observables = vec![Observable::Analytic];
    if numeric {
        observables.push(Observable::Numeric);
    }
    SweepSpec {
        model,
        observables,
        cache_dir: None,
        fixed,
        numerics: Numerics {
            schedule: Some(model.default_schedule()),
            ..Numerics::default()
        },
        axes,
    }
}

fn wigner_preset(g: f64, projection: Projection) -> WignerSpec {
    WignerSpec {
        omega_a: OMEGA_A,
        omega_q: OMEGA_Q,
        g: Some(g),
        g_tilde: None,
        j: Some(3.0),
        j_tilde: None,
        cutoff: 130,
        source: StateSource::Ed,
        frame: WignerFrame::Lab,
        projection,
        solver_tol: 1e-9,
        grid: GridSpec::square(12.0, 201),
    }
}

/// The preset behind a target.
pub fn figure_plan(name: &str) -> Result<FigurePlan> {
    use ModelKind::*;
    let one = |s: SweepSpec| FigurePlan::Sweeps(vec![(String::new(), s)]);
    Ok(match name {
        "fig2a" => {
            let mut s = sweep(
                Effective,
                false,
                fixed(&[]),
                vec![
                    Axis::linear("j_tilde", 0.005, 0.995, 201),
                    Axis::linear("g_tilde", 0.015, 3.0, 201),
                ],
            );
            s.numerics.analytic_form = OrderParameterForm::Dimensionless;
            one(s)
        }
        "fig2b" => one(sweep(
            Effective,
            true,
            fixed(&[]),
            vec![Axis::linear("j_tilde", 0.01, 0.99, 61), Axis::linear("g_tilde", 0.05, 3.0, 61)],
        )),
        "fig3a" => one(sweep(
            Effective,
            true,
            fixed(&[("j_tilde", 0.95)]),
            vec![Axis::linear("g_tilde", 0.0, 0.65, 66)],
        )),
        "fig3b" => FigurePlan::Sweeps(
            [("full", Full), ("effective", Effective)]
                .into_iter()
                .map(|(label, m)| {
                    let s = sweep(m, true, fixed(&[("j_tilde", 0.95)]), vec![Axis::linear("g_tilde", 0.0, 0.65, 66)]);
                    (label.to_string(), s)
                })
                .collect(),
        ),
        "fig4a" | "fig4b" => {
            let d = if name == "fig4a" { 0.5 } else { 1.0 };
            one(sweep(
                EffectiveA2,
                false,
                fixed(&[("d_tilde", d)]),
                vec![Axis::linear("j_tilde", 0.8, 1.2, 201), Axis::linear("g_tilde", 0.01, 3.0, 201)],
            ))
        }
        "fig5a" => one(sweep(
            EffectiveA2,
            false,
            fixed(&[("j_tilde", 1.03)]),
            vec![Axis::linear("d_tilde", 0.5, 3.0, 201), Axis::linear("g_tilde", 0.01, 1.0, 201)],
        )),
        "fig5b" => one(sweep(
            EffectiveA2,
            true,
            fixed(&[("j_tilde", 1.03), ("d_tilde", 1.5)]),
            vec![Axis::linear("g_tilde", 0.01, 1.0, 100)],
        )),
        "fig6a" => FigurePlan::Wigner(wigner_preset(2.0, Projection::None)),
        "fig6b" => FigurePlan::Wigner(wigner_preset(3.4, Projection::BranchSum)),
        "fig7" => FigurePlan::HoppingRatio,
        "fig8" => FigurePlan::Sweeps(
            ANISOTROPY_PAIRS
                .iter()
                .map(|&(j1, j2)| {
                    let s = sweep(
                        Anisotropic,
                        true,
                        fixed(&[("j1", j1), ("j2", j2)]),
                        vec![Axis::linear("g", 0.0, 5.0, 101)],
                    );
                    (format!("j1_{j1}_j2_{j2}"), s)
                })
                .collect(),
        ),
        _ => return Err(unknown(name)),
    })
}

/// `(j_tilde, g_tilde_c)` along the boundary of the analytic map.
pub fn boundary_table(j_values: &[f64]) -> Result<String> {
    let rows = j_values
        .iter()
        .map(|&j| Ok(vec![format_float(j), format_float(critical_coupling_dimensionless(j)?)]))
        .collect::<Result<Vec<_>>>()?;
    write_table(&["j_tilde", "g_tilde_c"], rows)
}

/// One cell of the hopping-ratio map: `chi_2r / chi_1r`, absent where unstable.
pub fn hopping_ratio(g: f64, j1: f64, j2: f64) -> Result<Option<f64>> {
    let p = ModelParams::in_units_of_omega_b(OMEGA_A, OMEGA_Q, g, 0.5 * (j1 + j2))?;
    match anisotropic_params(&p, j1, j2) {
        Ok(ap) => Ok(Some(ap.chi2r / ap.chi1r)),
        Err(Error::UnstableRegime { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn ratio_table() -> Result<String> {
    let (lo, hi) = RATIO_RANGE;
    let axis = Axis::linear("j", lo, hi, RATIO_POINTS).values();
    let mut rows = Vec::new();
    for &j1 in &axis {
        for &j2 in &axis {
            let cell = hopping_ratio(RATIO_G, j1, j2)?;
            rows.push(vec![
                format_float(j1),
                format_float(j2),
                cell.map(format_float).unwrap_or_default(),
                cell.is_some().to_string(),
            ]);
        }
    }
    write_table(&["j1", "j2", "chi2r_over_chi1r", "stable"], rows)
}

const PLOT_SWEEP: &str = r#"# Plot stub; edit freely.
import csv
import sys
import matplotlib.pyplot as plt

FILES = {files}


def load(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def num(row, key):
    v = row.get(key, "")
    return float(v) if v else float("nan")


fig, ax = plt.subplots()
for label, path in FILES.items():
    rows = load(path)
    axes = [k for k in rows[0] if k not in ("phase", "n_b_analytic", "n_b_numeric", "n_a_numeric", "energy", "gap01", "converged", "error")]
    if len(axes) == 1:
        x = [num(r, axes[0]) for r in rows]
        for col, style in (("n_b_analytic", "-"), ("n_b_numeric", "--")):
            ax.plot(x, [num(r, col) for r in rows], style, label=f"{label} {col}")
        ax.set_xlabel(axes[0])
        ax.set_ylabel("n_b")
        ax.legend()
    else:
        col = "n_b_numeric" if rows[0].get("n_b_numeric") else "n_b_analytic"
        xs = sorted({num(r, axes[1]) for r in rows})
        ys = sorted({num(r, axes[0]) for r in rows})
        z = [[num(r, col) for r in rows[i * len(xs):(i + 1) * len(xs)]] for i in range(len(ys))]
        m = ax.pcolormesh(xs, ys, z, shading="auto")
        fig.colorbar(m, label=col)
        ax.set_xlabel(axes[1])
        ax.set_ylabel(axes[0])
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "{name}.png", dpi=150)
"#;

const PLOT_WIGNER: &str = r#"# Plot stub; edit freely.
import csv
import sys
import matplotlib.pyplot as plt

with open("{data}") as f:
    rows = list(csv.DictReader(f))
xs = sorted({float(r["x"]) for r in rows})
ys = sorted({float(r["y"]) for r in rows})
w = [[float(r["w"]) for r in rows[i * len(xs):(i + 1) * len(xs)]] for i in range(len(ys))]
fig, ax = plt.subplots()
m = ax.contourf(xs, ys, w, levels=60, cmap="RdBu_r")
fig.colorbar(m, label="W")
ax.set_xlabel("x")
ax.set_ylabel("y")
ax.set_aspect("equal")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "{name}.png", dpi=150)
"#;

const PLOT_RATIO: &str = r#"# Plot stub; edit freely.
import csv
import sys
import matplotlib.pyplot as plt

with open("{data}") as f:
    rows = list(csv.DictReader(f))
j = sorted({float(r["j1"]) for r in rows})
z = [[float(r["chi2r_over_chi1r"]) if r["chi2r_over_chi1r"] else float("nan") for r in rows[i * len(j):(i + 1) * len(j)]] for i in range(len(j))]
fig, ax = plt.subplots()
m = ax.pcolormesh(j, j, z, shading="auto")
fig.colorbar(m, label="chi2r / chi1r")
ax.plot(j, j, "r--")
ax.set_xlabel("j2")
ax.set_ylabel("j1")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else "{name}.png", dpi=150)
"#;

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write(path: PathBuf, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, body)?;
    files.push(path);
    Ok(())
}

/// Runs a target and writes its files into `out_dir`.
pub fn run_figure(name: &str, out_dir: &Path, opts: &FigureOptions) -> Result<FigureOutput> {
    let plan = figure_plan(name)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut failures = 0;
    let plot_path = out_dir.join(format!("{name}_plot.py"));
    match plan {
        FigurePlan::Sweeps(list) => {
            let mut data = Vec::new();
            for (label, mut spec) in list {
                if let Some(t) = opts.solver_tol {
                    spec.numerics.solver_tol = t;
                }
                let stem = if label.is_empty() { name.to_string() } else { format!("{name}_{label}") };
                let result = run_sweep(&spec, opts.workers, opts.cache.as_ref())?;
                failures += result.failures();
                let path = out_dir.join(format!("{stem}.{}", opts.format.extension()));
                write(path.clone(), &render(&result, opts.format)?, &mut files)?;
                data.push((if label.is_empty() { name.to_string() } else { label }, file_name(&path)));
                write(out_dir.join(format!("{stem}.toml")), &spec.to_toml_string()?, &mut files)?;
            }
            if name == "fig2a" {
                let j = Axis::linear("j_tilde", 0.005, 0.995, 201).values();
                write(out_dir.join("fig2a_boundary.csv"), &boundary_table(&j)?, &mut files)?;
            }
            let dict = data
                .iter()
                .map(|(l, f)| format!("{l:?}: {f:?}"))
                .collect::<Vec<_>>()
                .join(", ");
            let script = PLOT_SWEEP.replace("{files}", &format!("{{{dict}}}")).replace("{name}", name);
            let script = if opts.format == Format::Json {
                format!("# data was written as JSON; rerun with --format csv for this stub\n{script}")
            } else {
                script
            };
            write(plot_path, &script, &mut files)?;
        }
        FigurePlan::Wigner(mut spec) => {
            if let Some(t) = opts.solver_tol {
                spec.solver_tol = t;
            }
            let report = run_wigner(&spec)?;
            let data = out_dir.join(format!("{name}.csv"));
            write(data.clone(), &wigner_csv(&report.grid)?, &mut files)?;
            write(out_dir.join(format!("{name}_summary.json")), &wigner_summary_json(&report)?, &mut files)?;
            write(out_dir.join(format!("{name}.toml")), &spec.to_toml_string()?, &mut files)?;
            let script = PLOT_WIGNER.replace("{data}", &file_name(&data)).replace("{name}", name);
            write(plot_path, &script, &mut files)?;
        }
        FigurePlan::HoppingRatio => {
            let data = out_dir.join(format!("{name}.csv"));
            write(data.clone(), &ratio_table()?, &mut files)?;
            let preset = format!(
                "g = {}\nomega_a = {}\nomega_q = {}\nj_min = {}\nj_max = {}\npoints = {}\n",
                RATIO_G, OMEGA_A, OMEGA_Q, RATIO_RANGE.0, RATIO_RANGE.1, RATIO_POINTS
            );
            write(out_dir.join(format!("{name}.toml")), &preset, &mut files)?;
            let script = PLOT_RATIO.replace("{data}", &file_name(&data)).replace("{name}", name);
            write(plot_path, &script, &mut files)?;
        }
    }
    Ok(FigureOutput {
        name: name.to_string(),
        files,
        failures,
    })
}

//! Parameter sweeps, caching, output and reproduction targets.

pub mod cache;
pub mod config;
pub mod figures;
pub mod output;
pub mod run;
pub mod wigner;

pub use cache::{cache_key, Cache, CacheStats, CACHE_ENV};
pub use config::{Axis, Fixed, ModelKind, Numerics, Observable, PointParams, Spacing, SweepSpec};
pub use figures::{figure_plan, run_figure, FigureOptions, FigureOutput, FigurePlan, FIGURES};
pub use output::Format;
pub use run::{run_sweep, run_sweep_with, PointOutcome, PointRecord, SweepResult};
pub use wigner::{run_wigner, Projection, StateSource, WignerReport, WignerSpec};

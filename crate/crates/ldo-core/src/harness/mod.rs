//! Experiment orchestration: typed TOML recipes, the figure-generating
//! sweeps, CSV persistence and minimal SVG plots.

pub mod config;
pub mod run;
pub mod svg;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind};
pub use run::{
    run_assumption_probe, run_decide, run_gap_curve, run_laplace_check, run_regret_curve,
    run_sanov_check, DecideOutcome,
};
pub use svg::write_svg_lines;
pub use table::{Cell, ResultTable};

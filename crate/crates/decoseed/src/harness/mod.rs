//! Scenario harness: a line-oriented configuration format, named presets
//! for every model family, and a runner that computes curves, checks them
//! against independent oracle routes, and emits CSV/SVG artifacts plus a
//! hashed manifest.

pub mod config;
pub mod emit;
pub mod presets;
pub mod run;

pub use config::{
    parse_scenario, serialize_scenario, ArakiZurekBlock, CouplingFamily, FreeParticleBlock,
    MeasureFamily, ModelBlock, OracleBlock, OutputBlock, OutputFormat, RhoSpec, ScatteringBlock,
    ScenarioConfig, SingleModeBlock, TimeBlock, VanHoveBlock,
};
pub use presets::{preset, preset_names};
pub use run::{run_scenario, RunArtifacts};

//! File formats: experiment configuration, binary checkpoints, metrics
//! JSONL, trajectory CSV, and SVG plots. All formats are stable and
//! versioned; a full experiment is reproducible from (config, seed) and
//! the files alone.

pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod svg;
pub mod trajectory;

pub use checkpoint::Checkpoint;
pub use config::{load_config, CurriculumConfig, ExperimentConfig, SkillConfig};
pub use metrics::MetricsWriter;
pub use trajectory::{read_snapshot, read_trajectories, write_snapshot, write_trajectories};

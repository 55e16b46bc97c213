//! Seeded, scenario-conditioned paired sub-6 GHz / mm-wave channel datasets.

mod channel;
mod config;
mod dataset;
mod geometry;

pub use channel::{aged_channel, apply_doppler, path_components, rotate_paths, steering_vector, synthesize_channel};
pub use config::{
    AntennaDims, Interval, MacKind, MacProfile, Scenario, ScenarioConfig, ScenarioProfile, PROBE_BEAMS,
    PROBE_SUBCARRIERS, SPEED_OF_LIGHT,
};
pub use dataset::{
    assemble_features, generate_dataset, generate_samples, normalize_dataset, probe_beams, ChannelSample, Dataset,
    GeneratedSample, NormMeta, FEATURE_CHANNELS,
};
pub use geometry::{sample_geometry, sample_geometry_at, sample_seed, Band, Geometry, Kinematics, Path};

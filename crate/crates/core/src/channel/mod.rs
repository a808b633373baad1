//! Geometric mmWave downlink simulation and beam-rate dataset assembly.

mod codebook;
mod dataset;
pub mod io;
mod params;
mod pilot;
mod propagation;
mod rate;

pub use codebook::{dft_codebook, steering_vector, Codebook};
pub use dataset::{build_dataset, build_raw, Dataset, NormMeta, RawDataset, LABEL_CEILING};
pub use params::{Point, ScenarioParams, UserGrid, Wall, SPEED_OF_LIGHT};
pub use pilot::pilot_features;
pub use propagation::{generate_channels, trace_paths, ChannelRealization, Path};
pub use rate::{
    achievable_rate, beam_response, best_beam, downlink_signal, effective_rate_factor,
};

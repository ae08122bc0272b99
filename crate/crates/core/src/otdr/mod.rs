//! Parametric OTDR trace synthesis and preprocessing: labeled traces with
//! faults at controlled SNR, segmentation into fixed-length sequences,
//! normalization, and seeded dataset generation.

pub mod dataset;
pub mod segment;
pub mod trace;

pub use dataset::{generate_dataset, Dataset, DatasetMode, DatasetRecord, GenConfig, Manifest, Split};
pub use segment::{compute_snr, segment_and_normalize, FaultLabel, SequenceSample, SEQUENCE_LEN};
pub use trace::{
    add_noise_for_snr, default_meters_per_sample, synthesize_trace, EventKind, EventSpec,
    FiberSpec, OtdrTrace, NOISE_FLOOR_DROP_DB, SPEED_OF_LIGHT_M_PER_S,
};

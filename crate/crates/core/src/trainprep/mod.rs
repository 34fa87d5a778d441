//! Training-data preparation: weighted-LM masks and synthetic dialogue
//! generation with filtering.

pub mod datagen;
pub mod mask;

pub use self::datagen::{
    dataset_stats, detect_language, filter_instance, generate_instances, synthetic_catalog,
    DatasetStats, Demonstration, FilterReason, GenConfig, GenInstance, InstanceType, Simulators,
    Verdict, MAX_AGENT_STEPS,
};
pub use self::mask::{weight_mask, MaskError, WeightedSample};

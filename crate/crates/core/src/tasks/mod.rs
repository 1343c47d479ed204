//! Probe datasets and the cross-validation plan.

mod dataset;
mod export;
mod folds;
mod substring;

pub use dataset::{
    build_constitution_dataset, build_length_dataset, char_at, Direction, Label, ProbeDataset,
    ProbeExample, TaskKind,
};
pub use export::write_dataset_jsonl;
pub use folds::FoldPlan;
pub use substring::{
    build_substring_dataset, is_substring, SamplingConfig, SubstringFold, SubstringPairs,
};

mod features;
pub use features::TableExamples;

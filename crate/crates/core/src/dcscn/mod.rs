//! Incremental construction of difference-of-Gaussians convolutional
//! networks with a least-squares readout.

mod build;
mod config;
mod kernel;
mod metrics;
mod model;
mod persist;

pub use build::{
    build, candidate_block_score, candidate_score, configure_next_kernel, kernel_block, normal_equation_gap, rmse, solve_readout,
    SCORE_RELATIVE_CUTOFF,
    BuildOutput, BuildState, BuildTrace, CandidateScore, KernelChoice, ReadoutFit, StopReason,
    TraceRecord,
};
pub use config::{BuildConfig, ReadoutFeatures};
pub use kernel::{dog_value, DogKernel};
pub use metrics::{accuracy, confusion_matrix, label_accuracy, param_count, ParamCount};
pub use model::{
    argmax, feature_dim_of, kernel_map, layer_forward, output_dims, summarize_map, InputSpec, LayerSpec,
    LayoutEntry, NetworkModel, Prediction, POOL_WINDOW,
};
pub use persist::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT_VERSION};

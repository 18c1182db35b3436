//! Feature-independence class activation maps and IoU scoring.

mod cam;
mod independence;
mod iou;
mod render;

pub use cam::{
    cam, cam_with_scores, class_scores, iou_csv, iou_dataset, iou_per_sample,
    layer_feature_stack, normalize_map, overlay_channel, CamMap, CamSettings, Overlay, SampleIou,
    ScoreWeighting, DEFAULT_THETA,
};
pub use independence::{channel_matrix, independence_coefficients, mean_scores, IndependenceScores};
pub use iou::iou;
pub use render::{export_heatmap, render_heatmap};

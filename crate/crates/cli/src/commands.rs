use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dcscn::data::{save_image_folder, Dataset};
use dcscn::dcscn::{accuracy, build, load_model, param_count, save_model, BuildTrace, NetworkModel};
use dcscn::interpret::{cam, export_heatmap, iou_csv, iou_per_sample};
use dcscn::prune::{reward_curve_csv, train_pruner, PruneOutcome};
use log::info;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{prepare, raw_dataset, Splits, Streams};

pub const MODEL_FILE: &str = "model.json";
pub const PRUNED_MODEL_FILE: &str = "pruned_model.json";

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> CliResult<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

fn model_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out.join(MODEL_FILE))
}

fn check_model_fits(model: &NetworkModel, ds: &Dataset) -> CliResult<()> {
    let (h, w, c) = ds.image_dims();
    let i = model.input;
    if (i.h, i.w, i.channels) != (h, w, c) {
        return Err(CliError::Config(format!(
            "model expects {}x{}x{} inputs but the dataset has {h}x{w}x{c}",
            i.h, i.w, i.channels
        )));
    }
    Ok(())
}

pub struct SynthReport {
    pub dir: PathBuf,
    pub class_counts: Vec<(String, usize)>,
}

/// Writes the synthetic dataset as an image folder under `out/data`.
pub fn synth(cfg: &RunConfig) -> CliResult<SynthReport> {
    let mut streams = Streams::new(cfg.seed);
    let mut data_cfg = cfg.data.clone();
    data_cfg.dir = None;
    let ds = raw_dataset(&data_cfg, &mut streams.data)?;
    let dir = cfg.out.join("data");
    save_image_folder(&ds, &dir)?;
    let class_counts = ds
        .class_names()
        .iter()
        .cloned()
        .zip(ds.class_counts())
        .collect();
    Ok(SynthReport { dir, class_counts })
}

pub struct TrainReport {
    pub model: NetworkModel,
    pub trace: BuildTrace,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub seconds: f64,
}

/// Builds a model and writes `model.json`, `trace.csv`, `trace_timing.csv`
/// and the effective `config.json`.
pub fn train(cfg: &RunConfig) -> CliResult<TrainReport> {
    let mut streams = Streams::new(cfg.seed);
    let Splits { train, test, .. } = prepare(cfg, &mut streams)?;
    info!(
        "building on {} training samples of {:?}",
        train.len(),
        train.image_dims()
    );
    let start = Instant::now();
    let out = build(&train, &cfg.build, &mut streams.build)?;
    let seconds = start.elapsed().as_secs_f64();
    save_model(&out.model, &out_dir(cfg)?.join(MODEL_FILE))?;
    write(&cfg.out.join("trace.csv"), &out.trace.to_csv())?;
    write(&cfg.out.join("trace_timing.csv"), &out.trace.timing_csv())?;
    write(&cfg.out.join("config.json"), &cfg.to_flat_json())?;
    Ok(TrainReport {
        train_accuracy: accuracy(&out.model, &train)?,
        test_accuracy: accuracy(&out.model, &test)?,
        model: out.model,
        trace: out.trace,
        seconds,
    })
}

pub struct EvalRow {
    pub split: String,
    pub accuracy: f64,
    pub pa_mb: f64,
    pub seconds_per_sample: f64,
}

/// Accuracy and parameter amount per split, written to `eval.csv`; per-sample
/// inference time goes to `eval_timing.csv`.
pub fn eval(cfg: &RunConfig, model: Option<&Path>) -> CliResult<Vec<EvalRow>> {
    let model = load_model(&model_path(cfg, model))?;
    let mut streams = Streams::new(cfg.seed);
    let splits = prepare(cfg, &mut streams)?;
    check_model_fits(&model, &splits.test)?;
    let pa_mb = param_count(&model).megabytes;
    let mut rows = Vec::new();
    for (name, ds) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        let start = Instant::now();
        let acc = accuracy(&model, ds)?;
        rows.push(EvalRow {
            split: name.to_string(),
            accuracy: acc,
            pa_mb,
            seconds_per_sample: start.elapsed().as_secs_f64() / ds.len() as f64,
        });
    }
    let mut csv = String::from("split,accuracy,pa_mb\n");
    let mut timing = String::from("split,inference_s_per_sample\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{}\n", r.split, r.accuracy, r.pa_mb));
        timing.push_str(&format!("{},{}\n", r.split, r.seconds_per_sample));
    }
    write(&cfg.out.join("eval.csv"), &csv)?;
    write(&cfg.out.join("eval_timing.csv"), &timing)?;
    Ok(rows)
}

pub struct ExplainReport {
    pub layer: usize,
    pub images: Vec<PathBuf>,
    /// Mean IoU over annotated test samples, if any.
    pub iou: Option<f64>,
}

/// Resolves a 1-based CAM layer where 0 means the final layer.
pub fn resolve_layer(model: &NetworkModel, layer: usize) -> CliResult<usize> {
    let n = model.layers.len();
    match layer {
        0 if n > 0 => Ok(n),
        l if (1..=n).contains(&l) => Ok(l),
        l => Err(CliError::Config(format!(
            "layer {l} out of range for a {n}-layer model"
        ))),
    }
}

/// Test indices taken round-robin across classes, so a short heatmap export
/// still covers every class.
fn interleave_by_class(test: &Dataset) -> Vec<usize> {
    let mut by_class = vec![Vec::new(); test.num_classes()];
    for (i, s) in test.samples().iter().enumerate() {
        by_class[s.label].push(i);
    }
    let longest = by_class.iter().map(Vec::len).max().unwrap_or(0);
    (0..longest)
        .flat_map(|k| by_class.iter().filter_map(move |c| c.get(k).copied()))
        .collect()
}

/// Heatmap PNGs for `cam.max_images` test samples spread over the classes
/// and per-sample IoU over the annotated test samples (`iou.csv`).
pub fn explain(cfg: &RunConfig, model: Option<&Path>) -> CliResult<ExplainReport> {
    let model = load_model(&model_path(cfg, model))?;
    let layer = resolve_layer(&model, cfg.cam.layer)?;
    let settings = cfg.cam.settings();
    let mut streams = Streams::new(cfg.seed);
    let test = prepare(cfg, &mut streams)?.test;
    check_model_fits(&model, &test)?;
    let dir = cfg.out.join("heatmaps");
    fs::create_dir_all(&dir)?;
    let mut images = Vec::new();
    for i in interleave_by_class(&test).into_iter().take(cfg.cam.max_images) {
        let s = &test.samples()[i];
        let map = cam(&model, &s.image, layer, s.label, &settings)?;
        let path = dir.join(format!("{i:05}_{}.png", test.class_names()[s.label]));
        export_heatmap(&map, &s.image, &path)?;
        images.push(path);
    }
    let annotated: Vec<usize> = (0..test.len())
        .filter(|&i| test.samples()[i].mask.is_some())
        .collect();
    let iou = if annotated.is_empty() {
        None
    } else {
        let rows = iou_per_sample(&model, &test.subset(&annotated)?, layer, &settings)?;
        let rows: Vec<_> = rows
            .into_iter()
            .map(|mut r| {
                r.sample_id = annotated[r.sample_id];
                r
            })
            .collect();
        write(&cfg.out.join("iou.csv"), &iou_csv(&rows))?;
        Some(rows.iter().map(|r| r.iou).sum::<f64>() / rows.len() as f64)
    };
    Ok(ExplainReport { layer, images, iou })
}

/// Runs the pruning agent; writes `pruned_model.json`, `reward_curve.csv` and
/// `prune_summary.csv`.
pub fn prune(cfg: &RunConfig, model: Option<&Path>) -> CliResult<PruneOutcome> {
    let model = load_model(&model_path(cfg, model))?;
    let mut streams = Streams::new(cfg.seed);
    let Splits { train, val, .. } = prepare(cfg, &mut streams)?;
    check_model_fits(&model, &val)?;
    let outcome = train_pruner(
        &model,
        &train,
        &val,
        &cfg.ddpg,
        &cfg.cam.settings(),
        &mut streams.prune,
    )?;
    save_model(&outcome.model, &out_dir(cfg)?.join(PRUNED_MODEL_FILE))?;
    write(&cfg.out.join("reward_curve.csv"), &reward_curve_csv(&outcome.curve))?;
    let mut summary = String::from("model,kernels,reward,acc,iou,pa_mb\n");
    for (name, keep, r) in [
        ("original", model.kernels_per_layer(), &outcome.baseline),
        ("pruned", outcome.best_keep.clone(), &outcome.best),
    ] {
        let kernels: Vec<String> = keep.iter().map(|k| k.to_string()).collect();
        summary.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            kernels.join(" "),
            r.reward,
            r.accuracy,
            r.iou,
            r.pa_mb
        ));
    }
    write(&cfg.out.join("prune_summary.csv"), &summary)?;
    Ok(outcome)
}

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BuildConfig, ReadoutFeatures};
use super::kernel::DogKernel;
use super::model::{
    argmax, kernel_map, output_dims, InputSpec, LayerSpec, NetworkModel,
};
use super::model::summarize_map;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{least_squares, svd, Matrix, RngStream};

/// Directions of a candidate block weaker than this fraction of its leading
/// singular value do not count towards its score. Deep sigmoid maps sit near
/// a constant and keep only a few significant digits of spatial variation;
/// the projection energy is scale-free, so without this floor such noise
/// directions would qualify as fully as real ones.
pub const SCORE_RELATIVE_CUTOFF: f64 = 1e-6;

/// Readout weights with the fit they produce.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutFit {
    pub weights: Matrix,
    pub residual: Matrix,
    pub rmse: f64,
}

/// `O = argmin ‖Y − ΦO‖`, `e = Y − ΦO`, `rmse = ‖e‖_F / √(N·m)`.
pub fn solve_readout(phi: &Matrix, y: &Matrix, ridge: f64) -> Result<ReadoutFit> {
    let weights = least_squares(phi, y, ridge)?;
    let residual = y.sub(&phi.matmul(&weights)?)?;
    let rmse = rmse(&residual);
    Ok(ReadoutFit {
        weights,
        residual,
        rmse,
    })
}

pub fn rmse(residual: &Matrix) -> f64 {
    let n = (residual.rows() * residual.cols()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    residual.frobenius_norm() / n.sqrt()
}

/// `‖Φᵀe‖_F / (‖Φ‖_F·‖Y‖_F)`: zero at an exact least-squares optimum.
pub fn normal_equation_gap(phi: &Matrix, y: &Matrix, residual: &Matrix) -> Result<f64> {
    let g = phi.transpose().matmul(residual)?;
    let denom = phi.frobenius_norm() * y.frobenius_norm();
    Ok(if denom == 0.0 {
        0.0
    } else {
        g.frobenius_norm() / denom
    })
}

/// Per-class convergence scores of one candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub per_class: Vec<f64>,
    pub total: f64,
}

impl CandidateScore {
    pub fn qualifies(&self) -> bool {
        self.total > 0.0
    }
}

/// `σ_q = (e_qᵀh)²/(hᵀh) − (ξ+r)·u_C·e_qᵀe_q`. `None` when `h = 0`.
pub fn candidate_score(e: &Matrix, h: &[f64], xi: f64, r: f64, u_c: f64) -> Option<CandidateScore> {
    assert_eq!(e.rows(), h.len(), "one summary value per sample");
    let hh: f64 = h.iter().map(|v| v * v).sum();
    if !(hh > 0.0) {
        return None;
    }
    let m = e.cols();
    let mut eh = vec![0.0; m];
    let mut ee = vec![0.0; m];
    for (i, &hv) in h.iter().enumerate() {
        for (q, &ev) in e.row(i).iter().enumerate() {
            eh[q] += ev * hv;
            ee[q] += ev * ev;
        }
    }
    let c = (xi + r) * u_c;
    let per_class: Vec<f64> = (0..m).map(|q| eh[q] * eh[q] / hh - c * ee[q]).collect();
    let total = per_class.iter().sum();
    Some(CandidateScore { per_class, total })
}

/// Block form of [`candidate_score`]: `(e_qᵀh)²/(hᵀh)` becomes `‖P_H e_q‖²`,
/// the energy of `e_q` captured by the column span of the candidate's readout
/// block `H` (N × d). A one-column block reduces to the scalar formula.
pub fn candidate_block_score(
    e: &Matrix,
    block: &Matrix,
    xi: f64,
    r: f64,
    u_c: f64,
) -> Result<Option<CandidateScore>> {
    if block.rows() != e.rows() {
        return Err(Error::Shape(format!(
            "block has {} rows, residual has {}",
            block.rows(),
            e.rows()
        )));
    }
    if block.cols() == 1 {
        return Ok(candidate_score(e, &block.column(0), xi, r, u_c));
    }
    if block.data().iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    let dec = svd(block)?;
    let cutoff = SCORE_RELATIVE_CUTOFF * dec.singular_values[0];
    let rank = dec.singular_values.iter().take_while(|&&s| s > cutoff).count();
    let m = e.cols();
    let mut captured = vec![0.0; m];
    for j in 0..rank {
        let mut proj = vec![0.0; m];
        for i in 0..e.rows() {
            let u = dec.u.get(i, j);
            for (p, &ev) in proj.iter_mut().zip(e.row(i)) {
                *p += u * ev;
            }
        }
        for (c, p) in captured.iter_mut().zip(proj) {
            *c += p * p;
        }
    }
    let c = (xi + r) * u_c;
    let per_class: Vec<f64> = (0..m)
        .map(|q| {
            let ee: f64 = (0..e.rows()).map(|i| e.get(i, q) * e.get(i, q)).sum();
            captured[q] - c * ee
        })
        .collect();
    let total = per_class.iter().sum();
    Ok(Some(CandidateScore { per_class, total }))
}

/// Readout block of one kernel over all samples (N × per-kernel length).
pub fn kernel_block(
    inputs: &[Matrix],
    kernel: &DogKernel,
    pool: bool,
    mode: ReadoutFeatures,
) -> Result<Matrix> {
    let mut data = Vec::new();
    for s in inputs {
        data.extend(summarize_map(&kernel_map(s, kernel, pool)?, mode)?);
    }
    let n = inputs.len();
    Matrix::new(n, if n == 0 { 0 } else { data.len() / n }, data)
}

/// Snapshot of the construction state a new kernel is chosen against.
pub struct BuildState<'a> {
    /// Per-sample channel sum of the current layer's input.
    pub inputs: &'a [Matrix],
    pub residual: &'a Matrix,
    pub pool_after: bool,
    /// Kernels already accepted into the current layer.
    pub layer_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelChoice {
    Accepted {
        kernel: DogKernel,
        score: CandidateScore,
        /// Rounds of fresh draws used, starting at 1.
        rounds: usize,
    },
    /// No qualifying candidate; the layer already holds kernels.
    LayerClosed { best_score: Option<f64> },
    /// No qualifying candidate for an empty layer.
    Failed { best_score: Option<f64> },
}

/// Draws rounds of candidates until one passes the gate. Candidates are drawn
/// serially from `rng` and scored in parallel; the first-drawn wins ties.
pub fn configure_next_kernel(
    state: &BuildState<'_>,
    cfg: &BuildConfig,
    rng: &mut RngStream,
) -> Result<KernelChoice> {
    let u_c = cfg.contraction(state.layer_len + 1);
    let mut best_seen: Option<f64> = None;
    for round in 1..=cfg.retry_rounds {
        let candidates = (0..cfg.max_candidates)
            .map(|_| DogKernel::sample(cfg.xi_range, cfg.r_range, cfg.kernel_size, rng))
            .collect::<Result<Vec<_>>>()?;
        let scores = candidates
            .par_iter()
            .map(|k| {
                let block = kernel_block(state.inputs, k, state.pool_after, cfg.readout)?;
                candidate_block_score(state.residual, &block, k.xi, k.r, u_c)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<usize> = None;
        for (i, s) in scores.iter().enumerate() {
            let Some(s) = s else { continue };
            if best_seen.is_none_or(|b| s.total > b) {
                best_seen = Some(s.total);
            }
            if s.qualifies()
                && best.is_none_or(|b| s.total > scores[b].as_ref().map_or(f64::MIN, |x| x.total))
            {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            let score = scores[i].clone().expect("qualified score exists");
            return Ok(KernelChoice::Accepted {
                kernel: candidates[i].clone(),
                score,
                rounds: round,
            });
        }
    }
    Ok(if state.layer_len > 0 {
        KernelChoice::LayerClosed {
            best_score: best_seen,
        }
    } else {
        KernelChoice::Failed {
            best_score: best_seen,
        }
    })
}

/// One accepted kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based layer.
    pub layer: usize,
    /// 1-based kernel index within the layer.
    pub index: usize,
    pub xi: f64,
    pub r: f64,
    pub bias: f64,
    pub score: f64,
    pub rmse: f64,
    pub train_accuracy: f64,
    /// Normal-equation residual of the readout solve after acceptance.
    pub ls_gap: f64,
    pub rounds: usize,
    /// Wall-clock seconds since the build started. Not deterministic.
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    ErrorLimit,
    MaxLayers,
    SpatialCollapse { layer: usize },
    CandidatesExhausted { layer: usize, best_score: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildTrace {
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

impl BuildTrace {
    /// Deterministic CSV of the accepted kernels (timings excluded).
    /// One row per accepted kernel; `kernel_index` counts across layers from 1.
    /// Timing lives in [`BuildTrace::timing_csv`] so this output is reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "kernel_index,layer,layer_index,xi,r,bias,sigma_sum,rmse,train_acc,ls_gap,rounds\n",
        );
        for (i, t) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                i + 1,
                t.layer,
                t.index,
                t.xi,
                t.r,
                t.bias,
                t.score,
                t.rmse,
                t.train_accuracy,
                t.ls_gap,
                t.rounds
            ));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("kernel_index,layer,elapsed_s\n");
        for (i, t) in self.records.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, t.layer, t.elapsed_s));
        }
        out
    }
}

pub struct BuildOutput {
    pub model: NetworkModel,
    pub trace: BuildTrace,
}

fn fitted_accuracy(y: &Matrix, residual: &Matrix, labels: &[usize]) -> f64 {
    let mut correct = 0;
    for (i, &label) in labels.iter().enumerate() {
        let fitted: Vec<f64> = y
            .row(i)
            .iter()
            .zip(residual.row(i))
            .map(|(a, b)| a - b)
            .collect();
        if argmax(&fitted) == label {
            correct += 1;
        }
    }
    correct as f64 / labels.len() as f64
}

/// Grows a network kernel by kernel until the training rmse reaches the error
/// limit or the layer budget runs out.
pub fn build(train: &Dataset, cfg: &BuildConfig, rng: &mut RngStream) -> Result<BuildOutput> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Build("training set is empty".into()));
    }
    let counts = train.class_counts();
    if counts.len() < 2 {
        return Err(Error::Build("training set has a single class".into()));
    }
    if let Some(q) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Build(format!(
            "class {} has no training samples",
            train.class_names()[q]
        )));
    }
    let start = Instant::now();
    let (h0, w0, c0) = train.image_dims();
    let input = InputSpec {
        h: h0,
        w: w0,
        channels: c0,
    };
    let y = train.one_hot();
    let labels = train.labels();
    let n = train.len();

    let mut inputs: Vec<Matrix> = train.samples().iter().map(|s| s.image.channel_sum()).collect();
    let mut phi = Matrix::zeros(n, 0);
    let mut fit = ReadoutFit {
        weights: Matrix::zeros(0, y.cols()),
        residual: y.clone(),
        rmse: rmse(&y),
    };
    let mut layers: Vec<LayerSpec> = Vec::new();
    let mut records = Vec::new();
    let mut stop = StopReason::MaxLayers;

    'layers: for l in 1..=cfg.max_layers {
        if fit.rmse <= cfg.error_limit {
            stop = StopReason::ErrorLimit;
            break;
        }
        let pool = cfg.pools_after(l);
        let (ih, iw) = inputs[0].shape();
        let dims_ok = output_dims(ih, iw, cfg.kernel_size, pool)
            .is_ok_and(|(oh, ow)| oh.min(ow) >= cfg.readout.min_side());
        if !dims_ok {
            if layers.is_empty() {
                return Err(Error::Build(format!(
                    "{ih}x{iw} input is too small for a {k}x{k} kernel",
                    k = cfg.kernel_size
                )));
            }
            stop = StopReason::SpatialCollapse { layer: l };
            break;
        }

        let mut layer = LayerSpec {
            kernels: Vec::new(),
            pool_after: pool,
        };
        let mut outputs: Vec<Matrix> = Vec::new();
        while layer.kernels.len() < cfg.max_kernels_per_layer && fit.rmse > cfg.error_limit {
            let state = BuildState {
                inputs: &inputs,
                residual: &fit.residual,
                pool_after: pool,
                layer_len: layer.kernels.len(),
            };
            match configure_next_kernel(&state, cfg, rng)? {
                KernelChoice::Accepted {
                    kernel,
                    score,
                    rounds,
                } => {
                    let maps = inputs
                        .par_iter()
                        .map(|s| kernel_map(s, &kernel, pool))
                        .collect::<Result<Vec<_>>>()?;
                    let mut block = Vec::new();
                    for m in &maps {
                        block.extend(summarize_map(m, cfg.readout)?);
                    }
                    let block = Matrix::new(n, block.len() / n, block)?;
                    phi = phi.append_columns(&block)?;
                    if outputs.is_empty() {
                        outputs = maps.iter().map(|m| m.map(|v| 0.0 + v)).collect();
                    } else {
                        for (acc, m) in outputs.iter_mut().zip(&maps) {
                            for (a, &v) in acc.data_mut().iter_mut().zip(m.data()) {
                                *a += v;
                            }
                        }
                    }
                    fit = solve_readout(&phi, &y, cfg.ridge)?;
                    layer.kernels.push(kernel.clone());
                    records.push(TraceRecord {
                        layer: l,
                        index: layer.kernels.len(),
                        xi: kernel.xi,
                        r: kernel.r,
                        bias: kernel.bias,
                        score: score.total,
                        rmse: fit.rmse,
                        train_accuracy: fitted_accuracy(&y, &fit.residual, &labels),
                        ls_gap: normal_equation_gap(&phi, &y, &fit.residual)?,
                        rounds,
                        elapsed_s: start.elapsed().as_secs_f64(),
                    });
                }
                KernelChoice::LayerClosed { .. } => break,
                KernelChoice::Failed { best_score } => {
                    if layers.is_empty() {
                        return Err(Error::Build(format!(
                            "no candidate kernel passed the gate for layer 1 (best score {})",
                            best_score.map_or("n/a".to_string(), |s| format!("{s:.3e}"))
                        )));
                    }
                    stop = StopReason::CandidatesExhausted {
                        layer: l,
                        best_score,
                    };
                    break 'layers;
                }
            }
        }
        layers.push(layer);
        inputs = outputs;
        if fit.rmse <= cfg.error_limit {
            stop = StopReason::ErrorLimit;
            break;
        }
    }

    let model = NetworkModel::new(
        input,
        train.class_names().to_vec(),
        layers,
        cfg.readout,
        cfg.ridge,
        fit.weights,
    )?;
    Ok(BuildOutput {
        model,
        trace: BuildTrace { records, stop },
    })
}

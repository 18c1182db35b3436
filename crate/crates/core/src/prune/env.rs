use std::collections::BTreeMap;

use super::agent::MIN_ACTION;
use crate::data::Dataset;
use crate::dcscn::{accuracy, param_count, solve_readout, LayerSpec, NetworkModel};
use crate::error::{Error, Result};
use crate::interpret::{
    independence_coefficients, iou_dataset, layer_feature_stack, mean_scores, CamSettings,
};
use crate::numerics::Matrix;

/// Kernel indices of layer `layer` (1-based) sorted by ascending mean
/// independence over the batch; ties go to the lower index.
pub fn rank_kernels(model: &NetworkModel, eval_batch: &Dataset, layer: usize) -> Result<Vec<usize>> {
    use rayon::prelude::*;
    if eval_batch.is_empty() {
        return Err(Error::Argument("ranking batch is empty".into()));
    }
    let scores = eval_batch
        .samples()
        .par_iter()
        .map(|s| independence_coefficients(&layer_feature_stack(model, &s.image, layer)?))
        .collect::<Result<Vec<_>>>()?;
    let fc = mean_scores(&scores).expect("batch is non-empty").coefficients;
    let mut order: Vec<usize> = (0..fc.len()).collect();
    order.sort_by(|&a, &b| fc[a].total_cmp(&fc[b]).then(a.cmp(&b)));
    Ok(order)
}

/// Rankings for every layer of the model.
pub fn rank_all_layers(model: &NetworkModel, eval_batch: &Dataset) -> Result<Vec<Vec<usize>>> {
    (1..=model.layers.len())
        .map(|l| rank_kernels(model, eval_batch, l))
        .collect()
}

/// Kernels kept when `floor(ratio·C)` are pruned, never fewer than one.
pub fn kept_count(kernels: usize, ratio: f64) -> usize {
    let pruned = (ratio * kernels as f64).floor() as usize;
    kernels.saturating_sub(pruned).max(1)
}

fn check_ratios(model: &NetworkModel, ratios: &[f64]) -> Result<()> {
    if ratios.len() != model.layers.len() {
        return Err(Error::Argument(format!(
            "{} ratios for {} layers",
            ratios.len(),
            model.layers.len()
        )));
    }
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Argument(format!("pruning ratio {r} outside [0, 1]")));
    }
    Ok(())
}

/// Keeps the `keep[l]` highest-ranked kernels of each layer (in their original
/// order) and re-solves the readout on `train`.
pub fn prune_to_counts(
    model: &NetworkModel,
    keep: &[usize],
    rankings: &[Vec<usize>],
    train: &Dataset,
) -> Result<NetworkModel> {
    if keep.len() != model.layers.len() || rankings.len() != model.layers.len() {
        return Err(Error::Argument("one keep count and ranking per layer required".into()));
    }
    let mut layers = Vec::with_capacity(model.layers.len());
    for ((layer, &k), rank) in model.layers.iter().zip(keep).zip(rankings) {
        let c = layer.kernels.len();
        if k == 0 || k > c || rank.len() != c {
            return Err(Error::Argument(format!(
                "cannot keep {k} of {c} kernels"
            )));
        }
        let mut kept: Vec<usize> = rank[c - k..].to_vec();
        kept.sort_unstable();
        layers.push(LayerSpec {
            kernels: kept.iter().map(|&i| layer.kernels[i].clone()).collect(),
            pool_after: layer.pool_after,
        });
    }
    let d = crate::dcscn::feature_dim_of(model.input, &layers, model.features)?;
    let mut pruned = NetworkModel::new(
        model.input,
        model.class_names.clone(),
        layers,
        model.features,
        model.ridge,
        Matrix::zeros(d, model.num_classes()),
    )?;
    let phi = pruned.feature_matrix(train)?;
    pruned.readout = solve_readout(&phi, &train.one_hot(), model.ridge)?.weights;
    Ok(pruned)
}

/// Removes the lowest-ranked `floor(ratio·C_l)` kernels per layer, ranking on
/// `train`, and re-solves the readout.
pub fn apply_pruning(model: &NetworkModel, ratios: &[f64], train: &Dataset) -> Result<NetworkModel> {
    check_ratios(model, ratios)?;
    let rankings = rank_all_layers(model, train)?;
    apply_pruning_ranked(model, ratios, &rankings, train)
}

pub fn apply_pruning_ranked(
    model: &NetworkModel,
    ratios: &[f64],
    rankings: &[Vec<usize>],
    train: &Dataset,
) -> Result<NetworkModel> {
    check_ratios(model, ratios)?;
    let keep: Vec<usize> = model
        .layers
        .iter()
        .zip(ratios)
        .map(|(l, &r)| kept_count(l.kernels.len(), r))
        .collect();
    prune_to_counts(model, &keep, rankings, train)
}

/// Terms of the joint reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardBreakdown {
    pub reward: f64,
    pub accuracy: f64,
    pub iou: f64,
    pub pa_mb: f64,
}

/// `R = ACC + IoU − β·PA` on the validation set, IoU taken at the final layer.
pub fn reward(
    model: &NetworkModel,
    val: &Dataset,
    beta: f64,
    cam: &CamSettings,
) -> Result<RewardBreakdown> {
    let missing = val.samples().iter().filter(|s| s.mask.is_none()).count();
    if missing > 0 {
        return Err(Error::Argument(format!(
            "validation set has {missing} samples without masks"
        )));
    }
    let acc = accuracy(model, val)?;
    let iou = iou_dataset(model, val, model.layers.len(), cam)?;
    let pa_mb = param_count(model).megabytes;
    Ok(RewardBreakdown {
        reward: acc + iou - beta * pa_mb,
        accuracy: acc,
        iou,
        pa_mb,
    })
}

/// Pruning environment with rankings fixed on the unpruned model and
/// rewards memoised by keep-count vector.
pub struct PruningEnv<'a> {
    pub model: &'a NetworkModel,
    pub train: &'a Dataset,
    pub val: &'a Dataset,
    pub rankings: Vec<Vec<usize>>,
    pub beta: f64,
    pub cam: CamSettings,
    cache: BTreeMap<Vec<usize>, RewardBreakdown>,
}

impl<'a> PruningEnv<'a> {
    pub fn new(
        model: &'a NetworkModel,
        train: &'a Dataset,
        val: &'a Dataset,
        beta: f64,
        cam: CamSettings,
    ) -> Result<Self> {
        if model.layers.is_empty() {
            return Err(Error::Argument("model has no layers to prune".into()));
        }
        Ok(Self {
            rankings: rank_all_layers(model, train)?,
            model,
            train,
            val,
            beta,
            cam,
            cache: BTreeMap::new(),
        })
    }

    pub fn kernel_counts(&self) -> Vec<usize> {
        self.model.kernels_per_layer()
    }

    pub fn keep_for(&self, ratios: &[f64]) -> Vec<usize> {
        self.kernel_counts()
            .iter()
            .zip(ratios)
            .map(|(&c, &r)| kept_count(c, r))
            .collect()
    }

    pub fn pruned_model(&self, keep: &[usize]) -> Result<NetworkModel> {
        prune_to_counts(self.model, keep, &self.rankings, self.train)
    }

    pub fn evaluate(&mut self, keep: &[usize]) -> Result<RewardBreakdown> {
        if let Some(r) = self.cache.get(keep) {
            return Ok(*r);
        }
        let pruned = self.pruned_model(keep)?;
        let r = reward(&pruned, self.val, self.beta, &self.cam)?;
        self.cache.insert(keep.to_vec(), r);
        Ok(r)
    }

    /// Number of distinct configurations evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.len()
    }

    /// Every keep vector reachable with per-layer ratios in `[0.001, a_max]`.
    pub fn reachable_keeps(&self, a_max: f64) -> Vec<Vec<usize>> {
        let mut all: Vec<Vec<usize>> = vec![Vec::new()];
        for c in self.kernel_counts() {
            let hi = kept_count(c, MIN_ACTION);
            let lo = kept_count(c, a_max);
            let mut next = Vec::new();
            for prefix in &all {
                for k in lo..=hi {
                    let mut v = prefix.clone();
                    v.push(k);
                    next.push(v);
                }
            }
            all = next;
        }
        all
    }

    /// Best reward over all reachable configurations; the first found wins ties.
    pub fn exhaustive_search(&mut self, a_max: f64) -> Result<(Vec<usize>, RewardBreakdown)> {
        let mut best: Option<(Vec<usize>, RewardBreakdown)> = None;
        for keep in self.reachable_keeps(a_max) {
            let r = self.evaluate(&keep)?;
            if best.as_ref().is_none_or(|(_, b)| r.reward > b.reward) {
                best = Some((keep, r));
            }
        }
        Ok(best.expect("at least one configuration"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_one_rule() {
        assert_eq!(kept_count(2, 0.99), 1);
        assert_eq!(kept_count(1, 0.8), 1);
        assert_eq!(kept_count(10, 0.25), 8);
        assert_eq!(kept_count(5, 0.0), 5);
    }
}

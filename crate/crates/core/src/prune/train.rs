use serde::{Deserialize, Serialize};

use super::agent::{actor_act, DdpgAgent, MIN_ACTION};
use super::env::{PruningEnv, RewardBreakdown};
use super::replay::{ReplayPool, Transition};
use super::state::{layer_dims, RawState, StateBounds};
use crate::data::Dataset;
use crate::dcscn::NetworkModel;
use crate::error::{Error, Result};
use crate::interpret::CamSettings;
use crate::numerics::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub replay_capacity: usize,
    pub step_size: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub episodes: usize,
    pub hidden: usize,
    /// Exploration σ at the first episode, decaying linearly to `noise_end`.
    pub noise_start: f64,
    pub noise_end: f64,
    /// Weight of the parameter amount (per MB) in the reward.
    pub beta: f64,
    pub a_max: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            replay_capacity: 2000,
            step_size: 0.005,
            tau: 0.01,
            batch_size: 32,
            episodes: 400,
            hidden: 300,
            noise_start: 0.3,
            noise_end: 0.05,
            beta: 0.01,
            a_max: 0.8,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Argument(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("replay capacity must be at least the (positive) batch size");
        }
        if self.episodes == 0 || self.hidden == 0 {
            return bad("episodes and hidden width must be positive");
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad("step size must be >= 0");
        }
        if !(self.noise_start >= 0.0 && self.noise_end >= 0.0) {
            return bad("exploration noise must be >= 0");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be >= 0");
        }
        if !(self.a_max > MIN_ACTION && self.a_max < 1.0) {
            return bad("a_max must lie in (0.001, 1)");
        }
        Ok(())
    }

    pub fn noise_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 {
            return self.noise_start;
        }
        let f = episode as f64 / (self.episodes - 1) as f64;
        self.noise_start + (self.noise_end - self.noise_start) * f
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub ratios: Vec<f64>,
    pub keep: Vec<usize>,
    pub breakdown: RewardBreakdown,
}

pub struct PruneOutcome {
    pub model: NetworkModel,
    pub best: RewardBreakdown,
    pub best_keep: Vec<usize>,
    pub best_ratios: Vec<f64>,
    /// Reward of the unpruned model (readout re-solved).
    pub baseline: RewardBreakdown,
    pub curve: Vec<EpisodeRecord>,
    pub transitions: usize,
}

pub fn reward_curve_csv(curve: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,reward,acc,iou,pa_mb\n");
    for e in curve {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.episode, e.breakdown.reward, e.breakdown.accuracy, e.breakdown.iou, e.breakdown.pa_mb
        ));
    }
    out
}

/// Runs DDPG over layer-wise pruning ratios and returns the best pruned model.
pub fn train_pruner(
    model: &NetworkModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &DdpgConfig,
    cam: &CamSettings,
    rng: &mut RngStream,
) -> Result<PruneOutcome> {
    cfg.validate()?;
    let mut env = PruningEnv::new(model, train, val, cfg.beta, *cam)?;
    run_agent(&mut env, cfg, rng)
}

/// DDPG loop over an existing environment (shares its reward cache).
pub fn run_agent(env: &mut PruningEnv<'_>, cfg: &DdpgConfig, rng: &mut RngStream) -> Result<PruneOutcome> {
    cfg.validate()?;
    let model = env.model;
    let bounds = StateBounds::from_model(model, cfg.a_max)?;
    let dims = layer_dims(model)?;
    let counts = model.kernels_per_layer();
    let n_layers = counts.len();
    let baseline = env.evaluate(&counts)?;

    let mut agent = DdpgAgent::new(cfg.hidden, cfg.step_size, rng)?;
    let mut pool = ReplayPool::new(cfg.replay_capacity);
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut best: Option<EpisodeRecord> = None;
    let mut transitions = 0;

    for episode in 0..cfg.episodes {
        let sigma = cfg.noise_at(episode);
        let mut states = Vec::with_capacity(n_layers);
        let mut ratios = Vec::with_capacity(n_layers);
        let mut keep = Vec::with_capacity(n_layers);
        let (mut prev_kernels, mut prev_action) = (model.input.channels, 0.0);
        for l in 0..n_layers {
            let s = bounds.normalize(&RawState {
                layer: l + 1,
                kernels: counts[l],
                prev_kernels,
                h: dims[l].0,
                w: dims[l].1,
                prev_action,
            });
            let a = actor_act(&agent.actor, &s, sigma, cfg.a_max, rng);
            let k = super::env::kept_count(counts[l], a);
            states.push(s);
            ratios.push(a);
            keep.push(k);
            prev_kernels = k;
            prev_action = a;
        }
        let breakdown = env.evaluate(&keep)?;
        for l in 0..n_layers {
            let terminal = l + 1 == n_layers;
            pool.push(Transition {
                state: states[l].clone(),
                action: ratios[l],
                reward: if terminal { breakdown.reward } else { 0.0 },
                next_state: states[if terminal { l } else { l + 1 }].clone(),
                terminal,
            });
            transitions += 1;
            if pool.len() >= cfg.batch_size {
                let batch = pool.sample(cfg.batch_size, rng);
                agent.critic_update(&batch, cfg.gamma, cfg.a_max);
                agent.actor_update(&batch, cfg.a_max);
                agent.soft_update(cfg.tau);
            }
        }
        let record = EpisodeRecord {
            episode,
            ratios,
            keep,
            breakdown,
        };
        if best
            .as_ref()
            .is_none_or(|b| record.breakdown.reward > b.breakdown.reward)
        {
            best = Some(record.clone());
        }
        curve.push(record);
    }

    let best = best.expect("at least one episode");
    Ok(PruneOutcome {
        model: env.pruned_model(&best.keep)?,
        best: best.breakdown,
        best_keep: best.keep,
        best_ratios: best.ratios,
        baseline,
        curve,
        transitions,
    })
}

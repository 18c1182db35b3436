//! Layer-wise kernel pruning driven by a DDPG agent.
//!
//! Each episode visits the layers in order, the actor picks a pruning ratio
//! per layer, the least independent kernels are dropped, the readout is
//! re-solved and the episode ends with the joint reward
//! `ACC + IoU − β·PA`.

mod agent;
mod env;
mod mlp;
mod replay;
mod state;
mod train;

pub use agent::{
    actor_act, actor_objective_grad, actor_policy, actor_update, critic_loss_grad, critic_update,
    critic_value, td_targets, DdpgAgent, MIN_ACTION,
};
pub use env::{
    apply_pruning, apply_pruning_ranked, kept_count, prune_to_counts, rank_all_layers,
    rank_kernels, reward, PruningEnv, RewardBreakdown,
};
pub use mlp::{soft_update, Adam, Mlp, MlpCache};
pub use replay::{ReplayPool, Transition};
pub use state::{layer_dims, PruneState, RawState, StateBounds, STATE_DIM};
pub use train::{reward_curve_csv, run_agent, train_pruner, DdpgConfig, EpisodeRecord, PruneOutcome};

use super::mlp::{soft_update, Adam, Mlp};
use super::replay::Transition;
use super::state::{PruneState, STATE_DIM};
use crate::error::Result;
use crate::numerics::{sigmoid, RngStream};

/// Smallest action the actor may emit.
pub const MIN_ACTION: f64 = 0.001;

/// Noise-free policy output `a_max · sigmoid(μ(s))`.
pub fn actor_policy(actor: &Mlp, s: &PruneState, a_max: f64) -> f64 {
    a_max * sigmoid(actor.forward(s.values()))
}

/// Policy output plus `N(0, σ²)` exploration, clamped to `[0.001, a_max]`.
/// No noise is drawn when `σ = 0`.
pub fn actor_act(actor: &Mlp, s: &PruneState, sigma: f64, a_max: f64, rng: &mut RngStream) -> f64 {
    let mut a = actor_policy(actor, s, a_max);
    if sigma > 0.0 {
        a += rng.normal(0.0, sigma);
    }
    a.clamp(MIN_ACTION, a_max)
}

fn critic_input(s: &PruneState, a: f64) -> [f64; STATE_DIM + 1] {
    let mut x = [0.0; STATE_DIM + 1];
    x[..STATE_DIM].copy_from_slice(s.values());
    x[STATE_DIM] = a;
    x
}

pub fn critic_value(critic: &Mlp, s: &PruneState, a: f64) -> f64 {
    critic.forward(&critic_input(s, a))
}

/// TD targets `y = R + γ·Q′(s′, μ′(s′))`, or `R` on terminal transitions.
pub fn td_targets(
    target_actor: &Mlp,
    target_critic: &Mlp,
    batch: &[Transition],
    gamma: f64,
    a_max: f64,
) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.reward
            } else {
                let a = actor_policy(target_actor, &t.next_state, a_max);
                t.reward + gamma * critic_value(target_critic, &t.next_state, a)
            }
        })
        .collect()
}

/// Mean squared TD error and its gradient with respect to the critic.
pub fn critic_loss_grad(critic: &Mlp, batch: &[Transition], targets: &[f64]) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; critic.params().len()];
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(targets) {
        let x = critic_input(&t.state, t.action);
        let (q, cache) = critic.forward_cached(&x);
        loss += (y - q) * (y - q) / n;
        critic.backward(&x, &cache, -2.0 * (y - q) / n, &mut grad);
    }
    (loss, grad)
}

/// `J = mean Q(s, a_max·sigmoid(μ(s)))` and its gradient with respect to the actor.
pub fn actor_objective_grad(
    actor: &Mlp,
    critic: &Mlp,
    states: &[PruneState],
    a_max: f64,
) -> (f64, Vec<f64>) {
    let n = states.len() as f64;
    let mut grad = vec![0.0; actor.params().len()];
    let mut scratch = vec![0.0; critic.params().len()];
    let mut objective = 0.0;
    for s in states {
        let (raw, a_cache) = actor.forward_cached(s.values());
        let sg = sigmoid(raw);
        let a = a_max * sg;
        let x = critic_input(s, a);
        let (q, c_cache) = critic.forward_cached(&x);
        objective += q / n;
        let dq_dx = critic.backward(&x, &c_cache, 1.0, &mut scratch);
        let draw = dq_dx[STATE_DIM] * a_max * sg * (1.0 - sg) / n;
        actor.backward(s.values(), &a_cache, draw, &mut grad);
    }
    (objective, grad)
}

/// Online and target networks with their optimisers.
#[derive(Clone, Debug)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl DdpgAgent {
    pub fn new(hidden: usize, step_size: f64, rng: &mut RngStream) -> Result<Self> {
        let actor = Mlp::new(STATE_DIM, hidden, rng)?;
        let critic = Mlp::new(STATE_DIM + 1, hidden, rng)?;
        Ok(Self {
            actor_opt: Adam::new(actor.params().len(), step_size),
            critic_opt: Adam::new(critic.params().len(), step_size),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
        })
    }

    /// One critic step on the TD loss; returns the loss before the step.
    pub fn critic_update(&mut self, batch: &[Transition], gamma: f64, a_max: f64) -> f64 {
        critic_update(
            &mut self.critic,
            &mut self.critic_opt,
            &self.target_actor,
            &self.target_critic,
            batch,
            gamma,
            a_max,
        )
    }

    /// One ascent step on `J`; returns `J` before the step.
    pub fn actor_update(&mut self, batch: &[Transition], a_max: f64) -> f64 {
        actor_update(&mut self.actor, &mut self.actor_opt, &self.critic, batch, a_max)
    }

    pub fn soft_update(&mut self, tau: f64) {
        soft_update(&mut self.target_actor, &self.actor, tau);
        soft_update(&mut self.target_critic, &self.critic, tau);
    }
}

pub fn critic_update(
    critic: &mut Mlp,
    opt: &mut Adam,
    target_actor: &Mlp,
    target_critic: &Mlp,
    batch: &[Transition],
    gamma: f64,
    a_max: f64,
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let targets = td_targets(target_actor, target_critic, batch, gamma, a_max);
    let (loss, grad) = critic_loss_grad(critic, batch, &targets);
    opt.step(critic.params_mut(), &grad);
    loss
}

pub fn actor_update(
    actor: &mut Mlp,
    opt: &mut Adam,
    critic: &Mlp,
    batch: &[Transition],
    a_max: f64,
) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let states: Vec<PruneState> = batch.iter().map(|t| t.state.clone()).collect();
    let (objective, grad) = actor_objective_grad(actor, critic, &states, a_max);
    let ascent: Vec<f64> = grad.iter().map(|g| -g).collect();
    opt.step(actor.params_mut(), &ascent);
    objective
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn actions_stay_in_range() {
        let mut rng = RngStream::new(3);
        let actor = Mlp::new(STATE_DIM, 8, &mut rng).unwrap();
        let s = PruneState::from_values([0.5; STATE_DIM]);
        for _ in 0..200 {
            let a = actor_act(&actor, &s, 2.0, 0.8, &mut rng);
            assert!((MIN_ACTION..=0.8).contains(&a));
        }
        let a0 = actor_act(&actor, &s, 0.0, 0.8, &mut rng);
        assert_eq!(a0, actor_act(&actor, &s, 0.0, 0.8, &mut rng));
    }
}

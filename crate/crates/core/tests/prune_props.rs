mod common;

use dcscn::interpret::CamSettings;
use dcscn::numerics::RngStream;
use dcscn::prune::{
    actor_objective_grad, actor_policy, actor_update, apply_pruning, critic_loss_grad,
    critic_update, kept_count, rank_kernels, reward, reward_curve_csv,
    run_agent, soft_update, train_pruner, Adam, DdpgConfig, Mlp, PruneState, PruningEnv,
    ReplayPool, Transition, STATE_DIM,
};
use proptest::prelude::*;

fn random_state(rng: &mut RngStream) -> PruneState {
    let mut v = [0.0; STATE_DIM];
    for x in &mut v {
        *x = rng.uniform(0.0, 1.0).unwrap();
    }
    PruneState::from_values(v)
}

fn random_batch(n: usize, terminal: bool, rng: &mut RngStream) -> Vec<Transition> {
    (0..n)
        .map(|_| Transition {
            state: random_state(rng),
            action: rng.uniform(0.0, 0.8).unwrap(),
            reward: rng.uniform(-1.0, 2.0).unwrap(),
            next_state: random_state(rng),
            terminal,
        })
        .collect()
}

fn random_params(len: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..len).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect()
}

/// Central differences of `f` around `params`.
fn finite_diff(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn critic_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(41);
    for _ in 0..50 {
        let params = random_params(Mlp::param_len(STATE_DIM + 1, 5), &mut rng);
        let critic = Mlp::from_params(STATE_DIM + 1, 5, params.clone()).unwrap();
        let batch = random_batch(8, false, &mut rng);
        let targets: Vec<f64> = (0..8).map(|_| rng.uniform(-1.0, 1.0).unwrap()).collect();
        let (_, grad) = critic_loss_grad(&critic, &batch, &targets);
        let fd = finite_diff(&params, |p| {
            let c = Mlp::from_params(STATE_DIM + 1, 5, p.to_vec()).unwrap();
            critic_loss_grad(&c, &batch, &targets).0
        });
        assert!(relative_error(&grad, &fd) < 1e-4);
    }
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = RngStream::new(42);
    for _ in 0..50 {
        let params = random_params(Mlp::param_len(STATE_DIM, 5), &mut rng);
        let actor = Mlp::from_params(STATE_DIM, 5, params.clone()).unwrap();
        let critic = Mlp::from_params(
            STATE_DIM + 1,
            5,
            random_params(Mlp::param_len(STATE_DIM + 1, 5), &mut rng),
        )
        .unwrap();
        let states: Vec<PruneState> = (0..8).map(|_| random_state(&mut rng)).collect();
        let (_, grad) = actor_objective_grad(&actor, &critic, &states, 0.8);
        let fd = finite_diff(&params, |p| {
            let a = Mlp::from_params(STATE_DIM, 5, p.to_vec()).unwrap();
            actor_objective_grad(&a, &critic, &states, 0.8).0
        });
        assert!(relative_error(&grad, &fd) < 1e-4);
    }
}

#[test]
fn soft_update_contracts_exactly() {
    let mut rng = RngStream::new(43);
    for _ in 0..20 {
        let online = Mlp::new(STATE_DIM, 7, &mut rng).unwrap();
        let mut target = Mlp::new(STATE_DIM, 7, &mut rng).unwrap();
        let tau = rng.uniform(0.0, 1.0).unwrap();
        let dist = |t: &Mlp| -> f64 {
            t.params()
                .iter()
                .zip(online.params())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let before = dist(&target);
        soft_update(&mut target, &online, tau);
        assert!((dist(&target) - (1.0 - tau) * before).abs() < 1e-12);
    }
}

#[test]
fn soft_update_endpoints() {
    let mut rng = RngStream::new(44);
    let online = Mlp::new(3, 4, &mut rng).unwrap();
    let original = Mlp::new(3, 4, &mut rng).unwrap();
    let mut t = original.clone();
    soft_update(&mut t, &online, 0.0);
    assert_eq!(t, original);
    soft_update(&mut t, &online, 1.0);
    assert_eq!(t, online);
}

#[test]
fn terminal_loss_with_zero_critic_is_mean_square_reward() {
    let mut rng = RngStream::new(45);
    let batch = random_batch(10, true, &mut rng);
    let critic = Mlp::from_params(STATE_DIM + 1, 4, vec![0.0; Mlp::param_len(STATE_DIM + 1, 4)]).unwrap();
    let targets: Vec<f64> = batch.iter().map(|t| t.reward).collect();
    let (loss, _) = critic_loss_grad(&critic, &batch, &targets);
    let expect = batch.iter().map(|t| t.reward * t.reward).sum::<f64>() / 10.0;
    assert!((loss - expect).abs() < 1e-12);
}

#[test]
fn critic_fits_a_fixed_batch() {
    let mut rng = RngStream::new(46);
    let batch = random_batch(16, true, &mut rng);
    let mut critic = Mlp::new(STATE_DIM + 1, 16, &mut rng).unwrap();
    let target_actor = Mlp::new(STATE_DIM, 16, &mut rng).unwrap();
    let target_critic = critic.clone();
    let mut opt = Adam::new(critic.params().len(), 0.01);
    let first = critic_update(&mut critic, &mut opt, &target_actor, &target_critic, &batch, 0.9, 0.8);
    let mut last = first;
    for _ in 0..100 {
        last = critic_update(&mut critic, &mut opt, &target_actor, &target_critic, &batch, 0.9, 0.8);
    }
    assert!(last < first);
}

#[test]
fn actor_follows_an_increasing_critic() {
    let mut rng = RngStream::new(47);
    // Q(s, a) = tanh(a)
    let input = STATE_DIM + 1;
    let mut params = vec![0.0; Mlp::param_len(input, 1)];
    params[STATE_DIM] = 1.0;
    params[input + 1] = 1.0;
    let critic = Mlp::from_params(input, 1, params).unwrap();
    let mut actor = Mlp::new(STATE_DIM, 8, &mut rng).unwrap();
    let batch = random_batch(8, true, &mut rng);
    let before: Vec<f64> = batch.iter().map(|t| actor_policy(&actor, &t.state, 0.8)).collect();
    let mut opt = Adam::new(actor.params().len(), 0.01);
    for _ in 0..50 {
        actor_update(&mut actor, &mut opt, &critic, &batch, 0.8);
    }
    for (t, b) in batch.iter().zip(before) {
        assert!(actor_policy(&actor, &t.state, 0.8) > b);
    }
}

#[test]
fn keep_rule_examples() {
    assert_eq!(kept_count(2, 0.99), 1);
    assert_eq!(kept_count(4, 0.5), 2);
    assert_eq!(kept_count(7, 0.001), 7);
}

#[test]
fn ranking_orders_duplicates_by_index() {
    let (model, train, _) = common::toy_model(51);
    let mut dup = model.clone();
    let k = dup.layers[0].kernels[0].clone();
    dup.layers[0].kernels = vec![k.clone(), k];
    let d = dcscn::dcscn::feature_dim_of(dup.input, &dup.layers[..1], dup.features).unwrap();
    dup.layers.truncate(1);
    dup.readout = dcscn::numerics::Matrix::zeros(d, dup.num_classes());
    dup.layout = vec![];
    let rebuilt = dcscn::dcscn::NetworkModel::new(
        dup.input,
        dup.class_names.clone(),
        dup.layers.clone(),
        dup.features,
        0.0,
        dup.readout.clone(),
    )
    .unwrap();
    assert_eq!(rank_kernels(&rebuilt, &train, 1).unwrap(), vec![0, 1]);
}

#[test]
fn zero_ratios_keep_the_model() {
    let (model, train, _) = common::toy_model(52);
    let same = apply_pruning(&model, &vec![0.0; model.layers.len()], &train).unwrap();
    assert_eq!(same, model);
}

#[test]
fn heavy_pruning_keeps_one_kernel_per_layer() {
    let (model, train, _) = common::toy_model(53);
    let pruned = apply_pruning(&model, &vec![0.99; model.layers.len()], &train).unwrap();
    assert!(pruned.kernels_per_layer().iter().all(|&c| c == 1));
    let d: usize = pruned.layout.iter().map(|e| e.len).sum();
    assert_eq!(d, pruned.readout.rows());
    assert!(apply_pruning(&model, &[0.5], &train).is_err() || model.layers.len() == 1);
    assert!(apply_pruning(&model, &vec![1.5; model.layers.len()], &train).is_err());
}

#[test]
fn reward_terms_are_consistent() {
    let (model, _, val) = common::toy_model(54);
    let r = reward(&model, &val, 0.0, &CamSettings::default()).unwrap();
    assert!((0.0..=2.0).contains(&r.reward));
    assert_eq!(r.reward, r.accuracy + r.iou);
    let penalised = reward(&model, &val, 0.5, &CamSettings::default()).unwrap();
    assert!((penalised.reward - (r.reward - 0.5 * r.pa_mb)).abs() < 1e-12);
}

fn quick_config(episodes: usize) -> DdpgConfig {
    DdpgConfig {
        episodes,
        hidden: 16,
        batch_size: 4,
        ..DdpgConfig::default()
    }
}

#[test]
fn one_episode_makes_one_transition_per_layer() {
    let (model, train, val) = common::toy_model(55);
    let out = train_pruner(&model, &train, &val, &quick_config(1), &CamSettings::default(), &mut RngStream::new(1)).unwrap();
    assert_eq!(out.transitions, model.layers.len());
    assert_eq!(out.curve.len(), 1);
    assert_eq!(reward_curve_csv(&out.curve).lines().count(), 2);
}

#[test]
fn agent_never_beats_exhaustive_search() {
    let train = common::small_dataset(6, 56);
    let val = common::small_dataset(3, 1056);
    let toy = common::hand_model(&train, &[2, 1], 56);
    assert_eq!(toy.kernels_per_layer(), vec![2, 1]);
    let cfg = quick_config(30);
    let mut env = PruningEnv::new(&toy, &train, &val, cfg.beta, CamSettings::default()).unwrap();
    let out = run_agent(&mut env, &cfg, &mut RngStream::new(2)).unwrap();
    let (_, best) = env.exhaustive_search(cfg.a_max).unwrap();
    assert!(out.best.reward <= best.reward);
    assert!(out.curve.iter().all(|e| e.breakdown.reward <= best.reward));
}

#[test]
fn pruning_run_is_reproducible() {
    let (model, train, val) = common::toy_model(57);
    let cfg = quick_config(6);
    let a = train_pruner(&model, &train, &val, &cfg, &CamSettings::default(), &mut RngStream::new(3)).unwrap();
    let b = train_pruner(&model, &train, &val, &cfg, &CamSettings::default(), &mut RngStream::new(3)).unwrap();
    assert_eq!(reward_curve_csv(&a.curve), reward_curve_csv(&b.curve));
    assert_eq!(a.model, b.model);
}

proptest! {
    #[test]
    fn replay_never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..60) {
        let mut rng = RngStream::new(cap as u64);
        let mut pool = ReplayPool::new(cap);
        for t in random_batch(pushes, true, &mut rng) {
            pool.push(t);
        }
        prop_assert_eq!(pool.len(), pushes.min(cap));
        let expect = if pushes == 0 { 0 } else { 5 };
        prop_assert_eq!(pool.sample(5, &mut rng).len(), expect);
    }
}

use convrl::checks::ARCHITECTURES;
use convrl::ddpg::{Checkpoint, DdpgConfig, PolicyGeometry};
use convrl::conv::KernelSpec;
use convrl::nn::Activation;
use convrl::{DdpgAgent, Mlp, ReplayBuffer, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(n: usize, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

/// Forward pass written out from the layer matrices.
fn reference_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
    let sizes = net.sizes().to_vec();
    let mut h = x.to_vec();
    for l in 0..sizes.len() - 1 {
        let (w, b) = net.layer(l);
        let (ni, no) = (sizes[l], sizes[l + 1]);
        let last = l + 2 == sizes.len();
        h = (0..no)
            .map(|o| {
                let z = b[o] + (0..ni).map(|k| w[o * ni + k] * h[k]).sum::<f64>();
                match (last, net.output_activation()) {
                    (false, _) => z.max(0.0),
                    (true, Activation::Tanh) => net.output_scale() * z.tanh(),
                    (true, _) => net.output_scale() * z,
                }
            })
            .collect();
    }
    h
}

#[test]
fn forward_matches_reference_on_all_architectures() {
    let mut r = rng(3);
    for (name, actor, critic) in ARCHITECTURES {
        for (sizes, out, scale) in [(*actor, Activation::Tanh, 2.5), (*critic, Activation::Identity, 1.0)] {
            let net = Mlp::random(sizes, Activation::Relu, out, scale, 0.5, &mut r).unwrap();
            for _ in 0..5 {
                let x = uniform(sizes[0], &mut r);
                let got = net.forward(&x).unwrap();
                let want = reference_forward(&net, &x);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12, "{name} {sizes:?}");
                }
            }
        }
    }
}

/// Loss `0.5 |y - t|^2` of the batched output against a fixed target pattern.
fn loss_of(y: &[f64]) -> (f64, Vec<f64>) {
    let t: Vec<f64> = (0..y.len()).map(|i| (i as f64 * 0.7).sin()).collect();
    let loss = y.iter().zip(&t).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    (loss, y.iter().zip(&t).map(|(a, b)| a - b).collect())
}

#[test]
fn backprop_matches_finite_differences() {
    let mut r = rng(4);
    let batch = 3;
    let h = 1e-5;
    for (name, actor, critic) in ARCHITECTURES {
        for (sizes, out) in [(*actor, Activation::Tanh), (*critic, Activation::Identity)] {
            let net = Mlp::random(sizes, Activation::Relu, out, 2.0, 0.5, &mut r).unwrap();
            let x = uniform(sizes[0] * batch, &mut r);
            let tape = net.forward_batch(&x, batch).unwrap();
            let analytic = net.backward(&tape, &loss_of(tape.output()).1).params;
            let n = net.params().len();
            let probe_idx: Vec<usize> = if n > 2000 { (0..1500).map(|_| r.gen_range(0..n)).collect() } else { (0..n).collect() };
            let mut worst = 0.0f64;
            for k in probe_idx {
                let mut p = net.params().to_vec();
                p[k] += h;
                let up = Mlp::from_params(sizes, Activation::Relu, out, 2.0, p.clone()).unwrap();
                p[k] -= 2.0 * h;
                let down = Mlp::from_params(sizes, Activation::Relu, out, 2.0, p).unwrap();
                let f = |m: &Mlp| {
                    let y: Vec<f64> = (0..batch)
                        .flat_map(|b| reference_forward(m, &x[b * sizes[0]..(b + 1) * sizes[0]]))
                        .collect();
                    loss_of(&y).0
                };
                let numeric = (f(&up) - f(&down)) / (2.0 * h);
                let scale = analytic[k].abs().max(numeric.abs());
                if scale > 1e-7 {
                    worst = worst.max((analytic[k] - numeric).abs() / scale);
                }
            }
            assert!(worst < 1e-5, "{name} {sizes:?}: relative error {worst:e}");
        }
    }
}

#[test]
fn soft_update_is_convex_combination() {
    let mut r = rng(5);
    let a = Mlp::random(&[3, 4, 2], Activation::Relu, Activation::Tanh, 1.0, 0.5, &mut r).unwrap();
    let b = Mlp::random(&[3, 4, 2], Activation::Relu, Activation::Tanh, 1.0, 0.5, &mut r).unwrap();
    let mut t = b.clone();
    t.soft_update_from(&a, 0.3);
    for ((x, y), z) in a.params().iter().zip(b.params()).zip(t.params()) {
        assert!((z - (0.3 * x + 0.7 * y)).abs() < 1e-15);
    }
    let mut t = b.clone();
    t.soft_update_from(&a, 1.0);
    assert_eq!(t.params(), a.params());
}

fn transition(r: &mut ChaCha8Rng, sd: usize, ad: usize, terminal: bool) -> Transition {
    Transition {
        state: uniform(sd, r),
        action: uniform(ad, r),
        reward: r.gen_range(-2.0..0.0),
        next_state: uniform(sd, r),
        terminal,
    }
}

#[test]
fn buffer_samples_uniformly() {
    let mut buf = ReplayBuffer::new(10);
    let mut r = rng(6);
    for i in 0..25 {
        let mut t = transition(&mut r, 1, 1, false);
        t.reward = i as f64;
        buf.push(t);
    }
    // FIFO eviction keeps the newest ten
    let mut kept: Vec<f64> = buf.iter().map(|t| t.reward).collect();
    kept.sort_by(f64::total_cmp);
    assert_eq!(kept, (15..25).map(|i| i as f64).collect::<Vec<_>>());
    let draws = 100_000;
    let mut counts = [0usize; 10];
    for i in buf.sample_indices(draws, &mut r).unwrap() {
        counts[i] += 1;
    }
    // Pearson statistic over the whole histogram; a per-bin 3 sigma test would trip
    // for a perfect sampler about 3% of the time with ten bins
    let expected = draws as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = 9.0;
    assert!((chi2 - dof).abs() < 3.0 * (2.0 * dof).sqrt(), "chi2 {chi2} for {counts:?}");
    assert!(ReplayBuffer::new(4).sample(1, &mut r).is_err());
}

fn small_config(gamma: f64) -> DdpgConfig {
    DdpgConfig {
        actor_hidden: vec![8],
        critic_hidden: vec![16],
        gamma,
        final_init: 0.3,
        u_max: 2.0,
        ..DdpgConfig::default()
    }
}

#[test]
fn critic_loss_matches_independent_targets() {
    let mut r = rng(7);
    let mut agent = DdpgAgent::new(small_config(0.95), 3, 2, &mut r).unwrap();
    let batch: Vec<Transition> = (0..16).map(|i| transition(&mut r, 3, 2, i % 5 == 0)).collect();
    // move online and target networks apart first
    for _ in 0..5 {
        agent.update(&batch.iter().collect::<Vec<_>>()).unwrap();
    }
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut loss = 0.0;
    for t in &batch {
        let a_next = reference_forward(agent.actor_target(), &t.next_state);
        let q_next = reference_forward(agent.critic_target(), &[t.next_state.clone(), a_next].concat())[0];
        let y = t.reward + if t.terminal { 0.0 } else { 0.95 * q_next };
        let q = reference_forward(agent.critic(), &[t.state.clone(), t.action.clone()].concat())[0];
        loss += (q - y).powi(2);
    }
    loss /= batch.len() as f64;
    let got = agent.critic_loss(&refs).unwrap();
    assert!((got - loss).abs() < 1e-10 * loss.max(1.0), "{got} vs {loss}");
}

#[test]
fn zero_discount_critic_regresses_onto_reward() {
    let mut r = rng(8);
    let mut cfg = small_config(0.0);
    cfg.critic_lr = 3e-3;
    let mut agent = DdpgAgent::new(cfg, 2, 1, &mut r).unwrap();
    let t = Transition { state: vec![0.3, -0.4], action: vec![0.5], reward: -0.7, next_state: vec![0.1, 0.2], terminal: false };
    for _ in 0..3000 {
        agent.update(&[&t]).unwrap();
    }
    // the actor step does not touch the critic, so Q at the stored action is what was fit
    let q = agent.critic().forward(&[0.3, -0.4, 0.5]).unwrap()[0];
    assert!((q + 0.7).abs() < 1e-3, "Q = {q}");
}

#[test]
fn actions_stay_within_bounds() {
    let mut r = rng(9);
    let mut cfg = small_config(0.9);
    cfg.final_init = 3.0;
    let mut agent = DdpgAgent::new(cfg, 4, 3, &mut r).unwrap();
    agent.set_noise(5.0);
    for _ in 0..100_000 {
        let s: Vec<f64> = (0..4).map(|_| r.gen_range(-1e3..1e3)).collect();
        for explore in [false, true] {
            for a in agent.act(&s, explore, &mut r).unwrap() {
                assert!(a.abs() <= 2.0, "action {a}");
            }
        }
    }
}

#[test]
fn exploration_switches() {
    let mut r = rng(10);
    let mut agent = DdpgAgent::new(small_config(0.9), 3, 2, &mut r).unwrap();
    let s = [0.2, -0.1, 0.4];
    let greedy = agent.act(&s, false, &mut rng(1)).unwrap();
    assert_eq!(greedy, agent.act(&s, false, &mut rng(2)).unwrap());
    assert_eq!(greedy, agent.policy(&s).unwrap());
    assert_ne!(greedy, agent.act(&s, true, &mut rng(1)).unwrap());
    agent.set_noise(0.0);
    assert_eq!(greedy, agent.act(&s, true, &mut rng(1)).unwrap());
}

#[test]
fn identical_seeds_give_identical_updates() {
    let run = || {
        let mut r = rng(11);
        let mut agent = DdpgAgent::new(small_config(0.9), 3, 2, &mut r).unwrap();
        let mut buf = ReplayBuffer::new(100);
        for _ in 0..50 {
            buf.push(transition(&mut r, 3, 2, false));
        }
        for _ in 0..20 {
            let batch = buf.sample(8, &mut r).unwrap();
            agent.update(&batch).unwrap();
        }
        agent
    };
    let (a, b) = (run(), run());
    assert_eq!(a.actor().params(), b.actor().params());
    assert_eq!(a.critic_target().params(), b.critic_target().params());
    assert_eq!(a.updates(), 20);
}

#[test]
fn checkpoint_file_round_trip_is_exact() {
    let mut r = rng(12);
    let mut agent = DdpgAgent::new(small_config(0.9), 3, 2, &mut r).unwrap();
    let batch: Vec<Transition> = (0..8).map(|_| transition(&mut r, 3, 2, false)).collect();
    agent.update(&batch.iter().collect::<Vec<_>>()).unwrap();
    let geometry = PolicyGeometry {
        dims: 1,
        components: 1,
        neighborhood: 3,
        delays: 0,
        spacing: 2.75,
        kernel: KernelSpec::gaussian(0.8),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.policy");
    Checkpoint::from_agent(&agent, geometry.clone()).save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded.geometry, geometry);
    let back: DdpgAgent = loaded.to_agent().unwrap();
    assert_eq!(back.actor().params(), agent.actor().params());
    assert_eq!(back.critic().params(), agent.critic().params());
    for _ in 0..10 {
        let s = uniform(3, &mut r);
        assert_eq!(back.policy(&s).unwrap(), agent.policy(&s).unwrap());
    }
}

use convrl::baselines::opposition_sweep;
use convrl::conv::Observations;
use convrl::ddpg::{Checkpoint, DdpgConfig};
use convrl::nn::Activation;
use convrl::pde::{Environment, KsParams};
use convrl::train::{
    evaluate, init_agent, preset, run_episode, run_episode_from, train, train_agent, transfer, Budget, Controller,
    DdpgController, EnvConfig, EpisodeSpec, ExperimentConfig, Sharing, Step, TrainError, TrainSink, ZeroController,
};
use convrl::{DdpgAgent, Experiment, Field, Mlp};

fn quick(name: &str) -> ExperimentConfig {
    let mut cfg = preset(name).unwrap();
    let t = &mut cfg.training;
    t.steps = 30;
    t.eval_steps = 20;
    t.warmup_time = 2.0;
    t.eval_every = 2;
    t.eval_episodes = 1;
    t.warm_fill = 64;
    cfg.seed = 9;
    cfg
}

fn spec(ic_seed: u64, warmup_steps: usize, steps: usize) -> EpisodeSpec {
    EpisodeSpec { ic_seed, warmup_steps, steps, snapshot_every: 0 }
}

/// Records how often the episode loop calls the controller and what it hands over.
#[derive(Default)]
struct Recorder {
    acts: usize,
    observes: usize,
    rewards: Vec<f64>,
}

impl Controller<f64> for Recorder {
    fn act(&mut self, _: &Observations<f64>, _: &[Vec<f64>], agents: &[usize]) -> Result<Vec<f64>, TrainError> {
        self.acts += 1;
        Ok(vec![0.0; agents.len()])
    }

    fn observe(&mut self, step: &Step<'_, f64>, _: &[usize]) -> Result<(), TrainError> {
        self.observes += 1;
        self.rewards.push(step.rewards.global);
        Ok(())
    }
}

fn collector(exp: &Experiment, sharing: Sharing) -> DdpgController<f64> {
    let agent = init_agent(exp, sharing).unwrap();
    // never reaches the fill level, so parameters stay put and the test is fast
    DdpgController::new(agent, sharing, usize::MAX, 1)
}

#[test]
fn buffer_grows_by_actuated_agents_per_step() {
    for name in ["ks-L22", "keller-segel"] {
        let exp = Experiment::new(quick(name)).unwrap();
        let p = exp.actuators.count();
        let mut ctl = collector(&exp, Sharing::Local);
        run_episode(&exp, &mut ctl, spec(1, 5, 7)).unwrap();
        assert_eq!(ctl.buffer.len(), 7 * p, "{name}");
        let t = ctl.buffer.iter().next().unwrap();
        assert_eq!(t.state.len(), exp.state_dim());
        assert_eq!(t.action.len(), 1);
    }
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    assert_eq!(exp.actuators.count(), 8);
}

#[test]
fn global_agent_sees_everything_and_adds_one_transition() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let mut ctl = collector(&exp, Sharing::Global);
    assert_eq!(ctl.agent.state_dim(), exp.sensors.count() * exp.env.components());
    assert_eq!(ctl.agent.action_dim(), exp.actuators.count());
    run_episode(&exp, &mut ctl, spec(1, 5, 7)).unwrap();
    assert_eq!(ctl.buffer.len(), 7);
    let t = ctl.buffer.iter().next().unwrap();
    assert_eq!((t.state.len(), t.action.len()), (8, 8));
}

fn zero_policy_agent(exp: &Experiment) -> DdpgAgent {
    let cfg = exp.config.agent.clone();
    let mut sizes = vec![exp.state_dim()];
    sizes.extend(&cfg.actor_hidden);
    sizes.push(1);
    let actor = Mlp::zeros(&sizes, Activation::Relu, Activation::Tanh, cfg.u_max).unwrap();
    let critic = init_agent(exp, Sharing::Local).unwrap().critic().clone();
    DdpgAgent::from_networks(cfg, actor, critic).unwrap()
}

#[test]
fn zero_policy_reproduces_the_uncontrolled_trajectory() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let (warm, steps) = (10, 40);
    let mut ctl = DdpgController::evaluator(zero_policy_agent(&exp), Sharing::Local);
    let log = run_episode(&exp, &mut ctl, spec(4, warm, steps)).unwrap();
    let zero = Field::zeros(exp.grid(), 1);
    let mut state = exp.env.initial_condition(4);
    for _ in 0..warm + steps {
        state = exp.env.step(&state, &zero).unwrap();
    }
    assert_eq!(log.final_state.as_ref().unwrap().values(), state.values());
    let reference = run_episode(&exp, &mut ZeroController, spec(4, warm, steps)).unwrap();
    assert_eq!(log.rewards(), reference.rewards());
    assert!(log.rows.iter().all(|r| r.action_rms == 0.0));
}

#[test]
fn shifting_the_initial_state_by_one_spacing_keeps_the_rewards() {
    let cfg = quick("ks-L22");
    let exp = Experiment::new(cfg.clone()).unwrap();
    let mut agent_cfg = DdpgConfig { final_init: 0.5, ..cfg.agent.clone() };
    agent_cfg.u_max = 1.0;
    let agent = DdpgAgent::new(agent_cfg, exp.state_dim(), 1, &mut convrl::rng::stream(3, convrl::rng::Stream::Checks))
        .unwrap();
    let ic = exp.env.initial_condition(5);
    let per_cell = 64 / exp.sensors.count() as isize;
    let run = |initial: Field| {
        let mut ctl = DdpgController::evaluator(agent.clone(), Sharing::Local);
        run_episode_from(&exp, &mut ctl, initial, spec(0, 0, 60)).unwrap()
    };
    let base = run(ic.clone());
    assert!(base.rows.iter().any(|r| r.action_rms > 1e-3), "controller must actually act");
    for k in [1, 3] {
        let moved = run(ic.shifted(k * per_cell, 0));
        for (a, b) in base.rewards().iter().zip(moved.rewards()) {
            assert!((a - b).abs() < 1e-8, "shift {k}: {a} vs {b}");
        }
    }
}

#[test]
fn warm_up_is_uncontrolled_and_invisible_to_the_learner() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let mut rec = Recorder::default();
    let mut s = spec(2, 25, 9);
    s.snapshot_every = 1;
    let log = run_episode(&exp, &mut rec, s).unwrap();
    assert_eq!((rec.acts, rec.observes, log.rows.len()), (9, 9, 9));
    assert_eq!(rec.rewards, log.rewards());
    let zero = Field::zeros(exp.grid(), 1);
    let mut state = exp.env.initial_condition(2);
    for _ in 0..25 {
        state = exp.env.step(&state, &zero).unwrap();
    }
    let (t0, first) = &log.snapshots[0];
    assert!((t0 - 25.0 * exp.dt()).abs() < 1e-12);
    assert_eq!(first.values(), state.values());
    let mut ctl = collector(&exp, Sharing::Local);
    run_episode(&exp, &mut ctl, spec(2, 500, 0)).unwrap();
    assert!(ctl.buffer.is_empty());
}

#[test]
fn one_policy_serves_every_agent() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let mut ctl = DdpgController::evaluator(init_agent(&exp, Sharing::Local).unwrap(), Sharing::Local);
    let obs = Observations { rows: 8, cols: 1, data: vec![0.3, -0.2, 0.3, 0.9, -0.2, 0.3, 0.0, 0.9] };
    let views: Vec<Vec<f64>> = obs.data.iter().map(|&v| vec![v]).collect();
    let agents: Vec<usize> = (0..8).collect();
    let a = ctl.act(&obs, &views, &agents).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            if views[i] == views[j] {
                assert_eq!(a[i], a[j]);
            }
        }
        assert_eq!(a[i], ctl.agent.policy(&views[i]).unwrap()[0]);
    }
    assert_ne!(a[0], a[3]);
}

#[test]
fn learning_curve_has_one_row_per_actuated_step() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let mut out = Vec::new();
    let outcome = train(&exp, Sharing::Local, Budget::episodes(3), TrainSink { curve: Some(&mut out), checkpoint_dir: None })
        .unwrap();
    assert_eq!(outcome.episodes_run, 3);
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], convrl::train::CURVE_HEADER);
    assert_eq!(lines.len() - 1, 3 * exp.config.training.steps);
    assert_eq!(outcome.evals.len(), 2);
}

#[test]
fn zero_episodes_leave_the_agent_unchanged() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let init = init_agent(&exp, Sharing::Local).unwrap();
    let outcome = train_agent(&exp, init.clone(), Sharing::Local, Budget::episodes(0), TrainSink::default()).unwrap();
    assert_eq!(outcome.episodes_run, 0);
    assert_eq!(outcome.last.actor().params(), init.actor().params());
    assert_eq!(outcome.last.critic().params(), init.critic().params());
    assert_eq!(outcome.best.actor().params(), init.actor().params());
}

#[test]
fn same_seed_same_run() {
    let run = |seed: u64| {
        let mut cfg = quick("ks-L22");
        cfg.seed = seed;
        let exp = Experiment::new(cfg).unwrap();
        let mut out = Vec::new();
        let o = train(&exp, Sharing::Local, Budget::episodes(4), TrainSink { curve: Some(&mut out), checkpoint_dir: None })
            .unwrap();
        (o.last.actor().params().to_vec(), out)
    };
    let (a, b) = (run(21), run(21));
    assert_eq!(a, b);
    assert_ne!(a.0, run(22).0);
}

#[test]
fn transfer_to_the_training_domain_equals_evaluation() {
    let exp = Experiment::new(quick("ks-L22")).unwrap();
    let outcome = train(&exp, Sharing::Local, Budget::episodes(2), TrainSink::default()).unwrap();
    let ckpt = Checkpoint::from_agent(&outcome.best, exp.geometry());
    let moved = transfer(&ckpt, &exp, 0, 2).unwrap();
    let mut ctl = DdpgController::evaluator(outcome.best.clone(), Sharing::Local);
    let direct = evaluate(&exp, &mut ctl, 0, 2, exp.config.training.eval_steps).unwrap();
    for (a, b) in moved.iter().zip(&direct) {
        assert_eq!(a.rewards(), b.rewards());
        assert_eq!(a.final_state.as_ref().unwrap().values(), b.final_state.as_ref().unwrap().values());
    }
}

#[test]
fn transfer_refuses_a_different_sensor_spacing() {
    let source = Experiment::new(quick("ks-L200")).unwrap();
    let agent = init_agent(&source, Sharing::Local).unwrap();
    let ckpt = Checkpoint::from_agent(&agent, source.geometry());
    let mut cfg = quick("ks-L200");
    cfg.env = EnvConfig::Ks(KsParams::for_length(240.0));
    cfg.sensors.count = 80;
    let target = Experiment::new(cfg).unwrap();
    match transfer(&ckpt, &target, 0, 1) {
        Err(TrainError::Geometry(diff)) => assert!(diff.iter().any(|d| d.contains("spacing")), "{diff:?}"),
        Err(e) => panic!("wrong error {e}"),
        Ok(_) => panic!("mismatched geometry was accepted"),
    }
    // same spacing on a bigger domain is fine
    let mut cfg = quick("ks-L200");
    cfg.env = EnvConfig::Ks(KsParams::for_length(500.0));
    cfg.sensors.count = 200;
    assert!(transfer(&ckpt, &Experiment::new(cfg).unwrap(), 0, 1).is_ok());
}

#[test]
fn opposition_control_tames_the_small_domain() {
    let exp = Experiment::new(preset("ks-L22").unwrap()).unwrap();
    let sweep = opposition_sweep(&exp, &[0.5, 1.0, 2.0, 5.0], 2).unwrap();
    let best = sweep.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    assert!(best < 0.1, "{sweep:?}");
}

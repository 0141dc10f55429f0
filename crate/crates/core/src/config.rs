//! Line-oriented experiment files.
//!
//! ```text
//! # comments run to the end of the line
//! preset = ks-L22        # optional starting point, see `train::PRESETS`
//! seed = 7
//!
//! [sensors]
//! kernel = gaussian
//! sigma = 0.8
//!
//! [agent]
//! critic_hidden = 140    # arrays are comma lists
//! ```
//!
//! Sections: `[env]`, `[sensors]`, `[actuators]`, `[reward]`, `[agent]`, `[training]`, `[output]`.
//! Without a preset the `[env]` section must name a `kind`, which selects the defaults of the
//! matching preset family. Unknown keys, malformed values and invariant violations are reported
//! with their line number.

use std::fmt::Write as _;
use std::path::Path;

use crate::conv::{KernelShape, KernelSpec, Normalization};
use crate::pde::KsParams;
use crate::train::{preset, EnvConfig, Experiment, ExperimentConfig, PRESETS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Line { line, .. } => Some(*line),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Env,
    Sensors,
    Actuators,
    Reward,
    Agent,
    Training,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "env" => Section::Env,
            "sensors" => Section::Sensors,
            "actuators" => Section::Actuators,
            "reward" => Section::Reward,
            "agent" => Section::Agent,
            "training" => Section::Training,
            "output" => Section::Output,
            _ => return None,
        })
    }
}

struct Entry<'a> {
    line: usize,
    section: Section,
    key: &'a str,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::Line { line: self.line, msg: msg.into() }
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        match self.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(format!("{}: expected a finite number, got '{}'", self.key, self.value))),
        }
    }

    fn usize(&self) -> Result<usize, ConfigError> {
        self.value
            .parse::<usize>()
            .map_err(|_| self.err(format!("{}: expected a non-negative integer, got '{}'", self.key, self.value)))
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        self.value
            .parse::<u64>()
            .map_err(|_| self.err(format!("{}: expected a non-negative integer, got '{}'", self.key, self.value)))
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("{} must be positive, got {v}", self.key)))
        }
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        let v = self.f64()?;
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("{} must be non-negative, got {v}", self.key)))
        }
    }

    fn count(&self) -> Result<usize, ConfigError> {
        let v = self.usize()?;
        if v >= 1 {
            Ok(v)
        } else {
            Err(self.err(format!("{} must be at least 1", self.key)))
        }
    }

    fn list<V: std::str::FromStr>(&self) -> Result<Vec<V>, ConfigError> {
        if self.value.trim().is_empty() {
            return Ok(Vec::new());
        }
        self.value
            .split(',')
            .map(|s| s.trim().parse::<V>().map_err(|_| self.err(format!("{}: bad list item '{}'", self.key, s.trim()))))
            .collect()
    }

    fn unknown(&self) -> ConfigError {
        let section = match self.section {
            Section::Top => "top level".to_string(),
            s => format!("[{}]", format!("{s:?}").to_lowercase()),
        };
        self.err(format!("unknown key '{}' in {section}", self.key))
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut section = Section::Top;
    let mut out = Vec::new();
    let mut seen: Vec<(Section, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Line { line, msg: format!("malformed section header '{body}'") })?;
            section = Section::parse(name.trim())
                .ok_or_else(|| ConfigError::Line { line, msg: format!("unknown section [{}]", name.trim()) })?;
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| ConfigError::Line { line, msg: format!("expected 'key = value', got '{body}'") })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Line { line, msg: "empty key".into() });
        }
        if seen.contains(&(section, key)) {
            return Err(ConfigError::Line { line, msg: format!("duplicate key '{key}'") });
        }
        seen.push((section, key));
        out.push(Entry { line, section, key, value });
    }
    Ok(out)
}

/// Kernel under construction; shape parameters may arrive in any order.
struct KernelDraft {
    shape: String,
    sigma: Option<f64>,
    width: Option<f64>,
    weights: Option<Vec<f64>>,
    cell_width: Option<f64>,
    normalization: Normalization,
    line: Option<usize>,
}

impl KernelDraft {
    fn from_spec(k: &KernelSpec) -> Self {
        let mut d = Self {
            shape: String::new(),
            sigma: None,
            width: None,
            weights: None,
            cell_width: None,
            normalization: k.normalization,
            line: None,
        };
        match &k.shape {
            KernelShape::Gaussian { sigma } => {
                d.shape = "gaussian".into();
                d.sigma = Some(*sigma);
            }
            KernelShape::Indicator { width } => {
                d.shape = "indicator".into();
                d.width = Some(*width);
            }
            KernelShape::Dirac => d.shape = "dirac".into(),
            KernelShape::Asymmetric { weights, cell_width } => {
                d.shape = "asymmetric".into();
                d.weights = Some(weights.clone());
                d.cell_width = Some(*cell_width);
            }
        }
        d
    }

    /// Returns `Ok(false)` when the key is not a kernel key.
    fn apply(&mut self, e: &Entry<'_>) -> Result<bool, ConfigError> {
        match e.key {
            "kernel" => {
                if !["gaussian", "indicator", "dirac", "asymmetric"].contains(&e.value) {
                    return Err(e.err(format!(
                        "kernel must be gaussian, indicator, dirac or asymmetric, got '{}'",
                        e.value
                    )));
                }
                self.shape = e.value.to_string();
            }
            "sigma" => self.sigma = Some(e.positive()?),
            "width" => self.width = Some(e.positive()?),
            "cell_width" => self.cell_width = Some(e.positive()?),
            "weights" => {
                let w: Vec<f64> = e.list()?;
                if w.is_empty() || w.iter().any(|v| !v.is_finite()) {
                    return Err(e.err("weights must be a non-empty list of finite numbers"));
                }
                self.weights = Some(w);
            }
            "normalization" => {
                self.normalization = match e.value {
                    "none" => Normalization::None,
                    "unit_integral" => Normalization::UnitIntegral,
                    v => return Err(e.err(format!("normalization must be none or unit_integral, got '{v}'"))),
                }
            }
            _ => return Ok(false),
        }
        self.line = Some(self.line.map_or(e.line, |l| l.max(e.line)));
        Ok(true)
    }

    fn build(&self, what: &str) -> Result<KernelSpec, ConfigError> {
        let line = self.line.unwrap_or(0);
        let missing = |k: &str| ConfigError::Line { line, msg: format!("{what} kernel '{}' needs '{k}'", self.shape) };
        let shape = match self.shape.as_str() {
            "gaussian" => KernelShape::Gaussian { sigma: self.sigma.ok_or_else(|| missing("sigma"))? },
            "indicator" => KernelShape::Indicator { width: self.width.ok_or_else(|| missing("width"))? },
            "dirac" => KernelShape::Dirac,
            _ => KernelShape::Asymmetric {
                weights: self.weights.clone().ok_or_else(|| missing("weights"))?,
                cell_width: self.cell_width.ok_or_else(|| missing("cell_width"))?,
            },
        };
        Ok(KernelSpec { shape, normalization: self.normalization })
    }
}

fn family_default(kind: &str) -> Option<ExperimentConfig> {
    match kind {
        "ks" => preset("ks-L22"),
        "keller_segel" => preset("keller-segel"),
        "vorticity" => preset("turbulence-16"),
        _ => None,
    }
}

/// Parse and validate an experiment file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let entries = tokenize(text)?;
    let preset_entry = entries.iter().find(|e| e.section == Section::Top && e.key == "preset");
    let kind_entry = entries.iter().find(|e| e.section == Section::Env && e.key == "kind");
    let mut cfg = match preset_entry {
        Some(e) => preset(e.value)
            .ok_or_else(|| e.err(format!("unknown preset '{}', expected one of {}", e.value, PRESETS.join(", "))))?,
        None => match kind_entry {
            Some(e) => family_default(e.value)
                .ok_or_else(|| e.err(format!("unknown env kind '{}', expected ks, keller_segel or vorticity", e.value)))?,
            None => return Err(ConfigError::Invalid("config needs a top-level 'preset' or an [env] 'kind'".into())),
        },
    };
    if let (Some(_), Some(k)) = (preset_entry, kind_entry) {
        if k.value != cfg.env.name() {
            cfg.env = family_default(k.value)
                .ok_or_else(|| k.err(format!("unknown env kind '{}', expected ks, keller_segel or vorticity", k.value)))?
                .env;
        }
    }
    if preset_entry.is_none() {
        cfg.name = "custom".into();
    }
    let mut sensor_kernel = KernelDraft::from_spec(&cfg.sensors.kernel);
    let mut actuator_kernel = KernelDraft::from_spec(&cfg.actuators.kernel);
    let mut ks_points_set = false;
    let mut ks_length_set = false;
    for e in &entries {
        match e.section {
            Section::Top => match e.key {
                "preset" => {}
                "name" => cfg.name = e.value.to_string(),
                "seed" => cfg.seed = e.u64()?,
                _ => return Err(e.unknown()),
            },
            Section::Env => {
                if e.key == "kind" {
                    continue;
                }
                apply_env(&mut cfg.env, e, &mut ks_length_set, &mut ks_points_set)?;
            }
            Section::Sensors => {
                if sensor_kernel.apply(e)? {
                    continue;
                }
                let s = &mut cfg.sensors;
                match e.key {
                    "count" => s.count = e.count()?,
                    "neighborhood" => {
                        let v = e.count()?;
                        if v % 2 == 0 {
                            return Err(e.err(format!("neighborhood must be odd, got {v}")));
                        }
                        s.neighborhood = v;
                    }
                    "delays" => s.delays = e.usize()?,
                    "delay_steps" => s.delay_steps = e.usize()?,
                    _ => return Err(e.unknown()),
                }
            }
            Section::Actuators => {
                if actuator_kernel.apply(e)? {
                    continue;
                }
                match e.key {
                    "margin" => cfg.actuators.margin = e.usize()?,
                    "u_max" => cfg.agent.u_max = e.positive()?,
                    _ => return Err(e.unknown()),
                }
            }
            Section::Reward => {
                let r = &mut cfg.reward;
                match e.key {
                    "alpha" => r.alpha = e.non_negative()?,
                    "beta" => r.beta = e.non_negative()?,
                    "target" => r.target = e.f64()?,
                    "component" => r.component = e.usize()?,
                    _ => return Err(e.unknown()),
                }
            }
            Section::Agent => {
                let a = &mut cfg.agent;
                match e.key {
                    "actor_hidden" | "critic_hidden" => {
                        let v: Vec<usize> = e.list()?;
                        if v.contains(&0) {
                            return Err(e.err(format!("{}: layer widths must be positive", e.key)));
                        }
                        if e.key == "actor_hidden" {
                            a.actor_hidden = v;
                        } else {
                            a.critic_hidden = v;
                        }
                    }
                    "actor_lr" => a.actor_lr = e.positive()?,
                    "critic_lr" => a.critic_lr = e.positive()?,
                    "gamma" => {
                        let v = e.f64()?;
                        if !(0.0..=1.0).contains(&v) {
                            return Err(e.err(format!("gamma must lie in [0, 1], got {v}")));
                        }
                        a.gamma = v;
                    }
                    "tau" => {
                        let v = e.f64()?;
                        if !(v > 0.0 && v <= 1.0) {
                            return Err(e.err(format!("tau must lie in (0, 1], got {v}")));
                        }
                        a.tau = v;
                    }
                    "batch_size" => a.batch_size = e.count()?,
                    "buffer_capacity" => a.buffer_capacity = e.count()?,
                    "noise_start" => a.noise_start = e.non_negative()?,
                    "noise_end" => a.noise_end = e.non_negative()?,
                    "final_init" => a.final_init = e.positive()?,
                    "reward_scale" => a.reward_scale = e.positive()?,
                    _ => return Err(e.unknown()),
                }
            }
            Section::Training => {
                let t = &mut cfg.training;
                match e.key {
                    "episodes" => t.episodes = e.usize()?,
                    "steps" => t.steps = e.count()?,
                    "eval_steps" => t.eval_steps = e.count()?,
                    "warmup_time" => t.warmup_time = e.non_negative()?,
                    "eval_every" => t.eval_every = e.usize()?,
                    "eval_episodes" => t.eval_episodes = e.count()?,
                    "warm_fill" => t.warm_fill = e.usize()?,
                    "updates_per_step" => t.updates_per_step = e.usize()?,
                    "terminal_penalty" => t.terminal_penalty = e.f64()?,
                    _ => return Err(e.unknown()),
                }
            }
            Section::Output => {
                let t = &mut cfg.training;
                match e.key {
                    "checkpoint_every" => t.checkpoint_every = e.usize()?,
                    "snapshot_every" => t.snapshot_every = e.usize()?,
                    _ => return Err(e.unknown()),
                }
            }
        }
    }
    if let EnvConfig::Ks(p) = &mut cfg.env {
        if ks_length_set && !ks_points_set {
            p.n_points = KsParams::for_length(p.length).n_points;
        }
    }
    cfg.sensors.kernel = sensor_kernel.build("sensor")?;
    cfg.actuators.kernel = actuator_kernel.build("actuator")?;
    for (k, line) in [(&cfg.sensors.kernel, sensor_kernel.line), (&cfg.actuators.kernel, actuator_kernel.line)] {
        k.validate().map_err(|err| match line {
            Some(line) => ConfigError::Line { line, msg: err.to_string() },
            None => ConfigError::Invalid(err.to_string()),
        })?;
    }
    Experiment::<f64>::new(cfg.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

fn apply_env(env: &mut EnvConfig, e: &Entry<'_>, length_set: &mut bool, points_set: &mut bool) -> Result<(), ConfigError> {
    match env {
        EnvConfig::Ks(p) => match e.key {
            "length" => {
                p.length = e.positive()?;
                *length_set = true;
            }
            "n_points" => {
                p.n_points = e.count()?;
                *points_set = true;
            }
            "mu" => p.mu = e.non_negative()?,
            "dt" => p.dt = e.positive()?,
            "substeps" => p.substeps = e.count()?,
            _ => return Err(e.unknown()),
        },
        EnvConfig::KellerSegel(p) => match e.key {
            "length" => p.length = e.positive()?,
            "n_points" => p.n_points = e.count()?,
            "diffusion" => p.diffusion = e.positive()?,
            "chi" => p.chi = e.non_negative()?,
            "growth" => p.growth = e.positive()?,
            "dt" => p.dt = e.positive()?,
            "substeps" => p.substeps = e.count()?,
            _ => return Err(e.unknown()),
        },
        EnvConfig::Vorticity(p) => match e.key {
            "n_grid" => p.n_grid = e.count()?,
            "reynolds" => p.reynolds = e.positive()?,
            "dt" => p.dt = e.positive()?,
            "substeps" => p.substeps = e.count()?,
            "peak_wavenumber" => p.peak_wavenumber = e.positive()?,
            _ => return Err(e.unknown()),
        },
    }
    let check = match env {
        EnvConfig::Ks(p) => p.validate(),
        EnvConfig::KellerSegel(p) => p.validate(),
        EnvConfig::Vorticity(p) => p.validate(),
    };
    // cross-field checks (e.g. grid vs length) wait for the full section
    if let Err(err) = check {
        if matches!(e.key, "dt" | "substeps") {
            return Err(e.err(err.to_string()));
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_config(&text)
}

fn kernel_lines(out: &mut String, k: &KernelSpec) {
    match &k.shape {
        KernelShape::Gaussian { sigma } => {
            let _ = writeln!(out, "kernel = gaussian\nsigma = {sigma}");
        }
        KernelShape::Indicator { width } => {
            let _ = writeln!(out, "kernel = indicator\nwidth = {width}");
        }
        KernelShape::Dirac => {
            let _ = writeln!(out, "kernel = dirac");
        }
        KernelShape::Asymmetric { weights, cell_width } => {
            let _ = writeln!(out, "kernel = asymmetric\nweights = {}\ncell_width = {cell_width}", join(weights));
        }
    }
    let n = match k.normalization {
        Normalization::None => "none",
        Normalization::UnitIntegral => "unit_integral",
    };
    let _ = writeln!(out, "normalization = {n}");
}

fn join<V: std::fmt::Display>(v: &[V]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Full config text with every key spelled out; `parse_config` reads it back unchanged.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "name = {}\nseed = {}\n\n[env]\nkind = {}", cfg.name, cfg.seed, cfg.env.name());
    let _ = match &cfg.env {
        EnvConfig::Ks(p) => writeln!(
            o,
            "length = {}\nn_points = {}\nmu = {}\ndt = {}\nsubsteps = {}",
            p.length, p.n_points, p.mu, p.dt, p.substeps
        ),
        EnvConfig::KellerSegel(p) => writeln!(
            o,
            "length = {}\nn_points = {}\ndiffusion = {}\nchi = {}\ngrowth = {}\ndt = {}\nsubsteps = {}",
            p.length, p.n_points, p.diffusion, p.chi, p.growth, p.dt, p.substeps
        ),
        EnvConfig::Vorticity(p) => writeln!(
            o,
            "n_grid = {}\nreynolds = {}\ndt = {}\nsubsteps = {}\npeak_wavenumber = {}",
            p.n_grid, p.reynolds, p.dt, p.substeps, p.peak_wavenumber
        ),
    };
    let s = &cfg.sensors;
    let _ = writeln!(o, "\n[sensors]\ncount = {}", s.count);
    kernel_lines(&mut o, &s.kernel);
    let _ = writeln!(o, "neighborhood = {}\ndelays = {}\ndelay_steps = {}", s.neighborhood, s.delays, s.delay_steps);
    let _ = writeln!(o, "\n[actuators]");
    kernel_lines(&mut o, &cfg.actuators.kernel);
    let _ = writeln!(o, "margin = {}\nu_max = {}", cfg.actuators.margin, cfg.agent.u_max);
    let r = &cfg.reward;
    let _ = writeln!(o, "\n[reward]\nalpha = {}\nbeta = {}\ntarget = {}\ncomponent = {}", r.alpha, r.beta, r.target, r.component);
    let a = &cfg.agent;
    let _ = writeln!(
        o,
        "\n[agent]\nactor_hidden = {}\ncritic_hidden = {}\nactor_lr = {}\ncritic_lr = {}\ngamma = {}\ntau = {}\n\
         batch_size = {}\nbuffer_capacity = {}\nnoise_start = {}\nnoise_end = {}\nfinal_init = {}\nreward_scale = {}",
        join(&a.actor_hidden),
        join(&a.critic_hidden),
        a.actor_lr,
        a.critic_lr,
        a.gamma,
        a.tau,
        a.batch_size,
        a.buffer_capacity,
        a.noise_start,
        a.noise_end,
        a.final_init,
        a.reward_scale
    );
    let t = &cfg.training;
    let _ = writeln!(
        o,
        "\n[training]\nepisodes = {}\nsteps = {}\neval_steps = {}\nwarmup_time = {}\neval_every = {}\n\
         eval_episodes = {}\nwarm_fill = {}\nupdates_per_step = {}\nterminal_penalty = {}",
        t.episodes,
        t.steps,
        t.eval_steps,
        t.warmup_time,
        t.eval_every,
        t.eval_episodes,
        t.warm_fill,
        t.updates_per_step,
        t.terminal_penalty
    );
    let _ = writeln!(o, "\n[output]\ncheckpoint_every = {}\nsnapshot_every = {}", t.checkpoint_every, t.snapshot_every);
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_round_trips() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let back = parse_config(&render_config(&cfg)).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }

    #[test]
    fn preset_ks_l22_has_published_geometry() {
        let cfg = parse_config("preset = ks-L22\n").unwrap();
        let EnvConfig::Ks(p) = &cfg.env else { panic!("not KS") };
        assert_eq!(p.length, 22.0);
        assert_eq!(cfg.sensors.count, 8);
        assert_eq!(cfg.sensors.neighborhood, 1);
        assert_eq!(cfg.sensors.kernel, KernelSpec::gaussian(0.8));
        assert_eq!(cfg.agent.actor_hidden, vec![6]);
        assert_eq!(cfg.agent.critic_hidden, vec![140]);
    }

    #[test]
    fn empty_agent_section_keeps_defaults() {
        let cfg = parse_config("[env]\nkind = ks\n[agent]\n").unwrap();
        assert_eq!(cfg.agent, crate::ddpg::DdpgConfig::default());
    }

    #[test]
    fn even_neighborhood_is_rejected_with_its_line() {
        let err = parse_config("preset = ks-L22\n\n[sensors]\nneighborhood = 2\n").unwrap_err();
        assert_eq!(err.line(), Some(4));
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let err = parse_config("preset = ks-L22\n[agent]\nlearning_rate = 1\n").unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert!(err.to_string().contains("learning_rate"));
        assert_eq!(parse_config("preset = ks-L22\n[extras]\n").unwrap_err().line(), Some(2));
        assert_eq!(parse_config("[env]\nkind = ks\nreynolds = 3\n").unwrap_err().line(), Some(3));
    }

    #[test]
    fn type_mismatch_reports_line() {
        let err = parse_config("preset = ks-L22\n[training]\n# note\nepisodes = many\n").unwrap_err();
        assert_eq!(err.line(), Some(4));
    }

    #[test]
    fn overrides_and_comments() {
        let text = "preset = ks-L22   # base\nseed = 9\n[env]\nlength = 200\n[sensors]\ncount = 80\n\
                    [agent]\ncritic_hidden = 64, 64\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.agent.critic_hidden, vec![64, 64]);
        let EnvConfig::Ks(p) = &cfg.env else { panic!() };
        assert_eq!((p.length, p.n_points), (200.0, 512));
    }

    #[test]
    fn kernel_shape_change_needs_its_parameter() {
        assert!(parse_config("preset = ks-L22\n[sensors]\nkernel = indicator\n").is_err());
        let cfg = parse_config("preset = ks-L22\n[sensors]\nkernel = indicator\nwidth = 2.75\n").unwrap();
        assert_eq!(cfg.sensors.kernel, KernelSpec::indicator(2.75));
    }

    #[test]
    fn cross_field_violation_is_reported() {
        // 9 sensors cannot host a neighborhood of 11
        let err = parse_config("preset = ks-L22\n[sensors]\ncount = 9\nneighborhood = 11\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
    }
}

//! Run configuration: a sectioned key/value text format for humans, JSON
//! for manifests. Every command materializes all defaults into its manifest
//! so reruns carry no hidden state.

use std::path::Path;

use serde::{Deserialize, Serialize};

use atrpp::baselines::BaselineConfig;
use atrpp::hawkes::SyntheticConfig;
use atrpp::model::AttentionConfig;
use atrpp::train::{LossConfig, TrainConfig};
use atrpp::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub synthetic: SyntheticSection,
    pub model: ModelSection,
    pub attention: AttentionSection,
    pub loss: LossSection,
    pub train: TrainSection,
    pub baselines: BaselinesSection,
    pub eval: EvalSection,
    pub infectivity: InfectivitySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            data: DataSection::default(),
            synthetic: SyntheticSection::default(),
            model: ModelSection::default(),
            attention: AttentionSection::default(),
            loss: LossSection::default(),
            train: TrainSection::default(),
            baselines: BaselinesSection::default(),
            eval: EvalSection::default(),
            infectivity: InfectivitySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunSection {
    /// Master seed; mandatory (here or via --seed).
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSection {
    /// Directory holding the dataset files (simulate writes, others read).
    pub dir: String,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection { dir: "data".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSection {
    pub z: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub zero_fraction: f64,
    pub w: f64,
    pub horizon: f64,
    pub cascades: usize,
    pub noise_scale: f64,
    pub gaussian_noise: bool,
    /// 0 means horizon / 100.
    pub series_step: f64,
    pub ratio_train: f64,
    pub ratio_val: f64,
    pub ratio_test: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        SyntheticSection {
            z: d.num_dims,
            mu_min: d.mu_range.0,
            mu_max: d.mu_range.1,
            a_min: d.a_range.0,
            a_max: d.a_range.1,
            zero_fraction: d.zero_fraction,
            w: d.w,
            horizon: d.horizon,
            cascades: d.num_cascades,
            noise_scale: d.noise_scale,
            gaussian_noise: d.gaussian_noise,
            series_step: d.series_step,
            ratio_train: d.train_val_test.0,
            ratio_val: d.train_val_test.1,
            ratio_test: d.train_val_test.2,
        }
    }
}

impl SyntheticSection {
    pub fn to_config(&self, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            num_dims: self.z,
            mu_range: (self.mu_min, self.mu_max),
            a_range: (self.a_min, self.a_max),
            zero_fraction: self.zero_fraction,
            w: self.w,
            horizon: self.horizon,
            num_cascades: self.cascades,
            noise_scale: self.noise_scale,
            gaussian_noise: self.gaussian_noise,
            series_step: self.series_step,
            train_val_test: (self.ratio_train, self.ratio_val, self.ratio_test),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub hidden_event: usize,
    pub hidden_series: usize,
    pub hidden_fuse: usize,
    /// false trains the event-only variant (AERPP).
    pub use_series: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            embed_dim: 16,
            hidden_event: 32,
            hidden_series: 32,
            hidden_fuse: 32,
            use_series: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionSection {
    pub epsilon: f64,
    /// 0 means attend over the whole history.
    pub window: usize,
}

impl Default for AttentionSection {
    fn default() -> Self {
        AttentionSection { epsilon: 0.01, window: 0 }
    }
}

impl AttentionSection {
    pub fn to_config(&self) -> AttentionConfig {
        AttentionConfig {
            epsilon: self.epsilon,
            window: if self.window == 0 { None } else { Some(self.window) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossSection {
    pub sigma: f64,
    pub time_weight: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        let d = LossConfig::default();
        LossSection { sigma: d.sigma, time_weight: d.time_weight }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub max_epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub clip_norm: f64,
    /// Checkpoint path to resume from; empty starts fresh.
    pub resume: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            max_epochs: d.max_epochs,
            patience: d.patience,
            lr: d.lr,
            rms_decay: d.rms_decay,
            rms_eps: d.rms_eps,
            clip_norm: d.clip_norm,
            resume: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselinesSection {
    /// Comma list of registry names to fit.
    pub enabled: Vec<String>,
    pub markov_max_order: usize,
    /// 0 selects the decay from a validation grid.
    pub hawkes_w: f64,
    pub hawkes_l1: f64,
    pub hawkes_max_iters: usize,
    pub hawkes_rollouts: usize,
    pub logistic_window: usize,
    pub logistic_iters: usize,
    pub logistic_lr: f64,
    /// Also evaluate the trained checkpoint as a comparison row when it
    /// exists.
    pub include_model: bool,
}

impl Default for BaselinesSection {
    fn default() -> Self {
        let d = BaselineConfig::default();
        BaselinesSection {
            enabled: vec![
                "poisson".into(),
                "self_correcting".into(),
                "markov".into(),
                "ctmc".into(),
                "hawkes".into(),
                "logistic".into(),
            ],
            markov_max_order: d.markov_max_order,
            hawkes_w: 0.0,
            hawkes_l1: d.hawkes_l1,
            hawkes_max_iters: d.hawkes_max_iters,
            hawkes_rollouts: d.hawkes_rollouts,
            logistic_window: d.logistic_window,
            logistic_iters: d.logistic_iters,
            logistic_lr: d.logistic_lr,
            include_model: true,
        }
    }
}

impl BaselinesSection {
    pub fn to_config(&self, seed: u64) -> BaselineConfig {
        BaselineConfig {
            markov_max_order: self.markov_max_order,
            hawkes_w: if self.hawkes_w > 0.0 { Some(self.hawkes_w) } else { None },
            hawkes_l1: self.hawkes_l1,
            hawkes_max_iters: self.hawkes_max_iters,
            hawkes_rollouts: self.hawkes_rollouts,
            logistic_window: self.logistic_window,
            logistic_iters: self.logistic_iters,
            logistic_lr: self.logistic_lr,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSection {
    /// Checkpoint path; relative paths resolve against the output directory.
    pub checkpoint: String,
    pub k_list: Vec<usize>,
    /// Normalize matrices by their own maximum before the relative error.
    pub normalize: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { checkpoint: "model.json".into(), k_list: vec![1, 5], normalize: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InfectivitySection {
    /// Edges below this strength are omitted from the DOT graph.
    pub edge_floor: f64,
}

impl Default for InfectivitySection {
    fn default() -> Self {
        InfectivitySection { edge_floor: 1e-4 }
    }
}

impl RunConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            lr: self.train.lr,
            rms_decay: self.train.rms_decay,
            rms_eps: self.train.rms_eps,
            clip_norm: self.train.clip_norm,
            seed,
            attention: self.attention.to_config(),
            loss: LossConfig { sigma: self.loss.sigma, time_weight: self.loss.time_weight },
            embed_dim: self.model.embed_dim,
            hidden_event: self.model.hidden_event,
            hidden_series: self.model.hidden_series,
            hidden_fuse: self.model.hidden_fuse,
            use_series: self.model.use_series,
        }
    }

    /// Loads a config from JSON (plain config or a command manifest) or the
    /// sectioned text format, chosen by file extension.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            // A manifest wraps the resolved config under "config".
            let config_value = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(config_value)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            parse_sectioned(&text)
        }
    }
}

/// Parses the `[section]` / `key = value` format. Unknown sections or keys
/// are errors so typos cannot silently fall back to defaults.
pub fn parse_sectioned(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Config(format!("line {lineno}: unterminated section")))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {lineno}: expected key = value")))?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut config, &section, key, value)
            .map_err(|msg| Error::Config(format!("line {lineno}: {msg}")))?;
    }
    Ok(config)
}

fn apply_key(
    config: &mut RunConfig,
    section: &str,
    key: &str,
    value: &str,
) -> std::result::Result<(), String> {
    fn num<T: std::str::FromStr>(v: &str, what: &str) -> std::result::Result<T, String> {
        v.parse::<T>().map_err(|_| format!("bad {what}: {v:?}"))
    }
    fn flag(v: &str) -> std::result::Result<bool, String> {
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(format!("bad boolean: {v:?}")),
        }
    }
    match (section, key) {
        ("run", "seed") => config.run.seed = Some(num(value, "seed")?),
        ("data", "dir") => config.data.dir = value.to_string(),
        ("synthetic", "z") => config.synthetic.z = num(value, "z")?,
        ("synthetic", "mu_min") => config.synthetic.mu_min = num(value, "mu_min")?,
        ("synthetic", "mu_max") => config.synthetic.mu_max = num(value, "mu_max")?,
        ("synthetic", "a_min") => config.synthetic.a_min = num(value, "a_min")?,
        ("synthetic", "a_max") => config.synthetic.a_max = num(value, "a_max")?,
        ("synthetic", "zero_fraction") => {
            config.synthetic.zero_fraction = num(value, "zero_fraction")?
        }
        ("synthetic", "w") => config.synthetic.w = num(value, "w")?,
        ("synthetic", "horizon") => config.synthetic.horizon = num(value, "horizon")?,
        ("synthetic", "cascades") => config.synthetic.cascades = num(value, "cascades")?,
        ("synthetic", "noise_scale") => config.synthetic.noise_scale = num(value, "noise_scale")?,
        ("synthetic", "gaussian_noise") => config.synthetic.gaussian_noise = flag(value)?,
        ("synthetic", "series_step") => config.synthetic.series_step = num(value, "series_step")?,
        ("synthetic", "ratio_train") => config.synthetic.ratio_train = num(value, "ratio_train")?,
        ("synthetic", "ratio_val") => config.synthetic.ratio_val = num(value, "ratio_val")?,
        ("synthetic", "ratio_test") => config.synthetic.ratio_test = num(value, "ratio_test")?,
        ("model", "embed_dim") => config.model.embed_dim = num(value, "embed_dim")?,
        ("model", "hidden_event") => config.model.hidden_event = num(value, "hidden_event")?,
        ("model", "hidden_series") => config.model.hidden_series = num(value, "hidden_series")?,
        ("model", "hidden_fuse") => config.model.hidden_fuse = num(value, "hidden_fuse")?,
        ("model", "use_series") => config.model.use_series = flag(value)?,
        ("attention", "epsilon") => config.attention.epsilon = num(value, "epsilon")?,
        ("attention", "window") => {
            config.attention.window =
                if value == "all" { 0 } else { num(value, "window")? }
        }
        ("loss", "sigma") => config.loss.sigma = num(value, "sigma")?,
        ("loss", "time_weight") => config.loss.time_weight = num(value, "time_weight")?,
        ("train", "max_epochs") => config.train.max_epochs = num(value, "max_epochs")?,
        ("train", "patience") => config.train.patience = num(value, "patience")?,
        ("train", "lr") => config.train.lr = num(value, "lr")?,
        ("train", "rms_decay") => config.train.rms_decay = num(value, "rms_decay")?,
        ("train", "rms_eps") => config.train.rms_eps = num(value, "rms_eps")?,
        ("train", "clip_norm") => config.train.clip_norm = num(value, "clip_norm")?,
        ("train", "resume") => config.train.resume = value.to_string(),
        ("baselines", "enabled") => {
            config.baselines.enabled =
                value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
        }
        ("baselines", "markov_max_order") => {
            config.baselines.markov_max_order = num(value, "markov_max_order")?
        }
        ("baselines", "hawkes_w") => {
            config.baselines.hawkes_w = if value == "grid" { 0.0 } else { num(value, "hawkes_w")? }
        }
        ("baselines", "hawkes_l1") => config.baselines.hawkes_l1 = num(value, "hawkes_l1")?,
        ("baselines", "hawkes_max_iters") => {
            config.baselines.hawkes_max_iters = num(value, "hawkes_max_iters")?
        }
        ("baselines", "hawkes_rollouts") => {
            config.baselines.hawkes_rollouts = num(value, "hawkes_rollouts")?
        }
        ("baselines", "logistic_window") => {
            config.baselines.logistic_window = num(value, "logistic_window")?
        }
        ("baselines", "logistic_iters") => {
            config.baselines.logistic_iters = num(value, "logistic_iters")?
        }
        ("baselines", "logistic_lr") => config.baselines.logistic_lr = num(value, "logistic_lr")?,
        ("baselines", "include_model") => config.baselines.include_model = flag(value)?,
        ("eval", "checkpoint") => config.eval.checkpoint = value.to_string(),
        ("eval", "k_list") => {
            config.eval.k_list = value
                .split(',')
                .map(|s| num::<usize>(s.trim(), "k"))
                .collect::<std::result::Result<_, _>>()?
        }
        ("eval", "normalize") => config.eval.normalize = flag(value)?,
        ("infectivity", "edge_floor") => {
            config.infectivity.edge_floor = num(value, "edge_floor")?
        }
        _ => return Err(format!("unknown key {section:?}.{key:?}")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sectioned_text_round_trips_through_json_manifest() {
        let text = "\
[run]
seed = 42

[synthetic]
z = 10
cascades = 700
w = 0.01

# comment
[attention]
window = all
epsilon = 0.02

[eval]
k_list = 1, 3, 5
";
        let config = parse_sectioned(text).unwrap();
        assert_eq!(config.run.seed, Some(42));
        assert_eq!(config.synthetic.z, 10);
        assert_eq!(config.attention.window, 0);
        assert_eq!(config.attention.epsilon, 0.02);
        assert_eq!(config.eval.k_list, vec![1, 3, 5]);

        let json = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_keys_are_rejected_with_line_numbers() {
        let err = parse_sectioned("[run]\nsneed = 4\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("sneed"), "{msg}");
    }

    #[test]
    fn defaults_match_the_full_scale_protocol() {
        // An empty config resolves to the full-scale synthetic study.
        let config = parse_sectioned("").unwrap();
        assert_eq!(config.synthetic.z, 20);
        assert_eq!(config.synthetic.w, 0.01);
        assert_eq!(config.synthetic.cascades, 5000);
        assert_eq!(config.synthetic.zero_fraction, 0.5);
        assert_eq!((config.synthetic.mu_min, config.synthetic.mu_max), (0.0, 0.01));
        assert_eq!((config.synthetic.a_min, config.synthetic.a_max), (0.0, 0.1));
        assert_eq!(config.attention.epsilon, 0.01);
    }
}

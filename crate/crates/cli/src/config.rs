//! Experiment configuration: a TOML document with `[network]`, `[game]`
//! and `[options]` tables.

use std::path::{Path, PathBuf};

use epinet::game_core::GameParams;
use epinet::dynamics::EpidemicParams;
use epinet::net_model::{Mode, Network};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_MULTI_START: usize = 8;
pub const DEFAULT_GRID: usize = 257;
pub const DEFAULT_KAPPA_GRID: usize = 64;
pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    network: Option<RawNetwork>,
    game: Option<RawGame>,
    options: Option<RawOptions>,
}

#[derive(Debug, Default, Deserialize)]
struct RawNetwork {
    builtin: Option<String>,
    n: Option<usize>,
    weight: Option<f64>,
    path: Option<String>,
    format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct RawGame {
    delta: Option<ScalarOrVec>,
    beta: Option<f64>,
    t_bar: Option<f64>,
    x0: Option<ScalarOrVec>,
    rho: Option<f64>,
    mode: Option<Mode>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOptions {
    samples: Option<u64>,
    seed: Option<u64>,
    grid: Option<usize>,
    multi_start: Option<usize>,
    kappa_grid: Option<usize>,
    out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Complete,
    Cycle,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Edgelist,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum NetworkSource {
    Builtin { kind: Builtin, n: usize, weight: f64 },
    /// `path` as written in the config, resolved against its directory.
    File { path: String, format: FileFormat },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub delta: Vec<f64>,
    pub beta: f64,
    pub t_bar: f64,
    pub x0: Vec<f64>,
    pub rho: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub samples: u64,
    pub seed: Option<u64>,
    pub grid: usize,
    pub multi_start: usize,
    pub kappa_grid: usize,
}

/// Resolved configuration, as embedded in every report. The output
/// directory is left out so reports do not depend on where they are written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkSource,
    pub n: usize,
    pub game: GameConfig,
    pub options: Options,
}

impl ExperimentConfig {
    pub fn game_params(&self) -> Result<GameParams, CliError> {
        let g = &self.game;
        let epi = EpidemicParams::new(g.beta, g.t_bar, g.x0.clone())?;
        Ok(GameParams::new(g.delta.clone(), epi, g.rho, g.mode)?)
    }

    /// Seed for a command that draws random numbers.
    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.options
            .seed
            .ok_or_else(|| CliError::Config(format!("missing required key options.seed ({why})")))
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub network: Network,
    pub out: PathBuf,
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!("missing required key {key}"))
}

fn broadcast(key: &str, v: Option<ScalarOrVec>, n: usize) -> Result<Vec<f64>, CliError> {
    match v.ok_or_else(|| missing(key))? {
        ScalarOrVec::Scalar(x) => Ok(vec![x; n]),
        ScalarOrVec::Vector(xs) if xs.len() == n => Ok(xs),
        ScalarOrVec::Vector(xs) => Err(CliError::Config(format!(
            "shape mismatch: {key} has {} entries but the network has {n} nodes",
            xs.len()
        ))),
    }
}

fn load_network(raw: RawNetwork, base: &Path) -> Result<(NetworkSource, Network), CliError> {
    match (raw.builtin, raw.path) {
        (Some(_), Some(_)) => Err(CliError::Config("network.builtin and network.path are exclusive".into())),
        (None, None) => Err(missing("network.builtin or network.path")),
        (Some(kind), None) => {
            let kind = match kind.as_str() {
                "complete" => Builtin::Complete,
                "cycle" => Builtin::Cycle,
                "star" => Builtin::Star,
                other => return Err(CliError::Config(format!("unknown builtin network `{other}`"))),
            };
            let n = raw.n.ok_or_else(|| missing("network.n"))?;
            let weight = raw.weight.unwrap_or(1.0);
            let net = match kind {
                Builtin::Complete => Network::complete(n, weight),
                Builtin::Cycle => Network::cycle(n, weight),
                Builtin::Star => Network::star(n, weight),
            }?;
            Ok((NetworkSource::Builtin { kind, n, weight }, net))
        }
        (None, Some(path)) => {
            let format = match raw.format.as_deref() {
                Some("csv") => FileFormat::Csv,
                Some("edgelist") => FileFormat::Edgelist,
                Some(other) => return Err(CliError::Config(format!("unknown network format `{other}`"))),
                None if path.ends_with(".csv") => FileFormat::Csv,
                None => FileFormat::Edgelist,
            };
            let full = base.join(&path);
            let text = std::fs::read_to_string(&full)
                .map_err(|e| CliError::Config(format!("cannot read network file {}: {e}", full.display())))?;
            let net = match format {
                FileFormat::Csv => Network::from_csv(&text),
                FileFormat::Edgelist => Network::from_edge_list(&text),
            }?;
            Ok((NetworkSource::File { path, format }, net))
        }
    }
}

/// Parses and validates a config. Relative paths are resolved against
/// `base`; unknown keys are errors when `strict`, warnings otherwise.
pub fn parse_config(text: &str, base: &Path, strict: bool) -> Result<Experiment, CliError> {
    let mut unknown = Vec::new();
    let de = toml::Deserializer::new(text);
    let raw: RawConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string().replace(".?", "").replace("?.", "")))
        .map_err(|e| CliError::Config(e.to_string()))?;
    if !unknown.is_empty() {
        if strict {
            return Err(CliError::Config(format!("unknown key(s): {}", unknown.join(", "))));
        }
        for key in &unknown {
            eprintln!("warning: ignoring unknown key {key}");
        }
    }
    let (source, network) = load_network(raw.network.ok_or_else(|| missing("network"))?, base)?;
    let n = network.n();
    let g = raw.game.ok_or_else(|| missing("game"))?;
    let game = GameConfig {
        delta: broadcast("game.delta", g.delta, n)?,
        beta: g.beta.ok_or_else(|| missing("game.beta"))?,
        t_bar: g.t_bar.ok_or_else(|| missing("game.t_bar"))?,
        x0: broadcast("game.x0", g.x0, n)?,
        rho: g.rho.ok_or_else(|| missing("game.rho"))?,
        mode: g.mode.unwrap_or(Mode::Local),
    };
    let o = raw.options.unwrap_or_default();
    let options = Options {
        samples: o.samples.unwrap_or(DEFAULT_SAMPLES),
        seed: o.seed,
        grid: o.grid.unwrap_or(DEFAULT_GRID),
        multi_start: o.multi_start.unwrap_or(DEFAULT_MULTI_START),
        kappa_grid: o.kappa_grid.unwrap_or(DEFAULT_KAPPA_GRID),
    };
    if options.grid < 2 {
        return Err(CliError::Config(format!("options.grid must be at least 2, got {}", options.grid)));
    }
    if options.kappa_grid < 3 {
        return Err(CliError::Config(format!("options.kappa_grid must be at least 3, got {}", options.kappa_grid)));
    }
    let config = ExperimentConfig { network: source, n, game, options };
    config.game_params()?;
    let out = base.join(o.out.as_deref().unwrap_or(DEFAULT_OUT));
    Ok(Experiment { config, network, out })
}

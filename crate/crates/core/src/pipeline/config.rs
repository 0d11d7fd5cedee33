//! Run configuration: one TOML document, with dotted-key overrides applied
//! before deserialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datasets::PlantedPartition;
use crate::error::{Error, Result};
use crate::eval::{MetricSpec, NegativeMode, SplitPart};
use crate::heuristics::{ClassHeuristicParams, GammaDecayConfig, Structural};
use crate::model::{ModelConfig, ModelMode};
use crate::split::{SplitRatios, DEFAULT_NEGATIVE_POOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    /// Artifact directory.
    pub out: PathBuf,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub labels: LabelConfig,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            split: SplitConfig::default(),
            labels: LabelConfig::default(),
            train: TrainConfig::default(),
            model: ModelConfig::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

/// Exactly one of `edges`, `linqs_dir` and `planted` names the input graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Whitespace-separated edge list.
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Directory holding `<linqs_name>.content` and `<linqs_name>.cites`.
    pub linqs_dir: Option<PathBuf>,
    pub linqs_name: String,
    /// Synthetic graph generated from the root seed.
    pub planted: Option<PlantedPartition>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            edges: None,
            features: None,
            labels: None,
            linqs_dir: None,
            linqs_name: "cora".into(),
            planted: None,
        }
    }
}

impl DataConfig {
    fn n_sources(&self) -> usize {
        [self.edges.is_some(), self.linqs_dir.is_some(), self.planted.is_some()]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// Files read at ingestion, in a fixed order.
    pub fn input_files(&self) -> Vec<PathBuf> {
        if let Some(dir) = &self.linqs_dir {
            return vec![
                dir.join(format!("{}.content", self.linqs_name)),
                dir.join(format!("{}.cites", self.linqs_name)),
            ];
        }
        [&self.edges, &self.features, &self.labels]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
    /// Defaults to the root seed.
    pub seed: Option<u64>,
    /// Size of each of the valid and test negative pools.
    pub negative_pool: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let r = SplitRatios::default();
        SplitConfig {
            train: r.train,
            valid: r.valid,
            test: r.test,
            seed: None,
            negative_pool: DEFAULT_NEGATIVE_POOL,
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios::new(self.train, self.valid, self.test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    /// Labels shipped with the graph.
    True,
    Kmeans,
    Louvain,
    Mono,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::True => "true",
            LabelSource::Kmeans => "kmeans",
            LabelSource::Louvain => "louvain",
            LabelSource::Mono => "mono",
        }
    }

    /// Whether labels come from the `cluster` stage.
    pub fn is_clustered(self) -> bool {
        matches!(self, LabelSource::Kmeans | LabelSource::Louvain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    pub source: LabelSource,
    /// Fixed cluster count for k-means; when absent `k_grid` is swept.
    pub k: Option<usize>,
    pub k_grid: Vec<usize>,
    pub max_iters: usize,
    pub n_init: usize,
    pub normalize_rows: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            source: LabelSource::True,
            k: None,
            k_grid: vec![1, 2, 3, 5, 7, 10, 15],
            max_iters: 100,
            n_init: 4,
            normalize_rows: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: ModelMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { mode: ModelMode::Ncn }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Cn,
    Aa,
    Ra,
    Katz,
    /// Class-integrated heuristic over `eval.hc_base`.
    Hc,
    /// The checkpoint of `train.mode`.
    Model,
}

impl ScorerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cn" => Ok(ScorerKind::Cn),
            "aa" => Ok(ScorerKind::Aa),
            "ra" => Ok(ScorerKind::Ra),
            "katz" => Ok(ScorerKind::Katz),
            "hc" => Ok(ScorerKind::Hc),
            "model" => Ok(ScorerKind::Model),
            other => Err(Error::Config(format!(
                "unknown scorer `{other}` (expected cn, aa, ra, katz, hc or model)"
            ))),
        }
    }

    pub fn structural(self) -> Option<Structural> {
        match self {
            ScorerKind::Cn => Some(Structural::Cn),
            ScorerKind::Aa => Some(Structural::Aa),
            ScorerKind::Ra => Some(Structural::Ra),
            ScorerKind::Katz => Some(Structural::Katz),
            ScorerKind::Hc | ScorerKind::Model => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub scorers: Vec<ScorerKind>,
    pub metric: MetricSpec,
    pub part: SplitPart,
    pub negatives: NegativeMode,
    pub katz: GammaDecayConfig,
    pub hc: ClassHeuristicParams,
    pub hc_base: Structural,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            scorers: vec![ScorerKind::Cn, ScorerKind::Model],
            metric: MetricSpec::HitRate(100),
            part: SplitPart::Test,
            negatives: NegativeMode::Shared,
            katz: GammaDecayConfig::default(),
            hc: ClassHeuristicParams::default(),
            hc_base: Structural::Cn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub n_classes: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![10_000, 100_000, 1_000_000],
            n_classes: 7,
            repeats: 5,
        }
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies `key.path=value` overrides and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.n_sources() > 1 {
            return Err(Error::Config(
                "set only one of data.edges, data.linqs_dir and data.planted".into(),
            ));
        }
        if d.linqs_dir.is_some() && (d.features.is_some() || d.labels.is_some()) {
            return Err(Error::Config(
                "data.features and data.labels only apply to data.edges".into(),
            ));
        }
        self.split.ratios().validate()?;
        if self.split.negative_pool == 0 {
            return Err(Error::Config("split.negative_pool must be positive".into()));
        }
        if self.labels.k == Some(0) {
            return Err(Error::Config("labels.k must be positive".into()));
        }
        if self.labels.source == LabelSource::Kmeans && self.labels.k.is_none() && self.labels.k_grid.len() < 3 {
            return Err(Error::Config("labels.k_grid needs at least 3 candidates".into()));
        }
        self.model.validate()?;
        if self.eval.scorers.is_empty() {
            return Err(Error::Config("eval.scorers is empty".into()));
        }
        self.eval.katz.validate()?;
        self.eval.hc.validate()?;
        if self.bench.sizes.is_empty() || self.bench.n_classes == 0 || self.bench.repeats == 0 {
            return Err(Error::Config("bench needs sizes, classes and repeats".into()));
        }
        Ok(())
    }

    /// Checks that one data source is set and every input file exists.
    pub fn check_inputs(&self) -> Result<()> {
        if self.data.n_sources() != 1 {
            return Err(Error::Config(
                "no input graph: set data.edges, data.linqs_dir or data.planted".into(),
            ));
        }
        for p in self.data.input_files() {
            if !p.is_file() {
                return Err(Error::io(
                    &p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.seed)
    }

    /// Pretty TOML of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}

/// Sets `a.b.c = value` in `table`. The value is parsed as a TOML value and
/// falls back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn digest_of<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("digest input serializes");
    hex(&Sha256::digest(bytes))
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted() -> Vec<String> {
        vec!["data.planted.n_nodes = 60".into()]
    }

    #[test]
    fn data_source_is_checked_at_ingestion() {
        let cfg = RunConfig::load(None, &[]).unwrap();
        assert!(matches!(cfg.check_inputs(), Err(Error::Config(_))));
        let mut o = planted();
        o.push("data.edges = \"e.txt\"".into());
        assert!(matches!(RunConfig::load(None, &o), Err(Error::Config(_))));
        let cfg = RunConfig::load(None, &planted()).unwrap();
        assert_eq!(cfg.data.planted.as_ref().unwrap().n_nodes, 60);
        assert_eq!(cfg.split.negative_pool, 500);
    }

    #[test]
    fn overrides_parse_values() {
        let mut o = planted();
        o.push("model.epochs=7".into());
        o.push("train.mode = ncnc".into());
        o.push("eval.metric = \"mrr\"".into());
        o.push("eval.scorers = [\"cn\", \"katz\"]".into());
        let cfg = RunConfig::load(None, &o).unwrap();
        assert_eq!(cfg.model.epochs, 7);
        assert_eq!(cfg.train.mode, ModelMode::Ncnc);
        assert_eq!(cfg.eval.metric, MetricSpec::Mrr);
        assert_eq!(cfg.eval.scorers, vec![ScorerKind::Cn, ScorerKind::Katz]);
    }

    #[test]
    fn unknown_keys_and_bad_ratios_are_rejected() {
        let mut o = planted();
        o.push("model.epoch = 3".into());
        assert!(matches!(RunConfig::load(None, &o), Err(Error::Config(_))));
        let mut o = planted();
        o.push("split.train = 0.9".into());
        assert!(matches!(RunConfig::load(None, &o), Err(Error::Config(_))));
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn file_round_trip() {
        let cfg = RunConfig::load(None, &planted()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, cfg.to_toml()).unwrap();
        assert_eq!(RunConfig::load(Some(&path), &[]).unwrap(), cfg);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = RunConfig::load(None, &planted()).unwrap();
        let mut b = a.clone();
        assert_eq!(digest_of(&a), digest_of(&b));
        b.model.epochs += 1;
        assert_ne!(digest_of(&a), digest_of(&b));
        assert_eq!(digest_of(&a).len(), 64);
    }
}

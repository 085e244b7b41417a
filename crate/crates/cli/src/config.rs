//! Pipeline configuration: a TOML file read once, validated all at once, and
//! hashed into every stage manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use conflict_seq_core::chains::StartReading;
use conflict_seq_core::scdi::{ScdiOptions, SingleEventRule, ThresholdScope};
use conflict_seq_core::seqcore::IndelPolicy;
use conflict_seq_core::spatial::Contiguity;
use conflict_seq_core::{EventType, GridSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{parse_event_type, AliasTable, ColumnMap, IngestOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin_x: f64,
    pub origin_y: f64,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    pub n_cols: u32,
    pub n_rows: u32,
    #[serde(default = "default_coordinate_space")]
    pub coordinate_space: String,
}

fn default_cell_size() -> f64 {
    0.5
}

fn default_coordinate_space() -> String {
    "EPSG:4326 (degrees; cells are not equal-area)".into()
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<GridSpec> {
        let mut g = GridSpec::new(
            self.origin_x,
            self.origin_y,
            self.cell_size,
            self.n_cols,
            self.n_rows,
        )?;
        g.coordinate_space = self.coordinate_space.clone();
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanConfig {
    pub year_min: i32,
    pub year_max: i32,
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            year_min: 1997,
            year_max: 2024,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Event CSV. When absent, the `synth` stage output is ingested instead.
    pub events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Canonical event-type names to retain.
    pub event_types: Vec<String>,
    /// Extra raw label → canonical name mappings.
    pub aliases: BTreeMap<String, String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            event_types: EventType::VIOLENT
                .iter()
                .map(|t| t.as_str().to_string())
                .collect(),
            aliases: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeName {
    #[default]
    Global,
    PerYear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleEventName {
    #[default]
    Dispersed,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScdiConfig {
    pub threshold_scope: ScopeName,
    pub single_event: SingleEventName,
}

impl ScdiConfig {
    pub fn options(&self) -> ScdiOptions {
        ScdiOptions {
            threshold_scope: match self.threshold_scope {
                ScopeName::Global => ThresholdScope::Global,
                ScopeName::PerYear => ThresholdScope::PerYear,
            },
            single_event: match self.single_event {
                SingleEventName::Dispersed => SingleEventRule::Dispersed,
                SingleEventName::Clustered => SingleEventRule::Clustered,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequencesConfig {
    pub drop_never_violent: bool,
}

impl Default for SequencesConfig {
    fn default() -> Self {
        SequencesConfig {
            drop_never_violent: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostsConfig {
    /// Fixed indel cost; overrides `indel_fraction` when set.
    pub indel: Option<f64>,
    /// Indel cost as a fraction of the largest substitution cost.
    pub indel_fraction: f64,
}

impl Default for CostsConfig {
    fn default() -> Self {
        CostsConfig {
            indel: None,
            indel_fraction: 0.5,
        }
    }
}

impl CostsConfig {
    pub fn policy(&self) -> IndelPolicy {
        match self.indel {
            Some(v) => IndelPolicy::Fixed(v),
            None => IndelPolicy::FractionOfMax(self.indel_fraction),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistancesConfig {
    /// Also write a CSV copy when there are at most this many sequences.
    pub csv_max_n: usize,
}

impl Default for DistancesConfig {
    fn default() -> Self {
        DistancesConfig { csv_max_n: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartReadingName {
    #[default]
    FirstViolent,
    InitialState,
    SpellStarts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub start_reading: StartReadingName,
}

impl StatsConfig {
    pub fn reading(&self) -> StartReading {
        match self.start_reading {
            StartReadingName::FirstViolent => StartReading::FirstViolent,
            StartReadingName::InitialState => StartReading::InitialState,
            StartReadingName::SpellStarts => StartReading::SpellStarts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContiguityName {
    Rook,
    #[default]
    Queen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JoinsConfig {
    pub contiguity: ContiguityName,
    pub permutations: usize,
    /// Treat never-violent cells as an extra type in the join counts.
    pub include_never_violent: bool,
}

impl Default for JoinsConfig {
    fn default() -> Self {
        JoinsConfig {
            contiguity: ContiguityName::Queen,
            permutations: 999,
            include_never_violent: false,
        }
    }
}

impl JoinsConfig {
    pub fn scheme(&self) -> Contiguity {
        match self.contiguity {
            ContiguityName::Rook => Contiguity::Rook,
            ContiguityName::Queen => Contiguity::Queen,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Scenario TOML file, relative to the config file.
    pub scenario: Option<PathBuf>,
}

/// Everything one pipeline run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every random stream is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub columns: ColumnMap,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub span: SpanConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub scdi: ScdiConfig,
    #[serde(default)]
    pub sequences: SequencesConfig,
    #[serde(default)]
    pub costs: CostsConfig,
    #[serde(default)]
    pub distances: DistancesConfig,
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub stats: StatsConfig,
    #[serde(default)]
    pub joins: JoinsConfig,
    #[serde(default)]
    pub synth: SynthConfig,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if let Err(e) = self.grid.to_grid() {
            errs.push(format!("grid: {e}"));
        }
        if self.span.year_min > self.span.year_max {
            errs.push(format!(
                "span: year_min {} exceeds year_max {}",
                self.span.year_min, self.span.year_max
            ));
        } else if self.span.year_max - self.span.year_min < 1 {
            errs.push("span: sequences need at least two years".into());
        }
        if self.cluster.k < 1 {
            errs.push("cluster.k must be at least 1".into());
        }
        if self.filter.event_types.is_empty() {
            errs.push("filter.event_types is empty".into());
        }
        for name in &self.filter.event_types {
            if parse_event_type(name).is_none() {
                errs.push(format!("filter.event_types: unknown type {name:?}"));
            }
        }
        for (label, name) in &self.filter.aliases {
            if parse_event_type(name).is_none() {
                errs.push(format!(
                    "filter.aliases: {label:?} maps to unknown type {name:?}"
                ));
            }
        }
        if self.columns.date_formats.is_empty() {
            errs.push("columns.date_formats is empty".into());
        }
        match self.costs.indel {
            Some(v) if !(v > 0.0) || !v.is_finite() => {
                errs.push(format!("costs.indel {v} must be positive"))
            }
            None if !(self.costs.indel_fraction > 0.0) => errs.push(format!(
                "costs.indel_fraction {} must be positive",
                self.costs.indel_fraction
            )),
            _ => {}
        }
        if self.joins.permutations != 0 && self.joins.permutations < 99 {
            errs.push(format!(
                "joins.permutations {} must be 0 (off) or at least 99",
                self.joins.permutations
            ));
        }
        if self.workers == Some(0) {
            errs.push("workers must be at least 1".into());
        }
        if let Some(p) = &self.input.events {
            if !self.resolve(p).is_file() {
                errs.push(format!(
                    "input.events {} does not exist",
                    self.resolve(p).display()
                ));
            }
        }
        if let Some(p) = &self.synth.scenario {
            if !self.resolve(p).is_file() {
                errs.push(format!(
                    "synth.scenario {} does not exist",
                    self.resolve(p).display()
                ));
            }
        }
        if self.input.events.is_none() && self.synth.scenario.is_none() {
            errs.push("either input.events or synth.scenario must be set".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn ingest_options(&self) -> Result<IngestOptions> {
        let filter: BTreeSet<EventType> = self
            .filter
            .event_types
            .iter()
            .filter_map(|n| parse_event_type(n))
            .collect();
        let mut aliases = AliasTable::default();
        for (label, name) in &self.filter.aliases {
            let ty = parse_event_type(name)
                .ok_or_else(|| Error::Config(vec![format!("unknown type {name:?}")]))?;
            aliases = aliases.with_alias(label.clone(), ty);
        }
        Ok(IngestOptions {
            columns: self.columns.clone(),
            aliases,
            filter,
            year_min: self.span.year_min,
            year_max: self.span.year_max,
            grid: self.grid.to_grid()?,
        })
    }

    /// SHA-256 of the canonical TOML rendering, excluding run-local knobs
    /// (workers, output directory) that do not change results.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.workers = None;
        canon.output_dir = PathBuf::new();
        let text = toml::to_string(&canon).expect("config serialises");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Seed for one named random stream: the first eight bytes (little-endian) of
/// `SHA-256(master_seed as u64 LE ‖ tag)`.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

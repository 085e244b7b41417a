//! The staged pipeline. Each stage reads its upstream artifacts from the
//! output root, writes its own files under `<root>/<stage>/`, and records a
//! `manifest.toml` next to them.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use conflict_seq_core::chains::{
    hitting_times, overall_summary, trajectory_summary_with, StartReading,
};
use conflict_seq_core::cluster::{cut, ward_linkage, ClusterAssignment};
use conflict_seq_core::scdi::build_state_field_with;
use conflict_seq_core::seqcore::{
    empirical_transition_matrix, extract_sequences, substitution_costs_with, SequenceSet,
};
use conflict_seq_core::spatial::{build_weights, join_counts_for_labels, node_labels};
use conflict_seq_core::CellId;

use crate::config::{derive_seed, PipelineConfig, StartReadingName};
use crate::error::{Error, Result};
use crate::formats::{distbin, geojson, newick, tables, write_text};
use crate::ingest::parse_events;
use crate::manifest::{digest_all, Manifest};
use crate::parallel;
use crate::synth::{generate_synthetic, write_events_csv, write_truth_csv, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Synth,
    Ingest,
    Classify,
    Sequences,
    Distances,
    Cluster,
    Stats,
    Joins,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Classify,
        Stage::Sequences,
        Stage::Distances,
        Stage::Cluster,
        Stage::Stats,
        Stage::Joins,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Classify => "classify",
            Stage::Sequences => "sequences",
            Stage::Distances => "distances",
            Stage::Cluster => "cluster",
            Stage::Stats => "stats",
            Stage::Joins => "joins",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Other(format!("unknown stage {s:?}")))
    }
}

/// What a stage produced.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: Stage,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// A configured pipeline bound to an output root.
pub struct Pipeline {
    cfg: PipelineConfig,
    root: PathBuf,
}

struct Ctx {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    details: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Ctx {
    fn new() -> Self {
        Ctx {
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn detail(&mut self, k: &str, v: impl ToString) {
        self.details.push((k.to_string(), v.to_string()));
    }
}

impl Pipeline {
    /// Validates the config; `out` overrides its output directory.
    pub fn new(cfg: PipelineConfig, out: Option<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let root = out.unwrap_or_else(|| cfg.out_dir());
        Ok(Pipeline { cfg, root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    fn artifact(&self, stage: Stage, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    /// Path to an upstream file, or an error naming the stage that makes it.
    fn require(&self, ctx: &mut Ctx, stage: Stage, file: &str) -> Result<PathBuf> {
        let p = self.artifact(stage, file);
        if !p.is_file() {
            return Err(Error::MissingArtifact {
                stage: stage.name(),
                path: p,
            });
        }
        ctx.inputs.push(p.clone());
        Ok(p)
    }

    fn seq_len(&self) -> usize {
        (self.cfg.span.year_max - self.cfg.span.year_min + 1) as usize
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        parallel::pool(self.cfg.workers)
    }

    /// Runs every stage in order; `synth` only when a scenario is configured
    /// and no event file is given.
    pub fn run_all(&self) -> Result<Vec<StageOutcome>> {
        Stage::ALL
            .into_iter()
            .filter(|&s| s != Stage::Synth || self.cfg.input.events.is_none())
            .map(|s| self.run(s))
            .collect()
    }

    pub fn run(&self, stage: Stage) -> Result<StageOutcome> {
        let dir = self.stage_dir(stage);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut ctx = Ctx::new();
        match stage {
            Stage::Synth => self.synth(&mut ctx, &dir)?,
            Stage::Ingest => self.ingest(&mut ctx, &dir)?,
            Stage::Classify => self.classify(&mut ctx, &dir)?,
            Stage::Sequences => self.sequences(&mut ctx, &dir)?,
            Stage::Distances => self.distances(&mut ctx, &dir)?,
            Stage::Cluster => self.cluster(&mut ctx, &dir)?,
            Stage::Stats => self.stats(&mut ctx, &dir)?,
            Stage::Joins => self.joins(&mut ctx, &dir)?,
            Stage::Report => self.report(&mut ctx, &dir)?,
        }
        let mut m = Manifest::new(stage.name(), self.cfg.seed, self.cfg.hash());
        m.inputs = digest_all(&self.root, &ctx.inputs)?;
        m.outputs = digest_all(&self.root, &ctx.outputs)?;
        m.details = ctx.details.into_iter().collect();
        for (i, w) in ctx.warnings.iter().enumerate() {
            m.details.insert(format!("warning_{}", i + 1), w.clone());
        }
        m.write(&dir.join("manifest.toml"))?;
        Ok(StageOutcome {
            stage,
            outputs: ctx.outputs,
            warnings: ctx.warnings,
        })
    }

    fn synth(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let Some(rel) = &self.cfg.synth.scenario else {
            return Err(Error::Config(vec![
                "synth stage needs synth.scenario".into()
            ]));
        };
        let path = self.cfg.resolve(rel);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        ctx.inputs.push(path);
        let scenario = ScenarioConfig::from_toml(&text)?;
        if scenario.grid != self.cfg.grid || scenario.span != self.cfg.span {
            ctx.warnings
                .push("scenario grid or span differs from the pipeline config".into());
        }
        let seed = derive_seed(self.cfg.seed, "synth");
        let syn = generate_synthetic(&scenario, seed)?;
        ctx.warnings.extend(syn.warnings.iter().cloned());
        let events = dir.join("events.csv");
        let truth = dir.join("truth.csv");
        write_events_csv(
            &syn,
            File::create(&events).map_err(|e| Error::io(&events, e))?,
        )?;
        write_truth_csv(
            &syn,
            &scenario,
            File::create(&truth).map_err(|e| Error::io(&truth, e))?,
        )?;
        ctx.detail("derived_seed", seed);
        ctx.detail("events", syn.events.len());
        ctx.outputs.extend([events, truth]);
        Ok(())
    }

    fn ingest(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let input = match &self.cfg.input.events {
            Some(p) => {
                let p = self.cfg.resolve(p);
                ctx.inputs.push(p.clone());
                p
            }
            None => self.require(ctx, Stage::Synth, "events.csv")?,
        };
        let f = File::open(&input).map_err(|e| Error::io(&input, e))?;
        let out = parse_events(std::io::BufReader::new(f), &self.cfg.ingest_options()?)?;
        let events = dir.join("events.csv");
        let rejects = dir.join("rejects.csv");
        tables::write_events(&events, &out.events)?;
        tables::write_rejects(&rejects, &out.rejects)?;
        ctx.detail("rows", out.rows);
        ctx.detail("retained", out.events.len());
        ctx.detail("rejected", out.rejects.len());
        ctx.detail("excluded_type", out.excluded_type);
        ctx.detail("excluded_span", out.excluded_span);
        ctx.outputs.extend([events, rejects]);
        Ok(())
    }

    fn classify(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let events = self.require(ctx, Stage::Ingest, "events.csv")?;
        let set = tables::read_events(
            &events,
            self.cfg.grid.to_grid()?,
            self.cfg.span.year_min,
            self.cfg.span.year_max,
        )?;
        let field = build_state_field_with(&set, self.cfg.scdi.options())?;
        let (states, thresholds, gj) = (
            dir.join("states.csv"),
            dir.join("thresholds.csv"),
            dir.join("states.geojson"),
        );
        tables::write_states(&states, &field)?;
        tables::write_thresholds(&thresholds, &field)?;
        geojson::write(&gj, &geojson::states(&field))?;
        let violent = field.states().iter().filter(|s| s.is_violent()).count();
        ctx.detail("violent_cell_years", violent);
        if let Some(t) = field.threshold() {
            ctx.detail("threshold", t);
        }
        ctx.outputs.extend([states, thresholds, gj]);
        Ok(())
    }

    fn read_sequences(&self, ctx: &mut Ctx) -> Result<SequenceSet> {
        let p = self.require(ctx, Stage::Sequences, "sequences.csv")?;
        tables::read_sequences(&p, self.seq_len(), !self.cfg.sequences.drop_never_violent)
    }

    fn sequences(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let states = self.require(ctx, Stage::Classify, "states.csv")?;
        let thresholds = self.require(ctx, Stage::Classify, "thresholds.csv")?;
        let field = tables::read_states(
            &states,
            &thresholds,
            self.cfg.grid.to_grid()?,
            self.cfg.span.year_min,
            self.cfg.span.year_max,
        )?;
        let seqs = extract_sequences(&field, self.cfg.sequences.drop_never_violent)?;
        let tm = empirical_transition_matrix(&seqs);
        let costs = substitution_costs_with(&tm, self.cfg.costs.policy())?;
        let out = [
            dir.join("sequences.csv"),
            dir.join("transition_rates.csv"),
            dir.join("transition_counts.csv"),
            dir.join("costs.csv"),
        ];
        tables::write_sequences(&out[0], &seqs)?;
        tables::write_transition_rates(&out[1], &tm)?;
        tables::write_transition_counts(&out[2], &tm)?;
        tables::write_costs(&out[3], &costs)?;
        ctx.detail("sequences", seqs.len());
        ctx.detail("length", seqs.seq_len());
        ctx.detail("indel", costs.indel());
        ctx.outputs.extend(out);
        Ok(())
    }

    fn distances(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let seqs = self.read_sequences(ctx)?;
        let costs = tables::read_costs(&self.require(ctx, Stage::Sequences, "costs.csv")?)?;
        let pool = self.pool()?;
        let dm = parallel::pairwise_distances(&seqs, &costs, &pool)?;
        let bin = dir.join("distances.bin");
        distbin::write(&bin, &dm)?;
        ctx.outputs.push(bin);
        let csv = dir.join("distances.csv");
        if dm.n() <= self.cfg.distances.csv_max_n {
            tables::write_distances_csv(&csv, &dm)?;
            ctx.outputs.push(csv);
        } else if csv.exists() {
            std::fs::remove_file(&csv).map_err(|e| Error::io(&csv, e))?;
        }
        ctx.detail("n", dm.n());
        ctx.detail("pairs", dm.condensed().len());
        Ok(())
    }

    /// Label reported for never-violent cells that sit outside the clustering.
    fn never_violent_label(&self, assign: &ClusterAssignment) -> Option<u32> {
        self.cfg
            .sequences
            .drop_never_violent
            .then_some(assign.k() + 1)
    }

    fn cluster(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let dm = distbin::read(&self.require(ctx, Stage::Distances, "distances.bin")?)?;
        let k = self.cfg.cluster.k;
        if k > dm.n() {
            return Err(Error::Config(vec![format!(
                "cluster.k = {k} exceeds the {} sequences",
                dm.n()
            )]));
        }
        let dg = ward_linkage(&dm)?;
        let assign = cut(&dg, k, dm.labels())?;
        let grid = self.cfg.grid.to_grid()?;
        let out = [
            dir.join("merges.csv"),
            dir.join("dendrogram.nwk"),
            dir.join("clusters.csv"),
            dir.join("clusters.geojson"),
        ];
        tables::write_merges(&out[0], &dg)?;
        write_text(&out[1], &newick::to_newick(&dg, dm.labels()))?;
        tables::write_clusters(&out[2], &assign)?;
        geojson::write(
            &out[3],
            &geojson::clusters(&grid, &assign, self.never_violent_label(&assign)),
        )?;
        for c in 1..=assign.k() {
            ctx.detail(&format!("cluster_{c}_size"), assign.cluster_size(c));
        }
        ctx.outputs.extend(out);
        Ok(())
    }

    fn reading(&self) -> (StartReading, &'static str) {
        let name = match self.cfg.stats.start_reading {
            StartReadingName::FirstViolent => "first_violent",
            StartReadingName::InitialState => "initial_state",
            StartReadingName::SpellStarts => "spell_starts",
        };
        (self.cfg.stats.reading(), name)
    }

    fn stats(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let seqs = self.read_sequences(ctx)?;
        let assign = tables::read_clusters(&self.require(ctx, Stage::Cluster, "clusters.csv")?)?;
        let (reading, reading_name) = self.reading();
        let mut rows = vec![overall_summary(&seqs, reading)?];
        for c in 1..=assign.k() {
            rows.push(trajectory_summary_with(&seqs, &assign, c, reading)?);
        }
        let mut hits = Vec::new();
        for s in &rows {
            let group = s
                .cluster
                .map_or_else(|| "all".to_string(), |c| c.to_string());
            let (rates, counts) = (
                dir.join(format!("transitions_{group}.csv")),
                dir.join(format!("counts_{group}.csv")),
            );
            tables::write_transition_rates(&rates, &s.transitions)?;
            tables::write_transition_counts(&counts, &s.transitions)?;
            ctx.outputs.extend([rates, counts]);
            hits.push((group, hitting_times(&s.transitions)?));
        }
        let (summary, columns, ht) = (
            dir.join("summary.csv"),
            dir.join("summary_columns.csv"),
            dir.join("hitting_times.csv"),
        );
        tables::write_summary(&summary, &rows, reading_name)?;
        tables::write_summary_columns(&columns)?;
        tables::write_hitting_times(&ht, &hits)?;
        ctx.outputs.extend([summary, columns, ht]);
        Ok(())
    }

    fn joins(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let mut assign =
            tables::read_clusters(&self.require(ctx, Stage::Cluster, "clusters.csv")?)?;
        let include_nv =
            self.cfg.joins.include_never_violent && self.cfg.sequences.drop_never_violent;
        if include_nv {
            let grid = self.cfg.grid.to_grid()?;
            let nv = assign.k() + 1;
            let mut cells: Vec<CellId> = assign.cells().to_vec();
            let mut labels: Vec<u32> = assign.labels().to_vec();
            for cell in grid.cells().filter(|c| assign.label_of(*c).is_none()) {
                cells.push(cell);
                labels.push(nv);
            }
            if labels.len() > assign.cells().len() {
                assign = ClusterAssignment::new(cells, labels, nv)?;
            }
        }
        let w = build_weights(assign.cells(), self.cfg.joins.scheme())?;
        let labels = node_labels(&assign, &w)?;
        let report = join_counts_for_labels(&labels, &w)?;
        let perms = if self.cfg.joins.permutations > 0 {
            let seed = derive_seed(self.cfg.seed, "joins");
            ctx.detail("derived_seed", seed);
            Some(parallel::permutation_report(
                &labels,
                &w,
                self.cfg.joins.permutations,
                seed,
                &self.pool()?,
            )?)
        } else {
            None
        };
        let (matrix, long) = (dir.join("joins_matrix.csv"), dir.join("joins_long.csv"));
        tables::write_joins_matrix(&matrix, &report)?;
        tables::write_joins_long(&long, &report, perms.as_ref())?;
        ctx.detail("cells", w.n());
        ctx.detail("joins", report.total_joins);
        ctx.detail(
            "contiguity",
            format!("{:?}", self.cfg.joins.scheme()).to_lowercase(),
        );
        ctx.detail("permutations", self.cfg.joins.permutations);
        ctx.outputs.extend([matrix, long]);
        Ok(())
    }

    /// Copies the table and map datasets into one directory with an index.
    fn report(&self, ctx: &mut Ctx, dir: &Path) -> Result<()> {
        let assign = tables::read_clusters(&self.require(ctx, Stage::Cluster, "clusters.csv")?)?;
        let mut files: Vec<(Stage, String, &str)> = vec![
            (
                Stage::Stats,
                "summary.csv".into(),
                "trajectory summary per type and for all cells",
            ),
            (
                Stage::Stats,
                "summary_columns.csv".into(),
                "definition of each summary column",
            ),
            (
                Stage::Stats,
                "hitting_times.csv".into(),
                "expected years to reach NC from each state",
            ),
            (
                Stage::Stats,
                "transitions_all.csv".into(),
                "transition rates over all clustered sequences",
            ),
        ];
        for c in 1..=assign.k() {
            files.push((
                Stage::Stats,
                format!("transitions_{c}.csv"),
                "transition rates within one type",
            ));
        }
        files.extend([
            (
                Stage::Joins,
                "joins_matrix.csv".into(),
                "pairwise join-count z-scores",
            ),
            (
                Stage::Joins,
                "joins_long.csv".into(),
                "join counts with moments and permutation p-values",
            ),
            (
                Stage::Cluster,
                "clusters.geojson".into(),
                "trajectory type per cell",
            ),
            (Stage::Cluster, "dendrogram.nwk".into(), "Ward tree"),
            (
                Stage::Classify,
                "states.geojson".into(),
                "conflict state per cell and year",
            ),
        ]);
        let mut index = String::from("# Conflict trajectory report\n\n");
        index.push_str(&format!("Types: {}\n\n", assign.k()));
        for c in 1..=assign.k() {
            index.push_str(&format!("- type {c}: {} cells\n", assign.cluster_size(c)));
        }
        if let Some(nv) = self.never_violent_label(&assign) {
            let n_nv = self.cfg.grid.to_grid()?.n_cells() - assign.cells().len();
            if n_nv > 0 {
                index.push_str(&format!(
                    "- type {nv}: {n_nv} never-violent cells (not clustered)\n"
                ));
            }
        }
        index.push_str("\n| file | content |\n|---|---|\n");
        for (stage, name, about) in &files {
            let src = self.require(ctx, *stage, name)?;
            let dst = dir.join(name);
            std::fs::copy(&src, &dst).map_err(|e| Error::io(&dst, e))?;
            ctx.outputs.push(dst);
            index.push_str(&format!("| {name} | {about} |\n"));
        }
        let idx = dir.join("index.md");
        write_text(&idx, &index)?;
        ctx.outputs.push(idx);
        Ok(())
    }
}

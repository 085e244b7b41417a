//! Seeded synthetic scenarios: per-region Markov chains over the five states,
//! rendered as point events whose counts and layouts match each planted
//! state's intensity and concentration.

use std::collections::BTreeMap;
use std::io::Write;

use conflict_seq_core::chains::hitting_times;
use conflict_seq_core::grid::CivilDate;
use conflict_seq_core::seqcore::TransitionMatrix;
use conflict_seq_core::{
    CellId, EventRecord, EventSet, EventType, GridSpec, StateSymbol, N_STATES,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{GridConfig, SpanConfig};
use crate::error::{Error, Result};

/// Event count range and spatial layout of one violent state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateParams {
    pub count_min: u32,
    pub count_max: u32,
    /// Clustered states: standard deviation of points around the hotspot, as
    /// a fraction of the cell size. Dispersed states: jitter around lattice
    /// positions, as a fraction of the lattice spacing.
    pub spread: f64,
}

fn default_states() -> BTreeMap<String, StateParams> {
    [
        (
            "CL",
            StateParams {
                count_min: 2,
                count_max: 4,
                spread: 0.02,
            },
        ),
        (
            "CH",
            StateParams {
                count_min: 12,
                count_max: 20,
                spread: 0.02,
            },
        ),
        (
            "DL",
            StateParams {
                count_min: 1,
                count_max: 4,
                spread: 0.1,
            },
        ),
        (
            "DH",
            StateParams {
                count_min: 12,
                count_max: 20,
                spread: 0.1,
            },
        ),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn default_event_type() -> String {
    "Battles".into()
}

/// A rectangular block of cells driven by one chain. Ranges are half-open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    pub cols: [u32; 2],
    pub rows: [u32; 2],
    /// Distribution of the first year's state; defaults to NC.
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
    /// `transitions[from][to]` probabilities; a missing row stays put.
    pub transitions: BTreeMap<String, BTreeMap<String, f64>>,
}

fn symbol(key: &str) -> Result<StateSymbol> {
    key.parse()
        .map_err(|_| Error::Config(vec![format!("unknown state {key:?} in scenario")]))
}

impl RegionConfig {
    pub fn chain(&self) -> Result<TransitionMatrix> {
        let mut p = [[0.0; N_STATES]; N_STATES];
        for s in StateSymbol::ALL {
            p[s.index()][s.index()] = 1.0;
        }
        for (from, row) in &self.transitions {
            let i = symbol(from)?.index();
            p[i] = [0.0; N_STATES];
            for (to, &v) in row {
                p[i][symbol(to)?.index()] = v;
            }
        }
        TransitionMatrix::from_probs(p)
            .map_err(|e| Error::Config(vec![format!("region {}: {e}", self.name)]))
    }

    pub fn initial_distribution(&self) -> Result<[f64; N_STATES]> {
        let mut d = [0.0; N_STATES];
        if self.initial.is_empty() {
            d[StateSymbol::NC.index()] = 1.0;
            return Ok(d);
        }
        for (k, &v) in &self.initial {
            d[symbol(k)?.index()] = v;
        }
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-9 || d.iter().any(|&v| v < 0.0) {
            return Err(Error::Config(vec![format!(
                "region {}: initial distribution sums to {total}",
                self.name
            )]));
        }
        Ok(d)
    }

    pub fn contains(&self, cell: CellId) -> bool {
        (self.cols[0]..self.cols[1]).contains(&cell.col)
            && (self.rows[0]..self.rows[1]).contains(&cell.row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub span: SpanConfig,
    #[serde(default = "default_event_type")]
    pub event_type: String,
    #[serde(default = "default_states")]
    pub states: BTreeMap<String, StateParams>,
    pub regions: Vec<RegionConfig>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![format!("scenario: {e}")]))
    }

    fn params(&self, s: StateSymbol) -> Result<StateParams> {
        let p = self
            .states
            .get(s.as_str())
            .copied()
            .or_else(|| default_states().get(s.as_str()).copied())
            .expect("defaults cover every violent state");
        let clustered = matches!(s, StateSymbol::CL | StateSymbol::CH);
        if p.count_min > p.count_max
            || p.count_min == 0
            || (clustered && p.count_min < 2)
            || !(p.spread >= 0.0)
        {
            return Err(Error::Config(vec![format!(
                "state {s}: invalid parameters {p:?}"
            )]));
        }
        Ok(p)
    }
}

/// Planted truth for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCell {
    pub cell: CellId,
    /// Index into the scenario's regions; `None` for cells outside every region.
    pub region: Option<usize>,
    pub states: Vec<StateSymbol>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub events: EventSet,
    /// Raw event-type label written for every event.
    pub event_label: String,
    pub truth: Vec<PlantedCell>,
    pub warnings: Vec<String>,
}

fn draw_state(rng: &mut impl Rng, probs: &[f64; N_STATES]) -> StateSymbol {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return StateSymbol::ALL[i];
        }
    }
    // rounding leaves u above the last cumulative sum: take the last supported state
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    StateSymbol::ALL[last]
}

/// Places `n` points inside `cell` following `state`'s layout.
fn place_points(
    rng: &mut ChaCha20Rng,
    grid: &GridSpec,
    cell: CellId,
    state: StateSymbol,
    n: usize,
    params: StateParams,
) -> Vec<(f64, f64)> {
    let cs = grid.cell_size;
    let (x0, y0) = grid.cell_origin(cell);
    let eps = cs * 1e-6;
    let clamp = |v: f64, lo: f64| v.clamp(lo + eps, lo + cs - eps);
    match state {
        StateSymbol::CL | StateSymbol::CH => {
            let cx = x0 + rng.random_range(0.25..0.75) * cs;
            let cy = y0 + rng.random_range(0.25..0.75) * cs;
            let normal =
                Normal::new(0.0, params.spread * cs).expect("spread is finite and non-negative");
            (0..n)
                .map(|_| {
                    (
                        clamp(cx + normal.sample(rng), x0),
                        clamp(cy + normal.sample(rng), y0),
                    )
                })
                .collect()
        }
        _ => {
            // distinct cells of a g×g lattice, jittered
            let g = (n as f64).sqrt().ceil() as usize;
            let step = cs / g as f64;
            sample(rng, g * g, n)
                .into_iter()
                .map(|k| {
                    let (gx, gy) = ((k % g) as f64, (k / g) as f64);
                    let jx = rng.random_range(-1.0..=1.0) * params.spread * step;
                    let jy = rng.random_range(-1.0..=1.0) * params.spread * step;
                    (
                        clamp(x0 + (gx + 0.5) * step + jx, x0),
                        clamp(y0 + (gy + 0.5) * step + jy, y0),
                    )
                })
                .collect()
        }
    }
}

/// Generates the scenario deterministically from `seed`.
///
/// Cells are visited in row-major order and years in order, all from one
/// ChaCha20 stream.
pub fn generate_synthetic(scenario: &ScenarioConfig, seed: u64) -> Result<Synthetic> {
    let grid = scenario.grid.to_grid()?;
    let (year_min, year_max) = (scenario.span.year_min, scenario.span.year_max);
    let event_label = scenario.event_type.clone();
    let event_type = EventType::from_label(&event_label);

    let mut chains = Vec::with_capacity(scenario.regions.len());
    let mut warnings = Vec::new();
    for region in &scenario.regions {
        let tm = region.chain()?;
        let init = region.initial_distribution()?;
        let h = hitting_times(&tm)?;
        // violent states reachable from the initial distribution
        let mut reach = init.map(|p| p > 0.0);
        loop {
            let before = reach;
            for i in 0..N_STATES {
                if reach[i] {
                    for j in 0..N_STATES {
                        reach[j] |= tm.probs[i][j] > 0.0;
                    }
                }
            }
            if before == reach {
                break;
            }
        }
        for s in StateSymbol::ALL
            .into_iter()
            .filter(|s| s.is_violent() && reach[s.index()])
        {
            if h.get(s).is_infinite() {
                warnings.push(format!(
                    "region {}: NC is unreachable from {s}; its stopping time will be infinite",
                    region.name
                ));
            }
        }
        chains.push((tm, init));
    }
    let params: BTreeMap<StateSymbol, StateParams> = StateSymbol::ALL
        .into_iter()
        .filter(|s| s.is_violent())
        .map(|s| scenario.params(s).map(|p| (s, p)))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut truth = Vec::with_capacity(grid.n_cells());
    let mut records = Vec::new();
    let n_years = (year_max - year_min + 1).max(0) as usize;
    for cell in grid.cells() {
        let region = scenario.regions.iter().position(|r| r.contains(cell));
        let states: Vec<StateSymbol> = match region {
            None => vec![StateSymbol::NC; n_years],
            Some(r) => {
                let (tm, init) = &chains[r];
                let mut s = draw_state(&mut rng, init);
                let mut out = Vec::with_capacity(n_years);
                for t in 0..n_years {
                    if t > 0 {
                        s = draw_state(&mut rng, &tm.probs[s.index()]);
                    }
                    out.push(s);
                }
                out
            }
        };
        for (t, &s) in states.iter().enumerate() {
            if !s.is_violent() {
                continue;
            }
            let p = params[&s];
            let n = rng.random_range(p.count_min..=p.count_max) as usize;
            let year = year_min + t as i32;
            for (x, y) in place_points(&mut rng, &grid, cell, s, n, p) {
                let date = CivilDate::new(year, rng.random_range(1..=12), rng.random_range(1..=28))
                    .expect("day ≤ 28 is always valid");
                let id = format!("SYN{}", records.len() + 1);
                records.push(EventRecord::new(id, date, x, y, event_type)?);
            }
        }
        truth.push(PlantedCell {
            cell,
            region,
            states,
        });
    }
    let (events, rejects) = EventSet::build(grid, year_min, year_max, records)?;
    if let Some(r) = rejects.first() {
        return Err(Error::Other(format!(
            "synthetic event fell outside the grid: {}",
            r.error
        )));
    }
    Ok(Synthetic {
        events,
        event_label,
        truth,
        warnings,
    })
}

/// Writes events in the default ingest column layout.
pub fn write_events_csv<W: Write>(syn: &Synthetic, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let path = "<synthetic events>";
    w.write_record([
        "event_id_cnty",
        "event_date",
        "year",
        "event_type",
        "latitude",
        "longitude",
    ])
    .map_err(|e| Error::csv(path, e))?;
    for rec in syn.events.records() {
        w.write_record([
            rec.id.clone(),
            rec.date.to_string(),
            rec.year().to_string(),
            syn.event_label.clone(),
            rec.y.to_string(),
            rec.x.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes planted states as `cell_col,cell_row,region,year,state`.
pub fn write_truth_csv<W: Write>(syn: &Synthetic, scenario: &ScenarioConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let path = "<synthetic truth>";
    w.write_record(["cell_col", "cell_row", "region", "year", "state"])
        .map_err(|e| Error::csv(path, e))?;
    for pc in &syn.truth {
        let region = pc
            .region
            .map(|r| scenario.regions[r].name.as_str())
            .unwrap_or("");
        for (t, s) in pc.states.iter().enumerate() {
            let year = scenario.span.year_min + t as i32;
            w.write_record([
                pc.cell.col.to_string(),
                pc.cell.row.to_string(),
                region.to_string(),
                year.to_string(),
                s.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

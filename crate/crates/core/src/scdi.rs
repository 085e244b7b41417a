//! Five-state classification of cell-years by event intensity and spatial
//! concentration.
//!
//! Intensity is HIGH when a cell-year holds more events than the mean count
//! over all violent cell-years. Concentration uses the Clark–Evans nearest
//! neighbour index against a complete-spatial-randomness expectation over the
//! cell's area; an index below 1 is CLUSTERED.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{CellId, EventSet, GridSpec};
use crate::{Error, Result, StateSymbol};

/// Scope over which the intensity mean is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdScope {
    /// One mean over the whole study area and span.
    #[default]
    Global,
    /// A separate mean for each year.
    PerYear,
}

/// Concentration assigned to a cell-year with a single event, where the
/// nearest neighbour index is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingleEventRule {
    #[default]
    Dispersed,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScdiOptions {
    pub threshold_scope: ThresholdScope,
    pub single_event: SingleEventRule,
}

/// Dense cell × year lattice of state symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    grid: GridSpec,
    year_min: i32,
    year_max: i32,
    /// Row-major by cell linear index, then year.
    states: Vec<StateSymbol>,
    /// Intensity threshold applied in each year; `None` for years without
    /// any violent cell (only possible under [`ThresholdScope::PerYear`] or an
    /// all-NC field).
    thresholds: Vec<Option<f64>>,
}

impl StateField {
    /// A field where every cell-year is NC.
    pub fn all_nc(grid: GridSpec, year_min: i32, year_max: i32) -> Self {
        let n_years = (year_max - year_min + 1) as usize;
        StateField {
            states: vec![StateSymbol::NC; grid.n_cells() * n_years],
            thresholds: vec![None; n_years],
            grid,
            year_min,
            year_max,
        }
    }

    /// Builds a field from explicit states (row-major by cell, then year).
    pub fn from_states(
        grid: GridSpec,
        year_min: i32,
        year_max: i32,
        states: Vec<StateSymbol>,
        thresholds: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n_years = (year_max - year_min + 1).max(0) as usize;
        if n_years == 0 || states.len() != grid.n_cells() * n_years || thresholds.len() != n_years {
            return Err(Error::InvalidArgument(alloc::format!(
                "state lattice has {} entries and {} thresholds; expected {} and {n_years}",
                states.len(),
                thresholds.len(),
                grid.n_cells() * n_years
            )));
        }
        Ok(StateField {
            grid,
            year_min,
            year_max,
            states,
            thresholds,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn year_min(&self) -> i32 {
        self.year_min
    }
    pub fn year_max(&self) -> i32 {
        self.year_max
    }
    pub fn n_years(&self) -> usize {
        (self.year_max - self.year_min + 1) as usize
    }

    pub fn get(&self, cell: CellId, year: i32) -> Option<StateSymbol> {
        if !self.grid.contains(cell) || year < self.year_min || year > self.year_max {
            return None;
        }
        Some(self.states[self.offset(cell, year)])
    }

    /// The full year-ordered series of one cell.
    pub fn series(&self, cell: CellId) -> &[StateSymbol] {
        let t = self.n_years();
        let start = self.grid.linear_index(cell) * t;
        &self.states[start..start + t]
    }

    pub fn states(&self) -> &[StateSymbol] {
        &self.states
    }

    /// Global threshold when all years share one, else the first defined one.
    pub fn threshold(&self) -> Option<f64> {
        self.thresholds.iter().flatten().copied().next()
    }

    pub fn year_thresholds(&self) -> &[Option<f64>] {
        &self.thresholds
    }

    fn offset(&self, cell: CellId, year: i32) -> usize {
        self.grid.linear_index(cell) * self.n_years() + (year - self.year_min) as usize
    }
}

/// Points of one cell-year, keyed by (cell linear index, year).
type CellYearPoints = BTreeMap<(usize, i32), Vec<(f64, f64)>>;

fn group_by_cell_year(events: &EventSet) -> CellYearPoints {
    let grid = events.grid();
    let mut groups: CellYearPoints = BTreeMap::new();
    for (rec, cell) in events.iter() {
        groups
            .entry((grid.linear_index(cell), rec.year()))
            .or_default()
            .push((rec.x, rec.y));
    }
    groups
}

/// Mean event count over all cell-years with at least one event.
pub fn intensity_threshold(events: &EventSet) -> Result<f64> {
    let groups = group_by_cell_year(events);
    mean_count(groups.values().map(|v| v.len()))
}

fn mean_count(counts: impl Iterator<Item = usize>) -> Result<f64> {
    let (sum, n) = counts.fold((0usize, 0usize), |(s, n), c| (s + c, n + 1));
    if n == 0 {
        return Err(Error::NoViolentCellYears);
    }
    Ok(sum as f64 / n as f64)
}

/// Clark–Evans ratio: mean observed nearest-neighbour distance over the
/// CSR expectation `0.5 · sqrt(area / n)`.
///
/// Returns `None` for fewer than two points or a non-positive area.
pub fn nearest_neighbor_index(points: &[(f64, f64)], cell_area: f64) -> Option<f64> {
    let n = points.len();
    if n < 2 || !(cell_area > 0.0) {
        return None;
    }
    let mut total = 0.0;
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (j, &(xj, yj)) in points.iter().enumerate() {
            if i != j {
                let d2 = (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj);
                if d2 < best {
                    best = d2;
                }
            }
        }
        total += libm::sqrt(best);
    }
    let observed = total / n as f64;
    let expected = 0.5 * libm::sqrt(cell_area / n as f64);
    Some(observed / expected)
}

/// Classifies one cell-year with the default single-event rule.
///
/// `count == threshold` is LOW; `nni < 1.0` (strict) is CLUSTERED; a missing
/// index is DISPERSED.
pub fn classify_cell_year(count: usize, threshold: f64, nni: Option<f64>) -> StateSymbol {
    classify_with(count, threshold, nni, SingleEventRule::Dispersed)
}

pub fn classify_with(
    count: usize,
    threshold: f64,
    nni: Option<f64>,
    single: SingleEventRule,
) -> StateSymbol {
    if count == 0 {
        return StateSymbol::NC;
    }
    let high = count as f64 > threshold;
    let clustered = match nni {
        Some(v) => v < 1.0,
        None => single == SingleEventRule::Clustered,
    };
    StateSymbol::from_axes(clustered, high)
}

/// Classifies every cell-year of the event set's grid and span.
pub fn build_state_field(events: &EventSet) -> Result<StateField> {
    build_state_field_with(events, ScdiOptions::default())
}

pub fn build_state_field_with(events: &EventSet, opts: ScdiOptions) -> Result<StateField> {
    let grid = events.grid().clone();
    let (year_min, year_max) = (events.year_min(), events.year_max());
    if events.is_empty() {
        return Ok(StateField::all_nc(grid, year_min, year_max));
    }
    let groups = group_by_cell_year(events);
    let n_years = events.n_years();
    let thresholds: Vec<Option<f64>> = match opts.threshold_scope {
        ThresholdScope::Global => {
            let t = mean_count(groups.values().map(|v| v.len()))?;
            vec![Some(t); n_years]
        }
        ThresholdScope::PerYear => (0..n_years)
            .map(|k| {
                let year = year_min + k as i32;
                mean_count(
                    groups
                        .iter()
                        .filter(|((_, y), _)| *y == year)
                        .map(|(_, v)| v.len()),
                )
                .ok()
            })
            .collect(),
    };

    let mut field = StateField::all_nc(grid, year_min, year_max);
    field.thresholds = thresholds;
    let area = field.grid.cell_area();
    for (&(cell_idx, year), points) in &groups {
        let k = (year - year_min) as usize;
        let threshold = field.thresholds[k].ok_or(Error::NoViolentCellYears)?;
        let nni = nearest_neighbor_index(points, area);
        field.states[cell_idx * n_years + k] =
            classify_with(points.len(), threshold, nni, opts.single_event);
    }
    Ok(field)
}

//! Event records, the analysis grid and point-to-cell assignment.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::{Error, Result};

/// Event categories carried by conflict event exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventType {
    Battle,
    ExplosionRemoteViolence,
    ViolenceAgainstCivilians,
    Riot,
    Protest,
    StrategicDevelopment,
    Other,
}

impl EventType {
    pub const ALL: [EventType; 7] = [
        EventType::Battle,
        EventType::ExplosionRemoteViolence,
        EventType::ViolenceAgainstCivilians,
        EventType::Riot,
        EventType::Protest,
        EventType::StrategicDevelopment,
        EventType::Other,
    ];

    /// The three violent categories retained by default.
    pub const VIOLENT: [EventType; 3] = [
        EventType::Battle,
        EventType::ExplosionRemoteViolence,
        EventType::ViolenceAgainstCivilians,
    ];

    pub const fn as_str(self) -> &'static str {
        match self {
            EventType::Battle => "battle",
            EventType::ExplosionRemoteViolence => "explosion_remote_violence",
            EventType::ViolenceAgainstCivilians => "violence_against_civilians",
            EventType::Riot => "riot",
            EventType::Protest => "protest",
            EventType::StrategicDevelopment => "strategic_development",
            EventType::Other => "other",
        }
    }

    /// Canonical names plus the spellings used by ACLED exports.
    ///
    /// Matching against these is case-insensitive; see [`EventType::from_label`].
    pub const fn default_aliases(self) -> &'static [&'static str] {
        match self {
            EventType::Battle => &["battle", "battles"],
            EventType::ExplosionRemoteViolence => &[
                "explosion_remote_violence",
                "explosions/remote violence",
                "explosions and remote violence",
                "remote violence",
            ],
            EventType::ViolenceAgainstCivilians => {
                &["violence_against_civilians", "violence against civilians"]
            }
            EventType::Riot => &["riot", "riots"],
            EventType::Protest => &["protest", "protests"],
            EventType::StrategicDevelopment => &[
                "strategic_development",
                "strategic developments",
                "strategic development",
            ],
            EventType::Other => &["other"],
        }
    }

    /// Resolves a label through the default alias table. Unknown labels map to
    /// [`EventType::Other`].
    pub fn from_label(label: &str) -> EventType {
        let label = label.trim();
        for ty in Self::ALL {
            if ty
                .default_aliases()
                .iter()
                .any(|a| a.eq_ignore_ascii_case(label))
            {
                return ty;
            }
        }
        EventType::Other
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A proleptic Gregorian calendar date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    year: i32,
    month: u8,
    day: u8,
}

impl CivilDate {
    pub fn new(year: i32, month: u8, day: u8) -> Option<Self> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        Some(CivilDate { year, month, day })
    }

    pub fn year(self) -> i32 {
        self.year
    }
    pub fn month(self) -> u8 {
        self.month
    }
    pub fn day(self) -> u8 {
        self.day
    }
}

impl fmt::Display for CivilDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        _ => 28,
    }
}

/// One georeferenced event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub id: String,
    pub date: CivilDate,
    pub x: f64,
    pub y: f64,
    pub event_type: EventType,
}

impl EventRecord {
    pub fn new(id: String, date: CivilDate, x: f64, y: f64, event_type: EventType) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "event {id}: coordinates ({x}, {y}) are not finite"
            )));
        }
        Ok(EventRecord {
            id,
            date,
            x,
            y,
            event_type,
        })
    }

    #[inline]
    pub fn year(&self) -> i32 {
        self.date.year
    }
}

/// Column/row address of a grid cell.
///
/// Ordered row-major, matching [`GridSpec::linear_index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId {
    pub col: u32,
    pub row: u32,
}

impl CellId {
    pub const fn new(col: u32, row: u32) -> Self {
        CellId { col, row }
    }
}

impl Ord for CellId {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.row, self.col).cmp(&(other.row, other.col))
    }
}

impl PartialOrd for CellId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Axis-aligned square grid in the input coordinate space.
///
/// Cells are half-open: a cell covers `[x0, x0 + cell_size) × [y0, y0 + cell_size)`.
/// Degree-based grids are not equal-area; project inputs beforehand when that
/// matters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_cols: u32,
    pub n_rows: u32,
    /// Free-form description of the coordinate space, e.g. "EPSG:4326".
    pub coordinate_space: String,
}

impl GridSpec {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        cell_size: f64,
        n_cols: u32,
        n_rows: u32,
    ) -> Result<Self> {
        let g = GridSpec {
            origin_x,
            origin_y,
            cell_size,
            n_cols,
            n_rows,
            coordinate_space: String::from("unspecified"),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::InvalidGrid("cell_size must be positive and finite"));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite"));
        }
        if self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::InvalidGrid(
                "grid needs at least one column and one row",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_cols as usize * self.n_rows as usize
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    #[inline]
    pub fn linear_index(&self, cell: CellId) -> usize {
        cell.row as usize * self.n_cols as usize + cell.col as usize
    }

    pub fn cell_at(&self, index: usize) -> CellId {
        let n_cols = self.n_cols as usize;
        CellId::new((index % n_cols) as u32, (index / n_cols) as u32)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.n_cells()).map(|i| self.cell_at(i))
    }

    pub fn contains(&self, cell: CellId) -> bool {
        cell.col < self.n_cols && cell.row < self.n_rows
    }

    /// Lower-left corner of `cell`.
    pub fn cell_origin(&self, cell: CellId) -> (f64, f64) {
        (
            self.origin_x + cell.col as f64 * self.cell_size,
            self.origin_y + cell.row as f64 * self.cell_size,
        )
    }

    /// Closed ring (five vertices, counter-clockwise) outlining `cell`.
    pub fn cell_ring(&self, cell: CellId) -> [(f64, f64); 5] {
        let (x0, y0) = self.cell_origin(cell);
        let (x1, y1) = (x0 + self.cell_size, y0 + self.cell_size);
        [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    }

    /// Maps a point to its cell with the left/bottom-inclusive floor rule.
    pub fn assign(&self, x: f64, y: f64) -> Result<CellId> {
        let fx = libm::floor((x - self.origin_x) / self.cell_size);
        let fy = libm::floor((y - self.origin_y) / self.cell_size);
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.n_cols as f64 && fy < self.n_rows as f64) {
            return Err(Error::OutOfBounds { x, y });
        }
        Ok(CellId::new(fx as u32, fy as u32))
    }
}

/// Assigns an event to the grid cell containing it.
pub fn assign_cell(event: &EventRecord, grid: &GridSpec) -> Result<CellId> {
    grid.assign(event.x, event.y)
}

/// Retained events together with their grid cells and the study span.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSet {
    records: Vec<EventRecord>,
    cells: Vec<CellId>,
    grid: GridSpec,
    year_min: i32,
    year_max: i32,
}

/// An event that could not be placed in an [`EventSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    /// Position of the record in the input passed to [`EventSet::build`].
    pub index: usize,
    pub error: Error,
}

impl EventSet {
    /// Builds a set from already-filtered records, assigning every record to
    /// its cell.
    ///
    /// Records outside the span or the grid are returned as rejects, in input
    /// order, rather than dropped.
    pub fn build(
        grid: GridSpec,
        year_min: i32,
        year_max: i32,
        records: impl IntoIterator<Item = EventRecord>,
    ) -> Result<(Self, Vec<Rejected>)> {
        grid.validate()?;
        if year_min > year_max {
            return Err(Error::InvalidArgument(alloc::format!(
                "year span {year_min}..={year_max} is empty"
            )));
        }
        let mut set = EventSet {
            records: Vec::new(),
            cells: Vec::new(),
            grid,
            year_min,
            year_max,
        };
        let mut rejects = Vec::new();
        for (index, rec) in records.into_iter().enumerate() {
            if rec.year() < year_min || rec.year() > year_max {
                rejects.push(Rejected {
                    index,
                    error: Error::InvalidArgument(alloc::format!(
                        "year {} outside {year_min}..={year_max}",
                        rec.year()
                    )),
                });
                continue;
            }
            match assign_cell(&rec, &set.grid) {
                Ok(cell) => {
                    set.records.push(rec);
                    set.cells.push(cell);
                }
                Err(error) => rejects.push(Rejected { index, error }),
            }
        }
        Ok((set, rejects))
    }

    /// An empty set over `grid` and the given span.
    pub fn empty(grid: GridSpec, year_min: i32, year_max: i32) -> Result<Self> {
        Self::build(grid, year_min, year_max, core::iter::empty()).map(|(s, _)| s)
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    /// Cell of each record, parallel to [`EventSet::records`].
    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EventRecord, CellId)> + '_ {
        self.records.iter().zip(self.cells.iter().copied())
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

    /// Number of years in the span, inclusive.
    pub fn n_years(&self) -> usize {
        (self.year_max - self.year_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(10.0, -5.0, 0.5, 4, 3).unwrap()
    }

    fn event(x: f64, y: f64) -> EventRecord {
        EventRecord::new(
            "e".into(),
            CivilDate::new(2010, 1, 1).unwrap(),
            x,
            y,
            EventType::Battle,
        )
        .unwrap()
    }

    #[test]
    fn centroid_maps_to_its_cell() {
        let g = grid();
        assert_eq!(
            assign_cell(&event(10.75, -4.25), &g).unwrap(),
            CellId::new(1, 1)
        );
    }

    #[test]
    fn origin_corner_is_cell_zero() {
        let g = grid();
        assert_eq!(
            assign_cell(&event(10.0, -5.0), &g).unwrap(),
            CellId::new(0, 0)
        );
    }

    #[test]
    fn shared_edge_goes_to_the_right() {
        // (10.5 - 10.0) / 0.5 = 1.0 exactly, floor = 1
        let g = grid();
        assert_eq!(
            assign_cell(&event(10.5, -5.0), &g).unwrap(),
            CellId::new(1, 0)
        );
        assert_eq!(
            assign_cell(&event(10.0, -4.5), &g).unwrap(),
            CellId::new(0, 1)
        );
    }

    #[test]
    fn outer_edges_are_exclusive() {
        let g = grid();
        assert!(matches!(
            assign_cell(&event(12.0, -4.0), &g),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            assign_cell(&event(11.0, -3.5), &g),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(assign_cell(&event(9.999, -4.0), &g).is_err());
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        let d = CivilDate::new(2010, 1, 1).unwrap();
        assert!(EventRecord::new("x".into(), d, f64::NAN, 0.0, EventType::Battle).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 0.0, 0.0, 1, 1).is_err());
        assert!(GridSpec::new(0.0, 0.0, -1.0, 1, 1).is_err());
        assert!(GridSpec::new(0.0, 0.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn dates_validate() {
        assert!(CivilDate::new(2024, 2, 29).is_some());
        assert!(CivilDate::new(2023, 2, 29).is_none());
        assert!(CivilDate::new(1900, 2, 29).is_none());
        assert!(CivilDate::new(2000, 2, 29).is_some());
        assert!(CivilDate::new(2010, 13, 1).is_none());
    }

    #[test]
    fn event_type_aliases() {
        assert_eq!(EventType::from_label("Battles"), EventType::Battle);
        assert_eq!(EventType::from_label("RIOTS"), EventType::Riot);
        assert_eq!(
            EventType::from_label("Explosions/Remote violence"),
            EventType::ExplosionRemoteViolence
        );
        assert_eq!(
            EventType::from_label("Violence against civilians"),
            EventType::ViolenceAgainstCivilians
        );
        assert_eq!(
            EventType::from_label("Strategic developments"),
            EventType::StrategicDevelopment
        );
        assert_eq!(EventType::from_label("something else"), EventType::Other);
    }

    #[test]
    fn event_set_rejects_out_of_span_and_out_of_grid() {
        let d = |y| CivilDate::new(y, 6, 1).unwrap();
        let recs = alloc::vec![
            EventRecord::new("a".into(), d(2010), 10.1, -4.9, EventType::Battle).unwrap(),
            EventRecord::new("b".into(), d(1990), 10.1, -4.9, EventType::Battle).unwrap(),
            EventRecord::new("c".into(), d(2010), 50.0, -4.9, EventType::Battle).unwrap(),
        ];
        let (set, rejects) = EventSet::build(grid(), 1997, 2024, recs).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.cells(), &[CellId::new(0, 0)]);
        assert_eq!(
            rejects.iter().map(|r| r.index).collect::<Vec<_>>(),
            alloc::vec![1, 2]
        );
        assert_eq!(set.len() + rejects.len(), 3);
    }

    #[test]
    fn linear_index_round_trip() {
        let g = grid();
        for (i, c) in g.cells().enumerate() {
            assert_eq!(g.linear_index(c), i);
        }
        let mut cells: alloc::vec::Vec<_> = g.cells().collect();
        let sorted = cells.clone();
        cells.sort();
        assert_eq!(cells, sorted);
    }
}

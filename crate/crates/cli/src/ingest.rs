//! CSV ingestion: column mapping, event-type filtering, span filtering and
//! cell assignment, with every unusable row reported.

use std::collections::BTreeSet;
use std::io::Read;

use chrono::{Datelike, NaiveDate};
use conflict_seq_core::grid::CivilDate;
use conflict_seq_core::{EventRecord, EventSet, EventType, GridSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input column names. Defaults follow ACLED exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub id: String,
    pub date: String,
    pub latitude: String,
    pub longitude: String,
    pub event_type: String,
    /// chrono format strings, tried in order.
    pub date_formats: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "event_id_cnty".into(),
            date: "event_date".into(),
            latitude: "latitude".into(),
            longitude: "longitude".into(),
            event_type: "event_type".into(),
            date_formats: vec![
                "%Y-%m-%d".into(),
                "%d %B %Y".into(),
                "%d-%b-%Y".into(),
                "%m/%d/%Y".into(),
            ],
        }
    }
}

/// Maps raw event-type labels onto [`EventType`], case-insensitively.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AliasTable {
    extra: Vec<(String, EventType)>,
}

impl AliasTable {
    pub fn with_alias(mut self, label: impl Into<String>, ty: EventType) -> Self {
        self.extra.push((label.into(), ty));
        self
    }

    pub fn resolve(&self, label: &str) -> EventType {
        let label = label.trim();
        self.extra
            .iter()
            .find(|(a, _)| a.eq_ignore_ascii_case(label))
            .map(|&(_, t)| t)
            .unwrap_or_else(|| EventType::from_label(label))
    }
}

/// Parses a canonical event-type name such as `battle`.
pub fn parse_event_type(name: &str) -> Option<EventType> {
    EventType::ALL
        .into_iter()
        .find(|t| t.as_str().eq_ignore_ascii_case(name.trim()))
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub columns: ColumnMap,
    pub aliases: AliasTable,
    pub filter: BTreeSet<EventType>,
    pub year_min: i32,
    pub year_max: i32,
    pub grid: GridSpec,
}

impl IngestOptions {
    /// Battles, explosions/remote violence and violence against civilians
    /// over 1997–2024.
    pub fn violent_defaults(grid: GridSpec) -> Self {
        IngestOptions {
            columns: ColumnMap::default(),
            aliases: AliasTable::default(),
            filter: EventType::VIOLENT.into_iter().collect(),
            year_min: 1997,
            year_max: 2024,
            grid,
        }
    }
}

/// A row that could not be used, with its 1-based data-row number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub events: EventSet,
    pub rejects: Vec<Reject>,
    /// Data rows read, excluding the header.
    pub rows: usize,
    /// Rows whose event type is outside the filter.
    pub excluded_type: usize,
    /// Rows of a retained type dated outside the span.
    pub excluded_span: usize,
}

impl IngestOutcome {
    /// `rows = retained + rejects + excluded_type + excluded_span`.
    pub fn is_balanced(&self) -> bool {
        self.events.len() + self.rejects.len() + self.excluded_type + self.excluded_span
            == self.rows
    }
}

pub fn parse_date(raw: &str, formats: &[String]) -> Option<CivilDate> {
    let raw = raw.trim();
    formats
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
        .and_then(|d| CivilDate::new(d.year(), d.month() as u8, d.day() as u8))
}

fn parse_coord(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads events from CSV, keeping only filtered types within the span.
///
/// Fails only when the header is unreadable or lacks a mapped column; every
/// bad row ends up in [`IngestOutcome::rejects`].
pub fn parse_events<R: Read>(reader: R, opts: &IngestOptions) -> Result<IngestOutcome> {
    if opts.filter.is_empty() {
        return Err(Error::Config(vec!["event-type filter is empty".into()]));
    }
    opts.grid.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Header(e.to_string()))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::Header(format!(
                    "column {name:?} not found in {:?}",
                    headers.iter().collect::<Vec<_>>()
                ))
            })
    };
    let c = &opts.columns;
    let (i_id, i_date, i_lat, i_lon, i_type) = (
        col(&c.id)?,
        col(&c.date)?,
        col(&c.latitude)?,
        col(&c.longitude)?,
        col(&c.event_type)?,
    );

    let mut records = Vec::new();
    let mut rejects = Vec::new();
    let mut row_of_record = Vec::new();
    let (mut rows, mut excluded_type, mut excluded_span) = (0, 0, 0);

    for (k, result) in rdr.records().enumerate() {
        let row = k + 1;
        rows += 1;
        let rec = match result {
            Ok(r) => r,
            Err(e) => {
                rejects.push(Reject {
                    row,
                    reason: format!("malformed CSV row: {e}"),
                });
                continue;
            }
        };
        let field = |i: usize| rec.get(i);
        let Some(label) = field(i_type) else {
            rejects.push(Reject {
                row,
                reason: "missing event type".into(),
            });
            continue;
        };
        let ty = opts.aliases.resolve(label);
        if !opts.filter.contains(&ty) {
            excluded_type += 1;
            continue;
        }
        let Some(date) = field(i_date).and_then(|d| parse_date(d, &c.date_formats)) else {
            rejects.push(Reject {
                row,
                reason: format!("unparseable date {:?}", field(i_date).unwrap_or("")),
            });
            continue;
        };
        let (Some(lat), Some(lon)) = (
            field(i_lat).and_then(parse_coord),
            field(i_lon).and_then(parse_coord),
        ) else {
            rejects.push(Reject {
                row,
                reason: format!(
                    "non-numeric coordinates ({:?}, {:?})",
                    field(i_lat).unwrap_or(""),
                    field(i_lon).unwrap_or("")
                ),
            });
            continue;
        };
        if date.year() < opts.year_min || date.year() > opts.year_max {
            excluded_span += 1;
            continue;
        }
        let id = field(i_id).unwrap_or("").to_string();
        records.push(EventRecord::new(id, date, lon, lat, ty)?);
        row_of_record.push(row);
    }

    let (events, out_of_grid) =
        EventSet::build(opts.grid.clone(), opts.year_min, opts.year_max, records)?;
    for r in out_of_grid {
        rejects.push(Reject {
            row: row_of_record[r.index],
            reason: r.error.to_string(),
        });
    }
    rejects.sort_by_key(|r| r.row);
    Ok(IngestOutcome {
        events,
        rejects,
        rows,
        excluded_type,
        excluded_span,
    })
}

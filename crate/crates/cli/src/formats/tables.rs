//! CSV tables: one writer per artifact and readers for the ones a later
//! stage consumes.

use std::path::Path;

use conflict_seq_core::chains::{HittingTimes, RatedTransition, TrajectorySummary};
use conflict_seq_core::cluster::{ClusterAssignment, Dendrogram};
use conflict_seq_core::grid::CivilDate;
use conflict_seq_core::om::DistanceMatrix;
use conflict_seq_core::scdi::StateField;
use conflict_seq_core::seqcore::{CostMatrix, SequenceSet, StateSequence, TransitionMatrix};
use conflict_seq_core::spatial::{JoinCountReport, JoinStat, PermutationReport, PermutationStat};
use conflict_seq_core::{CellId, EventRecord, EventSet, GridSpec, StateSymbol, N_STATES};

use super::{cell_label, fmt_f64, fmt_opt, parse_f64, CsvIn, CsvOut};
use crate::error::{Error, Result};
use crate::ingest::{parse_event_type, Reject};

const EVENT_COLS: [&str; 8] = [
    "id",
    "date",
    "year",
    "x",
    "y",
    "event_type",
    "cell_col",
    "cell_row",
];

pub fn write_events(path: &Path, events: &EventSet) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(EVENT_COLS)?;
    for (rec, cell) in events.iter() {
        w.row([
            rec.id.clone(),
            rec.date.to_string(),
            rec.year().to_string(),
            fmt_f64(rec.x),
            fmt_f64(rec.y),
            rec.event_type.as_str().to_string(),
            cell.col.to_string(),
            cell.row.to_string(),
        ])?;
    }
    w.finish()
}

fn parse_civil(raw: &str) -> Option<CivilDate> {
    let mut it = raw.trim().splitn(3, '-');
    let y = it.next()?.parse().ok()?;
    let m = it.next()?.parse().ok()?;
    let d = it.next()?.parse().ok()?;
    CivilDate::new(y, m, d)
}

/// Reads normalised events back into an [`EventSet`]. Any row that no longer
/// fits the grid or span is an error, since ingest already filtered them.
pub fn read_events(path: &Path, grid: GridSpec, year_min: i32, year_max: i32) -> Result<EventSet> {
    let mut r = CsvIn::open(path, &EVENT_COLS)?;
    let mut records = Vec::new();
    for (row, rec) in r.rows()? {
        let date =
            parse_civil(&rec[1]).ok_or_else(|| r.bad(row, format!("bad date {:?}", &rec[1])))?;
        let ty = parse_event_type(&rec[5])
            .ok_or_else(|| r.bad(row, format!("unknown event type {:?}", &rec[5])))?;
        let x: f64 = r.field(&rec, row, 3)?;
        let y: f64 = r.field(&rec, row, 4)?;
        records
            .push(EventRecord::new(rec[0].to_string(), date, x, y, ty).map_err(|e| r.bad(row, e))?);
    }
    let (set, rejects) = EventSet::build(grid, year_min, year_max, records)?;
    if let Some(rej) = rejects.first() {
        return Err(Error::format(
            path,
            format!("row {}: {}", rej.index + 1, rej.error),
        ));
    }
    Ok(set)
}

pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(["row", "reason"])?;
    for r in rejects {
        w.row([r.row.to_string(), r.reason.clone()])?;
    }
    w.finish()
}

const STATE_COLS: [&str; 4] = ["cell_col", "cell_row", "year", "state"];

/// Long format, every cell-year, cells in row-major order.
pub fn write_states(path: &Path, field: &StateField) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(STATE_COLS)?;
    for cell in field.grid().cells() {
        for (t, s) in field.series(cell).iter().enumerate() {
            w.row([
                cell.col.to_string(),
                cell.row.to_string(),
                (field.year_min() + t as i32).to_string(),
                s.as_str().to_string(),
            ])?;
        }
    }
    w.finish()
}

pub fn write_thresholds(path: &Path, field: &StateField) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(["year", "threshold"])?;
    for (t, th) in field.year_thresholds().iter().enumerate() {
        w.row([(field.year_min() + t as i32).to_string(), fmt_opt(*th)])?;
    }
    w.finish()
}

pub fn read_states(
    states_path: &Path,
    thresholds_path: &Path,
    grid: GridSpec,
    year_min: i32,
    year_max: i32,
) -> Result<StateField> {
    let n_years = (year_max - year_min + 1).max(0) as usize;
    let mut states = vec![None; grid.n_cells() * n_years];
    let mut r = CsvIn::open(states_path, &STATE_COLS)?;
    for (row, rec) in r.rows()? {
        let cell = CellId::new(r.field(&rec, row, 0)?, r.field(&rec, row, 1)?);
        let year: i32 = r.field(&rec, row, 2)?;
        let s: StateSymbol = r.field(&rec, row, 3)?;
        if !grid.contains(cell) || year < year_min || year > year_max {
            return Err(r.bad(
                row,
                format!("cell {cell} / year {year} is outside the configured grid and span"),
            ));
        }
        let slot = &mut states[grid.linear_index(cell) * n_years + (year - year_min) as usize];
        if slot.replace(s).is_some() {
            return Err(r.bad(row, format!("duplicate entry for cell {cell}, year {year}")));
        }
    }
    let missing = states.iter().filter(|s| s.is_none()).count();
    if missing > 0 {
        return Err(Error::format(
            states_path,
            format!("{missing} cell-years are missing"),
        ));
    }
    let mut thresholds = vec![None; n_years];
    let mut r = CsvIn::open(thresholds_path, &["year", "threshold"])?;
    for (row, rec) in r.rows()? {
        let year: i32 = r.field(&rec, row, 0)?;
        if year < year_min || year > year_max {
            return Err(r.bad(row, format!("year {year} outside the span")));
        }
        thresholds[(year - year_min) as usize] = parse_f64(&rec[1]);
    }
    Ok(StateField::from_states(
        grid,
        year_min,
        year_max,
        states.into_iter().flatten().collect(),
        thresholds,
    )?)
}

const SEQ_COLS: [&str; 3] = ["cell_col", "cell_row", "sequence"];

pub fn write_sequences(path: &Path, seqs: &SequenceSet) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(SEQ_COLS)?;
    for s in seqs.sequences() {
        w.row([s.cell.col.to_string(), s.cell.row.to_string(), s.to_code()])?;
    }
    w.finish()
}

pub fn read_sequences(path: &Path, seq_len: usize, includes_all_nc: bool) -> Result<SequenceSet> {
    let mut r = CsvIn::open(path, &SEQ_COLS)?;
    let mut seqs = Vec::new();
    for (row, rec) in r.rows()? {
        let cell = CellId::new(r.field(&rec, row, 0)?, r.field(&rec, row, 1)?);
        seqs.push(StateSequence::parse_code(cell, &rec[2]).map_err(|e| r.bad(row, e))?);
    }
    SequenceSet::new(seqs, seq_len, includes_all_nc).map_err(|e| Error::format(path, e.to_string()))
}

fn state_header(corner: &str) -> Vec<String> {
    std::iter::once(corner.to_string())
        .chain(StateSymbol::ALL.iter().map(|s| s.to_string()))
        .collect()
}

/// Row-conditional probabilities with labelled rows (from) and columns (to).
pub fn write_transition_rates(path: &Path, tm: &TransitionMatrix) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(state_header("from"))?;
    for a in StateSymbol::ALL {
        let mut row = vec![a.to_string()];
        row.extend(StateSymbol::ALL.iter().map(|&b| fmt_f64(tm.p(a, b))));
        w.row(row)?;
    }
    w.finish()
}

pub fn write_transition_counts(path: &Path, tm: &TransitionMatrix) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(state_header("from"))?;
    for a in StateSymbol::ALL {
        let mut row = vec![a.to_string()];
        row.extend(StateSymbol::ALL.iter().map(|&b| tm.count(a, b).to_string()));
        w.row(row)?;
    }
    w.finish()
}

/// Substitution costs as a labelled matrix, followed by an `indel` row whose
/// first data column holds the indel cost.
pub fn write_costs(path: &Path, costs: &CostMatrix) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(state_header("from"))?;
    for a in StateSymbol::ALL {
        let mut row = vec![a.to_string()];
        row.extend(StateSymbol::ALL.iter().map(|&b| fmt_f64(costs.sub(a, b))));
        w.row(row)?;
    }
    let mut indel = vec!["indel".to_string(), fmt_f64(costs.indel())];
    indel.extend(std::iter::repeat_n(String::new(), N_STATES - 1));
    w.row(indel)?;
    w.finish()
}

pub fn read_costs(path: &Path) -> Result<CostMatrix> {
    let header = state_header("from");
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut r = CsvIn::open(path, &header)?;
    let rows = r.rows()?;
    if rows.len() != N_STATES + 1 {
        return Err(Error::format(
            path,
            format!("expected {} rows, found {}", N_STATES + 1, rows.len()),
        ));
    }
    let mut sub = [[0.0; N_STATES]; N_STATES];
    for (i, (row, rec)) in rows[..N_STATES].iter().enumerate() {
        if rec[0] != *StateSymbol::ALL[i].as_str() {
            return Err(r.bad(
                *row,
                format!("expected row {}, found {:?}", StateSymbol::ALL[i], &rec[0]),
            ));
        }
        for (j, v) in sub[i].iter_mut().enumerate() {
            *v = r.field(rec, *row, j + 1)?;
        }
    }
    let (row, rec) = &rows[N_STATES];
    if &rec[0] != "indel" {
        return Err(r.bad(*row, "expected the indel row"));
    }
    let indel = r.field(rec, *row, 1)?;
    CostMatrix::new(sub, indel).map_err(|e| Error::format(path, e.to_string()))
}

/// Square labelled matrix, for small `n`.
pub fn write_distances_csv(path: &Path, dm: &DistanceMatrix) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    let labels: Vec<String> = dm.labels().iter().map(|&c| cell_label(c)).collect();
    w.row(std::iter::once("cell".to_string()).chain(labels.iter().cloned()))?;
    for i in 0..dm.n() {
        let mut row = vec![labels[i].clone()];
        row.extend((0..dm.n()).map(|j| fmt_f64(dm.get(i, j))));
        w.row(row)?;
    }
    w.finish()
}

/// One row per merge; node ids follow the leaves-then-merges numbering.
pub fn write_merges(path: &Path, dg: &Dendrogram) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(["step", "node", "a", "b", "height", "size"])?;
    for (k, m) in dg.merges().iter().enumerate() {
        w.row([
            (k + 1).to_string(),
            (dg.n_leaves() + k).to_string(),
            m.a.to_string(),
            m.b.to_string(),
            fmt_f64(m.height),
            m.size.to_string(),
        ])?;
    }
    w.finish()
}

const CLUSTER_COLS: [&str; 3] = ["cell_col", "cell_row", "cluster"];

pub fn write_clusters(path: &Path, assign: &ClusterAssignment) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(CLUSTER_COLS)?;
    for (cell, label) in assign.iter() {
        w.row([
            cell.col.to_string(),
            cell.row.to_string(),
            label.to_string(),
        ])?;
    }
    w.finish()
}

pub fn read_clusters(path: &Path) -> Result<ClusterAssignment> {
    let mut r = CsvIn::open(path, &CLUSTER_COLS)?;
    let (mut cells, mut labels) = (Vec::new(), Vec::new());
    for (row, rec) in r.rows()? {
        cells.push(CellId::new(r.field(&rec, row, 0)?, r.field(&rec, row, 1)?));
        labels.push(r.field::<u32>(&rec, row, 2)?);
    }
    let k = labels.iter().copied().max().unwrap_or(0);
    ClusterAssignment::new(cells, labels, k).map_err(|e| Error::format(path, e.to_string()))
}

/// `group` is a cluster id or `all`.
pub fn write_hitting_times(path: &Path, rows: &[(String, HittingTimes)]) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(["group", "state", "hitting_time", "absorption_probability"])?;
    for (group, h) in rows {
        for s in StateSymbol::ALL {
            w.row([
                group.clone(),
                s.to_string(),
                fmt_f64(h.get(s)),
                fmt_f64(h.absorption_probability(s)),
            ])?;
        }
    }
    w.finish()
}

pub const SUMMARY_COLUMNS: [(&str, &str); 13] = [
    ("type", "cluster id, or `all` for every sequence"),
    ("n_cells", "number of cells (sequences) in the group"),
    ("start", "NC>X with X violent maximising count(NC>X)"),
    ("start_rate", "count(NC>X) / count(NC>any), NC>NC included in the denominator"),
    ("repetition", "X>X with X violent maximising p(X|X)"),
    ("repetition_rate", "p(X|X) = count(X>X) / count(X>any)"),
    ("transition", "X>Y, X and Y distinct violent states, maximising p(Y|X)"),
    ("transition_rate", "p(Y|X) = count(X>Y) / count(X>any)"),
    ("terminus", "X>NC with X violent maximising p(NC|X)"),
    ("terminus_rate", "p(NC|X) = count(X>NC) / count(X>any)"),
    (
        "mvst_years",
        "sum over violent X of w_X * h_X; w = distribution of violent start states, h = expected years to first reach NC, conditional on reaching it",
    ),
    ("mvst_note", "explains an empty or infinite mvst_years"),
    ("start_reading", "which sequence positions define the violent start states"),
];

fn rated(t: Option<RatedTransition>) -> [String; 2] {
    match t {
        Some(t) => [format!("{}>{}", t.from, t.to), fmt_f64(t.rate)],
        None => ["NA".into(), "NA".into()],
    }
}

pub fn write_summary(path: &Path, rows: &[TrajectorySummary], start_reading: &str) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(SUMMARY_COLUMNS.iter().map(|c| c.0))?;
    for s in rows {
        let (mvst, note) = match s.mvst_years {
            None => ("NA".to_string(), "no violent spell in this group"),
            Some(v) if v.is_infinite() => (
                "inf".to_string(),
                "no finite stopping time under the empirical chain",
            ),
            Some(v) => (fmt_f64(v), ""),
        };
        let mut row = vec![
            s.cluster
                .map_or_else(|| "all".to_string(), |c| c.to_string()),
            s.n_cells.to_string(),
        ];
        for t in [s.start, s.repetition, s.cross, s.terminus] {
            row.extend(rated(t));
        }
        row.extend([mvst, note.to_string(), start_reading.to_string()]);
        w.row(row)?;
    }
    w.finish()
}

pub fn write_summary_columns(path: &Path) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(["column", "definition"])?;
    for (c, d) in SUMMARY_COLUMNS {
        w.row([c, d])?;
    }
    w.finish()
}

/// Upper-triangular z-score matrix: `-` below the diagonal, `NA` where the
/// variance is degenerate.
pub fn write_joins_matrix(path: &Path, report: &JoinCountReport) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row(std::iter::once("type".to_string()).chain(report.types.iter().map(|t| t.to_string())))?;
    for (a, &r) in report.types.iter().enumerate() {
        let mut row = vec![r.to_string()];
        for (b, &s) in report.types.iter().enumerate() {
            row.push(if b < a {
                "-".into()
            } else {
                fmt_opt(report.pair(r, s).and_then(|p| p.stat.z))
            });
        }
        w.row(row)?;
    }
    w.finish()
}

fn long_row(
    pair: String,
    r: &str,
    s: &str,
    st: &JoinStat,
    perm: Option<&PermutationStat>,
) -> Vec<String> {
    let mut row = vec![
        pair,
        r.to_string(),
        s.to_string(),
        st.observed.to_string(),
        fmt_f64(st.expected),
        fmt_f64(st.variance),
        fmt_opt(st.z),
    ];
    match perm {
        Some(p) => row.extend([fmt_f64(p.mean), fmt_f64(p.variance), fmt_f64(p.pseudo_p)]),
        None => row.extend(["NA".to_string(), "NA".to_string(), "NA".to_string()]),
    }
    row
}

pub fn write_joins_long(
    path: &Path,
    report: &JoinCountReport,
    perms: Option<&PermutationReport>,
) -> Result<()> {
    let mut w = CsvOut::create(path)?;
    w.row([
        "pair",
        "r",
        "s",
        "J",
        "E",
        "Var",
        "z",
        "perm_mean",
        "perm_var",
        "pseudo_p",
    ])?;
    for (i, p) in report.pairs.iter().enumerate() {
        let perm = perms.map(|pr| &pr.pairs[i]);
        w.row(long_row(
            format!("{}-{}", p.r, p.s),
            &p.r.to_string(),
            &p.s.to_string(),
            &p.stat,
            perm,
        ))?;
    }
    let perm = perms.map(|pr| &pr.total_unlike);
    w.row(long_row(
        "total_unlike".into(),
        "",
        "",
        &report.total_unlike,
        perm,
    ))?;
    w.finish()
}

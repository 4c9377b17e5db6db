//! Run-log CSV and summary JSON persistence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::batch::SweepSummary;
use crate::sim::episode::{LogRow, RunRecord};

/// Run-log columns, in file order.
pub const CSV_COLUMNS: [&str; 11] = [
    "t_s",
    "hv_s_m",
    "hv_v_mps",
    "hv_a_mps2",
    "hv_role",
    "hv_belief_av_leader",
    "av_s_m",
    "av_v_mps",
    "av_a_mps2",
    "av_belief_hv_leader",
    "av_feasible",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_owned(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_owned(), source }
}

/// Writes rows as CSV to any sink; the header is always written.
pub fn write_rows<W: Write>(rows: &[LogRow], sink: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_run_log(record: &RunRecord, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    write_rows(&record.rows, BufWriter::new(file)).map_err(csv_err(path))
}

pub fn read_run_log(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::Config(format!("{}: unexpected columns {:?}", path.display(), headers)));
    }
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json { path: path.to_owned(), source })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_summary(summary: &SweepSummary, path: &Path) -> Result<()> {
    write_json(summary, path)
}

pub fn read_summary(path: &Path) -> Result<SweepSummary> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_owned(), source })
}

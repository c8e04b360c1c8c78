//! Trajectory CSV and batch JSON files.
//!
//! Trajectory header: `eval_index,instance_id,x0,...,x{D-1},f`. Floats are
//! written in Rust's shortest round-trip form, so reading a written file
//! gives back bit-identical values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::point::{EvaluatedPoint, Trajectory};
use crate::selection::{Batch, BatchJson};

pub fn trajectory_header(dim: usize) -> Vec<String> {
    let mut header = vec!["eval_index".to_string(), "instance_id".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    header.push("f".to_string());
    header
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let dim = trajectory.dim().unwrap_or(0);
    writer
        .write_record(trajectory_header(dim))
        .map_err(csv_io)?;
    let mut row: Vec<String> = Vec::with_capacity(dim + 3);
    for p in &trajectory.points {
        row.clear();
        row.push(p.eval_index.to_string());
        row.push(p.instance_id.to_string());
        row.extend(p.x.iter().map(|v| v.to_string()));
        row.push(p.f.to_string());
        writer.write_record(&row).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Reads a trajectory CSV. The function and algorithm ids are not part of
/// the file and come back empty.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(0, format!("{other:?}")),
        })?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "missing header".into())),
    };
    if header.len() < 3 {
        return Err(parse_err(
            1,
            "header needs eval_index, instance_id and f columns".into(),
        ));
    }
    let dim = header.len() - 3;
    let expected = trajectory_header(dim);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }

    let mut trajectory = Trajectory::default();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 3 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", dim + 3, record.len()),
            ));
        }
        let field = |i: usize| &record[i];
        let eval_index: usize = field(0)
            .parse()
            .map_err(|e| parse_err(line, format!("eval_index `{}`: {e}", field(0))))?;
        if eval_index != trajectory.len() {
            return Err(parse_err(
                line,
                format!("eval_index {eval_index} breaks the 0-based sequence"),
            ));
        }
        let instance_id: i64 = field(1)
            .parse()
            .map_err(|e| parse_err(line, format!("instance_id `{}`: {e}", field(1))))?;
        let x = (2..2 + dim)
            .map(|i| {
                field(i)
                    .parse::<f64>()
                    .map_err(|e| parse_err(line, format!("x{} `{}`: {e}", i - 2, field(i))))
            })
            .collect::<Result<Vec<f64>>>()?;
        let f: f64 = field(dim + 2)
            .parse()
            .map_err(|e| parse_err(line, format!("f `{}`: {e}", field(dim + 2))))?;
        trajectory.points.push(EvaluatedPoint {
            x,
            f,
            eval_index,
            instance_id,
        });
    }
    Ok(trajectory)
}

pub fn write_batch(path: &Path, batch: &Batch) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &batch.to_json())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<BatchJson> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

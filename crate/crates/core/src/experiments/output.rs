//! CSV contracts. Each file starts with `#` comment lines: the schema
//! version first, then provenance. Column order follows the record structs
//! and is frozen per schema version.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Result;

pub const REPLICATES_SCHEMA: &str = "dpamp/replicates/v1";
pub const AGGREGATES_SCHEMA: &str = "dpamp/aggregates/v1";
pub const MSE_CURVE_SCHEMA: &str = "dpamp/mse-curve/v1";

/// Writes `rows` as CSV with a schema line and `provenance` as comments.
pub fn write_csv<T: Serialize>(
    path: impl AsRef<Path>,
    schema: &str,
    provenance: &[(&str, String)],
    rows: &[T],
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv_to(&mut out, schema, provenance, rows)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv_to<W: Write, T: Serialize>(
    out: &mut W,
    schema: &str,
    provenance: &[(&str, String)],
    rows: &[T],
) -> Result<()> {
    writeln!(out, "# schema: {schema}")?;
    for (k, v) in provenance {
        writeln!(out, "# {k}: {}", v.replace('\n', " "))?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`], skipping comment lines.
pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// The schema named on the first line of a file written by [`write_csv`].
pub fn read_schema(path: impl AsRef<Path>) -> Result<Option<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().next().and_then(|l| l.strip_prefix("# schema: ")).map(str::to_owned))
}

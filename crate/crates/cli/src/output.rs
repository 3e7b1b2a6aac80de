use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::Format;
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Tagged<'a, T> {
    schema: u32,
    record: &'a str,
    #[serde(flatten)]
    row: &'a T,
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write + Send>, CliError> {
    Ok(match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// CSV with a header row, or one JSON object per line tagged with the schema
/// version and `record` kind.
pub fn write_rows<T: Serialize>(
    format: Format,
    record: &str,
    rows: &[T],
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let io_err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("write failed: {e}"));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            for row in rows {
                w.serialize(row).map_err(|e| io_err(&e))?;
            }
            w.flush().map_err(|e| io_err(&e))?;
        }
        Format::Jsonl => {
            for row in rows {
                let tagged = Tagged {
                    schema: SCHEMA_VERSION,
                    record,
                    row,
                };
                serde_json::to_writer(&mut *out, &tagged).map_err(|e| io_err(&e))?;
                out.write_all(b"\n").map_err(|e| io_err(&e))?;
            }
        }
    }
    out.flush().map_err(|e| io_err(&e))
}

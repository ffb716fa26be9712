//! RFC 4180 CSV output: CRLF row endings, fields quoted only when they
//! contain a comma, quote, or line break, quotes escaped by doubling.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, so files
//! are byte-stable across runs and worker counts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use neuro_l2l_core::{Error, Result};

/// Shortest round-trip rendering of a float for CSV cells.
pub fn num(v: f64) -> String {
    format!("{v}")
}

fn quote_field(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn render_row(fields: &[String]) -> String {
    let mut line = fields
        .iter()
        .map(|f| quote_field(f))
        .collect::<Vec<_>>()
        .join(",");
    line.push_str("\r\n");
    line
}

/// Streaming CSV writer that flushes after every row, so partially completed
/// runs still leave a readable file behind.
pub struct CsvWriter {
    out: BufWriter<File>,
    path: PathBuf,
    rows: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[String]) -> Result<Self> {
        let file = File::create(path)
            .map_err(|e| Error::Runtime(format!("cannot create {}: {e}", path.display())))?;
        let mut writer = CsvWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
            rows: 0,
        };
        writer.write_raw(header)?;
        Ok(writer)
    }

    pub fn write_row(&mut self, fields: &[String]) -> Result<()> {
        self.write_raw(fields)?;
        self.rows += 1;
        Ok(())
    }

    fn write_raw(&mut self, fields: &[String]) -> Result<()> {
        self.out
            .write_all(render_row(fields).as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Error::Runtime(format!("cannot write {}: {e}", self.path.display())))
    }

    /// Data rows written so far (the header does not count).
    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// One-shot CSV file write.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = CsvWriter::create(path, header)?;
    for row in rows {
        writer.write_row(row)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_with_delimiters_are_quoted_and_escaped() {
        let row = render_row(&[
            "plain".into(),
            "with,comma".into(),
            "with\"quote".into(),
            "with\nnewline".into(),
        ]);
        assert_eq!(
            row,
            "plain,\"with,comma\",\"with\"\"quote\",\"with\nnewline\"\r\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -3.25e-17, 1.0 / 3.0, 12345.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn writer_counts_data_rows_only() {
        let dir = std::env::temp_dir().join("neuro_l2l_table_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("counts.csv");
        let mut w = CsvWriter::create(&path, &["a".into(), "b".into()]).unwrap();
        w.write_row(&["1".into(), "2".into()]).unwrap();
        w.write_row(&["3".into(), "4".into()]).unwrap();
        assert_eq!(w.rows(), 2);
        drop(w);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "a,b\r\n1,2\r\n3,4\r\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}

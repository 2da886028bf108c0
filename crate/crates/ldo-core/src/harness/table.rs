//! Tabular experiment output with canonical ordering and CSV persistence.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    /// 17 significant digits for floats so a write/read roundtrip is exact.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => {
                if v.is_nan() {
                    "NaN".into()
                } else {
                    format!("{v:.16e}")
                }
            }
            Cell::Text(s) => s.clone(),
        }
    }

    fn sort_key(&self) -> (u8, f64, &str) {
        match self {
            Cell::Int(v) => (0, *v as f64, ""),
            Cell::Num(v) => (0, *v, ""),
            Cell::Text(s) => (1, 0.0, s.as_str()),
        }
    }
}

impl std::cmp::PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        let (ta, na, sa) = self.sort_key();
        let (tb, nb, sb) = other.sort_key();
        Some(
            ta.cmp(&tb)
                .then(na.total_cmp(&nb))
                .then(sa.cmp(sb)),
        )
    }
}

/// Seeded experiment output: a fixed column schema, rows, and metadata
/// (config hash, seed, artifact version, timestamp).
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn add_metadata(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.push((key.to_string(), value.into()));
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Canonical row order: lexicographic over all columns, independent of
    /// the scheduling that produced the rows.
    pub fn sort_canonical(&mut self) {
        self.rows.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b) {
                let ord = x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal);
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        });
    }

    /// Numeric view of a column (NaN for non-numeric cells).
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[idx] {
                    Cell::Int(v) => *v as f64,
                    Cell::Num(v) => *v,
                    Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
                })
                .collect(),
        )
    }

    /// Writes `# key=value` metadata lines followed by an RFC-4180 body.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display(), e))?;
        for (k, v) in &self.metadata {
            writeln!(file, "# {k}={v}").map_err(|e| Error::io(path.display(), e))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.columns)
            .map_err(|e| Error::Config(format!("csv write {}: {e}", path.display())))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.render()))
                .map_err(|e| Error::Config(format!("csv write {}: {e}", path.display())))?;
        }
        w.flush().map_err(|e| Error::io(path.display(), e))?;
        Ok(())
    }

    /// Reads a table written by `write_csv`; every field becomes `Num` when
    /// it parses as a float and `Text` otherwise.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let content =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        let mut metadata = Vec::new();
        let mut body = String::new();
        for line in content.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once('=') {
                    metadata.push((k.to_string(), v.to_string()));
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Config(format!("csv read {}: {e}", path.display())))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Config(format!("csv read: {e}")))?;
            rows.push(
                rec.iter()
                    .map(|s| match s.parse::<f64>() {
                        Ok(v) => Cell::Num(v),
                        Err(_) => Cell::Text(s.to_string()),
                    })
                    .collect(),
            );
        }
        Ok(Self {
            columns,
            rows,
            metadata,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let t = ResultTable::new(&["a", "b"]);
        t.write_csv(&path).unwrap();
        let s = std::fs::read_to_string(&path).unwrap();
        assert_eq!(s.trim(), "a,b");
    }

    #[test]
    fn roundtrip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = ResultTable::new(&["x", "y", "tag"]);
        t.add_metadata("seed", "42");
        t.push_row(vec![
            Cell::Num(0.1 + 0.2),
            Cell::Num(-1.5e-13),
            Cell::Text("alpha".into()),
        ]);
        t.push_row(vec![
            Cell::Num(std::f64::consts::PI),
            Cell::Num(1e17),
            Cell::Text("beta, with comma".into()),
        ]);
        t.write_csv(&path).unwrap();
        let back = ResultTable::read_csv(&path).unwrap();
        assert_eq!(back.columns, t.columns);
        assert_eq!(back.metadata, vec![("seed".to_string(), "42".to_string())]);
        for (r1, r2) in t.rows.iter().zip(&back.rows) {
            match (&r1[0], &r2[0]) {
                (Cell::Num(a), Cell::Num(b)) => assert_eq!(a, b),
                other => panic!("unexpected cells {other:?}"),
            }
            match (&r1[1], &r2[1]) {
                (Cell::Num(a), Cell::Num(b)) => assert_eq!(a, b),
                other => panic!("unexpected cells {other:?}"),
            }
        }
        match &back.rows[1][2] {
            Cell::Text(s) => assert_eq!(s, "beta, with comma"),
            other => panic!("quoting broken: {other:?}"),
        }
    }

    #[test]
    fn canonical_sort_is_schedule_independent() {
        let mut a = ResultTable::new(&["m", "n"]);
        a.push_row(vec![Cell::Text("p".into()), Cell::Num(2.0)]);
        a.push_row(vec![Cell::Text("p".into()), Cell::Num(1.0)]);
        a.push_row(vec![Cell::Text("a".into()), Cell::Num(9.0)]);
        let mut b = ResultTable::new(&["m", "n"]);
        b.push_row(vec![Cell::Text("a".into()), Cell::Num(9.0)]);
        b.push_row(vec![Cell::Text("p".into()), Cell::Num(1.0)]);
        b.push_row(vec![Cell::Text("p".into()), Cell::Num(2.0)]);
        a.sort_canonical();
        b.sort_canonical();
        assert_eq!(a.rows, b.rows);
    }
}

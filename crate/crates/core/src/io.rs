//! Plain-text field dumps and comma-separated tables.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! output is locale-independent and reading a dump back is exact.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::geometry::DomainSpec;
use crate::grid::GridField;
use crate::{Error, Result};

/// Writes the header `n1 n2 x1_min x1_max x2_min x2_max` and one
/// comma-separated line per grid row, bottom row first.
pub fn write_field(mut out: impl Write, field: &GridField) -> Result<()> {
    let d = field.domain();
    writeln!(
        out,
        "{} {} {} {} {} {}",
        d.n1, d.n2, d.x1_min, d.x1_max, d.x2_min, d.x2_max
    )?;
    let mut line = String::new();
    for row in field.values().chunks(d.n1) {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            write!(line, "{v}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_field(input: impl BufRead) -> Result<GridField> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        detail: "empty dump".into(),
    })?;
    let header = header?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 {
        return Err(Error::Parse {
            line: 1,
            detail: format!("expected 6 header fields, got {}", parts.len()),
        });
    }
    let bad = |what: &str| Error::Parse {
        line: 1,
        detail: format!("bad {what}"),
    };
    let n1: usize = parts[0].parse().map_err(|_| bad("n1"))?;
    let n2: usize = parts[1].parse().map_err(|_| bad("n2"))?;
    let mut c = [0.0; 4];
    for (slot, s) in c.iter_mut().zip(&parts[2..]) {
        *slot = s.parse().map_err(|_| bad("coordinate"))?;
    }
    let domain = DomainSpec::new((c[0], c[1]), (c[2], c[3]), n1, n2)?;
    let mut values = Vec::with_capacity(domain.len());
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                detail: format!("not a number: `{tok}`"),
            })?;
            values.push(v);
        }
        if values.len() - before != n1 {
            return Err(Error::Parse {
                line: idx + 1,
                detail: format!("row has {} values, expected {n1}", values.len() - before),
            });
        }
    }
    GridField::new(domain, values)
}

pub fn save_field(path: impl AsRef<Path>, field: &GridField) -> Result<()> {
    let mut buf = Vec::new();
    write_field(&mut buf, field)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_field(path: impl AsRef<Path>) -> Result<GridField> {
    read_field(BufReader::new(fs::File::open(path)?))
}

/// A small in-memory CSV table with a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends a row of numbers.
    pub fn push(&mut self, row: &[f64]) {
        self.push_cells(row.iter().map(|v| v.to_string()).collect());
    }

    pub fn push_cells(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip_is_exact() {
        let d = DomainSpec::new((0.0, 2.0), (-1.0, 1.0), 5, 4).unwrap();
        let f = GridField::from_fn(d, |x| (x[0] * 1.7).sin() + x[1] / 3.0);
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("5 4 0 2 -1 1\n"));
        assert_eq!(text.lines().count(), 5);
        assert_eq!(read_field(&buf[..]).unwrap(), f);
    }

    #[test]
    fn malformed_dumps_report_lines() {
        let err = read_field("3 3 0 1 0 1\n1,2,3\n1,x,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_field("3 3 0 1 0 1\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(matches!(
            read_field("3 3 0 1\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["w", "phi"]);
        t.push(&[0.5, 0.25]);
        assert_eq!(t.to_csv(), "w,phi\n0.5,0.25\n");
    }
}

//! CSV tables with a `#`-prefixed metadata preamble.
//!
//! Numbers are serialized with 17 significant decimal digits so every `f64`
//! round-trips exactly; absent values serialize as empty fields.

use std::fmt::Display;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            // One leading digit plus 16 fractional digits: 17 significant.
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OutputTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for x in [0.13, 1.0 / 7.0, 2.0_f64.sqrt(), 1e-300, -3.633802277381867] {
            let rendered = Cell::Num(x).render();
            let parsed: f64 = rendered.parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits(), "{rendered}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = OutputTable::new(&["a", "b"]);
        t.meta("Q", 2.0);
        t.push_row(vec![Cell::Num(1.0), Cell::Empty]);
        t.push_row(vec![Cell::Bool(true), Cell::Text("middle".into())]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# Q: 2");
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1.0000000000000000e0,");
        assert_eq!(lines[3], "true,middle");
    }
}

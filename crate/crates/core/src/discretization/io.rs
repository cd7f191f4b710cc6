//! Field snapshot serialization.
//!
//! The text format is a small header followed by one row per cell, x
//! fastest:
//!
//! ```text
//! # hydride field snapshot
//! dim 2
//! cells_per_axis 4 4
//! spacing 0.25 0.25
//! meta time 0.5
//! columns theta chi p
//! 1e0 5e-1 1e0
//! ...
//! ```

use std::fmt::Write as _;

use super::{Field, Grid};
use crate::error::{Error, Result};

const MAGIC: &str = "# hydride field snapshot";

/// Named fields on one grid plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<(String, Field)>,
}

impl Snapshot {
    pub fn new(grid: Grid) -> Self {
        Self { grid, meta: Vec::new(), columns: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_field(mut self, name: &str, field: Field) -> Self {
        self.columns.push((name.to_string(), field));
        self
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        let join = |xs: &[String]| xs.join(" ");
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "dim {}", g.dim()).unwrap();
        let cells: Vec<String> = g.cells_per_axis().iter().map(|c| c.to_string()).collect();
        writeln!(out, "cells_per_axis {}", join(&cells)).unwrap();
        let spacing: Vec<String> = g.spacing().iter().map(|h| format!("{h:e}")).collect();
        writeln!(out, "spacing {}", join(&spacing)).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        let names: Vec<String> = self.columns.iter().map(|(n, _)| n.clone()).collect();
        writeln!(out, "columns {}", join(&names)).unwrap();
        for cell in 0..g.cell_count() {
            let row: Vec<String> = self.columns.iter().map(|(_, f)| format!("{:e}", f.values()[cell])).collect();
            writeln!(out, "{}", join(&row)).unwrap();
        }
        out
    }

    /// Parses the text format. Values are not required to be finite, so
    /// a hand-edited snapshot can be loaded and then validated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, key: &str, msg: &str| Error::Parse {
            line: line + 1,
            key: key.to_string(),
            message: msg.to_string(),
        };
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            Some((n, _)) => return Err(bad(n, "header", "missing snapshot magic line")),
            None => return Err(bad(0, "header", "empty snapshot")),
        }
        let mut dim = None;
        let mut cells: Vec<usize> = Vec::new();
        let mut spacing: Vec<f64> = Vec::new();
        let mut meta = Vec::new();
        let mut names: Vec<String> = Vec::new();
        let mut header_end = 0;
        for (n, line) in lines.by_ref() {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            match key {
                "dim" => dim = Some(rest.first().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad(n, key, "expected integer"))?),
                "cells_per_axis" => {
                    cells = rest.iter().map(|s| s.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad(n, key, "expected integers"))?
                }
                "spacing" => {
                    spacing = rest.iter().map(|s| s.parse()).collect::<std::result::Result<_, _>>().map_err(|_| bad(n, key, "expected reals"))?
                }
                "meta" => {
                    if rest.is_empty() {
                        return Err(bad(n, key, "meta needs a key"));
                    }
                    meta.push((rest[0].to_string(), rest[1..].join(" ")));
                }
                "columns" => {
                    names = rest.iter().map(|s| s.to_string()).collect();
                    header_end = n;
                    break;
                }
                other => return Err(bad(n, other, "unknown header key")),
            }
        }
        let dim = dim.ok_or_else(|| bad(header_end, "dim", "missing"))?;
        let grid = Grid::new(dim, &cells, &spacing)?;
        let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.cell_count()); names.len()];
        for (n, line) in lines {
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(n, "row", "expected reals"))?;
            if vals.len() != names.len() {
                return Err(bad(n, "row", "column count mismatch"));
            }
            for (col, v) in data.iter_mut().zip(vals) {
                col.push(v);
            }
        }
        let mut columns = Vec::with_capacity(names.len());
        for (name, values) in names.into_iter().zip(data) {
            if values.len() != grid.cell_count() {
                return Err(Error::GridMismatch { expected: grid.cell_count(), actual: values.len() });
            }
            columns.push((name, Field::from_raw(grid, values)));
        }
        Ok(Self { grid, meta, columns })
    }

    /// CSV with cell index, lattice coordinates, cell center and one
    /// column per field.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["cell".to_string(), "i".into(), "j".into(), "k".into(), "x".into(), "y".into(), "z".into()];
        header.extend(self.columns.iter().map(|(n, _)| n.clone()));
        w.write_record(&header).map_err(csv_err)?;
        for cell in 0..self.grid.cell_count() {
            let ijk = self.grid.coords(cell);
            let x = self.grid.center(cell);
            let mut row = vec![cell.to_string(), ijk[0].to_string(), ijk[1].to_string(), ijk[2].to_string()];
            row.extend(x.iter().map(|v| format!("{v:e}")));
            row.extend(self.columns.iter().map(|(_, f)| format!("{:e}", f.values()[cell])));
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_is_x_fastest() {
        let g = Grid::uniform_box(2, &[2, 2], &[1.0, 1.0]).unwrap();
        let f = Field::from_fn(g, |x| x[0] + 10.0 * x[1]);
        let csv = Snapshot::new(g).with_field("v", f).to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "cell,i,j,k,x,y,z,v");
        assert!(lines[2].starts_with("1,1,0,0,"));
        assert!(lines[3].starts_with("2,0,1,0,"));
    }

    #[test]
    fn rejects_bad_header() {
        assert!(Snapshot::from_text("nope\n").is_err());
        let text = format!("{MAGIC}\ndim 1\nbogus 3\n");
        assert!(matches!(Snapshot::from_text(&text), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(vals in proptest::collection::vec(-1e6f64..1e6, 6), t in 0.0f64..10.0) {
            let g = Grid::uniform_box(2, &[3, 2], &[1.0, 0.3]).unwrap();
            let f = Field::new(g, vals.clone()).unwrap();
            let s = Snapshot::new(g).with_meta("time", t).with_field("a", f.clone()).with_field("b", f.map(|v| v * 0.1));
            let back = Snapshot::from_text(&s.to_text()).unwrap();
            prop_assert_eq!(back.grid, g);
            prop_assert_eq!(back.field("a").unwrap().values(), f.values());
            prop_assert_eq!(back.meta("time").unwrap().parse::<f64>().unwrap(), t);
        }
    }
}

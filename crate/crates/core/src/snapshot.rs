//! Plain-text field snapshots.
//!
//! The header line is `dim nx ny [nz] components t`; every following line
//! holds the component values of one cell in storage order. Values are
//! written in their shortest round-tripping form, so a snapshot read back
//! reproduces the fields bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{DirectorField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<T> {
    pub dim: usize,
    pub counts: Vec<usize>,
    pub t: T,
    /// `components[c][cell]`.
    pub components: Vec<Vec<T>>,
}

impl<T: Real> Snapshot<T> {
    pub fn new(grid: &Grid<T>, t: T, components: Vec<Vec<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("snapshot needs a component".into()));
        }
        if components.iter().any(|c| c.len() != grid.cell_count()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            dim: grid.dim(),
            counts: grid.counts()[..grid.dim()].to_vec(),
            t,
            components,
        })
    }

    pub fn from_scalar(s: &ScalarField<T>, t: T) -> Self {
        Self::new(s.grid(), t, vec![s.values().to_vec()]).expect("shape preserved")
    }

    pub fn from_vector(v: &VectorField<T>, t: T) -> Self {
        Self::new(v.grid(), t, v.components().to_vec()).expect("shape preserved")
    }

    pub fn from_director(d: &DirectorField<T>, t: T) -> Self {
        Self::new(d.grid(), t, d.components().to_vec()).expect("shape preserved")
    }

    /// Cell count implied by the header.
    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Checks that the snapshot was taken on a grid with the shape of `grid`.
    pub fn matches(&self, grid: &Grid<T>) -> bool {
        self.dim == grid.dim() && self.counts[..] == grid.counts()[..grid.dim()]
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "{}", self.dim)?;
        for n in &self.counts {
            write!(w, " {n}")?;
        }
        writeln!(w, " {} {}", self.components.len(), self.t)?;
        for cell in 0..self.cell_count() {
            for (c, comp) in self.components.iter().enumerate() {
                if c > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{}", comp[cell])?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = match lines.next() {
            Some(line) => line.map_err(|e| parse_err(1, e.to_string()))?,
            None => return Err(parse_err(1, "empty snapshot".into())),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        let dim: usize = parse(fields.first().copied(), 1, "dim")?;
        if dim != 2 && dim != 3 {
            return Err(parse_err(1, format!("dim must be 2 or 3, got {dim}")));
        }
        if fields.len() != dim + 3 {
            return Err(parse_err(
                1,
                format!("expected {} header fields, got {}", dim + 3, fields.len()),
            ));
        }
        let counts = (0..dim)
            .map(|a| parse(Some(fields[1 + a]), 1, "cell count"))
            .collect::<Result<Vec<usize>>>()?;
        let ncomp: usize = parse(Some(fields[1 + dim]), 1, "component count")?;
        if ncomp == 0 {
            return Err(parse_err(1, "component count must be positive".into()));
        }
        let t: T = parse(Some(fields[2 + dim]), 1, "time")?;
        let cells: usize = counts.iter().product();
        let mut components = vec![Vec::with_capacity(cells); ncomp];
        for cell in 0..cells {
            let lineno = cell + 2;
            let line = match lines.next() {
                Some(line) => line.map_err(|e| parse_err(lineno, e.to_string()))?,
                None => return Err(parse_err(lineno, format!("expected {cells} cell lines"))),
            };
            let mut it = line.split_whitespace();
            for comp in components.iter_mut() {
                comp.push(parse(it.next(), lineno, "value")?);
            }
            if it.next().is_some() {
                return Err(parse_err(lineno, format!("more than {ncomp} values")));
            }
        }
        for (extra, line) in lines.enumerate() {
            let line = line.map_err(|e| parse_err(cells + 2 + extra, e.to_string()))?;
            if !line.trim().is_empty() {
                return Err(parse_err(cells + 2 + extra, "trailing data".into()));
            }
        }
        Ok(Self {
            dim,
            counts,
            t,
            components,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(file)
    }
}

fn parse_err(line: usize, msg: String) -> Error {
    Error::Parse { line, msg }
}

fn parse<V: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<V> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

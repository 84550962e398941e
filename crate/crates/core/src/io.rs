//! File formats.
//!
//! - Grid CSV: first line `m=<int>`, then `m` lines of `m` comma-separated
//!   masses; line `i` is x-cell `i`, column `j` is y-cell `j` (both 1-based).
//! - Insertion CSV: header `mt=<int>,my=<int>`, then `x_index,y_index,f`
//!   triples (1-based), column by column.
//! - JSON sidecars and run manifests.
//!
//! Floats in CSV files carry 17 significant digits, so values round-trip
//! exactly and identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entropy::entropy_grid;
use crate::error::{Error, Result};
use crate::insertion::InsertionFamily;
use crate::measure::GridPermuton;
use crate::patterns::grid_densities;
use crate::regions::{RegionCurve, SweepPoint};

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad number {:?}", s.trim())))
}

fn header_value(part: &str, key: &str, line: usize) -> Result<usize> {
    let (k, v) = part
        .trim()
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("line {line}: expected {key}=<int>, got {part:?}")))?;
    if k.trim() != key {
        return Err(Error::Parse(format!("line {line}: expected {key}=<int>, got {part:?}")));
    }
    v.trim().parse().map_err(|_| Error::Parse(format!("line {line}: bad integer in {part:?}")))
}

fn non_empty_lines<R: Read>(r: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    BufReader::new(r)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
}

pub fn write_grid_csv<W: Write>(mut w: W, g: &GridPermuton) -> Result<()> {
    let m = g.m();
    writeln!(w, "m={m}")?;
    for row in g.masses().chunks(m) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_grid_csv<R: Read>(r: R) -> Result<GridPermuton> {
    let mut lines = non_empty_lines(r);
    let (n, first) = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
    let m = header_value(&first?, "m", n)?;
    let mut masses = Vec::with_capacity(m * m);
    let mut rows = 0;
    for (n, line) in lines {
        let line = line?;
        let before = masses.len();
        for cell in line.split(',') {
            masses.push(parse_f64(cell, n)?);
        }
        if masses.len() - before != m {
            return Err(Error::Parse(format!("line {n}: expected {m} masses, got {}", masses.len() - before)));
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Parse(format!("expected {m} rows, got {rows}")));
    }
    GridPermuton::from_masses(m, masses)
}

/// JSON metadata written next to a grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub m: usize,
    pub entropy: f64,
    pub densities: BTreeMap<String, f64>,
}

impl GridSidecar {
    pub fn of(g: &GridPermuton) -> Self {
        let d = grid_densities(g);
        let mut densities = BTreeMap::from([("12".to_string(), d.p12)]);
        for (name, v) in ["123", "132", "213", "231", "312", "321"].iter().zip(d.s3) {
            densities.insert(name.to_string(), v);
        }
        GridSidecar { m: g.m(), entropy: entropy_grid(g), densities }
    }
}

pub fn write_insertion_csv<W: Write>(mut w: W, fam: &InsertionFamily) -> Result<()> {
    writeln!(w, "mt={},my={}", fam.mt(), fam.my())?;
    for (i, col) in fam.columns().iter().enumerate() {
        for (j, &f) in col.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, j + 1, fmt_f64(f))?;
        }
    }
    Ok(())
}

pub fn read_insertion_csv<R: Read>(r: R) -> Result<InsertionFamily> {
    let mut lines = non_empty_lines(r);
    let (n, first) = lines.next().ok_or_else(|| Error::Parse("empty insertion file".into()))?;
    let first = first?;
    let (a, b) =
        first.split_once(',').ok_or_else(|| Error::Parse(format!("line {n}: expected mt=<int>,my=<int>")))?;
    let (mt, my) = (header_value(a, "mt", n)?, header_value(b, "my", n)?);
    if mt == 0 || my == 0 {
        return Err(Error::Parse(format!("line {n}: resolutions must be positive")));
    }
    let mut columns: Vec<Vec<Option<f64>>> =
        (0..mt).map(|i| vec![None; InsertionFamily::bins_for(mt, my, i)]).collect();
    for (n, line) in lines {
        let line = line?;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("line {n}: expected x_index,y_index,f")));
        }
        let idx = |s: &str| -> Result<usize> {
            s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("line {n}: bad index {:?}", s.trim())))
        };
        let (i, j) = (idx(parts[0])?, idx(parts[1])?);
        let slot = i
            .checked_sub(1)
            .and_then(|i| columns.get_mut(i))
            .and_then(|c| j.checked_sub(1).and_then(|j| c.get_mut(j)))
            .ok_or_else(|| Error::Parse(format!("line {n}: index ({i}, {j}) outside the triangle grid")))?;
        if slot.replace(parse_f64(parts[2], n)?).is_some() {
            return Err(Error::Parse(format!("line {n}: duplicate entry ({i}, {j})")));
        }
    }
    let columns = columns
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            c.into_iter()
                .enumerate()
                .map(|(j, v)| v.ok_or_else(|| Error::Parse(format!("missing entry ({}, {})", i + 1, j + 1))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    InsertionFamily::from_columns(mt, my, columns)
}

pub fn write_curves_csv<'a, W: Write>(mut w: W, curves: impl IntoIterator<Item = &'a RegionCurve>) -> Result<()> {
    writeln!(w, "curve,t,x,y")?;
    for c in curves {
        for p in &c.points {
            writeln!(w, "{},{},{},{}", c.label, fmt_f64(p.t), fmt_f64(p.x), fmt_f64(p.y))?;
        }
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, points: &[SweepPoint]) -> Result<()> {
    writeln!(w, "a,b,rho12,rho12_stderr,rho123,rho123_stderr,rho321,rho321_stderr,trials")?;
    for p in points {
        let vals = [p.a, p.b, p.rho12, p.rho12_stderr, p.rho123, p.rho123_stderr, p.rho321, p.rho321_stderr];
        let line: Vec<String> = vals.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{},{}", line.join(","), p.trials)?;
    }
    Ok(())
}

/// Binary 8-bit PGM of the density, max-normalized; x runs left to right and
/// y bottom to top.
pub fn write_pgm<W: Write>(mut w: W, g: &GridPermuton) -> Result<()> {
    let m = g.m();
    let max = g.masses().iter().fold(0.0_f64, |a, &b| a.max(b));
    write!(w, "P5\n{m} {m}\n255\n")?;
    let mut bytes = Vec::with_capacity(m * m);
    for j in (0..m).rev() {
        for i in 0..m {
            let v = if max > 0.0 { g.mass(i, j) / max } else { 0.0 };
            bytes.push((v * 255.0).round() as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Reproducibility record for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub threads: usize,
    pub version: String,
    pub wall_time_s: f64,
    pub scalars: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, args: &[String], seed: u64, threads: usize) -> Self {
        Manifest {
            command: command.to_string(),
            args: args.to_vec(),
            seed,
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            scalars: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.scalars.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }
}

/// Writes through `f` into a buffered file at `path`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_grid_file(path: &Path) -> Result<GridPermuton> {
    read_grid_csv(File::open(path)?)
}

pub fn read_insertion_file(path: &Path) -> Result<InsertionFamily> {
    read_insertion_csv(File::open(path)?)
}

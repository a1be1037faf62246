use std::io::{BufRead, Write};

use super::{AnnularGrid, GridError, GridSpec, PlanarMapping, ScalarField, Spacing, StencilOrder};

const MAGIC: &str = "annular-field";
const VERSION: &str = "v1";

/// Field read back from a snapshot; the column count decides the kind.
#[derive(Clone, Debug)]
pub enum Snapshot {
    Scalar(ScalarField),
    Mapping(PlanarMapping),
}

fn header(grid: &AnnularGrid) -> String {
    format!(
        "{MAGIC} {VERSION} {:e} {:e} {} {} {}",
        grid.r_inner(),
        grid.r_outer(),
        grid.n_r(),
        grid.n_theta(),
        grid.spacing()
    )
}

pub fn write_scalar<W: Write>(mut out: W, u: &ScalarField) -> Result<(), GridError> {
    writeln!(out, "{}", header(u.grid()))?;
    for v in u.values() {
        writeln!(out, "{v:e}")?;
    }
    Ok(())
}

pub fn write_mapping<W: Write>(mut out: W, w: &PlanarMapping) -> Result<(), GridError> {
    writeln!(out, "{}", header(w.grid()))?;
    for (p, q) in w.p().iter().zip(w.q()) {
        writeln!(out, "{p:e} {q:e}")?;
    }
    Ok(())
}

fn bad(msg: impl Into<String>) -> GridError {
    GridError::Snapshot(msg.into())
}

/// Parses a snapshot; the grid is rebuilt with the given stencil order.
pub fn read_snapshot<R: BufRead>(input: R, order: StencilOrder) -> Result<Snapshot, GridError> {
    let mut lines = input.lines();
    let head = lines.next().ok_or_else(|| bad("empty input"))??;
    let tok: Vec<&str> = head.split_whitespace().collect();
    if tok.len() != 7 || tok[0] != MAGIC || tok[1] != VERSION {
        return Err(bad(format!("bad header `{head}`")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count `{s}`")));
    let spec = GridSpec {
        r_inner: num(tok[2])?,
        r_outer: num(tok[3])?,
        n_r: int(tok[4])?,
        n_theta: int(tok[5])?,
        spacing: tok[6].parse::<Spacing>()?,
        order,
    };
    let grid = AnnularGrid::new(spec)?;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line.split_whitespace().map(num).collect::<Result<Vec<_>, _>>()?;
        if cols.is_empty() {
            if !(1..=2).contains(&vals.len()) {
                return Err(bad(format!("expected 1 or 2 columns, got {}", vals.len())));
            }
            cols = vec![Vec::with_capacity(grid.len()); vals.len()];
        }
        if vals.len() != cols.len() {
            return Err(bad(format!("line {}: inconsistent column count", n + 2)));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    match cols.len() {
        1 => Ok(Snapshot::Scalar(ScalarField::new(grid, cols.pop().unwrap())?)),
        2 => {
            let q = cols.pop().unwrap();
            let p = cols.pop().unwrap();
            Ok(Snapshot::Mapping(PlanarMapping::new(grid, p, q)?))
        }
        _ => Err(bad("no values")),
    }
}

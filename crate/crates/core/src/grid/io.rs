//! Field snapshot export.
//!
//! Binary layout (all little-endian):
//!
//! | bytes        | content                                  |
//! |--------------|------------------------------------------|
//! | 4            | `u32` dimension `d`                      |
//! | 8·d          | `u64` cell count per axis                |
//! | 8·d          | `f64` spacing per axis                   |
//! | 8·N          | `f64` cell values, row-major (last axis fastest) |

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{Field, Grid};
use crate::error::{Error, Result};
use crate::real::Real;

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// One row per cell: center coordinates then value.
pub fn write_csv<T: Real, W: Write>(field: &Field<T>, out: W) -> Result<()> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = AXIS_NAMES[..grid.dim()].to_vec();
    header.push("value");
    w.write_record(&header)?;
    for (i, v) in field.values().iter().enumerate() {
        let x = grid.center(i);
        let mut row: Vec<String> = x[..grid.dim()]
            .iter()
            .map(|c| format!("{}", c.to_f64_lossy()))
            .collect();
        row.push(format!("{}", v.to_f64_lossy()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary<T: Real, W: Write>(field: &Field<T>, mut out: W) -> Result<()> {
    let grid = field.grid();
    out.write_u32::<LittleEndian>(grid.dim() as u32)?;
    for &n in grid.cells() {
        out.write_u64::<LittleEndian>(n as u64)?;
    }
    for h in grid.spacing() {
        out.write_f64::<LittleEndian>(h.to_f64_lossy())?;
    }
    for v in field.values() {
        out.write_f64::<LittleEndian>(v.to_f64_lossy())?;
    }
    Ok(())
}

/// Reads a dump produced by [`write_binary`]; extents are reconstructed as `count · spacing`.
pub fn read_binary<R: Read>(mut input: R) -> Result<Field<f64>> {
    let dim = input.read_u32::<LittleEndian>()? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Io(format!("bad dimension {dim} in field dump")));
    }
    let mut cells = Vec::with_capacity(dim);
    for _ in 0..dim {
        cells.push(input.read_u64::<LittleEndian>()? as usize);
    }
    let mut extents = Vec::with_capacity(dim);
    for &n in &cells {
        extents.push(input.read_f64::<LittleEndian>()? * n as f64);
    }
    let grid = Grid::new(&cells, &extents)?;
    let mut values = vec![0.0; grid.len()];
    input.read_f64_into::<LittleEndian>(&mut values)?;
    Field::new(grid, values)
}

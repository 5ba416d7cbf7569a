//! Field snapshots as CSV or as a text header followed by a binary block.
//!
//! The binary layout is
//!
//! ```text
//! necklab-field 1
//! name <text>
//! epsilon <float>
//! nr <count>
//! nz <count>
//! end
//! <nr little-endian f64: radial nodes>
//! <nz little-endian f64: vertical nodes y_n>
//! <nr * nz little-endian f64: values, radial-major>
//! ```

use std::io::{BufRead, Write};

use super::Field2D;
use crate::error::{Error, Result};

const MAGIC: &str = "necklab-field 1";

/// Version written in the first column of every CSV row.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Writes `schema_version,r,x_n,y_n,value` rows, one per node, floats with
/// 17 significant digits.
pub fn write_field_csv<W: Write>(field: &Field2D, mut out: W) -> Result<()> {
    let grid = field.grid();
    writeln!(out, "schema_version,r,x_n,y_n,value")?;
    for i in 0..grid.nr() {
        for j in 0..grid.nz() {
            let (r, xn) = grid.physical(i, j);
            let yn = grid.vertical()[j];
            writeln!(
                out,
                "{CSV_SCHEMA_VERSION},{:.16e},{:.16e},{:.16e},{:.16e}",
                r,
                xn,
                yn,
                field.at(i, j)
            )?;
        }
    }
    Ok(())
}

/// Header and payload of a binary field snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHeader {
    pub name: String,
    pub epsilon: f64,
    pub radial: Vec<f64>,
    pub vertical: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn write_field_binary<W: Write>(field: &Field2D, mut out: W) -> Result<()> {
    let grid = field.grid();
    let name = field.name().replace('\n', " ");
    write!(
        out,
        "{MAGIC}\nname {name}\nepsilon {:.16e}\nnr {}\nnz {}\nend\n",
        grid.epsilon(),
        grid.nr(),
        grid.nz()
    )?;
    for v in grid.radial().iter().chain(grid.vertical()).chain(field.values()) {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Io(format!("expected '{key}' line, found '{line}'")))
}

pub fn read_field_binary<R: BufRead>(mut input: R) -> Result<FieldHeader> {
    let mut lines = Vec::new();
    for _ in 0..6 {
        let mut line = String::new();
        input.read_line(&mut line)?;
        lines.push(line.trim_end_matches('\n').to_string());
    }
    if lines[0] != MAGIC {
        return Err(Error::Io(format!("not a field snapshot: '{}'", lines[0])));
    }
    if lines[5] != "end" {
        return Err(Error::Io("missing end of header".into()));
    }
    let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Io(e.to_string()));
    let parse_u = |s: &str| s.parse::<usize>().map_err(|e| Error::Io(e.to_string()));
    let name = header_value(&lines[1], "name")?.to_string();
    let epsilon = parse_f(header_value(&lines[2], "epsilon")?)?;
    let nr = parse_u(header_value(&lines[3], "nr")?)?;
    let nz = parse_u(header_value(&lines[4], "nz")?)?;
    let mut read = |count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; 8 * count];
        input.read_exact(&mut buf)?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect())
    };
    let radial = read(nr)?;
    let vertical = read(nz)?;
    let values = read(nr * nz)?;
    Ok(FieldHeader {
        name,
        epsilon,
        radial,
        vertical,
        values,
    })
}

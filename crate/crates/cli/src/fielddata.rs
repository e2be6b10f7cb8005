//! Field-data CSV: a small header (m, k, dims, origin, spacing, field
//! names), then one row per node in row-major order with one column per
//! field.
//!
//! ```text
//! m,2
//! k,1
//! dims,9,9
//! origin,-1,-1
//! spacing,0.25,0.25
//! fields,u,p1_u,p2_u
//! 0.125,0.5,-0.25
//! ...
//! ```

use std::fmt;

use geomech_core::fieldtheory::{FieldModel, Grid, PhaseSection};

#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for DataError {}

fn de(msg: impl Into<String>) -> DataError {
    DataError(msg.into())
}

pub fn read_phase_section(fm: &FieldModel, source: &str) -> Result<PhaseSection, DataError> {
    let mut lines = source.lines().filter(|l| !l.trim().is_empty());
    let mut header = |label: &str| -> Result<Vec<String>, DataError> {
        let line = lines
            .next()
            .ok_or_else(|| de(format!("missing `{label}` header line")))?;
        let mut parts = line.split(',').map(|s| s.trim().to_string());
        let got = parts.next().unwrap_or_default();
        if got != label {
            return Err(de(format!("expected `{label}` header, found `{got}`")));
        }
        Ok(parts.collect())
    };
    let m: usize = header("m")?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| de("bad m header"))?;
    let k: usize = header("k")?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| de("bad k header"))?;
    if m != fm.m || k != fm.k {
        return Err(de(format!(
            "data is for (m, k) = ({m}, {k}), model has ({}, {})",
            fm.m, fm.k
        )));
    }
    let dims: Vec<usize> = header("dims")?
        .iter()
        .map(|s| s.parse().map_err(|_| de("bad dims header")))
        .collect::<Result<_, _>>()?;
    let origin: Vec<f64> = header("origin")?
        .iter()
        .map(|s| s.parse().map_err(|_| de("bad origin header")))
        .collect::<Result<_, _>>()?;
    let spacing: Vec<f64> = header("spacing")?
        .iter()
        .map(|s| s.parse().map_err(|_| de("bad spacing header")))
        .collect::<Result<_, _>>()?;
    let fields = header("fields")?;
    let grid = Grid::new(dims, origin, spacing).map_err(|e| de(e.to_string()))?;

    // Columns: the k fiber fields first (by model order), then optionally
    // all m*k momentum fields.
    let expected_y: Vec<String> = fm.fibers().to_vec();
    let expected_p: Vec<String> = fm.momenta();
    let with_momenta = if fields.len() == expected_y.len() {
        false
    } else if fields.len() == expected_y.len() + expected_p.len() {
        true
    } else {
        return Err(de(format!(
            "expected {} or {} field columns, found {}",
            expected_y.len(),
            expected_y.len() + expected_p.len(),
            fields.len()
        )));
    };
    for (got, want) in fields.iter().zip(expected_y.iter().chain(if with_momenta {
        expected_p.iter()
    } else {
        [].iter()
    })) {
        if got != want {
            return Err(de(format!("field column `{got}` does not match `{want}`")));
        }
    }

    let nodes = grid.node_count();
    let ncols = fields.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(nodes); ncols];
    for (row_idx, line) in lines.enumerate() {
        let values: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        if values.len() != ncols {
            return Err(de(format!(
                "row {} has {} columns, expected {ncols}",
                row_idx + 1,
                values.len()
            )));
        }
        for (c, v) in values.iter().enumerate() {
            columns[c].push(
                v.parse()
                    .map_err(|_| de(format!("bad value `{v}` in row {}", row_idx + 1)))?,
            );
        }
    }
    if columns[0].len() != nodes {
        return Err(de(format!(
            "found {} node rows, grid has {nodes}",
            columns[0].len()
        )));
    }
    let y = columns[..fm.k].to_vec();
    let p = if with_momenta {
        Some(columns[fm.k..].to_vec())
    } else {
        None
    };
    PhaseSection::new(grid, y, p).map_err(|e| de(e.to_string()))
}

#[cfg(test)]
pub fn write_phase_section(
    fm: &FieldModel,
    section: &PhaseSection,
    out: &mut dyn std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "m,{}", fm.m)?;
    writeln!(out, "k,{}", fm.k)?;
    let join = |v: Vec<String>| v.join(",");
    writeln!(
        out,
        "dims,{}",
        join(section.grid.dims.iter().map(|d| d.to_string()).collect())
    )?;
    writeln!(
        out,
        "origin,{}",
        join(section.grid.origin.iter().map(|d| d.to_string()).collect())
    )?;
    writeln!(
        out,
        "spacing,{}",
        join(section.grid.spacing.iter().map(|d| d.to_string()).collect())
    )?;
    let mut names: Vec<String> = fm.fibers().to_vec();
    if section.p.is_some() {
        names.extend(fm.momenta());
    }
    writeln!(out, "fields,{}", names.join(","))?;
    let nodes = section.grid.node_count();
    for node in 0..nodes {
        let mut row: Vec<String> = section.y.iter().map(|f| f[node].to_string()).collect();
        if let Some(p) = &section.p {
            row.extend(p.iter().map(|f| f[node].to_string()));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use geomech_core::models;

    #[test]
    fn roundtrip() {
        let fm = models::scalar_field(2);
        let grid = Grid::new(vec![5, 5], vec![0.0, 0.0], vec![0.25, 0.25]).unwrap();
        let phi = grid.sample(|x| x[0] + 2.0 * x[1]);
        let section = PhaseSection::new(grid, vec![phi], None).unwrap();
        let mut buf = Vec::new();
        write_phase_section(&fm, &section, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_phase_section(&fm, &text).unwrap();
        assert_eq!(back.y, section.y);
        assert!(back.p.is_none());
    }

    #[test]
    fn rejects_wrong_shape() {
        let fm = models::scalar_field(2);
        let text = "m,3\nk,1\ndims,3,3,3\norigin,0,0,0\nspacing,1,1,1\nfields,u\n";
        assert!(read_phase_section(&fm, text).is_err());
    }
}

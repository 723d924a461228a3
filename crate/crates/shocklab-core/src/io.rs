//! Field snapshots: a one-line JSON header followed by raw little-endian f64
//! payloads, one per field, each in x³-fastest layout.
//!
//! The header records everything needed to rebuild the grid and re-derive
//! diagnostics bit-exactly: dimensions, extents, stencil order, simulation
//! time, step index, and the ordered field names.

use crate::error::{Error, Result};
use crate::kernel::Grid;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub x1_min: f64,
    pub x1_max: f64,
    pub len2: f64,
    pub len3: f64,
    pub order: usize,
    pub time: f64,
    pub step: usize,
    pub fields: Vec<String>,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<Grid> {
        let mut g = Grid::new(
            self.n1,
            self.n2,
            self.n3,
            self.x1_min,
            self.x1_max,
            self.order,
        )?;
        g.len2 = self.len2;
        g.len3 = self.len3;
        g.rebuild_tables();
        Ok(g)
    }
}

/// Write a snapshot.  Field payloads follow the header in the order given.
pub fn write_snapshot(
    path: &Path,
    grid: &Grid,
    time: f64,
    step: usize,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let header = SnapshotHeader {
        n1: grid.n1,
        n2: grid.n2,
        n3: grid.n3,
        x1_min: grid.x1_min,
        x1_max: grid.x1_max,
        len2: grid.len2,
        len3: grid.len3,
        order: grid.order,
        time,
        step,
        fields: fields.iter().map(|(n, _)| n.to_string()).collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for (name, data) in fields {
        if data.len() != grid.cells() {
            return Err(Error::Config(format!(
                "snapshot field '{name}' has {} values, grid has {} cells",
                data.len(),
                grid.cells()
            )));
        }
        for &x in *data {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a snapshot back: header plus payloads in header order.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_line = Vec::new();
    // Read up to the newline terminating the header.
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header_line.push(byte[0]);
        if header_line.len() > 1 << 20 {
            return Err(Error::Config("snapshot header exceeds 1 MiB".into()));
        }
    }
    let header: SnapshotHeader = serde_json::from_slice(&header_line)?;
    let cells = header.n1 * header.n2 * header.n3;
    let mut fields = Vec::with_capacity(header.fields.len());
    let mut buf = vec![0u8; cells * 8];
    for _ in 0..header.fields.len() {
        r.read_exact(&mut buf)?;
        let data: Vec<f64> = buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        fields.push(data);
    }
    Ok((header, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let grid = Grid::new(16, 1, 1, -1.0, 1.0, 2).unwrap();
        let a = grid.sample(|x, _, _| x.sin() * 1e-17 + x);
        let b = grid.sample(|x, _, _| (x * 3.7).cos());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap_000.dat");
        write_snapshot(&path, &grid, 0.125, 42, &[("a", &a), ("b", &b)]).unwrap();
        let (header, fields) = read_snapshot(&path).unwrap();
        assert_eq!(header.fields, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(header.step, 42);
        assert_eq!(header.time, 0.125);
        for (orig, read) in [(&a, &fields[0]), (&b, &fields[1])] {
            assert_eq!(orig.len(), read.len());
            for (x, y) in orig.iter().zip(read.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let g2 = header.grid().unwrap();
        assert_eq!(g2.n1, 16);
    }
}

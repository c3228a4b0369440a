//! ACF1 field files, CSV tables and JSON sidecars.
//!
//! An ACF1 record is the magic `ACF1` followed by little-endian `u32` dim,
//! `u32` counts per axis, `f64` origin per axis, `f64` spacing and the node
//! values as `f64` in row-major order. A pair file holds two records, `u`
//! then `v`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use acf_core::cloud::InterfaceCloud;
use acf_core::grid::MAX_DIM;
use acf_core::{validate_pair, AdmissiblePair, Grid, GridField, Tolerances};

use crate::LabError;

pub const MAGIC: &[u8; 4] = b"ACF1";

pub fn write_field(w: &mut impl Write, f: &GridField) -> std::io::Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    for &c in g.counts() {
        w.write_all(&(c as u32).to_le_bytes())?;
    }
    for &o in g.origin() {
        w.write_all(&o.to_le_bytes())?;
    }
    w.write_all(&g.spacing().to_le_bytes())?;
    for &v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, LabError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, LabError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_field(r: &mut impl Read) -> Result<GridField, LabError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::Format("missing ACF1 magic".into()));
    }
    let dim = read_u32(r)? as usize;
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(LabError::Format(format!("unsupported dimension {dim}")));
    }
    let counts = (0..dim).map(|_| read_u32(r).map(|c| c as usize)).collect::<Result<Vec<_>, _>>()?;
    let origin = (0..dim).map(|_| read_f64(r)).collect::<Result<Vec<_>, _>>()?;
    let spacing = read_f64(r)?;
    let grid = Grid::new(origin, spacing, counts)?;
    let mut bytes = vec![0u8; grid.len() * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(GridField::new(grid, values)?)
}

pub fn save_pair(path: &Path, pair: &AdmissiblePair) -> Result<(), LabError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, &pair.u)?;
    write_field(&mut w, &pair.v)?;
    w.flush()?;
    Ok(())
}

/// Reads `u` and `v` and revalidates them with the default tolerances.
pub fn load_pair(path: &Path) -> Result<AdmissiblePair, LabError> {
    let mut r = BufReader::new(File::open(path)?);
    let u = read_field(&mut r)?;
    let v = read_field(&mut r)?;
    Ok(validate_pair(u, v, &Tolerances::default())?)
}

/// `x1..xn,value` rows.
pub fn write_field_csv(path: &Path, f: &GridField) -> Result<(), LabError> {
    let g = f.grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=g.dim()).map(|k| format!("x{k}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    let mut x = vec![0.0; g.dim()];
    for i in 0..g.len() {
        g.position(i, &mut x);
        let mut row: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        row.push(f.value(i).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `x1..xn,weight` rows.
pub fn write_cloud_csv(path: &Path, cloud: &InterfaceCloud) -> Result<(), LabError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=cloud.dim).map(|k| format!("x{k}")).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    for i in 0..cloud.len() {
        let mut row: Vec<String> = cloud.point(i).iter().map(|c| c.to_string()).collect();
        row.push(cloud.weights[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cloud_csv(path: &Path) -> Result<InterfaceCloud, LabError> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    if cols < 3 {
        return Err(LabError::Format("cloud CSV needs coordinates and a weight".into()));
    }
    let dim = cols - 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| LabError::Format(format!("bad number {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != cols {
            return Err(LabError::Format("ragged cloud CSV".into()));
        }
        points.extend_from_slice(&vals[..dim]);
        weights.push(vals[dim]);
    }
    Ok(InterfaceCloud::new(dim, points, weights, path.display().to_string()))
}

/// Column-named table written as CSV. Numbers use the shortest round-trip
/// representation so repeated runs are byte-identical.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), LabError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Number cell; non-finite values print as `inf`, `-inf`, `NaN`.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Optional number cell, empty when absent.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

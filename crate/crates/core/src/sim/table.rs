//! Trajectory tables on disk.
//!
//! Columns: `t`, then per robot `alpha_i, dalpha_i, x_i, y_i, theta_i`
//! (1-based `i`), then `X, Y, dX, dY, E_kin, E_pot, P_X, P_Y, c_res`, and
//! for controller runs `theta_d, u_theta, c_x, c_y`. Numbers carry 17
//! significant digits, enough to round-trip every `f64` exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ROBOT_DOF;
use crate::sim::trajectory::{Sample, Trajectory};

pub const CONTROL_COLUMNS: [&str; 4] = ["theta_d", "u_theta", "c_x", "c_y"];

/// Parsed table: header names plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn header(robots: usize, control: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 1..=robots {
        for name in ["alpha", "dalpha", "x", "y", "theta"] {
            h.push(format!("{name}_{i}"));
        }
    }
    for name in ["X", "Y", "dX", "dY", "E_kin", "E_pot", "P_X", "P_Y", "c_res"] {
        h.push(name.to_string());
    }
    if control {
        h.extend(CONTROL_COLUMNS.iter().map(|s| s.to_string()));
    }
    h
}

/// Numeric row of one sample. Controller columns are written as zeros when
/// the trajectory has them but this sample does not.
pub fn row(sample: &Sample, robots: usize, control: bool) -> Vec<f64> {
    let s = &sample.state;
    let mut r = Vec::with_capacity(1 + 5 * robots + 13);
    r.push(sample.t);
    for i in 0..robots {
        let k = ROBOT_DOF * i;
        r.extend_from_slice(&[s.q[k], s.v[k], s.q[k + 1], s.q[k + 2], s.q[k + 3]]);
    }
    let [px, py] = s.platform_position();
    let [vx, vy] = s.platform_velocity();
    let d = &sample.diagnostics;
    r.extend_from_slice(&[
        px,
        py,
        vx,
        vy,
        d.kinetic,
        d.potential,
        d.momentum[0],
        d.momentum[1],
        d.constraint_residual,
    ]);
    if control {
        let c = sample.control.unwrap_or_default();
        r.extend_from_slice(&[c.theta_d, c.u_theta, c.c_x, c.c_y]);
    }
    r
}

/// The table a trajectory serializes to.
pub fn to_table(trajectory: &Trajectory) -> Table {
    let control = trajectory.has_control();
    Table {
        header: header(trajectory.robots, control),
        rows: trajectory
            .samples
            .iter()
            .map(|s| row(s, trajectory.robots, control))
            .collect(),
    }
}

fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_table<W: Write>(table: &Table, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r.iter().map(|v| format_number(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(input: R) -> csv::Result<Table> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.trim().parse::<f64>()).collect();
        let values = parsed.map_err(|e| {
            csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e))
        })?;
        rows.push(values);
    }
    Ok(Table { header, rows })
}

pub fn write_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_table(&to_table(trajectory), std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(std::io::BufReader::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

//! CSV and JSON artifacts.
//!
//! Trajectory CSV files carry the columns `t,x,z,v`, then `z_orig` for
//! Bouc-Wen systems, then `V,Vdot`. Values are written with 17 significant
//! digits so that reading a file back reproduces the stored doubles exactly.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::boucwen::BoucWenParams;
use crate::equilibria::LimitPrediction;
use crate::error::{DuhemError, Result};
use crate::integrator::Trajectory;
use crate::lyapunov::{energy, energy_rate};
use crate::model::{DuhemSystem, State};

fn num(u: f64) -> String {
    format!("{u:.16e}")
}

pub fn trajectory_header(with_z_orig: bool) -> Vec<&'static str> {
    let mut h = vec!["t", "x", "z", "v"];
    if with_z_orig {
        h.push("z_orig");
    }
    h.extend(["V", "Vdot"]);
    h
}

/// Writes one row per stored sample. `boucwen` adds the `z_orig` column.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    sys: &DuhemSystem,
    traj: &Trajectory,
    boucwen: Option<&BoucWenParams>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(boucwen.is_some()))?;
    for (t, s) in traj.iter() {
        let mut row = vec![num(t), num(s.x), num(s.z), num(s.v)];
        if let Some(p) = boucwen {
            row.push(num(p.unscale_z(s.z)));
        }
        row.push(num(energy(sys, s)?));
        row.push(num(energy_rate(sys, s)?));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A parsed numeric CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Times and states from the `t,x,z,v` columns.
    pub fn samples(&self) -> Result<(Vec<f64>, Vec<State>)> {
        let get = |c: &str| {
            self.column(c)
                .ok_or_else(|| DuhemError::Io(format!("missing column {c}")))
        };
        let (t, x, z, v) = (get("t")?, get("x")?, get("z")?, get("v")?);
        let states = (0..t.len()).map(|i| State::new(x[i], z[i], v[i])).collect();
        Ok((t, states))
    }
}

pub fn read_csv<R: Read>(input: R) -> Result<Table> {
    let mut r = csv::Reader::from_reader(input);
    let columns = r.headers()?.iter().map(|s| s.trim().to_string()).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| DuhemError::Io(format!("bad number {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

/// `x,H` rows.
pub fn write_curve_csv<W: Write>(out: W, samples: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "H"])?;
    for (x, h) in samples {
        w.write_record([x.to_string(), h.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `L,x,z` rows: the predicted rest point `(a, a + L, 0)` for each offset.
pub fn write_limits_csv<W: Write>(out: W, limits: &[LimitPrediction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["L", "x", "z"])?;
    for p in limits {
        w.write_record([p.l.to_string(), p.state.x.to_string(), p.state.z.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| DuhemError::Io(format!("{}: {e}", path.display())))
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| DuhemError::Io(format!("{}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::damped_dynamics::DampedTrajectory;
use crate::error::Result;
use crate::ode::OdeStats;
use crate::spectral_basis::{ModeSet, Region};
use crate::wave_dynamics::{energy, SpectralState};

/// A header plus rows of floats, written as RFC-4180 CSV and optionally as
/// a whitespace-separated `.dat` file for gnuplot.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Blank line after every `block` rows in the `.dat` variant (surface
    /// data for `splot`); 0 for none.
    pub block: usize,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            block: 0,
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `<dir>/<stem>.csv`, plus `<dir>/<stem>.dat` when `plot_data`.
    pub fn write(&self, dir: &Path, stem: &str, plot_data: bool) -> Result<()> {
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            // serde goes through ryu: shortest strings that round-trip.
            w.serialize(row)?;
        }
        w.flush()?;
        if plot_data {
            let mut out = std::io::BufWriter::new(fs::File::create(dir.join(format!("{stem}.dat")))?);
            writeln!(out, "# {}", self.header.join(" "))?;
            for (i, row) in self.rows.iter().enumerate() {
                if self.block > 0 && i > 0 && i % self.block == 0 {
                    writeln!(out)?;
                }
                let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            out.flush()?;
        }
        Ok(())
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn coefficient_header(g: usize, leading: &[&str]) -> Vec<String> {
    leading
        .iter()
        .map(|s| s.to_string())
        .chain((1..=g).map(|i| format!("a_{i}")))
        .chain((1..=g).map(|i| format!("b_{i}")))
        .collect()
}

/// Columns `t, a_1..a_G, b_1..b_G`.
pub fn trajectory_table(times: &[f64], states: &[SpectralState]) -> Table {
    let g = states.first().map_or(0, SpectralState::len);
    let mut t = Table::new(coefficient_header(g, &["t"]));
    for (time, s) in times.iter().zip(states) {
        let mut row = Vec::with_capacity(2 * g + 1);
        row.push(*time);
        row.extend_from_slice(&s.a);
        row.extend_from_slice(&s.b);
        t.push(row);
    }
    t
}

/// Columns `t, energy, a_1..a_G, b_1..b_G`.
pub fn damped_trajectory_table(traj: &DampedTrajectory, ms: &ModeSet) -> Table {
    let g = ms.len();
    let mut t = Table::new(coefficient_header(g, &["t", "energy"]));
    for (time, s) in traj.times().iter().zip(traj.states()) {
        let mut row = Vec::with_capacity(2 * g + 2);
        row.push(*time);
        row.push(energy(ms, s));
        row.extend_from_slice(&s.a);
        row.extend_from_slice(&s.b);
        t.push(row);
    }
    t
}

/// Run metadata written next to a damped trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct DampedRunMetadata {
    pub modes: usize,
    pub region: Region,
    pub horizon: f64,
    pub tol: f64,
    pub grid_points: usize,
    pub stats: OdeStats,
}

impl DampedRunMetadata {
    pub fn new(traj: &DampedTrajectory, region: Region) -> Self {
        Self {
            modes: traj.initial().len(),
            region,
            horizon: traj.horizon(),
            tol: traj.tol,
            grid_points: traj.times().len(),
            stats: traj.stats,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_floats() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["x", "y"]);
        let vals = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        for v in vals {
            t.push(vec![v, -v]);
        }
        t.block = 2;
        t.write(dir.path(), "t", true).unwrap();
        let mut r = csv::Reader::from_path(dir.path().join("t.csv")).unwrap();
        assert_eq!(r.headers().unwrap(), vec!["x", "y"]);
        for (rec, v) in r.records().zip(vals) {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<f64>().unwrap(), v);
            assert_eq!(rec[1].parse::<f64>().unwrap(), -v);
        }
        let dat = fs::read_to_string(dir.path().join("t.dat")).unwrap();
        let lines: Vec<&str> = dat.lines().collect();
        assert_eq!(lines[0], "# x y");
        assert_eq!(lines[3], "");
        assert_eq!(lines.len(), 1 + 4 + 1);
        let parsed: Vec<f64> = lines[4].split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, vec![vals[2], -vals[2]]);
    }
}

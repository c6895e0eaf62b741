//! Trajectory CSV and JSON file helpers.
//!
//! CSV header: `t,theta_1,…,theta_N,dtheta_1,…,dtheta_N,R,Phi`, one row per
//! retained sample, every float written with 17 significant digits so
//! doubles survive a round trip bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::OscillatorSystem;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|j| format!("theta_{j}")));
    h.extend((1..=n).map(|j| format!("dtheta_{j}")));
    h.push("R".into());
    h.push("Phi".into());
    h
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(csv_header(traj.n()))?;
    let mut row = Vec::with_capacity(2 * traj.n() + 3);
    for s in 0..traj.len() {
        row.clear();
        row.push(format_float(traj.times()[s]));
        row.extend(traj.theta(s).iter().map(|&x| format_float(x)));
        row.extend(traj.theta_dot(s).iter().map(|&x| format_float(x)));
        let z = traj.order(s);
        row.push(format_float(z.r));
        row.push(format_float(z.phi));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<csv>".into(),
        source: e,
    })?;
    Ok(())
}

/// Reads a trajectory CSV produced for `system`. The R and Phi columns are
/// checked against the order parameter recomputed from the phases.
pub fn read_trajectory_csv<R: Read>(input: R, system: &OscillatorSystem) -> Result<Trajectory> {
    let n = system.n();
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != csv_header(n) {
        return Err(Error::Config(format!(
            "trajectory header does not match a system of {n} oscillators"
        )));
    }
    let (mut times, mut thetas, mut theta_dots, mut rs) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record?;
        let vals: Vec<f64> = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad number in trajectory CSV: {e}")))?;
        times.push(vals[0]);
        thetas.extend_from_slice(&vals[1..=n]);
        theta_dots.extend_from_slice(&vals[n + 1..=2 * n]);
        rs.push(vals[2 * n + 1]);
    }
    let traj = Trajectory::from_samples(system.clone(), times, thetas, theta_dots)?;
    if let Some(s) = (0..traj.len()).find(|&s| (traj.order(s).r - rs[s]).abs() > 1e-12) {
        return Err(Error::Config(format!(
            "R column disagrees with phases at row {}",
            s + 1
        )));
    }
    Ok(traj)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_trajectory_file(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_trajectory_csv(traj, std::io::BufWriter::new(file))
}

pub fn read_system(path: &Path) -> Result<OscillatorSystem> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorConfig};

    #[test]
    fn csv_roundtrip_is_exact() {
        let s = OscillatorSystem::uniform(vec![1.0, 2.0, 1.0], vec![0.3, -0.1, -0.1], 0.9).unwrap();
        let tr = integrate(&s, &[0.1, 1.0, 5.0], &IntegratorConfig::rk4(0.01, 3.0, 7)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,theta_1,theta_2,theta_3,dtheta_1,dtheta_2,dtheta_3,R,Phi\n"));
        assert!(text.ends_with('\n'));
        let back = read_trajectory_csv(buf.as_slice(), &s).unwrap();
        assert_eq!(back.times(), tr.times());
        for i in 0..tr.len() {
            assert_eq!(back.theta(i), tr.theta(i));
            assert_eq!(back.theta_dot(i), tr.theta_dot(i));
            assert_eq!(back.order(i), tr.order(i));
        }
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let s = OscillatorSystem::uniform(vec![1.0; 2], vec![0.0; 2], 1.0).unwrap();
        let err = read_trajectory_csv("t,theta_1,R,Phi\n0,0,1,0\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imu::GroundTruth;
use crate::nav::{Quaternion, Vec3};
use crate::signal::{Signal, IMU_CHANNELS};

pub const SIGNAL_HEADER: [&str; 7] = ["t", "ax", "ay", "az", "gx", "gy", "gz"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
pub const LABEL_HEADER: [&str; 7] = ["window_id", "dyaw", "dpitch", "droll", "dx", "dy", "dz"];

/// One row of a labels file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRow {
    pub window_id: usize,
    /// `[dyaw, dpitch, droll]`, radians.
    pub d_att: Vec3<f64>,
    /// `[dx, dy, dz]`, meters.
    pub d_pos: Vec3<f64>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Input(format!("{}: malformed CSV ({other:?})", path.display())),
    }
}

/// Reads a numeric table whose header must equal `header`.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = open_reader(path)?;
    let found: Vec<String> = rdr.headers().map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Input(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| Error::Input(format!("{}: row {} has a non-numeric field", path.display(), i + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes a numeric table with LF line endings and round-trip float text.
pub fn write_table<'a>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Sample rate implied by a uniform time column.
fn rate_from_times(path: &Path, t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::Input(format!("{}: need at least two samples to infer the sample rate", path.display())));
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(Error::Input(format!("{}: time column does not increase", path.display())));
    }
    let dt = span / (t.len() - 1) as f64;
    if let Some(k) = t.windows(2).position(|w| ((w[1] - w[0]) - dt).abs() > 1e-3 * dt) {
        return Err(Error::Input(format!("{}: non-uniform sampling at row {}", path.display(), k + 3)));
    }
    let rate = 1.0 / dt;
    Ok(if (rate - rate.round()).abs() < 1e-6 * rate { rate.round() } else { rate })
}

pub fn write_signal(path: &Path, signal: &Signal<f64>) -> Result<()> {
    signal.require_imu()?;
    let dt = signal.dt();
    let rows: Vec<[f64; 7]> = (0..signal.len())
        .map(|k| {
            let (a, g) = (signal.accel(k), signal.gyro(k));
            [k as f64 * dt, a[0], a[1], a[2], g[0], g[1], g[2]]
        })
        .collect();
    write_table(path, &SIGNAL_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn read_signal(path: &Path) -> Result<Signal<f64>> {
    let rows = read_table(path, &SIGNAL_HEADER)?;
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let rate = rate_from_times(path, &t)?;
    let channels = (1..=IMU_CHANNELS).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    Signal::new(channels, rate)
}

pub fn write_trajectory(path: &Path, truth: &GroundTruth) -> Result<()> {
    let rows: Vec<[f64; 8]> = (0..truth.len())
        .map(|k| {
            let (p, q) = (truth.positions[k], truth.quaternions[k]);
            [truth.timestamps[k], p[0], p[1], p[2], q.w, q.x, q.y, q.z]
        })
        .collect();
    write_table(path, &TRAJECTORY_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn read_trajectory(path: &Path) -> Result<GroundTruth> {
    let rows = read_table(path, &TRAJECTORY_HEADER)?;
    let timestamps: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let sample_rate = rate_from_times(path, &timestamps)?;
    let mut quaternions = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let q = Quaternion::new(r[4], r[5], r[6], r[7]);
        if !q.is_unit(1e-6) {
            return Err(Error::Input(format!("{}: row {} holds a non-unit quaternion", path.display(), i + 2)));
        }
        quaternions.push(q);
    }
    Ok(GroundTruth {
        sample_rate,
        timestamps,
        positions: rows.iter().map(|r| [r[1], r[2], r[3]]).collect(),
        quaternions,
    })
}

pub fn write_labels(path: &Path, labels: &[LabelRow]) -> Result<()> {
    let rows: Vec<[f64; 7]> = labels
        .iter()
        .map(|l| [l.window_id as f64, l.d_att[0], l.d_att[1], l.d_att[2], l.d_pos[0], l.d_pos[1], l.d_pos[2]])
        .collect();
    write_table(path, &LABEL_HEADER, rows.iter().map(|r| r.as_slice()))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    read_table(path, &LABEL_HEADER)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r[0] < 0.0 || r[0].fract() != 0.0 {
                return Err(Error::Input(format!("{}: row {} has a non-integer window_id", path.display(), i + 2)));
            }
            Ok(LabelRow { window_id: r[0] as usize, d_att: [r[1], r[2], r[3]], d_pos: [r[4], r[5], r[6]] })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imu::{generate_trajectory, ideal_imu, MotionClass, TrajectorySpec};
    use crate::nav::gravity;

    #[test]
    fn signal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let truth = generate_trajectory(&TrajectorySpec::new(4.0, 200.0, MotionClass::Spline3d, 1.0), 3).unwrap();
        let sig = ideal_imu(&truth, gravity()).unwrap();
        let p = dir.path().join("s.csv");
        write_signal(&p, &sig).unwrap();
        assert_eq!(read_signal(&p).unwrap(), sig);
        let first = std::fs::read_to_string(&p).unwrap();
        assert!(first.starts_with("t,ax,ay,az,gx,gy,gz\n"));
        assert!(!first.contains('\r'));
    }

    #[test]
    fn trajectory_and_labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let truth = generate_trajectory(&TrajectorySpec::new(4.0, 200.0, MotionClass::Circular, 1.0), 4).unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory(&p, &truth).unwrap();
        let back = read_trajectory(&p).unwrap();
        assert_eq!(back.positions, truth.positions);
        assert_eq!(back.quaternions, truth.quaternions);
        let labels = vec![LabelRow { window_id: 3, d_att: [0.1, -0.2, 1e-9], d_pos: [1.5, 0.0, -2.25] }];
        let p = dir.path().join("l.csv");
        write_labels(&p, &labels).unwrap();
        assert_eq!(read_labels(&p).unwrap(), labels);
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_signal(&dir.path().join("nope.csv")), Err(Error::MissingFile(_))));
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "t,ax,ay,az,gx,gy\n0,1,2,3,4,5\n").unwrap();
        assert!(matches!(read_signal(&p), Err(Error::Input(_))));
        std::fs::write(&p, "t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,x\n0.005,1,2,3,4,5,6\n").unwrap();
        assert!(matches!(read_signal(&p), Err(Error::Input(_))));
        std::fs::write(&p, "t,ax,ay,az,gx,gy,gz\n0,1,2,3,4,5,6\n0.005,1,2,3,4,5,6\n0.02,1,2,3,4,5,6\n").unwrap();
        assert!(matches!(read_signal(&p), Err(Error::Input(_))));
    }
}

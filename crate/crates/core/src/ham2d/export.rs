use std::io::Write;

use super::Trajectory;

pub const TRAJECTORY_CSV_HEADER: [&str; 8] = ["t", "x", "y", "H", "J11", "J12", "J21", "J22"];

/// Write a trajectory (or any sweep of samples) as CSV.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_CSV_HEADER)?;
    for s in &traj.samples {
        let j = s.jacobian.0;
        w.write_record(
            [
                s.t, s.point.x, s.point.y, s.energy, j[0][0], j[0][1], j[1][0], j[1][1],
            ]
            .iter()
            .map(|v| format!("{v:e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

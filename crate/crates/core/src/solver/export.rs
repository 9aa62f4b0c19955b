//! CSV snapshots and their JSON metadata.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::GridFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMetadata {
    pub group: String,
    pub h: f64,
    pub delta: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl_factor: f64,
    pub steps: usize,
    pub time: f64,
    pub axes: Vec<(f64, f64)>,
    pub nodes_per_axis: Vec<usize>,
}

/// Header `axis_0,...,axis_{N-1},t,u`, then one row per node in index order.
/// Floats use the shortest round-trip representation.
pub fn write_snapshot_csv<W: Write>(mut w: W, u: &GridFunction) -> io::Result<()> {
    let grid = u.grid();
    let header: Vec<String> = (0..grid.dim()).map(|d| format!("axis_{d}")).chain(["t".into(), "u".into()]).collect();
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for node in 0..grid.node_count() {
        line.clear();
        for x in grid.node_coords(node) {
            line.push_str(&format!("{x:?},"));
        }
        line.push_str(&format!("{:?},{:?}", u.time(), u.value(node)));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

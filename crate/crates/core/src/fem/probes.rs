use serde::{Deserialize, Serialize};

use super::mesh::{Mesh, SNAP_TOL};
use crate::error::{MorError, Result};
use crate::linalg::SparseMatrixReal;

/// Output measurement points in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementSet {
    pub points: Vec<[f64; 2]>,
}

impl MeasurementSet {
    /// Thirteen probes on two arcs centered at the corner `(0, 1)`: five at
    /// radius 0.5111 every 15°, eight at radius 0.7611 every 10°, sweeping
    /// clockwise from the top edge.
    pub fn default_arcs() -> Self {
        let arc = |radius: f64, step_deg: f64, count: usize| {
            (1..=count).map(move |j| {
                let theta = (-step_deg * j as f64).to_radians();
                [radius * theta.cos(), 1.0 + radius * theta.sin()]
            })
        };
        Self {
            points: arc(0.5111, 15.0, 5).chain(arc(0.7611, 10.0, 8)).collect(),
        }
    }
}

/// A selection matrix together with how each probe was resolved.
#[derive(Debug, Clone)]
pub struct ResolvedProbes {
    pub matrix: SparseMatrixReal,
    pub nodes: Vec<usize>,
    /// Probe index pairs that resolved to the same node.
    pub duplicates: Vec<(usize, usize)>,
}

/// One-hot rows selecting the mesh node nearest to each probe.
pub fn measurement_matrix(mesh: &Mesh, probes: &MeasurementSet) -> Result<ResolvedProbes> {
    let mut nodes = Vec::with_capacity(probes.points.len());
    for (index, &[x, y]) in probes.points.iter().enumerate() {
        let inside = (-SNAP_TOL..=1.0 + SNAP_TOL).contains(&x) && (-SNAP_TOL..=1.0 + SNAP_TOL).contains(&y);
        if !inside {
            return Err(MorError::ProbeOutside { index, x, y });
        }
        let (best, _) = mesh
            .nodes
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p[0] - x).powi(2) + (p[1] - y).powi(2)))
            .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        nodes.push(best);
    }
    let mut duplicates = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if nodes[i] == nodes[j] {
                duplicates.push((i, j));
            }
        }
    }
    if !duplicates.is_empty() {
        log::warn!(
            "{} probe pair(s) resolve to the same mesh node; first: probes {} and {}",
            duplicates.len(),
            duplicates[0].0,
            duplicates[0].1
        );
    }
    let triplets: Vec<_> = nodes.iter().enumerate().map(|(row, &node)| (row, node, 1.0)).collect();
    let matrix = SparseMatrixReal::from_triplets(&triplets, nodes.len(), mesh.nodes.len())?;
    Ok(ResolvedProbes {
        matrix,
        nodes,
        duplicates,
    })
}

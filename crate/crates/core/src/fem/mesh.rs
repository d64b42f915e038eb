use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MorError, Result};

/// Snapping tolerance used when testing coordinates against boundary segments.
pub const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryLabel {
    /// Rigid part carrying the Neumann excitation.
    Neumann,
    /// Impedance (absorbing) part.
    Robin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub label: Option<BoundaryLabel>,
}

/// Structured triangulation of the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub subdivisions: usize,
    pub nodes: Vec<[f64; 2]>,
    /// Counterclockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Where the Neumann (excited) segment sits on the left edge `x = 0`.
///
/// Everything else on the boundary is impedance. The scalar input `u`
/// carries the Neumann datum; `B` is assembled for a unit datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySpec {
    /// Lower end of the Neumann segment on `x = 0` (m).
    pub neumann_y_min: f64,
    /// Upper end of the Neumann segment on `x = 0` (m).
    pub neumann_y_max: f64,
    /// Neumann datum `g`, as `[re, im]`; enters through the input `u`.
    pub neumann_datum: [f64; 2],
}

impl Default for BoundarySpec {
    fn default() -> Self {
        Self {
            neumann_y_min: 0.75,
            neumann_y_max: 1.0,
            neumann_datum: [0.0, 10.0],
        }
    }
}

impl BoundarySpec {
    fn contains(&self, p: [f64; 2]) -> bool {
        p[0].abs() <= SNAP_TOL
            && p[1] >= self.neumann_y_min - SNAP_TOL
            && p[1] <= self.neumann_y_max + SNAP_TOL
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.neumann_y_min.is_finite()
            && self.neumann_y_max.is_finite()
            && 0.0 <= self.neumann_y_min
            && self.neumann_y_min < self.neumann_y_max
            && self.neumann_y_max <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(MorError::InvalidConfig(format!(
                "Neumann segment [{}, {}] must satisfy 0 <= min < max <= 1",
                self.neumann_y_min, self.neumann_y_max
            )))
        }
    }
}

impl Mesh {
    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * (self.subdivisions + 1) + i
    }

    /// Element edge length `h = 1/m`.
    pub fn element_size(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let [a, b] = e.nodes.map(|i| self.nodes[i]);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    pub fn is_classified(&self) -> bool {
        self.boundary_edges.iter().all(|e| e.label.is_some())
    }

    pub fn edges_with(&self, label: BoundaryLabel) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.label == Some(label))
    }

    /// Hex SHA-256 over coordinates, connectivity and boundary labels.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.subdivisions as u64).to_le_bytes());
        for p in &self.nodes {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        for e in &self.boundary_edges {
            h.update((e.nodes[0] as u64).to_le_bytes());
            h.update((e.nodes[1] as u64).to_le_bytes());
            h.update([match e.label {
                None => 0u8,
                Some(BoundaryLabel::Neumann) => 1,
                Some(BoundaryLabel::Robin) => 2,
            }]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Plain-text listing: node, triangle and boundary-edge sections.
    pub fn to_listing(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {:?} {:?}", p[0], p[1]);
        }
        let _ = writeln!(out, "# triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "# boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let label = match e.label {
                None => "unlabeled",
                Some(BoundaryLabel::Neumann) => "neumann",
                Some(BoundaryLabel::Robin) => "robin",
            };
            let _ = writeln!(out, "{} {} {label}", e.nodes[0], e.nodes[1]);
        }
        out
    }
}

/// Uniform `m x m` grid on `[0,1]²`, each cell split along its
/// lower-left to upper-right diagonal.
pub fn build_unit_square_mesh(m: usize) -> Result<Mesh> {
    if m == 0 {
        return Err(MorError::InvalidConfig("mesh needs at least one subdivision".into()));
    }
    let h = 1.0 / m as f64;
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            // exact endpoints so boundary tests need no snapping at 0 and 1
            let x = if i == m { 1.0 } else { i as f64 * h };
            let y = if j == m { 1.0 } else { j as f64 * h };
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(4 * m);
    let mut push = |a: usize, b: usize| boundary_edges.push(BoundaryEdge { nodes: [a, b], label: None });
    for i in 0..m {
        push(id(i, 0), id(i + 1, 0));
    }
    for j in 0..m {
        push(id(m, j), id(m, j + 1));
    }
    for i in (0..m).rev() {
        push(id(i + 1, m), id(i, m));
    }
    for j in (0..m).rev() {
        push(id(0, j + 1), id(0, j));
    }
    Ok(Mesh {
        subdivisions: m,
        nodes,
        triangles,
        boundary_edges,
    })
}

/// Labels each boundary edge Neumann or Robin.
pub fn classify_boundary(mut mesh: Mesh, spec: &BoundarySpec) -> Result<Mesh> {
    spec.validate()?;
    let mut neumann = 0;
    for e in &mut mesh.boundary_edges {
        let [a, b] = e.nodes.map(|i| mesh.nodes[i]);
        if spec.contains(a) && spec.contains(b) {
            e.label = Some(BoundaryLabel::Neumann);
            neumann += 1;
        } else {
            e.label = Some(BoundaryLabel::Robin);
        }
    }
    if neumann == 0 {
        return Err(MorError::EmptyNeumannBoundary);
    }
    Ok(mesh)
}

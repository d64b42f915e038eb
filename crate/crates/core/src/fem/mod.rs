//! Unit-square Helmholtz model: structured P1 mesh, boundary labels,
//! assembly and measurement points.

mod assembly;
mod mesh;
mod probes;

pub use assembly::{assemble, assemble_with_probes};
pub use mesh::{build_unit_square_mesh, classify_boundary, BoundaryEdge, BoundaryLabel, BoundarySpec, Mesh};
pub use probes::{measurement_matrix, MeasurementSet, ResolvedProbes};

use crate::error::Result;
use crate::system::SecondOrderSystem;

/// Builds, labels and assembles the unit-square model in one go.
pub fn build_model(subdivisions: usize, boundary: &BoundarySpec, probes: &MeasurementSet) -> Result<SecondOrderSystem> {
    let mesh = classify_boundary(build_unit_square_mesh(subdivisions)?, boundary)?;
    let mut sys = assemble_with_probes(&mesh, probes)?;
    sys.metadata.boundary = Some(boundary.clone());
    Ok(sys)
}

/// Points per wavelength `2π / (k h)`; values below 10 under-resolve the wave.
pub fn points_per_wavelength(k: f64, subdivisions: usize) -> f64 {
    2.0 * std::f64::consts::PI * subdivisions as f64 / k
}

//! P1 assembly of the Helmholtz weak form.
//!
//! `K` from `∫∇p·∇q`, `M` from `∫pq`, `D` from `∫_{Γ_R} pq` (the impedance
//! term with unit coefficient) and `B` from `∫_{Γ_N} q` for a unit Neumann
//! datum. All element integrals are exact for linear elements.

use super::mesh::{BoundaryLabel, Mesh};
use super::probes::{measurement_matrix, MeasurementSet};
use crate::error::{MorError, Result};
use crate::linalg::SparseMatrixReal;
use crate::system::{SecondOrderSystem, SystemMetadata};

/// Element stiffness and mass of a linear triangle.
fn triangle_matrices(p: [[f64; 2]; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let [a, b, c] = p;
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    // gradient coefficients of the barycentric coordinates
    let beta = [b[1] - c[1], c[1] - a[1], a[1] - b[1]];
    let gamma = [c[0] - b[0], a[0] - c[0], b[0] - a[0]];
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = (beta[i] * beta[j] + gamma[i] * gamma[j]) / (4.0 * area);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me)
}

/// Assembles `M, D, K, B` and the measurement map `C` for `probes`.
pub fn assemble_with_probes(mesh: &Mesh, probes: &MeasurementSet) -> Result<SecondOrderSystem> {
    if !mesh.is_classified() {
        return Err(MorError::NotClassified);
    }
    let n = mesh.nodes.len();
    let mut k_trip = Vec::with_capacity(9 * mesh.triangles.len());
    let mut m_trip = Vec::with_capacity(9 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let (ke, me) = triangle_matrices(tri.map(|i| mesh.nodes[i]));
        for (a, &i) in tri.iter().enumerate() {
            for (b, &j) in tri.iter().enumerate() {
                k_trip.push((i, j, ke[a][b]));
                m_trip.push((i, j, me[a][b]));
            }
        }
    }

    let mut d_trip = Vec::new();
    let mut b_trip = Vec::new();
    for e in &mesh.boundary_edges {
        let len = mesh.edge_length(e);
        let [i, j] = e.nodes;
        match e.label {
            Some(BoundaryLabel::Robin) => {
                d_trip.extend([
                    (i, i, len / 3.0),
                    (j, j, len / 3.0),
                    (i, j, len / 6.0),
                    (j, i, len / 6.0),
                ]);
            }
            Some(BoundaryLabel::Neumann) => {
                b_trip.extend([(i, 0, len / 2.0), (j, 0, len / 2.0)]);
            }
            None => return Err(MorError::NotClassified),
        }
    }

    let k = SparseMatrixReal::from_triplets(&k_trip, n, n)?;
    let m = SparseMatrixReal::from_triplets(&m_trip, n, n)?;
    let d = SparseMatrixReal::from_triplets(&d_trip, n, n)?;
    let b = SparseMatrixReal::from_triplets(&b_trip, n, 1)?;
    let c = measurement_matrix(mesh, probes)?.matrix;
    let mut sys = SecondOrderSystem::new(m, d, k, b, c)?;
    sys.metadata = SystemMetadata {
        mesh_hash: Some(mesh.hash()),
        subdivisions: Some(mesh.subdivisions),
        boundary: None,
    };
    Ok(sys)
}

/// Assembles the system with the default measurement points.
pub fn assemble(mesh: &Mesh) -> Result<SecondOrderSystem> {
    assemble_with_probes(mesh, &MeasurementSet::default_arcs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_unit_square_mesh, classify_boundary, BoundarySpec};
    use crate::linalg::{factorize, Op};
    use num_complex::Complex64;

    fn labeled(m: usize) -> Mesh {
        classify_boundary(build_unit_square_mesh(m).unwrap(), &BoundarySpec::default()).unwrap()
    }

    #[test]
    fn unlabeled_mesh_rejected() {
        let mesh = build_unit_square_mesh(4).unwrap();
        assert!(matches!(assemble(&mesh), Err(MorError::NotClassified)));
    }

    #[test]
    fn integral_identities() {
        for m in [4, 8, 64] {
            let sys = assemble(&labeled(m)).unwrap();
            assert!((sys.m.sum() - 1.0).abs() < 1e-12, "mass sum");
            assert!((sys.d.sum() - 3.75).abs() < 1e-12, "damping sum {}", sys.d.sum());
            assert!((sys.b.sum() - 0.25).abs() < 1e-12, "load sum");
            let k1 = sys.k.mul_vec(&vec![1.0; sys.n()]);
            assert!(k1.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn damping_support_on_robin_nodes_only() {
        let mesh = labeled(8);
        let sys = assemble(&mesh).unwrap();
        let robin: std::collections::BTreeSet<usize> = mesh
            .edges_with(BoundaryLabel::Robin)
            .flat_map(|e| e.nodes)
            .collect();
        for row in sys.d.nonzero_rows() {
            assert!(robin.contains(&row));
        }
    }

    #[test]
    fn symmetric_and_semidefinite() {
        let sys = assemble(&labeled(8)).unwrap();
        for a in [&sys.m, &sys.d, &sys.k] {
            assert!(a.is_symmetric(1e-14));
        }
        // deterministic pseudo-random vectors
        let mut state = 12345u64;
        for _ in 0..20 {
            let x: Vec<f64> = (0..sys.n())
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            let kx = sys.k.mul_vec(&x);
            let mx = sys.m.mul_vec(&x);
            let xkx: f64 = x.iter().zip(&kx).map(|(a, b)| a * b).sum();
            let xmx: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
            assert!(xkx >= -1e-12);
            assert!(xmx > 0.0);
        }
    }

    #[test]
    fn direct_solve_at_k20_is_nontrivial() {
        let sys = assemble(&labeled(32)).unwrap();
        let a = sys.dynamic_stiffness(20.0).unwrap();
        let f = factorize(&a).unwrap();
        let u = Complex64::new(0.0, 10.0);
        let rhs: Vec<Complex64> = (0..sys.n()).map(|i| u * sys.b.get(i, 0)).collect();
        let p = f.solve(&rhs, Op::NoTranspose).unwrap();
        assert!(p.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        assert!(crate::linalg::norm2(&p) > 0.0);
        assert!(crate::linalg::Factorization::relative_residual(&a, &p, &rhs) < 1e-10);
    }
}

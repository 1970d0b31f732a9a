//! Dense P1 assembly: stiffness matrix with Dirichlet rows eliminated, and
//! the factorized operator used as descent preconditioner and residual
//! metric. Meshes here are small enough that dense factorizations win over
//! sparse bookkeeping.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::mesh::Mesh;

/// Full P1 stiffness matrix (no boundary conditions applied).
pub fn stiffness_matrix(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.n_vertices();
    let mut k = DMatrix::zeros(n, n);
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let grads = mesh.shape_grads[ti];
        for a in 0..3 {
            for b in 0..3 {
                k[(tri[a], tri[b])] +=
                    mesh.areas[ti] * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            }
        }
    }
    k
}

/// Stiffness matrix with boundary rows and columns replaced by identity.
pub fn constrained_stiffness(mesh: &Mesh) -> DMatrix<f64> {
    let mut k = stiffness_matrix(mesh);
    for &b in &mesh.boundary_vertices {
        for j in 0..k.ncols() {
            k[(b, j)] = 0.0;
            k[(j, b)] = 0.0;
        }
        k[(b, b)] = 1.0;
    }
    k
}

/// Cholesky factorization of the constrained stiffness operator. Solves are
/// the H1-type preconditioner for descent directions, and `dual_norm` is the
/// induced residual norm sqrt(r^T K^-1 r).
pub struct Preconditioner {
    chol: Cholesky<f64, Dyn>,
}

impl Preconditioner {
    pub fn new(mesh: &Mesh) -> Self {
        let k = constrained_stiffness(mesh);
        let chol = k.cholesky().expect("constrained stiffness is SPD");
        Preconditioner { chol }
    }

    pub fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(r)
    }

    /// sqrt(r^T K^-1 r); zero boundary rows stay zero through the solve.
    pub fn dual_norm(&self, r: &DVector<f64>) -> f64 {
        self.chol.solve(r).dot(r).max(0.0).sqrt()
    }
}

//! Discrete p-energy functionals on P1 fields and their first variations.
//!
//! The gradient term uses the regularized density ((|grad u|^2 + eps^2)^(p/2))
//! so the functional is differentiable at flat triangles when p < 2; eps = 0
//! gives the exact discrete functional. Source integrals use lumped vertex
//! quadrature throughout, which keeps them exact for piecewise-linear
//! integrands and sign-preserving.

use nalgebra::DVector;

use crate::field::Field;
use crate::source::{SignBranch, SourceSpec};

/// Exponent, regularization and sign branch for one energy evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParams {
    /// Exponent in (1, 2].
    pub p: f64,
    /// Gradient regularization, >= 0.
    pub eps: f64,
    pub branch: SignBranch,
}

impl EnergyParams {
    pub fn new(p: f64, eps: f64, branch: SignBranch) -> Self {
        assert!(p > 1.0 && p <= 2.0, "p must lie in (1, 2], got {p}");
        assert!(eps >= 0.0, "eps must be nonnegative");
        EnergyParams { p, eps, branch }
    }

    pub fn plus(p: f64, eps: f64) -> Self {
        Self::new(p, eps, SignBranch::Plus)
    }
}

/// Sum over triangles of area * (|grad u|^2 + eps^2)^(p/2).
pub(crate) fn gradient_integral(mesh: &crate::mesh::Mesh, values: &[f64], p: f64, eps: f64) -> f64 {
    let e2 = eps * eps;
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = mesh.grad_on(t, values);
        let w = g[0] * g[0] + g[1] * g[1] + e2;
        if w > 0.0 {
            total += mesh.areas[t] * w.powf(p / 2.0);
        }
    }
    total
}

pub(crate) fn source_integral(
    mesh: &crate::mesh::Mesh,
    values: &[f64],
    spec: &SourceSpec,
    branch: SignBranch,
) -> f64 {
    let mut total = 0.0;
    for (v, &m) in mesh.lumped_mass.iter().enumerate() {
        total += m * spec.antiderivative_branch(values[v], branch);
    }
    total
}

/// J_p(u) = (1/p) int (|grad u|^2 + eps^2)^(p/2) - int F_branch(u), with the
/// source term integrated by lumped vertex quadrature.
pub fn energy_jp(u: &Field, params: &EnergyParams, spec: &SourceSpec) -> f64 {
    assert!(u.zero_trace, "energy_jp expects a zero-trace field");
    gradient_integral(&u.mesh, &u.values, params.p, params.eps) / params.p
        - source_integral(&u.mesh, &u.values, spec, params.branch)
}

/// I_p(u) = J_p^+(u) + (p-1)/p |Omega|; nondecreasing in p at fixed u.
pub fn energy_ip(u: &Field, params: &EnergyParams, spec: &SourceSpec) -> f64 {
    let plus = EnergyParams { branch: SignBranch::Plus, ..*params };
    energy_jp(u, &plus, spec) + (params.p - 1.0) / params.p * u.mesh.total_area
}

/// Limit functional J(u) = int |grad u| + boundary trace integral of |u|
/// minus int F(u). Accepts fields with nonzero trace.
pub fn energy_j1(u: &Field, spec: &SourceSpec) -> f64 {
    let mesh = &u.mesh;
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = mesh.grad_on(t, &u.values);
        total += mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]).sqrt();
    }
    for e in &mesh.boundary_edges {
        total += e.length * (u.values[e.a].abs() + u.values[e.b].abs()) / 2.0;
    }
    total - source_integral(mesh, &u.values, spec, SignBranch::Full)
}

/// The BV-type norm int |grad u| + boundary integral of |u| used for the
/// nontriviality radius.
pub fn bv_norm(u: &Field) -> f64 {
    let mesh = &u.mesh;
    let mut total = 0.0;
    for t in 0..mesh.n_triangles() {
        let g = mesh.grad_on(t, &u.values);
        total += mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]).sqrt();
    }
    for e in &mesh.boundary_edges {
        total += e.length * (u.values[e.a].abs() + u.values[e.b].abs()) / 2.0;
    }
    total
}

/// Nodal residual of J_p: at each free vertex v,
/// sum_T area * (|grad u|^2 + eps^2)^((p-2)/2) grad u . grad phi_v
/// - m_v f_branch(u_v). Rows at constrained (boundary) vertices are zero.
pub fn gradient_jp(u: &Field, params: &EnergyParams, spec: &SourceSpec) -> DVector<f64> {
    assert!(u.zero_trace, "gradient_jp expects a zero-trace field");
    residual_slice(&u.mesh, &u.values, params.p, params.eps, spec, params.branch)
}

pub(crate) fn residual_slice(
    mesh: &crate::mesh::Mesh,
    values: &[f64],
    p: f64,
    eps: f64,
    spec: &SourceSpec,
    branch: SignBranch,
) -> DVector<f64> {
    let mut r = DVector::zeros(mesh.n_vertices());
    let e2 = eps * eps;
    for t in 0..mesh.n_triangles() {
        let g = mesh.grad_on(t, values);
        let w = g[0] * g[0] + g[1] * g[1] + e2;
        if w == 0.0 {
            continue;
        }
        let coeff = mesh.areas[t] * w.powf((p - 2.0) / 2.0);
        let tri = mesh.triangles[t];
        let grads = mesh.shape_grads[t];
        for k in 0..3 {
            r[tri[k]] += coeff * (g[0] * grads[k][0] + g[1] * grads[k][1]);
        }
    }
    for (v, &m) in mesh.lumped_mass.iter().enumerate() {
        r[v] -= m * spec.f_branch(values[v], branch);
    }
    for &b in &mesh.boundary_vertices {
        r[b] = 0.0;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, build_rect_mesh};
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn random_field(mesh: &Arc<crate::mesh::Mesh>, rng: &mut StdRng) -> Field {
        let values: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::from_values(mesh.clone(), values, true)
    }

    #[test]
    fn zero_field_energies_vanish() {
        let mesh = Arc::new(build_disk_mesh(1.0, 1));
        let u = Field::zeros(mesh.clone(), true);
        let spec = SourceSpec::power(0.5, 2);
        for p in [1.2, 1.5, 2.0] {
            assert_eq!(energy_jp(&u, &EnergyParams::plus(p, 0.0), &spec), 0.0);
        }
        assert_eq!(energy_j1(&u, &spec), 0.0);
    }

    #[test]
    fn ip_shift_at_zero_field() {
        let mesh = Arc::new(build_rect_mesh(1.0, 1.0, 2, 2));
        let u = Field::zeros(mesh.clone(), true);
        let spec = SourceSpec::power(0.5, 2);
        let v = energy_ip(&u, &EnergyParams::plus(1.5, 0.0), &spec);
        assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-14);
        // Shift vanishes as p -> 1+.
        let v = energy_ip(&u, &EnergyParams::plus(1.0 + 1e-9, 0.0), &spec);
        assert!(v.abs() < 1e-8);
    }

    #[test]
    fn single_node_patch_matches_hand_quadrature() {
        // Interior node of rect(1,1,2,2) set to t: energy must equal the
        // hand-assembled sum over its triangle fan, with the plus-branch
        // source integrated by the lumped vertex rule.
        let mesh = Arc::new(build_rect_mesh(1.0, 1.0, 2, 2));
        let spec = SourceSpec::plus_power(2.0, 2);
        let center = (0..mesh.n_vertices())
            .find(|&v| {
                let p = mesh.vertices[v];
                (p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14
            })
            .expect("center vertex exists");
        let t_val = 0.7;
        let mut values = vec![0.0; mesh.n_vertices()];
        values[center] = t_val;
        let u = Field::from_values(mesh.clone(), values, true);

        let p = 1.4;
        // Hand quadrature: per triangle, gradient of t * phi_center from the
        // explicit P1 shape gradient formula written out independently.
        let mut grad_term = 0.0;
        for (ti, tri) in mesh.triangles.iter().enumerate() {
            if let Some(loc) = tri.iter().position(|&v| v == center) {
                let [a, b, c] = [
                    mesh.vertices[tri[loc]],
                    mesh.vertices[tri[(loc + 1) % 3]],
                    mesh.vertices[tri[(loc + 2) % 3]],
                ];
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let grad = [(b[1] - c[1]) / det, (c[0] - b[0]) / det];
                let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
                grad_term += mesh.areas[ti] * (t_val * norm).powf(p);
            }
        }
        let mass: f64 = mesh
            .triangles
            .iter()
            .enumerate()
            .filter(|(_, tri)| tri.contains(&center))
            .map(|(ti, _)| mesh.areas[ti] / 3.0)
            .sum();
        let expected = grad_term / p - mass * t_val.powi(3) / 3.0;

        let got = energy_jp(&u, &EnergyParams::plus(p, 0.0), &spec);
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }

    #[test]
    fn quadratic_homogeneity_at_p_two() {
        let mesh = Arc::new(build_disk_mesh(1.0, 2));
        let mut rng = StdRng::seed_from_u64(7);
        let u = random_field(&mesh, &mut rng);
        let mut spec = SourceSpec::power(0.5, 2);
        spec.amplitude = 0.0;
        let params = EnergyParams::plus(2.0, 0.0);
        let e1 = energy_jp(&u, &params, &spec);
        let e2 = energy_jp(&u.scaled(2.0), &params, &spec);
        assert_relative_eq!(e2, 4.0 * e1, max_relative = 1e-13);
    }

    #[test]
    fn ip_monotone_in_p_over_random_fields() {
        let mesh = Arc::new(build_disk_mesh(1.0, 2));
        let spec = SourceSpec::power(0.5, 2);
        let mut rng = StdRng::seed_from_u64(42);
        let ps = [1.05, 1.2, 1.35, 1.5, 1.7, 2.0];
        for _ in 0..100 {
            let u = random_field(&mesh, &mut rng).scaled(rng.gen_range(0.1..3.0));
            let mut prev = f64::NEG_INFINITY;
            for &p in &ps {
                let v = energy_ip(&u, &EnergyParams::plus(p, 0.0), &spec);
                assert!(v >= prev - 1e-12, "I_p not monotone: {prev} -> {v} at p={p}");
                prev = v;
            }
        }
    }

    #[test]
    fn regularization_bias_bound() {
        let mesh = Arc::new(build_disk_mesh(1.0, 2));
        let spec = SourceSpec::power(0.5, 2);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let u = random_field(&mesh, &mut rng);
            for (p, eps) in [(1.2, 1e-2), (1.6, 1e-3), (2.0, 0.5)] {
                let biased = energy_jp(&u, &EnergyParams::plus(p, eps), &spec);
                let exact = energy_jp(&u, &EnergyParams::plus(p, 0.0), &spec);
                let bound = eps.powf(p) / p * mesh.total_area;
                assert!(
                    (biased - exact).abs() <= bound * (1.0 + 1e-12),
                    "bias {} exceeds bound {bound}",
                    (biased - exact).abs()
                );
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = Arc::new(build_disk_mesh(1.0, 1));
        let spec = SourceSpec::power(0.5, 2);
        let mut rng = StdRng::seed_from_u64(11);
        for &p in &[1.2, 1.6, 2.0] {
            let params = EnergyParams::plus(p, 1e-6);
            for _ in 0..5 {
                let u = random_field(&mesh, &mut rng);
                let delta = random_field(&mesh, &mut rng);
                let g = gradient_jp(&u, &params, &spec);
                let dot: f64 = g
                    .iter()
                    .zip(&delta.values)
                    .map(|(gi, di)| gi * di)
                    .sum();
                let t = 1e-5;
                let up = Field::from_values(
                    mesh.clone(),
                    u.values.iter().zip(&delta.values).map(|(a, b)| a + t * b).collect(),
                    true,
                );
                let um = Field::from_values(
                    mesh.clone(),
                    u.values.iter().zip(&delta.values).map(|(a, b)| a - t * b).collect(),
                    true,
                );
                let fd =
                    (energy_jp(&up, &params, &spec) - energy_jp(&um, &params, &spec)) / (2.0 * t);
                assert!(
                    (fd - dot).abs() <= 1e-6 * fd.abs().max(1e-10),
                    "p={p}: fd {fd} vs gradient {dot}"
                );
            }
        }
    }

    #[test]
    fn gradient_zero_at_zero_field() {
        let mesh = Arc::new(build_disk_mesh(1.0, 1));
        let u = Field::zeros(mesh, true);
        let spec = SourceSpec::power(0.5, 2);
        let g = gradient_jp(&u, &EnergyParams::plus(1.5, 0.0), &spec);
        assert!(g.amax() == 0.0);
    }

    #[test]
    fn p_two_residual_matches_classical_assembly() {
        // With f(s) = s the residual must equal K u - M u for the standard
        // P1 stiffness K and lumped mass M, both assembled here from scratch.
        let mesh = Arc::new(build_rect_mesh(1.0, 1.0, 3, 3));
        let spec = SourceSpec::power(1.0, 2);
        let mut rng = StdRng::seed_from_u64(5);
        let u = random_field(&mesh, &mut rng);

        let n = mesh.n_vertices();
        let mut stiffness = vec![vec![0.0; n]; n];
        for (ti, tri) in mesh.triangles.iter().enumerate() {
            let pts = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            let det = (pts[1][0] - pts[0][0]) * (pts[2][1] - pts[0][1])
                - (pts[2][0] - pts[0][0]) * (pts[1][1] - pts[0][1]);
            let grads = [
                [(pts[1][1] - pts[2][1]) / det, (pts[2][0] - pts[1][0]) / det],
                [(pts[2][1] - pts[0][1]) / det, (pts[0][0] - pts[2][0]) / det],
                [(pts[0][1] - pts[1][1]) / det, (pts[1][0] - pts[0][0]) / det],
            ];
            for a in 0..3 {
                for b in 0..3 {
                    stiffness[tri[a]][tri[b]] += mesh.areas[ti]
                        * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                }
            }
        }
        let residual = gradient_jp(&u, &EnergyParams::new(2.0, 0.0, SignBranch::Full), &spec);
        for v in 0..n {
            if mesh.is_boundary[v] {
                assert_eq!(residual[v], 0.0);
                continue;
            }
            let ku: f64 = (0..n).map(|w| stiffness[v][w] * u.values[w]).sum();
            let expected = ku - mesh.lumped_mass[v] * u.values[v];
            assert_relative_eq!(residual[v], expected, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn j1_constant_field_on_disk() {
        // For u = c with free trace, J = perimeter * c - |Omega| F(c).
        let mesh = Arc::new(build_disk_mesh(1.0, 2));
        let spec = SourceSpec::power(0.5, 2);
        let c = 2.5;
        let u = Field::from_values(mesh.clone(), vec![c; mesh.n_vertices()], false);
        let perimeter: f64 = mesh.boundary_edges.iter().map(|e| e.length).sum();
        let expected = perimeter * c - mesh.total_area * spec.antiderivative(c);
        assert_relative_eq!(energy_j1(&u, &spec), expected, max_relative = 1e-13);

        // Zero-trace fields contribute no boundary term.
        let mut rng = StdRng::seed_from_u64(9);
        let w = random_field(&mesh, &mut rng);
        let grad_only: f64 = (0..mesh.n_triangles())
            .map(|t| {
                let g = mesh.grad_on(t, &w.values);
                mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]).sqrt()
            })
            .sum();
        let src: f64 = (0..mesh.n_vertices())
            .map(|v| mesh.lumped_mass[v] * spec.antiderivative(w.values[v]))
            .sum();
        assert_relative_eq!(energy_j1(&w, &spec), grad_only - src, max_relative = 1e-13);
    }
}

//! Numerical mountain-pass solver for the p-energy on a fixed mesh.
//!
//! A solve has two stages. The deformation stage maintains a discrete path
//! from 0 to the negative-energy endpoint `e`, repeatedly moving the path
//! maximizer downhill along a stiffness-preconditioned descent direction
//! with Armijo backtracking, then redistributing path points by arclength in
//! energy-graph space around the moved point. It runs until the maximizer's
//! residual meets the tolerance or the path resolution saturates. The polish
//! stage then drives the regularized residual to the tolerance with damped
//! Newton steps, continuing the gradient regularization down its schedule.
//!
//! The nontriviality radius `rho` is measured, not guessed: from the sampled
//! near-zero growth constant of the source and a discrete embedding constant
//! maximized over probe fields, chosen so the energy on the sphere of radius
//! `rho` is at least `rho/2`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::assembly::{constrained_stiffness, Preconditioner};
use crate::energy::{gradient_integral, residual_slice, source_integral};
use crate::field::Field;
use crate::mesh::Mesh;
use crate::source::{SignBranch, SourceSpec};

/// Backtracking line-search parameters.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { initial: 1.0, shrink: 0.5, sufficient_decrease: 1e-4 }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MountainPassConfig {
    /// Number of path discretization points, >= 3.
    pub path_points: usize,
    /// Residual norm (in the K^-1 metric) at which an iterate is accepted.
    pub descent_tol: f64,
    /// Combined iteration budget for both stages.
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Strictly decreasing gradient regularization levels.
    pub eps_schedule: Vec<f64>,
    /// Nontriviality radius in the norm int|grad u| + boundary int|u|.
    pub rho: f64,
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        MountainPassConfig {
            path_points: 21,
            descent_tol: 1e-7,
            max_iters: 6000,
            step_rule: StepRule::default(),
            eps_schedule: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            rho: 1.0,
        }
    }
}

impl MountainPassConfig {
    pub fn validate(&self) -> Result<(), MpaError> {
        if self.path_points < 3 {
            return Err(MpaError::BadConfig("path_points must be >= 3"));
        }
        if !(self.descent_tol > 0.0) {
            return Err(MpaError::BadConfig("descent_tol must be positive"));
        }
        if self.eps_schedule.is_empty()
            || self.eps_schedule.windows(2).any(|w| w[1] >= w[0])
            || self.eps_schedule.iter().any(|&e| e < 0.0)
        {
            return Err(MpaError::BadConfig("eps_schedule must be strictly decreasing"));
        }
        if !(self.rho > 0.0) {
            return Err(MpaError::BadConfig("rho must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MpaError {
    #[error("invalid mountain-pass configuration: {0}")]
    BadConfig(&'static str),
    #[error("no endpoint with negative energy found (scale reached {0:.3e}); the source is too weak for mountain-pass geometry")]
    EndpointNotFound(f64),
    #[error("endpoint energy {0} is not negative")]
    BadEndpoint(f64),
    #[error("source produces no usable near-zero growth constant")]
    SourceTooWeak,
    #[error("solver did not reach the residual tolerance (best residual {residual:.3e})")]
    Divergence {
        residual: f64,
        /// Best iterate found, with its full report.
        best: Box<MpaSolution>,
    },
}

/// One logged solver iteration: path parameter of the maximizer, its
/// energy, residual, accepted step size and regularization level.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iter: usize,
    pub t_star: f64,
    pub energy: f64,
    pub residual_norm: f64,
    pub step_size: f64,
    pub eps: f64,
    /// Whether the path maximum strictly decreased at this iteration
    /// (descent stage only; polish rows carry `true`).
    pub max_decreased: bool,
}

/// Converged (or best-effort) critical point with diagnostics.
#[derive(Debug, Clone)]
pub struct MpaSolution {
    pub w: Field,
    /// I_p at the solution, evaluated unregularized.
    pub value: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub log: Vec<IterationRecord>,
    pub min_value: f64,
    pub max_value: f64,
    /// min w >= -1e-8 * max w; violations are reported, never clamped.
    pub positivity_ok: bool,
    /// Flags value < rho/2 (a mountain-pass level must exceed it).
    pub below_threshold: bool,
    pub rho: f64,
}

/// Iteration log CSV: `iter,t_star,energy,residual_norm,step_size,eps`.
pub fn iteration_log_csv(log: &[IterationRecord]) -> String {
    let mut out = String::from("iter,t_star,energy,residual_norm,step_size,eps\n");
    for r in log {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.iter, r.t_star, r.energy, r.residual_norm, r.step_size, r.eps
        ));
    }
    out
}

/// Measured constants behind the nontriviality radius.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RhoEstimate {
    /// Near-zero growth constant max |f(s)|/|s|^alpha over the h1 grid.
    pub k1: f64,
    /// Discrete embedding constant sup ||u||_{L^{1+alpha}} / ||u||_BV.
    pub embedding: f64,
    /// K1 E^(1+alpha) / (1+alpha).
    pub k2: f64,
    /// (2 K2)^(-1/alpha), so 1 - K2 rho^alpha = 1/2.
    pub rho: f64,
}

/// Estimates the discrete embedding constant
/// sup (sum m_v |u_v|^m)^(1/m) / (int |grad u|) over zero-trace fields, by
/// probing random fields, bump powers and plateau profiles, then polishing
/// the best probe with a few ascent steps.
pub fn measure_embedding(mesh: &Arc<Mesh>, m_exp: f64, seed: u64) -> f64 {
    let lumped_norm = |values: &[f64]| -> f64 {
        let s: f64 = values
            .iter()
            .zip(&mesh.lumped_mass)
            .map(|(v, m)| m * v.abs().powf(m_exp))
            .sum();
        s.powf(1.0 / m_exp)
    };
    let grad_norm = |values: &[f64]| -> f64 {
        (0..mesh.n_triangles())
            .map(|t| {
                let g = mesh.grad_on(t, values);
                mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]).sqrt()
            })
            .sum()
    };
    let ratio = |values: &[f64]| -> f64 {
        let b = grad_norm(values);
        if b > 0.0 {
            lumped_norm(values) / b
        } else {
            0.0
        }
    };

    let mut best: Vec<f64> = Vec::new();
    let mut best_ratio = 0.0;
    let mut consider = |values: Vec<f64>| {
        let r = ratio(&values);
        if r > best_ratio {
            best_ratio = r;
            best = values;
        }
    };

    let dist: Vec<f64> = mesh.vertices.iter().map(|&x| mesh.boundary_distance(x)).collect();
    let dmax = dist.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    for beta in [0.25, 0.5, 1.0, 2.0, 4.0] {
        consider(dist.iter().map(|&d| (d / dmax).powf(beta)).collect());
    }
    for c in [1.0, 2.0, 4.0] {
        consider(dist.iter().map(|&d| (d / (c * mesh.h)).min(1.0)).collect());
    }
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..120 {
        let mut values: Vec<f64> =
            (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for &b in &mesh.boundary_vertices {
            values[b] = 0.0;
        }
        consider(values);
    }

    // Ascent polish on log(ratio) with a smoothed total-variation gradient.
    let mut u = best.clone();
    let mut eta = 0.25;
    for _ in 0..80 {
        let lp = lumped_norm(&u);
        let bv = grad_norm(&u);
        if lp == 0.0 || bv == 0.0 {
            break;
        }
        let mut dir = vec![0.0; u.len()];
        for (v, d) in dir.iter_mut().enumerate() {
            let uv: f64 = u[v];
            *d += mesh.lumped_mass[v] * uv.abs().powf(m_exp - 1.0) * uv.signum()
                * lp.powf(1.0 - m_exp)
                / lp;
        }
        for t in 0..mesh.n_triangles() {
            let g = mesh.grad_on(t, &u);
            let norm = (g[0] * g[0] + g[1] * g[1] + 1e-18).sqrt();
            let tri = mesh.triangles[t];
            let grads = mesh.shape_grads[t];
            for k in 0..3 {
                dir[tri[k]] -=
                    mesh.areas[t] * (g[0] * grads[k][0] + g[1] * grads[k][1]) / (norm * bv);
            }
        }
        for &b in &mesh.boundary_vertices {
            dir[b] = 0.0;
        }
        let dmaxabs = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if dmaxabs == 0.0 {
            break;
        }
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let trial: Vec<f64> =
            u.iter().zip(&dir).map(|(a, d)| a + eta * umax / dmaxabs * d).collect();
        if ratio(&trial) > best_ratio {
            best_ratio = ratio(&trial);
            u = trial;
        } else {
            eta /= 2.0;
            if eta < 1e-4 {
                break;
            }
        }
    }
    best_ratio
}

/// Derives the nontriviality radius from measured constants: with
/// F_+(s) <= K1/(1+alpha) |s|^(1+alpha) and the measured embedding constant,
/// the energy on the BV sphere of radius rho is >= rho (1 - K2 rho^alpha).
pub fn measure_rho(spec: &SourceSpec, mesh: &Arc<Mesh>, seed: u64) -> Result<RhoEstimate, MpaError> {
    let k1 = spec.hypothesis_check().k1;
    if !(k1 > 0.0) || !k1.is_finite() {
        return Err(MpaError::SourceTooWeak);
    }
    let m_exp = 1.0 + spec.alpha;
    let embedding = measure_embedding(mesh, m_exp, seed);
    let k2 = k1 / m_exp * embedding.powf(m_exp);
    let rho = (2.0 * k2).powf(-1.0 / spec.alpha);
    Ok(RhoEstimate { k1, embedding, k2, rho })
}

/// The fixed positive bump: boundary distance normalized to maximum one.
pub fn bump_field(mesh: &Arc<Mesh>) -> Field {
    let dist: Vec<f64> = mesh.vertices.iter().map(|&x| mesh.boundary_distance(x)).collect();
    let dmax = dist.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
    Field::from_values(mesh.clone(), dist.iter().map(|&d| d / dmax).collect(), true)
}

/// Finds e = T * bump with I_{p_upper}(e) < 0 by doubling T. By the
/// monotonicity of I_p in p, the same e then has negative energy for every
/// smaller exponent.
pub fn find_endpoint(spec: &SourceSpec, mesh: &Arc<Mesh>, p_upper: f64) -> Result<Field, MpaError> {
    let phi = bump_field(mesh);
    let driver = Driver::new(spec, mesh, p_upper, SignBranch::Plus);
    let mut t = 1.0f64;
    loop {
        let e: Vec<f64> = phi.values.iter().map(|v| t * v).collect();
        if driver.ip(&e, 0.0) < 0.0 {
            return Ok(Field::from_values(mesh.clone(), e, true));
        }
        t *= 2.0;
        if t > (1u64 << 40) as f64 {
            return Err(MpaError::EndpointNotFound(t));
        }
    }
}

/// Probe sample for the local-minimum diagnostic.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Probe {
    pub radius: f64,
    pub delta_energy: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LocalMinReport {
    pub probes: Vec<Probe>,
    pub is_local_min: bool,
}

/// Samples I_p(u) - I_p(0) over random zero-trace fields scaled to BV norms
/// rho/4, rho/2 and rho. Diagnostic only: negative probes are reported, not
/// raised.
pub fn local_min_check(
    spec: &SourceSpec,
    mesh: &Arc<Mesh>,
    p: f64,
    rho: f64,
    seed: u64,
) -> LocalMinReport {
    let driver = Driver::new(spec, mesh, p, SignBranch::Plus);
    let mut rng = StdRng::seed_from_u64(seed);
    let zero_level = driver.ip(&vec![0.0; mesh.n_vertices()], 0.0);
    let mut probes = Vec::new();
    for radius in [rho / 4.0, rho / 2.0, rho] {
        for _ in 0..20 {
            let mut values: Vec<f64> =
                (0..mesh.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for &b in &mesh.boundary_vertices {
                values[b] = 0.0;
            }
            let f = Field::from_values(mesh.clone(), values.clone(), true);
            let norm = crate::energy::bv_norm(&f);
            if norm == 0.0 {
                continue;
            }
            for v in &mut values {
                *v *= radius / norm;
            }
            probes.push(Probe { radius, delta_energy: driver.ip(&values, 0.0) - zero_level });
        }
    }
    let is_local_min = probes.iter().all(|p| p.delta_energy >= -1e-12);
    LocalMinReport { probes, is_local_min }
}

/// Full mountain-pass solve at exponent `p` from the segment path to `e`.
pub fn mountain_pass_solve(
    spec: &SourceSpec,
    mesh: &Arc<Mesh>,
    p: f64,
    e: &Field,
    config: &MountainPassConfig,
) -> Result<MpaSolution, MpaError> {
    config.validate()?;
    let driver = Driver::new(spec, mesh, p, SignBranch::Plus);
    let e_energy = driver.ip(&e.values, 0.0);
    if e_energy >= 0.0 {
        return Err(MpaError::BadEndpoint(e_energy));
    }

    let mut log = Vec::new();
    let mut iter = 0usize;
    let (start, t_star) = driver.deform(e, config, &mut log, &mut iter);
    driver.polish(start, t_star, config, log, iter)
}

/// Critical-point solve warm-started from an existing field (no path stage);
/// used by the continuation driver.
pub fn warm_start_solve(
    spec: &SourceSpec,
    mesh: &Arc<Mesh>,
    p: f64,
    start: &Field,
    config: &MountainPassConfig,
) -> Result<MpaSolution, MpaError> {
    config.validate()?;
    let driver = Driver::new(spec, mesh, p, SignBranch::Plus);
    driver.polish(start.values.clone(), 0.0, config, Vec::new(), 0)
}

struct Driver<'a> {
    spec: &'a SourceSpec,
    mesh: &'a Arc<Mesh>,
    p: f64,
    branch: SignBranch,
    pre: Preconditioner,
    k_c: DMatrix<f64>,
}

impl<'a> Driver<'a> {
    fn new(spec: &'a SourceSpec, mesh: &'a Arc<Mesh>, p: f64, branch: SignBranch) -> Self {
        let pre = Preconditioner::new(mesh);
        let k_c = constrained_stiffness(mesh);
        Driver { spec, mesh, p, branch, pre, k_c }
    }

    fn ip(&self, values: &[f64], eps: f64) -> f64 {
        gradient_integral(self.mesh, values, self.p, eps) / self.p
            + (self.p - 1.0) / self.p * self.mesh.total_area
            - source_integral(self.mesh, values, self.spec, self.branch)
    }

    fn residual(&self, values: &[f64], eps: f64) -> DVector<f64> {
        residual_slice(self.mesh, values, self.p, eps, self.spec, self.branch)
    }

    /// Lumped-L2 distance in energy-graph space between consecutive path
    /// points.
    fn graph_distance(&self, a: &[f64], ea: f64, b: &[f64], eb: f64) -> f64 {
        let mut d2 = 0.0;
        for (v, &m) in self.mesh.lumped_mass.iter().enumerate() {
            let diff = a[v] - b[v];
            d2 += m * diff * diff;
        }
        (d2 + (ea - eb) * (ea - eb)).sqrt()
    }

    /// Deformation stage. Returns the maximizer iterate handed to the polish
    /// stage and its path parameter.
    fn deform(
        &self,
        e: &Field,
        config: &MountainPassConfig,
        log: &mut Vec<IterationRecord>,
        iter: &mut usize,
    ) -> (Vec<f64>, f64) {
        let m = config.path_points;
        let eps0 = config.eps_schedule[0];
        let n = self.mesh.n_vertices();
        let mut path: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let t = i as f64 / (m - 1) as f64;
                e.values.iter().map(|v| t * v).collect()
            })
            .collect();
        let mut energies: Vec<f64> = path.iter().map(|p| self.ip(p, eps0)).collect();

        let mut best_rn = f64::INFINITY;
        let mut since_best = 0usize;
        let mut fallback: (f64, Vec<f64>, f64) = (f64::INFINITY, path[m / 2].clone(), 0.5);

        while *iter < config.max_iters {
            let i_star = argmax_first(&energies[1..m - 1]) + 1;
            let t_star = i_star as f64 / (m - 1) as f64;
            let r = self.residual(&path[i_star], eps0);
            let rn = self.pre.dual_norm(&r);

            if rn < fallback.0 {
                fallback = (rn, path[i_star].clone(), t_star);
            }
            if rn < best_rn * 0.999 {
                best_rn = rn;
                since_best = 0;
            } else {
                since_best += 1;
            }

            if rn <= config.descent_tol || since_best > 80 {
                log.push(IterationRecord {
                    iter: *iter,
                    t_star,
                    energy: energies[i_star],
                    residual_norm: rn,
                    step_size: 0.0,
                    eps: eps0,
                    max_decreased: false,
                });
                *iter += 1;
                let (_, v, t) = fallback;
                return (v, t);
            }

            // Preconditioned descent with Armijo backtracking.
            let y = self.pre.solve(&r);
            let slope = -r.dot(&y);
            let old_max = energies[i_star];
            let mut step = config.step_rule.initial;
            let mut moved = None;
            while step > 1e-16 {
                let trial: Vec<f64> =
                    (0..n).map(|v| path[i_star][v] - step * y[v]).collect();
                let e_trial = self.ip(&trial, eps0);
                if e_trial
                    <= old_max + config.step_rule.sufficient_decrease * step * slope
                {
                    moved = Some((trial, e_trial));
                    break;
                }
                step *= config.step_rule.shrink;
            }
            let (accepted_step, max_decreased) = match moved {
                Some((trial, e_trial)) => {
                    path[i_star] = trial;
                    energies[i_star] = e_trial;
                    let second = energies
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != i_star)
                        .map(|(_, &v)| v)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (step, second.max(e_trial) < old_max)
                }
                None => (0.0, false),
            };

            log.push(IterationRecord {
                iter: *iter,
                t_star,
                energy: energies[i_star],
                residual_norm: rn,
                step_size: accepted_step,
                eps: eps0,
                max_decreased,
            });
            *iter += 1;

            if accepted_step == 0.0 {
                // Line search exhausted: the path cannot move; polish takes over.
                let (_, v, t) = fallback;
                return (v, t);
            }

            self.redistribute(&mut path, &mut energies, i_star, eps0);
        }
        let (_, v, t) = fallback;
        (v, t)
    }

    /// Arclength redistribution on each side of the anchor point, keeping
    /// the anchor and both endpoints exact.
    fn redistribute(&self, path: &mut [Vec<f64>], energies: &mut [f64], anchor: usize, eps: f64) {
        let resample = |pts: &[Vec<f64>], es: &[f64]| -> Vec<Vec<f64>> {
            let count = pts.len();
            if count < 3 {
                return pts.to_vec();
            }
            let mut cum = vec![0.0];
            for i in 0..count - 1 {
                let d = self.graph_distance(&pts[i], es[i], &pts[i + 1], es[i + 1]);
                cum.push(cum[i] + d);
            }
            let total = *cum.last().unwrap();
            if total <= 0.0 {
                return pts.to_vec();
            }
            let mut out = Vec::with_capacity(count);
            out.push(pts[0].clone());
            let mut seg = 0usize;
            for j in 1..count - 1 {
                let target = total * j as f64 / (count - 1) as f64;
                while seg + 2 < cum.len() && cum[seg + 1] < target {
                    seg += 1;
                }
                let span = (cum[seg + 1] - cum[seg]).max(1e-300);
                let t = (target - cum[seg]) / span;
                out.push(
                    pts[seg]
                        .iter()
                        .zip(&pts[seg + 1])
                        .map(|(a, b)| a + t * (b - a))
                        .collect(),
                );
            }
            out.push(pts[count - 1].clone());
            out
        };

        let left = resample(&path[..=anchor], &energies[..=anchor]);
        let right = resample(&path[anchor..], &energies[anchor..]);
        for (i, p) in left.into_iter().enumerate() {
            if i > 0 && i < anchor {
                energies[i] = self.ip(&p, eps);
                path[i] = p;
            }
        }
        for (k, p) in right.into_iter().enumerate() {
            let i = anchor + k;
            if k > 0 && i < path.len() - 1 {
                energies[i] = self.ip(&p, eps);
                path[i] = p;
            }
        }
    }

    /// Newton polish through the regularization schedule, then final report.
    fn polish(
        &self,
        mut u: Vec<f64>,
        t_star: f64,
        config: &MountainPassConfig,
        mut log: Vec<IterationRecord>,
        mut iter: usize,
    ) -> Result<MpaSolution, MpaError> {
        let mut rn = f64::INFINITY;
        let mut converged = true;
        for (level, &eps) in config.eps_schedule.iter().enumerate() {
            let is_last = level + 1 == config.eps_schedule.len();
            let (new_rn, ok) = self.newton(&mut u, eps, config, t_star, &mut log, &mut iter);
            rn = new_rn;
            if !ok && is_last {
                converged = false;
            }
        }

        let solution = self.report(u, rn, iter, log, config.rho);
        if converged && rn <= config.descent_tol {
            Ok(solution)
        } else {
            Err(MpaError::Divergence { residual: rn, best: Box::new(solution) })
        }
    }

    fn newton(
        &self,
        u: &mut Vec<f64>,
        eps: f64,
        config: &MountainPassConfig,
        t_star: f64,
        log: &mut Vec<IterationRecord>,
        iter: &mut usize,
    ) -> (f64, bool) {
        let max_newton = 80usize;
        let mut r = self.residual(u, eps);
        let mut rn = self.pre.dual_norm(&r);
        for _ in 0..max_newton {
            if *iter >= config.max_iters + 400 {
                // Hard cap guards against pathological cycling.
                return (rn, false);
            }
            if rn <= config.descent_tol {
                return (rn, true);
            }
            let mut mu = 0.0f64;
            let mut accepted: Option<(Vec<f64>, DVector<f64>, f64, f64)> = None;
            'regularize: loop {
                let mut h = self.hessian(u, eps);
                if mu > 0.0 {
                    h += &self.k_c * mu;
                }
                let delta = match h.lu().solve(&(-&r)) {
                    Some(d) => d,
                    None => {
                        mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
                        if mu > 1e8 {
                            break 'regularize;
                        }
                        continue;
                    }
                };
                let mut lambda = 1.0f64;
                for _ in 0..40 {
                    let trial: Vec<f64> =
                        u.iter().zip(delta.iter()).map(|(a, d)| a + lambda * d).collect();
                    let r_trial = self.residual(&trial, eps);
                    let rn_trial = self.pre.dual_norm(&r_trial);
                    if rn_trial <= (1.0 - 1e-4 * lambda) * rn {
                        accepted = Some((trial, r_trial, rn_trial, lambda));
                        break 'regularize;
                    }
                    lambda *= 0.5;
                }
                mu = if mu == 0.0 { 1e-8 } else { mu * 10.0 };
                if mu > 1e8 {
                    break 'regularize;
                }
            }
            match accepted {
                Some((trial, r_trial, rn_trial, lambda)) => {
                    *u = trial;
                    r = r_trial;
                    rn = rn_trial;
                    log.push(IterationRecord {
                        iter: *iter,
                        t_star,
                        energy: self.ip(u, eps),
                        residual_norm: rn,
                        step_size: lambda,
                        eps,
                        max_decreased: true,
                    });
                    *iter += 1;
                }
                None => return (rn, false),
            }
        }
        (rn, rn <= config.descent_tol)
    }

    /// Hessian of the regularized energy: per-triangle tangent of the flux
    /// plus the diagonal source linearization, Dirichlet rows eliminated.
    fn hessian(&self, values: &[f64], eps: f64) -> DMatrix<f64> {
        let n = self.mesh.n_vertices();
        let mut h = DMatrix::zeros(n, n);
        let e2 = eps * eps;
        for t in 0..self.mesh.n_triangles() {
            let g = self.mesh.grad_on(t, values);
            let w = g[0] * g[0] + g[1] * g[1] + e2;
            if w == 0.0 {
                continue;
            }
            let c1 = w.powf((self.p - 2.0) / 2.0);
            let c2 = (self.p - 2.0) * w.powf((self.p - 4.0) / 2.0);
            let tri = self.mesh.triangles[t];
            let grads = self.mesh.shape_grads[t];
            let a = self.mesh.areas[t];
            for i in 0..3 {
                let gi = grads[i];
                let g_dot_i = g[0] * gi[0] + g[1] * gi[1];
                for j in 0..3 {
                    let gj = grads[j];
                    let g_dot_j = g[0] * gj[0] + g[1] * gj[1];
                    h[(tri[i], tri[j])] +=
                        a * (c1 * (gi[0] * gj[0] + gi[1] * gj[1]) + c2 * g_dot_i * g_dot_j);
                }
            }
        }
        for v in 0..n {
            h[(v, v)] -= self.mesh.lumped_mass[v] * self.spec.f_prime_branch(values[v], self.branch);
        }
        for &b in &self.mesh.boundary_vertices {
            for j in 0..n {
                h[(b, j)] = 0.0;
                h[(j, b)] = 0.0;
            }
            h[(b, b)] = 1.0;
        }
        h
    }

    fn report(
        &self,
        u: Vec<f64>,
        rn: f64,
        iterations: usize,
        log: Vec<IterationRecord>,
        rho: f64,
    ) -> MpaSolution {
        let value = self.ip(&u, 0.0);
        let w = Field::from_values(self.mesh.clone(), u, true);
        let min_value = w.min();
        let max_value = w.max();
        let positivity_ok = min_value >= -1e-8 * max_value.max(0.0);
        MpaSolution {
            value,
            residual_norm: rn,
            iterations,
            log,
            min_value,
            max_value,
            positivity_ok,
            below_threshold: value < rho / 2.0,
            rho,
            w,
        }
    }
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy_ip, EnergyParams};
    use crate::mesh::build_disk_mesh;
    use approx::assert_relative_eq;

    fn disk(refinement: u32) -> Arc<Mesh> {
        Arc::new(build_disk_mesh(1.0, refinement))
    }

    #[test]
    fn endpoint_has_negative_energy_and_monotone_in_p() {
        let mesh = disk(2);
        let mut spec = SourceSpec::power(0.5, 2);
        spec.kappa = 1.4;
        let e = find_endpoint(&spec, &mesh, 1.4).unwrap();
        let at = |p: f64| energy_ip(&e, &EnergyParams::plus(p, 0.0), &spec);
        assert!(at(1.4) < 0.0);
        assert!(at(1.1) <= at(1.4));
    }

    #[test]
    fn disabled_source_has_no_endpoint() {
        let mesh = disk(1);
        let mut spec = SourceSpec::power(0.5, 2);
        spec.amplitude = 0.0;
        assert!(matches!(
            find_endpoint(&spec, &mesh, 1.4),
            Err(MpaError::EndpointNotFound(_))
        ));
    }

    #[test]
    fn measured_rho_is_positive_and_finite() {
        let mesh = disk(2);
        let spec = SourceSpec::power(0.5, 2);
        let est = measure_rho(&spec, &mesh, 42).unwrap();
        assert!(est.k1 > 0.0 && est.embedding > 0.0 && est.rho > 0.0);
        assert!(est.rho.is_finite());
        assert_relative_eq!(est.k1, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_is_local_min_at_small_radii() {
        let mesh = disk(2);
        let spec = SourceSpec::power(0.5, 2);
        let est = measure_rho(&spec, &mesh, 42).unwrap();
        let report = local_min_check(&spec, &mesh, 1.2, est.rho, 7);
        assert!(report.is_local_min, "negative probe: {:?}",
            report.probes.iter().filter(|p| p.delta_energy < 0.0).take(3).collect::<Vec<_>>());

        // With the source disabled the functional is nonnegative at every radius.
        let mut dead = spec;
        dead.amplitude = 0.0;
        let report = local_min_check(&dead, &mesh, 1.2, 10.0 * est.rho, 7);
        assert!(report.is_local_min);
    }

    #[test]
    fn solve_reaches_certified_critical_point() {
        let mesh = disk(2);
        let spec = SourceSpec::power(0.5, 2);
        let est = measure_rho(&spec, &mesh, 42).unwrap();
        let mut config = MountainPassConfig::default();
        config.rho = est.rho;
        let e = find_endpoint(&spec, &mesh, spec.p_upper()).unwrap();
        let sol = mountain_pass_solve(&spec, &mesh, 1.3, &e, &config).unwrap();

        assert!(sol.residual_norm <= config.descent_tol);
        assert!(sol.value > 0.0, "value {}", sol.value);
        assert!(!sol.below_threshold, "value {} below rho/2 {}", sol.value, est.rho / 2.0);
        assert!(sol.positivity_ok, "min {} max {}", sol.min_value, sol.max_value);

        // Reported value must agree with an independent recomputation.
        let recomputed = energy_ip(&sol.w, &EnergyParams::plus(1.3, 0.0), &spec);
        assert!((sol.value - recomputed).abs() <= 1e-12 * recomputed.abs().max(1.0));

        // Accepted descent steps strictly decrease the path maximum.
        let descent_rows: Vec<_> =
            sol.log.iter().filter(|r| r.eps == config.eps_schedule[0] && r.step_size > 0.0).collect();
        assert!(!descent_rows.is_empty());
        assert!(descent_rows.iter().all(|r| r.max_decreased));
    }

    #[test]
    fn values_increase_with_p() {
        let mesh = disk(1);
        let spec = SourceSpec::power(0.5, 2);
        let est = measure_rho(&spec, &mesh, 42).unwrap();
        let mut config = MountainPassConfig::default();
        config.rho = est.rho;
        let e = find_endpoint(&spec, &mesh, spec.p_upper()).unwrap();
        let v1 = mountain_pass_solve(&spec, &mesh, 1.2, &e, &config).unwrap().value;
        let v2 = mountain_pass_solve(&spec, &mesh, 1.35, &e, &config).unwrap().value;
        assert!(v1 <= v2 + 1e-8, "{v1} vs {v2}");
    }

    #[test]
    fn lane_emden_benchmark_coarse() {
        // p = 2, f(u) = u^3: compare against the radial shooting reference.
        // Coarse mesh here; the acceptance suite runs the tight version.
        let mesh = disk(2);
        let spec = SourceSpec::power(3.0, 2);
        let mut config = MountainPassConfig::default();
        config.rho = 1.0;
        let e = find_endpoint(&spec, &mesh, 2.0).unwrap();
        let sol = mountain_pass_solve(&spec, &mesh, 2.0, &e, &config).unwrap();
        let reference = crate::radial::shoot_ground_state(3.0, 2, 1.0, 1e-4).unwrap();
        let center = sol.w.values[0];
        assert!(
            (center - reference.center_value).abs() / reference.center_value < 0.05,
            "center {center} vs {}",
            reference.center_value
        );
    }
}

//! Radially symmetric ground states of -Laplace u = |u|^(q-1) u on a ball,
//! by RK4 shooting on the 1D profile with a secant iteration on the center
//! value. Serves as an independent reference for the p = 2 finite-element
//! benchmark.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShootingError {
    #[error("no sign change found while bracketing the center value (reached {0})")]
    NoBracket(f64),
    #[error("secant iteration failed to converge within {0} iterations")]
    NoConvergence(usize),
}

/// Radial ground-state profile and its energy.
#[derive(Debug, Clone)]
pub struct ShootingSolution {
    /// u(0), the shooting parameter at convergence.
    pub center_value: f64,
    /// Energy (1/2) int |grad u|^2 - int F(u) over the ball.
    pub energy: f64,
    /// Samples (r, u(r)) on the integration grid.
    pub profile: Vec<(f64, f64)>,
}

/// Integrates u'' + (n-1)/r u' + |u|^(q-1) u = 0 from the center with
/// u(0) = a, u'(0) = 0, returning the grid values up to `radius`.
fn integrate(a: f64, q: f64, n: usize, radius: f64, step: f64) -> Vec<(f64, f64, f64)> {
    let f = |u: f64| u.signum() * u.abs().powf(q);
    let nd = n as f64;
    // Series start: u = a - f(a) r^2 / (2n) resolves the coordinate
    // singularity at r = 0.
    let r0 = step;
    let mut out = Vec::with_capacity((radius / step) as usize + 2);
    out.push((0.0, a, 0.0));
    let mut u = a - f(a) * r0 * r0 / (2.0 * nd);
    let mut v = -f(a) * r0 / nd;
    let mut r = r0;
    out.push((r, u, v));
    let rhs = |r: f64, u: f64, v: f64| (v, -(nd - 1.0) / r * v - f(u));
    while r < radius - 0.5 * step {
        let h = step.min(radius - r);
        let (k1u, k1v) = rhs(r, u, v);
        let (k2u, k2v) = rhs(r + h / 2.0, u + h / 2.0 * k1u, v + h / 2.0 * k1v);
        let (k3u, k3v) = rhs(r + h / 2.0, u + h / 2.0 * k2u, v + h / 2.0 * k2v);
        let (k4u, k4v) = rhs(r + h, u + h * k3u, v + h * k3v);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        r += h;
        out.push((r, u, v));
    }
    out
}

/// Finds the positive radial ground state with u(radius) = 0 by shooting on
/// u(0). Bracket by doubling, then secant with bisection fallback.
pub fn shoot_ground_state(
    q: f64,
    n: usize,
    radius: f64,
    step: f64,
) -> Result<ShootingSolution, ShootingError> {
    assert!(q > 1.0, "shooting targets the superlinear regime q > 1");
    let boundary_value = |a: f64| integrate(a, q, n, radius, step).last().unwrap().1;

    let mut lo = 0.5;
    while boundary_value(lo) < 0.0 {
        lo /= 2.0;
        if lo < 1e-8 {
            return Err(ShootingError::NoBracket(lo));
        }
    }
    let mut hi = lo.max(1.0);
    while boundary_value(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(ShootingError::NoBracket(hi));
        }
    }

    let mut fa = boundary_value(lo);
    let mut fb = boundary_value(hi);
    let mut a = lo;
    let mut b = hi;
    let max_iters = 200;
    for _ in 0..max_iters {
        // Secant step, constrained to the current bracket.
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = boundary_value(c);
        if fc.abs() < 1e-12 || (b - a).abs() < 1e-13 * b.abs().max(1.0) {
            let grid = integrate(c, q, n, radius, step);
            return Ok(finish(c, q, n, &grid));
        }
        if (fc > 0.0) == (fa > 0.0) {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
    }
    Err(ShootingError::NoConvergence(max_iters))
}

fn finish(a: f64, q: f64, n: usize, grid: &[(f64, f64, f64)]) -> ShootingSolution {
    // Energy density ((1/2) v^2 - F(u)) r^(n-1), integrated by the
    // trapezoid rule on the RK4 grid and scaled by the sphere area.
    let sphere = sphere_area(n);
    let density = |(r, u, v): (f64, f64, f64)| {
        (0.5 * v * v - u.abs().powf(q + 1.0) / (q + 1.0)) * r.powi(n as i32 - 1)
    };
    let mut energy = 0.0;
    for w in grid.windows(2) {
        let h = w[1].0 - w[0].0;
        energy += 0.5 * h * (density(w[0]) + density(w[1]));
    }
    ShootingSolution {
        center_value: a,
        energy: sphere * energy,
        profile: grid.iter().map(|&(r, u, _)| (r, u)).collect(),
    }
}

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    // 2 pi^(n/2) / Gamma(n/2), evaluated by the half-integer recursion.
    let half = n as f64 / 2.0;
    let gamma_half = if n % 2 == 0 {
        // Gamma(k) = (k-1)! for integer k.
        (1..n / 2).map(|k| k as f64).product::<f64>().max(1.0)
    } else {
        // Gamma(1/2 + m) = sqrt(pi) (2m)! / (4^m m!)
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < half - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * std::f64::consts::PI.powf(half) / gamma_half
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(2), 2.0 * std::f64::consts::PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn cubic_ground_state_properties() {
        let sol = shoot_ground_state(3.0, 2, 1.0, 1e-3).unwrap();
        assert!(sol.center_value > 1.0 && sol.center_value < 10.0, "{}", sol.center_value);
        // Positive in the interior, zero at the boundary.
        let (r_end, u_end) = *sol.profile.last().unwrap();
        assert!((r_end - 1.0).abs() < 1e-9);
        assert!(u_end.abs() < 1e-8);
        for &(r, u) in &sol.profile {
            if r < 0.99 {
                assert!(u > 0.0, "profile dips negative at r={r}");
            }
        }
        // The mountain-pass level is strictly positive.
        assert!(sol.energy > 0.0);
    }

    #[test]
    fn step_halving_is_consistent() {
        let coarse = shoot_ground_state(3.0, 2, 1.0, 2e-3).unwrap();
        let fine = shoot_ground_state(3.0, 2, 1.0, 1e-3).unwrap();
        assert_relative_eq!(coarse.center_value, fine.center_value, max_relative = 1e-6);
        assert_relative_eq!(coarse.energy, fine.energy, max_relative = 1e-5);
    }
}

//! Per-leg optimization of parking and transit times.
//!
//! Each leg is a two-variable box-constrained problem solved by a small
//! sequential quadratic programming loop: forward-difference gradients, a
//! damped BFGS Hessian model, an exact box-constrained QP step and a
//! backtracking line search that never leaves the box.

use crate::error::{Error, Result};
use crate::lambert::transfer_impulses;
use crate::orbits::{GravParam, OrbitalElements};
use crate::problem::TIME_WEIGHT;

pub const PARK_BOUNDS: (f64, f64) = (0.0, 730.0);
pub const TRANSIT_BOUNDS: (f64, f64) = (1.0, 730.0);
/// (parking, transit) in days.
pub const START: [f64; 2] = [0.0, 30.0];
/// Absolute finite-difference step.
pub const FD_STEP: f64 = 1.49e-8;
pub const MAX_ITERATIONS: usize = 1000;
const STEP_TOL: f64 = 1e-8;
const FTOL: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;
const MIN_ALPHA: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegResult {
    pub t_park: f64,
    pub t_transit: f64,
    /// |Δv₁| + |Δv₂| of the leg, km/s.
    pub dv_leg: f64,
    pub f_leg: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Scalarized cost of one leg: impulses plus the time penalty of the leg.
pub fn leg_cost(
    from: &OrbitalElements,
    to: &OrbitalElements,
    tau: f64,
    x: [f64; 2],
    mu: GravParam,
) -> Result<(f64, f64)> {
    let imp = transfer_impulses(from, to, tau + x[0], x[1], mu)?;
    let dv = imp.total();
    Ok((dv, dv + TIME_WEIGHT * (x[0] + x[1])))
}

/// Optimize the parking and transit time of a leg that starts at epoch `tau`
/// on orbit `from` and ends in rendezvous with `to`.
pub fn optimize_leg(
    from: &OrbitalElements,
    to: &OrbitalElements,
    tau: f64,
    mu: GravParam,
) -> Result<LegResult> {
    let objective = |x: [f64; 2]| leg_cost(from, to, tau, x, mu).map(|(_, f)| f);
    let bounds = Bounds {
        lower: [PARK_BOUNDS.0, TRANSIT_BOUNDS.0],
        upper: [PARK_BOUNDS.1, TRANSIT_BOUNDS.1],
    };
    let min = minimize_box(objective, START, &bounds, MAX_ITERATIONS)?;
    let (dv_leg, f_leg) = leg_cost(from, to, tau, min.x, mu)?;
    Ok(LegResult {
        t_park: min.x[0],
        t_transit: min.x[1],
        dv_leg,
        f_leg,
        iterations: min.iterations,
        converged: min.converged,
    })
}

/// Forward-difference gradient of a two-variable function.
pub fn fd_gradient<F>(mut g: F, x: [f64; 2], h: f64) -> Result<[f64; 2]>
where
    F: FnMut([f64; 2]) -> Result<f64>,
{
    let f0 = g(x)?;
    let mut grad = [0.0; 2];
    for k in 0..2 {
        let mut xh = x;
        xh[k] += h;
        grad[k] = (g(xh)? - f0) / h;
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Bounds {
    fn project(&self, x: [f64; 2]) -> [f64; 2] {
        [
            x[0].clamp(self.lower[0], self.upper[0]),
            x[1].clamp(self.lower[1], self.upper[1]),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Minimum {
    pub x: [f64; 2],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Gradient with forward differences, switching to a backward difference
/// where the forward point would leave the box.
fn bounded_gradient<F>(g: &mut F, x: [f64; 2], fx: f64, bounds: &Bounds) -> Result<[f64; 2]>
where
    F: FnMut([f64; 2]) -> Result<f64>,
{
    let mut grad = [0.0; 2];
    for k in 0..2 {
        let mut xh = x;
        let h = if x[k] + FD_STEP <= bounds.upper[k] { FD_STEP } else { -FD_STEP };
        xh[k] += h;
        grad[k] = (g(xh)? - fx) / h;
    }
    Ok(grad)
}

/// Bounded SQP iteration for smooth two-variable problems.
pub fn minimize_box<F>(mut g: F, x0: [f64; 2], bounds: &Bounds, max_iter: usize) -> Result<Minimum>
where
    F: FnMut([f64; 2]) -> Result<f64>,
{
    let mut x = bounds.project(x0);
    let mut fx = g(x)?;
    if !fx.is_finite() {
        return Err(Error::domain("objective is not finite at the start point"));
    }
    let mut grad = match bounded_gradient(&mut g, x, fx, bounds) {
        Ok(gr) => gr,
        Err(_) => {
            return Ok(Minimum {
                x,
                f: fx,
                iterations: 0,
                converged: false,
            })
        }
    };
    let mut hess = [[1.0, 0.0], [0.0, 1.0]];

    for iter in 1..=max_iter {
        let d = box_qp(&hess, &grad, [bounds.lower[0] - x[0], bounds.lower[1] - x[1]], [
            bounds.upper[0] - x[0],
            bounds.upper[1] - x[1],
        ]);
        let dnorm = d[0].hypot(d[1]);
        if dnorm < STEP_TOL {
            return Ok(Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            });
        }
        let slope = grad[0] * d[0] + grad[1] * d[1];

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= MIN_ALPHA {
            let trial = bounds.project([x[0] + alpha * d[0], x[1] + alpha * d[1]]);
            if let Ok(ft) = g(trial) {
                if ft.is_finite() && ft <= fx + ARMIJO * alpha * slope.min(0.0) {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no descent along the QP direction: treat the iterate as stationary
            return Ok(Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            });
        };
        let grad_new = match bounded_gradient(&mut g, x_new, f_new, bounds) {
            Ok(gr) => gr,
            Err(_) => {
                return Ok(Minimum {
                    x: x_new,
                    f: f_new,
                    iterations: iter,
                    converged: false,
                })
            }
        };

        let s = [x_new[0] - x[0], x_new[1] - x[1]];
        let y = [grad_new[0] - grad[0], grad_new[1] - grad[1]];
        let df = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        grad = grad_new;
        if df < FTOL || s[0].hypot(s[1]) < STEP_TOL {
            return Ok(Minimum {
                x,
                f: fx,
                iterations: iter,
                converged: true,
            });
        }
        damped_bfgs(&mut hess, s, y);
    }
    Ok(Minimum {
        x,
        f: fx,
        iterations: max_iter,
        converged: false,
    })
}

/// Powell-damped BFGS update; keeps the model positive definite.
fn damped_bfgs(b: &mut [[f64; 2]; 2], s: [f64; 2], y: [f64; 2]) {
    let bs = [b[0][0] * s[0] + b[0][1] * s[1], b[1][0] * s[0] + b[1][1] * s[1]];
    let sbs = s[0] * bs[0] + s[1] * bs[1];
    let sy = s[0] * y[0] + s[1] * y[1];
    if !(sbs > 0.0) || !sbs.is_finite() {
        return;
    }
    let r = if sy >= 0.2 * sbs {
        y
    } else {
        let theta = 0.8 * sbs / (sbs - sy);
        [theta * y[0] + (1.0 - theta) * bs[0], theta * y[1] + (1.0 - theta) * bs[1]]
    };
    let sr = s[0] * r[0] + s[1] * r[1];
    if !(sr > 0.0) || !sr.is_finite() {
        return;
    }
    for i in 0..2 {
        for j in 0..2 {
            b[i][j] += -bs[i] * bs[j] / sbs + r[i] * r[j] / sr;
        }
    }
}

/// Exact minimizer of `g·d + ½ dᵀBd` over the box `lo <= d <= hi` for a
/// positive definite 2×2 `B`, by enumerating the nine active sets.
fn box_qp(b: &[[f64; 2]; 2], g: &[f64; 2], lo: [f64; 2], hi: [f64; 2]) -> [f64; 2] {
    let q = |d: [f64; 2]| {
        g[0] * d[0] + g[1] * d[1] + 0.5 * (b[0][0] * d[0] * d[0] + 2.0 * b[0][1] * d[0] * d[1] + b[1][1] * d[1] * d[1])
    };
    let feasible = |d: [f64; 2]| (0..2).all(|k| d[k] >= lo[k] - 1e-15 && d[k] <= hi[k] + 1e-15);

    let mut best = [0.0, 0.0];
    let mut best_q = 0.0;
    // each coordinate: None = free, Some(bound)
    let choices = |k: usize| [None, Some(lo[k]), Some(hi[k])];
    for c0 in choices(0) {
        for c1 in choices(1) {
            let d = match (c0, c1) {
                (None, None) => {
                    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
                    if det.abs() < f64::MIN_POSITIVE {
                        continue;
                    }
                    [
                        (-g[0] * b[1][1] + g[1] * b[0][1]) / det,
                        (-g[1] * b[0][0] + g[0] * b[1][0]) / det,
                    ]
                }
                (None, Some(d1)) => {
                    if b[0][0] <= 0.0 {
                        continue;
                    }
                    [-(g[0] + b[0][1] * d1) / b[0][0], d1]
                }
                (Some(d0), None) => {
                    if b[1][1] <= 0.0 {
                        continue;
                    }
                    [d0, -(g[1] + b[1][0] * d0) / b[1][1]]
                }
                (Some(d0), Some(d1)) => [d0, d1],
            };
            if !(d[0].is_finite() && d[1].is_finite()) || !feasible(d) {
                continue;
            }
            let val = q(d);
            if val < best_q {
                best_q = val;
                best = [d[0].clamp(lo[0], hi[0]), d[1].clamp(lo[1], hi[1])];
            }
        }
    }
    best
}

//! Zero-revolution Lambert arcs and the two rendezvous impulses of a transfer.
//!
//! The time-of-flight equation is written in the Lancaster–Blanchard universal
//! variable `x` (x < 1 elliptic, x = 1 parabolic, x > 1 hyperbolic) and solved
//! with Householder iterations, following Izzo's formulation. The transfer
//! plane normal is explicit, so the 180° case is handled by prescribing it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::orbits::{GravParam, OrbitalElements, Vec3, SECONDS_PER_DAY};

/// Relative tolerance on the non-dimensional time-of-flight equation.
const TOF_TOL: f64 = 1e-11;
const MAX_ITERATIONS: usize = 60;
/// Angular distance from π inside which the transfer plane is taken from the
/// ecliptic normal instead of `r1 × r2`.
const ANTIPODAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertSolution {
    /// Departure velocity on the transfer arc, km/s.
    pub v1: Vec3,
    /// Arrival velocity on the transfer arc, km/s.
    pub v2: Vec3,
    pub iterations: usize,
    pub converged: bool,
}

/// Impulses (km/s) applied at departure and at arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulsePair {
    pub dv1: Vec3,
    pub dv2: Vec3,
}

impl ImpulsePair {
    pub fn total(&self) -> f64 {
        self.dv1.norm() + self.dv2.norm()
    }
}

/// Prograde zero-revolution arc from `r1` to `r2` (km) in `tof` days.
pub fn lambert(r1: &Vec3, r2: &Vec3, tof: f64, mu: GravParam) -> Result<LambertSolution> {
    if !(tof.is_finite() && tof > 0.0) {
        return Err(Error::domain(format!("time of flight must be positive, got {tof} days")));
    }
    let r1n = r1.norm();
    let r2n = r2.norm();
    if !(r1n > 0.0 && r2n > 0.0) || !r1n.is_finite() || !r2n.is_finite() {
        return Err(Error::domain("Lambert endpoints must be finite and non-zero"));
    }
    let mu = mu.value();
    let tof_s = tof * SECONDS_PER_DAY;

    let ir1 = r1 / r1n;
    let ir2 = r2 / r2n;
    let chord = (r2 - r1).norm();
    let s = 0.5 * (r1n + r2n + chord);

    let cross = ir1.cross(&ir2);
    let transfer_angle = cross.norm().atan2(ir1.dot(&ir2));
    let ih = if PI - transfer_angle < ANTIPODAL_TOL {
        antipodal_normal(&ir1)?
    } else {
        cross.normalize()
    };

    let mut lambda = (1.0 - (chord / s).min(1.0)).max(0.0).sqrt();
    let (it1, it2) = if ih.z < 0.0 {
        // the short way round is retrograde; take the long way
        lambda = -lambda;
        (ir1.cross(&ih), ir2.cross(&ih))
    } else {
        (ih.cross(&ir1), ih.cross(&ir2))
    };

    let t_nd = (2.0 * mu / (s * s * s)).sqrt() * tof_s;
    let (x, iterations, residual) = solve_x(lambda, t_nd);
    let converged = residual <= TOF_TOL;
    if !converged {
        return Err(Error::Convergence {
            what: "Lambert time-of-flight iteration",
            iterations,
            residual,
        });
    }

    let gamma = (mu * s / 2.0).sqrt();
    let rho = (r1n - r2n) / chord;
    let sigma = (1.0 - rho * rho).max(0.0).sqrt();
    let y = (1.0 - lambda * lambda + lambda * lambda * x * x).sqrt();
    let vr1 = gamma * ((lambda * y - x) - rho * (lambda * y + x)) / r1n;
    let vr2 = -gamma * ((lambda * y - x) + rho * (lambda * y + x)) / r2n;
    let vt = gamma * sigma * (y + lambda * x);
    let v1 = vr1 * ir1 + (vt / r1n) * it1;
    let v2 = vr2 * ir2 + (vt / r2n) * it2;

    if !(v1.iter().all(|c| c.is_finite()) && v2.iter().all(|c| c.is_finite())) {
        return Err(Error::SingularGeometry("non-finite Lambert velocities".into()));
    }
    Ok(LambertSolution {
        v1,
        v2,
        iterations,
        converged,
    })
}

/// Plane normal for an (almost) antipodal transfer: the ecliptic normal made
/// orthogonal to the departure direction.
fn antipodal_normal(ir1: &Vec3) -> Result<Vec3> {
    let z = Vec3::z();
    let candidate = z - ir1.dot(&z) * ir1;
    if candidate.norm() > 1e-8 {
        return Ok(candidate.normalize());
    }
    let x = Vec3::x();
    let candidate = x - ir1.dot(&x) * ir1;
    if candidate.norm() > 1e-8 {
        Ok(candidate.normalize())
    } else {
        Err(Error::SingularGeometry(
            "cannot define a transfer plane for antipodal endpoints".into(),
        ))
    }
}

/// Householder iteration on x. Returns (x, iterations, relative residual).
fn solve_x(lambda: f64, t: f64) -> (f64, usize, f64) {
    let t00 = lambda.acos() + lambda * (1.0 - lambda * lambda).sqrt();
    let t1 = 2.0 / 3.0 * (1.0 - lambda.powi(3));
    let mut x = if t >= t00 {
        (t00 / t).powf(2.0 / 3.0) - 1.0
    } else if t <= t1 {
        2.5 * t1 / t * (t1 - t) / (1.0 - lambda.powi(5)) + 1.0
    } else {
        (t00 / t).powf(std::f64::consts::LN_2 / (t00 / t1).ln()) - 1.0
    };

    let mut residual = f64::INFINITY;
    let mut polished = false;
    for it in 1..=MAX_ITERATIONS {
        let tof = x_to_tof(x, lambda);
        let delta = tof - t;
        residual = (delta / t).abs();
        if residual <= TOF_TOL && polished {
            return (x, it, residual);
        }
        // one extra step after reaching tolerance; convergence is cubic
        if residual <= TOF_TOL {
            polished = true;
        }
        let (d1, d2, d3) = tof_derivatives(x, tof, lambda);
        let d1sq = d1 * d1;
        let step = delta * (d1sq - delta * d2 / 2.0) / (d1 * (d1sq - delta * d2) + d3 * delta * delta / 6.0);
        if !step.is_finite() {
            break;
        }
        let mut next = x - step;
        // x must stay above -1 (the minimum-energy limit of elliptic arcs)
        if next <= -1.0 {
            next = 0.5 * (x - 1.0);
        }
        if next == x {
            return (x, it, residual);
        }
        x = next;
    }
    let tof = x_to_tof(x, lambda);
    (x, MAX_ITERATIONS, ((tof - t) / t).abs().min(residual))
}

fn tof_derivatives(x: f64, t: f64, lambda: f64) -> (f64, f64, f64) {
    let l2 = lambda * lambda;
    let l3 = l2 * lambda;
    let umx2 = 1.0 - x * x;
    let y = (1.0 - l2 * umx2).sqrt();
    let y2 = y * y;
    let y3 = y2 * y;
    let d1 = 1.0 / umx2 * (3.0 * t * x - 2.0 + 2.0 * l3 * x / y);
    let d2 = 1.0 / umx2 * (3.0 * t + 5.0 * x * d1 + 2.0 * (1.0 - l2) * l3 / y3);
    let d3 = 1.0 / umx2 * (7.0 * x * d2 + 8.0 * d1 - 6.0 * (1.0 - l2) * l2 * l3 * x / (y3 * y2));
    (d1, d2, d3)
}

/// Non-dimensional time of flight for a given x.
fn x_to_tof(x: f64, lambda: f64) -> f64 {
    const BATTIN: f64 = 0.01;
    const LAGRANGE: f64 = 0.2;
    let dist = (x - 1.0).abs();
    if dist < LAGRANGE && dist > BATTIN {
        return x_to_tof_lagrange(x, lambda);
    }
    let k = lambda * lambda;
    let e = x * x - 1.0;
    let rho = e.abs();
    let z = (1.0 + k * e).sqrt();
    if dist < BATTIN {
        let eta = z - lambda * x;
        let s1 = 0.5 * (1.0 - lambda - x * eta);
        let q = 4.0 / 3.0 * hypergeometric_f(s1, 1e-15);
        (eta * eta * eta * q + 4.0 * lambda * eta) / 2.0
    } else {
        let y = rho.sqrt();
        let g = x * z - lambda * e;
        let d = if e < 0.0 {
            g.clamp(-1.0, 1.0).acos()
        } else {
            let f = y * (z - lambda * x);
            (f + g).ln()
        };
        (x - lambda * z - d / y) / e
    }
}

fn x_to_tof_lagrange(x: f64, lambda: f64) -> f64 {
    let a = 1.0 / (1.0 - x * x);
    if a > 0.0 {
        let alfa = 2.0 * x.acos();
        let mut beta = 2.0 * (lambda * lambda / a).sqrt().asin();
        if lambda < 0.0 {
            beta = -beta;
        }
        a * a.sqrt() * ((alfa - alfa.sin()) - (beta - beta.sin())) / 2.0
    } else {
        let alfa = 2.0 * x.acosh();
        let mut beta = 2.0 * (-lambda * lambda / a).sqrt().asinh();
        if lambda < 0.0 {
            beta = -beta;
        }
        -a * (-a).sqrt() * ((beta - beta.sinh()) - (alfa - alfa.sinh())) / 2.0
    }
}

/// Gauss hypergeometric series 2F1(3, 1; 5/2; z).
fn hypergeometric_f(z: f64, tol: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for j in 0..1000 {
        let jf = j as f64;
        term = term * (3.0 + jf) * (1.0 + jf) / (2.5 + jf) * z / (jf + 1.0);
        sum += term;
        if term.abs() <= tol {
            break;
        }
    }
    sum
}

/// Impulses to leave orbit `from` at epoch `tau` (days) and rendezvous with
/// orbit `to` after `transit` days.
pub fn transfer_impulses(
    from: &OrbitalElements,
    to: &OrbitalElements,
    tau: f64,
    transit: f64,
    mu: GravParam,
) -> Result<ImpulsePair> {
    let arrival = tau + transit;
    let departure_state = from.state_at(mu, tau);
    let arrival_state = to.state_at(mu, arrival);
    let sol = lambert(&departure_state.r, &arrival_state.r, transit, mu)?;
    Ok(ImpulsePair {
        dv1: sol.v1 - departure_state.v,
        dv2: arrival_state.v - sol.v2,
    })
}

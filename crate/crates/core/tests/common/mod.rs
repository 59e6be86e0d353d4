//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use arp_core::inner::{leg_cost, PARK_BOUNDS, TRANSIT_BOUNDS};
use arp_core::orbits::{GravParam, OrbitalElements, Vec3, AU_KM, SECONDS_PER_DAY};
use rand::Rng;

fn accel(r: &Vec3, mu: f64) -> Vec3 {
    let d = r.norm();
    -mu / (d * d * d) * r
}

/// Two-body propagation by classical RK4 with a step proportional to the
/// local dynamical time `sqrt(r³/μ)`. Independent of any conic formula.
pub fn rk4_propagate(r0: Vec3, v0: Vec3, mu: f64, dt_days: f64) -> (Vec3, Vec3) {
    const STEPS_PER_RADIAN: f64 = 1500.0;
    let total = dt_days * SECONDS_PER_DAY;
    let sign = total.signum();
    let (mut r, mut v) = (r0, v0);
    let mut done = 0.0;
    while done < total.abs() {
        let d = r.norm();
        let mut h = (d * d * d / mu).sqrt() / STEPS_PER_RADIAN;
        if done + h > total.abs() {
            h = total.abs() - done;
        }
        let hs = sign * h;
        let k1v = accel(&r, mu);
        let k1r = v;
        let k2v = accel(&(r + 0.5 * hs * k1r), mu);
        let k2r = v + 0.5 * hs * k1v;
        let k3v = accel(&(r + 0.5 * hs * k2r), mu);
        let k3r = v + 0.5 * hs * k2v;
        let k4v = accel(&(r + hs * k3r), mu);
        let k4r = v + hs * k3v;
        r += hs / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        v += hs / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        done += h;
    }
    (r, v)
}

/// Main-belt-like random orbit with epoch `epoch`.
pub fn random_belt_orbit<R: Rng>(rng: &mut R, epoch: f64) -> OrbitalElements {
    OrbitalElements::new(
        rng.gen_range(0.8..3.5) * AU_KM,
        rng.gen_range(0.0..0.4),
        rng.gen_range(0.0..0.5),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        epoch,
    )
    .unwrap()
}

/// Random elliptic orbit over a wide range of shapes.
pub fn random_orbit<R: Rng>(rng: &mut R) -> OrbitalElements {
    OrbitalElements::new(
        rng.gen_range(0.3..30.0) * AU_KM,
        rng.gen_range(0.0..0.95),
        rng.gen_range(0.0..std::f64::consts::PI),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.0..TAU),
        rng.gen_range(50_000.0..70_000.0),
    )
    .unwrap()
}

/// Circular ecliptic orbit of radius `a_au` at mean anomaly `phase` (rad) at
/// `epoch`.
pub fn circular(a_au: f64, phase: f64, epoch: f64) -> OrbitalElements {
    OrbitalElements::new(a_au * AU_KM, 0.0, 0.0, 0.0, 0.0, phase, epoch).unwrap()
}

/// Best leg objective on the half-day grid over the inner-solver box.
pub fn grid_leg_minimum(from: &OrbitalElements, to: &OrbitalElements, tau: f64, mu: GravParam) -> (f64, [f64; 2]) {
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    let mut park = PARK_BOUNDS.0;
    while park <= PARK_BOUNDS.1 {
        let mut transit = TRANSIT_BOUNDS.0;
        while transit <= TRANSIT_BOUNDS.1 {
            if let Ok((_, f)) = leg_cost(from, to, tau, [park, transit], mu) {
                if f < best.0 {
                    best = (f, [park, transit]);
                }
            }
            transit += 0.5;
        }
        park += 0.5;
    }
    best
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Composite Simpson integral of the improvement `max(best - y, 0)` against the
/// normal density of `y`.
pub fn ei_quadrature(mean: f64, sd: f64, best: f64) -> f64 {
    let lo = mean - 14.0 * sd;
    if best <= lo {
        return 0.0;
    }
    let panels = 200_000;
    let h = (best - lo) / panels as f64;
    let g = |y: f64| {
        let z = (y - mean) / sd;
        (best - y) * (-0.5 * z * z).exp() / (sd * TAU.sqrt())
    };
    let mut s = g(lo) + g(best);
    for k in 1..panels {
        s += g(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Expected Kendall distance under the Mallows model in closed form,
/// `n q/(1-q) - Σ_{j=1..n} j q^j/(1-q^j)` with `q = e^{-θ}`.
pub fn mallows_mean_closed_form(n: usize, theta: f64) -> f64 {
    if theta == 0.0 {
        return (n * (n - 1)) as f64 / 4.0;
    }
    let q = (-theta).exp();
    let mut e = n as f64 * q / (1.0 - q);
    for j in 1..=n {
        let qj = q.powi(j as i32);
        e -= j as f64 * qj / (1.0 - qj);
    }
    e
}

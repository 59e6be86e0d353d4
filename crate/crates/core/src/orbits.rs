//! Keplerian two-body machinery.
//!
//! Public quantities use km, km/s and days (MJD). Internally everything runs in
//! seconds; one day is exactly [`SECONDS_PER_DAY`] seconds.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// IAU 2012 astronomical unit.
pub const AU_KM: f64 = 1.495_978_707e8;
/// Heliocentric gravitational parameter, km^3/s^2.
pub const MU_SUN: f64 = 1.327_124_400_18e11;

const KEPLER_TOL: f64 = 1e-13;
const KEPLER_NEWTON_ITERS: usize = 50;
/// Threshold below which eccentricity or sin(inclination) is treated as zero.
const DEGENERATE_TOL: f64 = 1e-11;

/// Gravitational parameter of the central body in km^3/s^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GravParam(f64);

impl GravParam {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu > 0.0 {
            Ok(Self(mu))
        } else {
            Err(Error::domain(format!("gravitational parameter must be positive, got {mu}")))
        }
    }

    pub const fn sun() -> Self {
        Self(MU_SUN)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for GravParam {
    fn default() -> Self {
        Self::sun()
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Classical elements of an elliptic orbit at a reference epoch.
///
/// The anomaly is stored as the mean anomaly at `epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    /// Semi-major axis, km.
    pub a: f64,
    pub e: f64,
    /// Inclination, rad.
    pub i: f64,
    /// Longitude of the ascending node, rad.
    pub raan: f64,
    /// Argument of periapsis, rad.
    pub argp: f64,
    /// Mean anomaly at `epoch`, rad.
    pub m0: f64,
    /// Reference epoch, MJD.
    pub epoch: f64,
}

impl OrbitalElements {
    /// Validates the elements and reduces the angles to `[0, 2π)`.
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64, m0: f64, epoch: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(format!("semi-major axis must be positive, got {a}")));
        }
        if !(0.0..1.0).contains(&e) {
            return Err(Error::domain(format!("eccentricity must lie in [0, 1), got {e}")));
        }
        if !(i.is_finite() && raan.is_finite() && argp.is_finite() && m0.is_finite() && epoch.is_finite()) {
            return Err(Error::domain("non-finite orbital element"));
        }
        if !(0.0..=PI).contains(&i) {
            return Err(Error::domain(format!("inclination must lie in [0, π], got {i}")));
        }
        Ok(Self {
            a,
            e,
            i,
            raan: wrap_angle(raan),
            argp: wrap_angle(argp),
            m0: wrap_angle(m0),
            epoch,
        })
    }

    /// Checks elements that were built without `new`, e.g. deserialized.
    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.e, self.i, self.raan, self.argp, self.m0, self.epoch).map(|_| ())
    }

    /// Orbital period in days.
    pub fn period(&self, mu: GravParam) -> f64 {
        period_seconds(self.a, mu.value()) / SECONDS_PER_DAY
    }

    /// Mean motion, rad/s.
    pub fn mean_motion(&self, mu: GravParam) -> f64 {
        (mu.value() / (self.a * self.a * self.a)).sqrt()
    }

    pub fn state_at(&self, mu: GravParam, at: f64) -> StateVector {
        elements_to_state(self, mu, at)
    }

    pub fn position_at(&self, mu: GravParam, at: f64) -> Vec3 {
        self.state_at(mu, at).r
    }
}

/// Heliocentric position (km) and velocity (km/s) at an epoch (MJD).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub r: Vec3,
    pub v: Vec3,
    pub epoch: f64,
}

impl StateVector {
    pub fn specific_energy(&self, mu: GravParam) -> f64 {
        0.5 * self.v.norm_squared() - mu.value() / self.r.norm()
    }
}

/// Kepler's third law, in seconds.
pub fn period_seconds(a: f64, mu: f64) -> f64 {
    TAU * (a * a * a / mu).sqrt()
}

/// Solve `E - e sin E = M` for the eccentric anomaly.
///
/// The result lies on the same 2π branch as `mean_anomaly`.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::domain(format!("eccentricity must lie in [0, 1), got {e}")));
    }
    if !mean_anomaly.is_finite() {
        return Err(Error::domain("mean anomaly is not finite"));
    }
    if e == 0.0 {
        return Ok(mean_anomaly);
    }
    let branch = (mean_anomaly / TAU).floor() * TAU;
    let m = mean_anomaly - branch;
    let residual = |ea: f64| ea - e * ea.sin() - m;

    let mut ea = if e > 0.8 { PI } else { m };
    for _ in 0..KEPLER_NEWTON_ITERS {
        let f = residual(ea);
        if f.abs() < KEPLER_TOL {
            return Ok(ea + branch);
        }
        ea -= f / (1.0 - e * ea.cos());
    }

    // f is monotone on [0, 2π] with f(0) <= 0 <= f(2π)
    let (mut lo, mut hi) = (0.0_f64, TAU);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = residual(mid);
        if f.abs() < KEPLER_TOL || hi - lo < f64::EPSILON {
            break;
        }
        if f > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(mid + branch)
}

/// Cartesian state of the body described by `el` at epoch `at` (MJD).
pub fn elements_to_state(el: &OrbitalElements, mu: GravParam, at: f64) -> StateVector {
    let mu_v = mu.value();
    let dt = (at - el.epoch) * SECONDS_PER_DAY;
    let m = wrap_angle(el.m0 + el.mean_motion(mu) * dt);
    // invalid elements give a NaN state, which downstream solvers reject
    let ea = solve_kepler(m, el.e).unwrap_or(f64::NAN);
    let (sin_e, cos_e) = ea.sin_cos();
    let b = (1.0 - el.e * el.e).sqrt();

    let x = el.a * (cos_e - el.e);
    let y = el.a * b * sin_e;
    let r = el.a * (1.0 - el.e * cos_e);
    let k = (mu_v * el.a).sqrt() / r;
    let vx = -k * sin_e;
    let vy = k * b * cos_e;

    let rot = perifocal_to_inertial(el.raan, el.i, el.argp);
    StateVector {
        r: rot * Vec3::new(x, y, 0.0),
        v: rot * Vec3::new(vx, vy, 0.0),
        epoch: at,
    }
}

fn perifocal_to_inertial(raan: f64, inc: f64, argp: f64) -> nalgebra::Matrix3<f64> {
    let (so, co) = raan.sin_cos();
    let (si, ci) = inc.sin_cos();
    let (sw, cw) = argp.sin_cos();
    nalgebra::Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    )
}

/// Classical elements of an elliptic state, referenced to the state's epoch.
///
/// Undefined angles are fixed as follows: for a circular orbit the argument of
/// periapsis is zero and the anomaly is measured from the node; for an
/// equatorial orbit the node is placed on the x axis (Ω = 0).
pub fn state_to_elements(sv: &StateVector, mu: GravParam) -> Result<OrbitalElements> {
    let mu_v = mu.value();
    let r = sv.r;
    let v = sv.v;
    let rn = r.norm();
    if !(rn > 0.0) || !rn.is_finite() || !v.norm().is_finite() {
        return Err(Error::domain("state position must be finite and non-zero"));
    }
    let energy = sv.specific_energy(mu);
    if energy >= 0.0 {
        return Err(Error::domain(format!(
            "state is not elliptic (specific energy {energy:e} km^2/s^2)"
        )));
    }
    let h = r.cross(&v);
    let hn = h.norm();
    if hn == 0.0 {
        return Err(Error::domain("rectilinear state has no orbital plane"));
    }
    let h_hat = h / hn;
    let a = -mu_v / (2.0 * energy);
    let e_vec = ((v.norm_squared() - mu_v / rn) * r - r.dot(&v) * v) / mu_v;
    let e = e_vec.norm();
    if e >= 1.0 {
        return Err(Error::domain(format!("eccentricity {e} is not elliptic")));
    }
    let inc = (h_hat.z).clamp(-1.0, 1.0).acos();

    let node = Vec3::new(-h.y, h.x, 0.0);
    let equatorial = node.norm() < DEGENERATE_TOL * hn;
    let (raan, node_hat) = if equatorial {
        (0.0, Vec3::x())
    } else {
        (node.y.atan2(node.x), node.normalize())
    };
    let signed_angle = |from: &Vec3, to: &Vec3| h_hat.dot(&from.cross(to)).atan2(from.dot(to));

    let (e, argp, nu) = if e < DEGENERATE_TOL {
        (0.0, 0.0, signed_angle(&node_hat, &r))
    } else {
        (e, signed_angle(&node_hat, &e_vec), signed_angle(&e_vec, &r))
    };

    let (sin_nu, cos_nu) = nu.sin_cos();
    let ea = ((1.0 - e * e).sqrt() * sin_nu).atan2(e + cos_nu);
    let m = ea - e * ea.sin();

    OrbitalElements::new(a, e, inc, raan, argp, m, sv.epoch)
}

/// Stumpff functions C(z), S(z).
fn stumpff(z: f64) -> (f64, f64) {
    if z > 1e-6 {
        let sz = z.sqrt();
        ((1.0 - sz.cos()) / z, (sz - sz.sin()) / (sz * z))
    } else if z < -1e-6 {
        let sz = (-z).sqrt();
        ((sz.cosh() - 1.0) / -z, (sz.sinh() - sz) / (sz * -z))
    } else {
        (
            0.5 - z / 24.0 + z * z / 720.0,
            1.0 / 6.0 - z / 120.0 + z * z / 5040.0,
        )
    }
}

/// Propagates a state on any conic by `dt` days with the universal-variable
/// Kepler equation.
pub fn propagate(sv: &StateVector, mu: GravParam, dt: f64) -> Result<StateVector> {
    let mu_v = mu.value();
    let sqrt_mu = mu_v.sqrt();
    let r0 = sv.r.norm();
    let v0 = sv.v.norm();
    if !(r0 > 0.0) {
        return Err(Error::domain("cannot propagate from the origin"));
    }
    let vr0 = sv.r.dot(&sv.v) / r0;
    let alpha = 2.0 / r0 - v0 * v0 / mu_v;
    let mut dt_s = dt * SECONDS_PER_DAY;
    if alpha > 0.0 {
        // whole revolutions do not change the state
        let period = TAU / (alpha.powf(1.5) * sqrt_mu);
        dt_s -= (dt_s / period).trunc() * period;
    }
    if dt_s == 0.0 {
        return Ok(StateVector { epoch: sv.epoch + dt, ..*sv });
    }

    let target = sqrt_mu * dt_s;
    let kepler = |chi: f64| {
        let z = alpha * chi * chi;
        let (c, s) = stumpff(z);
        let f = r0 * vr0 / sqrt_mu * chi * chi * c + (1.0 - alpha * r0) * chi.powi(3) * s + r0 * chi - target;
        let df = r0 * vr0 / sqrt_mu * chi * (1.0 - z * s) + (1.0 - alpha * r0) * chi * chi * c + r0;
        (f, df)
    };
    let mut chi = if alpha > 0.0 {
        sqrt_mu * alpha * dt_s
    } else {
        sqrt_mu * alpha.abs() * dt_s
    };
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        let (f, df) = kepler(chi);
        residual = (f / target).abs();
        let step = f / df;
        chi -= step;
        if residual < 1e-14 || step.abs() <= 1e-15 * chi.abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            what: "universal Kepler equation",
            iterations: 200,
            residual,
        });
    }

    let z = alpha * chi * chi;
    let (c, s) = stumpff(z);
    let f = 1.0 - chi * chi / r0 * c;
    let g = dt_s - chi.powi(3) * s / sqrt_mu;
    let r = f * sv.r + g * sv.v;
    let rn = r.norm();
    let fdot = sqrt_mu / (rn * r0) * (z * chi * s - chi);
    let gdot = 1.0 - chi * chi / rn * c;
    Ok(StateVector {
        r,
        v: fdot * sv.r + gdot * sv.v,
        epoch: sv.epoch + dt,
    })
}

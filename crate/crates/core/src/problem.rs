//! Problem instances, catalog ingestion and objective evaluation.
//!
//! A route visits every asteroid of an instance once, starting from Earth at
//! `tau0`. Leg `i` parks `t[2i]` days on the current orbit, then transfers for
//! `t[2i+1]` days to the next asteroid (zero-based positions). The objective is
//! the total impulse plus 2 km/s per 30 days of elapsed time.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{optimize_leg, PARK_BOUNDS, TRANSIT_BOUNDS};
use crate::lambert::transfer_impulses;
use crate::orbits::{GravParam, OrbitalElements, AU_KM};
use crate::permutation::{uniform_index, Permutation};

/// Weight of elapsed time in the objective, (km/s) per day.
pub const TIME_WEIGHT: f64 = 2.0 / 30.0;
/// Default start epoch, MJD.
pub const DEFAULT_TAU0: f64 = 59396.0;
pub const CATALOG_HEADER: &str = "id,epoch_mjd,a_au,e,i_deg,raan_deg,argp_deg,M_deg";
pub const EARTH_ID: u64 = 0;

pub fn scalarize(dv: f64, total_time: f64) -> f64 {
    dv + TIME_WEIGHT * total_time
}

/// Earth's J2000 mean elements (heliocentric ecliptic), epoch MJD 51544.5.
pub fn default_earth() -> OrbitalElements {
    OrbitalElements::new(
        1.000_002_61 * AU_KM,
        0.016_711_23,
        1.531e-5_f64.to_radians(),
        180.0_f64.to_radians(),
        282.937_681_93_f64.to_radians(),
        357.526_889_73_f64.to_radians(),
        51544.5,
    )
    .expect("valid Earth elements")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub id: u64,
    #[serde(flatten)]
    pub elements: OrbitalElements,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsteroidCatalog {
    /// Asteroids only; the Earth row (id 0) is kept separately.
    pub records: Vec<CatalogRecord>,
    pub earth: Option<OrbitalElements>,
    pub source: String,
}

impl AsteroidCatalog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn earth_or_default(&self) -> OrbitalElements {
        self.earth.unwrap_or_else(default_earth)
    }

    /// Writes the catalog in the CSV format read by [`load_catalog`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CATALOG_HEADER.split(','))?;
        let earth = self.earth.map(|e| CatalogRecord {
            id: EARTH_ID,
            elements: e,
        });
        for rec in earth.iter().chain(&self.records) {
            let el = &rec.elements;
            w.write_record([
                rec.id.to_string(),
                el.epoch.to_string(),
                (el.a / AU_KM).to_string(),
                el.e.to_string(),
                el.i.to_degrees().to_string(),
                el.raan.to_degrees().to_string(),
                el.argp.to_degrees().to_string(),
                el.m0.to_degrees().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<AsteroidCatalog> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let catalog = parse_catalog(file, path.display().to_string())?;
    log::info!("loaded {} asteroids from {}", catalog.len(), catalog.source);
    Ok(catalog)
}

/// Parses catalog CSV. Line numbers in errors are 1-based file lines.
pub fn parse_catalog<R: Read>(input: R, source: impl Into<String>) -> Result<AsteroidCatalog> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse { line: 1, message: "empty catalog".into() }),
        }
    };
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    if columns.join(",") != CATALOG_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{CATALOG_HEADER}`, found `{}`", header.trim()),
        });
    }

    let mut records = Vec::new();
    let mut earth = None;
    let mut ids = std::collections::HashSet::new();
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let id: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("bad id {:?}", fields[0]),
        })?;
        let mut num = [0.0; 7];
        for (k, slot) in num.iter_mut().enumerate() {
            *slot = fields[k + 1].parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad number {:?} in column {}", fields[k + 1], columns[k + 1]),
            })?;
        }
        let [epoch, a_au, e, i, raan, argp, m] = num;
        let elements = OrbitalElements::new(
            a_au * AU_KM,
            e,
            i.to_radians(),
            raan.to_radians(),
            argp.to_radians(),
            m.to_radians(),
            epoch,
        )
        .map_err(|err| Error::Validation {
            line: lineno,
            message: err.to_string(),
        })?;
        if !ids.insert(id) {
            return Err(Error::Validation {
                line: lineno,
                message: format!("duplicate id {id}"),
            });
        }
        if id == EARTH_ID {
            earth = Some(elements);
        } else {
            records.push(CatalogRecord { id, elements });
        }
    }
    Ok(AsteroidCatalog {
        records,
        earth,
        source: source.into(),
    })
}

/// Main-belt-like synthetic catalog for experiments without the real one.
///
/// a ∈ [2.0, 3.3] AU, e ∈ [0, 0.25), i ∈ [0°, 15°), other angles uniform; all
/// elements at `epoch`. Ids run from 1 to `count`.
pub fn synthetic_catalog(count: usize, seed: u64, epoch: f64) -> AsteroidCatalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (1..=count as u64)
        .map(|id| {
            let a = rng.gen_range(2.0..3.3) * AU_KM;
            let e = rng.gen_range(0.0..0.25);
            let i = rng.gen_range(0.0..15.0_f64).to_radians();
            let raan = rng.gen_range(0.0..TAU);
            let argp = rng.gen_range(0.0..TAU);
            let m0 = rng.gen_range(0.0..TAU);
            let elements = OrbitalElements::new(a, e, i, raan, argp, m0, epoch).expect("valid synthetic elements");
            CatalogRecord { id, elements }
        })
        .collect();
    AsteroidCatalog {
        records,
        earth: Some(default_earth()),
        source: format!("synthetic(count={count}, seed={seed})"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub seed: u64,
    pub tau0: f64,
    pub mu: GravParam,
    pub earth: OrbitalElements,
    pub asteroids: Vec<CatalogRecord>,
    pub name: String,
}

pub fn instance_name(n: usize, seed: u64) -> String {
    format!("{n}_{seed}")
}

impl Instance {
    /// Builds an instance from explicit orbits (ids 1..=n).
    pub fn from_orbits(earth: OrbitalElements, asteroids: Vec<OrbitalElements>, tau0: f64, mu: GravParam, seed: u64) -> Self {
        let n = asteroids.len();
        Self {
            n,
            seed,
            tau0,
            mu,
            earth,
            asteroids: asteroids
                .into_iter()
                .enumerate()
                .map(|(k, elements)| CatalogRecord {
                    id: k as u64 + 1,
                    elements,
                })
                .collect(),
            name: instance_name(n, seed),
        }
    }

    pub fn asteroid(&self, k: usize) -> &OrbitalElements {
        &self.asteroids[k].elements
    }

    /// Orbit visited before leg `leg` of `pi` (Earth for the first leg).
    fn origin<'a>(&'a self, pi: &Permutation, leg: usize) -> &'a OrbitalElements {
        if leg == 0 {
            &self.earth
        } else {
            self.asteroid(pi[leg - 1])
        }
    }

    pub fn check_permutation(&self, pi: &Permutation) -> Result<()> {
        if pi.len() != self.n {
            return Err(Error::Permutation(format!(
                "permutation of length {} for an instance with {} asteroids",
                pi.len(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let inst: Instance = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if inst.asteroids.len() != inst.n || inst.n == 0 {
            return Err(Error::domain(format!(
                "instance declares n={} but lists {} asteroids",
                inst.n,
                inst.asteroids.len()
            )));
        }
        inst.earth.validate().map_err(|e| Error::domain(format!("earth: {e}")))?;
        for rec in &inst.asteroids {
            rec.elements.validate().map_err(|e| Error::domain(format!("asteroid {}: {e}", rec.id)))?;
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Draws `n` distinct asteroids with a partial Fisher–Yates shuffle of the
/// catalog indices. The generator is ChaCha8 seeded through
/// `SeedableRng::seed_from_u64(seed)`; draws use 64-bit uniform integers.
pub fn generate_instance(catalog: &AsteroidCatalog, n: usize, seed: u64, tau0: f64) -> Result<Instance> {
    if n == 0 || n > catalog.len() {
        return Err(Error::domain(format!(
            "instance size {n} must lie in 1..={}",
            catalog.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..catalog.len()).collect();
    for i in 0..n {
        let j = i + uniform_index(&mut rng, idx.len() - i);
        idx.swap(i, j);
    }
    Ok(Instance {
        n,
        seed,
        tau0,
        mu: GravParam::sun(),
        earth: catalog.earth_or_default(),
        asteroids: idx[..n].iter().map(|&k| catalog.records[k]).collect(),
        name: instance_name(n, seed),
    })
}

/// Parking and transit times, days: `[park₁, transit₁, park₂, transit₂, …]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeVector(Vec<f64>);

impl TimeVector {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if !t.len().is_multiple_of(2) {
            return Err(Error::domain("time vector must have even length"));
        }
        for (k, pair) in t.chunks(2).enumerate() {
            let (park, transit) = (pair[0], pair[1]);
            if !(PARK_BOUNDS.0..=PARK_BOUNDS.1).contains(&park) {
                return Err(Error::domain(format!("parking time {park} of leg {k} outside {PARK_BOUNDS:?}")));
            }
            if !(TRANSIT_BOUNDS.0..=TRANSIT_BOUNDS.1).contains(&transit) {
                return Err(Error::domain(format!(
                    "transit time {transit} of leg {k} outside {TRANSIT_BOUNDS:?}"
                )));
            }
        }
        Ok(Self(t))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn legs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.chunks(2).map(|c| (c[0], c[1]))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegCost {
    pub dv_out: f64,
    pub dv_in: f64,
    pub t_park: f64,
    pub t_transit: f64,
    /// Departure epoch, MJD.
    pub depart: f64,
    /// Arrival epoch, MJD.
    pub arrive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Total impulse, km/s.
    pub dv: f64,
    /// Elapsed time, days.
    #[serde(rename = "T")]
    pub total_time: f64,
    pub f: f64,
    pub legs: Vec<LegCost>,
}

/// Objective of a route with fixed times.
pub fn evaluate_full(instance: &Instance, pi: &Permutation, t: &TimeVector) -> Result<Evaluation> {
    instance.check_permutation(pi)?;
    if t.as_slice().len() != 2 * instance.n {
        return Err(Error::domain(format!(
            "time vector of length {} for {} legs",
            t.as_slice().len(),
            instance.n
        )));
    }
    let mut epoch = instance.tau0;
    let mut legs = Vec::with_capacity(instance.n);
    for (leg, (park, transit)) in t.legs().enumerate() {
        epoch += park;
        let depart = epoch;
        let from = instance.origin(pi, leg);
        let to = instance.asteroid(pi[leg]);
        let imp = transfer_impulses(from, to, depart, transit, instance.mu).map_err(|e| e.at_leg(leg))?;
        epoch += transit;
        legs.push(LegCost {
            dv_out: imp.dv1.norm(),
            dv_in: imp.dv2.norm(),
            t_park: park,
            t_transit: transit,
            depart,
            arrive: epoch,
        });
    }
    let dv = legs.iter().map(|l| l.dv_out + l.dv_in).sum();
    let total_time = t.total();
    Ok(Evaluation {
        dv,
        total_time,
        f: scalarize(dv, total_time),
        legs,
    })
}

/// Objective of a visiting order, with the times chosen leg by leg by the
/// inner solver. Deterministic in `(instance, pi)`.
pub fn evaluate_sequence(instance: &Instance, pi: &Permutation) -> Result<(Evaluation, TimeVector)> {
    instance.check_permutation(pi)?;
    let mut epoch = instance.tau0;
    let mut times = Vec::with_capacity(2 * instance.n);
    for leg in 0..instance.n {
        let from = instance.origin(pi, leg);
        let to = instance.asteroid(pi[leg]);
        let res = optimize_leg(from, to, epoch, instance.mu).map_err(|e| e.at_leg(leg))?;
        if !res.converged {
            log::debug!("leg {leg} of {pi}: inner solver stopped without convergence");
        }
        epoch += res.t_park;
        epoch += res.t_transit;
        times.push(res.t_park);
        times.push(res.t_transit);
    }
    let t = TimeVector::new(times)?;
    let eval = evaluate_full(instance, pi, &t)?;
    Ok((eval, t))
}

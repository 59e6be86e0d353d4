//! Gaussian-process surrogate over permutations.
//!
//! Correlation `k(p, q) = exp(-θ · d(p, q) / d_max)` with `d` the Kendall
//! distance, a constant (generalized least squares) mean, and the process
//! variance and θ chosen by maximizing the concentrated log-likelihood over a
//! fixed log-grid. Kendall distances are computed as the popcount of XORed
//! pair-order bitsets.

use std::f64::consts::PI;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::permutation::{max_kendall, Permutation};

/// Kernel θ candidates `2^-6, 2^-5.5, …, 2^8`.
pub fn theta_grid() -> Vec<f64> {
    (0..29).map(|k| 2f64.powf(-6.0 + 0.5 * k as f64)).collect()
}

pub const DEFAULT_NOISE_FLOOR: f64 = 1e-8;
const MAX_NUGGET: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub evaluated: Vec<(Permutation, f64)>,
    /// Fitted kernel θ (updated by [`gp_fit`]).
    pub kernel_theta: f64,
    /// Smallest nugget added to the correlation diagonal.
    pub noise_floor: f64,
}

impl SurrogateState {
    pub fn new(evaluated: Vec<(Permutation, f64)>) -> Self {
        Self {
            evaluated,
            kernel_theta: 1.0,
            noise_floor: DEFAULT_NOISE_FLOOR,
        }
    }
}

/// Bitset over position pairs `i < j`, bit set when `p[i] < p[j]`.
#[derive(Debug, Clone)]
pub(crate) struct PairCode {
    words: usize,
}

impl PairCode {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            words: max_kendall(n).div_ceil(64).max(1),
        }
    }

    pub(crate) fn encode(&self, p: &[usize], out: &mut [u64]) {
        out.fill(0);
        let mut bit = 0usize;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] < p[j] {
                    out[bit / 64] |= 1 << (bit % 64);
                }
                bit += 1;
            }
        }
    }

    #[inline]
    pub(crate) fn distance(a: &[u64], b: &[u64]) -> usize {
        a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub sd: f64,
}

/// A fitted surrogate.
#[derive(Debug, Clone)]
pub struct GaussianProcess {
    n: usize,
    m: usize,
    code: PairCode,
    codes: Vec<u64>,
    /// Row-major lower Cholesky factor of the correlation matrix.
    chol: Vec<f64>,
    alpha: Vec<f64>,
    /// Correlation by integer Kendall distance.
    kernel: Vec<f64>,
    pub theta: f64,
    pub theta_index: usize,
    pub mean: f64,
    pub variance: f64,
    pub nugget: f64,
    pub log_likelihood: f64,
}

struct TrainingSet {
    n: usize,
    code: PairCode,
    codes: Vec<u64>,
    dist: Vec<u32>,
    y: Vec<f64>,
}

impl TrainingSet {
    fn new(evaluated: &[(Permutation, f64)]) -> Result<Self> {
        let m = evaluated.len();
        if m < 2 {
            return Err(Error::Surrogate(format!("need at least 2 observations, got {m}")));
        }
        let n = evaluated[0].0.len();
        if evaluated.iter().any(|(p, _)| p.len() != n) {
            return Err(Error::Surrogate("observations of different length".into()));
        }
        if evaluated.iter().any(|(_, f)| !f.is_finite()) {
            return Err(Error::Surrogate("non-finite observation".into()));
        }
        let code = PairCode::new(n);
        let w = code.words;
        let mut codes = vec![0u64; m * w];
        for (k, (p, _)) in evaluated.iter().enumerate() {
            code.encode(p.as_slice(), &mut codes[k * w..(k + 1) * w]);
        }
        let mut dist = vec![0u32; m * m];
        let mut distinct = false;
        for i in 0..m {
            for j in 0..i {
                let d = PairCode::distance(&codes[i * w..(i + 1) * w], &codes[j * w..(j + 1) * w]) as u32;
                distinct |= d > 0;
                dist[i * m + j] = d;
                dist[j * m + i] = d;
            }
        }
        if !distinct {
            return Err(Error::Surrogate("all observed permutations are identical".into()));
        }
        Ok(Self {
            n,
            code,
            codes,
            dist,
            y: evaluated.iter().map(|(_, f)| *f).collect(),
        })
    }

    fn m(&self) -> usize {
        self.y.len()
    }

    fn kernel_table(&self, theta: f64) -> Vec<f64> {
        let dmax = max_kendall(self.n).max(1) as f64;
        (0..=max_kendall(self.n)).map(|d| (-theta * d as f64 / dmax).exp()).collect()
    }

    fn fit(&self, theta: f64, theta_index: usize, noise_floor: f64) -> Result<GaussianProcess> {
        let m = self.m();
        let kernel = self.kernel_table(theta);
        let mut nugget = noise_floor.max(f64::MIN_POSITIVE);
        let chol = loop {
            let mut r: Vec<f64> = self.dist.iter().map(|&d| kernel[d as usize]).collect();
            for i in 0..m {
                r[i * m + i] += nugget;
            }
            if let Some(l) = cholesky(r, m) {
                break l;
            }
            nugget *= 10.0;
            if nugget > MAX_NUGGET {
                return Err(Error::Surrogate(format!(
                    "correlation matrix not positive definite at θ = {theta}"
                )));
            }
        };

        let ones = vec![1.0; m];
        let z1 = forward_solve(&chol, m, &ones);
        let zy = forward_solve(&chol, m, &self.y);
        let mean = dot(&z1, &zy) / dot(&z1, &z1);
        let w: Vec<f64> = zy.iter().zip(&z1).map(|(a, b)| a - mean * b).collect();
        let variance = (dot(&w, &w) / m as f64).max(1e-300);
        let log_det: f64 = (0..m).map(|i| chol[i * m + i].ln()).sum::<f64>() * 2.0;
        let log_likelihood = -0.5 * m as f64 * variance.ln() - 0.5 * log_det;
        let alpha = backward_solve(&chol, m, &w);

        Ok(GaussianProcess {
            n: self.n,
            m,
            code: self.code.clone(),
            codes: self.codes.clone(),
            chol,
            alpha,
            kernel,
            theta,
            theta_index,
            mean,
            variance,
            nugget,
            log_likelihood,
        })
    }

    fn fit_indices(&self, grid: &[f64], indices: impl IntoIterator<Item = usize>, noise_floor: f64) -> Result<GaussianProcess> {
        let mut best: Option<GaussianProcess> = None;
        let mut last_err = None;
        for k in indices {
            match self.fit(grid[k], k, noise_floor) {
                Ok(gp) => {
                    if best.as_ref().is_none_or(|b| gp.log_likelihood > b.log_likelihood) {
                        best = Some(gp);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Surrogate("empty θ grid".into())))
    }
}

/// Fits the surrogate, scanning the whole θ grid, and records the chosen θ in
/// `state`.
pub fn gp_fit(state: &mut SurrogateState) -> Result<GaussianProcess> {
    let data = TrainingSet::new(&state.evaluated)?;
    let grid = theta_grid();
    let gp = data.fit_indices(&grid, 0..grid.len(), state.noise_floor)?;
    state.kernel_theta = gp.theta;
    Ok(gp)
}

/// Fits the surrogate with a fixed kernel θ.
pub fn gp_fit_fixed(evaluated: &[(Permutation, f64)], theta: f64, noise_floor: f64) -> Result<GaussianProcess> {
    TrainingSet::new(evaluated)?.fit(theta, usize::MAX, noise_floor)
}

/// Grid search for θ by hill climbing from grid index `start`: neighbours are
/// evaluated and the climb stops at the first local maximum of the
/// likelihood on the grid.
pub fn gp_fit_local(state: &mut SurrogateState, start: usize) -> Result<GaussianProcess> {
    let data = TrainingSet::new(&state.evaluated)?;
    let grid = theta_grid();
    let start = start.min(grid.len() - 1);
    let mut best = data.fit_indices(&grid, [start], state.noise_floor)?;
    for dir in [-1isize, 1] {
        loop {
            let k = best.theta_index as isize + dir;
            if k < 0 || k as usize >= grid.len() {
                break;
            }
            match data.fit(grid[k as usize], k as usize, state.noise_floor) {
                Ok(gp) if gp.log_likelihood > best.log_likelihood => best = gp,
                _ => break,
            }
        }
    }
    state.kernel_theta = best.theta;
    Ok(best)
}

impl GaussianProcess {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn predict(&self, p: &Permutation) -> Prediction {
        let mut code = vec![0u64; self.code.words];
        self.code.encode(p.as_slice(), &mut code);
        self.predict_code(&code)
    }

    pub(crate) fn predict_code(&self, code: &[u64]) -> Prediction {
        let w = self.code.words;
        // the nugget is a white-noise term of the kernel, so it also enters at
        // zero distance and the posterior interpolates the training data
        let k: Vec<f64> = (0..self.m)
            .map(|j| match PairCode::distance(code, &self.codes[j * w..(j + 1) * w]) {
                0 => self.kernel[0] + self.nugget,
                d => self.kernel[d],
            })
            .collect();
        let mean = self.mean + dot(&k, &self.alpha);
        let v = forward_solve(&self.chol, self.m, &k);
        let var = self.variance * (1.0 - dot(&v, &v)).max(0.0);
        Prediction { mean, sd: var.sqrt() }
    }

    pub fn permutation_length(&self) -> usize {
        self.n
    }

    pub(crate) fn pair_code(&self) -> &PairCode {
        &self.code
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place Cholesky of a row-major symmetric matrix; `None` if not positive
/// definite. Only the lower triangle of the result is meaningful.
fn cholesky(mut a: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    for i in 0..m {
        for j in 0..=i {
            let (ri, rj) = (i * m, j * m);
            let s = a[ri + j] - dot(&a[ri..ri + j], &a[rj..rj + j]);
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                a[ri + i] = s.sqrt();
            } else {
                a[ri + j] = s / a[rj + j];
            }
        }
    }
    Some(a)
}

/// Solves `L x = b`.
fn forward_solve(l: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; m];
    for i in 0..m {
        let row = &l[i * m..i * m + i];
        x[i] = (b[i] - dot(row, &x[..i])) / l[i * m + i];
    }
    x
}

/// Solves `Lᵀ x = b`.
fn backward_solve(l: &[f64], m: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in (0..m).rev() {
        x[i] /= l[i * m + i];
        let xi = x[i];
        for k in 0..i {
            x[k] -= l[i * m + k] * xi;
        }
    }
    x
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected improvement below `best` of a normal prediction.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let gap = best - mean;
    if !(sd > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

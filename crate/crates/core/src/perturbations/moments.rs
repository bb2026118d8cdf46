use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{DrawKind, NoiseFamily, RngStream};
use crate::problems::ESTIMATE_INFLATION;
use crate::stats::mean_stderr;

/// Number of standard-normal vectors behind the Gaussian moment constant.
pub const C2_SAMPLES: usize = 1_000_000;

const C2_SEED: u64 = 0x00c2_5eed;
const CHUNK: usize = 10_000;

/// Moments `E|z|^r`, r = 1, 2, 4, of the infinity norm of a standard normal
/// `d`-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxMoments {
    pub dim: usize,
    pub samples: usize,
    pub first: f64,
    pub second: f64,
    pub fourth: f64,
}

impl MaxMoments {
    /// Smallest `c` with `(E|z|^r)^(1/r) <= c` for r = 1, 2, 4, inflated.
    pub fn constant(&self) -> f64 {
        let c = self
            .first
            .max(self.second.sqrt())
            .max(self.fourth.powf(0.25));
        ESTIMATE_INFLATION * c
    }
}

/// Monte Carlo estimate from `samples` seeded draws. Chunks are generated in
/// parallel from independent substreams and reduced in chunk order, so the
/// result does not depend on the thread count.
pub fn estimate_max_moments(dim: usize, samples: usize, seed: u64) -> MaxMoments {
    let stream = RngStream::new(seed);
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<[f64; 3]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c, dim, DrawKind::Estimator);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut acc = [0.0; 3];
            for _ in 0..count {
                let m = (0..dim)
                    .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
                    .fold(0.0, f64::max);
                let m2 = m * m;
                acc[0] += m;
                acc[1] += m2;
                acc[2] += m2 * m2;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in &partial {
        for i in 0..3 {
            total[i] += p[i];
        }
    }
    let s = samples as f64;
    MaxMoments {
        dim,
        samples,
        first: total[0] / s,
        second: total[1] / s,
        fourth: total[2] / s,
    }
}

fn gaussian_moments(dim: usize) -> MaxMoments {
    static CACHE: OnceLock<Mutex<HashMap<usize, MaxMoments>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(m) = cache.lock().expect("moment cache poisoned").get(&dim) {
        return *m;
    }
    let m = estimate_max_moments(dim, C2_SAMPLES, C2_SEED);
    cache.lock().expect("moment cache poisoned").insert(dim, m);
    m
}

/// `C2` such that `E|xi|^r <= (C2 dt^(q+1/2))^r` for r = 1, 2, 4 in the
/// infinity norm, for a `dim`-dimensional draw of the given family.
pub fn moment_constant(family: NoiseFamily, dim: usize) -> f64 {
    match family {
        NoiseFamily::Gaussian => gaussian_moments(dim).constant(),
        NoiseFamily::Uniform => super::SQRT_3,
    }
}

/// `E|xi|^2` for a state-independent draw. The uniform value is exact: the
/// largest of `d` uniform magnitudes on `[0, sqrt 3]` has second moment
/// `3d / (d + 2)`.
pub fn analytic_second_moment(family: NoiseFamily, q: f64, dt: f64, dim: usize) -> f64 {
    let scale = dt.powf(2.0 * q + 1.0);
    match family {
        NoiseFamily::Gaussian => scale * gaussian_moments(dim).second,
        NoiseFamily::Uniform => {
            let d = dim as f64;
            scale * 3.0 * d / (d + 2.0)
        }
    }
}

/// Per-iteration largest (over n) mean of `|xi^k_n|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrace {
    pub k: Vec<usize>,
    pub max_second_moment: Vec<f64>,
    pub stderr: Vec<f64>,
    pub argmax_n: Vec<usize>,
}

/// Aggregate per-realization lattices `samples[r][k][n] = |xi^k_n|^2` into a
/// trace for `k = 1, 2, ...`. All realizations must share one shape.
pub fn track_xi_moments(samples: &[Vec<Vec<f64>>]) -> MomentTrace {
    let mut trace = MomentTrace {
        k: Vec::new(),
        max_second_moment: Vec::new(),
        stderr: Vec::new(),
        argmax_n: Vec::new(),
    };
    let Some(first) = samples.first() else {
        return trace;
    };
    let mut column = Vec::with_capacity(samples.len());
    for (k, row) in first.iter().enumerate().skip(1) {
        let mut best = (0usize, 0.0f64, 0.0f64);
        for n in 0..row.len() {
            column.clear();
            column.extend(samples.iter().map(|s| s[k][n]));
            let (mean, se) = mean_stderr(&column);
            if mean > best.1 {
                best = (n, mean, se);
            }
        }
        trace.k.push(k);
        trace.argmax_n.push(best.0);
        trace.max_second_moment.push(best.1);
        trace.stderr.push(best.2);
    }
    trace
}

//! Seeded sample plans and per-point random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartDomain, Exclusion, FinslerMetric, SlitTangentPoint};

/// Random stream `stream` of the master seed; independent of scheduling.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniformly distributed unit vector in `ℝⁿ`.
pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

const PLAN_SALT: u64 = 0x005E_ED0F_9A1D;

/// Where to evaluate a pointwise statistic: a regular grid plus seeded random points,
/// each paired with a seeded random fiber direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplePlan {
    /// Grid points per axis; a single entry applies to every axis.
    pub grid: Vec<usize>,
    pub random_points: usize,
    /// Sampling box; defaults to [`default_box`] of the chart.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub seed: u64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan {
            grid: vec![5],
            random_points: 64,
            bounds: None,
            seed: 0,
        }
    }
}

/// A box well inside the chart: the chart box shrunk by 10% and, for every
/// kept ball, 90% of the cube inscribed in it.
pub fn default_box(chart: &ChartDomain) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = chart
        .bounds
        .iter()
        .map(|&(lo, hi)| {
            let c = 0.5 * (lo + hi);
            let h = 0.45 * (hi - lo);
            (c - h, c + h)
        })
        .collect();
    for e in &chart.exclusions {
        if let Exclusion::OutsideBall {
            coords,
            center,
            radius,
        } = e
        {
            let h = 0.9 * radius / (coords.len() as f64).sqrt();
            for (&i, &c) in coords.iter().zip(center) {
                out[i] = (out[i].0.max(c - h), out[i].1.min(c + h));
            }
        }
    }
    out
}

impl SamplePlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.grid.is_empty() || !(self.grid.len() == 1 || self.grid.len() == n) {
            return Err(Error::InvalidParameter(format!(
                "grid must give one count or {n} counts"
            )));
        }
        if self.grid.contains(&0) && self.random_points == 0 {
            return Err(Error::InvalidParameter("sample plan is empty".into()));
        }
        if let Some(b) = &self.bounds {
            if b.len() != n || b.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
                return Err(Error::InvalidParameter("sample bounds must be n finite intervals".into()));
            }
        }
        Ok(())
    }

    fn axis_counts(&self, n: usize) -> Vec<usize> {
        if self.grid.len() == 1 {
            vec![self.grid[0]; n]
        } else {
            self.grid.clone()
        }
    }

    /// Grid points first (last axis fastest), then random points; points outside
    /// the chart are skipped. Deterministic given the seed.
    pub fn points(&self, m: &FinslerMetric) -> Result<Vec<SlitTangentPoint>> {
        let n = m.dimension();
        self.validate(n)?;
        let bounds = self.bounds.clone().unwrap_or_else(|| default_box(&m.chart));
        let counts = self.axis_counts(n);
        let mut xs: Vec<Vec<f64>> = Vec::new();
        if counts.iter().all(|&c| c > 0) {
            let total: usize = counts.iter().product();
            for flat in 0..total {
                let mut rem = flat;
                let mut x = vec![0.0; n];
                for i in (0..n).rev() {
                    let k = rem % counts[i];
                    rem /= counts[i];
                    let (lo, hi) = bounds[i];
                    x[i] = grid_coordinate(lo, hi, k, counts[i]);
                }
                xs.push(x);
            }
        }
        for r in 0..self.random_points {
            let mut rng = rng_for(self.seed ^ PLAN_SALT, r as u64);
            for _ in 0..1000 {
                let x: Vec<f64> = bounds
                    .iter()
                    .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                    .collect();
                if m.chart.contains(&x) {
                    xs.push(x);
                    break;
                }
            }
        }
        Ok(xs
            .into_iter()
            .filter(|x| m.chart.contains(x))
            .enumerate()
            .map(|(i, x)| {
                let mut rng = rng_for(self.seed, i as u64);
                SlitTangentPoint {
                    x,
                    y: random_direction(&mut rng, n),
                }
            })
            .collect())
    }
}

/// `k`-th of `count` equally spaced values on `[lo, hi]`, endpoints exact.
pub fn grid_coordinate(lo: f64, hi: f64, k: usize, count: usize) -> f64 {
    if count <= 1 {
        return 0.5 * (lo + hi);
    }
    if k + 1 == count {
        return hi;
    }
    lo + (hi - lo) * k as f64 / (count - 1) as f64
}

//! Holonomy of the nonlinear parallel transport: loop families at a point,
//! orbit sampling on the indicatrix and transitivity evidence.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::curve::{dist, geodesic_between};
use crate::dynamics::{parallel_transport, CurveOnM, IntegratorConfig};
use crate::error::{Error, Result};
use crate::geometry::FinslerMetric;
use crate::sampling::{random_direction, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    CoordinateRectangles,
    GeodesicPolygons,
    RandomPiecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopFamily {
    pub base: Vec<f64>,
    pub kind: LoopKind,
    /// Nominal edge length in chart units; actual edges are scaled by U[0.5, 1].
    pub edge: f64,
    /// Most vertices of a random piecewise loop (at least 3 are used).
    pub max_vertices: usize,
    pub seed: u64,
}

impl LoopFamily {
    pub fn new(base: Vec<f64>, kind: LoopKind, seed: u64) -> Self {
        LoopFamily {
            base,
            kind,
            edge: 0.2,
            max_vertices: 5,
            seed,
        }
    }

    pub fn validate(&self, m: &FinslerMetric) -> Result<()> {
        if !m.chart.contains(&self.base) {
            return Err(Error::OutsideChart { x: self.base.clone() });
        }
        if m.dimension() < 2 {
            return Err(Error::InvalidParameter("loops need a base of dimension ≥ 2".into()));
        }
        if !(self.edge.is_finite() && self.edge > 0.0) {
            return Err(Error::InvalidParameter("loop edge length must be positive".into()));
        }
        Ok(())
    }

    fn offset<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let len = self.edge * rng.random_range(0.5..=1.0);
        let mut x = self.base.clone();
        for (xi, d) in x.iter_mut().zip(random_direction(rng, n)) {
            *xi += len * d;
        }
        x
    }

    /// One loop at the base point drawn from `rng`.
    pub fn sample<R: Rng>(&self, m: &FinslerMetric, rng: &mut R, cfg: &IntegratorConfig) -> Result<CurveOnM> {
        let n = m.dimension();
        let p = &self.base;
        let curve = match self.kind {
            LoopKind::CoordinateRectangles => {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                // any quadrant, always counter-clockwise in the (i, j) plane with i < j
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let a = sign * self.edge * rng.random_range(0.5..=1.0);
                let b = sign * self.edge * rng.random_range(0.5..=1.0);
                CurveOnM::rectangle(p, (i.min(j), i.max(j)), a, b)?
            }
            LoopKind::RandomPiecewise => {
                let count = rng.random_range(3..=self.max_vertices.max(3));
                let mut vertices = vec![p.clone()];
                vertices.extend((1..count).map(|_| self.offset(rng, n)));
                CurveOnM::polygon(&vertices, true)?
            }
            LoopKind::GeodesicPolygons => {
                let q1 = self.offset(rng, n);
                let q2 = self.offset(rng, n);
                CurveOnM::from_segments(vec![
                    geodesic_between(m, p, &q1, cfg)?,
                    geodesic_between(m, &q1, &q2, cfg)?,
                    geodesic_between(m, &q2, p, cfg)?,
                ])?
            }
        };
        Ok(curve)
    }
}

/// Transport of `y₀` once around a loop closed at its start.
pub fn loop_transport(m: &FinslerMetric, c: &CurveOnM, y0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let gap = dist(&c.start(), &c.end());
    if gap > 1e-9 {
        return Err(Error::InvalidParameter(format!("loop is not closed (gap {gap:e})")));
    }
    parallel_transport(m, c, y0, cfg)
}

/// Transport of `y₀` along each loop of `word` in turn.
pub fn word_transport(m: &FinslerMetric, word: &[CurveOnM], y0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    let mut y = y0.to_vec();
    for c in word {
        y = loop_transport(m, c, &y, cfg)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub base: Vec<f64>,
    /// Unit vector, `F(p, y₀) = 1`.
    pub y0: Vec<f64>,
    /// `points[0] = y₀`.
    pub points: Vec<Vec<f64>>,
    /// Total loops applied to reach each point from `y₀`.
    pub word_lengths: Vec<usize>,
    pub f_drift_max: f64,
    pub f_drift_mean: f64,
    /// Words abandoned because a loop left the chart.
    pub words_skipped: usize,
}

/// Longest random word of loops.
pub const MAX_WORD_LENGTH: usize = 6;
/// Independent chains the orbit is split into.
pub const ORBIT_CHAINS: usize = 8;

fn chain(
    m: &FinslerMetric,
    family: &LoopFamily,
    y0: &[f64],
    len: usize,
    rng: &mut ChaCha8Rng,
    cfg: &IntegratorConfig,
) -> Result<(Vec<Vec<f64>>, Vec<usize>, usize)> {
    let mut points = Vec::with_capacity(len);
    let mut lengths = Vec::with_capacity(len);
    let mut skipped = 0;
    let mut y = y0.to_vec();
    let mut total = 0;
    while points.len() < len {
        if skipped > 20 * len + 100 {
            return Err(Error::InvalidParameter(format!(
                "loops keep leaving the chart ({skipped} failed words); use a shorter edge"
            )));
        }
        let k = rng.random_range(1..=MAX_WORD_LENGTH);
        let word: Result<Vec<CurveOnM>> = (0..k).map(|_| family.sample(m, rng, cfg)).collect();
        match word.and_then(|w| word_transport(m, &w, &y, cfg)) {
            Ok(next) => {
                y = next;
                total += k;
                points.push(y.clone());
                lengths.push(total);
            }
            Err(e @ Error::DimensionMismatch { .. }) => return Err(e),
            Err(_) => skipped += 1,
        }
    }
    Ok((points, lengths, skipped))
}

/// `count` points of `Hol_p·y₀` (including `y₀`), generated as
/// [`ORBIT_CHAINS`] seeded chains `y_{k+1} = W_k(y_k)` of random loop words.
pub fn holonomy_orbit(
    m: &FinslerMetric,
    y0: &[f64],
    family: &LoopFamily,
    count: usize,
    cfg: &IntegratorConfig,
) -> Result<OrbitSample> {
    family.validate(m)?;
    let p = &family.base;
    let n = m.dimension();
    if y0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y0.len(),
        });
    }
    if y0.iter().all(|v| *v == 0.0) {
        return Err(Error::SlitViolation);
    }
    if count == 0 {
        return Err(Error::InvalidParameter("orbit needs at least one point".into()));
    }
    let f0 = m.eval_f64(p, y0);
    let y0: Vec<f64> = y0.iter().map(|v| v / f0).collect();

    let extra = count - 1;
    let chains: Vec<usize> = (0..ORBIT_CHAINS)
        .map(|c| extra / ORBIT_CHAINS + usize::from(c < extra % ORBIT_CHAINS))
        .collect();
    let results: Vec<Result<(Vec<Vec<f64>>, Vec<usize>, usize)>> = chains
        .par_iter()
        .enumerate()
        .map(|(c, &len)| chain(m, family, &y0, len, &mut rng_for(family.seed, c as u64), cfg))
        .collect();

    let mut sample = OrbitSample {
        base: p.clone(),
        y0: y0.clone(),
        points: vec![y0.clone()],
        word_lengths: vec![0],
        f_drift_max: 0.0,
        f_drift_mean: 0.0,
        words_skipped: 0,
    };
    for r in results {
        let (pts, lens, skipped) = r?;
        sample.points.extend(pts);
        sample.word_lengths.extend(lens);
        sample.words_skipped += skipped;
    }
    let drifts: Vec<f64> = sample.points.iter().map(|y| (m.eval_f64(p, y) - 1.0).abs()).collect();
    sample.f_drift_max = drifts.iter().copied().fold(0.0, f64::max);
    sample.f_drift_mean = drifts.iter().sum::<f64>() / drifts.len() as f64;
    Ok(sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDimension {
    /// Modal local dimension.
    pub dimension: usize,
    /// Fraction of points whose local dimension equals the mode.
    pub agreement: f64,
    pub k: usize,
    /// `histogram[d]` = points with local dimension `d`.
    pub histogram: Vec<usize>,
}

/// Default orbit-dimension threshold on covariance eigenvalue ratios.
pub const ORBIT_TAU: f64 = 1e-2;

/// Local PCA dimension of a point cloud: for every point, the covariance of
/// it and its `k` nearest neighbours has `#{λᵢ > τ·λ₁}` significant directions.
pub fn point_cloud_dimension(points: &[Vec<f64>], k: Option<usize>, tau: f64) -> Result<OrbitDimension> {
    let count = points.len();
    if count == 0 {
        return Err(Error::EmptyInput("orbit sample has no points"));
    }
    let dim = points[0].len();
    let k = k.unwrap_or_else(|| (count / 8).clamp(1, 16));
    let scale = points.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    if points.iter().all(|q| dist(q, &points[0]) <= 1e-9 * scale) {
        return Ok(OrbitDimension {
            dimension: 0,
            agreement: 1.0,
            k,
            histogram: vec![count],
        });
    }
    if count < k + 1 {
        return Err(Error::InsufficientSamples {
            needed: k + 1,
            got: count,
        });
    }
    let local: Vec<usize> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..count).filter(|&j| j != i).map(|j| (dist(&points[i], &points[j]), j)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let idx: Vec<usize> = std::iter::once(i).chain(d.iter().take(k).map(|e| e.1)).collect();
            let mean: Vec<f64> = (0..dim)
                .map(|c| idx.iter().map(|&j| points[j][c]).sum::<f64>() / idx.len() as f64)
                .collect();
            let centered = DMatrix::from_fn(idx.len(), dim, |r, c| points[idx[r]][c] - mean[c]);
            let cov = centered.transpose() * &centered / idx.len() as f64;
            let eig = SymmetricEigen::new(cov).eigenvalues;
            let l1 = eig.iter().copied().fold(0.0, f64::max);
            if l1 <= (1e-9 * scale).powi(2) {
                0
            } else {
                eig.iter().filter(|&&l| l > tau * l1).count()
            }
        })
        .collect();
    let mut histogram = vec![0; dim + 1];
    for d in local {
        histogram[d] += 1;
    }
    let (dimension, &top) = histogram
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty histogram");
    Ok(OrbitDimension {
        dimension,
        agreement: top as f64 / count as f64,
        k,
        histogram,
    })
}

pub fn orbit_dimension(sample: &OrbitSample, k: Option<usize>, tau: f64) -> Result<OrbitDimension> {
    point_cloud_dimension(&sample.points, k, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Transitivity {
    TransitiveEvidence,
    NotTransitive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub verdict: Transitivity,
    pub dimension: usize,
    pub agreement: f64,
    /// Largest angular gap (`n = 2`) or covering radius (`n ≥ 3`).
    pub covering: f64,
    /// The covering statistic must stay below this.
    pub covering_threshold: f64,
}

/// Agreement needed for a "dimension below `n − 1`" verdict.
pub const DIMENSION_MARGIN: f64 = 0.9;

fn covering_statistic(m: &FinslerMetric, sample: &OrbitSample) -> (f64, f64) {
    let n = sample.y0.len();
    if n == 2 {
        let mut angles: Vec<f64> = sample.points.iter().map(|y| y[1].atan2(y[0])).collect();
        angles.sort_by(f64::total_cmp);
        let tau = std::f64::consts::TAU;
        let mut gap = angles[0] + tau - angles[angles.len() - 1];
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        return (gap, tau / 10.0);
    }
    let mut rng = rng_for(0x1D1C, 0);
    let probes: Vec<Vec<f64>> = (0..4000)
        .map(|_| {
            let u = random_direction(&mut rng, n);
            let f = m.eval_f64(&sample.base, &u);
            u.iter().map(|c| c / f).collect()
        })
        .collect();
    let radius = probes
        .par_iter()
        .map(|q| sample.points.iter().map(|y| dist(q, y)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max);
    let reach = probes
        .iter()
        .map(|q| q.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let diameter = probes
        .iter()
        .map(|q| probes.iter().map(|r| dist(q, r)).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(reach);
    (radius, diameter / 5.0)
}

/// Evidence (never proof) that `Hol_p` acts transitively on the indicatrix.
pub fn transitivity_verdict(m: &FinslerMetric, sample: &OrbitSample, dim: &OrbitDimension) -> TransitivityReport {
    let n = sample.y0.len();
    let target = n.saturating_sub(1);
    let (covering, covering_threshold) = if n >= 2 {
        covering_statistic(m, sample)
    } else {
        (f64::INFINITY, 0.0)
    };
    let verdict = if n >= 2 && dim.dimension == target && covering < covering_threshold {
        Transitivity::TransitiveEvidence
    } else if dim.dimension < target && dim.agreement >= DIMENSION_MARGIN {
        Transitivity::NotTransitive
    } else {
        Transitivity::Inconclusive
    };
    TransitivityReport {
        verdict,
        dimension: dim.dimension,
        agreement: dim.agreement,
        covering,
        covering_threshold,
    }
}

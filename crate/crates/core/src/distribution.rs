//! Generators of the horizontal stable hull `D^h` and certified estimates of
//! its pointwise dimension.
//!
//! Every generated vector is a member of `D^h ⊂ ker dF`, so `2n − 1` is an
//! analytic upper bound; the numerical rank of the generators is a lower bound
//! up to the threshold `τ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bracket_of_jets, flow_pushforward, integrate_flow, BundleVectorField, HorizontalLift, IntegratorConfig};
use crate::error::{Error, Result};
use crate::geometry::{df, fundamental_tensor, spray_coefficients, BundleTangentVector, FinslerMetric, SlitTangentPoint};
use crate::jet::Jet;
use crate::sampling::rng_for;

/// Default relative singular-value threshold on row-normalized generators.
pub const DEFAULT_TAU: f64 = 1e-7;
/// Largest admissible `|dF(v)| / (|dF|·|v|)` for a generated vector.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Generators shorter than this fraction of the longest one count as zero.
pub const ZERO_FLOOR: f64 = 1e-10;
/// Deepest bracket level supported by the jet order limit.
pub const MAX_BRACKET_DEPTH: usize = crate::jet::MAX_ORDER - 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorBudget {
    pub bracket_depth: usize,
    /// Longest flow word; 0 means the plain horizontal lifts.
    pub word_length: usize,
    pub word_count: usize,
    /// Flow times are uniform in `[−time_bound, time_bound]` ...
    pub time_bound: f64,
    /// ... unless this list is nonempty, in which case times are drawn from it.
    pub fixed_times: Vec<f64>,
    pub seed: u64,
    pub integrator: IntegratorConfig,
}

impl Default for GeneratorBudget {
    fn default() -> Self {
        GeneratorBudget {
            bracket_depth: 3,
            word_length: 3,
            word_count: 32,
            time_bound: 0.5,
            fixed_times: Vec::new(),
            seed: 0,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl GeneratorBudget {
    pub fn validate(&self) -> Result<()> {
        if self.bracket_depth > MAX_BRACKET_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "bracket depth {} exceeds the supported maximum {MAX_BRACKET_DEPTH}",
                self.bracket_depth
            )));
        }
        if !(self.time_bound.is_finite() && self.time_bound >= 0.0)
            || self.fixed_times.iter().any(|t| !t.is_finite())
        {
            return Err(Error::InvalidParameter("flow times must be finite".into()));
        }
        self.integrator.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    CertifiedMax,
    BelowMax,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub point: SlitTangentPoint,
    pub vectors_generated: usize,
    pub words_dropped: usize,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub r_lo: usize,
    pub r_hi: usize,
    pub df_residual_max: f64,
    /// Rank of the bracket generators alone.
    pub bracket_rank: usize,
    /// Rank of the vertical projections of all generators.
    pub vertical_rank: usize,
    /// Flow words reached a rank the brackets could not, even with extra depth.
    pub anomaly: bool,
    pub verdict: Verdict,
}

/// Result of [`numerical_rank`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalRank {
    pub rank: usize,
    /// Singular values of the row-normalized matrix, descending.
    pub singular_values: Vec<f64>,
}

fn coordinate_lifts(m: &FinslerMetric) -> Result<Vec<HorizontalLift>> {
    (0..m.dimension()).map(|i| HorizontalLift::coordinate(m, i)).collect()
}

/// Horizontal lifts of the coordinate fields and their iterated (left-normed)
/// brackets up to `depth`.
pub fn bracket_generators(m: &FinslerMetric, v: &SlitTangentPoint, depth: usize) -> Result<Vec<BundleTangentVector>> {
    if depth > MAX_BRACKET_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "bracket depth {depth} exceeds the supported maximum {MAX_BRACKET_DEPTH}"
        )));
    }
    m.validate(v)?;
    fundamental_tensor(m, v)?;
    let n = m.dimension();
    let lifts = coordinate_lifts(m)?
        .iter()
        .map(|h| h.jets(v, depth))
        .collect::<Result<Vec<_>>>()?;
    let to_vector = |jets: &[Jet]| {
        let comps: Vec<f64> = jets.iter().map(|j| j.value()).collect();
        BundleTangentVector::from_components(v.clone(), &comps)
    };
    let mut out: Vec<BundleTangentVector> = lifts.iter().map(|l| to_vector(l)).collect();
    let mut level: Vec<Vec<Jet>> = Vec::new();
    for d in 1..=depth {
        level = if d == 1 {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push(bracket_of_jets(&lifts[i], &lifts[j]));
                }
            }
            pairs
        } else {
            lifts
                .iter()
                .flat_map(|l| level.iter().map(move |b| bracket_of_jets(l, b)))
                .collect()
        };
        out.extend(level.iter().map(|b| to_vector(b)));
    }
    Ok(out)
}

/// A stable-hull word `(Fl^{X₁}_{t₁} ∘ … ∘ Fl^{X_k}_{t_k})_# Y` over the
/// coordinate horizontal lifts (indices into them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowWord {
    pub fields: Vec<usize>,
    pub times: Vec<f64>,
    pub target: usize,
}

/// Value of `word` at `v`: flow backwards to `Φ⁻¹(v)`, evaluate `Y`, push forward.
pub fn evaluate_word(
    lifts: &[HorizontalLift],
    v: &SlitTangentPoint,
    word: &FlowWord,
    cfg: &IntegratorConfig,
) -> Result<BundleTangentVector> {
    let mut w = v.clone();
    for (&f, &t) in word.fields.iter().zip(&word.times) {
        w = integrate_flow(&lifts[f], &w, -t, cfg)?;
    }
    let y = lifts[word.target].value(&w)?;
    let mut vec = BundleTangentVector::from_components(w, &y);
    for (&f, &t) in word.fields.iter().zip(&word.times).rev() {
        vec = flow_pushforward(&lifts[f], t, &vec, cfg)?;
    }
    Ok(BundleTangentVector::from_components(v.clone(), &vec.components()))
}

pub fn random_word<R: Rng>(rng: &mut R, n: usize, budget: &GeneratorBudget) -> FlowWord {
    let len = rng.random_range(1..=budget.word_length);
    let fields = (0..len).map(|_| rng.random_range(0..n)).collect();
    let times = (0..len)
        .map(|_| {
            if budget.fixed_times.is_empty() {
                if budget.time_bound > 0.0 {
                    rng.random_range(-budget.time_bound..=budget.time_bound)
                } else {
                    0.0
                }
            } else {
                budget.fixed_times[rng.random_range(0..budget.fixed_times.len())]
            }
        })
        .collect();
    FlowWord {
        fields,
        times,
        target: rng.random_range(0..n),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGenerators {
    pub vectors: Vec<BundleTangentVector>,
    pub words: Vec<FlowWord>,
    /// Words whose flows left the chart.
    pub dropped: usize,
}

fn is_flow_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::ChartExit { .. } | Error::StepLimit { .. } | Error::OutsideChart { .. } | Error::MetricDegenerate { .. } | Error::SlitViolation
    )
}

/// Random stable-hull words evaluated at `v`, drawn from `rng`.
pub fn flow_generators_with(
    m: &FinslerMetric,
    v: &SlitTangentPoint,
    budget: &GeneratorBudget,
    rng: &mut ChaCha8Rng,
) -> Result<FlowGenerators> {
    budget.validate()?;
    m.validate(v)?;
    let lifts = coordinate_lifts(m)?;
    if budget.word_length == 0 {
        let vectors = lifts
            .iter()
            .map(|h| Ok(BundleTangentVector::from_components(v.clone(), &h.value(v)?)))
            .collect::<Result<_>>()?;
        return Ok(FlowGenerators {
            vectors,
            words: Vec::new(),
            dropped: 0,
        });
    }
    let mut out = FlowGenerators {
        vectors: Vec::new(),
        words: Vec::new(),
        dropped: 0,
    };
    for _ in 0..budget.word_count {
        let word = random_word(rng, m.dimension(), budget);
        match evaluate_word(&lifts, v, &word, &budget.integrator) {
            Ok(vec) => {
                out.vectors.push(vec);
                out.words.push(word);
            }
            Err(e) if is_flow_failure(&e) => out.dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// [`flow_generators_with`] on random stream 0 of the budget seed.
pub fn flow_generators(m: &FinslerMetric, v: &SlitTangentPoint, budget: &GeneratorBudget) -> Result<FlowGenerators> {
    flow_generators_with(m, v, budget, &mut rng_for(budget.seed, 0))
}

fn sorted_singular_values(rows: &[Vec<f64>], cols: usize) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let mat = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let mut s: Vec<f64> = mat.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn normalized_rows(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .filter_map(|v| {
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            (norm > 0.0).then(|| v.iter().map(|c| c / norm).collect())
        })
        .collect()
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("τ must lie in (0, 1), got {tau}")));
    }
    Ok(())
}

/// `#{σᵢ > τ·σ₁}` for the row-normalized matrix of `vectors`; exactly zero rows are ignored.
pub fn numerical_rank(vectors: &[Vec<f64>], tau: f64) -> Result<NumericalRank> {
    check_tau(tau)?;
    let first = vectors.first().ok_or(Error::EmptyInput("numerical_rank needs at least one vector"))?;
    let cols = first.len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            got: bad.len(),
        });
    }
    let rows = normalized_rows(vectors);
    if rows.is_empty() {
        return Ok(NumericalRank {
            rank: 0,
            singular_values: vec![0.0; vectors.len().min(cols)],
        });
    }
    let mut singular_values = sorted_singular_values(&rows, cols);
    singular_values.resize(vectors.len().min(cols), 0.0);
    let s1 = singular_values[0];
    let rank = singular_values.iter().filter(|&&s| s > tau * s1).count();
    Ok(NumericalRank { rank, singular_values })
}

/// Rank of the vertical projections `𝐯(a; b) = (0; b + N·a)` at `v`, thresholded
/// against `τ·σ₁` of the full row-normalized generator matrix.
pub fn vertical_projection_rank(m: &FinslerMetric, v: &SlitTangentPoint, vectors: &[BundleTangentVector], tau: f64) -> Result<usize> {
    check_tau(tau)?;
    if vectors.is_empty() {
        return Err(Error::EmptyInput("vertical_projection_rank needs at least one vector"));
    }
    let n = m.dimension();
    let nm = spray_coefficients(m, v)?.n;
    let full = normalized_rows(&vectors.iter().map(|w| w.components()).collect::<Vec<_>>());
    if full.is_empty() {
        return Ok(0);
    }
    let s1 = sorted_singular_values(&full, 2 * n)[0];
    let projected: Vec<Vec<f64>> = full
        .iter()
        .map(|row| {
            let a = DVector::from_column_slice(&row[..n]);
            let b = DVector::from_column_slice(&row[n..]);
            (b + &nm * a).iter().copied().collect()
        })
        .collect();
    Ok(sorted_singular_values(&projected, n)
        .iter()
        .filter(|&&s| s > tau * s1)
        .count())
}

/// Zeroes generators that are negligible next to the longest one.
fn floor_small(vectors: &mut [BundleTangentVector]) {
    let max = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for v in vectors.iter_mut() {
        if v.norm() <= ZERO_FLOOR * max {
            v.a.iter_mut().chain(v.b.iter_mut()).for_each(|c| *c = 0.0);
        }
    }
}

fn rank_of(vectors: &[BundleTangentVector], tau: f64) -> Result<NumericalRank> {
    numerical_rank(&vectors.iter().map(|v| v.components()).collect::<Vec<_>>(), tau)
}

/// Certified estimate of `dim D^h_v` from bracket and flow generators; the flow
/// words use random stream `stream` of the budget seed.
pub fn dh_dimension_with_stream(
    m: &FinslerMetric,
    v: &SlitTangentPoint,
    budget: &GeneratorBudget,
    tau: f64,
    stream: u64,
) -> Result<RankCertificate> {
    check_tau(tau)?;
    budget.validate()?;
    let n = m.dimension();
    let r_hi = 2 * n - 1;
    let mut brackets = bracket_generators(m, v, budget.bracket_depth)?;
    floor_small(&mut brackets);
    let mut bracket_rank = rank_of(&brackets, tau)?.rank;
    let flows = flow_generators_with(m, v, budget, &mut rng_for(budget.seed, stream))?;

    let mut all = brackets;
    all.extend(flows.vectors);
    floor_small(&mut all);
    let NumericalRank { rank, singular_values } = rank_of(&all, tau)?;

    let dfv = df(m, v)?;
    let df_residual_max = all
        .iter()
        .map(|w| dfv.relative_residual(&w.components()))
        .fold(0.0, f64::max);
    let membership_ok = df_residual_max < MEMBERSHIP_TOL;
    if rank > r_hi && membership_ok {
        return Err(Error::Consistency(format!(
            "{rank} independent generators in ker dF at {v:?}, whose dimension is {r_hi}"
        )));
    }

    let mut anomaly = false;
    if rank > bracket_rank {
        let deeper = (budget.bracket_depth + 2).min(MAX_BRACKET_DEPTH);
        if deeper > budget.bracket_depth {
            let mut more = bracket_generators(m, v, deeper)?;
            floor_small(&mut more);
            bracket_rank = rank_of(&more, tau)?.rank;
        }
        anomaly = rank > bracket_rank;
    }

    let vertical_rank = vertical_projection_rank(m, v, &all, tau)?;
    let margin_ok = singular_values
        .get(rank)
        .is_none_or(|&s| s < tau / 100.0 * singular_values[0]);
    let verdict = if rank == r_hi && membership_ok {
        Verdict::CertifiedMax
    } else if rank < r_hi && membership_ok && margin_ok {
        Verdict::BelowMax
    } else {
        Verdict::Inconclusive
    };
    Ok(RankCertificate {
        point: v.clone(),
        vectors_generated: all.len(),
        words_dropped: flows.dropped,
        singular_values,
        r_lo: rank.min(r_hi),
        r_hi,
        df_residual_max,
        bracket_rank,
        vertical_rank,
        anomaly,
        verdict,
    })
}

/// [`dh_dimension_with_stream`] on stream 0.
pub fn dh_dimension(m: &FinslerMetric, v: &SlitTangentPoint, budget: &GeneratorBudget, tau: f64) -> Result<RankCertificate> {
    dh_dimension_with_stream(m, v, budget, tau, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub point: SlitTangentPoint,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMap {
    /// In sample order; `index` of a failure refers to the same order.
    pub certificates: Vec<RankCertificate>,
    pub failures: Vec<PointFailure>,
}

/// Certificates at every sample point, computed in parallel with per-point
/// random streams. Point errors are recorded; a consistency failure aborts.
pub fn rank_map(m: &FinslerMetric, points: &[SlitTangentPoint], budget: &GeneratorBudget, tau: f64) -> Result<RankMap> {
    check_tau(tau)?;
    budget.validate()?;
    let results: Vec<Result<RankCertificate>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| dh_dimension_with_stream(m, p, budget, tau, i as u64))
        .collect();
    let mut map = RankMap {
        certificates: Vec::new(),
        failures: Vec::new(),
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => map.certificates.push(c),
            Err(e @ Error::Consistency(_)) => return Err(e),
            Err(e) => map.failures.push(PointFailure {
                index: i,
                point: points[i].clone(),
                error: e.to_string(),
            }),
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicontinuityCheck {
    pub point: SlitTangentPoint,
    pub rank: usize,
    /// Smallest conclusive rank in the cluster, if any.
    pub cluster_min: Option<usize>,
    pub inconclusive: usize,
    pub passed: bool,
}

/// Lower semicontinuity spot check: conclusive ranks at `cluster` perturbed
/// points within `radius` of `cert.point` must not drop below `cert.r_lo`.
pub fn semicontinuity_check(
    m: &FinslerMetric,
    cert: &RankCertificate,
    budget: &GeneratorBudget,
    tau: f64,
    radius: f64,
    cluster: usize,
    stream: u64,
) -> Result<SemicontinuityCheck> {
    let mut rng = rng_for(budget.seed ^ 0xC1u64.rotate_left(56), stream);
    let p = &cert.point;
    let mut cluster_min: Option<usize> = None;
    let mut inconclusive = 0;
    for k in 0..cluster {
        let x: Vec<f64> = p.x.iter().map(|c| c + radius * rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = p.y.iter().map(|c| c + radius * rng.random_range(-1.0..1.0)).collect();
        let q = match SlitTangentPoint::new(x, y) {
            Ok(q) if m.chart.contains(&q.x) => q,
            _ => continue,
        };
        match dh_dimension_with_stream(m, &q, budget, tau, stream.wrapping_mul(1 << 16) + k as u64) {
            Ok(c) if c.verdict == Verdict::Inconclusive => inconclusive += 1,
            Ok(c) => cluster_min = Some(cluster_min.map_or(c.r_lo, |r| r.min(c.r_lo))),
            Err(e @ Error::Consistency(_)) => return Err(e),
            Err(_) => inconclusive += 1,
        }
    }
    Ok(SemicontinuityCheck {
        point: p.clone(),
        rank: cert.r_lo,
        cluster_min,
        inconclusive,
        passed: cluster_min.is_none_or(|r| r >= cert.r_lo),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    fn pt(x: &[f64], y: &[f64]) -> SlitTangentPoint {
        SlitTangentPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn numerical_rank_examples() {
        let basis: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(numerical_rank(&basis, 1e-7).unwrap().rank, 4);
        let u = vec![0.3, -1.0, 2.0];
        assert_eq!(numerical_rank(&[u.clone(), u], 1e-7).unwrap().rank, 1);
        let near = numerical_rank(&[vec![1.0, 0.0], vec![1.0, 1e-12]], 1e-7).unwrap();
        assert_eq!(near.rank, 1);
        assert!(matches!(numerical_rank(&[], 1e-7), Err(Error::EmptyInput(_))));
        assert!(numerical_rank(&[vec![1.0]], 1.5).is_err());
        assert_eq!(numerical_rank(&[vec![0.0, 0.0]], 1e-7).unwrap().rank, 0);
    }

    #[test]
    fn euclidean_generators() {
        let m = zoo::euclidean(2).unwrap();
        let v = pt(&[0.3, -1.0], &[0.6, 0.8]);
        let g0 = bracket_generators(&m, &v, 0).unwrap();
        assert_eq!(g0.len(), 2);
        assert_eq!(rank_of(&g0, DEFAULT_TAU).unwrap().rank, 2);
        let g3 = bracket_generators(&m, &v, 3).unwrap();
        assert!(g3[2..].iter().all(|b| b.norm() == 0.0));
        let cert = dh_dimension(&m, &v, &GeneratorBudget::default(), DEFAULT_TAU).unwrap();
        assert_eq!(cert.r_lo, 2);
        assert_eq!(cert.verdict, Verdict::BelowMax);
        assert_eq!(cert.vertical_rank, 0);
    }

    #[test]
    fn sphere_depth_one_reaches_max() {
        let m = zoo::riemannian_sphere(1.0).unwrap();
        let v = pt(&[0.4, -0.3], &[0.7, 0.5]);
        let g = bracket_generators(&m, &v, 1).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g[2].norm() > 0.1);
        assert_eq!(rank_of(&g, DEFAULT_TAU).unwrap().rank, 3);
        let cert = dh_dimension(&m, &v, &GeneratorBudget::default(), DEFAULT_TAU).unwrap();
        assert_eq!(cert.r_lo, 3);
        assert_eq!(cert.verdict, Verdict::CertifiedMax);
        assert_eq!(cert.vertical_rank, 1);
        assert!(!cert.anomaly);
    }

    #[test]
    fn sphere_flow_words_raise_rank() {
        let m = zoo::riemannian_sphere(1.0).unwrap();
        let v = pt(&[0.2, 0.1], &[0.3, 0.9]);
        let budget = GeneratorBudget {
            word_length: 2,
            word_count: 8,
            fixed_times: vec![0.3],
            ..Default::default()
        };
        let flows = flow_generators(&m, &v, &budget).unwrap();
        assert_eq!(flows.vectors.len(), 8);
        let mut set = bracket_generators(&m, &v, 0).unwrap();
        set.extend(flows.vectors);
        assert_eq!(rank_of(&set, DEFAULT_TAU).unwrap().rank, 3);
        let dfv = df(&m, &v).unwrap();
        assert!(set.iter().all(|w| dfv.relative_residual(&w.components()) < MEMBERSHIP_TOL));
    }

    #[test]
    fn empty_words_are_plain_lifts() {
        let m = zoo::funk_disk().unwrap();
        let v = pt(&[0.1, 0.2], &[1.0, 0.0]);
        let budget = GeneratorBudget {
            word_length: 0,
            ..Default::default()
        };
        let flows = flow_generators(&m, &v, &budget).unwrap();
        assert_eq!(flows.vectors, bracket_generators(&m, &v, 0).unwrap());
    }

    #[test]
    fn product_stays_below_max() {
        let m = zoo::riemannian_product(vec![zoo::Factor::Sphere { radius: 1.0 }, zoo::Factor::Line]).unwrap();
        let v = pt(&[0.3, -0.5, 1.0], &[0.5, 0.2, 0.7]);
        let cert = dh_dimension(&m, &v, &GeneratorBudget::default(), DEFAULT_TAU).unwrap();
        assert!(cert.r_lo <= 4, "{cert:?}");
        assert_eq!(cert.r_lo, 3 + cert.vertical_rank);
        assert!(cert.df_residual_max < MEMBERSHIP_TOL);
    }

    #[test]
    fn rank_map_is_deterministic_across_pools() {
        let m = zoo::riemannian_sphere(1.0).unwrap();
        let pts = crate::sampling::SamplePlan {
            grid: vec![2],
            random_points: 3,
            ..Default::default()
        }
        .points(&m)
        .unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| rank_map(&m, &pts, &GeneratorBudget::default(), DEFAULT_TAU).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn semicontinuity_on_sphere() {
        let m = zoo::riemannian_sphere(1.0).unwrap();
        let v = pt(&[0.5, 0.5], &[1.0, 0.0]);
        let budget = GeneratorBudget {
            word_count: 4,
            ..Default::default()
        };
        let cert = dh_dimension(&m, &v, &budget, DEFAULT_TAU).unwrap();
        let check = semicontinuity_check(&m, &cert, &budget, DEFAULT_TAU, 0.05, 4, 0).unwrap();
        assert!(check.passed, "{check:?}");
    }
}

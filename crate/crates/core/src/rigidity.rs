//! Classification of self-maps (affinity, homothety, isometry) and the
//! aggregated rigidity report.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{RankMap, Verdict};
use crate::dynamics::{geodesic, IntegratorConfig};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{spray_coefficients, FinslerMetric, SlitTangentPoint};
use crate::holonomy::{OrbitDimension, OrbitSample, Transitivity, TransitivityReport};
use crate::jet::Jet;

/// Serializable description of a map `ℝⁿ → ℝⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// `x ↦ A x + b`, `A` given by rows.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// `x ↦ c x`.
    Scale { factor: f64 },
    /// Rotation by `angle` in the `(i, j)` coordinate plane (0-based).
    Rotation { angle: f64, axes: (usize, usize) },
    /// `x₁ ↦ x₁ + s·x₂`, other coordinates fixed.
    Shear { amount: f64 },
    /// Component expressions in `x1 … xn`.
    Expression { components: Vec<String> },
    /// `outer ∘ inner`.
    Compose { outer: Box<MapSpec>, inner: Box<MapSpec> },
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("not a number: '{t}'")))
        })
        .collect()
}

impl MapSpec {
    /// Parses `scale:c`, `rotate:θ[:i,j]` (1-based axes), `shear:s`,
    /// `affine:a11,a12;a21,a22[|b1,b2]` or `expr:e1;e2;…`.
    pub fn parse(s: &str) -> Result<MapSpec> {
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        let one = |r: &str| -> Result<f64> {
            r.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("map '{s}': expected a number")))
        };
        Ok(match head.trim() {
            "scale" => MapSpec::Scale { factor: one(rest)? },
            "shear" => MapSpec::Shear { amount: one(rest)? },
            "rotate" | "rotation" => {
                let (angle, axes) = rest.split_once(':').unwrap_or((rest, "1,2"));
                let ax = parse_floats(axes)?;
                if ax.len() != 2 || ax.iter().any(|a| a.fract() != 0.0 || *a < 1.0) {
                    return Err(Error::Parse(format!("map '{s}': axes must be two 1-based indices")));
                }
                MapSpec::Rotation {
                    angle: one(angle)?,
                    axes: (ax[0] as usize - 1, ax[1] as usize - 1),
                }
            }
            "affine" => {
                let (mat, off) = rest.split_once('|').unwrap_or((rest, ""));
                let matrix = mat.split(';').map(parse_floats).collect::<Result<Vec<_>>>()?;
                let offset = if off.trim().is_empty() {
                    vec![0.0; matrix.len()]
                } else {
                    parse_floats(off)?
                };
                MapSpec::Affine { matrix, offset }
            }
            "expr" => MapSpec::Expression {
                components: rest.split(';').map(|c| c.trim().to_string()).collect(),
            },
            other => return Err(Error::Parse(format!("unknown map kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone)]
enum Compiled {
    Affine(DMatrix<f64>, DVector<f64>),
    Expression(Vec<Expr>),
    Compose(Box<ManifoldMap>, Box<ManifoldMap>),
}

/// A smooth map of the chart with exact first and second derivatives.
#[derive(Debug, Clone)]
pub struct ManifoldMap {
    pub spec: MapSpec,
    pub name: String,
    pub dimension: usize,
    compiled: Compiled,
}

impl ManifoldMap {
    pub fn new(spec: MapSpec, n: usize) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(msg);
        let compiled = match &spec {
            MapSpec::Affine { matrix, offset } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) || offset.len() != n {
                    return Err(bad(format!("affine map needs an {n}×{n} matrix and {n} offsets")));
                }
                Compiled::Affine(
                    DMatrix::from_fn(n, n, |i, j| matrix[i][j]),
                    DVector::from_column_slice(offset),
                )
            }
            MapSpec::Scale { factor } => {
                Compiled::Affine(DMatrix::identity(n, n) * *factor, DVector::zeros(n))
            }
            MapSpec::Rotation { angle, axes } => {
                let (i, j) = *axes;
                if i >= n || j >= n || i == j {
                    return Err(bad(format!("rotation axes {axes:?} invalid for dimension {n}")));
                }
                let mut a = DMatrix::identity(n, n);
                let (s, c) = angle.sin_cos();
                a[(i, i)] = c;
                a[(i, j)] = -s;
                a[(j, i)] = s;
                a[(j, j)] = c;
                Compiled::Affine(a, DVector::zeros(n))
            }
            MapSpec::Shear { amount } => {
                if n < 2 {
                    return Err(bad("shear needs dimension ≥ 2".into()));
                }
                let mut a = DMatrix::identity(n, n);
                a[(0, 1)] = *amount;
                Compiled::Affine(a, DVector::zeros(n))
            }
            MapSpec::Expression { components } => {
                if components.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: components.len(),
                    });
                }
                let exprs = components.iter().map(|c| Expr::parse(c)).collect::<Result<Vec<_>>>()?;
                if exprs.iter().any(|e| e.max_var() > n) {
                    return Err(bad(format!("map expression uses a variable beyond x{n}")));
                }
                Compiled::Expression(exprs)
            }
            MapSpec::Compose { outer, inner } => Compiled::Compose(
                Box::new(ManifoldMap::new((**outer).clone(), n)?),
                Box::new(ManifoldMap::new((**inner).clone(), n)?),
            ),
        };
        Ok(ManifoldMap {
            name: describe(&spec),
            spec,
            dimension: n,
            compiled,
        })
    }

    pub fn compose(outer: &ManifoldMap, inner: &ManifoldMap) -> Result<Self> {
        ManifoldMap::new(
            MapSpec::Compose {
                outer: Box::new(outer.spec.clone()),
                inner: Box::new(inner.spec.clone()),
            },
            outer.dimension,
        )
    }

    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        match &self.compiled {
            Compiled::Affine(a, b) => (0..self.dimension)
                .map(|i| {
                    let mut acc = x[0].lift(b[i]);
                    for (j, xj) in x.iter().enumerate() {
                        if a[(i, j)] != 0.0 {
                            acc = acc + xj.scale(a[(i, j)]);
                        }
                    }
                    acc
                })
                .collect(),
            Compiled::Expression(es) => es.iter().map(|e| e.eval(x)).collect(),
            Compiled::Compose(outer, inner) => outer.eval(&inner.eval(x)),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.eval(&Jet::variables(x, 0)).iter().map(|j| j.value()).collect()
    }

    /// `Dφ(x)`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let out = self.eval(&Jet::variables(x, 1));
        DMatrix::from_fn(self.dimension, self.dimension, |i, j| out[i].coeffs()[1 + j])
    }

    /// `(φ(x), Dφ(x)·y, D²φ(x)(y, y))`.
    pub fn directional(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let t = Jet::variable(1, 2, 0, 0.0);
        let line: Vec<Jet> = x.iter().zip(y).map(|(xi, yi)| t.scale(*yi).add_scalar(*xi)).collect();
        let out = self.eval(&line);
        (
            out.iter().map(|j| j.value()).collect(),
            out.iter().map(|j| j.coeffs()[1]).collect(),
            out.iter().map(|j| 2.0 * j.coeffs()[2]).collect(),
        )
    }
}

fn describe(spec: &MapSpec) -> String {
    match spec {
        MapSpec::Affine { matrix, offset } => format!("affine {matrix:?} + {offset:?}"),
        MapSpec::Scale { factor } => format!("scale by {factor}"),
        MapSpec::Rotation { angle, axes } => {
            format!("rotation by {angle} in plane (x{}, x{})", axes.0 + 1, axes.1 + 1)
        }
        MapSpec::Shear { amount } => format!("shear x1 += {amount}·x2"),
        MapSpec::Expression { components } => format!("({})", components.join(", ")),
        MapSpec::Compose { outer, inner } => format!("[{}] ∘ [{}]", describe(outer), describe(inner)),
    }
}

/// Geodesic arcs sampled for the affinity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArcSampling {
    pub duration: f64,
    pub points: usize,
}

impl Default for ArcSampling {
    fn default() -> Self {
        ArcSampling {
            duration: 0.2,
            points: 5,
        }
    }
}

pub const AFFINITY_TOL: f64 = 1e-5;
pub const HOMOTHETY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityResidual {
    pub max: f64,
    pub mean: f64,
    pub evaluations: usize,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

struct SampleOutcome {
    residuals: Vec<f64>,
    factor: f64,
}

fn check_invertible(phi: &ManifoldMap, x: &[f64]) -> Result<()> {
    let j = phi.jacobian(x);
    let scale = j.norm().max(1e-300);
    let det = j.determinant();
    if !(det.abs() > 1e-12 * scale.powi(phi.dimension as i32)) {
        return Err(Error::InvalidParameter(format!(
            "map {} is singular at {x:?}",
            phi.name
        )));
    }
    Ok(())
}

fn in_chart_error(e: &Error) -> bool {
    matches!(
        e,
        Error::OutsideChart { .. } | Error::ChartExit { .. } | Error::StepLimit { .. } | Error::MetricDegenerate { .. }
    )
}

/// `|D²φ(v, v) − 2Dφ·G(x, v) + 2G(φ(x), Dφ·v)| / |Dφ·v|²`: the geodesic-equation
/// defect of the image of the geodesic through `(x, v)`.
pub fn pointwise_affinity_residual(m: &FinslerMetric, phi: &ManifoldMap, p: &SlitTangentPoint) -> Result<f64> {
    let (fx, dv, d2) = phi.directional(&p.x, &p.y);
    if !m.chart.contains(&fx) {
        return Err(Error::OutsideChart { x: fx });
    }
    let g = spray_coefficients(m, p)?.g;
    let jg = phi.jacobian(&p.x) * g;
    let image = SlitTangentPoint::new(fx, dv.clone())?;
    let gi = spray_coefficients(m, &image)?.g;
    let r: f64 = (0..phi.dimension)
        .map(|i| (d2[i] - 2.0 * jg[i] + 2.0 * gi[i]).powi(2))
        .sum::<f64>()
        .sqrt();
    let vv: f64 = dv.iter().map(|c| c * c).sum();
    Ok(r / vv)
}

fn sample_outcome(
    m: &FinslerMetric,
    phi: &ManifoldMap,
    p: &SlitTangentPoint,
    arcs: &ArcSampling,
    cfg: &IntegratorConfig,
) -> Result<SampleOutcome> {
    check_invertible(phi, &p.x)?;
    let (fx, dv, _) = phi.directional(&p.x, &p.y);
    let factor = m.eval_f64(&fx, &dv) / m.eval_f64(&p.x, &p.y);
    let mut residuals = Vec::with_capacity(arcs.points);
    let mut q = p.clone();
    let steps = arcs.points.max(1);
    let dt = if steps > 1 { arcs.duration / (steps - 1) as f64 } else { 0.0 };
    for k in 0..steps {
        if k > 0 {
            q = geodesic(m, &q, dt, cfg)?;
        }
        residuals.push(pointwise_affinity_residual(m, phi, &q)?);
    }
    Ok(SampleOutcome { residuals, factor })
}

fn outcomes(
    m: &FinslerMetric,
    phi: &ManifoldMap,
    samples: &[SlitTangentPoint],
    arcs: &ArcSampling,
    cfg: &IntegratorConfig,
) -> Result<(Vec<SampleOutcome>, usize)> {
    if phi.dimension != m.dimension() {
        return Err(Error::DimensionMismatch {
            expected: m.dimension(),
            got: phi.dimension,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("classification needs sample points"));
    }
    let results: Vec<Result<SampleOutcome>> = samples
        .par_iter()
        .map(|p| sample_outcome(m, phi, p, arcs, cfg))
        .collect();
    let mut kept = Vec::new();
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(o) => kept.push(o),
            Err(e) if in_chart_error(&e) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::ChartExit { time: 0.0 });
    }
    Ok((kept, skipped))
}

fn residual_stats(kept: &[SampleOutcome], skipped: usize) -> AffinityResidual {
    let all: Vec<f64> = kept.iter().flat_map(|o| o.residuals.iter().copied()).collect();
    AffinityResidual {
        max: all.iter().copied().fold(0.0, f64::max),
        mean: all.iter().sum::<f64>() / all.len() as f64,
        evaluations: all.len(),
        samples_used: kept.len(),
        samples_skipped: skipped,
    }
}

/// Geodesic-image residual statistics of `φ` over short arcs from `samples`;
/// samples whose arcs or images leave the chart are skipped.
pub fn check_affinity(
    m: &FinslerMetric,
    phi: &ManifoldMap,
    samples: &[SlitTangentPoint],
    arcs: &ArcSampling,
    cfg: &IntegratorConfig,
) -> Result<AffinityResidual> {
    let (kept, skipped) = outcomes(m, phi, samples, arcs, cfg)?;
    Ok(residual_stats(&kept, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationVerdict {
    pub map: String,
    pub affinity: AffinityResidual,
    /// Median of `F(φ(x), Dφ·y) / F(x, y)`.
    pub homothety_factor: f64,
    /// `max |cᵢ − c| / c`.
    pub homothety_dispersion: f64,
    pub is_affinity: bool,
    pub is_homothety: bool,
    pub is_isometry: bool,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub fn classify_transformation(
    m: &FinslerMetric,
    phi: &ManifoldMap,
    samples: &[SlitTangentPoint],
    arcs: &ArcSampling,
    cfg: &IntegratorConfig,
) -> Result<TransformationVerdict> {
    let (kept, skipped) = outcomes(m, phi, samples, arcs, cfg)?;
    let affinity = residual_stats(&kept, skipped);
    let mut factors: Vec<f64> = kept.iter().map(|o| o.factor).collect();
    let c = median(&mut factors);
    let dispersion = factors.iter().map(|f| (f - c).abs()).fold(0.0, f64::max) / c;
    let is_homothety = dispersion < HOMOTHETY_TOL;
    Ok(TransformationVerdict {
        map: phi.name.clone(),
        is_affinity: affinity.max < AFFINITY_TOL,
        is_homothety,
        is_isometry: is_homothety && (c - 1.0).abs() < HOMOTHETY_TOL,
        affinity,
        homothety_factor: c,
        homothety_dispersion: dispersion,
    })
}

/// Fraction of certified points required for the rank criterion.
pub const RANK_PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstPoint {
    pub point: SlitTangentPoint,
    pub r_lo: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub points: usize,
    pub failures: usize,
    pub certified_fraction: f64,
    pub below_max: usize,
    pub inconclusive: usize,
    pub max_r_lo: usize,
    pub r_hi: usize,
    pub df_residual_max: f64,
    pub anomalies: usize,
    /// Points where `r_lo ≠ n + vertical rank`.
    pub vertical_mismatches: usize,
    pub worst_point: Option<WorstPoint>,
    pub passed: bool,
}

impl RankSummary {
    pub fn from_map(map: &RankMap, n: usize) -> Self {
        let certs = &map.certificates;
        let count = |v: Verdict| certs.iter().filter(|c| c.verdict == v).count();
        let certified = count(Verdict::CertifiedMax);
        let certified_fraction = if certs.is_empty() {
            0.0
        } else {
            certified as f64 / certs.len() as f64
        };
        let worst_point = certs
            .iter()
            .min_by_key(|c| (c.r_lo, c.verdict != Verdict::Inconclusive))
            .map(|c| WorstPoint {
                point: c.point.clone(),
                r_lo: c.r_lo,
                verdict: c.verdict,
            });
        RankSummary {
            points: certs.len(),
            failures: map.failures.len(),
            certified_fraction,
            below_max: count(Verdict::BelowMax),
            inconclusive: count(Verdict::Inconclusive),
            max_r_lo: certs.iter().map(|c| c.r_lo).max().unwrap_or(0),
            r_hi: 2 * n - 1,
            df_residual_max: certs.iter().map(|c| c.df_residual_max).fold(0.0, f64::max),
            anomalies: certs.iter().filter(|c| c.anomaly).count(),
            vertical_mismatches: certs.iter().filter(|c| c.r_lo != n + c.vertical_rank).count(),
            worst_point,
            passed: !certs.is_empty() && certified_fraction >= RANK_PASS_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub base: Vec<f64>,
    pub points: usize,
    pub dimension: usize,
    pub agreement: f64,
    pub covering: f64,
    pub covering_threshold: f64,
    pub verdict: Transitivity,
    pub f_drift_max: f64,
    pub words_skipped: usize,
    pub passed: bool,
}

impl OrbitSummary {
    pub fn new(sample: &OrbitSample, dim: &OrbitDimension, t: &TransitivityReport) -> Self {
        OrbitSummary {
            base: sample.base.clone(),
            points: sample.points.len(),
            dimension: dim.dimension,
            agreement: dim.agreement,
            covering: t.covering,
            covering_threshold: t.covering_threshold,
            verdict: t.verdict,
            f_drift_max: sample.f_drift_max,
            words_skipped: sample.words_skipped,
            passed: t.verdict == Transitivity::TransitiveEvidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricInfo {
    pub name: String,
    pub dimension: usize,
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub metric: MetricInfo,
    /// Holonomy acts transitively on the indicatrix.
    pub criterion_1: Option<OrbitSummary>,
    /// `dim D^h = 2n − 1` on a dense set (sampled).
    pub criterion_2: Option<RankSummary>,
    /// Countably many integral manifolds in the unit sphere bundle.
    pub criterion_3: String,
    pub transformations: Vec<TransformationVerdict>,
    /// Affine homotheties that are not isometries.
    pub exhibits: Vec<String>,
    pub rigidity_evidence: bool,
    pub overall: String,
    pub notes: Vec<String>,
    /// Seeds, tolerances and budgets used.
    pub settings: BTreeMap<String, serde_json::Value>,
}

pub const CRITERION_3_NOTE: &str =
    "not numerically evaluated: countability of the integral manifolds is not machine-decidable";

/// Combines the evaluated criteria; claims rigidity evidence only when
/// criterion (1) or (2) passes and never asserts non-rigidity.
pub fn assemble_report(
    m: &FinslerMetric,
    rank: Option<&RankSummary>,
    orbit: Option<&OrbitSummary>,
    transformations: Vec<TransformationVerdict>,
    settings: BTreeMap<String, serde_json::Value>,
) -> Result<RigidityReport> {
    if rank.is_none() && orbit.is_none() && transformations.is_empty() {
        return Err(Error::EmptyInput("report needs at least one evaluated criterion"));
    }
    let c1 = orbit.is_some_and(|o| o.passed);
    let c2 = rank.is_some_and(|r| r.passed);
    let overall = match (c1, c2) {
        (true, true) => "rigidity evidence: criteria (1) and (2) pass".to_string(),
        (true, false) => "rigidity evidence: criterion (1) passes".to_string(),
        (false, true) => "rigidity evidence: criterion (2) passes".to_string(),
        (false, false) => "no rigidity evidence; non-rigidity not asserted".to_string(),
    };
    let exhibits = transformations
        .iter()
        .filter(|t| t.is_affinity && t.is_homothety && !t.is_isometry)
        .map(|t| format!("{} is an affinity and a homothety with factor {}", t.map, t.homothety_factor))
        .collect();
    let mut notes = vec![
        "transitivity and rank verdicts are sampling evidence, not proofs".to_string(),
        "failed criteria never imply that the metric is not affinely rigid".to_string(),
    ];
    if let Some(r) = rank {
        if r.anomalies > 0 {
            notes.push(format!(
                "{} point(s) where flow words exceeded the bracket rank",
                r.anomalies
            ));
        }
    }
    Ok(RigidityReport {
        metric: MetricInfo {
            name: m.name.clone(),
            dimension: m.dimension(),
            params: m.params.clone(),
        },
        criterion_1: orbit.cloned(),
        criterion_2: rank.cloned(),
        criterion_3: CRITERION_3_NOTE.to_string(),
        transformations,
        exhibits,
        rigidity_evidence: c1 || c2,
        overall,
        notes,
        settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplePlan;
    use crate::zoo;

    fn samples(m: &FinslerMetric) -> Vec<SlitTangentPoint> {
        let b = crate::sampling::default_box(&m.chart)
            .into_iter()
            .map(|(lo, hi)| (0.3 * lo, 0.3 * hi))
            .collect();
        SamplePlan {
            grid: vec![3],
            random_points: 8,
            bounds: Some(b),
            seed: 3,
        }
        .points(m)
        .unwrap()
    }

    fn classify(m: &FinslerMetric, spec: &str) -> TransformationVerdict {
        let phi = ManifoldMap::new(MapSpec::parse(spec).unwrap(), m.dimension()).unwrap();
        classify_transformation(m, &phi, &samples(m), &ArcSampling::default(), &IntegratorConfig::default()).unwrap()
    }

    #[test]
    fn map_derivatives() {
        let phi = ManifoldMap::new(MapSpec::parse("expr: x1 + x1^3; x2").unwrap(), 2).unwrap();
        let (v, d, d2) = phi.directional(&[0.5, 1.0], &[1.0, 2.0]);
        assert_eq!(v, vec![0.625, 1.0]);
        assert!((d[0] - 1.75).abs() < 1e-14 && d[1] == 2.0);
        assert!((d2[0] - 3.0).abs() < 1e-14 && d2[1] == 0.0);
        let rot = ManifoldMap::new(MapSpec::parse("rotate:0.5").unwrap(), 2).unwrap();
        let both = ManifoldMap::compose(&phi, &rot).unwrap();
        let x = rot.apply(&[0.3, 0.4]);
        assert_eq!(both.apply(&[0.3, 0.4]), phi.apply(&x));
        assert!(MapSpec::parse("warp:1").is_err());
        assert!(ManifoldMap::new(MapSpec::parse("affine:1,0;0,1").unwrap(), 3).is_err());
    }

    #[test]
    fn euclidean_classifications() {
        let m = zoo::euclidean(2).unwrap();
        let s = classify(&m, "scale:2");
        assert!(s.is_affinity && s.is_homothety && !s.is_isometry);
        assert!((s.homothety_factor - 2.0).abs() < 1e-9);
        let a = classify(&m, "affine:1,2;-0.5,3|0.1,0.2");
        assert!(a.is_affinity);
        let c = classify(&m, "expr: x1 + x1^3; x2");
        assert!(!c.is_affinity && c.affinity.max > 1e-2);
        let sh = classify(&m, "shear:1");
        assert!(sh.is_affinity && !sh.is_homothety);
    }

    #[test]
    fn sphere_rotation_is_isometry() {
        let m = zoo::riemannian_sphere(1.0).unwrap();
        let r = classify(&m, "rotate:0.7");
        assert!(r.is_affinity && r.is_isometry, "{r:?}");
        let s = classify(&m, "scale:1.5");
        assert!(!s.is_affinity && !s.is_homothety);
    }

    #[test]
    fn report_statements() {
        let m = zoo::euclidean(2).unwrap();
        let t = classify(&m, "scale:2");
        let r = assemble_report(&m, None, None, vec![t], BTreeMap::new()).unwrap();
        assert_eq!(r.overall, "no rigidity evidence; non-rigidity not asserted");
        assert_eq!(r.exhibits.len(), 1);
        assert!(assemble_report(&m, None, None, vec![], BTreeMap::new()).is_err());
    }
}

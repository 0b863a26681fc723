//! Built-in metrics with known ground truth, and the planar singular
//! subspace-field example ([`r2`]).

pub mod r2;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartDomain, Exclusion, FinslerFunction, FinslerMetric};
use crate::jet::Jet;

/// One Riemannian factor of a product metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// Round sphere of the given radius in a stereographic chart.
    Sphere { radius: f64 },
    /// The real line.
    Line,
    /// Flat `ℝⁿ`.
    Euclidean { n: usize },
    /// Hyperbolic plane, Poincaré disk model.
    PoincareDisk,
}

impl Factor {
    fn dimension(&self) -> usize {
        match self {
            Factor::Sphere { .. } | Factor::PoincareDisk => 2,
            Factor::Line => 1,
            Factor::Euclidean { n } => *n,
        }
    }

    /// `F²` of this factor.
    fn squared_norm(&self, x: &[Jet], y: &[Jet]) -> Jet {
        let yy = Jet::dot(y, y);
        match self {
            Factor::Line | Factor::Euclidean { .. } => yy,
            Factor::Sphere { radius } => {
                let s = Jet::dot(x, x) + 1.0;
                yy * (4.0 * radius * radius) / (&s * &s)
            }
            Factor::PoincareDisk => {
                let s = 1.0 - Jet::dot(x, x);
                yy * 4.0 / (&s * &s)
            }
        }
    }

    fn chart(&self, offset: usize) -> (Vec<(f64, f64)>, Vec<Exclusion>) {
        match self {
            Factor::Sphere { .. } => (
                vec![(-3.5, 3.5); 2],
                vec![Exclusion::OutsideBall {
                    coords: vec![offset, offset + 1],
                    center: vec![0.0, 0.0],
                    radius: SPHERE_CHART_RADIUS,
                }],
            ),
            Factor::PoincareDisk => (
                vec![(-DISK_RADIUS, DISK_RADIUS); 2],
                vec![Exclusion::OutsideBall {
                    coords: vec![offset, offset + 1],
                    center: vec![0.0, 0.0],
                    radius: DISK_RADIUS,
                }],
            ),
            Factor::Line => (vec![(-FLAT_HALF_WIDTH, FLAT_HALF_WIDTH)], vec![]),
            Factor::Euclidean { n } => (vec![(-FLAT_HALF_WIDTH, FLAT_HALF_WIDTH); *n], vec![]),
        }
    }
}

/// Radius of the stereographic chart disk kept for sphere factors.
pub const SPHERE_CHART_RADIUS: f64 = 3.0;
/// Radius of the closed disk used for the Poincaré and Funk charts.
pub const DISK_RADIUS: f64 = 0.9;
/// Half-width of flat charts.
pub const FLAT_HALF_WIDTH: f64 = 5.0;

enum ZooFunction {
    Euclidean { n: usize },
    Randers { b: Vec<f64> },
    Funk,
    Product { factors: Vec<(Factor, usize)>, n: usize },
    Custom { n: usize, coefficients: Vec<Expr> },
}

impl FinslerFunction for ZooFunction {
    fn dimension(&self) -> usize {
        match self {
            ZooFunction::Euclidean { n } => *n,
            ZooFunction::Randers { b } => b.len(),
            ZooFunction::Funk => 2,
            ZooFunction::Product { n, .. } | ZooFunction::Custom { n, .. } => *n,
        }
    }

    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet {
        match self {
            ZooFunction::Euclidean { .. } => Jet::dot(y, y).sqrt(),
            ZooFunction::Randers { b } => {
                let mut f = Jet::dot(y, y).sqrt();
                for (bi, yi) in b.iter().zip(y) {
                    f = f + yi * *bi;
                }
                f
            }
            ZooFunction::Funk => {
                // F = (sqrt((1−|x|²)|y|² + ⟨x,y⟩²) + ⟨x,y⟩) / (1 − |x|²)
                let s = 1.0 - Jet::dot(x, x);
                let xy = Jet::dot(x, y);
                let root = (&s * Jet::dot(y, y) + &xy * &xy).sqrt();
                (root + xy) / s
            }
            ZooFunction::Product { factors, .. } => {
                let mut total: Option<Jet> = None;
                for (factor, off) in factors {
                    let d = factor.dimension();
                    let q = factor.squared_norm(&x[*off..off + d], &y[*off..off + d]);
                    total = Some(match total {
                        Some(t) => t + q,
                        None => q,
                    });
                }
                total.expect("product needs at least one factor").sqrt()
            }
            ZooFunction::Custom { n, coefficients } => {
                let mut q: Option<Jet> = None;
                for i in 0..*n {
                    for j in 0..*n {
                        // symmetric part of a(x)
                        let aij = (coefficients[i * n + j].eval(x) + coefficients[j * n + i].eval(x))
                            .scale(0.5);
                        let term = aij * &y[i] * &y[j];
                        q = Some(match q {
                            Some(t) => t + term,
                            None => term,
                        });
                    }
                }
                q.unwrap().sqrt()
            }
        }
    }
}

pub fn euclidean(n: usize) -> Result<FinslerMetric> {
    if n == 0 {
        return Err(Error::InvalidParameter("euclidean: n must be ≥ 1".into()));
    }
    Ok(FinslerMetric::new(
        "euclidean",
        ChartDomain::cube(n, FLAT_HALF_WIDTH),
        Arc::new(ZooFunction::Euclidean { n }),
    )?
    .with_param("n", n))
}

/// `F = |y| + ⟨b, y⟩` with constant `b`, `|b| < 1`.
pub fn minkowski_randers(b: Vec<f64>) -> Result<FinslerMetric> {
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b.is_empty() || !(nb < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "minkowski_randers: need |b| < 1, got |b| = {nb}"
        )));
    }
    let n = b.len();
    Ok(FinslerMetric::new(
        "minkowski_randers",
        ChartDomain::cube(n, FLAT_HALF_WIDTH),
        Arc::new(ZooFunction::Randers { b: b.clone() }),
    )?
    .with_param("b", b))
}

/// Round sphere of radius `radius`, stereographic chart `4R²/(1+|x|²)²·δ`.
pub fn riemannian_sphere(radius: f64) -> Result<FinslerMetric> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "riemannian_sphere: radius must be positive, got {radius}"
        )));
    }
    let factor = Factor::Sphere { radius };
    let (bounds, exclusions) = factor.chart(0);
    Ok(FinslerMetric::new(
        "riemannian_sphere",
        ChartDomain::new(bounds, exclusions)?,
        Arc::new(ZooFunction::Product {
            factors: vec![(factor, 0)],
            n: 2,
        }),
    )?
    .with_param("radius", radius))
}

/// Poincaré disk `4/(1−|x|²)²·δ`, restricted to `|x| ≤ 0.9`.
pub fn poincare_disk() -> Result<FinslerMetric> {
    let factor = Factor::PoincareDisk;
    let (bounds, exclusions) = factor.chart(0);
    FinslerMetric::new(
        "poincare_disk",
        ChartDomain::new(bounds, exclusions)?,
        Arc::new(ZooFunction::Product {
            factors: vec![(factor, 0)],
            n: 2,
        }),
    )
}

/// Funk metric of the unit disk, restricted to `|x| ≤ 0.9`.
pub fn funk_disk() -> Result<FinslerMetric> {
    FinslerMetric::new(
        "funk_disk",
        ChartDomain::new(
            vec![(-DISK_RADIUS, DISK_RADIUS); 2],
            vec![Exclusion::OutsideBall {
                coords: vec![0, 1],
                center: vec![0.0, 0.0],
                radius: DISK_RADIUS,
            }],
        )?,
        Arc::new(ZooFunction::Funk),
    )
}

/// Riemannian product `F² = Σ F_k²`.
pub fn riemannian_product(factors: Vec<Factor>) -> Result<FinslerMetric> {
    if factors.is_empty() {
        return Err(Error::InvalidParameter(
            "riemannian_product: need at least one factor".into(),
        ));
    }
    let mut bounds = Vec::new();
    let mut exclusions = Vec::new();
    let mut placed = Vec::new();
    let mut off = 0;
    for f in &factors {
        if let Factor::Sphere { radius } = f {
            if !(*radius > 0.0) {
                return Err(Error::InvalidParameter("sphere factor radius must be positive".into()));
            }
        }
        if let Factor::Euclidean { n: 0 } = f {
            return Err(Error::InvalidParameter("euclidean factor needs n ≥ 1".into()));
        }
        let (b, e) = f.chart(off);
        bounds.extend(b);
        exclusions.extend(e);
        placed.push((f.clone(), off));
        off += f.dimension();
    }
    let metric = FinslerMetric::new(
        "riemannian_product",
        ChartDomain::new(bounds, exclusions)?,
        Arc::new(ZooFunction::Product {
            factors: placed,
            n: off,
        }),
    )?;
    Ok(metric.with_param(
        "factors",
        serde_json::to_value(&factors).expect("factor list serializes"),
    ))
}

/// Riemannian metric `F = sqrt(a_ij(x) yⁱ yʲ)` with coefficients given as
/// row-major expressions in `x1 … xn`; the symmetric part of `a` is used.
pub fn riemannian_custom<S: AsRef<str>>(
    n: usize,
    coefficients: &[S],
    half_width: f64,
) -> Result<FinslerMetric> {
    if n == 0 || coefficients.len() != n * n {
        return Err(Error::InvalidParameter(format!(
            "riemannian_custom: need n ≥ 1 and n² = {} coefficients, got {}",
            n * n,
            coefficients.len()
        )));
    }
    let parsed = coefficients
        .iter()
        .map(|s| Expr::parse(s.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = parsed.iter().find(|e| e.max_var() > n) {
        return Err(Error::Parse(format!(
            "expression '{bad}' uses a variable beyond x{n}"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::InvalidParameter("half_width must be positive".into()));
    }
    let texts: Vec<String> = coefficients.iter().map(|s| s.as_ref().to_string()).collect();
    Ok(FinslerMetric::new(
        "riemannian_custom",
        ChartDomain::cube(n, half_width),
        Arc::new(ZooFunction::Custom {
            n,
            coefficients: parsed,
        }),
    )?
    .with_param("coefficients", texts)
    .with_param("half_width", half_width))
}

/// Serializable selector for a zoo metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MetricSpec {
    Euclidean {
        n: usize,
    },
    MinkowskiRanders {
        b: Vec<f64>,
    },
    RiemannianSphere {
        #[serde(default = "default_radius")]
        radius: f64,
    },
    PoincareDisk,
    FunkDisk,
    RiemannianProduct {
        factors: Vec<Factor>,
    },
    RiemannianCustom {
        n: usize,
        coefficients: Vec<String>,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
}

fn default_radius() -> f64 {
    1.0
}

fn default_half_width() -> f64 {
    1.0
}

impl MetricSpec {
    /// Parses the short command-line form `name[:args]`:
    /// `euclidean[:n]`, `randers:b1,b2,…`, `sphere[:radius]`, `poincare`,
    /// `funk`, `product:f1,f2,…` with factors `sphere`, `line`, `poincare`,
    /// `flat<n>`.
    pub fn parse(s: &str) -> Result<MetricSpec> {
        let (name, args) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s.trim(), None),
        };
        let floats = |a: &str| -> Result<Vec<f64>> {
            a.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidParameter(format!("bad number '{t}' in '{s}'")))
                })
                .collect()
        };
        match name {
            "euclidean" => Ok(MetricSpec::Euclidean {
                n: match args {
                    Some(a) => a
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad dimension in '{s}'")))?,
                    None => 2,
                },
            }),
            "randers" | "minkowski_randers" => Ok(MetricSpec::MinkowskiRanders {
                b: floats(args.unwrap_or("0.5,0"))?,
            }),
            "sphere" | "riemannian_sphere" => Ok(MetricSpec::RiemannianSphere {
                radius: match args {
                    Some(a) => floats(a)?[0],
                    None => 1.0,
                },
            }),
            "poincare" | "poincare_disk" => Ok(MetricSpec::PoincareDisk),
            "funk" | "funk_disk" => Ok(MetricSpec::FunkDisk),
            "product" | "riemannian_product" => {
                let list = args.unwrap_or("sphere,line");
                let factors = list
                    .split(',')
                    .map(|t| match t.trim() {
                        "sphere" => Ok(Factor::Sphere { radius: 1.0 }),
                        "line" => Ok(Factor::Line),
                        "poincare" => Ok(Factor::PoincareDisk),
                        other => other
                            .strip_prefix("flat")
                            .and_then(|k| k.parse().ok())
                            .map(|n| Factor::Euclidean { n })
                            .ok_or_else(|| {
                                Error::InvalidParameter(format!("unknown product factor '{other}'"))
                            }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(MetricSpec::RiemannianProduct { factors })
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown metric '{other}' (see `zoo list`)"
            ))),
        }
    }

    pub fn build(&self) -> Result<FinslerMetric> {
        match self {
            MetricSpec::Euclidean { n } => euclidean(*n),
            MetricSpec::MinkowskiRanders { b } => minkowski_randers(b.clone()),
            MetricSpec::RiemannianSphere { radius } => riemannian_sphere(*radius),
            MetricSpec::PoincareDisk => poincare_disk(),
            MetricSpec::FunkDisk => funk_disk(),
            MetricSpec::RiemannianProduct { factors } => riemannian_product(factors.clone()),
            MetricSpec::RiemannianCustom {
                n,
                coefficients,
                half_width,
            } => riemannian_custom(*n, coefficients, *half_width),
        }
    }
}

/// Builds a zoo metric by catalog name and JSON parameters.
pub fn make_metric(name: &str, params: serde_json::Value) -> Result<FinslerMetric> {
    let mut obj = match params {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Null => serde_json::Map::new(),
        other => {
            return Err(Error::InvalidParameter(format!(
                "metric parameters must be an object, got {other}"
            )))
        }
    };
    obj.insert("name".into(), serde_json::Value::String(name.to_string()));
    let spec: MetricSpec = serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| Error::InvalidParameter(format!("metric '{name}': {e}")))?;
    spec.build()
}

/// How a catalog fact is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactSource {
    /// Follows directly from the construction (e.g. flatness).
    Construction,
    /// Classical result about the model geometry.
    Classical,
    /// Short analytic argument recorded in the note.
    Analytic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnownFact {
    pub statement: String,
    pub source: FactSource,
}

/// A catalog entry with its expected outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZooEntry {
    pub name: String,
    pub cli_form: String,
    pub parameters: String,
    pub dimension: usize,
    /// Expected generic dimension of D^h, if known.
    pub expected_dh_rank: Option<usize>,
    /// Expected transitivity verdict, if known.
    pub expected_transitive: Option<bool>,
    pub facts: Vec<KnownFact>,
}

fn fact(statement: &str, source: FactSource) -> KnownFact {
    KnownFact {
        statement: statement.to_string(),
        source,
    }
}

pub fn catalog() -> Vec<ZooEntry> {
    use FactSource::*;
    vec![
        ZooEntry {
            name: "euclidean".into(),
            cli_form: "euclidean[:n]".into(),
            parameters: "n ≥ 1 (default 2)".into(),
            dimension: 2,
            expected_dh_rank: Some(2),
            expected_transitive: Some(false),
            facts: vec![
                fact("flat: G = 0, horizontal lifts are coordinate fields", Construction),
                fact("x ↦ λx is a homothety with factor λ", Construction),
                fact("translations and orthogonal maps are isometries", Construction),
            ],
        },
        ZooEntry {
            name: "minkowski_randers".into(),
            cli_form: "randers:b1,b2,…".into(),
            parameters: "constant b with |b| < 1".into(),
            dimension: 2,
            expected_dh_rank: Some(2),
            expected_transitive: Some(false),
            facts: vec![
                fact("F depends on y only, so G = 0", Construction),
                fact("x ↦ λx is a homothety with factor λ", Construction),
            ],
        },
        ZooEntry {
            name: "riemannian_sphere".into(),
            cli_form: "sphere[:radius]".into(),
            parameters: "radius > 0 (default 1); chart |x| ≤ 3".into(),
            dimension: 2,
            expected_dh_rank: Some(3),
            expected_transitive: Some(true),
            facts: vec![
                fact("holonomy is SO(2), transitive on the unit circle", Classical),
                fact("[X^h, Y^h] = −R(X,Y)y is vertical and nonzero", Classical),
                fact("planar rotations of the chart are isometries", Classical),
                fact("latitude-circle holonomy angle is 2π·cos θ", Classical),
            ],
        },
        ZooEntry {
            name: "poincare_disk".into(),
            cli_form: "poincare".into(),
            parameters: "none; chart |x| ≤ 0.9".into(),
            dimension: 2,
            expected_dh_rank: Some(3),
            expected_transitive: Some(true),
            facts: vec![
                fact("constant curvature −1, holonomy SO(2)", Classical),
                fact("geodesics through 0 are diameters", Classical),
                fact("planar rotations of the chart are isometries", Classical),
            ],
        },
        ZooEntry {
            name: "funk_disk".into(),
            cli_form: "funk".into(),
            parameters: "none; chart |x| ≤ 0.9".into(),
            dimension: 2,
            expected_dh_rank: Some(3),
            expected_transitive: Some(true),
            facts: vec![
                fact("projectively flat with G = ½·F·y", Classical),
                fact(
                    "nonzero flag curvature gives a nonzero vertical bracket tangent to the indicatrix",
                    Analytic,
                ),
            ],
        },
        ZooEntry {
            name: "riemannian_product".into(),
            cli_form: "product:sphere,line".into(),
            parameters: "factors among sphere, line, poincare, flat<n>".into(),
            dimension: 3,
            expected_dh_rank: Some(4),
            expected_transitive: Some(false),
            facts: vec![
                fact(
                    "transport preserves each factor energy, so D^h lies in a codimension-2 level set",
                    Analytic,
                ),
                fact("translations along the line factor are isometries", Construction),
            ],
        },
        ZooEntry {
            name: "riemannian_custom".into(),
            cli_form: "--coeffs 'a11;a12;…' (row-major, expressions in x1…xn)".into(),
            parameters: "n, n² coefficient expressions, chart half-width".into(),
            dimension: 0,
            expected_dh_rank: None,
            expected_transitive: None,
            facts: vec![],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{evaluate_metric, SlitTangentPoint};
    use approx::assert_relative_eq;

    #[test]
    fn catalog_examples() {
        let e = euclidean(2).unwrap();
        let p = SlitTangentPoint::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(evaluate_metric(&e, &p).unwrap(), 1.0);

        let f = funk_disk().unwrap();
        let p = SlitTangentPoint::new(vec![0.5, 0.0], vec![1.0, 0.0]).unwrap();
        assert_relative_eq!(evaluate_metric(&f, &p).unwrap(), 2.0, max_relative = 1e-15);

        assert!(matches!(
            minkowski_randers(vec![1.0, 0.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(minkowski_randers(vec![0.6, 0.79]).is_ok());
    }

    #[test]
    fn specs_parse_and_build() {
        for s in ["euclidean", "euclidean:3", "randers:0.2,0.1", "sphere", "sphere:2", "poincare", "funk", "product:sphere,line", "product:poincare,flat2"] {
            let spec = MetricSpec::parse(s).unwrap();
            let m = spec.build().unwrap();
            let json = serde_json::to_value(&spec).unwrap();
            let back: MetricSpec = serde_json::from_value(json).unwrap();
            assert_eq!(back, spec);
            assert!(m.dimension() >= 2);
        }
        assert!(MetricSpec::parse("klein").is_err());
        assert!(MetricSpec::parse("product:torus").is_err());
    }

    #[test]
    fn make_metric_by_name() {
        let m = make_metric("riemannian_sphere", serde_json::json!({"radius": 2.0})).unwrap();
        assert_eq!(m.params["radius"], serde_json::json!(2.0));
        let m = make_metric("riemannian_product", serde_json::json!({"factors": [{"kind": "sphere", "radius": 1.0}, {"kind": "line"}]})).unwrap();
        assert_eq!(m.dimension(), 3);
        assert!(make_metric("minkowski_randers", serde_json::json!({"b": [1.5, 0.0]})).is_err());
    }

    #[test]
    fn custom_expressions_checked() {
        assert!(riemannian_custom(2, &["1", "0", "0"], 1.0).is_err());
        assert!(riemannian_custom(2, &["1", "0", "0", "x3"], 1.0).is_err());
        let m = riemannian_custom(2, &["1 + x1^2", "0", "0", "exp(x2)"], 1.0).unwrap();
        let p = SlitTangentPoint::new(vec![0.5, 0.0], vec![0.0, 2.0]).unwrap();
        assert_relative_eq!(evaluate_metric(&m, &p).unwrap(), 2.0, max_relative = 1e-15);
    }
}

//! Run configuration, orchestration of the analyses and report output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::distribution::{rank_map, GeneratorBudget, PointFailure, RankCertificate, RankMap, DEFAULT_TAU};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::geometry::FinslerMetric;
use crate::holonomy::{holonomy_orbit, orbit_dimension, transitivity_verdict, LoopFamily, LoopKind, OrbitSample, ORBIT_TAU};
use crate::rigidity::{
    assemble_report, classify_transformation, ArcSampling, ManifoldMap, MapSpec, OrbitSummary, RankSummary, RigidityReport,
    TransformationVerdict,
};
use crate::sampling::{default_box, SamplePlan};
use crate::zoo::r2::R2RankPoint;
use crate::zoo::MetricSpec;

/// Version of the report layout; bumped on incompatible changes.
pub const SCHEMA_VERSION: &str = "1";
/// JSON schema of [`ReportFile`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
/// Environment variable supplying the default master seed.
pub const SEED_ENV: &str = "FINSLER_RIGIDITY_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    RankMap,
    Holonomy,
    Classify,
    #[default]
    Full,
}

impl Analysis {
    fn rank(self) -> bool {
        matches!(self, Analysis::RankMap | Analysis::Full)
    }

    fn holonomy(self) -> bool {
        matches!(self, Analysis::Holonomy | Analysis::Full)
    }

    fn classify(self) -> bool {
        matches!(self, Analysis::Classify | Analysis::Full)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    /// Base point; defaults to the centre of the chart box.
    pub base: Option<Vec<f64>>,
    /// Initial fiber vector (renormalized to `F = 1`); defaults to `e₁`.
    pub y0: Option<Vec<f64>>,
    pub loops: LoopKind,
    pub edge: f64,
    pub count: usize,
    /// Neighbours for the local PCA; defaults to `min(16, count/8)`.
    pub k: Option<usize>,
    pub tau: f64,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            base: None,
            y0: None,
            loops: LoopKind::CoordinateRectangles,
            edge: 0.2,
            count: 512,
            k: None,
            tau: ORBIT_TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub maps: Vec<MapSpec>,
    pub sample_plan: SamplePlan,
    /// Without explicit bounds, samples come from the default box scaled by this factor.
    pub box_scale: f64,
    pub arcs: ArcSampling,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            maps: vec![MapSpec::Scale { factor: 2.0 }],
            sample_plan: SamplePlan {
                grid: vec![3],
                random_points: 8,
                bounds: None,
                seed: 0,
            },
            box_scale: 0.3,
            arcs: ArcSampling::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub rank_csv: Option<PathBuf>,
    pub orbit_csv: Option<PathBuf>,
}

/// Everything a run depends on. The master `seed` and `integrator` override
/// the seeds and integrator settings of the nested sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub metric: MetricSpec,
    pub analysis: Analysis,
    pub sample_plan: SamplePlan,
    pub budget: GeneratorBudget,
    pub tau: f64,
    pub orbit: OrbitConfig,
    pub classify: ClassifyConfig,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    pub parallelism: usize,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: MetricSpec::RiemannianSphere { radius: 1.0 },
            analysis: Analysis::Full,
            sample_plan: SamplePlan::default(),
            budget: GeneratorBudget::default(),
            tau: DEFAULT_TAU,
            orbit: OrbitConfig::default(),
            classify: ClassifyConfig::default(),
            integrator: IntegratorConfig::default(),
            seed: 0,
            parallelism: 0,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    /// Copy with the master seed and integrator pushed into every section.
    pub fn resolved(&self) -> RunConfig {
        let mut c = self.clone();
        c.sample_plan.seed = c.seed;
        c.budget.seed = c.seed;
        c.budget.integrator = c.integrator;
        c.classify.sample_plan.seed = c.seed;
        c
    }

    /// Checks every field and builds the metric.
    pub fn validate(&self) -> Result<FinslerMetric> {
        let m = self.metric.build()?;
        let n = m.dimension();
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        self.integrator.validate()?;
        self.budget.validate()?;
        self.sample_plan.validate(n)?;
        self.classify.sample_plan.validate(n)?;
        let o = &self.orbit;
        if o.count == 0 || !(o.tau > 0.0 && o.tau < 1.0) || !(o.edge > 0.0) {
            return Err(Error::InvalidParameter(
                "orbit needs count ≥ 1, tau in (0, 1) and a positive edge".into(),
            ));
        }
        for v in [&o.base, &o.y0].into_iter().flatten() {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        if !(self.classify.box_scale > 0.0) {
            return Err(Error::InvalidParameter("classify.box_scale must be positive".into()));
        }
        for spec in &self.classify.maps {
            ManifoldMap::new(spec.clone(), n)?;
        }
        Ok(m)
    }
}

/// The JSON report of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub tool_version: String,
    /// Resolved configuration without the execution-only fields
    /// (`parallelism`, `output`), so the payload does not depend on them.
    pub config: RunConfig,
    pub certificates: Vec<RankCertificate>,
    pub rank_failures: Vec<PointFailure>,
    #[serde(flatten)]
    pub rigidity: RigidityReport,
    /// Seconds; the only field excluded from the determinism guarantee.
    pub wall_time: f64,
}

impl ReportFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report: {e}")))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: ReportFile,
    pub rank_map: Option<RankMap>,
    pub orbit: Option<OrbitSample>,
}

impl RunOutput {
    pub fn rank_csv(&self) -> Option<String> {
        let map = self.rank_map.as_ref()?;
        let n = self.report.rigidity.metric.dimension;
        Some(rank_csv(&map.certificates, n))
    }

    pub fn orbit_csv(&self) -> Option<String> {
        self.orbit.as_ref().map(orbit_csv)
    }
}

/// `x1,…,xn,y1,…,yn,rank` with the certified lower bound as rank.
pub fn rank_csv(certificates: &[RankCertificate], n: usize) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=n)
        .map(|i| format!("x{i}"))
        .chain((1..=n).map(|i| format!("y{i}")))
        .chain(std::iter::once("rank".to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for c in certificates {
        for v in c.point.x.iter().chain(&c.point.y) {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{}", c.r_lo).unwrap();
    }
    out
}

/// `y1,…,yn,word_length`.
pub fn orbit_csv(sample: &OrbitSample) -> String {
    let n = sample.y0.len();
    let mut out: String = (1..=n).map(|i| format!("y{i},")).collect();
    out.push_str("word_length\n");
    for (y, l) in sample.points.iter().zip(&sample.word_lengths) {
        for v in y {
            write!(out, "{v},").unwrap();
        }
        writeln!(out, "{l}").unwrap();
    }
    out
}

/// `x,y,rank` for the planar example.
pub fn r2_csv(points: &[R2RankPoint]) -> String {
    let mut out = String::from("x,y,rank\n");
    for p in points {
        writeln!(out, "{},{},{}", p.x, p.y, p.rank).unwrap();
    }
    out
}

/// Runs the configured analyses. Identical configurations give identical
/// reports (apart from `wall_time`) at any `parallelism`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let cfg = config.resolved();
    let m = cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let mut out = pool.install(|| execute(&cfg, &m))?;
    out.report.wall_time = start.elapsed().as_secs_f64();
    Ok(out)
}

fn chart_center(m: &FinslerMetric) -> Vec<f64> {
    m.chart.bounds.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
}

fn execute(cfg: &RunConfig, m: &FinslerMetric) -> Result<RunOutput> {
    let n = m.dimension();
    let mut notes = Vec::new();

    let mut map = None;
    let mut rank_summary = None;
    if cfg.analysis.rank() {
        let points = cfg.sample_plan.points(m)?;
        if points.is_empty() {
            return Err(Error::InvalidParameter("sample plan has no points inside the chart".into()));
        }
        let rm = rank_map(m, &points, &cfg.budget, cfg.tau)?;
        if rm.certificates.is_empty() {
            return Err(Error::DegenerateEverywhere { points: points.len() });
        }
        rank_summary = Some(RankSummary::from_map(&rm, n));
        map = Some(rm);
    }

    let mut orbit = None;
    let mut orbit_summary = None;
    if cfg.analysis.holonomy() {
        let base = cfg.orbit.base.clone().unwrap_or_else(|| chart_center(m));
        let y0 = cfg.orbit.y0.clone().unwrap_or_else(|| {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        });
        let family = LoopFamily {
            edge: cfg.orbit.edge,
            ..LoopFamily::new(base, cfg.orbit.loops, cfg.seed)
        };
        let sample = holonomy_orbit(m, &y0, &family, cfg.orbit.count, &cfg.integrator)?;
        let dim = orbit_dimension(&sample, cfg.orbit.k, cfg.orbit.tau)?;
        let t = transitivity_verdict(m, &sample, &dim);
        orbit_summary = Some(OrbitSummary::new(&sample, &dim, &t));
        orbit = Some(sample);
    }

    let mut transformations: Vec<TransformationVerdict> = Vec::new();
    if cfg.analysis.classify() && !cfg.classify.maps.is_empty() {
        let mut plan = cfg.classify.sample_plan.clone();
        if plan.bounds.is_none() {
            let s = cfg.classify.box_scale;
            plan.bounds = Some(
                default_box(&m.chart)
                    .into_iter()
                    .map(|(lo, hi)| {
                        let c = 0.5 * (lo + hi);
                        (c + s * (lo - c), c + s * (hi - c))
                    })
                    .collect(),
            );
        }
        let samples = plan.points(m)?;
        for spec in &cfg.classify.maps {
            let phi = ManifoldMap::new(spec.clone(), n)?;
            match classify_transformation(m, &phi, &samples, &cfg.classify.arcs, &cfg.integrator) {
                Ok(v) => transformations.push(v),
                Err(e @ (Error::ChartExit { .. } | Error::OutsideChart { .. })) => {
                    notes.push(format!("map {} not classified: {e}", phi.name))
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut settings = BTreeMap::new();
    let mut put = |k: &str, v: serde_json::Value| {
        settings.insert(k.to_string(), v);
    };
    put("seed", cfg.seed.into());
    put("tau", cfg.tau.into());
    put("orbit_tau", cfg.orbit.tau.into());
    put("budget", serde_json::to_value(&cfg.budget).expect("budget serializes"));
    put("integrator", serde_json::to_value(cfg.integrator).expect("integrator serializes"));
    put(
        "density",
        "grid plus seeded random points; sampling evidence of density, not a proof".into(),
    );

    let mut rigidity = assemble_report(m, rank_summary.as_ref(), orbit_summary.as_ref(), transformations, settings)?;
    rigidity.notes.extend(notes);
    let (certificates, rank_failures) = match &map {
        Some(rm) => (rm.certificates.clone(), rm.failures.clone()),
        None => (Vec::new(), Vec::new()),
    };
    Ok(RunOutput {
        report: ReportFile {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: RunConfig {
                parallelism: 0,
                output: OutputConfig::default(),
                ..cfg.clone()
            },
            certificates,
            rank_failures,
            rigidity,
            wall_time: 0.0,
        },
        rank_map: map,
        orbit,
    })
}

/// Default master seed: the environment variable if set and numeric, else 0.
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

//! Acceptance suite: one pass/fail line per criterion. Exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use finsler_rigidity::distribution::{rank_map, GeneratorBudget, RankCertificate, Verdict, DEFAULT_TAU, MEMBERSHIP_TOL};
use finsler_rigidity::dynamics::{
    base_bracket, geodesic, lie_bracket, parallel_transport, BaseField, BundleVectorField, CurveOnM, HorizontalLift,
    IntegratorConfig, Liouville, VerticalLift,
};
use finsler_rigidity::geometry::{
    df, evaluate_metric, fundamental_tensor, spray_coefficients, spray_jets, FinslerMetric, SlitTangentPoint,
};
use finsler_rigidity::holonomy::Transitivity;
use finsler_rigidity::rigidity::{classify_transformation, ArcSampling, ManifoldMap, MapSpec, TransformationVerdict};
use finsler_rigidity::run::{run, Analysis, RunConfig, REPORT_SCHEMA};
use finsler_rigidity::sampling::{default_box, rng_for, SamplePlan};
use finsler_rigidity::zoo::r2::{r2_field_vectors, r2_orbit_trace, r2_rank_map, PlanarSubspaceField, R2Grid};
use finsler_rigidity::zoo::MetricSpec;
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn zoo() -> Vec<(String, MetricSpec)> {
    let mut out: Vec<(String, MetricSpec)> = [
        "euclidean",
        "euclidean:3",
        "randers:0.5,0.2",
        "sphere",
        "poincare",
        "funk",
        "product:sphere,line",
    ]
    .iter()
    .map(|s| (s.to_string(), MetricSpec::parse(s).unwrap()))
    .collect();
    out.push((
        "custom".into(),
        MetricSpec::RiemannianCustom {
            n: 2,
            coefficients: vec!["2 + sin(x2)".into(), "0.3*x1".into(), "0.3*x1".into(), "1 + x1^2".into()],
            half_width: 1.0,
        },
    ));
    out
}

fn random_points(m: &FinslerMetric, count: usize, seed: u64) -> Result<Vec<SlitTangentPoint>, String> {
    let pts = SamplePlan {
        grid: vec![0],
        random_points: 2 * count,
        bounds: None,
        seed,
    }
    .points(m)
    .map_err(err)?;
    ensure!(pts.len() >= count, "{}: only {} sample points inside the chart", m.name, pts.len());
    Ok(pts.into_iter().take(count).collect())
}

fn shifted(p: &SlitTangentPoint, w: &[f64], s: f64) -> SlitTangentPoint {
    let n = p.dimension();
    SlitTangentPoint {
        x: (0..n).map(|i| p.x[i] + s * w[i]).collect(),
        y: (0..n).map(|i| p.y[i] + s * w[n + i]).collect(),
    }
}

const STEPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

/// Observed order of central differences of `f` against the exact derivative;
/// `None` when the error is at rounding level for all but one step.
fn fd_order(f: &dyn Fn(f64) -> Result<Vec<f64>, String>, exact: &[f64]) -> Result<Option<f64>, String> {
    let scale = norm(&f(0.0)?) + norm(exact);
    let mut pts = Vec::new();
    for h in STEPS {
        let fp = f(h)?;
        let fm = f(-h)?;
        let fd: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let e = norm(&diff(&fd, exact));
        if e > 100.0 * f64::EPSILON * scale.max(1.0) / h {
            pts.push((h.ln(), e.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(None);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

fn invariants_at(m: &FinslerMetric, p: &SlitTangentPoint, w: &[f64], slopes: &mut Vec<f64>) -> Result<(), String> {
    let n = m.dimension();
    let f = evaluate_metric(m, p).map_err(err)?;
    for lam in [0.5, 2.0, 7.0] {
        let q = SlitTangentPoint::new(p.x.clone(), p.y.iter().map(|v| lam * v).collect()).unwrap();
        let fl = evaluate_metric(m, &q).map_err(err)?;
        ensure!((fl - lam * f).abs() < 1e-10 * lam * f, "F homogeneity at {p:?}, λ = {lam}");
        let s = spray_coefficients(m, p).map_err(err)?;
        let sl = spray_coefficients(m, &q).map_err(err)?;
        let gn = s.g.norm();
        if gn > 1e-12 {
            ensure!(
                (&sl.g - &s.g * (lam * lam)).norm() < 1e-8 * lam * lam * gn,
                "spray homogeneity at {p:?}, λ = {lam}"
            );
        }
        let nn = s.n.norm();
        if nn > 1e-12 {
            ensure!((&sl.n - &s.n * lam).norm() < 1e-8 * lam * nn, "connection homogeneity at {p:?}, λ = {lam}");
        }
    }
    let g = fundamental_tensor(m, p).map_err(err)?;
    let y = nalgebra::DVector::from_column_slice(&p.y);
    ensure!(((y.transpose() * &g * &y)[0] - f * f).abs() < 1e-8 * f * f, "Euler identity at {p:?}");

    let dfp = df(m, p).map_err(err)?;
    let c = Liouville { n };
    for i in 0..n {
        let h = HorizontalLift::coordinate(m, i).map_err(err)?;
        let hv = h.value(p).map_err(err)?;
        ensure!(dfp.relative_residual(&hv) < 1e-8, "dF(X^h) at {p:?}, X = ∂{i}");
        let b = lie_bracket(&c, &h, p).map_err(err)?;
        ensure!(b.norm() < 1e-6 * norm(&hv), "[C, X^h] = {} at {p:?}", b.norm());
        for j in 0..n {
            if i == j {
                continue;
            }
            let hj = HorizontalLift::coordinate(m, j).map_err(err)?;
            let vi = VerticalLift::new(n, BaseField::Coordinate(i)).map_err(err)?;
            let vj = VerticalLift::new(n, BaseField::Coordinate(j)).map_err(err)?;
            let t = diff(
                &lie_bracket(&h, &vj, p).map_err(err)?.components(),
                &lie_bracket(&hj, &vi, p).map_err(err)?.components(),
            );
            ensure!(norm(&t) < 1e-6, "torsion {} at {p:?} for ∂{i}, ∂{j}", norm(&t));
        }
    }
    let pad = |c: &[&str]| -> Vec<String> { (0..n).map(|k| c.get(k).unwrap_or(&"0").to_string()).collect() };
    let xf = BaseField::expression(&pad(&["x2", "0"])).map_err(err)?;
    let yf = BaseField::expression(&pad(&["0", "x1^2"])).map_err(err)?;
    let xy = base_bracket(&xf, &yf, &p.x);
    let t1 = lie_bracket(
        &HorizontalLift::new(m.clone(), xf.clone()).map_err(err)?,
        &VerticalLift::new(n, yf.clone()).map_err(err)?,
        p,
    )
    .map_err(err)?;
    let t2 = lie_bracket(
        &HorizontalLift::new(m.clone(), yf).map_err(err)?,
        &VerticalLift::new(n, xf).map_err(err)?,
        p,
    )
    .map_err(err)?;
    let mut t = diff(&t1.components(), &t2.components());
    for k in 0..n {
        t[n + k] -= xy[k];
    }
    ensure!(norm(&t) < 1e-6, "polynomial torsion {} at {p:?}", norm(&t));

    let fline = |s: f64| evaluate_metric(m, &shifted(p, w, s)).map(|v| vec![v]).map_err(err);
    let exact = [dfp.pair_components(w)];
    slopes.extend(fd_order(&fline, &exact)?);

    let wy: Vec<f64> = (0..2 * n).map(|k| if k < n { 0.0 } else { w[k] }).collect();
    let ey = |s: f64| -> Result<Vec<f64>, String> {
        let q = shifted(p, &wy, s);
        let fq = evaluate_metric(m, &q).map_err(err)?;
        Ok(df(m, &q).map_err(err)?.dy.iter().map(|d| fq * d).collect())
    };
    let gw = &g * nalgebra::DVector::from_column_slice(&w[n..]);
    slopes.extend(fd_order(&ey, gw.as_slice())?);

    let gline = |s: f64| -> Result<Vec<f64>, String> {
        Ok(spray_coefficients(m, &shifted(p, w, s)).map_err(err)?.g.iter().copied().collect())
    };
    let gj = spray_jets(m, p, 1).map_err(err)?;
    let exact: Vec<f64> = gj.iter().map(|j| j.gradient().iter().zip(w).map(|(a, b)| a * b).sum()).collect();
    slopes.extend(fd_order(&gline, &exact)?);
    Ok(())
}

fn criterion_1() -> Outcome {
    let mut detail = Vec::new();
    for (label, spec) in zoo() {
        let m = spec.build().map_err(err)?;
        let pts = random_points(&m, 200, 11)?;
        let mut rng = rng_for(12, 0);
        let mut slopes = Vec::new();
        for p in &pts {
            let w: Vec<f64> = (0..2 * m.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
            invariants_at(&m, p, &w, &mut slopes).map_err(|e| format!("{label}: {e}"))?;
        }
        let bad = slopes.iter().filter(|s| !(1.8..=2.2).contains(*s)).count();
        let (lo, hi) = slopes
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(*s), b.max(*s)));
        ensure!(bad == 0, "{label}: {bad} of {} difference slopes outside 2 ± 0.2 (range {lo:.3}..{hi:.3})", slopes.len());
        detail.push(if slopes.is_empty() {
            format!("{label} exact")
        } else {
            format!("{label} slopes {lo:.2}..{hi:.2}")
        });
    }
    Ok(format!("200 points per metric; {}", detail.join(", ")))
}

/// `Gᵏ` of the conformal metric `e^{2σ}δ`: `(∇σ·y) yᵏ − ½|y|² ∂ₖσ`.
fn conformal_spray(grad_sigma: &[f64], y: &[f64]) -> Vec<f64> {
    let gy: f64 = grad_sigma.iter().zip(y).map(|(a, b)| a * b).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    (0..y.len()).map(|k| gy * y[k] - 0.5 * yy * grad_sigma[k]).collect()
}

fn criterion_2() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut worst_g: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for (spec, sign) in [("sphere", 1.0), ("poincare", -1.0)] {
        let m = MetricSpec::parse(spec).unwrap().build().map_err(err)?;
        for p in random_points(&m, 100, 21)? {
            let r2 = p.x.iter().map(|v| v * v).sum::<f64>();
            let d = 1.0 + sign * r2;
            let grad: Vec<f64> = p.x.iter().map(|v| -sign * 2.0 * v / d).collect();
            let oracle = conformal_spray(&grad, &p.y);
            let g: Vec<f64> = spray_coefficients(&m, &p).map_err(err)?.g.iter().copied().collect();
            let rel = norm(&diff(&g, &oracle)) / norm(&oracle);
            worst_g = worst_g.max(rel);
            ensure!(rel < 1e-8, "{spec}: spray vs Christoffel oracle {rel:e} at {p:?}");
        }
        let mut rng = rng_for(22, 0);
        let bx = default_box(&m.chart);
        for k in 0..12 {
            let base: Vec<f64> = bx.iter().map(|&(lo, hi)| rng.random_range(0.5 * lo..0.5 * hi)).collect();
            let curve = if k % 2 == 0 {
                CurveOnM::rectangle(&base, (0, 1), 0.25, 0.2).map_err(err)?
            } else {
                let mut end = base.clone();
                end[0] += 0.3;
                end[1] -= 0.2;
                let mut mid = base.clone();
                mid[1] += 0.25;
                CurveOnM::polygon(&[base.clone(), mid, end], false).map_err(err)?
            };
            let a: Vec<f64> = vec![rng.random_range(-1.0..1.0), rng.random_range(0.5..1.0)];
            let b: Vec<f64> = vec![rng.random_range(0.5..1.0), rng.random_range(-1.0..1.0)];
            let ab: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u + v).collect();
            let a3: Vec<f64> = a.iter().map(|u| 3.0 * u).collect();
            let ta = parallel_transport(&m, &curve, &a, &cfg).map_err(err)?;
            let tb = parallel_transport(&m, &curve, &b, &cfg).map_err(err)?;
            let tab = parallel_transport(&m, &curve, &ab, &cfg).map_err(err)?;
            let ta3 = parallel_transport(&m, &curve, &a3, &cfg).map_err(err)?;
            let sum: Vec<f64> = ta.iter().zip(&tb).map(|(u, v)| u + v).collect();
            let lin = norm(&diff(&tab, &sum)).max(norm(&diff(&ta3, &ta.iter().map(|u| 3.0 * u).collect::<Vec<_>>())));
            let g0 = fundamental_tensor(&m, &SlitTangentPoint::new(curve.start(), a.clone()).unwrap()).map_err(err)?;
            let g1 = fundamental_tensor(&m, &SlitTangentPoint::new(curve.end(), ta.clone()).unwrap()).map_err(err)?;
            let ip = |g: &nalgebra::DMatrix<f64>, u: &[f64], v: &[f64]| {
                (nalgebra::DVector::from_column_slice(u).transpose() * g * nalgebra::DVector::from_column_slice(v))[0]
            };
            let scale = ip(&g0, &a, &a).max(ip(&g0, &b, &b));
            let orth = [
                (ip(&g1, &ta, &ta) - ip(&g0, &a, &a)).abs(),
                (ip(&g1, &tb, &tb) - ip(&g0, &b, &b)).abs(),
                (ip(&g1, &ta, &tb) - ip(&g0, &a, &b)).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max)
                / scale;
            worst_t = worst_t.max(lin / norm(&ta)).max(orth);
            ensure!(lin < 1e-6 * norm(&ta), "{spec}: transport not linear ({lin:e})");
            ensure!(orth < 1e-6, "{spec}: transport not norm-preserving ({orth:e})");
        }
    }
    Ok(format!(
        "spray vs Christoffel max rel {worst_g:.1e}; transport linearity/isometry max {worst_t:.1e} over 24 curves"
    ))
}

fn criterion_3() -> Outcome {
    let m = MetricSpec::FunkDisk.build().map_err(err)?;
    let mut worst: f64 = 0.0;
    for p in random_points(&m, 100, 31)? {
        let f = evaluate_metric(&m, &p).map_err(err)?;
        let oracle: Vec<f64> = p.y.iter().map(|v| 0.5 * f * v).collect();
        let g: Vec<f64> = spray_coefficients(&m, &p).map_err(err)?.g.iter().copied().collect();
        let rel = norm(&diff(&g, &oracle)) / norm(&oracle);
        worst = worst.max(rel);
        ensure!(rel < 1e-6, "G ≠ ½Fy: relative residual {rel:e} at {p:?}");
    }
    Ok(format!("100 points, max relative residual {worst:.1e}"))
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn criterion_4() -> Outcome {
    let m = MetricSpec::parse("sphere").unwrap().build().map_err(err)?;
    let cfg = IntegratorConfig::default();
    let mut worst: f64 = 0.0;
    for theta in [PI / 6.0, PI / 4.0, PI / 3.0] {
        let r = (theta / 2.0).tan();
        for ccw in [true, false] {
            let c = CurveOnM::circle(&[0.0, 0.0], r, (0, 1), 0.0, ccw).map_err(err)?;
            let y0 = [0.3, 1.0];
            let y1 = parallel_transport(&m, &c, &y0, &cfg).map_err(err)?;
            let angle = (y0[0] * y1[1] - y0[1] * y1[0]).atan2(y0[0] * y1[0] + y0[1] * y1[1]);
            let expected = if ccw { -TAU * theta.cos() } else { TAU * theta.cos() };
            let e = wrap(angle - expected).abs();
            worst = worst.max(e);
            ensure!(e < 1e-5, "colatitude {theta}: rotation {angle} vs {expected} (ccw = {ccw})");
        }
    }
    let mut period_err: f64 = 0.0;
    for tilt in [0.0, 0.5] {
        let p = SlitTangentPoint::new(vec![1.0, 0.0], vec![f64::sin(tilt), f64::cos(tilt)]).unwrap();
        let f = evaluate_metric(&m, &p).map_err(err)?;
        ensure!((f - 1.0).abs() < 1e-14, "initial speed {f}");
        let q = geodesic(&m, &p, TAU, &cfg).map_err(err)?;
        let e = norm(&diff(&q.x, &p.x)).max(norm(&diff(&q.y, &p.y)));
        period_err = period_err.max(e);
        ensure!(e < 1e-6, "great circle (tilt {tilt}) does not close after 2π: {e:e}");
        let h = geodesic(&m, &p, PI, &cfg).map_err(err)?;
        ensure!(norm(&diff(&h.x, &p.x)) > 1.0, "great circle closes early");
    }
    Ok(format!(
        "rotation angle max error {worst:.1e} for θ ∈ {{π/6, π/4, π/3}}; great-circle period error {period_err:.1e}"
    ))
}

fn rank_config(metric: &str) -> RunConfig {
    RunConfig {
        metric: MetricSpec::parse(metric).unwrap(),
        analysis: Analysis::RankMap,
        seed: 5,
        ..Default::default()
    }
}

fn criterion_5(all: &mut Vec<(usize, RankCertificate)>) -> Outcome {
    let mut detail = Vec::new();
    for metric in ["euclidean", "sphere", "product:sphere,line"] {
        let out = run(&rank_config(metric)).map_err(err)?;
        let n = out.report.rigidity.metric.dimension;
        let certs = &out.report.certificates;
        ensure!(out.report.rank_failures.is_empty() || metric.starts_with("product"), "{metric}: failures");
        ensure!(certs.len() >= 5usize.pow(n as u32), "{metric}: only {} certificates", certs.len());
        match metric {
            "euclidean" => {
                let ok = certs.iter().all(|c| c.verdict == Verdict::BelowMax && c.r_lo == 2);
                ensure!(ok, "euclidean: not every point BELOW_MAX with r_lo = 2");
                detail.push(format!("euclidean {}/{} BELOW_MAX r_lo = 2", certs.len(), certs.len()));
            }
            "sphere" => {
                let good = certs.iter().filter(|c| c.verdict == Verdict::CertifiedMax && c.r_lo == 3).count();
                let frac = good as f64 / certs.len() as f64;
                ensure!(frac >= 0.95, "sphere: certified fraction {frac}");
                detail.push(format!("sphere {good}/{} CERTIFIED_MAX r_lo = 3", certs.len()));
            }
            _ => {
                let ok = certs.iter().filter(|c| c.r_lo <= 4).count();
                ensure!(ok == certs.len(), "product: {} points with r_lo > 4", certs.len() - ok);
                detail.push(format!(
                    "product {ok}/{} r_lo ≤ 4 ({} degenerate)",
                    certs.len(),
                    out.report.rank_failures.len()
                ));
            }
        }
        for c in certs {
            if c.verdict == Verdict::CertifiedMax {
                ensure!(c.r_lo == n + c.vertical_rank, "{metric}: r_lo {} ≠ n + vertical rank {}", c.r_lo, c.vertical_rank);
            }
        }
        let mism = certs.iter().filter(|c| c.r_lo != n + c.vertical_rank).count();
        ensure!(mism == 0, "{metric}: {mism} points with r_lo ≠ n + vertical rank");
        all.extend(certs.iter().map(|c| (n, c.clone())));
    }
    Ok(format!("{}; r_lo = n + vertical rank everywhere", detail.join(", ")))
}

fn criterion_6(mut all: Vec<(usize, RankCertificate)>) -> Outcome {
    for metric in ["euclidean:3", "randers:0.5,0.2", "poincare", "funk"] {
        let m = MetricSpec::parse(metric).unwrap().build().map_err(err)?;
        let pts = SamplePlan {
            grid: vec![3],
            random_points: 16,
            bounds: None,
            seed: 6,
        }
        .points(&m)
        .map_err(err)?;
        let budget = GeneratorBudget {
            seed: 6,
            ..Default::default()
        };
        let map = rank_map(&m, &pts, &budget, DEFAULT_TAU).map_err(|e| format!("{metric}: {e}"))?;
        all.extend(map.certificates.into_iter().map(|c| (m.dimension(), c)));
    }
    let mut worst: f64 = 0.0;
    let mut vectors = 0;
    for (n, c) in &all {
        worst = worst.max(c.df_residual_max);
        vectors += c.vectors_generated;
        ensure!(c.df_residual_max < MEMBERSHIP_TOL, "dF residual {:e} at {:?}", c.df_residual_max, c.point);
        ensure!(c.r_lo <= 2 * n - 1, "r_lo {} exceeds 2n−1 at {:?}", c.r_lo, c.point);
    }
    Ok(format!(
        "{} certificates, {vectors} generated vectors, max dF residual {worst:.1e}, none above 2n−1",
        all.len()
    ))
}

fn criterion_7() -> Outcome {
    let mut detail = Vec::new();
    for (metric, expected) in [
        ("sphere", Transitivity::TransitiveEvidence),
        ("euclidean", Transitivity::NotTransitive),
        ("product:sphere,line", Transitivity::NotTransitive),
    ] {
        let cfg = RunConfig {
            metric: MetricSpec::parse(metric).unwrap(),
            analysis: Analysis::Holonomy,
            seed: 7,
            ..Default::default()
        };
        let out = run(&cfg).map_err(err)?;
        let o = out.report.rigidity.criterion_1.ok_or("no orbit summary")?;
        let n = out.report.rigidity.metric.dimension;
        ensure!(o.points == 512, "{metric}: {} orbit points", o.points);
        ensure!(o.verdict == expected, "{metric}: {:?}, expected {expected:?}", o.verdict);
        if expected == Transitivity::NotTransitive {
            ensure!(o.dimension < n - 1 && o.agreement >= 0.9, "{metric}: dimension {} without margin", o.dimension);
        }
        detail.push(format!("{metric} {:?} (dim {}, covering {:.2e})", o.verdict, o.dimension, o.covering));
    }
    Ok(detail.join(", "))
}

fn classify(metric: &str, map: &str) -> Result<TransformationVerdict, String> {
    let m = MetricSpec::parse(metric).unwrap().build().map_err(err)?;
    let bounds = default_box(&m.chart).into_iter().map(|(lo, hi)| (0.3 * lo, 0.3 * hi)).collect();
    let samples = SamplePlan {
        grid: vec![3],
        random_points: 8,
        bounds: Some(bounds),
        seed: 8,
    }
    .points(&m)
    .map_err(err)?;
    let phi = ManifoldMap::new(MapSpec::parse(map).map_err(err)?, m.dimension()).map_err(err)?;
    classify_transformation(&m, &phi, &samples, &ArcSampling::default(), &IntegratorConfig::default()).map_err(err)
}

fn criterion_8() -> Outcome {
    let s = classify("euclidean", "scale:2")?;
    ensure!(s.is_affinity && s.is_homothety && !s.is_isometry, "x ↦ 2x misclassified: {s:?}");
    ensure!((s.homothety_factor - 2.0).abs() < 1e-9, "x ↦ 2x factor {}", s.homothety_factor);
    let r = classify("sphere", "rotate:0.7")?;
    ensure!(r.is_isometry && r.is_affinity, "sphere rotation misclassified: {r:?}");
    let c = classify("euclidean", "expr: x1 + 0.1*x1^3; x2")?;
    ensure!(!c.is_affinity, "cubic perturbation classified as affinity: {c:?}");
    let h = classify("euclidean", "shear:0.5")?;
    ensure!(h.is_affinity && !h.is_homothety, "shear misclassified: {h:?}");
    Ok(format!(
        "scale c = {:.12}, rotation dispersion {:.1e}, cubic residual {:.1e}, shear dispersion {:.2}",
        s.homothety_factor, r.homothety_dispersion, c.affinity.max, h.homothety_dispersion
    ))
}

fn criterion_9() -> Outcome {
    let grid = R2Grid::default();
    ensure!(grid.nx == 41 && grid.ny == 41, "default grid is not 41×41");
    let map = r2_rank_map(&grid).map_err(err)?;
    let f = PlanarSubspaceField;
    let wrong = map.iter().filter(|r| r.rank != f.expected_rank([r.x, r.y])).count();
    ensure!(wrong == 0, "{wrong} misclassified grid points");
    let zeros = map.iter().filter(|r| r.rank == 0).count();
    ensure!(zeros == 82, "{zeros} rank-0 points, expected the two rows y = 0, 1");

    let mut traces = 0;
    for (k, start) in [[0.0, 1.6], [-1.0, 3.0], [0.5, -0.4], [2.0, -2.0]].iter().enumerate() {
        let t = r2_orbit_trace(*start, 60, 4, 90 + k as u64).map_err(err)?;
        let above = start[1] > 1.0;
        ensure!(
            t.iter().all(|q| if above { q[1] > 1.0 } else { q[1] < 0.0 }),
            "half-plane trace from {start:?} left its half-plane"
        );
        let xs = t.iter().map(|q| q[0]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let ys = t.iter().map(|q| q[1]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        ensure!(xs.1 - xs.0 > 1e-3 && ys.1 - ys.0 > 1e-3, "half-plane trace from {start:?} does not spread");
        traces += 1;
    }
    for (k, start) in [[0.0, 0.5], [1.5, 0.35], [-1.0, 0.65]].iter().enumerate() {
        let t = r2_orbit_trace(*start, 60, 4, 95 + k as u64).map_err(err)?;
        ensure!(
            t.iter().all(|q| q[0] == start[0] && q[1] > 0.0 && q[1] < 1.0),
            "segment trace from {start:?} left the vertical segment"
        );
        ensure!(t.iter().any(|q| q[1] != start[1]), "segment trace from {start:?} did not move");
        traces += 1;
    }
    for x in [-2.0, -0.3, 0.0, 1.7] {
        for y in [0.0, 1.0] {
            ensure!(
                r2_field_vectors([x, y]).iter().all(|v| v == &[0.0, 0.0]),
                "fields do not vanish at ({x}, {y})"
            );
        }
    }
    Ok(format!("41×41 map, 0 misclassified; {traces} traces on half-planes and segments; fixed points on y ∈ {{0, 1}}"))
}

fn criterion_10() -> Outcome {
    let base = RunConfig {
        metric: MetricSpec::parse("sphere").unwrap(),
        analysis: Analysis::Full,
        seed: 42,
        ..Default::default()
    };
    let mut payloads = Vec::new();
    for parallelism in [1, 8] {
        let cfg = RunConfig {
            parallelism,
            ..base.clone()
        };
        let mut report = run(&cfg).map_err(err)?.report;
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).map_err(err)?;
        let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).map_err(err)?;
        let validator = jsonschema::validator_for(&schema).map_err(err)?;
        if let Some(e) = validator.iter_errors(&value).next() {
            return Err(format!("report does not match the schema: {e}"));
        }
        ensure!(report.rigidity.rigidity_evidence, "sphere report without rigidity evidence");
        report.wall_time = 0.0;
        payloads.push(report.to_json());
    }
    ensure!(payloads[0] == payloads[1], "payloads differ between parallelism 1 and 8");
    Ok(format!("{} bytes identical at parallelism 1 and 8; schema-valid", payloads[0].len()))
}

fn main() {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {id:>2} {name} ({secs:.1} s): {detail}"),
            Err(e) => {
                failures += 1;
                println!("FAIL  criterion {id:>2} {name} ({secs:.1} s): {e}");
            }
        }
    };
    let t = Instant::now();
    report(1, "core invariant suite", t, criterion_1());
    let t = Instant::now();
    report(2, "Riemannian reduction", t, criterion_2());
    let t = Instant::now();
    report(3, "Funk spray identity", t, criterion_3());
    let t = Instant::now();
    report(4, "sphere holonomy and geodesic period", t, criterion_4());
    let mut certs = Vec::new();
    let t = Instant::now();
    report(5, "rank certification", t, criterion_5(&mut certs));
    let t = Instant::now();
    report(6, "membership soundness", t, criterion_6(certs));
    let t = Instant::now();
    report(7, "transitivity", t, criterion_7());
    let t = Instant::now();
    report(8, "transformation classifier", t, criterion_8());
    let t = Instant::now();
    report(9, "planar subspace field", t, criterion_9());
    let t = Instant::now();
    report(10, "determinism", t, criterion_10());
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}

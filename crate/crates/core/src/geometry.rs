//! Finsler metric data model and the derivation chain
//! `F → E = F²/2 → g → G → N → horizontal/vertical lifts`.
//!
//! Conventions: geodesics solve `ẍⁱ + 2Gⁱ(x, ẋ) = 0`, the nonlinear connection
//! is `Nⁱⱼ = ∂Gⁱ/∂yʲ`, and the horizontal lift of `X` is `(X; −N·X)`.
//! All derivatives are exact, taken from a [`Jet`] expansion of `F` about the
//! point of interest.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Region removed from a chart box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exclusion {
    /// Points whose projection onto `coords` lies farther than `radius` from `center`.
    OutsideBall {
        coords: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
    },
    /// Points whose projection onto `coords` lies within `radius` of `center`.
    InsideBall {
        coords: Vec<usize>,
        center: Vec<f64>,
        radius: f64,
    },
}

impl Exclusion {
    fn projected_distance(coords: &[usize], center: &[f64], x: &[f64]) -> f64 {
        coords
            .iter()
            .zip(center)
            .map(|(&i, c)| (x[i] - c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn excludes(&self, x: &[f64]) -> bool {
        match self {
            Exclusion::OutsideBall {
                coords,
                center,
                radius,
            } => Self::projected_distance(coords, center, x) > *radius,
            Exclusion::InsideBall {
                coords,
                center,
                radius,
            } => Self::projected_distance(coords, center, x) < *radius,
        }
    }
}

/// A single coordinate box with optional excluded regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub dimension: usize,
    pub bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
}

impl ChartDomain {
    pub fn new(bounds: Vec<(f64, f64)>, exclusions: Vec<Exclusion>) -> Result<Self> {
        let dimension = bounds.len();
        if dimension == 0 {
            return Err(Error::InvalidParameter("chart dimension must be ≥ 1".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "chart bounds must be finite with lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(ChartDomain {
            dimension,
            bounds,
            exclusions,
        })
    }

    pub fn cube(dimension: usize, half_width: f64) -> Self {
        ChartDomain {
            dimension,
            bounds: vec![(-half_width, half_width); dimension],
            exclusions: Vec::new(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension
            && x.iter().all(|v| v.is_finite())
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
            && !self.exclusions.iter().any(|e| e.excludes(x))
    }
}

/// The coordinate expression of a Finsler function, evaluable on jets.
///
/// `x` and `y` are jets in the `2n` variables `(x, y)`; implementations must be
/// written with jet arithmetic only so every derivative order is exact.
pub trait FinslerFunction: Send + Sync {
    fn dimension(&self) -> usize;
    fn eval(&self, x: &[Jet], y: &[Jet]) -> Jet;
}

/// A Finsler function on a single chart, with descriptive metadata.
#[derive(Clone)]
pub struct FinslerMetric {
    pub chart: ChartDomain,
    evaluator: Arc<dyn FinslerFunction>,
    pub name: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerMetric")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("chart", &self.chart)
            .finish()
    }
}

impl FinslerMetric {
    pub fn new(
        name: impl Into<String>,
        chart: ChartDomain,
        evaluator: Arc<dyn FinslerFunction>,
    ) -> Result<Self> {
        if evaluator.dimension() != chart.dimension {
            return Err(Error::DimensionMismatch {
                expected: chart.dimension,
                got: evaluator.dimension(),
            });
        }
        Ok(FinslerMetric {
            chart,
            evaluator,
            name: name.into(),
            params: BTreeMap::new(),
        })
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn dimension(&self) -> usize {
        self.chart.dimension
    }

    /// Checks dimensions, the slit condition and chart membership.
    pub fn validate(&self, p: &SlitTangentPoint) -> Result<()> {
        let n = self.dimension();
        if p.x.len() != n || p.y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.x.len().max(p.y.len()),
            });
        }
        if p.y.iter().all(|v| *v == 0.0) {
            return Err(Error::SlitViolation);
        }
        if !self.chart.contains(&p.x) {
            return Err(Error::OutsideChart { x: p.x.clone() });
        }
        Ok(())
    }

    /// Jet expansion of `F` in the `2n` variables `(x, y)` about `p`.
    pub fn expand(&self, p: &SlitTangentPoint, order: usize) -> Jet {
        let z: Vec<f64> = p.x.iter().chain(&p.y).copied().collect();
        let vars = Jet::variables(&z, order);
        let n = self.dimension();
        self.evaluator.eval(&vars[..n], &vars[n..])
    }

    /// `F` evaluated on caller-supplied jets.
    pub fn eval_jets(&self, x: &[Jet], y: &[Jet]) -> Jet {
        self.evaluator.eval(x, y)
    }

    /// Plain value of `F(x, y)` without validation.
    pub fn eval_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        let z: Vec<f64> = x.iter().chain(y).copied().collect();
        let vars = Jet::variables(&z, 0);
        let n = self.dimension();
        self.evaluator.eval(&vars[..n], &vars[n..]).value()
    }
}

/// A point `(x, y)` of the slit tangent bundle in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitTangentPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SlitTangentPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::SlitViolation);
        }
        Ok(SlitTangentPoint { x, y })
    }

    pub fn dimension(&self) -> usize {
        self.x.len()
    }

    /// Concatenated state `(x, y)`.
    pub fn state(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_state(z: &[f64]) -> Self {
        let n = z.len() / 2;
        SlitTangentPoint {
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        }
    }
}

/// A tangent vector `(a; b) = aⁱ∂/∂xⁱ + bⁱ∂/∂yⁱ` to the slit tangent bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleTangentVector {
    pub base: SlitTangentPoint,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl BundleTangentVector {
    pub fn new(base: SlitTangentPoint, a: Vec<f64>, b: Vec<f64>) -> Self {
        debug_assert_eq!(a.len(), base.dimension());
        debug_assert_eq!(b.len(), base.dimension());
        BundleTangentVector { base, a, b }
    }

    pub fn from_components(base: SlitTangentPoint, v: &[f64]) -> Self {
        let n = base.dimension();
        BundleTangentVector {
            a: v[..n].to_vec(),
            b: v[n..].to_vec(),
            base,
        }
    }

    pub fn components(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().chain(&self.b).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_vertical(&self, tol: f64) -> bool {
        self.a.iter().all(|v| v.abs() <= tol)
    }
}

/// The differential `dF = (∂F/∂x; ∂F/∂y)` at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covector {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl Covector {
    pub fn pair(&self, v: &BundleTangentVector) -> f64 {
        self.pair_components(&v.components())
    }

    pub fn pair_components(&self, v: &[f64]) -> f64 {
        self.dx.iter().chain(&self.dy).zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `|dF(v)| / (|dF|·|v|)`, zero for a zero vector.
    pub fn relative_residual(&self, v: &[f64]) -> f64 {
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let dn = self.norm();
        if vn == 0.0 || dn == 0.0 {
            return 0.0;
        }
        self.pair_components(v).abs() / (dn * vn)
    }
}

/// Spray coefficients and nonlinear connection at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayData {
    /// `Gⁱ`
    pub g: DVector<f64>,
    /// `Nⁱⱼ = ∂Gⁱ/∂yʲ`, row `i`, column `j`.
    pub n: DMatrix<f64>,
}

fn degenerate(p: &SlitTangentPoint, reason: impl Into<String>) -> Error {
    Error::MetricDegenerate {
        x: p.x.clone(),
        y: p.y.clone(),
        reason: reason.into(),
    }
}

/// `F(x, y)`.
pub fn evaluate_metric(m: &FinslerMetric, p: &SlitTangentPoint) -> Result<f64> {
    m.validate(p)?;
    let f = m.eval_f64(&p.x, &p.y);
    if !(f.is_finite() && f > 0.0) {
        return Err(degenerate(p, format!("F = {f} is not positive")));
    }
    Ok(f)
}

/// `dF` at `p` by exact differentiation.
pub fn df(m: &FinslerMetric, p: &SlitTangentPoint) -> Result<Covector> {
    m.validate(p)?;
    let n = m.dimension();
    let f = m.expand(p, 1);
    if !f.is_finite() {
        return Err(degenerate(p, "F or dF not finite"));
    }
    let grad = f.gradient();
    Ok(Covector {
        dx: grad[..n].to_vec(),
        dy: grad[n..].to_vec(),
    })
}

fn check_positive_definite(p: &SlitTangentPoint, g: &DMatrix<f64>) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(degenerate(p, "fundamental tensor not finite"));
    }
    if g.clone().cholesky().is_none() {
        return Err(degenerate(p, "fundamental tensor not positive definite"));
    }
    Ok(())
}

/// `g_ij = ½ ∂²(F²)/∂yⁱ∂yʲ`.
pub fn fundamental_tensor(m: &FinslerMetric, p: &SlitTangentPoint) -> Result<DMatrix<f64>> {
    m.validate(p)?;
    let n = m.dimension();
    let f = m.expand(p, 2);
    let e = (&f * &f).scale(0.5);
    let g = DMatrix::from_fn(n, n, |i, j| e.partial(n + i).partial(n + j).value());
    check_positive_definite(p, &g)?;
    Ok(g)
}

/// Jets (in the `2n` variables about `p`) of the spray coefficients `Gⁱ`, exact to `order`.
pub fn spray_jets(m: &FinslerMetric, p: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
    m.validate(p)?;
    let n = m.dimension();
    let f = m.expand(p, order + 2);
    if !(f.value().is_finite() && f.value() > 0.0) {
        return Err(degenerate(p, format!("F = {} is not positive", f.value())));
    }
    let e = (&f * &f).scale(0.5);
    let ey: Vec<Jet> = (0..n).map(|h| e.partial(n + h)).collect();
    let mut g: Vec<Vec<Jet>> = ey
        .iter()
        .map(|eh| (0..n).map(|i| eh.partial(n + i)).collect())
        .collect();
    let gval = DMatrix::from_fn(n, n, |i, j| g[i][j].value());
    check_positive_definite(p, &gval)?;

    let z: Vec<f64> = p.state();
    let y: Vec<Jet> = (0..n)
        .map(|j| Jet::variable(2 * n, order, n + j, z[n + j]))
        .collect();
    let mut rhs: Vec<Jet> = (0..n)
        .map(|h| {
            let mut acc = e.partial(h).truncate(order).scale(-1.0);
            for (j, yj) in y.iter().enumerate() {
                acc = acc + ey[h].partial(j) * yj;
            }
            acc
        })
        .collect();

    solve_in_place(&mut g, &mut rhs).map_err(|_| degenerate(p, "fundamental tensor singular"))?;
    Ok(rhs.into_iter().map(|w| w.scale(0.5)).collect())
}

/// Gaussian elimination with partial pivoting over jets; solution left in `rhs`.
fn solve_in_place(a: &mut [Vec<Jet>], rhs: &mut [Jet]) -> std::result::Result<(), ()> {
    let n = rhs.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&r, &s| a[r][k].value().abs().total_cmp(&a[s][k].value().abs()))
            .unwrap();
        if a[piv][k].value().abs() < 1e-300 {
            return Err(());
        }
        a.swap(k, piv);
        rhs.swap(k, piv);
        let inv = a[k][k].recip();
        for r in k + 1..n {
            let factor = &a[r][k] * &inv;
            for c in k + 1..n {
                a[r][c] = &a[r][c] - &factor * &a[k][c];
            }
            rhs[r] = &rhs[r] - &factor * &rhs[k];
        }
    }
    for k in (0..n).rev() {
        let mut acc = rhs[k].clone();
        for c in k + 1..n {
            acc = acc - &a[k][c] * &rhs[c];
        }
        rhs[k] = acc / &a[k][k];
    }
    Ok(())
}

/// Jets of the connection `Nⁱⱼ` (row-major, `n·i + j`), exact to `order`.
pub fn connection_jets(m: &FinslerMetric, p: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
    let n = m.dimension();
    let g = spray_jets(m, p, order + 1)?;
    let mut out = Vec::with_capacity(n * n);
    for gi in &g {
        for j in 0..n {
            out.push(gi.partial(n + j));
        }
    }
    Ok(out)
}

/// `Gⁱ` and `Nⁱⱼ` at `p`.
pub fn spray_coefficients(m: &FinslerMetric, p: &SlitTangentPoint) -> Result<SprayData> {
    let n = m.dimension();
    let g = spray_jets(m, p, 1)?;
    let gv = DVector::from_iterator(n, g.iter().map(|j| j.value()));
    let nm = DMatrix::from_fn(n, n, |i, j| g[i].partial(n + j).value());
    Ok(SprayData { g: gv, n: nm })
}

/// `X^h = (X; −N·X)` for a tangent vector `X` at `x`.
pub fn horizontal_lift(
    m: &FinslerMetric,
    p: &SlitTangentPoint,
    x: &[f64],
) -> Result<BundleTangentVector> {
    let n = m.dimension();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let spray = spray_coefficients(m, p)?;
    let b = -(&spray.n * DVector::from_column_slice(x));
    Ok(BundleTangentVector::new(
        p.clone(),
        x.to_vec(),
        b.iter().copied().collect(),
    ))
}

/// `X^v = (0; X)`.
pub fn vertical_lift(p: &SlitTangentPoint, x: &[f64]) -> BundleTangentVector {
    BundleTangentVector::new(p.clone(), vec![0.0; p.dimension()], x.to_vec())
}

/// The Liouville field `C = yⁱ ∂/∂yⁱ` at `p`.
pub fn liouville_field(p: &SlitTangentPoint) -> BundleTangentVector {
    vertical_lift(p, &p.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;
    use approx::assert_relative_eq;

    fn pt(x: &[f64], y: &[f64]) -> SlitTangentPoint {
        SlitTangentPoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_values() {
        let m = zoo::euclidean(2).unwrap();
        let p = pt(&[0.1, 0.2], &[3.0, 4.0]);
        assert_relative_eq!(evaluate_metric(&m, &p).unwrap(), 5.0);
        let d = df(&m, &p).unwrap();
        assert_eq!(d.dx, vec![0.0, 0.0]);
        assert_relative_eq!(d.dy[0], 0.6, max_relative = 1e-15);
        assert_relative_eq!(d.dy[1], 0.8, max_relative = 1e-15);
        let g = fundamental_tensor(&m, &p).unwrap();
        assert_relative_eq!(g, DMatrix::identity(2, 2), epsilon = 1e-14);
        let s = spray_coefficients(&m, &p).unwrap();
        assert!(s.g.iter().all(|v| *v == 0.0));
        assert!(s.n.iter().all(|v| *v == 0.0));
        let h = horizontal_lift(&m, &p, &[1.0, 0.0]).unwrap();
        assert_eq!(h.a, vec![1.0, 0.0]);
        assert_eq!(h.b, vec![0.0, 0.0]);
    }

    #[test]
    fn randers_value_and_tensor_against_finite_differences() {
        let m = zoo::minkowski_randers(vec![0.5, 0.0]).unwrap();
        assert_relative_eq!(
            evaluate_metric(&m, &pt(&[0.0, 0.0], &[1.0, 0.0])).unwrap(),
            1.5
        );
        let p = pt(&[0.0, 0.0], &[0.0, 1.0]);
        let g = fundamental_tensor(&m, &p).unwrap();
        let e = |y: [f64; 2]| 0.5 * m.eval_f64(&p.x, &y).powi(2);
        let h = 1e-4;
        for i in 0..2 {
            for j in 0..2 {
                let mut pp = [p.y[0], p.y[1]];
                let mut pm = pp;
                let mut mp = pp;
                let mut mm = pp;
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                let fd = (e(pp) - e(pm) - e(mp) + e(mm)) / (4.0 * h * h);
                assert_relative_eq!(g[(i, j)], fd, max_relative = 1e-6, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn funk_at_origin_is_euclidean_norm() {
        let m = zoo::funk_disk().unwrap();
        let a: f64 = 0.3;
        let p = pt(&[0.0, 0.0], &[a.cos(), a.sin()]);
        assert_relative_eq!(evaluate_metric(&m, &p).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn riemannian_tensor_is_coefficient_matrix() {
        let m = zoo::poincare_disk().unwrap();
        let p = pt(&[0.3, -0.2], &[0.7, 1.1]);
        let g = fundamental_tensor(&m, &p).unwrap();
        let s: f64 = 4.0 / (1.0 - 0.13f64).powi(2);
        assert_relative_eq!(g, DMatrix::identity(2, 2) * s, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn lifts_and_df_pairings() {
        let m = zoo::funk_disk().unwrap();
        let p = pt(&[0.2, -0.3], &[0.4, 0.9]);
        let d = df(&m, &p).unwrap();
        let f = evaluate_metric(&m, &p).unwrap();
        assert_relative_eq!(d.pair(&liouville_field(&p)), f, max_relative = 1e-13);
        for x in [[1.0, 0.0], [0.0, 1.0], [0.3, -2.0]] {
            let h = horizontal_lift(&m, &p, &x).unwrap();
            assert!(d.pair(&h).abs() < 1e-8 * d.norm() * h.norm());
        }
        let v = vertical_lift(&p, &[0.0, 0.0]);
        assert_eq!(v.norm(), 0.0);
        let c = liouville_field(&pt(&[0.0, 0.0], &[1.0, 2.0]));
        assert_eq!(c.a, vec![0.0, 0.0]);
        assert_eq!(c.b, vec![1.0, 2.0]);
    }

    #[test]
    fn slit_and_chart_errors() {
        let m = zoo::funk_disk().unwrap();
        assert_eq!(
            SlitTangentPoint::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap_err(),
            Error::SlitViolation
        );
        let outside = pt(&[0.95, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            evaluate_metric(&m, &outside),
            Err(Error::OutsideChart { .. })
        ));
        let bad = SlitTangentPoint {
            x: vec![0.0, 0.0],
            y: vec![0.0, 0.0],
        };
        assert_eq!(df(&m, &bad).unwrap_err(), Error::SlitViolation);
    }

    #[test]
    fn degenerate_metric_is_reported() {
        // a(x) with a negative eigenvalue at the origin
        let m = zoo::riemannian_custom(2, &["1", "0", "0", "x1 - 0.5"], 1.0).unwrap();
        let p = pt(&[0.0, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            fundamental_tensor(&m, &p),
            Err(Error::MetricDegenerate { .. })
        ));
        assert!(matches!(
            spray_coefficients(&m, &p),
            Err(Error::MetricDegenerate { .. })
        ));
    }
}

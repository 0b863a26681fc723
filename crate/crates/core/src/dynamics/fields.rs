//! Vector fields on the slit tangent bundle, evaluated as jets so that their
//! derivatives (for brackets and variational equations) are exact.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{connection_jets, spray_jets, ChartDomain, FinslerMetric, SlitTangentPoint};
use crate::jet::Jet;

/// A vector field on the base manifold `M`.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseField {
    /// `∂/∂xⁱ` (0-based).
    Coordinate(usize),
    Constant(Vec<f64>),
    /// Component expressions in `x1 … xn`.
    Expression(Vec<Expr>),
}

impl BaseField {
    pub fn expression<S: AsRef<str>>(components: &[S]) -> Result<Self> {
        Ok(BaseField::Expression(
            components
                .iter()
                .map(|s| Expr::parse(s.as_ref()))
                .collect::<Result<_>>()?,
        ))
    }

    /// Components as jets; `x` are the base coordinates as jets.
    pub fn eval(&self, x: &[Jet]) -> Vec<Jet> {
        let n = x.len();
        match self {
            BaseField::Coordinate(i) => (0..n)
                .map(|k| x[0].lift(if k == *i { 1.0 } else { 0.0 }))
                .collect(),
            BaseField::Constant(v) => v.iter().map(|c| x[0].lift(*c)).collect(),
            BaseField::Expression(es) => es.iter().map(|e| e.eval(x)).collect(),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let jets: Vec<Jet> = x
            .iter()
            .enumerate()
            .map(|(i, v)| Jet::variable(x.len(), 0, i, *v))
            .collect();
        self.eval(&jets).iter().map(|j| j.value()).collect()
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        let got = match self {
            BaseField::Coordinate(i) => {
                if *i >= n {
                    return Err(Error::InvalidParameter(format!(
                        "coordinate field index {i} out of range for dimension {n}"
                    )));
                }
                n
            }
            BaseField::Constant(v) => v.len(),
            BaseField::Expression(es) => {
                if es.iter().any(|e| e.max_var() > n) {
                    return Err(Error::InvalidParameter(
                        "field expression uses a variable beyond the dimension".into(),
                    ));
                }
                es.len()
            }
        };
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
        Ok(())
    }

    fn describe(&self) -> String {
        match self {
            BaseField::Coordinate(i) => format!("∂/∂x{}", i + 1),
            BaseField::Constant(v) => format!("constant {v:?}"),
            BaseField::Expression(es) => {
                let parts: Vec<String> = es.iter().map(|e| e.to_string()).collect();
                format!("({})", parts.join(", "))
            }
        }
    }
}

/// Lie bracket of base fields, `[X, Y]^k = X^m ∂_m Y^k − Y^m ∂_m X^k`, at `x`.
pub fn base_bracket(x_field: &BaseField, y_field: &BaseField, x: &[f64]) -> Vec<f64> {
    let jets = Jet::variables(x, 1);
    let xv = x_field.eval(&jets);
    let yv = y_field.eval(&jets);
    (0..x.len())
        .map(|k| {
            (0..x.len())
                .map(|m| xv[m].value() * yv[k].gradient()[m] - yv[m].value() * xv[k].gradient()[m])
                .sum()
        })
        .collect()
}

/// A vector field on the slit tangent bundle `T̊M` with exact derivatives.
pub trait BundleVectorField: Send + Sync {
    /// Dimension `n` of the base manifold.
    fn dimension(&self) -> usize;

    /// The `2n` components as jets in the `2n` variables `(x, y)` about `z`, exact to `order`.
    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>>;

    fn describe(&self) -> String;

    fn chart(&self) -> Option<&ChartDomain> {
        None
    }

    fn value(&self, z: &SlitTangentPoint) -> Result<Vec<f64>> {
        Ok(self.jets(z, 0)?.iter().map(|j| j.value()).collect())
    }

    /// Value and Jacobian `∂ξᵃ/∂zᵇ` (row `a`, column `b`).
    fn value_and_jacobian(&self, z: &SlitTangentPoint) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let jets = self.jets(z, 1)?;
        let m = jets.len();
        let value = jets.iter().map(|j| j.value()).collect();
        let jac = DMatrix::from_fn(m, m, |a, b| jets[a].coeffs()[1 + b]);
        Ok((value, jac))
    }
}

fn check_point(n: usize, z: &SlitTangentPoint) -> Result<()> {
    if z.x.len() != n || z.y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.x.len(),
        });
    }
    if z.y.iter().all(|v| *v == 0.0) {
        return Err(Error::SlitViolation);
    }
    Ok(())
}

fn base_jets(z: &SlitTangentPoint, order: usize) -> Vec<Jet> {
    let n = z.dimension();
    (0..n)
        .map(|i| Jet::variable(2 * n, order, i, z.x[i]))
        .collect()
}

fn fiber_jets(z: &SlitTangentPoint, order: usize) -> Vec<Jet> {
    let n = z.dimension();
    (0..n)
        .map(|i| Jet::variable(2 * n, order, n + i, z.y[i]))
        .collect()
}

/// `X^h = (X; −N·X)`.
#[derive(Clone)]
pub struct HorizontalLift {
    pub metric: FinslerMetric,
    pub field: BaseField,
}

impl HorizontalLift {
    pub fn new(metric: FinslerMetric, field: BaseField) -> Result<Self> {
        field.check_dimension(metric.dimension())?;
        Ok(HorizontalLift { metric, field })
    }

    pub fn coordinate(metric: &FinslerMetric, i: usize) -> Result<Self> {
        Self::new(metric.clone(), BaseField::Coordinate(i))
    }
}

impl BundleVectorField for HorizontalLift {
    fn dimension(&self) -> usize {
        self.metric.dimension()
    }

    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
        let n = self.dimension();
        let conn = connection_jets(&self.metric, z, order)?;
        let x = base_jets(z, order);
        let xf = self.field.eval(&x);
        let mut out = xf.clone();
        for j in 0..n {
            let mut acc = -(&conn[j * n] * &xf[0]);
            for i in 1..n {
                acc = acc - &conn[j * n + i] * &xf[i];
            }
            out.push(acc);
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("horizontal lift of {}", self.field.describe())
    }

    fn chart(&self) -> Option<&ChartDomain> {
        Some(&self.metric.chart)
    }
}

/// `X^v = (0; X)`.
#[derive(Debug, Clone)]
pub struct VerticalLift {
    pub n: usize,
    pub field: BaseField,
}

impl VerticalLift {
    pub fn new(n: usize, field: BaseField) -> Result<Self> {
        field.check_dimension(n)?;
        Ok(VerticalLift { n, field })
    }
}

impl BundleVectorField for VerticalLift {
    fn dimension(&self) -> usize {
        self.n
    }

    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
        check_point(self.n, z)?;
        let x = base_jets(z, order);
        let mut out: Vec<Jet> = x.iter().map(|j| j.zero_like()).collect();
        out.extend(self.field.eval(&x));
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("vertical lift of {}", self.field.describe())
    }
}

/// The Liouville field `C = yⁱ∂/∂yⁱ`.
#[derive(Debug, Clone, Copy)]
pub struct Liouville {
    pub n: usize,
}

impl BundleVectorField for Liouville {
    fn dimension(&self) -> usize {
        self.n
    }

    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
        check_point(self.n, z)?;
        let y = fiber_jets(z, order);
        let mut out: Vec<Jet> = y.iter().map(|j| j.zero_like()).collect();
        out.extend(y);
        Ok(out)
    }

    fn describe(&self) -> String {
        "Liouville field".into()
    }
}

/// The canonical spray `S = yⁱ∂/∂xⁱ − 2Gⁱ∂/∂yⁱ`.
#[derive(Clone)]
pub struct SprayField {
    pub metric: FinslerMetric,
}

impl BundleVectorField for SprayField {
    fn dimension(&self) -> usize {
        self.metric.dimension()
    }

    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
        let g = spray_jets(&self.metric, z, order)?;
        let mut out = fiber_jets(z, order);
        out.extend(g.into_iter().map(|gi| gi.scale(-2.0)));
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("spray of {}", self.metric.name)
    }

    fn chart(&self) -> Option<&ChartDomain> {
        Some(&self.metric.chart)
    }
}

/// `[ξ, η]` as a field in its own right.
#[derive(Clone)]
pub struct Bracket {
    pub left: Arc<dyn BundleVectorField>,
    pub right: Arc<dyn BundleVectorField>,
}

impl BundleVectorField for Bracket {
    fn dimension(&self) -> usize {
        self.left.dimension()
    }

    fn jets(&self, z: &SlitTangentPoint, order: usize) -> Result<Vec<Jet>> {
        let a = self.left.jets(z, order + 1)?;
        let b = self.right.jets(z, order + 1)?;
        Ok(bracket_of_jets(&a, &b))
    }

    fn describe(&self) -> String {
        format!("[{}, {}]", self.left.describe(), self.right.describe())
    }

    fn chart(&self) -> Option<&ChartDomain> {
        self.left.chart().or_else(|| self.right.chart())
    }
}

/// `[ξ, η]ᵃ = ξᵐ ∂ₘηᵃ − ηᵐ ∂ₘξᵃ` on jet expansions; the result is one order lower.
pub fn bracket_of_jets(xi: &[Jet], eta: &[Jet]) -> Vec<Jet> {
    let dim = xi.len();
    (0..dim)
        .map(|a| {
            let mut acc: Option<Jet> = None;
            for m in 0..dim {
                let term = &xi[m] * eta[a].partial(m) - &eta[m] * xi[a].partial(m);
                acc = Some(match acc {
                    Some(t) => t + term,
                    None => term,
                });
            }
            acc.expect("bracket of empty fields")
        })
        .collect()
}

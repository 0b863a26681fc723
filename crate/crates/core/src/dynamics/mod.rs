//! Flows, push-forwards, brackets, geodesics and nonlinear parallel transport
//! on the slit tangent bundle.

pub mod curve;
pub mod fields;
pub mod ode;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{connection_jets, spray_jets, BundleTangentVector, FinslerMetric, SlitTangentPoint};

pub use curve::{CurveOnM, OrientedSegment, Segment};
pub use fields::{
    base_bracket, bracket_of_jets, BaseField, Bracket, BundleVectorField, HorizontalLift, Liouville,
    SprayField, VerticalLift,
};
pub use ode::IntegratorConfig;

fn check_in_chart(field: &dyn BundleVectorField, z: &SlitTangentPoint) -> Result<()> {
    if let Some(chart) = field.chart() {
        if !chart.contains(&z.x) {
            return Err(Error::OutsideChart { x: z.x.clone() });
        }
    }
    Ok(())
}

/// `Fl^ξ_t(z₀)`.
pub fn integrate_flow(
    xi: &dyn BundleVectorField,
    z0: &SlitTangentPoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<SlitTangentPoint> {
    check_in_chart(xi, z0)?;
    let state = ode::integrate(
        |_, z| {
            let p = SlitTangentPoint::from_state(z);
            check_in_chart(xi, &p)?;
            xi.value(&p)
        },
        0.0,
        t,
        &z0.state(),
        cfg,
    )?;
    Ok(SlitTangentPoint::from_state(&state))
}

/// `(Fl^ξ_t)_* v`, based at `Fl^ξ_t(base(v))`, from the variational equation
/// `J̇ = Dξ(z(t))·J` integrated jointly with the flow.
pub fn flow_pushforward(
    xi: &dyn BundleVectorField,
    t: f64,
    v: &BundleTangentVector,
    cfg: &IntegratorConfig,
) -> Result<BundleTangentVector> {
    check_in_chart(xi, &v.base)?;
    let dim = 2 * v.base.dimension();
    let mut state = v.base.state();
    state.extend(v.components());
    let out = ode::integrate(
        |_, s| {
            let p = SlitTangentPoint::from_state(&s[..dim]);
            check_in_chart(xi, &p)?;
            let (val, jac) = xi.value_and_jacobian(&p)?;
            let dj = jac * DVector::from_column_slice(&s[dim..]);
            let mut r = val;
            r.extend(dj.iter());
            Ok(r)
        },
        0.0,
        t,
        &state,
        cfg,
    )?;
    Ok(BundleTangentVector::from_components(
        SlitTangentPoint::from_state(&out[..dim]),
        &out[dim..],
    ))
}

/// `[ξ, η](z) = Dη·ξ − Dξ·η`.
pub fn lie_bracket(
    xi: &dyn BundleVectorField,
    eta: &dyn BundleVectorField,
    z: &SlitTangentPoint,
) -> Result<BundleTangentVector> {
    let a = xi.jets(z, 1)?;
    let b = eta.jets(z, 1)?;
    let br = bracket_of_jets(&a, &b);
    let comps: Vec<f64> = br.iter().map(|j| j.value()).collect();
    Ok(BundleTangentVector::from_components(z.clone(), &comps))
}

/// Integral curve of the canonical spray: `(γ(t), γ̇(t))` starting from `p`.
pub fn geodesic(
    m: &FinslerMetric,
    p: &SlitTangentPoint,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<SlitTangentPoint> {
    integrate_flow(&SprayField { metric: m.clone() }, p, t, cfg)
}

/// `N(x, y)` as a matrix.
fn connection_at(m: &FinslerMetric, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let p = SlitTangentPoint {
        x: x.to_vec(),
        y: y.to_vec(),
    };
    let n = m.dimension();
    let jets = connection_jets(m, &p, 0)?;
    Ok(DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value()))
}

fn transport_piece(
    m: &FinslerMetric,
    piece: &OrientedSegment,
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let n = m.dimension();
    let (s0, s1) = if piece.reversed { (1.0, 0.0) } else { (0.0, 1.0) };
    match &piece.segment {
        Segment::Geodesic {
            start,
            velocity,
            end,
            end_velocity,
        } => {
            // joint state (x, ẋ, y): ẍ = −2G(x, ẋ), ẏ = −N(x, y)·ẋ
            let mut state = Vec::with_capacity(3 * n);
            if piece.reversed {
                state.extend(end);
                state.extend(end_velocity);
            } else {
                state.extend(start);
                state.extend(velocity);
            }
            state.extend(y0);
            let out = ode::integrate(
                |_, s| {
                    let (x, v, y) = (&s[..n], &s[n..2 * n], &s[2 * n..]);
                    let pv = SlitTangentPoint {
                        x: x.to_vec(),
                        y: v.to_vec(),
                    };
                    let g = spray_jets(m, &pv, 0)?;
                    let nm = connection_at(m, x, y)?;
                    let dy = -(nm * DVector::from_column_slice(v));
                    let mut r = v.to_vec();
                    r.extend(g.iter().map(|gi| -2.0 * gi.value()));
                    r.extend(dy.iter());
                    Ok(r)
                },
                s0,
                s1,
                &state,
                cfg,
            )?;
            Ok(out[2 * n..].to_vec())
        }
        seg => ode::integrate(
            |s, y| {
                let (x, xdot) = seg.explicit(s).expect("explicit segment");
                let nm = connection_at(m, &x, y)?;
                Ok((-(nm * DVector::from_column_slice(&xdot))).iter().copied().collect())
            },
            s0,
            s1,
            y0,
            cfg,
        ),
    }
}

/// Nonlinear parallel transport `ẏ = −N(c, y)·ċ` of `y₀` along `c`; returns `y(1)`.
pub fn parallel_transport(
    m: &FinslerMetric,
    c: &CurveOnM,
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
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
    if !m.chart.contains(&c.start()) {
        return Err(Error::OutsideChart { x: c.start() });
    }
    let mut y = y0.to_vec();
    for piece in &c.segments {
        y = transport_piece(m, piece, &y, cfg)?;
    }
    Ok(y)
}

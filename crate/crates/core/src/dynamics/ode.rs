//! Adaptive Dormand–Prince 5(4) integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Largest admissible `|t_end − t_start|`.
    pub max_time: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_steps: 100_000,
            max_time: 1e3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_time > 0.0 && self.max_steps > 0) {
            return Err(Error::InvalidParameter(
                "integrator tolerances, max_time and max_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Errors that mean "the state left the region where the vector field is defined".
fn is_domain_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::OutsideChart { .. }
            | Error::SlitViolation
            | Error::MetricDegenerate { .. }
            | Error::ChartExit { .. }
    )
}

fn eval<F>(rhs: &mut F, t: f64, y: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    let v = rhs(t, y)?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::ChartExit { time: t });
    }
    Ok(v)
}

/// Integrates `ẏ = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// A right-hand side failing with a domain error makes the step shrink; when
/// the step collapses the trajectory is reported as [`Error::ChartExit`].
pub fn integrate<F>(mut rhs: F, t0: f64, t1: f64, y0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let span = t1 - t0;
    if span.abs() > cfg.max_time {
        return Err(Error::InvalidParameter(format!(
            "integration span {} exceeds max_time {}",
            span.abs(),
            cfg.max_time
        )));
    }
    let mut y = y0.to_vec();
    if span == 0.0 {
        return Ok(y);
    }
    let dir = span.signum();
    let dim = y.len();
    let scale = |y: &[f64], i: usize, other: f64| cfg.abs_tol + cfg.rel_tol * y[i].abs().max(other.abs());

    let mut k0 = match eval(&mut rhs, t0, &y) {
        Ok(k) => k,
        Err(e) if is_domain_failure(&e) => return Err(Error::ChartExit { time: t0 }),
        Err(e) => return Err(e),
    };

    // initial step guess
    let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(&y, i, 0.0)).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let d1 = (k0.iter().enumerate().map(|(i, v)| (v / scale(&y, i, 0.0)).powi(2)).sum::<f64>() / dim as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-3 } else { 0.01 * d0 / d1 };
    h = h.min(span.abs()).max(1e-12 * span.abs());

    let mut t = t0;
    let mut steps = 0usize;
    let min_step = 1e-13 * span.abs().max(1.0);
    let mut stages: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut ytmp = vec![0.0; dim];

    while (t1 - t) * dir > 0.0 {
        if steps >= cfg.max_steps {
            return Err(Error::StepLimit { steps, time: t });
        }
        steps += 1;
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        stages[0].clone_from(&k0);
        let mut failed = None;
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, a) in A[s].iter().enumerate().take(s) {
                    acc += hs * a * stages[j][i];
                }
                ytmp[i] = acc;
            }
            match eval(&mut rhs, t + C[s] * hs, &ytmp) {
                Ok(k) => stages[s] = k,
                Err(e) if is_domain_failure(&e) => {
                    failed = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed.is_some() {
            h = hs.abs() * 0.25;
            if h < min_step {
                return Err(Error::ChartExit { time: t });
            }
            continue;
        }
        // stage 7 was evaluated at the 5th-order solution, which is ytmp
        let mut err = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (s, es) in E.iter().enumerate() {
                e += es * stages[s][i];
            }
            e *= hs;
            let sc = scale(&y, i, ytmp[i]);
            err += (e / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            h = hs.abs() * 0.25;
            if h < min_step {
                return Err(Error::ChartExit { time: t });
            }
            continue;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y.clone_from(&ytmp);
            k0.clone_from(&stages[6]);
            h = hs.abs() * factor;
        } else {
            h = hs.abs() * factor.min(1.0);
            if h < min_step {
                return Err(Error::StepLimit { steps, time: t });
            }
        }
    }
    Ok(y)
}

//! Piecewise-smooth curves on the base chart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FinslerMetric, SlitTangentPoint};

use super::fields::SprayField;
use super::ode::IntegratorConfig;

/// One smooth piece, parametrized by `s ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// `center + r(cos θ eᵢ + sin θ eⱼ)`, `θ = start_angle + sweep·s`.
    Arc {
        center: Vec<f64>,
        radius: f64,
        axes: (usize, usize),
        start_angle: f64,
        sweep: f64,
    },
    /// Geodesic of the metric with initial state `(start, velocity)` at `s = 0`
    /// and final state `(end, end_velocity)` at `s = 1`.
    Geodesic {
        start: Vec<f64>,
        velocity: Vec<f64>,
        end: Vec<f64>,
        end_velocity: Vec<f64>,
    },
}

impl Segment {
    /// Position and velocity at `s`; `None` for geodesic pieces, which are
    /// only known through their ODE.
    pub fn explicit(&self, s: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Segment::Line { from, to } => {
                let pos = from.iter().zip(to).map(|(a, b)| a + s * (b - a)).collect();
                let vel = from.iter().zip(to).map(|(a, b)| b - a).collect();
                Some((pos, vel))
            }
            Segment::Arc {
                center,
                radius,
                axes,
                start_angle,
                sweep,
            } => {
                let th = start_angle + sweep * s;
                let (sn, cs) = th.sin_cos();
                let mut pos = center.clone();
                pos[axes.0] += radius * cs;
                pos[axes.1] += radius * sn;
                let mut vel = vec![0.0; center.len()];
                vel[axes.0] = -radius * sweep * sn;
                vel[axes.1] = radius * sweep * cs;
                Some((pos, vel))
            }
            Segment::Geodesic { .. } => None,
        }
    }

    pub fn start(&self) -> Vec<f64> {
        match self {
            Segment::Geodesic { start, .. } => start.clone(),
            _ => self.explicit(0.0).unwrap().0,
        }
    }

    pub fn end(&self) -> Vec<f64> {
        match self {
            Segment::Geodesic { end, .. } => end.clone(),
            _ => self.explicit(1.0).unwrap().0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedSegment {
    pub segment: Segment,
    /// Traversed from `s = 1` to `s = 0`.
    pub reversed: bool,
}

/// A piecewise-smooth curve `[0, 1] → M`; piece `k` of `m` covers `[k/m, (k+1)/m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOnM {
    pub segments: Vec<OrientedSegment>,
}

impl CurveOnM {
    /// Parses `circle:c1,c2,…:r[:cw|:ccw]`, `rectangle:p1,p2,…:a,b` or
    /// `polygon:v1;v2;…` (closed), all in the `(x1, x2)` plane.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad curve '{s}'"));
        let floats = |t: &str| -> Result<Vec<f64>> {
            t.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
        };
        if n < 2 {
            return Err(Error::InvalidParameter("planar curves need dimension ≥ 2".into()));
        }
        let point = |t: &str| -> Result<Vec<f64>> {
            let v = floats(t)?;
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            Ok(v)
        };
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["circle", c, r, rest @ ..] => {
                let ccw = match rest {
                    [] | ["ccw"] => true,
                    ["cw"] => false,
                    _ => return Err(bad()),
                };
                let r = r.trim().parse().map_err(|_| bad())?;
                Self::circle(&point(c)?, r, (0, 1), 0.0, ccw)?
            }
            ["rectangle", p, sides] => match floats(sides)?.as_slice() {
                [a, b] => Self::rectangle(&point(p)?, (0, 1), *a, *b)?,
                _ => return Err(bad()),
            },
            ["polygon", vs] => {
                let vertices = vs.split(';').map(point).collect::<Result<Vec<_>>>()?;
                Self::polygon(&vertices, true)?
            }
            _ => return Err(bad()),
        })
    }

    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyInput("curve needs at least one segment"));
        }
        let curve = CurveOnM {
            segments: segments
                .into_iter()
                .map(|segment| OrientedSegment {
                    segment,
                    reversed: false,
                })
                .collect(),
        };
        for w in curve.segments.windows(2) {
            let gap = dist(&piece_end(&w[0]), &piece_start(&w[1]));
            if gap > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "curve segments do not join (gap {gap:e})"
                )));
            }
        }
        Ok(curve)
    }

    /// Polygon through `vertices`; closed back to the first vertex if `close`.
    pub fn polygon(vertices: &[Vec<f64>], close: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::EmptyInput("polygon needs at least two vertices"));
        }
        let mut segs: Vec<Segment> = vertices
            .windows(2)
            .map(|w| Segment::Line {
                from: w[0].clone(),
                to: w[1].clone(),
            })
            .collect();
        if close {
            segs.push(Segment::Line {
                from: vertices[vertices.len() - 1].clone(),
                to: vertices[0].clone(),
            });
        }
        Self::from_segments(segs)
    }

    /// Counter-clockwise (in the `(i, j)` plane) rectangle with corner `p` and sides `a`, `b`.
    pub fn rectangle(p: &[f64], axes: (usize, usize), a: f64, b: f64) -> Result<Self> {
        let mut v1 = p.to_vec();
        v1[axes.0] += a;
        let mut v2 = v1.clone();
        v2[axes.1] += b;
        let mut v3 = p.to_vec();
        v3[axes.1] += b;
        Self::polygon(&[p.to_vec(), v1, v2, v3], true)
    }

    /// Full circle in the `(i, j)` plane starting and ending at angle `start_angle`;
    /// counter-clockwise when `ccw`.
    pub fn circle(center: &[f64], radius: f64, axes: (usize, usize), start_angle: f64, ccw: bool) -> Result<Self> {
        let sweep = if ccw {
            std::f64::consts::TAU
        } else {
            -std::f64::consts::TAU
        };
        Self::from_segments(vec![Segment::Arc {
            center: center.to_vec(),
            radius,
            axes,
            start_angle,
            sweep,
        }])
    }

    pub fn start(&self) -> Vec<f64> {
        piece_start(&self.segments[0])
    }

    pub fn end(&self) -> Vec<f64> {
        piece_end(self.segments.last().unwrap())
    }

    pub fn is_closed(&self, tol: f64) -> bool {
        dist(&self.start(), &self.end()) <= tol
    }

    /// Parameter values of the junctions between pieces, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let m = self.segments.len();
        (0..=m).map(|k| k as f64 / m as f64).collect()
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        CurveOnM {
            segments: self
                .segments
                .iter()
                .rev()
                .map(|s| OrientedSegment {
                    segment: s.segment.clone(),
                    reversed: !s.reversed,
                })
                .collect(),
        }
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &CurveOnM) -> Result<Self> {
        let gap = dist(&self.end(), &other.start());
        if gap > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "curves do not join (gap {gap:e})"
            )));
        }
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Ok(CurveOnM { segments })
    }
}

fn piece_start(s: &OrientedSegment) -> Vec<f64> {
    if s.reversed {
        s.segment.end()
    } else {
        s.segment.start()
    }
}

fn piece_end(s: &OrientedSegment) -> Vec<f64> {
    if s.reversed {
        s.segment.start()
    } else {
        s.segment.end()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Geodesic piece with initial state `(start, velocity)`, integrated over `s ∈ [0, 1]`.
pub fn geodesic_segment(
    m: &FinslerMetric,
    start: &[f64],
    velocity: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Segment> {
    let p = SlitTangentPoint::new(start.to_vec(), velocity.to_vec())?;
    let q = super::integrate_flow(&SprayField { metric: m.clone() }, &p, 1.0, cfg)?;
    Ok(Segment::Geodesic {
        start: start.to_vec(),
        velocity: velocity.to_vec(),
        end: q.x,
        end_velocity: q.y,
    })
}

/// Geodesic piece from `a` to `b` found by Newton shooting on the initial velocity.
pub fn geodesic_between(
    m: &FinslerMetric,
    a: &[f64],
    b: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Segment> {
    let n = a.len();
    let mut v: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi - ai).collect();
    let scale = dist(a, b).max(1e-12);
    let spray = SprayField { metric: m.clone() };
    let shoot = |v: &[f64]| -> Result<Vec<f64>> {
        let p = SlitTangentPoint::new(a.to_vec(), v.to_vec())?;
        Ok(super::integrate_flow(&spray, &p, 1.0, cfg)?.x)
    };
    for _ in 0..30 {
        let end = shoot(&v)?;
        let r: Vec<f64> = end.iter().zip(b).map(|(e, bi)| e - bi).collect();
        let rn = r.iter().map(|c| c * c).sum::<f64>().sqrt();
        if rn < 1e-11 * scale.max(1.0) {
            return geodesic_segment(m, a, &v, cfg);
        }
        let h = 1e-6 * scale;
        let mut jac = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            let mut vp = v.clone();
            vp[k] += h;
            let mut vm = v.clone();
            vm[k] -= h;
            let ep = shoot(&vp)?;
            let em = shoot(&vm)?;
            for i in 0..n {
                jac[(i, k)] = (ep[i] - em[i]) / (2.0 * h);
            }
        }
        let step = jac
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&r))
            .ok_or_else(|| Error::Consistency("singular shooting Jacobian".into()))?;
        for k in 0..n {
            v[k] -= step[k];
        }
    }
    Err(Error::Consistency(format!(
        "geodesic shooting from {a:?} to {b:?} did not converge"
    )))
}

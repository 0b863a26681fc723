//! A smooth subspace field on `ℝ²` whose dimension jumps, spanned by
//!
//! ```text
//! X = ψ(y) ∂/∂x,    Y = φ(y) ∂/∂y,
//! ```
//!
//! with smooth nonnegative bumps `φ`, `ψ` such that `φ(0) = φ(1) = 0`, `φ > 0`
//! elsewhere, and `ψ` vanishes exactly on `[0, 1]`. Its dimension is 2 on
//! `y < 0` and `y > 1`, 1 on `0 < y < 1` and 0 on the lines `y = 0`, `y = 1`.
//!
//! Both coefficients are functions of `y`. The example is sometimes printed
//! with `ψ∘x` in `X`; that version does not have the rank profile above or the
//! integral manifolds (half-planes, vertical segments, points), so it is read
//! as a typo for `ψ∘y`.
//!
//! Concrete bumps: `h(t) = exp(−1/t²)`, `h(0) = 0`; `h₊(s) = exp(−1/s)` for
//! `s > 0`, else 0; `φ(t) = h(t)·h(t − 1)`; `ψ(t) = h₊(−t) + h₊(t − 1)`.

use serde::{Deserialize, Serialize};

use crate::distribution::{numerical_rank, DEFAULT_TAU};
use crate::dynamics::ode::{integrate, IntegratorConfig};
use crate::error::{Error, Result};
use crate::sampling::{grid_coordinate, rng_for};
use rand::Rng;

pub fn h(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        (-1.0 / (t * t)).exp()
    }
}

pub fn h_plus(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

pub fn phi(t: f64) -> f64 {
    h(t) * h(t - 1.0)
}

pub fn psi(t: f64) -> f64 {
    h_plus(-t) + h_plus(t - 1.0)
}

/// `ln φ(t)`, `None` where `φ` vanishes; exact where `φ` itself underflows.
pub fn ln_phi(t: f64) -> Option<f64> {
    (t != 0.0 && t != 1.0).then(|| -1.0 / (t * t) - 1.0 / ((t - 1.0) * (t - 1.0)))
}

/// `ln ψ(t)`, `None` where `ψ` vanishes.
pub fn ln_psi(t: f64) -> Option<f64> {
    if t < 0.0 {
        Some(1.0 / t)
    } else if t > 1.0 {
        Some(-1.0 / (t - 1.0))
    } else {
        None
    }
}

/// The spanning fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanarSubspaceField;

impl PlanarSubspaceField {
    pub fn x_field(&self, p: [f64; 2]) -> [f64; 2] {
        [psi(p[1]), 0.0]
    }

    pub fn y_field(&self, p: [f64; 2]) -> [f64; 2] {
        [0.0, phi(p[1])]
    }

    /// Both fields divided by their magnitude (zero where they vanish), so the
    /// span survives underflow of the bumps near their zero sets.
    pub fn unit_fields(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let on = |l: Option<f64>| if l.is_some() { 1.0 } else { 0.0 };
        [[on(ln_psi(p[1])), 0.0], [0.0, on(ln_phi(p[1]))]]
    }

    /// The exact dimension of the span at `p`.
    pub fn expected_rank(&self, p: [f64; 2]) -> usize {
        let y = p[1];
        if y == 0.0 || y == 1.0 {
            0
        } else if y > 0.0 && y < 1.0 {
            1
        } else {
            2
        }
    }
}

/// `{X(p), Y(p)}`.
pub fn r2_field_vectors(p: [f64; 2]) -> Vec<[f64; 2]> {
    let f = PlanarSubspaceField;
    vec![f.x_field(p), f.y_field(p)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Grid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl Default for R2Grid {
    /// 41×41 over `[−2, 2] × [−1.5, 2.5]`; rows `y = 0` and `y = 1` are hit exactly.
    fn default() -> Self {
        R2Grid {
            x_range: (-2.0, 2.0),
            y_range: (-1.5, 2.5),
            nx: 41,
            ny: 41,
        }
    }
}

impl R2Grid {
    /// Row-major (`y` outer, `x` inner).
    pub fn points(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            let y = grid_coordinate(self.y_range.0, self.y_range.1, j, self.ny);
            for i in 0..self.nx {
                out.push([grid_coordinate(self.x_range.0, self.x_range.1, i, self.nx), y]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R2RankPoint {
    pub x: f64,
    pub y: f64,
    pub rank: usize,
}

/// Numerical rank of `{X, Y}` at every grid point.
pub fn r2_rank_map(grid: &R2Grid) -> Result<Vec<R2RankPoint>> {
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::EmptyInput("r2 grid has no points"));
    }
    let f = PlanarSubspaceField;
    grid.points()
        .into_iter()
        .map(|p| {
            let rows: Vec<Vec<f64>> = f.unit_fields(p).iter().map(|v| v.to_vec()).collect();
            Ok(R2RankPoint {
                x: p[0],
                y: p[1],
                rank: numerical_rank(&rows, DEFAULT_TAU)?.rank,
            })
        })
        .collect()
}

/// Polyline of alternating flows along `X` and `Y` with seeded times in
/// `[−2, 2]`, `samples` points per flow segment after the start point.
pub fn r2_orbit_trace(p: [f64; 2], steps: usize, samples: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if p[1] == 0.0 || p[1] == 1.0 {
        return Err(Error::InvalidParameter(
            "orbit trace must start off the lines y = 0 and y = 1".into(),
        ));
    }
    let samples = samples.max(1);
    let cfg = IntegratorConfig::default();
    let mut rng = rng_for(seed, 0);
    let mut out = vec![p];
    let mut cur = p;
    for k in 0..steps {
        let t: f64 = rng.random_range(-2.0..=2.0);
        let start = cur;
        for s in 1..=samples {
            let ts = t * s as f64 / samples as f64;
            cur = if k % 2 == 0 {
                [start[0] + ts * psi(start[1]), start[1]]
            } else {
                let y = integrate(|_, y| Ok(vec![phi(y[0])]), 0.0, ts, &[start[1]], &cfg)?;
                [start[0], y[0]]
            };
            out.push(cur);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_zero_sets() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(1.0), 0.0);
        assert_eq!(psi(0.0), 0.0);
        assert_eq!(psi(1.0), 0.0);
        for k in 0..=4000 {
            let t = -2.0 + 4.0 * k as f64 / 4000.0;
            assert!(phi(t) >= 0.0 && psi(t) >= 0.0);
            if (0.0..=1.0).contains(&t) {
                assert_eq!(psi(t), 0.0);
            } else {
                let l = ln_psi(t).expect("ψ positive off [0, 1]");
                assert!(psi(t) > 0.0 || l < -700.0, "{t}");
            }
            if t != 0.0 && t != 1.0 {
                assert!(ln_phi(t).is_some());
            }
            if let Some(l) = ln_phi(t) {
                assert!((l.exp() - phi(t)).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn field_examples() {
        let f = PlanarSubspaceField;
        let v = r2_field_vectors([5.0, 0.5]);
        assert_eq!(v[0], [0.0, 0.0]);
        assert!(v[1][1] > 0.0);
        assert_eq!(f.expected_rank([5.0, 0.5]), 1);
        let v = r2_field_vectors([0.0, 2.0]);
        assert!(v[0][0] > 0.0 && v[1][1] > 0.0);
        let v = r2_field_vectors([3.0, 1.0]);
        assert_eq!(v, vec![[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn default_grid_profile() {
        let map = r2_rank_map(&R2Grid::default()).unwrap();
        assert_eq!(map.len(), 41 * 41);
        let f = PlanarSubspaceField;
        assert!(map.iter().all(|r| r.rank == f.expected_rank([r.x, r.y])));
        assert_eq!(map.iter().filter(|r| r.rank == 0).count(), 2 * 41);
        assert!(map.iter().filter(|r| r.y == -1.0).all(|r| r.rank == 2));
    }

    #[test]
    fn traces_respect_integral_manifolds() {
        let t = r2_orbit_trace([0.0, 0.5], 20, 4, 1).unwrap();
        assert!(t.iter().all(|q| q[0] == 0.0 && q[1] > 0.0 && q[1] < 1.0));
        let t = r2_orbit_trace([0.0, 2.0], 20, 4, 2).unwrap();
        assert!(t.iter().all(|q| q[1] > 1.0));
        assert!(t.iter().any(|q| q[0] != 0.0));
        let t = r2_orbit_trace([0.0, -1.0], 20, 4, 3).unwrap();
        assert!(t.iter().all(|q| q[1] < 0.0));
        assert!(r2_orbit_trace([0.0, 1.0], 3, 2, 0).is_err());
    }
}

//! The cat map A = [[2,1],[1,1]], a smooth perturbation of it, and the
//! constant-roof suspension flow over A.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{centered, wrap, TorusPoint};

pub fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

/// Expanding eigenvalue φ² = (3+√5)/2.
pub fn cat_lambda() -> f64 {
    golden() * golden()
}

pub fn cat_lift(p: [f64; 2]) -> [f64; 2] {
    [2.0 * p[0] + p[1], p[0] + p[1]]
}

pub fn cat_inverse_lift(p: [f64; 2]) -> [f64; 2] {
    [p[0] - p[1], -p[0] + 2.0 * p[1]]
}

pub fn cat_matrix() -> Matrix2<f64> {
    Matrix2::new(2.0, 1.0, 1.0, 1.0)
}

/// Unit vector along (φ, 1).
pub fn unstable_dir() -> [f64; 2] {
    let n = (golden() * golden() + 1.0).sqrt();
    [golden() / n, 1.0 / n]
}

/// Unit vector along (1, −φ).
pub fn stable_dir() -> [f64; 2] {
    let n = (golden() * golden() + 1.0).sqrt();
    [1.0 / n, -golden() / n]
}

/// Components of v in the orthonormal eigenbasis: (unstable, stable).
pub fn to_eigen(v: [f64; 2]) -> (f64, f64) {
    let (u, s) = (unstable_dir(), stable_dir());
    (v[0] * u[0] + v[1] * u[1], v[0] * s[0] + v[1] * s[1])
}

pub fn from_eigen(a: f64, b: f64) -> [f64; 2] {
    let (u, s) = (unstable_dir(), stable_dir());
    [a * u[0] + b * s[0], a * u[1] + b * s[1]]
}

/// Point of the suspension: a base point and a level in [0, roof).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuspPoint {
    pub base: TorusPoint,
    pub level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    CatMap,
    /// x ↦ A x + strength · (sin 2πy, sin 2πx) / 2π.
    PerturbedCatMap { strength: f64 },
    /// Constant roof over the cat map.
    Suspension { roof: f64 },
}

/// Largest perturbation strength accepted; keeps Df uniformly hyperbolic.
pub const MAX_PERTURBATION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicModel {
    pub kind: ModelKind,
    /// log of the expansion rate of the base map along E^u.
    pub expansion: f64,
    /// log of the contraction rate along E^s.
    pub contraction: f64,
}

impl HyperbolicModel {
    pub fn cat_map() -> Self {
        HyperbolicModel {
            kind: ModelKind::CatMap,
            expansion: cat_lambda().ln(),
            contraction: cat_lambda().ln(),
        }
    }

    pub fn perturbed(strength: f64) -> Result<Self> {
        if !(strength.abs() <= MAX_PERTURBATION) {
            return Err(Error::Parameter(format!(
                "perturbation {strength} exceeds {MAX_PERTURBATION}"
            )));
        }
        let mut m = HyperbolicModel {
            kind: ModelKind::PerturbedCatMap { strength },
            expansion: cat_lambda().ln(),
            contraction: cat_lambda().ln(),
        };
        let (_, rate) = m.measure_contraction(32, 20, 7);
        m.contraction = rate;
        Ok(m)
    }

    pub fn suspension(roof: f64) -> Result<Self> {
        if !(roof > 0.0 && roof.is_finite()) {
            return Err(Error::Parameter(format!("roof {roof} must be positive")));
        }
        Ok(HyperbolicModel {
            kind: ModelKind::Suspension { roof },
            expansion: cat_lambda().ln() / roof,
            contraction: cat_lambda().ln() / roof,
        })
    }

    pub fn is_flow(&self) -> bool {
        matches!(self.kind, ModelKind::Suspension { .. })
    }

    pub fn roof(&self) -> f64 {
        match self.kind {
            ModelKind::Suspension { roof } => roof,
            _ => 1.0,
        }
    }

    fn strength(&self) -> f64 {
        match self.kind {
            ModelKind::PerturbedCatMap { strength } => strength,
            _ => 0.0,
        }
    }

    /// Base map on lifts.
    pub fn lift_step(&self, p: [f64; 2]) -> [f64; 2] {
        let a = cat_lift(p);
        let e = self.strength();
        if e == 0.0 {
            return a;
        }
        let tau = std::f64::consts::TAU;
        [
            a[0] + e * (tau * p[1]).sin() / tau,
            a[1] + e * (tau * p[0]).sin() / tau,
        ]
    }

    pub fn jacobian(&self, p: [f64; 2]) -> Matrix2<f64> {
        let e = self.strength();
        let tau = std::f64::consts::TAU;
        Matrix2::new(
            2.0,
            1.0 + e * (tau * p[1]).cos(),
            1.0 + e * (tau * p[0]).cos(),
            1.0,
        )
    }

    pub fn step(&self, p: TorusPoint) -> TorusPoint {
        let q = self.lift_step(p.0);
        TorusPoint::new(q[0], q[1])
    }

    pub fn step_inverse(&self, p: TorusPoint) -> TorusPoint {
        let mut z = cat_inverse_lift(p.0);
        if self.strength() != 0.0 {
            for _ in 0..50 {
                let f = self.lift_step(z);
                let r = Vector2::new(centered(f[0] - p.0[0]), centered(f[1] - p.0[1]));
                if r.norm() < 1e-15 {
                    break;
                }
                let dz = self.jacobian(z).lu().solve(&r).expect("invertible");
                z = [z[0] - dz[0], z[1] - dz[1]];
            }
        }
        TorusPoint::new(z[0], z[1])
    }

    /// f^n(p) for any integer n.
    pub fn iterate(&self, p: TorusPoint, n: i64) -> TorusPoint {
        let mut q = p;
        if n >= 0 {
            for _ in 0..n {
                q = self.step(q);
            }
        } else {
            for _ in 0..(-n) {
                q = self.step_inverse(q);
            }
        }
        q
    }

    /// Suspension flow ψ_t.
    pub fn flow(&self, p: SuspPoint, t: f64) -> SuspPoint {
        let r = self.roof();
        let s = p.level + t;
        let n = (s / r).floor();
        let mut level = s - n * r;
        let mut n = n as i64;
        if level >= r {
            level -= r;
            n += 1;
        }
        SuspPoint {
            base: self.iterate(p.base, n),
            level,
        }
    }

    /// Distance on the suspension through the identification (x, r) ~ (Ax, 0).
    pub fn susp_distance(&self, p: &SuspPoint, q: &SuspPoint) -> f64 {
        let r = self.roof();
        let direct = p.base.distance(&q.base).hypot(p.level - q.level);
        let up = self.step(p.base).distance(&q.base).hypot(p.level - r - q.level);
        let down = p.base.distance(&self.step(q.base)).hypot(p.level - (q.level - r));
        direct.min(up).min(down)
    }

    /// Stable direction at p: a vector at f^n(p) pulled back by Df^{-n}.
    pub fn stable_direction(&self, p: TorusPoint) -> Vector2<f64> {
        let s = stable_dir();
        let es = Vector2::new(s[0], s[1]);
        if self.strength() == 0.0 {
            return es;
        }
        let n = 40;
        let mut orbit = vec![p];
        for _ in 0..n {
            orbit.push(self.step(*orbit.last().unwrap()));
        }
        let mut v = es;
        for k in (0..n).rev() {
            v = self.jacobian(orbit[k].0).lu().solve(&v).expect("invertible");
            v /= v.norm();
        }
        v
    }

    /// Measured (C, rate) with |Df^n v| ≤ C e^{−rate·n} |v| on E^s, sampled
    /// over `samples` seeded points and n ≤ steps.
    pub fn measure_contraction(&self, samples: usize, steps: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut profiles = Vec::with_capacity(samples);
        for _ in 0..samples {
            let mut p = TorusPoint::new(rng.gen(), rng.gen());
            let mut v = self.stable_direction(p);
            let mut norms = Vec::with_capacity(steps);
            for _ in 0..steps {
                v = self.jacobian(p.0) * v;
                p = self.step(p);
                norms.push(v.norm());
            }
            profiles.push(norms);
        }
        let rate = profiles
            .iter()
            .map(|n| -n[steps - 1].ln() / steps as f64)
            .fold(f64::INFINITY, f64::min);
        let c = profiles
            .iter()
            .flat_map(|n| n.iter().enumerate().map(|(k, &x)| x * (rate * (k + 1) as f64).exp()))
            .fold(1.0f64, f64::max);
        (c, rate)
    }
}

/// Shortest lift of b − a.
pub fn lift_diff(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [centered(b[0] - a[0]), centered(b[1] - a[1])]
}

/// Points of (1/n)Z².
pub fn grid_point(n: usize, i: usize, j: usize) -> TorusPoint {
    TorusPoint([wrap(i as f64 / n as f64), wrap(j as f64 / n as f64)])
}

/// Cat map on the invariant grid (1/n)Z², as index permutation.
pub fn cat_grid_next(n: usize) -> Vec<usize> {
    (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            ((2 * i + j) % n) * n + (i + j) % n
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_directions() {
        let l = cat_lambda();
        let u = unstable_dir();
        let au = cat_lift(u);
        assert!((au[0] - l * u[0]).abs() < 1e-12 && (au[1] - l * u[1]).abs() < 1e-12);
        let s = stable_dir();
        let as_ = cat_lift(s);
        assert!((as_[0] - s[0] / l).abs() < 1e-12 && (as_[1] - s[1] / l).abs() < 1e-12);
        let (a, b) = to_eigen(from_eigen(0.3, -0.7));
        assert!((a - 0.3).abs() < 1e-14 && (b + 0.7).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let m = HyperbolicModel::perturbed(0.05).unwrap();
        let p = TorusPoint::new(0.123, 0.877);
        let q = m.step_inverse(m.step(p));
        assert!(p.distance(&q) < 1e-13);
        let c = HyperbolicModel::cat_map();
        assert!(c.iterate(c.iterate(p, 5), -5).distance(&p) < 1e-10);
    }

    #[test]
    fn cat_contraction_is_exact() {
        let (c, rate) = HyperbolicModel::cat_map().measure_contraction(8, 15, 1);
        assert!((rate - cat_lambda().ln()).abs() < 1e-9);
        assert!(c < 1.0 + 1e-8);
    }

    #[test]
    fn perturbed_contraction_measured() {
        let m = HyperbolicModel::perturbed(0.05).unwrap();
        let (c, rate) = m.measure_contraction(16, 20, 3);
        assert!(c >= 1.0 && c < 3.0, "C = {c}");
        assert!(rate > 0.8 && rate < 1.2, "rate = {rate}");
        assert!(HyperbolicModel::perturbed(0.5).is_err());
    }

    #[test]
    fn suspension_flow_composes() {
        let m = HyperbolicModel::suspension(1.5).unwrap();
        let p = SuspPoint { base: TorusPoint::new(0.2, 0.4), level: 0.3 };
        let a = m.flow(m.flow(p, 2.2), 1.7);
        let b = m.flow(p, 3.9);
        assert!(m.susp_distance(&a, &b) < 1e-12);
        let back = m.flow(m.flow(p, 4.0), -4.0);
        assert!(m.susp_distance(&back, &p) < 1e-12);
    }

    #[test]
    fn grid_is_invariant() {
        let next = cat_grid_next(5);
        let mut seen = next.clone();
        seen.sort();
        assert_eq!(seen, (0..25).collect::<Vec<_>>());
        let p = grid_point(5, 2, 3);
        let q = HyperbolicModel::cat_map().step(p);
        let k = next[2 * 5 + 3];
        assert!(q.distance(&grid_point(5, k / 5, k % 5)) < 1e-12);
    }
}

//! Escape-time bookkeeping for an orbit near a periodic orbit Γ.
//!
//! f(t) is the distance to Γ(ℝ), g(t) the distance to the point of Γ given by
//! the canonical time shift, so f ≤ g. Both are sampled on a time grid
//! ending at 0 and interpolated linearly. Going backwards from S₀ = 0:
//!
//! - T_k: last time before S_{k−1} with g ≤ near,
//! - C_k: last time before T_k with f = escape,
//! - S_k: first time after C_k with g ≤ near,
//! - B_k: last time before C_k with f ≤ back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeThresholds {
    /// C(B+1)ρ.
    pub near: f64,
    /// γ/3.
    pub escape: f64,
    /// γ/4.
    pub back: f64,
}

impl EscapeThresholds {
    pub fn from_gap(gap: f64, near: f64) -> Result<Self> {
        let t = EscapeThresholds { near, escape: gap / 3.0, back: gap / 4.0 };
        if !(near > 0.0 && near < t.back) {
            return Err(Error::Parameter(format!(
                "near threshold {near} must lie in (0, γ/4 = {})",
                t.back
            )));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EscapeSegmentation {
    /// S_0 = 0, S_1, … (decreasing).
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub c: Vec<f64>,
    pub b: Vec<Option<f64>>,
}

impl EscapeSegmentation {
    pub fn escapes(&self) -> usize {
        self.c.len()
    }
}

/// Piecewise-linear profile on an increasing time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Parameter("profile needs matching grids of length ≥ 2".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("profile times must increase".into()));
        }
        Ok(Profile { times, values })
    }

    pub fn at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0];
        }
        if k >= self.times.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    fn pieces(&self) -> impl DoubleEndedIterator<Item = (f64, f64, f64, f64)> + '_ {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| (t[0], t[1], v[0], v[1]))
    }

    /// sup{t < s : value(t) ≤ level}.
    pub fn last_below(&self, s: f64, level: f64) -> Option<f64> {
        for (t0, t1, v0, v1) in self.pieces().rev() {
            if t0 >= s {
                continue;
            }
            let hi = t1.min(s);
            let vhi = if t1 <= s { v1 } else { self.at(s) };
            if vhi < level || (vhi == level && v0 <= level) {
                return Some(hi);
            }
            if v0 <= level && vhi > level {
                // Crossing inside [t0, hi]; value rises through level.
                return Some(t0 + (level - v0) / (vhi - v0) * (hi - t0));
            }
        }
        None
    }

    /// inf{t > s : value(t) ≤ level}.
    pub fn first_below(&self, s: f64, level: f64) -> Option<f64> {
        for (t0, t1, v0, v1) in self.pieces() {
            if t1 <= s {
                continue;
            }
            let lo = t0.max(s);
            let vlo = if t0 >= s { v0 } else { self.at(s) };
            if vlo < level || (vlo == level && v1 <= level) {
                return Some(lo);
            }
            if v1 <= level && vlo > level {
                return Some(lo + (vlo - level) / (vlo - v1) * (t1 - lo));
            }
        }
        None
    }

    /// sup{t < s : value(t) = level}.
    pub fn last_equal(&self, s: f64, level: f64) -> Option<f64> {
        for (t0, t1, v0, v1) in self.pieces().rev() {
            if t0 >= s {
                continue;
            }
            let hi = t1.min(s);
            let vhi = if t1 <= s { v1 } else { self.at(s) };
            if vhi == level {
                return Some(hi);
            }
            if (v0 - level) * (vhi - level) < 0.0 || v0 == level {
                if v0 == vhi {
                    return Some(hi);
                }
                return Some(t0 + (level - v0) / (vhi - v0) * (hi - t0));
            }
        }
        None
    }
}

/// Builds the S/T/C/B sequences; stops when T_k or C_k is −∞.
pub fn escape_segmentation(f: &Profile, g: &Profile, th: EscapeThresholds) -> Result<EscapeSegmentation> {
    if f.times != g.times {
        return Err(Error::Parameter("f and g must share a time grid".into()));
    }
    if *f.times.last().unwrap() != 0.0 {
        return Err(Error::Parameter("profiles must end at time 0".into()));
    }
    if f.values.iter().zip(&g.values).any(|(a, b)| a > b) {
        return Err(Error::Precondition("f ≤ g violated".into()));
    }
    if !(th.near < th.escape) {
        return Err(Error::Parameter("near threshold must be below γ/3".into()));
    }
    let mut seg = EscapeSegmentation { s: vec![0.0], ..Default::default() };
    loop {
        // g > near on (C_k, S_k) and at C_k, so the search for T_{k+1} may
        // start from C_k; this avoids re-hitting S_k through rounding.
        let from = seg.c.last().copied().unwrap_or(0.0);
        let Some(t) = g.last_below(from, th.near) else { break };
        seg.t.push(t);
        let Some(c) = f.last_equal(t, th.escape) else { break };
        seg.c.push(c);
        let s = g
            .first_below(c, th.near)
            .expect("g(T_k) ≤ near, so a first return after C_k exists");
        seg.s.push(s);
        seg.b.push(f.last_below(c, th.back));
    }
    Ok(seg)
}

/// Violations of: T_{k+1} ≤ C_k, C_k < S_k ≤ T_k, and f ≤ γ/3 on [S_k, T_k]
/// (checked on grid points and endpoints).
pub fn claim_violations(seg: &EscapeSegmentation, f: &Profile, th: EscapeThresholds) -> Vec<String> {
    let mut out = Vec::new();
    for k in 0..seg.c.len() {
        let (t, c, s) = (seg.t[k], seg.c[k], seg.s[k + 1]);
        if let Some(&tn) = seg.t.get(k + 1) {
            if tn > c {
                out.push(format!("T_{} = {tn} > C_{} = {c}", k + 2, k + 1));
            }
        }
        if !(c < s && s <= t) {
            out.push(format!("order C < S ≤ T fails at k = {}: {c}, {s}, {t}", k + 1));
        }
        let inside = f
            .times
            .iter()
            .copied()
            .filter(|&x| x >= s && x <= t)
            .chain([s, t]);
        for x in inside {
            if f.at(x) > th.escape + 1e-12 {
                out.push(format!("f({x}) = {} > γ/3 on [S_{}, T_{}]", f.at(x), k + 1, k + 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|i| -((n - 1 - i) as f64) * h).collect()
    }

    fn th() -> EscapeThresholds {
        EscapeThresholds::from_gap(1.2, 0.1).unwrap()
    }

    #[test]
    fn orbit_on_gamma_has_no_escape() {
        let t = grid(50, 0.1);
        let z = Profile::new(t.clone(), vec![0.0; 50]).unwrap();
        let seg = escape_segmentation(&z, &z, th()).unwrap();
        assert_eq!(seg.s, vec![0.0]);
        assert_eq!(seg.escapes(), 0);
    }

    // One bump peaking at 0.8 over t ∈ [−6, −4]; it crosses γ/3 = 0.4 last
    // near t = −5 + 2/3.
    #[test]
    fn single_bump() {
        let t = grid(101, 0.1);
        let f: Vec<f64> = t
            .iter()
            .map(|&x| {
                let r = (x + 5.0).abs();
                if r <= 1.0 {
                    0.8 - 0.6 * r
                } else {
                    0.05
                }
            })
            .collect();
        let fp = Profile::new(t.clone(), f.clone()).unwrap();
        let gp = Profile::new(t, f).unwrap();
        let seg = escape_segmentation(&fp, &gp, th()).unwrap();
        assert_eq!(seg.escapes(), 1);
        let c = seg.c[0];
        assert!((c - (-5.0 + 2.0 / 3.0)).abs() < 0.05, "C_1 = {c}");
        assert!(seg.s[1] > c && seg.s[1] <= seg.t[0]);
        assert!(claim_violations(&seg, &fp, th()).is_empty());
    }

    #[test]
    fn crossings_interpolate() {
        let p = Profile::new(vec![-2.0, -1.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.last_below(0.0, 0.5), Some(0.0));
        assert!((p.last_below(-0.5, 0.25).unwrap() + 1.75).abs() < 1e-12);
        assert!((p.first_below(-1.0, 0.5).unwrap() + 0.5).abs() < 1e-12);
        assert!((p.last_equal(0.0, 0.5).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn thresholds_validated() {
        assert!(EscapeThresholds::from_gap(1.0, 0.3).is_err());
    }
}

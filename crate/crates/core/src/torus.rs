//! Points on the flat unit 2-torus.

use serde::{Deserialize, Serialize};

/// Point of R²/Z², stored in [0,1)².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint(pub [f64; 2]);

/// Reduce to [0,1).
pub fn wrap(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of x in [-1/2, 1/2).
pub fn centered(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint([wrap(x), wrap(y)])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    /// Shortest lift of `other - self`.
    pub fn displacement(&self, other: &TorusPoint) -> [f64; 2] {
        [centered(other.0[0] - self.0[0]), centered(other.0[1] - self.0[1])]
    }

    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let d = self.displacement(other);
        (d[0] * d[0] + d[1] * d[1]).sqrt()
    }

    pub fn translate(&self, v: [f64; 2]) -> TorusPoint {
        TorusPoint::new(self.0[0] + v[0], self.0[1] + v[1])
    }
}

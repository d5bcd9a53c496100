//! Poincaré ball primitives: distance, Möbius addition, conformal factor,
//! exponential and logarithmic maps.
//!
//! All points live in the open unit ball of R^d with the conformal metric
//! λ_x² g_E, λ_x = 2/(1 − ‖x‖²). Curvature is fixed at −1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius ceiling used when floating-point rounding pushes a result onto or
/// past the unit sphere.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-12;

/// A point in the open unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    coords: Vec<f64>,
}

impl BallPoint {
    /// Constructs a point, rejecting coordinates with norm ≥ 1 or non-finite
    /// components.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let norm = l2_norm(&coords);
        if norm >= 1.0 {
            return Err(Error::InvalidPoint(format!(
                "norm {norm} is outside the open unit ball"
            )));
        }
        Ok(Self { coords })
    }

    /// Constructs a point, radially clamping anything at or beyond the
    /// boundary back to norm `BOUNDARY_RADIUS`.
    pub fn clamped(mut coords: Vec<f64>) -> Self {
        for c in coords.iter_mut() {
            if !c.is_finite() {
                *c = 0.0;
            }
        }
        let norm = l2_norm(&coords);
        if norm >= BOUNDARY_RADIUS {
            let scale = BOUNDARY_RADIUS / norm;
            for c in coords.iter_mut() {
                *c *= scale;
            }
        }
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.coords)
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    fn neg(&self) -> BallPoint {
        BallPoint {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

/// A tangent vector attached to a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: BallPoint,
    pub direction: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: BallPoint, direction: Vec<f64>) -> Result<Self> {
        if direction.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: direction.len(),
            });
        }
        if direction.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite tangent component".into()));
        }
        Ok(Self { base, direction })
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.direction)
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conformal factor λ_x = 2 / (1 − ‖x‖²). Always ≥ 2 inside the ball.
pub fn conformal_factor(x: &BallPoint) -> f64 {
    let n2 = dot(x.coords(), x.coords());
    2.0 / (1.0 - n2)
}

/// Geodesic distance arccosh(1 + 2‖x−y‖² / ((1−‖x‖²)(1−‖y‖²))).
pub fn ball_distance(x: &BallPoint, y: &BallPoint) -> f64 {
    let diff2: f64 = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let nx2 = dot(x.coords(), x.coords());
    let ny2 = dot(y.coords(), y.coords());
    let arg = 1.0 + 2.0 * diff2 / ((1.0 - nx2) * (1.0 - ny2));
    // arccosh(z) = ln(z + sqrt(z² − 1)); arg ≥ 1 by construction.
    let arg = arg.max(1.0);
    (arg + (arg * arg - 1.0).sqrt()).ln()
}

/// Möbius addition x ⊕ y, the gyrogroup translation on the ball.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> BallPoint {
    let xy = dot(x.coords(), y.coords());
    let nx2 = dot(x.coords(), x.coords());
    let ny2 = dot(y.coords(), y.coords());
    let denom = 1.0 + 2.0 * xy + nx2 * ny2;
    let cx = (1.0 + 2.0 * xy + ny2) / denom;
    let cy = (1.0 - nx2) / denom;
    let coords = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| cx * a + cy * b)
        .collect();
    BallPoint::clamped(coords)
}

/// Exponential map: exp_x(v) = x ⊕ (tanh(λ_x‖v‖/2) v/‖v‖).
///
/// The zero tangent maps to the base point exactly.
pub fn exp_map(v: &TangentVector) -> BallPoint {
    let vnorm = v.norm();
    if vnorm == 0.0 {
        return v.base.clone();
    }
    let lambda = conformal_factor(&v.base);
    let scale = (lambda * vnorm / 2.0).tanh() / vnorm;
    let step = BallPoint::clamped(v.direction.iter().map(|c| c * scale).collect());
    mobius_add(&v.base, &step)
}

/// Logarithmic map: log_x(y) = (2/λ_x) artanh(‖−x ⊕ y‖) (−x ⊕ y)/‖−x ⊕ y‖.
///
/// Coincident points yield the zero tangent exactly.
pub fn log_map(x: &BallPoint, y: &BallPoint) -> TangentVector {
    let w = mobius_add(&x.neg(), y);
    let wnorm = w.norm();
    if wnorm == 0.0 {
        return TangentVector {
            base: x.clone(),
            direction: vec![0.0; x.dim()],
        };
    }
    let lambda = conformal_factor(x);
    let scale = (2.0 / lambda) * atanh(wnorm) / wnorm;
    TangentVector {
        base: x.clone(),
        direction: w.coords().iter().map(|c| c * scale).collect(),
    }
}

fn atanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

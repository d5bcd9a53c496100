//! Memory lifecycle as discretized Riemannian Langevin dynamics on the
//! Poincaré ball: importance potential, Euler–Maruyama stepping with the
//! curvature correction, the radial four-state machine, and the stationary
//! density used by the equilibrium checks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{conformal_factor, BallPoint};

/// Dimension of the lifecycle state space (independent of the embedding
/// dimension).
pub const STATE_DIM: usize = 8;

/// Lifecycle position and the time of its last dynamics update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangevinState {
    pub xi: BallPoint,
    pub last_step_time: i64,
}

impl LangevinState {
    pub fn at_origin(dim: usize, now: i64) -> Self {
        Self {
            xi: BallPoint::origin(dim),
            last_step_time: now,
        }
    }
}

/// Parameters of the importance potential and its discretization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub dt: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.5,
            temperature: 0.1,
            dt: 0.01,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha < 0.0 || self.beta < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidArgument(
                "potential coefficients must be non-negative".into(),
            ));
        }
        if self.temperature <= 0.0 {
            return Err(Error::InvalidArgument("temperature must be positive".into()));
        }
        if self.dt <= 0.0 || self.dt > 0.1 {
            return Err(Error::InvalidArgument("dt must lie in (0, 0.1]".into()));
        }
        Ok(())
    }
}

/// Retention band, ordered from most to least retrievable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    Active,
    Warm,
    Cold,
    Archived,
}

impl LifecycleState {
    pub fn as_str(&self) -> &'static str {
        match self {
            LifecycleState::Active => "active",
            LifecycleState::Warm => "warm",
            LifecycleState::Cold => "cold",
            LifecycleState::Archived => "archived",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(LifecycleState::Active),
            "warm" => Ok(LifecycleState::Warm),
            "cold" => Ok(LifecycleState::Cold),
            "archived" => Ok(LifecycleState::Archived),
            other => Err(Error::InvalidArgument(format!("unknown lifecycle {other:?}"))),
        }
    }
}

/// Radial thresholds of the four-state machine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifecycleThresholds {
    pub active: f64,
    pub warm: f64,
    pub cold: f64,
}

impl Default for LifecycleThresholds {
    fn default() -> Self {
        Self {
            active: 0.5,
            warm: 0.75,
            cold: 0.9,
        }
    }
}

/// Importance potential U = α‖ξ‖² − β·n_access − γ·relevance.
pub fn potential(xi: &BallPoint, n_access: u32, relevance: f64, p: &PotentialParams) -> f64 {
    let r2: f64 = xi.coords().iter().map(|c| c * c).sum();
    p.alpha * r2 - p.beta * n_access as f64 - p.gamma * relevance
}

/// Euclidean gradient of the potential. The access and relevance terms do
/// not depend on ξ, so only the quadratic term contributes.
pub fn potential_gradient(xi: &BallPoint, p: &PotentialParams) -> Vec<f64> {
    xi.coords().iter().map(|c| 2.0 * p.alpha * c).collect()
}

/// One Euler–Maruyama step:
///
/// ξ' = ξ − λ⁻²·∇U·Δt + ½T(d−2)·λ⁻¹·ξ·Δt + sqrt(2TΔt)·λ⁻¹·η
///
/// followed by a radial clamp back into the ball. The noise vector is
/// caller-supplied so trajectories are reproducible.
pub fn langevin_step(
    s: &LangevinState,
    grad_u: &[f64],
    p: &PotentialParams,
    noise: &[f64],
) -> LangevinState {
    let d = s.xi.dim();
    debug_assert_eq!(grad_u.len(), d);
    debug_assert_eq!(noise.len(), d);
    let lambda = conformal_factor(&s.xi);
    let inv_lambda = 1.0 / lambda;
    let drift = inv_lambda * inv_lambda * p.dt;
    let correction = 0.5 * p.temperature * (d as f64 - 2.0) * inv_lambda * p.dt;
    let diffusion = (2.0 * p.temperature * p.dt).sqrt() * inv_lambda;

    let coords: Vec<f64> = s
        .xi
        .coords()
        .iter()
        .enumerate()
        .map(|(k, &x)| x - drift * grad_u[k] + correction * x + diffusion * noise[k])
        .collect();

    LangevinState {
        xi: BallPoint::clamped(coords),
        last_step_time: s.last_step_time,
    }
}

/// Lifecycle band for a radial position.
pub fn lifecycle_of_with(xi: &BallPoint, t: &LifecycleThresholds) -> LifecycleState {
    let r = xi.norm();
    if r < t.active {
        LifecycleState::Active
    } else if r < t.warm {
        LifecycleState::Warm
    } else if r < t.cold {
        LifecycleState::Cold
    } else {
        LifecycleState::Archived
    }
}

pub fn lifecycle_of(xi: &BallPoint) -> LifecycleState {
    lifecycle_of_with(xi, &LifecycleThresholds::default())
}

/// Radial contraction toward the origin applied on each access event:
/// ξ' = (1 − strength)·ξ.
pub fn access_boost(s: &LangevinState, strength: f64) -> LangevinState {
    let f = 1.0 - strength.clamp(0.0, 1.0);
    LangevinState {
        xi: BallPoint::clamped(s.xi.coords().iter().map(|c| c * f).collect()),
        last_step_time: s.last_step_time,
    }
}

/// Unnormalized stationary density (1 − ‖ξ‖²)^(−d) · exp(−U/T).
pub fn stationary_density(xi: &BallPoint, u_at_xi: f64, temperature: f64, d: usize) -> f64 {
    let r2: f64 = xi.coords().iter().map(|c| c * c).sum();
    (1.0 - r2).powi(-(d as i32)) * (-u_at_xi / temperature).exp()
}

/// Per-memory inputs to a maintenance pass.
#[derive(Debug, Clone)]
pub struct MaintenanceItem {
    pub memory_id: i64,
    pub state: LangevinState,
    pub n_access: u32,
    pub relevance: f64,
}

/// One lifecycle transition observed during a maintenance pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub memory_id: i64,
    pub from: LifecycleState,
    pub to: LifecycleState,
}

/// Result of a maintenance pass: updated states plus the transition log.
#[derive(Debug, Clone)]
pub struct MaintenanceReport {
    pub updated: Vec<(i64, LangevinState, LifecycleState)>,
    pub transitions: Vec<Transition>,
    pub steps: u32,
}

/// Runs `steps` Langevin updates on every item. The noise stream for each
/// memory is derived from (seed, memory_id), so the pass is deterministic
/// and independent of iteration order.
pub fn maintenance_pass(
    items: &[MaintenanceItem],
    p: &PotentialParams,
    thresholds: &LifecycleThresholds,
    steps: u32,
    rng_seed: u64,
    now: i64,
) -> MaintenanceReport {
    let mut updated = Vec::with_capacity(items.len());
    let mut transitions = Vec::new();
    for item in items {
        let before = lifecycle_of_with(&item.state.xi, thresholds);
        let mut state = item.state.clone();
        if steps > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (item.memory_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let d = state.xi.dim();
            for _ in 0..steps {
                let grad = potential_gradient(&state.xi, p);
                let noise: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                state = langevin_step(&state, &grad, p, &noise);
            }
            state.last_step_time = now;
        }
        let after = lifecycle_of_with(&state.xi, thresholds);
        if after != before {
            transitions.push(Transition {
                memory_id: item.memory_id,
                from: before,
                to: after,
            });
        }
        updated.push((item.memory_id, state, after));
    }
    MaintenanceReport {
        updated,
        transitions,
        steps,
    }
}

//! Diagonal-Gaussian statistical manifold: Fisher–Rao geodesic distance,
//! variance estimation from embedding magnitude, the graduated cosine→Fisher
//! ramp, and the variance-weighted retrieval score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{dot, l2_norm};

/// Floor applied to every variance component on construction.
pub const VAR_FLOOR: f64 = 1e-6;

/// A diagonal Gaussian (μ, σ²) on the statistical manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianEmbedding {
    mu: Vec<f64>,
    var: Vec<f64>,
}

impl GaussianEmbedding {
    pub fn new(mu: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mu.len() != var.len() {
            return Err(Error::DimensionMismatch {
                expected: mu.len(),
                got: var.len(),
            });
        }
        if mu.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean component".into()));
        }
        if var.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite variance component".into()));
        }
        let var = var.into_iter().map(|v| v.max(VAR_FLOOR)).collect();
        Ok(Self { mu, var })
    }

    /// Unit variance on every dimension.
    pub fn isotropic(mu: Vec<f64>) -> Result<Self> {
        let d = mu.len();
        Self::new(mu, vec![1.0; d])
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Knobs of the similarity layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Temperature of the variance-weighted score.
    pub temperature: f64,
    /// Access count at which the ramp saturates to pure Fisher scoring.
    pub ramp_threshold: u32,
    pub sigma_min_sq: f64,
    pub sigma_max_sq: f64,
    pub eps_var: f64,
}

impl SimilarityConfig {
    /// Defaults for embedding dimension `d`. The temperature defaults to `d`
    /// so the score exponent is a per-dimension average.
    pub fn for_dim(d: usize) -> Self {
        Self {
            temperature: d as f64,
            ramp_threshold: 10,
            sigma_min_sq: 0.1,
            sigma_max_sq: 1.0,
            eps_var: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature <= 0.0 {
            return Err(Error::InvalidArgument("temperature must be positive".into()));
        }
        if self.ramp_threshold < 1 {
            return Err(Error::InvalidArgument("ramp_threshold must be ≥ 1".into()));
        }
        if self.sigma_min_sq <= 0.0 || self.sigma_max_sq <= self.sigma_min_sq {
            return Err(Error::InvalidArgument(
                "need 0 < sigma_min_sq < sigma_max_sq".into(),
            ));
        }
        Ok(())
    }
}

/// Fisher–Rao geodesic distance between diagonal Gaussians:
///
/// sqrt( Σ_k [2 log(σ_{2,k}/σ_{1,k})]² + Σ_k (μ_{1,k}−μ_{2,k})² / (σ²_{1,k}+σ²_{2,k}) )
///
/// Single pass, constant auxiliary storage.
pub fn fisher_rao_distance(p: &GaussianEmbedding, q: &GaussianEmbedding) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let mut acc = 0.0;
    for k in 0..p.dim() {
        acc += fisher_rao_sq_term(p.mu[k], p.var[k], q.mu[k], q.var[k]);
    }
    Ok(acc.sqrt())
}

/// One dimension's squared contribution to the geodesic distance.
/// σ² is stored, so 2 log(σ₂/σ₁) = log(σ²₂) − log(σ²₁); the subtraction
/// form keeps the distance exactly symmetric under argument swap.
#[inline]
fn fisher_rao_sq_term(mu1: f64, var1: f64, mu2: f64, var2: f64) -> f64 {
    let log_ratio = var2.ln() - var1.ln();
    let gap = mu1 - mu2;
    log_ratio * log_ratio + gap * gap / (var1 + var2)
}

/// Per-dimension variance from the signal magnitude of the normalized
/// embedding: large components get the floor variance, components near zero
/// get the ceiling.
pub fn estimate_variance(e: &[f64], cfg: &SimilarityConfig) -> Result<GaussianEmbedding> {
    let norm = l2_norm(e);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let max_abs = e.iter().map(|c| (c / norm).abs()).fold(0.0f64, f64::max);
    let var = e
        .iter()
        .map(|c| {
            let rel = (c / norm).abs() / max_abs;
            cfg.sigma_max_sq - (cfg.sigma_max_sq - cfg.sigma_min_sq) * rel + cfg.eps_var
        })
        .collect();
    GaussianEmbedding::new(e.to_vec(), var)
}

/// Variance-weighted retrieval score exp(−(1/T) Σ_k gap²_k / σ²_{m,k}),
/// using the memory's variance in the denominator.
pub fn fisher_score(
    q: &GaussianEmbedding,
    m: &GaussianEmbedding,
    cfg: &SimilarityConfig,
) -> Result<f64> {
    if q.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: m.dim(),
        });
    }
    let mut acc = 0.0;
    for k in 0..q.dim() {
        let gap = q.mu[k] - m.mu[k];
        acc += gap * gap / m.var[k];
    }
    Ok((-acc / cfg.temperature).exp())
}

/// Plain cosine similarity.
pub fn cosine_score(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let nu = l2_norm(u);
    let nv = l2_norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Graduated ramp: α = min(n_access / ramp_threshold, 1), then
/// (1−α)·cosine + α·fisher. At the endpoints the result equals the
/// component score bit-for-bit.
pub fn effective_score(
    q: &GaussianEmbedding,
    m: &GaussianEmbedding,
    n_access: u32,
    cfg: &SimilarityConfig,
) -> Result<f64> {
    let alpha = (n_access as f64 / cfg.ramp_threshold as f64).min(1.0);
    if alpha == 0.0 {
        return cosine_score(q.mu(), m.mu());
    }
    if alpha == 1.0 {
        return fisher_score(q, m, cfg);
    }
    let cos = cosine_score(q.mu(), m.mu())?;
    let fr = fisher_score(q, m, cfg)?;
    Ok((1.0 - alpha) * cos + alpha * fr)
}

/// Outcome of asking the Fisher metric to order a cosine-tied pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Fisher–Rao leaves the tie in place.
    Preserved,
    /// The first memory is strictly closer under Fisher–Rao.
    FirstWins,
    /// The second memory is strictly closer under Fisher–Rao.
    SecondWins,
}

/// Reports whether the Fisher–Rao distance orders a pair of memories that
/// cosine scores identically (precondition checked to 1e−12).
pub fn fisher_breaks_tie(
    q: &GaussianEmbedding,
    m_a: &GaussianEmbedding,
    m_b: &GaussianEmbedding,
) -> Result<TieBreak> {
    let ca = cosine_score(q.mu(), m_a.mu())?;
    let cb = cosine_score(q.mu(), m_b.mu())?;
    if (ca - cb).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "pair is not cosine-tied: {ca} vs {cb}"
        )));
    }
    let da = fisher_rao_distance(q, m_a)?;
    let db = fisher_rao_distance(q, m_b)?;
    Ok(if da < db {
        TieBreak::FirstWins
    } else if db < da {
        TieBreak::SecondWins
    } else {
        TieBreak::Preserved
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::{proptest, prop_assert, prop_assert_eq, prop_assume};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_gaussian(rng: &mut impl Rng, d: usize) -> GaussianEmbedding {
        let mu = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let var = (0..d).map(|_| rng.gen_range(0.05..3.0)).collect();
        GaussianEmbedding::new(mu, var).unwrap()
    }

    #[test]
    fn variance_floor_enforced_on_every_path() {
        let g = GaussianEmbedding::new(vec![0.0], vec![1e-12]).unwrap();
        assert_eq!(g.var()[0], VAR_FLOOR);
        let cfg = SimilarityConfig::for_dim(2);
        let e = estimate_variance(&[1.0, 2.0], &cfg).unwrap();
        assert!(e.var().iter().all(|&v| v >= VAR_FLOOR));
    }

    #[test]
    fn fisher_rao_examples() {
        let p = GaussianEmbedding::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(fisher_rao_distance(&p, &p).unwrap(), 0.0);

        // σ₁ = 1, σ₂ = e: (2 ln e)² = 4, distance 2
        let q = GaussianEmbedding::new(vec![0.0], vec![std::f64::consts::E.powi(2)]).unwrap();
        assert_relative_eq!(fisher_rao_distance(&p, &q).unwrap(), 2.0, epsilon = 1e-12);

        // unit gap, unit variances: sqrt(1/2)
        let r = GaussianEmbedding::new(vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(
            fisher_rao_distance(&p, &r).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fisher_rao_dimension_mismatch() {
        let p = GaussianEmbedding::new(vec![0.0], vec![1.0]).unwrap();
        let q = GaussianEmbedding::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(fisher_rao_distance(&p, &q).is_err());
    }

    #[test]
    fn identity_and_symmetry_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10_000 {
            let a = random_gaussian(&mut rng, 4);
            let b = random_gaussian(&mut rng, 4);
            assert_eq!(fisher_rao_distance(&a, &a).unwrap(), 0.0);
            let dab = fisher_rao_distance(&a, &b).unwrap();
            let dba = fisher_rao_distance(&b, &a).unwrap();
            assert_eq!(dab, dba);
            assert!(dab >= 0.0);
        }
    }

    #[test]
    fn closed_form_undercuts_triangle_through_high_variance_midpoints() {
        // The mean term gap²/(σ₁²+σ₂²) prices a long jump cheaply when the
        // waypoint has large variance, so the closed form is only an
        // approximation of the geodesic distance and is not globally a
        // metric. Pin one violating triple so the behavior is explicit.
        let p = GaussianEmbedding::new(vec![-2.0], vec![0.5]).unwrap();
        let q = GaussianEmbedding::new(vec![0.0], vec![2.0]).unwrap();
        let r = GaussianEmbedding::new(vec![2.0], vec![0.5]).unwrap();
        let direct = fisher_rao_distance(&p, &r).unwrap();
        let via_q =
            fisher_rao_distance(&p, &q).unwrap() + fisher_rao_distance(&q, &r).unwrap();
        assert!(direct > via_q + 0.2, "direct {direct} vs detour {via_q}");
    }

    #[test]
    fn product_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..500 {
            let a = random_gaussian(&mut rng, 8);
            let b = random_gaussian(&mut rng, 8);
            let full = fisher_rao_distance(&a, &b).unwrap();
            let mut acc = 0.0;
            for k in 0..8 {
                let ak = GaussianEmbedding::new(vec![a.mu()[k]], vec![a.var()[k]]).unwrap();
                let bk = GaussianEmbedding::new(vec![b.mu()[k]], vec![b.var()[k]]).unwrap();
                let dk = fisher_rao_distance(&ak, &bk).unwrap();
                acc += dk * dk;
            }
            assert_relative_eq!(full, acc.sqrt(), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn estimate_variance_examples() {
        let cfg = SimilarityConfig {
            temperature: 2.0,
            ramp_threshold: 10,
            sigma_min_sq: 0.1,
            sigma_max_sq: 1.0,
            eps_var: 1e-6,
        };
        // extreme axes
        let g = estimate_variance(&[1.0, 0.0], &cfg).unwrap();
        assert_relative_eq!(g.var()[0], 0.1 + 1e-6, epsilon = 1e-15);
        assert_relative_eq!(g.var()[1], 1.0 + 1e-6, epsilon = 1e-15);

        // ê = (0.6, 0.8)
        let g = estimate_variance(&[3.0, 4.0], &cfg).unwrap();
        assert_relative_eq!(g.var()[0], 0.325001, epsilon = 1e-9);
        assert_relative_eq!(g.var()[1], 0.100001, epsilon = 1e-9);
        assert_eq!(g.mu(), &[3.0, 4.0]);
    }

    #[test]
    fn estimate_variance_rejects_zero() {
        let cfg = SimilarityConfig::for_dim(2);
        assert!(matches!(
            estimate_variance(&[0.0, 0.0], &cfg),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn estimate_variance_scale_invariant() {
        let cfg = SimilarityConfig::for_dim(3);
        let e = [0.3, -1.2, 0.7];
        let base = estimate_variance(&e, &cfg).unwrap();
        for c in [0.001, 2.0, 1e6] {
            let scaled: Vec<f64> = e.iter().map(|x| x * c).collect();
            let g = estimate_variance(&scaled, &cfg).unwrap();
            for k in 0..3 {
                assert_relative_eq!(g.var()[k], base.var()[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fisher_score_examples() {
        let cfg = SimilarityConfig {
            temperature: 1.0,
            ..SimilarityConfig::for_dim(1)
        };
        let q = GaussianEmbedding::new(vec![0.0], vec![1.0]).unwrap();
        let same = GaussianEmbedding::new(vec![0.0], vec![0.5]).unwrap();
        assert_eq!(fisher_score(&q, &same, &cfg).unwrap(), 1.0);

        let m = GaussianEmbedding::new(vec![1.0], vec![1.0]).unwrap();
        assert_relative_eq!(
            fisher_score(&q, &m, &cfg).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );

        // halving the gapped dimension's variance strictly lowers the score
        let tighter = GaussianEmbedding::new(vec![1.0], vec![0.5]).unwrap();
        assert!(fisher_score(&q, &tighter, &cfg).unwrap() < fisher_score(&q, &m, &cfg).unwrap());
    }

    #[test]
    fn cosine_examples() {
        let u = [1.0, 2.0, -1.0];
        assert_relative_eq!(cosine_score(&u, &u).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            cosine_score(&[1.0, 0.0], &[0.0, 3.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        assert_relative_eq!(cosine_score(&u, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert!(cosine_score(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn effective_score_endpoints_bitwise() {
        let cfg = SimilarityConfig {
            temperature: 4.0,
            ramp_threshold: 10,
            ..SimilarityConfig::for_dim(4)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let q = random_gaussian(&mut rng, 4);
            let m = random_gaussian(&mut rng, 4);
            let at0 = effective_score(&q, &m, 0, &cfg).unwrap();
            assert_eq!(at0, cosine_score(q.mu(), m.mu()).unwrap());
            let at12 = effective_score(&q, &m, 12, &cfg).unwrap();
            assert_eq!(at12, fisher_score(&q, &m, &cfg).unwrap());
        }
    }

    #[test]
    fn effective_score_halfway_blend() {
        let cfg = SimilarityConfig {
            temperature: 1.0,
            ramp_threshold: 10,
            ..SimilarityConfig::for_dim(1)
        };
        let q = GaussianEmbedding::new(vec![1.0], vec![1.0]).unwrap();
        let m = GaussianEmbedding::new(vec![2.0], vec![1.0]).unwrap();
        let cos = cosine_score(q.mu(), m.mu()).unwrap();
        let fr = fisher_score(&q, &m, &cfg).unwrap();
        let half = effective_score(&q, &m, 5, &cfg).unwrap();
        assert_relative_eq!(half, 0.5 * cos + 0.5 * fr, epsilon = 1e-15);
    }

    #[test]
    fn tie_preserved_for_identical_manifold_points() {
        let q = GaussianEmbedding::new(vec![1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let m = GaussianEmbedding::new(vec![0.5, 0.5], vec![0.3, 0.7]).unwrap();
        assert_eq!(
            fisher_breaks_tie(&q, &m, &m.clone()).unwrap(),
            TieBreak::Preserved
        );
    }

    #[test]
    fn tie_precondition_enforced() {
        let q = GaussianEmbedding::isotropic(vec![1.0, 0.0]).unwrap();
        let a = GaussianEmbedding::isotropic(vec![1.0, 0.1]).unwrap();
        let b = GaussianEmbedding::isotropic(vec![0.1, 1.0]).unwrap();
        assert!(fisher_breaks_tie(&q, &a, &b).is_err());
    }

    #[test]
    fn tie_broken_toward_low_variance_on_matching_dims() {
        // Equal means give an exact cosine tie; m_b is tighter on the
        // zero-gap dimensions, so Fisher–Rao must rank it closer.
        let q = GaussianEmbedding::new(vec![1.0, 0.2, -0.4], vec![0.1, 1.0, 1.0]).unwrap();
        let mu = vec![1.0, 0.9, 0.3]; // gap 0 on dim 0 only
        let m_a = GaussianEmbedding::new(mu.clone(), vec![0.9, 0.5, 0.5]).unwrap();
        let m_b = GaussianEmbedding::new(mu, vec![0.2, 0.5, 0.5]).unwrap();
        assert_eq!(fisher_breaks_tie(&q, &m_a, &m_b).unwrap(), TieBreak::SecondWins);
    }

    #[test]
    fn heteroscedastic_ties_break_when_condition_nonzero() {
        // Brute-force the discrimination condition and check agreement with
        // the distance ordering on equal-mean pairs.
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut broken = 0;
        for _ in 0..500 {
            let d = 6;
            let q = random_gaussian(&mut rng, d);
            let mu: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let var_a: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..2.0)).collect();
            let var_b: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..2.0)).collect();
            let m_a = GaussianEmbedding::new(mu.clone(), var_a).unwrap();
            let m_b = GaussianEmbedding::new(mu, var_b).unwrap();

            let mut condition = 0.0;
            for k in 0..d {
                let log_ratio = (m_a.var()[k] / m_b.var()[k]).ln();
                let gap = q.mu()[k] - m_a.mu()[k];
                condition += log_ratio * log_ratio
                    + gap * gap
                        * (1.0 / (q.var()[k] + m_a.var()[k])
                            - 1.0 / (q.var()[k] + m_b.var()[k]));
            }
            let outcome = fisher_breaks_tie(&q, &m_a, &m_b).unwrap();
            if condition.abs() > 1e-12 {
                assert_ne!(outcome, TieBreak::Preserved);
                broken += 1;
            }
        }
        assert!(broken > 450, "expected nearly all random pairs to break");
    }

    proptest! {
        #[test]
        fn fisher_score_in_unit_interval(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_gaussian(&mut rng, 5);
            let m = random_gaussian(&mut rng, 5);
            let cfg = SimilarityConfig::for_dim(5);
            let s = fisher_score(&q, &m, &cfg).unwrap();
            prop_assert!(s > 0.0 && s <= 1.0);
        }

        #[test]
        fn estimate_variance_satisfies_invariants(seed in 0u64..300) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = rng.gen_range(1usize..16);
            let e: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            prop_assume!(e.iter().any(|&x| x != 0.0));
            let cfg = SimilarityConfig::for_dim(d);
            let g = estimate_variance(&e, &cfg).unwrap();
            prop_assert_eq!(g.dim(), d);
            for &v in g.var() {
                prop_assert!(v >= VAR_FLOOR && v <= cfg.sigma_max_sq + cfg.eps_var + 1e-12);
            }
        }
    }
}

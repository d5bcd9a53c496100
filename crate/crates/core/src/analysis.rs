//! Numerical scale-analysis toolkit: spherical-cap concentration, cosine
//! SNR, contradiction-count growth, progressive-disclosure depth, and the
//! log-sum-exp associative energy. Analysis only — nothing here feeds
//! retrieval scores.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Fraction of the unit sphere within cosine tolerance ε of a fixed
/// direction (1 − ⟨q,v⟩ ≤ ε), as ½·I_{ε(2−ε)}((d−1)/2, ½) with the
/// symmetric completion past the hemisphere.
pub fn cap_fraction(d: usize, eps: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument("cap_fraction needs d ≥ 2".into()));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::InvalidArgument("cap_fraction needs ε ∈ (0, 2]".into()));
    }
    let x = eps * (2.0 - eps);
    let half_cap = 0.5 * beta_reg((d as f64 - 1.0) / 2.0, 0.5, x.min(1.0));
    Ok(if eps <= 1.0 { half_cap } else { 1.0 - half_cap })
}

/// Expected number of uniformly random sphere points inside the ε-cap of a
/// query, out of N.
pub fn expected_neighbor_count(n: u64, d: usize, eps: f64) -> Result<f64> {
    Ok(n as f64 * cap_fraction(d, eps)?)
}

/// Signal-to-noise ratio of a top-K ranking when K_rel memories are
/// genuinely relevant: K_rel / max(K_rel, E[C_ε]).
pub fn cosine_snr(n: u64, k_rel: u64, d: usize, eps: f64) -> Result<f64> {
    if k_rel < 1 {
        return Err(Error::InvalidArgument("cosine_snr needs K_rel ≥ 1".into()));
    }
    let crowd = expected_neighbor_count(n, d, eps)?;
    Ok(k_rel as f64 / (k_rel as f64).max(crowd))
}

/// Expected undetected contradictions among N memories with per-pair
/// probability p_c: N(N−1)/2 · p_c.
pub fn expected_contradictions(n: u64, p_c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::InvalidArgument("p_c must lie in [0, 1]".into()));
    }
    Ok(n as f64 * (n as f64 - 1.0) / 2.0 * p_c)
}

/// Progressive-disclosure depth log N / (2 log r) for distortion-reduction
/// ratio r per level.
pub fn optimal_depth(n: u64, r: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("optimal_depth needs N ≥ 1".into()));
    }
    if r <= 1.0 {
        return Err(Error::InvalidArgument("optimal_depth needs r > 1".into()));
    }
    Ok((n as f64).ln() / (2.0 * r.ln()))
}

fn check_patterns(patterns: &[Vec<f64>], xi: &[f64]) -> Result<()> {
    if patterns.is_empty() {
        return Err(Error::InvalidArgument("empty pattern set".into()));
    }
    for p in patterns {
        if p.len() != xi.len() {
            return Err(Error::DimensionMismatch {
                expected: xi.len(),
                got: p.len(),
            });
        }
    }
    Ok(())
}

/// log-sum-exp with inverse temperature: (1/β) ln Σ exp(β z_i).
fn lse(beta: f64, z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + (z.iter().map(|&zi| ((zi - m) * beta).exp()).sum::<f64>()).ln() / beta
}

/// Associative energy −lse(β, Xᵀξ) + ½ξᵀξ + (1/β)ln M + ½ max_i ‖x_i‖².
pub fn hopfield_energy(patterns: &[Vec<f64>], xi: &[f64], beta: f64) -> Result<f64> {
    check_patterns(patterns, xi)?;
    if beta <= 0.0 {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    let dots: Vec<f64> = patterns
        .iter()
        .map(|p| p.iter().zip(xi).map(|(a, b)| a * b).sum())
        .collect();
    let xi_sq: f64 = xi.iter().map(|x| x * x).sum();
    let max_sq = patterns
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>())
        .fold(0.0f64, f64::max);
    let m = patterns.len() as f64;
    Ok(-lse(beta, &dots) + 0.5 * xi_sq + m.ln() / beta + 0.5 * max_sq)
}

/// One retrieval iteration ξ ↦ X softmax(β Xᵀξ); the result lies in the
/// convex hull of the pattern columns.
pub fn hopfield_update(patterns: &[Vec<f64>], xi: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_patterns(patterns, xi)?;
    if beta <= 0.0 {
        return Err(Error::InvalidArgument("beta must be positive".into()));
    }
    let dots: Vec<f64> = patterns
        .iter()
        .map(|p| p.iter().zip(xi).map(|(a, b)| a * b).sum())
        .collect();
    let m = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = dots.iter().map(|&z| ((z - m) * beta).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; xi.len()];
    for (p, w) in patterns.iter().zip(&weights) {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x * w / total;
        }
    }
    Ok(out)
}

/// Monte Carlo estimate of the ε-cap fraction on S^{d−1}; the test oracle
/// for `cap_fraction`.
pub fn cap_fraction_monte_carlo(d: usize, eps: f64, samples: u64, seed: u64) -> f64 {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // cos against the fixed query e₁
        let cos = v[0] / norm;
        if 1.0 - cos <= eps {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hemisphere_is_exactly_half() {
        assert_eq!(cap_fraction(3, 1.0).unwrap(), 0.5);
        assert_eq!(cap_fraction(128, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn full_sphere_is_one() {
        assert_relative_eq!(cap_fraction(5, 2.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_three_closed_form() {
        // on S², the cap fraction is (1 − cos θ)/2 = ε/2
        for eps in [0.1, 0.3, 0.7, 1.3, 1.9] {
            assert_relative_eq!(cap_fraction(3, eps).unwrap(), eps / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn strictly_decreasing_in_dimension() {
        for eps in [0.1, 0.5, 0.9] {
            let mut last = f64::INFINITY;
            for d in [2, 4, 8, 16, 64, 256] {
                let f = cap_fraction(d, eps).unwrap();
                assert!(f < last, "d={d} eps={eps}: {f} !< {last}");
                last = f;
            }
        }
    }

    #[test]
    fn monte_carlo_agreement_smoke() {
        let d = 8;
        let eps = 0.3;
        let samples = 200_000u64;
        let formula = cap_fraction(d, eps).unwrap();
        let mc = cap_fraction_monte_carlo(d, eps, samples, 99);
        let se = (formula * (1.0 - formula) / samples as f64).sqrt();
        assert!(
            (mc - formula).abs() <= 3.0 * se,
            "formula {formula} vs MC {mc} (3σ = {})",
            3.0 * se
        );
    }

    #[test]
    fn domain_errors() {
        assert!(cap_fraction(1, 0.5).is_err());
        assert!(cap_fraction(4, 0.0).is_err());
        assert!(cap_fraction(4, 2.5).is_err());
        assert!(cosine_snr(10, 0, 4, 0.5).is_err());
        assert!(optimal_depth(0, 2.0).is_err());
        assert!(optimal_depth(4, 1.0).is_err());
        assert!(expected_contradictions(10, 1.5).is_err());
    }

    #[test]
    fn neighbor_count_scaling() {
        assert_eq!(expected_neighbor_count(0, 8, 0.3).unwrap(), 0.0);
        let one = expected_neighbor_count(1_000, 8, 0.3).unwrap();
        let ten = expected_neighbor_count(10_000, 8, 0.3).unwrap();
        assert_relative_eq!(ten, 10.0 * one, epsilon = 1e-9);
    }

    #[test]
    fn snr_behaviour() {
        // crowd below K_rel: everything relevant
        assert_eq!(cosine_snr(10, 5, 256, 0.1).unwrap(), 1.0);
        // monotone non-increasing in N
        let mut last = f64::INFINITY;
        for n in [1_000u64, 10_000, 100_000, 1_000_000] {
            let snr = cosine_snr(n, 5, 8, 0.3).unwrap();
            assert!(snr <= last);
            last = snr;
        }
        // asymptotically halves when N doubles
        let a = cosine_snr(1_000_000, 5, 8, 0.3).unwrap();
        let b = cosine_snr(2_000_000, 5, 8, 0.3).unwrap();
        assert_relative_eq!(a / b, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn contradiction_count_examples() {
        assert_eq!(expected_contradictions(1, 0.5).unwrap(), 0.0);
        let n = 100_000u64;
        let v = expected_contradictions(n, 1e-6).unwrap();
        assert_relative_eq!(v, 4_999.95, epsilon = 1e-9);
        // quadratic growth
        let big = expected_contradictions(2 * n, 1e-6).unwrap();
        assert_relative_eq!(big / v, 4.0, epsilon = 1e-4);
    }

    #[test]
    fn depth_examples() {
        assert_eq!(optimal_depth(1, 2.0).unwrap(), 0.0);
        assert_relative_eq!(optimal_depth(16, 2.0).unwrap(), 2.0, epsilon = 1e-12);
        // doubling N adds 1/(2 log₂ r) levels
        let r = 3.0f64;
        let d1 = optimal_depth(1_000, r).unwrap();
        let d2 = optimal_depth(2_000, r).unwrap();
        assert_relative_eq!(d2 - d1, 2.0f64.ln() / (2.0 * r.ln()), epsilon = 1e-12);
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn hopfield_energy_single_stored_pattern_is_zero() {
        let x1 = unit(vec![1.0, 2.0, -1.0]);
        let e = hopfield_energy(&[x1.clone()], &x1, 2.0).unwrap();
        assert_relative_eq!(e, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hopfield_energy_permutation_invariant() {
        let a = unit(vec![1.0, 0.0, 0.0]);
        let b = unit(vec![0.0, 1.0, 0.5]);
        let c = unit(vec![0.3, -0.2, 0.8]);
        let xi = unit(vec![0.5, 0.5, 0.1]);
        let e1 = hopfield_energy(&[a.clone(), b.clone(), c.clone()], &xi, 4.0).unwrap();
        let e2 = hopfield_energy(&[c, a, b], &xi, 4.0).unwrap();
        assert_relative_eq!(e1, e2, epsilon = 1e-12);
    }

    #[test]
    fn hopfield_energy_rejects_empty() {
        assert!(hopfield_energy(&[], &[1.0], 1.0).is_err());
    }

    #[test]
    fn hopfield_update_singleton_returns_pattern() {
        let x1 = unit(vec![0.2, -0.9, 0.1]);
        let out = hopfield_update(&[x1.clone()], &[5.0, 5.0, 5.0], 1.0).unwrap();
        for (o, x) in out.iter().zip(&x1) {
            assert_relative_eq!(o, x, epsilon = 1e-12);
        }
    }

    #[test]
    fn hopfield_update_beta_zero_limit_is_mean() {
        let a = vec![1.0, 0.0];
        let b = vec![0.0, 1.0];
        let out = hopfield_update(&[a, b], &[0.3, 0.7], 1e-9).unwrap();
        assert_relative_eq!(out[0], 0.5, epsilon = 1e-6);
        assert_relative_eq!(out[1], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn hopfield_update_concentrates_at_high_beta() {
        // pairwise inner products ≤ 0.5, β = 50: starting at a pattern stays
        // within 1e−6 of it
        let pats = vec![
            unit(vec![1.0, 0.2, 0.0, 0.0]),
            unit(vec![0.0, 1.0, 0.2, 0.0]),
            unit(vec![0.0, 0.0, 1.0, 0.2]),
        ];
        for p in &pats {
            let out = hopfield_update(&pats, p, 50.0).unwrap();
            let dist: f64 = out
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(dist < 1e-6, "drifted {dist}");
        }
    }

    #[test]
    fn hopfield_iteration_contracts_near_fixed_points() {
        let pats = vec![
            unit(vec![1.0, 0.1, 0.0]),
            unit(vec![0.0, 1.0, 0.1]),
            unit(vec![0.1, 0.0, 1.0]),
        ];
        let beta = 8.0;
        let step = |v: &[f64]| hopfield_update(&pats, v, beta).unwrap();
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
        };
        // two iterations from a stored pattern move less than one iteration
        // from a far-away point
        let from_pattern = {
            let once = step(&pats[0]);
            let twice = step(&once);
            dist(&twice, &once)
        };
        let from_random = {
            let start = unit(vec![0.5, -0.4, 0.77]);
            let once = step(&start);
            dist(&once, &start)
        };
        assert!(from_pattern < from_random);
    }

    #[test]
    fn hopfield_energy_bound_for_stored_patterns() {
        let pats = vec![
            unit(vec![1.0, 0.1, 0.0, 0.0]),
            unit(vec![0.0, 1.0, 0.1, 0.0]),
            unit(vec![0.0, 0.1, 1.0, 0.3]),
        ];
        let beta = 10.0;
        let m = pats.len() as f64;
        for p in &pats {
            let e = hopfield_energy(&pats, p, beta).unwrap();
            assert!(e <= m.ln() / beta + 0.05, "energy {e} above bound");
        }
    }
}

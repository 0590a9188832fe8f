//! The symbol body `K` in `R^n` and its moment integrals
//! `int_K prod_k |xi_{j_k}|^2 |dxi|`.

use crate::logreal::LogReal;
use crate::special::{ball_volume, lgamma, unit_sphere_area};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BodyError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("need 0 < c_inner <= d_outer, got ({0}, {1})")]
    BadSandwich(f64, f64),
    #[error("multi-index entry {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("rejection sampler acceptance rate below 1e-4; degenerate body")]
    DegenerateBody,
}

/// Membership rule for a non-ball body; also its rejection sampler.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// The body is the full ball of this radius.
    Ball { radius: f64 },
    /// Spherical shell `inner <= |xi| <= outer`.
    Shell { inner: f64, outer: f64 },
}

impl Sampler {
    fn contains(&self, xi: &[f64]) -> bool {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        match *self {
            Sampler::Ball { radius } => r2 <= radius * radius,
            Sampler::Shell { inner, outer } => r2 >= inner * inner && r2 <= outer * outer,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case", tag = "kind", content = "params")]
pub enum BodyKind {
    Ball { radius: f64 },
    /// `B(0, c_inner) <= K <= B(0, d_outer)` with explicit membership.
    AnnulusBounded { c_inner: f64, d_outer: f64, sampler: Sampler },
}

/// The compact `K = {sigma_P <= 1}`, abstracted as a radially bounded body,
/// symmetric about the origin.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SymbolBody {
    pub n: usize,
    #[serde(flatten)]
    pub kind: BodyKind,
}

impl SymbolBody {
    pub fn ball(n: usize, radius: f64) -> Result<Self, BodyError> {
        if n == 0 {
            return Err(BodyError::ZeroDimension);
        }
        if radius <= 0.0 {
            return Err(BodyError::BadRadius(radius));
        }
        Ok(SymbolBody { n, kind: BodyKind::Ball { radius } })
    }

    pub fn annulus_bounded(
        n: usize,
        c_inner: f64,
        d_outer: f64,
        sampler: Sampler,
    ) -> Result<Self, BodyError> {
        if n == 0 {
            return Err(BodyError::ZeroDimension);
        }
        if !(0.0 < c_inner && c_inner <= d_outer) {
            return Err(BodyError::BadSandwich(c_inner, d_outer));
        }
        Ok(SymbolBody { n, kind: BodyKind::AnnulusBounded { c_inner, d_outer, sampler } })
    }

    /// `(nu(K), d(K))`: total measure and sup-norm radius.
    pub fn extents(&self) -> (LogReal, f64) {
        match &self.kind {
            BodyKind::Ball { radius } => (ball_volume(self.n, *radius), *radius),
            BodyKind::AnnulusBounded { d_outer, sampler, .. } => {
                let nu = match *sampler {
                    Sampler::Ball { radius } => ball_volume(self.n, radius),
                    Sampler::Shell { inner, outer } => {
                        // vol(outer ball) - vol(inner ball), in plain arithmetic
                        let vo = ball_volume(self.n, outer).value();
                        let vi = ball_volume(self.n, inner).value();
                        LogReal::from_value(vo - vi)
                    }
                };
                (nu, *d_outer)
            }
        }
    }

    fn contains(&self, xi: &[f64]) -> bool {
        match &self.kind {
            BodyKind::Ball { radius } => {
                xi.iter().map(|x| x * x).sum::<f64>() <= radius * radius
            }
            BodyKind::AnnulusBounded { sampler, .. } => sampler.contains(xi),
        }
    }
}

/// Coordinate tuple `(j_1, ..., j_i)` with entries in `1..=n`, possibly empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn validate(&self, n: usize) -> Result<(), BodyError> {
        for &j in &self.0 {
            if j == 0 || j > n {
                return Err(BodyError::IndexOutOfRange(j, n));
            }
        }
        Ok(())
    }

    /// Per-coordinate squared-factor exponents: coordinate `j` appearing `m`
    /// times contributes `xi_j^{2m}`.
    fn even_exponents(&self, n: usize) -> Vec<u32> {
        let mut e = vec![0u32; n];
        for &j in &self.0 {
            e[j - 1] += 2;
        }
        e
    }
}

/// `int_{B(0,r)} prod_k xi_{j_k}^2 dxi`, exactly, via the Gamma-function
/// formula for monomial integrals over balls:
/// `int_{B(0,1)} prod |x_j|^{p_j} dx = prod Gamma((p_j+1)/2) / Gamma((n+|p|)/2+1)`.
pub fn ball_moment(n: usize, r: f64, idx: &MultiIndex) -> Result<LogReal, BodyError> {
    if n == 0 {
        return Err(BodyError::ZeroDimension);
    }
    if r <= 0.0 {
        return Err(BodyError::BadRadius(r));
    }
    idx.validate(n)?;
    let exps = idx.even_exponents(n);
    let total: u32 = exps.iter().sum();
    let mut ln = 0.0;
    for &p in &exps {
        ln += lgamma((p as f64 + 1.0) / 2.0);
    }
    ln -= lgamma((n as f64 + total as f64) / 2.0 + 1.0);
    ln += (n as f64 + total as f64) * r.ln();
    Ok(LogReal::from_ln(ln))
}

/// `int_{B(0,r)} |xi|^{2i} dxi = Vol(S^{n-1}) r^{n+2i} / (n+2i)`.
///
/// Equals the ordered-tuple sum `sum_{(j_1..j_i)} ball_moment(...)`, since
/// `sum_tuples prod_k xi_{j_k}^2 = |xi|^{2i}`.
pub fn ball_radial_moment(n: usize, r: f64, i: u32) -> LogReal {
    let p = n as f64 + 2.0 * i as f64;
    unit_sphere_area(n) * LogReal::from_ln(p * r.ln() - p.ln())
}

/// `int_{B(0,r)} xi_j^2 |xi|^{2i} dxi = (1/n) int |xi|^{2(i+1)}` by symmetry.
pub fn ball_radial_moment_weighted(n: usize, r: f64, i: u32) -> LogReal {
    ball_radial_moment(n, r, i + 1) / LogReal::from_value(n as f64)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-chunk sub-seed so results are independent of how chunks are scheduled.
pub fn chunk_seed(master: u64, chunk: u64) -> u64 {
    splitmix64(master ^ splitmix64(chunk))
}

const MC_CHUNK: usize = 4096;

/// Monte Carlo estimate of `int_K prod_k xi_{j_k}^2 dxi` by rejection sampling
/// in the bounding box `[-d, d]^n`. Deterministic given the seed.
pub fn moment_mc(
    body: &SymbolBody,
    idx: &MultiIndex,
    samples: usize,
    seed: u64,
) -> Result<(LogReal, f64), BodyError> {
    idx.validate(body.n)?;
    let (_, d) = body.extents();
    let box_vol = (2.0 * d).powi(body.n as i32);
    let exps = idx.even_exponents(body.n);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut accepted = 0usize;
    let chunks = samples.div_ceil(MC_CHUNK);
    let mut xi = vec![0.0f64; body.n];
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(chunk_seed(seed, chunk as u64));
        let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
        for _ in 0..count {
            for x in xi.iter_mut() {
                *x = rng.gen_range(-d..d);
            }
            let v = if body.contains(&xi) {
                accepted += 1;
                let mut m = 1.0;
                for (x, &p) in xi.iter().zip(&exps) {
                    if p > 0 {
                        m *= x.powi(p as i32);
                    }
                }
                m
            } else {
                0.0
            };
            sum += v;
            sum_sq += v * v;
        }
    }
    let nf = samples as f64;
    if (accepted as f64) / nf < 1e-4 {
        return Err(BodyError::DegenerateBody);
    }
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    let stderr = box_vol * (var / nf).sqrt();
    Ok((LogReal::from_value(box_vol * mean), stderr))
}

/// MC estimate of `int_K |xi|^{2i} dxi` (and the `xi_j^2`-weighted variant),
/// used by the `rho`/`theta` infima for non-ball bodies.
pub fn radial_moment_mc(
    body: &SymbolBody,
    i: u32,
    weight_coord: Option<usize>,
    samples: usize,
    seed: u64,
) -> Result<(LogReal, f64), BodyError> {
    let (_, d) = body.extents();
    let box_vol = (2.0 * d).powi(body.n as i32);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut accepted = 0usize;
    let chunks = samples.div_ceil(MC_CHUNK);
    let mut xi = vec![0.0f64; body.n];
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(chunk_seed(seed, chunk as u64));
        let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
        for _ in 0..count {
            for x in xi.iter_mut() {
                *x = rng.gen_range(-d..d);
            }
            let v = if body.contains(&xi) {
                accepted += 1;
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                let w = weight_coord.map_or(1.0, |j| xi[j - 1] * xi[j - 1]);
                w * r2.powi(i as i32)
            } else {
                0.0
            };
            sum += v;
            sum_sq += v * v;
        }
    }
    let nf = samples as f64;
    if (accepted as f64) / nf < 1e-4 {
        return Err(BodyError::DegenerateBody);
    }
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    Ok((LogReal::from_value(box_vol * mean), box_vol * (var / nf).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_moment_basic_values() {
        // volume of [-1,1]
        let v = ball_moment(1, 1.0, &MultiIndex::empty()).unwrap();
        assert!((v.value() - 2.0).abs() < 1e-12);
        // area of the unit disc
        let v = ball_moment(2, 1.0, &MultiIndex::empty()).unwrap();
        assert!((v.value() - PI).abs() < 1e-12);
        // polar oracle: int_B xi_1^2 = (1/2) * 2pi * int_0^1 rho^3 drho = pi/4
        let v = ball_moment(2, 1.0, &MultiIndex(vec![1])).unwrap();
        assert!((v.value() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn ball_moment_rejects_bad_input() {
        assert!(ball_moment(0, 1.0, &MultiIndex::empty()).is_err());
        assert!(ball_moment(2, 0.0, &MultiIndex::empty()).is_err());
        assert!(ball_moment(2, 1.0, &MultiIndex(vec![3])).is_err());
    }

    #[test]
    fn radial_moment_equals_tuple_sum() {
        // sum over ordered tuples of ball_moment == int |xi|^{2i}
        for n in 1..=3usize {
            for i in 0..=3u32 {
                let mut sum = LogReal::ZERO;
                let tuples = (n as u64).pow(i);
                for t in 0..tuples {
                    let mut idx = Vec::new();
                    let mut rem = t;
                    for _ in 0..i {
                        idx.push((rem % n as u64) as usize + 1);
                        rem /= n as u64;
                    }
                    sum = sum + ball_moment(n, 1.3, &MultiIndex(idx)).unwrap();
                }
                let direct = ball_radial_moment(n, 1.3, i);
                assert!(
                    (sum.ln() - direct.ln()).abs() < 1e-10,
                    "n={n} i={i}: {} vs {}",
                    sum.ln(),
                    direct.ln()
                );
            }
        }
    }

    #[test]
    fn mc_matches_closed_form() {
        let b = SymbolBody::ball(2, 1.0).unwrap();
        let (est, se) = moment_mc(&b, &MultiIndex::empty(), 1_000_000, 42).unwrap();
        assert!((est.value() - PI).abs() < 3.0 * se, "{} +- {}", est.value(), se);
        let (est, se) = moment_mc(&b, &MultiIndex(vec![1]), 1_000_000, 43).unwrap();
        assert!((est.value() - PI / 4.0).abs() < 3.0 * se);
        let b3 = SymbolBody::ball(3, 2.0).unwrap();
        let exact = ball_moment(3, 2.0, &MultiIndex(vec![1, 1])).unwrap().value();
        let (est, se) = moment_mc(&b3, &MultiIndex(vec![1, 1]), 1_000_000, 44).unwrap();
        assert!((est.value() - exact).abs() < 3.0 * se);
    }

    #[test]
    fn mc_statistical_coverage() {
        // |closed form - MC| <= 4 stderr in >= 99% of seeds
        let b = SymbolBody::ball(2, 1.0).unwrap();
        let exact = ball_moment(2, 1.0, &MultiIndex(vec![1])).unwrap().value();
        let mut hits = 0;
        for seed in 0..100u64 {
            let (est, se) = moment_mc(&b, &MultiIndex(vec![1]), 20_000, seed).unwrap();
            if (est.value() - exact).abs() <= 4.0 * se {
                hits += 1;
            }
        }
        assert!(hits >= 99, "only {hits}/100 seeds within 4 stderr");
    }

    #[test]
    fn mc_deterministic() {
        let b = SymbolBody::ball(2, 1.0).unwrap();
        let a = moment_mc(&b, &MultiIndex::empty(), 50_000, 7).unwrap();
        let c = moment_mc(&b, &MultiIndex::empty(), 50_000, 7).unwrap();
        assert_eq!(a.0.ln(), c.0.ln());
    }

    #[test]
    fn extents() {
        let (nu, d) = SymbolBody::ball(2, 1.0).unwrap().extents();
        assert!((nu.value() - PI).abs() < 1e-12 && d == 1.0);
        let (nu, d) = SymbolBody::ball(1, 1.0).unwrap().extents();
        assert!((nu.value() - 2.0).abs() < 1e-12 && d == 1.0);
        let b = SymbolBody::annulus_bounded(2, 1.0, 2.0, Sampler::Ball { radius: 2.0 }).unwrap();
        let (nu, d) = b.extents();
        assert!((nu.value() - 4.0 * PI).abs() < 1e-12 && d == 2.0);
    }

    #[test]
    fn serde_roundtrip() {
        let b = SymbolBody::ball(3, 1.5).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<SymbolBody>(&s).unwrap(), b);
        let a = SymbolBody::annulus_bounded(2, 0.5, 2.0, Sampler::Shell { inner: 0.5, outer: 2.0 })
            .unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<SymbolBody>(&s).unwrap(), a);
    }

    proptest! {
        #[test]
        fn moment_scales_and_permutes(r in 0.1f64..5.0, lambda in 0.5f64..3.0) {
            // r^{n+2i} scaling, exact in log domain
            let idx = MultiIndex(vec![1, 2]);
            let m1 = ball_moment(3, r, &idx).unwrap();
            let m2 = ball_moment(3, lambda * r, &idx).unwrap();
            let expect = m1.ln() + (3.0 + 4.0) * lambda.ln();
            prop_assert!((m2.ln() - expect).abs() < 1e-9);
            // permutation invariance
            let p = ball_moment(3, r, &MultiIndex(vec![2, 1])).unwrap();
            prop_assert!((m1.ln() - p.ln()).abs() < 1e-12);
            // monotone in r
            prop_assert!(ball_moment(3, r + 0.1, &idx).unwrap() > m1);
        }
    }
}

//! Closed-form truncation bounds (sup, gradient, L2) and the L2-norm bound
//! for the product-of-spheres barriers.

use super::gauss_poly::{make_product_spheres_poly, GaussPoly, LocalModelError};
use crate::logreal::LogReal;
use crate::quad::gauss_legendre_on;
use serde::{Deserialize, Serialize};

/// The three truncation-error bounds at `a = c/(2 eta)`:
///
/// * `sup`:    `sqrt(floor(n/2+1)) a^{(n-2)/2} e^{-a^2/4} sum |a_I| sqrt(I!)`
/// * `grad`:   `sqrt(floor(n/2+3)) a^{n/2}     e^{-a^2/4} sum |a_I| sqrt(I!)`
/// * `l2_sq`:  `sqrt(2 pi)^n N(Q) (sum a_I^2 I!) e^{-a^2/2}` (bound on the
///   squared L2 norm of the error)
///
/// held as LogReals: at `a = 96` the values are far below f64 range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Prop3Bounds {
    pub sup: LogReal,
    pub grad: LogReal,
    pub l2_sq: LogReal,
}

pub fn prop3_bounds(q: &GaussPoly, c: f64, eta: f64) -> Result<Prop3Bounds, LocalModelError> {
    let a = c / (2.0 * eta);
    if a < 1.0 {
        return Err(LocalModelError::CutoffTooTight(a));
    }
    let n = q.n as f64;
    let k = (q.n / 2 + 1) as f64;
    let kg = (q.n / 2 + 3) as f64;
    let ln_coeff = q.sum_abs_sqrt_fact().ln();
    let sup = LogReal::from_ln(0.5 * k.ln() + (n - 2.0) / 2.0 * a.ln() - a * a / 4.0 + ln_coeff);
    let grad = LogReal::from_ln(0.5 * kg.ln() + n / 2.0 * a.ln() - a * a / 4.0 + ln_coeff);
    let l2_sq = LogReal::from_ln(
        0.5 * n * (2.0 * std::f64::consts::PI).ln()
            + (q.num_terms() as f64).ln()
            + q.sum_sq_fact().ln()
            - a * a / 2.0,
    );
    Ok(Prop3Bounds { sup, grad, l2_sq })
}

/// `int_R t^p e^{-t^2} dt` by 1-D Gauss-Legendre (numeric leg of lemma6_check).
fn gauss_moment_quad(p: u32) -> f64 {
    if p % 2 == 1 {
        return 0.0;
    }
    let (xs, ws) = gauss_legendre_on(160, -10.0, 10.0);
    xs.iter().zip(&ws).map(|(&x, &w)| w * x.powi(p as i32) * (-x * x).exp()).sum()
}

/// `||q_i||_{L2(R^n)}` by tensor quadrature (separated per axis through the
/// Gaussian-moment factorization of `Q_i^2 e^{-|x|^2}`), against the bound
/// `sqrt(3/2) pi^{n/4} (n+6)^2`.
pub fn lemma6_check(n: usize, i: usize) -> Result<(f64, f64), LocalModelError> {
    let q = make_product_spheres_poly(n, i)?;
    let pmax = 2 * q.degree();
    let gamma: Vec<f64> = (0..=pmax).map(gauss_moment_quad).collect();
    let mut sq = 0.0;
    for (ei, &ai) in &q.coeffs {
        for (ej, &aj) in &q.coeffs {
            let mut prod = ai * aj;
            for d in 0..n {
                prod *= gamma[(ei[d] + ej[d]) as usize];
            }
            sq += prod;
        }
    }
    let numeric = sq.max(0.0).sqrt();
    let bound = 1.5f64.sqrt() * std::f64::consts::PI.powf(n as f64 / 4.0)
        * ((n + 6) as f64).powi(2);
    Ok((numeric, bound))
}

/// The Corollary-4 L2 bound for the rescaled truncation:
/// `||q_{i,c}||_{L2} <= (3/2) pi^{n/4} (n+6)^2 / eta^{n/2}`.
pub fn cor4_l2_bound(n: usize, eta: f64) -> f64 {
    1.5 * std::f64::consts::PI.powf(n as f64 / 4.0) * ((n + 6) as f64).powi(2)
        / eta.powf(n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_model::truncate::{BandLimited, TruncationSpec};
    use crate::special::lgamma;

    #[test]
    fn rejects_tight_cutoff() {
        let q = make_product_spheres_poly(2, 0).unwrap();
        assert!(prop3_bounds(&q, 1.0, 1.0).is_err()); // a = 1/2
        assert!(prop3_bounds(&q, 2.0, 1.0).is_ok()); // a = 1
    }

    #[test]
    fn cor4_sup_bound_value() {
        // (q_0, n=2, eta=c/96): sup_bound <= 36 e^{-288}
        let q = make_product_spheres_poly(2, 0).unwrap();
        let b = prop3_bounds(&q, 1.0, 1.0 / 96.0).unwrap();
        let coarse = 36f64.ln() - 288.0;
        assert!(b.sup.ln() <= coarse, "{} vs {}", b.sup.ln(), coarse);
        // term-by-term oracle: sqrt(2) * 48^0 * e^{-576} * sum|a_I|sqrt(I!)
        let expect = 0.5 * 2f64.ln() - 576.0 + q.sum_abs_sqrt_fact().ln();
        assert!((b.sup.ln() - expect).abs() < 1e-12);
    }

    #[test]
    fn bounds_monotone_in_ratio() {
        let q = make_product_spheres_poly(2, 0).unwrap();
        let mut prev: Option<Prop3Bounds> = None;
        for &a in &[1.0, 2.0, 4.0, 8.0, 48.0, 96.0] {
            let b = prop3_bounds(&q, 2.0 * a, 1.0).unwrap();
            if let Some(p) = prev {
                assert!(b.sup < p.sup && b.grad < p.grad && b.l2_sq < p.l2_sq);
            }
            prev = Some(b);
        }
    }

    #[test]
    fn empirical_sup_below_bound_1d() {
        // n=1, c/2eta = 2, grid of 2001 points on [-8, 8]
        let mut q = GaussPoly::new(1);
        q.add_term(vec![4], 1.0);
        q.add_term(vec![2], -4.0);
        q.add_term(vec![0], 3.0);
        let bl = BandLimited::new(q.clone(), TruncationSpec::new(4.0, 1.0), 8.0).unwrap();
        let b = prop3_bounds(&q, 4.0, 1.0).unwrap();
        let mut sup = 0.0f64;
        for i in 0..2001 {
            let x = -8.0 + 16.0 * i as f64 / 2000.0;
            sup = sup.max(bl.error(&[x]).abs());
        }
        assert!(LogReal::from_value(sup) <= b.sup, "{} vs {}", sup.ln(), b.sup.ln());
    }

    #[test]
    fn lemma6_values() {
        let (num, bound) = lemma6_check(2, 0).unwrap();
        assert!((bound - 1.5f64.sqrt() * std::f64::consts::PI.sqrt() * 64.0).abs() < 1e-9);
        assert!(bound > 138.92 && bound < 138.94);
        assert!(num <= bound && num > 0.0);
        // exact Gamma-function oracle for the same quadrature
        let q = make_product_spheres_poly(2, 0).unwrap();
        let mut sq = 0.0;
        for (ei, &ai) in &q.coeffs {
            for (ej, &aj) in &q.coeffs {
                let mut prod = ai * aj;
                for d in 0..2 {
                    let p = ei[d] + ej[d];
                    prod *= if p % 2 == 1 {
                        0.0
                    } else {
                        // int t^p e^{-t^2} dt = Gamma((p+1)/2)
                        lgamma((p as f64 + 1.0) / 2.0).exp()
                    };
                }
                sq += prod;
            }
        }
        assert!((num - sq.sqrt()).abs() < 1e-8 * num);
    }

    #[test]
    fn lemma6_all_ni_up_to_4() {
        for n in 1..=4usize {
            for i in 0..n {
                let (num, bound) = lemma6_check(n, i).unwrap();
                assert!(num <= bound, "n={n} i={i}: {num} vs {bound}");
            }
        }
    }

    #[test]
    fn cor4_l2_bound_value() {
        // n=2, eta = 1/96: (3/2) sqrt(pi) * 64 * 96
        let v = cor4_l2_bound(2, 1.0 / 96.0);
        let expect = 1.5 * std::f64::consts::PI.sqrt() * 64.0 * 96.0;
        assert!((v - expect).abs() < 1e-9);
    }
}

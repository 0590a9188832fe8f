//! Hermite polynomials from the recurrence `H_{k+1} = H_k' - xi H_k`
//! (so that `H_k(xi) e^{-xi^2/2} = d^k/dxi^k e^{-xi^2/2}`), leading
//! coefficient `(-1)^k`.

#[derive(Debug, Clone, PartialEq)]
pub struct HermitePoly {
    pub k: usize,
    /// Dense coefficients, `coeffs[j]` multiplying `xi^j`.
    pub coeffs: Vec<f64>,
}

impl HermitePoly {
    pub fn eval(&self, xi: f64) -> f64 {
        // Horner
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * xi + c)
    }
}

pub fn hermite(k: usize) -> HermitePoly {
    let mut h = vec![1.0f64]; // H_0 = 1
    for _ in 0..k {
        // H' - xi H
        let mut next = vec![0.0; h.len() + 1];
        for (j, &c) in h.iter().enumerate() {
            if j >= 1 {
                next[j - 1] += j as f64 * c;
            }
            next[j + 1] -= c;
        }
        h = next;
    }
    HermitePoly { k, coeffs: h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre_on;
    use std::f64::consts::PI;

    fn factorial(k: usize) -> f64 {
        (1..=k).map(|j| j as f64).product()
    }

    #[test]
    fn low_degrees() {
        assert_eq!(hermite(0).coeffs, vec![1.0]);
        assert_eq!(hermite(1).coeffs, vec![0.0, -1.0]);
        // H_2 = H_1' - xi H_1 = -1 + xi^2
        assert_eq!(hermite(2).coeffs, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn leading_coefficient_sign() {
        for k in 0..=10 {
            let h = hermite(k);
            assert_eq!(h.coeffs.len(), k + 1);
            let lead = h.coeffs[k];
            assert_eq!(lead, if k % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn moment_identity() {
        // int xi^k H_k(xi) e^{-xi^2/2} dxi = (-1)^k k! sqrt(2 pi), k = 0..8
        let (xs, ws) = gauss_legendre_on(400, -15.0, 15.0);
        for k in 0..=8usize {
            let h = hermite(k);
            let num: f64 = xs
                .iter()
                .zip(&ws)
                .map(|(&x, &w)| w * x.powi(k as i32) * h.eval(x) * (-0.5 * x * x).exp())
                .sum();
            let exact = if k % 2 == 0 { 1.0 } else { -1.0 } * factorial(k) * (2.0 * PI).sqrt();
            assert!(
                (num - exact).abs() <= 1e-10 * exact.abs(),
                "k={k}: {num} vs {exact}"
            );
        }
    }

    #[test]
    fn orthogonality() {
        // int H_j H_k e^{-xi^2/2} = delta_jk k! sqrt(2 pi), j,k <= 8
        let (xs, ws) = gauss_legendre_on(400, -15.0, 15.0);
        for j in 0..=8usize {
            let hj = hermite(j);
            for k in 0..=8usize {
                let hk = hermite(k);
                let num: f64 = xs
                    .iter()
                    .zip(&ws)
                    .map(|(&x, &w)| w * hj.eval(x) * hk.eval(x) * (-0.5 * x * x).exp())
                    .sum();
                let exact = if j == k { factorial(k) * (2.0 * PI).sqrt() } else { 0.0 };
                let scale = factorial(j.max(k)) * (2.0 * PI).sqrt();
                assert!((num - exact).abs() <= 1e-10 * scale, "j={j} k={k}: {num}");
            }
        }
    }
}

//! Polynomials times the standard Gaussian: `q(x) = Q(x) e^{-|x|^2/2}` with
//! sparse `Q = sum_I a_I x^I`, closed under differentiation, with exact
//! Fourier transform through the Hermite identity
//! `F(x^I e^{-|x|^2/2}) = sqrt(2 pi)^n i^{|I|} prod_j H_{I_j}(xi_j) e^{-xi_j^2/2}`.

use super::hermite::{hermite, HermitePoly};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LocalModelError {
    #[error("sphere index {0} out of range 0..={1}")]
    SphereIndexOutOfRange(usize, usize),
    #[error("need c/(2 eta) >= 1, got {0}")]
    CutoffTooTight(f64),
    #[error("frequency quadrature did not stabilize to 1e-8 at {0} nodes per axis")]
    QuadratureNonConvergence(usize),
    #[error("eta {0} exceeds the admissible c/(48 n) = {1}")]
    EtaTooLarge(f64, f64),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussPoly {
    pub n: usize,
    /// Exponent multi-index `I` (length n) -> coefficient `a_I`.
    pub coeffs: BTreeMap<Vec<u32>, f64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// `max_t |t^k e^{-t^2/2}| = (k/e)^{k/2}` over the real line.
fn monomial_gauss_sup(k: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k as f64 / std::f64::consts::E).powf(k as f64 / 2.0)
    }
}

impl GaussPoly {
    pub fn new(n: usize) -> Self {
        GaussPoly { n, coeffs: BTreeMap::new() }
    }

    pub fn add_term(&mut self, exps: Vec<u32>, a: f64) {
        assert_eq!(exps.len(), self.n);
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(exps) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += a;
                // keep the support sparse; derivatives cancel exactly
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if a != 0.0 {
                    v.insert(a);
                }
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// `Q(x)` without the Gaussian factor.
    pub fn eval_poly(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        self.coeffs
            .iter()
            .map(|(e, &a)| {
                a * e.iter().zip(x).map(|(&p, &xi)| xi.powi(p as i32)).product::<f64>()
            })
            .sum()
    }

    /// `q(x) = Q(x) e^{-|x|^2/2}`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.eval_poly(x) * (-0.5 * r2).exp()
    }

    /// The polynomial part of `d_j q`: `d_j (Q e^{-|x|^2/2}) = (d_j Q - x_j Q) e^{-|x|^2/2}`.
    pub fn derivative(&self, j: usize) -> GaussPoly {
        assert!(j < self.n);
        let mut out = GaussPoly::new(self.n);
        for (e, &a) in &self.coeffs {
            if e[j] > 0 {
                let mut down = e.clone();
                down[j] -= 1;
                out.add_term(down, a * e[j] as f64);
            }
            let mut up = e.clone();
            up[j] += 1;
            out.add_term(up, -a);
        }
        out
    }

    pub fn grad_eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| self.derivative(j).eval(x)).collect()
    }

    /// Exact Fourier transform `F q (xi) = int q(x) e^{-i x.xi} dx`.
    pub fn fourier(&self, xi: &[f64]) -> Complex64 {
        assert_eq!(xi.len(), self.n);
        let table = self.hermite_table();
        let pref = (2.0 * std::f64::consts::PI).powf(self.n as f64 / 2.0);
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let gauss = (-0.5 * r2).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, &a) in &self.coeffs {
            let total: u32 = e.iter().sum();
            let mut prod = 1.0;
            for (d, &p) in e.iter().enumerate() {
                prod *= table[p as usize].eval(xi[d]);
            }
            acc += Complex64::i().powu(total) * a * prod;
        }
        acc * pref * gauss
    }

    pub(crate) fn hermite_table(&self) -> Vec<HermitePoly> {
        let dmax = self.coeffs.keys().flat_map(|e| e.iter()).copied().max().unwrap_or(0);
        (0..=dmax as usize).map(hermite).collect()
    }

    /// `sum_I |a_I| sqrt(I!)` — the coefficient norm in the truncation bounds.
    pub fn sum_abs_sqrt_fact(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, &a)| a.abs() * e.iter().map(|&p| factorial(p)).product::<f64>().sqrt())
            .sum()
    }

    /// `sum_I a_I^2 I!` — the L2-side coefficient norm.
    pub fn sum_sq_fact(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, &a)| a * a * e.iter().map(|&p| factorial(p)).product::<f64>())
            .sum()
    }

    /// Rigorous global bound `sup_x |q| <= sum_I |a_I| prod_j max_t |t^{I_j} e^{-t^2/2}|`.
    pub fn sup_bound(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, &a)| {
                a.abs() * e.iter().map(|&p| monomial_gauss_sup(p)).product::<f64>()
            })
            .sum()
    }

    /// Bound on `sup |grad q|` via per-coordinate sup bounds.
    pub fn grad_sup_bound(&self) -> f64 {
        let per: Vec<f64> = (0..self.n).map(|j| self.derivative(j).sup_bound()).collect();
        per.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    /// Bound on the operator norm of the Hessian of `q` (Frobenius over
    /// entry-wise sup bounds).
    pub fn hessian_sup_bound(&self) -> f64 {
        let mut frob = 0.0;
        for j in 0..self.n {
            let dj = self.derivative(j);
            for k in 0..self.n {
                let b = dj.derivative(k).sup_bound();
                frob += b * b;
            }
        }
        frob.sqrt()
    }
}

/// The product-of-spheres barrier polynomial
/// `Q_i(x, y) = (|x|^2 - 2)^2 + |y|^2 - 1` with `x` the first `i+1`
/// coordinates, expanded into sparse form: cross terms `2 x_j^2 x_k^2` occur
/// only among the first `i+1` coordinates.
pub fn make_product_spheres_poly(n: usize, i: usize) -> Result<GaussPoly, LocalModelError> {
    if i + 1 > n {
        return Err(LocalModelError::SphereIndexOutOfRange(i, n - 1));
    }
    let mut q = GaussPoly::new(n);
    let xs = i + 1;
    for k in 0..xs {
        let mut e = vec![0u32; n];
        e[k] = 4;
        q.add_term(e, 1.0);
        let mut e = vec![0u32; n];
        e[k] = 2;
        q.add_term(e, -4.0);
    }
    for j in 0..xs {
        for k in (j + 1)..xs {
            let mut e = vec![0u32; n];
            e[j] = 2;
            e[k] = 2;
            q.add_term(e, 2.0);
        }
    }
    for k in xs..n {
        let mut e = vec![0u32; n];
        e[k] = 2;
        q.add_term(e, 1.0);
    }
    q.add_term(vec![0u32; n], 3.0);
    Ok(q)
}

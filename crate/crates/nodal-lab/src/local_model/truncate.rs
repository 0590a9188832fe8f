//! Band-limited truncation `q_eta^c` of a Gaussian-polynomial `q`:
//!
//! `q_eta^c(x) = (2 pi)^{-n} int chi_c(eta xi) Fq(xi) e^{i<x,xi>} dxi`
//!
//! realized by tensor Gauss-Legendre quadrature in frequency; the forward
//! transform is exact (Hermite closed form), so quadrature is the only error
//! source. The rescaled `q_{i,c}(x) = q_eta^c(eta x)` has Fourier support in
//! `B(0, c)`.

use super::gauss_poly::{GaussPoly, LocalModelError};
use crate::quad::gauss_legendre_on;
use num_complex::Complex64;

/// Radial cutoff: `chi_c = 1` on `[0, c/2]`, `0` on `[c, inf)`, quintic
/// smoothstep in between (the bounds only use the support/plateau geometry).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    pub c: f64,
    pub eta: f64,
}

impl TruncationSpec {
    pub fn new(c: f64, eta: f64) -> Self {
        assert!(c > 0.0 && eta > 0.0);
        TruncationSpec { c, eta }
    }

    /// `c / (2 eta)`, the large parameter of Proposition-3 bounds.
    pub fn ratio(&self) -> f64 {
        self.c / (2.0 * self.eta)
    }

    /// The profile `chi_c(s)` for `s >= 0`.
    pub fn chi(&self, s: f64) -> f64 {
        let half = 0.5 * self.c;
        if s <= half {
            1.0
        } else if s >= self.c {
            0.0
        } else {
            let t = (s - half) / half;
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }
}

/// Frequencies beyond this are dropped: `e^{-xi^2/2}` times any shipped
/// polynomial is below the smallest positive double there.
const FREQ_CLAMP: f64 = 40.0;
const MAX_NODES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    /// `chi_c(eta |xi|)` — the truncation itself.
    Chi,
    /// `chi_c(eta |xi|) - 1` — the truncation error `q_eta^c - q`
    /// (supported on `|xi| >= c/(2 eta)` only).
    ChiMinusOne,
}

/// Tensor-grid evaluation output, row-major with the first axis slow:
/// index `ix * ny + iy`.
#[derive(Debug, Clone)]
pub struct GridEval {
    pub values: Vec<f64>,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

/// Evaluator for `q_eta^c` (and the rescaled `q_{i,c}`), `n <= 2`.
#[derive(Debug, Clone)]
pub struct BandLimited {
    pub q: GaussPoly,
    pub spec: TruncationSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `hg[d][j] = H_d(nodes[j]) e^{-nodes[j]^2/2}`.
    hg: Vec<Vec<f64>>,
    /// `(exps, a_I * Re/Im of i^{|I|})` with the transform prefactor folded in.
    terms: Vec<(Vec<u32>, Complex64)>,
    /// Integration half-width in frequency, `min(c/eta, FREQ_CLAMP)`.
    pub x_max: f64,
}

impl BandLimited {
    /// Build the evaluator; `u_max` is the largest `|x|` that will be queried
    /// (it sets the oscillation budget of the frequency quadrature). Node
    /// counts are doubled until probe evaluations stabilize to `1e-8`.
    pub fn new(q: GaussPoly, spec: TruncationSpec, u_max: f64) -> Result<Self, LocalModelError> {
        assert!(matches!(q.n, 1 | 2), "band-limited evaluator supports n = 1, 2");
        // at least 12 so the (chi - 1) tail integrals are covered out to where
        // e^{-xi^2/2} is ~1e-31; chi itself vanishes beyond c/eta
        let x_max = (spec.c / spec.eta).max(12.0).min(FREQ_CLAMP);
        let mut nn = 64usize;
        let est = (1.3 * x_max * u_max.max(1.0) / std::f64::consts::PI).ceil() as usize;
        while nn < est && nn < MAX_NODES {
            nn *= 2;
        }
        let probes: Vec<Vec<f64>> = match q.n {
            1 => (0..5).map(|i| vec![u_max * (i as f64 / 4.0) - 0.3]).collect(),
            _ => (0..5)
                .map(|i| {
                    let a = 0.7 * i as f64;
                    vec![u_max * (i as f64 / 4.0) * a.cos(), u_max * (i as f64 / 4.0) * a.sin()]
                })
                .collect(),
        };
        let mut prev: Option<(Self, Vec<f64>)> = None;
        while nn <= MAX_NODES {
            let cand = Self::with_nodes(q.clone(), spec, x_max, nn);
            let vals: Vec<f64> = probes.iter().map(|p| cand.eval(p)).collect();
            if let Some((_, pv)) = &prev {
                let scale = 1.0 + vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let diff = vals
                    .iter()
                    .zip(pv)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if diff <= 1e-8 * scale {
                    return Ok(cand);
                }
            }
            prev = Some((cand, vals));
            nn *= 2;
        }
        Err(LocalModelError::QuadratureNonConvergence(MAX_NODES))
    }

    fn with_nodes(q: GaussPoly, spec: TruncationSpec, x_max: f64, nn: usize) -> Self {
        let (nodes, weights) = gauss_legendre_on(nn, -x_max, x_max);
        let table = q.hermite_table();
        let hg: Vec<Vec<f64>> = table
            .iter()
            .map(|h| nodes.iter().map(|&x| h.eval(x) * (-0.5 * x * x).exp()).collect())
            .collect();
        let pref = (2.0 * std::f64::consts::PI).powf(q.n as f64 / 2.0)
            / (2.0 * std::f64::consts::PI).powi(q.n as i32);
        let terms = q
            .coeffs
            .iter()
            .map(|(e, &a)| {
                let total: u32 = e.iter().sum();
                (e.clone(), Complex64::i().powu(total) * a * pref)
            })
            .collect();
        BandLimited { q, spec, nodes, weights, hg, terms, x_max }
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes.len()
    }

    /// Largest `|xi|` among quadrature nodes where the cutoff is active; after
    /// the `eta`-rescale this is the Fourier support radius actually used.
    pub fn max_active_freq(&self) -> f64 {
        let mut m: f64 = 0.0;
        match self.q.n {
            1 => {
                for &x in &self.nodes {
                    if self.spec.chi(self.spec.eta * x.abs()) > 0.0 {
                        m = m.max(x.abs());
                    }
                }
            }
            _ => {
                for &x in &self.nodes {
                    for &y in &self.nodes {
                        let r = (x * x + y * y).sqrt();
                        if self.spec.chi(self.spec.eta * r) > 0.0 {
                            m = m.max(r);
                        }
                    }
                }
            }
        }
        m
    }

    fn weight_at(&self, r: f64, w: Weight) -> f64 {
        let chi = self.spec.chi(self.spec.eta * r);
        match w {
            Weight::Chi => chi,
            Weight::ChiMinusOne => chi - 1.0,
        }
    }

    /// `Fq` at a tensor node, from the precomputed Hermite tables.
    fn fhat(&self, jx: usize, jy: Option<usize>) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, a) in &self.terms {
            let mut v = self.hg[e[0] as usize][jx];
            if let Some(jy) = jy {
                v *= self.hg[e[1] as usize][jy];
            }
            acc += a * v;
        }
        acc
    }

    fn point(&self, x: &[f64], w: Weight) -> (Complex64, Vec<Complex64>) {
        assert_eq!(x.len(), self.q.n);
        let mut val = Complex64::new(0.0, 0.0);
        let mut grad = vec![Complex64::new(0.0, 0.0); self.q.n];
        match self.q.n {
            1 => {
                for (j, (&xi, &wq)) in self.nodes.iter().zip(&self.weights).enumerate() {
                    let wt = self.weight_at(xi.abs(), w);
                    if wt == 0.0 {
                        continue;
                    }
                    let ph = Complex64::new(0.0, x[0] * xi).exp();
                    let f = self.fhat(j, None) * wq * wt * ph;
                    val += f;
                    grad[0] += f * Complex64::new(0.0, xi);
                }
            }
            _ => {
                for (j, (&xi, &wj)) in self.nodes.iter().zip(&self.weights).enumerate() {
                    let phx = Complex64::new(0.0, x[0] * xi).exp();
                    for (k, (&yj, &wk)) in self.nodes.iter().zip(&self.weights).enumerate() {
                        let wt = self.weight_at((xi * xi + yj * yj).sqrt(), w);
                        if wt == 0.0 {
                            continue;
                        }
                        let ph = phx * Complex64::new(0.0, x[1] * yj).exp();
                        let f = self.fhat(j, Some(k)) * (wj * wk * wt) * ph;
                        val += f;
                        grad[0] += f * Complex64::new(0.0, xi);
                        grad[1] += f * Complex64::new(0.0, yj);
                    }
                }
            }
        }
        (val, grad)
    }

    /// `q_eta^c(x)` (real part; the imaginary part is a symmetry check).
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.point(x, Weight::Chi).0.re
    }

    pub fn eval_complex(&self, x: &[f64]) -> Complex64 {
        self.point(x, Weight::Chi).0
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.point(x, Weight::Chi).1.iter().map(|c| c.re).collect()
    }

    /// The rescaled `q_{i,c}(x) = q_eta^c(eta x)`.
    pub fn eval_rescaled(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().map(|v| v * self.spec.eta).collect();
        self.eval(&u)
    }

    pub fn grad_rescaled(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<f64> = x.iter().map(|v| v * self.spec.eta).collect();
        self.grad(&u).iter().map(|g| g * self.spec.eta).collect()
    }

    /// Truncation error `q_eta^c(x) - q(x)`, computed spectrally from the
    /// frequency tail `|xi| >= c/(2 eta)` only (representable far below where
    /// direct subtraction drowns in quadrature noise; underflows to exactly 0
    /// when the tail lies beyond `e^{-xi^2/2}`'s floating-point range).
    pub fn error(&self, x: &[f64]) -> f64 {
        self.point(x, Weight::ChiMinusOne).0.re
    }

    pub fn grad_error(&self, x: &[f64]) -> Vec<f64> {
        self.point(x, Weight::ChiMinusOne).1.iter().map(|c| c.re).collect()
    }

    /// `||q_eta^c - q||_{L2}^2 = (2 pi)^{-n} int (1 - chi)^2 |Fq|^2` by the
    /// same tensor rule (Plancherel; the integrand is non-oscillatory).
    pub fn l2_error_sq(&self) -> f64 {
        let inv = (2.0 * std::f64::consts::PI).powi(-(self.q.n as i32));
        let mut acc = 0.0;
        match self.q.n {
            1 => {
                for (j, (&xi, &wq)) in self.nodes.iter().zip(&self.weights).enumerate() {
                    let t = 1.0 - self.spec.chi(self.spec.eta * xi.abs());
                    if t == 0.0 {
                        continue;
                    }
                    acc += wq * t * t * self.fhat_plain(j, None).norm_sqr();
                }
            }
            _ => {
                for (j, &xi) in self.nodes.iter().enumerate() {
                    for (k, &yj) in self.nodes.iter().enumerate() {
                        let r = (xi * xi + yj * yj).sqrt();
                        let t = 1.0 - self.spec.chi(self.spec.eta * r);
                        if t == 0.0 {
                            continue;
                        }
                        acc += self.weights[j]
                            * self.weights[k]
                            * t
                            * t
                            * self.fhat_plain(j, Some(k)).norm_sqr();
                    }
                }
            }
        }
        inv * acc
    }

    /// `||q_eta^c||_{L2}^2 = (2 pi)^{-n} int chi^2 |Fq|^2` (Plancherel).
    pub fn l2_chi_sq(&self) -> f64 {
        let inv = (2.0 * std::f64::consts::PI).powi(-(self.q.n as i32));
        let mut acc = 0.0;
        match self.q.n {
            1 => {
                for (j, (&xi, &wq)) in self.nodes.iter().zip(&self.weights).enumerate() {
                    let t = self.spec.chi(self.spec.eta * xi.abs());
                    if t == 0.0 {
                        continue;
                    }
                    acc += wq * t * t * self.fhat_plain(j, None).norm_sqr();
                }
            }
            _ => {
                for (j, &xi) in self.nodes.iter().enumerate() {
                    for (k, &yj) in self.nodes.iter().enumerate() {
                        let t = self.spec.chi(self.spec.eta * (xi * xi + yj * yj).sqrt());
                        if t == 0.0 {
                            continue;
                        }
                        acc += self.weights[j]
                            * self.weights[k]
                            * t
                            * t
                            * self.fhat_plain(j, Some(k)).norm_sqr();
                    }
                }
            }
        }
        inv * acc
    }

    /// `Fq` without the `(2 pi)^{-n}` inversion prefactor folded in.
    fn fhat_plain(&self, jx: usize, jy: Option<usize>) -> Complex64 {
        self.fhat(jx, jy) * (2.0 * std::f64::consts::PI).powi(self.q.n as i32)
    }

    /// Two-stage separable evaluation of values and gradients on a tensor
    /// grid (n = 2 only); output indexed `ix * ys.len() + iy`.
    pub fn eval_grid_2d(&self, xs: &[f64], ys: &[f64]) -> GridEval {
        self.grid_2d(xs, ys, Weight::Chi)
    }

    /// Same, for the spectral truncation error field.
    pub fn error_grid_2d(&self, xs: &[f64], ys: &[f64]) -> GridEval {
        self.grid_2d(xs, ys, Weight::ChiMinusOne)
    }

    fn grid_2d(&self, xs: &[f64], ys: &[f64], w: Weight) -> GridEval {
        assert_eq!(self.q.n, 2);
        let nn = self.nodes.len();
        let (nx, ny) = (xs.len(), ys.len());
        // distinct Hermite degrees appearing in coordinate 2
        let mut degs: Vec<usize> = self.terms.iter().map(|(e, _)| e[1] as usize).collect();
        degs.sort_unstable();
        degs.dedup();
        // stage 1: B[d][j * ny + iy] = sum_k w_k W(|xi|) hg[d][k] e^{i y xi_k},
        // plus the xi_2-weighted variant for the y-gradient
        let mut b = vec![vec![Complex64::new(0.0, 0.0); nn * ny]; degs.len()];
        let mut bz = vec![vec![Complex64::new(0.0, 0.0); nn * ny]; degs.len()];
        let phase_y: Vec<Complex64> = ys
            .iter()
            .flat_map(|&y| self.nodes.iter().map(move |&xi| Complex64::new(0.0, y * xi).exp()))
            .collect(); // iy * nn + k
        for j in 0..nn {
            let xj = self.nodes[j];
            for k in 0..nn {
                let yk = self.nodes[k];
                let wt = self.weight_at((xj * xj + yk * yk).sqrt(), w);
                if wt == 0.0 {
                    continue;
                }
                let wk = self.weights[k] * wt;
                for (di, &d) in degs.iter().enumerate() {
                    let f = wk * self.hg[d][k];
                    if f == 0.0 {
                        continue;
                    }
                    for iy in 0..ny {
                        let ph = phase_y[iy * nn + k];
                        b[di][j * ny + iy] += f * ph;
                        bz[di][j * ny + iy] += f * yk * ph;
                    }
                }
            }
        }
        // stage 2: C[j * ny + iy] = sum_I a_I i^{|I|} hg[I1][j] B[I2][j][iy]
        let mut cv = vec![Complex64::new(0.0, 0.0); nn * ny];
        let mut cz = vec![Complex64::new(0.0, 0.0); nn * ny];
        for (e, a) in &self.terms {
            let di = degs.binary_search(&(e[1] as usize)).unwrap();
            for j in 0..nn {
                let f = a * self.hg[e[0] as usize][j];
                for iy in 0..ny {
                    cv[j * ny + iy] += f * b[di][j * ny + iy];
                    cz[j * ny + iy] += f * bz[di][j * ny + iy];
                }
            }
        }
        // stage 3: fold in the xi_1 quadrature and the x phases
        let mut values = vec![0.0; nx * ny];
        let mut grad_x = vec![0.0; nx * ny];
        let mut grad_y = vec![0.0; nx * ny];
        for (ix, &x) in xs.iter().enumerate() {
            let mut row_v = vec![Complex64::new(0.0, 0.0); ny];
            let mut row_gx = vec![Complex64::new(0.0, 0.0); ny];
            let mut row_gy = vec![Complex64::new(0.0, 0.0); ny];
            for j in 0..nn {
                let xj = self.nodes[j];
                let ph = self.weights[j] * Complex64::new(0.0, x * xj).exp();
                let phx = ph * Complex64::new(0.0, xj);
                for iy in 0..ny {
                    row_v[iy] += ph * cv[j * ny + iy];
                    row_gx[iy] += phx * cv[j * ny + iy];
                    row_gy[iy] += ph * Complex64::new(0.0, 1.0) * cz[j * ny + iy];
                }
            }
            for iy in 0..ny {
                values[ix * ny + iy] = row_v[iy].re;
                grad_x[ix * ny + iy] = row_gx[iy].re;
                grad_y[ix * ny + iy] = row_gy[iy].re;
            }
        }
        GridEval { values, grad_x, grad_y }
    }
}

//! The explicit constants: the `rho`/`theta` infima and their closed-form
//! upper bounds, transversality prices `tau` and probabilities `p`, the
//! homogeneous aggregation `c_Sigma`, and the double-exponential lower-bound
//! chain for the Laplace and Dirichlet-to-Neumann operators.

use crate::logreal::LogReal;
use crate::optim::{golden_section_max, minimize_log_grid};
use crate::special::{ball_volume, lgamma, ln_gaussian_tail, neg_ln_gaussian_tail_from_ln};
use crate::spectral_domain::{
    ball_radial_moment, ball_radial_moment_weighted, radial_moment_mc, BodyKind, SymbolBody,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstantsError {
    #[error("no certified transversality pair")]
    NoPairs,
    #[error("empty R grid")]
    EmptyGrid,
    #[error("window radius {0} exceeds the cutoff radius {1}")]
    WindowTooLarge(f64, f64),
    #[error("chain inequality violated: {0}")]
    ChainViolation(String),
    #[error(transparent)]
    Body(#[from] crate::spectral_domain::BodyError),
}

/// A window radius, an L2 norm and certified `(delta, epsilon)` pairs for one
/// regular pair `(W, f)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairData {
    pub l2_norm: f64,
    pub window_radius: f64,
    pub pairs: Vec<(f64, f64)>,
}

/// Result of one of the 1-D infima: the value, the minimizing `t`, and a flag
/// set when the minimizer sat on the search boundary.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InfResult {
    pub value: LogReal,
    pub t_star: f64,
    pub boundary_warning: bool,
}

/// `floor(n/2 + 1)`: the Sobolev order used throughout.
pub fn sobolev_order(n: usize) -> u32 {
    (n as u32) / 2 + 1
}

/// Radial moments `S_i = int_K |xi|^{2i}` for `i = 0..=k`, exact for balls,
/// Monte Carlo otherwise. With `weight` set, the extra `xi_j^2` factor of the
/// `theta` integrals is included.
fn radial_moments(
    body: &SymbolBody,
    k: u32,
    weight: Option<usize>,
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<LogReal>, ConstantsError> {
    let mut out = Vec::with_capacity(k as usize + 1);
    for i in 0..=k {
        let m = match &body.kind {
            BodyKind::Ball { radius } => match weight {
                None => ball_radial_moment(body.n, *radius, i),
                Some(_) => ball_radial_moment_weighted(body.n, *radius, i),
            },
            BodyKind::AnnulusBounded { .. } => {
                radial_moment_mc(body, i, weight, mc_samples, seed.wrapping_add(i as u64))?.0
            }
        };
        out.push(m);
    }
    Ok(out)
}

/// The infimum over `t` shared by `rho_K` and `theta_K^j`, fed with the
/// ordered-tuple moment sums `S_i` (as LogReals):
/// `prefactor * inf_t ((R+t)/t)^{n/2} sum_i t^i/i! sqrt(S_i)`.
pub fn inf_over_t(n: usize, moments: &[LogReal], r: f64) -> InfResult {
    let k = sobolev_order(n);
    assert_eq!(moments.len(), k as usize + 1);
    let ln_pref = 0.5 * (2.0f64).ln() + (k as f64).ln()
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if moments.iter().all(|m| m.is_zero()) {
        return InfResult { value: LogReal::ZERO, t_star: f64::NAN, boundary_warning: false };
    }
    let ln_objective = |t: f64| -> f64 {
        let mut sum = LogReal::ZERO;
        for (i, m) in moments.iter().enumerate() {
            let term =
                LogReal::from_ln(i as f64 * t.ln() - lgamma(i as f64 + 1.0)) * m.sqrt();
            sum = sum + term;
        }
        0.5 * n as f64 * ((r + t) / t).ln() + sum.ln()
    };
    let res = minimize_log_grid(ln_objective, 1e-6, 1e6, 200);
    InfResult {
        value: LogReal::from_ln(ln_pref + res.f),
        t_star: res.x,
        boundary_warning: res.boundary,
    }
}

/// `rho_K(R)`: sup-norm price of the Sobolev localization over `K`.
pub fn rho_k(body: &SymbolBody, r: f64) -> Result<InfResult, ConstantsError> {
    rho_k_with(body, r, 200_000, 0)
}

pub fn rho_k_with(
    body: &SymbolBody,
    r: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<InfResult, ConstantsError> {
    assert!(r > 0.0);
    let moments = radial_moments(body, sobolev_order(body.n), None, mc_samples, seed)?;
    Ok(inf_over_t(body.n, &moments, r))
}

/// `theta_K^j(R)`: the gradient variant, with the extra `|xi_j|^2` factor.
pub fn theta_k_j(body: &SymbolBody, r: f64, j: usize) -> Result<InfResult, ConstantsError> {
    theta_k_j_with(body, r, j, 200_000, 0)
}

pub fn theta_k_j_with(
    body: &SymbolBody,
    r: f64,
    j: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<InfResult, ConstantsError> {
    assert!(r > 0.0 && j >= 1 && j <= body.n);
    let moments = radial_moments(body, sobolev_order(body.n), Some(j), mc_samples, seed)?;
    Ok(inf_over_t(body.n, &moments, r))
}

/// Closed-form upper bounds for `rho_K(R)` and `theta_K^j(R)` in terms of
/// `nu(K)` and `d(K)` only (evaluation of the infimum at `t = R`).
pub fn rho_theta_upper(nu: LogReal, d: f64, n: usize, r: f64) -> (LogReal, LogReal) {
    let k = sobolev_order(n) as f64;
    let ln_common = -0.5 * n as f64 * std::f64::consts::PI.ln()
        + 0.5 * (LogReal::from_value(2.0) * nu).ln()
        + k.ln()
        + r * d * (n as f64).sqrt();
    (
        LogReal::from_ln(ln_common),
        LogReal::from_ln(ln_common + d.ln()),
    )
}

/// `tau^K_{(W,f)}`: `l2_norm * min over pairs of (rho/delta + n sqrt(n)/eps * sum_j theta^j)`.
///
/// The summation index in the displayed formula is read as `j = 1..n`.
pub fn tau(body: &SymbolBody, pd: &PairData) -> Result<LogReal, ConstantsError> {
    if pd.pairs.is_empty() {
        return Err(ConstantsError::NoPairs);
    }
    if pd.l2_norm == 0.0 {
        return Ok(LogReal::ZERO);
    }
    let rho = rho_k(body, pd.window_radius)?.value;
    let mut theta_sum = LogReal::ZERO;
    for j in 1..=body.n {
        theta_sum = theta_sum + theta_k_j(body, pd.window_radius, j)?.value;
    }
    let n = body.n as f64;
    let mut best: Option<LogReal> = None;
    for &(delta, epsilon) in &pd.pairs {
        assert!(delta > 0.0 && epsilon > 0.0);
        let v = rho / LogReal::from_value(delta)
            + LogReal::from_value(n * n.sqrt() / epsilon) * theta_sum;
        best = Some(match best {
            None => v,
            Some(b) => b.min(v),
        });
    }
    Ok(LogReal::from_value(pd.l2_norm) * best.unwrap())
}

/// `p^K_{(W,f)} = (1/sqrt(pi)) sup_{T >= tau} (1 - tau/T) int_T^inf e^{-t^2} dt`.
///
/// Returns the supremum and the maximizing `T`. For `tau` beyond f64-squarable
/// range use [`p_of_tau_tiny`].
pub fn p_of_tau(tau: LogReal) -> (LogReal, f64) {
    let tv = tau.value();
    assert!(tv.is_finite(), "p_of_tau: tau too large for direct evaluation, use p_of_tau_tiny");
    let lo = tv.max(1e-9);
    let hi = tv + 40.0;
    let ln_sqrt_pi = 0.5 * std::f64::consts::PI.ln();
    let ln_obj = |t: f64| -> f64 {
        if t <= tv {
            return f64::NEG_INFINITY;
        }
        (1.0 - tv / t).ln() + ln_gaussian_tail(t) - ln_sqrt_pi
    };
    let (t_star, ln_p) = golden_section_max(ln_obj, lo, hi, 1e-12);
    // the left boundary belongs to the feasible set when tau = 0
    let (t_star, ln_p) = if tv == 0.0 {
        let edge = ln_gaussian_tail(0.0) - ln_sqrt_pi;
        if edge > ln_p {
            (0.0, edge)
        } else {
            (t_star, ln_p)
        }
    } else {
        (t_star, ln_p)
    };
    (LogReal::from_ln(ln_p), t_star)
}

/// A probability so small that only `-ln p` fits in log-domain storage:
/// `p = exp(-neg_ln)` with `neg_ln` itself a LogReal.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NegExp {
    pub neg_ln: LogReal,
}

impl NegExp {
    pub fn from_neg_ln(neg_ln: LogReal) -> Self {
        NegExp { neg_ln }
    }

    /// Collapse to a plain LogReal; underflows to zero when `-ln p` exceeds
    /// f64 range, which is exactly the case this type exists for.
    pub fn to_logreal(self) -> LogReal {
        LogReal::from_ln(-self.neg_ln.value())
    }

    /// `log(-log p)`, the scale the corollary chains are stated on.
    pub fn ln_neg_ln(self) -> f64 {
        self.neg_ln.ln()
    }

    pub fn ge(self, other: NegExp) -> bool {
        self.neg_ln <= other.neg_ln
    }

    pub fn mul_value(self, v: f64) -> NegExp {
        assert!(v > 0.0);
        let corr = v.ln();
        if corr <= 0.0 {
            NegExp { neg_ln: self.neg_ln + LogReal::from_value(-corr) }
        } else {
            NegExp { neg_ln: sub_magnitude(self.neg_ln, corr) }
        }
    }
}

/// `a - b` for LogReal magnitudes with `b` a plain positive f64, requiring
/// `a >= b`; used to fold moderate corrections into a dominant `(2tau+1)^2`.
fn sub_magnitude(a: LogReal, b: f64) -> LogReal {
    debug_assert!(b >= 0.0);
    if b == 0.0 {
        return a;
    }
    let lb = b.ln();
    assert!(a.ln() >= lb, "sub_magnitude would go negative");
    if a.ln() - lb > 40.0 {
        return a; // below 1 ulp of the log representation
    }
    LogReal::from_ln(a.ln() + (-(lb - a.ln()).exp()).ln_1p())
}

/// `(2 tau + 1)^2` as a LogReal magnitude, from a log-domain `tau`.
pub fn two_tau_plus_one_sq(tau: LogReal) -> LogReal {
    (LogReal::from_value(2.0) * tau + LogReal::ONE).powi(2)
}

/// The Remark-1.7 lower bound `(1/(2 sqrt(pi))) exp(-(2 tau + 1)^2)` as a NegExp.
pub fn remark17_lower(tau: LogReal) -> NegExp {
    let corr = (2.0 * std::f64::consts::PI.sqrt()).ln();
    NegExp::from_neg_ln(two_tau_plus_one_sq(tau) + LogReal::from_value(corr))
}

/// `p_of_tau` in NegExp form, valid for arbitrarily large `tau`.
///
/// For `tau` beyond direct range the supremum is evaluated asymptotically at
/// `T = tau(1 + u)`, `u ~ 1/(2 tau^2)`, where `-ln p ~ tau^2 + ln(2 tau^2) + ln(2 tau)`;
/// the corrections are below 1 ulp of the dominant `tau^2` on the log scale.
pub fn p_of_tau_tiny(tau: LogReal) -> NegExp {
    let lt = tau.ln();
    if lt < 10.0 {
        // direct optimization; beyond tau ~ 1e7 the factor (1 - tau/T*)
        // ~ 1/(2 tau^2) falls below machine epsilon and the sup would
        // evaluate to an exact zero, so switch to the expansion early
        let (p, _) = p_of_tau(tau);
        NegExp::from_neg_ln(LogReal::from_value(-p.ln()))
    } else if lt < 350.0 {
        // -ln p = tau^2 + 1 + ln(4 tau^3) + ln(sqrt pi) + O(tau^-2);
        // tau^2 still fits in f64 here
        let t2 = (2.0 * lt).exp();
        let neg_ln = t2 + 1.0 + 4f64.ln() + 3.0 * lt + 0.5 * std::f64::consts::PI.ln();
        NegExp::from_neg_ln(LogReal::from_value(neg_ln))
    } else {
        NegExp::from_neg_ln(neg_ln_gaussian_tail_from_ln(lt))
    }
}

/// `p_Sigma^K(R)`: sup over certified witnesses; zero with a no-witness flag
/// when the list is empty.
pub fn p_sigma_k_r(
    body: &SymbolBody,
    certs: &[PairData],
    r: f64,
) -> Result<(LogReal, bool), ConstantsError> {
    for c in certs {
        if c.window_radius > r {
            return Err(ConstantsError::WindowTooLarge(c.window_radius, r));
        }
    }
    if certs.is_empty() {
        return Ok((LogReal::ZERO, true));
    }
    let mut best = LogReal::ZERO;
    for c in certs {
        let t = tau(body, c)?;
        let (p, _) = p_of_tau(t);
        best = best.max(p);
    }
    Ok((best, false))
}

/// `c_Sigma(P) = (1/2^n) vol_M max_R p(R)/Vol(B(0,R))` over a sampled R grid
/// (the x-independent specialization of the integral formula).
pub fn c_sigma_homogeneous(
    p_curve: &[(f64, LogReal)],
    vol_m: f64,
    n: usize,
) -> Result<LogReal, ConstantsError> {
    if p_curve.is_empty() {
        return Err(ConstantsError::EmptyGrid);
    }
    let mut best = LogReal::ZERO;
    for &(r, p) in p_curve {
        assert!(r > 0.0);
        best = best.max(p / ball_volume(n, r));
    }
    Ok(LogReal::from_ln(-(n as f64) * (2.0f64).ln() + vol_m.ln()) * best)
}

/// `tau = 20 (n+6)^{11/2}/sqrt(Gamma(n/2+1)) (48 n d/c)^{(n+2)/2} exp(48 sqrt5 n^{3/2} d/c)`.
pub fn theorem3_tau(n: usize, c_pg: f64, d_pg: f64) -> LogReal {
    assert!(0.0 < c_pg && c_pg <= d_pg);
    let nf = n as f64;
    let ratio = d_pg / c_pg;
    let ln = (20.0f64).ln()
        + 5.5 * (nf + 6.0).ln()
        - 0.5 * lgamma(nf / 2.0 + 1.0)
        + (nf + 2.0) / 2.0 * (48.0 * nf * ratio).ln()
        + 48.0 * 5.0f64.sqrt() * nf.powf(1.5) * ratio;
    LogReal::from_ln(ln)
}

/// The two Theorem-3 lower bounds, with `tau` from [`theorem3_tau`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Theorem3Bounds {
    pub tau: LogReal,
    pub c_lower: NegExp,
    pub p_lower: NegExp,
}

pub fn theorem3_bounds(n: usize, c_pg: f64, d_pg: f64, vol_m: f64) -> Theorem3Bounds {
    let tau = theorem3_tau(n, c_pg, d_pg);
    let p_lower = remark17_lower(tau);
    // c >= e^{-(2tau+1)^2} / (2^{n+1} sqrt(pi) Vol(B(0,48 sqrt5 n))) * c_pg^n * vol_M
    let nf = n as f64;
    let corr = (nf + 1.0) * (2.0f64).ln()
        + 0.5 * std::f64::consts::PI.ln()
        + ball_volume(n, 48.0 * 5.0f64.sqrt() * nf).ln()
        - nf * c_pg.ln()
        - vol_m.ln();
    let base = two_tau_plus_one_sq(tau);
    let neg_ln = if corr >= 0.0 {
        base + LogReal::from_value(corr)
    } else {
        sub_magnitude(base, -corr)
    };
    Theorem3Bounds { tau, c_lower: NegExp::from_neg_ln(neg_ln), p_lower }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Laplace-Beltrami, order m = 2, symbol body the unit ball.
    Laplace,
    /// Dirichlet-to-Neumann, order m = 1, same symbol body.
    Dtn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryChain {
    pub tau: LogReal,
    pub c_lower: NegExp,
    pub p_lower: NegExp,
    pub checks: Vec<ChainCheck>,
}

/// The full Laplace/DtN corollary chain at `c_pg = d_pg = 1`, asserting each
/// displayed inequality in log-log form. A violated inequality is a hard
/// error: it would indicate an implementation bug, not an input problem.
pub fn corollary_bound(
    n: usize,
    op: OperatorKind,
    vol_m: f64,
) -> Result<CorollaryChain, ConstantsError> {
    assert!(n >= 1);
    let _ = op; // m only changes the power of L, not the bound itself
    let nf = n as f64;
    let b = theorem3_bounds(n, 1.0, 1.0, vol_m);
    let mut checks = Vec::new();

    let lhs = b.tau.ln();
    let rhs = 127.0 * nf.powf(1.5);
    checks.push(ChainCheck { name: "tau <= exp(127 n^{3/2})".into(), lhs, rhs, ok: lhs <= rhs });

    // per-unit-volume value for the double-exponential comparison
    let per_vol = theorem3_bounds(n, 1.0, 1.0, 1.0);
    let lhs = per_vol.c_lower.ln_neg_ln();
    let rhs = 257.0 * nf.powf(1.5);
    checks.push(ChainCheck {
        name: "c_lower/vol >= exp(-exp(257 n^{3/2}))".into(),
        lhs,
        rhs,
        ok: lhs <= rhs,
    });

    let lhs = per_vol.p_lower.ln_neg_ln();
    checks.push(ChainCheck {
        name: "p_lower >= exp(-exp(257 n^{3/2}))".into(),
        lhs,
        rhs,
        ok: lhs <= rhs,
    });

    if let Some(bad) = checks.iter().find(|c| !c.ok) {
        return Err(ConstantsError::ChainViolation(format!(
            "{}: lhs {} > rhs {}",
            bad.name, bad.lhs, bad.rhs
        )));
    }
    Ok(CorollaryChain { tau: b.tau, c_lower: b.c_lower, p_lower: b.p_lower, checks })
}

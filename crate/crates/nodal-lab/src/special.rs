//! Special-function helpers shared by the constants and local-model layers.

use crate::logreal::LogReal;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// `log Gamma(x)` for positive `x`.
pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

/// Volume of the Euclidean unit ball in `R^n`, as a LogReal.
pub fn unit_ball_volume(n: usize) -> LogReal {
    let n = n as f64;
    LogReal::from_ln(0.5 * n * std::f64::consts::PI.ln() - lgamma(0.5 * n + 1.0))
}

/// Volume of `B(0, r)` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> LogReal {
    unit_ball_volume(n) * LogReal::from_value(r).powi(n as i32)
}

/// Surface measure of the unit sphere `S^{n-1}`.
pub fn unit_sphere_area(n: usize) -> LogReal {
    let n = n as f64;
    LogReal::from_ln((2.0f64).ln() + 0.5 * n * std::f64::consts::PI.ln() - lgamma(0.5 * n))
}

/// `ln of int_T^inf e^{-t^2} dt`, valid for all `T >= 0` including values far
/// beyond where `erfc` underflows.
///
/// For `T <= 25` this is `ln(sqrt(pi)/2 erfc(T))`; beyond that the asymptotic
/// series `e^{-T^2}/(2T) (1 - 1/(2T^2) + 3/(4T^4) - ...)` is used.
pub fn ln_gaussian_tail(t: f64) -> f64 {
    assert!(t >= 0.0);
    if t <= 25.0 {
        (0.5 * std::f64::consts::PI.sqrt() * erfc(t)).ln()
    } else {
        // alternating series 1 - 1/(2T^2) + 3/(2T^2)^2 - 15/(2T^2)^3 + ...
        let inv2 = 1.0 / (2.0 * t * t);
        let mut s = 1.0;
        let mut c = 1.0;
        for k in 1..8u32 {
            c *= -((2 * k - 1) as f64) * inv2;
            s += c;
        }
        -t * t - (2.0 * t).ln() + s.ln()
    }
}

/// `ln_gaussian_tail` for a threshold only known in log form (`ln_t = ln T`).
///
/// Used by the lower-bound chains where `T` itself reaches `exp(127 n^{3/2})`:
/// returns the magnitude of `-ln int_T^inf e^{-t^2} dt` as a LogReal, i.e.
/// `T^2 + ln(2T) - ln(series)` evaluated without forming `T^2` as a plain f64.
pub fn neg_ln_gaussian_tail_from_ln(ln_t: f64) -> LogReal {
    if ln_t <= 3.0 {
        LogReal::from_value(-ln_gaussian_tail(ln_t.exp()))
    } else {
        // T >= e^3: tail = e^{-T^2}/(2T)(1 + O(T^-2)); the series correction is
        // below 1 ulp of the leading T^2 term.
        let t_sq = LogReal::from_ln(2.0 * ln_t);
        let ln_2t = LogReal::from_value((2f64).ln() + ln_t);
        t_sq + ln_2t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1).value() - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2).value() - std::f64::consts::PI).abs() < 1e-12);
        assert!((ball_volume(3, 2.0).value() - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-10);
        assert!((unit_sphere_area(2).value() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_matches_erfc_and_series_agree() {
        // quadrature oracle at a few moderate T
        for &t in &[0.0, 0.5, 1.27, 3.0, 10.0] {
            let quad: f64 = {
                let m = 400_000;
                let hi = t + 40.0;
                let h = (hi - t) / m as f64;
                (0..m)
                    .map(|i| {
                        let x = t + (i as f64 + 0.5) * h;
                        (-x * x).exp() * h
                    })
                    .sum()
            };
            assert!(
                (ln_gaussian_tail(t) - quad.ln()).abs() < 1e-6,
                "tail mismatch at T={t}"
            );
        }
        // continuity across the series switch
        let a = ln_gaussian_tail(24.999);
        let b = ln_gaussian_tail(25.001);
        assert!((a - b - (25.001f64.powi(2) - 24.999f64.powi(2))).abs() < 1e-3);
    }

    #[test]
    fn neg_ln_tail_log_form() {
        for &t in &[1.5f64, 5.0, 20.0] {
            let direct = -ln_gaussian_tail(t);
            let logform = neg_ln_gaussian_tail_from_ln(t.ln()).value();
            assert!((direct - logform).abs() / direct < 2e-3, "T={t}: {direct} vs {logform}");
        }
        // astronomically large T: T = exp(359) => -ln tail ~ T^2
        let v = neg_ln_gaussian_tail_from_ln(359.0);
        assert!((v.ln() - 718.0) < 0.1 && v.ln() >= 718.0);
    }
}

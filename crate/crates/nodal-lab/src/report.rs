//! The acceptance suite: twelve structured checks shared by the CLI `report`
//! subcommand and the integration tests. Each runner returns a pass/fail plus
//! a human-readable detail line; nothing here panics on a mere failure.

use crate::constants::{
    corollary_bound, rho_k, theorem3_tau, theta_k_j, OperatorKind,
};
use crate::local_model::{
    corollary4_certify, lemma5_certify, lemma6_check, make_product_spheres_poly, prop3_bounds,
    BandLimited, TruncationSpec,
};
use crate::quad::gauss_legendre_on;
use crate::simulator::{
    build_ensemble, empirical_c1, estimate_b0, implement_local_model, kac_rice_expected_zeros,
    SigmaCount,
};
use crate::spectral_domain::SymbolBody;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "hermite-moment-identity"),
    (2, "truncation-bound-dominance"),
    (3, "barrier-pair-certification"),
    (4, "barrier-l2-norm-bound"),
    (5, "truncated-barrier-topology"),
    (6, "kac-rice-zero-count"),
    (7, "weyl-mode-count"),
    (8, "sup-norm-price-dominance"),
    (9, "projection-convergence"),
    (10, "constants-chain-log-log"),
    (11, "two-loop-probability"),
    (12, "component-density-stabilization"),
];

fn result(id: usize, passed: bool, detail: String, t0: std::time::Instant) -> CriterionResult {
    CriterionResult {
        id,
        name: CRITERIA[id - 1].1,
        passed,
        detail,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

/// 1: `int xi^k H_k(xi) e^{-xi^2/2} dxi = (-1)^k k! sqrt(2 pi)`, k = 0..8.
pub fn criterion_1() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let (xs, ws) = gauss_legendre_on(400, -15.0, 15.0);
    let mut worst = 0.0f64;
    for k in 0..=8u32 {
        let h = crate::local_model::hermite(k as usize);
        let quad: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| w * x.powi(k as i32) * h.eval(x) * (-0.5 * x * x).exp())
            .sum();
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        let exact = if k % 2 == 0 { 1.0 } else { -1.0 }
            * fact
            * (2.0 * std::f64::consts::PI).sqrt();
        worst = worst.max(((quad - exact) / exact).abs());
    }
    result(1, worst < 1e-10, format!("worst relative error {worst:.3e}"), t0)
}

/// 2: empirical sup / gradient / L2 truncation errors below the closed-form
/// bounds for (n, i) in {(1,0),(2,0),(2,1)} and c/2eta in {4, 8, 48n}.
pub fn criterion_2() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let mut detail = String::new();
    let mut ok = true;
    for &(n, i) in &[(1usize, 0usize), (2, 0), (2, 1)] {
        let q = make_product_spheres_poly(n, i).expect("valid index");
        for &ratio in &[4.0f64, 8.0, 48.0 * n as f64] {
            // eta = 1, c = 2 ratio
            let c = 2.0 * ratio;
            let b = prop3_bounds(&q, c, 1.0).expect("ratio >= 1");
            let bl = BandLimited::new(q.clone(), TruncationSpec::new(c, 1.0), 8.0)
                .expect("quadrature converges");
            let (mut sup, mut grad) = (0.0f64, 0.0f64);
            if n == 1 {
                for k in 0..=800 {
                    let x = -8.0 + 16.0 * k as f64 / 800.0;
                    sup = sup.max(bl.error(&[x]).abs());
                    grad = grad.max(bl.grad_error(&[x])[0].abs());
                }
            } else {
                let ax: Vec<f64> = (0..=100).map(|k| -4.0 + 8.0 * k as f64 / 100.0).collect();
                let ge = bl.error_grid_2d(&ax, &ax);
                for v in &ge.values {
                    sup = sup.max(v.abs());
                }
                for (gx, gy) in ge.grad_x.iter().zip(&ge.grad_y) {
                    grad = grad.max(gx.hypot(*gy));
                }
            }
            let l2 = bl.l2_error_sq();
            let pass = sup <= b.sup.value() && grad <= b.grad.value() && l2 <= b.l2_sq.value();
            if !pass {
                ok = false;
                detail.push_str(&format!(
                    "(n={n},i={i},a={ratio}): sup {sup:.3e}/{:.3e} grad {grad:.3e}/{:.3e} \
                     l2sq {l2:.3e}/{:.3e}; ",
                    b.sup.value(),
                    b.grad.value(),
                    b.l2_sq.value()
                ));
            }
        }
    }
    if ok {
        detail = "all 9 (n, i, ratio) cells dominated".into();
    }
    result(2, ok, detail, t0)
}

/// 3: the displayed pair `(0.5 e^{-5/2}, 0.75 e^{-5/2})` certifies `q_0` on a
/// 1024^2 grid.
pub fn criterion_3() -> CriterionResult {
    let t0 = std::time::Instant::now();
    match lemma5_certify(2, 0, 0.5, 1024) {
        Ok((cert, _)) => result(3, cert.margin > 0.0, format!("margin {:.4}", cert.margin), t0),
        Err(e) => result(3, false, e.to_string(), t0),
    }
}

/// 4: `||q_i||_{L2} <= sqrt(3/2) pi^{n/4} (n+6)^2` for n <= 4, all i.
pub fn criterion_4() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for n in 1..=4usize {
        for i in 0..n {
            match lemma6_check(n, i) {
                Ok((num, bound)) if num <= bound => {}
                Ok((num, bound)) => {
                    ok = false;
                    detail.push_str(&format!("(n={n},i={i}): {num:.3} > {bound:.3}; "));
                }
                Err(e) => {
                    ok = false;
                    detail.push_str(&format!("(n={n},i={i}): {e}; "));
                }
            }
        }
    }
    if ok {
        detail = "all 10 (n, i) norms below the closed-form bound".into();
    }
    result(4, ok, detail, t0)
}

/// 5: exactly two nodal loops of `q_{0,c}` strictly inside the window at
/// `eta = c/96`, with the rescaled pair certified, grid 1024^2.
pub fn criterion_5() -> CriterionResult {
    let t0 = std::time::Instant::now();
    match corollary4_certify(2, 0, 1.0, 1.0 / 96.0, 1024) {
        Ok((cert, topo, _)) => result(
            5,
            topo.loops == 2 && topo.all_strictly_inside && cert.margin > 0.0,
            format!("2 loops inside, margin {:.4}", cert.margin),
            t0,
        ),
        Err(e) => result(5, false, e.to_string(), t0),
    }
}

/// 6: n = 1, L = 100, 2000 trials: mean zero count within 3 stderr of
/// `2 sqrt(110/3)`.
pub fn criterion_6() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let e = build_ensemble(1, 100.0).expect("n = 1");
    let est = match estimate_b0(&e, 2000, 256, 42) {
        Ok(v) => v,
        Err(err) => return result(6, false, err.to_string(), t0),
    };
    let expect = kac_rice_expected_zeros(&e) / e.l.sqrt();
    let dev = (est.mean - expect).abs();
    result(
        6,
        dev <= 3.0 * est.stderr,
        format!(
            "mean {:.4} vs {:.4} ({}sigma)",
            est.mean * e.l.sqrt(),
            expect * e.l.sqrt(),
            (dev / est.stderr).round()
        ),
        t0,
    )
}

/// 7: n = 2, L = 10^4: `N_L / L` within 0.5% of pi.
pub fn criterion_7() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let e = build_ensemble(2, 10_000.0).expect("n = 2");
    let ratio = e.n_l as f64 / e.l;
    let rel = (ratio - std::f64::consts::PI).abs() / std::f64::consts::PI;
    result(7, rel <= 0.005, format!("N_L = {}, ratio {ratio:.5} ({rel:.2e} rel)", e.n_l), t0)
}

/// 8: n = 2, L = 400, R = 1, 500 trials: normalized E sup-norm below
/// `rho_K(1)` and normalized gradient mean below `theta_K^1(1)`.
pub fn criterion_8() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let e = build_ensemble(2, 400.0).expect("n = 2");
    let (sup, grad) = empirical_c1(&e, &[0.0, 0.0], 1.0, 500, 7);
    let body = SymbolBody::ball(2, 1.0).expect("unit ball");
    let rho = rho_k(&body, 1.0).expect("ball moments").value.value();
    let theta = theta_k_j(&body, 1.0, 1).expect("ball moments").value.value();
    let ok = sup.mean <= rho && grad.mean <= theta;
    result(
        8,
        ok,
        format!(
            "E sup {:.4} <= {rho:.4}; E grad {:.4} <= {theta:.4}",
            sup.mean, grad.mean
        ),
        t0,
    )
}

/// 9: conv_error strictly decreasing over L in {100, 400, 1600}; the
/// projected norm within 5% of the plane norm at L = 1600.
pub fn criterion_9() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let q = make_product_spheres_poly(2, 0).expect("q_0");
    let f = BandLimited::new(q, TruncationSpec::new(1.0, 1.0 / 12.0), 7.2)
        .expect("quadrature converges");
    let mut prev = f64::INFINITY;
    let mut errs = Vec::new();
    let mut last = None;
    for &l in &[100.0f64, 400.0, 1600.0] {
        let e = build_ensemble(2, l).expect("n = 2");
        let grid = if l >= 1600.0 { 1024 } else { 512 };
        let fit = match implement_local_model(&f, &e, [0.0, 0.0], grid, 5.0) {
            Ok(v) => v,
            Err(err) => return result(9, false, err.to_string(), t0),
        };
        if fit.conv_error >= prev {
            return result(
                9,
                false,
                format!("conv_error not decreasing at L={l}: {} vs {prev}", fit.conv_error),
                t0,
            );
        }
        prev = fit.conv_error;
        errs.push(fit.conv_error);
        last = Some(fit);
    }
    let fit = last.expect("three L values");
    let rel = (fit.l2_norm_s - fit.l2_norm_f).abs() / fit.l2_norm_f;
    result(
        9,
        rel <= 0.05,
        format!("conv {errs:?}; norm rel err {rel:.4}"),
        t0,
    )
}

/// 10: for n = 1..6, the price stays below `exp(127 n^{3/2})` and the full
/// chain's double-exponential stays above the displayed floor, in log-log.
pub fn criterion_10() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for n in 1..=6usize {
        let tau = theorem3_tau(n, 1.0, 1.0);
        if tau.ln() > 127.0 * (n as f64).powf(1.5) {
            ok = false;
            detail.push_str(&format!("tau(n={n}) too large; "));
        }
        match corollary_bound(n, OperatorKind::Laplace, 1.0) {
            Ok(chain) => {
                if !chain.checks.iter().all(|c| c.ok) {
                    ok = false;
                    detail.push_str(&format!("chain check failed at n={n}; "));
                }
            }
            Err(e) => {
                ok = false;
                detail.push_str(&format!("n={n}: {e}; "));
            }
        }
    }
    if ok {
        detail = "tau and double-exponential chains hold for n = 1..6".into();
    }
    result(10, ok, detail, t0)
}

/// 11: two-loop containment probability positive at L in {200, 400}
/// (R = 10, >= 500 trials) and stable across L within 3 combined stderr.
pub fn criterion_11() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let mut ests = Vec::new();
    for &l in &[200.0f64, 400.0] {
        let e = build_ensemble(2, l).expect("n = 2");
        match crate::simulator::estimate_prob_sigma(
            &e,
            [0.0, 0.0],
            10.0,
            SigmaCount::TwoLoops,
            500,
            512,
            11,
        ) {
            Ok(p) => ests.push(p),
            Err(err) => return result(11, false, err.to_string(), t0),
        }
    }
    let comb = (ests[0].stderr.powi(2) + ests[1].stderr.powi(2)).sqrt();
    let agree = (ests[0].mean - ests[1].mean).abs() <= 3.0 * comb;
    let positive = ests[0].mean > 0.0 && ests[1].mean > 0.0;
    // the chain lower bound underflows to 0 in linear scale, so dominance
    // over it is vacuously implied by positivity -- assert it anyway
    let p_lower = corollary_bound(2, OperatorKind::Laplace, 4.0 * std::f64::consts::PI.powi(2))
        .expect("chain holds")
        .p_lower
        .to_logreal()
        .value();
    let dominated = ests.iter().all(|p| p.mean >= p_lower);
    result(
        11,
        positive && agree && dominated,
        format!(
            "p(200) = {:.3} +- {:.3}, p(400) = {:.3} +- {:.3}, lower bound {p_lower:.1e}",
            ests[0].mean, ests[0].stderr, ests[1].mean, ests[1].stderr
        ),
        t0,
    )
}

/// 12: `E(b_0)/L` at L = 200 and 400 within 20% relative; both above the
/// (vacuously small) chain lower bound.
pub fn criterion_12() -> CriterionResult {
    let t0 = std::time::Instant::now();
    let mut means = Vec::new();
    for &l in &[200.0f64, 400.0] {
        let e = build_ensemble(2, l).expect("n = 2");
        let grid = if l >= 400.0 { 512 } else { 256 };
        match estimate_b0(&e, 300, grid, 12) {
            Ok(est) => means.push(est.mean),
            Err(err) => return result(12, false, err.to_string(), t0),
        }
    }
    let rel = (means[0] - means[1]).abs() / means[1];
    let floor = corollary_bound(2, OperatorKind::Laplace, 4.0 * std::f64::consts::PI.powi(2))
        .expect("chain holds")
        .c_lower
        .to_logreal()
        .value();
    let ok = rel <= 0.20 && means.iter().all(|&m| m > floor);
    result(
        12,
        ok,
        format!("means {:.4} / {:.4} (rel {rel:.3}), floor {floor:.1e}", means[0], means[1]),
        t0,
    )
}

pub fn run_criterion(id: usize) -> CriterionResult {
    match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(),
        _ => panic!("criterion id must be 1..=12"),
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    (1..=12).map(run_criterion).collect()
}

pub fn markdown_table(results: &[CriterionResult]) -> String {
    let mut out = String::from("| # | check | status | time | detail |\n|---|---|---|---|---|\n");
    for r in results {
        out.push_str(&format!(
            "| {} | {} | {} | {:.1}s | {} |\n",
            r.id,
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.seconds,
            r.detail.replace('|', "/")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        for id in [1usize, 7, 10] {
            let r = run_criterion(id);
            assert!(r.passed, "criterion {id}: {}", r.detail);
        }
    }

    #[test]
    fn table_layout() {
        let rows = vec![CriterionResult {
            id: 1,
            name: "hermite-moment-identity",
            passed: true,
            detail: "ok".into(),
            seconds: 0.1,
        }];
        let md = markdown_table(&rows);
        assert!(md.contains("| 1 | hermite-moment-identity | pass |"));
    }
}

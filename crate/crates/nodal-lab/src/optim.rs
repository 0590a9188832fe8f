//! Deterministic 1-D minimization: coarse log-grid bracketing followed by
//! golden-section refinement.

const PHI_COMPLEMENT: f64 = 0.381_966_011_250_105_1; // 2 - golden ratio

/// Outcome of [`minimize_log_grid`].
#[derive(Debug, Clone, Copy)]
pub struct MinResult {
    pub x: f64,
    pub f: f64,
    /// Set when the minimum sat on a grid boundary (monotone tail); the
    /// boundary value is reported.
    pub boundary: bool,
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let mut x1 = a + PHI_COMPLEMENT * (b - a);
    let mut x2 = b - PHI_COMPLEMENT * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + PHI_COMPLEMENT * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - PHI_COMPLEMENT * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimize `f` over `[lo, hi]` by scanning `grid_points` log-spaced samples,
/// then refining the bracketing interval with golden section to relative
/// tolerance `1e-10` on the abscissa.
///
/// `f` is expected to take and return plain f64 but may operate on the log of
/// an objective (callers pass log-objectives for stability).
pub fn minimize_log_grid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, grid_points: usize) -> MinResult {
    assert!(lo > 0.0 && hi > lo && grid_points >= 3);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (grid_points - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    let xs: Vec<f64> = (0..grid_points).map(|i| (ln_lo + i as f64 * step).exp()).collect();
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    if best_i == 0 || best_i == grid_points - 1 {
        return MinResult { x: xs[best_i], f: best_f, boundary: true };
    }
    let (x, fx) = golden_section(&f, xs[best_i - 1], xs[best_i + 1], 1e-10);
    if fx <= best_f {
        MinResult { x, f: fx, boundary: false }
    } else {
        MinResult { x: xs[best_i], f: best_f, boundary: false }
    }
}

/// Maximize `f` on `[a, b]` (golden section on `-f`).
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let (x, neg) = golden_section(|t| -f(t), a, b, rel_tol);
    (x, -neg)
}

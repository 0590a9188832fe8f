//! Quantitative transversality: grid certification of `(delta, epsilon)`
//! pairs — `|f| > delta` outside a compact interior region and
//! `|f| <= delta => |df| > epsilon` — with explicit Lipschitz slack, plus
//! the Pareto frontier and an empirical perturbation-stability test.

use crate::nodal::{extract_loops_2d, NodalSummary};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransversalityError {
    #[error("grid field has no gradient samples")]
    MissingGradients,
    #[error("binary field data malformed: {0}")]
    BadBinary(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum WindowShape {
    Ball { radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl WindowShape {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            WindowShape::Ball { radius } => {
                p.iter().map(|v| v * v).sum::<f64>() <= radius * radius
            }
            WindowShape::Box { lo, hi } => {
                p.iter().zip(lo.iter().zip(hi)).all(|(&v, (&a, &b))| v >= a && v <= b)
            }
        }
    }

    /// Distance from an interior point to the window boundary.
    fn boundary_dist(&self, p: &[f64]) -> f64 {
        match self {
            WindowShape::Ball { radius } => {
                radius - p.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
            WindowShape::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&a, &b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `sup_{z in W} |z|` — the window radius entering `tau`.
    pub fn sup_norm_radius(&self) -> f64 {
        match self {
            WindowShape::Ball { radius } => *radius,
            WindowShape::Box { lo, hi } => {
                let mut sq = 0.0;
                for (&a, &b) in lo.iter().zip(hi) {
                    sq += a.abs().max(b.abs()).powi(2);
                }
                sq.sqrt()
            }
        }
    }
}

/// Uniform tensor-grid samples of a scalar field and its gradient over a
/// window, with Lipschitz bounds for both. Node `idx` (row-major, first axis
/// slow) sits at `origin + idx * spacing` per axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridField {
    pub n: usize,
    pub window: WindowShape,
    pub dims: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub values: Vec<f64>,
    /// `n` components per node, node-major.
    pub gradients: Vec<f64>,
    pub lip_value: f64,
    pub lip_grad: f64,
}

impl GridField {
    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node_pos(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        let mut pos = vec![0.0; self.n];
        for d in (0..self.n).rev() {
            pos[d] = self.origin[d] + (idx % self.dims[d]) as f64 * self.spacing;
            idx /= self.dims[d];
        }
        pos
    }

    pub fn grad_norm(&self, flat: usize) -> f64 {
        self.gradients[flat * self.n..(flat + 1) * self.n]
            .iter()
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    /// Flat binary layout: magic, dims, origin, spacing, Lipschitz bounds,
    /// then values, then gradients, little-endian f64 payload.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"NLGF");
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &o in &self.origin {
            out.extend_from_slice(&o.to_le_bytes());
        }
        out.extend_from_slice(&self.spacing.to_le_bytes());
        out.extend_from_slice(&self.lip_value.to_le_bytes());
        out.extend_from_slice(&self.lip_grad.to_le_bytes());
        match &self.window {
            WindowShape::Ball { radius } => {
                out.extend_from_slice(&1u32.to_le_bytes());
                out.extend_from_slice(&radius.to_le_bytes());
            }
            WindowShape::Box { lo, hi } => {
                out.extend_from_slice(&2u32.to_le_bytes());
                for &v in lo.iter().chain(hi) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        for &v in self.values.iter().chain(&self.gradients) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_binary(data: &[u8]) -> Result<Self, TransversalityError> {
        let bad = |m: &str| TransversalityError::BadBinary(m.into());
        let mut at = 0usize;
        let take = |at: &mut usize, k: usize| -> Result<&[u8], TransversalityError> {
            if *at + k > data.len() {
                return Err(TransversalityError::BadBinary("truncated".into()));
            }
            let s = &data[*at..*at + k];
            *at += k;
            Ok(s)
        };
        let u32_at = |at: &mut usize| -> Result<u32, TransversalityError> {
            Ok(u32::from_le_bytes(take(at, 4)?.try_into().unwrap()))
        };
        let f64_at = |at: &mut usize| -> Result<f64, TransversalityError> {
            Ok(f64::from_le_bytes(take(at, 8)?.try_into().unwrap()))
        };
        if take(&mut at, 4)? != b"NLGF" {
            return Err(bad("missing magic"));
        }
        let n = u32_at(&mut at)? as usize;
        if n == 0 || n > 8 {
            return Err(bad("bad dimension"));
        }
        let dims: Vec<usize> =
            (0..n).map(|_| u32_at(&mut at).map(|v| v as usize)).collect::<Result<_, _>>()?;
        let origin: Vec<f64> = (0..n).map(|_| f64_at(&mut at)).collect::<Result<_, _>>()?;
        let spacing = f64_at(&mut at)?;
        let lip_value = f64_at(&mut at)?;
        let lip_grad = f64_at(&mut at)?;
        let window = match u32_at(&mut at)? {
            1 => WindowShape::Ball { radius: f64_at(&mut at)? },
            2 => {
                let lo: Vec<f64> = (0..n).map(|_| f64_at(&mut at)).collect::<Result<_, _>>()?;
                let hi: Vec<f64> = (0..n).map(|_| f64_at(&mut at)).collect::<Result<_, _>>()?;
                WindowShape::Box { lo, hi }
            }
            _ => return Err(bad("unknown window tag")),
        };
        let count: usize = dims.iter().product();
        let values: Vec<f64> = (0..count).map(|_| f64_at(&mut at)).collect::<Result<_, _>>()?;
        let gradients: Vec<f64> =
            (0..count * n).map(|_| f64_at(&mut at)).collect::<Result<_, _>>()?;
        Ok(GridField { n, window, dims, origin, spacing, values, gradients, lip_value, lip_grad })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub position: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum PairVerdict {
    Certified { margin: f64 },
    Refuted { witness: Witness },
    Inconclusive { reason: String },
}

impl PairVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, PairVerdict::Certified { .. })
    }
}

/// A certified regular pair: window radius, L2 norm, the `(delta, epsilon)`
/// pairs, the Lipschitz slack in force, and the detected topology tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularPairCert {
    pub window_radius: f64,
    pub l2_norm: f64,
    pub pairs: Vec<(f64, f64)>,
    pub margin: f64,
    pub sigma_type: String,
}

/// Definition-2 check with Lipschitz slack.
///
/// Certified when (a) the cells where `|f| > delta` cannot be guaranteed form
/// a region strictly interior to the window, and (b) at every node where
/// `|f| <= delta` cannot be excluded, the gradient exceeds `epsilon` with
/// slack to spare. Refuted on a node violating the un-slacked second
/// condition; inconclusive otherwise.
pub fn check_pair(
    f: &GridField,
    delta: f64,
    epsilon: f64,
) -> Result<PairVerdict, TransversalityError> {
    if f.gradients.len() != f.node_count() * f.n {
        return Err(TransversalityError::MissingGradients);
    }
    let sn = (f.n as f64).sqrt();
    let slack_v = f.lip_value * f.spacing * sn / 2.0;
    let slack_g = f.lip_grad * f.spacing * sn / 2.0;
    // nodes whose cell may touch the window boundary
    let boundary_band = f.spacing * sn;
    let mut margin = f64::INFINITY;
    let mut inconclusive: Option<String> = None;
    for flat in 0..f.node_count() {
        let pos = f.node_pos(flat);
        if !f.window.contains(&pos) {
            continue;
        }
        let v = f.values[flat].abs();
        let uncertain = v <= delta + slack_v;
        let near_boundary = f.window.boundary_dist(&pos) <= boundary_band;
        if uncertain {
            let g = f.grad_norm(flat);
            if v <= delta && g <= epsilon {
                return Ok(PairVerdict::Refuted {
                    witness: Witness { position: pos, value: f.values[flat], grad_norm: g },
                });
            }
            if near_boundary {
                inconclusive = Some(format!(
                    "small value {v:.3e} in the boundary band at {pos:?}; grid too coarse \
                     to confine K_W to the interior"
                ));
                continue;
            }
            let surplus = g - slack_g - epsilon;
            if surplus <= 0.0 {
                inconclusive = Some(format!(
                    "gradient {g:.3e} at {pos:?} within slack {slack_g:.3e} of epsilon"
                ));
            }
            margin = margin.min(surplus);
        } else if near_boundary {
            margin = margin.min(v - slack_v - delta);
        }
    }
    if let Some(reason) = inconclusive {
        return Ok(PairVerdict::Inconclusive { reason });
    }
    if margin == f64::INFINITY {
        // no uncertain and no boundary nodes at all: vacuous window
        margin = 0.0;
    }
    Ok(PairVerdict::Certified { margin })
}

/// For each `delta`, the largest certified `epsilon` by bisection (12 rounds);
/// `epsilon = 0` when nothing certifies.
pub fn pair_frontier(
    f: &GridField,
    delta_grid: &[f64],
) -> Result<Vec<(f64, f64)>, TransversalityError> {
    let g_max = (0..f.node_count()).map(|i| f.grad_norm(i)).fold(0.0f64, f64::max);
    let mut out = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        let mut lo = 0.0f64;
        let mut hi = g_max;
        if !check_pair(f, delta, lo)?.is_certified() {
            out.push((delta, 0.0));
            continue;
        }
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            if check_pair(f, delta, mid)?.is_certified() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((delta, lo));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub trials: usize,
    pub baseline_b0: usize,
    /// Trials whose loop count inside the window changed.
    pub changed: Vec<(u64, usize)>,
    pub ambiguous_cells_max: usize,
}

fn grid_axes(f: &GridField) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> =
        (0..f.dims[0]).map(|i| f.origin[0] + i as f64 * f.spacing).collect();
    let ys: Vec<f64> =
        (0..f.dims[1]).map(|i| f.origin[1] + i as f64 * f.spacing).collect();
    (xs, ys)
}

/// Closed loops of the field restricted to the window (values outside the
/// window are clamped to a positive constant so boundary-crossing contours
/// never close).
pub fn window_loops(f: &GridField) -> NodalSummary {
    assert_eq!(f.n, 2);
    let (xs, ys) = grid_axes(f);
    let mut v = f.values.clone();
    for flat in 0..f.node_count() {
        if !f.window.contains(&f.node_pos(flat)) {
            v[flat] = 1.0;
        }
    }
    extract_loops_2d(&v, f.dims[0], f.dims[1], &xs, &ys, false)
}

/// Draw random low-degree trigonometric perturbations with `sup|sigma| < delta`
/// and `sup|d sigma| < epsilon`, and check that the loop count inside the
/// window never changes (empirical face of the C1-stability mechanism).
pub fn perturbation_stability(
    f: &GridField,
    pair: (f64, f64),
    trials: usize,
    seed: u64,
) -> Result<StabilityReport, TransversalityError> {
    assert_eq!(f.n, 2);
    let (delta, epsilon) = pair;
    let base = window_loops(f);
    let (xs, ys) = grid_axes(f);
    let radius = f.window.sup_norm_radius();
    let omega = std::f64::consts::PI / (2.0 * radius);
    let mut changed = Vec::new();
    let mut amb = base.ambiguous_cells;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::spectral_domain::chunk_seed(
            seed,
            trial as u64,
        ));
        // sigma(x) = sum over |k|_inf <= 2 of c_k cos(<k, omega x> + phi_k)
        let mut modes = Vec::new();
        for kx in -2i32..=2 {
            for ky in -2i32..=2 {
                let c: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                modes.push((kx as f64 * omega, ky as f64 * omega, c, phi));
            }
        }
        let sigma = |x: f64, y: f64| -> (f64, f64, f64) {
            let mut v = 0.0;
            let mut gx = 0.0;
            let mut gy = 0.0;
            for &(kx, ky, c, phi) in &modes {
                let arg = kx * x + ky * y + phi;
                v += c * arg.cos();
                gx -= c * kx * arg.sin();
                gy -= c * ky * arg.sin();
            }
            (v, gx, gy)
        };
        // scale to respect the (delta, epsilon) budget with 10% headroom
        let mut sup_v = 0.0f64;
        let mut sup_g = 0.0f64;
        for &x in xs.iter().step_by(4) {
            for &y in ys.iter().step_by(4) {
                let (v, gx, gy) = sigma(x, y);
                sup_v = sup_v.max(v.abs());
                sup_g = sup_g.max((gx * gx + gy * gy).sqrt());
            }
        }
        let scale = 0.9 * (delta / sup_v.max(1e-300)).min(epsilon / sup_g.max(1e-300));
        let mut v = f.values.clone();
        for (ix, &x) in xs.iter().enumerate() {
            for (iy, &y) in ys.iter().enumerate() {
                let flat = ix * f.dims[1] + iy;
                let pos = [x, y];
                if f.window.contains(&pos) {
                    v[flat] += scale * sigma(x, y).0;
                } else {
                    v[flat] = 1.0;
                }
            }
        }
        let s = extract_loops_2d(&v, f.dims[0], f.dims[1], &xs, &ys, false);
        amb = amb.max(s.ambiguous_cells);
        if s.b0 != base.b0 {
            changed.push((trial as u64, s.b0));
        }
    }
    Ok(StabilityReport {
        trials,
        baseline_b0: base.b0,
        changed,
        ambiguous_cells_max: amb,
    })
}

//! Nodal-set extraction: sign-change zeros with bisection refinement in 1-D,
//! marching squares with loop assembly in 2-D (periodic for the torus,
//! clipped for window fields).

use serde::{Deserialize, Serialize};

/// Per-field nodal summary. In 2-D `b0` counts closed loops; curves that hit
/// the boundary of a non-periodic window are tallied separately.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NodalSummary {
    pub b0: usize,
    pub loops: Vec<Vec<[f64; 2]>>,
    pub open_curves: usize,
    pub zeros: Vec<f64>,
    pub ambiguous_cells: usize,
}

/// Zeros of a periodic function on `[0, 2 pi)` located by sign changes on a
/// uniform sample grid and refined by bisection to `1e-10`.
pub fn zeros_periodic_1d(f: impl Fn(f64) -> f64, samples: usize) -> NodalSummary {
    assert!(samples >= 4);
    let h = 2.0 * std::f64::consts::PI / samples as f64;
    let vals: Vec<f64> = (0..samples).map(|i| f(i as f64 * h)).collect();
    let mut zeros = Vec::new();
    for i in 0..samples {
        let a = vals[i];
        let b = vals[(i + 1) % samples];
        if (a < 0.0) != (b < 0.0) {
            let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
            let mut flo = a;
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
    }
    NodalSummary { b0: zeros.len(), zeros, ..Default::default() }
}

// Edge identifiers: horizontal edges run along axis 0 between nodes (i, j)
// and (i+1, j); vertical edges between (i, j) and (i, j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Marching squares over a tensor grid with `values[ix * ny + iy]`.
///
/// `periodic` treats the grid as covering the full torus (node spacing
/// `2 pi / n`, no duplicated seam row); otherwise cells stop at the grid edge
/// and contours leaving the grid are counted as open curves.
pub fn extract_loops_2d(
    values: &[f64],
    nx: usize,
    ny: usize,
    xs: &[f64],
    ys: &[f64],
    periodic: bool,
) -> NodalSummary {
    assert_eq!(values.len(), nx * ny);
    assert_eq!(xs.len(), nx);
    assert_eq!(ys.len(), ny);
    let hx = if periodic { 2.0 * std::f64::consts::PI / nx as f64 } else { xs[1] - xs[0] };
    let hy = if periodic { 2.0 * std::f64::consts::PI / ny as f64 } else { ys[1] - ys[0] };
    let val = |i: usize, j: usize| values[(i % nx) * ny + (j % ny)];
    let neg = |v: f64| v < 0.0;
    let (cx, cy) = if periodic { (nx, ny) } else { (nx - 1, ny - 1) };

    // crossing point on an edge by linear interpolation
    let cross = |e: Edge| -> [f64; 2] {
        match e {
            Edge::H(i, j) => {
                let (a, b) = (val(i, j), val(i + 1, j));
                let t = a / (a - b);
                [xs[i % nx] + t * hx, ys[j % ny]]
            }
            Edge::V(i, j) => {
                let (a, b) = (val(i, j), val(i, j + 1));
                let t = a / (a - b);
                [xs[i % nx], ys[j % ny] + t * hy]
            }
        }
    };

    // canonical edge ids (wrap indices when periodic)
    let canon = |e: Edge| -> Edge {
        match e {
            Edge::H(i, j) => Edge::H(i % cx.max(1), j % ny),
            Edge::V(i, j) => Edge::V(i % nx, j % cy.max(1)),
        }
    };

    use std::collections::HashMap;
    let mut adj: HashMap<Edge, Vec<Edge>> = HashMap::new();
    let mut ambiguous = 0usize;
    for i in 0..cx {
        for j in 0..cy {
            let (va, vb, vc, vd) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1));
            let bottom = neg(va) != neg(vb);
            let right = neg(vb) != neg(vc);
            let top = neg(vd) != neg(vc);
            let left = neg(va) != neg(vd);
            let crossings = bottom as u8 + right as u8 + top as u8 + left as u8;
            if crossings == 0 {
                continue;
            }
            let eb = canon(Edge::H(i, j));
            let er = canon(Edge::V(i + 1, j));
            let et = canon(Edge::H(i, j + 1));
            let el = canon(Edge::V(i, j));
            let mut link = |a: Edge, b: Edge| {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            };
            if crossings == 2 {
                let pair: (Edge, Edge) = match (bottom, right, top, left) {
                    (true, true, false, false) => (eb, er),
                    (true, false, true, false) => (eb, et),
                    (true, false, false, true) => (eb, el),
                    (false, true, true, false) => (er, et),
                    (false, true, false, true) => (er, el),
                    (false, false, true, true) => (et, el),
                    _ => unreachable!(),
                };
                link(pair.0, pair.1);
            } else {
                // saddle: disambiguate by the bilinear center value
                ambiguous += 1;
                let center = 0.25 * (va + vb + vc + vd);
                if neg(center) == neg(va) {
                    // corners B and D are isolated: arcs around each
                    link(eb, er);
                    link(et, el);
                } else {
                    link(eb, el);
                    link(er, et);
                }
            }
        }
    }

    // walk the graph (every vertex has degree 1 or 2): chains first, from
    // their degree-1 endpoints, then the remaining pure cycles
    let mut visited: HashMap<Edge, bool> = adj.keys().map(|&e| (e, false)).collect();
    let mut loops: Vec<Vec<[f64; 2]>> = Vec::new();
    let mut open_curves = 0usize;
    let keys: Vec<Edge> = {
        let mut k: Vec<Edge> = adj.keys().copied().collect();
        k.sort_by_key(|e| match *e {
            Edge::H(i, j) => (0usize, i, j),
            Edge::V(i, j) => (1usize, i, j),
        });
        k
    };
    let walk = |start: Edge, visited: &mut HashMap<Edge, bool>| -> Vec<Edge> {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut cur = start;
        loop {
            match adj[&cur].iter().copied().find(|e| !visited[e]) {
                Some(e) => {
                    visited.insert(e, true);
                    chain.push(e);
                    cur = e;
                }
                None => return chain,
            }
        }
    };
    for &start in &keys {
        if visited[&start] || adj[&start].len() != 1 {
            continue;
        }
        walk(start, &mut visited);
        open_curves += 1;
    }
    for &start in &keys {
        if visited[&start] {
            continue;
        }
        let chain = walk(start, &mut visited);
        loops.push(chain.iter().map(|&e| cross(e)).collect());
    }

    NodalSummary {
        b0: loops.len(),
        loops,
        open_curves,
        zeros: Vec::new(),
        ambiguous_cells: ambiguous,
    }
}

/// Torus distance between two points of `[0, 2 pi)^2`.
pub fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut s = 0.0;
    for d in 0..2 {
        let mut diff = (a[d] - b[d]).abs() % two_pi;
        if diff > std::f64::consts::PI {
            diff = two_pi - diff;
        }
        s += diff * diff;
    }
    s.sqrt()
}

/// Loops whose every vertex lies strictly inside the ball (torus metric when
/// `periodic`; Euclidean otherwise).
pub fn loops_inside_ball(
    summary: &NodalSummary,
    center: [f64; 2],
    radius: f64,
    periodic: bool,
) -> usize {
    summary
        .loops
        .iter()
        .filter(|l| {
            l.iter().all(|&p| {
                let d = if periodic {
                    torus_dist(p, center)
                } else {
                    ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt()
                };
                d < radius
            })
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
    }

    #[test]
    fn cosine_zeros_1d() {
        let s = zeros_periodic_1d(|x| x.cos(), 256);
        assert_eq!(s.b0, 2);
        assert!((s.zeros[0] - PI / 2.0).abs() < 1e-9);
        assert!((s.zeros[1] - 3.0 * PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_small_loop() {
        // cos x + cos y - 1.99: tiny loop around the origin
        let n = 256;
        let xs = grid(n);
        let ys = grid(n);
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                v[i * n + j] = x.cos() + y.cos() - 1.99;
            }
        }
        let s = extract_loops_2d(&v, n, n, &xs, &ys, true);
        assert_eq!(s.b0, 1, "open={} amb={}", s.open_curves, s.ambiguous_cells);
        assert_eq!(s.open_curves, 0);
        assert_eq!(loops_inside_ball(&s, [0.0, 0.0], 0.5, true), 1);
        assert_eq!(loops_inside_ball(&s, [PI, PI], 0.5, true), 0);
    }

    #[test]
    fn two_vertical_bands() {
        // cos x = 0: two wrapping vertical lines on the torus
        let n = 128;
        let xs = grid(n);
        let ys = grid(n);
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for j in 0..n {
                v[i * n + j] = x.cos();
            }
        }
        let s = extract_loops_2d(&v, n, n, &xs, &ys, true);
        assert_eq!(s.b0, 2);
        for l in &s.loops {
            assert_eq!(l.len(), n);
        }
    }

    #[test]
    fn circle_in_window() {
        // non-periodic window [-2, 2]^2, zero set |z| = 1
        let n = 201;
        let xs: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                v[i * n + j] = x * x + y * y - 1.0;
            }
        }
        let s = extract_loops_2d(&v, n, n, &xs, &xs, false);
        assert_eq!(s.b0, 1);
        assert_eq!(s.open_curves, 0);
        // every vertex near the unit circle
        for p in &s.loops[0] {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn open_curve_in_window() {
        // zero set x = 0 crosses the whole window: one open curve, no loop
        let n = 101;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for j in 0..n {
                v[i * n + j] = x + 0.001; // avoid exact node zeros
            }
        }
        let s = extract_loops_2d(&v, n, n, &xs, &xs, false);
        assert_eq!(s.b0, 0);
        assert_eq!(s.open_curves, 1);
    }

    #[test]
    fn parity_invariance() {
        let n = 128;
        let xs = grid(n);
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                v[i * n + j] = (x).sin() * (y).sin() + 0.3 * (2.0 * x).cos() + 0.01;
            }
        }
        let s1 = extract_loops_2d(&v, n, n, &xs, &xs, true);
        let neg: Vec<f64> = v.iter().map(|a| -a).collect();
        let s2 = extract_loops_2d(&neg, n, n, &xs, &xs, true);
        assert_eq!(s1.b0, s2.b0);
        assert_eq!(s1.open_curves, s2.open_curves);
    }

    #[test]
    fn saddle_disambiguation() {
        // x*y has a saddle at 0; on a window offset slightly, marching squares
        // must not crash and produces open curves only
        let n = 101;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64 + 0.0037).collect();
        let mut v = vec![0.0; n * n];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                v[i * n + j] = x * y;
            }
        }
        let s = extract_loops_2d(&v, n, n, &xs, &xs, false);
        assert_eq!(s.b0, 0);
        assert!(s.open_curves >= 2);
    }
}

//! Panel quadrature utilities shared by the inversion engine and the
//! functional integrals.

use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the n-point rule by Newton iteration on the Legendre
    /// polynomial; accurate to machine precision for the small n used here.
    fn compute(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            // Chebyshev-style initial guess.
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Evaluate P_n and P_n' by the three-term recurrence.
                let mut p0 = 1.0;
                let mut p1 = x;
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[k] = x;
            weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }
}

/// The 8-point rule, cached for the inversion panels.
pub fn gl8() -> &'static GaussLegendre {
    static GL8: OnceLock<GaussLegendre> = OnceLock::new();
    GL8.get_or_init(|| GaussLegendre::compute(8))
}

/// The 16-point rule, cached for smooth one-dimensional integrals.
pub fn gl16() -> &'static GaussLegendre {
    static GL16: OnceLock<GaussLegendre> = OnceLock::new();
    GL16.get_or_init(|| GaussLegendre::compute(16))
}

/// Integrates `f` over `[a, b]` with a fixed number of equal GL-16 panels.
pub fn panel_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gl16();
    let w = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let mid = lo + 0.5 * w;
        let half = 0.5 * w;
        let mut acc = 0.0;
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            acc += wt * f(mid + half * x);
        }
        parts.push(acc * half);
    }
    pairwise_sum(&parts)
}

/// Adaptive integration over `[a, b]`: bisects the interval with the worst
/// GL-8 vs GL-16 discrepancy until the summed error estimate meets the
/// tolerance. Returns `(value, error_estimate)`.
pub fn adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> (f64, f64) {
    struct Piece {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let eval = |lo: f64, hi: f64| -> (f64, f64) {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let r8 = gl8();
        let r16 = gl16();
        let mut coarse = 0.0;
        for (x, wt) in r8.nodes.iter().zip(&r8.weights) {
            coarse += wt * f(mid + half * x);
        }
        let mut fine = 0.0;
        for (x, wt) in r16.nodes.iter().zip(&r16.weights) {
            fine += wt * f(mid + half * x);
        }
        let value = fine * half;
        let err = (fine - coarse).abs() * half;
        (value, err)
    };

    let (v0, e0) = eval(a, b);
    let mut pieces = vec![Piece {
        a,
        b,
        value: v0,
        err: e0,
    }];
    for _ in 0..4000 {
        let total: f64 = pairwise_sum(&pieces.iter().map(|p| p.value).collect::<Vec<_>>());
        let err: f64 = pieces.iter().map(|p| p.err).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        // Split the piece with the largest error estimate; ties broken by
        // position so the refinement order is deterministic.
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            if p.err > pieces[worst].err || (p.err == pieces[worst].err && p.a < pieces[worst].a) {
                worst = i;
            }
        }
        let Piece { a: lo, b: hi, .. } = pieces[worst];
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval exhausted at f64 resolution
        }
        let (vl, el) = eval(lo, mid);
        let (vr, er) = eval(mid, hi);
        pieces[worst] = Piece {
            a: lo,
            b: mid,
            value: vl,
            err: el,
        };
        pieces.push(Piece {
            a: mid,
            b: hi,
            value: vr,
            err: er,
        });
    }
    pieces.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let value = pairwise_sum(&pieces.iter().map(|p| p.value).collect::<Vec<_>>());
    let err = pieces.iter().map(|p| p.err).sum();
    (value, err)
}

/// Pairwise (tree) summation; deterministic for a fixed input order and
/// accurate to O(eps log n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

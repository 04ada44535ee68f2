//! Convolution powers of the square-law density by Fourier inversion, the
//! Gaussian local-limit comparator, and computable versions of the
//! frequency-split bounds.
//!
//! The inversion integral `h^{*n}(u) = int g(xi)^n exp(2 pi i xi u) d xi`
//! is evaluated on `[0, Xi]` by composite Gauss-Legendre panels sized to
//! resolve the oscillation, doubled by Hermitian symmetry. Beyond the cutoff
//! the integrand decays like `(A^2/(2 pi xi))^{n/2}`; two integration-by-parts
//! boundary terms are added in closed form and the remainder is bounded
//! rigorously, so moderate cutoffs reach tight absolute tolerances even for
//! small `n`. Every evaluation carries its own error estimate.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::densities::{Delta, Density};
use crate::error::{Error, Result};
use crate::quad::{self, gl16, gl8};

/// Frequency at which the analytic and non-analytic regions split, as a
/// multiple of `delta`.
pub const DEFAULT_FREQ_SPLIT: f64 = 1.0 / (4.0 * PI);

/// Smallest supported convolution order. Absolute integrability of `g^n`
/// needs `n >= 3` for the mixture; 5 adds margin and matches the smallest
/// exponents appearing downstream.
pub const MIN_ORDER: u32 = 5;

/// Quadrature configuration for the inversion engine.
#[derive(Debug, Clone)]
pub struct FourierPlan {
    /// Absolute tolerance target for the truncated frequency tail.
    pub tail_tol: f64,
    /// Panel points per oscillation period of `exp(2 pi i xi u)`.
    pub points_per_wave: f64,
    /// Minimum number of panels regardless of the cutoff.
    pub min_panels: usize,
    /// Hard limit on the frequency cutoff.
    pub max_cutoff: f64,
    /// Hard limit on stored quadrature nodes.
    pub max_nodes: usize,
}

impl Default for FourierPlan {
    fn default() -> Self {
        FourierPlan {
            tail_tol: 1e-14,
            points_per_wave: 16.0,
            min_panels: 64,
            max_cutoff: 1e7,
            max_nodes: 1 << 26,
        }
    }
}

/// A density estimate together with its quadrature error bound.
#[derive(Debug, Clone, Copy)]
pub struct ConvValue {
    pub value: f64,
    pub err: f64,
}

/// Exponential tilt of the square law: the inversion then runs on the
/// tilted characteristic function `g(xi + i theta/(2 pi)) / M(theta)` and
/// the result transforms back as
/// `h^{*n}(u) = exp(-theta u) M(theta)^n h_theta^{*n}(u)`.
///
/// Centering the tilt at the evaluation point (the saddle) turns a value
/// buried ten orders below the integrand's mass into the peak value of the
/// tilted law, so relative accuracy becomes uniform across the tails.
#[derive(Debug, Clone, Copy)]
struct Tilt {
    theta: f64,
    m: f64,
    ln_m: f64,
    mean: f64,
    var: f64,
}

impl Tilt {
    const NONE: Tilt = Tilt {
        theta: 0.0,
        m: 1.0,
        ln_m: 0.0,
        mean: 1.0,
        var: 1.0,
    };
}

/// Upper end of the natural-parameter domain (the hot component's decay
/// rate); tilts must stay strictly below it.
fn tilt_boundary(density: &Density) -> f64 {
    match density {
        Density::KacMixture(d) => d.value(),
        Density::StandardGaussian => 0.5,
    }
}

/// Moment function of the square law at natural parameter `theta`:
/// `(M, mean, variance)` of the tilted single-summand law.
fn mgf_stats(density: &Density, theta: f64) -> (f64, f64, f64) {
    match density {
        Density::KacMixture(d) => {
            let delta = d.value();
            let a = 1.0 - theta / delta;
            let b = 1.0 - theta / (1.0 - delta);
            let m = delta * a.powf(-0.5) + (1.0 - delta) * b.powf(-0.5);
            let m1 = 0.5 * (a.powf(-1.5) + b.powf(-1.5));
            let m2 = 0.75 * (a.powf(-2.5) / delta + b.powf(-2.5) / (1.0 - delta));
            let mean = m1 / m;
            (m, mean, m2 / m - mean * mean)
        }
        Density::StandardGaussian => {
            let a = 1.0 - 2.0 * theta;
            (a.powf(-0.5), 1.0 / a, 2.0 / (a * a))
        }
    }
}

/// Solves `n * mean(theta) = u` by bisection; the tilted mean is strictly
/// increasing in `theta`.
fn solve_tilt(density: &Density, n: u32, u: f64) -> Result<Tilt> {
    let target = u / n as f64;
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::Domain(format!("saddle target u/n = {target} invalid")));
    }
    let boundary = tilt_boundary(density);
    let mut hi = boundary * (1.0 - 1e-12);
    let mut lo = -1.0;
    while mgf_stats(density, lo).1 > target {
        lo *= 8.0;
        if lo < -1e18 {
            return Err(Error::Domain(format!(
                "saddle for u/n = {target} below the reachable range"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mgf_stats(density, mid).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (m, mean, var) = mgf_stats(density, theta);
    Ok(Tilt {
        theta,
        m,
        ln_m: m.ln(),
        mean,
        var,
    })
}

/// Characteristic function of the tilted law and its `xi` derivative.
fn tilted_char(density: &Density, tilt: &Tilt, xi: f64) -> Complex64 {
    if tilt.theta == 0.0 {
        return density.char_fn(xi);
    }
    match density {
        Density::KacMixture(d) => {
            let delta = d.value();
            let a = 1.0 - tilt.theta / delta;
            let b = 1.0 - tilt.theta / (1.0 - delta);
            let hot = Complex64::new(a, 2.0 * PI * xi / delta).sqrt();
            let cold = Complex64::new(b, 2.0 * PI * xi / (1.0 - delta)).sqrt();
            (delta / hot + (1.0 - delta) / cold) / tilt.m
        }
        Density::StandardGaussian => {
            let a = 1.0 - 2.0 * tilt.theta;
            1.0 / (Complex64::new(a, 4.0 * PI * xi).sqrt() * tilt.m)
        }
    }
}

fn tilted_char_deriv(density: &Density, tilt: &Tilt, xi: f64) -> Complex64 {
    if tilt.theta == 0.0 {
        return density.char_fn_deriv(xi);
    }
    let mi_pi = Complex64::new(0.0, -PI);
    match density {
        Density::KacMixture(d) => {
            let delta = d.value();
            let a = 1.0 - tilt.theta / delta;
            let b = 1.0 - tilt.theta / (1.0 - delta);
            let hot = Complex64::new(a, 2.0 * PI * xi / delta);
            let cold = Complex64::new(b, 2.0 * PI * xi / (1.0 - delta));
            mi_pi * (hot.powf(-1.5) + cold.powf(-1.5)) / tilt.m
        }
        Density::StandardGaussian => {
            let a = 1.0 - 2.0 * tilt.theta;
            2.0 * mi_pi * Complex64::new(a, 4.0 * PI * xi).powf(-1.5) / tilt.m
        }
    }
}

/// One-sided tail bound after two integration-by-parts passes with the
/// boundary terms evaluated, doubled for both tails.
fn osc_tail(cutoff: f64, n: u32, u: f64, amp: f64) -> f64 {
    let lq = (amp * amp / (2.0 * PI * cutoff)).ln();
    if lq >= 0.0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    nf * (0.5 * nf * lq).exp() / (cutoff * (2.0 * PI * u).powi(2))
}

/// Absolute-mass tail bound `2 int_{xi > cutoff} |g|^n`, valid for any `u`.
fn mass_tail(cutoff: f64, n: u32, amp: f64) -> f64 {
    let lq = (amp * amp / (2.0 * PI * cutoff)).ln();
    if lq >= 0.0 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    2.0 * (0.5 * nf * lq).exp() * cutoff / (0.5 * nf - 1.0)
}

/// Precomputed inversion grid for `h^{*n}` (optionally of an exponentially
/// tilted law), reusable across evaluation points; evaluations are pure and
/// safe to run in parallel.
pub struct ConvPower {
    density: Density,
    n: u32,
    sigma2: f64,
    amp: f64,
    cutoff: f64,
    panel_width: f64,
    u_hi: f64,
    tilt: Tilt,
    /// `g(xi)^n * (GL weight) * (half panel width)`, eight entries per panel.
    coef: Vec<Complex64>,
    /// GL node offsets from the panel start.
    offsets: [f64; 8],
    /// `g(Xi)^n` and its derivative, for the tail boundary terms.
    w_cut: Complex64,
    dw_cut: Complex64,
    abs_mass: f64,
    tail_tol: f64,
}

impl ConvPower {
    /// Plans an inversion grid able to serve `u` in `[u_lo, u_hi]` at the
    /// plan's tail tolerance (for `u` not far below the natural scale `n`)
    /// and at an absolute floor tied to the comparator peak elsewhere.
    pub fn new(
        density: &Density,
        n: u32,
        plan: &FourierPlan,
        u_lo: f64,
        u_hi: f64,
    ) -> Result<Self> {
        Self::plan_grid(density, n, plan, u_lo, u_hi, Tilt::NONE)
    }

    /// Plans a grid for the law tilted onto the saddle of the single point
    /// `u`; [`ConvPower::ln_eval`] then recovers `ln h^{*n}(u)` with
    /// relative accuracy that does not degrade in the tails.
    pub fn new_saddled(density: &Density, n: u32, plan: &FourierPlan, u: f64) -> Result<Self> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("saddle point needs u > 0, got {u}")));
        }
        let tilt = solve_tilt(density, n, u)?;
        Self::plan_grid(density, n, plan, u, u, tilt)
    }

    fn plan_grid(
        density: &Density,
        n: u32,
        plan: &FourierPlan,
        u_lo: f64,
        u_hi: f64,
        tilt: Tilt,
    ) -> Result<Self> {
        if n < MIN_ORDER {
            return Err(Error::UnsupportedOrder { n, min: MIN_ORDER });
        }
        if !(u_lo > 0.0) || !(u_hi >= u_lo) || !u_hi.is_finite() {
            return Err(Error::Domain(format!(
                "inversion range must satisfy 0 < u_lo <= u_hi, got [{u_lo}, {u_hi}]"
            )));
        }
        let nf = n as f64;
        // The tilt divides the envelope by M(theta) along with the
        // characteristic function itself.
        let amp = density.envelope_amp() / tilt.m;
        let sigma2 = density.sigma2();
        let var = if tilt.theta == 0.0 { sigma2 } else { tilt.var };
        let peak_scale = 1.0 / (2.0 * PI * nf * var).sqrt();
        let mass_cap = (1e-6 * peak_scale).max(plan.tail_tol);
        let u_star = if tilt.theta == 0.0 {
            u_lo.max(nf / 100.0)
        } else {
            u_lo
        };

        let mut cutoff = (1.1 * amp * amp / (2.0 * PI)).max(1e-3);
        while osc_tail(cutoff, n, u_star, amp) > plan.tail_tol
            || mass_tail(cutoff, n, amp) > mass_cap
        {
            cutoff *= 2.0;
            if cutoff > plan.max_cutoff {
                return Err(Error::CutoffExceeded {
                    required: cutoff,
                    limit: plan.max_cutoff,
                });
            }
        }

        // Resolve both the oscillation (the integrand beats at frequencies
        // up to u_hi plus the tilted center n*mean) and the curvature of
        // the comparator peak in xi.
        let freq = u_hi + nf * tilt.mean.max(1.0);
        let width = (1.0 / (plan.points_per_wave * freq))
            .min(cutoff / plan.min_panels as f64)
            .min(1.0 / (8.0 * PI * (nf * var).sqrt()));
        let n_panels = (cutoff / width).ceil() as usize;
        if n_panels * 8 > plan.max_nodes {
            return Err(Error::Domain(format!(
                "inversion grid would need {} nodes, above the {} limit",
                n_panels * 8,
                plan.max_nodes
            )));
        }
        let panel_width = cutoff / n_panels as f64;

        let rule = gl8();
        let mut offsets = [0.0; 8];
        let mut folded_w = [0.0; 8];
        for j in 0..8 {
            offsets[j] = (rule.nodes[j] + 1.0) * 0.5 * panel_width;
            folded_w[j] = rule.weights[j] * 0.5 * panel_width;
        }

        let dens = *density;
        let coef: Vec<Complex64> = (0..n_panels)
            .into_par_iter()
            .flat_map_iter(|p| {
                let lo = p as f64 * panel_width;
                (0..8).map(move |j| {
                    let xi = lo + offsets[j];
                    tilted_char(&dens, &tilt, xi).powu(n) * folded_w[j]
                })
            })
            .collect();
        let abs_mass: f64 = coef.iter().map(|c| c.norm()).sum();

        let g_cut = tilted_char(density, &tilt, cutoff);
        let w_cut = g_cut.powu(n);
        let dw_cut = nf * g_cut.powu(n - 1) * tilted_char_deriv(density, &tilt, cutoff);

        Ok(ConvPower {
            density: *density,
            n,
            sigma2,
            amp,
            cutoff,
            panel_width,
            u_hi,
            tilt,
            coef,
            offsets,
            w_cut,
            dw_cut,
            abs_mass,
            tail_tol: plan.tail_tol,
        })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn nodes(&self) -> usize {
        self.coef.len()
    }

    /// Evaluates `h^{*n}(u)` with a per-point error bound.
    pub fn eval(&self, u: f64) -> Result<ConvValue> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!(
                "convolution power needs u > 0, got {u}"
            )));
        }
        if u > self.u_hi + 0.5 * self.n as f64 + 1.0 {
            return Err(Error::Domain(format!(
                "u={u} beyond the planned oscillation budget (u_hi={})",
                self.u_hi
            )));
        }

        // Phase factors for the eight in-panel offsets; the per-panel phase
        // advances by a fixed rotation, re-anchored periodically so rounding
        // cannot accumulate.
        let mut off_phase = [Complex64::new(0.0, 0.0); 8];
        for (phase, off) in off_phase.iter_mut().zip(&self.offsets) {
            *phase = Complex64::from_polar(1.0, 2.0 * PI * off * u);
        }
        let step = Complex64::from_polar(1.0, 2.0 * PI * self.panel_width * u);
        let mut q = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (p, chunk) in self.coef.chunks_exact(8).enumerate() {
            if p.is_multiple_of(1024) && p > 0 {
                let turns = p as f64 * self.panel_width * u;
                q = Complex64::from_polar(1.0, 2.0 * PI * turns.fract());
            }
            let mut inner = Complex64::new(0.0, 0.0);
            for j in 0..8 {
                inner += chunk[j] * off_phase[j];
            }
            acc += (inner * q).re;
            q *= step;
        }

        let osc = osc_tail(self.cutoff, self.n, u, self.amp);
        let mass = mass_tail(self.cutoff, self.n, self.amp);
        let (tail_contrib, tail_err) = if osc < mass {
            // T = int_{Xi}^inf w e^{2 pi i xi u} d xi
            //   = e^{2 pi i Xi u} (i w(Xi)/(2 pi u) - w'(Xi)/(2 pi u)^2) + R,
            // with |R| bounded by `osc_tail` via the second derivative.
            let turns = self.cutoff * u;
            let phase = Complex64::from_polar(1.0, 2.0 * PI * turns.fract());
            let s_inv = 1.0 / (2.0 * PI * u);
            let t_hat = phase
                * (Complex64::new(0.0, s_inv) * self.w_cut - self.dw_cut * (s_inv * s_inv));
            (2.0 * t_hat.re, osc)
        } else {
            (0.0, mass)
        };

        let roundoff = 64.0 * f64::EPSILON * self.abs_mass;
        Ok(ConvValue {
            value: 2.0 * acc + tail_contrib,
            err: tail_err + roundoff,
        })
    }

    /// Batch evaluation, parallel over points with a deterministic result.
    pub fn eval_many(&self, us: &[f64]) -> Result<Vec<ConvValue>> {
        us.par_iter().map(|&u| self.eval(u)).collect()
    }

    /// `ln h^{*n}(u)` with its relative error, undoing any tilt:
    /// `ln h = -theta u + n ln M(theta) + ln h_theta^{*n}(u)`.
    pub fn ln_eval(&self, u: f64) -> Result<(f64, f64)> {
        let cv = self.eval(u)?;
        if cv.value <= cv.err {
            return Err(Error::IndeterminateSign {
                value: cv.value,
                err: cv.err,
            });
        }
        let ln = cv.value.ln() + self.n as f64 * self.tilt.ln_m - self.tilt.theta * u;
        Ok((ln, cv.err / cv.value))
    }

    /// The planned tail tolerance.
    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }
}

/// `ln h^{*n}(u)` with a relative error estimate. Points near the center go
/// through the plain grid; whenever the value lands too far below the peak
/// scale for the plain quadrature's cancellation floor (deep tails are much
/// thinner than the comparator suggests), the point is re-centered by a
/// saddle tilt, which keeps the relative accuracy at the plan's tolerance.
pub fn ln_conv_power(
    density: &Density,
    n: u32,
    u: f64,
    plan: &FourierPlan,
) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!(
            "convolution power needs u > 0, got {u}"
        )));
    }
    let nf = n as f64;
    let spread = (nf * density.sigma2()).sqrt();
    let peak_scale = 1.0 / (2.0 * PI * nf * density.sigma2()).sqrt();
    if (u - nf).abs() <= 4.0 * spread {
        let engine = ConvPower::new(density, n, plan, u, u)?;
        let cv = engine.eval(u)?;
        if cv.value > 1e-4 * peak_scale && cv.value > cv.err {
            // No tilt on this path, so the log needs no transform.
            return Ok((cv.value.ln(), cv.err / cv.value));
        }
    }
    ConvPower::new_saddled(density, n, plan, u)?.ln_eval(u)
}

/// One-shot `h^{*n}(u)`; plans a grid for the single point. Prefer
/// [`ConvPower`] when many points share an order.
pub fn conv_power(density: &Density, n: u32, u: f64, plan: &FourierPlan) -> Result<f64> {
    Ok(ln_conv_power(density, n, u, plan)?.0.exp())
}

/// The Gaussian comparator density
/// `exp(-(u-n)^2/(2 n sigma2)) / (sqrt(n sigma2) sqrt(2 pi))`.
pub fn gaussian_local_limit(n: u32, sigma2: f64, u: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("order must be at least 1".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!(
            "sigma2 must be positive, got {sigma2}"
        )));
    }
    let nf = n as f64;
    let var = nf * sigma2;
    Ok((-(u - nf).powi(2) / (2.0 * var)).exp() / (var.sqrt() * (2.0 * PI).sqrt()))
}

/// The comparator's characteristic function raised to the n-th power:
/// `exp(-2 pi i n xi) exp(-2 pi^2 n xi^2 sigma2)`.
pub fn comparator_char_pow(n: u32, sigma2: f64, xi: f64) -> Complex64 {
    let nf = n as f64;
    Complex64::from_polar(
        (-2.0 * PI * PI * nf * xi * xi * sigma2).exp(),
        -2.0 * PI * nf * xi,
    )
}

/// Pointwise scaled deviation
/// `sqrt(n) Sigma h^{*n}(u) - exp(-(u-n)^2/(2 n Sigma^2))/sqrt(2 pi)`
/// with `n = N - j`.
pub fn local_limit_deviation(
    density: &Density,
    big_n: u32,
    j: u32,
    u: f64,
    plan: &FourierPlan,
) -> Result<f64> {
    if j >= big_n {
        return Err(Error::Domain(format!("j={j} must be below N={big_n}")));
    }
    let n = big_n - j;
    let engine = ConvPower::new(density, n, plan, u.min(n as f64), u.max(n as f64))?;
    deviation_from(&engine, u)
}

fn deviation_from(engine: &ConvPower, u: f64) -> Result<f64> {
    let nf = engine.order() as f64;
    let scale = (nf * engine.sigma2()).sqrt();
    let gauss = (-(u - nf).powi(2) / (2.0 * nf * engine.sigma2())).exp() / (2.0 * PI).sqrt();
    Ok(scale * engine.eval(u)?.value - gauss)
}

/// Supremum of the scaled deviation over the bulk window
/// `[n - 8 sqrt(n) Sigma, n + 8 sqrt(n) Sigma]`.
#[derive(Debug, Clone)]
pub struct DeviationScan {
    pub big_n: u32,
    pub j: u32,
    /// Measured `sup |lambda_j|` over the bulk grid.
    pub sup_abs: f64,
    /// Location of the supremum.
    pub at_u: f64,
    /// Deviation exactly at the distribution center `u = n`.
    pub center: f64,
    pub points: usize,
}

/// Measures `sup |lambda_j|` on a uniform bulk grid; `points` defaults to
/// 257 when zero is passed.
pub fn sup_local_limit_deviation(
    density: &Density,
    big_n: u32,
    j: u32,
    plan: &FourierPlan,
    points: usize,
) -> Result<DeviationScan> {
    if j >= big_n {
        return Err(Error::Domain(format!("j={j} must be below N={big_n}")));
    }
    let n = big_n - j;
    let nf = n as f64;
    let spread = 8.0 * (nf * density.sigma2()).sqrt();
    let lo = (nf - spread).max(1e-6);
    let hi = nf + spread;
    let points = if points == 0 { 257 } else { points.max(16) };
    let engine = ConvPower::new(density, n, plan, lo, hi)?;

    let mut grid: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    grid.push(nf);
    let scale = (nf * engine.sigma2()).sqrt();
    let values: Vec<ConvValue> = engine.eval_many(&grid)?;
    let mut sup_abs = 0.0;
    let mut at_u = grid[0];
    let mut center = 0.0;
    for (k, (&u, cv)) in grid.iter().zip(&values).enumerate() {
        let gauss = (-(u - nf).powi(2) / (2.0 * nf * engine.sigma2())).exp() / (2.0 * PI).sqrt();
        let dev = scale * cv.value - gauss;
        if k == grid.len() - 1 {
            center = dev;
        } else if dev.abs() > sup_abs {
            sup_abs = dev.abs();
            at_u = u;
        }
    }
    Ok(DeviationScan {
        big_n,
        j,
        sup_abs,
        at_u,
        center,
        points,
    })
}

// ---------------------------------------------------------------------------
// Measured contraction margins and the analytic-region defect constant.
// ---------------------------------------------------------------------------

/// A measured modulus bound `sup |g| = 1 - margin` over a frequency region.
#[derive(Debug, Clone, Copy)]
pub struct ContractionMeasurement {
    pub margin: f64,
    pub sup_modulus: f64,
    pub at_xi: f64,
}

const GRID_PER_DECADE: usize = 4096;
const REFINE_PASSES: usize = 3;

fn sup_modulus_scan<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let decades = (hi / lo).log10().max(0.05);
    let m = ((decades * GRID_PER_DECADE as f64).ceil() as usize).clamp(64, 400_000);
    let ratio = (hi / lo).powf(1.0 / m as f64);
    let mut best = (f(lo), lo);
    let mut x = lo;
    for _ in 0..m {
        x *= ratio;
        let v = f(x.min(hi));
        if v > best.0 {
            best = (v, x.min(hi));
        }
    }
    // Linear refinement passes around the incumbent.
    let mut half = best.1 * (ratio - 1.0) * 2.0;
    for _ in 0..REFINE_PASSES {
        let a = (best.1 - half).max(lo);
        let b = (best.1 + half).min(hi);
        let step = (b - a) / 4096.0;
        for k in 0..=4096 {
            let x = a + step * k as f64;
            let v = f(x);
            if v > best.0 {
                best = (v, x);
            }
        }
        half = step * 2.0;
    }
    (best.0, best.1)
}

/// Measures `alpha(delta) = 1 - sup_{|xi| > c delta} |g_delta|` by grid
/// search plus an envelope argument for the far tail.
pub fn contraction_outside(d: &Delta, c: f64) -> Result<ContractionMeasurement> {
    if d.value() >= 0.5 {
        return Err(Error::Domain(
            "outside-region contraction needs delta < 1/2".into(),
        ));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let dens = Density::KacMixture(*d);
    let amp = dens.envelope_amp();
    let lo = c * d.value();
    // Beyond hi the envelope A/sqrt(2 pi xi) already sits below any value
    // the scan can report near the inner edge.
    let mut hi = (4.0 * lo).max(amp * amp / (2.0 * PI * 0.64));
    let modulus = |xi: f64| dens.char_fn(xi).norm();
    let (mut sup, mut at) = sup_modulus_scan(&modulus, lo, hi);
    while amp / (2.0 * PI * hi).sqrt() >= sup {
        let (s2, a2) = sup_modulus_scan(&modulus, hi, hi * 8.0);
        if s2 > sup {
            sup = s2;
            at = a2;
        }
        hi *= 8.0;
        if hi > 1e12 {
            return Err(Error::Inconsistency(
                "contraction scan failed to close the envelope".into(),
            ));
        }
    }
    let margin = 1.0 - sup;
    if margin <= 0.0 {
        return Err(Error::Inconsistency(format!(
            "nonpositive contraction margin {margin} at xi={at}"
        )));
    }
    Ok(ContractionMeasurement {
        margin,
        sup_modulus: sup,
        at_xi: at,
    })
}

/// Measures `alpha_beta(delta) = 1 - sup |g_delta|` over the annulus
/// `c delta^{1+beta} < |xi| < c delta`.
pub fn contraction_annulus(d: &Delta, beta: f64, c: f64) -> Result<ContractionMeasurement> {
    if d.value() >= 0.5 {
        return Err(Error::Domain(
            "annulus contraction needs delta < 1/2".into(),
        ));
    }
    if !(beta > 0.0 && beta < 1.0 / 6.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, 1/6), got {beta}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let dens = Density::KacMixture(*d);
    let lo = c * d.value().powf(1.0 + beta);
    let hi = c * d.value();
    let modulus = |xi: f64| dens.char_fn(xi).norm();
    let (sup, at) = sup_modulus_scan(&modulus, lo, hi);
    let margin = 1.0 - sup;
    if margin <= 0.0 {
        return Err(Error::Inconsistency(format!(
            "nonpositive annulus margin {margin} at xi={at}"
        )));
    }
    Ok(ContractionMeasurement {
        margin,
        sup_modulus: sup,
        at_xi: at,
    })
}

/// Measured cubic-defect constant
/// `M(delta) = sup_{0 < |xi| < c delta} |g(xi) - gamma1(xi)| / |xi|^3`.
///
/// `g` and the comparator agree in value, mean and second moment at the
/// origin, so the ratio has a finite limit; the scan starts three decades
/// below the split to stay clear of the cancellation floor.
#[derive(Debug, Clone, Copy)]
pub struct CubicDefect {
    pub sup_ratio: f64,
    pub at_xi: f64,
}

pub fn cubic_defect(d: &Delta, c: f64) -> Result<CubicDefect> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let dens = Density::KacMixture(*d);
    let sigma2 = dens.sigma2();
    let hi = c * d.value();
    let lo = hi * 1e-3;
    let ratio = |xi: f64| {
        let g = dens.char_fn(xi);
        let comp = comparator_char_pow(1, sigma2, xi);
        (g - comp).norm() / xi.powi(3)
    };
    let (sup, at) = sup_modulus_scan(&ratio, lo, hi);
    Ok(CubicDefect {
        sup_ratio: sup,
        at_xi: at,
    })
}

/// Numerical `int_{|xi| > c delta} |g_delta|^n d xi` (both tails), with the
/// far tail closed by the envelope bound; relative accuracy ~1e-12.
pub fn tail_integral(d: &Delta, n: u32, c: f64) -> Result<f64> {
    if n < MIN_ORDER {
        return Err(Error::UnsupportedOrder { n, min: MIN_ORDER });
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let dens = Density::KacMixture(*d);
    let amp = dens.envelope_amp();
    let nf = n as f64;
    let mut x = c * d.value();
    let mut acc = 0.0;
    for _ in 0..96 {
        let hi = 2.0 * x;
        acc += quad::panel_integrate(|xi| dens.char_fn(xi).norm().powf(nf), x, hi, 96);
        x = hi;
        let lq = (amp * amp / (2.0 * PI * x)).ln();
        let rem_one = if lq >= 0.0 {
            f64::INFINITY
        } else {
            (0.5 * nf * lq).exp() * x / (0.5 * nf - 1.0)
        };
        if rem_one <= 1e-13 * acc {
            return Ok(2.0 * acc);
        }
    }
    Err(Error::Inconsistency(
        "tail integral failed to converge within the octave budget".into(),
    ))
}

/// Measured `int |g^n - gamma1^n|` over `|xi|` in `[lo, hi]` (both sides).
pub fn comparator_gap_integral(density: &Density, n: u32, lo: f64, hi: f64) -> f64 {
    let sigma2 = density.sigma2();
    let nf = n as f64;
    let integrand = |xi: f64| {
        (density.char_fn(xi).powu(n) - comparator_char_pow(n, sigma2, xi)).norm()
    };
    // The modulus of the difference beats at a frequency of order n.
    let panels = (((hi - lo) * 48.0 * (nf + 1.0)).ceil() as usize).clamp(256, 250_000);
    let rule = gl16();
    let w = (hi - lo) / panels as f64;
    let parts: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = lo + p as f64 * w;
            let mid = a + 0.5 * w;
            let half = 0.5 * w;
            let mut acc = 0.0;
            for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                acc += wt * integrand(mid + half * x);
            }
            acc * half
        })
        .collect();
    2.0 * quad::pairwise_sum(&parts)
}

// ---------------------------------------------------------------------------
// Bound certificates for the two frequency regions.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRegion {
    Outside,
    Inside,
    Total,
}

/// Snapshot of everything that entered a certificate.
#[derive(Debug, Clone)]
pub struct CertificateParams {
    pub n: u32,
    pub delta: f64,
    pub c: f64,
    pub sigma2: f64,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_beta: Option<f64>,
    pub m: Option<[f64; 3]>,
    pub tail: Option<f64>,
}

/// Evaluated right-hand side of one region bound.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub region: BoundRegion,
    pub value: f64,
    pub terms: Vec<f64>,
    pub params: CertificateParams,
}

/// Outside-region bound:
/// `2 tail + (1-alpha)^{N/2-1}/(pi c delta Sigma^2)
///  + exp(-(1+N) pi^2 c^2 delta^2 Sigma^2)/(pi c delta Sigma^2)`.
pub fn bound_outside(
    n: u32,
    d: &Delta,
    c: f64,
    sigma2: f64,
    alpha: f64,
    tail: f64,
) -> BoundCertificate {
    let nf = n as f64;
    let delta = d.value();
    let denom = PI * c * delta * sigma2;
    let t1 = 2.0 * tail;
    let t2 = (1.0 - alpha).powf(0.5 * nf - 1.0) / denom;
    let t3 = (-(1.0 + nf) * PI * PI * c * c * delta * delta * sigma2).exp() / denom;
    BoundCertificate {
        region: BoundRegion::Outside,
        value: t1 + t2 + t3,
        terms: vec![t1, t2, t3],
        params: CertificateParams {
            n,
            delta,
            c,
            sigma2,
            beta: None,
            alpha: Some(alpha),
            alpha_beta: None,
            m: None,
            tail: Some(tail),
        },
    }
}

/// Inside-region bound, four terms with the defect polynomial
/// `m = M0 + M1 delta + M2 delta^2` (callers measuring a single constant `M`
/// pass `M0 = M delta^2`, `M1 = M2 = 0`, which reproduces the composite sup
/// exactly).
#[allow(clippy::too_many_arguments)]
pub fn bound_inside(
    n: u32,
    d: &Delta,
    c: f64,
    beta: f64,
    sigma2: f64,
    alpha_beta: f64,
    m0: f64,
    m1: f64,
    m2: f64,
) -> BoundCertificate {
    let nf = n as f64;
    let delta = d.value();
    let m = m0 + m1 * delta + m2 * delta * delta;
    let t1 = c.powi(4) * delta * delta * m / 2.0;
    let t2 = c.powi(3) * delta * nf.sqrt() * m * (1.0 - alpha_beta).powf(0.5 * nf - 1.0)
        / (PI * sigma2).sqrt();
    let expo = (-PI * PI * (nf - 1.0) * c * c * delta.powf(2.0 + 2.0 * beta) * sigma2).exp();
    let under = 1.0 - (-2.0 * PI * PI * nf * c * c * delta * delta * sigma2).exp();
    let t3 = c.powi(3) * delta.powf(1.0 - beta) * m * expo
        / (2.0 * PI * c * delta * sigma2 * under.sqrt());
    let t4 = 2.0 * c.powi(3) * m * nf.sqrt() * delta.powf(1.0 + 3.0 * beta)
        / (2.0 * PI * sigma2).sqrt();
    BoundCertificate {
        region: BoundRegion::Inside,
        value: t1 + t2 + t3 + t4,
        terms: vec![t1, t2, t3, t4],
        params: CertificateParams {
            n,
            delta,
            c,
            sigma2,
            beta: Some(beta),
            alpha: None,
            alpha_beta: Some(alpha_beta),
            m: Some([m0, m1, m2]),
            tail: None,
        },
    }
}

/// Sum of the two regions; the total dominates `int |g^N - gamma1^N|` over
/// the whole line when the measured inputs are honest bounds.
pub fn certificate_total(outside: &BoundCertificate, inside: &BoundCertificate) -> BoundCertificate {
    BoundCertificate {
        region: BoundRegion::Total,
        value: outside.value + inside.value,
        terms: vec![outside.value, inside.value],
        params: outside.params.clone(),
    }
}

// ---------------------------------------------------------------------------
// Window and sum estimates used inside the region bounds.
// ---------------------------------------------------------------------------

/// Two-sided estimates for `int_{|x| < eta} exp(-a^2 x^2 / 2) dx` and its
/// complement.
///
/// `lower_quad` (exponent `a^2 eta^2 / 2`) is a true lower bound for every
/// `a, eta > 0`. `lower_lin` (exponent `a eta^2 / 2`) is an alternate form
/// that is only a valid bound when `a >= 1`; both are reported.
#[derive(Debug, Clone, Copy)]
pub struct GaussianIntegralBounds {
    pub lower_quad: f64,
    pub lower_lin: f64,
    pub middle: f64,
    pub upper: f64,
    pub tail_exact: f64,
    pub tail_bound: f64,
}

impl GaussianIntegralBounds {
    /// Whether the linear-exponent lower form is provably a bound here.
    pub fn lin_form_valid(a: f64) -> bool {
        a >= 1.0
    }
}

pub fn gaussian_integral_bounds(a: f64, eta: f64) -> Result<GaussianIntegralBounds> {
    if !(a > 0.0 && eta > 0.0) {
        return Err(Error::Domain(format!(
            "window bounds need a, eta > 0, got a={a}, eta={eta}"
        )));
    }
    let root = (2.0 * PI).sqrt() / a;
    let (half, _) = quad::adaptive(|x| (-0.5 * a * a * x * x).exp(), 0.0, eta, 1e-13, 0.0);
    let middle = 2.0 * half;
    Ok(GaussianIntegralBounds {
        lower_quad: root * (1.0 - (-0.5 * a * a * eta * eta).exp()).sqrt(),
        lower_lin: root * (1.0 - (-0.5 * a * eta * eta).exp()).sqrt(),
        middle,
        upper: root * (1.0 - (-(a * eta).powi(2)).exp()).sqrt(),
        tail_exact: root - middle,
        tail_bound: root * (-0.5 * (a * eta).powi(2)).exp(),
    })
}

/// Partial sums `sum e^{-a^2 k/2}/sqrt k` and `sum 1/sqrt k` over
/// `k0 < k <= m`, with their closed bounds.
#[derive(Debug, Clone, Copy)]
pub struct SpecialSumBounds {
    pub sum_exp: f64,
    pub bound_exp: f64,
    pub sum_sqrt: f64,
    pub bound_sqrt: f64,
}

pub fn special_sum_bounds(a: f64, k0: u64, m: u64) -> Result<SpecialSumBounds> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    if k0 >= m {
        return Err(Error::Domain(format!("need k0 < m, got k0={k0}, m={m}")));
    }
    let mut sum_exp = 0.0;
    let mut sum_sqrt = 0.0;
    for k in (k0 + 1)..=m {
        let kf = k as f64;
        sum_exp += (-0.5 * a * a * kf).exp() / kf.sqrt();
        sum_sqrt += 1.0 / kf.sqrt();
    }
    Ok(SpecialSumBounds {
        sum_exp,
        bound_exp: (2.0 * PI).sqrt() * (-0.5 * a * a * k0 as f64).exp() / a,
        sum_sqrt,
        bound_sqrt: 2.0 * (m as f64).sqrt(),
    })
}

//! Marginals of the product test state on the energy sphere, uniform sphere
//! sampling, and self-normalized importance sampling under the test state.
//!
//! Rotation invariance reduces the j-particle marginal of
//! `F_N = prod f(v_i) / Z_N` to a radial kernel
//! `K_j(s) = |S^{N-j-1}|/(|S^{N-1}| N^{(N-2)/2}) (N-s)^{(N-j-2)/2}
//!           Z_{N-j}(sqrt(N-s)) / Z_N(sqrt N)`
//! of `s = v_1^2 + .. + v_j^2`, so that
//! `P_j(v_1..v_j) = K_j(sum v^2) prod f(v_i)`. The sphere-area and power
//! factors cancel against the normalization chain in log-domain, leaving the
//! convolution-power ratio `h^{*(N-j)}(N-s) / h^{*N}(N)`.
//!
//! Randomness contract: every stochastic routine in this crate draws from
//! `ChaCha8Rng` seeded with a caller-supplied 64-bit seed (chain c uses
//! `seed ^ c`), a counter-based generator whose output stream is stable
//! across platforms and releases; fixed seeds reproduce runs bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::normalization::{log_sphere_area, LogValue, ZContext};

/// Number of independent sampling chains; estimates are merged in chain
/// order, so thread scheduling never changes the result.
const CHAINS: u64 = 8;

/// Minimum effective sample size below which estimates are refused.
const MIN_ESS: f64 = 100.0;

/// Log of the radial marginal kernel `K_j` at `s`, or an exact zero where
/// the normalization ratio is below the resolvable floor (deep in the
/// energy-depleted corner `s -> N`).
pub fn marginal_log_weight(ctx: &ZContext, j: u32, s: f64) -> Result<LogValue> {
    if j != 1 && j != 2 {
        return Err(Error::Domain(format!("marginal order must be 1 or 2, got {j}")));
    }
    let n = ctx.n();
    if n < j + 5 {
        return Err(Error::Domain(format!("need N >= j + 5, got N={n}, j={j}")));
    }
    let big = n as f64;
    if !(s >= 0.0 && s < big) {
        return Err(Error::Domain(format!("need 0 <= s < N, got s={s}")));
    }
    let u = big - s;
    if ctx.ln_h(j, u)?.is_none() {
        return Ok(LogValue::zero());
    }
    let ratio = ctx.log_z_ratio(j, u)?;
    let ln = log_sphere_area(n - j)?.ln()? - log_sphere_area(n)?.ln()?
        - 0.5 * (big - 2.0) * big.ln()
        + 0.5 * (big - j as f64 - 2.0) * u.ln()
        + ratio.ln()?;
    Ok(LogValue::from_ln(ln))
}

/// One-particle marginal density `P_1(v)` (zero outside `|v| < sqrt N`).
pub fn marginal_density_1(ctx: &ZContext, v: f64) -> Result<f64> {
    let big = ctx.n() as f64;
    let s = v * v;
    if s >= big {
        return Ok(0.0);
    }
    let w = marginal_log_weight(ctx, 1, s)?;
    Ok(ctx.density().eval(v) * w.value())
}

/// Two-particle marginal density `P_2(v1, v2)`.
pub fn marginal_density_2(ctx: &ZContext, v1: f64, v2: f64) -> Result<f64> {
    let big = ctx.n() as f64;
    let s = v1 * v1 + v2 * v2;
    if s >= big {
        return Ok(0.0);
    }
    let w = marginal_log_weight(ctx, 2, s)?;
    Ok(ctx.density().eval(v1) * ctx.density().eval(v2) * w.value())
}

/// A point on the energy sphere of the requested radius.
#[derive(Debug, Clone)]
pub struct SphericalSample {
    pub velocities: Vec<f64>,
}

impl SphericalSample {
    pub fn energy(&self) -> f64 {
        self.velocities.iter().map(|v| v * v).sum()
    }
}

fn sphere_point(n: u32, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 > 0.0 {
            let scale = radius / norm2.sqrt();
            return v.into_iter().map(|x| x * scale).collect();
        }
    }
}

/// Uniform sample on the sphere of the given radius: a normalized vector of
/// independent standard normals.
pub fn uniform_sphere_sample(n: u32, radius: f64, seed: u64) -> Result<SphericalSample> {
    if n < 2 {
        return Err(Error::Domain(format!("need N >= 2, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(SphericalSample {
        velocities: sphere_point(n, radius, &mut rng),
    })
}

/// A self-normalized importance-sampling estimate with its jackknife
/// standard error.
#[derive(Debug, Clone, Copy)]
pub struct ImportanceEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub effective_samples: f64,
    pub samples: usize,
}

/// Estimates `E_{F_N}[phi]` as `E_sigma[phi prod f] / E_sigma[prod f]` by
/// sampling the uniform sphere measure; weights are kept in log-domain and
/// stabilized against their maximum before exponentiation.
pub fn importance_expectation<F>(
    observable: F,
    n: u32,
    density: &Density,
    samples: usize,
    seed: u64,
) -> Result<ImportanceEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n > 64 {
        return Err(Error::Domain(format!(
            "importance sampling is limited to N <= 64 (weight variance grows with N), got {n}"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("need N >= 2, got {n}")));
    }
    if samples < 10_000 {
        return Err(Error::Domain(format!(
            "need at least 10^4 samples, got {samples}"
        )));
    }
    let radius = (n as f64).sqrt();
    let per_chain = samples / CHAINS as usize;
    let remainder = samples - per_chain * CHAINS as usize;

    let chains: Vec<Vec<(f64, f64)>> = (0..CHAINS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ c);
            let count = per_chain + if c == CHAINS - 1 { remainder } else { 0 };
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let v = sphere_point(n, radius, &mut rng);
                let log_w: f64 = v.iter().map(|&x| density.eval(x).ln()).sum();
                out.push((log_w, observable(&v)));
            }
            out
        })
        .collect();

    let mut log_w = Vec::with_capacity(samples);
    let mut phi = Vec::with_capacity(samples);
    for chain in chains {
        for (lw, p) in chain {
            log_w.push(lw);
            phi.push(p);
        }
    }
    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|lw| (lw - max_lw).exp()).collect();
    let sum_w: f64 = w.iter().sum();
    let sum_w2: f64 = w.iter().map(|x| x * x).sum();
    let sum_wp: f64 = w.iter().zip(&phi).map(|(wi, pi)| wi * pi).sum();
    let ess = sum_w * sum_w / sum_w2;
    if ess < MIN_ESS {
        return Err(Error::UnreliableEstimate { ess, min: MIN_ESS });
    }
    let estimate = sum_wp / sum_w;

    // Leave-one-out jackknife of the ratio estimator in one pass.
    let k = w.len() as f64;
    let mut jack = Vec::with_capacity(w.len());
    for (wi, pi) in w.iter().zip(&phi) {
        jack.push((sum_wp - wi * pi) / (sum_w - wi));
    }
    let jack_mean: f64 = jack.iter().sum::<f64>() / k;
    let var: f64 = jack.iter().map(|t| (t - jack_mean).powi(2)).sum::<f64>() * (k - 1.0) / k;
    Ok(ImportanceEstimate {
        estimate,
        std_err: var.sqrt(),
        effective_samples: ess,
        samples,
    })
}

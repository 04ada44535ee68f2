//! Log-domain normalization machinery.
//!
//! Sphere areas and the normalization function grow like `r^{N-2}` and
//! underflow or overflow linear arithmetic well before the particle counts of
//! interest, so everything here is carried as a signed logarithm. The
//! normalization function itself is recovered from the convolution power of
//! the square-law density,
//! `Z_N(f, sqrt u) = 2 h^{*N}(u) / (|S^{N-1}| u^{N/2-1})`,
//! either exactly (Fourier inversion) or through the Gaussian local-limit
//! approximation kept alongside for comparison.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock, RwLock};

use statrs::function::gamma::ln_gamma;

use crate::clt::{ln_conv_power, ConvPower, ConvValue, FourierPlan};
use crate::densities::Density;
use crate::error::{Error, Result};

/// A scalar carried as `sign * exp(ln_mag)`.
///
/// Multiplication, division and powers are exact in log-domain; addition goes
/// through a stable log-sum with relative error at the 1e-14 level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    ln_mag: f64,
}

impl LogValue {
    pub fn zero() -> Self {
        LogValue {
            sign: 0,
            ln_mag: f64::NEG_INFINITY,
        }
    }

    pub fn one() -> Self {
        LogValue {
            sign: 1,
            ln_mag: 0.0,
        }
    }

    /// A positive value specified by its natural logarithm.
    pub fn from_ln(ln_mag: f64) -> Self {
        LogValue { sign: 1, ln_mag }
    }

    pub fn from_value(x: f64) -> Self {
        if x == 0.0 {
            LogValue::zero()
        } else {
            LogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_mag: x.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    pub fn signum(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; negative infinity for zero.
    pub fn ln_magnitude(&self) -> f64 {
        self.ln_mag
    }

    /// Natural log of a positive value.
    pub fn ln(&self) -> Result<f64> {
        if self.sign > 0 {
            Ok(self.ln_mag)
        } else {
            Err(Error::Domain(format!(
                "logarithm of a non-positive LogValue (sign {})",
                self.sign
            )))
        }
    }

    /// Back to linear scale; may overflow to infinity by design.
    pub fn value(&self) -> f64 {
        self.sign as f64 * self.ln_mag.exp()
    }

    pub fn mul(&self, other: &LogValue) -> LogValue {
        if self.sign == 0 || other.sign == 0 {
            return LogValue::zero();
        }
        LogValue {
            sign: self.sign * other.sign,
            ln_mag: self.ln_mag + other.ln_mag,
        }
    }

    pub fn div(&self, other: &LogValue) -> Result<LogValue> {
        if other.sign == 0 {
            return Err(Error::Domain("division by a zero LogValue".into()));
        }
        if self.sign == 0 {
            return Ok(LogValue::zero());
        }
        Ok(LogValue {
            sign: self.sign * other.sign,
            ln_mag: self.ln_mag - other.ln_mag,
        })
    }

    pub fn powi(&self, k: i64) -> Result<LogValue> {
        if self.sign == 0 {
            return if k > 0 {
                Ok(LogValue::zero())
            } else {
                Err(Error::Domain("zero to a non-positive power".into()))
            };
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        Ok(LogValue {
            sign,
            ln_mag: self.ln_mag * k as f64,
        })
    }

    /// Real power of a positive value.
    pub fn powf(&self, p: f64) -> Result<LogValue> {
        if self.sign <= 0 {
            return Err(Error::Domain(
                "real powers need a positive LogValue".into(),
            ));
        }
        Ok(LogValue {
            sign: 1,
            ln_mag: self.ln_mag * p,
        })
    }

    pub fn neg(&self) -> LogValue {
        LogValue {
            sign: -self.sign,
            ln_mag: self.ln_mag,
        }
    }

    pub fn abs(&self) -> LogValue {
        LogValue {
            sign: self.sign.abs(),
            ln_mag: self.ln_mag,
        }
    }

    /// Signed addition through log-sum / log-difference.
    pub fn add(&self, other: &LogValue) -> LogValue {
        if self.sign == 0 {
            return *other;
        }
        if other.sign == 0 {
            return *self;
        }
        let (hi, lo) = if self.ln_mag >= other.ln_mag {
            (self, other)
        } else {
            (other, self)
        };
        let d = lo.ln_mag - hi.ln_mag; // <= 0
        if self.sign == other.sign {
            LogValue {
                sign: hi.sign,
                ln_mag: hi.ln_mag + d.exp().ln_1p(),
            }
        } else if d == 0.0 {
            LogValue::zero()
        } else {
            LogValue {
                sign: hi.sign,
                ln_mag: hi.ln_mag + (-d.exp()).ln_1p(),
            }
        }
    }

    pub fn sub(&self, other: &LogValue) -> LogValue {
        self.add(&other.neg())
    }
}

impl std::fmt::Display for LogValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.ln_mag),
            _ => write!(f, "-exp({})", self.ln_mag),
        }
    }
}

/// `log |S^{n-1}| = log 2 + (n/2) log pi - log Gamma(n/2)` for the unit
/// sphere in ambient dimension `n`.
pub fn log_sphere_area(n: u32) -> Result<LogValue> {
    if n < 1 {
        return Err(Error::Domain(format!(
            "sphere area needs ambient dimension >= 1, got {n}"
        )));
    }
    let half = 0.5 * n as f64;
    Ok(LogValue::from_ln(
        2f64.ln() + half * std::f64::consts::PI.ln() - ln_gamma(half),
    ))
}

/// How a normalization value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMethod {
    Inversion,
    GaussianLimit,
}

/// `log Z_n(f, sqrt u)` with provenance and an error estimate on the log.
#[derive(Debug, Clone, Copy)]
pub struct ZEvaluation {
    pub n: u32,
    pub u: f64,
    pub log_z: LogValue,
    pub method: ZMethod,
    pub ln_err: f64,
}

fn assemble_log_z(n: u32, u: f64, ln_h: f64, rel_err: f64) -> Result<ZEvaluation> {
    let area = log_sphere_area(n)?;
    let ln = 2f64.ln() + ln_h - area.ln()? - (0.5 * n as f64 - 1.0) * u.ln();
    Ok(ZEvaluation {
        n,
        u,
        log_z: LogValue::from_ln(ln),
        method: ZMethod::Inversion,
        ln_err: rel_err,
    })
}

/// Exact-path `log Z_N(f, sqrt u)` by Fourier inversion (saddle-tilted in
/// the tails, so the log is accurate even where the value underflows).
pub fn log_z(density: &Density, n: u32, u: f64, plan: &FourierPlan) -> Result<ZEvaluation> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("log_z needs u > 0, got {u}")));
    }
    let (ln_h, rel_err) = ln_conv_power(density, n, u, plan)?;
    assemble_log_z(n, u, ln_h, rel_err)
}

/// Gaussian local-limit approximation of `log Z_{N-j}(f, sqrt u)` with the
/// deviation term set to zero; kept for comparison against the exact path.
pub fn log_z_gaussian(density: &Density, big_n: u32, j: u32, u: f64) -> Result<ZEvaluation> {
    if j >= big_n {
        return Err(Error::Domain(format!("j={j} must be below N={big_n}")));
    }
    let n = big_n - j;
    if !(u > 0.0) {
        return Err(Error::Domain(format!("log_z needs u > 0, got {u}")));
    }
    let nf = n as f64;
    let sigma2 = density.sigma2();
    let area = log_sphere_area(n)?;
    let ln = 2f64.ln()
        - 0.5 * nf.ln()
        - 0.5 * sigma2.ln()
        - area.ln()?
        - (0.5 * nf - 1.0) * u.ln()
        - (u - nf).powi(2) / (2.0 * nf * sigma2)
        - 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(ZEvaluation {
        n,
        u,
        log_z: LogValue::from_ln(ln),
        method: ZMethod::GaussianLimit,
        ln_err: f64::NAN,
    })
}

/// Number of cached grid nodes per table.
const TABLE_POINTS: usize = 512;

/// Nodes judged indistinguishable from zero carry no log value.
const DEAD_FACTOR: f64 = 10.0;

/// Cached log of `h^{*n}` on a Chebyshev-Lobatto grid over `[u_lo, u_hi]`,
/// with cubic interpolation between nodes.
#[derive(Debug)]
pub struct ZTable {
    n: u32,
    us: Vec<f64>,
    ln_h: Vec<f64>,
    /// Contiguous index range where the density is resolvably positive.
    live: std::ops::Range<usize>,
    /// Relative error level of the live values.
    rel_err: f64,
}

impl ZTable {
    fn build(density: &Density, n: u32, u_lo: f64, u_hi: f64, plan: &FourierPlan) -> Result<Self> {
        let engine = ConvPower::new(density, n, plan, u_lo, u_hi)?;
        let p = TABLE_POINTS;
        // Chebyshev-Lobatto nodes include both endpoints.
        let mid = 0.5 * (u_lo + u_hi);
        let half = 0.5 * (u_hi - u_lo);
        let mut us: Vec<f64> = (0..p)
            .map(|k| mid + half * (std::f64::consts::PI * k as f64 / (p - 1) as f64).cos())
            .collect();
        us.reverse();
        us[0] = u_lo;
        us[p - 1] = u_hi;
        let values = engine.eval_many(&us)?;

        let mut peak = 0;
        for (k, v) in values.iter().enumerate() {
            if v.value > values[peak].value {
                peak = k;
            }
        }
        if values[peak].value <= DEAD_FACTOR * values[peak].err {
            return Err(Error::IndeterminateSign {
                value: values[peak].value,
                err: values[peak].err,
            });
        }
        let alive = |v: &ConvValue| v.value > DEAD_FACTOR * v.err;
        let mut lo = peak;
        while lo > 0 && alive(&values[lo - 1]) {
            lo -= 1;
        }
        let mut hi = peak + 1;
        while hi < p && alive(&values[hi]) {
            hi += 1;
        }
        let ln_h = values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k >= lo && k < hi {
                    v.value.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let rel_err = values[lo..hi]
            .iter()
            .map(|v| v.err / v.value)
            .fold(0.0, f64::max);
        Ok(ZTable {
            n,
            us,
            ln_h,
            live: lo..hi,
            rel_err,
        })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn range(&self) -> (f64, f64) {
        (self.us[0], self.us[self.us.len() - 1])
    }

    pub fn rel_err(&self) -> f64 {
        self.rel_err
    }

    /// Interpolated `ln h^{*n}(u)`; `None` where the density is below the
    /// resolvable floor (the caller treats the weight as exactly zero).
    pub fn ln_h(&self, u: f64) -> Result<Option<f64>> {
        let (lo, hi) = self.range();
        if !(u >= lo && u <= hi) {
            return Err(Error::Domain(format!(
                "u={u} outside the cached range [{lo}, {hi}]"
            )));
        }
        let k = match self
            .us
            .binary_search_by(|x| x.partial_cmp(&u).unwrap())
        {
            Ok(k) => return Ok(self.node_value(k)),
            Err(k) => k, // us[k-1] < u < us[k]
        };
        if k <= self.live.start || k >= self.live.end {
            return Ok(None);
        }
        if self.live.len() < 4 {
            // Degenerate live window: fall back to linear interpolation.
            let (x0, x1) = (self.us[k - 1], self.us[k]);
            let t = (u - x0) / (x1 - x0);
            return Ok(Some(self.ln_h[k - 1] * (1.0 - t) + self.ln_h[k] * t));
        }
        // Four-point stencil clamped to the live window.
        let a = self.live.start.max(k.saturating_sub(2));
        let a = a.min(self.live.end - 4);
        let xs = &self.us[a..a + 4];
        let ys = &self.ln_h[a..a + 4];
        let mut acc = 0.0;
        for i in 0..4 {
            let mut term = ys[i];
            for j in 0..4 {
                if i != j {
                    term *= (u - xs[j]) / (xs[i] - xs[j]);
                }
            }
            acc += term;
        }
        Ok(Some(acc))
    }

    fn node_value(&self, k: usize) -> Option<f64> {
        if self.live.contains(&k) {
            Some(self.ln_h[k])
        } else {
            None
        }
    }
}

/// Shared evaluation context for a fixed density and particle number: one
/// cached table per marginal order `j`, built on first use. Tables are
/// write-once and immutable afterwards; a lost construction race rebuilds
/// identical deterministic content, so last-writer-wins is safe.
pub struct ZContext {
    density: Density,
    n: u32,
    plan: FourierPlan,
    tables: RwLock<BTreeMap<u32, Arc<ZTable>>>,
    base: OnceLock<Result<f64>>,
}

impl ZContext {
    pub fn new(density: Density, n: u32, plan: FourierPlan) -> Self {
        ZContext {
            density,
            n,
            plan,
            tables: RwLock::new(BTreeMap::new()),
            base: OnceLock::new(),
        }
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn plan(&self) -> &FourierPlan {
        &self.plan
    }

    /// The cached table for `h^{*(N-j)}` on
    /// `[max(1e-8 N, n - 10 sqrt(n) Sigma), N]`.
    pub fn table(&self, j: u32) -> Result<Arc<ZTable>> {
        if j >= self.n {
            return Err(Error::Domain(format!(
                "j={j} must be below N={}",
                self.n
            )));
        }
        if let Some(t) = self.tables.read().unwrap().get(&j) {
            return Ok(t.clone());
        }
        let n = self.n - j;
        let nf = n as f64;
        let big = self.n as f64;
        let u_lo = (1e-8 * big).max(nf - 10.0 * (nf * self.density.sigma2()).sqrt());
        let table = Arc::new(ZTable::build(&self.density, n, u_lo, big, &self.plan)?);
        let mut guard = self.tables.write().unwrap();
        Ok(guard.entry(j).or_insert(table).clone())
    }

    /// Interpolated `ln h^{*(N-j)}(u)`; `None` below the resolvable floor.
    pub fn ln_h(&self, j: u32, u: f64) -> Result<Option<f64>> {
        self.table(j)?.ln_h(u)
    }

    /// `log Z_{N-j}(f, sqrt u)` through the cached inversion table.
    pub fn log_z(&self, j: u32, u: f64) -> Result<ZEvaluation> {
        let n = self.n - j;
        let table = self.table(j)?;
        match table.ln_h(u)? {
            None => Err(Error::IndeterminateSign {
                value: 0.0,
                err: table.rel_err(),
            }),
            Some(lnh) => {
                let area = log_sphere_area(n)?;
                let ln = 2f64.ln() + lnh - area.ln()? - (0.5 * n as f64 - 1.0) * u.ln();
                Ok(ZEvaluation {
                    n,
                    u,
                    log_z: LogValue::from_ln(ln),
                    method: ZMethod::Inversion,
                    ln_err: table.rel_err(),
                })
            }
        }
    }

    /// `log Z_N(f, sqrt N)`, the shared denominator of every ratio.
    pub fn ln_z_base(&self) -> Result<f64> {
        self.base
            .get_or_init(|| self.log_z(0, self.n as f64).and_then(|z| z.log_z.ln()))
            .clone()
    }

    /// `log [ Z_{N-j}(f, sqrt u) / Z_N(f, sqrt N) ]`.
    pub fn log_z_ratio(&self, j: u32, u: f64) -> Result<LogValue> {
        if !(u > 0.0 && u <= self.n as f64) {
            return Err(Error::Domain(format!(
                "ratio needs 0 < u <= N, got u={u}, N={}",
                self.n
            )));
        }
        let num = self.log_z(j, u)?.log_z.ln()?;
        Ok(LogValue::from_ln(num - self.ln_z_base()?))
    }
}

/// One-shot ratio without a shared context; prefer [`ZContext`] in loops.
pub fn log_z_ratio(
    density: &Density,
    big_n: u32,
    j: u32,
    u: f64,
    plan: &FourierPlan,
) -> Result<LogValue> {
    let ctx = ZContext::new(*density, big_n, plan.clone());
    ctx.log_z_ratio(j, u)
}

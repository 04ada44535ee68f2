//! One-particle velocity densities.
//!
//! The working family is the two-Maxwellian mixture
//! `f_delta(v) = delta * M_{1/(2 delta)}(v) + (1 - delta) * M_{1/(2(1-delta))}(v)`,
//! a small fraction of very energetic particles mixed into a cold bulk, with
//! unit second moment for every `delta`. A standard Gaussian density is kept
//! alongside it because its products are constant on energy spheres, which
//! makes every downstream sphere integral available in closed form as an
//! exact oracle.
//!
//! The square-law density `h_delta(u) = f_delta(sqrt u)/sqrt u` is the law of
//! `V^2` when `V ~ f_delta`; its characteristic function drives the
//! convolution machinery in [`crate::clt`].

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Characteristic-function value; modulus is at most 1 for any density.
pub type CharFnValue = Complex64;

/// Variance parameter of a centered Gaussian density `M_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianParam {
    a: f64,
}

impl MaxwellianParam {
    pub fn new(a: f64) -> Result<Self> {
        if a > 0.0 && a.is_finite() {
            Ok(Self { a })
        } else {
            Err(Error::Domain(format!(
                "Maxwellian variance must be positive, got {a}"
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.a
    }

    /// `M_a(v) = exp(-v^2/(2a)) / sqrt(2 pi a)`.
    pub fn density(&self, v: f64) -> f64 {
        (-v * v / (2.0 * self.a)).exp() / (2.0 * PI * self.a).sqrt()
    }
}

/// Centered Gaussian density with variance `a`.
pub fn maxwellian(a: MaxwellianParam, v: f64) -> f64 {
    a.density(v)
}

/// Where a mixture parameter came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaProvenance {
    Explicit,
    Schedule { n: u64, beta: f64 },
}

/// Mixture parameter in `(0, 1/2]`.
///
/// `delta = 1/2` collapses the mixture onto the standard Gaussian; it is
/// admitted here as a test fixture, and operations that genuinely need
/// `delta < 1/2` validate that themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    value: f64,
    provenance: DeltaProvenance,
}

impl Delta {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 0.5 {
            Ok(Self {
                value,
                provenance: DeltaProvenance::Explicit,
            })
        } else {
            Err(Error::Domain(format!(
                "delta must lie in (0, 1/2], got {value}"
            )))
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn provenance(&self) -> DeltaProvenance {
        self.provenance
    }

    /// Variance of the energetic component, `1/(2 delta)`.
    pub fn hot(&self) -> MaxwellianParam {
        MaxwellianParam {
            a: 1.0 / (2.0 * self.value),
        }
    }

    /// Variance of the cold component, `1/(2(1 - delta))`.
    pub fn cold(&self) -> MaxwellianParam {
        MaxwellianParam {
            a: 1.0 / (2.0 * (1.0 - self.value)),
        }
    }

    /// The two coupling-condition monomials `delta^{1+2beta} N` (must grow)
    /// and `delta^{1+3beta} N` (must vanish), when scheduled.
    pub fn schedule_diagnostics(&self) -> Option<ScheduleDiagnostics> {
        match self.provenance {
            DeltaProvenance::Explicit => None,
            DeltaProvenance::Schedule { n, beta } => {
                let nf = n as f64;
                Some(ScheduleDiagnostics {
                    grow_monomial: self.value.powf(1.0 + 2.0 * beta) * nf,
                    decay_monomial: self.value.powf(1.0 + 3.0 * beta) * nf,
                })
            }
        }
    }
}

/// Diagnostic values of the two coupling conditions.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleDiagnostics {
    pub grow_monomial: f64,
    pub decay_monomial: f64,
}

/// The schedule `delta = N^{-(1-2 beta)}` coupling the mixture parameter to
/// the particle number; requires `0 < beta < 1/6` and `N >= 5`.
pub fn delta_schedule(n: u64, beta: f64) -> Result<Delta> {
    if !(beta > 0.0 && beta < 1.0 / 6.0) {
        return Err(Error::Domain(format!(
            "beta must lie in (0, 1/6), got {beta}"
        )));
    }
    if n < 5 {
        return Err(Error::Domain(format!("N must be at least 5, got {n}")));
    }
    let value = (n as f64).powf(-(1.0 - 2.0 * beta));
    if value > 0.5 {
        return Err(Error::Domain(format!(
            "schedule gives delta={value} > 1/2 at N={n}; N too small"
        )));
    }
    Ok(Delta {
        value,
        provenance: DeltaProvenance::Schedule { n, beta },
    })
}

/// A one-particle density with unit second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    KacMixture(Delta),
    StandardGaussian,
}

impl Density {
    pub fn mixture(delta: Delta) -> Self {
        Density::KacMixture(delta)
    }

    /// Pointwise value of the density.
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            Density::KacMixture(d) => f_delta(d, v),
            Density::StandardGaussian => (-0.5 * v * v).exp() / (2.0 * PI).sqrt(),
        }
    }

    /// Density of `V^2`; defined for `u > 0` with an integrable
    /// `1/sqrt(u)` singularity at the origin.
    pub fn square_law(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!(
                "square-law density needs u > 0, got {u}"
            )));
        }
        Ok(self.eval(u.sqrt()) / u.sqrt())
    }

    /// Characteristic function of the square law in the
    /// `exp(-2 pi i xi u)` convention.
    ///
    /// For the mixture this is
    /// `delta/sqrt(1 + 2 pi i xi/delta) + (1-delta)/sqrt(1 + 2 pi i xi/(1-delta))`;
    /// the real part of each radicand is exactly 1, so the principal branch
    /// never meets the cut and the square root is unambiguous.
    pub fn char_fn(&self, xi: f64) -> CharFnValue {
        match self {
            Density::KacMixture(d) => {
                let delta = d.value();
                let hot = Complex64::new(1.0, 2.0 * PI * xi / delta).sqrt();
                let cold = Complex64::new(1.0, 2.0 * PI * xi / (1.0 - delta)).sqrt();
                delta / hot + (1.0 - delta) / cold
            }
            Density::StandardGaussian => {
                // chi-square(1) law
                1.0 / Complex64::new(1.0, 4.0 * PI * xi).sqrt()
            }
        }
    }

    /// Derivative in `xi` of the characteristic function; used for the
    /// oscillatory tail correction of the inversion integral.
    pub fn char_fn_deriv(&self, xi: f64) -> Complex64 {
        let mi_pi = Complex64::new(0.0, -PI);
        match self {
            Density::KacMixture(d) => {
                let delta = d.value();
                let hot = Complex64::new(1.0, 2.0 * PI * xi / delta);
                let cold = Complex64::new(1.0, 2.0 * PI * xi / (1.0 - delta));
                mi_pi * (hot.powf(-1.5) + cold.powf(-1.5))
            }
            Density::StandardGaussian => {
                2.0 * mi_pi * Complex64::new(1.0, 4.0 * PI * xi).powf(-1.5)
            }
        }
    }

    /// Variance of the square law.
    pub fn sigma2(&self) -> f64 {
        match self {
            Density::KacMixture(d) => sigma2(d),
            Density::StandardGaussian => 2.0,
        }
    }

    /// Envelope constant `A` in the uniform decay bound
    /// `|g(xi)| <= A / sqrt(2 pi xi)`; also bounds the derivative envelopes
    /// used by the tail estimates.
    pub fn envelope_amp(&self) -> f64 {
        match self {
            Density::KacMixture(d) => {
                let delta = d.value();
                delta.powf(1.5) + (1.0 - delta).powf(1.5)
            }
            Density::StandardGaussian => 0.5f64.sqrt(),
        }
    }
}

/// The mixture density `f_delta(v)`.
pub fn f_delta(d: &Delta, v: f64) -> f64 {
    let delta = d.value();
    delta * d.hot().density(v) + (1.0 - delta) * d.cold().density(v)
}

/// The square-law density `h_delta(u) = f_delta(sqrt u)/sqrt u` for `u > 0`.
pub fn h_delta(d: &Delta, u: f64) -> Result<f64> {
    Density::KacMixture(*d).square_law(u)
}

/// Characteristic function of the square law of `density`.
pub fn char_fn(density: &Density, xi: f64) -> CharFnValue {
    density.char_fn(xi)
}

/// Variance of the square law: `3/(4 delta (1-delta)) - 1`.
pub fn sigma2(d: &Delta) -> f64 {
    let delta = d.value();
    3.0 / (4.0 * delta * (1.0 - delta)) - 1.0
}

/// Fourth moment of the mixture, `3/(4 delta (1-delta))`; diverges as
/// `delta -> 0`, which is the diagnostic feature of the whole family.
pub fn fourth_moment(d: &Delta) -> f64 {
    sigma2(d) + 1.0
}

/// Integration half-width covering at least twelve standard deviations of
/// the widest mixture component; the density beyond is below 1e-30.
pub fn moment_halfwidth(d: &Delta) -> f64 {
    (12.0 / (2.0 * d.value()).sqrt()).max(12.0)
}

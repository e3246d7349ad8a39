//! Velocity profiles `u = φ(t/τ)` along a path and the resulting protocol
//! kinematics `X(t)`, `Ẋ(t)`, `Ẍ(t)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use super::path::Path;
use crate::error::{Error, Result};
use crate::lattice::SystemConfig;
use crate::numerics::Numerics;
use crate::response::{quad, symmetric, PointResponse, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HarmonicTerm {
    pub k: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// Reparameterisation `φ: [0,1] → [0,1]`, increasing, with `φ'` periodic.
#[derive(Clone, Debug, PartialEq)]
pub enum VelocityProfile {
    Uniform,
    /// `φ(s) = s + Σ a_k [sin(2πks + φ_k) - sin φ_k] / (2πk)`; needs
    /// `Σ|a_k| < 1`.
    Harmonic(Vec<HarmonicTerm>),
    /// Constant dissipation rate: `dφ/ds ∝ 1/√(P'ᵀ Λ^(s) P')`.
    ArcLength(ArcLengthProfile),
}

impl VelocityProfile {
    pub fn harmonic(terms: Vec<HarmonicTerm>) -> Result<Self> {
        let total: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
        if total >= 1.0 || terms.iter().any(|t| t.k == 0) {
            return Err(Error::InvalidConfig(format!(
                "harmonic profile needs k ≥ 1 and Σ|a_k| < 1 (got {total})"
            )));
        }
        Ok(VelocityProfile::Harmonic(terms))
    }

    /// `(φ, φ', φ'')` at normalised time `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        match self {
            VelocityProfile::Uniform => [s, 1.0, 0.0],
            VelocityProfile::Harmonic(terms) => {
                let mut out = [s, 1.0, 0.0];
                for t in terms {
                    let w = TAU * t.k as f64;
                    let arg = w * s + t.phase;
                    out[0] += t.amplitude * (arg.sin() - t.phase.sin()) / w;
                    out[1] += t.amplitude * arg.cos();
                    out[2] -= t.amplitude * w * arg.sin();
                }
                out
            }
            VelocityProfile::ArcLength(p) => p.eval(s),
        }
    }

    /// Normalised time at which the path parameter reaches `u`.
    pub fn inverse(&self, u: f64) -> f64 {
        match self {
            VelocityProfile::Uniform => u,
            VelocityProfile::ArcLength(p) => p.cumulative(u) / p.total,
            VelocityProfile::Harmonic(_) => invert_monotone(|s| self.eval(s)[0], |s| self.eval(s)[1], u),
        }
    }
}

/// Solves `f(x) = y` on `[0, 1]` for increasing `f` with `f(0) = 0`,
/// `f(1) = 1`: safeguarded Newton.
fn invert_monotone(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x = y.clamp(0.0, 1.0);
    for _ in 0..100 {
        let r = f(x) - y;
        if r.abs() < 1e-15 {
            break;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - r / df(x);
        x = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 {
            break;
        }
    }
    x
}

/// Interpolated metric speed `m(u) = √(P'ᵀ Λ^(s) P')` and its integral.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcLengthProfile {
    samples: Vec<f64>,
    /// Fourier coefficients `c_k`, `k = 0..K/2`, for smooth paths.
    coeffs: Option<Vec<Complex64>>,
    total: f64,
}

impl ArcLengthProfile {
    /// `samples[j] = m(j/K)`. Smooth periodic data is interpolated
    /// spectrally, anything else piecewise linearly.
    pub fn from_samples(samples: Vec<f64>, spectral: bool) -> Result<Self> {
        let k = samples.len();
        if k < 4 || samples.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidConfig(
                "arc-length profile needs at least 4 strictly positive metric samples".into(),
            ));
        }
        let coeffs = spectral.then(|| {
            let mut buf: Vec<Complex64> = samples.iter().map(|m| Complex64::new(*m, 0.0)).collect();
            FftPlanner::new().plan_fft_forward(k).process(&mut buf);
            // Drop the Nyquist term so the interpolant stays real.
            buf.truncate(k.div_ceil(2));
            buf.iter().map(|c| c / k as f64).collect::<Vec<_>>()
        });
        let total = match &coeffs {
            Some(c) => c[0].re,
            None => samples.iter().sum::<f64>() / k as f64,
        };
        Ok(ArcLengthProfile { samples, coeffs, total })
    }

    /// `∮ m du`, i.e. the thermodynamic length of the path.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `(m(u), m'(u))`.
    pub fn speed(&self, u: f64) -> (f64, f64) {
        match &self.coeffs {
            Some(c) => {
                let (mut m, mut dm) = (c[0].re, 0.0);
                for (k, ck) in c.iter().enumerate().skip(1) {
                    let w = TAU * k as f64;
                    let e = Complex64::from_polar(1.0, w * u);
                    m += 2.0 * (ck * e).re;
                    dm += 2.0 * (ck * e * Complex64::new(0.0, w)).re;
                }
                (m, dm)
            }
            None => {
                let k = self.samples.len();
                let x = u.rem_euclid(1.0) * k as f64;
                let j = (x.floor() as usize).min(k - 1);
                let (a, b) = (self.samples[j], self.samples[(j + 1) % k]);
                let f = x - j as f64;
                (a + f * (b - a), (b - a) * k as f64)
            }
        }
    }

    /// `∫_0^u m`.
    pub fn cumulative(&self, u: f64) -> f64 {
        match &self.coeffs {
            Some(c) => {
                let mut acc = c[0].re * u;
                for (k, ck) in c.iter().enumerate().skip(1) {
                    let w = TAU * k as f64;
                    let e = Complex64::from_polar(1.0, w * u) - 1.0;
                    acc += 2.0 * (ck * e / Complex64::new(0.0, w)).re;
                }
                acc
            }
            None => {
                let k = self.samples.len();
                let h = 1.0 / k as f64;
                let x = u * k as f64;
                let j = (x.floor() as usize).min(k - 1);
                let full: f64 = (0..j).map(|i| 0.5 * h * (self.samples[i] + self.samples[(i + 1) % k])).sum();
                let f = x - j as f64;
                let (a, b) = (self.samples[j], self.samples[(j + 1) % k]);
                full + h * (a * f + 0.5 * (b - a) * f * f)
            }
        }
    }

    fn eval(&self, s: f64) -> [f64; 3] {
        let u = invert_monotone(|u| self.cumulative(u) / self.total, |u| self.speed(u).0 / self.total, s);
        let (m, dm) = self.speed(u);
        let d1 = self.total / m;
        [u, d1, -dm * d1.powi(3) / self.total]
    }
}

/// Position, velocity and acceleration at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kinematics {
    pub x: Vec2,
    pub v: Vec2,
    pub a: Vec2,
}

/// A closed path traversed once in time `τ` with a velocity profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    path: Path,
    profile: VelocityProfile,
    period: f64,
}

impl Protocol {
    pub fn new(path: Path, period: f64) -> Self {
        Protocol {
            path,
            profile: VelocityProfile::Uniform,
            period,
        }
    }

    pub fn with_profile(mut self, profile: VelocityProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = period;
        self
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn profile(&self) -> &VelocityProfile {
        &self.profile
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// `X = P(φ)`, `Ẋ = P'φ'/τ`, `Ẍ = (P''φ'² + P'φ'')/τ²` at time `t`.
    pub fn kinematics(&self, t: f64) -> Kinematics {
        let s = (t / self.period).rem_euclid(1.0);
        let [u, d1, d2] = self.profile.eval(s);
        let [x, p1, p2] = self.path.eval(u);
        let tau = self.period;
        Kinematics {
            x,
            v: [p1[0] * d1 / tau, p1[1] * d1 / tau],
            a: [
                (p2[0] * d1 * d1 + p1[0] * d2) / (tau * tau),
                (p2[1] * d1 * d1 + p1[1] * d2) / (tau * tau),
            ],
        }
    }

    /// Normalised times `t/τ` where the path has corners.
    pub fn time_breakpoints(&self) -> Vec<f64> {
        self.path.breakpoints().into_iter().map(|u| self.profile.inverse(u)).collect()
    }

    /// The same path with the constant-dissipation (thermodynamic arc
    /// length) profile, built from `samples` metric evaluations.
    pub fn constant_dissipation(&self, config: &SystemConfig, samples: usize, numerics: &Numerics) -> Result<Protocol> {
        let speeds = (0..samples)
            .into_par_iter()
            .map(|j| {
                let u = j as f64 / samples as f64;
                let [x, p1, _] = self.path.eval(u);
                let k = PointResponse::new(config, &x, numerics)?.first_order_kernels()?;
                let m2 = quad(&p1, &symmetric(&k.lambda), &p1);
                if m2 <= 0.0 {
                    return Err(Error::NegativeMetric { t: u, value: m2 });
                }
                Ok(m2.sqrt())
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = ArcLengthProfile::from_samples(speeds, self.path.is_smooth())?;
        Ok(self.clone().with_profile(VelocityProfile::ArcLength(profile)))
    }
}

//! Numerical knobs shared by the engine: finite-difference stencils,
//! degeneracy grouping and the steady-state kernel policy.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `[f(h) - f(-h)] / 2h`
    Central,
    /// `[8(f(h) - f(-h)) - (f(2h) - f(-2h))] / 12h`
    #[default]
    FivePoint,
}

impl Stencil {
    /// `(offset in units of h, weight)` pairs; the derivative is
    /// `Σ weight · f(x + offset·h) / h`.
    pub fn taps(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Central => &[(1, 0.5), (-1, -0.5)],
            Stencil::FivePoint => &[(1, 2.0 / 3.0), (-1, -2.0 / 3.0), (2, -1.0 / 12.0), (-2, 1.0 / 12.0)],
        }
    }

    /// Largest |offset| used by the stencil.
    pub fn reach(self) -> i32 {
        self.taps().iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }

    /// Applies the stencil to samples ordered like [`Stencil::taps`].
    pub fn combine(self, samples: &[f64], h: f64) -> f64 {
        self.taps().iter().zip(samples).map(|((_, w), f)| w * f).sum::<f64>() / h
    }
}

/// What to do when the frozen generator has more than one steady state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelPolicy {
    /// Refuse: degenerate kernels are an error.
    Strict,
    /// Select the Gibbs state when all baths share a temperature and it is
    /// stationary; traceless solves then exclude every conserved quantity.
    #[default]
    Thermal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Relative finite-difference step; the absolute step is
    /// `fd_step · min(max(fd_floor, ‖X‖), fd_gap_factor · Δ)` with `Δ` the
    /// smallest spacing between distinct levels of the frozen Hamiltonian.
    pub fd_step: f64,
    /// Field scale below which the step stops shrinking. Derivatives near
    /// `X = 0` vary on the scale `‖X‖`, so the step follows it down to here.
    pub fd_floor: f64,
    /// Near avoided crossings the response varies on the scale of the level
    /// spacing, which then caps the step.
    pub fd_gap_factor: f64,
    pub stencil: Stencil,
    /// Relative tolerance for merging eigenvalues and Bohr frequencies,
    /// scaled by `max(1, spectral range)`.
    pub degeneracy_tol: f64,
    /// Singular values below `kernel_tol · σ_max` (per block) count as kernel.
    pub kernel_tol: f64,
    pub kernel_policy: KernelPolicy,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            fd_step: 1e-3,
            fd_floor: 0.05,
            fd_gap_factor: 30.0,
            stencil: Stencil::FivePoint,
            degeneracy_tol: 1e-9,
            kernel_tol: 1e-9,
            kernel_policy: KernelPolicy::Thermal,
        }
    }
}

impl Numerics {
    pub fn step_at(&self, x: &[f64]) -> f64 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.fd_step * norm.max(self.fd_floor)
    }

    /// [`Numerics::step_at`] capped by the smallest level spacing `gap`
    /// (`None` when all levels coincide).
    pub fn step_near_levels(&self, x: &[f64], gap: Option<f64>) -> f64 {
        let h = self.step_at(x);
        match gap {
            Some(g) => h.min(self.fd_step * self.fd_gap_factor * g),
            None => h,
        }
    }

    pub fn strict(mut self) -> Self {
        self.kernel_policy = KernelPolicy::Strict;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_differentiate_polynomials() {
        let f = |x: f64| 3.0 * x.powi(4) - x.powi(3) + 2.0 * x;
        let df = |x: f64| 12.0 * x.powi(3) - 3.0 * x.powi(2) + 2.0;
        let (x0, h) = (0.7, 1e-2);
        for (stencil, tol) in [(Stencil::Central, 1e-2), (Stencil::FivePoint, 1e-10)] {
            let samples: Vec<f64> = stencil.taps().iter().map(|(k, _)| f(x0 + *k as f64 * h)).collect();
            let d = stencil.combine(&samples, h);
            assert!((d - df(x0)).abs() < tol, "{stencil:?}: {d} vs {}", df(x0));
        }
    }

    #[test]
    fn step_scales_with_point_norm() {
        let n = Numerics::default();
        assert_eq!(n.step_at(&[0.0, 0.0]), 5e-5);
        assert_eq!(n.step_at(&[0.01, 0.02]), 5e-5);
        assert!((n.step_at(&[0.3, 0.4]) - 5e-4).abs() < 1e-18);
        assert_eq!(n.step_near_levels(&[0.3, 0.4], None), n.step_at(&[0.3, 0.4]));
        assert!((n.step_near_levels(&[0.3, 0.4], Some(1e-3)) - 3e-5).abs() < 1e-18);
        assert!((n.step_at(&[3.0, 4.0]) - 5e-3).abs() < 1e-18);
    }
}

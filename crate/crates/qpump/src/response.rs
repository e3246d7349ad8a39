//! Slow-driving expansion `ρ = ρ^(f) + ρ^(1) + ρ^(2) + …` and the response
//! kernels that turn control velocities into power and heat currents.
//!
//! All derivatives are finite differences of lab-frame quantities on a
//! lattice of displaced control points `X + h·(k_x, k_z)`. A
//! [`PointResponse`] caches the frozen solutions on that lattice, so the
//! second-order kernels at one point cost 33 frozen solves with the
//! five-point stencil.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{control_gradient, hamiltonian, CMat, SystemConfig, C64, CONTROL_DIM};
use crate::lindblad::{eigendecompose, FrozenSolution};
use crate::numerics::Numerics;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub fn dot(a: &Vec2, b: &Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `aᵀ M b`.
pub fn quad(a: &Vec2, m: &Mat2, b: &Vec2) -> f64 {
    (0..2).map(|i| (0..2).map(|j| a[i] * m[i][j] * b[j]).sum::<f64>()).sum()
}

pub fn symmetric(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[0][1] + m[1][0]);
    [[m[0][0], off], [off, m[1][1]]]
}

/// Eigenvalues `(min, max)` of the symmetric part.
pub fn symmetric_eigenvalues(m: &Mat2) -> (f64, f64) {
    let s = symmetric(m);
    let mean = 0.5 * (s[0][0] + s[1][1]);
    let r = (0.25 * (s[0][0] - s[1][1]).powi(2) + s[0][1] * s[0][1]).sqrt();
    (mean - r, mean + r)
}

fn frobenius(m: &Mat2) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

type Offset = [i32; 2];

fn shift(o: Offset, dir: usize, k: i32) -> Offset {
    let mut out = o;
    out[dir] += k;
    out
}

/// Removes the trace so that roundoff cannot trip the traceless solve.
fn project_traceless(mut y: CMat) -> CMat {
    let n = y.nrows();
    let t = y.trace() / C64::new(n as f64, 0.0);
    for k in 0..n {
        y[(k, k)] -= t;
    }
    y
}

fn hermitian_part(m: CMat) -> CMat {
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn scale(m: &CMat, s: f64) -> CMat {
    m * C64::new(s, 0.0)
}

/// Kernels that need only first derivatives of the frozen state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstOrderKernels {
    pub point: Vec2,
    /// `Λ_{jl} = Tr{[𝓛⁻¹∂_jρ^(f)] ∂_l H}`; `P^(2) = Ẋᵀ Λ Ẋ`.
    pub lambda: Mat2,
    /// Per bath, `Λ^(1)_{α,j} = Tr{𝒟_α[𝓛⁻¹∂_jρ^(f)] H}`.
    pub lambda1: Vec<Vec2>,
    /// Per bath, `Λ^(2)_{α,j} = Tr{𝒟_α[𝓛⁻²∂_jρ^(f)] H}`.
    pub lambda2: Vec<Vec2>,
}

impl FirstOrderKernels {
    pub fn power2(&self, velocity: &Vec2) -> f64 {
        quad(velocity, &self.lambda, velocity)
    }

    pub fn current1(&self, bath: usize, velocity: &Vec2) -> f64 {
        dot(&self.lambda1[bath], velocity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResponseKernels {
    pub first: FirstOrderKernels,
    /// Per bath, `Ω^(1)_{α,il} = Tr{𝒟_α[𝓛⁻¹ ∂_i(𝓛⁻¹∂_lρ^(f))] H}`.
    pub omega1: Vec<Mat2>,
    /// Per bath, `Ω^(2)_{α,il} = -∂_i Λ^(2)_{α,l}`.
    pub omega2: Vec<Mat2>,
}

impl ResponseKernels {
    pub fn n_baths(&self) -> usize {
        self.omega1.len()
    }

    /// `Ω_α = Ω^(1)_α + Ω^(2)_α`.
    pub fn omega(&self, bath: usize) -> Mat2 {
        let (a, b) = (&self.omega1[bath], &self.omega2[bath]);
        [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
    }

    /// Local second-order current `Ẋᵀ Ω^(1)_α Ẋ + Λ^(2)_α·Ẍ`.
    pub fn current2(&self, bath: usize, velocity: &Vec2, acceleration: &Vec2) -> f64 {
        quad(velocity, &self.omega1[bath], velocity) + dot(&self.first.lambda2[bath], acceleration)
    }

    /// `‖Σ_α Ω^(s)_α + Λ^(s)‖` relative to the largest of its terms
    /// (Frobenius norms). Near dark states the bath kernels are orders of
    /// magnitude larger than `Λ^(s)` and cancel between baths.
    pub fn kernel_residual(&self) -> f64 {
        let ls = symmetric(&self.first.lambda);
        let mut sum = ls;
        let mut scale = frobenius(&ls);
        for bath in 0..self.n_baths() {
            let o = symmetric(&self.omega(bath));
            scale = scale.max(frobenius(&o));
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += o[i][j];
                }
            }
        }
        frobenius(&sum) / scale
    }
}

/// Density-matrix expansion at one instant of a protocol.
#[derive(Clone, Debug)]
pub struct ExpansionState {
    pub point: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub hamiltonian: CMat,
    /// `∂H/∂X_j`.
    pub gradient: Vec<CMat>,
    pub rho_f: CMat,
    pub rho1: CMat,
    pub rho2: CMat,
    /// `dρ^(f)/dt = Σ_j Ẋ_j ∂_jρ^(f)`.
    pub rho_f_dot: CMat,
    /// `dρ^(1)/dt = Σ_{il} Ẋ_iẊ_l ∂_i x_l + Σ_l Ẍ_l x_l` with `x_l = 𝓛⁻¹∂_lρ^(f)`.
    pub rho1_dot: CMat,
    /// `𝒟_α[ρ^(1)]` and `𝒟_α[ρ^(2)]` per bath, time unit included.
    pub dissipated1: Vec<CMat>,
    pub dissipated2: Vec<CMat>,
    pub time_unit: f64,
}

impl ExpansionState {
    /// `dH/dt`.
    pub fn hamiltonian_dot(&self) -> CMat {
        scale(&self.gradient[0], self.velocity[0]) + scale(&self.gradient[1], self.velocity[1])
    }
}

/// Finite-difference response at one control point.
pub struct PointResponse<'a> {
    config: &'a SystemConfig,
    numerics: &'a Numerics,
    x: Vec2,
    h: f64,
    frozen: HashMap<Offset, FrozenSolution>,
    drho: HashMap<(Offset, usize), CMat>,
    x1: HashMap<(Offset, usize), CMat>,
}

impl<'a> PointResponse<'a> {
    pub fn new(config: &'a SystemConfig, x: &[f64], numerics: &'a Numerics) -> Result<Self> {
        if x.len() != CONTROL_DIM {
            return Err(Error::DimensionMismatch {
                expected: CONTROL_DIM,
                got: x.len(),
            });
        }
        if !(numerics.fd_step > 0.0 && numerics.fd_floor > 0.0 && numerics.fd_gap_factor > 0.0) {
            return Err(Error::InvalidConfig("finite-difference step parameters must be positive".into()));
        }
        let levels = eigendecompose(&hamiltonian(config, x)?, numerics.degeneracy_tol)?.eigenvalues;
        let gap = levels.windows(2).map(|w| w[1] - w[0]).reduce(f64::min);
        Ok(PointResponse {
            config,
            numerics,
            x: [x[0], x[1]],
            h: numerics.step_near_levels(x, gap),
            frozen: HashMap::new(),
            drho: HashMap::new(),
            x1: HashMap::new(),
        })
    }

    pub fn point(&self) -> Vec2 {
        self.x
    }

    /// Absolute finite-difference step.
    pub fn step(&self) -> f64 {
        self.h
    }

    /// Number of frozen solutions computed so far.
    pub fn frozen_solves(&self) -> usize {
        self.frozen.len()
    }

    fn frozen_at(&mut self, o: Offset) -> Result<&FrozenSolution> {
        if !self.frozen.contains_key(&o) {
            let p = [self.x[0] + self.h * o[0] as f64, self.x[1] + self.h * o[1] as f64];
            let f = FrozenSolution::new(self.config, &p, self.numerics)?;
            self.frozen.insert(o, f);
        }
        Ok(&self.frozen[&o])
    }

    pub fn center(&mut self) -> Result<&FrozenSolution> {
        self.frozen_at([0, 0])
    }

    /// Stencil derivative along `dir` of a matrix-valued function of offsets.
    fn fd_matrix(&mut self, base: Offset, dir: usize, mut f: impl FnMut(&mut Self, Offset) -> Result<CMat>) -> Result<CMat> {
        let stencil = self.numerics.stencil;
        let mut acc: Option<CMat> = None;
        for &(k, w) in stencil.taps() {
            let v = scale(&f(self, shift(base, dir, k))?, w);
            acc = Some(match acc {
                Some(a) => a + v,
                None => v,
            });
        }
        Ok(scale(&acc.expect("stencil has taps"), 1.0 / self.h))
    }

    fn fd_scalar(&mut self, base: Offset, dir: usize, mut f: impl FnMut(&mut Self, Offset) -> Result<f64>) -> Result<f64> {
        let stencil = self.numerics.stencil;
        let mut samples = Vec::with_capacity(stencil.taps().len());
        for &(k, _) in stencil.taps() {
            samples.push(f(self, shift(base, dir, k))?);
        }
        Ok(stencil.combine(&samples, self.h))
    }

    fn drho_at(&mut self, o: Offset, dir: usize) -> Result<CMat> {
        if let Some(d) = self.drho.get(&(o, dir)) {
            return Ok(d.clone());
        }
        let d = self.fd_matrix(o, dir, |s, p| Ok(s.frozen_at(p)?.steady().rho.clone()))?;
        let d = project_traceless(hermitian_part(d));
        self.drho.insert((o, dir), d.clone());
        Ok(d)
    }

    /// `x_l = 𝓛⁻¹ ∂_l ρ^(f)` at a displaced point.
    fn x1_at(&mut self, o: Offset, dir: usize) -> Result<CMat> {
        if let Some(x) = self.x1.get(&(o, dir)) {
            return Ok(x.clone());
        }
        let d = self.drho_at(o, dir)?;
        let x = hermitian_part(self.frozen_at(o)?.inverse_on_traceless(&d)?);
        self.x1.insert((o, dir), x.clone());
        Ok(x)
    }

    /// `𝓛⁻² ∂_l ρ^(f)` at a displaced point.
    fn x2_at(&mut self, o: Offset, dir: usize) -> Result<CMat> {
        let x = self.x1_at(o, dir)?;
        Ok(hermitian_part(self.frozen_at(o)?.inverse_on_traceless(&x)?))
    }

    fn lambda2_at(&mut self, o: Offset, bath: usize, dir: usize) -> Result<f64> {
        let y = self.x2_at(o, dir)?;
        Ok(self.frozen_at(o)?.heat(bath, &y))
    }

    /// `∂_j ρ^(f)` (traceless, Hermitian).
    pub fn frozen_derivative(&mut self, dir: usize) -> Result<CMat> {
        self.drho_at([0, 0], dir)
    }

    /// `x_l = 𝓛⁻¹ ∂_l ρ^(f)`.
    pub fn first_order_response(&mut self, dir: usize) -> Result<CMat> {
        self.x1_at([0, 0], dir)
    }

    /// `∂_i x_l`.
    pub fn response_derivative(&mut self, i: usize, l: usize) -> Result<CMat> {
        let d = self.fd_matrix([0, 0], i, |s, p| s.x1_at(p, l))?;
        Ok(project_traceless(hermitian_part(d)))
    }

    pub fn first_order_kernels(&mut self) -> Result<FirstOrderKernels> {
        let grad = control_gradient(self.config);
        let xs = [self.x1_at([0, 0], 0)?, self.x1_at([0, 0], 1)?];
        let x2s = [self.x2_at([0, 0], 0)?, self.x2_at([0, 0], 1)?];
        let f = self.frozen_at([0, 0])?;
        let mut lambda = [[0.0; 2]; 2];
        for j in 0..2 {
            for l in 0..2 {
                lambda[j][l] = (&xs[j] * &grad[l]).trace().re;
            }
        }
        let nb = f.n_baths();
        let lambda1 = (0..nb).map(|a| [f.heat(a, &xs[0]), f.heat(a, &xs[1])]).collect();
        let lambda2 = (0..nb).map(|a| [f.heat(a, &x2s[0]), f.heat(a, &x2s[1])]).collect();
        Ok(FirstOrderKernels {
            point: self.x,
            lambda,
            lambda1,
            lambda2,
        })
    }

    pub fn omega1(&mut self) -> Result<Vec<Mat2>> {
        let mut z = vec![vec![CMat::zeros(0, 0); 2]; 2];
        for i in 0..2 {
            for l in 0..2 {
                let d = self.response_derivative(i, l)?;
                z[i][l] = hermitian_part(self.center()?.inverse_on_traceless(&d)?);
            }
        }
        let f = self.center()?;
        Ok((0..f.n_baths())
            .map(|a| {
                let mut m = [[0.0; 2]; 2];
                for i in 0..2 {
                    for l in 0..2 {
                        m[i][l] = f.heat(a, &z[i][l]);
                    }
                }
                m
            })
            .collect())
    }

    pub fn omega2(&mut self) -> Result<Vec<Mat2>> {
        let nb = self.center()?.n_baths();
        let mut out = vec![[[0.0; 2]; 2]; nb];
        for (a, m) in out.iter_mut().enumerate() {
            for i in 0..2 {
                for l in 0..2 {
                    m[i][l] = -self.fd_scalar([0, 0], i, |s, p| s.lambda2_at(p, a, l))?;
                }
            }
        }
        Ok(out)
    }

    pub fn kernels(&mut self) -> Result<ResponseKernels> {
        let first = self.first_order_kernels()?;
        let omega1 = self.omega1()?;
        let omega2 = self.omega2()?;
        Ok(ResponseKernels { first, omega1, omega2 })
    }

    /// `ρ^(1) = Σ_j Ẋ_j x_j`.
    pub fn rho_order1(&mut self, velocity: &Vec2) -> Result<CMat> {
        let xs = [self.x1_at([0, 0], 0)?, self.x1_at([0, 0], 1)?];
        Ok(scale(&xs[0], velocity[0]) + scale(&xs[1], velocity[1]))
    }

    /// `dρ^(1)/dt` from the chain rule.
    pub fn rho1_dot(&mut self, velocity: &Vec2, acceleration: &Vec2) -> Result<CMat> {
        let n = self.config.dim();
        let mut out = CMat::zeros(n, n);
        for l in 0..2 {
            out += scale(&self.x1_at([0, 0], l)?, acceleration[l]);
            for i in 0..2 {
                if velocity[i] != 0.0 && velocity[l] != 0.0 {
                    out += scale(&self.response_derivative(i, l)?, velocity[i] * velocity[l]);
                }
            }
        }
        Ok(out)
    }

    /// `ρ^(2) = 𝓛⁻¹[dρ^(1)/dt]`.
    pub fn rho_order2(&mut self, velocity: &Vec2, acceleration: &Vec2) -> Result<CMat> {
        let y = project_traceless(self.rho1_dot(velocity, acceleration)?);
        Ok(hermitian_part(self.center()?.inverse_on_traceless(&y)?))
    }

    pub fn expansion(&mut self, velocity: &Vec2, acceleration: &Vec2) -> Result<ExpansionState> {
        let d = [self.drho_at([0, 0], 0)?, self.drho_at([0, 0], 1)?];
        let rho_f_dot = scale(&d[0], velocity[0]) + scale(&d[1], velocity[1]);
        let rho1 = self.rho_order1(velocity)?;
        let rho1_dot = project_traceless(self.rho1_dot(velocity, acceleration)?);
        let (point, gradient) = (self.x, control_gradient(self.config));
        let f = self.center()?;
        let rho2 = hermitian_part(f.inverse_on_traceless(&rho1_dot)?);
        let nb = f.n_baths();
        Ok(ExpansionState {
            point,
            velocity: *velocity,
            acceleration: *acceleration,
            hamiltonian: f.hamiltonian().clone(),
            gradient,
            rho_f: f.steady().rho.clone(),
            dissipated1: (0..nb).map(|a| f.apply_dissipator(a, &rho1)).collect(),
            dissipated2: (0..nb).map(|a| f.apply_dissipator(a, &rho2)).collect(),
            time_unit: f.time_unit(),
            rho1,
            rho2,
            rho_f_dot,
            rho1_dot,
        })
    }
}

/// `∂_{X_j} ρ^(f)`.
pub fn frozen_derivative(config: &SystemConfig, x: &[f64], dir: usize, numerics: &Numerics) -> Result<CMat> {
    PointResponse::new(config, x, numerics)?.frozen_derivative(dir)
}

pub fn rho_order1(config: &SystemConfig, x: &[f64], velocity: &Vec2, numerics: &Numerics) -> Result<CMat> {
    PointResponse::new(config, x, numerics)?.rho_order1(velocity)
}

pub fn rho_order2(
    config: &SystemConfig,
    x: &[f64],
    velocity: &Vec2,
    acceleration: &Vec2,
    numerics: &Numerics,
) -> Result<CMat> {
    PointResponse::new(config, x, numerics)?.rho_order2(velocity, acceleration)
}

pub fn lambda_metric(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<Mat2> {
    Ok(PointResponse::new(config, x, numerics)?.first_order_kernels()?.lambda)
}

/// `Λ^(n)_α` for `n ∈ {1, 2}`, one vector per bath.
pub fn lambda_alpha(config: &SystemConfig, x: &[f64], order: usize, numerics: &Numerics) -> Result<Vec<Vec2>> {
    let k = PointResponse::new(config, x, numerics)?.first_order_kernels()?;
    match order {
        1 => Ok(k.lambda1),
        2 => Ok(k.lambda2),
        n => Err(Error::Unsupported(format!("response order {n} (only 1 and 2)"))),
    }
}

pub fn omega1_alpha(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<Vec<Mat2>> {
    PointResponse::new(config, x, numerics)?.omega1()
}

pub fn omega2_alpha(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<Vec<Mat2>> {
    PointResponse::new(config, x, numerics)?.omega2()
}

pub fn response_kernels(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<ResponseKernels> {
    PointResponse::new(config, x, numerics)?.kernels()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::standard_baths;
    use crate::numerics::Stencil;
    use nalgebra::SymmetricEigen;

    fn model(j: f64, th: f64) -> SystemConfig {
        let mut baths = standard_baths(0.002, 1.0, 120.0);
        baths[1].temperature = th;
        SystemConfig::two_qubit(j, 1.2, 2.0, baths)
    }

    fn entropy(rho: &CMat) -> f64 {
        SymmetricEigen::new(rho.clone())
            .eigenvalues
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }

    fn max_rel(a: &CMat, b: &CMat) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn zero_velocity_gives_zero_corrections() {
        let cfg = model(2.0, 1.2);
        let num = Numerics::default();
        let mut r = PointResponse::new(&cfg, &[0.9, 0.4], &num).unwrap();
        assert_eq!(r.rho_order1(&[0.0, 0.0]).unwrap().norm(), 0.0);
        assert_eq!(r.rho_order2(&[0.0, 0.0], &[0.0, 0.0]).unwrap().norm(), 0.0);
    }

    #[test]
    fn first_order_is_linear_in_velocity() {
        let cfg = model(2.0, 1.2);
        let num = Numerics::default();
        let mut r = PointResponse::new(&cfg, &[0.9, 0.4], &num).unwrap();
        let v = [0.3, -1.7];
        let a = r.rho_order1(&v).unwrap();
        let b = r.rho_order1(&[2.0 * v[0], 2.0 * v[1]]).unwrap();
        assert_eq!(b, a * C64::new(2.0, 0.0));
    }

    #[test]
    fn pure_acceleration_term_is_double_inverse() {
        let cfg = model(2.0, 1.2);
        let num = Numerics::default();
        let mut r = PointResponse::new(&cfg, &[0.9, 0.4], &num).unwrap();
        let acc = [0.5, 0.0];
        let rho2 = r.rho_order2(&[0.0, 0.0], &acc).unwrap();
        let f = r.center().unwrap().clone();
        let d = r.frozen_derivative(0).unwrap();
        let twice = f.inverse_on_traceless(&f.inverse_on_traceless(&d).unwrap()).unwrap() * C64::new(0.5, 0.0);
        assert!(max_rel(&rho2, &twice) < 1e-10);
    }

    #[test]
    fn constant_hamiltonian_has_no_response() {
        let mut cfg = model(2.0, 1.2);
        cfg.drive_weights = vec![0.0, 0.0];
        let num = Numerics::default();
        let d = frozen_derivative(&cfg, &[0.9, 0.4], 1, &num).unwrap();
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn derivative_converges_under_step_halving() {
        let cfg = model(2.0, 1.0);
        let x = [0.73, 1.21];
        let coarse = Numerics {
            fd_step: 2e-3,
            ..Numerics::default()
        };
        let fine = Numerics {
            fd_step: 1e-3,
            ..Numerics::default()
        };
        let central = Numerics {
            stencil: Stencil::Central,
            fd_step: 1e-3,
            ..Numerics::default()
        };
        for dir in 0..2 {
            let a = frozen_derivative(&cfg, &x, dir, &coarse).unwrap();
            let b = frozen_derivative(&cfg, &x, dir, &fine).unwrap();
            let c = frozen_derivative(&cfg, &x, dir, &central).unwrap();
            assert!(max_rel(&a, &b) < 1e-9, "five-point step halving {}", max_rel(&a, &b));
            // Central differences carry O(h²) truncation error.
            assert!(max_rel(&c, &b) < 1e-5);
        }
    }

    #[test]
    fn entropy_production_identity() {
        // Σ_α Λ^(1)_{α,j} = T ∂_j S^(f) with a common temperature.
        let cfg = model(2.0, 1.0);
        let num = Numerics::default();
        let x = [0.8, 0.45];
        let k = PointResponse::new(&cfg, &x, &num).unwrap().first_order_kernels().unwrap();
        let h = 1e-4;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let sp = entropy(&FrozenSolution::new(&cfg, &xp, &num).unwrap().steady().rho);
            let sm = entropy(&FrozenSolution::new(&cfg, &xm, &num).unwrap().steady().rho);
            let ds = (sp - sm) / (2.0 * h);
            let sum = k.lambda1[0][j] + k.lambda1[1][j];
            assert!((sum - ds).abs() < 1e-7 * ds.abs().max(1e-3), "{sum} vs {ds}");
        }
    }

    #[test]
    fn dissipated_power_metric_is_positive() {
        // At a common temperature the metric is positive semidefinite; it is
        // nearly rank one, stiff along X where populations respond.
        let cfg = model(2.0, 1.0);
        let num = Numerics::default();
        for x in [[0.2, 0.3], [1.0, 0.5], [1.7, 1.9], [0.05, 1.4]] {
            let lambda = lambda_metric(&cfg, &x, &num).unwrap();
            let (lo, hi) = symmetric_eigenvalues(&lambda);
            assert!(hi > 0.0 && lo >= -1e-9 * hi, "{x:?}: {lo} {hi}");
        }
    }

    #[test]
    fn kernel_balance_at_sample_points() {
        for (j, th) in [(0.0, 1.0), (2.0, 1.0), (2.0, 1.4)] {
            let cfg = model(j, th);
            let num = Numerics::default();
            for x in [[0.3, 0.8], [1.25, 0.6]] {
                let k = response_kernels(&cfg, &x, &num).unwrap();
                assert!(k.kernel_residual() < 1e-8, "J={j} th={th} {x:?}: {}", k.kernel_residual());
            }
        }
    }

    #[test]
    fn expansion_matches_kernels() {
        let cfg = model(2.0, 1.2);
        let num = Numerics::default();
        let mut r = PointResponse::new(&cfg, &[1.1, 0.7], &num).unwrap();
        let (v, a) = ([0.4, -0.9], [1.3, 0.2]);
        let s = r.expansion(&v, &a).unwrap();
        let k = r.kernels().unwrap();
        assert_eq!(r.frozen_solves(), 33);
        let h = &s.hamiltonian;
        for bath in 0..2 {
            let j1 = (&s.dissipated1[bath] * h).trace().re;
            let j2 = (&s.dissipated2[bath] * h).trace().re;
            assert!((j1 - k.first.current1(bath, &v)).abs() < 1e-10 * j1.abs());
            assert!((j2 - k.current2(bath, &v, &a)).abs() < 1e-9 * j2.abs());
        }
        let p2 = (&s.rho1 * s.hamiltonian_dot()).trace().re;
        assert!((p2 - k.first.power2(&v)).abs() < 1e-10 * p2.abs());
        for m in [&s.rho1, &s.rho2] {
            assert!(m.trace().norm() < 1e-10 * m.norm());
            assert!(crate::lattice::hermiticity_deviation(m) < 1e-10 * m.norm());
        }
        let f = r.center().unwrap();
        let norm_l = f.lindbladian().matrix().norm();
        for (x, y) in [(&s.rho1, &s.rho_f_dot), (&s.rho2, &s.rho1_dot)] {
            // lab-frame rotations leave roundoff of order ε‖𝓛‖‖x‖
            let bound = 1e-9 * y.norm().max(1e-6 * norm_l * x.norm());
            assert!((f.apply_lindbladian(x) - y).norm() < bound);
        }
    }

    #[test]
    fn order_by_order_consistency_along_a_protocol() {
        // dρ^(1)/dt by differencing in t against 𝓛 ρ^(2) on an ellipse.
        let cfg = model(2.0, 1.2);
        let num = Numerics::default();
        let w = std::f64::consts::TAU;
        let state = |t: f64| {
            let x = [1.0 + 0.5 * (w * t).cos(), 0.5 + 0.25 * (w * t).sin()];
            let v = [-0.5 * w * (w * t).sin(), 0.25 * w * (w * t).cos()];
            let a = [-0.5 * w * w * (w * t).cos(), -0.25 * w * w * (w * t).sin()];
            (x, v, a)
        };
        for t in [0.1, 0.37, 0.8] {
            let dt = 1e-3;
            let rho1 = |s: f64| {
                let (x, v, _) = state(s);
                rho_order1(&cfg, &x, &v, &num).unwrap()
            };
            let diff = (rho1(t + dt) - rho1(t - dt)) * C64::new(8.0, 0.0) - (rho1(t + 2.0 * dt) - rho1(t - 2.0 * dt));
            let drho1 = diff * C64::new(1.0 / (12.0 * dt), 0.0);
            let (x, v, a) = state(t);
            let mut r = PointResponse::new(&cfg, &x, &num).unwrap();
            let rho2 = r.rho_order2(&v, &a).unwrap();
            let l_rho2 = r.center().unwrap().apply_lindbladian(&rho2);
            assert!(max_rel(&l_rho2, &drho1) < 1e-8, "t={t}: {}", max_rel(&l_rho2, &drho1));
        }
    }

    #[test]
    fn omega2_vanishes_for_constant_lambda2() {
        let mut cfg = model(2.0, 1.2);
        cfg.drive_weights = vec![0.0, 0.0];
        // With no drive the frozen state is constant and all kernels vanish.
        let o = omega2_alpha(&cfg, &[0.5, 0.5], &Numerics::default()).unwrap();
        assert!(o.iter().flatten().flatten().all(|v| *v == 0.0));
    }
}

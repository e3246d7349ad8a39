//! The frozen generator at one control point, assembled in the
//! instantaneous eigenframe of `H(X)`.

use nalgebra::DVector;

use super::basis::{bohr_channels, eigendecompose, frequency_classes, ohmic_rate, BohrChannel, FrozenBasis};
use super::solver::BlockSolver;
use super::superop::{add_jump, check_traceless, hermitize, unvectorize, vectorize, SteadyState, SuperRole, Superoperator};
use crate::error::{Error, Result};
use crate::lattice::{coupling_operators, hamiltonian, CMat, SystemConfig, C64};
use crate::numerics::{KernelPolicy, Numerics};

/// Everything the response expansion needs at a frozen point: the
/// eigenframe, the generator (including the time unit), its block solver
/// and the steady state.
#[derive(Clone, Debug)]
pub struct FrozenSolution {
    point: [f64; 2],
    hamiltonian: CMat,
    basis: FrozenBasis,
    couplings: Vec<CMat>,
    time_unit: f64,
    generator: CMat,
    dissipators: Vec<CMat>,
    solver: BlockSolver,
    steady: SteadyState,
    policy: KernelPolicy,
}

impl FrozenSolution {
    pub fn new(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<Self> {
        let h = hamiltonian(config, x)?;
        let point = [x[0], x[1]];
        Self::build(config, point, h, numerics).map_err(|e| e.at(&point))
    }

    fn build(config: &SystemConfig, point: [f64; 2], h: CMat, numerics: &Numerics) -> Result<Self> {
        let basis = eigendecompose(&h, numerics.degeneracy_tol)?;
        let n = basis.dim();
        let u = basis.vectors().clone();
        let level = basis.level_of().to_vec();
        let energies = basis.merged_energies();
        let (freqs, class) = frequency_classes(&basis.eigenvalues, basis.tolerance);
        let tu = config.time_unit;

        let couplings = coupling_operators(config);
        let mut dissipators = Vec::with_capacity(couplings.len());
        for (bath, pi) in config.baths.iter().zip(&couplings) {
            let xi = u.adjoint() * pi * &u;
            let floor = 1e-14 * xi.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let mut jumps = vec![CMat::zeros(n, n); freqs.len()];
            for i in 0..n {
                for k in 0..n {
                    if xi[(i, k)].norm() > floor {
                        jumps[class[level[i]][level[k]]][(i, k)] = xi[(i, k)];
                    }
                }
            }
            let mut d = CMat::zeros(n * n, n * n);
            let g2 = bath.strength * bath.strength;
            for (omega, a) in freqs.iter().zip(&jumps) {
                let c = g2 * ohmic_rate(*omega, bath.temperature, bath.cutoff) * tu;
                add_jump(&mut d, c, a, None);
            }
            dissipators.push(d);
        }

        let mut generator = dissipators.iter().fold(CMat::zeros(n * n, n * n), |acc, d| acc + d);
        for i in 0..n {
            for j in 0..n {
                // -i[H, ρ]_{ij} = -i (E_i - E_j) ρ_ij
                generator[(i + n * j, i + n * j)] += C64::new(0.0, -tu * (energies[i] - energies[j]));
            }
        }
        let solver = BlockSolver::new(&generator, n, None, numerics.kernel_tol);

        // With a common temperature the Gibbs state is stationary by detailed
        // balance. Taking it directly (after checking) avoids the numerical
        // null vector, which loses digits near dark states where the slowest
        // relaxation rate vanishes.
        let thermal = match (numerics.kernel_policy, config.common_temperature()) {
            (KernelPolicy::Thermal, Some(t)) => {
                let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
                let weights: Vec<f64> = energies.iter().map(|e| (-(e - e0) / t).exp()).collect();
                let z: f64 = weights.iter().sum();
                let gibbs = CMat::from_diagonal(&DVector::from_iterator(
                    n,
                    weights.iter().map(|w| C64::new(w / z, 0.0)),
                ));
                let residual = (&generator * vectorize(&gibbs)).norm();
                (residual <= 1e-9 * solver.scale() * gibbs.norm()).then_some(gibbs)
            }
            _ => None,
        };
        let steady = match (thermal, solver.stationary()) {
            (Some(gibbs), _) => SteadyState {
                rho: hermitize(&(&u * gibbs * u.adjoint())),
            },
            (None, Some(v)) => SteadyState {
                rho: hermitize(&(&u * unvectorize(&v, n) * u.adjoint())),
            },
            (None, None) => {
                return Err(Error::DegenerateKernel {
                    dim: solver.kernel_dimension(),
                })
            }
        };

        Ok(FrozenSolution {
            point,
            hamiltonian: h,
            basis,
            couplings,
            time_unit: tu,
            generator,
            dissipators,
            solver,
            steady,
            policy: numerics.kernel_policy,
        })
    }

    pub fn point(&self) -> [f64; 2] {
        self.point
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn basis(&self) -> &FrozenBasis {
        &self.basis
    }

    pub fn steady(&self) -> &SteadyState {
        &self.steady
    }

    pub fn time_unit(&self) -> f64 {
        self.time_unit
    }

    pub fn n_baths(&self) -> usize {
        self.dissipators.len()
    }

    pub fn kernel_dimension(&self) -> usize {
        self.solver.kernel_dimension()
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `U† A U`.
    pub fn to_frame(&self, a: &CMat) -> CMat {
        let u = self.basis.vectors();
        u.adjoint() * a * u
    }

    /// `U A U†`.
    pub fn from_frame(&self, a: &CMat) -> CMat {
        let u = self.basis.vectors();
        u * a * u.adjoint()
    }

    /// `𝓛⁻¹ y` on the traceless subspace, both sides in the eigenframe.
    pub fn inverse_frame(&self, y: &CMat) -> Result<CMat> {
        check_traceless(y)?;
        if self.policy == KernelPolicy::Strict && self.solver.kernel_dimension() != 1 {
            return Err(Error::SingularRestricted {
                dim: self.solver.kernel_dimension().saturating_sub(1),
            });
        }
        Ok(unvectorize(&self.solver.solve(&vectorize(y)), self.dim()))
    }

    /// `𝓛⁻¹ y` on the traceless subspace, lab frame.
    pub fn inverse_on_traceless(&self, y: &CMat) -> Result<CMat> {
        Ok(self.from_frame(&self.inverse_frame(&self.to_frame(y))?))
    }

    pub fn dissipate_frame(&self, bath: usize, y: &CMat) -> CMat {
        unvectorize(&(&self.dissipators[bath] * vectorize(y)), self.dim())
    }

    /// `𝒟_α[y]` (time unit included), lab frame.
    pub fn apply_dissipator(&self, bath: usize, y: &CMat) -> CMat {
        self.from_frame(&self.dissipate_frame(bath, &self.to_frame(y)))
    }

    pub fn apply_lindbladian(&self, y: &CMat) -> CMat {
        let yf = self.to_frame(y);
        self.from_frame(&unvectorize(&(&self.generator * vectorize(&yf)), self.dim()))
    }

    /// `Re Tr(𝒟_α[y] H)` for eigenframe `y`.
    pub fn heat_frame(&self, bath: usize, y: &CMat) -> f64 {
        let d = self.dissipate_frame(bath, y);
        self.basis
            .raw_eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, e)| e * d[(k, k)].re)
            .sum()
    }

    /// `Re Tr(𝒟_α[y] H)` for lab-frame `y`.
    pub fn heat(&self, bath: usize, y: &CMat) -> f64 {
        self.heat_frame(bath, &self.to_frame(y))
    }

    pub fn lindbladian(&self) -> Superoperator {
        Superoperator::new(
            SuperRole::Lindbladian,
            self.dim(),
            self.generator.clone(),
            Some(self.basis.vectors().clone()),
        )
    }

    pub fn dissipator(&self, bath: usize) -> Superoperator {
        Superoperator::new(
            SuperRole::Dissipator(bath),
            self.dim(),
            self.dissipators[bath].clone(),
            Some(self.basis.vectors().clone()),
        )
    }

    /// Lab-frame Bohr channels of bath `bath`.
    pub fn channels(&self, bath: usize) -> Vec<BohrChannel> {
        bohr_channels(&self.basis, &self.couplings[bath])
    }
}

use nalgebra::DVector;

use super::basis::{ohmic_rate, BohrChannel};
use super::solver::{BlockSolver, UnionFind};
use crate::error::{Error, Result};
use crate::lattice::{BathSpec, CMat, C64};
use crate::numerics::KernelPolicy;

/// Column-stacking vectorisation, `vec(A)[i + N j] = A[i, j]`.
pub fn vectorize(a: &CMat) -> DVector<C64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, n: usize) -> CMat {
    CMat::from_column_slice(n, n, v.as_slice())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuperRole {
    /// Dissipator of the bath with this index.
    Dissipator(usize),
    Lindbladian,
    InverseOnTraceless,
}

/// A linear map on N×N matrices stored as an N²×N² matrix acting on
/// vectorised operators. When `frame` is set the matrix acts on `U† ρ U`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    role: SuperRole,
    n: usize,
    matrix: CMat,
    frame: Option<CMat>,
}

impl Superoperator {
    pub fn new(role: SuperRole, n: usize, matrix: CMat, frame: Option<CMat>) -> Self {
        assert_eq!(matrix.shape(), (n * n, n * n));
        Superoperator { role, n, matrix, frame }
    }

    pub fn role(&self) -> SuperRole {
        self.role
    }

    /// Hilbert-space dimension N.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn frame(&self) -> Option<&CMat> {
        self.frame.as_ref()
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        match &self.frame {
            None => unvectorize(&(&self.matrix * vectorize(rho)), self.n),
            Some(u) => {
                let r = u.adjoint() * rho * u;
                let out = unvectorize(&(&self.matrix * vectorize(&r)), self.n);
                u * out * u.adjoint()
            }
        }
    }

    /// The same map expressed on lab-frame vectorised operators.
    pub fn to_lab(&self) -> Superoperator {
        match &self.frame {
            None => self.clone(),
            Some(u) => {
                // vec(U A U†) = (Ū ⊗ U) vec(A)
                let w = u.conjugate().kronecker(u);
                Superoperator::new(self.role, self.n, &w * &self.matrix * w.adjoint(), None)
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Superoperator {
        Superoperator {
            matrix: &self.matrix * C64::new(factor, 0.0),
            ..self.clone()
        }
    }

    pub fn kernel_dimension(&self, kernel_tol: f64) -> usize {
        BlockSolver::new(&self.matrix, self.n, None, kernel_tol).kernel_dimension()
    }
}

/// Adds `c (A ρ A† - ½{A†A, ρ})` to the vectorised matrix `m`, skipping
/// structural zeros and recording couplings in `uf`.
pub(crate) fn add_jump(m: &mut CMat, c: f64, a: &CMat, uf: Option<&mut UnionFind>) {
    let n = a.nrows();
    let zero = C64::new(0.0, 0.0);
    let nz: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i, k)))
        .filter(|&(i, k)| a[(i, k)] != zero ).map(|(i, k)| (i, k, a[(i, k)]))
        .collect();
    if nz.is_empty() {
        return;
    }
    let ada = a.adjoint() * a;
    let mut links: Vec<(usize, usize)> = Vec::new();
    for &(i, k, x) in &nz {
        for &(j, l, y) in &nz {
            let (r, s) = (i + n * j, k + n * l);
            m[(r, s)] += x * y.conj() * c;
            links.push((r, s));
        }
    }
    let half = C64::new(0.5 * c, 0.0);
    for i in 0..n {
        for k in 0..n {
            let b = ada[(i, k)];
            if b == zero {
                continue;
            }
            for j in 0..n {
                // (A†A ρ)_{ij} = Σ_k B_ik ρ_kj
                m[(i + n * j, k + n * j)] -= half * b;
                links.push((i + n * j, k + n * j));
                // (ρ A†A)_{ji} = Σ_k ρ_jk B_ki, indices relabelled
                m[(j + n * k, j + n * i)] -= half * b;
                links.push((j + n * k, j + n * i));
            }
        }
    }
    if let Some(uf) = uf {
        for (r, s) in links {
            uf.union(r, s);
        }
    }
}

/// Lab-frame dissipator `𝒟_α` with jump operators `g_α √γ_α(ω) π_{αω}`.
pub fn dissipator(bath: &BathSpec, channels: &[BohrChannel], index: usize) -> Superoperator {
    let n = channels.first().map(|c| c.operator.nrows()).unwrap_or(0);
    let mut m = CMat::zeros(n * n, n * n);
    for ch in channels {
        let rate = bath.strength * bath.strength * ohmic_rate(ch.frequency, bath.temperature, bath.cutoff);
        add_jump(&mut m, rate, &ch.operator, None);
    }
    Superoperator::new(SuperRole::Dissipator(index), n, m, None)
}

/// `𝓛 = -i[H, ·] + Σ_α 𝒟_α`; the dissipators must share a frame, and `h` is
/// given in the lab frame.
pub fn lindbladian(h: &CMat, dissipators: &[Superoperator]) -> Result<Superoperator> {
    let n = h.nrows();
    let frame = dissipators.first().and_then(|d| d.frame.clone());
    for d in dissipators {
        let same = match (&frame, &d.frame) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
        if !same || d.n != n {
            return Err(Error::BasisMismatch);
        }
    }
    let hf = match &frame {
        Some(u) => u.adjoint() * h * u,
        None => h.clone(),
    };
    let id = CMat::identity(n, n);
    let mut m = (id.kronecker(&hf) - hf.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for d in dissipators {
        m += &d.matrix;
    }
    Ok(Superoperator::new(SuperRole::Lindbladian, n, m, frame))
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: CMat,
}

impl SteadyState {
    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `ρ̄ = ρ - 𝕀/N`, the traceless part.
    pub fn traceless_part(&self) -> CMat {
        let n = self.rho.nrows();
        &self.rho - CMat::identity(n, n) * C64::new(1.0 / n as f64, 0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.rho.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn to_lab(frame: Option<&CMat>, a: CMat) -> CMat {
    match frame {
        Some(u) => u * a * u.adjoint(),
        None => a,
    }
}

/// Steady state of a generator with a one-dimensional kernel.
pub fn steady_state(lindbladian: &Superoperator) -> Result<SteadyState> {
    steady_state_with(lindbladian, KernelPolicy::Strict, None, 1e-9)
}

/// Steady state under a kernel policy. `thermal` is the lab-frame candidate
/// selected by [`KernelPolicy::Thermal`] when the kernel is degenerate.
pub fn steady_state_with(
    lindbladian: &Superoperator,
    policy: KernelPolicy,
    thermal: Option<&CMat>,
    kernel_tol: f64,
) -> Result<SteadyState> {
    let n = lindbladian.n;
    let solver = BlockSolver::new(&lindbladian.matrix, n, None, kernel_tol);
    if let Some(v) = solver.stationary() {
        let rho = hermitize(&to_lab(lindbladian.frame(), unvectorize(&v, n)));
        return Ok(SteadyState { rho });
    }
    let dim = solver.kernel_dimension();
    if let (KernelPolicy::Thermal, Some(g)) = (policy, thermal) {
        let residual = lindbladian.apply(g).norm();
        if residual <= 1e-9 * solver.scale() * g.norm() {
            return Ok(SteadyState { rho: g.clone() });
        }
    }
    Err(Error::DegenerateKernel { dim })
}

/// Solves `𝓛 x = y` for traceless `y` with `Tr x = 0`.
pub fn inverse_on_traceless(lindbladian: &Superoperator, y: &CMat) -> Result<CMat> {
    check_traceless(y)?;
    let n = lindbladian.n;
    let solver = BlockSolver::new(&lindbladian.matrix, n, None, 1e-9);
    let yf = match lindbladian.frame() {
        Some(u) => u.adjoint() * y * u,
        None => y.clone(),
    };
    let x = solver.solve_strict(&vectorize(&yf))?;
    Ok(to_lab(lindbladian.frame(), unvectorize(&x, n)))
}

/// The traceless-subspace inverse as a superoperator, `x = 𝓛⁻¹ (y - Tr(y) 𝕀/N)`.
pub fn inverse_superoperator(lindbladian: &Superoperator) -> Result<Superoperator> {
    let lab = lindbladian.to_lab();
    let n = lab.n;
    let solver = BlockSolver::new(&lab.matrix, n, None, 1e-9);
    let mut m = CMat::zeros(n * n, n * n);
    for col in 0..n * n {
        let mut e = DVector::zeros(n * n);
        e[col] = C64::new(1.0, 0.0);
        let (i, j) = (col % n, col / n);
        if i == j {
            for k in 0..n {
                e[k * (n + 1)] -= C64::new(1.0 / n as f64, 0.0);
            }
        }
        let x = solver.solve_strict(&e)?;
        m.set_column(col, &x);
    }
    Ok(Superoperator::new(SuperRole::InverseOnTraceless, n, m, None))
}

pub(crate) fn check_traceless(y: &CMat) -> Result<()> {
    let tr = y.trace().norm();
    if tr > 1e-10 * y.norm().max(1.0) {
        return Err(Error::NotTraceless(tr));
    }
    Ok(())
}

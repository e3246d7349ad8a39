//! Closed-form references: the driven qubit in Bloch form, the product
//! solution of non-interacting registers, and the split of a two-qubit heat
//! current into single-qubit and correlated parts.
//!
//! All qubit quantities are written for `h = -b·σ` with `b` the effective
//! field, so `|b|` is half the level splitting whatever field convention the
//! configuration uses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    hamiltonian_with_fields, pauli, Axis, BathSpec, CMat, CouplingOperator, FieldCoupling, SystemConfig, C64,
};
use crate::lindblad::ohmic_rate;
use crate::numerics::Numerics;
use crate::response::{PointResponse, Vec2};

pub type Vec3 = [f64; 3];

fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale3(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn add3(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn norm3(a: &Vec3) -> f64 {
    dot3(a, a).sqrt()
}

/// Frame a Bloch vector is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlochFrame {
    /// Components along the `σ^x, σ^y, σ^z` axes.
    Laboratory,
    /// Third component along the field direction.
    Eigenbasis,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochState {
    pub r: Vec3,
    pub frame: BlochFrame,
}

impl BlochState {
    pub fn lab(r: Vec3) -> Self {
        BlochState {
            r,
            frame: BlochFrame::Laboratory,
        }
    }

    pub fn norm(&self) -> f64 {
        norm3(&self.r)
    }

    /// `(𝕀·c + r·σ)/2`: `c = 1` for a state, `c = 0` for a traceless part.
    pub fn to_matrix(&self, trace: f64) -> Result<CMat> {
        if self.frame != BlochFrame::Laboratory {
            return Err(Error::Unsupported("matrix form needs laboratory components".into()));
        }
        Ok(bloch_matrix(&self.r, trace))
    }
}

fn bloch_matrix(r: &Vec3, trace: f64) -> CMat {
    let mut m = pauli(Axis::I) * C64::new(0.5 * trace, 0.0);
    for (axis, c) in [Axis::X, Axis::Y, Axis::Z].into_iter().zip(r) {
        m += pauli(axis) * C64::new(0.5 * c, 0.0);
    }
    m
}

/// `r_i = Tr(ρ σ^i)` of a 2×2 matrix.
pub fn bloch_vector(rho: &CMat) -> Vec3 {
    [Axis::X, Axis::Y, Axis::Z].map(|a| (rho * pauli(a)).trace().re)
}

/// Whether rates keep the exponential cutoff of the bath spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum CutoffMode {
    /// `ω_C → ∞`: no damping factor.
    #[default]
    Infinite,
    /// Same cutoff as the engine uses for each bath.
    Matched,
}

fn rate(bath: &BathSpec, omega: f64, mode: CutoffMode) -> f64 {
    let cutoff = match mode {
        CutoffMode::Infinite => f64::INFINITY,
        CutoffMode::Matched => bath.cutoff,
    };
    ohmic_rate(omega, bath.temperature, cutoff)
}

fn axis_vector(axis: Axis) -> Result<Vec3> {
    match axis {
        Axis::X => Ok([1.0, 0.0, 0.0]),
        Axis::Y => Ok([0.0, 1.0, 0.0]),
        Axis::Z => Ok([0.0, 0.0, 1.0]),
        Axis::I => Err(Error::InvalidAxis("identity coupling has no transitions".into())),
    }
}

/// A single qubit `h = -b·σ` coupled to every bath through
/// `weight · S^axis`, with the secular Bloch rates in closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QubitModel {
    pub field: Vec3,
    /// Half the level splitting, `|b|`.
    pub half_splitting: f64,
    pub direction: Vec3,
    /// Population relaxation rate per bath.
    pub relaxation: Vec<f64>,
    /// Equilibrium polarisation `tanh(|b|/T_α)` per bath.
    pub polarisation: Vec<f64>,
    /// Decay rate of the transverse components per bath.
    pub transverse: Vec<f64>,
    /// Precession frequency `2|b|` in generator units.
    pub precession: f64,
}

impl QubitModel {
    /// `time_unit` multiplies every rate and the precession, as in the
    /// engine's generator.
    pub fn new(field: Vec3, weight: f64, baths: &[BathSpec], time_unit: f64, mode: CutoffMode) -> Result<Self> {
        let b = norm3(&field);
        if b == 0.0 {
            return Err(Error::Unsupported("the qubit Bloch rates need a nonzero field".into()));
        }
        let direction = scale3(&field, 1.0 / b);
        let mut relaxation = Vec::new();
        let mut polarisation = Vec::new();
        let mut transverse = Vec::new();
        for bath in baths {
            let axis = match &bath.coupling {
                CouplingOperator::Axis(a) => axis_vector(*a)?,
                CouplingOperator::Matrix(_) => {
                    return Err(Error::Unsupported("closed-form qubit rates need an axis coupling".into()))
                }
            };
            let g2 = bath.strength * bath.strength * time_unit;
            let na = dot3(&axis, &direction);
            // |⟨g|π|e⟩|² and the diagonal elements ±w n_a/2 of π = w σ^a/2.
            let off = 0.25 * weight * weight * (1.0 - na * na);
            let (down, up) = (rate(bath, 2.0 * b, mode), rate(bath, -2.0 * b, mode));
            let k = g2 * off * (down + up);
            let dephasing = g2 * bath.temperature * 0.5 * weight * weight * na * na;
            relaxation.push(k);
            polarisation.push((down - up) / (down + up));
            transverse.push(0.5 * k + dephasing);
        }
        Ok(QubitModel {
            field,
            half_splitting: b,
            direction,
            relaxation,
            polarisation,
            transverse,
            precession: 2.0 * b * time_unit,
        })
    }

    pub fn total_relaxation(&self) -> f64 {
        self.relaxation.iter().sum()
    }

    /// Stationary polarisation along the field, weighted by the baths'
    /// relaxation rates.
    pub fn stationary_polarisation(&self) -> Result<f64> {
        let k = self.total_relaxation();
        if k <= 0.0 {
            return Err(Error::NoCoupling);
        }
        Ok(self.relaxation.iter().zip(&self.polarisation).map(|(k, m)| k * m).sum::<f64>() / k)
    }

    fn split(&self, r: &Vec3) -> (f64, Vec3) {
        let par = dot3(r, &self.direction);
        (par, add3(r, &scale3(&self.direction, -par)))
    }

    /// Bloch vector of `𝒟_α[(r·σ)/2]` for traceless input.
    pub fn dissipate(&self, bath: usize, r: &Vec3) -> Vec3 {
        let (par, perp) = self.split(r);
        add3(
            &scale3(&self.direction, -self.relaxation[bath] * par),
            &scale3(&perp, -self.transverse[bath]),
        )
    }

    /// Bloch vector of `𝓛[(r·σ)/2]` for traceless input.
    pub fn generator(&self, r: &Vec3) -> Vec3 {
        let (par, perp) = self.split(r);
        let gamma: f64 = self.transverse.iter().sum();
        let rot = cross3(&self.direction, &perp);
        add3(
            &scale3(&self.direction, -self.total_relaxation() * par),
            &add3(&scale3(&perp, -gamma), &scale3(&rot, -self.precession)),
        )
    }

    /// Solves `𝓛[(x·σ)/2] = (s·σ)/2`.
    pub fn solve(&self, s: &Vec3) -> Result<Vec3> {
        let k = self.total_relaxation();
        let gamma: f64 = self.transverse.iter().sum();
        if k <= 0.0 || gamma <= 0.0 {
            return Err(Error::NoCoupling);
        }
        let (par, perp) = self.split(s);
        let c = self.precession;
        let den = gamma * gamma + c * c;
        let x_perp = add3(&scale3(&perp, -gamma / den), &scale3(&cross3(&self.direction, &perp), c / den));
        Ok(add3(&scale3(&self.direction, -par / k), &x_perp))
    }

    /// `Tr{𝒟_α[(r·σ)/2] h}` with `h = -b·σ`.
    pub fn heat(&self, bath: usize, r: &Vec3) -> f64 {
        -dot3(&self.field, &self.dissipate(bath, r))
    }
}

fn qubit_field(config: &SystemConfig, site: usize, x: &Vec2) -> Vec3 {
    let scale = match config.field_coupling {
        FieldCoupling::Pauli => 1.0,
        FieldCoupling::Spin => 0.5,
    };
    let w = scale * config.drive_weights[site];
    [w * x[0], 0.0, w * x[1]]
}

fn site_model(config: &SystemConfig, site: usize, x: &Vec2, mode: CutoffMode) -> Result<QubitModel> {
    QubitModel::new(
        qubit_field(config, site, x),
        config.coupling_weights[site],
        &config.baths,
        config.time_unit,
        mode,
    )
}

fn require_qubits(config: &SystemConfig, n: usize) -> Result<()> {
    if config.n_qubits != n {
        return Err(Error::InvalidConfig(format!("expected {n} qubit(s), got {}", config.n_qubits)));
    }
    Ok(())
}

fn common_temperature(config: &SystemConfig) -> Result<f64> {
    config
        .common_temperature()
        .ok_or_else(|| Error::Unsupported("the first-order qubit solution assumes one bath temperature".into()))
}

/// Frozen Bloch vector `r̄ n̂_b` in the laboratory frame (zero at zero field).
pub fn single_qubit_steady(config: &SystemConfig, x: &Vec2, mode: CutoffMode) -> Result<BlochState> {
    require_qubits(config, 1)?;
    site_steady(config, 0, x, mode)
}

fn site_steady(config: &SystemConfig, site: usize, x: &Vec2, mode: CutoffMode) -> Result<BlochState> {
    let field = qubit_field(config, site, x);
    if norm3(&field) == 0.0 {
        return Ok(BlochState::lab([0.0; 3]));
    }
    let q = site_model(config, site, x, mode)?;
    Ok(BlochState::lab(scale3(&q.direction, q.stationary_polarisation()?)))
}

/// `d r^(f)/dt` for a common temperature: `ṙ = (sech²(β|b|) β d|b|/dt) n̂ + tanh(β|b|) dn̂/dt`.
fn frozen_rate(q: &QubitModel, field_rate: &Vec3, temperature: f64) -> Vec3 {
    let b = q.half_splitting;
    let b_dot = dot3(&q.direction, field_rate);
    let m = (b / temperature).tanh();
    let m_dot = (1.0 - m * m) * b_dot / temperature;
    let n_dot = scale3(&add3(field_rate, &scale3(&q.direction, -b_dot)), 1.0 / b);
    add3(&scale3(&q.direction, m_dot), &scale3(&n_dot, m))
}

/// First-order Bloch vector of one site and the model used for it.
fn site_first_order(config: &SystemConfig, site: usize, x: &Vec2, v: &Vec2, mode: CutoffMode) -> Result<(QubitModel, Vec3)> {
    let t = common_temperature(config)?;
    let q = site_model(config, site, x, mode)?;
    let field_rate = qubit_field(config, site, v);
    let r1 = q.solve(&frozen_rate(&q, &field_rate, t))?;
    Ok((q, r1))
}

/// `r^(1)` solving `𝓛[ρ^(1)] = dρ^(f)/dt`, in the laboratory frame.
pub fn single_qubit_rho1(config: &SystemConfig, x: &Vec2, v: &Vec2, mode: CutoffMode) -> Result<BlochState> {
    require_qubits(config, 1)?;
    Ok(BlochState::lab(site_first_order(config, 0, x, v, mode)?.1))
}

/// `J^(1)_α = (k_α / Σ_η k_η) T dS^(f)/dt`, with the binary-entropy rate
/// `T dS^(f)/dt = -|b| d tanh(β|b|)/dt`.
pub fn single_qubit_heat1(config: &SystemConfig, x: &Vec2, v: &Vec2, mode: CutoffMode) -> Result<Vec<f64>> {
    require_qubits(config, 1)?;
    let t = common_temperature(config)?;
    let q = site_model(config, 0, x, mode)?;
    let k = q.total_relaxation();
    if k <= 0.0 {
        return Err(Error::NoCoupling);
    }
    let entropy_rate = single_qubit_entropy_rate(q.half_splitting, dot3(&q.direction, &qubit_field(config, 0, v)), t);
    Ok(q.relaxation.iter().map(|ka| ka / k * entropy_rate).collect())
}

/// `T dS/dt` of the thermal qubit with half-splitting `b` changing at `b_dot`.
pub fn single_qubit_entropy_rate(b: f64, b_dot: f64, temperature: f64) -> f64 {
    let m = (b / temperature).tanh();
    -b * (1.0 - m * m) * b_dot / temperature
}

fn kron_all(factors: &[CMat]) -> CMat {
    factors.iter().fold(CMat::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// First-order solution of a register of independent qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSolution {
    pub rho_f: CMat,
    pub rho1: CMat,
    /// `J^(1)_{q_j,α}`, indexed `[site][bath]`.
    pub site_currents: Vec<Vec<f64>>,
    /// `Σ_j J^(1)_{q_j,α}`.
    pub currents: Vec<f64>,
}

/// `ρ^(f) = ⊗_j ρ^(f)_j` and `ρ^(1) = Σ_j ρ^(f)_1 ⊗ … ⊗ ρ^(1)_j ⊗ … ⊗ ρ^(f)_N`
/// with every factor from the closed-form qubit solution. Only valid
/// without exchange.
pub fn product_state_solver(config: &SystemConfig, x: &Vec2, v: &Vec2, mode: CutoffMode) -> Result<ProductSolution> {
    if config.exchange != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "product solution needs J = 0, got J = {}",
            config.exchange
        )));
    }
    let n = config.n_qubits;
    let frozen: Vec<CMat> = (0..n)
        .map(|j| Ok(bloch_matrix(&site_steady(config, j, x, mode)?.r, 1.0)))
        .collect::<Result<_>>()?;
    let mut rho1 = CMat::zeros(config.dim(), config.dim());
    let mut site_currents = Vec::with_capacity(n);
    for j in 0..n {
        let (q, r1) = site_first_order(config, j, x, v, mode)?;
        let mut factors = frozen.clone();
        factors[j] = bloch_matrix(&r1, 0.0);
        rho1 += kron_all(&factors);
        site_currents.push((0..config.baths.len()).map(|a| q.heat(a, &r1)).collect::<Vec<f64>>());
    }
    let currents = (0..config.baths.len())
        .map(|a| site_currents.iter().map(|c| c[a]).sum())
        .collect();
    Ok(ProductSolution {
        rho_f: kron_all(&frozen),
        rho1,
        site_currents,
        currents,
    })
}

/// `(Tr_2 ρ, Tr_1 ρ)` of a two-qubit operator.
pub fn partial_traces(rho: &CMat) -> (CMat, CMat) {
    let mut a = CMat::zeros(2, 2);
    let mut b = CMat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                a[(i, j)] += rho[(2 * i + k, 2 * j + k)];
                b[(i, j)] += rho[(2 * k + i, 2 * k + j)];
            }
        }
    }
    (a, b)
}

/// `ΔR_ij = Tr(ρ σ^i ⊗ σ^j) - r_{q1,i} r_{q2,j}`.
pub fn correlation_matrix(rho: &CMat) -> [[f64; 3]; 3] {
    let (a, b) = partial_traces(rho);
    let (ra, rb) = (bloch_vector(&a), bloch_vector(&b));
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut out = [[0.0; 3]; 3];
    for (i, ai) in axes.iter().enumerate() {
        for (j, aj) in axes.iter().enumerate() {
            let op = pauli(*ai).kronecker(&pauli(*aj));
            out[i][j] = (rho * op).trace().re - ra[i] * rb[j];
        }
    }
    out
}

/// Two-qubit first-order heat current split into the single-qubit currents
/// and the correlated remainder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSplit {
    /// `J^(1)_{q_j,α}`, indexed `[site][bath]`.
    pub single: [Vec<f64>; 2],
    /// `J^(1)_{12,α}`: the exchange terms plus the correlated dissipation.
    pub correlated: Vec<f64>,
    /// The engine's `J^(1)_α`.
    pub total: Vec<f64>,
    /// `ΔR^(f)_ij` of the frozen state.
    pub delta_r: [[f64; 3]; 3],
    /// Largest `|J_α - J_{q1,α} - J_{q2,α} - J_{12,α}|`.
    pub residual: f64,
}

/// Each qubit's reduced frozen state is driven through its own single-qubit
/// generator (field `η_j B`, same baths): `𝓛_{q_j}[ρ^(1)_{q_j}] = dρ^(f)_{q_j}/dt`.
/// The product part of the dissipated state is
/// `𝒟_{q1,α}[ρ^(1)_{q1}] ⊗ ρ^(f)_{q2} + ρ^(f)_{q1} ⊗ 𝒟_{q2,α}[ρ^(1)_{q2}]`; the rest of
/// the engine's `𝒟_α[ρ^(1)]` is the correlated dissipation `𝒟_α[ρ^(1)_{12}]`.
pub fn correlation_current_split(config: &SystemConfig, x: &Vec2, v: &Vec2, numerics: &Numerics) -> Result<CorrelationSplit> {
    require_qubits(config, 2)?;
    if let Some(bad) = config.baths.iter().find(|b| matches!(b.coupling, CouplingOperator::Matrix(_))) {
        return Err(Error::Unsupported(format!("bath {} has no single-qubit form", bad.label)));
    }
    let nb = config.baths.len();
    let mut point = PointResponse::new(config, x, numerics)?;
    let rho1 = point.rho_order1(v)?;
    let d0 = point.frozen_derivative(0)?;
    let d1 = point.frozen_derivative(1)?;
    let rho_dot = d0 * C64::new(v[0], 0.0) + d1 * C64::new(v[1], 0.0);
    let frozen = point.center()?;
    let rho_f = frozen.steady().rho.clone();
    let h = frozen.hamiltonian().clone();
    let dissipated: Vec<CMat> = (0..nb).map(|a| frozen.apply_dissipator(a, &rho1)).collect();
    let total: Vec<f64> = (0..nb).map(|a| frozen.heat(a, &rho1)).collect();

    let local_h: Vec<CMat> = (0..2)
        .map(|j| {
            let mut fields = vec![[0.0; 3]; 2];
            fields[j] = [config.drive_weights[j] * x[0], 0.0, config.drive_weights[j] * x[1]];
            hamiltonian_with_fields(&SystemConfig { exchange: 0.0, ..config.clone() }, &fields)
        })
        .collect::<Result<_>>()?;
    let h_int = &h - &local_h[0] - &local_h[1];

    let (rf1, rf2) = partial_traces(&rho_f);
    let (rd1, rd2) = partial_traces(&rho_dot);
    let reduced = [(rf1, rd1), (rf2, rd2)];
    let mut single = [vec![0.0; nb], vec![0.0; nb]];
    let mut product_part: Vec<CMat> = vec![CMat::zeros(4, 4); nb];
    for (j, (_, rd)) in reduced.iter().enumerate() {
        let q = site_model(config, j, x, CutoffMode::Matched)?;
        let r1 = q.solve(&bloch_vector(rd))?;
        for a in 0..nb {
            single[j][a] = q.heat(a, &r1);
            let d = bloch_matrix(&q.dissipate(a, &r1), 0.0);
            product_part[a] += if j == 0 { d.kronecker(&reduced[1].0) } else { reduced[0].0.kronecker(&d) };
        }
    }
    let tr = |a: &CMat, b: &CMat| (a * b).trace().re;
    let correlated: Vec<f64> = (0..nb)
        .map(|a| tr(&product_part[a], &h_int) + tr(&(&dissipated[a] - &product_part[a]), &h))
        .collect();
    let residual = (0..nb)
        .map(|a| (total[a] - single[0][a] - single[1][a] - correlated[a]).abs())
        .fold(0.0, f64::max);
    Ok(CorrelationSplit {
        single,
        correlated,
        total,
        delta_r: correlation_matrix(&rho_f),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{embed, standard_baths};
    use crate::lindblad::FrozenSolution;
    use proptest::prelude::*;

    fn qubit(tu: f64) -> SystemConfig {
        SystemConfig::single_qubit(standard_baths(0.002, 1.0, 120.0)).with_time_unit(tu)
    }

    #[test]
    fn steady_limits() {
        let cfg = qubit(1.0);
        assert_eq!(single_qubit_steady(&cfg, &[0.0, 0.0], CutoffMode::Infinite).unwrap().norm(), 0.0);
        let big = single_qubit_steady(&cfg, &[30.0, 40.0], CutoffMode::Infinite).unwrap();
        assert!((big.norm() - 1.0).abs() < 1e-15);
        assert!((big.r[0] - 0.6).abs() < 1e-15 && big.r[1] == 0.0);
    }

    #[test]
    fn engine_matches_frozen_bloch_vector() {
        let cfg = qubit(2000.0);
        let num = Numerics::default();
        for bx in [0.1, 0.7, 1.3, 2.0] {
            for bz in [0.05, 0.5, 1.9] {
                let f = FrozenSolution::new(&cfg, &[bx, bz], &num).unwrap();
                let engine = bloch_vector(&f.steady().rho);
                let exact = single_qubit_steady(&cfg, &[bx, bz], CutoffMode::Matched).unwrap().r;
                assert!(norm3(&add3(&engine, &scale3(&exact, -1.0))) < 1e-10);
            }
        }
    }

    #[test]
    fn solve_inverts_generator() {
        let q = QubitModel::new([0.3, 0.0, -0.8], 1.0, &standard_baths(0.1, 0.7, 5.0), 3.0, CutoffMode::Matched).unwrap();
        let s = [0.2, -0.4, 0.9];
        let back = q.generator(&q.solve(&s).unwrap());
        assert!(norm3(&add3(&back, &scale3(&s, -1.0))) < 1e-13);
        let summed = (0..2).fold([0.0; 3], |acc, a| add3(&acc, &q.dissipate(a, &s)));
        let precession = scale3(&cross3(&q.direction, &add3(&s, &scale3(&q.direction, -dot3(&s, &q.direction)))), -q.precession);
        assert!(norm3(&add3(&q.generator(&s), &scale3(&add3(&summed, &precession), -1.0))) < 1e-13);
    }

    #[test]
    fn engine_rho1_matches_bloch_solution() {
        let cfg = qubit(2000.0);
        let num = Numerics::default();
        let (x, v) = ([0.8, 1.3], [0.4, -0.9]);
        let mut p = PointResponse::new(&cfg, &x, &num).unwrap();
        let engine = bloch_vector(&p.rho_order1(&v).unwrap());
        let exact = single_qubit_rho1(&cfg, &x, &v, CutoffMode::Matched).unwrap().r;
        let diff = norm3(&add3(&engine, &scale3(&exact, -1.0)));
        assert!(diff < 1e-8 * norm3(&exact), "{engine:?} vs {exact:?}");
    }

    #[test]
    fn single_bath_current_is_the_entropy_rate() {
        let cfg = SystemConfig::single_qubit(vec![BathSpec::new("R", 0.01, 1.0, 50.0, Axis::Z)]);
        let (x, v) = ([0.6, 0.2], [0.1, 0.5]);
        let j = single_qubit_heat1(&cfg, &x, &v, CutoffMode::Infinite).unwrap();
        let b = x[0].hypot(x[1]);
        let b_dot = (x[0] * v[0] + x[1] * v[1]) / b;
        assert!((j[0] - single_qubit_entropy_rate(b, b_dot, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn radial_growth_releases_heat() {
        let cfg = qubit(1.0);
        let j = single_qubit_heat1(&cfg, &[0.5, 0.5], &[1.0, 1.0], CutoffMode::Infinite).unwrap();
        assert!(j.iter().sum::<f64>() < 0.0);
        let j = single_qubit_heat1(&cfg, &[0.5, 0.5], &[-1.0, -1.0], CutoffMode::Infinite).unwrap();
        assert!(j.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn no_coupling_is_an_error() {
        let cfg = SystemConfig::single_qubit(vec![BathSpec::new("R", 0.0, 1.0, 50.0, Axis::Z)]);
        assert!(matches!(
            single_qubit_heat1(&cfg, &[0.5, 0.5], &[1.0, 0.0], CutoffMode::Infinite),
            Err(Error::NoCoupling)
        ));
    }

    #[test]
    fn product_solution_matches_engine() {
        let cfg = SystemConfig::two_qubit(0.0, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0)).with_time_unit(2000.0);
        let num = Numerics::default();
        let (x, v) = ([1.1, 0.4], [-0.3, 0.8]);
        let prod = product_state_solver(&cfg, &x, &v, CutoffMode::Matched).unwrap();
        let mut p = PointResponse::new(&cfg, &x, &num).unwrap();
        let rho1 = p.rho_order1(&v).unwrap();
        let f = p.center().unwrap().clone();
        assert!((&f.steady().rho - &prod.rho_f).norm() < 1e-10);
        assert!((&rho1 - &prod.rho1).norm() < 1e-8 * prod.rho1.norm());
        for a in 0..2 {
            let j = f.heat(a, &rho1);
            assert!((j - prod.currents[a]).abs() < 1e-8 * j.abs());
        }
        assert!(correlation_matrix(&f.steady().rho).iter().flatten().all(|d| d.abs() < 1e-10));
    }

    #[test]
    fn product_solver_rejects_exchange() {
        let cfg = SystemConfig::two_qubit(1.0, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0));
        assert!(product_state_solver(&cfg, &[1.0, 1.0], &[1.0, 0.0], CutoffMode::Matched).is_err());
    }

    #[test]
    fn partial_traces_of_products() {
        let a = bloch_matrix(&[0.1, 0.2, 0.3], 1.0);
        let b = bloch_matrix(&[-0.4, 0.0, 0.5], 1.0);
        let (ta, tb) = partial_traces(&a.kronecker(&b));
        assert!((ta - &a).norm() < 1e-15 && (tb - &b).norm() < 1e-15);
        // Site 0 is the leftmost Kronecker factor, as in `embed`.
        let z0 = embed(&pauli(Axis::Z), 0, 2).unwrap();
        assert!((z0 - pauli(Axis::Z).kronecker(&pauli(Axis::I))).norm() == 0.0);
    }

    #[test]
    fn uncorrelated_split_without_exchange() {
        let cfg = SystemConfig::two_qubit(0.0, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0)).with_time_unit(2000.0);
        let s = correlation_current_split(&cfg, &[0.9, 0.6], &[0.5, -0.2], &Numerics::default()).unwrap();
        for a in 0..2 {
            assert!(s.correlated[a].abs() < 1e-8 * s.total[a].abs());
        }
        assert!(s.delta_r.iter().flatten().all(|d| d.abs() < 1e-10));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn split_sums_to_engine_current(bx in 0.1f64..2.0, bz in 0.1f64..2.0, vx in -1.0f64..1.0, vz in -1.0f64..1.0) {
            let cfg = SystemConfig::two_qubit(2.0, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0)).with_time_unit(2000.0);
            let s = correlation_current_split(&cfg, &[bx, bz], &[vx, vz], &Numerics::default()).unwrap();
            let scale = s.total.iter().fold(1e-12f64, |m, j| m.max(j.abs()));
            prop_assert!(s.residual < 1e-9 * scale);
        }
    }
}

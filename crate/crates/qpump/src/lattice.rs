//! Spin operators, site embeddings and the driven qubit Hamiltonian.
//!
//! The control point is `X = (B_x, B_z)`. Qubit `j` sees the field scaled by
//! its drive weight (1 for the first qubit, η for the others) and couples to
//! every bath through its coupling weight (1, then b).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

/// Number of control parameters, `(B_x, B_z)`.
pub const CONTROL_DIM: usize = 2;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    #[serde(rename = "0")]
    I,
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0" | "i" | "id" => Ok(Axis::I),
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidAxis(other.to_string())),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::I => "0",
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// Pauli matrix σ^axis (σ^0 is the identity).
pub fn pauli(axis: Axis) -> CMat {
    let m = match axis {
        Axis::I => [ONE, ZERO, ZERO, ONE],
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Spin-1/2 operator S^axis = σ^axis / 2.
pub fn spin(axis: Axis) -> CMat {
    pauli(axis) * C64::new(0.5, 0.0)
}

/// Places a single-qubit operator on `site` of an `n_qubits` register, with
/// site 0 as the leftmost Kronecker factor.
pub fn embed(op: &CMat, site: usize, n_qubits: usize) -> Result<CMat> {
    if site >= n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    if op.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: op.nrows(),
        });
    }
    let id = CMat::identity(2, 2);
    let mut out = CMat::identity(1, 1);
    for k in 0..n_qubits {
        out = out.kronecker(if k == site { op } else { &id });
    }
    Ok(out)
}

/// How the magnetic field enters the Zeeman term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldCoupling {
    /// `-B·σ` per qubit: level splitting 2|B|.
    #[default]
    Pauli,
    /// `-B·S` per qubit with `S = σ/2`: level splitting |B|.
    Spin,
}

impl FieldCoupling {
    fn factor(self) -> f64 {
        match self {
            FieldCoupling::Pauli => 1.0,
            FieldCoupling::Spin => 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingOperator {
    /// `Σ_j b_j S_j^axis` with the system's coupling weights.
    Axis(Axis),
    /// Explicit Hermitian operator on the full register.
    Matrix(CMat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathSpec {
    pub label: String,
    /// Coupling strength g_α; rates scale as g_α².
    pub strength: f64,
    pub temperature: f64,
    /// Ohmic cutoff ω_C (may be infinite).
    pub cutoff: f64,
    pub coupling: CouplingOperator,
}

impl BathSpec {
    pub fn new(label: &str, strength: f64, temperature: f64, cutoff: f64, axis: Axis) -> Self {
        BathSpec {
            label: label.to_string(),
            strength,
            temperature,
            cutoff,
            coupling: CouplingOperator::Axis(axis),
        }
    }
}

/// The two-bath setup used throughout: `L` couples through S^x, `R` through S^z.
pub fn standard_baths(strength: f64, temperature: f64, cutoff: f64) -> Vec<BathSpec> {
    vec![
        BathSpec::new("L", strength, temperature, cutoff, Axis::X),
        BathSpec::new("R", strength, temperature, cutoff, Axis::Z),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub n_qubits: usize,
    /// Nearest-neighbour exchange J (Heisenberg, `J S_j·S_{j+1}`).
    pub exchange: f64,
    /// Field scale per qubit; `[1, η, η, ...]` for the standard chain.
    pub drive_weights: Vec<f64>,
    /// Bath coupling scale per qubit; `[1, b, b, ...]` for the standard chain.
    pub coupling_weights: Vec<f64>,
    pub baths: Vec<BathSpec>,
    pub field_coupling: FieldCoupling,
    /// Length of one time unit in ħ/k_BT. Multiplies the whole generator.
    pub time_unit: f64,
}

impl SystemConfig {
    pub fn chain(n_qubits: usize, exchange: f64, eta: f64, b: f64, baths: Vec<BathSpec>) -> Self {
        let weight = |k: usize, w: f64| if k == 0 { 1.0 } else { w };
        SystemConfig {
            n_qubits,
            exchange,
            drive_weights: (0..n_qubits).map(|k| weight(k, eta)).collect(),
            coupling_weights: (0..n_qubits).map(|k| weight(k, b)).collect(),
            baths,
            field_coupling: FieldCoupling::Pauli,
            time_unit: 1.0,
        }
    }

    pub fn two_qubit(exchange: f64, eta: f64, b: f64, baths: Vec<BathSpec>) -> Self {
        Self::chain(2, exchange, eta, b, baths)
    }

    pub fn single_qubit(baths: Vec<BathSpec>) -> Self {
        Self::chain(1, 0.0, 1.0, 1.0, baths)
    }

    pub fn with_time_unit(mut self, time_unit: f64) -> Self {
        self.time_unit = time_unit;
        self
    }

    pub fn with_field_coupling(mut self, coupling: FieldCoupling) -> Self {
        self.field_coupling = coupling;
        self
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Drive asymmetry η (weight of the second qubit).
    pub fn eta(&self) -> f64 {
        self.drive_weights.get(1).copied().unwrap_or(1.0)
    }

    /// Coupling asymmetry b (weight of the second qubit).
    pub fn b(&self) -> f64 {
        self.coupling_weights.get(1).copied().unwrap_or(1.0)
    }

    /// The shared bath temperature, if all baths agree.
    pub fn common_temperature(&self) -> Option<f64> {
        let t0 = self.baths.first()?.temperature;
        self.baths
            .iter()
            .all(|b| (b.temperature - t0).abs() <= 1e-14 * t0.abs())
            .then_some(t0)
    }

    pub fn bath_index(&self, label: &str) -> Option<usize> {
        self.baths.iter().position(|b| b.label == label)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_qubits == 0 || self.n_qubits > 6 {
            return bad(format!("n_qubits = {} (supported range 1..=6)", self.n_qubits));
        }
        if self.drive_weights.len() != self.n_qubits || self.coupling_weights.len() != self.n_qubits {
            return bad("per-qubit weight lists must have n_qubits entries".into());
        }
        if !self.exchange.is_finite()
            || self.drive_weights.iter().chain(&self.coupling_weights).any(|w| !w.is_finite())
        {
            return bad("exchange and weights must be finite".into());
        }
        if !(self.time_unit > 0.0 && self.time_unit.is_finite()) {
            return bad(format!("time_unit = {} must be positive", self.time_unit));
        }
        if self.baths.is_empty() {
            return bad("at least one bath is required".into());
        }
        let dim = self.dim();
        for (k, bath) in self.baths.iter().enumerate() {
            if self.baths[..k].iter().any(|b| b.label == bath.label) {
                return bad(format!("duplicate bath label `{}`", bath.label));
            }
            if !(bath.strength > 0.0 && bath.strength.is_finite()) {
                return bad(format!("bath `{}`: strength must be positive", bath.label));
            }
            if !(bath.temperature > 0.0 && bath.temperature.is_finite()) {
                return bad(format!("bath `{}`: temperature must be positive", bath.label));
            }
            if !(bath.cutoff > 0.0) || bath.cutoff.is_nan() {
                return bad(format!("bath `{}`: cutoff must be positive", bath.label));
            }
            match &bath.coupling {
                CouplingOperator::Axis(Axis::I) => {
                    return bad(format!("bath `{}`: identity coupling does not relax", bath.label))
                }
                CouplingOperator::Axis(_) => {}
                CouplingOperator::Matrix(m) => {
                    if m.shape() != (dim, dim) {
                        return bad(format!("bath `{}`: coupling operator must be {dim}x{dim}", bath.label));
                    }
                    let dev = hermiticity_deviation(m);
                    if dev > 1e-12 * m.norm().max(1.0) {
                        return Err(Error::NotHermitian(dev));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn hermiticity_deviation(m: &CMat) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn site_sum(config: &SystemConfig, axis: Axis, weights: &[f64], scale: f64) -> CMat {
    let n = config.n_qubits;
    let s = pauli(axis) * C64::new(scale, 0.0);
    let mut out = CMat::zeros(config.dim(), config.dim());
    for (site, w) in weights.iter().enumerate() {
        if *w != 0.0 {
            out += embed(&s, site, n).expect("site in range") * C64::new(*w, 0.0);
        }
    }
    out
}

/// `F_axis` such that the Zeeman term is `-Σ_axis B_axis F_axis`.
pub fn field_operator(config: &SystemConfig, axis: Axis) -> CMat {
    site_sum(config, axis, &config.drive_weights, config.field_coupling.factor())
}

/// `J Σ_j S_j·S_{j+1}` on the open chain.
pub fn exchange_term(config: &SystemConfig) -> CMat {
    let n = config.n_qubits;
    let mut out = CMat::zeros(config.dim(), config.dim());
    if config.exchange == 0.0 {
        return out;
    }
    for site in 0..n.saturating_sub(1) {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let a = embed(&spin(axis), site, n).expect("site in range");
            let b = embed(&spin(axis), site + 1, n).expect("site in range");
            out += a * b;
        }
    }
    out * C64::new(config.exchange, 0.0)
}

/// The driven Hamiltonian at `X = (B_x, B_z)`.
pub fn hamiltonian(config: &SystemConfig, x: &[f64]) -> Result<CMat> {
    if x.len() != CONTROL_DIM {
        return Err(Error::DimensionMismatch {
            expected: CONTROL_DIM,
            got: x.len(),
        });
    }
    let fields: Vec<[f64; 3]> = config
        .drive_weights
        .iter()
        .map(|w| [w * x[0], 0.0, w * x[1]])
        .collect();
    hamiltonian_with_fields(config, &fields)
}

/// Hamiltonian with an independent field vector `(B_x, B_y, B_z)` per qubit.
/// The drive weights are not applied here.
pub fn hamiltonian_with_fields(config: &SystemConfig, fields: &[[f64; 3]]) -> Result<CMat> {
    if fields.len() != config.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: config.n_qubits,
            got: fields.len(),
        });
    }
    let n = config.n_qubits;
    let scale = config.field_coupling.factor();
    let mut h = exchange_term(config);
    for (site, b) in fields.iter().enumerate() {
        for (axis, comp) in [Axis::X, Axis::Y, Axis::Z].into_iter().zip(b) {
            if *comp != 0.0 {
                h -= embed(&pauli(axis), site, n)? * C64::new(scale * comp, 0.0);
            }
        }
    }
    Ok(h)
}

/// Single-qubit Hamiltonians `h_j` of the decoupled register (J = 0 terms).
pub fn site_hamiltonians(config: &SystemConfig, x: &[f64]) -> Result<Vec<CMat>> {
    if x.len() != CONTROL_DIM {
        return Err(Error::DimensionMismatch {
            expected: CONTROL_DIM,
            got: x.len(),
        });
    }
    let scale = config.field_coupling.factor();
    Ok(config
        .drive_weights
        .iter()
        .map(|w| {
            (pauli(Axis::X) * C64::new(w * x[0], 0.0) + pauli(Axis::Z) * C64::new(w * x[1], 0.0))
                * C64::new(-scale, 0.0)
        })
        .collect())
}

/// `∂H/∂X_j` for `X = (B_x, B_z)`; independent of X.
pub fn control_gradient(config: &SystemConfig) -> Vec<CMat> {
    vec![
        -field_operator(config, Axis::X),
        -field_operator(config, Axis::Z),
    ]
}

/// π_α for every bath, in bath order.
pub fn coupling_operators(config: &SystemConfig) -> Vec<CMat> {
    config
        .baths
        .iter()
        .map(|bath| match &bath.coupling {
            CouplingOperator::Axis(axis) => site_sum(config, *axis, &config.coupling_weights, 0.5),
            CouplingOperator::Matrix(m) => m.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &CMat) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of a Hermitian matrix through its real 2N×2N embedding,
    /// which doubles every eigenvalue.
    fn realified_eigenvalues(h: &CMat) -> Vec<f64> {
        let n = h.nrows();
        let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = h[(i, j)];
                r[(i, j)] = z.re;
                r[(i + n, j + n)] = z.re;
                r[(i, j + n)] = -z.im;
                r[(i + n, j)] = z.im;
            }
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(r).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev.into_iter().step_by(2).collect()
    }

    fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    fn baths() -> Vec<BathSpec> {
        standard_baths(0.1, 1.0, 120.0)
    }

    #[test]
    fn pauli_z_is_diagonal() {
        let z = pauli(Axis::Z);
        assert_eq!(z, DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]));
    }

    #[test]
    fn pauli_product_rule() {
        let xy = pauli(Axis::X) * pauli(Axis::Y);
        assert!(max_abs(&(xy - pauli(Axis::Z) * I)) == 0.0);
    }

    #[test]
    fn paulis_are_traceless_and_hermitian() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let p = pauli(axis);
            assert_eq!(p.trace(), ZERO);
            assert_eq!(hermiticity_deviation(&p), 0.0);
        }
        assert_eq!(pauli(Axis::I), CMat::identity(2, 2));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("X".parse::<Axis>().unwrap(), Axis::X);
        assert_eq!("0".parse::<Axis>().unwrap(), Axis::I);
        assert!(matches!("w".parse::<Axis>(), Err(Error::InvalidAxis(_))));
    }

    #[test]
    fn embed_single_site_is_identity_map() {
        assert_eq!(embed(&pauli(Axis::Z), 0, 1).unwrap(), pauli(Axis::Z));
    }

    #[test]
    fn embed_second_site() {
        let e = embed(&pauli(Axis::X), 1, 2).unwrap();
        assert_eq!(e, pauli(Axis::I).kronecker(&pauli(Axis::X)));
    }

    #[test]
    fn embed_disjoint_sites_commute() {
        let a = embed(&pauli(Axis::Z), 0, 2).unwrap();
        let b = embed(&pauli(Axis::X), 1, 2).unwrap();
        assert_eq!(max_abs(&(&a * &b - &b * &a)), 0.0);
    }

    #[test]
    fn embed_rejects_bad_site() {
        assert!(matches!(
            embed(&pauli(Axis::Z), 2, 2),
            Err(Error::SiteOutOfRange { site: 2, n_qubits: 2 })
        ));
    }

    #[test]
    fn decoupled_z_field_spin_convention() {
        let cfg = SystemConfig::two_qubit(0.0, 1.0, 1.0, baths()).with_field_coupling(FieldCoupling::Spin);
        let bz = 0.7;
        let ev = hermitian_eigenvalues(&hamiltonian(&cfg, &[0.0, bz]).unwrap());
        let want = [-bz, 0.0, 0.0, bz];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn decoupled_z_field_pauli_convention_doubles_splitting() {
        let cfg = SystemConfig::two_qubit(0.0, 1.0, 1.0, baths());
        let bz = 0.7;
        let ev = hermitian_eigenvalues(&hamiltonian(&cfg, &[0.0, bz]).unwrap());
        let want = [-2.0 * bz, 0.0, 0.0, 2.0 * bz];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn interacting_hamiltonian_matches_explicit_assembly() {
        let (j, eta) = (2.0, 1.2);
        let (bx, bz) = (1.0, 0.5);
        for coupling in [FieldCoupling::Pauli, FieldCoupling::Spin] {
            let cfg = SystemConfig::two_qubit(j, eta, 2.0, baths()).with_field_coupling(coupling);
            let h = hamiltonian(&cfg, &[bx, bz]).unwrap();
            // Explicit assembly from literal Kronecker products.
            let f = if coupling == FieldCoupling::Pauli { 1.0 } else { 0.5 };
            let id = pauli(Axis::I);
            let (sx, sy, sz) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
            let mut want = (sx.kronecker(&id) + id.kronecker(&sx) * c(eta)) * c(-f * bx)
                + (sz.kronecker(&id) + id.kronecker(&sz) * c(eta)) * c(-f * bz);
            want += (sx.kronecker(&sx) + sy.kronecker(&sy) + sz.kronecker(&sz)) * c(j / 4.0);
            assert!(max_abs(&(&h - &want)) < 1e-15);
            let ev = hermitian_eigenvalues(&h);
            let oracle = realified_eigenvalues(&want);
            for (a, b) in ev.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "{ev:?} vs {oracle:?}");
            }
        }
    }

    #[test]
    fn heisenberg_dimer_at_zero_field() {
        let j = 1.3;
        let cfg = SystemConfig::two_qubit(j, 1.2, 2.0, baths());
        let ev = hermitian_eigenvalues(&hamiltonian(&cfg, &[0.0, 0.0]).unwrap());
        assert!((ev[0] + 0.75 * j).abs() < 1e-14);
        for e in &ev[1..] {
            assert!((e - 0.25 * j).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_operator_limits() {
        let cfg = SystemConfig::two_qubit(0.0, 1.0, 2.0, baths());
        let pis = coupling_operators(&cfg);
        // <↑↑|π_R|↑↑> = (1 + b)/2
        assert!((pis[1][(0, 0)] - c(1.5)).norm() < 1e-15);

        let cfg0 = SystemConfig::two_qubit(0.0, 1.0, 0.0, baths());
        let pis0 = coupling_operators(&cfg0);
        let want = embed(&spin(Axis::X), 0, 2).unwrap();
        assert_eq!(pis0[0], want);
    }

    #[test]
    fn symmetric_coupling_commutes_with_total_spin() {
        let cfg = SystemConfig::two_qubit(1.0, 1.0, 1.0, baths());
        let pis = coupling_operators(&cfg);
        let total_x = embed(&spin(Axis::X), 0, 2).unwrap() + embed(&spin(Axis::X), 1, 2).unwrap();
        assert!(max_abs(&(&pis[0] * &total_x - &total_x * &pis[0])) < 1e-15);
    }

    #[test]
    fn hamiltonian_rejects_wrong_dimension() {
        let cfg = SystemConfig::two_qubit(0.0, 1.0, 1.0, baths());
        assert!(matches!(
            hamiltonian(&cfg, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn validate_catches_bad_baths() {
        let mut cfg = SystemConfig::two_qubit(0.0, 1.0, 1.0, baths());
        assert!(cfg.validate().is_ok());
        cfg.baths[0].temperature = -1.0;
        assert!(cfg.validate().is_err());
        cfg.baths.clear();
        assert!(cfg.validate().is_err());
    }

    proptest! {
        #[test]
        fn hamiltonian_is_hermitian(j in -3.0..3.0f64, eta in 0.5..2.0f64,
                                    bx in -5.0..5.0f64, bz in -5.0..5.0f64) {
            let cfg = SystemConfig::two_qubit(j, eta, 2.0, baths());
            let h = hamiltonian(&cfg, &[bx, bz]).unwrap();
            prop_assert!(hermiticity_deviation(&h) < 1e-12);
        }

        #[test]
        fn decoupled_hamiltonian_is_site_sum(eta in 0.5..2.0f64, bx in -5.0..5.0f64, bz in -5.0..5.0f64) {
            let cfg = SystemConfig::two_qubit(0.0, eta, 2.0, baths());
            let h = hamiltonian(&cfg, &[bx, bz]).unwrap();
            let hs = site_hamiltonians(&cfg, &[bx, bz]).unwrap();
            let sum = embed(&hs[0], 0, 2).unwrap() + embed(&hs[1], 1, 2).unwrap();
            prop_assert!(max_abs(&(h - sum)) < 1e-14);
        }

        #[test]
        fn symmetric_dimer_conserves_spin_along_field(j in -3.0..3.0f64, b in -4.0..4.0f64, along_x in any::<bool>()) {
            let cfg = SystemConfig::two_qubit(j, 1.0, 1.0, baths());
            let (x, axis) = if along_x { ([b, 0.0], Axis::X) } else { ([0.0, b], Axis::Z) };
            let h = hamiltonian(&cfg, &x).unwrap();
            let total = embed(&spin(axis), 0, 2).unwrap() + embed(&spin(axis), 1, 2).unwrap();
            prop_assert!(max_abs(&(&h * &total - &total * &h)) < 1e-13);
        }
    }
}

//! Instantaneous power, heat currents and entropies along a protocol, with
//! the first-law and entropy-balance residuals order by order.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycle::Protocol;
use crate::error::Result;
use crate::lattice::{CMat, SystemConfig};
use crate::numerics::Numerics;
use crate::response::{ExpansionState, PointResponse, Vec2};

fn tr_re(a: &CMat, b: &CMat) -> f64 {
    (a * b).trace().re
}

/// Temperature used by the entropy balances: the common bath temperature,
/// or the mean temperature when the baths differ (the balances then only
/// hold to the order of the temperature difference).
pub fn reference_temperature(config: &SystemConfig) -> f64 {
    config
        .common_temperature()
        .unwrap_or_else(|| config.baths.iter().map(|b| b.temperature).sum::<f64>() / config.baths.len() as f64)
}

/// `(P^(1), P^(2)) = (Tr{ρ^(f) Ḣ}, Tr{ρ^(1) Ḣ})`.
pub fn power_terms(state: &ExpansionState) -> (f64, f64) {
    let hdot = state.hamiltonian_dot();
    (tr_re(&state.rho_f, &hdot), tr_re(&state.rho1, &hdot))
}

/// Per-bath heat currents `J^(n)_α = Tr{𝒟_α[ρ^(n)] H}` for `n = f, 1, 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatCurrents {
    pub frozen: Vec<f64>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

pub fn heat_currents(state: &ExpansionState, frozen: &crate::lindblad::FrozenSolution) -> HeatCurrents {
    let h = &state.hamiltonian;
    HeatCurrents {
        frozen: (0..frozen.n_baths()).map(|a| frozen.heat(a, &state.rho_f)).collect(),
        first: state.dissipated1.iter().map(|d| tr_re(d, h)).collect(),
        second: state.dissipated2.iter().map(|d| tr_re(d, h)).collect(),
    }
}

/// `-Tr(ρ ln ρ)` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &CMat) -> f64 {
    SymmetricEigen::new(rho.clone())
        .eigenvalues
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// `ln ρ` for a positive definite Hermitian matrix; eigenvalues at or below
/// zero are clamped to the smallest positive double.
fn log_matrix(rho: &CMat) -> CMat {
    let eig = SymmetricEigen::new(rho.clone());
    let logs = eig
        .eigenvalues
        .map(|p| crate::lattice::C64::new(p.max(f64::MIN_POSITIVE).ln(), 0.0));
    &eig.eigenvectors * CMat::from_diagonal(&logs) * eig.eigenvectors.adjoint()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entropies {
    /// `S^(f) = -Tr ρ^(f) ln ρ^(f)`.
    pub frozen: f64,
    /// `S^(1) = Tr[ρ^(1) H] / T`.
    pub first: f64,
    /// `-Tr ρ^(1) ln ρ^(f)`, equal to `first` for a Gibbs frozen state.
    pub first_log_form: f64,
}

pub fn entropies(state: &ExpansionState, temperature: f64) -> Entropies {
    Entropies {
        frozen: von_neumann_entropy(&state.rho_f),
        first: tr_re(&state.rho1, &state.hamiltonian) / temperature,
        first_log_form: -tr_re(&state.rho1, &log_matrix(&state.rho_f)),
    }
}

/// Observables at one instant. Residual fields ending in `_abs` are in
/// energy (or entropy) per time; the relative residuals are filled in by
/// [`balance_residuals`] once the whole period is known.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstantReport {
    pub t: f64,
    pub point: Vec2,
    pub velocity: Vec2,
    pub acceleration: Vec2,
    pub power1: f64,
    pub power2: f64,
    pub heat: HeatCurrents,
    pub entropy: Entropies,
    /// `dE_S/dt = Tr(ρ̇^(f) H) + Tr(ρ̇^(1) H) + Tr((ρ^(f) + ρ^(1)) Ḣ)`.
    pub energy_rate: f64,
    /// `dS^(f)/dt = -Tr(ρ̇^(f) ln ρ^(f))`.
    pub entropy_f_rate: f64,
    /// `dS^(1)/dt = [Tr(ρ̇^(1) H) + Tr(ρ^(1) Ḣ)] / T`.
    pub entropy1_rate: f64,
    pub first_law_abs: f64,
    pub entropy_1_abs: f64,
    pub entropy_2_abs: f64,
    /// Largest constituent term of each balance at this instant.
    pub scales: [f64; 3],
    pub residual_first_law: f64,
    pub residual_entropy_1: f64,
    pub residual_entropy_2: f64,
}

pub fn instant_report(
    config: &SystemConfig,
    state: &ExpansionState,
    frozen: &crate::lindblad::FrozenSolution,
    t: f64,
) -> InstantReport {
    let temperature = reference_temperature(config);
    let (power1, power2) = power_terms(state);
    let heat = heat_currents(state, frozen);
    let entropy = entropies(state, temperature);
    let h = &state.hamiltonian;
    let hdot = state.hamiltonian_dot();

    let ef = tr_re(&state.rho_f_dot, h);
    let e1 = tr_re(&state.rho1_dot, h);
    let energy_rate = ef + e1 + power1 + power2;
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let total_heat = sum(&heat.frozen) + sum(&heat.first) + sum(&heat.second);
    let first_law_abs = energy_rate - power1 - power2 - total_heat;

    let entropy_f_rate = -tr_re(&state.rho_f_dot, &log_matrix(&state.rho_f));
    let clausius1: f64 = heat
        .first
        .iter()
        .zip(&config.baths)
        .map(|(j, b)| j / b.temperature)
        .sum();
    let entropy_1_abs = entropy_f_rate - clausius1;

    let entropy1_rate = (e1 + tr_re(&state.rho1, &hdot)) / temperature;
    let entropy_2_abs = entropy1_rate - (sum(&heat.second) + power2) / temperature;

    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut first_terms = vec![ef, e1, power1, power2];
    first_terms.extend(&heat.frozen);
    first_terms.extend(&heat.first);
    first_terms.extend(&heat.second);
    let scales = [
        max_abs(&first_terms),
        max_abs(&[entropy_f_rate, clausius1]),
        max_abs(&[entropy1_rate, sum(&heat.second) / temperature, power2 / temperature]),
    ];

    InstantReport {
        t,
        point: state.point,
        velocity: state.velocity,
        acceleration: state.acceleration,
        power1,
        power2,
        heat,
        entropy,
        energy_rate,
        entropy_f_rate,
        entropy1_rate,
        first_law_abs,
        entropy_1_abs,
        entropy_2_abs,
        scales,
        residual_first_law: 0.0,
        residual_entropy_1: 0.0,
        residual_entropy_2: 0.0,
    }
}

/// Normalises the absolute residuals by the largest constituent term over
/// the whole series. A balance whose terms all vanish (static protocol)
/// has relative residual 0.
pub fn balance_residuals(reports: &mut [InstantReport]) {
    let mut scale = [0.0f64; 3];
    for r in reports.iter() {
        for k in 0..3 {
            scale[k] = scale[k].max(r.scales[k]);
        }
    }
    let rel = |abs: f64, s: f64| if s > 0.0 { abs.abs() / s } else { abs.abs() };
    for r in reports.iter_mut() {
        r.residual_first_law = rel(r.first_law_abs, scale[0]);
        r.residual_entropy_1 = rel(r.entropy_1_abs, scale[1]);
        r.residual_entropy_2 = rel(r.entropy_2_abs, scale[2]);
    }
}

/// Report at time `t` of a protocol.
pub fn report_at(config: &SystemConfig, protocol: &Protocol, t: f64, numerics: &Numerics) -> Result<InstantReport> {
    let k = protocol.kinematics(t);
    let mut r = PointResponse::new(config, &k.x, numerics)?;
    let state = r.expansion(&k.v, &k.a)?;
    let frozen = r.center()?;
    Ok(instant_report(config, &state, frozen, t))
}

/// Reports on `nodes` equally spaced times over one period, residuals
/// normalised.
pub fn benchmark_series(
    config: &SystemConfig,
    protocol: &Protocol,
    nodes: usize,
    numerics: &Numerics,
) -> Result<Vec<InstantReport>> {
    let tau = protocol.period();
    let mut reports = (0..nodes)
        .into_par_iter()
        .map(|k| report_at(config, protocol, tau * k as f64 / nodes as f64, numerics))
        .collect::<Result<Vec<_>>>()?;
    balance_residuals(&mut reports);
    Ok(reports)
}

/// Largest relative residual of each balance over a series.
pub fn max_residuals(reports: &[InstantReport]) -> [f64; 3] {
    reports.iter().fold([0.0; 3], |m, r| {
        [
            m[0].max(r.residual_first_law),
            m[1].max(r.residual_entropy_1),
            m[2].max(r.residual_entropy_2),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{Path, Protocol};
    use crate::lattice::{standard_baths, C64};

    fn fig1() -> SystemConfig {
        SystemConfig::two_qubit(0.0, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0)).with_time_unit(2000.0)
    }

    fn state_at(cfg: &SystemConfig, x: Vec2, v: Vec2, a: Vec2) -> (ExpansionState, crate::lindblad::FrozenSolution) {
        let num = Numerics::default();
        let mut r = PointResponse::new(cfg, &x, &num).unwrap();
        let s = r.expansion(&v, &a).unwrap();
        (s, r.center().unwrap().clone())
    }

    #[test]
    fn static_protocol_has_no_power_or_residual() {
        let cfg = fig1();
        let (s, f) = state_at(&cfg, [1.0, 0.5], [0.0, 0.0], [0.0, 0.0]);
        assert_eq!(power_terms(&s), (0.0, 0.0));
        let mut reports = vec![instant_report(&cfg, &s, &f, 0.0)];
        balance_residuals(&mut reports);
        let r = &reports[0];
        assert!(r.heat.frozen.iter().all(|j| j.abs() < 1e-10));
        assert!(r.first_law_abs.abs() + r.entropy_1_abs.abs() + r.entropy_2_abs.abs() < 1e-10);
    }

    #[test]
    fn maximally_mixed_entropy() {
        let rho = CMat::identity(4, 4) * C64::new(0.25, 0.0);
        assert!((von_neumann_entropy(&rho) - 4f64.ln()).abs() < 1e-14);
        let mut pure = CMat::zeros(2, 2);
        pure[(0, 0)] = C64::new(1.0, 0.0);
        assert_eq!(von_neumann_entropy(&pure), 0.0);
    }

    #[test]
    fn single_qubit_entropy_is_binary_entropy() {
        let cfg = SystemConfig::single_qubit(standard_baths(0.002, 1.0, 120.0));
        let b = 0.7;
        let (s, _) = state_at(&cfg, [0.0, b], [0.3, 0.1], [0.0, 0.0]);
        let m = b.tanh();
        let (p, q) = (0.5 * (1.0 + m), 0.5 * (1.0 - m));
        let e = entropies(&s, 1.0);
        assert!((e.frozen - (-p * p.ln() - q * q.ln())).abs() < 1e-12);
    }

    #[test]
    fn entropy_forms_agree() {
        let cfg = fig1();
        for (x, v) in [([1.0, 0.5], [0.3, -0.2]), ([0.4, 1.7], [-1.0, 0.4]), ([1.9, 0.1], [0.2, 0.9])] {
            let (s, _) = state_at(&cfg, x, v, [0.0, 0.0]);
            let e = entropies(&s, 1.0);
            assert!((e.first - e.first_log_form).abs() < 1e-9 * e.first.abs().max(1e-12));
        }
    }

    #[test]
    fn fig1_balances_and_cyclic_entropy() {
        let cfg = fig1();
        let protocol = Protocol::new(Path::ellipse([1.0, 0.5], [0.5, 0.25]), 1.0);
        let reports = benchmark_series(&cfg, &protocol, 256, &Numerics::default()).unwrap();
        let [r1, r2, r3] = max_residuals(&reports);
        assert!(r1 < 1e-6 && r2 < 1e-6 && r3 < 1e-6, "{r1} {r2} {r3}");
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&InstantReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let ds_f = mean(&|r| r.entropy_f_rate);
        let ds_1 = mean(&|r| r.entropy1_rate);
        let scale_f = mean(&|r| r.entropy_f_rate.abs());
        let scale_1 = mean(&|r| r.entropy1_rate.abs());
        assert!(ds_f.abs() < 1e-10 * scale_f && ds_1.abs() < 1e-10 * scale_1);
        // Conservative first-order work and positive dissipation.
        let w1 = mean(&|r| r.power1);
        let w2 = mean(&|r| r.power2);
        assert!(w1.abs() < 1e-10 * mean(&|r| r.power1.abs()));
        assert!(w2 > 0.0);
        for r in &reports {
            assert!(r.heat.frozen.iter().all(|j| j.abs() < 1e-10));
        }
    }
}

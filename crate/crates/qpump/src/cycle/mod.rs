//! Closed protocols and their cycle integrals: pumped heat, second-order
//! heats, dissipated work, thermodynamic length and the figure of merit.
//!
//! Every integral over one period is computed in normalised time
//! `s = t/τ`, so `∮ f dt = τ ∫_0^1 f(sτ) ds`.

mod path;
mod profile;
mod quadrature;
pub mod stokes;

pub use path::{Harmonic, Path, Segment, SegmentPath};
pub use profile::{ArcLengthProfile, HarmonicTerm, Kinematics, Protocol, VelocityProfile};
pub use quadrature::{integrate, integrate_interval, integrate_partial, Quadrature};
pub use stokes::{
    field_map, kernel_balance_scan, pumped_heat_stokes, rotor_field, FieldMap, Grid, KernelScan, MapQuantity,
    DEFAULT_GRID_NODES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SystemConfig;
use crate::lindblad::FrozenSolution;
use crate::numerics::Numerics;
use crate::response::{dot, quad, symmetric, FirstOrderKernels, PointResponse};
use crate::thermo::{reference_temperature, von_neumann_entropy};

/// Relative tolerance of the second-order energy balance.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

/// Above this `ΔT/T` the linear-response figure of merit is flagged.
pub const LINEAR_RESPONSE_LIMIT: f64 = 0.2;

/// Raw cycle integrals, per bath where applicable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleIntegrals {
    pub period: f64,
    /// `∮ Λ^(1)_α · dX`.
    pub pumped: Vec<f64>,
    /// `∮ Ẋᵀ Λ Ẋ dt`.
    pub work2: f64,
    /// `∮ √(Ẋᵀ Λ^(s) Ẋ) dt`.
    pub length: f64,
    /// `∮ (Ẋᵀ Ω^(1)_α Ẋ + Λ^(2)_α · Ẍ) dt`, when requested.
    pub second: Option<Vec<f64>>,
}

/// Entries of `Λ` below this size are roundoff; far from the origin the
/// frozen state saturates and `Λ` underflows towards it.
const METRIC_FLOOR: f64 = 1e-10;

fn metric_speed(k: &FirstOrderKernels, v: &crate::response::Vec2, s: f64) -> Result<f64> {
    let m2 = quad(v, &symmetric(&k.lambda), v);
    let size = k.lambda.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if m2 < -dot(v, v) * (1e-10 * size + METRIC_FLOOR) {
        return Err(Error::NegativeMetric { t: s, value: m2 });
    }
    Ok(m2.max(0.0).sqrt())
}

/// All cycle integrals of `protocol` in one pass over the quadrature nodes.
///
/// `Λ` is close to rank one, so the metric speed `√(Ẋᵀ Λ^(s) Ẋ)` has sharp
/// minima where the velocity lines up with the soft direction. The length
/// therefore converges algebraically in the node count and is left out of
/// the refinement check; the other integrands are smooth.
pub fn cycle_integrals(
    config: &SystemConfig,
    protocol: &Protocol,
    second_order: bool,
    quadrature: &Quadrature,
    numerics: &Numerics,
) -> Result<CycleIntegrals> {
    let nb = config.baths.len();
    let tau = protocol.period();
    let breaks = protocol.time_breakpoints();
    let checked = if second_order { 2 * nb + 1 } else { nb + 1 };
    let values = integrate_partial(&breaks, quadrature, checked, |s| {
        let kin = protocol.kinematics(s * tau);
        let mut point = PointResponse::new(config, &kin.x, numerics)?;
        let first = point.first_order_kernels()?;
        let mut out: Vec<f64> = (0..nb).map(|a| tau * first.current1(a, &kin.v)).collect();
        out.push(tau * first.power2(&kin.v));
        if second_order {
            let kernels = point.kernels()?;
            out.extend((0..nb).map(|a| tau * kernels.current2(a, &kin.v, &kin.a)));
        }
        out.push(tau * metric_speed(&first, &kin.v, s)?);
        Ok(out)
    })?;
    Ok(CycleIntegrals {
        period: tau,
        pumped: values[..nb].to_vec(),
        work2: values[nb],
        length: values[checked],
        second: second_order.then(|| values[nb + 1..checked].to_vec()),
    })
}

/// `Q^pump_α` for every bath. Only the line integrals enter the
/// refinement check, so paths through regions where the dissipation is
/// sharply peaked still converge.
pub fn pumped_heats(config: &SystemConfig, protocol: &Protocol, quadrature: &Quadrature, numerics: &Numerics) -> Result<Vec<f64>> {
    let tau = protocol.period();
    integrate(&protocol.time_breakpoints(), quadrature, |s| {
        let kin = protocol.kinematics(s * tau);
        let k = PointResponse::new(config, &kin.x, numerics)?.first_order_kernels()?;
        Ok((0..config.baths.len()).map(|a| tau * k.current1(a, &kin.v)).collect())
    })
}

pub fn pumped_heat_line(
    config: &SystemConfig,
    protocol: &Protocol,
    bath: usize,
    quadrature: &Quadrature,
    numerics: &Numerics,
) -> Result<f64> {
    if bath >= config.baths.len() {
        return Err(Error::InvalidConfig(format!("no bath with index {bath}")));
    }
    Ok(pumped_heats(config, protocol, quadrature, numerics)?[bath])
}

/// Heat per bath along an open piece of a path, and the change of the
/// frozen-state entropy across it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SegmentHeat {
    pub heats: Vec<f64>,
    pub entropy_change: f64,
}

pub fn frozen_entropy(config: &SystemConfig, x: &[f64], numerics: &Numerics) -> Result<f64> {
    Ok(von_neumann_entropy(&FrozenSolution::new(config, x, numerics)?.steady().rho))
}

/// `∫ Λ^(1)_α · dX` over the path parameter range `[u0, u1]`.
pub fn segment_heat(
    config: &SystemConfig,
    path: &Path,
    u0: f64,
    u1: f64,
    quadrature: &Quadrature,
    numerics: &Numerics,
) -> Result<SegmentHeat> {
    let span = u1 - u0;
    let breaks: Vec<f64> = path
        .breakpoints()
        .into_iter()
        .filter(|u| *u > u0.min(u1) && *u < u0.max(u1))
        .map(|u| (u - u0) / span)
        .collect();
    let heats = integrate_interval(&breaks, quadrature, |s| {
        let [x, d, _] = path.eval(u0 + s * span);
        let k = PointResponse::new(config, &x, numerics)?.first_order_kernels()?;
        Ok((0..config.baths.len())
            .map(|a| span * dot(&k.lambda1[a], &d))
            .collect())
    })?;
    let entropy_change = frozen_entropy(config, &path.point(u1), numerics)? - frozen_entropy(config, &path.point(u0), numerics)?;
    Ok(SegmentHeat { heats, entropy_change })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipatedWork {
    /// `W^(2) = ∮ Ẋᵀ Λ Ẋ dt`.
    pub work: f64,
    /// `Q^(2)_α`.
    pub heats: Vec<f64>,
    /// `Q^diss = -Σ_α Q^(2)_α`.
    pub dissipated_heat: f64,
    /// `|W^(2) + Σ_α Q^(2)_α|` relative to the largest term.
    pub residual: f64,
}

fn balance(work: f64, heats: Vec<f64>) -> Result<DissipatedWork> {
    let dissipated_heat = -heats.iter().sum::<f64>();
    let scale = heats.iter().fold(work.abs(), |m, q| m.max(q.abs()));
    let residual = if scale > 0.0 { (work - dissipated_heat).abs() / scale } else { 0.0 };
    if residual > BALANCE_TOLERANCE {
        return Err(Error::BalanceViolation {
            residual: work - dissipated_heat,
            relative: residual,
        });
    }
    Ok(DissipatedWork {
        work,
        heats,
        dissipated_heat,
        residual,
    })
}

pub fn dissipated_work(config: &SystemConfig, protocol: &Protocol, quadrature: &Quadrature, numerics: &Numerics) -> Result<DissipatedWork> {
    let c = cycle_integrals(config, protocol, true, quadrature, numerics)?;
    balance(c.work2, c.second.unwrap_or_default())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermodynamicLength {
    /// `𝓛 = ∮ √(dXᵀ Λ^(s) dX)`, independent of the velocity profile.
    pub length: f64,
    pub length_sq: f64,
    /// `L² = τ W^(2)`, which is at least `𝓛²`.
    pub dissipation_sq: f64,
}

impl ThermodynamicLength {
    fn from_integrals(c: &CycleIntegrals) -> Self {
        ThermodynamicLength {
            length: c.length,
            length_sq: c.length * c.length,
            dissipation_sq: c.period * c.work2,
        }
    }
}

pub fn thermodynamic_length(
    config: &SystemConfig,
    protocol: &Protocol,
    quadrature: &Quadrature,
    numerics: &Numerics,
) -> Result<ThermodynamicLength> {
    let c = cycle_integrals(config, protocol, false, quadrature, numerics)?;
    Ok(ThermodynamicLength::from_integrals(&c))
}

/// Linear-response engine performance of a cycle at small `ΔT`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FigureOfMerit {
    /// Pumped heat of the cold bath.
    pub pumped: f64,
    /// `A² / 𝓛²`.
    pub merit: f64,
    /// Optimal period `2 T L² / (A ΔT)`; `None` when `A = 0` or `ΔT = 0`.
    /// Negative when the cycle heats the cold bath, i.e. the reversed cycle
    /// is the pump.
    pub optimal_period: Option<f64>,
    /// `¼ (A/L)² (ΔT/T)²` for the actual velocity profile.
    pub power: f64,
    /// `¼ (A/𝓛)² (ΔT/T)²` for the constant-dissipation profile.
    pub max_power: f64,
    /// Set when `ΔT/T` exceeds [`LINEAR_RESPONSE_LIMIT`].
    pub beyond_linear_response: bool,
}

pub fn figure_of_merit(pumped: f64, length: &ThermodynamicLength, delta_t: f64, temperature: f64) -> FigureOfMerit {
    let ratio = delta_t / temperature;
    let ratio_term = 0.25 * ratio * ratio;
    let over = |l2: f64| if l2 > 0.0 { pumped * pumped / l2 } else { f64::INFINITY };
    let optimal_period = (pumped != 0.0 && delta_t != 0.0).then(|| 2.0 * temperature * length.dissipation_sq / (pumped * delta_t));
    FigureOfMerit {
        pumped,
        merit: over(length.length_sq),
        optimal_period,
        power: ratio_term * over(length.dissipation_sq),
        max_power: ratio_term * over(length.length_sq),
        beyond_linear_response: ratio.abs() > LINEAR_RESPONSE_LIMIT,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleOptions {
    pub quadrature: Quadrature,
    /// Bath whose pumped heat defines `A`.
    pub cold_bath: usize,
    /// Temperature difference for the figure of merit.
    pub delta_t: f64,
    pub second_order: bool,
}

impl Default for CycleOptions {
    fn default() -> Self {
        CycleOptions {
            quadrature: Quadrature::default(),
            cold_bath: 0,
            delta_t: 0.1,
            second_order: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub period: f64,
    pub temperature: f64,
    pub pumped: Vec<f64>,
    /// `|Σ_α Q^pump_α|`.
    pub pump_sum_residual: f64,
    pub dissipation: Option<DissipatedWork>,
    pub length: ThermodynamicLength,
    pub merit: FigureOfMerit,
}

/// Full report. Second-order quantities need `Ẍ`, so for paths with corners
/// they are taken from `smoothed` (the same cycle with rounded corners)
/// when given.
pub fn cycle_report(
    config: &SystemConfig,
    protocol: &Protocol,
    smoothed: Option<&Protocol>,
    options: &CycleOptions,
    numerics: &Numerics,
) -> Result<CycleReport> {
    if options.cold_bath >= config.baths.len() {
        return Err(Error::InvalidConfig(format!("cold bath index {} out of range", options.cold_bath)));
    }
    let in_one_pass = options.second_order && smoothed.is_none();
    let first = cycle_integrals(config, protocol, in_one_pass, &options.quadrature, numerics)?;
    let dissipation = match (options.second_order, smoothed) {
        (false, _) => None,
        (true, None) => Some(balance(first.work2, first.second.clone().unwrap_or_default())?),
        (true, Some(p)) => Some(dissipated_work(config, p, &options.quadrature, numerics)?),
    };
    let temperature = reference_temperature(config);
    let length = ThermodynamicLength::from_integrals(&first);
    let merit = figure_of_merit(first.pumped[options.cold_bath], &length, options.delta_t, temperature);
    Ok(CycleReport {
        period: first.period,
        temperature,
        pump_sum_residual: first.pumped.iter().sum::<f64>().abs(),
        pumped: first.pumped,
        dissipation,
        length,
        merit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::standard_baths;

    fn config(j: f64) -> SystemConfig {
        SystemConfig::two_qubit(j, 1.2, 2.0, standard_baths(0.002, 1.0, 120.0)).with_time_unit(2000.0)
    }

    fn quick() -> Quadrature {
        Quadrature::default().with_nodes(128)
    }

    #[test]
    fn stationary_protocol_gives_zeros() {
        let p = Protocol::new(Path::ellipse([1.0, 0.5], [0.0, 0.0]), 1.0);
        let c = cycle_integrals(&config(1.0), &p, true, &quick(), &Numerics::default()).unwrap();
        assert!(c.pumped.iter().chain(c.second.as_ref().unwrap()).all(|q| *q == 0.0));
        assert_eq!((c.work2, c.length), (0.0, 0.0));
    }

    #[test]
    fn pump_conservation_and_balance() {
        // Kept away from the ground-state crossing near |B| ≈ 0.95, where the
        // integrands are sharp.
        let p = Protocol::new(Path::ellipse([1.6, 1.0], [0.3, 0.2]), 1.0);
        let c = cycle_integrals(&config(2.0), &p, true, &quick(), &Numerics::default()).unwrap();
        let max = c.pumped.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        assert!(c.pumped.iter().sum::<f64>().abs() < 1e-8 * max);
        let d = balance(c.work2, c.second.unwrap()).unwrap();
        assert!(d.residual < 1e-8 && d.work > 0.0);
    }

    #[test]
    fn doubling_the_period_halves_the_work() {
        let cfg = config(0.0);
        let path = Path::ellipse([1.0, 0.5], [0.5, 0.25]);
        let num = Numerics::default();
        let a = cycle_integrals(&cfg, &Protocol::new(path.clone(), 1.0), false, &quick(), &num).unwrap();
        let b = cycle_integrals(&cfg, &Protocol::new(path, 2.0), false, &quick(), &num).unwrap();
        assert!((a.work2 - 2.0 * b.work2).abs() < 1e-12 * a.work2);
        assert!((a.length - b.length).abs() < 1e-12 * a.length);
        assert!((a.pumped[0] - b.pumped[0]).abs() < 1e-12 * a.pumped[0].abs());
    }

    #[test]
    fn segments_add_up_to_the_cycle() {
        let cfg = config(0.0);
        let num = Numerics::default();
        let path = Path::circle([1.0, 1.0], 0.6);
        let q = Quadrature::default();
        let parts = [(0.0, 0.3), (0.3, 0.75), (0.75, 1.0)]
            .map(|(a, b)| segment_heat(&cfg, &path, a, b, &q, &num).unwrap());
        let whole = pumped_heats(&cfg, &Protocol::new(path, 1.0), &quick(), &num).unwrap();
        let sum: f64 = parts.iter().map(|p| p.heats[1]).sum();
        assert!((sum - whole[1]).abs() < 1e-7 * whole[1].abs());
        assert!(parts.iter().map(|p| p.entropy_change).sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn figure_of_merit_formulas() {
        let len = ThermodynamicLength {
            length: 2.0,
            length_sq: 4.0,
            dissipation_sq: 5.0,
        };
        let m = figure_of_merit(0.5, &len, 0.1, 1.0);
        assert!((m.merit - 0.0625).abs() < 1e-15);
        assert!((m.max_power - 0.25 * 0.0625 * 0.01).abs() < 1e-18);
        assert!((m.power - 0.25 * 0.05 * 0.01).abs() < 1e-18);
        assert!((m.optimal_period.unwrap() - 2.0 * 5.0 / 0.05).abs() < 1e-12);
        assert!(!m.beyond_linear_response);
        let doubled = figure_of_merit(0.5, &len, 0.2, 1.0);
        assert!((doubled.max_power - 4.0 * m.max_power).abs() < 1e-15 * m.max_power);
        let none = figure_of_merit(0.0, &len, 0.5, 1.0);
        assert!(none.optimal_period.is_none() && none.beyond_linear_response);
    }
}

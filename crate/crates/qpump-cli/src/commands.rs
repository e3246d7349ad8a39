use nalgebra::SymmetricEigen;

use qpump::cycle::{
    cycle_integrals, cycle_report, field_map, pumped_heats, segment_heat, thermodynamic_length, CycleOptions, Grid,
    MapQuantity, Path, BALANCE_TOLERANCE,
};
use qpump::lattice::{hamiltonian, CMat, C64};
use qpump::oracles::{product_state_solver, single_qubit_heat1, CutoffMode};
use qpump::response::{dot, PointResponse};
use qpump::thermo::{benchmark_series, max_residuals, reference_temperature};
use qpump::{FrozenSolution, SystemConfig};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::table::ResultTable;

/// Tolerance of the steady-state check against the Gibbs state.
pub const GIBBS_TOLERANCE: f64 = 1e-10;
/// Tolerance of engine against closed-form first-order currents.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// A finished table, and the reason for a nonzero exit if an invariant
/// failed while producing it.
pub struct Output {
    pub table: ResultTable,
    pub violation: Option<String>,
}

impl From<ResultTable> for Output {
    fn from(table: ResultTable) -> Self {
        Output { table, violation: None }
    }
}

fn labels(config: &SystemConfig) -> Vec<String> {
    config.baths.iter().map(|b| b.label.clone()).collect()
}

fn gibbs(h: &CMat, temperature: f64) -> CMat {
    let eig = SymmetricEigen::new(h.clone());
    let e0 = eig.eigenvalues.min();
    let w = eig.eigenvalues.map(|e| (-(e - e0) / temperature).exp());
    let z = w.sum();
    let d = CMat::from_diagonal(&w.map(|x| C64::new(x / z, 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

pub fn steady(run: &RunConfig, point: [f64; 2]) -> Result<Output, CliError> {
    let config = run.system_config()?;
    let frozen = FrozenSolution::new(&config, &point, &run.numerics)?;
    let rho = &frozen.steady().rho;
    let h = hamiltonian(&config, &point)?;
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let in_eigenbasis = eig.eigenvectors.adjoint() * rho * &eig.eigenvectors;

    let mut table = ResultTable::new(&[
        ("level", "1"),
        ("energy", "k_BT"),
        ("population", "1"),
        ("coherence", "1"),
    ]);
    for (k, &i) in order.iter().enumerate() {
        let off: f64 = (0..rho.nrows()).filter(|&j| j != i).map(|j| in_eigenbasis[(i, j)].norm()).sum();
        table.push(vec![k as f64, eig.eigenvalues[i], in_eigenbasis[(i, i)].re, off]);
    }
    table.summarise("B_x", point[0]);
    table.summarise("B_z", point[1]);
    table.summarise("trace", rho.trace().re);
    let mut violation = None;
    if let Some(t) = config.common_temperature() {
        let residual = (rho - gibbs(&h, t)).norm();
        table.summarise("gibbs_residual", residual);
        if residual > GIBBS_TOLERANCE {
            violation = Some(format!("steady state differs from the Gibbs state by {residual:e}"));
        }
    }
    Ok(Output { table, violation })
}

pub fn benchmark(run: &RunConfig) -> Result<Output, CliError> {
    let config = run.system_config()?;
    let protocol = run.protocol()?;
    let t = reference_temperature(&config);
    let reports = benchmark_series(&config, &protocol, run.quadrature.nodes, &run.numerics)?;
    let names = labels(&config);

    let mut columns: Vec<(String, &str)> = vec![("t".into(), "time")];
    columns.extend(names.iter().map(|l| (format!("J1_{l}"), "k_BT/time")));
    columns.push(("T_dSf_dt".into(), "k_BT/time"));
    columns.extend(names.iter().map(|l| (format!("J2_{l}"), "k_BT/time")));
    for c in ["J2_sum", "P2", "T_dS1_dt"] {
        columns.push((c.into(), "k_BT/time"));
    }
    for c in ["residual_first_law", "residual_entropy_1", "residual_entropy_2"] {
        columns.push((c.into(), "1"));
    }
    let spec: Vec<(&str, &str)> = columns.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut table = ResultTable::new(&spec);
    for r in &reports {
        let mut row = vec![r.t];
        row.extend(&r.heat.first);
        row.push(t * r.entropy_f_rate);
        row.extend(&r.heat.second);
        row.push(r.heat.second.iter().sum());
        row.push(r.power2);
        row.push(t * r.entropy1_rate);
        row.extend([r.residual_first_law, r.residual_entropy_1, r.residual_entropy_2]);
        table.push(row);
    }

    let c = cycle_integrals(&config, &protocol, protocol.path().is_smooth(), &run.quadrature, &run.numerics)?;
    for (l, q) in names.iter().zip(&c.pumped) {
        table.summarise(&format!("pumped_{l} [k_BT]"), *q);
    }
    if let Some(second) = &c.second {
        for (l, q) in names.iter().zip(second) {
            table.summarise(&format!("Q2_{l} [k_BT]"), *q);
        }
        table.summarise("W2 [k_BT]", c.work2);
    }
    let worst = max_residuals(&reports).into_iter().fold(0.0, f64::max);
    table.summarise("max_residual", worst);
    let violation = (worst > BALANCE_TOLERANCE)
        .then(|| format!("entropy-energy balance residual {worst:e} exceeds {BALANCE_TOLERANCE:e}"));
    Ok(Output { table, violation })
}

/// Parses `rotor_<bath>`, `max_eig_lambda`, `max_eig_omega_<bath>` and
/// `kernel_residual`.
pub fn map_quantity(run: &RunConfig, field: &str) -> Result<(MapQuantity, &'static str), CliError> {
    let bath = |label: &str| {
        run.bath_index(label)
            .ok_or_else(|| CliError::Config(format!("sweep field `{field}` names unknown bath `{label}`")))
    };
    if let Some(label) = field.strip_prefix("rotor_") {
        return Ok((MapQuantity::Rotor { bath: bath(label)? }, "1/k_BT"));
    }
    for prefix in ["max_eig_omega_", "max_eig_-omega_", "max_eig_−Ω_", "max_eig_-Ω_"] {
        if let Some(label) = field.strip_prefix(prefix) {
            return Ok((MapQuantity::OmegaMaxEigenvalue { bath: bath(label)? }, "time/k_BT"));
        }
    }
    match field {
        "max_eig_lambda" | "max_eig_Λ" => Ok((MapQuantity::LambdaMaxEigenvalue, "time/k_BT")),
        "kernel_residual" => Ok((MapQuantity::KernelResidual, "1")),
        other => Err(CliError::Config(format!(
            "unknown sweep field `{other}` (rotor_<bath>, max_eig_lambda, max_eig_omega_<bath>, kernel_residual)"
        ))),
    }
}

pub fn sweep(run: &RunConfig, field: &str) -> Result<Output, CliError> {
    let config = run.system_config()?;
    let (quantity, unit) = map_quantity(run, field)?;
    let s = &run.sweep;
    let [nx, nz] = s.resolution;
    let grid = if s.cell_centred {
        Grid::cell_centred(s.x_range, s.z_range, nx, nz)?
    } else {
        Grid::uniform(s.x_range, s.z_range, nx, nz)?
    };
    let map = field_map(&config, &grid, quantity, &run.numerics)?;
    let mut table = ResultTable::new(&[("B_x", "k_BT"), ("B_z", "k_BT"), (field, unit)]);
    for (p, v) in grid.points().iter().zip(&map.values) {
        table.push(vec![p[0], p[1], *v]);
    }
    Ok(table.into())
}

pub fn cycle(run: &RunConfig, second_order: bool) -> Result<Output, CliError> {
    let config = run.system_config()?;
    let protocol = run.protocol()?;
    let smoothed = run.smoothed_protocol()?;
    let options = CycleOptions {
        quadrature: run.quadrature.clone(),
        cold_bath: run.bath_index(&run.baths.cold).expect("validated"),
        delta_t: run.baths.delta_t,
        second_order,
    };
    let r = cycle_report(&config, &protocol, smoothed.as_ref(), &options, &run.numerics)?;
    let names = labels(&config);

    let mut columns: Vec<(String, &str)> = vec![("period".into(), "time")];
    columns.extend(names.iter().map(|l| (format!("pumped_{l}"), "k_BT")));
    if second_order {
        columns.push(("W2".into(), "k_BT"));
        columns.extend(names.iter().map(|l| (format!("Q2_{l}"), "k_BT")));
        columns.push(("balance_residual".into(), "k_BT"));
    }
    for (n, u) in [
        ("length", "sqrt(k_BT time)"),
        ("length_sq", "k_BT time"),
        ("dissipation_sq", "k_BT time"),
        ("merit", "k_BT/time"),
        ("optimal_period", "time"),
        ("power", "k_BT/time"),
        ("max_power", "k_BT/time"),
    ] {
        columns.push((n.into(), u));
    }
    let spec: Vec<(&str, &str)> = columns.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut table = ResultTable::new(&spec);
    let mut row = vec![r.period];
    row.extend(&r.pumped);
    if let Some(d) = &r.dissipation {
        row.push(d.work);
        row.extend(&d.heats);
        row.push(d.residual);
    }
    row.extend([
        r.length.length,
        r.length.length_sq,
        r.length.dissipation_sq,
        r.merit.merit,
        r.merit.optimal_period.unwrap_or(f64::NAN),
        r.merit.power,
        r.merit.max_power,
    ]);
    table.push(row);
    table.summarise("temperature [k_BT]", r.temperature);
    table.summarise("pump_sum_residual [k_BT]", r.pump_sum_residual);

    if let Path::Piecewise { segments } = protocol.path() {
        for k in 0..segments.segments().len() {
            let (u0, u1) = segments.segment_range(k);
            let seg = segment_heat(&config, protocol.path(), u0, u1, &run.quadrature, &run.numerics)?;
            for (l, q) in names.iter().zip(&seg.heats) {
                table.summarise(&format!("segment{k}_Q_{l} [k_BT]"), *q);
            }
            table.summarise(&format!("segment{k}_T_dS [k_BT]"), r.temperature * seg.entropy_change);
        }
    }
    table.summarise("beyond_linear_response", f64::from(u8::from(r.merit.beyond_linear_response)));
    Ok(table.into())
}

/// Engine first-order currents against the closed forms: the Bloch solution
/// for one qubit, the product solution for `J = 0` registers.
pub fn oracle_check(run: &RunConfig) -> Result<Output, CliError> {
    let config = run.system_config()?;
    if config.n_qubits != 1 && config.exchange != 0.0 {
        return Err(CliError::Config(
            "oracle-check needs a single qubit or a register without exchange (J = 0)".into(),
        ));
    }
    let protocol = run.protocol()?;
    let names = labels(&config);
    let nodes = run.quadrature.nodes;
    let mut columns: Vec<(String, &str)> = vec![("t".into(), "time")];
    columns.extend(names.iter().map(|l| (format!("J1_engine_{l}"), "k_BT/time")));
    columns.extend(names.iter().map(|l| (format!("J1_oracle_{l}"), "k_BT/time")));
    let spec: Vec<(&str, &str)> = columns.iter().map(|(n, u)| (n.as_str(), *u)).collect();
    let mut table = ResultTable::new(&spec);

    let rows: Vec<Result<Vec<f64>, CliError>> = {
        use rayon::prelude::*;
        (0..nodes)
            .into_par_iter()
            .map(|k| {
                let t = protocol.period() * k as f64 / nodes as f64;
                let kin = protocol.kinematics(t);
                let lambda1 = PointResponse::new(&config, &kin.x, &run.numerics)?.first_order_kernels()?.lambda1;
                let oracle = if config.n_qubits == 1 {
                    single_qubit_heat1(&config, &kin.x, &kin.v, CutoffMode::Matched)?
                } else {
                    product_state_solver(&config, &kin.x, &kin.v, CutoffMode::Matched)?.currents
                };
                let mut row = vec![t];
                row.extend(lambda1.iter().map(|l| dot(l, &kin.v)));
                row.extend(oracle);
                Ok(row)
            })
            .collect()
    };
    let (mut diff, mut peak): (f64, f64) = (0.0, 0.0);
    let nb = names.len();
    for row in rows {
        let row = row?;
        for a in 0..nb {
            diff = diff.max((row[1 + a] - row[1 + nb + a]).abs());
            peak = peak.max(row[1 + nb + a].abs());
        }
        table.push(row);
    }
    let relative = if peak > 0.0 { diff / peak } else { diff };
    table.summarise("max_relative_deviation", relative);
    let violation = (relative > ORACLE_TOLERANCE)
        .then(|| format!("engine deviates from the closed form by {relative:e} (tolerance {ORACLE_TOLERANCE:e})"));
    Ok(Output { table, violation })
}

pub fn merit_scan(run: &RunConfig) -> Result<Output, CliError> {
    let cold = run.bath_index(&run.baths.cold).expect("validated");
    let mut table = ResultTable::new(&[
        ("J", "k_BT"),
        ("b", "1"),
        ("B0", "k_BT"),
        ("pumped_cold", "k_BT"),
        ("length_sq", "k_BT time"),
        ("merit", "k_BT/time"),
        ("max_power", "k_BT/time"),
    ]);
    let ratio = run.baths.delta_t / run.system_config().map(|c| reference_temperature(&c))?;
    let mut cases = Vec::new();
    for &j in &run.scan.exchange {
        for &b in &run.scan.asymmetry {
            cases.extend(run.scan.b0.iter().map(|&b0| (j, b, b0)));
        }
    }
    let rows: Vec<Result<Vec<f64>, CliError>> = {
        use rayon::prelude::*;
        cases
            .par_iter()
            .map(|&(j, b, b0)| {
                let config = run.system_with(j, b)?;
                let protocol = run.protocol_at(b0)?;
                let a = pumped_heats(&config, &protocol, &run.quadrature, &run.numerics)?[cold];
                let l2 = thermodynamic_length(&config, &protocol, &run.quadrature, &run.numerics)?.length_sq;
                let merit = a * a / l2;
                Ok(vec![j, b, b0, a, l2, merit, 0.25 * merit * ratio * ratio])
            })
            .collect()
    };
    for row in rows {
        table.push(row?);
    }
    Ok(table.into())
}

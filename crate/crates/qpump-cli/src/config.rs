//! Run configuration: one TOML document with a block per concern. Every
//! block and key is optional; the defaults reproduce the two-qubit
//! benchmark cycle (`J = 0`, `η = 1.2`, `b = 2`, `g = 0.002`, `ω_C = 120`).

use serde::{Deserialize, Serialize};

use qpump::cycle::{Path, Protocol, Quadrature, SegmentPath};
use qpump::lattice::{Axis, BathSpec, FieldCoupling};
use qpump::{Numerics, SystemConfig};

use crate::error::CliError;

/// Named configurations reproducing the published figures.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig3a", include_str!("../presets/fig3a.toml")),
    ("fig3b", include_str!("../presets/fig3b.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
    ("fig7", include_str!("../presets/fig7.toml")),
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub baths: BathsBlock,
    pub protocol: ProtocolBlock,
    pub sweep: SweepBlock,
    pub scan: ScanBlock,
    pub steady: SteadyBlock,
    pub numerics: Numerics,
    pub quadrature: Quadrature,
    pub output: OutputBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemBlock {
    pub n_qubits: usize,
    /// Exchange coupling `J` in units of `k_BT`.
    pub exchange: f64,
    /// Drive weight `η` of the second and later qubits.
    pub eta: f64,
    /// Bath coupling weight `b` of the second and later qubits.
    pub asymmetry: f64,
    pub field_coupling: FieldCoupling,
    /// Time unit in `ħ/k_BT`.
    pub time_unit: f64,
}

impl Default for SystemBlock {
    fn default() -> Self {
        SystemBlock {
            n_qubits: 2,
            exchange: 0.0,
            eta: 1.2,
            asymmetry: 2.0,
            field_coupling: FieldCoupling::Pauli,
            time_unit: 2000.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reservoir {
    pub label: String,
    pub strength: f64,
    pub temperature: f64,
    pub cutoff: f64,
    pub axis: Axis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathsBlock {
    /// Label of the bath whose pumped heat is the engine's `A`.
    pub cold: String,
    /// Temperature bias used for the figure of merit.
    pub delta_t: f64,
    pub reservoir: Vec<Reservoir>,
}

impl Default for BathsBlock {
    fn default() -> Self {
        let bath = |label: &str, axis| Reservoir {
            label: label.into(),
            strength: 0.002,
            temperature: 1.0,
            cutoff: 120.0,
            axis,
        };
        BathsBlock {
            cold: "L".into(),
            delta_t: 0.1,
            reservoir: vec![bath("L", Axis::X), bath("R", Axis::Z)],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// `X = B_0 [center + (a cos 2πt, b sin 2πt)]`.
    Ellipse,
    /// Circle of radius `r B_0` centred at `(B_0, B_0)`.
    Circle,
    /// Quadrant sector of radius `radius` (absolute) around the origin.
    Sector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolBlock {
    pub kind: ProtocolKind,
    pub b0: f64,
    /// Ellipse centre in units of `B_0`.
    pub center: [f64; 2],
    /// Ellipse semi-axes in units of `B_0`.
    pub semi_axes: [f64; 2],
    /// Circle radius in units of `B_0`, or the sector radius.
    pub radius: f64,
    /// Corner rounding radius of the sector for second-order quantities.
    pub corner: f64,
    pub period: f64,
}

impl Default for ProtocolBlock {
    fn default() -> Self {
        ProtocolBlock {
            kind: ProtocolKind::Ellipse,
            b0: 1.0,
            center: [1.0, 0.5],
            semi_axes: [0.5, 0.25],
            radius: 1.0,
            corner: 0.5,
            period: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    /// `rotor_<bath>`, `max_eig_lambda`, `max_eig_omega_<bath>` or
    /// `kernel_residual`.
    pub field: String,
    pub x_range: [f64; 2],
    pub z_range: [f64; 2],
    /// Nodes along `B_x` and `B_z`.
    pub resolution: [usize; 2],
    /// Place nodes at cell centres instead of on the range edges.
    pub cell_centred: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            field: "rotor_L".into(),
            x_range: [0.0, 2.0],
            z_range: [0.0, 2.0],
            resolution: [81, 81],
            cell_centred: false,
        }
    }
}

/// Parameter lists for `merit-scan`; every combination is one row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBlock {
    pub exchange: Vec<f64>,
    pub asymmetry: Vec<f64>,
    pub b0: Vec<f64>,
}

impl Default for ScanBlock {
    fn default() -> Self {
        ScanBlock {
            exchange: vec![0.0, 1.0, 2.0],
            asymmetry: vec![2.0],
            b0: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyBlock {
    pub point: [f64; 2],
}

impl Default for SteadyBlock {
    fn default() -> Self {
        SteadyBlock { point: [1.0, 0.5] }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub format: Format,
    pub path: Option<String>,
    /// Significant digits of every number.
    pub precision: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            format: Format::Csv,
            path: None,
            precision: 12,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
            })?;
        Self::parse(text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.output.precision == 0 || self.output.precision > 17 {
            return bad(format!("output.precision = {} must be in 1..=17", self.output.precision));
        }
        let p = &self.protocol;
        if !(p.period > 0.0 && p.b0 > 0.0 && p.radius > 0.0 && p.corner >= 0.0) {
            return bad("protocol.period, protocol.b0 and protocol.radius must be positive".into());
        }
        let s = &self.sweep;
        if s.resolution.contains(&0) || !(s.x_range[1] > s.x_range[0]) || !(s.z_range[1] > s.z_range[0]) {
            return bad("sweep ranges must be non-empty and increasing with nonzero resolution".into());
        }
        if self.bath_index(&self.baths.cold).is_none() {
            return bad(format!("baths.cold = `{}` names no reservoir", self.baths.cold));
        }
        if self.scan.exchange.is_empty() || self.scan.asymmetry.is_empty() || self.scan.b0.is_empty() {
            return bad("scan lists must be non-empty".into());
        }
        self.system_config()?.validate()?;
        Ok(())
    }

    pub fn bath_index(&self, label: &str) -> Option<usize> {
        self.baths.reservoir.iter().position(|r| r.label == label)
    }

    pub fn system_config(&self) -> Result<SystemConfig, CliError> {
        self.system_with(self.system.exchange, self.system.asymmetry)
    }

    /// The system with `J` and `b` replaced (used by scans).
    pub fn system_with(&self, exchange: f64, asymmetry: f64) -> Result<SystemConfig, CliError> {
        let s = &self.system;
        if s.n_qubits == 0 {
            return Err(CliError::Config("system.n_qubits must be at least 1".into()));
        }
        let baths = self
            .baths
            .reservoir
            .iter()
            .map(|r| BathSpec::new(&r.label, r.strength, r.temperature, r.cutoff, r.axis))
            .collect();
        Ok(SystemConfig::chain(s.n_qubits, exchange, s.eta, asymmetry, baths)
            .with_time_unit(s.time_unit)
            .with_field_coupling(s.field_coupling))
    }

    /// The configured path at field scale `b0`, as traversed in `period`.
    pub fn protocol_at(&self, b0: f64) -> Result<Protocol, CliError> {
        let p = &self.protocol;
        let path = match p.kind {
            ProtocolKind::Ellipse => Path::ellipse(
                [b0 * p.center[0], b0 * p.center[1]],
                [b0 * p.semi_axes[0], b0 * p.semi_axes[1]],
            ),
            ProtocolKind::Circle => Path::circle([b0, b0], b0 * p.radius),
            ProtocolKind::Sector => Path::piecewise(SegmentPath::sector(p.radius)?),
        };
        Ok(Protocol::new(path, p.period))
    }

    pub fn protocol(&self) -> Result<Protocol, CliError> {
        self.protocol_at(self.protocol.b0)
    }

    /// Rounded-corner version of a sector, for quantities that need `Ẍ`.
    pub fn smoothed_protocol(&self) -> Result<Option<Protocol>, CliError> {
        let p = &self.protocol;
        if p.kind != ProtocolKind::Sector || p.corner == 0.0 {
            return Ok(None);
        }
        let path = Path::piecewise(SegmentPath::filleted_sector(p.radius, p.corner)?);
        Ok(Some(Protocol::new(path, p.period)))
    }

    /// Canonical text used for the configuration hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }
}

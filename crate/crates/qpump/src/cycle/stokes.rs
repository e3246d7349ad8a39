//! Scalar fields on rectangular grids of the control plane: the rotor of
//! `Λ^(1)_α`, eigenvalue maps of the kernels, and the surface-integral form
//! of the pumped heat.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::Path;
use crate::error::{Error, Result};
use crate::lattice::SystemConfig;
use crate::numerics::Numerics;
use crate::response::{symmetric_eigenvalues, FirstOrderKernels, PointResponse, ResponseKernels, Vec2};

/// Nodes per axis of the default rotor grid.
pub const DEFAULT_GRID_NODES: usize = 81;

/// Grid node coordinates along `B_x` and `B_z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn cell_centres(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64).collect()
}

impl Grid {
    pub fn new(x: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        for axis in [&x, &z] {
            if axis.is_empty() || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidConfig("grid axes must be non-empty and strictly increasing".into()));
            }
        }
        Ok(Grid { x, z })
    }

    /// `nx × nz` nodes including the corners of the rectangle.
    pub fn uniform(x_range: Vec2, z_range: Vec2, nx: usize, nz: usize) -> Result<Self> {
        Grid::new(linspace(x_range[0], x_range[1], nx), linspace(z_range[0], z_range[1], nz))
    }

    /// Centres of an `nx × nz` subdivision of the rectangle.
    pub fn cell_centred(x_range: Vec2, z_range: Vec2, nx: usize, nz: usize) -> Result<Self> {
        Grid::new(cell_centres(x_range[0], x_range[1], nx), cell_centres(z_range[0], z_range[1], nz))
    }

    /// `n × n` nodes spanning the bounding box of `path`.
    pub fn enclosing(path: &Path, n: usize) -> Result<Self> {
        let poly = path.polyline(POLYLINE_POINTS);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &poly {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Grid::uniform([lo[0], hi[0]], [lo[1], hi[1]], n, n)
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node coordinates in storage order (`B_x` fastest).
    pub fn points(&self) -> Vec<Vec2> {
        self.z.iter().flat_map(|z| self.x.iter().map(move |x| [*x, *z])).collect()
    }
}

/// One value per grid node, `values[iz * nx + ix]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldMap {
    pub quantity: String,
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl FieldMap {
    pub fn value(&self, ix: usize, iz: usize) -> f64 {
        self.values[iz * self.grid.x.len() + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the cell `[c_k, c_{k+1}]` containing `v`, if inside.
    fn cell(coords: &[f64], v: f64) -> Option<usize> {
        let n = coords.len();
        if n < 2 || v < coords[0] || v > coords[n - 1] {
            return None;
        }
        Some(coords.partition_point(|c| *c <= v).clamp(1, n - 1) - 1)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, p: Vec2) -> Option<f64> {
        let (gx, gz) = (&self.grid.x, &self.grid.z);
        let ix = Self::cell(gx, p[0])?;
        let iz = Self::cell(gz, p[1])?;
        let fx = (p[0] - gx[ix]) / (gx[ix + 1] - gx[ix]);
        let fz = (p[1] - gz[iz]) / (gz[iz + 1] - gz[iz]);
        let v = |i, j| self.value(i, j);
        Some(
            (1.0 - fz) * ((1.0 - fx) * v(ix, iz) + fx * v(ix + 1, iz))
                + fz * ((1.0 - fx) * v(ix, iz + 1) + fx * v(ix + 1, iz + 1)),
        )
    }
}

/// Per-node scalar shown in a [`FieldMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MapQuantity {
    /// `∂_{B_x} Λ^(1)_{α,z} - ∂_{B_z} Λ^(1)_{α,x}`.
    Rotor { bath: usize },
    /// Largest eigenvalue of `Λ^(s)`.
    LambdaMaxEigenvalue,
    /// Largest eigenvalue of `-Ω^(s)_α`.
    OmegaMaxEigenvalue { bath: usize },
    /// `‖Σ_α Ω^(s)_α + Λ^(s)‖` relative to its largest term.
    KernelResidual,
}

impl MapQuantity {
    fn label(&self) -> String {
        match self {
            MapQuantity::Rotor { bath } => format!("rotor[{bath}]"),
            MapQuantity::LambdaMaxEigenvalue => "lambda_max_eig".into(),
            MapQuantity::OmegaMaxEigenvalue { bath } => format!("neg_omega_max_eig[{bath}]"),
            MapQuantity::KernelResidual => "kernel_residual".into(),
        }
    }
}

pub fn first_order_grid(config: &SystemConfig, grid: &Grid, numerics: &Numerics) -> Result<Vec<FirstOrderKernels>> {
    grid.points()
        .par_iter()
        .map(|p| PointResponse::new(config, p, numerics)?.first_order_kernels())
        .collect()
}

pub fn kernel_grid(config: &SystemConfig, grid: &Grid, numerics: &Numerics) -> Result<Vec<ResponseKernels>> {
    grid.points()
        .par_iter()
        .map(|p| PointResponse::new(config, p, numerics)?.kernels())
        .collect()
}

/// Second-order derivative of samples `f` on nodes `c` at index `i`
/// (three-point formulas for uneven spacing, one-sided at the ends).
fn derivative(c: &[f64], f: &[f64], i: usize) -> f64 {
    let n = c.len();
    let (a, b, k) = match i {
        0 => (1, 2, 0),
        _ if i == n - 1 => (n - 3, n - 2, 2),
        _ => (i - 1, i + 1, 1),
    };
    let (x0, x1, x2) = match k {
        0 => (c[0], c[a], c[b]),
        2 => (c[a], c[b], c[n - 1]),
        _ => (c[a], c[i], c[b]),
    };
    let (f0, f1, f2) = match k {
        0 => (f[0], f[a], f[b]),
        2 => (f[a], f[b], f[n - 1]),
        _ => (f[a], f[i], f[b]),
    };
    let x = c[i];
    // Derivative of the Lagrange interpolant through the three nodes.
    let l0 = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    let l1 = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    let l2 = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    f0 * l0 + f1 * l1 + f2 * l2
}

/// Rotor of `Λ^(1)_α` from kernels sampled on `grid`.
pub fn rotor_from_kernels(grid: &Grid, kernels: &[FirstOrderKernels], bath: usize) -> Result<FieldMap> {
    let (nx, nz) = (grid.x.len(), grid.z.len());
    if nx < 3 || nz < 3 {
        return Err(Error::GridTooCoarse(format!(
            "rotor needs at least 3 nodes per axis, got {nx}×{nz}"
        )));
    }
    let lx: Vec<f64> = kernels.iter().map(|k| k.lambda1[bath][0]).collect();
    let lz: Vec<f64> = kernels.iter().map(|k| k.lambda1[bath][1]).collect();
    let mut values = vec![0.0; nx * nz];
    for iz in 0..nz {
        let row: Vec<f64> = lz[iz * nx..(iz + 1) * nx].to_vec();
        for ix in 0..nx {
            let col: Vec<f64> = (0..nz).map(|j| lx[j * nx + ix]).collect();
            values[iz * nx + ix] = derivative(&grid.x, &row, ix) - derivative(&grid.z, &col, iz);
        }
    }
    Ok(FieldMap {
        quantity: MapQuantity::Rotor { bath }.label(),
        grid: grid.clone(),
        values,
    })
}

pub fn rotor_field(config: &SystemConfig, grid: &Grid, bath: usize, numerics: &Numerics) -> Result<FieldMap> {
    if grid.x.len() < 3 || grid.z.len() < 3 {
        return rotor_from_kernels(grid, &[], bath);
    }
    let kernels = first_order_grid(config, grid, numerics)?;
    rotor_from_kernels(grid, &kernels, bath)
}

pub fn field_map(config: &SystemConfig, grid: &Grid, quantity: MapQuantity, numerics: &Numerics) -> Result<FieldMap> {
    let values = match quantity {
        MapQuantity::Rotor { bath } => return rotor_field(config, grid, bath, numerics),
        MapQuantity::LambdaMaxEigenvalue => first_order_grid(config, grid, numerics)?
            .iter()
            .map(|k| symmetric_eigenvalues(&k.lambda).1)
            .collect(),
        MapQuantity::OmegaMaxEigenvalue { bath } => kernel_grid(config, grid, numerics)?
            .iter()
            .map(|k| {
                let o = k.omega(bath);
                let neg = [[-o[0][0], -o[0][1]], [-o[1][0], -o[1][1]]];
                symmetric_eigenvalues(&neg).1
            })
            .collect(),
        MapQuantity::KernelResidual => kernel_grid(config, grid, numerics)?
            .iter()
            .map(ResponseKernels::kernel_residual)
            .collect(),
    };
    Ok(FieldMap {
        quantity: quantity.label(),
        grid: grid.clone(),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelScan {
    pub max_residual: f64,
    pub worst_point: Vec2,
    pub map: FieldMap,
}

/// Largest relative residual of `Σ_α Ω^(s)_α = -Λ^(s)` over a grid.
pub fn kernel_balance_scan(config: &SystemConfig, grid: &Grid, numerics: &Numerics) -> Result<KernelScan> {
    let map = field_map(config, grid, MapQuantity::KernelResidual, numerics)?;
    let points = grid.points();
    let (idx, max_residual) = map
        .values
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(KernelScan {
        max_residual,
        worst_point: points[idx],
        map,
    })
}

/// Vertices sampled per unit of path parameter for the surface integral.
const POLYLINE_POINTS: usize = 4096;
/// Integration rows per grid cell in `B_z`.
const SUB_ROWS: usize = 16;

/// `∮ Λ^(1)_α · dX` as the flux of the rotor through the enclosed region,
/// weighted by the winding number (positive counter-clockwise).
pub fn pumped_heat_stokes(path: &Path, rotor: &FieldMap) -> Result<f64> {
    let poly = path.polyline(POLYLINE_POINTS);
    let (gx, gz) = (&rotor.grid.x, &rotor.grid.z);
    let eps = 1e-12 * (gx[gx.len() - 1] - gx[0]).abs().max(gz[gz.len() - 1] - gz[0]).max(1.0);
    for p in &poly {
        if p[0] < gx[0] - eps || p[0] > gx[gx.len() - 1] + eps || p[1] < gz[0] - eps || p[1] > gz[gz.len() - 1] + eps {
            return Err(Error::OutsideGrid { bx: p[0], bz: p[1] });
        }
    }
    let n = poly.len();
    let mut total = 0.0;
    for iz in 0..gz.len() - 1 {
        let h = (gz[iz + 1] - gz[iz]) / SUB_ROWS as f64;
        for r in 0..SUB_ROWS {
            let z = gz[iz] + (r as f64 + 0.5) * h;
            // Crossings of the horizontal line with polygon edges.
            let mut cross: Vec<(f64, i32)> = Vec::new();
            for k in 0..n {
                let (p, q) = (poly[k], poly[(k + 1) % n]);
                if (p[1] <= z) != (q[1] <= z) {
                    let x = p[0] + (z - p[1]) * (q[0] - p[0]) / (q[1] - p[1]);
                    cross.push((x, if q[1] > p[1] { 1 } else { -1 }));
                }
            }
            if cross.is_empty() {
                continue;
            }
            cross.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut winding = 0;
            let mut row = 0.0;
            for pair in cross.windows(2) {
                winding -= pair[0].1;
                if winding != 0 {
                    row += winding as f64 * row_integral(rotor, z, pair[0].0, pair[1].0);
                }
            }
            total += h * row;
        }
    }
    Ok(total)
}

/// Exact integral of the bilinear interpolant along `z` from `a` to `b`.
fn row_integral(map: &FieldMap, z: f64, a: f64, b: f64) -> f64 {
    let gx = &map.grid.x;
    let mut knots = vec![a];
    knots.extend(gx.iter().copied().filter(|x| *x > a && *x < b));
    knots.push(b);
    let value = |x: f64| map.interpolate([x.clamp(gx[0], gx[gx.len() - 1]), z]).unwrap_or(0.0);
    knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (value(w[0]) + value(w[1]))).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::response::FirstOrderKernels;
    use std::f64::consts::PI;

    fn synthetic(grid: &Grid, field: impl Fn(Vec2) -> Vec2) -> Vec<FirstOrderKernels> {
        grid.points()
            .into_iter()
            .map(|p| FirstOrderKernels {
                point: p,
                lambda: [[0.0; 2]; 2],
                lambda1: vec![field(p)],
                lambda2: vec![[0.0; 2]],
            })
            .collect()
    }

    #[test]
    fn enclosing_grid_is_the_bounding_box() {
        let g = Grid::enclosing(&Path::circle([1.0, 1.0], 1.0), 5).unwrap();
        for axis in [&g.x, &g.z] {
            assert!(axis[0].abs() < 1e-12 && (axis[4] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_no_rotor() {
        let grid = Grid::uniform([0.0, 1.0], [0.0, 1.0], 5, 7).unwrap();
        let map = rotor_from_kernels(&grid, &synthetic(&grid, |_| [0.3, -1.2]), 0).unwrap();
        assert!(map.max_abs() < 1e-13);
    }

    #[test]
    fn quadratic_field_rotor_is_exact() {
        let grid = Grid::new(vec![0.0, 0.3, 0.5, 1.1, 1.6], vec![-1.0, -0.2, 0.4, 0.9]).unwrap();
        // Λ = (-x z², x² z) has rotor 2xz + 2xz = 4xz.
        let map = rotor_from_kernels(&grid, &synthetic(&grid, |p| [-p[0] * p[1] * p[1], p[0] * p[0] * p[1]]), 0).unwrap();
        for (iz, z) in grid.z.iter().enumerate() {
            for (ix, x) in grid.x.iter().enumerate() {
                assert!((map.value(ix, iz) - 4.0 * x * z).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_coarse_grid() {
        let grid = Grid::uniform([0.0, 1.0], [0.0, 1.0], 2, 5).unwrap();
        assert!(matches!(rotor_from_kernels(&grid, &[], 0), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn green_theorem_on_circle_and_orientation() {
        let grid = Grid::uniform([-0.1, 2.1], [-0.1, 2.1], 45, 45).unwrap();
        let kernels = synthetic(&grid, |p| [-p[1], p[0]]);
        let rotor = rotor_from_kernels(&grid, &kernels, 0).unwrap();
        let circle = Path::circle([1.0, 1.0], 1.0);
        let q = pumped_heat_stokes(&circle, &rotor).unwrap();
        // Row midpoints lose accuracy near the top and bottom tangents.
        assert!((q - 2.0 * PI).abs() < 1e-4 * 2.0 * PI, "{q}");
        // A varying rotor, bilinear interpolation error only.
        let kernels = synthetic(&grid, |p| [0.0, p[0] * p[0] * p[1]]);
        let rotor = rotor_from_kernels(&grid, &kernels, 0).unwrap();
        let q = pumped_heat_stokes(&circle, &rotor).unwrap();
        // ∬ 2xz over the unit disc centred at (1,1) = 2π
        assert!((q - 2.0 * PI).abs() < 2e-3 * 2.0 * PI, "{q}");
        let reversed = Path::ellipse([1.0, 1.0], [1.0, -1.0]);
        let r = pumped_heat_stokes(&reversed, &rotor).unwrap();
        assert!((q + r).abs() < 1e-9);
    }

    #[test]
    fn degenerate_path_has_no_flux() {
        let grid = Grid::uniform([0.0, 2.0], [0.0, 2.0], 11, 11).unwrap();
        let rotor = rotor_from_kernels(&grid, &synthetic(&grid, |p| [-p[1], p[0]]), 0).unwrap();
        let line = Path::ellipse([1.0, 1.0], [0.5, 0.0]);
        assert!(pumped_heat_stokes(&line, &rotor).unwrap().abs() < 1e-12);
    }

    #[test]
    fn path_outside_grid() {
        let grid = Grid::uniform([0.0, 1.0], [0.0, 1.0], 5, 5).unwrap();
        let rotor = rotor_from_kernels(&grid, &synthetic(&grid, |_| [0.0, 0.0]), 0).unwrap();
        let err = pumped_heat_stokes(&Path::circle([1.0, 1.0], 1.0), &rotor).unwrap_err();
        assert!(matches!(err, Error::OutsideGrid { .. }));
    }

    #[test]
    fn cell_centred_grid_avoids_edges() {
        let g = Grid::cell_centred([0.0, 2.0], [0.0, 2.0], 40, 40).unwrap();
        assert!((g.x[0] - 0.025).abs() < 1e-15 && (g.x[39] - 1.975).abs() < 1e-15);
        assert_eq!(g.len(), 1600);
    }
}

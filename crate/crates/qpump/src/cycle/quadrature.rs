//! Integration over one period in normalised time `s = t/τ ∈ [0, 1]`.
//!
//! Smooth periodic integrands use the trapezoid rule, whose error decays
//! faster than any power of the node count; the estimate from the even
//! nodes alone comes for free and drives node doubling. Integrands with
//! corners use composite Gauss–Legendre panels between the breakpoints,
//! checked against twice as many panels.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    /// Trapezoid nodes over one period for smooth paths.
    pub nodes: usize,
    /// Gauss–Legendre panels per smooth piece of a piecewise path.
    pub panels: usize,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Relative tolerance of the refinement check; zero disables it.
    pub tolerance: f64,
    /// Changes below this absolute size always pass the check, so that
    /// integrals which vanish up to roundoff do not force refinement.
    pub absolute: f64,
    pub max_doublings: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            nodes: 2048,
            panels: 8,
            order: 12,
            tolerance: 1e-7,
            absolute: 1e-10,
            max_doublings: 3,
        }
    }
}

impl Quadrature {
    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = nodes;
        self
    }

    pub fn unchecked(mut self) -> Self {
        self.tolerance = 0.0;
        self
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn evaluate<F>(points: &[f64], f: &F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    points.par_iter().map(|s| f(*s)).collect()
}

fn weighted_sum(values: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let dim = values.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (v, w) in values.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

/// Compares two estimates; `scale` guards integrals that vanish.
fn converged(q: &Quadrature, checked: usize, fine: &[f64], coarse: &[f64], scale: f64) -> Result<()> {
    if q.tolerance <= 0.0 {
        return Ok(());
    }
    let checked = checked.min(fine.len());
    let (fine, coarse) = (&fine[..checked], &coarse[..checked]);
    let diff: Vec<f64> = fine.iter().zip(coarse).map(|(a, b)| a - b).collect();
    let relative = norm(&diff) / norm(fine).max(scale).max(f64::MIN_POSITIVE);
    if relative <= q.tolerance || norm(&diff) <= q.absolute {
        return Ok(());
    }
    let worst = (0..diff.len())
        .max_by(|&a, &b| diff[a].abs().total_cmp(&diff[b].abs()))
        .unwrap_or(0);
    Err(Error::QuadratureNotConverged {
        value: coarse.get(worst).copied().unwrap_or(0.0),
        doubled: fine.get(worst).copied().unwrap_or(0.0),
        relative,
    })
}

/// `∫_0^1 f(s) ds` for a vector-valued `f`; `breaks` are interior corner
/// locations (empty for periodic smooth integrands).
pub fn integrate<F>(breaks: &[f64], q: &Quadrature, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    integrate_partial(breaks, q, usize::MAX, f)
}

/// As [`integrate`], but only the first `checked` components take part in
/// the refinement check. The rest ride along on the same nodes.
pub fn integrate_partial<F>(breaks: &[f64], q: &Quadrature, checked: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    if breaks.is_empty() {
        trapezoid(q, checked, &f)
    } else {
        gauss_panels(&interval_edges(breaks), q, checked, &f)
    }
}

fn interval_edges(breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![0.0];
    edges.extend(breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0));
    edges.push(1.0);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
}

/// `∫_0^1 f(s) ds` with Gauss–Legendre panels for integrands that are not
/// periodic; `breaks` are interior corner locations.
pub fn integrate_interval<F>(breaks: &[f64], q: &Quadrature, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    gauss_panels(&interval_edges(breaks), q, usize::MAX, &f)
}

fn trapezoid<F>(q: &Quadrature, checked: usize, f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let mut n = q.nodes.max(2);
    let points: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
    let mut values = evaluate(&points, f)?;
    let mut attempt = 0;
    loop {
        let fine = weighted_sum(&values, &vec![1.0 / n as f64; n]);
        let coarse_values: Vec<Vec<f64>> = values.iter().step_by(2).cloned().collect();
        let coarse = weighted_sum(&coarse_values, &vec![2.0 / n as f64; coarse_values.len()]);
        let scale = values.iter().map(|v| norm(v)).sum::<f64>() / n as f64;
        match converged(q, checked, &fine, &coarse, scale) {
            Ok(()) => return Ok(fine),
            Err(e) if attempt >= q.max_doublings => return Err(e),
            Err(_) => {
                let odd: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64 / (2 * n) as f64).collect();
                let new = evaluate(&odd, f)?;
                values = values.into_iter().zip(new).flat_map(|(a, b)| [a, b]).collect();
                n *= 2;
                attempt += 1;
            }
        }
    }
}

fn panel_rule(edges: &[f64], panels: usize, rule: &GaussLegendre) -> (Vec<f64>, Vec<f64>) {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for w in edges.windows(2) {
        let h = (w[1] - w[0]) / panels as f64;
        for p in 0..panels {
            let a = w[0] + p as f64 * h;
            for (x, wt) in rule.as_node_weight_pairs() {
                points.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * wt);
            }
        }
    }
    (points, weights)
}

fn gauss_panels<F>(edges: &[f64], q: &Quadrature, checked: usize, f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let order = NonZeroUsize::new(q.order.max(1)).expect("nonzero");
    let rule = GaussLegendre::new(order);
    let mut panels = q.panels.max(1);
    let (p, w) = panel_rule(edges, panels, &rule);
    let values = evaluate(&p, f)?;
    let mut coarse = weighted_sum(&values, &w);
    if q.tolerance <= 0.0 {
        return Ok(coarse);
    }
    let mut scale = values.iter().zip(&w).map(|(v, wt)| wt * norm(v)).sum::<f64>();
    let mut attempt = 0;
    loop {
        panels *= 2;
        let (p, w) = panel_rule(edges, panels, &rule);
        let values = evaluate(&p, f)?;
        let fine = weighted_sum(&values, &w);
        scale = scale.max(values.iter().zip(&w).map(|(v, wt)| wt * norm(v)).sum::<f64>());
        match converged(q, checked, &fine, &coarse, scale) {
            Ok(()) => return Ok(fine),
            Err(e) if attempt >= q.max_doublings => return Err(e),
            Err(_) => {
                coarse = fine;
                attempt += 1;
            }
        }
    }
}

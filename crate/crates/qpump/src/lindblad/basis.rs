use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::lattice::{hermiticity_deviation, CMat, C64};

/// Spectral decomposition of a frozen Hamiltonian with degenerate levels
/// merged into single projectors.
#[derive(Clone, Debug)]
pub struct FrozenBasis {
    /// Distinct levels, ascending.
    pub eigenvalues: Vec<f64>,
    /// One projector per distinct level.
    pub projectors: Vec<CMat>,
    /// Absolute grouping tolerance used for levels and Bohr frequencies.
    pub tolerance: f64,
    vectors: CMat,
    raw: Vec<f64>,
    level_of: Vec<usize>,
}

impl FrozenBasis {
    pub fn dim(&self) -> usize {
        self.raw.len()
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.eigenvalues.len()];
        for &l in &self.level_of {
            r[l] += 1;
        }
        r
    }

    /// `Σ_m ε_m P_m`.
    pub fn reconstruct(&self) -> CMat {
        let n = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMat::zeros(n, n), |acc, (e, p)| acc + p * C64::new(*e, 0.0))
    }

    /// Orthonormal eigenvectors (columns), ordered by ascending eigenvalue.
    /// Only the spanned eigenspaces are meaningful inside a degenerate level.
    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    /// Unmerged eigenvalue of each eigenvector column.
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.raw
    }

    /// Level index of each eigenvector column.
    pub fn level_of(&self) -> &[usize] {
        &self.level_of
    }

    /// Merged level energy of each eigenvector column.
    pub fn merged_energies(&self) -> Vec<f64> {
        self.level_of.iter().map(|&l| self.eigenvalues[l]).collect()
    }
}

/// Hermitian eigendecomposition; eigenvalues closer than
/// `degeneracy_tol · max(1, spectral range)` share one projector.
pub fn eigendecompose(h: &CMat, degeneracy_tol: f64) -> Result<FrozenBasis> {
    let n = h.nrows();
    let scale = h.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let dev = hermiticity_deviation(h);
    if h.ncols() != n || dev > 1e-12 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let spread = raw.last().copied().unwrap_or(0.0) - raw.first().copied().unwrap_or(0.0);
    let tolerance = degeneracy_tol * spread.max(1.0);
    let mut level_of = Vec::with_capacity(n);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in 0..n {
        if k > 0 && raw[k] - raw[k - 1] <= tolerance {
            groups.last_mut().unwrap().push(k);
        } else {
            groups.push(vec![k]);
        }
        level_of.push(groups.len() - 1);
    }
    let eigenvalues = groups
        .iter()
        .map(|g| g.iter().map(|&k| raw[k]).sum::<f64>() / g.len() as f64)
        .collect();
    let projectors = groups
        .iter()
        .map(|g| {
            g.iter().fold(CMat::zeros(n, n), |acc, &k| {
                let v = vectors.column(k);
                acc + v * v.adjoint()
            })
        })
        .collect();
    Ok(FrozenBasis {
        eigenvalues,
        projectors,
        tolerance,
        vectors,
        raw,
        level_of,
    })
}

/// Bohr frequency classes over ordered level pairs `(l, m)` with
/// `ω = ε_m - ε_l`. Returns the class frequencies and `class[l][m]`.
pub(crate) fn frequency_classes(levels: &[f64], tol: f64) -> (Vec<f64>, Vec<Vec<usize>>) {
    let nl = levels.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(nl * nl);
    for l in 0..nl {
        for m in 0..nl {
            pairs.push((levels[m] - levels[l], l, m));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut freqs: Vec<f64> = Vec::new();
    let mut class = vec![vec![0usize; nl]; nl];
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tol {
            end += 1;
        }
        let members = &pairs[start..end];
        let omega = if members.iter().any(|(_, l, m)| l == m) {
            0.0
        } else {
            members.iter().map(|p| p.0).sum::<f64>() / members.len() as f64
        };
        for &(_, l, m) in members {
            class[l][m] = freqs.len();
        }
        freqs.push(omega);
        start = end;
    }
    (freqs, class)
}

/// A Bohr frequency together with the eigenoperator
/// `π_ω = Σ_{ε_m - ε_l = ω} P_l π P_m`.
#[derive(Clone, Debug)]
pub struct BohrChannel {
    pub frequency: f64,
    pub operator: CMat,
}

/// Splits `pi` into Bohr eigenoperators of `basis`. Channels whose operator
/// vanishes (relative to `pi`) are dropped.
pub fn bohr_channels(basis: &FrozenBasis, pi: &CMat) -> Vec<BohrChannel> {
    let (freqs, class) = frequency_classes(&basis.eigenvalues, basis.tolerance);
    let n = basis.dim();
    let mut ops = vec![CMat::zeros(n, n); freqs.len()];
    for (l, pl) in basis.projectors.iter().enumerate() {
        let left = pl * pi;
        for (m, pm) in basis.projectors.iter().enumerate() {
            ops[class[l][m]] += &left * pm;
        }
    }
    let floor = 1e-13 * pi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    freqs
        .into_iter()
        .zip(ops)
        .filter(|(_, op)| op.iter().any(|z| z.norm() > floor))
        .map(|(frequency, operator)| BohrChannel { frequency, operator })
        .collect()
}

/// Ohmic rate `γ(ω) = ω [1 + n(ω)] e^{-|ω|/ω_C}` with `n` the Bose function,
/// written as `ω / (1 - e^{-ω/T})` so that both signs and the ω → 0 limit
/// (= T) come from one expression.
pub fn ohmic_rate(omega: f64, temperature: f64, cutoff: f64) -> f64 {
    let damping = (-omega.abs() / cutoff).exp();
    if omega == 0.0 {
        return temperature;
    }
    omega / -(-omega / temperature).exp_m1() * damping
}

//! Bordered least-squares solves of `𝓛 x = y` on the traceless subspace.
//!
//! The generator is split into the connected components of its sparsity
//! graph. In the instantaneous eigenframe these are the population block
//! (plus coherences inside degenerate levels) and one block per coherence
//! frequency class, so rates and Bohr frequencies of very different size
//! never meet in the same factorisation.

use nalgebra::{DMatrix, DVector, Dyn, SVD};

use crate::error::{Error, Result};
use crate::lattice::{CMat, C64};

#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn from_pattern(m: &CMat) -> Self {
        let mut uf = UnionFind::new(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    uf.union(i, j);
                }
            }
        }
        uf
    }

    fn components(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Block {
    idx: Vec<usize>,
    /// Kernel dimension of the unbordered block.
    kernel: usize,
    /// Whether the single border row is the population indicator (trace row).
    trace_border: bool,
    border_scale: f64,
    svd: SVD<C64, Dyn, Dyn>,
    sigma_max: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct BlockSolver {
    n: usize,
    blocks: Vec<Block>,
    kernel_dim: usize,
    scale: f64,
}

fn is_population(i: usize, n: usize) -> bool {
    i.is_multiple_of(n + 1)
}

impl BlockSolver {
    /// `m` is the vectorised generator for an `n`-level system.
    pub fn new(m: &CMat, n: usize, pattern: Option<UnionFind>, kernel_tol: f64) -> Self {
        let mut uf = pattern.unwrap_or_else(|| UnionFind::from_pattern(m));
        let mut blocks = Vec::new();
        let mut kernel_dim = 0;
        let mut scale: f64 = 0.0;
        for idx in uf.components() {
            let k = idx.len();
            let sub = DMatrix::from_fn(k, k, |a, b| m[(idx[a], idx[b])]);
            let svd = sub.clone().svd(true, true);
            let sv = &svd.singular_values;
            let sigma_max = sv.iter().copied().fold(0.0, f64::max);
            scale = scale.max(sigma_max);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
            let kernel = order.iter().filter(|&&a| sv[a] <= kernel_tol * sigma_max).count();
            kernel_dim += kernel;

            let pops: Vec<usize> = (0..k).filter(|&a| is_population(idx[a], n)).collect();
            let trace_border = kernel == 1 && !pops.is_empty();
            let border_scale = if sigma_max > 0.0 { sigma_max } else { 1.0 };
            let mut bordered = DMatrix::<C64>::zeros(k + kernel, k);
            bordered.view_mut((0, 0), (k, k)).copy_from(&sub);
            if trace_border {
                for &a in &pops {
                    bordered[(k, a)] = C64::new(border_scale, 0.0);
                }
            } else if kernel > 0 {
                // Left null vectors u: constraint u† x = 0.
                let u = svd.u.as_ref().expect("left singular vectors");
                for (r, &col) in order.iter().take(kernel).enumerate() {
                    for a in 0..k {
                        bordered[(k + r, a)] = u[(a, col)].conj() * border_scale;
                    }
                }
            }
            let svd = bordered.svd(true, true);
            blocks.push(Block {
                idx,
                kernel,
                trace_border,
                border_scale,
                svd,
                sigma_max,
            });
        }
        BlockSolver {
            n,
            blocks,
            kernel_dim,
            scale,
        }
    }

    pub fn kernel_dimension(&self) -> usize {
        self.kernel_dim
    }

    /// Largest singular value over all blocks.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn solve_block(block: &Block, rhs: DVector<C64>) -> DVector<C64> {
        let smax = block.svd.singular_values.iter().copied().fold(0.0, f64::max);
        block
            .svd
            .solve(&rhs, 1e-14 * smax)
            .expect("singular vectors were computed")
    }

    /// Unit-trace stationary vector when the kernel is one-dimensional.
    pub fn stationary(&self) -> Option<DVector<C64>> {
        if self.kernel_dim != 1 {
            return None;
        }
        let mut out = DVector::zeros(self.n * self.n);
        for block in &self.blocks {
            if block.kernel == 1 && block.trace_border {
                let k = block.idx.len();
                let mut rhs = DVector::zeros(k + 1);
                rhs[k] = C64::new(block.border_scale, 0.0);
                let x = Self::solve_block(block, rhs);
                for (a, &i) in block.idx.iter().enumerate() {
                    out[i] = x[a];
                }
                return Some(out);
            }
        }
        None
    }

    /// Least-squares solution of `𝓛 x = y` with no component along any
    /// conserved quantity (for a unique steady state: `Tr x = 0`).
    pub fn solve(&self, y: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(y.len());
        for block in &self.blocks {
            let k = block.idx.len();
            if block.sigma_max == 0.0 && block.kernel == k {
                continue;
            }
            let mut rhs = DVector::zeros(k + block.kernel);
            for (a, &i) in block.idx.iter().enumerate() {
                rhs[a] = y[i];
            }
            let x = Self::solve_block(block, rhs);
            for (a, &i) in block.idx.iter().enumerate() {
                out[i] = x[a];
            }
        }
        out
    }

    /// Same as [`BlockSolver::solve`] but refuses degenerate kernels.
    pub fn solve_strict(&self, y: &DVector<C64>) -> Result<DVector<C64>> {
        if self.kernel_dim != 1 {
            return Err(Error::SingularRestricted {
                dim: self.kernel_dim.saturating_sub(1),
            });
        }
        Ok(self.solve(y))
    }
}

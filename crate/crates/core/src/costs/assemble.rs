//! Deterministic block enumeration and Gauss-Newton normal-equations
//! assembly with a precomputed block sparsity pattern.
//!
//! The pattern (which parameter-block pairs interact) depends only on the
//! mesh topology and the visibility sets, so it is built once per problem;
//! each evaluation only zeroes and refills the value storage.

use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

use crate::real::Real;

use super::blocks::{eval_block, eval_block_with_jac, BlockKind, GeomCache, ResidualBlock};
use super::layout::Layout;
use super::{CostError, SceneData, StateView};

/// Cost-only evaluation result.
#[derive(Clone, Copy, Debug)]
pub struct Evaluation<T: Real> {
    pub cost: T,
    pub dropped: usize,
}

/// One stored parameter-block pair of the Gauss-Newton matrix.
#[derive(Clone, Copy, Debug)]
pub struct PairRef {
    pub a: u32,
    pub b: u32,
    pub offset: u32,
}

/// `J^T J` in block-sparse form plus the gradient `J^T r`.
pub struct NormalEquations<T: Real> {
    pub layout: Layout,
    pub pairs: Vec<PairRef>,
    pub values: Vec<T>,
    pub gradient: DVector<T>,
    pub cost: T,
    pub dropped: usize,
}

impl<T: Real> NormalEquations<T> {
    /// `y = (J^T J) x`, exploiting symmetry of the stored upper blocks.
    pub fn matvec(&self, x: &DVector<T>, y: &mut DVector<T>) {
        y.fill(T::zero());
        let layout = &self.layout;
        for pair in &self.pairs {
            let (ra, ca) = (layout.block_offset(pair.a), layout.block_dim(pair.a));
            let (rb, cb) = (layout.block_offset(pair.b), layout.block_dim(pair.b));
            let vals = &self.values[pair.offset as usize..pair.offset as usize + ca * cb];
            // y[a] += M x[b]
            for r in 0..ca {
                let mut acc = T::zero();
                let row = &vals[r * cb..(r + 1) * cb];
                for (c, m) in row.iter().enumerate() {
                    acc += *m * x[rb + c];
                }
                y[ra + r] += acc;
            }
            if pair.a != pair.b {
                // y[b] += M^T x[a]
                for r in 0..ca {
                    let xa = x[ra + r];
                    let row = &vals[r * cb..(r + 1) * cb];
                    for (c, m) in row.iter().enumerate() {
                        y[rb + c] += *m * xa;
                    }
                }
            }
        }
    }

    /// Diagonal of `J^T J`.
    pub fn diagonal(&self) -> DVector<T> {
        let mut diag = DVector::zeros(self.layout.n_params());
        for pair in &self.pairs {
            if pair.a != pair.b {
                continue;
            }
            let (off, dim) = (
                self.layout.block_offset(pair.a),
                self.layout.block_dim(pair.a),
            );
            for k in 0..dim {
                diag[off + k] = self.values[pair.offset as usize + k * dim + k];
            }
        }
        diag
    }

    /// Dense copy for small problems and verification.
    pub fn dense(&self) -> DMatrix<T> {
        let n = self.layout.n_params();
        let mut out = DMatrix::zeros(n, n);
        for pair in &self.pairs {
            let (ra, ca) = (
                self.layout.block_offset(pair.a),
                self.layout.block_dim(pair.a),
            );
            let (rb, cb) = (
                self.layout.block_offset(pair.b),
                self.layout.block_dim(pair.b),
            );
            for r in 0..ca {
                for c in 0..cb {
                    let v = self.values[pair.offset as usize + r * cb + c];
                    out[(ra + r, rb + c)] = v;
                    if pair.a != pair.b {
                        out[(rb + c, ra + r)] = v;
                    }
                }
            }
        }
        out
    }

    /// Diagonal blocks inverted after damping: the block-Jacobi
    /// preconditioner for the conjugate-gradient solver.
    pub fn block_jacobi(&self, damped_diag: &DVector<T>, lambda: T) -> Vec<(usize, DMatrix<T>)> {
        let mut blocks = Vec::new();
        for pair in &self.pairs {
            if pair.a != pair.b {
                continue;
            }
            let (off, dim) = (
                self.layout.block_offset(pair.a),
                self.layout.block_dim(pair.a),
            );
            let mut m = DMatrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    m[(r, c)] = self.values[pair.offset as usize + r * dim + c];
                }
                m[(r, r)] += lambda * damped_diag[off + r];
            }
            let inv = nalgebra::Cholesky::new(m.clone())
                .map(|ch| ch.inverse())
                .unwrap_or_else(|| {
                    // Fall back to scalar Jacobi on a non-SPD block.
                    let mut d = DMatrix::zeros(dim, dim);
                    for r in 0..dim {
                        let v = m[(r, r)];
                        d[(r, r)] = if v > T::zero() { T::one() / v } else { T::one() };
                    }
                    d
                });
            blocks.push((off, inv));
        }
        blocks
    }
}

struct Pattern {
    pairs: Vec<PairRef>,
    values_len: usize,
    /// Per residual block: active parameter dense indices, ascending.
    block_params: Vec<Vec<u32>>,
    /// Per residual block: global pair slot for each packed upper pair
    /// `(k, l)` of its parameter list, `k <= l`.
    block_pair_slots: Vec<Vec<u32>>,
}

/// A fully enumerated least-squares problem over a scene.
pub struct Problem<'a, T: Real> {
    pub scene: &'a SceneData<T>,
    pub layout: Layout,
    blocks: Vec<ResidualBlock>,
    pattern: Pattern,
    /// Geometric blocks skipped at enumeration (fewer than 3 neighbors).
    pub geometric_skipped: usize,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(
        scene: &'a SceneData<T>,
        state: &StateView<T>,
        layout: Layout,
    ) -> Result<Self, CostError> {
        let n_v = state.mesh.n_vertices();
        if scene.visibility.n_vertices() != n_v || state.alpha.nrows() != n_v {
            return Err(CostError::StateMismatch {
                expected: scene.visibility.n_vertices(),
                got: n_v,
            });
        }

        let mut blocks = Vec::new();
        for i in 0..n_v {
            for &c in scene.visibility.visible_cameras(i) {
                blocks.push(ResidualBlock::rendering(i as u32, c));
            }
        }
        for i in 0..n_v {
            blocks.push(ResidualBlock::spectral(i as u32));
        }
        for (idx, (i, j, _)) in scene.photometric_weights.iter().enumerate() {
            blocks.push(ResidualBlock::photometric(*i, *j, idx as u32));
        }
        let mut geometric_skipped = 0;
        for i in 0..n_v {
            if state.mesh.neighbors(i).len() >= 3 {
                blocks.push(ResidualBlock::geometric(i as u32));
            } else {
                geometric_skipped += 1;
            }
        }
        if blocks.is_empty() {
            return Err(CostError::DegenerateProblem);
        }

        let pattern = Self::build_pattern(&blocks, state, &layout);
        Ok(Self {
            scene,
            layout,
            blocks,
            pattern,
            geometric_skipped,
        })
    }

    fn build_pattern(blocks: &[ResidualBlock], state: &StateView<T>, layout: &Layout) -> Pattern {
        let mut block_params: Vec<Vec<u32>> = Vec::with_capacity(blocks.len());
        for block in blocks {
            let mut ids: Vec<u32> = block
                .param_blocks(state)
                .into_iter()
                .filter_map(|p| layout.block_index(p))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            block_params.push(ids);
        }

        let mut keys: Vec<(u32, u32)> = Vec::new();
        for ids in &block_params {
            for (k, &a) in ids.iter().enumerate() {
                for &b in &ids[k..] {
                    keys.push((a, b));
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();

        let mut offset = 0usize;
        let mut pairs = Vec::with_capacity(keys.len());
        let mut index: HashMap<(u32, u32), u32> = HashMap::with_capacity(keys.len());
        for (slot, &(a, b)) in keys.iter().enumerate() {
            pairs.push(PairRef {
                a,
                b,
                offset: offset as u32,
            });
            index.insert((a, b), slot as u32);
            offset += layout.block_dim(a) * layout.block_dim(b);
        }

        let mut block_pair_slots = Vec::with_capacity(blocks.len());
        for ids in &block_params {
            let mut slots = Vec::with_capacity(ids.len() * (ids.len() + 1) / 2);
            for (k, &a) in ids.iter().enumerate() {
                for &b in &ids[k..] {
                    slots.push(index[&(a, b)]);
                }
            }
            block_pair_slots.push(slots);
        }

        Pattern {
            pairs,
            values_len: offset,
            block_params,
            block_pair_slots,
        }
    }

    pub fn blocks(&self) -> &[ResidualBlock] {
        &self.blocks
    }

    pub fn n_residuals(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// Total cost `sum ||r||^2` at a state.
    pub fn cost(&self, state: &StateView<T>) -> Evaluation<T> {
        let cache = GeomCache::build(self.scene, state, false);
        let mut cost = T::zero();
        let mut dropped = 0usize;
        for block in &self.blocks {
            match eval_block(self.scene, state, &cache, block) {
                Some(r) => cost += r.norm_squared(),
                None => dropped += 1,
            }
        }
        Evaluation { cost, dropped }
    }

    /// Stacked residual vector in block order; dropped blocks stay zero.
    pub fn residual_vector(&self, state: &StateView<T>) -> (DVector<T>, usize) {
        let cache = GeomCache::build(self.scene, state, false);
        let mut out = DVector::zeros(self.n_residuals());
        let mut offset = 0usize;
        let mut dropped = 0usize;
        for block in &self.blocks {
            match eval_block(self.scene, state, &cache, block) {
                Some(r) => out.rows_mut(offset, r.len()).copy_from(&r),
                None => dropped += 1,
            }
            offset += block.dim();
        }
        (out, dropped)
    }

    /// Assembles `J^T J`, `J^T r`, and the cost in one pass.
    pub fn normal_equations(&self, state: &StateView<T>) -> NormalEquations<T> {
        let cache = GeomCache::build(self.scene, state, true);
        let mut values = vec![T::zero(); self.pattern.values_len];
        let mut gradient = DVector::zeros(self.layout.n_params());
        let mut cost = T::zero();
        let mut dropped = 0usize;

        // Entry scratch: (position within the block's param list, jacobian).
        let mut present: Vec<(usize, DMatrix<T>)> = Vec::new();
        for (bi, block) in self.blocks.iter().enumerate() {
            let Some((r, jac)) = eval_block_with_jac(self.scene, state, &cache, block) else {
                dropped += 1;
                continue;
            };
            cost += r.norm_squared();
            let ids = &self.pattern.block_params[bi];
            let np = ids.len();
            if np == 0 {
                continue; // all parameters of this block are frozen
            }
            present.clear();
            for (param, j) in jac {
                let Some(dense) = self.layout.block_index(param) else {
                    continue;
                };
                let pos = ids.binary_search(&dense).expect("pattern covers jacobian");
                present.push((pos, j));
            }
            present.sort_unstable_by_key(|(pos, _)| *pos);

            for (pos_k, j_k) in &present {
                // gradient: J_k^T r
                let g = j_k.transpose() * &r;
                let off = self.layout.block_offset(ids[*pos_k]);
                for (t, v) in g.iter().enumerate() {
                    gradient[off + t] += *v;
                }
                for (pos_l, j_l) in &present {
                    if pos_l < pos_k {
                        continue;
                    }
                    // packed upper-triangular slot of (pos_k, pos_l)
                    let k = *pos_k;
                    let l = *pos_l;
                    let packed = k * (2 * np - k - 1) / 2 + l;
                    let slot = self.pattern.block_pair_slots[bi][packed] as usize;
                    let pair = self.pattern.pairs[slot];
                    let contrib = j_k.transpose() * j_l;
                    let base = pair.offset as usize;
                    let cb = self.layout.block_dim(pair.b);
                    for rr in 0..contrib.nrows() {
                        for cc in 0..contrib.ncols() {
                            values[base + rr * cb + cc] += contrib[(rr, cc)];
                        }
                    }
                }
            }
        }

        NormalEquations {
            layout: self.layout,
            pairs: self.pattern.pairs.clone(),
            values,
            gradient,
            cost,
            dropped,
        }
    }
}

/// Convenience: kinds of a block list, used by reports.
pub fn count_kinds(blocks: &[ResidualBlock]) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for b in blocks {
        let k = match b.kind {
            BlockKind::Rendering => 0,
            BlockKind::Spectral => 1,
            BlockKind::Photometric => 2,
            BlockKind::Geometric => 3,
        };
        counts[k] += 1;
    }
    counts
}

//! Minimal complex CSR matrix with the operations the lab needs: triplet
//! assembly, parallel matvec, conjugate transpose, and sandwiching by the
//! block-diagonal boundary-reduction map.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<C64>,
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Build from unsorted triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(u32, u32, C64)>) -> Csr {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx: Vec<u32> = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().expect("nonempty") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k] as usize];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Csr {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((self.col_idx[k], i as u32, self.values[k].conj()));
            }
        }
        Csr::from_triplets(self.ncols, self.nrows, t)
    }

    /// max |A - A^H| entry (Hermiticity residual).
    pub fn hermiticity_residual(&self) -> f64 {
        let at = self.adjoint();
        let mut res: f64 = 0.0;
        for i in 0..self.nrows {
            let ra = self.row_ptr[i]..self.row_ptr[i + 1];
            let rb = at.row_ptr[i]..at.row_ptr[i + 1];
            let mut ka = ra.start;
            let mut kb = rb.start;
            while ka < ra.end || kb < rb.end {
                let ca = if ka < ra.end { self.col_idx[ka] } else { u32::MAX };
                let cb = if kb < rb.end { at.col_idx[kb] } else { u32::MAX };
                if ca == cb {
                    res = res.max((self.values[ka] - at.values[kb]).norm());
                    ka += 1;
                    kb += 1;
                } else if ca < cb {
                    res = res.max(self.values[ka].norm());
                    ka += 1;
                } else {
                    res = res.max(at.values[kb].norm());
                    kb += 1;
                }
            }
        }
        res
    }

    /// (A + A^H)/2.
    pub fn symmetrize(&self) -> Csr {
        let at = self.adjoint();
        let mut t = Vec::with_capacity(self.nnz() * 2);
        let half = C64::new(0.5, 0.0);
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                t.push((i as u32, self.col_idx[k], self.values[k] * half));
            }
            for k in at.row_ptr[i]..at.row_ptr[i + 1] {
                t.push((i as u32, at.col_idx[k], at.values[k] * half));
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    /// A + B.
    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.nrows {
                for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                    t.push((i as u32, m.col_idx[k], m.values[k]));
                }
            }
        }
        Csr::from_triplets(self.nrows, self.ncols, t)
    }

    /// Scale every entry.
    pub fn scale(&mut self, s: C64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Entry-wise congruence with a diagonal: D_l A D_r (diagonals as slices).
    pub fn diag_sandwich(&self, left: &[f64], right: &[f64]) -> Csr {
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= C64::new(left[i] * right[self.col_idx[k] as usize], 0.0);
            }
        }
        out
    }

    /// Coordinate-list text export: `row col re im` per line.
    pub fn export_coordinate_list(&self) -> String {
        let mut s = String::new();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s.push_str(&format!(
                    "{} {} {:.17e} {:.17e}\n",
                    i, self.col_idx[k], self.values[k].re, self.values[k].im
                ));
            }
        }
        s
    }
}

/// Block map from reduced DOFs to full DOFs: per node either the identity
/// (interior, d columns) or a d×(d/2) orthonormal boundary basis.
#[derive(Clone, Debug)]
pub enum NodeBlock {
    Full,
    Reduced(nalgebra::DMatrix<C64>),
}

/// The reduction operator P with orthonormal columns; A_red = P^H A P.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub d: usize,
    pub blocks: Vec<NodeBlock>,
    /// first reduced DOF of each node
    pub offsets: Vec<usize>,
    pub reduced_dim: usize,
    pub full_dim: usize,
}

impl Reduction {
    pub fn new(d: usize, blocks: Vec<NodeBlock>) -> Reduction {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0usize;
        for b in &blocks {
            offsets.push(acc);
            acc += match b {
                NodeBlock::Full => d,
                NodeBlock::Reduced(q) => q.ncols(),
            };
        }
        Reduction {
            d,
            full_dim: blocks.len() * d,
            blocks,
            offsets,
            reduced_dim: acc,
        }
    }

    pub fn node_width(&self, node: usize) -> usize {
        match &self.blocks[node] {
            NodeBlock::Full => self.d,
            NodeBlock::Reduced(q) => q.ncols(),
        }
    }

    /// x_full = P x_red.
    pub fn prolong(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.full_dim];
        for (node, block) in self.blocks.iter().enumerate() {
            let off = self.offsets[node];
            match block {
                NodeBlock::Full => {
                    out[node * self.d..(node + 1) * self.d]
                        .copy_from_slice(&x[off..off + self.d]);
                }
                NodeBlock::Reduced(q) => {
                    for a in 0..self.d {
                        let mut acc = C64::new(0.0, 0.0);
                        for c in 0..q.ncols() {
                            acc += q[(a, c)] * x[off + c];
                        }
                        out[node * self.d + a] = acc;
                    }
                }
            }
        }
        out
    }

    /// x_red = P^H x_full.
    pub fn restrict(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.reduced_dim];
        for (node, block) in self.blocks.iter().enumerate() {
            let off = self.offsets[node];
            match block {
                NodeBlock::Full => {
                    out[off..off + self.d]
                        .copy_from_slice(&x[node * self.d..(node + 1) * self.d]);
                }
                NodeBlock::Reduced(q) => {
                    for c in 0..q.ncols() {
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..self.d {
                            acc += q[(a, c)].conj() * x[node * self.d + a];
                        }
                        out[off + c] = acc;
                    }
                }
            }
        }
        out
    }

    /// P^H A P for a full-space operator assembled node-blockwise.
    pub fn sandwich(&self, a: &Csr) -> Csr {
        let d = self.d;
        let mut t: Vec<(u32, u32, C64)> = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows {
            let node_i = i / d;
            let comp_i = i % d;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k] as usize;
                let node_j = j / d;
                let comp_j = j % d;
                let v = a.values[k];
                match (&self.blocks[node_i], &self.blocks[node_j]) {
                    (NodeBlock::Full, NodeBlock::Full) => {
                        t.push((
                            (self.offsets[node_i] + comp_i) as u32,
                            (self.offsets[node_j] + comp_j) as u32,
                            v,
                        ));
                    }
                    (NodeBlock::Full, NodeBlock::Reduced(qj)) => {
                        for cj in 0..qj.ncols() {
                            t.push((
                                (self.offsets[node_i] + comp_i) as u32,
                                (self.offsets[node_j] + cj) as u32,
                                v * qj[(comp_j, cj)],
                            ));
                        }
                    }
                    (NodeBlock::Reduced(qi), NodeBlock::Full) => {
                        for ci in 0..qi.ncols() {
                            t.push((
                                (self.offsets[node_i] + ci) as u32,
                                (self.offsets[node_j] + comp_j) as u32,
                                qi[(comp_i, ci)].conj() * v,
                            ));
                        }
                    }
                    (NodeBlock::Reduced(qi), NodeBlock::Reduced(qj)) => {
                        for ci in 0..qi.ncols() {
                            let lv = qi[(comp_i, ci)].conj() * v;
                            for cj in 0..qj.ncols() {
                                t.push((
                                    (self.offsets[node_i] + ci) as u32,
                                    (self.offsets[node_j] + cj) as u32,
                                    lv * qj[(comp_j, cj)],
                                ));
                            }
                        }
                    }
                }
            }
        }
        Csr::from_triplets(self.reduced_dim, self.reduced_dim, t)
    }

    /// Reduced diagonal mass: boundaries carry the same per-node weight.
    pub fn reduce_mass(&self, node_mass: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.reduced_dim);
        for (node, block) in self.blocks.iter().enumerate() {
            let w = node_mass[node];
            let width = match block {
                NodeBlock::Full => self.d,
                NodeBlock::Reduced(q) => q.ncols(),
            };
            out.extend(std::iter::repeat(w).take(width));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplet_assembly_sums_duplicates() {
        let t = vec![
            (0u32, 1u32, c(1.0, 0.0)),
            (0, 1, c(0.5, 0.5)),
            (1, 0, c(2.0, 0.0)),
        ];
        let a = Csr::from_triplets(2, 2, t);
        assert_eq!(a.nnz(), 2);
        let y = a.apply(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((y[0] - c(1.5, 0.5)).norm() < 1e-15);
        assert!((y[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_and_hermiticity() {
        let t = vec![(0u32, 1u32, c(1.0, 2.0)), (1, 0, c(1.0, -2.0))];
        let a = Csr::from_triplets(2, 2, t);
        assert!(a.hermiticity_residual() < 1e-15);
        let t2 = vec![(0u32, 1u32, c(1.0, 2.0)), (1, 0, c(1.0, 2.0))];
        let b = Csr::from_triplets(2, 2, t2);
        assert!((b.hermiticity_residual() - 4.0).abs() < 1e-14);
        let s = b.symmetrize();
        assert!(s.hermiticity_residual() < 1e-15);
    }

    #[test]
    fn reduction_roundtrip() {
        use nalgebra::DMatrix;
        let q = DMatrix::from_column_slice(2, 1, &[c(0.6, 0.0), c(0.0, 0.8)]);
        let red = Reduction::new(2, vec![NodeBlock::Full, NodeBlock::Reduced(q)]);
        assert_eq!(red.reduced_dim, 3);
        let x = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let full = red.prolong(&x);
        let back = red.restrict(&full);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}

//! Sparse bag-constrained Dirac discretizations on tensor grids.
//!
//! The flat operator is assembled in summation-by-parts form: centered
//! differences in the interior, first-order one-sided rows at grid-line
//! endpoints, diagonal norm with halved endpoint weights. With the boundary
//! trace confined to the admissible eigenspace of ν·Γ (ν the mass-weighted
//! inward normal), the reduced matrix is Hermitian up to masking effects and
//! is explicitly symmetrized, with the pre-symmetrization residual recorded.
//!
//! Conformally flat metrics f²ξ enter through the symmetric weighting
//! A ↦ (f^(n-1) A + A f^(n-1))/2 with mass weights f^n, which realizes
//! f^(-(n+1)/2) ∘ D_ξ ∘ f^((n-1)/2) against the weighted inner product and
//! scales exactly as 1/c for constant f = c.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::clifford::CliffordRep;
use crate::sparse::{Csr, NodeBlock, Reduction};
use crate::Sign;

#[derive(Debug, thiserror::Error)]
pub enum DiracError {
    #[error("grid too coarse: direction {dir} has {count} nodes, need at least 3")]
    TooCoarse { dir: usize, count: usize },
    #[error("conformal factor must be positive, got {value} at node {node}")]
    NonPositiveFactor { node: usize, value: f64 },
    #[error("conformal Laplacian requires n >= 3, got n = {0}")]
    LaplacianDimension(usize),
    #[error("matrix has no constraint applied")]
    NotReduced,
}

/// Domain shapes: tensor boxes over the half-space and the full disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum GridShape {
    /// x ∈ [-half_width, half_width]^(n-1), t ∈ [0, height].
    HalfBox { half_width: f64, height: f64 },
    /// n = 2 only: the full disk of given radius (staircase mask).
    Disk { radius: f64 },
}

/// Classification of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeClass {
    Interior,
    /// on the physical boundary t = 0 of a half-space box
    Physical,
    /// on a truncation face or the disk staircase
    Truncation,
}

/// Uniform tensor grid with masking.
#[derive(Clone, Debug)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub shape: GridShape,
    pub nodes: Vec<[i64; 3]>,
    index: HashMap<[i64; 3], u32>,
}

impl Grid {
    pub fn half_box(n: usize, h: f64, half_width: f64, height: f64) -> Result<Grid, DiracError> {
        let kx = (half_width / h).round() as i64;
        let kt = (height / h).round() as i64;
        if 2 * kx + 1 < 3 {
            return Err(DiracError::TooCoarse { dir: 0, count: (2 * kx + 1) as usize });
        }
        if kt + 1 < 3 {
            return Err(DiracError::TooCoarse { dir: n - 1, count: (kt + 1) as usize });
        }
        let mut nodes = Vec::new();
        match n {
            2 => {
                for ix in -kx..=kx {
                    for it in 0..=kt {
                        nodes.push([ix, it, 0]);
                    }
                }
            }
            3 => {
                for ix in -kx..=kx {
                    for iy in -kx..=kx {
                        for it in 0..=kt {
                            nodes.push([ix, iy, it]);
                        }
                    }
                }
            }
            _ => panic!("grids support n in {{2, 3}}"),
        }
        Ok(Grid::finish(n, h, GridShape::HalfBox { half_width, height }, nodes))
    }

    pub fn disk(h: f64, radius: f64) -> Result<Grid, DiracError> {
        let k = (radius / h).floor() as i64;
        if 2 * k + 1 < 3 {
            return Err(DiracError::TooCoarse { dir: 0, count: (2 * k + 1) as usize });
        }
        let r2 = radius * radius + 1e-12;
        let mut nodes = Vec::new();
        for ix in -k..=k {
            for it in -k..=k {
                let x = ix as f64 * h;
                let t = it as f64 * h;
                if x * x + t * t <= r2 {
                    nodes.push([ix, it, 0]);
                }
            }
        }
        Ok(Grid::finish(2, h, GridShape::Disk { radius }, nodes))
    }

    fn finish(n: usize, h: f64, shape: GridShape, nodes: Vec<[i64; 3]>) -> Grid {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, p)| (*p, i as u32))
            .collect();
        Grid { n, h, shape, nodes, index }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|d| self.nodes[i][d] as f64 * self.h).collect()
    }

    pub fn neighbor(&self, i: usize, dir: usize, step: i64) -> Option<usize> {
        let mut p = self.nodes[i];
        p[dir] += step;
        self.index.get(&p).map(|&j| j as usize)
    }

    /// 1-D norm weight in direction `dir` (1/2 at grid-line endpoints).
    pub fn line_weight(&self, i: usize, dir: usize) -> f64 {
        let lo = self.neighbor(i, dir, -1).is_none();
        let hi = self.neighbor(i, dir, 1).is_none();
        if lo || hi {
            0.5
        } else {
            1.0
        }
    }

    /// Diagonal-norm volume weight h^n Π_d w_d.
    pub fn node_weight(&self, i: usize) -> f64 {
        (0..self.n).fold(1.0, |acc, d| acc * self.h * self.line_weight(i, d))
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        (0..self.n).any(|d| {
            self.neighbor(i, d, -1).is_none() || self.neighbor(i, d, 1).is_none()
        })
    }

    pub fn classify(&self, i: usize) -> NodeClass {
        if !self.is_boundary(i) {
            return NodeClass::Interior;
        }
        match self.shape {
            GridShape::HalfBox { .. } => {
                if self.nodes[i][self.n - 1] == 0 {
                    NodeClass::Physical
                } else {
                    NodeClass::Truncation
                }
            }
            GridShape::Disk { .. } => NodeClass::Truncation,
        }
    }

    /// Mass-weighted inward normal at a boundary node (zero for interior).
    pub fn weighted_normal(&self, i: usize) -> Vec<f64> {
        let mut nu = vec![0.0; self.n];
        let mass = self.node_weight(i);
        for d in 0..self.n {
            let tw = mass / (self.h * self.line_weight(i, d));
            if self.neighbor(i, d, -1).is_none() {
                nu[d] += tw;
            }
            if self.neighbor(i, d, 1).is_none() {
                nu[d] -= tw;
            }
        }
        nu
    }
}

/// Assembled (possibly reduced) Dirac matrix with its diagonal mass.
#[derive(Clone)]
pub struct DiracMatrix {
    pub op: Csr,
    /// per-node volume weights (× f^n for conformal models)
    pub node_mass: Vec<f64>,
    pub d: usize,
    pub n: usize,
    pub h: f64,
    pub sign: Option<Sign>,
    pub reduction: Option<Reduction>,
    /// Hermiticity residual of the reduced matrix before symmetrization
    pub sym_residual: f64,
    pub model: String,
}

impl DiracMatrix {
    pub fn reduced_mass(&self) -> Result<Vec<f64>, DiracError> {
        let red = self.reduction.as_ref().ok_or(DiracError::NotReduced)?;
        Ok(red.reduce_mass(&self.node_mass))
    }

    /// Apply the operator in field form: M^{-1} A x over full DOFs
    /// (unreduced matrices only).
    pub fn apply_field(&self, x: &[C64]) -> Vec<C64> {
        assert!(self.reduction.is_none(), "field application expects the unreduced operator");
        let mut y = self.op.apply(x);
        for (node, m) in self.node_mass.iter().enumerate() {
            for c in 0..self.d {
                y[node * self.d + c] /= C64::new(*m, 0.0);
            }
        }
        y
    }
}

/// Σ_d γ_d ⊗ (H_trans Q_d) in volume-weighted SBP form, unreduced.
pub fn assemble_flat(rep: &CliffordRep, grid: &Grid) -> Result<DiracMatrix, DiracError> {
    assemble_weighted(rep, grid, None)
}

fn assemble_weighted(
    rep: &CliffordRep,
    grid: &Grid,
    factor: Option<&[f64]>,
) -> Result<DiracMatrix, DiracError> {
    let d = rep.d;
    let nn = grid.num_nodes();
    let mut trip: Vec<(u32, u32, C64)> = Vec::with_capacity(nn * d * 2 * grid.n);
    let mut push_block = |i: usize, j: usize, dir: usize, scale: f64| {
        let g = &rep.gammas[dir];
        for a in 0..d {
            for b in 0..d {
                let v = g[(a, b)];
                if v != C64::new(0.0, 0.0) {
                    trip.push((
                        (i * d + a) as u32,
                        (j * d + b) as u32,
                        v * C64::new(scale, 0.0),
                    ));
                }
            }
        }
    };
    for i in 0..nn {
        let mass = grid.node_weight(i);
        for dir in 0..grid.n {
            let tw = mass / (grid.h * grid.line_weight(i, dir));
            // pair-average conformal weight is applied after assembly
            let lo = grid.neighbor(i, dir, -1);
            let hi = grid.neighbor(i, dir, 1);
            if let Some(j) = lo {
                push_block(i, j, dir, -0.5 * tw);
            }
            if let Some(j) = hi {
                push_block(i, j, dir, 0.5 * tw);
            }
            if lo.is_none() && hi.is_some() {
                push_block(i, i, dir, -0.5 * tw);
            }
            if hi.is_none() && lo.is_some() {
                push_block(i, i, dir, 0.5 * tw);
            }
        }
    }
    let mut op = Csr::from_triplets(nn * d, nn * d, trip);
    let mut node_mass: Vec<f64> = (0..nn).map(|i| grid.node_weight(i)).collect();
    if let Some(f) = factor {
        // A ↦ (F A + A F)/2 entry-wise, F = diag(f^(n-1)); mass ↦ f^n mass
        let pw: Vec<f64> = f.iter().map(|v| v.powi(grid.n as i32 - 1)).collect();
        for i in 0..op.nrows {
            let fi = pw[i / d];
            for k in op.row_ptr[i]..op.row_ptr[i + 1] {
                let fj = pw[op.col_idx[k] as usize / d];
                op.values[k] *= C64::new(0.5 * (fi + fj), 0.0);
            }
        }
        for (m, fv) in node_mass.iter_mut().zip(f) {
            *m *= fv.powi(grid.n as i32);
        }
    }
    Ok(DiracMatrix {
        op,
        node_mass,
        d,
        n: grid.n,
        h: grid.h,
        sign: None,
        reduction: None,
        sym_residual: 0.0,
        model: if factor.is_some() { "conformal".into() } else { "flat".into() },
    })
}

/// Optional chirality-compatible damping term
/// c h³ Σ_d (L_dᵀ H L_d) ⊗ (Γ γ_d); splits spurious doubler copies for
/// inspection while perturbing smooth modes at O(h³). Off by default.
pub fn add_chiral_damping(rep: &CliffordRep, grid: &Grid, dm: &mut DiracMatrix, c: f64) {
    let d = rep.d;
    let nn = grid.num_nodes();
    // per direction: rows of L are interior second differences
    let mut trip: Vec<(u32, u32, C64)> = Vec::new();
    for dir in 0..grid.n {
        let gg = &rep.chirality * &rep.gammas[dir];
        // build L^T H L via explicit row list
        let mut lrows: Vec<(usize, [usize; 3], [f64; 3])> = Vec::new();
        for i in 0..nn {
            if let (Some(lo), Some(hi)) = (grid.neighbor(i, dir, -1), grid.neighbor(i, dir, 1)) {
                let s = 1.0 / (grid.h * grid.h);
                lrows.push((i, [lo, i, hi], [s, -2.0 * s, s]));
            }
        }
        for (row, cols, vals) in &lrows {
            let w = dm.node_mass[*row] * c * grid.h.powi(3);
            for (ca, va) in cols.iter().zip(vals) {
                for (cb, vb) in cols.iter().zip(vals) {
                    let scale = w * va * vb;
                    for a in 0..d {
                        for b in 0..d {
                            let g = gg[(a, b)];
                            if g != C64::new(0.0, 0.0) {
                                trip.push((
                                    (ca * d + a) as u32,
                                    (cb * d + b) as u32,
                                    g * C64::new(scale, 0.0),
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    let damp = Csr::from_triplets(nn * d, nn * d, trip);
    dm.op = dm.op.add(&damp);
}

/// Confine boundary traces to the admissible eigenspace of ν·Γ with the
/// mass-weighted inward normal; returns the symmetrized reduced matrix.
pub fn apply_chiral_bc(
    rep: &CliffordRep,
    grid: &Grid,
    dm: &DiracMatrix,
    sign: Sign,
) -> Result<DiracMatrix, DiracError> {
    let d = rep.d;
    let nn = grid.num_nodes();
    let mut blocks = Vec::with_capacity(nn);
    for i in 0..nn {
        let nu = grid.weighted_normal(i);
        let norm: f64 = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            blocks.push(NodeBlock::Full);
        } else {
            let unit: Vec<f64> = nu.iter().map(|x| x / norm).collect();
            let q = rep
                .admissible_basis(&unit, sign)
                .expect("unit normal by construction");
            blocks.push(NodeBlock::Reduced(q));
        }
    }
    let red = Reduction::new(d, blocks);
    let reduced = red.sandwich(&dm.op);
    let sym_residual = reduced.hermiticity_residual();
    let op = reduced.symmetrize();
    Ok(DiracMatrix {
        op,
        node_mass: dm.node_mass.clone(),
        d,
        n: dm.n,
        h: dm.h,
        sign: Some(sign),
        reduction: Some(red),
        sym_residual,
        model: dm.model.clone(),
    })
}

/// Conformal Dirac pencil for the metric f²ξ, bag constraint applied.
pub fn assemble_conformal<F>(
    rep: &CliffordRep,
    grid: &Grid,
    f: F,
    sign: Sign,
) -> Result<DiracMatrix, DiracError>
where
    F: Fn(&[f64]) -> f64,
{
    let raw = assemble_conformal_raw(rep, grid, f)?;
    apply_chiral_bc(rep, grid, &raw, sign)
}

/// Unreduced conformal operator (used by the covariance check).
pub fn assemble_conformal_raw<F>(
    rep: &CliffordRep,
    grid: &Grid,
    f: F,
) -> Result<DiracMatrix, DiracError>
where
    F: Fn(&[f64]) -> f64,
{
    let nn = grid.num_nodes();
    let mut fv = Vec::with_capacity(nn);
    for i in 0..nn {
        let v = f(&grid.position(i));
        if v <= 0.0 {
            return Err(DiracError::NonPositiveFactor { node: i, value: v });
        }
        fv.push(v);
    }
    assemble_weighted(rep, grid, Some(&fv))
}

/// ‖D_(f²ξ)(f^(-(n-1)/2) ψ) - f^(-(n+1)/2) D_ξ ψ‖_∞ over interior nodes,
/// both sides evaluated with the assembled discrete operators.
pub fn covariance_residual<F, P>(
    rep: &CliffordRep,
    grid: &Grid,
    f: F,
    psi: P,
) -> Result<f64, DiracError>
where
    F: Fn(&[f64]) -> f64 + Copy,
    P: Fn(&[f64]) -> DVector<C64>,
{
    let d = rep.d;
    let nn = grid.num_nodes();
    let flat = assemble_flat(rep, grid)?;
    let conf = assemble_conformal_raw(rep, grid, f)?;
    let mut psiv = vec![C64::new(0.0, 0.0); nn * d];
    let mut trans = vec![C64::new(0.0, 0.0); nn * d];
    let mut fvals = vec![0.0; nn];
    for i in 0..nn {
        let pos = grid.position(i);
        let fi = f(&pos);
        fvals[i] = fi;
        let s = psi(&pos);
        let w = fi.powf(-(grid.n as f64 - 1.0) / 2.0);
        for a in 0..d {
            psiv[i * d + a] = s[a];
            trans[i * d + a] = s[a] * C64::new(w, 0.0);
        }
    }
    let lhs = conf.apply_field(&trans);
    let rhs_flat = flat.apply_field(&psiv);
    let mut res: f64 = 0.0;
    for i in 0..nn {
        if grid.is_boundary(i) {
            continue;
        }
        let w = fvals[i].powf(-(grid.n as f64 + 1.0) / 2.0);
        let mut local = 0.0f64;
        for a in 0..d {
            local += (lhs[i * d + a] - rhs_flat[i * d + a] * C64::new(w, 0.0)).norm_sqr();
        }
        res = res.max(local.sqrt());
    }
    Ok(res)
}

/// The Laplacian model used by the Hijazi cross-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LaplacianModel {
    Flat,
    Hemisphere,
    /// hemisphere factor perturbed by (1 + 0.1 e^(-r²))
    HemispherePerturbed,
}

impl LaplacianModel {
    pub fn factor(&self, pos: &[f64]) -> f64 {
        let r2: f64 = pos.iter().map(|x| x * x).sum();
        match self {
            LaplacianModel::Flat => 1.0,
            LaplacianModel::Hemisphere => 2.0 / (1.0 + r2),
            LaplacianModel::HemispherePerturbed => {
                2.0 / (1.0 + r2) * (1.0 + 0.1 * (-r2).exp())
            }
        }
    }

    /// Scalar curvature of f²ξ at a point: for f = e^φ radial,
    /// R = e^(-2φ) (-2(n-1) Δφ - (n-1)(n-2) |∇φ|²).
    pub fn scalar_curvature(&self, n: usize, pos: &[f64]) -> f64 {
        let r2: f64 = pos.iter().map(|x| x * x).sum();
        let r = r2.sqrt();
        match self {
            LaplacianModel::Flat => 0.0,
            LaplacianModel::Hemisphere => (n * (n - 1)) as f64,
            LaplacianModel::HemispherePerturbed => {
                // φ(r) = ln 2 - ln(1+r²) + ln(1 + 0.1 e^{-r²})
                let (dphi, ddphi) = perturbed_phi_derivatives(r);
                let lap = if r < 1e-9 {
                    n as f64 * ddphi
                } else {
                    ddphi + (n as f64 - 1.0) * dphi / r
                };
                let f = self.factor(pos);
                (-2.0 * (n as f64 - 1.0) * lap
                    - ((n - 1) * (n - 2)) as f64 * dphi * dphi)
                    / (f * f)
            }
        }
    }
}

/// (φ'(r), φ''(r)) for φ = -ln(1+r²) + ln(1+0.1 e^{-r²}) (+ const).
fn perturbed_phi_derivatives(r: f64) -> (f64, f64) {
    let r2 = r * r;
    let a = 1.0 + r2;
    let e = 0.1 * (-r2).exp();
    let b = 1.0 + e;
    let dphi = -2.0 * r / a - 2.0 * r * e / b;
    let ddphi = -2.0 / a + 4.0 * r2 / (a * a)
        + (-2.0 * e + 4.0 * r2 * e) / b
        - 4.0 * r2 * e * e / (b * b);
    (dphi, ddphi)
}

/// Symmetric pencil (stiffness + curvature, mass) for the conformal
/// Laplacian L = (4(n-1)/(n-2)) Δ + R with the natural (Robin, here
/// Neumann since H = 0 for the radial factors) boundary condition.
pub fn assemble_conformal_laplacian(
    grid: &Grid,
    model: LaplacianModel,
) -> Result<(Csr, Vec<f64>), DiracError> {
    let n = grid.n;
    if n < 3 {
        return Err(DiracError::LaplacianDimension(n));
    }
    let nn = grid.num_nodes();
    let coef = 4.0 * (n as f64 - 1.0) / (n as f64 - 2.0);
    let mut trip: Vec<(u32, u32, C64)> = Vec::new();
    for i in 0..nn {
        let pos_i = grid.position(i);
        for dir in 0..n {
            if let Some(j) = grid.neighbor(i, dir, 1) {
                let pos_j = grid.position(j);
                let mid: Vec<f64> = pos_i
                    .iter()
                    .zip(&pos_j)
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let fm = model.factor(&mid);
                // transverse measure: average of the two nodes' weights
                let wt = 0.5
                    * (grid.node_weight(i) / (grid.h * grid.line_weight(i, dir))
                        + grid.node_weight(j) / (grid.h * grid.line_weight(j, dir)));
                let w = coef * fm.powi(n as i32 - 2) * wt / grid.h;
                let c = C64::new(w, 0.0);
                trip.push((i as u32, i as u32, c));
                trip.push((j as u32, j as u32, c));
                trip.push((i as u32, j as u32, -c));
                trip.push((j as u32, i as u32, -c));
            }
        }
        // curvature term R f^n, volume-weighted
        let fi = model.factor(&pos_i);
        let r = model.scalar_curvature(n, &pos_i);
        let w = r * fi.powi(n as i32) * grid.node_weight(i);
        if w != 0.0 {
            trip.push((i as u32, i as u32, C64::new(w, 0.0)));
        }
    }
    let k = Csr::from_triplets(nn, nn, trip);
    let mass: Vec<f64> = (0..nn)
        .map(|i| model.factor(&grid.position(i)).powi(n as i32) * grid.node_weight(i))
        .collect();
    Ok((k, mass))
}

/// Discrete volume Σ f^n h^n over the grid.
pub fn discrete_volume(dm: &DiracMatrix) -> f64 {
    dm.node_mass.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{killing_spinor, ClosedFormSpinor, HalfSpacePoint};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_spinor_vanishes_interior() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.1, 1.0, 1.0).unwrap();
        let dm = assemble_flat(&rep, &grid).unwrap();
        let mut x = vec![c(0.0, 0.0); grid.num_nodes() * rep.d];
        for i in 0..grid.num_nodes() {
            x[i * rep.d] = c(1.0, 0.3);
            x[i * rep.d + 1] = c(-0.2, 0.1);
        }
        let y = dm.apply_field(&x);
        for i in 0..grid.num_nodes() {
            if grid.is_boundary(i) {
                continue;
            }
            for a in 0..rep.d {
                assert!(y[i * rep.d + a].norm() < 1e-13);
            }
        }
    }

    #[test]
    fn plane_wave_symbol() {
        // interior rows reproduce i Σ sin(k_d h)/h γ_d exactly
        let rep = CliffordRep::build(2).unwrap();
        let h = 0.1;
        let grid = Grid::half_box(2, h, 1.0, 1.0).unwrap();
        let dm = assemble_flat(&rep, &grid).unwrap();
        let k = [1.7, -0.9];
        let s = DVector::from_vec(vec![c(0.8, 0.1), c(-0.3, 0.55)]);
        let mut x = vec![c(0.0, 0.0); grid.num_nodes() * rep.d];
        for i in 0..grid.num_nodes() {
            let pos = grid.position(i);
            let phase = C64::new(0.0, k[0] * pos[0] + k[1] * pos[1]).exp();
            for a in 0..rep.d {
                x[i * rep.d + a] = s[a] * phase;
            }
        }
        let y = dm.apply_field(&x);
        let mut symbol = DVector::<C64>::zeros(rep.d);
        for dir in 0..2 {
            let coeff = C64::new(0.0, (k[dir] * h).sin() / h);
            symbol += &rep.gammas[dir] * &s * coeff;
        }
        for i in 0..grid.num_nodes() {
            if grid.is_boundary(i) {
                continue;
            }
            let pos = grid.position(i);
            let phase = C64::new(0.0, k[0] * pos[0] + k[1] * pos[1]).exp();
            for a in 0..rep.d {
                assert!(
                    (y[i * rep.d + a] - symbol[a] * phase).norm() < 1e-12,
                    "node {i} comp {a}"
                );
            }
        }
    }

    #[test]
    fn interior_dirac_on_killing_converges() {
        // ‖D_h ψ+ - f ψ+‖_∞ (interior) = O(h²): observed order ≥ 1.8
        let rep = CliffordRep::build(2).unwrap();
        let field = ClosedFormSpinor::killing(Sign::Plus);
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let grid = Grid::half_box(2, h, 1.0, 1.0).unwrap();
            let dm = assemble_flat(&rep, &grid).unwrap();
            let mut x = vec![c(0.0, 0.0); grid.num_nodes() * rep.d];
            for i in 0..grid.num_nodes() {
                let v = field.eval(&rep, &HalfSpacePoint::new(grid.position(i)));
                for a in 0..rep.d {
                    x[i * rep.d + a] = v[a];
                }
            }
            let y = dm.apply_field(&x);
            let mut err = 0.0f64;
            for i in 0..grid.num_nodes() {
                if grid.is_boundary(i) {
                    continue;
                }
                let pos = grid.position(i);
                let f = 2.0 / (1.0 + pos.iter().map(|v| v * v).sum::<f64>());
                let mut local = 0.0;
                for a in 0..rep.d {
                    local += (y[i * rep.d + a] - x[i * rep.d + a] * c(f, 0.0)).norm_sqr();
                }
                err = err.max(local.sqrt());
            }
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.8, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn box_reduction_exactly_hermitian() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.1, 1.0, 1.0).unwrap();
        let flat = assemble_flat(&rep, &grid).unwrap();
        let red = apply_chiral_bc(&rep, &grid, &flat, Sign::Minus).unwrap();
        assert!(red.sym_residual < 1e-12, "sym residual {}", red.sym_residual);
        assert!(red.op.hermiticity_residual() < 1e-12);
        // dimension = interior·d + boundary·(d/2)
        let nb = (0..grid.num_nodes()).filter(|&i| grid.is_boundary(i)).count();
        let ni = grid.num_nodes() - nb;
        assert_eq!(
            red.reduction.as_ref().unwrap().reduced_dim,
            ni * rep.d + nb * rep.d / 2
        );
    }

    #[test]
    fn killing_boundary_values_admissible() {
        // ψ+ restricted to t=0 lies exactly in the B^- admissible subspace:
        // restriction then prolongation reproduces it
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.1, 1.0, 1.0).unwrap();
        let flat = assemble_flat(&rep, &grid).unwrap();
        let red = apply_chiral_bc(&rep, &grid, &flat, Sign::Minus).unwrap();
        let r = red.reduction.as_ref().unwrap();
        let mut x = vec![c(0.0, 0.0); grid.num_nodes() * rep.d];
        for i in 0..grid.num_nodes() {
            // restrict attention to physical-boundary values: elsewhere zero
            if grid.classify(i) == NodeClass::Physical && !nonphysical_corner(&grid, i) {
                let v = killing_spinor(&rep, Sign::Plus, &HalfSpacePoint::new(grid.position(i)));
                for a in 0..rep.d {
                    x[i * rep.d + a] = v[a];
                }
            }
        }
        let back = r.prolong(&r.restrict(&x));
        let diff: f64 = x
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-12, "projection changed admissible data by {diff}");
    }

    fn nonphysical_corner(grid: &Grid, i: usize) -> bool {
        // nodes where a truncation face meets t=0 carry a mixed normal
        (0..grid.n - 1).any(|d| {
            grid.neighbor(i, d, -1).is_none() || grid.neighbor(i, d, 1).is_none()
        })
    }

    #[test]
    fn random_boundary_spinor_projected() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.2, 1.0, 1.0).unwrap();
        let flat = assemble_flat(&rep, &grid).unwrap();
        let red = apply_chiral_bc(&rep, &grid, &flat, Sign::Minus).unwrap();
        let r = red.reduction.as_ref().unwrap();
        // after restriction+prolongation every boundary value satisfies ν·Γφ=φ
        let mut x = vec![c(0.0, 0.0); grid.num_nodes() * rep.d];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for v in x.iter_mut() {
            *v = c(rand(), rand());
        }
        let proj = r.prolong(&r.restrict(&x));
        for i in 0..grid.num_nodes() {
            if !grid.is_boundary(i) {
                continue;
            }
            let nu = grid.weighted_normal(i);
            let norm: f64 = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            let unit: Vec<f64> = nu.iter().map(|v| v / norm).collect();
            let ng = rep.normal_chirality(&unit).unwrap();
            let phi = DVector::from_iterator(rep.d, (0..rep.d).map(|a| proj[i * rep.d + a]));
            assert!((&ng * &phi - &phi).norm() < 1e-12);
        }
    }

    #[test]
    fn conformal_constant_equals_scaled_flat() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.1, 1.0, 1.0).unwrap();
        let cval = 1.7;
        let flat = assemble_flat(&rep, &grid).unwrap();
        let conf = assemble_conformal_raw(&rep, &grid, |_| cval).unwrap();
        // A_c = c^{n-1} A_flat, M_c = c^n M: pencil eigenvalues scale by 1/c
        for k in 0..flat.op.nnz() {
            let expect = flat.op.values[k] * c(cval.powi(grid.n as i32 - 1), 0.0);
            assert!((conf.op.values[k] - expect).norm() < 1e-12);
        }
        for (a, b) in conf.node_mass.iter().zip(&flat.node_mass) {
            assert!((a - b * cval.powi(grid.n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_residual_zero_for_unit_factor() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.125, 1.0, 1.0).unwrap();
        let psi = |pos: &[f64]| {
            DVector::from_vec(vec![
                c(pos[0] * pos[0] - 0.5 * pos[1], 0.2 * pos[0] * pos[1]),
                c(0.3 - pos[1] * pos[1], pos[0]),
            ])
        };
        let r = covariance_residual(&rep, &grid, |_| 1.0, psi).unwrap();
        assert!(r < 1e-13, "residual {r}");
    }

    #[test]
    fn covariance_residual_second_order() {
        let rep = CliffordRep::build(2).unwrap();
        let f = |pos: &[f64]| 1.5 + 0.2 * pos[0] + 0.1 * pos[1] + 0.07 * pos[0] * pos[1];
        let psi = |pos: &[f64]| {
            let (x, t) = (pos[0], pos[1]);
            DVector::from_vec(vec![
                c(x * x * t - 0.5 * t + 0.3, 0.2 * x * t),
                c(0.3 * x - t * t * x, x + 0.1 * t * t),
            ])
        };
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let grid = Grid::half_box(2, h, 1.0, 1.0).unwrap();
            errs.push(covariance_residual(&rep, &grid, f, psi).unwrap());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.8, "order {order} from {errs:?}");
    }

    #[test]
    fn laplacian_flat_neumann_kernel() {
        let grid = Grid::half_box(3, 0.25, 1.0, 1.0).unwrap();
        let (k, _mass) = assemble_conformal_laplacian(&grid, LaplacianModel::Flat).unwrap();
        // constant function lies exactly in the kernel
        let ones = vec![c(1.0, 0.0); grid.num_nodes()];
        let y = k.apply(&ones);
        let norm: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!(norm < 1e-12);
        assert!(k.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn laplacian_hemisphere_constant_eigenfunction() {
        let grid = Grid::half_box(3, 0.25, 1.0, 1.0).unwrap();
        let (k, mass) =
            assemble_conformal_laplacian(&grid, LaplacianModel::Hemisphere).unwrap();
        // L·1 = R·1 = n(n-1)·1 exactly in the weighted sense
        let ones = vec![c(1.0, 0.0); grid.num_nodes()];
        let y = k.apply(&ones);
        for (i, v) in y.iter().enumerate() {
            assert!((v - c(6.0 * mass[i], 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn laplacian_rejects_n2() {
        let grid = Grid::half_box(2, 0.25, 1.0, 1.0).unwrap();
        assert!(matches!(
            assemble_conformal_laplacian(&grid, LaplacianModel::Flat),
            Err(DiracError::LaplacianDimension(2))
        ));
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(Grid::half_box(2, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn nonpositive_factor_rejected() {
        let rep = CliffordRep::build(2).unwrap();
        let grid = Grid::half_box(2, 0.25, 1.0, 1.0).unwrap();
        assert!(assemble_conformal_raw(&rep, &grid, |p| 0.5 - p[1]).is_err());
    }
}

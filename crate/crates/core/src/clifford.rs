//! Concrete complex Clifford algebra representations with a chirality
//! operator, and the chiral bag projectors built from them.
//!
//! Conventions: the generators are skew-Hermitian and unitary with
//! γ_i γ_j + γ_j γ_i = -2 δ_ij, so Clifford multiplication by a unit vector
//! squares to -Id. The chirality operator Γ is Hermitian, involutive and
//! anticommutes with every γ_i. For even n the representation is the fixed
//! recursive tensor-product construction; for odd n the spinors live on the
//! (n+1)-dimensional algebra's space and Γ := i γ_{n+1}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::Sign;

#[derive(Debug, thiserror::Error)]
pub enum CliffordError {
    #[error("ambient dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("vector has {got} components, representation expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("normal vector has norm {0}, expected a unit vector")]
    NotUnit(f64),
}

/// A dimension-n gamma-matrix representation on C^d with chirality operator.
#[derive(Clone, Debug)]
pub struct CliffordRep {
    pub n: usize,
    pub d: usize,
    pub gammas: Vec<DMatrix<C64>>,
    pub chirality: DMatrix<C64>,
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

fn pauli() -> [DMatrix<C64>; 3] {
    let i = C64::new(0.0, 1.0);
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    [
        DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        DMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

/// Generators for even ambient dimension, d = 2^(n/2): the recursion
/// γ_j^(n+2) = γ_j^(n) ⊗ σ_3 with new generators Id ⊗ iσ_1, Id ⊗ iσ_2.
fn even_generators(n: usize) -> Vec<DMatrix<C64>> {
    let [s1, s2, s3] = pauli();
    let i = C64::new(0.0, 1.0);
    let mut gammas = vec![s1.map(|v| i * v), s2.map(|v| i * v)];
    let mut m = 2;
    while m < n {
        let d = gammas[0].nrows();
        let id = DMatrix::<C64>::identity(d, d);
        let mut next: Vec<DMatrix<C64>> = gammas.iter().map(|g| kron(g, &s3)).collect();
        next.push(kron(&id, &s1.map(|v| i * v)));
        next.push(kron(&id, &s2.map(|v| i * v)));
        gammas = next;
        m += 2;
    }
    gammas
}

impl CliffordRep {
    /// Deterministic construction for any n ≥ 2.
    pub fn build(n: usize) -> Result<Self, CliffordError> {
        if n < 2 {
            return Err(CliffordError::DimensionTooSmall(n));
        }
        let i = C64::new(0.0, 1.0);
        if n % 2 == 0 {
            let gammas = even_generators(n);
            let d = gammas[0].nrows();
            // Γ = i^(n/2) γ_1 ··· γ_n
            let mut chi = DMatrix::<C64>::identity(d, d);
            for g in &gammas {
                chi = chi * g;
            }
            chi *= i.powu((n / 2) as u32);
            Ok(CliffordRep { n, d, gammas, chirality: chi })
        } else {
            let mut gammas = even_generators(n + 1);
            let last = gammas.pop().expect("n+1 >= 3 generators");
            // keep the first n generators, Γ := i γ_{n+1}
            while gammas.len() > n {
                gammas.pop();
            }
            let d = gammas[0].nrows();
            let chirality = last.map(|v| i * v);
            Ok(CliffordRep { n, d, gammas, chirality })
        }
    }

    /// Clifford multiplication (Σ v_i γ_i) s. `v` need not be unit.
    pub fn mul(&self, v: &[f64], s: &DVector<C64>) -> Result<DVector<C64>, CliffordError> {
        if v.len() != self.n {
            return Err(CliffordError::DimensionMismatch { got: v.len(), expected: self.n });
        }
        if s.len() != self.d {
            return Err(CliffordError::DimensionMismatch { got: s.len(), expected: self.d });
        }
        let mut out = DVector::<C64>::zeros(self.d);
        for (vi, g) in v.iter().zip(&self.gammas) {
            if *vi != 0.0 {
                out += g * s * C64::new(*vi, 0.0);
            }
        }
        Ok(out)
    }

    /// Matrix of Clifford multiplication by `v`.
    pub fn mul_matrix(&self, v: &[f64]) -> DMatrix<C64> {
        let mut out = DMatrix::<C64>::zeros(self.d, self.d);
        for (vi, g) in v.iter().zip(&self.gammas) {
            if *vi != 0.0 {
                out += g * C64::new(*vi, 0.0);
            }
        }
        out
    }

    /// ν·Γ for a unit vector ν (Hermitian involution on C^d).
    pub fn normal_chirality(&self, nu: &[f64]) -> Result<DMatrix<C64>, CliffordError> {
        let norm: f64 = nu.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CliffordError::NotUnit(norm));
        }
        Ok(self.mul_matrix(nu) * &self.chirality)
    }

    /// Chiral bag projector B^± = (Id ± ν·Γ)/2.
    pub fn chiral_projector(&self, nu: &[f64], sign: Sign) -> Result<ChiralProjector, CliffordError> {
        let ng = self.normal_chirality(nu)?;
        let id = DMatrix::<C64>::identity(self.d, self.d);
        let matrix = (id + ng * C64::new(sign.factor(), 0.0)) * C64::new(0.5, 0.0);
        Ok(ChiralProjector { sign, matrix })
    }

    /// Orthonormal basis of the admissible boundary subspace for B^sign,
    /// i.e. the (-sign)-eigenspace of ν·Γ. Deterministic; d/2 columns.
    pub fn admissible_basis(&self, nu: &[f64], sign: Sign) -> Result<DMatrix<C64>, CliffordError> {
        let ng = self.normal_chirality(nu)?;
        let id = DMatrix::<C64>::identity(self.d, self.d);
        let eig = sign.admissible_eigenvalue();
        let proj = (id + ng * C64::new(eig, 0.0)) * C64::new(0.5, 0.0);
        Ok(orthonormal_range(&proj, self.d / 2))
    }

    /// Max residuals of all representation invariants.
    pub fn verify(&self) -> RelationReport {
        let d = self.d;
        let id = DMatrix::<C64>::identity(d, d);
        let mut anticommutator: f64 = 0.0;
        let mut unitary_skew: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let mut ac = &self.gammas[i] * &self.gammas[j] + &self.gammas[j] * &self.gammas[i];
                if i == j {
                    ac += &id * C64::new(2.0, 0.0);
                }
                anticommutator = anticommutator.max(op_norm(&ac));
            }
            let skew = self.gammas[i].adjoint() + &self.gammas[i];
            let unit = self.gammas[i].adjoint() * &self.gammas[i] - &id;
            unitary_skew = unitary_skew.max(op_norm(&skew)).max(op_norm(&unit));
        }
        let chirality_square = op_norm(&(&self.chirality * &self.chirality - &id));
        let chirality_hermitian = op_norm(&(self.chirality.adjoint() - &self.chirality));
        let mut chirality_anticommute: f64 = 0.0;
        for g in &self.gammas {
            let ac = &self.chirality * g + g * &self.chirality;
            chirality_anticommute = chirality_anticommute.max(op_norm(&ac));
        }
        let expected_d = if self.n % 2 == 0 {
            1usize << (self.n / 2)
        } else {
            1usize << ((self.n + 1) / 2)
        };
        RelationReport {
            n: self.n,
            d: self.d,
            dimension_ok: d == expected_d,
            anticommutator,
            unitary_skew,
            chirality_square,
            chirality_hermitian,
            chirality_anticommute,
        }
    }
}

/// Diagnostic report for the representation invariants.
#[derive(Clone, Debug, Serialize)]
pub struct RelationReport {
    pub n: usize,
    pub d: usize,
    pub dimension_ok: bool,
    pub anticommutator: f64,
    pub unitary_skew: f64,
    pub chirality_square: f64,
    pub chirality_hermitian: f64,
    pub chirality_anticommute: f64,
}

impl RelationReport {
    pub fn pass(&self) -> bool {
        self.dimension_ok
            && self.anticommutator < 1e-12
            && self.unitary_skew < 1e-12
            && self.chirality_square < 1e-12
            && self.chirality_hermitian < 1e-12
            && self.chirality_anticommute < 1e-12
    }

    pub fn max_residual(&self) -> f64 {
        self.anticommutator
            .max(self.unitary_skew)
            .max(self.chirality_square)
            .max(self.chirality_hermitian)
            .max(self.chirality_anticommute)
    }
}

/// The projector (Id ± ν·Γ)/2.
#[derive(Clone, Debug)]
pub struct ChiralProjector {
    pub sign: Sign,
    pub matrix: DMatrix<C64>,
}

impl ChiralProjector {
    pub fn apply(&self, s: &DVector<C64>) -> DVector<C64> {
        &self.matrix * s
    }

    /// Residuals of idempotency, Hermiticity and trace (= d/2).
    pub fn verify(&self) -> (f64, f64, f64) {
        let idem = op_norm(&(&self.matrix * &self.matrix - &self.matrix));
        let herm = op_norm(&(self.matrix.adjoint() - &self.matrix));
        let trace = self.matrix.diagonal().sum();
        let half = self.matrix.nrows() as f64 / 2.0;
        let trace_res = (trace - C64::new(half, 0.0)).norm();
        (idem, herm, trace_res)
    }
}

/// Frobenius norm (an upper bound on the operator norm at these sizes).
pub fn op_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis of the range of a Hermitian projector of known rank,
/// by norm-pivoted modified Gram-Schmidt on its columns.
fn orthonormal_range(proj: &DMatrix<C64>, rank: usize) -> DMatrix<C64> {
    let d = proj.nrows();
    let mut cols: Vec<DVector<C64>> = (0..d).map(|j| proj.column(j).into_owned()).collect();
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (best, _) = cols
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("projector rank deficient");
        let mut v = cols.swap_remove(best);
        let nrm = v.norm();
        assert!(nrm > 1e-12, "projector has rank below d/2");
        v /= C64::new(nrm, 0.0);
        for c in cols.iter_mut() {
            let coeff = v.dotc(c);
            *c -= &v * coeff;
        }
        basis.push(v);
    }
    DMatrix::from_columns(&basis)
}

//! Closed-form spinor fields on the half-space: the boundary-compatible
//! parallel spinor Φ_0, the Killing-type test spinors
//! ψ±(x) = f^(n/2)(x) (1 ∓ x)·Φ_0 / √2 with f = 2/(1+r²), the cutoff bump and
//! the concentrated family ψ̄_ε, together with their exact pointwise identities
//! and a finite-difference Dirac oracle.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::clifford::CliffordRep;
use crate::Sign;

/// A point (x, t) of the half-space, t ≥ 0 tangentially extended charts may
/// evaluate slightly below the boundary for stencil purposes.
#[derive(Clone, Debug)]
pub struct HalfSpacePoint {
    pub coords: Vec<f64>,
}

impl HalfSpacePoint {
    pub fn new(coords: Vec<f64>) -> Self {
        HalfSpacePoint { coords }
    }

    pub fn t(&self) -> f64 {
        *self.coords.last().expect("nonempty point")
    }

    pub fn r(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// f(x) = 2/(1+r²), the hemisphere conformal factor.
pub fn conformal_factor(p: &HalfSpacePoint) -> f64 {
    let r2: f64 = p.coords.iter().map(|x| x * x).sum();
    2.0 / (1.0 + r2)
}

/// Unit-norm constant spinor with ν·Γ Φ_0 = Φ_0 for ν = e_n, obtained by
/// projecting canonical seeds with (Id + ν·Γ)/2 and normalizing.
pub fn boundary_parallel_spinor(rep: &CliffordRep) -> DVector<C64> {
    let mut nu = vec![0.0; rep.n];
    nu[rep.n - 1] = 1.0;
    let proj = rep
        .chiral_projector(&nu, Sign::Plus)
        .expect("unit normal")
        .matrix;
    for seed in 0..rep.d {
        let mut e = DVector::<C64>::zeros(rep.d);
        e[seed] = C64::new(1.0, 0.0);
        let v = &proj * e;
        let nrm = v.norm();
        if nrm > 1e-8 {
            return v / C64::new(nrm, 0.0);
        }
    }
    unreachable!("projector of rank d/2 annihilates every canonical seed")
}

/// Which closed-form construction a field evaluator represents.
#[derive(Clone, Debug, PartialEq)]
pub enum SpinorKind {
    /// The constant spinor Φ_0.
    Parallel,
    /// ψ± with eigenvalue ±(n/2) f.
    Killing(Sign),
    /// ψ̄_ε(p) = η(p) ψ⁺(p/ε) with cutoff plateau δ.
    TestFamily { eps: f64, delta: f64 },
}

/// A closed-form spinor field, evaluated against a representation.
#[derive(Clone, Debug)]
pub struct ClosedFormSpinor {
    pub kind: SpinorKind,
}

impl ClosedFormSpinor {
    pub fn parallel() -> Self {
        ClosedFormSpinor { kind: SpinorKind::Parallel }
    }

    pub fn killing(sign: Sign) -> Self {
        ClosedFormSpinor { kind: SpinorKind::Killing(sign) }
    }

    pub fn test_family(eps: f64, delta: f64) -> Self {
        assert!(eps > 0.0 && eps <= delta && delta <= 1.0, "need 0 < eps <= delta <= 1");
        ClosedFormSpinor { kind: SpinorKind::TestFamily { eps, delta } }
    }

    pub fn eval(&self, rep: &CliffordRep, p: &HalfSpacePoint) -> DVector<C64> {
        match self.kind {
            SpinorKind::Parallel => boundary_parallel_spinor(rep),
            SpinorKind::Killing(sign) => killing_spinor(rep, sign, p),
            SpinorKind::TestFamily { eps, delta } => test_spinor_family(rep, eps, delta, p),
        }
    }
}

/// ψ±(p) = (1/√2) f^(n/2)(p) (Id ∓ p·) Φ_0.
pub fn killing_spinor(rep: &CliffordRep, sign: Sign, p: &HalfSpacePoint) -> DVector<C64> {
    let phi0 = boundary_parallel_spinor(rep);
    let f = conformal_factor(p);
    let scale = f.powf(rep.n as f64 / 2.0) / 2f64.sqrt();
    let xphi = rep.mul(&p.coords, &phi0).expect("dimensions match");
    (phi0 - xphi * C64::new(sign.factor(), 0.0)) * C64::new(scale, 0.0)
}

/// Smooth radial bump: 1 on r ≤ δ, 0 on r ≥ 2δ, quintic in between.
pub fn cutoff(r: f64, delta: f64) -> f64 {
    assert!(delta > 0.0);
    if r <= delta {
        1.0
    } else if r >= 2.0 * delta {
        0.0
    } else {
        let u = (r - delta) / delta;
        1.0 - (6.0 * u.powi(5) - 15.0 * u.powi(4) + 10.0 * u.powi(3))
    }
}

/// d/dr of the cutoff; |η'| ≤ 1.875/δ.
pub fn cutoff_derivative(r: f64, delta: f64) -> f64 {
    if r <= delta || r >= 2.0 * delta {
        0.0
    } else {
        let u = (r - delta) / delta;
        -(30.0 * u.powi(4) - 60.0 * u.powi(3) + 30.0 * u.powi(2)) / delta
    }
}

/// ψ̄_ε(p) = η(|p|) ψ⁺(p/ε).
pub fn test_spinor_family(rep: &CliffordRep, eps: f64, delta: f64, p: &HalfSpacePoint) -> DVector<C64> {
    let eta = cutoff(p.r(), delta);
    if eta == 0.0 {
        return DVector::zeros(rep.d);
    }
    let scaled = HalfSpacePoint::new(p.coords.iter().map(|x| x / eps).collect());
    killing_spinor(rep, Sign::Plus, &scaled) * C64::new(eta, 0.0)
}

/// Centered (or one-sided near the boundary) finite-difference approximation
/// of D_ξ field = Σ γ_i ∂_i field with O(h²) error.
pub fn dirac_fd<F>(rep: &CliffordRep, field: &F, p: &HalfSpacePoint, h: f64) -> DVector<C64>
where
    F: Fn(&HalfSpacePoint) -> DVector<C64>,
{
    assert!(h > 0.0);
    let n = rep.n;
    let mut out = DVector::<C64>::zeros(rep.d);
    for i in 0..n {
        let deriv = if i == n - 1 && p.t() < h {
            // one-sided second order: (-3 f(p) + 4 f(p+h) - f(p+2h)) / 2h
            let mut p1 = p.clone();
            p1.coords[i] += h;
            let mut p2 = p.clone();
            p2.coords[i] += 2.0 * h;
            (field(p) * C64::new(-3.0, 0.0) + field(&p1) * C64::new(4.0, 0.0) - field(&p2))
                / C64::new(2.0 * h, 0.0)
        } else {
            let mut pp = p.clone();
            pp.coords[i] += h;
            let mut pm = p.clone();
            pm.coords[i] -= h;
            (field(&pp) - field(&pm)) / C64::new(2.0 * h, 0.0)
        };
        out += rep.mul_matrix(&unit(n, i)) * deriv;
    }
    out
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Residual report for the Killing-spinor identities on a sample grid.
#[derive(Clone, Debug, Serialize)]
pub struct KillingReport {
    pub n: usize,
    pub sign: Sign,
    pub grid: Vec<usize>,
    pub h: f64,
    /// max |Dψ ∓ (n/2) f ψ| over the grid (finite-difference, O(h²))
    pub residual_pde: f64,
    /// max | |ψ|² - f^(n-1) |
    pub residual_norm: f64,
    /// max | |Dψ|² - (n²/4) f^(n+1) |, using the eigenrelation for Dψ
    pub residual_dnorm: f64,
    /// max |B^- ψ| over boundary points
    pub residual_bc: f64,
}

impl KillingReport {
    pub fn pass(&self, pde_budget: f64) -> bool {
        self.residual_pde < pde_budget
            && self.residual_norm < 1e-10
            && self.residual_dnorm < 1e-10
            && self.residual_bc < 1e-10
    }
}

/// Verify the four Killing identities for ψ± on a tensor sample grid covering
/// [-extent, extent]^(n-1) × [0, extent] with `per_axis` points per axis.
pub fn verify_killing(
    rep: &CliffordRep,
    sign: Sign,
    per_axis: usize,
    extent: f64,
    h: f64,
) -> KillingReport {
    let n = rep.n;
    let field = ClosedFormSpinor::killing(sign);
    let mut nu = vec![0.0; n];
    nu[n - 1] = 1.0;
    let bminus = rep.chiral_projector(&nu, Sign::Minus).expect("unit normal");

    let mut residual_pde: f64 = 0.0;
    let mut residual_norm: f64 = 0.0;
    let mut residual_dnorm: f64 = 0.0;
    let mut residual_bc: f64 = 0.0;

    let axis: Vec<f64> = (0..per_axis)
        .map(|k| -extent + 2.0 * extent * k as f64 / (per_axis - 1) as f64)
        .collect();
    let taxis: Vec<f64> = (0..per_axis)
        .map(|k| extent * k as f64 / (per_axis - 1) as f64)
        .collect();

    let mut idx = vec![0usize; n];
    loop {
        let coords: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { taxis[idx[i]] } else { axis[idx[i]] })
            .collect();
        let p = HalfSpacePoint::new(coords);
        let f = conformal_factor(&p);
        let psi = field.eval(rep, &p);

        // (ii) |ψ|² = f^(n-1)
        residual_norm = residual_norm.max((psi.norm_sqr() - f.powi(n as i32 - 1)).abs());
        // (iii) |Dψ|² = (n²/4) f^(n+1) via the exact eigenrelation Dψ = ±(n/2) f ψ
        let dpsi_exact = &psi * C64::new(sign.factor() * n as f64 / 2.0 * f, 0.0);
        let dnorm_target = (n as f64 / 2.0).powi(2) * f.powi(n as i32 + 1);
        residual_dnorm = residual_dnorm.max((dpsi_exact.norm_sqr() - dnorm_target).abs());
        // (i) finite-difference PDE residual
        let oracle = dirac_fd(rep, &|q| field.eval(rep, q), &p, h);
        residual_pde = residual_pde.max((oracle - dpsi_exact).norm());
        // (iv) boundary condition on t = 0
        if p.t() == 0.0 {
            residual_bc = residual_bc.max(bminus.apply(&psi).norm());
        }

        // advance the multi-index
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == n {
                return KillingReport {
                    n,
                    sign,
                    grid: vec![per_axis; n],
                    h,
                    residual_pde,
                    residual_norm,
                    residual_dnorm,
                    residual_bc,
                };
            }
        }
    }
}

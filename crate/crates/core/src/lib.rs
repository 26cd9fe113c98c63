//! Numerical laboratory for Dirac operators under the chiral bag boundary
//! condition on flat and conformally flat domains with boundary.
//!
//! The crate builds concrete complex Clifford representations, the closed-form
//! Killing-type test spinors on the half-space, Fermi-coordinate metric
//! machinery (frames, connection coefficients, correction fields and their
//! Taylor expansions), sparse bag-constrained Dirac discretizations with their
//! spectra, and the variational functionals whose limits reproduce the
//! hemisphere constant (n/2)(omega_n/2)^(1/n).

pub mod clifford;
pub mod dirac;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod sparse;
pub mod spectral;

pub use num_complex::Complex64 as C64;

/// Sign of the chiral bag projector B^± = (Id ± ν·Γ)/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Eigenvalue of ν·Γ on the admissible boundary subspace: B^s φ = 0
    /// confines the trace to the ∓1 eigenspace of ν·Γ.
    pub fn admissible_eigenvalue(self) -> f64 {
        -self.factor()
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Plus => write!(f, "plus"),
            Sign::Minus => write!(f, "minus"),
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            other => Err(format!("unknown sign `{other}` (use plus|minus)")),
        }
    }
}

/// Volume of the unit n-sphere, 2 π^((n+1)/2) / Γ((n+1)/2).
pub fn sphere_volume(n: u32) -> f64 {
    use std::f64::consts::PI;
    2.0 * PI.powf((n as f64 + 1.0) / 2.0) / gamma_half_integer(n + 1)
}

/// Γ(m/2) for integer m ≥ 1, exact by recursion.
fn gamma_half_integer(m: u32) -> f64 {
    use std::f64::consts::PI;
    if m % 2 == 0 {
        // Γ(k) = (k-1)!
        let k = m / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Γ(k + 1/2) = (2k)! √π / (4^k k!)
        let k = (m - 1) / 2;
        let mut v = PI.sqrt();
        for i in 0..k {
            v *= i as f64 + 0.5;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_volumes() {
        assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }
}

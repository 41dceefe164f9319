//! Two-qubit ion-photon states in the ordered basis
//! `{|D′,V⟩, |D′,H⟩, |D,V⟩, |D,H⟩}`: ion qubit first (`|D′⟩` = index 0),
//! photon second (`|V⟩` = index 0).

use nalgebra::{Complex, Matrix2, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::Result;

pub type C64 = Complex<f64>;

pub const TRACE_TOLERANCE: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest entry modulus of a complex matrix.
pub trait MaxNorm {
    fn max_norm(&self) -> f64;
}

impl<R: nalgebra::Dim, K: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, K>> MaxNorm
    for nalgebra::Matrix<C64, R, K, S>
{
    fn max_norm(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Pauli matrix `k` ∈ {0: I, 1: X, 2: Y, 3: Z}.
pub fn pauli(k: usize) -> Matrix2<C64> {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match k {
        0 => Matrix2::new(l, o, o, l),
        1 => Matrix2::new(o, l, l, o),
        2 => Matrix2::new(o, -i, i, o),
        3 => Matrix2::new(l, o, o, -l),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// `a ⊗ b` for single-qubit operators.
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Ion-qubit z rotation `diag(e^{−iφ/2}, e^{iφ/2}) ⊗ I`.
pub fn ion_z_rotation(phi: f64) -> Matrix4<C64> {
    let rz = Matrix2::new(
        C64::from_polar(1.0, -phi / 2.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        C64::from_polar(1.0, phi / 2.0),
    );
    kron(&rz, &Matrix2::identity())
}

/// Single-qubit unitary `R_z(α) R_y(β) R_z(γ)`.
pub fn zyz_unitary(alpha: f64, beta: f64, gamma: f64) -> Matrix2<C64> {
    let rz = |a: f64| {
        Matrix2::new(
            C64::from_polar(1.0, -a / 2.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            C64::from_polar(1.0, a / 2.0),
        )
    };
    let (cb, sb) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let ry = Matrix2::new(c(cb, 0.0), c(-sb, 0.0), c(sb, 0.0), c(cb, 0.0));
    rz(alpha) * ry * rz(gamma)
}

/// Photon-side unitary `I ⊗ U`.
pub fn photon_unitary(u: &Matrix2<C64>) -> Matrix4<C64> {
    kron(&Matrix2::identity(), u)
}

/// Ion basis state: `true` for `|D′⟩`, `false` for `|D⟩`.
pub fn ion_ket(d_prime: bool) -> nalgebra::Vector2<C64> {
    if d_prime {
        nalgebra::Vector2::new(c(1.0, 0.0), c(0.0, 0.0))
    } else {
        nalgebra::Vector2::new(c(0.0, 0.0), c(1.0, 0.0))
    }
}

/// Photon basis state: `true` for `|V⟩`, `false` for `|H⟩`.
pub fn photon_ket(vertical: bool) -> nalgebra::Vector2<C64> {
    ion_ket(vertical)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    pub rho: Matrix4<C64>,
}

impl TwoQubitState {
    /// Wraps a matrix after checking Hermiticity and unit trace.
    pub fn new(rho: Matrix4<C64>) -> Result<Self> {
        let s = Self { rho };
        ensure((s.rho - s.rho.adjoint()).max_norm() < 1e-10, || {
            "density matrix is not Hermitian".into()
        })?;
        ensure((s.trace() - 1.0).abs() < 1e-8, || {
            format!("trace {} is not 1", s.trace())
        })?;
        Ok(s)
    }

    pub fn from_unchecked(rho: Matrix4<C64>) -> Self {
        Self { rho }
    }

    pub fn pure(psi: &Vector4<C64>) -> Self {
        let n = psi.norm();
        let v = psi / c(n, 0.0);
        Self {
            rho: v * v.adjoint(),
        }
    }

    /// `(|D′,V⟩ + e^{iθ}|D,H⟩)/√2`.
    pub fn bell_vector(theta: f64) -> Vector4<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Vector4::new(
            c(h, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            C64::from_polar(h, theta),
        )
    }

    pub fn bell(theta: f64) -> Self {
        Self::pure(&Self::bell_vector(theta))
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Matrix4::identity() * c(0.25, 0.0),
        }
    }

    /// Product of an ion basis state and a photon basis state.
    pub fn product(ion_d_prime: bool, photon_vertical: bool) -> Self {
        let i = ion_ket(ion_d_prime);
        let p = photon_ket(photon_vertical);
        Self::pure(&Vector4::from_fn(|k, _| i[k / 2] * p[k % 2]))
    }

    /// `p |ψ(0)⟩⟨ψ(0)| + (1 − p) I/4`.
    pub fn werner(p: f64) -> Self {
        Self::bell(0.0).depolarize(1.0 - p)
    }

    /// Mixes in the maximally mixed state with weight `floor`.
    pub fn depolarize(&self, floor: f64) -> Self {
        Self {
            rho: self.rho * c(1.0 - floor, 0.0) + Matrix4::identity() * c(0.25 * floor, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn conjugate_by(&self, u: &Matrix4<C64>) -> Self {
        Self {
            rho: u * self.rho * u.adjoint(),
        }
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &Matrix4<C64>) -> f64 {
        (self.rho * op).trace().re
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (self.rho + self.rho.adjoint()) * c(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        (self.rho - self.rho.adjoint()).max_norm() < tol
            && (self.trace() - 1.0).abs() < tol
            && self.eigenvalues()[0] >= -tol
    }

    /// `⟨ψ|ρ|ψ⟩` for a normalised `ψ`.
    pub fn overlap(&self, psi: &Vector4<C64>) -> f64 {
        (psi.adjoint() * self.rho * psi)[(0, 0)].re
    }

    /// Probabilities of the four joint outcomes when the ion is measured in
    /// Pauli basis `a` and the photon in Pauli basis `b` (1: X, 2: Y, 3: Z).
    /// Outcome index `2·ion + photon` with 0 = `+1` eigenvalue.
    pub fn outcome_probabilities(&self, a: usize, b: usize) -> [f64; 4] {
        let pa = eigen_projectors(a);
        let pb = eigen_projectors(b);
        let mut out = [0.0; 4];
        for (i, ion) in pa.iter().enumerate() {
            for (j, ph) in pb.iter().enumerate() {
                out[2 * i + j] = self.expectation(&kron(ion, ph)).max(0.0);
            }
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= total);
        out
    }

    /// Reduced state of the ion qubit.
    pub fn ion_marginal(&self) -> Matrix2<C64> {
        Matrix2::from_fn(|r, col| self.rho[(2 * r, 2 * col)] + self.rho[(2 * r + 1, 2 * col + 1)])
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        (0..16)
            .map(|k| {
                let z = self.rho[(k / 4, k % 4)];
                [z.re, z.im]
            })
            .collect()
    }
}

/// Projectors onto the `+1` and `−1` eigenspaces of Pauli `k`.
pub fn eigen_projectors(k: usize) -> [Matrix2<C64>; 2] {
    let p = pauli(k);
    let id = Matrix2::identity();
    [(id + p) * c(0.5, 0.0), (id - p) * c(0.5, 0.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bell_state_is_pure_and_normalised() {
        let b = TwoQubitState::bell(0.7);
        assert_relative_eq!(b.trace(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            b.overlap(&TwoQubitState::bell_vector(0.7)),
            1.0,
            epsilon = 1e-14
        );
        assert!(b.is_physical(1e-12));
    }

    #[test]
    fn z_rotation_shifts_bell_phase() {
        // U_z(φ) takes |ψ(θ)⟩ to |ψ(θ + φ)⟩ up to a global phase.
        let rotated = TwoQubitState::bell(0.2).conjugate_by(&ion_z_rotation(0.5));
        assert_relative_eq!(
            rotated.overlap(&TwoQubitState::bell_vector(0.7)),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn bell_zz_correlations() {
        let b = TwoQubitState::bell(0.0);
        let zz = b.outcome_probabilities(3, 3);
        assert_relative_eq!(zz[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(zz[3], 0.5, epsilon = 1e-14);
        let xx = b.outcome_probabilities(1, 1);
        assert_relative_eq!(xx[0] + xx[3], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn werner_and_product_states() {
        let w = TwoQubitState::werner(0.0);
        assert!((w.rho - TwoQubitState::maximally_mixed().rho).max_norm() < 1e-15);
        let p = TwoQubitState::product(false, false);
        assert_relative_eq!(p.rho[(3, 3)].re, 1.0);
    }

    #[test]
    fn zyz_is_unitary() {
        let u = zyz_unitary(0.3, 1.1, -2.0);
        assert!((u * u.adjoint() - Matrix2::identity()).max_norm() < 1e-14);
    }
}

//! Entanglement and distance measures for two-qubit states.

use nalgebra::{Matrix4, SymmetricEigen};

use super::state::{c, kron, pauli, TwoQubitState, C64};

/// Principal square root of the PSD part of a Hermitian matrix.
pub fn sqrt_psd(m: &Matrix4<C64>) -> Matrix4<C64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|x| c(x.max(0.0).sqrt(), 0.0)));
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Eigenvalues below this are rounding noise; their square roots would
/// otherwise add ~1e-8 per eigenvalue to rank-deficient results.
const EIGENVALUE_FLOOR: f64 = 1e-13;

fn clipped_sqrt(x: f64) -> f64 {
    if x > EIGENVALUE_FLOOR {
        x.sqrt()
    } else {
        0.0
    }
}

/// `Σ √μ` over the eigenvalues `μ` of the PSD part of `m`.
fn trace_sqrt(m: &Matrix4<C64>) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .map(|&x| clipped_sqrt(x))
        .sum()
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`, clamped to [0, 1].
pub fn fidelity(rho: &TwoQubitState, sigma: &TwoQubitState) -> f64 {
    let s = sqrt_psd(&rho.rho);
    fidelity_with_sqrt(&s, &sigma.rho)
}

/// Fidelity when `√ρ` is already known.
pub(crate) fn fidelity_with_sqrt(sqrt_rho: &Matrix4<C64>, sigma: &Matrix4<C64>) -> f64 {
    trace_sqrt(&(sqrt_rho * sigma * sqrt_rho))
        .powi(2)
        .clamp(0.0, 1.0)
}

/// Wootters concurrence, `max(0, λ₁ − λ₂ − λ₃ − λ₄)` with `λ` the square
/// roots of the eigenvalues of `ρ ρ̃`, `ρ̃ = (Y⊗Y) ρ* (Y⊗Y)`, in
/// decreasing order. Evaluated through the Hermitian form `√ρ ρ̃ √ρ`,
/// which has the same spectrum.
pub fn concurrence(rho: &TwoQubitState) -> f64 {
    let yy = kron(&pauli(2), &pauli(2));
    let tilde = yy * rho.rho.conjugate() * yy;
    let s = sqrt_psd(&rho.rho);
    let m = s * tilde * s;
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut l: Vec<f64> = h
        .symmetric_eigenvalues()
        .iter()
        .map(|&x| clipped_sqrt(x))
        .collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::super::state::{ion_z_rotation, zyz_unitary};
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_state(re: &[f64], im: &[f64]) -> TwoQubitState {
        let a = Matrix4::from_fn(|r, k| c(re[4 * r + k], im[4 * r + k]));
        let m = a * a.adjoint();
        TwoQubitState::from_unchecked(m / m.trace())
    }

    #[test]
    fn bell_and_product_concurrence() {
        assert_relative_eq!(concurrence(&TwoQubitState::bell(0.0)), 1.0, epsilon = 1e-7);
        assert_relative_eq!(concurrence(&TwoQubitState::bell(1.3)), 1.0, epsilon = 1e-7);
        for (a, b) in [(true, true), (false, false), (true, false)] {
            assert!(concurrence(&TwoQubitState::product(a, b)) < 1e-7);
        }
    }

    #[test]
    fn werner_concurrence_matches_closed_form() {
        for p in [0.0, 1.0 / 3.0, 0.8, 1.0] {
            let expected = f64::max(0.0, (3.0 * p - 1.0) / 2.0);
            assert!(
                (concurrence(&TwoQubitState::werner(p)) - expected).abs() < 1e-6,
                "p = {p}"
            );
        }
    }

    #[test]
    fn fidelity_examples() {
        let b = TwoQubitState::bell(0.0);
        assert_relative_eq!(fidelity(&b, &b), 1.0, epsilon = 1e-7);
        assert!(fidelity(&b, &TwoQubitState::bell(std::f64::consts::PI)) < 1e-7);
        assert_relative_eq!(
            fidelity(&TwoQubitState::maximally_mixed(), &b),
            0.25,
            epsilon = 1e-12
        );
        let w = TwoQubitState::werner(0.6);
        assert_relative_eq!(fidelity(&w, &w), 1.0, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn fidelity_is_symmetric(
            a in proptest::collection::vec(-1.0f64..1.0, 32),
            b in proptest::collection::vec(-1.0f64..1.0, 32),
        ) {
            let r = random_state(&a[..16], &a[16..]);
            let s = random_state(&b[..16], &b[16..]);
            prop_assert!((fidelity(&r, &s) - fidelity(&s, &r)).abs() < 1e-10);
        }

        #[test]
        fn concurrence_is_local_unitary_invariant(
            a in proptest::collection::vec(-1.0f64..1.0, 32),
            angles in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let r = random_state(&a[..16], &a[16..]);
            let u = kron(&zyz_unitary(angles[0], angles[1], angles[2]), &zyz_unitary(angles[3], angles[4], angles[5]));
            let rotated = r.conjugate_by(&u);
            prop_assert!((concurrence(&rotated) - concurrence(&r)).abs() < 1e-9);
            let z = r.conjugate_by(&ion_z_rotation(angles[0]));
            prop_assert!((concurrence(&z) - concurrence(&r)).abs() < 1e-9);
        }
    }
}

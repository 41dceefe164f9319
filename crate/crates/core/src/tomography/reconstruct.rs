//! Linear-inversion state reconstruction followed by projection onto the
//! physical states.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::counts::{CountTable, Setting};
use super::state::{c, kron, pauli, TwoQubitState, C64};
use crate::error::ensure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    /// Relative detection efficiency of the photon `+1` and `−1` paths.
    /// Counts are divided by these before correlators are formed.
    pub photon_path_efficiency: [f64; 2],
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            photon_path_efficiency: [1.0, 1.0],
        }
    }
}

/// Reconstructs the state of zero-based pair `(ion, window)`.
pub fn reconstruct(
    counts: &CountTable,
    ion: usize,
    window: usize,
    options: &ReconstructionOptions,
) -> Result<TwoQubitState> {
    ensure(ion < counts.ions() && window < counts.windows(), || {
        format!("pair ({ion}, {window}) out of range")
    })?;
    ensure(
        options
            .photon_path_efficiency
            .iter()
            .all(|e| *e > 0.0 && e.is_finite()),
        || "photon path efficiencies must be positive".into(),
    )?;
    let raw: Vec<[u64; 4]> = (0..Setting::COUNT)
        .map(|s| counts.outcomes(s, ion, window))
        .collect();
    let totals: Vec<u64> = raw.iter().map(|o| o.iter().sum()).collect();
    if totals.iter().all(|&t| t == 0) {
        return Err(Error::Degenerate(format!(
            "no events for pair ({}, {})",
            ion + 1,
            window + 1
        )));
    }
    if let Some(s) = totals.iter().position(|&t| t == 0) {
        return Err(Error::IncompleteData(format!(
            "setting {s} has no events for pair ({}, {})",
            ion + 1,
            window + 1
        )));
    }
    let eff = options.photon_path_efficiency;
    // Outcome frequencies per setting, corrected for path efficiency.
    let freqs: Vec<[f64; 4]> = raw
        .iter()
        .map(|o| {
            let w = [
                o[0] as f64 / eff[0],
                o[1] as f64 / eff[1],
                o[2] as f64 / eff[0],
                o[3] as f64 / eff[1],
            ];
            let t: f64 = w.iter().sum();
            [w[0] / t, w[1] / t, w[2] / t, w[3] / t]
        })
        .collect();

    // T[k][l] = ⟨σ_k ⊗ σ_l⟩ with k, l ∈ {I, X, Y, Z}. Single-qubit terms are
    // averaged over the three settings that measure that basis.
    let mut t = [[0.0; 4]; 4];
    let mut n = [[0usize; 4]; 4];
    t[0][0] = 1.0;
    for s in Setting::all() {
        let (a, b) = (s.ion.pauli_index(), s.photon.pauli_index());
        let f = freqs[s.id()];
        t[a][b] += f[0] - f[1] - f[2] + f[3];
        t[a][0] += f[0] + f[1] - f[2] - f[3];
        t[0][b] += f[0] - f[1] + f[2] - f[3];
        n[a][b] += 1;
        n[a][0] += 1;
        n[0][b] += 1;
    }
    let mut rho = Matrix4::zeros();
    for k in 0..4 {
        for l in 0..4 {
            let v = if n[k][l] > 0 {
                t[k][l] / n[k][l] as f64
            } else {
                t[k][l]
            };
            rho += kron(&pauli(k), &pauli(l)) * c(0.25 * v, 0.0);
        }
    }
    Ok(project_to_physical(&rho))
}

/// Closest unit-trace PSD matrix in the Frobenius norm: eigenvalues are
/// sorted, negative ones are zeroed and their weight is spread uniformly
/// over the remaining ones until all are non-negative.
pub fn project_to_physical(m: &Matrix4<C64>) -> TwoQubitState {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let trace: f64 = eig.eigenvalues.iter().sum();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut mu: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k] / trace).collect();
    let mut carry = 0.0;
    let mut kept = 4;
    while kept > 0 {
        let candidate = mu[kept - 1] + carry / kept as f64;
        if candidate >= 0.0 {
            break;
        }
        carry += mu[kept - 1];
        mu[kept - 1] = 0.0;
        kept -= 1;
    }
    for v in mu.iter_mut().take(kept) {
        *v += carry / kept as f64;
    }
    let mut rho = Matrix4::zeros();
    for (rank, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        rho += v * v.adjoint() * c(mu[rank], 0.0);
    }
    TwoQubitState::from_unchecked(rho)
}

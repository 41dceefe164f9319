//! Frame alignment: ion-side z rotations that make the diagonal pair states
//! agree with each other, then a single photon-side unitary that brings them
//! closest to the Bell target.

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::measures::{fidelity_with_sqrt, sqrt_psd};
use super::state::{ion_z_rotation, photon_unitary, zyz_unitary, TwoQubitState, C64};
use crate::coherence::wrap_angle;
use crate::error::ensure;
use crate::numerics::{nelder_mead, NelderMeadOptions, NelderMeadResult};
use crate::par::{stream_rng, try_map_range};
use crate::{Error, Result};

/// Multi-start simplex settings shared by both optimisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_iter: usize,
    /// Seeds the random start points after the first (which is the origin
    /// or the supplied initial guess).
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            f_tol: 1e-8,
            x_tol: 1e-6,
            max_iter: 20_000,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    /// Single start from the initial guess, used for warm restarts.
    pub fn warm() -> Self {
        Self {
            starts: 1,
            ..Self::default()
        }
    }

    fn nm(&self) -> NelderMeadOptions {
        NelderMeadOptions {
            f_tol: self.f_tol,
            x_tol: self.x_tol,
            max_iter: self.max_iter,
        }
    }
}

/// Minimises `f` from the guess and from `starts − 1` uniform points on the
/// torus, polishing the best result once more.
fn multi_start<F>(
    f: F,
    guess: &[f64],
    options: &OptimizerOptions,
    what: &str,
) -> Result<NelderMeadResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    ensure(options.starts >= 1, || {
        "at least one start is required".into()
    })?;
    let n = guess.len();
    let step = vec![0.5; n];
    let runs = try_map_range(options.starts, |k| {
        let x0: Vec<f64> = if k == 0 {
            guess.to_vec()
        } else {
            let mut rng = stream_rng(options.seed, k as u64);
            (0..n)
                .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect()
        };
        Ok(nelder_mead(&f, &x0, &step, &options.nm()))
    })?;
    if runs.iter().all(|r| !r.converged) {
        return Err(Error::Optimization(format!("{what}: no start converged")));
    }
    let best = runs
        .into_iter()
        .filter(|r| r.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Optimization(format!("{what}: objective not finite")))?;
    let polish = nelder_mead(&f, &best.x, &vec![0.05; n], &options.nm());
    Ok(if polish.value <= best.value {
        polish
    } else {
        best
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZRotationFit {
    /// Rotation angle per ion in (−π, π]; the first is fixed to 0.
    pub angles: Vec<f64>,
    /// `Σ_{m,n} F(U_m ρ_m U_m†, U_n ρ_n U_n†)` at the optimum.
    pub objective: f64,
}

impl ZRotationFit {
    /// The diagonal states with the fitted rotations applied.
    pub fn apply(&self, states: &[TwoQubitState]) -> Vec<TwoQubitState> {
        states
            .iter()
            .zip(&self.angles)
            .map(|(s, &a)| s.conjugate_by(&ion_z_rotation(a)))
            .collect()
    }
}

/// Pairwise-fidelity objective for the given rotation angles (one per state).
pub fn z_rotation_objective(states: &[TwoQubitState], angles: &[f64]) -> f64 {
    let roots: Vec<Matrix4<C64>> = states.iter().map(|s| sqrt_psd(&s.rho)).collect();
    objective_with_roots(states, &roots, angles)
}

fn objective_with_roots(states: &[TwoQubitState], roots: &[Matrix4<C64>], angles: &[f64]) -> f64 {
    // F(U_m ρ_m U_m†, U_n ρ_n U_n†) = F(ρ_m, V ρ_n V†) with V = U_m† U_n,
    // and V only depends on the angle difference.
    let n = states.len();
    let mut total = n as f64;
    for m in 0..n {
        for k in m + 1..n {
            let v = ion_z_rotation(angles[k] - angles[m]);
            total += 2.0 * fidelity_with_sqrt(&roots[m], &(v * states[k].rho * v.adjoint()));
        }
    }
    total
}

/// Finds the ion-side z rotations maximising the pairwise fidelity of the
/// diagonal states, with the first angle held at 0.
pub fn optimize_z_rotations(
    states: &[TwoQubitState],
    guess: Option<&[f64]>,
    options: &OptimizerOptions,
) -> Result<ZRotationFit> {
    ensure(states.len() >= 2, || {
        "at least two states are needed".into()
    })?;
    let roots: Vec<Matrix4<C64>> = states.iter().map(|s| sqrt_psd(&s.rho)).collect();
    let n = states.len();
    let x0: Vec<f64> = match guess {
        Some(g) => {
            ensure(g.len() == n, || "guess needs one angle per state".into())?;
            g[1..].iter().map(|a| a - g[0]).collect()
        }
        None => vec![0.0; n - 1],
    };
    let full = |x: &[f64]| {
        std::iter::once(0.0)
            .chain(x.iter().copied())
            .collect::<Vec<f64>>()
    };
    let best = multi_start(
        |x| -objective_with_roots(states, &roots, &full(x)),
        &x0,
        options,
        "z rotations",
    )?;
    Ok(ZRotationFit {
        angles: full(&best.x).into_iter().map(wrap_angle).collect(),
        objective: -best.value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonFit {
    /// ZYZ Euler angles `(α, β, γ)` of `U_p = R_z(α) R_y(β) R_z(γ)`.
    pub euler: [f64; 3],
    pub unitary: Matrix2<C64>,
    /// `⟨ψ(0)|U_p ρ U_p†|ψ(0)⟩` for every input state.
    pub fidelities: Vec<f64>,
}

impl PhotonFit {
    pub fn apply(&self, state: &TwoQubitState) -> TwoQubitState {
        state.conjugate_by(&photon_unitary(&self.unitary))
    }
}

fn bell_fidelities(states: &[TwoQubitState], u: &Matrix2<C64>) -> Vec<f64> {
    let target = TwoQubitState::bell_vector(0.0);
    let w = photon_unitary(u);
    states
        .iter()
        .map(|s| s.conjugate_by(&w).overlap(&target))
        .collect()
}

/// Finds the photon-side unitary maximising the summed Bell fidelity.
pub fn optimize_photon_unitary(
    rotated: &[TwoQubitState],
    guess: Option<[f64; 3]>,
    options: &OptimizerOptions,
) -> Result<PhotonFit> {
    ensure(!rotated.is_empty(), || "no states to align".into())?;
    let x0 = guess.unwrap_or([0.0; 3]);
    let best = multi_start(
        |x| {
            -bell_fidelities(rotated, &zyz_unitary(x[0], x[1], x[2]))
                .iter()
                .sum::<f64>()
        },
        &x0,
        options,
        "photon unitary",
    )?;
    let euler = [wrap_angle(best.x[0]), best.x[1], wrap_angle(best.x[2])];
    let unitary = zyz_unitary(best.x[0], best.x[1], best.x[2]);
    Ok(PhotonFit {
        euler,
        fidelities: bell_fidelities(rotated, &unitary),
        unitary,
    })
}

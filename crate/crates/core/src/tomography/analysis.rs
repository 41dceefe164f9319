//! Full analysis of a count table: reconstruction of every pair, frame
//! alignment of the diagonal pairs and Monte Carlo error bars.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::counts::{CountTable, Setting};
use super::measures::concurrence;
use super::optimize::{
    optimize_photon_unitary, optimize_z_rotations, OptimizerOptions, PhotonFit, ZRotationFit,
};
use super::reconstruct::{reconstruct, ReconstructionOptions};
use super::state::TwoQubitState;
use crate::error::ensure;
use crate::par::{map_range, stream_rng, try_map_range};
use crate::{Error, Result};

pub const MIN_REPLICATES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub reconstruction: ReconstructionOptions,
    pub optimizer: OptimizerOptions,
    /// Monte Carlo replicates; 0 skips error estimation.
    pub replicates: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            reconstruction: ReconstructionOptions::default(),
            optimizer: OptimizerOptions::default(),
            replicates: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimates {
    pub replicates: usize,
    /// Standard deviation of each pair's concurrence, `None` where skipped.
    pub concurrence: Vec<Vec<Option<f64>>>,
    /// Standard deviation of each Bell fidelity.
    pub fidelity: Vec<f64>,
    /// One-based pairs that could not be resampled (no events).
    pub skipped_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    /// `states[i][j]` for zero-based ion `i` and photon window `j`; `None`
    /// where the counts do not determine a state.
    pub states: Vec<Vec<Option<TwoQubitState>>>,
    pub concurrences: Vec<Vec<Option<f64>>>,
    pub rotations: ZRotationFit,
    pub photon: PhotonFit,
    /// Diagonal states after both rotations.
    pub bell_states: Vec<TwoQubitState>,
    pub errors: Option<ErrorEstimates>,
}

impl TomographyResult {
    pub fn bell_fidelities(&self) -> &[f64] {
        &self.photon.fidelities
    }

    pub fn to_json(&self) -> Value {
        let mut pairs = Vec::new();
        for (i, row) in self.states.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let err = self.errors.as_ref().and_then(|e| e.concurrence[i][j]);
                pairs.push(json!({
                    "ion": i + 1,
                    "window": j + 1,
                    "rho": s.as_ref().map(|s| s.to_pairs()),
                    "concurrence": self.concurrences[i][j],
                    "concurrence_error": err,
                }));
            }
        }
        let fidelities: Vec<Value> = self
            .photon
            .fidelities
            .iter()
            .enumerate()
            .map(|(k, f)| {
                json!({
                    "ion": k + 1,
                    "fidelity": f,
                    "error": self.errors.as_ref().map(|e| e.fidelity[k]),
                    "rho_bell": self.bell_states[k].to_pairs(),
                })
            })
            .collect();
        json!({
            "pairs": pairs,
            "concurrence_grid": self.concurrences,
            "z_rotation_angles_rad": self.rotations.angles,
            "z_rotation_objective": self.rotations.objective,
            "photon_unitary_zyz_rad": self.photon.euler,
            "bell_fidelities": fidelities,
            "monte_carlo_replicates": self.errors.as_ref().map_or(0, |e| e.replicates),
            "skipped_pairs": self.errors.as_ref().map(|e| e.skipped_pairs.clone()).unwrap_or_default(),
        })
    }
}

fn reconstruct_grid(
    counts: &CountTable,
    options: &ReconstructionOptions,
) -> Result<Vec<Vec<Option<TwoQubitState>>>> {
    let (ni, nw) = (counts.ions(), counts.windows());
    let flat = try_map_range(ni * nw, |k| {
        match reconstruct(counts, k / nw, k % nw, options) {
            Ok(s) => Ok(Some(s)),
            Err(Error::Degenerate(_) | Error::IncompleteData(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    Ok(flat.chunks(nw).map(|r| r.to_vec()).collect())
}

fn diagonal(states: &[Vec<Option<TwoQubitState>>]) -> Result<Vec<TwoQubitState>> {
    let n = states.len().min(states.first().map_or(0, Vec::len));
    (0..n)
        .map(|k| {
            states[k][k].clone().ok_or_else(|| {
                Error::IncompleteData(format!("matched pair ({}, {}) has no state", k + 1, k + 1))
            })
        })
        .collect()
}

struct Estimate {
    states: Vec<Vec<Option<TwoQubitState>>>,
    concurrences: Vec<Vec<Option<f64>>>,
    rotations: ZRotationFit,
    photon: PhotonFit,
    bell_states: Vec<TwoQubitState>,
}

fn estimate(
    counts: &CountTable,
    options: &AnalysisOptions,
    optimizer: &OptimizerOptions,
    warm: Option<(&[f64], [f64; 3])>,
) -> Result<Estimate> {
    let states = reconstruct_grid(counts, &options.reconstruction)?;
    let concurrences = states
        .iter()
        .map(|r| r.iter().map(|s| s.as_ref().map(concurrence)).collect())
        .collect();
    let diag = diagonal(&states)?;
    let rotations = optimize_z_rotations(&diag, warm.map(|w| w.0), optimizer)?;
    let rotated = rotations.apply(&diag);
    let photon = optimize_photon_unitary(&rotated, warm.map(|w| w.1), optimizer)?;
    let bell_states = rotated.iter().map(|s| photon.apply(s)).collect();
    Ok(Estimate {
        states,
        concurrences,
        rotations,
        photon,
        bell_states,
    })
}

/// Reconstructs every pair, aligns the matched pairs and, if requested,
/// attaches Monte Carlo error bars.
pub fn analyze(counts: &CountTable, options: &AnalysisOptions) -> Result<TomographyResult> {
    let e = estimate(counts, options, &options.optimizer, None)?;
    let mut result = TomographyResult {
        states: e.states,
        concurrences: e.concurrences,
        rotations: e.rotations,
        photon: e.photon,
        bell_states: e.bell_states,
        errors: None,
    };
    if options.replicates > 0 {
        result.errors = Some(monte_carlo_errors(
            counts,
            &result,
            options.replicates,
            options.seed,
            options,
        )?);
    }
    Ok(result)
}

/// Draws a multinomial sample with the observed frequencies of each cell.
fn resample<R: Rng>(counts: &CountTable, rng: &mut R) -> Result<CountTable> {
    let mut out = CountTable::new(counts.ions(), counts.windows());
    out.attempts = counts.attempts;
    for s in 0..Setting::COUNT {
        for i in 0..counts.ions() {
            for j in 0..counts.windows() {
                let obs = counts.outcomes(s, i, j);
                let mut left: u64 = obs.iter().sum();
                let mut mass = left as f64;
                let mut draw = [0u64; 4];
                for k in 0..4 {
                    if left == 0 || mass <= 0.0 {
                        break;
                    }
                    let p = (obs[k] as f64 / mass).clamp(0.0, 1.0);
                    let n = if k == 3 {
                        left
                    } else {
                        Binomial::new(left, p)
                            .map_err(|e| Error::InvalidInput(e.to_string()))?
                            .sample(rng)
                    };
                    draw[k] = n;
                    left -= n;
                    mass -= obs[k] as f64;
                }
                out.set_outcomes(s, i, j, draw);
            }
        }
    }
    Ok(out)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Standard deviations of every concurrence and Bell fidelity over
/// `replicates` multinomial resamplings of the counts. Each replicate reruns
/// the whole analysis, with the optimisers warm-started at the nominal
/// solution; replicate `r` draws from stream `(seed, r)`.
pub fn monte_carlo_errors(
    counts: &CountTable,
    nominal: &TomographyResult,
    replicates: usize,
    seed: u64,
    options: &AnalysisOptions,
) -> Result<ErrorEstimates> {
    ensure(replicates >= MIN_REPLICATES, || {
        format!("at least {MIN_REPLICATES} replicates are required")
    })?;
    let warm = OptimizerOptions {
        seed,
        ..OptimizerOptions::warm()
    };
    let runs = try_map_range(replicates, |r| {
        let mut rng = stream_rng(seed, r as u64);
        let sample = resample(counts, &mut rng)?;
        estimate(
            &sample,
            options,
            &warm,
            Some((&nominal.rotations.angles, nominal.photon.euler)),
        )
    })?;
    let (ni, nw) = (counts.ions(), counts.windows());
    let mut skipped = Vec::new();
    let conc = (0..ni)
        .map(|i| {
            (0..nw)
                .map(|j| {
                    let xs: Vec<f64> = runs.iter().filter_map(|r| r.concurrences[i][j]).collect();
                    if nominal.states[i][j].is_none() || xs.len() < 2 {
                        skipped.push((i + 1, j + 1));
                        None
                    } else {
                        Some(std_dev(&xs))
                    }
                })
                .collect()
        })
        .collect();
    let fid = map_range(nominal.photon.fidelities.len(), |k| {
        let xs: Vec<f64> = runs.iter().map(|r| r.photon.fidelities[k]).collect();
        std_dev(&xs)
    });
    Ok(ErrorEstimates {
        replicates,
        concurrence: conc,
        fidelity: fid,
        skipped_pairs: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::super::reconstruct::tests::expected_counts;
    use super::super::state::ion_z_rotation;
    use super::*;

    /// `n × n` table whose diagonal holds `diag[k]` and whose off-diagonal
    /// pairs hold the product of the marginals.
    fn table(diag: &[TwoQubitState], shots: f64) -> CountTable {
        let n = diag.len();
        let mut t = CountTable::new(n, n);
        for i in 0..n {
            for j in 0..n {
                let s = if i == j {
                    diag[i].clone()
                } else {
                    TwoQubitState::maximally_mixed()
                };
                let one = expected_counts(&s, shots);
                for id in 0..9 {
                    t.set_outcomes(id, i, j, one.outcomes(id, 0, 0));
                }
            }
        }
        t.attempts = [shots as u64; 9];
        t
    }

    #[test]
    fn analysis_structure_and_json() {
        let diag: Vec<_> = [0.0, 0.4, -0.8]
            .iter()
            .map(|&p| {
                TwoQubitState::bell(0.0)
                    .depolarize(0.1)
                    .conjugate_by(&ion_z_rotation(p))
            })
            .collect();
        let t = table(&diag, 500.0);
        let opts = AnalysisOptions {
            replicates: 50,
            seed: 3,
            ..Default::default()
        };
        let r = analyze(&t, &opts).unwrap();
        for k in 0..3 {
            assert!(r.concurrences[k][k].unwrap() > 0.8);
            assert!((r.bell_fidelities()[k] - 0.925).abs() < 0.03);
        }
        assert!(r.concurrences[0][1].unwrap() < 0.05);
        let e = r.errors.as_ref().unwrap();
        assert!(e.fidelity.iter().all(|x| *x > 0.0 && *x < 0.05));
        let v = r.to_json();
        assert_eq!(v["pairs"].as_array().unwrap().len(), 9);
        assert_eq!(v["pairs"][0]["rho"].as_array().unwrap().len(), 16);
        // Same seed, same numbers.
        let again = analyze(&t, &opts).unwrap();
        assert_eq!(again.errors, r.errors);
    }

    #[test]
    fn missing_pairs_are_skipped() {
        let diag = vec![TwoQubitState::bell(0.0); 2];
        let mut t = table(&diag, 200.0);
        for id in 0..9 {
            t.set_outcomes(id, 0, 1, [0; 4]);
        }
        let r = analyze(
            &t,
            &AnalysisOptions {
                replicates: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.states[0][1].is_none());
        assert!(r.errors.unwrap().skipped_pairs.contains(&(1, 2)));
        assert!(analyze(
            &t,
            &AnalysisOptions {
                replicates: 10,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn resampling_preserves_totals() {
        let t = table(&[TwoQubitState::werner(0.7)], 1000.0);
        let r = resample(&t, &mut stream_rng(1, 0)).unwrap();
        for s in 0..9 {
            assert_eq!(
                r.outcomes(s, 0, 0).iter().sum::<u64>(),
                t.outcomes(s, 0, 0).iter().sum::<u64>()
            );
        }
    }

    #[test]
    fn errors_scale_with_shots() {
        let diag = vec![TwoQubitState::werner(0.85); 2];
        let opts = AnalysisOptions {
            replicates: 200,
            seed: 11,
            ..Default::default()
        };
        let small = analyze(&table(&diag, 400.0), &opts)
            .unwrap()
            .errors
            .unwrap();
        let large = analyze(&table(&diag, 1600.0), &opts)
            .unwrap()
            .errors
            .unwrap();
        let ratio = small.concurrence[0][0].unwrap() / large.concurrence[0][0].unwrap();
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }
}

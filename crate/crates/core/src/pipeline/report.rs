//! Run artifacts, report files and the manifest that ties them together.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::config::{hex_digest, RunConfig};
use super::experiment::{run_experiment, Experiment};
use super::records::{write_outcomes_csv, ClickLog, OutcomeRecord};
use super::windows::{
    build_count_table, histogram, window_counts, Histogram, WindowCounts, WindowSpec,
};
use crate::coherence::{write_indexed_csv, PhaseAngles};
use crate::mechanics::{mode_report, ModeReport};
use crate::photon::analysis::{
    efficiency_vs_displacement, REFERENCE_BUDGET, REFERENCE_WINDOW_COUNTS,
};
use crate::photon::{
    detection_budget, fit_detection_efficiency, CavityGeometry, DisplacementCurve, XiFit,
};
use crate::tomography::optimize::OptimizerOptions;
use crate::tomography::{analyze, AnalysisOptions, CountTable, TomographyResult};
use crate::{Error, PhysicalConstants, Result};

pub const MANIFEST: &str = "manifest.json";
pub const CLICKS_FILE: &str = "clicks.csv";
pub const OUTCOMES_FILE: &str = "outcomes.csv";

/// Detection efficiency reported alongside a run for comparison.
pub const REFERENCE_XI: f64 = 0.36;
/// Bell-fidelity band reported alongside a run for comparison.
pub const REFERENCE_FIDELITY_RANGE: [f64; 2] = [0.88, 0.95];

/// Model quantities attached to simulated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifacts {
    pub exit_probabilities: Vec<f64>,
    pub xi_configured: f64,
    pub phases: PhaseAngles,
    pub displacement: DisplacementCurve,
    pub modes: ModeReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub windows: WindowSpec,
    pub attempts: u64,
    pub histogram: Histogram,
    pub window_counts: WindowCounts,
    /// `c_i / attempts`.
    pub detection_probabilities: Vec<f64>,
    pub count_table: CountTable,
    /// `None` when some matched pair lacks events in a setting.
    pub tomography: Option<TomographyResult>,
    pub model: Option<ModelArtifacts>,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    /// SHA-256 of the click and outcome CSVs the analysis consumed.
    pub input_sha256: [String; 2],
}

impl RunArtifacts {
    /// Least-squares ξ between measured and modelled probabilities.
    pub fn xi_fit(&self) -> Option<Result<XiFit>> {
        self.model
            .as_ref()
            .map(|m| fit_detection_efficiency(&self.detection_probabilities, &m.exit_probabilities))
    }
}

/// Serialised click and outcome logs.
pub fn log_csv_bytes(
    clicks: &ClickLog,
    outcomes: &[OutcomeRecord],
    ions: usize,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut c = Vec::new();
    clicks.write_csv(&mut c)?;
    let mut o = Vec::new();
    write_outcomes_csv(outcomes, ions, &mut o)?;
    Ok((c, o))
}

/// Windowing, counting and tomography of a click log and its ion outcomes.
pub fn analyze_logs(
    clicks: &ClickLog,
    outcomes: &[OutcomeRecord],
    ions: usize,
    windows: &WindowSpec,
    options: &AnalysisOptions,
) -> Result<RunArtifacts> {
    let attempts = outcomes.len() as u64;
    if attempts == 0 {
        return Err(Error::InvalidInput("no ion outcome records".into()));
    }
    let hist = histogram(clicks, windows, attempts)?;
    let counts = window_counts(clicks, windows)?;
    let detection_probabilities = counts
        .counts
        .iter()
        .map(|&c| c as f64 / attempts as f64)
        .collect();
    let count_table = build_count_table(clicks, outcomes, windows, ions)?;
    let tomography = match analyze(&count_table, options) {
        Ok(t) => Some(t),
        Err(Error::IncompleteData(_) | Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    let (c, o) = log_csv_bytes(clicks, outcomes, ions)?;
    Ok(RunArtifacts {
        windows: windows.clone(),
        attempts,
        histogram: hist,
        window_counts: counts,
        detection_probabilities,
        count_table,
        tomography,
        model: None,
        config_sha256: None,
        seed: None,
        input_sha256: [hex_digest(&c), hex_digest(&o)],
    })
}

pub fn analysis_options(config: &RunConfig) -> AnalysisOptions {
    AnalysisOptions {
        optimizer: OptimizerOptions {
            starts: config.analysis.optimizer_starts,
            seed: config.seed,
            ..Default::default()
        },
        replicates: config.analysis.monte_carlo_replicates,
        seed: config.seed,
        ..Default::default()
    }
}

/// Runs the synthetic experiment and analyses it like measured data.
pub fn simulate(config: &RunConfig) -> Result<(Experiment, RunArtifacts)> {
    let exp = run_experiment(config)?;
    let mut artifacts = analyze_logs(
        &exp.clicks,
        &exp.outcomes,
        exp.model.ions(),
        &exp.model.windows,
        &analysis_options(config),
    )?;
    let grid: Vec<f64> = config
        .analysis
        .displacement_grid_um
        .iter()
        .map(|z| z * 1e-6)
        .collect();
    let displacement = efficiency_vs_displacement(
        &config.source_model()?,
        &CavityGeometry::default(),
        &config.raman_beam()?,
        &exp.model.drives[0],
        &grid,
        config.seed,
    )?;
    artifacts.model = Some(ModelArtifacts {
        exit_probabilities: exp.model.exit_probabilities.clone(),
        xi_configured: config.xi,
        phases: exp.model.phases.clone(),
        displacement,
        modes: mode_report(
            &config.trap_configuration(),
            &config.coupling_spec(),
            &PhysicalConstants::calcium40(),
        )?,
    });
    artifacts.config_sha256 = Some(config.sha256()?);
    artifacts.seed = Some(config.seed);
    Ok((exp, artifacts))
}

/// Writes the click and outcome logs of a simulated run.
pub fn write_logs(exp: &Experiment, outdir: &Path) -> Result<()> {
    fs::create_dir_all(outdir)?;
    let (c, o) = log_csv_bytes(&exp.clicks, &exp.outcomes, exp.model.ions())?;
    fs::write(outdir.join(CLICKS_FILE), c)?;
    fs::write(outdir.join(OUTCOMES_FILE), o)?;
    Ok(())
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:.8}"))
}

/// Writes every report file and a manifest listing their SHA-256 hashes.
/// Returns the paths written, manifest last.
pub fn emit_report(artifacts: &RunArtifacts, outdir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir)?;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let n = artifacts.windows.len();

    files.insert(
        "histogram.csv".into(),
        csv_bytes(|b| artifacts.histogram.write_csv(b))?,
    );
    files.insert(
        "count_table.csv".into(),
        csv_bytes(|b| artifacts.count_table.write_csv(b))?,
    );

    let xi_fit = artifacts.xi_fit().transpose()?;
    files.insert(
        "efficiency.csv".into(),
        csv_bytes(|b| {
            let mut w = csv::Writer::from_writer(b);
            w.write_record(["ion", "P_measured", "P_model"])?;
            for k in 0..n {
                let model = artifacts
                    .model
                    .as_ref()
                    .zip(xi_fit)
                    .map(|(m, f)| f.xi * m.exit_probabilities[k]);
                w.write_record([
                    (k + 1).to_string(),
                    format!("{:.8}", artifacts.detection_probabilities[k]),
                    opt(model),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?,
    );

    if let Some(t) = &artifacts.tomography {
        files.insert(
            "tomography.json".into(),
            serde_json::to_vec_pretty(&t.to_json())?,
        );
        files.insert(
            "concurrence.csv".into(),
            csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["ion_index", "photon_window", "concurrence", "error"])?;
                for (i, row) in t.concurrences.iter().enumerate() {
                    for (j, c) in row.iter().enumerate() {
                        let e = t.errors.as_ref().and_then(|e| e.concurrence[i][j]);
                        w.write_record([
                            (i + 1).to_string(),
                            (j + 1).to_string(),
                            opt(*c),
                            opt(e),
                        ])?;
                    }
                }
                w.flush()?;
                Ok(())
            })?,
        );
        files.insert(
            "fidelity.csv".into(),
            csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                w.write_record(["ion_index", "fidelity", "error"])?;
                for (k, f) in t.bell_fidelities().iter().enumerate() {
                    let e = t.errors.as_ref().map(|e| e.fidelity[k]);
                    w.write_record([(k + 1).to_string(), format!("{f:.8}"), opt(e)])?;
                }
                w.flush()?;
                Ok(())
            })?,
        );
        files.insert(
            "recovered_angles.csv".into(),
            csv_bytes(|b| write_indexed_csv(b, "angle_rad", &t.rotations.angles))?,
        );
    }
    if let Some(m) = &artifacts.model {
        files.insert(
            "phase_angles.csv".into(),
            csv_bytes(|b| m.phases.write_csv(b))?,
        );
        files.insert(
            "displacement_efficiency.csv".into(),
            csv_bytes(|b| m.displacement.write_csv(b))?,
        );
    }

    let mut written = Vec::new();
    let mut hashes = BTreeMap::new();
    for (name, bytes) in &files {
        let path = outdir.join(name);
        fs::write(&path, bytes)?;
        hashes.insert(name.clone(), hex_digest(bytes));
        written.push(path);
    }
    let manifest = manifest_json(artifacts, xi_fit, &hashes)?;
    let path = outdir.join(MANIFEST);
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
    written.push(path);
    Ok(written)
}

fn manifest_json(
    artifacts: &RunArtifacts,
    xi_fit: Option<XiFit>,
    hashes: &BTreeMap<String, String>,
) -> Result<Value> {
    let budget = detection_budget(&REFERENCE_BUDGET)?;
    let p = &artifacts.detection_probabilities;
    let tomography = artifacts.tomography.as_ref().map(|t| {
        json!({
            "matched_concurrence": (0..t.concurrences.len()).map(|k| t.concurrences[k].get(k).copied().flatten()).collect::<Vec<_>>(),
            "bell_fidelities": t.bell_fidelities(),
            "bell_fidelity_errors": t.errors.as_ref().map(|e| e.fidelity.clone()),
            "z_rotation_angles_rad": t.rotations.angles,
        })
    });
    Ok(json!({
        "config_sha256": artifacts.config_sha256,
        "seed": artifacts.seed,
        "attempts": artifacts.attempts,
        "attempts_per_setting": artifacts.count_table.attempts,
        "window_counts": artifacts.window_counts.counts,
        "multi_event_windows": artifacts.window_counts.multi_event_windows,
        "detection_probabilities": p,
        "mean_detection_probability": p.iter().sum::<f64>() / p.len() as f64,
        "xi": {
            "configured": artifacts.model.as_ref().map(|m| m.xi_configured),
            "fit": xi_fit.map(|f| f.xi),
            "fit_clamped": xi_fit.map(|f| f.clamped),
            "budget_max": budget.xi_max,
        },
        "model_exit_probabilities": artifacts.model.as_ref().map(|m| m.exit_probabilities.clone()),
        "modes": artifacts.model.as_ref().map(|m| m.modes),
        "tomography": tomography,
        "reference": {
            "window_counts": REFERENCE_WINDOW_COUNTS,
            "detection_efficiency": REFERENCE_XI,
            "bell_fidelity_range": REFERENCE_FIDELITY_RANGE,
        },
        "inputs": {
            "clicks_sha256": artifacts.input_sha256[0],
            "outcomes_sha256": artifacts.input_sha256[1],
        },
        "files": hashes,
    }))
}

/// Checks every file hash listed in a report manifest and returns the
/// manifest.
pub fn verify_report(dir: &Path) -> Result<Value> {
    let manifest: Value = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
    let files = manifest["files"]
        .as_object()
        .ok_or_else(|| Error::Validation("manifest has no file list".into()))?;
    for (name, expected) in files {
        let actual = hex_digest(&fs::read(dir.join(name))?);
        if Some(actual.as_str()) != expected.as_str() {
            return Err(Error::Validation(format!(
                "{name} does not match its manifest hash"
            )));
        }
    }
    Ok(manifest)
}

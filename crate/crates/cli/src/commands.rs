use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ionnode::coherence::ramsey_contrast_fit;
use ionnode::photon::analysis::REFERENCE_BUDGET;
use ionnode::photon::{detection_budget, fit_detection_efficiency};
use ionnode::pipeline::report::{analysis_options, write_logs};
use ionnode::pipeline::{
    analyze_logs, emit_report, read_outcomes_csv, simulate as run_simulation, verify_report,
};
use ionnode::pipeline::{ClickLog, RunConfig};
use ionnode::shuttling::{
    evaluate_extra_filter, reference_residual, run_shuttle, settling_time, voltage_position_fit,
    write_waveform_csv, FilterSpec, VoltageStepProgram,
};
use ionnode::{Error, Result, TWO_PI};
use serde_json::{json, Value};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

/// Reads the named numeric columns of a CSV file.
fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let headers = r.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            headers.iter().position(|h| h.trim() == *n).ok_or_else(|| {
                Error::InvalidInput(format!("{} has no `{n}` column", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, row) in r.records().enumerate() {
        let row = row?;
        for (c, &i) in idx.iter().enumerate() {
            let v: f64 = row.get(i).unwrap_or("").trim().parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "{} row {}: `{}` is not a number",
                    path.display(),
                    line + 2,
                    names[c]
                ))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

pub fn simulate(config: &Path, out: &Path) -> Result<Value> {
    let config = read_config(config)?;
    let (exp, artifacts) = run_simulation(&config)?;
    write_logs(&exp, out)?;
    emit_report(&artifacts, out)?;
    let manifest = verify_report(out)?;
    Ok(json!({
        "out": out,
        "report_files": manifest["files"].as_object().map_or(0, |f| f.len()),
        "config_sha256": manifest["config_sha256"],
        "mean_detection_probability": manifest["mean_detection_probability"],
        "xi": manifest["xi"],
    }))
}

pub fn analyze(clicks: &Path, outcomes: &Path, out: &Path, config: Option<&Path>) -> Result<Value> {
    let (mut config, given) = match config {
        Some(p) => (read_config(p)?, true),
        None => (RunConfig::default(), false),
    };
    let log = ClickLog::read_csv(open(clicks)?, config.source.bin_width_us)?;
    let (records, ions) = read_outcomes_csv(open(outcomes)?)?;
    config.trap.ion_count = ions;
    let windows = config.window_spec()?;
    let mut artifacts = analyze_logs(&log, &records, ions, &windows, &analysis_options(&config))?;
    if given {
        artifacts.config_sha256 = Some(config.sha256()?);
        artifacts.seed = Some(config.seed);
    }
    emit_report(&artifacts, out)?;
    let manifest = verify_report(out)?;
    Ok(json!({
        "out": out,
        "attempts": manifest["attempts"],
        "window_counts": manifest["window_counts"],
        "multi_event_windows": manifest["multi_event_windows"],
        "tomography": manifest["tomography"],
    }))
}

pub struct ShuttleArgs {
    pub steps_file: PathBuf,
    pub tp_us: f64,
    pub filters: Vec<String>,
    pub extra_cutoff_khz: Option<f64>,
    pub omega_z_2pi_khz: f64,
    pub travel_um: f64,
    pub out: PathBuf,
}

pub fn shuttle(args: &ShuttleArgs) -> Result<Value> {
    let levels = read_columns(&args.steps_file, &["v_volts"])?.remove(0);
    if levels.len() < 2 {
        return Err(Error::InvalidInput(
            "the step program needs at least two levels".into(),
        ));
    }
    let filters: Vec<FilterSpec> = args
        .filters
        .iter()
        .map(|f| f.parse())
        .collect::<Result<_>>()?;
    let omega = TWO_PI * args.omega_z_2pi_khz * 1e3;
    let mut program = VoltageStepProgram::new(levels, args.tp_us * 1e-6);
    program.travel = args.travel_um * 1e-6;
    program.validate()?;
    let run = run_shuttle(&program, &filters, omega)?;

    fs::create_dir_all(&args.out)?;
    write_waveform_csv(
        &program,
        &run.signal,
        File::create(args.out.join("waveform.csv"))?,
    )?;
    let stride = ((0.01e-6 / run.trajectory.dt).round() as usize).max(1);
    run.trajectory
        .write_csv(File::create(args.out.join("trajectory.csv"))?, stride)?;

    let mut summary = json!({
        "steps": program.step_count(),
        "a_com_um": run.trajectory.amplitude * 1e6,
        "residual_offset_um": run.trajectory.residual_offset * 1e6,
        "sample_interval_ns": run.trajectory.dt * 1e9,
    });
    if let Some(khz) = args.extra_cutoff_khz {
        let extra = FilterSpec::first_order(khz * 1e3);
        let single = VoltageStepProgram {
            voltages: program.voltages[..2].to_vec(),
            travel: program.step_sizes()[0],
            ..program.clone()
        };
        let report = evaluate_extra_filter(
            &single,
            &program,
            &filters,
            extra,
            omega,
            reference_residual(),
        )?;
        summary["extra_filter"] = json!({
            "cutoff_khz": khz,
            "a_com_without_um": report.nine_without * 1e6,
            "a_com_with_um": report.nine_with * 1e6,
            "reduction": report.nine_step_reduction,
            "single_step_reduction": report.single_step_reduction,
            "settling_factor": report.settling_factor,
            "settling_time_us": settling_time(&filters, reference_residual())? * 1e6,
        });
    }
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_vec_pretty(&summary)?,
    )?;
    Ok(summary)
}

pub fn fit_xi(input: &Path) -> Result<Value> {
    let cols = read_columns(input, &["P_measured", "P_exit"])?;
    let fit = fit_detection_efficiency(&cols[0], &cols[1])?;
    let budget = detection_budget(&REFERENCE_BUDGET)?;
    Ok(json!({ "xi": fit.xi, "clamped": fit.clamped, "xi_max": budget.xi_max }))
}

pub fn fit_ramsey(input: &Path) -> Result<Value> {
    let cols = read_columns(input, &["t_ms", "contrast"])?;
    let t: Vec<f64> = cols[0].iter().map(|x| x * 1e-3).collect();
    let fit = ramsey_contrast_fit(&t, &cols[1])?;
    Ok(json!({ "sigma_ms": fit.sigma * 1e3, "sigma_stderr_ms": fit.sigma_stderr * 1e3 }))
}

pub fn fit_voltage(input: &Path) -> Result<Value> {
    let cols = read_columns(input, &["z_um", "v_volts"])?;
    let z: Vec<f64> = cols[0].iter().map(|x| x * 1e-6).collect();
    let fit = voltage_position_fit(&z, &cols[1])?;
    Ok(json!({
        "gradient_nm_per_mv": fit.slope * 1e6,
        "gradient_stderr_nm_per_mv": fit.slope_stderr * 1e6,
        "intercept_um": fit.intercept * 1e6,
    }))
}

pub fn report(dir: &Path) -> Result<Value> {
    let m = verify_report(dir)?;
    Ok(json!({
        "verified": true,
        "files": m["files"].as_object().map_or(0, |f| f.len()),
        "seed": m["seed"],
        "config_sha256": m["config_sha256"],
        "window_counts": m["window_counts"],
        "mean_detection_probability": m["mean_detection_probability"],
        "xi": m["xi"],
        "tomography": m["tomography"],
    }))
}

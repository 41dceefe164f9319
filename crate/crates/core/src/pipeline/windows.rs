//! Photon windows, arrival-time histograms, per-window counts and the join
//! of clicks with ion outcomes into tomography counts.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::records::{ClickLog, ClickRecord, OutcomeRecord};
use crate::error::ensure;
use crate::tomography::CountTable;
use crate::{Error, Result};

/// Photon windows aligned with the Raman pulse starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Start of each window in sequence time (µs).
    pub starts_us: Vec<f64>,
    pub width_us: f64,
}

impl WindowSpec {
    pub fn new(starts_us: Vec<f64>, width_us: f64) -> Result<Self> {
        let w = Self {
            starts_us,
            width_us,
        };
        w.validate()?;
        Ok(w)
    }

    /// `n` windows of `width_us`, `pitch_us` apart.
    pub fn uniform(n: usize, pitch_us: f64, width_us: f64) -> Result<Self> {
        Self::new((0..n).map(|k| k as f64 * pitch_us).collect(), width_us)
    }

    pub fn len(&self) -> usize {
        self.starts_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts_us.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.starts_us.is_empty(), || "no windows".into())?;
        ensure(self.width_us > 0.0, || {
            "window width must be positive".into()
        })?;
        for pair in self.starts_us.windows(2) {
            if pair[1] < pair[0] + self.width_us - 1e-9 {
                return Err(Error::Validation(format!(
                    "windows at {} and {} µs overlap",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }

    fn check_click(&self, c: &ClickRecord, bin_width_us: f64) -> Result<()> {
        ensure(c.window_index >= 1 && c.window_index <= self.len(), || {
            format!("click in window {} of {}", c.window_index, self.len())
        })?;
        ensure(
            (c.time_bin as f64 * bin_width_us) < self.width_us - 1e-9,
            || {
                format!(
                    "click at bin {} beyond the {} µs window",
                    c.time_bin, self.width_us
                )
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_us: f64,
    /// Absolute bin start times (µs), window by window.
    pub time_us: Vec<f64>,
    /// Counts per attempt per µs.
    pub density_per_us: Vec<f64>,
    pub bins_per_window: usize,
}

impl Histogram {
    /// Area under window `k` (zero-based).
    pub fn window_area(&self, k: usize) -> f64 {
        self.density_per_us[k * self.bins_per_window..(k + 1) * self.bins_per_window]
            .iter()
            .sum::<f64>()
            * self.bin_width_us
    }

    /// Bin of maximum density inside window `k`.
    pub fn window_peak(&self, k: usize) -> usize {
        let w = &self.density_per_us[k * self.bins_per_window..(k + 1) * self.bins_per_window];
        (0..w.len()).fold(0, |best, i| if w[i] > w[best] { i } else { best })
    }

    /// `time_us,density_per_us`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["time_us", "density_per_us"])?;
        for (t, d) in self.time_us.iter().zip(&self.density_per_us) {
            w.write_record([format!("{t:.1}"), format!("{d:.9e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Clicks grouped into `(attempt, window)` cells, in log order.
fn cells(log: &ClickLog) -> Vec<&[ClickRecord]> {
    log.records
        .chunk_by(|a, b| a.attempt_index == b.attempt_index && a.window_index == b.window_index)
        .collect()
}

/// Arrival-time density from single-detection windows, normalised by the
/// number of attempts and the bin width.
pub fn histogram(log: &ClickLog, windows: &WindowSpec, attempts: u64) -> Result<Histogram> {
    windows.validate()?;
    ensure(attempts >= 1, || "attempts must be ≥ 1".into())?;
    let per = windows.width_us / log.bin_width_us;
    ensure((per - per.round()).abs() < 1e-9, || {
        "bin width must divide the window width".into()
    })?;
    let per = per.round() as usize;
    let mut counts = vec![0u64; per * windows.len()];
    for cell in cells(log) {
        let c = &cell[0];
        windows.check_click(c, log.bin_width_us)?;
        if cell.len() == 1 {
            counts[(c.window_index - 1) * per + c.time_bin as usize] += 1;
        }
    }
    let norm = attempts as f64 * log.bin_width_us;
    Ok(Histogram {
        bin_width_us: log.bin_width_us,
        time_us: windows
            .starts_us
            .iter()
            .flat_map(|s| (0..per).map(move |b| s + b as f64 * log.bin_width_us))
            .collect(),
        density_per_us: counts.iter().map(|&n| n as f64 / norm).collect(),
        bins_per_window: per,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    /// Single-detection windows per photon window.
    pub counts: Vec<u64>,
    /// Windows with two or more clicks, excluded from `counts`.
    pub multi_event_windows: u64,
    /// Clicks in those windows.
    pub multi_event_clicks: u64,
}

pub fn window_counts(log: &ClickLog, windows: &WindowSpec) -> Result<WindowCounts> {
    let mut out = WindowCounts {
        counts: vec![0; windows.len()],
        multi_event_windows: 0,
        multi_event_clicks: 0,
    };
    for cell in cells(log) {
        windows.check_click(&cell[0], log.bin_width_us)?;
        if cell.len() == 1 {
            out.counts[cell[0].window_index - 1] += 1;
        } else {
            out.multi_event_windows += 1;
            out.multi_event_clicks += cell.len() as u64;
        }
    }
    Ok(out)
}

/// Joins every single-detection window with all ion outcomes of the same
/// attempt. Attempts per setting are the number of outcome records.
pub fn build_count_table(
    log: &ClickLog,
    outcomes: &[OutcomeRecord],
    windows: &WindowSpec,
    ions: usize,
) -> Result<CountTable> {
    let mut table = CountTable::new(ions, windows.len());
    let mut index: HashMap<u64, &OutcomeRecord> = HashMap::with_capacity(outcomes.len());
    for r in outcomes {
        if r.outcomes.len() != ions {
            return Err(Error::JoinFailure(format!(
                "attempt {} has {} ion outcomes",
                r.attempt_index,
                r.outcomes.len()
            )));
        }
        if r.setting_id > 8 {
            return Err(Error::JoinFailure(format!(
                "attempt {} has setting {}",
                r.attempt_index, r.setting_id
            )));
        }
        if index.insert(r.attempt_index, r).is_some() {
            return Err(Error::JoinFailure(format!(
                "attempt {} appears twice",
                r.attempt_index
            )));
        }
        table.attempts[r.setting_id] += 1;
    }
    for cell in cells(log) {
        let c = cell[0];
        windows.check_click(&c, log.bin_width_us)?;
        if cell.len() != 1 {
            continue;
        }
        let rec = index.get(&c.attempt_index).ok_or_else(|| {
            Error::JoinFailure(format!(
                "click for attempt {} has no ion outcomes",
                c.attempt_index
            ))
        })?;
        if rec.setting_id != c.setting_id {
            return Err(Error::JoinFailure(format!(
                "attempt {} is setting {} in the click log but {} in the outcomes",
                c.attempt_index, c.setting_id, rec.setting_id
            )));
        }
        for (i, &bit) in rec.outcomes.iter().enumerate() {
            table.add(
                c.setting_id,
                i,
                c.window_index - 1,
                2 * bit as usize + c.detector_channel as usize,
                1,
            );
        }
    }
    Ok(table)
}

//! Click-log and ion-outcome records and their CSV forms.

use std::io::{Read, Write};

use crate::error::ensure;
use crate::{Error, Result};

/// One detector click. Times are stored as bin indices of `bin_width_us`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClickRecord {
    pub attempt_index: u64,
    /// One-based photon window.
    pub window_index: usize,
    pub time_bin: u32,
    pub setting_id: usize,
    /// 0 for the `+1` photon outcome, 1 for `−1`.
    pub detector_channel: u8,
}

/// Ion read-out bits for one attempt (0 = `+1` eigenvalue).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeRecord {
    pub attempt_index: u64,
    pub setting_id: usize,
    pub outcomes: Vec<u8>,
}

/// Click log with its time quantisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickLog {
    pub bin_width_us: f64,
    /// Sorted by attempt, then window, then time.
    pub records: Vec<ClickRecord>,
}

impl ClickLog {
    pub fn new(bin_width_us: f64, mut records: Vec<ClickRecord>) -> Self {
        records.sort();
        Self {
            bin_width_us,
            records,
        }
    }

    fn time_us(&self, bin: u32) -> f64 {
        // Round away representation noise so the text form is stable.
        (bin as f64 * self.bin_width_us * 1e6).round() / 1e6
    }

    /// `attempt_index,setting_id,window_index,detector_channel,time_in_window_us`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "attempt_index",
            "setting_id",
            "window_index",
            "detector_channel",
            "time_in_window_us",
        ])?;
        for r in &self.records {
            w.write_record([
                r.attempt_index.to_string(),
                r.setting_id.to_string(),
                r.window_index.to_string(),
                r.detector_channel.to_string(),
                self.time_us(r.time_bin).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a click CSV, snapping times to the nearest multiple of
    /// `bin_width_us`.
    pub fn read_csv<R: Read>(reader: R, bin_width_us: f64) -> Result<Self> {
        ensure(bin_width_us > 0.0, || "bin width must be positive".into())?;
        let mut r = csv::Reader::from_reader(reader);
        let mut records = Vec::new();
        for row in r.deserialize() {
            let (attempt_index, setting_id, window_index, channel, t): (
                u64,
                usize,
                usize,
                u8,
                f64,
            ) = row?;
            if channel > 1 || !(t >= 0.0) || window_index == 0 || setting_id > 8 {
                return Err(Error::InvalidInput(format!(
                    "bad click row for attempt {attempt_index}"
                )));
            }
            records.push(ClickRecord {
                attempt_index,
                window_index,
                time_bin: (t / bin_width_us).round() as u32,
                setting_id,
                detector_channel: channel,
            });
        }
        Ok(Self::new(bin_width_us, records))
    }
}

/// `attempt_index,setting_id,ion_1,...,ion_N`.
pub fn write_outcomes_csv<W: Write>(
    records: &[OutcomeRecord],
    ions: usize,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["attempt_index".to_string(), "setting_id".to_string()];
    header.extend((1..=ions).map(|k| format!("ion_{k}")));
    w.write_record(&header)?;
    for r in records {
        ensure(r.outcomes.len() == ions, || {
            format!(
                "attempt {} has {} outcomes",
                r.attempt_index,
                r.outcomes.len()
            )
        })?;
        let mut row = vec![r.attempt_index.to_string(), r.setting_id.to_string()];
        row.extend(r.outcomes.iter().map(|b| b.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes_csv<R: Read>(reader: R) -> Result<(Vec<OutcomeRecord>, usize)> {
    let mut r = csv::Reader::from_reader(reader);
    let ions = r
        .headers()?
        .len()
        .checked_sub(2)
        .filter(|n| *n > 0)
        .ok_or_else(|| {
            Error::InvalidInput(
                "outcome file needs attempt, setting and at least one ion column".into(),
            )
        })?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let fields: Vec<u64> = row?;
        ensure(fields.len() == ions + 2, || "ragged outcome row".into())?;
        ensure(fields[2..].iter().all(|b| *b <= 1), || {
            format!("non-binary outcome in attempt {}", fields[0])
        })?;
        ensure(fields[1] <= 8, || {
            format!("setting {} outside 0..9", fields[1])
        })?;
        out.push(OutcomeRecord {
            attempt_index: fields[0],
            setting_id: fields[1] as usize,
            outcomes: fields[2..].iter().map(|&b| b as u8).collect(),
        });
    }
    Ok((out, ions))
}

//! Pauli-setting outcome counts for every (ion, photon-window) pair.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    /// Index into [`super::state::pauli`].
    pub fn pauli_index(self) -> usize {
        match self {
            PauliBasis::X => 1,
            PauliBasis::Y => 2,
            PauliBasis::Z => 3,
        }
    }
}

/// Ion basis × photon basis; `id = 3·ion + photon` with X, Y, Z = 0, 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Setting {
    pub ion: PauliBasis,
    pub photon: PauliBasis,
}

impl Setting {
    pub const COUNT: usize = 9;

    pub fn from_id(id: usize) -> Result<Self> {
        ensure(id < Self::COUNT, || format!("setting id {id} outside 0..9"))?;
        Ok(Self {
            ion: PauliBasis::ALL[id / 3],
            photon: PauliBasis::ALL[id % 3],
        })
    }

    pub fn id(self) -> usize {
        let k = |b: PauliBasis| PauliBasis::ALL.iter().position(|x| *x == b).unwrap_or(0);
        3 * k(self.ion) + k(self.photon)
    }

    pub fn all() -> impl Iterator<Item = Setting> {
        (0..Self::COUNT).map(|id| Self::from_id(id).expect("id in range"))
    }
}

/// Outcome counts indexed by setting, ion, photon window and the 2-bit
/// outcome `2·ion_bit + photon_bit` (bit 0 = `+1` eigenvalue).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    ions: usize,
    windows: usize,
    counts: Vec<u64>,
    /// Attempts made in each setting.
    pub attempts: [u64; Setting::COUNT],
}

impl CountTable {
    pub fn new(ions: usize, windows: usize) -> Self {
        Self {
            ions,
            windows,
            counts: vec![0; Setting::COUNT * ions * windows * 4],
            attempts: [0; Setting::COUNT],
        }
    }

    pub fn ions(&self) -> usize {
        self.ions
    }

    pub fn windows(&self) -> usize {
        self.windows
    }

    fn offset(&self, setting: usize, ion: usize, window: usize) -> usize {
        debug_assert!(setting < Setting::COUNT && ion < self.ions && window < self.windows);
        ((setting * self.ions + ion) * self.windows + window) * 4
    }

    /// Four outcome counts for a setting and a zero-based (ion, window) pair.
    pub fn outcomes(&self, setting: usize, ion: usize, window: usize) -> [u64; 4] {
        let o = self.offset(setting, ion, window);
        [
            self.counts[o],
            self.counts[o + 1],
            self.counts[o + 2],
            self.counts[o + 3],
        ]
    }

    pub fn set_outcomes(&mut self, setting: usize, ion: usize, window: usize, values: [u64; 4]) {
        let o = self.offset(setting, ion, window);
        self.counts[o..o + 4].copy_from_slice(&values);
    }

    pub fn add(&mut self, setting: usize, ion: usize, window: usize, outcome: usize, n: u64) {
        let o = self.offset(setting, ion, window);
        self.counts[o + outcome] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        for s in 0..Setting::COUNT {
            for i in 0..self.ions {
                for j in 0..self.windows {
                    let t: u64 = self.outcomes(s, i, j).iter().sum();
                    ensure(t <= self.attempts[s], || {
                        format!(
                            "setting {s} pair ({}, {}) has {t} events but {} attempts",
                            i + 1,
                            j + 1,
                            self.attempts[s]
                        )
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Writes `setting_id,ion_index,photon_window,outcome,count` rows, one per
    /// cell including zeros; indices are one-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "setting_id",
            "ion_index",
            "photon_window",
            "outcome",
            "count",
        ])?;
        for s in 0..Setting::COUNT {
            for i in 0..self.ions {
                for j in 0..self.windows {
                    for (k, n) in self.outcomes(s, i, j).iter().enumerate() {
                        w.serialize((s, i + 1, j + 1, k, n))?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV written by [`CountTable::write_csv`]. Attempts are not
    /// stored in the file; each setting's attempts are set to its largest
    /// per-pair total, the smallest value consistent with the counts.
    pub fn read_csv<R: Read>(reader: R, ions: usize, windows: usize) -> Result<Self> {
        let mut table = Self::new(ions, windows);
        let mut r = csv::Reader::from_reader(reader);
        for row in r.deserialize() {
            let (s, i, j, k, n): (usize, usize, usize, usize, u64) = row?;
            if s >= Setting::COUNT || i == 0 || i > ions || j == 0 || j > windows || k > 3 {
                return Err(Error::InvalidInput(format!(
                    "count row ({s}, {i}, {j}, {k}) out of range"
                )));
            }
            table.add(s, i - 1, j - 1, k, n);
        }
        for s in 0..Setting::COUNT {
            table.attempts[s] = (0..ions)
                .flat_map(|i| (0..windows).map(move |j| (i, j)))
                .map(|(i, j)| table.outcomes(s, i, j).iter().sum::<u64>())
                .max()
                .unwrap_or(0);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setting_ids_round_trip() {
        for id in 0..9 {
            assert_eq!(Setting::from_id(id).unwrap().id(), id);
        }
        assert!(Setting::from_id(9).is_err());
        assert_eq!(
            Setting::from_id(8).unwrap(),
            Setting {
                ion: PauliBasis::Z,
                photon: PauliBasis::Z
            }
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CountTable::new(2, 3);
        t.add(4, 1, 2, 3, 17);
        t.add(0, 0, 0, 1, 5);
        t.attempts = [17; 9];
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = CountTable::read_csv(buf.as_slice(), 2, 3).unwrap();
        assert_eq!(back.outcomes(4, 1, 2), [0, 0, 0, 17]);
        assert_eq!(back.outcomes(0, 0, 0), [0, 5, 0, 0]);
        assert_eq!(back.attempts[4], 17);
        assert!(CountTable::read_csv(
            "setting_id,ion_index,photon_window,outcome,count\n9,1,1,0,1\n".as_bytes(),
            2,
            3
        )
        .is_err());
    }

    #[test]
    fn validation_catches_excess_counts() {
        let mut t = CountTable::new(1, 1);
        t.add(0, 0, 0, 0, 3);
        assert!(t.validate().is_err());
        t.attempts[0] = 3;
        assert!(t.validate().is_ok());
    }
}

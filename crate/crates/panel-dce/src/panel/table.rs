use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};

/// Hard cap on `T * log2(|W|)`: a general table stores one entry per path, so
/// anything past ~16M paths per unit-period is rejected up front.
pub const PATH_BITS_CAP: u32 = 24;

/// Pack a path as a base-`|W|` integer. Deterministic, allocation-free keys
/// for the exhaustive table.
#[inline]
pub fn pack_path(path: &[Treatment], n_labels: usize) -> u32 {
    let mut key = 0u32;
    for &t in path.iter().rev() {
        key = key * n_labels as u32 + t.0 as u32;
    }
    key
}

/// Exhaustive path-indexed outcome table: `Y_{i,t}(w_{1:t})` stored for every
/// path. The exact-oracle representation.
#[derive(Debug, Clone)]
pub struct TablePanel {
    alphabet: TreatmentAlphabet,
    n_units: usize,
    n_periods: usize,
    // tables[i][t] has |W|^(t+1) entries keyed by packed path
    tables: Vec<Vec<Vec<f64>>>,
}

impl TablePanel {
    /// Build the table by evaluating `f(unit, time, path)` on every path.
    pub fn tabulate<F>(
        alphabet: TreatmentAlphabet,
        n_units: usize,
        n_periods: usize,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, &[Treatment]) -> f64,
    {
        let k = alphabet.len();
        let bits = (n_periods as f64 * (k as f64).log2()).ceil() as u32;
        if bits > PATH_BITS_CAP {
            return Err(Error::TableTooLarge { bits, cap: PATH_BITS_CAP });
        }
        let mut tables = Vec::with_capacity(n_units);
        let mut path = Vec::with_capacity(n_periods);
        for i in 0..n_units {
            let mut unit_tables = Vec::with_capacity(n_periods);
            for t in 0..n_periods {
                let n_paths = k.pow(t as u32 + 1);
                let mut entries = vec![0.0; n_paths];
                for key in 0..n_paths {
                    unpack_into(key as u32, k, t + 1, &mut path);
                    entries[key] = f(i, t, &path);
                }
                unit_tables.push(entries);
            }
            tables.push(unit_tables);
        }
        Ok(Self { alphabet, n_units, n_periods, tables })
    }

    /// Snapshot any panel representation into an exhaustive table.
    pub fn from_panel(panel: &super::PotentialOutcomePanel) -> Result<Self> {
        let mut err = None;
        let table = Self::tabulate(
            panel.alphabet().clone(),
            panel.n_units(),
            panel.n_periods(),
            |i, t, path| match panel.evaluate(i, t, path) {
                Ok(v) => v,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(table),
        }
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn alphabet(&self) -> &TreatmentAlphabet {
        &self.alphabet
    }

    pub fn lookup(&self, unit: usize, time: usize, path: &[Treatment]) -> Result<f64> {
        if path.len() != time + 1 {
            return Err(Error::PathLength { expected: time + 1, got: path.len() });
        }
        let key = pack_path(path, self.alphabet.len());
        Ok(self.tables[unit][time][key as usize])
    }
}

fn unpack_into(mut key: u32, n_labels: usize, len: usize, out: &mut Vec<Treatment>) {
    out.clear();
    for _ in 0..len {
        out.push(Treatment((key % n_labels as u32) as u8));
        key /= n_labels as u32;
    }
}

/// Iterate every path of the given length, in packed-key order.
pub(crate) fn for_each_path<F: FnMut(u32, &[Treatment])>(n_labels: usize, len: usize, mut f: F) {
    let mut path = Vec::with_capacity(len);
    let n_paths = n_labels.pow(len as u32);
    for key in 0..n_paths {
        unpack_into(key as u32, n_labels, len, &mut path);
        f(key as u32, &path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack_round_trip() {
        let mut path = Vec::new();
        for key in 0..27u32 {
            unpack_into(key, 3, 3, &mut path);
            assert_eq!(pack_path(&path, 3), key);
        }
    }

    #[test]
    fn cap_enforced() {
        let err = TablePanel::tabulate(TreatmentAlphabet::binary(), 1, 30, |_, _, _| 0.0);
        assert!(matches!(err, Err(Error::TableTooLarge { .. })));
    }

    #[test]
    fn tabulate_and_lookup() {
        let t = TablePanel::tabulate(TreatmentAlphabet::binary(), 1, 2, |_, _, p| {
            p.iter().map(|w| w.0 as f64).sum()
        })
        .unwrap();
        let one = Treatment(1);
        let zero = Treatment(0);
        assert_eq!(t.lookup(0, 1, &[one, one]).unwrap(), 2.0);
        assert_eq!(t.lookup(0, 1, &[zero, one]).unwrap(), 1.0);
        assert!(t.lookup(0, 1, &[one]).is_err());
    }
}

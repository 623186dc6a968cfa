use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a treatment label within a [`TreatmentAlphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Treatment(pub u8);

impl Treatment {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The finite, ordered set of treatment labels an experiment can assign.
///
/// Labels are stored as strings; alphabets whose labels all parse as numbers
/// additionally support the numeric coding required by the linear panel
/// machinery and the fixed-effects estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TreatmentAlphabet {
    labels: Vec<String>,
}

impl TreatmentAlphabet {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidSpec("alphabet needs at least two labels".into()));
        }
        if labels.len() > u8::MAX as usize + 1 {
            return Err(Error::InvalidSpec("alphabet larger than 256 labels".into()));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::InvalidSpec(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// The binary control/treatment alphabet `{"0", "1"}`.
    pub fn binary() -> Self {
        Self { labels: vec!["0".into(), "1".into()] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, t: Treatment) -> bool {
        t.index() < self.labels.len()
    }

    pub fn check(&self, t: Treatment) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::LabelOutsideAlphabet { index: t.index(), size: self.labels.len() })
        }
    }

    pub fn check_path(&self, path: &[Treatment]) -> Result<()> {
        path.iter().try_for_each(|&t| self.check(t))
    }

    pub fn label(&self, t: Treatment) -> &str {
        &self.labels[t.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<Treatment> {
        self.labels.iter().position(|l| l == label).map(|k| Treatment(k as u8))
    }

    pub fn all(&self) -> impl Iterator<Item = Treatment> + '_ {
        (0..self.labels.len()).map(|k| Treatment(k as u8))
    }

    /// Numeric value of each label, or an error when any label fails to parse.
    pub fn numeric_values(&self) -> Result<Vec<f64>> {
        self.labels
            .iter()
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::NonNumericAlphabet(format!("label {l:?}")))
            })
            .collect()
    }
}

impl TryFrom<Vec<String>> for TreatmentAlphabet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<TreatmentAlphabet> for Vec<String> {
    fn from(a: TreatmentAlphabet) -> Self {
        a.labels
    }
}

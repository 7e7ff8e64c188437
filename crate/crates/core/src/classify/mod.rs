//! Three classifiers over event recordings — feature-statistics kNN, a
//! spiking convolutional hierarchy, and a kernel-method readout — plus the
//! evaluation plumbing they share.

pub mod hfirst;
pub mod knn;
pub mod skim;

/// Per-class credit earned on a labeled test set.
///
/// Hard classifiers award credit 1 for a correct prediction and 0 otherwise
/// (refusals score 0); soft classifiers award the probability assigned to
/// the true class.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Class labels in sorted order.
    pub classes: Vec<String>,
    pub credit: Vec<f64>,
    pub totals: Vec<usize>,
}

impl EvalReport {
    /// Build a report from `(true label, credit)` pairs, credit in [0, 1].
    pub fn from_scores<S: AsRef<str>>(scored: &[(S, f64)]) -> EvalReport {
        let mut classes: Vec<String> = scored
            .iter()
            .map(|(label, _)| label.as_ref().to_string())
            .collect();
        classes.sort();
        classes.dedup();
        let mut credit = vec![0.0; classes.len()];
        let mut totals = vec![0usize; classes.len()];
        for (label, score) in scored {
            let idx = classes
                .binary_search_by(|c| c.as_str().cmp(label.as_ref()))
                .expect("label present by construction");
            credit[idx] += score;
            totals[idx] += 1;
        }
        EvalReport {
            classes,
            credit,
            totals,
        }
    }

    /// Mean over classes of per-class accuracy; every class weighs the same
    /// regardless of its sample count.
    pub fn balanced_accuracy(&self) -> f64 {
        let accs: Vec<f64> = (0..self.classes.len())
            .filter(|&i| self.totals[i] > 0)
            .map(|i| self.credit[i] / self.totals[i] as f64)
            .collect();
        if accs.is_empty() {
            0.0
        } else {
            accs.iter().sum::<f64>() / accs.len() as f64
        }
    }

    /// Credit over all samples, ignoring class balance.
    pub fn overall_accuracy(&self) -> f64 {
        let total: usize = self.totals.iter().sum();
        if total == 0 {
            0.0
        } else {
            self.credit.iter().sum::<f64>() / total as f64
        }
    }

    pub fn class_accuracy(&self, class: &str) -> Option<f64> {
        let idx = self.classes.iter().position(|c| c == class)?;
        (self.totals[idx] > 0).then(|| self.credit[idx] / self.totals[idx] as f64)
    }
}

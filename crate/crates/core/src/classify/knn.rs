//! k-nearest-neighbour classification over recording statistics.

use thiserror::Error;

use super::EvalReport;
use crate::analysis::{Feature, FeatureVector};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum KnnError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no feature selected")]
    NoFeatures,
    #[error("no usable training samples (all selected features undefined)")]
    EmptyTraining,
}

/// Nearest-neighbour vote over a chosen subset of the ten statistics.
#[derive(Clone, Debug)]
pub struct KnnModel {
    k: usize,
    features: Vec<Feature>,
    points: Vec<(Vec<f64>, String)>,
}

impl KnnModel {
    /// Training samples where any selected feature is undefined are dropped;
    /// an entirely undefined training set is an error.
    pub fn fit(
        k: usize,
        features: &[Feature],
        training: &[(String, FeatureVector)],
    ) -> Result<KnnModel, KnnError> {
        if k == 0 {
            return Err(KnnError::ZeroK);
        }
        if features.is_empty() {
            return Err(KnnError::NoFeatures);
        }
        let points: Vec<(Vec<f64>, String)> = training
            .iter()
            .filter_map(|(label, vector)| {
                select(features, vector).map(|values| (values, label.clone()))
            })
            .collect();
        if points.is_empty() {
            return Err(KnnError::EmptyTraining);
        }
        Ok(KnnModel {
            k,
            features: features.to_vec(),
            points,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    /// Majority label among the k nearest training points by Euclidean
    /// distance. Vote ties go to the candidate with the smaller summed
    /// distance, then to the earlier label in sort order. Returns `None`
    /// (classification refused) when a selected feature is undefined on
    /// the sample.
    pub fn classify(&self, sample: &FeatureVector) -> Option<&str> {
        let query = select(&self.features, sample)?;
        let mut neighbors: Vec<(f64, &str)> = self
            .points
            .iter()
            .map(|(values, label)| (distance(&query, values), label.as_str()))
            .collect();
        neighbors.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        neighbors.truncate(self.k);

        let mut votes: Vec<(&str, usize, f64)> = Vec::new();
        for &(dist, label) in &neighbors {
            match votes.iter_mut().find(|(l, _, _)| *l == label) {
                Some((_, count, sum)) => {
                    *count += 1;
                    *sum += dist;
                }
                None => votes.push((label, 1, dist)),
            }
        }
        votes
            .into_iter()
            .max_by(|a, b| {
                a.1.cmp(&b.1)
                    .then(b.2.partial_cmp(&a.2).unwrap())
                    .then(b.0.cmp(a.0))
            })
            .map(|(label, _, _)| label)
    }

    /// Hard evaluation: refusals and wrong predictions both score zero.
    pub fn evaluate(&self, test: &[(String, FeatureVector)]) -> EvalReport {
        let scored: Vec<(&str, f64)> = test
            .iter()
            .map(|(label, vector)| {
                let credit = match self.classify(vector) {
                    Some(predicted) if predicted == label => 1.0,
                    _ => 0.0,
                };
                (label.as_str(), credit)
            })
            .collect();
        EvalReport::from_scores(&scored)
    }
}

fn select(features: &[Feature], vector: &FeatureVector) -> Option<Vec<f64>> {
    features.iter().map(|&f| vector.get(f)).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

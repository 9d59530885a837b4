use serde::{Deserialize, Serialize};

use super::{DetectError, FeatureVector, D};
use crate::benchgen::Label;

/// Labeled training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingScenario {
    pub id: String,
    pub features: Vec<FeatureVector>,
    pub labels: Vec<Label>,
}

/// Column-wise standardization fitted on a training set. Columns with zero
/// variance keep unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[FeatureVector]) -> Standardizer {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; D];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.as_slice()) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; D];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.as_slice()).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let scale = var.iter().map(|&v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &FeatureVector) -> Vec<f64> {
        x.as_slice().iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnVerdict {
    pub label: Label,
    /// Fraction of the `k` neighbors that are infected.
    pub score: f64,
}

/// Euclidean k-NN on standardized features. Distance ties go to the
/// earlier training row.
pub fn knn_classify(train: &TrainingScenario, test: &[FeatureVector], k: usize) -> Result<Vec<KnnVerdict>, DetectError> {
    let n = train.features.len();
    if train.labels.len() != n {
        return Err(DetectError::DegenerateTraining(format!("{n} feature rows but {} labels", train.labels.len())));
    }
    let infected = train.labels.iter().filter(|&&l| l == Label::Infected).count();
    if infected == 0 || infected == n {
        return Err(DetectError::DegenerateTraining("training set has a single class".into()));
    }
    if k == 0 || k % 2 == 0 || k > n {
        return Err(DetectError::InvalidK { k, n });
    }
    let st = Standardizer::fit(&train.features);
    let z_train: Vec<Vec<f64>> = train.features.iter().map(|x| st.apply(x)).collect();
    Ok(test
        .iter()
        .map(|x| {
            let z = st.apply(x);
            let mut d: Vec<(f64, usize)> = z_train
                .iter()
                .enumerate()
                .map(|(i, t)| (t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let votes = d[..k].iter().filter(|&&(_, i)| train.labels[i] == Label::Infected).count();
            KnnVerdict {
                label: if 2 * votes > k { Label::Infected } else { Label::Clean },
                score: votes as f64 / k as f64,
            }
        })
        .collect())
}

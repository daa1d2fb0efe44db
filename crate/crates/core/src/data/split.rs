use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use super::label::LabelClass;
use crate::error::{Error, Result};
use crate::numeric::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stratified")]
    pub stratified: bool,
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_stratified() -> bool {
    true
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(Error::config(format!(
                "train_fraction {} must lie strictly between 0 and 1",
                self.train_fraction
            )))
        }
    }
}

/// Hamilton apportionment: splits `total` seats in proportion to `weights`.
/// Every entry gets the floor of its quota; leftovers go to the largest
/// remainders, lower index first on ties.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 || weights.is_empty() {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = seats.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        seats[i] += 1;
    }
    seats
}

/// Seeded train/test partition. With `stratified`, per-class test counts are
/// the largest-remainder apportionment of `round(n * (1 - train_fraction))`
/// test rows over the class sizes, so each class is off by less than one row
/// from its exact share. Rows keep their original relative order within each
/// part.
pub fn stratified_split(
    data: &FeatureMatrix,
    cfg: &SplitConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    cfg.validate()?;
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::domain("cannot split an empty dataset"));
    }
    let test_total = (n as f64 * (1.0 - cfg.train_fraction)).round() as usize;
    let mut rng = RngStream::new(cfg.seed);
    let mut is_test = vec![false; n];

    if cfg.stratified {
        let counts = data.class_counts();
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let per_class = largest_remainder(&weights, test_total);
        for class in LabelClass::ALL {
            let mut members: Vec<usize> = (0..n).filter(|&i| data.labels()[i] == class).collect();
            rng.shuffle(&mut members);
            for &i in members.iter().take(per_class[class.index()]) {
                is_test[i] = true;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut all);
        for &i in all.iter().take(test_total) {
            is_test[i] = true;
        }
    }

    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(counts: [usize; 3]) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in LabelClass::ALL {
            for _ in 0..counts[class.index()] {
                rows.push(vec![rows.len() as f64]);
                labels.push(class);
            }
        }
        FeatureMatrix::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn apportionment_by_hand() {
        // quotas 1.0, 0.6, 0.4 -> floors 1,0,0; one leftover seat to F.
        assert_eq!(largest_remainder(&[5.0, 3.0, 2.0], 2), vec![1, 1, 0]);
        // quotas 26, 5.6, 0.8 -> floors 26,5,0; leftover to W.
        assert_eq!(largest_remainder(&[130.0, 28.0, 4.0], 32), vec![26, 5, 1]);
        assert_eq!(largest_remainder(&[1.0, 1.0], 1), vec![1, 0]);
    }

    #[test]
    fn ten_rows() {
        let (train, test) =
            stratified_split(&labelled([5, 3, 2]), &SplitConfig::default()).unwrap();
        assert_eq!(test.class_counts(), [1, 1, 0]);
        assert_eq!(train.class_counts(), [4, 2, 2]);
    }

    #[test]
    fn one_weak_of_four_in_test() {
        let (_, test) = stratified_split(&labelled([130, 28, 4]), &SplitConfig::default()).unwrap();
        assert_eq!(test.n_rows(), 32);
        assert_eq!(test.class_counts()[LabelClass::W.index()], 1);
    }

    #[test]
    fn deterministic_partition() {
        let data = labelled([20, 11, 7]);
        let cfg = SplitConfig {
            seed: 9,
            ..SplitConfig::default()
        };
        let a = stratified_split(&data, &cfg).unwrap();
        let b = stratified_split(&data, &cfg).unwrap();
        assert_eq!(a, b);

        let mut ids: Vec<f64> = a.0.features().as_slice().to_vec();
        ids.extend_from_slice(a.1.features().as_slice());
        ids.sort_by(f64::total_cmp);
        assert_eq!(ids, (0..38).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        let empty = FeatureMatrix::from_rows(&[], vec![]).unwrap();
        assert!(matches!(
            stratified_split(&empty, &SplitConfig::default()),
            Err(Error::Domain(_))
        ));
        let bad = SplitConfig {
            train_fraction: 1.0,
            ..SplitConfig::default()
        };
        assert!(stratified_split(&labelled([2, 2, 2]), &bad).is_err());
    }
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Example;
use crate::error::{Error, Result};
use crate::rng::{GaussianStream, NoiseStreamKey, StreamDomain};

/// Parameters that fully determine a synthetic blob dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub seed: u64,
    pub size: usize,
    pub classes: usize,
    pub dimension: usize,
    /// Standard deviation of each cluster around its centre.
    pub spread: f64,
    /// Fraction of examples whose label is replaced by a different class.
    #[serde(default)]
    pub label_noise: f64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.classes < 2 {
            problems.push(format!("classes must be at least 2, got {}", self.classes));
        }
        if self.size < self.classes {
            problems.push(format!(
                "size {} is smaller than class count {}",
                self.size, self.classes
            ));
        }
        if self.dimension == 0 {
            problems.push("dimension must be at least 1".into());
        }
        if !(self.spread > 0.0 && self.spread.is_finite()) {
            problems.push(format!("spread must be positive, got {}", self.spread));
        }
        if !(0.0..1.0).contains(&self.label_noise) {
            problems.push(format!("label_noise {} outside [0, 1)", self.label_noise));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::BadDatasetSpec(problems.join("; ")))
        }
    }
}

/// Gaussian clusters, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobDataset {
    pub spec: BlobSpec,
    pub examples: Vec<Example>,
}

/// Noise-free blobs; see [`BlobDataset::generate`] for label noise.
pub fn generate_blobs(
    seed: u64,
    size: usize,
    classes: usize,
    dimension: usize,
    spread: f64,
) -> Result<BlobDataset> {
    BlobDataset::generate(BlobSpec {
        seed,
        size,
        classes,
        dimension,
        spread,
        label_noise: 0.0,
    })
}

impl BlobDataset {
    /// Example `i` belongs to cluster `i mod classes`; cluster centres are
    /// standard normal vectors, members are centre plus `spread`-scaled
    /// normal noise. Then `round(label_noise · size)` distinct examples get a
    /// uniformly chosen wrong label.
    pub fn generate(spec: BlobSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = NoiseStreamKey::root(spec.seed).rng(StreamDomain::Data);
        let centres: Vec<Vec<f64>> = {
            let mut g = GaussianStream::new(&mut rng);
            (0..spec.classes)
                .map(|_| (0..spec.dimension).map(|_| g.next_standard()).collect())
                .collect()
        };
        let mut examples: Vec<Example> = {
            let mut g = GaussianStream::new(&mut rng);
            (0..spec.size)
                .map(|i| {
                    let class = i % spec.classes;
                    let features = centres[class]
                        .iter()
                        .map(|c| c + spec.spread * g.next_standard())
                        .collect();
                    Example::new(features, class)
                })
                .collect()
        };
        let flips = (spec.label_noise * spec.size as f64).round() as usize;
        if flips > 0 {
            let mut order: Vec<usize> = (0..spec.size).collect();
            let (chosen, _) = order.partial_shuffle(&mut rng, flips);
            for &i in chosen.iter() {
                let offset = 1 + rand::Rng::random_range(&mut rng, 0..spec.classes - 1);
                let e = &mut examples[i];
                e.label = (e.label + offset) % spec.classes;
            }
        }
        Ok(Self { spec, examples })
    }

    /// Shuffles with the split stream of `seed` and returns disjoint
    /// `(train, test)` parts, the first holding `round(train_fraction·size)`.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Vec<Example>, Vec<Example>)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::BadDatasetSpec(format!(
                "train fraction {train_fraction} outside (0, 1)"
            )));
        }
        let mut order: Vec<usize> = (0..self.examples.len()).collect();
        order.shuffle(&mut NoiseStreamKey::root(seed).rng(StreamDomain::Split));
        let n_train = (train_fraction * self.examples.len() as f64).round() as usize;
        let pick = |idx: &[usize]| idx.iter().map(|&i| self.examples[i].clone()).collect();
        Ok((pick(&order[..n_train]), pick(&order[n_train..])))
    }

    /// Count of examples per label.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.spec.classes];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let a = generate_blobs(7, 60, 3, 4, 0.5).unwrap();
        let b = generate_blobs(7, 60, 3, 4, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_blobs(8, 60, 3, 4, 0.5).unwrap());
    }

    #[test]
    fn equal_class_counts() {
        let d = generate_blobs(1, 120, 3, 2, 1.0).unwrap();
        assert_eq!(d.label_counts(), vec![40, 40, 40]);
        let d = generate_blobs(1, 11, 3, 2, 1.0).unwrap();
        assert_eq!(d.label_counts(), vec![4, 4, 3]);
    }

    #[test]
    fn label_noise_flips_exact_count_to_other_classes() {
        let spec = BlobSpec {
            seed: 3,
            size: 200,
            classes: 4,
            dimension: 3,
            spread: 0.2,
            label_noise: 0.2,
        };
        let noisy = BlobDataset::generate(spec.clone()).unwrap();
        let clean = BlobDataset::generate(BlobSpec {
            label_noise: 0.0,
            ..spec
        })
        .unwrap();
        let flipped = noisy
            .examples
            .iter()
            .zip(&clean.examples)
            .filter(|(a, b)| a.label != b.label)
            .count();
        assert_eq!(flipped, 40);
        for (a, b) in noisy.examples.iter().zip(&clean.examples) {
            assert_eq!(a.features, b.features);
        }
    }

    #[test]
    fn invalid_specs() {
        for (size, classes, dim, spread) in [
            (10, 1, 2, 1.0),
            (2, 3, 2, 1.0),
            (10, 2, 0, 1.0),
            (10, 2, 2, 0.0),
        ] {
            let err = generate_blobs(0, size, classes, dim, spread).unwrap_err();
            assert_eq!(err.code(), "bad-dataset-spec");
        }
        let err = BlobDataset::generate(BlobSpec {
            seed: 0,
            size: 10,
            classes: 2,
            dimension: 2,
            spread: 1.0,
            label_noise: 1.0,
        })
        .unwrap_err();
        assert_eq!(err.code(), "bad-dataset-spec");
    }

    #[test]
    fn split_is_disjoint_and_complete() {
        let d = generate_blobs(5, 101, 2, 3, 1.0).unwrap();
        let (train, test) = d.split(0.5, 9).unwrap();
        assert_eq!(train.len() + test.len(), 101);
        for e in &train {
            assert!(!test.contains(e));
        }
        assert_eq!(d.split(0.5, 9).unwrap(), (train, test));
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Label, PredictionTable};
use crate::error::{Error, Result};

/// Parameters for a synthetic prediction table with correlated model errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_examples: usize,
    pub label_space_size: usize,
    pub model_accuracies: Vec<f64>,
    /// Probability that a model's correctness draw reuses the example's
    /// shared difficulty instead of an independent draw.
    pub correlation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_examples == 0 {
            return Err(Error::validation("num_examples must be positive"));
        }
        if self.label_space_size < 2 {
            return Err(Error::validation("label_space_size must be at least 2"));
        }
        if self.model_accuracies.is_empty() {
            return Err(Error::validation("model_accuracies must be nonempty"));
        }
        if let Some(a) = self
            .model_accuracies
            .iter()
            .find(|a| !(**a > 0.0 && **a <= 1.0))
        {
            return Err(Error::validation(format!("accuracy {a} outside (0,1]")));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::validation(format!(
                "correlation {} outside [0,1]",
                self.correlation
            )));
        }
        Ok(())
    }
}

/// Generates a table whose models are `m1..mK`.
///
/// Example `i` draws from its own ChaCha stream (`seed`, stream `i`), so the
/// output does not depend on evaluation order. For each model a coin with
/// probability `correlation` selects the shared difficulty `u_i` over an
/// independent `v_im`; the model is correct iff the selected draw is below its
/// accuracy, which makes the marginal accuracy exact for every correlation.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<PredictionTable> {
    spec.validate()?;
    let n = spec.num_examples;
    let k = spec.model_accuracies.len();
    let l = spec.label_space_size;
    let mut true_labels = Vec::with_capacity(n);
    let mut predictions = vec![Vec::with_capacity(n); k];
    let mut scores = vec![Vec::with_capacity(n); k];

    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64);
        let truth = rng.random_range(0..l as u32);
        let shared: f64 = rng.random();
        true_labels.push(Label(truth));
        for (m, &acc) in spec.model_accuracies.iter().enumerate() {
            // Fixed number of draws per model keeps streams aligned.
            let use_shared = rng.random::<f64>() < spec.correlation;
            let own: f64 = rng.random();
            let wrong = rng.random_range(0..(l - 1) as u32);
            let draw = if use_shared { shared } else { own };
            let label = if draw < acc {
                truth
            } else if wrong >= truth {
                wrong + 1
            } else {
                wrong
            };
            predictions[m].push(Label(label));
            scores[m].push((1.0 - draw * (1.0 - acc)).clamp(0.0, 1.0));
        }
    }

    PredictionTable::new(
        l,
        (0..n).map(|i| format!("{i}")).collect(),
        true_labels,
        (1..=k).map(|m| format!("m{m}")).collect(),
        predictions,
        scores.into_iter().map(Some).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(acc: Vec<f64>, corr: f64, n: usize) -> SyntheticSpec {
        SyntheticSpec {
            num_examples: n,
            label_space_size: 5,
            model_accuracies: acc,
            correlation: corr,
            seed: 7,
        }
    }

    fn correct_mask(t: &PredictionTable, m: usize) -> Vec<bool> {
        t.predictions(m)
            .iter()
            .zip(t.true_labels())
            .map(|(p, y)| p == y)
            .collect()
    }

    #[test]
    fn perfect_models_always_correct() {
        for corr in [0.0, 0.5, 1.0] {
            let t = generate_synthetic(&spec(vec![1.0, 1.0], corr, 500)).unwrap();
            assert_eq!(t.accuracy(0), 1.0);
            assert_eq!(t.accuracy(1), 1.0);
        }
    }

    #[test]
    fn full_correlation_gives_identical_masks() {
        let t = generate_synthetic(&spec(vec![0.8, 0.8], 1.0, 5000)).unwrap();
        assert_eq!(correct_mask(&t, 0), correct_mask(&t, 1));
    }

    #[test]
    fn independent_models_multiply() {
        let t = generate_synthetic(&spec(vec![0.8, 0.8], 0.0, 100_000)).unwrap();
        let a = correct_mask(&t, 0);
        let b = correct_mask(&t, 1);
        let both = a.iter().zip(&b).filter(|(x, y)| **x && **y).count();
        let p = both as f64 / 100_000.0;
        assert!((p - 0.64).abs() <= 0.01, "P(both correct) = {p}");
    }

    #[test]
    fn wrong_labels_differ_from_truth() {
        let t = generate_synthetic(&spec(vec![0.3], 0.0, 2000)).unwrap();
        let wrong = t
            .predictions(0)
            .iter()
            .zip(t.true_labels())
            .filter(|(p, y)| p != y)
            .count();
        // no wrong draw can land on the true label, so error rate is 1 - acc in law
        assert!(wrong > 1200);
        assert!(t.predictions(0).iter().all(|l| l.index() < 5));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_synthetic(&spec(vec![], 0.0, 10)).is_err());
        assert!(generate_synthetic(&spec(vec![0.0], 0.0, 10)).is_err());
        assert!(generate_synthetic(&spec(vec![0.5], 1.5, 10)).is_err());
        assert!(generate_synthetic(&spec(vec![0.5], 0.5, 0)).is_err());
        let mut s = spec(vec![0.5], 0.5, 10);
        s.label_space_size = 1;
        assert!(generate_synthetic(&s).is_err());
    }

    #[test]
    fn same_seed_same_bytes() {
        let s = spec(vec![0.7, 0.9, 0.6], 0.4, 300);
        let a = generate_synthetic(&s).unwrap().to_csv_string();
        let b = generate_synthetic(&s).unwrap().to_csv_string();
        assert_eq!(a, b);
        let mut other = s.clone();
        other.seed = 8;
        assert_ne!(a, generate_synthetic(&other).unwrap().to_csv_string());
    }
}

//! Bias-free least-squares calibration of sentiment against poll shares, and
//! inference of normalized three-party triplets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::party::{Party, PerParty};

pub type CalibrationWeights = PerParty<f64>;

/// Closed-form minimizer of `sum (poll_i - senti_i * w)^2` with no
/// intercept: `w = sum(poll * senti) / sum(senti^2)`.
pub fn fit_weight(senti: &[f64], polls: &[f64]) -> std::result::Result<f64, String> {
    if senti.len() != polls.len() {
        return Err(format!(
            "series lengths differ ({} sentiment, {} poll)",
            senti.len(),
            polls.len()
        ));
    }
    if senti.is_empty() {
        return Err("no instances to fit".into());
    }
    let sxx: f64 = senti.iter().map(|s| s * s).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err("sentiment series is all zero".into());
    }
    let sxy: f64 = senti.iter().zip(polls).map(|(s, p)| s * p).sum();
    Ok(sxy / sxx)
}

/// Drops instances whose sentiment is missing, keeping the pairing.
pub fn paired(senti: &[Option<f64>], polls: &[f64]) -> (Vec<f64>, Vec<f64>) {
    senti
        .iter()
        .zip(polls)
        .filter_map(|(s, &p)| s.map(|s| (s, p)))
        .unzip()
}

pub fn fit_party(party: Party, senti: &[Option<f64>], polls: &[f64]) -> Result<f64> {
    let (s, p) = paired(senti, polls);
    fit_weight(&s, &p).map_err(|reason| Error::DegenerateFit { party, reason })
}

pub fn infer(senti: f64, w: f64) -> f64 {
    senti * w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferredTriplet {
    pub con: f64,
    pub lab: f64,
    pub lib: f64,
    /// False when negatives were clamped and the rest summed to at most one.
    pub normalized: bool,
}

impl InferredTriplet {
    pub fn to_array(&self) -> [f64; 3] {
        [self.con, self.lab, self.lib]
    }

    pub fn get(&self, party: Party) -> f64 {
        self.to_array()[party.index()]
    }
}

/// Non-negative triplets are divided by their sum. Negative entries are
/// clamped to zero and the result is only rescaled when the clamped sum
/// exceeds one.
pub fn normalize_triplet(raw: [f64; 3]) -> Result<InferredTriplet> {
    if raw.iter().any(|x| !x.is_finite()) || raw.iter().all(|&x| x <= 0.0) {
        return Err(Error::DegenerateInference(raw));
    }
    let any_negative = raw.iter().any(|&x| x < 0.0);
    let clamped = raw.map(|x| x.max(0.0));
    let sum: f64 = clamped.iter().sum();
    let (values, normalized) = if !any_negative || sum > 1.0 {
        (clamped.map(|x| x / sum), true)
    } else {
        (clamped, false)
    };
    Ok(InferredTriplet {
        con: values[0],
        lab: values[1],
        lib: values[2],
        normalized,
    })
}

/// Per-party sentiment series paired with ground-truth shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub senti: PerParty<Vec<Option<f64>>>,
    pub polls: Vec<[f64; 3]>,
}

impl Dataset {
    pub fn new(senti: PerParty<Vec<Option<f64>>>, polls: Vec<[f64; 3]>) -> Result<Self> {
        for (party, s) in senti.iter() {
            if s.len() != polls.len() {
                return Err(Error::invalid(
                    "dataset",
                    format!(
                        "{party} series has {} values for {} polls",
                        s.len(),
                        polls.len()
                    ),
                ));
            }
        }
        Ok(Dataset { senti, polls })
    }

    pub fn len(&self) -> usize {
        self.polls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polls.is_empty()
    }

    /// Sentiment triplet of instance `i` when all three parties have a value.
    pub fn senti_at(&self, i: usize) -> Option<[f64; 3]> {
        Some([self.senti.con[i]?, self.senti.lab[i]?, self.senti.lib[i]?])
    }

    pub fn fit(&self, indices: &[usize]) -> Result<CalibrationWeights> {
        PerParty::try_from_fn(|party| {
            let s: Vec<Option<f64>> = indices.iter().map(|&i| self.senti[party][i]).collect();
            let p: Vec<f64> = indices
                .iter()
                .map(|&i| self.polls[i][party.index()])
                .collect();
            fit_party(party, &s, &p)
        })
    }
}

pub fn infer_triplet(senti: [f64; 3], w: &CalibrationWeights) -> Result<InferredTriplet> {
    normalize_triplet([
        infer(senti[0], w.con),
        infer(senti[1], w.lab),
        infer(senti[2], w.lib),
    ])
}

/// Fits on `train` and infers each `test` instance. Test instances missing a
/// party's sentiment yield `None`.
pub fn calibrate_and_infer(
    data: &Dataset,
    train: &[usize],
    test: &[usize],
) -> Result<(CalibrationWeights, Vec<Option<InferredTriplet>>)> {
    if let Some(i) = train.iter().find(|i| test.contains(i)) {
        return Err(Error::invalid(
            "calibration",
            format!("instance {} is in both train and test", i + 1),
        ));
    }
    let w = data.fit(train)?;
    let inferred = test
        .iter()
        .map(|&i| data.senti_at(i).map(|s| infer_triplet(s, &w)).transpose())
        .collect::<Result<Vec<_>>>()?;
    Ok((w, inferred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fit_examples() {
        assert_eq!(fit_weight(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 2.0);
        assert_eq!(fit_weight(&[1.0], &[0.4]).unwrap(), 0.4);
        assert!(fit_weight(&[0.0, 0.0], &[0.4, 0.3]).is_err());
        assert!(fit_weight(&[], &[]).is_err());
        assert!(fit_weight(&[1.0], &[0.4, 0.3]).is_err());
        assert!(matches!(
            fit_party(Party::Lab, &[None, Some(0.0)], &[0.1, 0.2]),
            Err(Error::DegenerateFit {
                party: Party::Lab,
                ..
            })
        ));
        // pairwise deletion
        assert_eq!(
            fit_party(Party::Con, &[Some(1.0), None], &[0.4, 9.0]).unwrap(),
            0.4
        );
    }

    #[test]
    fn infer_examples() {
        assert!((infer(0.3, 2.0) - 0.6).abs() < 1e-15);
        assert_eq!(infer(0.0, 7.0), 0.0);
        assert!((infer(-0.1, 2.0) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let t = normalize_triplet([2.0, 3.0, 5.0]).unwrap();
        assert_eq!(t.to_array(), [0.2, 0.3, 0.5]);
        assert!(t.normalized);
        let t = normalize_triplet([-1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.to_array(), [0.0, 0.4, 0.6]);
        assert!(t.normalized);
        let t = normalize_triplet([-0.1, 0.3, 0.4]).unwrap();
        assert_eq!(t.to_array(), [0.0, 0.3, 0.4]);
        assert!(!t.normalized);
        assert!(normalize_triplet([-1.0, 0.0, -2.0]).is_err());
        assert!(normalize_triplet([0.0, 0.0, 0.0]).is_err());
        // single positive above one
        let t = normalize_triplet([-0.5, 1.5, -0.1]).unwrap();
        assert_eq!(t.to_array(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn resubstitution_is_exact() {
        let polls = vec![[0.4, 0.35, 0.25], [0.38, 0.3, 0.32], [0.42, 0.33, 0.25]];
        let w = [2.0, 0.5, 4.0];
        let senti = PerParty::from_fn(|p| {
            polls
                .iter()
                .map(|t| Some(t[p.index()] / w[p.index()]))
                .collect()
        });
        let data = Dataset::new(senti, polls.clone()).unwrap();
        let all = [0, 1, 2];
        let (fit, inferred) = calibrate_and_infer(&data, &all, &[]).unwrap();
        assert!((fit.con - 2.0).abs() < 1e-12);
        assert!(inferred.is_empty());
        // test set must be disjoint
        assert!(calibrate_and_infer(&data, &all, &[1]).is_err());
        let (_, inferred) = calibrate_and_infer(&data, &[0, 2], &[1]).unwrap();
        let t = inferred[0].unwrap();
        for (a, b) in t.to_array().iter().zip(polls[1]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn normalized_outputs_are_shares(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            match normalize_triplet([a, b, c]) {
                Err(_) => prop_assert!(a <= 0.0 && b <= 0.0 && c <= 0.0),
                Ok(t) => {
                    let sum: f64 = t.to_array().iter().sum();
                    prop_assert!(t.to_array().iter().all(|&x| (0.0..=1.0).contains(&x)));
                    if t.normalized {
                        prop_assert!((sum - 1.0).abs() < 1e-9);
                        let again = normalize_triplet(t.to_array()).unwrap();
                        for (x, y) in again.to_array().iter().zip(t.to_array()) {
                            prop_assert!((x - y).abs() < 1e-12);
                        }
                    } else {
                        prop_assert!(sum <= 1.0);
                    }
                }
            }
        }

        #[test]
        fn fit_is_a_local_minimum(v in proptest::collection::vec((-1.0f64..1.0, 0.0f64..1.0), 1..30)) {
            let (s, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assume!(s.iter().map(|x| x * x).sum::<f64>() > 1e-6);
            let w = fit_weight(&s, &p).unwrap();
            let rss = |w: f64| s.iter().zip(&p).map(|(x, y)| (y - x * w).powi(2)).sum::<f64>();
            prop_assert!(rss(w) <= rss(w + 1e-3));
            prop_assert!(rss(w) <= rss(w - 1e-3));
        }
    }
}

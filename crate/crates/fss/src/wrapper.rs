//! Wrapper fitness for feature subsets and the exhaustive-search oracle.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use islandga_core::{
    Error as GaError, FitnessEvaluator, FitnessThreshold, GaConfig, Genome, OperatorSuite, Scalar,
    TaskRng,
};
use rayon::prelude::*;

use crate::dataset::{project, AttributeMask, Dataset};
use crate::error::{FssError, Result};
use crate::tree::{accuracy, build_tree, DecisionTree};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 12;

/// Half-open instance ranges of `k` contiguous folds; earlier folds take the
/// remainder.
pub fn fold_ranges(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    (0..k)
        .map(|i| {
            let size = n / k + usize::from(i < n % k);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

/// Projects `train` by `mask`, then for each of `k` contiguous folds trains
/// on the others and scores on the fold. Returns the best fold accuracy.
pub fn crossing_folding_fitness(train: &Dataset, mask: &AttributeMask, k: usize) -> Result<f64> {
    crossing_folding_with(train, mask, k, build_tree)
}

/// [`crossing_folding_fitness`] with a custom tree builder.
pub fn crossing_folding_with(
    train: &Dataset,
    mask: &AttributeMask,
    k: usize,
    builder: impl Fn(&Dataset) -> Result<DecisionTree>,
) -> Result<f64> {
    let n = train.len();
    if k < 2 || k > n {
        return Err(FssError::Folds {
            folds: k,
            instances: n,
        });
    }
    let data = project(train, mask)?;
    let all = data.instances();
    let mut best = 0.0f64;
    for fold in fold_ranges(n, k) {
        let rest: Vec<_> = all[..fold.start].iter().chain(&all[fold.end..]).cloned().collect();
        let tree = builder(&data.with_instances(rest))?;
        let acc = accuracy(&tree, &data.with_instances(all[fold].to_vec()))?;
        best = best.max(acc);
    }
    Ok(best)
}

/// Orders candidate subsets: higher fitness, then fewer attributes, then
/// lexicographically smaller mask.
fn better(a: &(AttributeMask, f64), b: &(AttributeMask, f64)) -> bool {
    a.1.total_cmp(&b.1)
        .reverse()
        .then(a.0.count().cmp(&b.0.count()))
        .then(a.0.cmp(&b.0))
        .is_lt()
}

/// Evaluates every one of the `2^m` masks. Refuses when `m` exceeds `limit`
/// (default 12).
pub fn exhaustive_best_subset(
    train: &Dataset,
    k: usize,
    limit: Option<usize>,
) -> Result<(AttributeMask, f64)> {
    let m = train.num_attributes();
    let limit = limit.unwrap_or(DEFAULT_EXHAUSTIVE_LIMIT);
    if m > limit || m >= usize::BITS as usize {
        return Err(FssError::TooManyAttributes {
            attributes: m,
            limit,
        });
    }
    let scored: Vec<(AttributeMask, f64)> = (0..1usize << m)
        .into_par_iter()
        .map(|code| {
            let mask = AttributeMask((0..m).map(|i| code >> (m - 1 - i) & 1 == 1).collect());
            crossing_folding_fitness(train, &mask, k).map(|f| (mask, f))
        })
        .collect::<Result<_>>()?;
    let best = scored
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .expect("at least one mask");
    Ok(best)
}

/// Crossing-folding fitness as a GA evaluator, memoised per mask.
pub struct FssEvaluator {
    train: Arc<Dataset>,
    folds: usize,
    cache: Mutex<HashMap<Vec<bool>, f64>>,
}

impl FssEvaluator {
    pub fn new(train: Arc<Dataset>, folds: usize) -> Result<Self> {
        if folds < 2 || folds > train.len() {
            return Err(FssError::Folds {
                folds,
                instances: train.len(),
            });
        }
        Ok(FssEvaluator {
            train,
            folds,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn fitness(&self, mask: &AttributeMask) -> Result<f64> {
        if let Some(&f) = self.cache.lock().expect("cache poisoned").get(&mask.0) {
            return Ok(f);
        }
        let f = crossing_folding_fitness(&self.train, mask, self.folds)?;
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(mask.0.clone(), f);
        Ok(f)
    }

    /// Distinct masks evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }
}

impl<F: Scalar> FitnessEvaluator<F> for FssEvaluator {
    fn evaluate(&self, genome: &Genome, _rng: &mut TaskRng) -> islandga_core::Result<F> {
        let f = self
            .fitness(&AttributeMask::from(genome))
            .map_err(|e| GaError::contract(e.to_string()))?;
        F::from_f64(f).ok_or_else(|| GaError::contract("accuracy not representable"))
    }
}

/// Standard operators around the crossing-folding evaluator. Without a
/// target the run always goes to the generation limit.
pub fn fss_operator_suite<F: Scalar>(
    train: Arc<Dataset>,
    folds: usize,
    target: Option<f64>,
    config: &GaConfig,
) -> Result<OperatorSuite<F>> {
    if config.genome_length != train.num_attributes() {
        return Err(FssError::Schema(format!(
            "genome length {} but the dataset has {} attributes",
            config.genome_length,
            train.num_attributes()
        )));
    }
    let criterion = match target {
        Some(t) => FitnessThreshold::new(
            F::from_f64(t).ok_or_else(|| FssError::Schema("target not representable".into()))?,
        ),
        None => FitnessThreshold::disabled(),
    };
    let evaluator = FssEvaluator::new(train, folds)?;
    Ok(OperatorSuite::standard(config, evaluator, Some(Box::new(criterion))))
}

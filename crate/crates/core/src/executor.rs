//! Embedded map-shuffle-reduce engine.
//!
//! A job is a [`ChainPlan`]: one or more map stages applied to each input
//! split, a single shuffle routing records to partitions by key, one reduce
//! stage per key group and zero or more map stages applied to each reduce
//! partition. Chained stages run back to back inside the same task. Splits
//! and partitions are processed concurrently on a bounded worker pool, and
//! every task draws randomness only from its own [`TaskSeed`] stream, so a
//! job's output does not depend on scheduling.

use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{JobSeeds, Phase, TaskRng, TaskSeed};

/// A key/value pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record<K, V> {
    pub key: K,
    pub value: V,
}

impl<K, V> Record<K, V> {
    pub fn new(key: K, value: V) -> Self {
        Record { key, value }
    }
}

pub type Split<K, V> = Vec<Record<K, V>>;

/// Canonical byte encoding of a key, hashed by [`default_partition`].
pub trait KeyBytes {
    fn key_bytes(&self) -> Vec<u8>;
}

impl KeyBytes for [u8] {
    fn key_bytes(&self) -> Vec<u8> {
        self.to_vec()
    }
}

impl KeyBytes for Vec<u8> {
    fn key_bytes(&self) -> Vec<u8> {
        self.clone()
    }
}

impl KeyBytes for str {
    fn key_bytes(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

impl KeyBytes for String {
    fn key_bytes(&self) -> Vec<u8> {
        self.as_bytes().to_vec()
    }
}

impl KeyBytes for u32 {
    fn key_bytes(&self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }
}

impl KeyBytes for u64 {
    fn key_bytes(&self) -> Vec<u8> {
        self.to_le_bytes().to_vec()
    }
}

impl<K: KeyBytes + ?Sized> KeyBytes for &K {
    fn key_bytes(&self) -> Vec<u8> {
        (**self).key_bytes()
    }
}

/// 64-bit FNV-1a of the key bytes, modulo `partitions`.
pub fn default_partition<K: KeyBytes + ?Sized>(key: &K, partitions: usize) -> usize {
    assert!(partitions >= 1, "partition count must be positive");
    let mut hasher = FnvHasher::default();
    hasher.write(&key.key_bytes());
    (hasher.finish() % partitions as u64) as usize
}

pub type MapFn<'a, K, V> =
    Box<dyn Fn(usize, Split<K, V>, &mut TaskRng) -> Result<Split<K, V>> + Send + Sync + 'a>;
pub type ReduceFn<'a, K, V> =
    Box<dyn Fn(usize, K, Vec<V>, &mut TaskRng) -> Result<Split<K, V>> + Send + Sync + 'a>;
pub type PartitionFn<'a, K> = Box<dyn Fn(&K, usize) -> usize + Send + Sync + 'a>;

enum Stage<'a, K, V> {
    Map(Phase, MapFn<'a, K, V>),
    Reduce(Phase, ReduceFn<'a, K, V>),
}

/// Builder enforcing the `(MAP)+ (REDUCE) (MAP)*` shape.
pub struct ChainBuilder<'a, K, V> {
    stages: Vec<Stage<'a, K, V>>,
    partitioner: Option<PartitionFn<'a, K>>,
    num_partitions: usize,
}

impl<'a, K, V> ChainBuilder<'a, K, V> {
    pub fn map<G>(mut self, phase: Phase, f: G) -> Self
    where
        G: Fn(usize, Split<K, V>, &mut TaskRng) -> Result<Split<K, V>> + Send + Sync + 'a,
    {
        self.stages.push(Stage::Map(phase, Box::new(f)));
        self
    }

    pub fn reduce<G>(mut self, phase: Phase, f: G) -> Self
    where
        G: Fn(usize, K, Vec<V>, &mut TaskRng) -> Result<Split<K, V>> + Send + Sync + 'a,
    {
        self.stages.push(Stage::Reduce(phase, Box::new(f)));
        self
    }

    pub fn partitioner<G>(mut self, f: G) -> Self
    where
        G: Fn(&K, usize) -> usize + Send + Sync + 'a,
    {
        self.partitioner = Some(Box::new(f));
        self
    }

    pub fn partitions(mut self, n: usize) -> Self {
        self.num_partitions = n;
        self
    }

    pub fn build(self) -> Result<ChainPlan<'a, K, V>>
    where
        K: KeyBytes,
    {
        if self.num_partitions == 0 {
            return Err(Error::contract("a chain needs at least one partition"));
        }
        let mut pre_maps = Vec::new();
        let mut reduce = None;
        let mut post_maps = Vec::new();
        for stage in self.stages {
            match stage {
                Stage::Map(phase, f) if reduce.is_none() => pre_maps.push((phase, f)),
                Stage::Map(phase, f) => post_maps.push((phase, f)),
                Stage::Reduce(_, _) if pre_maps.is_empty() => {
                    return Err(Error::contract("a chain must start with at least one map"));
                }
                Stage::Reduce(_, _) if reduce.is_some() => {
                    return Err(Error::contract("a chain has exactly one reduce"));
                }
                Stage::Reduce(phase, f) => reduce = Some((phase, f)),
            }
        }
        let reduce = reduce.ok_or_else(|| Error::contract("a chain has exactly one reduce"))?;
        let partitioner = self
            .partitioner
            .unwrap_or_else(|| Box::new(|k: &K, r| default_partition(k, r)));
        Ok(ChainPlan {
            pre_maps,
            reduce,
            post_maps,
            partitioner,
            num_partitions: self.num_partitions,
        })
    }
}

/// A validated chain job.
pub struct ChainPlan<'a, K, V> {
    pre_maps: Vec<(Phase, MapFn<'a, K, V>)>,
    reduce: (Phase, ReduceFn<'a, K, V>),
    post_maps: Vec<(Phase, MapFn<'a, K, V>)>,
    partitioner: PartitionFn<'a, K>,
    num_partitions: usize,
}

impl<'a, K, V> ChainPlan<'a, K, V> {
    pub fn builder() -> ChainBuilder<'a, K, V> {
        ChainBuilder {
            stages: Vec::new(),
            partitioner: None,
            num_partitions: 1,
        }
    }

    pub fn num_partitions(&self) -> usize {
        self.num_partitions
    }
}

/// Groups mapped records by partition and key.
///
/// Groups within a partition are in key order; values under a key keep
/// (source split, emission) order.
pub fn shuffle<K: Ord, V>(
    mapped: Vec<Split<K, V>>,
    partitioner: &(dyn Fn(&K, usize) -> usize + Send + Sync + '_),
    partitions: usize,
) -> Result<Vec<Vec<(K, Vec<V>)>>> {
    let mut groups: Vec<BTreeMap<K, Vec<V>>> = (0..partitions).map(|_| BTreeMap::new()).collect();
    for split in mapped {
        for Record { key, value } in split {
            let p = partitioner(&key, partitions);
            if p >= partitions {
                return Err(Error::contract(format!(
                    "partitioner returned {p} for {partitions} partitions"
                )));
            }
            groups[p].entry(key).or_default().push(value);
        }
    }
    Ok(groups.into_iter().map(|g| g.into_iter().collect()).collect())
}

/// Worker pool running map and reduce tasks.
pub struct Executor {
    pool: rayon::ThreadPool,
}

impl Executor {
    /// `threads = None` sizes the pool to the available parallelism.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?;
        Ok(Executor { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs `f` on every item concurrently. On failure the error of the
    /// lowest failing index wins, so errors are as deterministic as outputs.
    fn run_tasks<I, O, G>(&self, items: Vec<I>, f: G) -> Result<Vec<O>>
    where
        I: Send,
        O: Send,
        G: Fn(usize, I) -> Result<O> + Send + Sync,
    {
        let results: Vec<Result<O>> = self.pool.install(|| {
            items
                .into_par_iter()
                .enumerate()
                .map(|(i, item)| f(i, item))
                .collect()
        });
        results.into_iter().collect()
    }

    /// One map task per split; output `i` depends only on split `i` and
    /// `seeds[i]`.
    pub fn run_map_tasks<K, V, G>(
        &self,
        phase: Phase,
        splits: Vec<Split<K, V>>,
        map: G,
        seeds: &[TaskSeed],
    ) -> Result<Vec<Split<K, V>>>
    where
        K: Send,
        V: Send,
        G: Fn(usize, Split<K, V>, &mut TaskRng) -> Result<Split<K, V>> + Send + Sync,
    {
        if seeds.len() != splits.len() {
            return Err(Error::contract(format!(
                "{} seeds for {} splits",
                seeds.len(),
                splits.len()
            )));
        }
        self.run_tasks(splits, |i, split| {
            let mut rng = seeds[i].rng();
            map(i, split, &mut rng).map_err(|e| e.in_phase(phase.name(), i))
        })
    }

    pub fn run_chain<K, V>(
        &self,
        plan: &ChainPlan<'_, K, V>,
        input: Vec<Split<K, V>>,
        seeds: JobSeeds,
    ) -> Result<Vec<Split<K, V>>>
    where
        K: Ord + Send + Sync,
        V: Send + Sync,
    {
        let mapped = self.run_tasks(input, |i, mut split| {
            for (phase, f) in &plan.pre_maps {
                let mut rng = seeds.task(*phase, i).rng();
                split = f(i, split, &mut rng).map_err(|e| e.in_phase(phase.name(), i))?;
            }
            Ok(split)
        })?;

        let grouped = shuffle(mapped, &*plan.partitioner, plan.num_partitions)?;

        self.run_tasks(grouped, |p, groups| {
            let (reduce_phase, reduce) = &plan.reduce;
            let mut rng = seeds.task(*reduce_phase, p).rng();
            let mut out = Vec::new();
            for (key, values) in groups {
                out.extend(
                    reduce(p, key, values, &mut rng)
                        .map_err(|e| e.in_phase(reduce_phase.name(), p))?,
                );
            }
            for (phase, f) in &plan.post_maps {
                let mut rng = seeds.task(*phase, p).rng();
                out = f(p, out, &mut rng).map_err(|e| e.in_phase(phase.name(), p))?;
            }
            Ok(out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    type R = Record<String, u32>;

    fn rec(k: &str, v: u32) -> R {
        Record::new(k.to_string(), v)
    }

    fn seeds(n: usize) -> Vec<TaskSeed> {
        JobSeeds::new(5, 1, 0).tasks(Phase::Fitness, n)
    }

    fn exec(threads: usize) -> Executor {
        Executor::new(Some(threads)).unwrap()
    }

    #[test]
    fn identity_map() {
        let splits = vec![vec![rec("a", 1)], vec![rec("b", 2)]];
        let out = exec(2)
            .run_map_tasks(Phase::Fitness, splits.clone(), |_, s, _| Ok(s), &seeds(2))
            .unwrap();
        assert_eq!(out, splits);
    }

    #[test]
    fn duplicating_map() {
        let splits = vec![vec![rec("a", 1)], vec![rec("b", 2)]];
        let out = exec(2)
            .run_map_tasks(
                Phase::Fitness,
                splits,
                |_, s, _| Ok(s.into_iter().flat_map(|r| [r.clone(), r]).collect()),
                &seeds(2),
            )
            .unwrap();
        assert_eq!(out, vec![vec![rec("a", 1), rec("a", 1)], vec![rec("b", 2), rec("b", 2)]]);
    }

    #[test]
    fn seeded_maps_are_reproducible() {
        let splits: Vec<Vec<R>> = (0..6).map(|i| vec![rec("k", i)]).collect();
        let noisy = |_: usize, s: Vec<R>, rng: &mut TaskRng| {
            Ok(s.into_iter().map(|r| Record::new(r.key, r.value + rng.gen_range(0..1000))).collect())
        };
        let a = exec(1).run_map_tasks(Phase::Fitness, splits.clone(), noisy, &seeds(6)).unwrap();
        let b = exec(4).run_map_tasks(Phase::Fitness, splits, noisy, &seeds(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_failure_names_split() {
        let splits: Vec<Vec<R>> = (0..4).map(|i| vec![rec("k", i)]).collect();
        let err = exec(4)
            .run_map_tasks(
                Phase::Selection,
                splits,
                |i, s, _| if i >= 2 { Err(Error::contract("boom")) } else { Ok(s) },
                &seeds(4),
            )
            .unwrap_err();
        match err {
            Error::Phase { phase, index, .. } => {
                assert_eq!(phase, "selection");
                assert_eq!(index, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_count_must_match() {
        let r = exec(1).run_map_tasks(Phase::Fitness, vec![vec![rec("a", 1)]], |_, s, _| Ok(s), &[]);
        assert!(r.is_err());
    }

    #[test]
    fn single_partition_is_zero() {
        for k in ["", "a", "island", "zzz"] {
            assert_eq!(default_partition(k, 1), 0);
        }
    }

    #[test]
    fn partition_is_stable() {
        assert_eq!(default_partition("key", 8), default_partition("key", 8));
        // FNV-1a 64 of "a" is 0xaf63dc4c8601ec8c
        assert_eq!(default_partition("a", 1 << 16), 0xec8c);
    }

    #[test]
    fn partition_balance() {
        let mut rng = TaskSeed::new(77, 0, Phase::Fitness, 0).rng();
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let k: u64 = rng.gen();
            counts[default_partition(&k, 4)] += 1;
        }
        for c in counts {
            let frac = c as f64 / 10_000.0;
            assert!((0.15..=0.35).contains(&frac), "{counts:?}");
        }
    }

    #[test]
    fn shuffle_single_partition() {
        let mapped = vec![vec![rec("a", 1), rec("a", 2), rec("b", 3)]];
        let out = shuffle(mapped, &|k: &String, r| default_partition(k, r), 1).unwrap();
        assert_eq!(
            out,
            vec![vec![("a".to_string(), vec![1, 2]), ("b".to_string(), vec![3])]]
        );
    }

    #[test]
    fn shuffle_empty() {
        let out = shuffle::<String, u32>(vec![], &|_, _| 0, 3).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(Vec::is_empty));
    }

    #[test]
    fn shuffle_split_order() {
        let mapped = vec![vec![rec("a", 1), rec("b", 9)], vec![rec("a", 2)], vec![rec("a", 3)]];
        let by_key = |k: &String, _: usize| usize::from(k == "b");
        let out = shuffle(mapped, &by_key, 2).unwrap();
        assert_eq!(out[0], vec![("a".to_string(), vec![1, 2, 3])]);
        assert_eq!(out[1], vec![("b".to_string(), vec![9])]);
    }

    #[test]
    fn shuffle_rejects_bad_partition() {
        assert!(shuffle(vec![vec![rec("a", 1)]], &|_: &String, _| 5, 2).is_err());
    }

    fn group_reduce(_: usize, k: String, vs: Vec<u32>, _: &mut TaskRng) -> Result<Vec<R>> {
        Ok(vs.into_iter().map(|v| Record::new(k.clone(), v)).collect())
    }

    #[test]
    fn chain_identity_group_reduce() {
        let plan = ChainPlan::builder()
            .map(Phase::Fitness, |_, s, _| Ok(s))
            .reduce(Phase::Crossover, group_reduce)
            .build()
            .unwrap();
        let out = exec(2)
            .run_chain(&plan, vec![vec![rec("a", 1), rec("a", 2)]], JobSeeds::new(0, 0, 0))
            .unwrap();
        assert_eq!(out, vec![vec![rec("a", 1), rec("a", 2)]]);
    }

    #[test]
    fn chain_composes_pre_maps() {
        let f = |_: usize, s: Vec<R>, _: &mut TaskRng| {
            Ok(s.into_iter().map(|r| Record::new(r.key, r.value + 1)).collect())
        };
        let g = |_: usize, s: Vec<R>, _: &mut TaskRng| {
            Ok(s.into_iter().map(|r| Record::new(r.key, r.value * 10)).collect())
        };
        let input = vec![vec![rec("a", 1), rec("b", 2)], vec![rec("a", 3)]];
        let two = ChainPlan::builder()
            .map(Phase::Fitness, f)
            .map(Phase::Selection, g)
            .reduce(Phase::Crossover, group_reduce)
            .partitions(3)
            .build()
            .unwrap();
        let one = ChainPlan::builder()
            .map(Phase::Fitness, move |i, s, r: &mut TaskRng| g(i, f(i, s, r)?, r))
            .reduce(Phase::Crossover, group_reduce)
            .partitions(3)
            .build()
            .unwrap();
        let seeds = JobSeeds::new(0, 0, 0);
        assert_eq!(
            exec(2).run_chain(&two, input.clone(), seeds).unwrap(),
            exec(2).run_chain(&one, input, seeds).unwrap()
        );
    }

    #[test]
    fn chain_shape_validated() {
        let no_map = ChainPlan::<String, u32>::builder()
            .reduce(Phase::Crossover, group_reduce)
            .build();
        assert!(no_map.is_err());
        let two_reduces = ChainPlan::<String, u32>::builder()
            .map(Phase::Fitness, |_, s, _| Ok(s))
            .reduce(Phase::Crossover, group_reduce)
            .reduce(Phase::Crossover, group_reduce)
            .build();
        assert!(two_reduces.is_err());
        let no_reduce = ChainPlan::<String, u32>::builder()
            .map(Phase::Fitness, |_, s, _| Ok(s))
            .build();
        assert!(no_reduce.is_err());
        let with_post = ChainPlan::<String, u32>::builder()
            .map(Phase::Fitness, |_, s, _| Ok(s))
            .reduce(Phase::Crossover, group_reduce)
            .map(Phase::Mutation, |_, s, _| Ok(s))
            .map(Phase::Elitism, |_, s, _| Ok(s))
            .build();
        assert!(with_post.is_ok());
    }

    proptest! {
        #[test]
        fn keys_never_split_across_partitions(
            records in prop::collection::vec((0u8..12, any::<u16>()), 0..60),
            partitions in 1usize..5,
        ) {
            let mapped: Vec<Vec<Record<u32, u16>>> = records
                .chunks(7)
                .map(|c| c.iter().map(|&(k, v)| Record::new(u32::from(k), v)).collect())
                .collect();
            let groups = shuffle(mapped, &|k: &u32, r| default_partition(k, r), partitions).unwrap();
            let mut seen = std::collections::HashMap::new();
            for (p, part) in groups.iter().enumerate() {
                for (k, vs) in part {
                    prop_assert!(seen.insert(*k, p).is_none());
                    let expected: Vec<u16> = records
                        .iter()
                        .filter(|(rk, _)| u32::from(*rk) == *k)
                        .map(|&(_, v)| v)
                        .collect();
                    prop_assert_eq!(vs, &expected);
                }
            }
            let distinct: std::collections::HashSet<_> = records.iter().map(|r| r.0).collect();
            prop_assert_eq!(seen.len(), distinct.len());
        }
    }
}

//! One GA generation expressed as a chain job.
//!
//! ```text
//! split -> [fitness -> termination check -> selection]   (map, one task per island)
//!       -> shuffle by island
//!       -> [crossover]                                   (reduce, per couple key)
//!       -> [mutation -> elitism]                         (map, one task per island)
//! ```
//!
//! Every island owns exactly one reduce partition. The shuffle is the only
//! point where islands synchronize, which is also where a termination flag
//! raised by any island becomes visible to all of them.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::executor::{ChainPlan, Executor, KeyBytes, Record, Split};
use crate::model::{GaConfig, Individual, IslandId, PopulationSnapshot};
use crate::operators::OffspringOnly;
use crate::rng::{JobSeeds, Phase, TaskRng};
use crate::scalar::Scalar;
use crate::suite::{
    CrossoverOperator, ElitismPolicy, FitnessEvaluator, MutationOperator, OperatorSuite,
    SelectionOperator, TerminationCriterion,
};

/// Routes one selected parent to the reducer handling its couple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoupleKey {
    pub island: IslandId,
    pub couple_index: u32,
}

/// Record keys used by the generation chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GenKey {
    /// Key attached by the splitter (the null key of the original design).
    Island(IslandId),
    /// A selected parent.
    Couple(CoupleKey),
    /// A member of the previous population that the elitism phase may keep.
    Passthrough(IslandId),
    /// A member of the previous population sent only so that the island can
    /// fall back to it; elitism never ranks shadows.
    Shadow(IslandId),
}

impl GenKey {
    pub fn island(&self) -> IslandId {
        match *self {
            GenKey::Island(i) | GenKey::Passthrough(i) | GenKey::Shadow(i) => i,
            GenKey::Couple(c) => c.island,
        }
    }
}

impl KeyBytes for GenKey {
    fn key_bytes(&self) -> Vec<u8> {
        let (tag, island, couple) = match *self {
            GenKey::Island(i) => (0u8, i, None),
            GenKey::Couple(c) => (1, c.island, Some(c.couple_index)),
            GenKey::Passthrough(i) => (2, i, None),
            GenKey::Shadow(i) => (3, i, None),
        };
        let mut out = vec![tag];
        out.extend_from_slice(&island.0.to_le_bytes());
        if let Some(c) = couple {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }
}

/// Partitioner of the generation chain: one partition per island.
pub fn island_partition(key: &GenKey, _partitions: usize) -> usize {
    key.island().index()
}

/// Value of a chain record: an individual plus its offspring flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tagged<F: Scalar = f64> {
    pub individual: Individual<F>,
    /// Set only on individuals produced by crossover.
    pub offspring: bool,
}

impl<F: Scalar> Tagged<F> {
    pub fn parent(individual: Individual<F>) -> Self {
        Tagged {
            individual,
            offspring: false,
        }
    }

    pub fn child(individual: Individual<F>) -> Self {
        Tagged {
            individual,
            offspring: true,
        }
    }
}

pub type PhaseRecord<F = f64> = Record<GenKey, Tagged<F>>;

/// Raised when an island holds an individual meeting the termination
/// criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminationFlag<F: Scalar = f64> {
    /// Index of the generation job that raised the flag.
    pub generation: u64,
    pub island: IslandId,
    /// First satisfying individual in island order.
    pub satisfying_individual: Individual<F>,
}

fn island_id(index: usize) -> IslandId {
    IslandId(u32::try_from(index).expect("island index fits u32"))
}

/// Splits the population into `islands` contiguous groups in order; earlier
/// islands take the remainder.
pub fn split_population<F: Scalar>(
    snapshot: &PopulationSnapshot<F>,
    islands: usize,
) -> Result<Vec<Split<GenKey, Tagged<F>>>> {
    let total = snapshot.len();
    if islands == 0 {
        return Err(Error::config("islands", "must be at least 1"));
    }
    if total < islands {
        return Err(Error::config(
            "islands",
            format!("{total} individuals cannot fill {islands} islands"),
        ));
    }
    let base = total / islands;
    let extra = total % islands;
    let mut all = snapshot.individuals().cloned();
    Ok((0..islands)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let key = GenKey::Island(island_id(i));
            all.by_ref()
                .take(size)
                .map(|ind| Record::new(key, Tagged::parent(ind)))
                .collect()
        })
        .collect())
}

/// Evaluates every individual that has no fitness yet.
pub fn fitness_phase<F: Scalar>(
    records: Vec<PhaseRecord<F>>,
    evaluator: &dyn FitnessEvaluator<F>,
    rng: &mut TaskRng,
) -> Result<Vec<PhaseRecord<F>>> {
    records
        .into_iter()
        .enumerate()
        .map(|(index, mut rec)| {
            let ind = &mut rec.value.individual;
            if ind.fitness.is_none() {
                let f = evaluator
                    .evaluate(&ind.genome, rng)
                    .map_err(|e| Error::Evaluation {
                        index,
                        reason: e.to_string(),
                    })?;
                if f.is_nan() || f < F::zero() {
                    return Err(Error::Evaluation {
                        index,
                        reason: format!("fitness must be non-negative, got {f}"),
                    });
                }
                ind.fitness = Some(f);
            }
            Ok(rec)
        })
        .collect()
}

/// Marks satisfying individuals and reports a flag if there is at least one.
pub fn termination_check_phase<F: Scalar>(
    mut records: Vec<PhaseRecord<F>>,
    criterion: Option<&dyn TerminationCriterion<F>>,
    generation: u64,
    island: IslandId,
) -> Result<(Vec<PhaseRecord<F>>, Option<TerminationFlag<F>>)> {
    let Some(criterion) = criterion else {
        return Ok((records, None));
    };
    let mut flag = None;
    for rec in &mut records {
        let ind = &mut rec.value.individual;
        if criterion.is_satisfied(ind)? {
            ind.is_solution = true;
            flag.get_or_insert_with(|| TerminationFlag {
                generation,
                island,
                satisfying_individual: ind.clone(),
            });
        }
    }
    Ok((records, flag))
}

/// Emits each selected parent under its couple key, once per selection.
///
/// With elitism enabled, every island member is also emitted under the
/// island's pass-through key. Without a selector, the island is forwarded
/// under the pass-through key and no couples form.
pub fn selection_phase<F: Scalar>(
    records: Vec<PhaseRecord<F>>,
    selector: Option<&dyn SelectionOperator<F>>,
    elitism_enabled: bool,
    island: IslandId,
    rng: &mut TaskRng,
) -> Result<Vec<PhaseRecord<F>>> {
    let passthrough = |recs: Vec<PhaseRecord<F>>| {
        recs.into_iter()
            .map(|r| Record::new(GenKey::Passthrough(island), Tagged::parent(r.value.individual)))
            .collect::<Vec<_>>()
    };
    let Some(selector) = selector else {
        return Ok(passthrough(records));
    };
    let island_size = records.len();
    let num_couples = island_size / 2;
    if num_couples > 0 && island_size < 2 {
        return Err(Error::contract(format!(
            "island {island} has {island_size} individuals, too few for a couple"
        )));
    }
    let individuals: Vec<Individual<F>> =
        records.iter().map(|r| r.value.individual.clone()).collect();
    let couples = selector.select(&individuals, num_couples, rng)?;
    if couples.len() != num_couples {
        return Err(Error::contract(format!(
            "selector returned {} couples, expected {num_couples}",
            couples.len()
        )));
    }
    let mut out = Vec::with_capacity(2 * num_couples + island_size);
    for (c, &(a, b)) in couples.iter().enumerate() {
        let key = GenKey::Couple(CoupleKey {
            island,
            couple_index: u32::try_from(c).expect("couple index fits u32"),
        });
        for parent in [a, b] {
            let ind = individuals.get(parent).ok_or_else(|| {
                Error::contract(format!("selector picked index {parent} of {island_size}"))
            })?;
            out.push(Record::new(key, Tagged::parent(ind.clone())));
        }
    }
    if elitism_enabled {
        out.extend(passthrough(records));
    }
    Ok(out)
}

/// Crosses the two parents of a couple. Records under any other key are
/// forwarded untouched.
pub fn crossover_phase<F: Scalar>(
    key: GenKey,
    values: Vec<Tagged<F>>,
    crossover: Option<&dyn CrossoverOperator>,
    rng: &mut TaskRng,
) -> Result<Vec<PhaseRecord<F>>> {
    if !matches!(key, GenKey::Couple(_)) {
        return Ok(values.into_iter().map(|v| Record::new(key, v)).collect());
    }
    if values.len() != 2 {
        return Err(Error::contract(format!(
            "couple {key:?} has {} parents, expected 2",
            values.len()
        )));
    }
    let Some(op) = crossover else {
        return Ok(values
            .into_iter()
            .map(|v| Record::new(key, Tagged::child(v.individual)))
            .collect());
    };
    let (c1, c2) = op.crossover(&values[0].individual.genome, &values[1].individual.genome, rng)?;
    Ok([c1, c2]
        .into_iter()
        .map(|g| Record::new(key, Tagged::child(Individual::new(g))))
        .collect())
}

/// Mutates offspring only. A mutated child has no fitness.
pub fn mutation_phase<F: Scalar>(
    records: Vec<PhaseRecord<F>>,
    mutation: Option<&dyn MutationOperator>,
    rng: &mut TaskRng,
) -> Result<Vec<PhaseRecord<F>>> {
    let Some(op) = mutation else {
        return Ok(records);
    };
    records
        .into_iter()
        .map(|mut rec| {
            if rec.value.offspring {
                let ind = &mut rec.value.individual;
                ind.genome = op.mutate(&ind.genome, rng)?;
                ind.fitness = None;
                ind.is_solution = false;
            }
            Ok(rec)
        })
        .collect()
}

/// Chooses the definitive island. Without a policy both groups are
/// forwarded, offspring first.
pub fn elitism_phase<F: Scalar>(
    offspring: Vec<Individual<F>>,
    previous: Vec<Individual<F>>,
    policy: Option<&dyn ElitismPolicy<F>>,
    size: usize,
    rng: &mut TaskRng,
) -> Result<Vec<Individual<F>>> {
    match policy {
        Some(p) => p.survivors(offspring, &previous, size, rng),
        None => Ok(offspring.into_iter().chain(previous).collect()),
    }
}

/// Flags raised during one generation job, visible to every task of it.
struct FlagBoard<F: Scalar> {
    flags: Mutex<Vec<TerminationFlag<F>>>,
}

impl<F: Scalar> FlagBoard<F> {
    fn new() -> Self {
        FlagBoard {
            flags: Mutex::new(Vec::new()),
        }
    }

    fn raise(&self, flag: TerminationFlag<F>) {
        self.flags.lock().expect("flag board poisoned").push(flag);
    }

    fn raised_by(&self, island: IslandId) -> bool {
        self.flags
            .lock()
            .expect("flag board poisoned")
            .iter()
            .any(|f| f.island == island)
    }

    fn any(&self) -> bool {
        !self.flags.lock().expect("flag board poisoned").is_empty()
    }

    fn into_sorted(self) -> Vec<TerminationFlag<F>> {
        let mut flags = self.flags.into_inner().expect("flag board poisoned");
        flags.sort_by_key(|f| f.island);
        flags
    }
}

/// Result of one generation job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationOutcome<F: Scalar = f64> {
    pub snapshot: PopulationSnapshot<F>,
    pub flags: Vec<TerminationFlag<F>>,
}

fn seeds_for(config: &GaConfig, generation: u64) -> JobSeeds {
    JobSeeds::new(config.master_seed, generation, config.stream_offset)
}

fn into_islands<F: Scalar>(splits: Vec<Split<GenKey, Tagged<F>>>) -> Vec<Vec<Individual<F>>> {
    splits
        .into_iter()
        .map(|s| s.into_iter().map(|r| r.value.individual).collect())
        .collect()
}

/// Runs one generation on `snapshot` and returns generation
/// `snapshot.generation + 1`.
///
/// If any island raises a termination flag, crossover, mutation and elitism
/// do no work and the output is the evaluated, checked input population.
pub fn run_generation<F: Scalar>(
    executor: &Executor,
    snapshot: &PopulationSnapshot<F>,
    suite: &OperatorSuite<F>,
    config: &GaConfig,
) -> Result<GenerationOutcome<F>> {
    let generation = snapshot.generation + 1;
    run_generation_inner(executor, snapshot, suite, config, generation)
        .map_err(|e| e.in_generation(generation))
}

fn run_generation_inner<F: Scalar>(
    executor: &Executor,
    snapshot: &PopulationSnapshot<F>,
    suite: &OperatorSuite<F>,
    config: &GaConfig,
    generation: u64,
) -> Result<GenerationOutcome<F>> {
    let islands = config.islands;
    let elitism_enabled = config.elitism_enabled;
    let splits = split_population(snapshot, islands)?;
    let board = FlagBoard::new();

    let evaluator = &*suite.evaluator;
    let criterion = suite.termination.as_deref();
    let selector = suite.selection.as_deref();
    let crossover = suite.crossover.as_deref();
    let mutation = suite.mutation.as_deref();
    let elitism: Option<&dyn ElitismPolicy<F>> = if elitism_enabled {
        suite.elitism.as_deref()
    } else {
        Some(&OffspringOnly)
    };
    let board_ref = &board;

    let plan = ChainPlan::builder()
        .map(Phase::Fitness, move |_, records, rng| {
            fitness_phase(records, evaluator, rng)
        })
        .map(Phase::TerminationCheck, move |i, records, _| {
            let (records, flag) =
                termination_check_phase(records, criterion, generation, island_id(i))?;
            if let Some(flag) = flag {
                board_ref.raise(flag);
            }
            Ok(records)
        })
        .map(Phase::Selection, move |i, records, rng| {
            let island = island_id(i);
            if board_ref.raised_by(island) {
                return selection_phase(records, None, elitism_enabled, island, rng);
            }
            let shadows: Vec<_> = if elitism_enabled || selector.is_none() {
                Vec::new()
            } else {
                records
                    .iter()
                    .map(|r| Record::new(GenKey::Shadow(island), r.value.clone()))
                    .collect()
            };
            let mut out = selection_phase(records, selector, elitism_enabled, island, rng)?;
            out.extend(shadows);
            Ok(out)
        })
        .reduce(Phase::Crossover, move |_, key, values, rng| {
            if board_ref.any() {
                return Ok(match key {
                    GenKey::Couple(_) => Vec::new(),
                    other => values
                        .into_iter()
                        .map(|v| Record::new(GenKey::Passthrough(other.island()), v))
                        .collect(),
                });
            }
            crossover_phase(key, values, crossover, rng)
        })
        .map(Phase::Mutation, move |_, records, rng| {
            if board_ref.any() {
                return Ok(records);
            }
            mutation_phase(records, mutation, rng)
        })
        .map(Phase::Elitism, move |p, records, rng| {
            if board_ref.any() {
                return Ok(records);
            }
            let island = island_id(p);
            let mut offspring = Vec::new();
            let mut previous = Vec::new();
            let mut shadows = Vec::new();
            for rec in records {
                match rec.key {
                    _ if rec.value.offspring => offspring.push(rec.value.individual),
                    GenKey::Shadow(_) => shadows.push(rec.value.individual),
                    _ => previous.push(rec.value.individual),
                }
            }
            let size = previous.len() + shadows.len();
            let survivors = if elitism_enabled {
                elitism_phase(offspring, previous, elitism, size, rng)?
            } else {
                // Pass-through parents only exist without a selector; they
                // take their slots ahead of any padding.
                offspring.extend(previous);
                elitism_phase(offspring, shadows, elitism, size, rng)?
            };
            Ok(survivors
                .into_iter()
                .map(|ind| Record::new(GenKey::Island(island), Tagged::parent(ind)))
                .collect())
        })
        .partitioner(island_partition)
        .partitions(islands)
        .build()?;

    let output = executor.run_chain(&plan, splits, seeds_for(config, generation))?;
    drop(plan);
    Ok(GenerationOutcome {
        snapshot: PopulationSnapshot::new(generation, into_islands(output)),
        flags: board.into_sorted(),
    })
}

/// Map-only job filling in missing fitness values, island by island.
///
/// Uses the fitness streams of generation `snapshot.generation + 1`, i.e.
/// exactly what the next generation job would compute.
pub fn evaluate_population<F: Scalar>(
    executor: &Executor,
    snapshot: &PopulationSnapshot<F>,
    suite: &OperatorSuite<F>,
    config: &GaConfig,
) -> Result<PopulationSnapshot<F>> {
    let splits = split_population(snapshot, snapshot.num_islands())?;
    let seeds = seeds_for(config, snapshot.generation + 1).tasks(Phase::Fitness, splits.len());
    let evaluator = &*suite.evaluator;
    let out = executor.run_map_tasks(
        Phase::Fitness,
        splits,
        |_, records, rng| fitness_phase(records, evaluator, rng),
        &seeds,
    )?;
    Ok(PopulationSnapshot::new(snapshot.generation, into_islands(out)))
}

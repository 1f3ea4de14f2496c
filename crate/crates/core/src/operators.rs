//! Built-in operators for binary genomes.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{sort_best_first, Genome, Individual};
use crate::rng::TaskRng;
use crate::scalar::Scalar;
use crate::suite::{
    CrossoverOperator, ElitismPolicy, FitnessEvaluator, Initialiser, MutationOperator,
    SelectionOperator, TerminationCriterion,
};

/// `count` genomes of `genome_length` fair coin flips each.
pub fn random_bit_initialiser<F: Scalar>(
    genome_length: usize,
    count: usize,
    rng: &mut TaskRng,
) -> Result<Vec<Individual<F>>> {
    if genome_length == 0 {
        return Err(Error::contract("genome length must be at least 1"));
    }
    (0..count)
        .map(|_| {
            let bits = (0..genome_length).map(|_| rng.gen::<bool>()).collect();
            Genome::new(bits).map(Individual::new)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomBitInitialiser;

impl<F: Scalar> Initialiser<F> for RandomBitInitialiser {
    fn initialise(
        &self,
        genome_length: usize,
        count: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<Individual<F>>> {
        random_bit_initialiser(genome_length, count, rng)
    }
}

/// Fitness-proportionate parent selection.
///
/// Every parent is an independent draw with probability `f_i / sum(f)`, so
/// the same individual may fill both slots of a couple. A zero total falls
/// back to uniform draws.
pub fn roulette_wheel_select<F: Scalar>(
    individuals: &[Individual<F>],
    num_couples: usize,
    rng: &mut TaskRng,
) -> Result<Vec<(usize, usize)>> {
    if num_couples == 0 {
        return Ok(Vec::new());
    }
    if individuals.is_empty() {
        return Err(Error::contract("cannot select parents from an empty island"));
    }
    let mut weights = Vec::with_capacity(individuals.len());
    for ind in individuals {
        let f = ind.require_fitness()?;
        let w = f.to_f64().unwrap_or(f64::NAN);
        if w.is_nan() || w < 0.0 || w.is_infinite() {
            return Err(Error::contract(format!(
                "roulette wheel needs finite non-negative fitness, got {f}"
            )));
        }
        weights.push(w);
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        weights.iter_mut().for_each(|w| *w = 1.0);
    }
    let wheel = WeightedIndex::new(&weights)
        .map_err(|e| Error::contract(format!("roulette wheel: {e}")))?;
    Ok((0..num_couples)
        .map(|_| (wheel.sample(rng), wheel.sample(rng)))
        .collect())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RouletteWheel;

impl<F: Scalar> SelectionOperator<F> for RouletteWheel {
    fn select(
        &self,
        individuals: &[Individual<F>],
        num_couples: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<(usize, usize)>> {
        roulette_wheel_select(individuals, num_couples, rng)
    }
}

/// Crossover at a fixed point `c`: children are `a[..c] ++ b[c..]` and
/// `b[..c] ++ a[c..]`.
pub fn crossover_at(first: &Genome, second: &Genome, point: usize) -> Result<(Genome, Genome)> {
    let m = first.len();
    if second.len() != m {
        return Err(Error::contract(format!(
            "parents differ in length ({m} vs {})",
            second.len()
        )));
    }
    if point == 0 || point >= m {
        return Err(Error::contract(format!(
            "crossover point {point} outside 1..{m}"
        )));
    }
    let (a, b) = (first.bits(), second.bits());
    let c1 = a[..point].iter().chain(&b[point..]).copied().collect();
    let c2 = b[..point].iter().chain(&a[point..]).copied().collect();
    Ok((Genome::new(c1)?, Genome::new(c2)?))
}

/// Single-point crossover with the point uniform in `1..m`.
pub fn single_point_crossover(
    first: &Genome,
    second: &Genome,
    rng: &mut TaskRng,
) -> Result<(Genome, Genome)> {
    let m = first.len();
    if m < 2 {
        return Err(Error::contract("single-point crossover needs genomes of length >= 2"));
    }
    if second.len() != m {
        return Err(Error::contract(format!(
            "parents differ in length ({m} vs {})",
            second.len()
        )));
    }
    let point = rng.gen_range(1..m);
    crossover_at(first, second, point)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SinglePointCrossover;

impl CrossoverOperator for SinglePointCrossover {
    fn crossover(
        &self,
        first: &Genome,
        second: &Genome,
        rng: &mut TaskRng,
    ) -> Result<(Genome, Genome)> {
        single_point_crossover(first, second, rng)
    }
}

/// Flips every gene independently with probability `p`.
pub fn bit_flip_mutation(genome: &Genome, p: f64, rng: &mut TaskRng) -> Result<Genome> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::contract(format!("mutation probability {p} outside [0, 1]")));
    }
    let mut out = genome.clone();
    for bit in out.bits_mut() {
        if rng.gen_bool(p) {
            *bit = !*bit;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BitFlipMutation {
    pub probability: f64,
}

impl BitFlipMutation {
    pub fn new(probability: f64) -> Self {
        BitFlipMutation { probability }
    }
}

impl MutationOperator for BitFlipMutation {
    fn mutate(&self, genome: &Genome, rng: &mut TaskRng) -> Result<Genome> {
        bit_flip_mutation(genome, self.probability, rng)
    }
}

/// Keeps the `n` best of `previous` and fills the remaining `r - n` slots
/// with offspring in emission order.
///
/// Elites occupy the last slots. Offspring are never ranked, since they are
/// only evaluated in the next generation. If there are fewer than `r - n`
/// offspring (odd island sizes), the next-best previous individuals fill the
/// gap.
pub fn best_n_elitism<F: Scalar>(
    previous: &[Individual<F>],
    offspring: Vec<Individual<F>>,
    n: usize,
    r: usize,
) -> Result<Vec<Individual<F>>> {
    if n > r {
        return Err(Error::config(
            "elite_count",
            format!("{n} exceeds island size {r}"),
        ));
    }
    let mut ranked = previous.to_vec();
    sort_best_first(&mut ranked)?;
    let n = n.min(ranked.len());
    let mut out: Vec<_> = offspring.into_iter().take(r - n).collect();
    let mut ranked = ranked.into_iter();
    out.extend(ranked.by_ref().take(n));
    let missing = r.saturating_sub(out.len());
    out.extend(ranked.take(missing));
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BestNElitism {
    pub elite_count: usize,
}

impl BestNElitism {
    pub fn new(elite_count: usize) -> Self {
        BestNElitism { elite_count }
    }
}

impl<F: Scalar> ElitismPolicy<F> for BestNElitism {
    fn survivors(
        &self,
        offspring: Vec<Individual<F>>,
        previous: &[Individual<F>],
        size: usize,
        _rng: &mut TaskRng,
    ) -> Result<Vec<Individual<F>>> {
        best_n_elitism(previous, offspring, self.elite_count, size)
    }
}

/// Survivor rule when elitism is off: the offspring, truncated to `size` and
/// padded with uniformly drawn previous individuals when short.
pub fn offspring_only<F: Scalar>(
    offspring: Vec<Individual<F>>,
    previous: &[Individual<F>],
    size: usize,
    rng: &mut TaskRng,
) -> Result<Vec<Individual<F>>> {
    let mut out: Vec<_> = offspring.into_iter().take(size).collect();
    if out.len() < size && previous.is_empty() {
        return Err(Error::contract("no previous individuals to pad the island"));
    }
    while out.len() < size {
        out.push(previous[rng.gen_range(0..previous.len())].clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OffspringOnly;

impl<F: Scalar> ElitismPolicy<F> for OffspringOnly {
    fn survivors(
        &self,
        offspring: Vec<Individual<F>>,
        previous: &[Individual<F>],
        size: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<Individual<F>>> {
        offspring_only(offspring, previous, size, rng)
    }
}

/// True iff the individual's fitness reaches `threshold` (inclusive).
pub fn fitness_threshold_criterion<F: Scalar>(individual: &Individual<F>, threshold: F) -> Result<bool> {
    Ok(individual.require_fitness()? >= threshold)
}

#[derive(Debug, Clone, Copy)]
pub struct FitnessThreshold<F> {
    pub threshold: F,
}

impl<F: Scalar> FitnessThreshold<F> {
    pub fn new(threshold: F) -> Self {
        FitnessThreshold { threshold }
    }

    /// Never satisfied.
    pub fn disabled() -> Self {
        FitnessThreshold {
            threshold: F::infinity(),
        }
    }
}

impl<F: Scalar> TerminationCriterion<F> for FitnessThreshold<F> {
    fn is_satisfied(&self, individual: &Individual<F>) -> Result<bool> {
        fitness_threshold_criterion(individual, self.threshold)
    }
}

/// Number of ones in the genome.
#[derive(Debug, Clone, Copy, Default)]
pub struct OneMax;

impl<F: Scalar> FitnessEvaluator<F> for OneMax {
    fn evaluate(&self, genome: &Genome, _rng: &mut TaskRng) -> Result<F> {
        Ok(F::from_count(genome.count_ones()))
    }
}

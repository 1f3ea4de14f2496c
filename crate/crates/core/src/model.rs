//! Domain types shared by every phase of a run.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed-length binary chromosome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::contract("genome length must be at least 1"));
        }
        Ok(Genome { bits })
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::contract(format!("invalid gene {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Genome::new(bits)
    }
}

/// A genome plus its evaluation state.
///
/// Equality is bitwise on the fitness value, so two individuals compare equal
/// exactly when they serialize to the same bytes.
#[derive(Debug, Clone)]
pub struct Individual<F = f64> {
    pub genome: Genome,
    pub fitness: Option<F>,
    pub is_solution: bool,
}

impl<F: Scalar> Individual<F> {
    pub fn new(genome: Genome) -> Self {
        Individual {
            genome,
            fitness: None,
            is_solution: false,
        }
    }

    pub fn with_fitness(genome: Genome, fitness: F) -> Self {
        Individual {
            genome,
            fitness: Some(fitness),
            is_solution: false,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }

    pub fn require_fitness(&self) -> Result<F> {
        self.fitness
            .ok_or_else(|| Error::contract(format!("individual {} has no fitness", self.genome)))
    }
}

impl<F: Scalar> PartialEq for Individual<F> {
    fn eq(&self, other: &Self) -> bool {
        self.genome == other.genome
            && self.is_solution == other.is_solution
            && self.fitness.map(Scalar::to_raw_bits) == other.fitness.map(Scalar::to_raw_bits)
    }
}

impl<F: Scalar> Eq for Individual<F> {}

/// Total order used by elitism and reporting: fitness descending, then genome
/// ascending.
pub fn compare_individuals<F: Scalar>(a: &Individual<F>, b: &Individual<F>) -> Result<Ordering> {
    let fa = a.require_fitness()?;
    let fb = b.require_fitness()?;
    let by_fitness = fb
        .partial_cmp(&fa)
        .ok_or_else(|| Error::contract("fitness is NaN"))?;
    Ok(by_fitness.then_with(|| a.genome.cmp(&b.genome)))
}

/// Sorts best-first by [`compare_individuals`].
pub fn sort_best_first<F: Scalar>(individuals: &mut [Individual<F>]) -> Result<()> {
    for ind in individuals.iter() {
        let f = ind.require_fitness()?;
        if f.is_nan() {
            return Err(Error::contract("fitness is NaN"));
        }
    }
    individuals.sort_by(|a, b| compare_individuals(a, b).expect("validated above"));
    Ok(())
}

/// Default behaviour of any phase the user leaves unimplemented.
pub fn passthrough<T>(record: T) -> T {
    record
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IslandId(pub u32);

impl IslandId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for IslandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "island-{}", self.0)
    }
}

/// The population between two generations.
#[derive(Debug, Clone)]
pub struct PopulationSnapshot<F = f64> {
    pub generation: u64,
    pub islands: Vec<Vec<Individual<F>>>,
}

impl<F: Scalar> PartialEq for PopulationSnapshot<F> {
    fn eq(&self, other: &Self) -> bool {
        self.generation == other.generation && self.islands == other.islands
    }
}

impl<F: Scalar> Eq for PopulationSnapshot<F> {}

impl<F: Scalar> PopulationSnapshot<F> {
    pub fn new(generation: u64, islands: Vec<Vec<Individual<F>>>) -> Self {
        PopulationSnapshot {
            generation,
            islands,
        }
    }

    pub fn num_islands(&self) -> usize {
        self.islands.len()
    }

    pub fn len(&self) -> usize {
        self.islands.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn individuals(&self) -> impl Iterator<Item = &Individual<F>> {
        self.islands.iter().flatten()
    }

    /// Genome length shared by every individual, if the snapshot is non-empty.
    pub fn genome_length(&self) -> Option<usize> {
        self.individuals().next().map(|i| i.genome.len())
    }

    /// Best evaluated individual across all islands.
    pub fn best(&self) -> Option<&Individual<F>> {
        self.individuals()
            .filter(|i| i.fitness.is_some_and(|f| !f.is_nan()))
            .min_by(|a, b| compare_individuals(a, b).expect("filtered to evaluated"))
    }
}

/// Where migrants from each island go.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Topology {
    /// Island `i` sends to `(i + 1) mod J`.
    #[default]
    Ring,
    /// `destinations[i]` receives the migrants of island `i`.
    Explicit(Vec<usize>),
}

impl Topology {
    pub fn destination(&self, island: usize, num_islands: usize) -> usize {
        match self {
            Topology::Ring => (island + 1) % num_islands,
            Topology::Explicit(dest) => dest[island],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MigrationPolicyConfig {
    /// Migrate after every `frequency` generations.
    pub frequency: u64,
    pub migrant_count: usize,
    pub topology: Topology,
}

impl MigrationPolicyConfig {
    pub fn ring(frequency: u64, migrant_count: usize) -> Self {
        MigrationPolicyConfig {
            frequency,
            migrant_count,
            topology: Topology::Ring,
        }
    }
}

/// Run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub islands: usize,
    /// Individuals per island (`r`).
    pub population_size: usize,
    pub genome_length: usize,
    pub max_generations: u64,
    pub mutation_probability: f64,
    pub elitism_enabled: bool,
    pub elite_count: usize,
    pub migration: Option<MigrationPolicyConfig>,
    pub master_seed: u64,
    /// Random stream index of island 0. Lets a one-island run replay island
    /// `k` of a larger run with migration off.
    pub stream_offset: u32,
    /// Worker threads; `None` uses the available hardware parallelism.
    pub threads: Option<usize>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            islands: 1,
            population_size: 32,
            genome_length: 16,
            max_generations: 100,
            mutation_probability: 0.01,
            elitism_enabled: true,
            elite_count: 1,
            migration: None,
            master_seed: 0,
            stream_offset: 0,
            threads: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.islands == 0 {
            return Err(Error::config("islands", "must be at least 1"));
        }
        if self.population_size == 0 {
            return Err(Error::config("population_size", "must be at least 1"));
        }
        if self.genome_length == 0 {
            return Err(Error::config("genome_length", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(Error::config(
                "mutation_probability",
                format!("{} is outside [0, 1]", self.mutation_probability),
            ));
        }
        if self.elite_count > self.population_size {
            return Err(Error::config(
                "elite_count",
                format!(
                    "{} exceeds population_size {}",
                    self.elite_count, self.population_size
                ),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if let Some(m) = &self.migration {
            if m.frequency == 0 {
                return Err(Error::config("migration_frequency", "must be at least 1"));
            }
            if m.migrant_count > self.population_size {
                return Err(Error::config(
                    "migration_count",
                    format!(
                        "{} exceeds population_size {}",
                        m.migrant_count, self.population_size
                    ),
                ));
            }
            if let Topology::Explicit(dest) = &m.topology {
                if dest.len() != self.islands || dest.iter().any(|&d| d >= self.islands) {
                    return Err(Error::config(
                        "migration_topology",
                        "needs one valid destination per island",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ind(bits: &str, fitness: f64) -> Individual {
        Individual::with_fitness(bits.parse().unwrap(), fitness)
    }

    #[test]
    fn higher_fitness_first() {
        assert_eq!(
            compare_individuals(&ind("00", 0.9), &ind("11", 0.7)).unwrap(),
            Ordering::Less
        );
    }

    #[test]
    fn tie_broken_by_genome() {
        assert_eq!(
            compare_individuals(&ind("0101", 0.5), &ind("0110", 0.5)).unwrap(),
            Ordering::Less
        );
    }

    #[test]
    fn reflexive() {
        let a = ind("1010", 0.3);
        assert_eq!(compare_individuals(&a, &a).unwrap(), Ordering::Equal);
    }

    #[test]
    fn missing_fitness_is_contract_error() {
        let a = Individual::<f64>::new("01".parse().unwrap());
        let b = ind("01", 1.0);
        assert!(matches!(compare_individuals(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn passthrough_is_identity() {
        let x = ind("0110", 0.25);
        assert_eq!(passthrough(x.clone()), x);
        let empty: Vec<Individual> = Vec::new();
        assert_eq!(passthrough(empty.clone()), empty);
    }

    #[test]
    fn empty_genome_rejected() {
        assert!(Genome::new(vec![]).is_err());
        assert!("".parse::<Genome>().is_err());
        assert!("01x".parse::<Genome>().is_err());
    }

    #[test]
    fn nan_fitness_equal_by_bits() {
        let a = ind("1", f64::NAN);
        assert_eq!(a, a.clone());
        assert_ne!(ind("1", 0.0), ind("1", -0.0));
    }

    #[test]
    fn config_rejects_zero_population() {
        let cfg = GaConfig {
            population_size: 0,
            ..GaConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "population_size"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_individual() -> impl Strategy<Value = Individual> {
        (prop::collection::vec(any::<bool>(), 4), 0u8..4).prop_map(|(bits, f)| {
            Individual::with_fitness(Genome::new(bits).unwrap(), f64::from(f) / 4.0)
        })
    }

    proptest! {
        #[test]
        fn comparison_is_a_total_order(
            a in arb_individual(),
            b in arb_individual(),
            c in arb_individual(),
        ) {
            let ab = compare_individuals(&a, &b).unwrap();
            let ba = compare_individuals(&b, &a).unwrap();
            prop_assert_eq!(ab, ba.reverse());
            if ab == Ordering::Equal {
                prop_assert_eq!(&a.genome, &b.genome);
            }
            let bc = compare_individuals(&b, &c).unwrap();
            if ab != Ordering::Greater && bc != Ordering::Greater {
                prop_assert_ne!(compare_individuals(&a, &c).unwrap(), Ordering::Greater);
            }
        }
    }
}

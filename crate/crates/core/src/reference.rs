//! Sequential GA step used as a test oracle for the generation chain.
//!
//! Written as a plain loop over islands with no records, keys or shuffle. It
//! calls the suite's operators with the same `(generation, phase, island)`
//! streams the chain uses, so both must agree bit for bit.

use crate::error::{Error, Result};
use crate::model::{GaConfig, Individual, IslandId, PopulationSnapshot};
use crate::operators::OffspringOnly;
use crate::pipeline::TerminationFlag;
use crate::rng::{Phase, TaskRng, TaskSeed};
use crate::scalar::Scalar;
use crate::suite::{ElitismPolicy, OperatorSuite};

fn stream(config: &GaConfig, generation: u64, phase: Phase, island: usize) -> TaskRng {
    TaskSeed::new(
        config.master_seed,
        generation,
        phase,
        island as u32 + config.stream_offset,
    )
    .rng()
}

/// One generation computed island by island.
pub fn reference_generation<F: Scalar>(
    snapshot: &PopulationSnapshot<F>,
    suite: &OperatorSuite<F>,
    config: &GaConfig,
) -> Result<(PopulationSnapshot<F>, Vec<TerminationFlag<F>>)> {
    let g = snapshot.generation + 1;
    let j = config.islands;
    let all: Vec<Individual<F>> = snapshot.individuals().cloned().collect();
    if j == 0 || all.len() < j {
        return Err(Error::config("islands", "not enough individuals"));
    }

    let mut islands = Vec::with_capacity(j);
    let mut start = 0;
    for i in 0..j {
        let size = all.len() / j + usize::from(i < all.len() % j);
        islands.push(all[start..start + size].to_vec());
        start += size;
    }

    let mut flags = Vec::new();
    for (i, island) in islands.iter_mut().enumerate() {
        let mut rng = stream(config, g, Phase::Fitness, i);
        for (k, ind) in island.iter_mut().enumerate() {
            if ind.fitness.is_none() {
                let f = suite
                    .evaluator
                    .evaluate(&ind.genome, &mut rng)
                    .map_err(|e| Error::Evaluation { index: k, reason: e.to_string() })?;
                if !(f >= F::zero()) {
                    return Err(Error::Evaluation { index: k, reason: "negative".into() });
                }
                ind.fitness = Some(f);
            }
        }
        if let Some(criterion) = &suite.termination {
            let mut first = None;
            for ind in island.iter_mut() {
                if criterion.is_satisfied(ind)? {
                    ind.is_solution = true;
                    first.get_or_insert_with(|| ind.clone());
                }
            }
            if let Some(ind) = first {
                flags.push(TerminationFlag {
                    generation: g,
                    island: IslandId(i as u32),
                    satisfying_individual: ind,
                });
            }
        }
    }
    if !flags.is_empty() {
        return Ok((PopulationSnapshot::new(g, islands), flags));
    }

    let mut next = Vec::with_capacity(j);
    for (i, island) in islands.into_iter().enumerate() {
        let r = island.len();
        let Some(selector) = &suite.selection else {
            let survivors = match (config.elitism_enabled, &suite.elitism) {
                (true, Some(p)) => {
                    p.survivors(Vec::new(), &island, r, &mut stream(config, g, Phase::Elitism, i))?
                }
                (true, None) => island,
                (false, _) => {
                    OffspringOnly.survivors(island, &[], r, &mut stream(config, g, Phase::Elitism, i))?
                }
            };
            next.push(survivors);
            continue;
        };

        let couples = selector.select(&island, r / 2, &mut stream(config, g, Phase::Selection, i))?;

        let mut rng = stream(config, g, Phase::Crossover, i);
        let mut offspring = Vec::with_capacity(r);
        for &(a, b) in &couples {
            let (p1, p2) = (&island[a].genome, &island[b].genome);
            match &suite.crossover {
                Some(op) => {
                    let (c1, c2) = op.crossover(p1, p2, &mut rng)?;
                    offspring.push(Individual::new(c1));
                    offspring.push(Individual::new(c2));
                }
                None => {
                    offspring.push(island[a].clone());
                    offspring.push(island[b].clone());
                }
            }
        }

        if let Some(op) = &suite.mutation {
            let mut rng = stream(config, g, Phase::Mutation, i);
            for child in &mut offspring {
                child.genome = op.mutate(&child.genome, &mut rng)?;
                child.fitness = None;
                child.is_solution = false;
            }
        }

        let mut rng = stream(config, g, Phase::Elitism, i);
        let survivors = if config.elitism_enabled {
            match &suite.elitism {
                Some(p) => p.survivors(offspring, &island, r, &mut rng)?,
                None => offspring.into_iter().chain(island).collect(),
            }
        } else {
            OffspringOnly.survivors(offspring, &island, r, &mut rng)?
        };
        next.push(survivors);
    }
    Ok((PopulationSnapshot::new(g, next), flags))
}

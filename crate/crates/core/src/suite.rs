//! User-level behaviours plugged into the generation chain.
//!
//! A GA is assembled by filling an [`OperatorSuite`]. Every slot except the
//! fitness evaluator may be left empty, in which case the corresponding phase
//! forwards its input unchanged.

use crate::error::Result;
use crate::model::{Genome, Individual};
use crate::rng::TaskRng;
use crate::scalar::Scalar;

pub trait Initialiser<F: Scalar>: Send + Sync {
    fn initialise(
        &self,
        genome_length: usize,
        count: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<Individual<F>>>;
}

/// Fitness function. Higher is better and values must be non-negative.
pub trait FitnessEvaluator<F: Scalar>: Send + Sync {
    fn evaluate(&self, genome: &Genome, rng: &mut TaskRng) -> Result<F>;
}

pub trait TerminationCriterion<F: Scalar>: Send + Sync {
    fn is_satisfied(&self, individual: &Individual<F>) -> Result<bool>;
}

/// Picks `num_couples` parent pairs, as indices into `individuals`.
pub trait SelectionOperator<F: Scalar>: Send + Sync {
    fn select(
        &self,
        individuals: &[Individual<F>],
        num_couples: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<(usize, usize)>>;
}

pub trait CrossoverOperator: Send + Sync {
    fn crossover(&self, first: &Genome, second: &Genome, rng: &mut TaskRng)
        -> Result<(Genome, Genome)>;
}

pub trait MutationOperator: Send + Sync {
    fn mutate(&self, genome: &Genome, rng: &mut TaskRng) -> Result<Genome>;
}

/// Chooses the definitive island of size `size` from the offspring and the
/// previous (evaluated) population.
pub trait ElitismPolicy<F: Scalar>: Send + Sync {
    fn survivors(
        &self,
        offspring: Vec<Individual<F>>,
        previous: &[Individual<F>],
        size: usize,
        rng: &mut TaskRng,
    ) -> Result<Vec<Individual<F>>>;
}

/// Adapts a plain function into a [`FitnessEvaluator`].
pub struct FnEvaluator<G>(pub G);

impl<F, G> FitnessEvaluator<F> for FnEvaluator<G>
where
    F: Scalar,
    G: Fn(&Genome) -> F + Send + Sync,
{
    fn evaluate(&self, genome: &Genome, _rng: &mut TaskRng) -> Result<F> {
        Ok((self.0)(genome))
    }
}

/// Adapts a predicate into a [`TerminationCriterion`].
pub struct FnCriterion<G>(pub G);

impl<F, G> TerminationCriterion<F> for FnCriterion<G>
where
    F: Scalar,
    G: Fn(&Individual<F>) -> bool + Send + Sync,
{
    fn is_satisfied(&self, individual: &Individual<F>) -> Result<bool> {
        Ok((self.0)(individual))
    }
}

/// The full set of user behaviours for one GA.
pub struct OperatorSuite<F: Scalar = f64> {
    pub initialiser: Box<dyn Initialiser<F>>,
    pub evaluator: Box<dyn FitnessEvaluator<F>>,
    pub termination: Option<Box<dyn TerminationCriterion<F>>>,
    pub selection: Option<Box<dyn SelectionOperator<F>>>,
    pub crossover: Option<Box<dyn CrossoverOperator>>,
    pub mutation: Option<Box<dyn MutationOperator>>,
    pub elitism: Option<Box<dyn ElitismPolicy<F>>>,
}

impl<F: Scalar> OperatorSuite<F> {
    /// Random initialiser, the given evaluator, and pass-through everywhere
    /// else.
    pub fn passthrough(evaluator: impl FitnessEvaluator<F> + 'static) -> Self {
        OperatorSuite {
            initialiser: Box::new(crate::operators::RandomBitInitialiser),
            evaluator: Box::new(evaluator),
            termination: None,
            selection: None,
            crossover: None,
            mutation: None,
            elitism: None,
        }
    }

    /// The built-in operators: roulette wheel, single-point crossover,
    /// bit-flip mutation at the configured rate and best-N elitism.
    pub fn standard(
        config: &crate::model::GaConfig,
        evaluator: impl FitnessEvaluator<F> + 'static,
        termination: Option<Box<dyn TerminationCriterion<F>>>,
    ) -> Self {
        use crate::operators::{BestNElitism, BitFlipMutation, RouletteWheel, SinglePointCrossover};
        OperatorSuite {
            initialiser: Box::new(crate::operators::RandomBitInitialiser),
            evaluator: Box::new(evaluator),
            termination,
            selection: Some(Box::new(RouletteWheel)),
            crossover: Some(Box::new(SinglePointCrossover)),
            mutation: Some(Box::new(BitFlipMutation::new(config.mutation_probability))),
            elitism: Some(Box::new(BestNElitism::new(config.elite_count))),
        }
    }

    pub fn with_termination(mut self, criterion: impl TerminationCriterion<F> + 'static) -> Self {
        self.termination = Some(Box::new(criterion));
        self
    }

    pub fn with_initialiser(mut self, initialiser: impl Initialiser<F> + 'static) -> Self {
        self.initialiser = Box::new(initialiser);
        self
    }

    pub fn with_crossover(mut self, crossover: Option<Box<dyn CrossoverOperator>>) -> Self {
        self.crossover = crossover;
        self
    }
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-gene probability of a Gaussian perturbation.
    pub mutation_rate: f64,
    /// Probability that a child mixes two parents rather than copying one.
    pub crossover_rate: f64,
    pub tournament_size: usize,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            mutation_rate: 0.1,
            crossover_rate: 0.7,
            tournament_size: 3,
            elitism: 2,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 || self.generations < 1 || self.tournament_size < 1 {
            return Err(Error::invalid(
                "GA population must be >= 2, generations and tournament size >= 1",
            ));
        }
        if self.elitism < 1 || self.elitism > self.population {
            return Err(Error::invalid("GA elitism must lie in [1, population]"));
        }
        for (name, rate) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

pub(crate) struct GaOutcome {
    pub genome: Vec<f64>,
    pub fitness: f64,
    /// Best fitness after each generation.
    pub trace: Vec<f64>,
    pub evals: usize,
}

/// Refine `seed_genome` (fitness `seed_fitness`). Genes are grouped in blocks
/// of `block` that cross over together; `sigma[i % block]` is the mutation
/// scale of gene `i`.
///
/// `fitness` returns `None` once a budget is exhausted; the generation in
/// progress is then discarded.
pub(crate) fn refine<F>(
    config: &GaConfig,
    seed_genome: &[f64],
    seed_fitness: f64,
    block: usize,
    sigma: &[f64],
    rng: &mut ChaCha8Rng,
    fitness: F,
) -> GaOutcome
where
    F: Fn(&[f64]) -> Option<f64> + Sync,
{
    let mutate = |g: &mut [f64], rng: &mut ChaCha8Rng, rate: f64| {
        for (i, v) in g.iter_mut().enumerate() {
            if rng.gen::<f64>() < rate {
                let z: f64 = StandardNormal.sample(rng);
                *v += sigma[i % block] * z;
            }
        }
    };

    let mut evals = 0;
    let mut trace = Vec::new();
    let mut population: Vec<(Vec<f64>, f64)> = vec![(seed_genome.to_vec(), seed_fitness)];
    let initial: Vec<Vec<f64>> = (1..config.population)
        .map(|_| {
            let mut g = seed_genome.to_vec();
            mutate(&mut g, rng, 1.0);
            g
        })
        .collect();
    let scored = par::map_slice(&initial, |g| fitness(g));
    if scored.iter().any(Option::is_none) {
        return GaOutcome {
            genome: seed_genome.to_vec(),
            fitness: seed_fitness,
            trace,
            evals: scored.iter().flatten().count(),
        };
    }
    evals += scored.len();
    population.extend(initial.into_iter().zip(scored.into_iter().flatten()));
    sort(&mut population);
    trace.push(population[0].1);

    for _ in 0..config.generations {
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            (0..config.tournament_size)
                .map(|_| rng.gen_range(0..population.len()))
                .min()
                .expect("tournament size >= 1")
        };
        let mut children = Vec::with_capacity(config.population - config.elitism);
        while children.len() < config.population - config.elitism {
            let a = tournament(rng);
            let mut child = population[a].0.clone();
            if rng.gen::<f64>() < config.crossover_rate {
                let b = tournament(rng);
                for (start, chunk) in child.chunks_mut(block).enumerate() {
                    if rng.gen::<bool>() {
                        let from = &population[b].0[start * block..start * block + chunk.len()];
                        chunk.copy_from_slice(from);
                    }
                }
            }
            mutate(&mut child, rng, config.mutation_rate);
            children.push(child);
        }
        let scored = par::map_slice(&children, |g| fitness(g));
        if scored.iter().any(Option::is_none) {
            evals += scored.iter().flatten().count();
            break;
        }
        evals += scored.len();
        population.truncate(config.elitism);
        population.extend(children.into_iter().zip(scored.into_iter().flatten()));
        sort(&mut population);
        trace.push(population[0].1);
    }

    let (genome, fitness) = population.swap_remove(0);
    GaOutcome {
        genome,
        fitness,
        trace,
        evals,
    }
}

/// Population index order is fitness, ties resolved by position (stable).
fn sort(population: &mut [(Vec<f64>, f64)]) {
    population.sort_by(|a, b| a.1.total_cmp(&b.1));
}

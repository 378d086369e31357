//! Synthetic population generation.
//!
//! A population is built in three passes: individuals are instantiated from
//! the schema distributions with an even split across regions, regions are
//! diversified by desirability-driven redistribution, and a sampled share
//! of individuals is assigned a mail-in flag from a logistic preference
//! score. Each pass draws from per-region substreams, so output is
//! identical however the work is scheduled.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use crate::schema::{AttributeSchema, DesirabilityConfig, DesirabilityPrior};

/// One simulated voter: a category index per schema attribute.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Individual {
    pub attrs: Vec<u16>,
    pub mail_in: bool,
    pub region_id: u32,
}

/// An electoral region with its desirability table
/// (`desirability[attr][cat]` in `[0, 1]`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Region {
    pub region_id: u32,
    pub individuals: Vec<Individual>,
    pub desirability: Vec<Vec<f64>>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub regions: Vec<Region>,
    pub schema: AttributeSchema,
    pub master_seed: u64,
}

impl Population {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn total_individuals(&self) -> usize {
        self.regions.iter().map(Region::len).sum()
    }

    /// Marginal category fractions over the whole population, per attribute.
    pub fn global_marginals(&self) -> Vec<Vec<f64>> {
        let dims = self.schema.dims();
        let mut counts: Vec<Vec<u64>> = dims.iter().map(|&d| vec![0; d]).collect();
        for region in &self.regions {
            for ind in &region.individuals {
                for (a, &cat) in ind.attrs.iter().enumerate() {
                    counts[a][cat as usize] += 1;
                }
            }
        }
        let total = self.total_individuals() as f64;
        counts
            .into_iter()
            .map(|c| c.into_iter().map(|n| n as f64 / total).collect())
            .collect()
    }
}

/// Marginal category fractions within one region (one block per attribute,
/// each block summing to 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicProfile {
    pub marginals: Vec<Vec<f64>>,
}

/// Instantiate `pop_size` individuals across `n_regions` regions, split
/// evenly (the first `pop_size % n_regions` regions get one extra), with
/// attribute values drawn independently from the schema distributions.
pub fn generate_population(
    schema: &AttributeSchema,
    n_regions: usize,
    pop_size: usize,
    seed: u64,
) -> Result<Population> {
    schema.validate()?;
    if n_regions == 0 {
        return Err(Error::ZeroRegions);
    }
    if pop_size < n_regions {
        return Err(Error::PopulationTooSmall);
    }

    let base = pop_size / n_regions;
    let extra = pop_size % n_regions;

    let regions: Vec<Region> = (0..n_regions)
        .into_par_iter()
        .map(|r| {
            let size = base + usize::from(r < extra);
            let mut rng = substream(seed, &[domain::ATTRIBUTES, r as u64]);
            let individuals = (0..size)
                .map(|_| Individual {
                    attrs: schema.attributes.iter().map(|a| a.sample(&mut rng)).collect(),
                    mail_in: false,
                    region_id: r as u32,
                })
                .collect();
            Region {
                region_id: r as u32,
                individuals,
                desirability: schema.dims().iter().map(|&d| vec![0.0; d]).collect(),
            }
        })
        .collect();

    Ok(Population {
        regions,
        schema: schema.clone(),
        master_seed: seed,
    })
}

/// Draw a fresh desirability table for every region from the configured
/// prior. Entries are independent across regions, attributes, and
/// categories.
pub fn assign_desirability(
    mut population: Population,
    prior: &DesirabilityConfig,
    seed: u64,
) -> Result<Population> {
    prior.validate(&population.schema)?;
    let schema = population.schema.clone();
    population.regions.par_iter_mut().for_each(|region| {
        let mut rng = substream(seed, &[domain::DESIRABILITY, region.region_id as u64]);
        for (a, attr) in schema.attributes.iter().enumerate() {
            for c in 0..attr.n_categories() {
                region.desirability[a][c] = draw_prior(prior.prior_for(&schema, a, c), &mut rng);
            }
        }
    });
    Ok(population)
}

fn draw_prior(prior: DesirabilityPrior, rng: &mut impl Rng) -> f64 {
    match prior {
        DesirabilityPrior::Uniform => rng.gen(),
        DesirabilityPrior::Fixed { value } => value,
        DesirabilityPrior::Beta { alpha, beta } => {
            Beta::new(alpha, beta).expect("validated prior").sample(rng)
        }
    }
}

/// Relocate a sampled share of each region's individuals. Every sampled
/// individual draws a destination with probability proportional to its
/// desirability score for each region (the product of the region's
/// per-attribute desirabilities for the individual's categories). Regions
/// at or above `cap_factor` times the mean region size receive nobody;
/// an individual's own region stays eligible, so it may stay put.
pub fn redistribute(
    mut population: Population,
    sample_fraction: f64,
    cap_factor: f64,
    seed: u64,
) -> Result<Population> {
    if !(0.0..=1.0).contains(&sample_fraction) {
        return Err(Error::ParamRange {
            name: "sample_fraction",
            value: sample_fraction,
            min: 0.0,
            max: 1.0,
        });
    }
    if cap_factor < 1.0 {
        return Err(Error::ParamRange {
            name: "cap_factor",
            value: cap_factor,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    if sample_fraction == 0.0 {
        return Ok(population);
    }

    let n_regions = population.n_regions();
    let total = population.total_individuals();
    let cap = ((cap_factor * total as f64 / n_regions as f64).floor() as usize).max(1);

    // Sample movers per region up front, from each region's own substream.
    let sampled: Vec<Vec<usize>> = population
        .regions
        .iter()
        .map(|region| {
            let mut rng = substream(seed, &[domain::REDISTRIBUTE, region.region_id as u64]);
            let k = (sample_fraction * region.len() as f64).floor() as usize;
            let mut idx: Vec<usize> = index_sample(&mut rng, region.len(), k).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();

    let mut counts: Vec<usize> = population.regions.iter().map(Region::len).collect();
    // destinations[r][i] = region the i-th sampled individual of region r goes to
    let mut destinations: Vec<Vec<u32>> = vec![Vec::new(); n_regions];
    let mut weights = vec![0.0f64; n_regions];

    let mut draw_rng = substream(seed, &[domain::REDISTRIBUTE, n_regions as u64, 1]);
    for (source, indices) in sampled.iter().enumerate() {
        for &i in indices {
            let ind = &population.regions[source].individuals[i];
            let mut total_weight = 0.0;
            for (r, region) in population.regions.iter().enumerate() {
                let eligible = r == source || counts[r] < cap;
                weights[r] = if eligible {
                    let mut w = 1.0;
                    for (a, &cat) in ind.attrs.iter().enumerate() {
                        w *= region.desirability[a][cat as usize];
                    }
                    w
                } else {
                    0.0
                };
                total_weight += weights[r];
            }
            let dest = if total_weight > 0.0 {
                let mut u = draw_rng.gen::<f64>() * total_weight;
                let mut chosen = source;
                for (r, &w) in weights.iter().enumerate() {
                    if w <= 0.0 {
                        continue;
                    }
                    if u < w {
                        chosen = r;
                        break;
                    }
                    u -= w;
                }
                chosen
            } else {
                // all scores zero: uniform over eligible regions
                let eligible: Vec<usize> = (0..n_regions)
                    .filter(|&r| r == source || counts[r] < cap)
                    .collect();
                eligible[draw_rng.gen_range(0..eligible.len())]
            };
            destinations[source].push(dest as u32);
            if dest != source {
                counts[source] -= 1;
                counts[dest] += 1;
            }
        }
    }

    // Apply moves: extract movers (descending index to keep indices valid),
    // then push them into their destinations.
    let mut moved: Vec<(u32, Individual)> = Vec::new();
    for (source, indices) in sampled.iter().enumerate() {
        for (slot, &i) in indices.iter().enumerate().rev() {
            let dest = destinations[source][slot];
            if dest as usize != source {
                let ind = population.regions[source].individuals.remove(i);
                moved.push((dest, ind));
            }
        }
    }
    for (dest, mut ind) in moved {
        ind.region_id = dest;
        population.regions[dest as usize].individuals.push(ind);
    }

    debug_assert_eq!(population.total_individuals(), total);
    for region in &population.regions {
        if region.is_empty() {
            return Err(Error::EmptyRegion(region.region_id));
        }
    }
    Ok(population)
}

/// Mark a sampled share of each region's individuals as mail-in voters.
/// A sampled individual's preference score is `bias` plus the sum of its
/// per-category weights, and it votes by mail with probability
/// `logistic(score)`; unsampled individuals vote in person.
pub fn assign_mail_in(
    mut population: Population,
    sample_fraction: f64,
    weights: &[Vec<f64>],
    bias: f64,
    seed: u64,
) -> Result<Population> {
    if !(0.0..=1.0).contains(&sample_fraction) {
        return Err(Error::ParamRange {
            name: "sample_fraction",
            value: sample_fraction,
            min: 0.0,
            max: 1.0,
        });
    }
    let dims = population.schema.dims();
    if weights.len() != dims.len() || weights.iter().zip(&dims).any(|(w, &d)| w.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: weights.len(),
        });
    }

    population.regions.par_iter_mut().for_each(|region| {
        let mut rng = substream(seed, &[domain::MAIL_IN, region.region_id as u64]);
        let k = (sample_fraction * region.len() as f64).floor() as usize;
        let mut idx: Vec<usize> = index_sample(&mut rng, region.len(), k).into_vec();
        idx.sort_unstable();
        for i in idx {
            let ind = &mut region.individuals[i];
            let score: f64 = bias
                + ind
                    .attrs
                    .iter()
                    .enumerate()
                    .map(|(a, &cat)| weights[a][cat as usize])
                    .sum::<f64>();
            let p = 1.0 / (1.0 + (-score).exp());
            ind.mail_in = rng.gen::<f64>() < p;
        }
    });
    Ok(population)
}

/// Exact marginal category fractions of one region.
pub fn region_demographics(region: &Region, schema: &AttributeSchema) -> Result<DemographicProfile> {
    if region.is_empty() {
        return Err(Error::EmptyRegion(region.region_id));
    }
    let dims = schema.dims();
    let mut counts: Vec<Vec<u64>> = dims.iter().map(|&d| vec![0; d]).collect();
    for ind in &region.individuals {
        for (a, &cat) in ind.attrs.iter().enumerate() {
            counts[a][cat as usize] += 1;
        }
    }
    let n = region.len() as f64;
    Ok(DemographicProfile {
        marginals: counts
            .into_iter()
            .map(|c| c.into_iter().map(|v| v as f64 / n).collect())
            .collect(),
    })
}

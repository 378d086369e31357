//! Vote computation and tallying.
//!
//! Each individual's one-hot attribute encoding feeds a randomly weighted
//! single-hidden-layer network (hidden width twice the input width). A
//! per-individual dropout mask zeroes hidden units before the layer is
//! summed into a voting score. A global threshold over the unperturbed
//! scores fixes the popular vote at the target share; small uniform noise
//! then flips individuals near the threshold, so region-level results vary
//! while the overall outcome stays controlled.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popgen::{Individual, Population};
use crate::rng::{domain, substream};
use crate::schema::{Activation, AttributeSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
pub enum Candidate {
    A,
    B,
}

impl Candidate {
    pub fn other(self) -> Candidate {
        match self {
            Candidate::A => Candidate::B,
            Candidate::B => Candidate::A,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Candidate::A => "A",
            Candidate::B => "B",
        }
    }

    pub fn parse(s: &str) -> Option<Candidate> {
        match s {
            "A" | "a" => Some(Candidate::A),
            "B" | "b" => Some(Candidate::B),
            _ => None,
        }
    }
}

/// Randomly initialized scoring network. `weights[h * input_len + f]`
/// holds the weight from one-hot feature `f` to hidden unit `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoteNetwork {
    pub input_len: usize,
    pub hidden_len: usize,
    pub weights: Vec<f64>,
    pub dropout: f64,
    pub activation: Activation,
    feature_offsets: Vec<usize>,
}

/// Initialize network weights i.i.d. Gaussian with standard deviation
/// `1 / sqrt(input_len)`; hidden width is twice the input width.
pub fn init_vote_network(
    schema: &AttributeSchema,
    dropout: f64,
    activation: Activation,
    seed: u64,
) -> Result<VoteNetwork> {
    schema.validate()?;
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::ParamRange {
            name: "dropout",
            value: dropout,
            min: 0.0,
            max: 1.0,
        });
    }
    let input_len = schema.encoded_len();
    let hidden_len = 2 * input_len;
    let std = 1.0 / (input_len as f64).sqrt();
    let mut rng = substream(seed, &[domain::NETWORK_INIT]);
    let weights = (0..hidden_len * input_len)
        .map(|_| {
            // Box-Muller keeps the draw path explicit and stream-stable.
            let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            let u2: f64 = rng.gen();
            std * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    Ok(VoteNetwork {
        input_len,
        hidden_len,
        weights,
        dropout,
        activation,
        feature_offsets: schema.feature_offsets(),
    })
}

impl VoteNetwork {
    /// Pre-activation of hidden unit `h` for an individual's one-hot
    /// encoding (a sum of one weight per attribute).
    fn hidden_preactivation(&self, h: usize, attrs: &[u16]) -> f64 {
        let row = h * self.input_len;
        self.feature_offsets
            .iter()
            .zip(attrs)
            .map(|(&off, &cat)| self.weights[row + off + cat as usize])
            .sum()
    }
}

/// Score one individual: sum of hidden activations surviving the dropout
/// mask drawn from `rng`.
pub fn voting_score(
    network: &VoteNetwork,
    individual: &Individual,
    rng: &mut impl Rng,
) -> Result<f64> {
    if individual.attrs.len() != network.feature_offsets.len() {
        return Err(Error::DimensionMismatch {
            expected: network.feature_offsets.len(),
            got: individual.attrs.len(),
        });
    }
    let mut score = 0.0;
    for h in 0..network.hidden_len {
        let keep = network.dropout == 0.0 || rng.gen::<f64>() >= network.dropout;
        if keep {
            let a = network.hidden_preactivation(h, &individual.attrs);
            score += match network.activation {
                Activation::Identity => a,
                Activation::Tanh => a.tanh(),
            };
        }
    }
    Ok(score)
}

/// Unperturbed voting scores for the whole population, one vector per
/// region. Each individual has its own substream keyed by
/// `(seed, region_id, index)`.
pub fn compute_scores(
    population: &Population,
    network: &VoteNetwork,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    population
        .regions
        .par_iter()
        .map(|region| {
            region
                .individuals
                .iter()
                .enumerate()
                .map(|(i, ind)| {
                    let mut rng =
                        substream(seed, &[domain::SCORE, region.region_id as u64, i as u64]);
                    voting_score(network, ind, &mut rng)
                })
                .collect()
        })
        .collect()
}

/// Threshold splitting scores at the `(1 - target_share)` quantile: the
/// `round(target_share * n)`-th largest score. With distinct scores the
/// fraction at or above it equals the target within `1 / n`; exact ties
/// are resolved by `cast_votes`.
pub fn compute_threshold(scores: &[f64], target_share: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if !(0.0..=1.0).contains(&target_share) {
        return Err(Error::ParamRange {
            name: "target_share",
            value: target_share,
            min: 0.0,
            max: 1.0,
        });
    }
    let n = scores.len();
    let m = ((target_share * n as f64).round() as usize).min(n);
    let mut sorted = scores.to_vec();
    if m == 0 {
        sorted.sort_unstable_by(f64::total_cmp);
        return Ok(sorted[n - 1] + 1.0);
    }
    let (_, kth, _) = sorted.select_nth_unstable_by(n - m, f64::total_cmp);
    Ok(*kth)
}

/// How the uniform vote-flip noise half-width is specified.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum NoiseWidth {
    /// Absolute half-width in score units.
    Absolute(f64),
    /// Multiple of the unperturbed score standard deviation.
    ScoreStdFraction(f64),
}

/// One cast ballot. `individual` is the index within the region; fraud
/// by vote addition appends synthetic ballots with no individual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub individual: Option<u32>,
    pub mail_in: bool,
    pub vote: Candidate,
}

impl Ballot {
    pub fn is_synthetic(&self) -> bool {
        self.individual.is_none()
    }
}

/// All ballots of one election, grouped by region, plus the score
/// threshold they were cast against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ballots {
    pub threshold: f64,
    pub per_region: Vec<Vec<Ballot>>,
}

impl Ballots {
    pub fn total(&self) -> usize {
        self.per_region.iter().map(Vec::len).sum()
    }

    pub fn count_for(&self, candidate: Candidate) -> usize {
        self.per_region
            .iter()
            .flatten()
            .filter(|b| b.vote == candidate)
            .count()
    }
}

/// Cast every individual's vote. Scores are computed with dropout, the
/// global threshold is fixed from the unperturbed scores, then each score
/// is perturbed by `Uniform(-w, +w)` noise before comparison, so votes
/// near the threshold may flip. Ties at the threshold are broken in
/// region/index order so that a noise-free run hits the target share to
/// within one vote.
pub fn cast_votes(
    population: &Population,
    network: &VoteNetwork,
    target_share: f64,
    noise: NoiseWidth,
    seed: u64,
) -> Result<Ballots> {
    let scores = compute_scores(population, network, seed)?;
    let n = population.total_individuals();
    if n == 0 {
        return Err(Error::EmptyScores);
    }

    let threshold = {
        let flat: Vec<f64> = scores.iter().flatten().copied().collect();
        compute_threshold(&flat, target_share)?
    };

    let halfwidth = match noise {
        NoiseWidth::Absolute(w) => {
            if w < 0.0 {
                return Err(Error::ParamRange {
                    name: "noise_halfwidth",
                    value: w,
                    min: 0.0,
                    max: f64::INFINITY,
                });
            }
            w
        }
        NoiseWidth::ScoreStdFraction(f) => {
            if f < 0.0 {
                return Err(Error::ParamRange {
                    name: "noise_scale",
                    value: f,
                    min: 0.0,
                    max: f64::INFINITY,
                });
            }
            f * std_dev(scores.iter().flatten().copied(), n)
        }
    };

    // Perturbed scores, per-individual noise substreams.
    let perturbed: Vec<Vec<f64>> = population
        .regions
        .par_iter()
        .zip(&scores)
        .map(|(region, region_scores)| {
            region_scores
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let mut rng = substream(
                        seed,
                        &[domain::SCORE, region.region_id as u64, i as u64, 1],
                    );
                    let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                    s + halfwidth * u
                })
                .collect()
        })
        .collect();

    // Exact split: ties at the threshold vote A only while capacity lasts.
    let m = ((target_share * n as f64).round() as usize).min(n);
    let above: usize = perturbed
        .iter()
        .flatten()
        .filter(|&&p| p > threshold)
        .count();
    let mut tie_capacity = m.saturating_sub(above);

    let per_region = population
        .regions
        .iter()
        .zip(&perturbed)
        .map(|(region, region_scores)| {
            region
                .individuals
                .iter()
                .enumerate()
                .map(|(i, ind)| {
                    let p = region_scores[i];
                    let vote = if p > threshold {
                        Candidate::A
                    } else if p == threshold && tie_capacity > 0 {
                        tie_capacity -= 1;
                        Candidate::A
                    } else {
                        Candidate::B
                    };
                    Ballot {
                        individual: Some(i as u32),
                        mail_in: ind.mail_in,
                        vote,
                    }
                })
                .collect()
        })
        .collect();

    Ok(Ballots {
        threshold,
        per_region,
    })
}

fn std_dev(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Per-region vote share for candidate A and total ballot count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionShare {
    pub region_id: u32,
    pub votes_a: u64,
    pub votes_b: u64,
}

impl RegionShare {
    pub fn total(&self) -> u64 {
        self.votes_a + self.votes_b
    }

    pub fn share_a(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.votes_a as f64 / self.total() as f64
        }
    }
}

/// Tallied results: per-region shares and the global popular vote for A.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionResults {
    pub regions: Vec<RegionShare>,
}

impl RegionResults {
    pub fn total_votes(&self) -> u64 {
        self.regions.iter().map(RegionShare::total).sum()
    }

    /// Global popular-vote share for candidate A.
    pub fn global_share_a(&self) -> f64 {
        let total = self.total_votes();
        if total == 0 {
            return 0.0;
        }
        self.regions.iter().map(|r| r.votes_a).sum::<u64>() as f64 / total as f64
    }

    pub fn share_for(&self, region_id: u32) -> Option<f64> {
        self.regions
            .iter()
            .find(|r| r.region_id == region_id)
            .map(RegionShare::share_a)
    }

    /// Actual shares ordered by ascending region id.
    pub fn shares_in_region_order(&self) -> Vec<f64> {
        let mut rows: Vec<&RegionShare> = self.regions.iter().collect();
        rows.sort_by_key(|r| r.region_id);
        rows.iter().map(|r| r.share_a()).collect()
    }
}

/// Count ballots per region. Works on pre- and post-fraud ballot sets;
/// only the region structure must match the population.
pub fn tally(ballots: &Ballots, population: &Population) -> Result<RegionResults> {
    if ballots.per_region.len() != population.n_regions() {
        return Err(Error::RegionCountMismatch {
            expected: population.n_regions(),
            got: ballots.per_region.len(),
        });
    }
    let regions = ballots
        .per_region
        .iter()
        .zip(&population.regions)
        .map(|(ballots, region)| {
            let votes_a = ballots.iter().filter(|b| b.vote == Candidate::A).count() as u64;
            let votes_b = ballots.len() as u64 - votes_a;
            RegionShare {
                region_id: region.region_id,
                votes_a,
                votes_b,
            }
        })
        .collect();
    Ok(RegionResults { regions })
}

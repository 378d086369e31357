//! Labeled fraud injection.
//!
//! Three modes, all acting after polling and before detection, all in
//! favor of one candidate, all impartial to voter attributes and voting
//! method: switching flips non-favored ballots, deletion removes them,
//! addition appends synthetic favored ballots. Regions are chosen
//! uniformly; within a fraudulent region every eligible ballot is hit
//! independently with the configured probability. Ground-truth labels
//! record exactly what happened.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popgen::Population;
use crate::rng::{domain, substream};
use crate::votecast::{tally, Ballot, Ballots, Candidate, RegionResults};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum FraudMode {
    Deletion,
    Addition,
    Switching,
}

impl FraudMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FraudMode::Deletion => "deletion",
            FraudMode::Addition => "addition",
            FraudMode::Switching => "switching",
        }
    }

    pub fn parse(s: &str) -> Option<FraudMode> {
        match s {
            "deletion" => Some(FraudMode::Deletion),
            "addition" => Some(FraudMode::Addition),
            "switching" => Some(FraudMode::Switching),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FraudSpec {
    pub mode: FraudMode,
    pub n_fraud_regions: usize,
    pub probability: f64,
    pub favored: Candidate,
    pub seed: u64,
}

/// Ground truth for one region.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RegionLabel {
    pub region_id: u32,
    pub fraudulent: bool,
    pub mode: Option<FraudMode>,
    pub affected_votes: u64,
}

/// Ground truth for a whole run: per-region labels plus the global
/// popular-vote share before and after injection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FraudLabels {
    pub regions: Vec<RegionLabel>,
    pub favored: Candidate,
    pub pre_share_a: f64,
    pub post_share_a: f64,
}

impl FraudLabels {
    pub fn fraud_region_ids(&self) -> Vec<u32> {
        self.regions
            .iter()
            .filter(|r| r.fraudulent)
            .map(|r| r.region_id)
            .collect()
    }

    pub fn total_affected(&self) -> u64 {
        self.regions.iter().map(|r| r.affected_votes).sum()
    }
}

/// Apply the fraud spec to a tallied ballot set, returning the altered
/// ballots and ground-truth labels. Deterministic per `spec.seed`; region
/// substreams keep the result independent of evaluation order.
pub fn inject_fraud(
    ballots: &Ballots,
    population: &Population,
    spec: &FraudSpec,
) -> Result<(Ballots, FraudLabels)> {
    let n_regions = population.n_regions();
    if spec.n_fraud_regions > n_regions {
        return Err(Error::TooManyFraudRegions {
            requested: spec.n_fraud_regions,
            available: n_regions,
        });
    }
    if !(0.0..=1.0).contains(&spec.probability) {
        return Err(Error::ParamRange {
            name: "probability",
            value: spec.probability,
            min: 0.0,
            max: 1.0,
        });
    }
    if ballots.per_region.len() != n_regions {
        return Err(Error::RegionCountMismatch {
            expected: n_regions,
            got: ballots.per_region.len(),
        });
    }

    let pre = tally(ballots, population)?;

    let mut region_rng = substream(spec.seed, &[domain::FRAUD_REGIONS]);
    let mut fraudulent = vec![false; n_regions];
    for idx in rand::seq::index::sample(&mut region_rng, n_regions, spec.n_fraud_regions) {
        fraudulent[idx] = true;
    }

    let mut new_ballots = Ballots {
        threshold: ballots.threshold,
        per_region: Vec::with_capacity(n_regions),
    };
    let mut labels = Vec::with_capacity(n_regions);

    for (r, region_ballots) in ballots.per_region.iter().enumerate() {
        let region_id = population.regions[r].region_id;
        if !fraudulent[r] {
            new_ballots.per_region.push(region_ballots.clone());
            labels.push(RegionLabel {
                region_id,
                fraudulent: false,
                mode: None,
                affected_votes: 0,
            });
            continue;
        }

        let mut rng = substream(spec.seed, &[domain::FRAUD_APPLY, region_id as u64]);
        let mut affected = 0u64;
        let altered = match spec.mode {
            FraudMode::Switching => region_ballots
                .iter()
                .map(|b| {
                    let mut b = *b;
                    if b.vote != spec.favored && rng.gen::<f64>() < spec.probability {
                        b.vote = spec.favored;
                        affected += 1;
                    }
                    b
                })
                .collect(),
            FraudMode::Deletion => region_ballots
                .iter()
                .filter(|b| {
                    if b.vote != spec.favored && rng.gen::<f64>() < spec.probability {
                        affected += 1;
                        false
                    } else {
                        true
                    }
                })
                .copied()
                .collect(),
            FraudMode::Addition => {
                let mut out = region_ballots.clone();
                // Binomial(region ballots, p) synthetic favored ballots.
                let n_add = (0..region_ballots.len())
                    .filter(|_| rng.gen::<f64>() < spec.probability)
                    .count();
                out.extend((0..n_add).map(|_| Ballot {
                    individual: None,
                    mail_in: false,
                    vote: spec.favored,
                }));
                affected = n_add as u64;
                out
            }
        };
        new_ballots.per_region.push(altered);
        labels.push(RegionLabel {
            region_id,
            fraudulent: true,
            mode: Some(spec.mode),
            affected_votes: affected,
        });
    }

    let post = tally(&new_ballots, population)?;
    let labels = FraudLabels {
        regions: labels,
        favored: spec.favored,
        pre_share_a: pre.global_share_a(),
        post_share_a: post.global_share_a(),
    };
    Ok((new_ballots, labels))
}

/// Fraction of fraudulent regions whose majority winner flipped from the
/// non-favored candidate to the favored one.
pub fn fraud_significance(
    labels: &FraudLabels,
    pre: &RegionResults,
    post: &RegionResults,
) -> Result<f64> {
    let fraud_ids = labels.fraud_region_ids();
    if fraud_ids.is_empty() {
        return Err(Error::NoFraudRegions);
    }
    let favored_share = |share_a: f64| match labels.favored {
        Candidate::A => share_a,
        Candidate::B => 1.0 - share_a,
    };
    let mut flipped = 0usize;
    for id in &fraud_ids {
        let pre_share = pre.share_for(*id).ok_or(Error::RegionSetMismatch)?;
        let post_share = post.share_for(*id).ok_or(Error::RegionSetMismatch)?;
        if favored_share(pre_share) < 0.5 && favored_share(post_share) > 0.5 {
            flipped += 1;
        }
    }
    Ok(flipped as f64 / fraud_ids.len() as f64)
}

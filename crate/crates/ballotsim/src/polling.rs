//! Polling: sample respondents, record joint frequencies, inject error.
//!
//! A poll samples a small share of the population uniformly without
//! replacement and records each respondent's true vote in the cell for
//! their full attribute combination. Noise injection rescales every cell
//! by a single truncated-Gaussian factor calibrated so the induced error
//! on the poll's global share averages the configured target. Polls are
//! always drawn before fraud is injected, so they are unaffected by it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popgen::Population;
use crate::rng::{domain, substream};
use crate::votecast::{Ballots, Candidate, RegionResults};

/// Mean of |x| for a standard normal truncated at three standard
/// deviations, as a fraction of sigma: sqrt(2/pi)(1 - e^{-9/2}) / (2Phi(3) - 1).
const TRUNC3_ABS_MEAN: f64 = 0.791157;

/// Joint-frequency poll table over the full attribute cross-product.
/// Cell index is mixed-radix over category indices in schema order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PollTable {
    /// Category counts per attribute, the radix vector.
    pub dims: Vec<usize>,
    pub count_a: Vec<f64>,
    pub count_b: Vec<f64>,
    pub rate: f64,
    pub target_error: f64,
    pub seed: u64,
}

impl PollTable {
    pub fn n_cells(&self) -> usize {
        self.count_a.len()
    }

    /// Mixed-radix cell index of an attribute combination.
    pub fn cell_index(dims: &[usize], attrs: &[u16]) -> usize {
        let mut idx = 0;
        for (&d, &c) in dims.iter().zip(attrs) {
            idx = idx * d + c as usize;
        }
        idx
    }

    /// Inverse of `cell_index`.
    pub fn cell_attrs(dims: &[usize], mut idx: usize) -> Vec<u16> {
        let mut attrs = vec![0u16; dims.len()];
        for (a, &d) in dims.iter().enumerate().rev() {
            attrs[a] = (idx % d) as u16;
            idx /= d;
        }
        attrs
    }

    pub fn total_respondents(&self) -> f64 {
        self.count_a.iter().sum::<f64>() + self.count_b.iter().sum::<f64>()
    }

    /// Poll-implied global share for candidate A.
    pub fn implied_share_a(&self) -> Result<f64> {
        let a: f64 = self.count_a.iter().sum();
        let total = self.total_respondents();
        if total <= 0.0 {
            return Err(Error::EmptyPoll);
        }
        Ok(a / total)
    }
}

/// Sample `floor(rate * population)` respondents uniformly without
/// replacement and record their true votes per attribute combination.
/// Ballots must still be aligned with the population (pre-fraud).
pub fn draw_poll(
    population: &Population,
    ballots: &Ballots,
    rate: f64,
    seed: u64,
) -> Result<PollTable> {
    if !(0.0..1.0).contains(&rate) || rate <= 0.0 {
        return Err(Error::ParamRange {
            name: "rate",
            value: rate,
            min: 0.0,
            max: 1.0,
        });
    }
    if ballots.per_region.len() != population.n_regions() {
        return Err(Error::RegionCountMismatch {
            expected: population.n_regions(),
            got: ballots.per_region.len(),
        });
    }
    let pop_size = population.total_individuals();
    let n_respondents = (rate * pop_size as f64).floor() as usize;
    if n_respondents == 0 {
        return Err(Error::ZeroRespondents(rate));
    }

    // Prefix sums map a flat individual index to (region, offset).
    let mut prefix = Vec::with_capacity(population.n_regions() + 1);
    prefix.push(0usize);
    for region in &population.regions {
        prefix.push(prefix.last().unwrap() + region.len());
    }

    let dims = population.schema.dims();
    let n_cells: usize = dims.iter().product();
    let mut count_a = vec![0.0; n_cells];
    let mut count_b = vec![0.0; n_cells];

    let mut rng = substream(seed, &[domain::POLL_DRAW]);
    let mut chosen = rand::seq::index::sample(&mut rng, pop_size, n_respondents).into_vec();
    chosen.sort_unstable();

    for flat in chosen {
        let region = prefix.partition_point(|&p| p <= flat) - 1;
        let offset = flat - prefix[region];
        let ind = &population.regions[region].individuals[offset];
        let vote = ballots.per_region[region][offset].vote;
        let cell = PollTable::cell_index(&dims, &ind.attrs);
        match vote {
            Candidate::A => count_a[cell] += 1.0,
            Candidate::B => count_b[cell] += 1.0,
        }
    }

    Ok(PollTable {
        dims,
        count_a,
        count_b,
        rate,
        target_error: 0.0,
        seed,
    })
}

/// Rescale the table by one truncated-Gaussian factor: every A count by
/// `(1 + eps)` and every B count by `(1 - eps)` on the same draw. Sigma is
/// calibrated in closed form so the expected absolute shift of the implied
/// global share equals `target_error`. Counts are clamped at zero.
pub fn inject_poll_noise(poll: &PollTable, target_error: f64, seed: u64) -> Result<PollTable> {
    if target_error < 0.0 {
        return Err(Error::ParamRange {
            name: "target_error",
            value: target_error,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let mut noisy = poll.clone();
    noisy.target_error = target_error;
    if target_error == 0.0 {
        return Ok(noisy);
    }
    let p = poll.implied_share_a()?;
    let sensitivity = 2.0 * p * (1.0 - p);
    if sensitivity < 1e-9 {
        // Unanimous poll: a multiplicative rescale cannot move the share.
        return Ok(noisy);
    }
    let sigma = target_error / (sensitivity * TRUNC3_ABS_MEAN);
    let mut rng = substream(seed, &[domain::POLL_NOISE]);
    let eps = draw_truncated_normal(&mut rng, sigma);
    for (a, b) in noisy.count_a.iter_mut().zip(noisy.count_b.iter_mut()) {
        *a *= (1.0 + eps).max(0.0);
        *b *= (1.0 - eps).max(0.0);
    }
    Ok(noisy)
}

/// Gaussian(0, sigma) truncated at three sigma, by rejection.
fn draw_truncated_normal(rng: &mut impl Rng, sigma: f64) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if z.abs() <= 3.0 {
            return sigma * z;
        }
    }
}

/// Absolute gap between the poll-implied global share and the actual one.
pub fn poll_error(poll: &PollTable, results: &RegionResults) -> Result<f64> {
    Ok((poll.implied_share_a()? - results.global_share_a()).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::popgen::generate_population;
    use crate::schema::{AttributeDef, AttributeKind, AttributeSchema};
    use crate::schema::Activation;
    use crate::votecast::{cast_votes, init_vote_network, NoiseWidth};

    fn small_schema() -> AttributeSchema {
        AttributeSchema::new(vec![AttributeDef {
            name: "g".into(),
            kind: AttributeKind::Categorical {
                labels: vec!["a".into(), "b".into()],
                probs: vec![0.5, 0.5],
            },
        }])
        .unwrap()
    }

    fn election(pop_size: usize) -> (crate::popgen::Population, Ballots) {
        let schema = small_schema();
        let pop = generate_population(&schema, 2, pop_size, 3).unwrap();
        let net = init_vote_network(&schema, 0.0, Activation::Identity, 5).unwrap();
        let ballots = cast_votes(&pop, &net, 0.5, NoiseWidth::Absolute(0.0), 7).unwrap();
        (pop, ballots)
    }

    #[test]
    fn five_percent_of_half_million_scale() {
        let (pop, ballots) = election(10_000);
        let poll = draw_poll(&pop, &ballots, 0.05, 1).unwrap();
        assert_eq!(poll.total_respondents(), 500.0);
    }

    #[test]
    fn rate_floor_behavior() {
        let (pop, ballots) = election(10);
        let poll = draw_poll(&pop, &ballots, 0.999999, 1).unwrap();
        assert_eq!(poll.total_respondents(), 9.0);
    }

    #[test]
    fn zero_respondents_rejected() {
        let (pop, ballots) = election(10);
        assert!(matches!(
            draw_poll(&pop, &ballots, 0.01, 1),
            Err(Error::ZeroRespondents(_))
        ));
    }

    #[test]
    fn cell_index_round_trip() {
        let dims = vec![3, 4, 2];
        for idx in 0..24 {
            let attrs = PollTable::cell_attrs(&dims, idx);
            assert_eq!(PollTable::cell_index(&dims, &attrs), idx);
        }
    }

    #[test]
    fn pre_noise_cells_reproduce_vote_split() {
        let (pop, ballots) = election(1000);
        let poll = draw_poll(&pop, &ballots, 0.999, 1).unwrap();
        // Near-exhaustive poll: implied share approaches the true share.
        let results = crate::votecast::tally(&ballots, &pop).unwrap();
        let implied = poll.implied_share_a().unwrap();
        assert!((implied - results.global_share_a()).abs() < 0.01);
    }

    #[test]
    fn zero_target_leaves_table_unchanged() {
        let (pop, ballots) = election(1000);
        let poll = draw_poll(&pop, &ballots, 0.1, 1).unwrap();
        let noisy = inject_poll_noise(&poll, 0.0, 2).unwrap();
        assert_eq!(noisy.count_a, poll.count_a);
        assert_eq!(noisy.count_b, poll.count_b);
    }

    #[test]
    fn noise_preserves_non_negativity() {
        let (pop, ballots) = election(1000);
        let poll = draw_poll(&pop, &ballots, 0.1, 1).unwrap();
        for seed in 0..50 {
            let noisy = inject_poll_noise(&poll, 0.2, seed).unwrap();
            assert!(noisy.count_a.iter().all(|&c| c >= 0.0));
            assert!(noisy.count_b.iter().all(|&c| c >= 0.0));
        }
    }

    #[test]
    fn poll_error_is_absolute_difference() {
        let poll = PollTable {
            dims: vec![1],
            count_a: vec![52.0],
            count_b: vec![48.0],
            rate: 0.05,
            target_error: 0.0,
            seed: 0,
        };
        let results = RegionResults {
            regions: vec![crate::votecast::RegionShare {
                region_id: 0,
                votes_a: 50,
                votes_b: 50,
            }],
        };
        let err = poll_error(&poll, &results).unwrap();
        assert!((err - 0.02).abs() < 1e-12);
    }

    #[test]
    fn table_two_magnitude() {
        // implied 0.471 vs actual 0.499 -> error 0.028
        let poll = PollTable {
            dims: vec![1],
            count_a: vec![471.0],
            count_b: vec![529.0],
            rate: 0.05,
            target_error: 0.0,
            seed: 0,
        };
        let results = RegionResults {
            regions: vec![crate::votecast::RegionShare {
                region_id: 0,
                votes_a: 499,
                votes_b: 501,
            }],
        };
        let err = poll_error(&poll, &results).unwrap();
        assert!((err - 0.028).abs() < 1e-12);
    }

    #[test]
    fn empty_poll_rejected() {
        let poll = PollTable {
            dims: vec![1],
            count_a: vec![0.0],
            count_b: vec![0.0],
            rate: 0.05,
            target_error: 0.0,
            seed: 0,
        };
        assert!(matches!(poll.implied_share_a(), Err(Error::EmptyPoll)));
    }
}

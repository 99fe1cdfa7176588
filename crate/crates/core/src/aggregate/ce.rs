//! Cross-entropy Monte Carlo search for the aggregation minimum.
//!
//! The search keeps a matrix `P[item][position]`. Each iteration draws
//! `samples` rankings: positions are filled in a random order, each from the
//! unused items with probability proportional to that position's column.
//! The best `ceil(elite_frac * samples)` rankings give empirical assignment
//! frequencies `F`, and the matrix moves to `smoothing * F + (1 - smoothing) * P`.
//! The search stops after `stall_limit` iterations without a better ranking
//! (or `max_iter` iterations) and returns the best ranking seen.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{improves, Aggregate, AggregationProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CeConfig {
    pub samples: usize,
    pub elite_frac: f64,
    pub smoothing: f64,
    pub stall_limit: usize,
    pub max_iter: usize,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            elite_frac: 0.1,
            smoothing: 0.7,
            stall_limit: 20,
            max_iter: 1000,
        }
    }
}

impl CeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.samples >= 1
            && self.elite_frac > 0.0
            && self.elite_frac <= 1.0
            && (0.0..=1.0).contains(&self.smoothing)
            && self.stall_limit >= 1
            && self.max_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid cross-entropy settings {self:?}")))
        }
    }

    fn elite(&self) -> usize {
        ((self.elite_frac * self.samples as f64).ceil() as usize).clamp(1, self.samples)
    }
}

fn draw(p: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let size = p.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut used = vec![false; size];
    let mut delta = vec![usize::MAX; n];
    for pos in order {
        let total: f64 = (0..size).filter(|&x| !used[x]).map(|x| p[x][pos]).sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = None;
            for x in (0..size).filter(|&x| !used[x]) {
                let w = p[x][pos];
                if w <= 0.0 {
                    continue;
                }
                chosen = Some(x);
                if r < w {
                    break;
                }
                r -= w;
            }
            chosen.expect("positive mass")
        } else {
            let free: Vec<usize> = (0..size).filter(|&x| !used[x]).collect();
            free[rng.random_range(0..free.len())]
        };
        used[pick] = true;
        delta[pos] = pick;
    }
    delta
}

/// Approximate minimizer of the aggregation objective; deterministic for a
/// given `seed` regardless of the rayon pool size.
pub fn aggregate_ce(problem: &AggregationProblem, seed: u64, config: &CeConfig) -> Result<Aggregate> {
    config.validate()?;
    let size = problem.universe().len();
    let n = problem.output_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![vec![1.0 / size as f64; n]; size];
    let elite = config.elite();

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut stall = 0;
    for _ in 0..config.max_iter {
        let drawn: Vec<Vec<usize>> = (0..config.samples).map(|_| draw(&p, n, &mut rng)).collect();
        let mut scored: Vec<(Vec<usize>, f64)> = drawn
            .into_par_iter()
            .map_init(
                || vec![0u64; size],
                |scratch, d| {
                    let phi = problem.phi_idx(&d, scratch);
                    (d, phi)
                },
            )
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

        let (top, top_phi) = &scored[0];
        if best.as_ref().is_none_or(|(_, b)| improves(*top_phi, *b)) {
            best = Some((top.clone(), *top_phi));
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.stall_limit {
                break;
            }
        }

        let mut freq = vec![vec![0.0; n]; size];
        for (d, _) in &scored[..elite] {
            for (pos, &x) in d.iter().enumerate() {
                freq[x][pos] += 1.0 / elite as f64;
            }
        }
        for x in 0..size {
            for pos in 0..n {
                p[x][pos] = config.smoothing * freq[x][pos] + (1.0 - config.smoothing) * p[x][pos];
            }
        }
    }
    let (delta, phi) = best.expect("at least one iteration");
    Ok(Aggregate {
        delta: problem.names(&delta),
        phi,
    })
}

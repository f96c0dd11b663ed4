use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PricingInputs;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

const CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Monte Carlo value of a European put under risk-neutral geometric
/// Brownian motion. Paths are split into fixed chunks, each with its own
/// ChaCha stream, so the estimate does not depend on `exec`.
pub fn monte_carlo_put(inputs: PricingInputs, paths: usize, seed: u64, exec: Execution) -> Result<McEstimate> {
    inputs.validate()?;
    if paths < 2 {
        return Err(Error::Argument(format!("need at least 2 paths, got {paths}")));
    }
    let drift = (inputs.rate - 0.5 * inputs.vol * inputs.vol) * inputs.maturity;
    let diffusion = inputs.vol * inputs.maturity.sqrt();
    let discount = (-inputs.rate * inputs.maturity).exp();
    let n_chunks = paths.div_ceil(CHUNK);

    let partials = par::map_indexed(exec, n_chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = CHUNK.min(paths - c * CHUNK);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..count {
            let z: f64 = StandardNormal.sample(&mut rng);
            let terminal = inputs.spot * (drift + diffusion * z).exp();
            let payoff = discount * (inputs.strike - terminal).max(0.0);
            sum += payoff;
            sum_sq += payoff * payoff;
        }
        (sum, sum_sq)
    });

    let (sum, sum_sq) = partials.iter().fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = paths as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    Ok(McEstimate {
        price: mean,
        std_error: (var.max(0.0) / n).sqrt(),
        paths,
    })
}

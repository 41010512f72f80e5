//! Block-fading per-RB power gains.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Rayleigh-fading power gains (unit-mean exponential) for `n_rbs` RBs,
/// constant over runs of `coherence_rbs` adjacent RBs and independent
/// between runs.
pub fn block_fading_gains<R: Rng + ?Sized>(
    n_rbs: usize,
    coherence_rbs: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_rbs == 0 || coherence_rbs == 0 {
        return Err(Error::InvalidInput(
            "RB count and coherence must be positive".into(),
        ));
    }
    let mut gains = Vec::with_capacity(n_rbs);
    while gains.len() < n_rbs {
        let g: f64 = Exp1.sample(rng);
        let run = coherence_rbs.min(n_rbs - gains.len());
        gains.extend(std::iter::repeat_n(g, run));
    }
    Ok(gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::sim_rng;

    #[test]
    fn unit_mean() {
        let mut rng = sim_rng(42, 0);
        let g = block_fading_gains(10_000, 1, &mut rng).unwrap();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
        assert!(g.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn coherence_blocks() {
        let mut rng = sim_rng(1, 0);
        let g = block_fading_gains(10, 4, &mut rng).unwrap();
        assert_eq!(g[0], g[3]);
        assert_ne!(g[3], g[4]);
        assert_eq!(g[8], g[9]);
        let flat = block_fading_gains(12, 12, &mut rng).unwrap();
        assert!(flat.iter().all(|&x| x == flat[0]));
        assert!(block_fading_gains(0, 1, &mut rng).is_err());
    }
}

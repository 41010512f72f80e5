use rand::Rng;

use crate::eesm::SinrSpectrum;
use crate::error::Result;
use crate::fading::block_fading_gains;

use super::config::SimConfig;

/// Block-fading channel of one link. Gains are redrawn every
/// `coherence.packets` packets, or never when that is unset.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState {
    gains: Vec<f64>,
    age: u32,
}

impl ChannelState {
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

fn spectrum(gains: &[f64], config: &SimConfig) -> Result<SinrSpectrum> {
    SinrSpectrum::new(gains.to_vec())?.scaled(crate::db_to_lin(config.snr_db()))
}

/// Channel for the next packet, advancing the coherence clock.
pub fn channel_step<R: Rng + ?Sized>(
    state: Option<ChannelState>,
    config: &SimConfig,
    rng: &mut R,
) -> Result<(SinrSpectrum, ChannelState)> {
    let n = config.n_rbs as usize;
    let coh = config.coherence.rbs as usize;
    let next = match state {
        Some(s) if config.coherence.packets.is_none_or(|p| s.age < p) => ChannelState {
            age: s.age + 1,
            ..s
        },
        _ => ChannelState {
            gains: block_fading_gains(n, coh, rng)?,
            age: 1,
        },
    };
    Ok((spectrum(&next.gains, config)?, next))
}

/// Channel seen by a retransmission: an independent draw, unless the
/// channel is frozen, in which case it is the current one.
pub fn retx_channel<R: Rng + ?Sized>(
    state: &ChannelState,
    config: &SimConfig,
    rng: &mut R,
) -> Result<SinrSpectrum> {
    if config.coherence.packets.is_none() {
        return spectrum(&state.gains, config);
    }
    let gains = block_fading_gains(config.n_rbs as usize, config.coherence.rbs as usize, rng)?;
    spectrum(&gains, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::sim_rng;

    #[test]
    fn frozen_channel_never_changes() {
        let mut cfg = SimConfig::default();
        cfg.coherence.packets = None;
        let mut rng = sim_rng(3, 0);
        let (a, mut st) = channel_step(None, &cfg, &mut rng).unwrap();
        for _ in 0..20 {
            let (b, s) = channel_step(Some(st), &cfg, &mut rng).unwrap();
            assert_eq!(a, b);
            assert_eq!(retx_channel(&s, &cfg, &mut rng).unwrap(), a);
            st = s;
        }
    }

    #[test]
    fn coherence_in_packets() {
        let mut cfg = SimConfig::default();
        cfg.coherence.packets = Some(3);
        let mut rng = sim_rng(3, 0);
        let mut st = None;
        let mut seen = Vec::new();
        for _ in 0..6 {
            let (s, next) = channel_step(st, &cfg, &mut rng).unwrap();
            seen.push(s);
            st = Some(next);
        }
        assert_eq!(seen[0], seen[2]);
        assert_ne!(seen[2], seen[3]);
        assert_eq!(seen[3], seen[5]);
    }

    #[test]
    fn seeds() {
        let cfg = SimConfig::default();
        let a = channel_step(None, &cfg, &mut sim_rng(1, 0)).unwrap().0;
        let b = channel_step(None, &cfg, &mut sim_rng(1, 0)).unwrap().0;
        let c = channel_step(None, &cfg, &mut sim_rng(2, 0)).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), cfg.n_rbs as usize);
    }
}

//! Simulator behaviour over seeds and sweeps.

use nr_l2sm::eesm::HarqMethod;
use nr_l2sm::link_adaptation::{tbs_calculate, Allocation};
use nr_l2sm::sim::{run_simulation, run_sweep, McsSelection, SimConfig};
use nr_l2sm::tables::{McsTableSet, TableId};
use proptest::prelude::*;

fn short(snr: f64) -> SimConfig {
    let mut c = SimConfig::default()
        .with_override("mean_snr_db", &snr.to_string())
        .unwrap();
    c.traffic.duration_s = 10.0;
    c
}

#[test]
fn more_retransmissions_never_lose_more() {
    for harq in [HarqMethod::Cc, HarqMethod::Ir] {
        let mut prev = f64::INFINITY;
        for max_retx in 0..=3 {
            let configs: Vec<SimConfig> = (0..20)
                .map(|s| {
                    let mut c = short(3.0);
                    c.harq = harq;
                    c.max_retx = max_retx;
                    c.seed = 500 + s;
                    c
                })
                .collect();
            let mean = run_sweep(&configs)
                .into_iter()
                .map(|m| m.unwrap().app_loss_pct)
                .sum::<f64>()
                / 20.0;
            assert!(
                mean <= prev,
                "{harq:?} max_retx {max_retx}: {mean} > {prev}"
            );
            prev = mean;
        }
    }
}

#[test]
fn adaptive_choices_meet_the_target() {
    let mut c = short(9.0);
    c.mcs.mode = McsSelection::Adaptive;
    c.mcs.target_tbler = 0.1;
    let m = run_simulation(&c).unwrap();
    // the gNB maps CQI back to an MCS no higher than the UE's pick
    for p in &m.trace {
        assert!(p.cqi == Some(0) || p.first_tbler <= 0.1, "{p:?}");
    }
    assert!(m.trace.iter().all(|p| p.cqi.is_some()));
}

#[test]
fn sweep_keeps_order_and_matches_single_runs() {
    let configs: Vec<SimConfig> = [10.0, 30.0, 50.0, 70.0]
        .iter()
        .map(|d| {
            SimConfig::default()
                .with_override("distance_m", &d.to_string())
                .unwrap()
        })
        .map(|mut c| {
            c.traffic.duration_s = 5.0;
            c
        })
        .collect();
    let swept = run_sweep(&configs);
    assert_eq!(swept.len(), 4);
    for (c, m) in configs.iter().zip(swept) {
        assert_eq!(m.unwrap(), run_simulation(c).unwrap());
    }
}

#[test]
fn bad_lut_path_is_an_error() {
    let mut c = short(5.0);
    c.lut_path = Some("/nonexistent/lut.json".into());
    let e = run_simulation(&c).unwrap_err().to_string();
    assert!(e.contains("/nonexistent/lut.json"), "{e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn packets_are_conserved(seed in 0u64..10_000, snr in -5.0f64..25.0, idx in 0u8..=27, retx in 0u32..=4) {
        let mut c = short(snr);
        c.seed = seed;
        c.mcs.index = idx;
        c.max_retx = retx;
        c.traffic.duration_s = 2.0;
        let m = run_simulation(&c).unwrap();
        prop_assert_eq!(m.packets_sent, m.packets_delivered + m.packets_lost);
        prop_assert_eq!(m.attempts, m.trace.iter().map(|p| u64::from(p.attempts)).sum::<u64>());
        prop_assert!(m.trace.iter().all(|p| p.attempts <= retx + 1));
        prop_assert!(m.app_loss_pct <= m.phy_loss_pct + 1e-12);
        prop_assert_eq!(&m, &run_simulation(&c).unwrap());
    }

    #[test]
    fn tbs_grows_with_resources(rbs in 1u32..=275, sym in 2u32..=14, idx in 0u8..=28) {
        let e = McsTableSet::standard().mcs_lookup(TableId::Table1, idx).unwrap();
        let t = tbs_calculate(Allocation::new(rbs, sym).unwrap(), e).unwrap();
        let more_rbs = tbs_calculate(Allocation::new(rbs + 1, sym).unwrap(), e).unwrap();
        prop_assert!(more_rbs >= t);
        // monotone in Qm·R, not in index: Table1 MCS16 carries slightly more than MCS17
        for other in McsTableSet::standard().table(TableId::Table1) {
            let rate = |m: &nr_l2sm::tables::McsEntry| m.ecr * u64::from(m.modulation_order);
            if rate(other) <= rate(e) {
                prop_assert!(tbs_calculate(Allocation::new(rbs, sym).unwrap(), other).unwrap() <= t);
            }
        }
        // roughly linear in RBs, up to rounding to whole bytes and the 24-bit floor
        let double = tbs_calculate(Allocation::new(2 * rbs, sym).unwrap(), e).unwrap();
        prop_assert!(double + 8 >= 2 * t.max(24) - 24 && double <= 2 * t + 8);
    }
}

//! EESM and error-model properties over random inputs.

use nr_l2sm::db_to_lin;
use nr_l2sm::eesm::{effective_sinr, update_history, HarqHistory, HarqMethod, SinrSpectrum};
use nr_l2sm::error_model::ErrorModel;
use nr_l2sm::link_adaptation::{tbs_calculate, Allocation};
use nr_l2sm::lut::BlerLut;
use nr_l2sm::tables::{McsKey, McsTableSet, TableId};
use proptest::prelude::*;

fn spectrum_db() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..40.0, 2..64)
}

fn model() -> ErrorModel<'static> {
    ErrorModel::new(McsTableSet::standard(), BlerLut::default_synthetic())
}

proptest! {
    #[test]
    fn bounded_and_permutation_invariant(db in spectrum_db(), beta in 0.05f64..500.0, rot in 0usize..64) {
        let s = SinrSpectrum::from_db(&db).unwrap();
        let e = effective_sinr(&s, beta).unwrap();
        prop_assert!(s.min() <= e && e <= s.max());
        let mut v = s.values().to_vec();
        let k = rot % v.len();
        v.rotate_left(k);
        v.reverse();
        let e2 = effective_sinr(&SinrSpectrum::new(v).unwrap(), beta).unwrap();
        prop_assert!((e - e2).abs() <= 1e-12 * e.abs().max(1e-300));
    }

    #[test]
    fn equal_values_give_that_value(x in 0.0f64..1e4, n in 1usize..50, beta in 0.1f64..300.0) {
        let e = effective_sinr(&SinrSpectrum::flat(x, n).unwrap(), beta).unwrap();
        prop_assert!((e - x).abs() <= 1e-12 * x.max(1.0));
    }

    #[test]
    fn raising_every_rb_never_hurts(db in spectrum_db(), idx in 0u8..=28) {
        let m = model();
        let alloc = Allocation::new(db.len() as u32, 12).unwrap();
        let e = m.tables().mcs_lookup(TableId::Table1, idx).unwrap();
        let tbs = tbs_calculate(alloc, e).unwrap();
        let s = SinrSpectrum::from_db(&db).unwrap();
        let up = s.scaled(db_to_lin(1.0)).unwrap();
        let t0 = m.compute_tbler(&s, e.key(), tbs, &HarqHistory::None, alloc.coded_bits(e)).unwrap().tbler;
        let t1 = m.compute_tbler(&up, e.key(), tbs, &HarqHistory::None, alloc.coded_bits(e)).unwrap().tbler;
        prop_assert!(t1 <= t0);
    }

    #[test]
    fn combining_never_hurts_on_repeated_attempts(db in spectrum_db(), idx in 0u8..=28, ir in any::<bool>()) {
        let m = model();
        let alloc = Allocation::new(db.len() as u32, 12).unwrap();
        let key = McsKey::new(TableId::Table1, idx);
        let e = m.tables().get(key).unwrap();
        let tbs = tbs_calculate(alloc, e).unwrap();
        let coded = alloc.coded_bits(e);
        let s = SinrSpectrum::from_db(&db).unwrap();
        let method = if ir { HarqMethod::Ir } else { HarqMethod::Cc };
        let mut h = HarqHistory::new(method, tbs);
        let mut prev = m.compute_tbler(&s, key, tbs, &h, coded).unwrap();
        let plain = m.compute_tbler(&s, key, tbs, &HarqHistory::None, coded).unwrap();
        prop_assert_eq!(prev.tbler, plain.tbler);
        for _ in 0..3 {
            h = m.record_attempt(&h, &s, key, coded).unwrap();
            let next = m.compute_tbler(&s, key, tbs, &h, coded).unwrap();
            prop_assert!(next.tbler <= prev.tbler);
            prev = next;
        }
    }

    #[test]
    fn cc_history_is_per_rb_sum(a in spectrum_db(), seed in 0u64..1000) {
        let n = a.len();
        let b: Vec<f64> = (0..n).map(|i| ((seed + i as u64) % 37) as f64 - 5.0).collect();
        let sa = SinrSpectrum::from_db(&a).unwrap();
        let sb = SinrSpectrum::from_db(&b).unwrap();
        let beta = 5.16;
        let h = update_history(&HarqHistory::new(HarqMethod::Cc, 100), &sa, beta, 1000).unwrap();
        let got = h.effective_sinr(&sb, beta).unwrap();
        let summed: Vec<f64> = sa.values().iter().zip(sb.values()).map(|(x, y)| x + y).collect();
        let want = effective_sinr(&SinrSpectrum::new(summed).unwrap(), beta).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn cc_shape_mismatch_is_rejected() {
    let h = update_history(
        &HarqHistory::new(HarqMethod::Cc, 100),
        &SinrSpectrum::flat(1.0, 4).unwrap(),
        2.0,
        100,
    )
    .unwrap();
    assert!(h
        .effective_sinr(&SinrSpectrum::flat(1.0, 5).unwrap(), 2.0)
        .is_err());
}

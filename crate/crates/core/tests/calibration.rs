//! Calibration beyond the plant-and-recover acceptance check.

use nr_l2sm::calibration::{
    calibrate_beta, calibration_objective, gen_fading_ensemble, BetaSearch, CalibrationEnsemble,
    FadingSpec, MeasuredBler, Realization, SyntheticReference,
};
use nr_l2sm::error_model::sim_rng;
use nr_l2sm::tables::{McsEntry, McsTableSet, TableId};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn mcs(i: u8) -> &'static McsEntry {
    McsTableSet::standard()
        .mcs_lookup(TableId::Table1, i)
        .unwrap()
}

fn grid(reference: &SyntheticReference) -> Vec<f64> {
    let mu = reference
        .model
        .midpoint_db(reference.modulation_order, reference.ecr, reference.cbs);
    (0..5).map(|k| mu + 2.0 * k as f64).collect()
}

#[test]
fn perturbed_ensemble_prefers_the_planted_beta() {
    let m = mcs(13);
    let reference = SyntheticReference::new(m, 1024);
    let clean = gen_fading_ensemble(
        m,
        40,
        &grid(&reference),
        FadingSpec {
            n_rbs: 32,
            coherence_rbs: 2,
            seed: 4,
        },
        MeasuredBler::PlantedBeta(5.16),
        &reference,
    )
    .unwrap();
    let mut rng = sim_rng(9, 0);
    let noisy: Vec<Realization> = clean
        .realizations()
        .iter()
        .map(|r| {
            let z: f64 = StandardNormal.sample(&mut rng);
            Realization {
                measured_bler: (r.measured_bler * (0.3 * z).exp()).clamp(1e-9, 0.999),
                ..r.clone()
            }
        })
        .collect();
    let ens = CalibrationEnsemble::new(clean.mcs, noisy).unwrap();
    let at = calibration_objective(5.16, &ens, &reference).unwrap();
    let far = calibration_objective(51.6, &ens, &reference).unwrap();
    assert!(at < far, "{at} vs {far}");
}

#[test]
fn objective_ignores_realization_order() {
    let m = mcs(20);
    let reference = SyntheticReference::new(m, 1024);
    let ens = gen_fading_ensemble(
        m,
        10,
        &grid(&reference),
        FadingSpec {
            n_rbs: 16,
            coherence_rbs: 1,
            seed: 2,
        },
        MeasuredBler::CapacityMapping,
        &reference,
    )
    .unwrap();
    let mut shuffled = ens.realizations().to_vec();
    let mut rng = sim_rng(5, 0);
    for i in (1..shuffled.len()).rev() {
        shuffled.swap(i, rng.random_range(0..=i));
    }
    let other = CalibrationEnsemble::new(ens.mcs, shuffled).unwrap();
    for beta in [0.5, 5.0, 50.0] {
        let a = calibration_objective(beta, &ens, &reference).unwrap();
        let b = calibration_objective(beta, &other, &reference).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}

/// Same physical channel described at two RB granularities: half the RBs,
/// each twice as wide, so half as many RBs per coherence block.
#[test]
fn beta_does_not_depend_on_rb_granularity() {
    for idx in [4u8, 13, 24] {
        let m = mcs(idx);
        let reference = SyntheticReference::new(m, 1024);
        let fit = |n_rbs, coherence_rbs, seed| {
            let ens = gen_fading_ensemble(
                m,
                100,
                &grid(&reference),
                FadingSpec {
                    n_rbs,
                    coherence_rbs,
                    seed,
                },
                MeasuredBler::CapacityMapping,
                &reference,
            )
            .unwrap();
            calibrate_beta(&ens, &reference, &BetaSearch::default())
                .unwrap()
                .beta_opt
        };
        let fine = fit(48, 4, 21);
        let coarse = fit(24, 2, 22);
        assert!(
            (fine - coarse).abs() <= 0.1 * fine,
            "MCS{idx}: {fine} vs {coarse}"
        );
    }
}

#[test]
fn generation_is_seeded() {
    let m = mcs(13);
    let reference = SyntheticReference::new(m, 1024);
    let gen = |seed| {
        gen_fading_ensemble(
            m,
            5,
            &[3.0, 6.0],
            FadingSpec {
                n_rbs: 16,
                coherence_rbs: 2,
                seed,
            },
            MeasuredBler::CapacityMapping,
            &reference,
        )
        .unwrap()
    };
    assert_eq!(gen(1), gen(1));
    assert_ne!(gen(1), gen(2));
}

#[test]
fn ensemble_file_round_trip() {
    let m = mcs(13);
    let reference = SyntheticReference::new(m, 1024);
    let ens = gen_fading_ensemble(
        m,
        5,
        &grid(&reference),
        FadingSpec {
            n_rbs: 8,
            coherence_rbs: 2,
            seed: 3,
        },
        MeasuredBler::PlantedBeta(5.16),
        &reference,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ens.json");
    ens.save(&p).unwrap();
    let back = CalibrationEnsemble::load(&p).unwrap();
    assert_eq!(back.len(), ens.len());
    let a = calibrate_beta(&ens, &reference, &BetaSearch::default()).unwrap();
    let b = calibrate_beta(&back, &reference, &BetaSearch::default()).unwrap();
    assert!((a.beta_opt - b.beta_opt).abs() < 1e-6 * a.beta_opt);
}

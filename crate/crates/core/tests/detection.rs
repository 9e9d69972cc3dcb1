use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scfde_gas::channel::TapStrategy;
use scfde_gas::experiment::{self, draw_trial, Detector, ExperimentConfig, Point, Scenario};
use scfde_gas::gas::{self, GasConfig, InitStrategy};
use scfde_gas::sc_fde;

#[test]
fn gas_matches_mld_blockwise_at_high_snr() {
    let cfg = GasConfig {
        patience: 15,
        ..GasConfig::default()
    };
    let point = Point {
        n: 3,
        l_ui: 2,
        l_ib: 2,
        elements: 4,
        strategy: TapStrategy::Central,
    };
    let blocks = 10_000;
    let mut agree = 0;
    for trial in 0..blocks {
        let d = draw_trial(&point, 17, trial).unwrap();
        let rx = d.receive(10.0, None).unwrap();
        let mld = sc_fde::mld_exhaustive(&rx, &d.channel).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(trial as u64);
        if gas::detect(&rx, &d.channel, &cfg, &mut rng).unwrap() == mld {
            agree += 1;
        }
    }
    assert!(agree * 1000 >= 999 * blocks, "agreement {agree}/{blocks}");
}

#[test]
fn ideal_gas_sits_between_mld_and_mmse() {
    let mut cfg = ExperimentConfig::defaults(Scenario::RisGain);
    cfg.blocks = 2_000;
    let rows = experiment::run_scenario(&cfg).unwrap();
    for chunk in rows.chunks(3 * cfg.snr_db.len()) {
        for si in 0..cfg.snr_db.len() {
            let get = |d: Detector| {
                chunk
                    .iter()
                    .filter(|r| r.detector == d)
                    .nth(si)
                    .unwrap()
                    .clone()
            };
            let (mmse, mld, gas) = (get(Detector::Mmse), get(Detector::Mld), get(Detector::Gas));
            let sd = |r: &experiment::BerRow| r.std_error();
            let tol = 3.0 * (sd(&mld).powi(2) + sd(&gas).powi(2)).sqrt();
            assert!(mld.ber <= gas.ber + tol, "{mld:?} {gas:?}");
            let tol = 3.0 * (sd(&mmse).powi(2) + sd(&gas).powi(2)).sqrt();
            assert!(gas.ber <= mmse.ber + tol, "{gas:?} {mmse:?}");
        }
    }
}

#[test]
fn longer_channels_steepen_the_ber_curve() {
    let mut cfg = ExperimentConfig::defaults(Scenario::Taps);
    cfg.taps_grid = vec![2, 6];
    cfg.snr_db = vec![-5.0, 5.0];
    cfg.detectors = vec![Detector::Mld];
    cfg.blocks = 3_000;
    let rows = experiment::run_scenario(&cfg).unwrap();
    let slope = |l: usize| {
        let r: Vec<_> = rows.iter().filter(|r| r.l == l).collect();
        r[0].ber.log10() - r[1].ber.max(1e-6).log10()
    };
    assert!(slope(6) > slope(2), "L=2 {} L=6 {}", slope(2), slope(6));
}

#[test]
fn mmse_initialization_never_loses_to_its_start() {
    let point = Point {
        n: 4,
        l_ui: 2,
        l_ib: 2,
        elements: 2,
        strategy: TapStrategy::First,
    };
    let cfg = GasConfig {
        init: InitStrategy::Mmse,
        ..GasConfig::default()
    };
    for trial in 0..300 {
        let d = draw_trial(&point, 3, trial).unwrap();
        let rx = d.receive(-5.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(trial as u64);
        let res = gas::detect_traced(&rx, &d.channel, &cfg, &mut rng).unwrap();
        let mmse = sc_fde::mmse_detect(&rx, &d.channel);
        assert!(res.best_energy <= sc_fde::ml_metric(&rx, &d.channel, &mmse) + 1e-9);
        let energies: Vec<f64> = (0..=res.trace.iterations())
            .map(|i| sc_fde::ml_metric(&rx, &d.channel, &sc_fde::BpskBlock::from_bits(res.trace.best_after(i).to_vec())))
            .collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}

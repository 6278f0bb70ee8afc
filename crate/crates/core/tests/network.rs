//! End-to-end behaviour of the two-relay simulation on a small code.

use pnc::netsim::{simulate, Experiment, SchemeKind, SimConfig, TrialOptions};

fn small_config() -> SimConfig {
    let mut cfg = SimConfig::reference();
    cfg.code.k = 20;
    cfg.snr_db = vec![0.0, 10.0, 20.0, 30.0];
    cfg.trials = 120;
    cfg.seed = 11;
    cfg.pilot_symbols = 20_000;
    cfg
}

/// With every relay handed its true combination, the only failures left
/// are singular coefficient matrices, so throughput equals the ceiling.
#[test]
fn genie_relays_reach_the_ceiling() {
    let cfg = small_config();
    let genie = TrialOptions {
        genie: true,
        ..TrialOptions::default()
    };
    for kind in [SchemeKind::SignalCode, SchemeKind::Qam] {
        let exp = Experiment::new(&cfg, kind).unwrap();
        for p in simulate(&exp, &cfg.snr_db, cfg.trials, &genie).unwrap() {
            assert_eq!(p.successes, p.invertible, "{kind:?} at {} dB", p.snr_db);
            assert_eq!(p.throughput(), p.ceiling());
        }
    }
}

/// Throughput may dip between neighbouring SNRs only within the sum of
/// their 95% half-widths.
#[test]
fn throughput_rises_with_snr_within_confidence() {
    let cfg = small_config();
    for kind in [SchemeKind::SignalCode, SchemeKind::Qam] {
        let exp = Experiment::new(&cfg, kind).unwrap();
        let pts = simulate(&exp, &cfg.snr_db, cfg.trials, &TrialOptions::default()).unwrap();
        for w in pts.windows(2) {
            assert!(
                w[1].throughput() >= w[0].throughput() - (w[0].ci95() + w[1].ci95()),
                "{kind:?}: {} dB {} then {} dB {}",
                w[0].snr_db,
                w[0].throughput(),
                w[1].snr_db,
                w[1].throughput()
            );
        }
        let (first, last) = (&pts[0], &pts[pts.len() - 1]);
        assert!(last.throughput() > first.throughput(), "{kind:?}");
    }
}

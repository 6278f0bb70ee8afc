//! Prints both throughput curves side by side for a reduced trial count.
//!
//! `cargo run --release --example sweep -- [trials] [bias] [max_expansions] [max_snr_db] [min_snr_db]`

use std::time::Instant;

use pnc::netsim::{ceiling, simulate, snr_gap, Experiment, SchemeKind, SimConfig, TrialOptions};

fn main() -> Result<(), pnc::Error> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = SimConfig::reference();
    cfg.trials = args.get(1).map_or(200, |s| s.parse().expect("trials"));
    if let Some(b) = args.get(2) {
        cfg.decoder.bias = b.parse().expect("bias");
    }
    if let Some(m) = args.get(3) {
        cfg.decoder.max_expansions = m.parse().expect("max_expansions");
    }
    if let Some(top) = args.get(4) {
        let top: f64 = top.parse().expect("max_snr_db");
        cfg.snr_db = (0..)
            .map(|i| 2.0 * i as f64)
            .take_while(|s| *s <= top)
            .collect();
    }
    if let Some(bottom) = args.get(5) {
        let bottom: f64 = bottom.parse().expect("min_snr_db");
        cfg.snr_db.retain(|s| *s >= bottom);
    }
    let mut curves = Vec::new();
    for kind in [SchemeKind::SignalCode, SchemeKind::Qam] {
        let t0 = Instant::now();
        let exp = Experiment::new(&cfg, kind)?;
        curves.push(simulate(
            &exp,
            &cfg.snr_db,
            cfg.trials,
            &TrialOptions::default(),
        )?);
        println!(
            "{}: {:.1?}, average power {:.4}",
            kind.name(),
            t0.elapsed(),
            exp.avg_power()
        );
    }
    println!("  snr  signal-code  qam    invertible  budget-limited");
    for (s, q) in curves[0].iter().zip(&curves[1]) {
        println!(
            "{:5.1}  {:.3}        {:.3}  {:.3}       {}",
            s.snr_db,
            s.success_rate(),
            q.success_rate(),
            s.invertible as f64 / s.trials as f64,
            s.budget_limited
        );
    }
    println!(
        "ceiling {:.3}; gap at 90% of ceiling: {:?} dB",
        ceiling(&curves[0]) / curves[0][0].sum_rate,
        snr_gap(&curves[0], &curves[1], 0.9)
    );
    Ok(())
}

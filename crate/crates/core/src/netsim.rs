//! Two transmitters, two relays, one destination.
//!
//! Each relay sees its own Rayleigh-faded superposition of both packets,
//! picks integer coefficients, and decodes one combination over `F_q`. The
//! destination stacks the two coefficient rows into `A` and solves
//! `A·[w₁; w₂] = [û₁; û₂]`. A trial succeeds when both messages come back
//! intact.
//!
//! Per-trial random streams depend only on the master seed and the trial
//! index, so results do not depend on the thread count, and every SNR point
//! and scheme sees the same messages, fades and noise samples.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfwd::{
    decode_combination, map_coeffs_to_field, select_coefficients, ChannelVector, CoeffVector,
    DecodeContext,
};
use crate::channel::{sample_rayleigh, transmit, SimRng};
use crate::error::{Error, Result};
use crate::ffield::{linear_combination, solve_linear, FieldElem};
use crate::gint::is_rational_prime;
use crate::lattice::{LatticeScheme, PartitionScheme};
use crate::sigcode::{DecoderConfig, SignalCode, REFERENCE_TAPS};

/// Number of users and relays.
pub const USERS: usize = 2;

/// Signal-code parameters as they appear in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// Filter taps `f₁…f_m`, as `[re, im]` or, with `polar`, as
    /// `[magnitude, phase]`.
    pub taps: Vec<[f64; 2]>,
    #[serde(default)]
    pub polar: bool,
    pub k: usize,
    /// Optional memory; must equal the tap count when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub p: i64,
}

impl CodeConfig {
    pub fn tap_values(&self) -> Vec<Complex64> {
        self.taps
            .iter()
            .map(|&[a, b]| {
                if self.polar {
                    Complex64::from_polar(a, b)
                } else {
                    Complex64::new(a, b)
                }
            })
            .collect()
    }
}

/// A full experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub code: CodeConfig,
    /// Defaults to [`simulation_decoder`] when omitted.
    #[serde(default = "simulation_decoder")]
    pub decoder: DecoderConfig,
    /// Strictly ascending SNR grid in dB.
    pub snr_db: Vec<f64>,
    /// Trials per SNR point.
    pub trials: usize,
    pub seed: u64,
    /// Complex symbols used to measure the average transmit power.
    #[serde(default = "default_pilot_symbols")]
    pub pilot_symbols: usize,
    #[serde(default = "default_pilot_seed")]
    pub pilot_seed: u64,
}

/// Stack decoder settings used by the simulations: bias credit of one noise
/// variance per symbol and a budget of `10⁵` expansions.
pub fn simulation_decoder() -> DecoderConfig {
    DecoderConfig {
        bias: 1.0,
        max_expansions: 100_000,
        ..DecoderConfig::default()
    }
}

fn default_pilot_symbols() -> usize {
    100_000
}

fn default_pilot_seed() -> u64 {
    0x0009_1107
}

impl SimConfig {
    /// Reference setup: `p = 3`, `k = 100`, the two reference taps, 0–30 dB
    /// in 2 dB steps, 2000 trials.
    pub fn reference() -> Self {
        SimConfig {
            code: CodeConfig {
                taps: REFERENCE_TAPS.iter().map(|&(r, t)| [r, t]).collect(),
                polar: true,
                k: 100,
                m: Some(2),
                p: 3,
            },
            decoder: simulation_decoder(),
            snr_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
            trials: 2000,
            seed: 2024,
            pilot_symbols: default_pilot_symbols(),
            pilot_seed: default_pilot_seed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.code;
        if c.taps.is_empty() {
            return Err(Error::Config("code.taps is empty".into()));
        }
        if c.taps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("code.taps must be finite".into()));
        }
        if let Some(m) = c.m {
            if m != c.taps.len() {
                return Err(Error::Config(format!(
                    "code.m = {m} but {} taps were given",
                    c.taps.len()
                )));
            }
        }
        if c.k == 0 {
            return Err(Error::Config("code.k must be positive".into()));
        }
        if c.p <= 0 || !is_rational_prime(c.p as u128) || c.p % 4 != 3 {
            return Err(Error::Config(format!(
                "code.p = {} must be a prime congruent to 3 mod 4",
                c.p
            )));
        }
        self.decoder.validate()?;
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db entries must be finite".into()));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("snr_db must be strictly ascending".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.pilot_symbols == 0 {
            return Err(Error::Config("pilot_symbols must be positive".into()));
        }
        Ok(())
    }
}

/// Which lattice scheme the users run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    SignalCode,
    Qam,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::SignalCode => "signal-code",
            SchemeKind::Qam => "qam",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signal-code" => Ok(SchemeKind::SignalCode),
            "qam" => Ok(SchemeKind::Qam),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// A scheme ready to simulate, with its measured average power.
pub struct Experiment {
    kind: SchemeKind,
    scheme: Box<dyn LatticeScheme>,
    avg_power: f64,
    seed: u64,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment")
            .field("kind", &self.kind)
            .field("block_len", &self.scheme.block_len())
            .field("avg_power", &self.avg_power)
            .finish()
    }
}

impl Experiment {
    pub fn new(config: &SimConfig, kind: SchemeKind) -> Result<Self> {
        config.validate()?;
        let c = &config.code;
        let scheme: Box<dyn LatticeScheme> = match kind {
            SchemeKind::SignalCode => {
                Box::new(SignalCode::new(c.tap_values(), c.k, c.p)?.with_decoder(config.decoder)?)
            }
            SchemeKind::Qam => Box::new(PartitionScheme::qam(c.k, c.p)?),
        };
        let avg_power = measure_power(scheme.as_ref(), config.pilot_symbols, config.pilot_seed)?;
        Ok(Experiment {
            kind,
            scheme,
            avg_power,
            seed: config.seed,
        })
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn scheme(&self) -> &dyn LatticeScheme {
        self.scheme.as_ref()
    }

    /// Average per-dimension power of unscaled codewords.
    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    /// Transmit amplitude scaling that puts the average power at `snr`.
    pub fn scale(&self, snr: f64) -> f64 {
        (snr / self.avg_power).sqrt()
    }

    /// Information bits per complex dimension carried by a fully successful
    /// trial: `2·k·log₂q / n`.
    pub fn sum_rate(&self) -> f64 {
        let s = self.scheme();
        USERS as f64 * s.message_len() as f64 * (s.field().q() as f64).log2() / s.block_len() as f64
    }
}

/// Mean `(1/n)‖x‖²` over random codewords totalling at least `symbols`
/// complex dimensions.
pub fn measure_power(scheme: &dyn LatticeScheme, symbols: usize, seed: u64) -> Result<f64> {
    let n = scheme.block_len();
    let packets = symbols.div_ceil(n).max(1);
    let mut rng = SimRng::new(seed);
    let spec = *scheme.field();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let mut total = 0.0;
    for _ in 0..packets {
        let w = spec.random_vec(scheme.message_len(), &mut rng);
        let x = scheme.encode(&w, &zero)?;
        total += x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(total / (packets * n) as f64)
}

/// Test hooks for a trial.
#[derive(Clone, Debug, Default)]
pub struct TrialOptions {
    /// Skip the receiver noise.
    pub noiseless: bool,
    /// Replace each relay's decoder output with the true combination.
    pub genie: bool,
    /// Fixed channel vectors for the two relays instead of Rayleigh draws.
    pub channels: Option<[Vec<Complex64>; USERS]>,
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub h: [Vec<Complex64>; USERS],
    pub a: [CoeffVector; USERS],
    /// `σ(a) = 0`: the relay has nothing useful to decode.
    pub selection_failure: [bool; USERS],
    /// Relay `r` recovered its combination exactly.
    pub relay_ok: [bool; USERS],
    pub budget_limited: [bool; USERS],
    /// The field matrix `[σ(a₁); σ(a₂)]` is invertible.
    pub invertible: bool,
    pub recovered: bool,
}

/// Runs trial number `trial` at `snr_db`.
pub fn run_trial(exp: &Experiment, snr_db: f64, trial: u64) -> Result<TrialRecord> {
    run_trial_with(exp, snr_db, trial, &TrialOptions::default())
}

pub fn run_trial_with(
    exp: &Experiment,
    snr_db: f64,
    trial: u64,
    opts: &TrialOptions,
) -> Result<TrialRecord> {
    let scheme = exp.scheme();
    let spec = *scheme.field();
    let (k, n) = (scheme.message_len(), scheme.block_len());
    let snr = 10f64.powf(snr_db / 10.0);
    let scale = exp.scale(snr);
    // The per-packet check uses the peak bound of the shaped constellation,
    // since average-power normalization admits packets above the mean.
    let power_limit = scale * scale * scheme.peak_power();
    let mut rng = SimRng::stream(exp.seed, trial);

    let ws: Vec<Vec<FieldElem>> = (0..USERS).map(|_| spec.random_vec(k, &mut rng)).collect();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let xs = ws
        .iter()
        .map(|w| {
            let x = scheme.encode(w, &zero)?;
            Ok(x.into_iter().map(|z| z * scale).collect())
        })
        .collect::<Result<Vec<Vec<Complex64>>>>()?;

    // Fades are drawn before any noise so that both schemes see the same
    // channels regardless of block length.
    let hs: Vec<Vec<Complex64>> = match &opts.channels {
        Some(chs) => chs.to_vec(),
        None => (0..USERS)
            .map(|_| sample_rayleigh(USERS, &mut rng))
            .collect(),
    };
    let mut coeffs = Vec::with_capacity(USERS);
    let mut selection_failure = [false; USERS];
    let mut relay_ok = [false; USERS];
    let mut budget_limited = [false; USERS];
    let mut estimates: Vec<Vec<FieldElem>> = Vec::with_capacity(USERS);
    for r in 0..USERS {
        let h = &hs[r];
        let noise = if opts.noiseless { None } else { Some(&mut rng) };
        let y = transmit(&xs, h, power_limit, noise)?;
        let ch = ChannelVector::new(h.clone(), snr)?;
        let a = select_coefficients(&ch)?;
        let sa = map_coeffs_to_field(&a, &spec);
        let truth = linear_combination(&sa, &ws)?;
        let estimate = if sa.iter().all(FieldElem::is_zero) {
            selection_failure[r] = true;
            vec![spec.zero(); k]
        } else if opts.genie {
            truth.clone()
        } else {
            let ctx = DecodeContext {
                scale,
                dithers: None,
            };
            let est = decode_combination(&y, &ch, &a, scheme, &ctx)?;
            budget_limited[r] = est.budget_limited;
            est.u
        };
        relay_ok[r] = !selection_failure[r] && estimate == truth;
        coeffs.push(a);
        estimates.push(estimate);
    }

    let matrix: Vec<Vec<FieldElem>> = coeffs
        .iter()
        .map(|a| map_coeffs_to_field(a, &spec))
        .collect();
    let (invertible, recovered) = match solve_linear(&matrix, &estimates) {
        Ok(sol) => (true, sol == ws),
        Err(Error::Singular) => (false, false),
        Err(e) => return Err(e),
    };
    let [h0, h1]: [Vec<Complex64>; USERS] = hs.try_into().expect("two relays");
    let [a0, a1]: [CoeffVector; USERS] = coeffs.try_into().expect("two relays");
    Ok(TrialRecord {
        snr_db,
        h: [h0, h1],
        a: [a0, a1],
        selection_failure,
        relay_ok,
        budget_limited,
        invertible,
        recovered,
    })
}

/// Aggregate over the trials at one SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub scheme: SchemeKind,
    pub trials: usize,
    pub successes: usize,
    pub invertible: usize,
    pub relay_failures: usize,
    pub budget_limited: usize,
    /// Information bits per complex dimension of a successful trial.
    pub sum_rate: f64,
}

impl CurvePoint {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// Success-weighted sum rate, bits per complex dimension.
    pub fn throughput(&self) -> f64 {
        self.success_rate() * self.sum_rate
    }

    /// Half-width of the normal-approximation 95% interval on
    /// [`CurvePoint::throughput`].
    pub fn ci95(&self) -> f64 {
        let p = self.success_rate();
        1.96 * (p * (1.0 - p) / self.trials as f64).sqrt() * self.sum_rate
    }

    /// Throughput if every trial with invertible `A` succeeded.
    pub fn ceiling(&self) -> f64 {
        self.invertible as f64 / self.trials as f64 * self.sum_rate
    }
}

/// Runs `trials` trials at every SNR of the grid.
pub fn simulate(
    exp: &Experiment,
    snr_db: &[f64],
    trials: usize,
    opts: &TrialOptions,
) -> Result<Vec<CurvePoint>> {
    snr_db
        .iter()
        .map(|&snr| {
            let records = (0..trials as u64)
                .into_par_iter()
                .map(|t| run_trial_with(exp, snr, t, opts))
                .collect::<Result<Vec<_>>>()?;
            Ok(CurvePoint {
                snr_db: snr,
                scheme: exp.kind(),
                trials,
                successes: records.iter().filter(|r| r.recovered).count(),
                invertible: records.iter().filter(|r| r.invertible).count(),
                relay_failures: records
                    .iter()
                    .map(|r| r.relay_ok.iter().filter(|ok| !**ok).count())
                    .sum(),
                budget_limited: records
                    .iter()
                    .map(|r| r.budget_limited.iter().filter(|b| **b).count())
                    .sum(),
                sum_rate: exp.sum_rate(),
            })
        })
        .collect()
}

/// Throughput curve of the signal-code scheme.
pub fn throughput_curve(config: &SimConfig) -> Result<Vec<CurvePoint>> {
    let exp = Experiment::new(config, SchemeKind::SignalCode)?;
    simulate(
        &exp,
        &config.snr_db,
        config.trials,
        &TrialOptions::default(),
    )
}

/// Throughput curve of uncoded `p²`-QAM over `ℤ[i]ⁿ/pℤ[i]ⁿ`.
pub fn baseline_qam(config: &SimConfig) -> Result<Vec<CurvePoint>> {
    let exp = Experiment::new(config, SchemeKind::Qam)?;
    simulate(
        &exp,
        &config.snr_db,
        config.trials,
        &TrialOptions::default(),
    )
}

pub const CSV_HEADER: &str = "snr_db,scheme,trials,success_rate,throughput_bits_per_dim,ci95";

/// CSV rendering with fixed precision, one row per point.
pub fn to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        writeln!(
            out,
            "{:.2},{},{},{:.6},{:.6},{:.6}",
            p.snr_db,
            p.scheme.name(),
            p.trials,
            p.success_rate(),
            p.throughput(),
            p.ci95()
        )
        .expect("writing to a String");
    }
    out
}

/// First SNR at which the curve reaches `level`, interpolating linearly in
/// dB between grid points. `None` if it never does.
pub fn crossing_snr(points: &[CurvePoint], level: f64) -> Option<f64> {
    let first = points.first()?;
    if first.throughput() >= level {
        return Some(first.snr_db);
    }
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (ta, tb) = (a.throughput(), b.throughput());
        (ta < level && tb >= level)
            .then(|| a.snr_db + (level - ta) / (tb - ta) * (b.snr_db - a.snr_db))
    })
}

/// Algebraic ceiling of a curve: the invertible fraction at its top SNR
/// point, times the sum rate.
pub fn ceiling(points: &[CurvePoint]) -> f64 {
    points.last().map_or(0.0, CurvePoint::ceiling)
}

/// Horizontal gap in dB between `baseline` and `coded` at `fraction` of the
/// coded curve's ceiling, measured on the success rate so that the two
/// schemes' different block lengths do not shift the comparison.
pub fn snr_gap(coded: &[CurvePoint], baseline: &[CurvePoint], fraction: f64) -> Option<f64> {
    let norm = |pts: &[CurvePoint]| -> Vec<CurvePoint> {
        pts.iter()
            .map(|p| CurvePoint {
                sum_rate: 1.0,
                ..p.clone()
            })
            .collect()
    };
    let (c, b) = (norm(coded), norm(baseline));
    let level = fraction * ceiling(&c);
    Some(crossing_snr(&b, level)? - crossing_snr(&c, level)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gint::GaussInt;
    use crate::lattice::gc;

    fn small_config(k: usize) -> SimConfig {
        let mut c = SimConfig::reference();
        c.code.k = k;
        c.trials = 20;
        c.snr_db = vec![10.0, 20.0];
        c.pilot_symbols = 5_000;
        c
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::reference().validate().is_ok());
        let mut c = SimConfig::reference();
        c.trials = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = SimConfig::reference();
        c.snr_db = vec![2.0, 0.0];
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference();
        c.snr_db.clear();
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference();
        c.code.p = 5;
        assert!(c.validate().is_err());
        let mut c = SimConfig::reference();
        c.code.m = Some(3);
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = SimConfig::reference();
        let s = serde_json::to_string(&c).unwrap();
        let back: SimConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn pilot_power_matches_constellations() {
        let cfg = small_config(100);
        let qam = Experiment::new(&cfg, SchemeKind::Qam).unwrap();
        // Uniform 9-QAM on {-1,0,1}²: 2·(2/3).
        assert!(
            (qam.avg_power() - 4.0 / 3.0).abs() < 0.05,
            "{}",
            qam.avg_power()
        );
        let sc = Experiment::new(&cfg, SchemeKind::SignalCode).unwrap();
        // Roughly uniform on the box [-3/2, 3/2)²: 2·(9/12).
        assert!((sc.avg_power() - 1.5).abs() < 0.1, "{}", sc.avg_power());
        assert!((sc.sum_rate() - 2.0 * 100.0 * 9f64.log2() / 102.0).abs() < 1e-12);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small_config(10);
        let exp = Experiment::new(&cfg, SchemeKind::SignalCode).unwrap();
        let a = run_trial(&exp, 12.0, 3).unwrap();
        let b = run_trial(&exp, 12.0, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.h, run_trial(&exp, 12.0, 4).unwrap().h);
        // Same fades at every SNR.
        assert_eq!(a.h, run_trial(&exp, 24.0, 3).unwrap().h);
    }

    #[test]
    fn record_invariant_holds() {
        let cfg = small_config(10);
        for kind in [SchemeKind::SignalCode, SchemeKind::Qam] {
            let exp = Experiment::new(&cfg, kind).unwrap();
            for t in 0..40 {
                let r = run_trial(&exp, 16.0, t).unwrap();
                if r.recovered {
                    assert!(r.relay_ok.iter().all(|&ok| ok) && r.invertible);
                }
            }
        }
    }

    #[test]
    fn noiseless_integer_channels() {
        let cfg = small_config(10);
        let exp = Experiment::new(&cfg, SchemeKind::SignalCode).unwrap();
        let chans = [
            [GaussInt::new(1, 0), GaussInt::new(1, 1)],
            [GaussInt::new(1, 0), GaussInt::new(2, 0)],
        ];
        let opts = TrialOptions {
            noiseless: true,
            genie: false,
            channels: Some(chans.map(|h| h.iter().map(|&g| gc(g)).collect())),
        };
        for t in 0..20 {
            let r = run_trial_with(&exp, 60.0, t, &opts).unwrap();
            assert!(r.invertible);
            assert!(r.recovered, "{r:?}");
        }
    }

    #[test]
    fn divisible_coefficients_make_a_singular() {
        // Both relays see h = (3, 3): the best a is (1, 1) and the rows agree,
        // so A is singular.
        let cfg = small_config(10);
        let exp = Experiment::new(&cfg, SchemeKind::Qam).unwrap();
        let h = vec![gc(GaussInt::new(3, 0)), gc(GaussInt::new(3, 0))];
        let opts = TrialOptions {
            noiseless: true,
            genie: true,
            channels: Some([h.clone(), h]),
        };
        let r = run_trial_with(&exp, 30.0, 0, &opts).unwrap();
        assert!(!r.invertible && !r.recovered);
    }

    #[test]
    fn csv_shape_and_gap() {
        let mk = |snr: f64, succ: usize, scheme| CurvePoint {
            snr_db: snr,
            scheme,
            trials: 100,
            successes: succ,
            invertible: 90,
            relay_failures: 0,
            budget_limited: 0,
            sum_rate: 2.0,
        };
        let coded = vec![
            mk(0.0, 0, SchemeKind::SignalCode),
            mk(2.0, 40, SchemeKind::SignalCode),
            mk(4.0, 90, SchemeKind::SignalCode),
        ];
        let base = vec![
            mk(0.0, 0, SchemeKind::Qam),
            mk(2.0, 0, SchemeKind::Qam),
            mk(4.0, 40, SchemeKind::Qam),
            mk(6.0, 90, SchemeKind::Qam),
        ];
        let csv = to_csv(&coded);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[2], "2.00,signal-code,100,0.400000,0.800000,0.192040");
        // 90% of the 0.9 ceiling is 0.81 success: coded at 2 + 0.41/0.5·2.
        let c = crossing_snr(
            &coded
                .iter()
                .map(|p| CurvePoint {
                    sum_rate: 1.0,
                    ..p.clone()
                })
                .collect::<Vec<_>>(),
            0.81,
        )
        .unwrap();
        assert!((c - 3.64).abs() < 1e-12);
        assert!((snr_gap(&coded, &base, 0.9).unwrap() - 2.0).abs() < 1e-12);
    }
}

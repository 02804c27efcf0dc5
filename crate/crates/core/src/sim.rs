//! Monte Carlo BER engine: Rayleigh channel and AWGN generation, the
//! transmit chain, and per-SNR-point aggregation.
//!
//! Every symbol slot derives its own random stream from
//! `(seed, snr index, trial index)`, so results are bit-identical no matter
//! how trials are scheduled across threads, and schemes simulated with the
//! same seed see the same channels, symbols, and noise. Aggregation only
//! sums integers, which keeps the reduction order irrelevant.
//!
//! The SNR convention fixes the noise variance at 1 and sweeps the transmit
//! power: `P = 10^(SNR_dB / 10)`. Channels are drawn fresh for every symbol
//! slot with i.i.d. circularly-symmetric unit-variance complex Gaussian
//! entries.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::metric::{min_scaling, ChannelMatrix, ExtendedTransmitVector, ScalingMatrix};
use crate::precoder::{mf_precode, random_precode, zf_precode, PrecoderKind};
use crate::refine::{exhaustive_oracle, refine, ORACLE_MAX_ANTENNAS};

/// Consecutive degenerate channels tolerated per slot before giving up.
const MAX_CHANNEL_REDRAWS: u64 = 64;

/// Slots per point audited against the exhaustive search when enabled.
const ORACLE_AUDIT_TRIALS: u64 = 100;

/// Slack allowed in the oracle audit comparison.
const ORACLE_AUDIT_TOLERANCE: f64 = 1e-9;

/// Cap on the error-target extension: a point never runs more than this
/// many times `min_trials` slots, so zero-error points still terminate.
const TRIAL_GROWTH_CAP: u64 = 64;

/// Full description of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Transmit antennas.
    pub nt: usize,
    /// Single-antenna users.
    pub k: usize,
    /// PSK order.
    pub mod_order: usize,
    /// Swept transmit SNR grid in dB.
    pub snr_db_list: Vec<f64>,
    /// Initial precoder.
    pub precoder: PrecoderKind,
    /// Apply the sign-flip refinement to the precoder output.
    pub refine_enabled: bool,
    /// Refinement passes per slot.
    pub passes: usize,
    /// Symbol slots simulated per SNR point before the error target is
    /// consulted.
    pub min_trials: u64,
    /// Extend a point (in `min_trials` batches) until this many bit errors
    /// accumulate; 0 disables the extension. Extension stops after
    /// `64 * min_trials` total slots so zero-error points terminate.
    pub target_bit_errors: u64,
    /// Master seed; combined with SNR and trial indices per slot.
    pub seed: u64,
    /// Audit refined slots against the exhaustive search (small `nt` only).
    pub oracle_check: bool,
}

impl SimulationConfig {
    /// Checks the configuration invariants.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.nt {
            return Err(Error::InvalidConfig(format!(
                "user count must satisfy 1 <= k <= nt, got k={}, nt={}",
                self.k, self.nt
            )));
        }
        if self.mod_order < 4 || !self.mod_order.is_power_of_two() {
            return Err(Error::UnsupportedModulation(self.mod_order));
        }
        if self.snr_db_list.is_empty() {
            return Err(Error::InvalidConfig("SNR list is empty".into()));
        }
        if self.min_trials == 0 {
            return Err(Error::InvalidConfig("min_trials must be at least 1".into()));
        }
        if self.passes == 0 {
            return Err(Error::InvalidConfig("passes must be at least 1".into()));
        }
        if self.refine_enabled && !self.precoder.is_quantized() {
            return Err(Error::InvalidConfig(
                "the unquantized ZF reference cannot be refined: its output is not in the 1-bit alphabet"
                    .into(),
            ));
        }
        if self.oracle_check && self.nt > ORACLE_MAX_ANTENNAS {
            return Err(Error::InvalidConfig(format!(
                "oracle auditing supports at most {ORACLE_MAX_ANTENNAS} antennas, got {}",
                self.nt
            )));
        }
        Ok(())
    }

    /// Bits carried per symbol slot.
    fn bits_per_slot(&self) -> u64 {
        self.k as u64 * self.mod_order.trailing_zeros() as u64
    }
}

/// Aggregated result of one `(SNR point, scheme)` Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    /// Transmit SNR of this point in dB.
    pub snr_db: f64,
    /// Initial precoder that produced the transmit vectors.
    pub precoder: PrecoderKind,
    /// Whether the sign-flip refinement ran.
    pub refined: bool,
    /// Symbol slots simulated.
    pub trials: u64,
    /// Gray-mapped bit errors accumulated.
    pub bit_errors: u64,
    /// `bit_errors / (trials * k * log2(M))`.
    pub ber: f64,
    /// Degenerate channels that were redrawn (not counted as trials).
    pub degenerate_redraws: u64,
}

/// Draws a `users x antennas` Rayleigh channel: i.i.d. entries with
/// unit-variance circularly-symmetric complex Gaussian distribution (each
/// component has variance 1/2).
pub fn draw_channel<R: Rng + ?Sized>(users: usize, antennas: usize, rng: &mut R) -> ChannelMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let entries = (0..users * antennas)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    ChannelMatrix::new(users, antennas, entries).expect("dimensions are caller-validated")
}

/// Transmits `x` over `h` at per-antenna power budget `power` and adds
/// receiver noise of variance `noise_variance` (each component `sigma^2/2`):
/// `y_k = sqrt(P) h_k x + n_k`.
pub fn transmit_receive<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    x: &[Complex64],
    power: f64,
    noise_variance: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    debug_assert!(power > 0.0 && noise_variance >= 0.0);
    let gain = power.sqrt();
    let sigma = (noise_variance * 0.5).sqrt();
    (0..h.users())
        .map(|k| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h.user_receive(k, x) * gain + Complex64::new(re * sigma, im * sigma)
        })
        .collect()
}

/// Runs the Monte Carlo for one entry of `cfg.snr_db_list`.
///
/// Simulates `min_trials` slots, then keeps extending in `min_trials`
/// batches while the configured bit-error target is unmet, up to the growth
/// cap. The returned record is bit-identical for a given `(config, seed)`
/// regardless of thread count or execution order.
pub fn run_point(cfg: &SimulationConfig, snr_index: usize) -> Result<BerRecord> {
    cfg.validate()?;
    let snr_db = *cfg
        .snr_db_list
        .get(snr_index)
        .ok_or_else(|| Error::InvalidConfig(format!("SNR index {snr_index} out of range")))?;
    let constellation = Constellation::new(cfg.mod_order)?;
    let power = 10.0_f64.powf(snr_db / 10.0);

    let mut trials = 0u64;
    let mut bit_errors = 0u64;
    let mut degenerate_redraws = 0u64;
    let max_trials = cfg.min_trials.saturating_mul(TRIAL_GROWTH_CAP);
    loop {
        let batch = (trials..trials + cfg.min_trials)
            .into_par_iter()
            .map(|trial| simulate_slot(cfg, &constellation, snr_index, trial, power))
            .try_reduce(SlotOutcome::default, |a, b| {
                Ok(SlotOutcome {
                    bit_errors: a.bit_errors + b.bit_errors,
                    redraws: a.redraws + b.redraws,
                })
            })?;
        trials += cfg.min_trials;
        bit_errors += batch.bit_errors;
        degenerate_redraws += batch.redraws;
        let target_met = cfg.target_bit_errors == 0 || bit_errors >= cfg.target_bit_errors;
        if target_met || trials >= max_trials {
            break;
        }
    }

    let total_bits = trials * cfg.bits_per_slot();
    Ok(BerRecord {
        snr_db,
        precoder: cfg.precoder,
        refined: cfg.refine_enabled,
        trials,
        bit_errors,
        ber: bit_errors as f64 / total_bits as f64,
        degenerate_redraws,
    })
}

#[derive(Debug, Default, Clone, Copy)]
struct SlotOutcome {
    bit_errors: u64,
    redraws: u64,
}

/// One symbol slot: draw channel and symbols, precode, optionally refine,
/// transmit with noise, demodulate, count Gray-mapped bit errors.
fn simulate_slot(
    cfg: &SimulationConfig,
    constellation: &Constellation,
    snr_index: usize,
    trial: u64,
    power: f64,
) -> Result<SlotOutcome> {
    let mut rng = slot_rng(cfg.seed, snr_index as u64, trial);
    let mut redraws = 0u64;
    let (channel, sent, x0) = loop {
        let channel = draw_channel(cfg.k, cfg.nt, &mut rng);
        let sent: Vec<usize> = (0..cfg.k)
            .map(|_| rng.random_range(0..cfg.mod_order))
            .collect();
        let symbols: Vec<Complex64> = sent.iter().map(|&i| constellation.points()[i]).collect();
        let attempt = match cfg.precoder {
            PrecoderKind::ZfQuantized => zf_precode(&channel, &symbols, true),
            PrecoderKind::MfQuantized => mf_precode(&channel, &symbols),
            PrecoderKind::RandomSigns => Ok(random_precode(cfg.nt, &mut rng)),
            PrecoderKind::ZfUnquantized => zf_precode(&channel, &symbols, false),
        };
        match attempt {
            Ok(x0) => break (channel, sent, x0),
            Err(Error::DegenerateChannel { .. }) if redraws < MAX_CHANNEL_REDRAWS => {
                redraws += 1;
            }
            Err(e) => return Err(e),
        }
    };

    let mut transmit = x0;
    let audit =
        cfg.oracle_check && trial < ORACLE_AUDIT_TRIALS && cfg.precoder.is_quantized();
    if cfg.refine_enabled || audit {
        let bases = sent
            .iter()
            .map(|&i| constellation.decompose(i))
            .collect::<Result<Vec<_>>>()?;
        let scaling = ScalingMatrix::build(&channel, &bases)?;
        let extended = ExtendedTransmitVector::from_complex(&transmit);
        let achieved = if cfg.refine_enabled {
            let report = refine(&scaling, &extended, cfg.passes)?;
            let achieved = report.final_min;
            transmit = report.x_out.to_complex();
            achieved
        } else {
            min_scaling(&scaling.scaling_vector(&extended)?)?
        };
        if audit {
            let best = exhaustive_oracle(&scaling)?;
            let optimum = min_scaling(&scaling.scaling_vector(&best)?)?;
            if optimum + ORACLE_AUDIT_TOLERANCE < achieved {
                return Err(Error::OracleAuditFailed {
                    refined: achieved,
                    oracle: optimum,
                });
            }
        }
    }

    let received = transmit_receive(&channel, &transmit, power, 1.0, &mut rng);
    let mut bit_errors = 0u64;
    for (k, y) in received.iter().enumerate() {
        let decided = constellation.demodulate(*y);
        bit_errors += u64::from(constellation.bit_errors(sent[k], decided));
    }
    Ok(SlotOutcome {
        bit_errors,
        redraws,
    })
}

/// Per-slot random stream keyed by `(seed, snr index, trial index)`.
fn slot_rng(seed: u64, snr_index: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(mix64(mix64(seed) ^ snr_index) ^ trial))
}

/// SplitMix64 finalizer; consecutive keys land far apart.
fn mix64(value: u64) -> u64 {
    let mut z = value.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimulationConfig {
        SimulationConfig {
            nt: 4,
            k: 2,
            mod_order: 4,
            snr_db_list: vec![0.0, 10.0],
            precoder: PrecoderKind::ZfQuantized,
            refine_enabled: false,
            passes: 1,
            min_trials: 500,
            target_bit_errors: 0,
            seed: 7,
            oracle_check: false,
        }
    }

    #[test]
    fn channel_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let h = draw_channel(100, 1000, &mut rng);
        let n = 100_000.0;
        let mut power = 0.0;
        let mut re_var = 0.0;
        let mut mean = Complex64::new(0.0, 0.0);
        for k in 0..100 {
            for v in h.row(k) {
                power += v.norm_sqr();
                re_var += v.re * v.re;
                mean += v;
            }
        }
        assert!((power / n - 1.0).abs() < 0.02, "complex variance {}", power / n);
        assert!((re_var / n - 0.5).abs() < 0.02, "real variance {}", re_var / n);
        assert!((mean / n).norm() < 0.01);
    }

    #[test]
    fn channel_draw_is_deterministic() {
        let a = draw_channel(3, 5, &mut ChaCha8Rng::seed_from_u64(9));
        let b = draw_channel(3, 5, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_transmit_is_exact() {
        let h = ChannelMatrix::new(1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
        let x = [Complex64::new(1.0, 1.0) * std::f64::consts::FRAC_1_SQRT_2];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = transmit_receive(&h, &x, 4.0, 0.0, &mut rng);
        let expected = Complex64::new(1.0, 1.0) * 2.0_f64.sqrt();
        assert_eq!(y[0], expected);
    }

    #[test]
    fn pure_noise_variance_matches_sigma() {
        let h = ChannelMatrix::new(1, 1, vec![Complex64::new(1.0, 0.0)]).unwrap();
        let x = [Complex64::new(0.0, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sigma2 = 2.3;
        let mut acc = 0.0;
        let n = 50_000;
        for _ in 0..n {
            let y = transmit_receive(&h, &x, 1.0, sigma2, &mut rng);
            acc += y[0].norm_sqr();
        }
        let measured = acc / n as f64;
        assert!(
            (measured - sigma2).abs() < 0.05,
            "noise variance {measured} vs {sigma2}"
        );
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let mut cfg = base_config();
        cfg.k = 5;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = base_config();
        cfg.mod_order = 2;
        assert!(matches!(
            cfg.validate(),
            Err(Error::UnsupportedModulation(2))
        ));

        let mut cfg = base_config();
        cfg.snr_db_list.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = base_config();
        cfg.min_trials = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = base_config();
        cfg.precoder = PrecoderKind::ZfUnquantized;
        cfg.refine_enabled = true;
        assert!(cfg.validate().is_err());

        let mut cfg = base_config();
        cfg.nt = 16;
        cfg.oracle_check = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unquantized_zf_is_error_free_without_noise() {
        let mut cfg = base_config();
        cfg.precoder = PrecoderKind::ZfUnquantized;
        cfg.snr_db_list = vec![300.0];
        let record = run_point(&cfg, 0).unwrap();
        assert_eq!(record.bit_errors, 0);
        assert_eq!(record.ber, 0.0);
        assert_eq!(record.trials, 500);
    }

    #[test]
    fn run_point_is_deterministic() {
        let mut cfg = base_config();
        cfg.refine_enabled = true;
        let a = run_point(&cfg, 0).unwrap();
        let b = run_point(&cfg, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ber.to_bits(), b.ber.to_bits());
    }

    #[test]
    fn run_point_independent_of_worker_count() {
        let mut cfg = base_config();
        cfg.refine_enabled = true;
        cfg.min_trials = 400;
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_point(&cfg, 1))
            .unwrap();
        let quad = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_point(&cfg, 1))
            .unwrap();
        assert_eq!(single, quad);
    }

    #[test]
    fn bit_accounting_stays_in_bounds() {
        let mut cfg = base_config();
        cfg.precoder = PrecoderKind::RandomSigns;
        cfg.snr_db_list = vec![-10.0];
        let record = run_point(&cfg, 0).unwrap();
        let total_bits = record.trials * cfg.bits_per_slot();
        assert!(record.bit_errors <= total_bits);
        assert!(record.ber <= 1.0);
        let recomputed = record.bit_errors as f64 / total_bits as f64;
        assert!((record.ber - recomputed).abs() < 1e-15);
    }

    #[test]
    fn error_target_extends_and_caps() {
        // At high SNR the unquantized reference never errs, so the
        // extension must stop at the growth cap.
        let mut cfg = base_config();
        cfg.precoder = PrecoderKind::ZfUnquantized;
        cfg.snr_db_list = vec![300.0];
        cfg.min_trials = 10;
        cfg.target_bit_errors = 5;
        let record = run_point(&cfg, 0).unwrap();
        assert_eq!(record.trials, 640);
        assert_eq!(record.bit_errors, 0);

        // At very low SNR the target is hit in the first batch.
        let mut cfg = base_config();
        cfg.snr_db_list = vec![-20.0];
        cfg.min_trials = 200;
        cfg.target_bit_errors = 5;
        let record = run_point(&cfg, 0).unwrap();
        assert_eq!(record.trials, 200);
        assert!(record.bit_errors >= 5);
    }

    #[test]
    fn refined_points_with_oracle_audit_pass() {
        let mut cfg = base_config();
        cfg.refine_enabled = true;
        cfg.oracle_check = true;
        cfg.min_trials = 150;
        let record = run_point(&cfg, 0).unwrap();
        assert_eq!(record.trials, 150);
    }

    #[test]
    fn snr_index_out_of_range_is_rejected() {
        let cfg = base_config();
        assert!(matches!(
            run_point(&cfg, 2),
            Err(Error::InvalidConfig(_))
        ));
    }
}

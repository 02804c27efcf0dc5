//! Initial transmit vectors: element-wise 1-bit quantization and the
//! quantized ZF, quantized matched-filter, random-sign, and unquantized-ZF
//! baselines.
//!
//! Every quantized output draws its entries from the four-point alphabet
//! `{+-1 +- j} / sqrt(2 Nt)`, giving unit total transmit power regardless of
//! the antenna count. The unquantized ZF reference is normalized to unit
//! power as well so all schemes radiate the same energy and share one SNR
//! axis.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::ChannelMatrix;

/// Condition estimate above which the channel Gram matrix counts as
/// degenerate and the caller should redraw the channel.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// Which initial precoder produces `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    /// 1-bit quantized zero forcing.
    ZfQuantized,
    /// 1-bit quantized matched filter.
    MfQuantized,
    /// Independent uniform signs on every DAC.
    RandomSigns,
    /// Infinite-resolution ZF, normalized to unit power (reference only).
    ZfUnquantized,
}

impl PrecoderKind {
    /// Stable label used in CSV output and CLI arguments.
    pub fn label(self) -> &'static str {
        match self {
            PrecoderKind::ZfQuantized => "zf",
            PrecoderKind::MfQuantized => "mf",
            PrecoderKind::RandomSigns => "rand",
            PrecoderKind::ZfUnquantized => "zf-unq",
        }
    }

    /// True for precoders whose output lives in the 1-bit alphabet.
    pub fn is_quantized(self) -> bool {
        !matches!(self, PrecoderKind::ZfUnquantized)
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PrecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zf" => Ok(PrecoderKind::ZfQuantized),
            "mf" => Ok(PrecoderKind::MfQuantized),
            "rand" => Ok(PrecoderKind::RandomSigns),
            "zf-unq" => Ok(PrecoderKind::ZfUnquantized),
            other => Err(Error::InvalidConfig(format!(
                "unknown precoder '{other}' (expected zf, mf, rand, or zf-unq)"
            ))),
        }
    }
}

/// Per-component magnitude of the 1-bit alphabet, `1/sqrt(2 Nt)`.
pub fn quantized_amplitude(antennas: usize) -> f64 {
    1.0 / ((2 * antennas) as f64).sqrt()
}

/// Element-wise 1-bit quantization of both signal components.
///
/// Each output entry is `sign(Re) * amp + j * sign(Im) * amp`. A component
/// that is exactly zero quantizes to `+amp` so the mapping is total and
/// deterministic.
pub fn quantize_1bit(x: &[Complex64]) -> Vec<Complex64> {
    let amp = quantized_amplitude(x.len());
    x.iter()
        .map(|v| Complex64::new(sign_amp(v.re, amp), sign_amp(v.im, amp)))
        .collect()
}

fn sign_amp(component: f64, amp: f64) -> f64 {
    if component < 0.0 {
        -amp
    } else {
        amp
    }
}

/// Zero-forcing precoding `w = H^H (H H^H)^{-1} s`.
///
/// With `quantize` the result is pushed through [`quantize_1bit`]; without
/// it the unquantized vector is scaled to unit norm as the
/// infinite-resolution reference. Channels whose Gram matrix condition
/// estimate exceeds [`GRAM_CONDITION_LIMIT`] are reported as degenerate so
/// the Monte Carlo driver can redraw them.
pub fn zf_precode(h: &ChannelMatrix, symbols: &[Complex64], quantize: bool) -> Result<Vec<Complex64>> {
    let users = h.users();
    if symbols.len() != users {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols supplied for {} users",
            symbols.len(),
            users
        )));
    }
    let gram = gram_matrix(h);
    let gram_inverse = invert_checked(&gram, users)?;

    // t = (H H^H)^{-1} s, then w = H^H t.
    let t: Vec<Complex64> = (0..users)
        .map(|r| {
            (0..users)
                .map(|c| gram_inverse[r * users + c] * symbols[c])
                .sum()
        })
        .collect();
    let mut w: Vec<Complex64> = (0..h.antennas())
        .map(|n| (0..users).map(|k| h.row(k)[n].conj() * t[k]).sum())
        .collect();

    if quantize {
        return Ok(quantize_1bit(&w));
    }
    let norm = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if !norm.is_finite() || norm < 1e-300 {
        return Err(Error::DegenerateChannel {
            limit: GRAM_CONDITION_LIMIT,
        });
    }
    for v in &mut w {
        *v /= norm;
    }
    Ok(w)
}

/// Quantized matched filter `Q(H^H s)`.
pub fn mf_precode(h: &ChannelMatrix, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    if symbols.len() != h.users() {
        return Err(Error::DimensionMismatch(format!(
            "{} symbols supplied for {} users",
            symbols.len(),
            h.users()
        )));
    }
    let w: Vec<Complex64> = (0..h.antennas())
        .map(|n| {
            (0..h.users())
                .map(|k| h.row(k)[n].conj() * symbols[k])
                .sum()
        })
        .collect();
    Ok(quantize_1bit(&w))
}

/// Independent uniform random signs on every real and imaginary component,
/// already scaled to the 1-bit alphabet.
pub fn random_precode<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> Vec<Complex64> {
    let amp = quantized_amplitude(antennas);
    (0..antennas)
        .map(|_| {
            let re = if rng.random::<bool>() { amp } else { -amp };
            let im = if rng.random::<bool>() { amp } else { -amp };
            Complex64::new(re, im)
        })
        .collect()
}

/// `H H^H`, row-major `users x users`.
fn gram_matrix(h: &ChannelMatrix) -> Vec<Complex64> {
    let users = h.users();
    let mut gram = vec![Complex64::new(0.0, 0.0); users * users];
    for r in 0..users {
        for c in 0..users {
            gram[r * users + c] = h
                .row(r)
                .iter()
                .zip(h.row(c))
                .map(|(x, y)| x * y.conj())
                .sum();
        }
    }
    gram
}

/// Gauss-Jordan inversion with partial pivoting plus an infinity-norm
/// condition estimate `||G|| * ||G^{-1}||`; errors out above the limit.
fn invert_checked(matrix: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let degenerate = Error::DegenerateChannel {
        limit: GRAM_CONDITION_LIMIT,
    };
    let norm_in = inf_norm(matrix, n);
    if norm_in == 0.0 {
        return Err(degenerate);
    }

    // Augmented [G | I].
    let mut aug = vec![Complex64::new(0.0, 0.0); n * 2 * n];
    for r in 0..n {
        aug[r * 2 * n..r * 2 * n + n].copy_from_slice(&matrix[r * n..(r + 1) * n]);
        aug[r * 2 * n + n + r] = Complex64::new(1.0, 0.0);
    }
    let width = 2 * n;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| {
                aug[a * width + col]
                    .norm_sqr()
                    .total_cmp(&aug[b * width + col].norm_sqr())
            })
            .unwrap();
        if aug[pivot_row * width + col].norm_sqr() == 0.0 {
            return Err(degenerate);
        }
        if pivot_row != col {
            for j in 0..width {
                aug.swap(col * width + j, pivot_row * width + j);
            }
        }
        let pivot = aug[col * width + col];
        for j in 0..width {
            aug[col * width + j] /= pivot;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = aug[r * width + col];
            if factor.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..width {
                let sub = factor * aug[col * width + j];
                aug[r * width + j] -= sub;
            }
        }
    }
    let inverse: Vec<Complex64> = (0..n)
        .flat_map(|r| aug[r * width + n..(r + 1) * width].to_vec())
        .collect();

    let condition = norm_in * inf_norm(&inverse, n);
    if !condition.is_finite() || condition > GRAM_CONDITION_LIMIT {
        return Err(degenerate);
    }
    Ok(inverse)
}

/// Infinity norm (max absolute row sum) of a square row-major matrix.
fn inf_norm(matrix: &[Complex64], n: usize) -> f64 {
    (0..n)
        .map(|r| matrix[r * n..(r + 1) * n].iter().map(|v| v.norm()).sum())
        .fold(0.0, f64::max)
}

//! The symbol-scaling system: a real-valued linear map from the extended
//! transmit vector to the per-user threshold scaling factors.
//!
//! For user `k` with intended symbol decomposed into threshold bases
//! `(a_k, b_k)`, the noiseless received signal factors as
//! `h_k * x = alpha_a * a_k + alpha_b * b_k` with real coefficients. Both
//! coefficients are positive exactly when the signal lies inside the symbol's
//! decision wedge, and their size measures the distance to the nearest
//! threshold. Stacking the real and imaginary parts of the transmit signal
//! into `x_E = [Re(x); Im(x)]` makes the map linear: `lambda = M * x_E`,
//! where `M` is a `2K x 2Nt` real matrix with one row per scaling factor.
//! The minimum entry of `lambda` is the performance metric the refinement
//! maximizes.
//!
//! `lambda` is ordered `[alpha_a of users 1..K, alpha_b of users 1..K]`.

use num_complex::Complex64;

use crate::constellation::SymbolBases;
use crate::error::{Error, Result};

/// Threshold under which the basis cross product counts as collinear.
const COLLINEARITY_TOLERANCE: f64 = 1e-12;

/// A `K x Nt` complex flat-fading downlink channel, one row per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    users: usize,
    antennas: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    /// Wraps row-major channel gains; requires `1 <= users <= antennas` and
    /// finite entries.
    pub fn new(users: usize, antennas: usize, entries: Vec<Complex64>) -> Result<Self> {
        if users == 0 || antennas < users {
            return Err(Error::InvalidConfig(format!(
                "channel needs 1 <= users <= antennas, got {users} users, {antennas} antennas"
            )));
        }
        if entries.len() != users * antennas {
            return Err(Error::DimensionMismatch(format!(
                "channel storage holds {} entries, expected {}",
                entries.len(),
                users * antennas
            )));
        }
        if entries.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::NonFiniteChannel);
        }
        Ok(Self {
            users,
            antennas,
            entries,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// The channel vector of user `k`.
    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.entries[k * self.antennas..(k + 1) * self.antennas]
    }

    /// `h_k * x` for user `k`.
    pub fn user_receive(&self, k: usize, x: &[Complex64]) -> Complex64 {
        self.row(k).iter().zip(x).map(|(h, xn)| h * xn).sum()
    }

    /// Returns a copy with every entry multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            users: self.users,
            antennas: self.antennas,
            entries: self.entries.iter().map(|e| e * scale).collect(),
        }
    }
}

/// The transmit signal as a real vector `[Re(x); Im(x)]` of length `2 Nt`.
///
/// When the signal is 1-bit quantized every entry is exactly
/// `+amp` or `-amp` with `amp = 1/sqrt(2 Nt)`, and the Euclidean norm is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedTransmitVector {
    values: Vec<f64>,
}

impl ExtendedTransmitVector {
    /// Wraps a stacked real vector; the length must be even.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "extended transmit vector length must be even and nonzero, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    /// Stacks the real parts then the imaginary parts of `x`.
    pub fn from_complex(x: &[Complex64]) -> Self {
        let mut values = Vec::with_capacity(2 * x.len());
        values.extend(x.iter().map(|v| v.re));
        values.extend(x.iter().map(|v| v.im));
        Self { values }
    }

    /// Reassembles the complex transmit vector.
    pub fn to_complex(&self) -> Vec<Complex64> {
        let nt = self.antennas();
        (0..nt)
            .map(|n| Complex64::new(self.values[n], self.values[nt + n]))
            .collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of antennas, half the stacked length.
    pub fn antennas(&self) -> usize {
        self.values.len() / 2
    }

    /// True when every entry is exactly `+amp` or `-amp`.
    pub fn in_alphabet(&self, amp: f64) -> bool {
        self.values.iter().all(|&v| v == amp || v == -amp)
    }

    /// Flips the sign of one coordinate in place.
    pub(crate) fn flip(&mut self, index: usize) {
        self.values[index] = -self.values[index];
    }
}

/// The `2K x 2Nt` real matrix mapping `x_E` to the scaling vector.
///
/// Row `k` produces `alpha_a` of user `k`; row `K + k` produces `alpha_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMatrix {
    users: usize,
    antennas: usize,
    /// Row-major `2*users x 2*antennas` storage.
    data: Vec<f64>,
}

impl ScalingMatrix {
    /// Builds the scaling matrix for channel `h` and one threshold
    /// decomposition per user.
    ///
    /// For user `k` with bases `a = (ar, ai)` and `b = (br, bi)`, inverting
    /// the 2x2 system `[ar br; ai bi] * [alpha_a; alpha_b] = h_k * x` gives
    /// row pairs that are linear in the channel:
    ///
    /// ```text
    /// alpha_a = ((bi*hr - br*hi) * xr - (bi*hi + br*hr) * xi) / d
    /// alpha_b = ((ar*hi - ai*hr) * xr + (ar*hr + ai*hi) * xi) / d
    /// d = ar*bi - ai*br
    /// ```
    ///
    /// Rejects collinear bases (`d` vanishing), which only arise outside the
    /// supported constellations.
    pub fn build(h: &ChannelMatrix, bases: &[SymbolBases]) -> Result<Self> {
        let users = h.users();
        let antennas = h.antennas();
        if bases.len() != users {
            return Err(Error::DimensionMismatch(format!(
                "{} symbol decompositions supplied for {} users",
                bases.len(),
                users
            )));
        }
        let cols = 2 * antennas;
        let mut data = vec![0.0; 2 * users * cols];
        for (k, base) in bases.iter().enumerate() {
            let (ar, ai) = (base.a.re, base.a.im);
            let (br, bi) = (base.b.re, base.b.im);
            let denom = ar * bi - ai * br;
            if denom.abs() < COLLINEARITY_TOLERANCE {
                return Err(Error::CollinearBases { user: k });
            }
            let row_a = &mut data[k * cols..(k + 1) * cols];
            for (n, hn) in h.row(k).iter().enumerate() {
                row_a[n] = (bi * hn.re - br * hn.im) / denom;
                row_a[antennas + n] = -(bi * hn.im + br * hn.re) / denom;
            }
            let row_b = &mut data[(users + k) * cols..(users + k + 1) * cols];
            for (n, hn) in h.row(k).iter().enumerate() {
                row_b[n] = (ar * hn.im - ai * hn.re) / denom;
                row_b[antennas + n] = (ar * hn.re + ai * hn.im) / denom;
            }
        }
        Ok(Self {
            users,
            antennas,
            data,
        })
    }

    /// Number of rows, `2 * users`.
    pub fn rows(&self) -> usize {
        2 * self.users
    }

    /// Number of columns, `2 * antennas`.
    pub fn cols(&self) -> usize {
        2 * self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.cols();
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols() + c]
    }

    /// The scaling vector `lambda = M * x_E`.
    ///
    /// Entries may be negative: a negative factor means the signal fell on
    /// the wrong side of the corresponding threshold.
    pub fn scaling_vector(&self, x: &ExtendedTransmitVector) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "scaling matrix has {} columns but x_E has length {}",
                self.cols(),
                x.len()
            )));
        }
        Ok((0..self.rows())
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x.values())
                    .map(|(m, v)| m * v)
                    .sum()
            })
            .collect())
    }
}

/// A scaling matrix paired with the scaling vector of one transmit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSystem {
    pub matrix: ScalingMatrix,
    pub lambda: Vec<f64>,
}

impl ScalingSystem {
    pub fn new(matrix: ScalingMatrix, x: &ExtendedTransmitVector) -> Result<Self> {
        let lambda = matrix.scaling_vector(x)?;
        Ok(Self { matrix, lambda })
    }

    /// The scaling pair `(alpha_a, alpha_b)` of user `k`.
    pub fn user_pair(&self, k: usize) -> (f64, f64) {
        (self.lambda[k], self.lambda[self.matrix.users() + k])
    }
}

/// The minimum scaling factor, the objective the refinement maximizes.
pub fn min_scaling(lambda: &[f64]) -> Result<f64> {
    lambda
        .iter()
        .copied()
        .reduce(f64::min)
        .ok_or(Error::EmptyInput("scaling vector"))
}

//! M-PSK constellations, Gray labeling, demodulation, and the decomposition
//! of each symbol along its two detection thresholds.
//!
//! Constellation points are unit-modulus and laid out anti-clockwise starting
//! at phase `pi/4`, so point `i` (0-based) sits at phase `2*pi*i/M + pi/4`.
//! The decision region of a point is the wedge of half-angle `pi/M` around
//! it; the two rays bounding the wedge are the detection thresholds. Every
//! point can be written as the sum of two equal-length vectors `a` and `b`
//! lying on those thresholds, scaled by `1/rho` so that `a + b` lands exactly
//! on the point. Expressing a received signal in the `(a, b)` basis turns
//! "distance to the nearest threshold" into a pair of real scaling factors,
//! which is what the symbol-scaling metric consumes.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Threshold decomposition of one constellation point: `a + b` equals the
/// point, `|a| = |b| = 1/rho`, and `a`/`b` lie on the clockwise and
/// anti-clockwise detection thresholds respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBases {
    /// Basis vector on the clockwise threshold (symbol phase minus `pi/M`).
    pub a: Complex64,
    /// Basis vector on the anti-clockwise threshold (symbol phase plus `pi/M`).
    pub b: Complex64,
    /// Scaling factor restoring `a + b` to the unit-modulus point; equals
    /// `2*cos(pi/M)`.
    pub rho: f64,
}

/// An M-PSK constellation with Gray-coded bit labels.
#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: u32,
    points: Vec<Complex64>,
    gray_labels: Vec<u32>,
}

impl Constellation {
    /// Builds the M-PSK constellation for `order` points.
    ///
    /// Rejects orders below 4 and non-powers of two. BPSK is excluded
    /// because its two detection thresholds coincide, which makes the
    /// threshold decomposition singular.
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(Error::UnsupportedModulation(order));
        }
        let points = (0..order)
            .map(|i| Complex64::from_polar(1.0, symbol_phase(order, i)))
            .collect();
        // Reflected binary Gray code, assigned anti-clockwise from point 0.
        let gray_labels = (0..order as u32).map(|i| i ^ (i >> 1)).collect();
        Ok(Self {
            order,
            bits_per_symbol: order.trailing_zeros(),
            points,
            gray_labels,
        })
    }

    /// Number of constellation points.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits carried by one symbol, `log2(order)`.
    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    /// All points, anti-clockwise from phase `pi/4`.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// The point at `index` (0-based).
    pub fn point(&self, index: usize) -> Result<Complex64> {
        self.points
            .get(index)
            .copied()
            .ok_or(Error::SymbolIndexOutOfRange {
                index,
                order: self.order,
            })
    }

    /// Gray bit labels, one per point; only the low `bits_per_symbol` bits
    /// are meaningful.
    pub fn gray_labels(&self) -> &[u32] {
        &self.gray_labels
    }

    /// Decomposes the point at `index` along its two detection thresholds.
    pub fn decompose(&self, index: usize) -> Result<SymbolBases> {
        if index >= self.order {
            return Err(Error::SymbolIndexOutOfRange {
                index,
                order: self.order,
            });
        }
        let phase = symbol_phase(self.order, index);
        let half_wedge = PI / self.order as f64;
        let dir_a = Complex64::from_polar(1.0, phase - half_wedge);
        let dir_b = Complex64::from_polar(1.0, phase + half_wedge);
        let rho = (dir_a + dir_b).norm();
        Ok(SymbolBases {
            a: dir_a / rho,
            b: dir_b / rho,
            rho,
        })
    }

    /// Nearest-point hard decision: the index whose decision wedge contains
    /// `y`, i.e. the argmin of angular distance.
    ///
    /// Phases exactly on a threshold resolve to the lower index, and `y = 0`
    /// falls back to index 0, so the decision is deterministic everywhere.
    pub fn demodulate(&self, y: Complex64) -> usize {
        if y.re == 0.0 && y.im == 0.0 {
            return 0;
        }
        let phase = y.arg();
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = angular_distance(phase, p.arg());
            if d < best_dist {
                best_dist = d;
                best = i;
            }
        }
        best
    }

    /// Hamming distance between the Gray labels of two points.
    ///
    /// Both indices must be in range.
    pub fn bit_errors(&self, sent: usize, decided: usize) -> u32 {
        (self.gray_labels[sent] ^ self.gray_labels[decided]).count_ones()
    }
}

/// Phase of point `index` (0-based): `2*pi*index/order + pi/4`.
fn symbol_phase(order: usize, index: usize) -> f64 {
    TAU * index as f64 / order as f64 + FRAC_PI_4
}

/// Absolute angular distance between two phases, in `[0, pi]`.
fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < TOL
    }

    #[test]
    fn rejects_unsupported_orders() {
        for bad in [0, 1, 2, 3, 6, 12] {
            assert!(
                matches!(
                    Constellation::new(bad),
                    Err(Error::UnsupportedModulation(order)) if order == bad
                ),
                "order {bad} must be rejected"
            );
        }
        for good in [4, 8, 16, 32] {
            assert!(Constellation::new(good).is_ok());
        }
    }

    #[test]
    fn qpsk_points_match_closed_form() {
        let c = Constellation::new(4).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(c.points()[0], Complex64::new(s, s)));
        assert!(close(c.points()[1], Complex64::new(-s, s)));
        assert!(close(c.points()[2], Complex64::new(-s, -s)));
        assert!(close(c.points()[3], Complex64::new(s, -s)));
        // Phases are pi/4, 3pi/4, 5pi/4, 7pi/4.
        for (i, expected) in [1.0, 3.0, 5.0, 7.0].iter().enumerate() {
            let phase = c.points()[i].arg().rem_euclid(TAU);
            assert!((phase - expected * FRAC_PI_4).abs() < TOL);
        }
    }

    #[test]
    fn psk8_second_point_is_j() {
        let c = Constellation::new(8).unwrap();
        assert!(close(c.points()[1], Complex64::new(0.0, 1.0)));
    }

    #[test]
    fn all_points_unit_modulus() {
        for order in [4, 8, 16] {
            let c = Constellation::new(order).unwrap();
            for p in c.points() {
                assert!((p.norm() - 1.0).abs() < TOL);
            }
        }
    }

    #[test]
    fn qpsk_decomposition_is_axis_aligned() {
        let c = Constellation::new(4).unwrap();
        let bases = c.decompose(0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(bases.a, Complex64::new(s, 0.0)));
        assert!(close(bases.b, Complex64::new(0.0, s)));
        assert!((bases.rho - 2.0_f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn psk8_decomposition_matches_closed_form() {
        // Independent closed form for the first 8PSK point: the basis moduli
        // are 1/(2 cos(pi/8)) and the real part of `a` is exactly 1/2, its
        // imaginary part tan(pi/8)/2 = (sqrt(2)-1)/2.
        let c = Constellation::new(8).unwrap();
        let bases = c.decompose(0).unwrap();
        let rho = 2.0 * (PI / 8.0).cos();
        assert!((bases.rho - rho).abs() < TOL);
        assert!((bases.a.re - 0.5).abs() < TOL);
        assert!((bases.a.im - (2.0_f64.sqrt() - 1.0) / 2.0).abs() < TOL);
        assert!((bases.a.norm() - 1.0 / rho).abs() < TOL);
        assert!((bases.b.norm() - 1.0 / rho).abs() < TOL);
        // b mirrors a across the symbol phase pi/4.
        assert!(close(bases.b, Complex64::new(bases.a.im, bases.a.re)));
    }

    #[test]
    fn bases_sum_to_point_for_all_orders() {
        for order in [4, 8, 16] {
            let c = Constellation::new(order).unwrap();
            for i in 0..order {
                let bases = c.decompose(i).unwrap();
                assert!(
                    close(bases.a + bases.b, c.points()[i]),
                    "order {order}, index {i}"
                );
                assert!((bases.a.norm() - 1.0 / bases.rho).abs() < TOL);
                assert!((bases.b.norm() - 1.0 / bases.rho).abs() < TOL);
                // Bases must not be collinear.
                let cross = bases.a.re * bases.b.im - bases.a.im * bases.b.re;
                assert!(cross.abs() > 1e-6);
            }
        }
    }

    #[test]
    fn decompose_rejects_out_of_range() {
        let c = Constellation::new(4).unwrap();
        assert!(matches!(
            c.decompose(4),
            Err(Error::SymbolIndexOutOfRange { index: 4, order: 4 })
        ));
    }

    #[test]
    fn demodulate_known_wedges() {
        let qpsk = Constellation::new(4).unwrap();
        assert_eq!(qpsk.demodulate(Complex64::new(0.9, 0.8)), 0);
        assert_eq!(qpsk.demodulate(Complex64::new(-0.1, 1.0)), 1);

        // 0.40 rad lies in the first 8PSK wedge (pi/8, 3pi/8); confirm by
        // brute force over all eight wedges before trusting the decision.
        let psk8 = Constellation::new(8).unwrap();
        let y = Complex64::from_polar(1.0, 0.40);
        let mut containing = Vec::new();
        for i in 0..8 {
            let center = psk8.points()[i].arg();
            if angular_distance(0.40, center) < PI / 8.0 {
                containing.push(i);
            }
        }
        assert_eq!(containing, vec![0]);
        assert_eq!(psk8.demodulate(y), 0);
    }

    #[test]
    fn demodulate_points_roundtrip() {
        for order in [4, 8, 16] {
            let c = Constellation::new(order).unwrap();
            for i in 0..order {
                assert_eq!(c.demodulate(c.points()[i]), i);
            }
        }
    }

    #[test]
    fn demodulate_threshold_tie_takes_lower_index() {
        let qpsk = Constellation::new(4).unwrap();
        // Phase 0 is the boundary between wedges 0 and 3.
        assert_eq!(qpsk.demodulate(Complex64::new(1.0, 0.0)), 0);
        // Phase pi/2 is the boundary between wedges 0 and 1.
        assert_eq!(qpsk.demodulate(Complex64::new(0.0, 1.0)), 0);
    }

    #[test]
    fn demodulate_zero_falls_back_to_first_point() {
        let c = Constellation::new(8).unwrap();
        assert_eq!(c.demodulate(Complex64::new(0.0, 0.0)), 0);
    }

    #[test]
    fn gray_labels_cyclically_adjacent() {
        for order in [4, 8, 16] {
            let c = Constellation::new(order).unwrap();
            let labels = c.gray_labels();
            let mut seen = std::collections::HashSet::new();
            for i in 0..order {
                assert!(seen.insert(labels[i]), "duplicate label");
                assert!(labels[i] < order as u32);
                let next = labels[(i + 1) % order];
                assert_eq!(
                    (labels[i] ^ next).count_ones(),
                    1,
                    "order {order}: labels {i} and {} differ in != 1 bit",
                    (i + 1) % order
                );
            }
        }
    }

    #[test]
    fn bit_error_counts() {
        let c = Constellation::new(4).unwrap();
        assert_eq!(c.bit_errors(2, 2), 0);
        for i in 0..4 {
            assert_eq!(c.bit_errors(i, (i + 1) % 4), 1, "adjacent points");
        }
        // The reflected code labels opposite QPSK points 00/11 and 01/10.
        assert_eq!(c.bit_errors(0, 2), 2);
        assert_eq!(c.bit_errors(1, 3), 2);
    }
}

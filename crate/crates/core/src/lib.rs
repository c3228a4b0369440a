//! Numerical core for experiments with the Alt–Caffarelli–Friedman
//! monotonicity functional on sampled two-phase pairs.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in the `acf-lab` companion crate.

#![no_std]
// `num_traits::Float` is shadowed by inherent float methods whenever std is
// linked into the build graph (tests, dev-dependencies).
#![allow(unused_imports)]
// comparisons are negated on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod acf;
pub mod beta;
pub mod blowup;
pub mod cloud;
pub mod cover;
pub mod energy;
mod error;
pub mod fit;
pub mod generators;
pub mod grid;
pub mod linalg;
pub mod pair;
pub mod quadrature;
pub mod strata;

pub use error::{Error, Result};
pub use grid::{Grid, GridField};
pub use pair::{validate_pair, AdmissiblePair, Tolerances, ValidationReport};

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // ω_n = (2π / n) ω_{n-2}, starting from ω_0 = 1 and ω_1 = 2.
    let (mut prev, mut cur) = (1.0, 2.0);
    if n == 0 {
        return prev;
    }
    for k in 2..=n {
        let next = 2.0 * core::f64::consts::PI / k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// The constant `c_* = n² ω_n² / 16` for which a truncated linear pair with
/// slopes `a`, `b` has functional value `c_* a² b²`.
pub fn c_star(n: usize) -> f64 {
    let w = unit_ball_volume(n);
    (n * n) as f64 * w * w / 16.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn c_star_values() {
        assert!((c_star(2) - PI * PI / 4.0).abs() < 1e-14);
        assert!((c_star(3) - PI * PI).abs() < 1e-13);
    }
}

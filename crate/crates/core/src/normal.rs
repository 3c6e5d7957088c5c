//! Standard normal helpers and the logistic link.

use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

/// Standard normal CDF, evaluated through `erfc` so both tails keep relative precision.
pub fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Standard normal density.
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile function. `p` must lie in `(0, 1)`.
pub fn phi_inv(p: f64) -> f64 {
    let mut z = -SQRT_2 * erfc_inv(2.0 * p);
    // polish against the tail-accurate CDF; work in the smaller tail
    if z.is_finite() {
        for _ in 0..2 {
            let step = if z <= 0.0 {
                (phi(z) - p) / pdf(z)
            } else {
                ((1.0 - p) - phi(-z)) / pdf(z)
            };
            z -= step;
        }
    }
    z
}

/// Logistic sigmoid without overflow for large `|t|`.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `ln(1 + e^t)` computed stably.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn phi_reference_values() {
        // mpmath.ncdf at 30 digits
        assert_abs_diff_eq!(phi(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(phi(1.0), 0.841_344_746_068_542_9, epsilon = 1e-14);
        assert_abs_diff_eq!(phi(-1.0), 0.158_655_253_931_457_05, epsilon = 1e-14);
        assert_abs_diff_eq!(phi(-8.0), 6.220_960_574_271_784e-16, epsilon = 1e-25);
        assert_abs_diff_eq!(phi(3.5), 0.999767370920964, epsilon = 1e-13);
        assert_abs_diff_eq!(phi_inv(0.975), 1.959963984540054, epsilon = 1e-13);
        assert_abs_diff_eq!(phi_inv(1e-10), -6.361340902404056, epsilon = 1e-10);
    }

    #[test]
    fn phi_inv_round_trips_on_grid() {
        for i in -80..=80 {
            let z = i as f64 / 10.0;
            let p = phi(z);
            // above ~5 the rounding of p itself dominates
            if z <= 5.0 {
                assert_abs_diff_eq!(phi_inv(p), z, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn sigmoid_is_stable_in_tails() {
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_abs_diff_eq!(sigmoid(0.0), 0.5);
        assert_abs_diff_eq!(logit(sigmoid(2.5)), 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(softplus(800.0), 800.0);
        assert_abs_diff_eq!(softplus(0.0), std::f64::consts::LN_2);
    }
}

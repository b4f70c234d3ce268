//! BPR and soft BPR losses.
//!
//! Both are `-ln sigma(.)` of a score difference, computed through the
//! numerically stable softplus so large |d| neither overflows nor rounds to
//! an exact zero prematurely. The soft variant scales the difference by a
//! factor beta before the sigmoid, which flattens the per-triplet gradient
//! weight `delta = 1 - sigma(.)` across triplets.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `-ln sigma(d)` for the score difference `d = y_ui - y_uj`.
pub fn bpr_loss(d: f64) -> f64 {
    softplus(-d)
}

/// `-ln sigma(beta * d)`. `beta = 1` reduces to [`bpr_loss`].
pub fn soft_bpr_loss(d: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    softplus(-(beta * d))
}

/// Gradient weight of a BPR triplet: `1 - sigma(d)`.
pub fn delta_dns(d: f64) -> f64 {
    1.0 - sigmoid(d)
}

/// Gradient weight of a soft-BPR triplet: `1 - sigma(beta * d)`.
pub fn delta_pdns(d: f64, beta: f64) -> f64 {
    1.0 - sigmoid(beta * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpr_at_zero_is_ln_two() {
        assert!((bpr_loss(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bpr_saturates_without_overflow() {
        let l = bpr_loss(40.0);
        assert!(l > 0.0 && l < 1e-15, "loss {l}");
        assert!(bpr_loss(-1000.0).is_finite());
    }

    #[test]
    fn bpr_negative_two_matches_scalar_oracle() {
        // ln(1 + e^2) evaluated at high precision
        assert!((bpr_loss(-2.0) - 2.126928011042972).abs() < 1e-12);
    }

    #[test]
    fn soft_bpr_scalar_oracle() {
        // -ln sigma(0.1 * 2) = ln(1 + e^{-0.2})
        assert!((soft_bpr_loss(2.0, 0.1) - 0.5981388693815918).abs() < 1e-12);
    }

    #[test]
    fn beta_one_reduces_to_bpr() {
        for d in [-3.0, -0.5, 0.0, 1.2, 17.0] {
            assert_eq!(soft_bpr_loss(d, 1.0), bpr_loss(d));
        }
    }

    #[test]
    fn soft_bpr_is_bpr_of_scaled_difference() {
        for d in [-4.0, -1.0, 0.3, 2.5] {
            for alpha in [0.0, 0.5, 0.7, 0.9] {
                let beta = 1.0 - alpha;
                assert_eq!(soft_bpr_loss(d, beta), bpr_loss(beta * d));
            }
        }
    }

    #[test]
    fn delta_at_zero_is_half() {
        assert_eq!(delta_dns(0.0), 0.5);
    }

    #[test]
    fn delta_range_compression() {
        // beta=0.1 squeezes the spread of delta over d in {-3, +3}
        let d_lo = delta_pdns(3.0, 0.1);
        let d_hi = delta_pdns(-3.0, 0.1);
        assert!((d_hi - 0.574442516811659).abs() < 1e-12);
        assert!((d_lo - 0.425557483188341).abs() < 1e-12);
        let range_soft = d_hi - d_lo;
        let range_bpr = delta_dns(-3.0) - delta_dns(3.0);
        assert!((range_soft - 0.148885033623318).abs() < 1e-12);
        assert!((range_bpr - 0.905148253644866).abs() < 1e-12);
        assert!(range_soft < range_bpr);
    }

    #[test]
    fn losses_strictly_decrease_in_d() {
        let mut prev_bpr = f64::INFINITY;
        let mut prev_soft = f64::INFINITY;
        for k in -40..=40 {
            let d = k as f64 * 0.25;
            let b = bpr_loss(d);
            let s = soft_bpr_loss(d, 0.2);
            assert!(b < prev_bpr);
            assert!(s < prev_soft);
            prev_bpr = b;
            prev_soft = s;
        }
    }
}

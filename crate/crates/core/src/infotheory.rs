//! Entropy and divergences between binary distributions, in bits.
//!
//! Base 2 keeps both the binary entropy and the Jensen-Shannon divergence in
//! `[0, 1]`. `0 log 0` is taken as 0; probabilities are never floored.

use crate::record::BinaryDist;

/// Logarithm base used by every quantity in this module.
pub const LOG_BASE: u32 = 2;

/// `a * log2(a / b)` with `0 log 0 = 0` and `a log(a / 0) = +inf`.
#[inline]
fn xlog2_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a * (a / b).log2()
    }
}

#[inline]
fn xlog2(a: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * a.log2()
    }
}

pub fn binary_entropy(p: BinaryDist) -> f64 {
    let h = -xlog2(p.p_yes()) - xlog2(p.p_no());
    // rounding can leave -0.0 or a hair above 1
    h.clamp(0.0, 1.0)
}

/// Kullback-Leibler divergence `KL(p || q)`. Returns `+inf` when `p` puts
/// mass where `q` has none.
pub fn kl(p: BinaryDist, q: BinaryDist) -> f64 {
    let d = xlog2_ratio(p.p_yes(), q.p_yes()) + xlog2_ratio(p.p_no(), q.p_no());
    d.max(0.0)
}

pub fn midpoint(p: BinaryDist, q: BinaryDist) -> BinaryDist {
    BinaryDist::clamped(0.5 * (p.p_yes() + q.p_yes()))
}

/// Jensen-Shannon divergence. Symmetric, always finite, in `[0, 1]`.
pub fn jsd(p: BinaryDist, q: BinaryDist) -> f64 {
    if p == q {
        return 0.0;
    }
    let m = midpoint(p, q);
    (0.5 * kl(p, m) + 0.5 * kl(q, m)).clamp(0.0, 1.0)
}

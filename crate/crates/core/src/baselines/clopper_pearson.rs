use statrs::function::beta::beta_reg;

use crate::math::ProbInterval;

/// `x` with `I_x(a, b) = q`, by bisection on the regularized incomplete beta
/// function (continued-fraction evaluation).
pub fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // 1e-10 on the quantile needs ~34 halvings; go to the f64 floor.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval at level `1 − alpha`.
pub fn clopper_pearson(x: u64, n: u64, alpha: f64) -> ProbInterval {
    assert!(x <= n && n > 0, "need 0 <= x <= n, n > 0 (x={x}, n={n})");
    let (xf, nf) = (x as f64, n as f64);
    let lo = if x == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, xf, nf - xf + 1.0)
    };
    let hi = if x == n {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, xf + 1.0, nf - xf)
    };
    ProbInterval { lo, hi: hi.max(lo) }
}

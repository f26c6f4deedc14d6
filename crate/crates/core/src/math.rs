//! Scalar special functions used by the detection and chain models.
//!
//! Everything here is written against `libm` so the crate stays `no_std`.

use libm::{exp, fabs, lgamma, log, log1p};

const SERIES_EPS: f64 = 1e-16;
const MAX_ITER: usize = 200_000;
const FPMIN: f64 = 1e-300;

/// `ln Γ*(a)` where `Γ(a) = sqrt(2π/a) (a/e)^a Γ*(a)`, valid for `a >= 10`.
fn ln_stirling_correction(a: f64) -> f64 {
    let a2 = a * a;
    let mut term = 1.0 / a;
    let coeffs = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let mut sum = 0.0;
    for c in coeffs {
        sum += c * term;
        term /= a2;
    }
    sum
}

/// `ln(1 + t) - t` without cancellation near zero.
fn log1pmx(t: f64) -> f64 {
    if fabs(t) > 0.25 {
        return log1p(t) - t;
    }
    // -t^2/2 + t^3/3 - ...
    let mut sum = 0.0;
    let mut power = t * t;
    let mut k = 2.0;
    loop {
        let term = power / k;
        let signed = if (k as u64) % 2 == 0 { -term } else { term };
        sum += signed;
        if fabs(term) <= SERIES_EPS * fabs(sum) {
            break;
        }
        power *= t;
        k += 1.0;
    }
    sum
}

/// `ln(x^a e^-x / Γ(a))`, the common prefactor of the incomplete gamma expansions.
fn ln_gamma_prefactor(a: f64, x: f64) -> f64 {
    if a >= 10.0 {
        let t = (x - a) / a;
        0.5 * log(a / (2.0 * core::f64::consts::PI)) + a * log1pmx(t) - ln_stirling_correction(a)
    } else {
        a * log(x) - x - lgamma(a)
    }
}

/// Series for the regularized lower incomplete gamma, divided by its prefactor.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if fabs(term) < fabs(sum) * SERIES_EPS {
            break;
        }
    }
    sum
}

/// Lentz continued fraction for the regularized upper incomplete gamma, divided by its prefactor.
fn upper_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if fabs(d) < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if fabs(c) < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if fabs(delta - 1.0) < SERIES_EPS {
            break;
        }
    }
    h
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
///
/// `Q(0, x)` is taken as `0` (empty Poisson sum) for every `x`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - exp(ln_gamma_prefactor(a, x)) * lower_series(a, x)
    } else {
        exp(ln_gamma_prefactor(a, x)) * upper_fraction(a, x)
    }
}

/// Regularized lower incomplete gamma `P(a, x) = 1 - Q(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        exp(ln_gamma_prefactor(a, x)) * lower_series(a, x)
    } else {
        1.0 - exp(ln_gamma_prefactor(a, x)) * upper_fraction(a, x)
    }
}

/// `ln` of the Poisson probability mass `e^-x x^k / k!`.
pub fn ln_poisson_pmf(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        return -x;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    // x^k e^-x / Γ(k+1) = (x^k e^-x / Γ(k)) / k
    ln_gamma_prefactor(k, x) - log(k)
}

/// `Σ_{n≥0} x^n / ((a+1)(a+2)…(a+n))`, convergent for any finite `x`.
pub fn scaled_lower_series(a: f64, x: f64) -> f64 {
    // lower_series(a+1, x) = 1/(a+1) * Σ ...
    let mut denom = a;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * SERIES_EPS {
            break;
        }
    }
    sum
}

/// Binomial coefficient as a float; zero outside `0 <= k <= n`.
pub fn choose(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// `base^exp` for a non-negative integer exponent with `0^0 = 1`.
pub fn powi(base: f64, exp: i64) -> f64 {
    debug_assert!(exp >= 0);
    libm::pow(base, exp as f64)
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

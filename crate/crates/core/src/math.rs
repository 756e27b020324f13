//! Thin wrappers over `libm` so the numeric code reads like ordinary `f64` math.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Logistic function `e^s / (1 + e^s)`, evaluated without overflow for any `s`.
#[inline]
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + exp(-s))
    } else {
        let e = exp(s);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
#[inline]
pub fn log1p_exp(s: f64) -> f64 {
    if s > 0.0 {
        s + ln_1p(exp(-s))
    } else {
        ln_1p(exp(s))
    }
}

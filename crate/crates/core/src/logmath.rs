//! Log-domain reductions shared by the trellis engines and the soft mappers.

/// `log(Σ exp(x_i))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Pairwise `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Subtracts the row's log-sum-exp in place and returns it.
pub fn normalize_in_place(row: &mut [f64]) -> f64 {
    let z = log_sum_exp(row);
    if z.is_finite() {
        row.iter_mut().for_each(|v| *v -= z);
    }
    z
}

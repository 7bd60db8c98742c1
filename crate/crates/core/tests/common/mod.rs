// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's numerical code.

#![allow(dead_code)]

use std::f64::consts::PI;

/// CDF of the symmetric stable law with characteristic function
/// `exp(-(gamma |t|)^alpha)`, by Gil-Pelaez inversion:
/// `F(x) = 1/2 + (1/pi) * int_0^inf sin(t x) exp(-(gamma t)^alpha) / t dt`.
///
/// Composite Simpson on `t = gamma^-1 * u^4` over `u` in `[0, U]`. The
/// substitution removes the `t^(alpha - 1)` kink at the origin. The upper
/// end puts `exp(-(gamma t)^alpha)` below `e^-46`. The node count grows
/// with `|x|` so that even the densest oscillations of `sin(t x)`, near the
/// upper end in `u`, get at least 24 nodes each.
pub fn stable_cdf(x: f64, alpha: f64, gamma: f64) -> f64 {
    stable_cdf_refined(x, alpha, gamma, 1)
}

/// As [`stable_cdf`] with `refine` times the nodes, for convergence checks.
pub fn stable_cdf_refined(x: f64, alpha: f64, gamma: f64, refine: usize) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let t_max = 46f64.powf(1.0 / alpha) / gamma;
    let u_max = (t_max * gamma).powf(0.25);
    let periods = t_max * x.abs() / (2.0 * PI);
    // Oscillation density in u peaks at 4 * periods / u_max.
    let mut m = ((96.0 * periods) as usize).max(4096) * refine;
    m += m % 2;
    let h = u_max / m as f64;
    // d t / t = 4 du / u.
    let f = |u: f64| {
        if u == 0.0 {
            return 0.0;
        }
        let s = u.powi(4);
        let t = s / gamma;
        (t * x).sin() * (-s.powf(alpha)).exp() * 4.0 / u
    };
    let mut acc = f(0.0) + f(u_max);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    0.5 + acc * h / 3.0 / PI
}

pub fn normal_cdf(x: f64, sd: f64) -> f64 {
    0.5 * erfc(-x / (sd * std::f64::consts::SQRT_2))
}

/// Complementary error function (Numerical Recipes `erfcc`, |err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398 + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Upper bound on the Kolmogorov-Smirnov distance between the sample and a
/// continuous CDF, evaluating the CDF at about `evals` sample points.
///
/// Between two evaluated points both the CDF and the empirical CDF are
/// monotone, so the gap there is bracketed by the endpoint values. Points
/// beyond `|x| > cutoff` are bracketed by 0 and 1.
pub fn ks_upper_bound(sample: &[f64], cdf: impl Fn(f64) -> f64, evals: usize, cutoff: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let nf = n as f64;
    let step = (n / evals).max(1);
    // Knots: indices at which the CDF is evaluated, with their CDF values.
    let mut knots: Vec<(usize, f64)> = Vec::new();
    let lo = s.partition_point(|&v| v < -cutoff);
    let hi = s.partition_point(|&v| v <= cutoff);
    if lo < hi {
        let mut i = lo;
        while i < hi {
            knots.push((i, cdf(s[i])));
            i += step;
        }
        if knots.last().map(|k| k.0) != Some(hi - 1) {
            knots.push((hi - 1, cdf(s[hi - 1])));
        }
    }
    // Sentinels: F(-inf) = 0 before index 0 and F(+inf) = 1 after n-1.
    let mut bound: f64 = 0.0;
    let mut prev: (isize, f64) = (-1, 0.0);
    let mut check = |(i0, f0): (isize, f64), (i1, f1): (isize, f64)| {
        // Sample indices strictly between i0 and i1, plus the endpoints
        // themselves, against CDF values in [f0, f1].
        let first = (i0.max(0)) as f64;
        let last = (i1.min(n as isize - 1)) as f64;
        // ECDF just below a point at index i is i/n, at it (i+1)/n.
        let ecdf_min = first / nf;
        let ecdf_max = (last + 1.0) / nf;
        bound = bound.max(f1 - ecdf_min).max(ecdf_max - f0);
    };
    for &(i, f) in &knots {
        let cur = (i as isize, f);
        check(prev, cur);
        prev = cur;
    }
    check(prev, (n as isize, 1.0));
    bound
}

/// Exact KS distance against a cheap CDF.
pub fn ks_exact(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn median_of(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Biweight midvariance straight from its definition.
pub fn bmid_reference(x: &[f64], c: f64) -> f64 {
    let med = median_of(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    let mad = median_of(&dev);
    let mut num = 0.0;
    let mut den = 0.0;
    for &v in x {
        let u = (v - med) / (c * mad);
        if u.abs() < 1.0 {
            let w = 1.0 - u * u;
            num += (v - med).powi(2) * w.powi(4);
            den += w * (1.0 - 5.0 * u * u);
        }
    }
    x.len() as f64 * num / (den * den)
}

/// Population variance of the order statistics with one-based ranks
/// `floor(n a) + 1 ..= floor(n b)`.
pub fn qcv_reference(x: &[f64], a: f64, b: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = s.len() as f64;
    let lo = (n * a).floor() as usize;
    let hi = (n * b).floor() as usize;
    let w = &s[lo..hi];
    let m = w.iter().sum::<f64>() / w.len() as f64;
    w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64
}

/// Robust CSS from the prefix-wise definition.
pub fn robust_css_reference(x: &[f64], scale: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (1..=x.len())
        .map(|n| {
            if n == 1 {
                return x[0] * x[0];
            }
            let p = &x[..n];
            let s2 = scale(p);
            let med = median_of(p);
            n as f64 * (s2 + med * med) - s2
        })
        .collect()
}

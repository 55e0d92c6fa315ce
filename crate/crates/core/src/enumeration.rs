//! History counts and the growth constants of their exponential generating function.
//!
//! Writing `H(x) = Σ hₙ xⁿ/n!` for reduced trees, removing the stem of `m+1` vertices splits a
//! tree into two independent subtrees, so `H^{(m+1)} = H²` with `H(0) = … = H^{(m)}(0) = 1`.
//! Comparing coefficients of `xⁿ/n!` gives
//!
//! ```text
//! h_{n+m+1} = Σ_{k=0}^{n} C(n,k) h_k h_{n-k},    h_0 = … = h_m = 1.
//! ```
//!
//! For the floating-point estimates the normalised coefficients `aₙ = hₙ/n!` are kept as
//! `bₙ = aₙ rⁿ` for a scale `r` close to the radius of convergence, so that `bₙ` only grows
//! polynomially. The recurrence then reads
//!
//! ```text
//! b_{n+m+1} = r^{m+1} Σ b_k b_{n-k} / ((n+1)(n+2)…(n+m+1)).
//! ```

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::btree::BTreeShape;
use crate::combinatorics::binomial_row;
use crate::error::{Error, Result};
use crate::historic::ReducedHistoricTree;

/// Exact counts `h₀..=h_N` of reduced historic trees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HistoryCountTable {
    pub m: usize,
    #[serde(serialize_with = "crate::serde_num::biguint_vec")]
    pub h: Vec<BigUint>,
}

impl HistoryCountTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,history_length,h\n");
        for (n, h) in self.h.iter().enumerate() {
            out.push_str(&format!("{n},{},{h}\n", n + self.m));
        }
        out
    }
}

/// `Σ_{k=0}^{n} C(n,k) x_k x_{n-k}`, folding the symmetric halves.
fn symmetric_convolution(row: &[BigUint], x: &[BigUint], n: usize) -> BigUint {
    let term = |k: usize| &row[k] * &x[k] * &x[n - k];
    let half: BigUint = if n > 64 {
        (0..n.div_ceil(2)).into_par_iter().map(term).sum()
    } else {
        (0..n.div_ceil(2)).map(term).sum()
    };
    let mut total = half * 2u32;
    if n.is_multiple_of(2) {
        total += term(n / 2);
    }
    total
}

pub fn history_counts(m: usize, n_max: usize) -> Result<HistoryCountTable> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let mut h: Vec<BigUint> = Vec::with_capacity(n_max + 1);
    for t in 0..=n_max {
        if t <= m {
            h.push(BigUint::one());
        } else {
            let n = t - m - 1;
            h.push(symmetric_convolution(&binomial_row(n), &h, n));
        }
    }
    Ok(HistoryCountTable { m, h })
}

/// Counts reduced historic trees on `n` vertices by growing every one of them.
///
/// Memory stays linear in `n`; time is proportional to the number of trees on at most `n`
/// vertices, so `n ≤ 12` for `m = 1` is the practical range.
pub fn brute_force_historic_count(m: usize, n: usize) -> Result<BigUint> {
    fn grow(t: &ReducedHistoricTree, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        (1..=t.external_slot_count()).map(|r| grow(&t.attach(r).expect("rank in range"), left - 1)).sum()
    }
    Ok(BigUint::from(grow(&ReducedHistoricTree::empty(m)?, n)))
}

/// Counts distinct histories with `keys` insertions by replaying every leaf choice.
pub fn brute_force_history_count(m: usize, keys: usize) -> Result<BigUint> {
    fn grow(s: &BTreeShape, left: usize) -> u64 {
        if left == 0 {
            return 1;
        }
        (1..=s.leaf_count()).map(|l| grow(&s.insert_at_leaf(l).expect("leaf in range").0, left - 1)).sum()
    }
    if keys == 0 {
        return Ok(BigUint::zero());
    }
    Ok(BigUint::from(grow(&BTreeShape::new_singleton(m)?, keys - 1)))
}

/// Extrapolation applied to the corrected ratio sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Last corrected ratio.
    Ratio,
    /// Aitken's Δ² on the last three corrected ratios.
    #[default]
    Aitken,
    /// Neville extrapolation to `1/n = 0` through `n = N, N/2, N/4, …`.
    Richardson,
}

impl Method {
    /// Smallest number of coefficients the method accepts for order `m`.
    pub fn min_terms(self, m: usize) -> usize {
        let base = 10 * (m + 1);
        match self {
            Method::Ratio | Method::Aitken => base,
            Method::Richardson => 4 * base,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ratio => "ratio",
            Method::Aitken => "aitken",
            Method::Richardson => "richardson",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ratio" => Ok(Method::Ratio),
            "aitken" => Ok(Method::Aitken),
            "richardson" => Ok(Method::Richardson),
            other => Err(format!("unknown method '{other}' (ratio, aitken, richardson)")),
        }
    }
}

/// Numerical estimate of the singularity `ρ` with `hₙ/n! ≈ c nᵐ ρ⁻ⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub m: usize,
    pub rho: f64,
    pub rho_inverse: f64,
    /// Fitted exponent of `n`; the conjectured value is `m`.
    pub polynomial_exponent: f64,
    /// `(2m+1)!/m! · ρ^{-m-1}`, the constant of the assumed singular behaviour.
    pub c: f64,
    pub n_used: usize,
    pub method: Method,
}

/// `bₙ = aₙ rⁿ` for `n = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct ScaledSeries {
    pub m: usize,
    pub scale: f64,
    pub b: Vec<f64>,
}

impl ScaledSeries {
    pub fn new(m: usize, n_max: usize, scale: f64) -> Self {
        let mut b = Vec::with_capacity(n_max + 1);
        let mut term = 1.0;
        for i in 0..=n_max.min(m) {
            if i > 0 {
                term *= scale / i as f64;
            }
            b.push(term);
        }
        let lift = scale.powi(m as i32 + 1);
        for t in m + 1..=n_max {
            let n = t - m - 1;
            let half: f64 = (0..n.div_ceil(2)).map(|k| b[k] * b[n - k]).sum();
            let mut conv = 2.0 * half;
            if n.is_multiple_of(2) {
                conv += b[n / 2] * b[n / 2];
            }
            let denom: f64 = (n + 1..=n + m + 1).map(|j| j as f64).product();
            b.push(lift * conv / denom);
        }
        ScaledSeries { m, scale, b }
    }

    /// Picks the scale from two short pilot runs, then computes `n_max` terms.
    pub fn auto(m: usize, n_max: usize) -> Self {
        let mut scale = 1.0;
        for pilot in [64, 512] {
            if pilot >= n_max {
                break;
            }
            let s = ScaledSeries::new(m, pilot, scale);
            scale = s.corrected_ratio(pilot - 1);
        }
        ScaledSeries::new(m, n_max, scale)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// `ln aₙ`.
    pub fn ln_a(&self, n: usize) -> f64 {
        self.b[n].ln() - n as f64 * self.scale.ln()
    }

    /// `(aₙ/aₙ₊₁)·((n+1)/n)ᵐ = ρ(1 + O(n⁻²))`.
    pub fn corrected_ratio(&self, n: usize) -> f64 {
        let r = self.scale * self.b[n] / self.b[n + 1];
        r * ((n as f64 + 1.0) / n as f64).powi(self.m as i32)
    }
}

fn neville_at_zero(h: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    for level in 1..p.len() {
        for i in 0..p.len() - level {
            p[i] = (h[i + level] * p[i] - h[i] * p[i + 1]) / (h[i + level] - h[i]);
        }
    }
    p[0]
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn estimate_from_series(series: &ScaledSeries, method: Method) -> f64 {
    let last = series.len() - 2;
    match method {
        Method::Ratio => series.corrected_ratio(last),
        Method::Aitken => {
            let (x0, x1, x2) =
                (series.corrected_ratio(last - 2), series.corrected_ratio(last - 1), series.corrected_ratio(last));
            let d = x2 - 2.0 * x1 + x0;
            if d.abs() < f64::EPSILON * x2.abs() {
                x2
            } else {
                x2 - (x2 - x1).powi(2) / d
            }
        }
        Method::Richardson => {
            let mut ns = Vec::new();
            let mut n = last;
            while n >= 10 * (series.m + 1) && ns.len() < 4 {
                ns.push(n);
                n /= 2;
            }
            let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
            let y: Vec<f64> = ns.iter().map(|&n| series.corrected_ratio(n)).collect();
            neville_at_zero(&h, &y)
        }
    }
}

/// Estimates `ρₘ` from `hₙ`, `n ≤ n_max`.
pub fn estimate_rho(m: usize, n_max: usize, method: Method) -> Result<GrowthEstimate> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let needed = method.min_terms(m);
    if n_max < needed {
        return Err(Error::InsufficientTerms { needed, got: n_max });
    }
    let series = ScaledSeries::auto(m, n_max);
    let rho = estimate_from_series(&series, method);
    let half: Vec<usize> = (n_max / 2..=n_max).collect();
    let xs: Vec<f64> = half.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = half.iter().map(|&n| series.ln_a(n) + n as f64 * rho.ln()).collect();
    let ln_fact = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    let c = (ln_fact(2 * m + 1) - ln_fact(m) - (m as f64 + 1.0) * rho.ln()).exp();
    Ok(GrowthEstimate {
        m,
        rho,
        rho_inverse: 1.0 / rho,
        polynomial_exponent: least_squares_slope(&xs, &ys),
        c,
        n_used: n_max,
        method,
    })
}

/// `rₙ = hₙ / (n! · (2m+1)!/(m!)² · nᵐ · ρ^{-n-m-1})`, which tends to 1 if the conjectured
/// asymptotic form holds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub m: usize,
    pub n_max: usize,
    pub rho: f64,
    /// `(n, rₙ)` for `n = 1..=n_max`.
    pub ratios: Vec<(usize, f64)>,
    /// Least-squares slope of `ln rₙ` against `ln n` over `n ∈ [n_max/10, n_max]`.
    pub slope_last_decade: f64,
    pub insufficient_range: bool,
}

impl ConjectureReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,r_n\n");
        for (n, r) in &self.ratios {
            out.push_str(&format!("{n},{r}\n"));
        }
        out
    }
}

/// Builds the report with the given `ρ`, or with [`estimate_rho`]'s default when `None`.
pub fn conjecture_report(m: usize, n_max: usize, rho: Option<f64>) -> Result<ConjectureReport> {
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    let insufficient_range = n_max < 10 * m.max(1) || n_max < 2;
    let rho = match rho {
        Some(r) => r,
        None if n_max >= Method::Aitken.min_terms(m) => estimate_rho(m, n_max, Method::Aitken)?.rho,
        None => ScaledSeries::auto(m, n_max.max(m + 3)).corrected_ratio(n_max.max(m + 3) - 1),
    };
    let series = ScaledSeries::auto(m, n_max);
    let ln_split = {
        let lf = |k: usize| (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
        lf(2 * m + 1) - 2.0 * lf(m)
    };
    let ratios: Vec<(usize, f64)> = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let ln_r = series.ln_a(n) - ln_split - m as f64 * nf.ln() + (nf + m as f64 + 1.0) * rho.ln();
            (n, ln_r.exp())
        })
        .collect();
    let window: Vec<&(usize, f64)> = ratios.iter().filter(|(n, _)| *n >= (n_max / 10).max(1)).collect();
    let slope_last_decade = if window.len() >= 2 {
        let xs: Vec<f64> = window.iter().map(|(n, _)| (*n as f64).ln()).collect();
        let ys: Vec<f64> = window.iter().map(|(_, r)| r.ln()).collect();
        least_squares_slope(&xs, &ys)
    } else {
        f64::NAN
    };
    Ok(ConjectureReport { m, n_max, rho, ratios, slope_last_decade, insufficient_range })
}

/// `ln(hₙ/n!)` from an exact count, for cross-checking the scaled series.
pub fn exact_ln_a(h: &BigUint, n: usize) -> f64 {
    let bits = h.bits();
    let shift = bits.saturating_sub(60);
    let top = (h >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2 - (1..=n).map(|j| (j as f64).ln()).sum::<f64>()
}

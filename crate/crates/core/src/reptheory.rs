//! Representation-theoretic dimension bounds for covariant codes: Weyl
//! dimensions of `U(d)` irreps, the minimality of the symmetric irrep at
//! fixed first row, and the resulting trade-off between transversality,
//! subsystem dimension and achievable error.

use num_bigint::BigUint;
use serde_json::json;
use statrs::function::gamma::ln_gamma;

use crate::bounds::{BoundDirection, BoundReport};
use crate::{Error, Result};

/// Largest `d + lambda1` for which binomials are kept as exact integers;
/// beyond this everything moves to log space.
pub const EXACT_BINOMIAL_LIMIT: u64 = 10_000;

/// A `U(d)` irrep label: non-increasing row lengths with the last row empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YoungDiagram {
    parts: Vec<u64>,
}

impl YoungDiagram {
    /// `parts` must be non-increasing and end in 0.
    pub fn new(parts: Vec<u64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("empty diagram".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument(format!(
                "row lengths must be non-increasing: {parts:?}"
            )));
        }
        if *parts.last().unwrap() != 0 {
            return Err(Error::InvalidArgument(
                "last row must be empty (shift the diagram)".into(),
            ));
        }
        Ok(YoungDiagram { parts })
    }

    /// Symmetric irrep `Sym^{lambda1}` of `U(d)`.
    pub fn symmetric(lambda1: u64, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument("need d >= 2".into()));
        }
        let mut parts = vec![0u64; d];
        parts[0] = lambda1;
        YoungDiagram::new(parts)
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn d(&self) -> usize {
        self.parts.len()
    }

    pub fn lambda1(&self) -> u64 {
        self.parts[0]
    }

    pub fn boxes(&self) -> u64 {
        self.parts.iter().sum()
    }
}

/// Exact irrep dimension `prod_{i<j} (l_i - l_j + j - i) / (j - i)`.
pub fn weyl_dimension(lam: &YoungDiagram) -> BigUint {
    let d = lam.d();
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..d {
        for j in (i + 1)..d {
            let hook = lam.parts[i] - lam.parts[j] + (j - i) as u64;
            num *= BigUint::from(hook);
            den *= BigUint::from((j - i) as u64);
        }
    }
    // The product is always an integer.
    num / den
}

/// Exact binomial `C(n, k)` as a big integer.
pub fn big_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut num = BigUint::from(1u32);
    for i in 0..k {
        num *= BigUint::from(n - i);
        num /= BigUint::from(i + 1);
    }
    // Dividing by i+1 at each step is exact: the running product is always
    // a binomial coefficient times the next factor.
    num
}

fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// The minimal dimension of any `U(d)` irrep with first row `lambda1`:
/// that of the symmetric irrep, `C(d - 1 + lambda1, d - 1)`.
pub fn min_dim_given_lambda1(lambda1: u64, d: u64) -> Result<BigUint> {
    if d < 1 {
        return Err(Error::InvalidArgument("need d >= 1".into()));
    }
    Ok(big_binomial(d - 1 + lambda1, d - 1))
}

/// Error metric selecting the charge-versus-error trade-off constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EkMetric {
    Worst,
    Average,
}

/// A minimal-subsystem-dimension bound, exact when small enough.
#[derive(Debug, Clone)]
pub struct DimBound {
    /// Required first-row length of the dominant subsystem's irrep.
    pub lambda1: u64,
    /// Exact value of `C(d_L - 1 + lambda1, d_L - 1)` when within the
    /// exact-arithmetic limit.
    pub dim: Option<BigUint>,
    /// Natural log of the bound (1e-9 relative accuracy when `dim` is None).
    pub ln_dim: f64,
    /// True when the bound does not exceed `d_L` and thus says nothing
    /// beyond the code being nontrivial.
    pub vacuous: bool,
}

/// Minimal dimension some physical subsystem must have for a transversal
/// `U(d_L)`-covariant code on `n` subsystems to reach error `eps`.
pub fn ek_min_subsystem_dim(d_l: u64, n: u64, eps: f64, metric: EkMetric) -> Result<DimBound> {
    if d_l < 2 {
        return Err(Error::InvalidArgument("need d_L >= 2".into()));
    }
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument(
            "need n >= 1 and eps > 0".into(),
        ));
    }
    let scale = match metric {
        EkMetric::Worst => 2.0 * n as f64,
        EkMetric::Average => (n * d_l) as f64,
    };
    let lambda1 = (1.0 / (scale * eps)).ceil().max(1.0);
    if lambda1 > 1e18 {
        return Err(Error::InvalidArgument(format!(
            "required charge {lambda1:.3e} too large to represent"
        )));
    }
    let lambda1 = lambda1 as u64;
    let (dim, ln_dim) = if d_l - 1 + lambda1 <= EXACT_BINOMIAL_LIMIT {
        let b = big_binomial(d_l - 1 + lambda1, d_l - 1);
        let ln = ln_binomial((d_l - 1 + lambda1) as f64, (d_l - 1) as f64);
        (Some(b), ln)
    } else {
        (
            None,
            ln_binomial((d_l - 1 + lambda1) as f64, (d_l - 1) as f64),
        )
    };
    let vacuous = match &dim {
        Some(b) => *b <= BigUint::from(d_l),
        None => false,
    };
    Ok(DimBound {
        lambda1,
        dim,
        ln_dim,
        vacuous,
    })
}

/// Lower bound on the achievable worst-case error of a transversal
/// `U(d_L)`-covariant code given the physical subsystem dimensions: the
/// larger of the closed-form exponential bound and the exact integer
/// inversion of the binomial dimension bound.
pub fn ek_eps_lower_from_dims(d_l: u64, n: u64, dims: &[f64]) -> Result<BoundReport> {
    if d_l < 2 || n == 0 || dims.is_empty() {
        return Err(Error::InvalidArgument(
            "need d_L >= 2, n >= 1 and at least one dimension".into(),
        ));
    }
    let max_dim = dims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max_dim >= 1.0) || !max_dim.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "invalid subsystem dimension {max_dim}"
        )));
    }
    let dm1 = (d_l - 1) as f64;
    // Closed form: eps >= 1 / (2 n (d_L - 1) (max_i d_i^{1/(d_L-1)} - 1)).
    let root = (max_dim.ln() / dm1).exp() - 1.0;
    let closed = if root > 0.0 {
        1.0 / (2.0 * n as f64 * dm1 * root)
    } else {
        f64::INFINITY
    };
    // Integer inversion: largest lambda1 with
    // C(d_L - 1 + lambda1, d_L - 1) <= max_dim (log-space, monotone).
    let ln_target = max_dim.ln() * (1.0 + 1e-12) + 1e-12;
    let fits = |lam: u64| ln_binomial((d_l - 1 + lam) as f64, dm1) <= ln_target + 1e-9;
    let integer = if fits(1) {
        let mut hi = 1u64;
        while fits(hi * 2) && hi < (1 << 60) {
            hi *= 2;
        }
        let mut lo = hi; // fits
        let mut hi = (hi * 2).min(1 << 61); // does not fit (or cap)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    } else {
        None
    };
    let integer_bound = integer.map(|lam| 1.0 / (2.0 * n as f64 * lam as f64));
    let value = match integer_bound {
        Some(ib) => ib.max(closed.min(f64::MAX)),
        None => closed.min(f64::MAX),
    };
    Ok(BoundReport {
        name: "transversal covariance error floor".into(),
        value,
        direction: BoundDirection::LowerOnEps,
        clamped: false,
        vacuous: false,
        inputs: json!({
            "d_l": d_l,
            "n": n,
            "max_dim": max_dim,
            "closed_form": closed,
            "integer_lambda1": integer,
            "integer_bound": integer_bound,
        }),
    })
}

/// Operator norm of the logical charge generator `T = diag(1, 0, ..., 0, -1)`
/// lifted to the symmetric irrep `Sym^{lambda1}` of `U(d)`: the largest
/// `|#first - #last|` over degree-`lambda1` monomial weights, which is
/// `lambda1` itself.
pub fn symmetric_irrep_generator_norm(lambda1: u64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument("need d >= 2".into()));
    }
    let mut worst = 0i64;
    // Weights of Sym^k are the compositions of k into d letters; only the
    // first and last letter counts matter for the eigenvalue.
    for a in 0..=lambda1 {
        for b in 0..=(lambda1 - a) {
            if d == 2 && a + b != lambda1 {
                continue;
            }
            worst = worst.max((a as i64 - b as i64).abs());
        }
    }
    Ok(worst as f64)
}

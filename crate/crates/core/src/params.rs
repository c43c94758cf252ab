//! Global parameter pack, truncation policy and dynamical parameters.

use crate::error::{Error, Result};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The elliptic parameters `(q, r, c, N)` with everything derived from them.
///
/// `p = q^{2r}`, `r* = r - c`, `p* = q^{2r*}`, `tau = -pi i / (r log q)` and
/// likewise `tau*`. Logarithms are principal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticParams {
    pub q: C64,
    pub r: f64,
    pub c: f64,
    pub n: usize,
    pub p: C64,
    pub r_star: f64,
    pub p_star: C64,
    pub tau: C64,
    pub tau_star: C64,
}

/// Build a validated parameter pack.
pub fn make_params(q: C64, r: f64, c: f64, n: usize) -> Result<EllipticParams> {
    if !(q.norm() < 1.0) || q.norm() == 0.0 || !q.is_finite() {
        return Err(Error::ParamDomain(format!("need 0 < |q| < 1, got |q| = {}", q.norm())));
    }
    if !r.is_finite() || !c.is_finite() || r <= 0.0 {
        return Err(Error::ParamDomain(format!("need finite r > 0, got r = {r}")));
    }
    if r <= c {
        return Err(Error::ParamDomain(format!("need r > c so that r* > 0, got r = {r}, c = {c}")));
    }
    if n < 2 {
        return Err(Error::ParamDomain(format!("need N >= 2, got N = {n}")));
    }
    let lnq = q.ln();
    let r_star = r - c;
    let i_pi = C64::new(0.0, PI);
    Ok(EllipticParams {
        q,
        r,
        c,
        n,
        p: (lnq * (2.0 * r)).exp(),
        r_star,
        p_star: (lnq * (2.0 * r_star)).exp(),
        tau: -i_pi / (lnq * r),
        tau_star: -i_pi / (lnq * r_star),
    })
}

impl EllipticParams {
    pub fn lnq(&self) -> C64 {
        self.q.ln()
    }

    /// `q^x` on the principal branch.
    pub fn qpow(&self, x: f64) -> C64 {
        (self.lnq() * x).exp()
    }

    /// `q^z` for complex exponent, principal branch.
    pub fn qpowc(&self, z: C64) -> C64 {
        (self.lnq() * z).exp()
    }

    /// Unstarred (`r`, `p`) or starred (`r*`, `p*`) view used by bracket evaluation.
    pub fn level(&self, star: Star) -> Level {
        match star {
            Star::Plain => Level { q: self.q, r: self.r, p: self.p, tau: self.tau },
            Star::Starred => Level { q: self.q, r: self.r_star, p: self.p_star, tau: self.tau_star },
        }
    }

    /// Same parameters with `c` replaced; used for the `c = 0` evaluation representation.
    pub fn with_c(&self, c: f64) -> Result<Self> {
        make_params(self.q, self.r, c, self.n)
    }

    pub fn is_level_one(&self) -> bool {
        (self.c - 1.0).abs() < 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Star {
    Plain,
    Starred,
}

/// One elliptic nome: the bracket `[v]` with `(q, r, p)`, or `[v]*` with `(q, r*, p*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub q: C64,
    pub r: f64,
    pub p: C64,
    pub tau: C64,
}

impl Level {
    pub fn qpowc(&self, z: C64) -> C64 {
        (self.q.ln() * z).exp()
    }
}

/// Series cutoff policy shared by every infinite product and mode sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub max_terms: usize,
    pub tail_tol: f64,
}

impl Truncation {
    pub fn new(max_terms: usize, tail_tol: f64) -> Result<Self> {
        if max_terms < 1 {
            return Err(Error::ParamDomain("max_terms must be >= 1".into()));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::ParamDomain("tail_tol must be > 0".into()));
        }
        Ok(Self { max_terms, tail_tol })
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self { max_terms: 400, tail_tol: 1e-18 }
    }
}

/// Dynamical parameters `s_1 .. s_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynParams {
    s: Vec<C64>,
}

impl DynParams {
    pub fn new(n: usize, s: Vec<C64>) -> Result<Self> {
        if n < 2 || s.len() != n - 1 {
            return Err(Error::ParamDomain(format!(
                "expected {} dynamical parameters for N = {n}, got {}",
                n.saturating_sub(1),
                s.len()
            )));
        }
        Ok(Self { s })
    }

    pub fn n(&self) -> usize {
        self.s.len() + 1
    }

    pub fn values(&self) -> &[C64] {
        &self.s
    }

    /// Table of all interval sums, ready for R-matrix assembly.
    pub fn sums(&self) -> IntervalSums {
        let n = self.n();
        let mut t = vec![C64::new(0.0, 0.0); n * n];
        for j in 1..=n {
            let mut acc = C64::new(0.0, 0.0);
            for l in (j + 1)..=n {
                acc += self.s[l - 2];
                t[(j - 1) * n + (l - 1)] = acc;
            }
        }
        IntervalSums { n, table: t }
    }
}

/// `s_{j,l} = sum_{m=j}^{l-1} s_m`.
pub fn interval_sum(s: &DynParams, j: usize, l: usize) -> Result<C64> {
    let n = s.n();
    if j >= l {
        return Err(Error::IndexOrder { j, l });
    }
    if j < 1 || l > n {
        return Err(Error::IndexBounds { index: if j < 1 { j } else { l }, max: n });
    }
    Ok(s.s[(j - 1)..(l - 1)].iter().sum())
}

/// The interval sums `s_{j,l}` (`j < l`) as consumed by the R-matrix.
///
/// Weight shifts act on this table directly rather than on the individual `s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSums {
    n: usize,
    table: Vec<C64>,
}

impl IntervalSums {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `s_{j,l}` for `1 <= j < l <= N` (panics on out-of-range indices).
    pub fn get(&self, j: usize, l: usize) -> C64 {
        assert!(j < l && j >= 1 && l <= self.n, "interval ({j},{l}) out of range");
        self.table[(j - 1) * self.n + (l - 1)]
    }

    /// Shift by the weight of basis vector `e_m`: `s_{j,l} -> s_{j,l} + d_{j,m} - d_{l,m}`.
    pub fn shifted(&self, m: usize) -> IntervalSums {
        let mut out = self.clone();
        for j in 1..=self.n {
            for l in (j + 1)..=self.n {
                let d = (j == m) as i32 - (l == m) as i32;
                out.table[(j - 1) * self.n + (l - 1)] += d as f64;
            }
        }
        out
    }
}

/// Weight-shift action of `h` on basis vector `e_m`, applied to all interval sums.
pub fn shift_dynparams(s: &IntervalSums, m: usize) -> Result<IntervalSums> {
    if m < 1 || m > s.n {
        return Err(Error::IndexBounds { index: m, max: s.n });
    }
    Ok(s.shifted(m))
}

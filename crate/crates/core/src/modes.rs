//! Boson oscillators `a_{j,m}`, `b_{j,m}`, `B^j_m`, their commutators, and the
//! normal-ordering contraction that turns two mode specs into an OPE coefficient.

use crate::error::{Error, Result};
use crate::params::{EllipticParams, Truncation};
use crate::scaled::{qint_sc, Sc};
use crate::C64;

/// `[x]_q = (q^x - q^{-x})/(q - q^{-1})` for real `x`.
pub fn qint(x: f64, params: &EllipticParams) -> C64 {
    if x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let q = params.q;
    (params.qpow(x) - params.qpow(-x)) / (q - q.inv())
}

/// The `sl_N` Cartan matrix entry.
pub fn cartan(i: usize, j: usize) -> f64 {
    match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    }
}

fn check_index(i: usize, max: usize) -> Result<()> {
    if i < 1 || i > max {
        return Err(Error::IndexBounds { index: i, max });
    }
    Ok(())
}

fn check_mode(m: i64) -> Result<()> {
    if m == 0 {
        return Err(Error::ParamDomain("mode index must be nonzero".into()));
    }
    Ok(())
}

/// `[a_{i,m}, a_{j,n}] = [A_ij m][cm]/m q^{-c|m|} delta_{m+n,0}`.
pub fn comm_a(i: usize, j: usize, m: i64, n: i64, params: &EllipticParams) -> Result<C64> {
    check_index(i, params.n - 1)?;
    check_index(j, params.n - 1)?;
    check_mode(m)?;
    check_mode(n)?;
    if m + n != 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mf = m as f64;
    Ok(qint(cartan(i, j) * mf, params) * qint(params.c * mf, params) / mf * params.qpow(-params.c * mf.abs()))
}

/// Multiplier `lambda` with `b_{j,m} = lambda a_{j,m}`.
pub fn b_from_a(j: usize, m: i64, params: &EllipticParams) -> Result<C64> {
    check_index(j, params.n - 1)?;
    check_mode(m)?;
    let mf = m as f64;
    if m > 0 {
        Ok(qint(params.r_star * mf, params) / qint(params.r * mf, params))
    } else {
        Ok(params.qpow(params.c * mf.abs()))
    }
}

/// `B^j_m` expanded over `b_{1,m} .. b_{N-1,m}`.
pub fn b_in_b_basis(j: usize, m: i64, params: &EllipticParams) -> Result<Vec<C64>> {
    let n = params.n;
    check_index(j, n)?;
    check_mode(m)?;
    let mf = m as f64;
    let pre = mf / (qint(mf, params) * qint(n as f64 * mf, params));
    let qnm = params.qpow(n as f64 * mf);
    Ok((1..n)
        .map(|k| {
            if k < j {
                pre * qint(k as f64 * mf, params)
            } else {
                -pre * qnm * qint((n - k) as f64 * mf, params)
            }
        })
        .collect())
}

/// `sum_j q^{2jm} B^j_m` in the `b` basis; identically zero.
pub fn constraint_vector(m: i64, params: &EllipticParams) -> Result<Vec<C64>> {
    let mut acc = vec![C64::new(0.0, 0.0); params.n - 1];
    for j in 1..=params.n {
        let w = params.qpow(2.0 * (j as f64) * m as f64);
        for (a, b) in acc.iter_mut().zip(b_in_b_basis(j, m, params)?) {
            *a += w * b;
        }
    }
    Ok(acc)
}

/// Largest single term `|q^{2jm} B^j_m|` entering [`constraint_vector`], the scale its cancellation is measured against.
pub fn constraint_scale(m: i64, params: &EllipticParams) -> Result<f64> {
    let mut scale: f64 = 0.0;
    for j in 1..=params.n {
        let w = params.qpow(2.0 * (j as f64) * m as f64);
        for b in b_in_b_basis(j, m, params)? {
            scale = scale.max((w * b).norm());
        }
    }
    Ok(scale)
}

/// `|constraint_vector| / constraint_scale`.
pub fn constraint_residual(m: i64, params: &EllipticParams) -> Result<f64> {
    let v = constraint_vector(m, params)?.iter().map(|x| x.norm()).fold(0.0, f64::max);
    Ok(v / constraint_scale(m, params)?)
}

fn sgn(x: i64) -> f64 {
    x.signum() as f64
}

/// Closed-form `[B^j_m, B^k_{m'}]`.
pub fn comm_b_closed(j: usize, k: usize, m: i64, mp: i64, params: &EllipticParams) -> Result<C64> {
    check_index(j, params.n)?;
    check_index(k, params.n)?;
    check_mode(m)?;
    check_mode(mp)?;
    if m + mp != 0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let mf = m as f64;
    let nf = params.n as f64;
    let pre = qint(params.r_star * mf, params) * qint(params.c * mf, params) * mf
        / (qint(params.r * mf, params) * qint(mf, params) * qint(nf * mf, params));
    let tail = if j == k {
        qint((nf - 1.0) * mf, params)
    } else {
        -params.qpow(-mf * nf * sgn(j as i64 - k as i64)) * qint(mf, params)
    };
    Ok(pre * tail)
}

/// `[B^j_m, B^k_{m'}]` by bilinear expansion through the `b` and `a` oscillators.
pub fn comm_b_derived(j: usize, k: usize, m: i64, mp: i64, params: &EllipticParams) -> Result<C64> {
    let bj = b_in_b_basis(j, m, params)?;
    let bk = b_in_b_basis(k, mp, params)?;
    let lam = b_from_a(1, m, params)? * b_from_a(1, mp, params)?;
    let mut acc = C64::new(0.0, 0.0);
    for (i1, x) in bj.iter().enumerate() {
        for (i2, y) in bk.iter().enumerate() {
            acc += x * y * lam * comm_a(i1 + 1, i2 + 1, m, mp, params)?;
        }
    }
    Ok(acc)
}

/// `[B^j_m, B^k_{-m}]` in scaled form, usable for `m` in the hundreds.
pub fn comm_b_scaled(j: usize, k: usize, m: i64, params: &EllipticParams) -> Sc {
    let lnq = params.lnq();
    let mf = m as f64;
    let nf = params.n as f64;
    let pre = qint_sc(params.r_star * mf, lnq) * qint_sc(params.c * mf, lnq) * Sc::from(mf)
        / (qint_sc(params.r * mf, lnq) * qint_sc(mf, lnq) * qint_sc(nf * mf, lnq));
    let tail = if j == k {
        qint_sc((nf - 1.0) * mf, lnq)
    } else {
        -(Sc::from_log(lnq * (-mf * nf * sgn(j as i64 - k as i64))) * qint_sc(mf, lnq))
    };
    pre * tail
}

/// The commutator table `(j, k, m, m') -> [B^j_m, B^k_{m'}]` for one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct CommTable {
    params: EllipticParams,
}

impl CommTable {
    pub fn new(params: &EllipticParams) -> Self {
        Self { params: *params }
    }

    pub fn get(&self, j: usize, k: usize, m: i64, mp: i64) -> Result<C64> {
        comm_b_closed(j, k, m, mp, &self.params)
    }
}

/// The scalar multiplying a mode vector: `sign * prod [a_i m] / prod [b_i m]`, times `1/m` if requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeScalar {
    pub sign: f64,
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub over_m: bool,
}

impl ModeScalar {
    pub fn eval_sc(&self, m: i64, params: &EllipticParams) -> Sc {
        let lnq = params.lnq();
        let mf = m as f64;
        let mut acc = Sc::from(self.sign);
        for a in &self.num {
            acc = acc * qint_sc(a * mf, lnq);
        }
        for b in &self.den {
            acc = acc / qint_sc(b * mf, lnq);
        }
        if self.over_m {
            acc = acc / Sc::from(mf);
        }
        acc
    }
}

/// A current `:exp(sum_m coeff(m) . B_m (zeta z)^{-m}):` restricted to its oscillator part.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub name: String,
    pub scalar: ModeScalar,
    /// Coefficients over `B^1 .. B^N`.
    pub vector: Vec<C64>,
    pub zeta: C64,
}

impl ModeSpec {
    /// The `B`-basis coefficient vector of mode `m`.
    pub fn coeff(&self, m: i64, params: &EllipticParams) -> Vec<C64> {
        let s = self.scalar.eval_sc(m, params).value();
        self.vector.iter().map(|v| v * s).collect()
    }

    fn with(name: String, sign: f64, num: &[f64], den: &[f64], over_m: bool, vector: Vec<C64>, zeta: C64) -> Self {
        ModeSpec {
            name,
            scalar: ModeScalar { sign, num: num.to_vec(), den: den.to_vec(), over_m },
            vector,
            zeta,
        }
    }
}

fn unit(n: usize, j: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[j - 1] = C64::new(1.0, 0.0);
    v
}

/// `-B^j + B^{j+1}`.
fn simple_root(n: usize, j: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[j - 1] = C64::new(-1.0, 0.0);
    v[j] = C64::new(1.0, 0.0);
    v
}

/// Constructors for the currents appearing in the OPE catalog.
pub mod spec {
    use super::*;

    fn idx(j: usize, max: usize) -> Result<()> {
        check_index(j, max)
    }

    /// `k_j(zeta z)`.
    pub fn k(j: usize, zeta: C64, p: &EllipticParams) -> Result<ModeSpec> {
        idx(j, p.n)?;
        Ok(ModeSpec::with(format!("k_{j}"), 1.0, &[1.0], &[p.r_star], true, unit(p.n, j), zeta))
    }

    /// `k_j(zeta z)^{-1}`.
    pub fn k_inv(j: usize, zeta: C64, p: &EllipticParams) -> Result<ModeSpec> {
        idx(j, p.n)?;
        Ok(ModeSpec::with(format!("k_{j}^-1"), -1.0, &[1.0], &[p.r_star], true, unit(p.n, j), zeta))
    }

    /// The oscillator part of `K^+_j(z)`: `k_j(q^{r+1} z)`.
    pub fn k_plus(j: usize, p: &EllipticParams) -> Result<ModeSpec> {
        let mut s = k(j, p.qpow(p.r + 1.0), p)?;
        s.name = format!("K+_{j}");
        Ok(s)
    }

    /// `k_j(q^{-(r+1)} z)`, the offset seen when `K^+_j` stands to the right.
    pub fn k_plus_right(j: usize, p: &EllipticParams) -> Result<ModeSpec> {
        let mut s = k(j, p.qpow(-(p.r + 1.0)), p)?;
        s.name = format!("K+_{j}");
        Ok(s)
    }

    /// `psi^+_j(z)` at `zeta = q^{N-j+r-c/2}`.
    pub fn psi_plus(j: usize, p: &EllipticParams) -> Result<ModeSpec> {
        idx(j, p.n - 1)?;
        let zeta = p.qpow(p.n as f64 - j as f64 + p.r - p.c / 2.0);
        Ok(ModeSpec::with(format!("psi+_{j}"), -1.0, &[1.0], &[p.r_star], true, simple_root(p.n, j), zeta))
    }

    /// Oscillator part of the type-I vertex operator `Phi_N`.
    pub fn phi_n(p: &EllipticParams) -> ModeSpec {
        ModeSpec::with("phi_N".into(), -1.0, &[], &[], true, unit(p.n, p.n), C64::new(1.0, 0.0))
    }

    /// Oscillator part of the type-II vertex operator `Psi*_N`.
    pub fn psi_star_n(p: &EllipticParams) -> ModeSpec {
        ModeSpec::with("psi*_N".into(), 1.0, &[p.r], &[p.r_star], true, unit(p.n, p.n), C64::new(1.0, 0.0))
    }

    /// Oscillator part of `e_j(z)` at level one.
    pub fn e(j: usize, p: &EllipticParams) -> Result<ModeSpec> {
        idx(j, p.n - 1)?;
        let zeta = p.qpow(p.n as f64 - j as f64);
        Ok(ModeSpec::with(format!("e_{j}"), -1.0, &[p.r], &[p.r_star], true, simple_root(p.n, j), zeta))
    }

    /// Oscillator part of `f_j(z)` at level one.
    pub fn f(j: usize, p: &EllipticParams) -> Result<ModeSpec> {
        idx(j, p.n - 1)?;
        let zeta = p.qpow(p.n as f64 - j as f64);
        Ok(ModeSpec::with(format!("f_{j}"), 1.0, &[], &[], true, simple_root(p.n, j), zeta))
    }
}

/// Outcome of the contraction oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub value: C64,
    /// Geometric bound on the dropped part of the exponent.
    pub tail: f64,
    /// Estimated `lim |t_m|^{1/m}` of the exponent series.
    pub ratio: f64,
    pub terms: usize,
}

/// Per-mode contraction coefficients `A.coeff(m) . [B_m, B_{-m}] . B.coeff(-m)`, without the `y^m`.
pub fn contraction_coefficients(a: &ModeSpec, b: &ModeSpec, params: &EllipticParams, max_terms: usize) -> Vec<Sc> {
    let n = params.n;
    (1..=max_terms as i64)
        .map(|m| {
            let s = a.scalar.eval_sc(m, params) * b.scalar.eval_sc(-m, params);
            if s.is_zero() {
                return Sc::ZERO;
            }
            let mut inner = Sc::ZERO;
            for j in 1..=n {
                let vj = a.vector[j - 1];
                if vj == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 1..=n {
                    let vk = b.vector[k - 1];
                    if vk == C64::new(0.0, 0.0) {
                        continue;
                    }
                    inner = inner + Sc::new(vj * vk) * comm_b_scaled(j, k, m, params);
                }
            }
            s * inner
        })
        .collect()
}

/// Estimate `lim |t_m|^{1/m}` from log-magnitudes at `M/2` and `M`, which cancels constant prefactors.
fn effective_ratio(ln_t: &[f64]) -> f64 {
    let m = ln_t.len();
    if m < 4 {
        return ln_t.last().map(|l| l.exp()).unwrap_or(0.0);
    }
    // Skip exact zeros (e.g. `c = 0`) by scanning back to the last finite term in each half.
    let last = (m / 2..m).rev().find(|&i| ln_t[i].is_finite());
    let mid = (m / 4..m / 2).rev().find(|&i| ln_t[i].is_finite());
    match (mid, last) {
        (Some(a), Some(b)) => ((ln_t[b] - ln_t[a]) / (b - a) as f64).exp(),
        _ => 0.0,
    }
}

/// `<A(z1) B(z2)>` as a power series in `x = z2/z1`.
pub fn ope_from_modes(a: &ModeSpec, b: &ModeSpec, x: C64, params: &EllipticParams, t: &Truncation) -> Result<OracleResult> {
    let coeffs = contraction_coefficients(a, b, params, t.max_terms);
    ope_from_coefficients(&coeffs, x * b.zeta / a.zeta)
}

/// Sum `exp(sum_m t_m y^m)` from precomputed coefficients.
pub fn ope_from_coefficients(coeffs: &[Sc], y: C64) -> Result<OracleResult> {
    if y == C64::new(0.0, 0.0) {
        return Ok(OracleResult { value: C64::new(1.0, 0.0), tail: 0.0, ratio: 0.0, terms: 0 });
    }
    let ly = y.ln();
    let terms: Vec<Sc> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| *c * Sc::from_log(ly * (i as f64 + 1.0)))
        .collect();
    let ln_t: Vec<f64> = terms.iter().map(Sc::ln_abs).collect();
    let ratio = effective_ratio(&ln_t);
    if !(ratio < 1.0) {
        return Err(Error::Divergence { ratio });
    }
    let sum: C64 = terms.iter().map(Sc::value).sum();
    let last = ln_t.last().copied().unwrap_or(f64::NEG_INFINITY);
    let tail = last.exp() * ratio / (1.0 - ratio);
    Ok(OracleResult { value: sum.exp(), tail, ratio, terms: terms.len() })
}

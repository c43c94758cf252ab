//! The face-type dynamical R-matrix `R+(v, s) = rho+(v) Rbar(v, s)` and the scalar
//! functions that accompany it.

use crate::bracket::Bracket;
use crate::error::{Error, Result};
use crate::ope::rho_plus_product;
use crate::params::{DynParams, EllipticParams, IntervalSums, Star, Truncation};
use crate::qseries::{curly, qpoch, theta_big};
use crate::C64;
use std::ops::{Mul, Sub};

/// Points where `|[s_{j,l}]|` or `|[u+1]|` falls below this are rejected.
pub const POLE_GUARD: f64 = 1e-10;

/// The four Boltzmann weights for one nome.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    br: Bracket,
    pub guard: f64,
}

impl Weights {
    pub fn new(params: &EllipticParams, star: Star, t: &Truncation) -> Result<Self> {
        Ok(Self { br: Bracket::new(params.level(star), t)?, guard: POLE_GUARD })
    }

    pub fn bracket(&self) -> &Bracket {
        &self.br
    }

    fn den_u(&self, u: C64) -> Result<C64> {
        self.br.eval_guarded(u + 1.0, "u+1", self.guard)
    }

    fn den_s(&self, s: C64) -> Result<C64> {
        self.br.eval_guarded(s, "s", self.guard)
    }

    /// `b(u,s) = [s+1][s-1][u] / ([s]^2 [u+1])`.
    pub fn b(&self, u: C64, s: C64) -> Result<C64> {
        let ds = self.den_s(s)?;
        Ok(self.br.eval(s + 1.0) * self.br.eval(s - 1.0) * self.br.eval(u) / (ds * ds * self.den_u(u)?))
    }

    /// `bbar(u) = [u] / [u+1]`.
    pub fn bbar(&self, u: C64) -> Result<C64> {
        Ok(self.br.eval(u) / self.den_u(u)?)
    }

    /// `c(u,s) = [1][s+u] / ([s][u+1])`.
    pub fn c(&self, u: C64, s: C64) -> Result<C64> {
        Ok(self.br.eval(C64::new(1.0, 0.0)) * self.br.eval(s + u) / (self.den_s(s)? * self.den_u(u)?))
    }

    /// `cbar(u,s) = [1][s-u] / ([s][u+1])`.
    pub fn cbar(&self, u: C64, s: C64) -> Result<C64> {
        Ok(self.br.eval(C64::new(1.0, 0.0)) * self.br.eval(s - u) / (self.den_s(s)? * self.den_u(u)?))
    }
}

pub fn comp_b(u: C64, s: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Weights::new(params, Star::Plain, t)?.b(u, s)
}

pub fn comp_bbar(u: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Weights::new(params, Star::Plain, t)?.bbar(u)
}

pub fn comp_c(u: C64, s: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Weights::new(params, Star::Plain, t)?.c(u, s)
}

pub fn comp_cbar(u: C64, s: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Weights::new(params, Star::Plain, t)?.cbar(u, s)
}

fn nome(params: &EllipticParams, star: Star) -> (C64, f64) {
    let l = params.level(star);
    (l.p, l.r)
}

/// `z^a` with `z = q^{2v}`, taken as `q^{2va}` so no branch of `log z` is involved.
fn zpow(v: C64, a: f64, params: &EllipticParams) -> C64 {
    params.qpowc(v * (2.0 * a))
}

/// `rho+(v)`, or `rho+*(v)` with `r -> r*` for [`Star::Starred`].
pub fn rho_plus_at(v: C64, params: &EllipticParams, star: Star, t: &Truncation) -> Result<C64> {
    let n = params.n as f64;
    let (_, r) = nome(params, star);
    let prod = rho_plus_product(params.qpowc(v * 2.0), params, star, t)?;
    Ok(params.qpow((n - 1.0) / n) * zpow(v, (n - 1.0) / (r * n), params) * prod)
}

pub fn rho_plus(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    rho_plus_at(v, params, Star::Plain, t)
}

pub fn rho_star(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    rho_plus_at(v, params, Star::Starred, t)
}

/// `rho(v) = rho+(v) / rho+*(v)`.
pub fn rho(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Ok(rho_plus(v, params, t)? / rho_star(v, params, t)?)
}

/// `phi(v) = (q^r z)^{(N+1)/(rN)} [v-1] {pz}{pq^{2N}z}{q^{2N+2}/z}{q^{-2}/z} / ({pq^{2N+2}z}{pq^{-2}z}{1/z}{q^{2N}/z})`.
pub fn phi_fn(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let n = params.n as f64;
    let (p, r) = (params.p, params.r);
    let z = params.qpowc(v * 2.0);
    let q = |e: f64| params.qpow(e);
    let c = |w: C64| curly(w, params, Star::Plain, t);
    let br = Bracket::plain(params, t)?;
    let prod = c(p * z)? * c(p * q(2.0 * n) * z)? * c(q(2.0 * n + 2.0) / z)? * c(q(-2.0) / z)?
        / (c(p * q(2.0 * n + 2.0) * z)? * c(p * q(-2.0) * z)? * c(z.inv())? * c(q(2.0 * n) / z)?);
    let mono = q((n + 1.0) / n) * zpow(v, (n + 1.0) / (r * n), params);
    Ok(mono * br.eval(v - 1.0) * prod)
}

/// `|rho+(v) phi(v) / [v+1] - 1|`.
///
/// The products collapse to `Theta_p(q^{-2}/z) / Theta_p(q^2/z)` against the monomials, which
/// leaves `rho+ phi = +[v+1]`; the form with a minus sign is kept as [`rho_phi_minus_sign_residual`].
pub fn rho_phi_residual(v: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    Ok((rho_phi_ratio(v, params, t)? - 1.0).norm())
}

/// `|rho+(v) phi(v) / (-[v+1]) - 1|`, which sits at 2 identically.
pub fn rho_phi_minus_sign_residual(v: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    Ok((-rho_phi_ratio(v, params, t)? - 1.0).norm())
}

fn rho_phi_ratio(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let br = Bracket::plain(params, t)?;
    let den = br.eval_guarded(v + 1.0, "v+1", POLE_GUARD)?;
    Ok(rho_plus(v, params, t)? * phi_fn(v, params, t)? / den)
}

/// A dense operator on `(C^N)^{⊗order}`, stored row-major as `[out, in]`.
///
/// Basis multi-index `(a_1, .., a_k)` (1-based) sits at `sum_i (a_i - 1) N^{k-i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTensor {
    pub n: usize,
    pub order: usize,
    pub data: Vec<C64>,
}

impl FaceTensor {
    pub fn zeros(n: usize, order: usize) -> Self {
        let d = n.pow(order as u32);
        Self { n, order, data: vec![C64::new(0.0, 0.0); d * d] }
    }

    pub fn identity(n: usize, order: usize) -> Self {
        let mut t = Self::zeros(n, order);
        for i in 0..t.dim() {
            t.set(i, i, C64::new(1.0, 0.0));
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.order as u32)
    }

    /// Flat index of a 1-based multi-index.
    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &a| acc * self.n + (a - 1))
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim() + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: C64) {
        let d = self.dim();
        self.data[row * d + col] = v;
    }

    /// Entry `<out| T |in>` addressed by 1-based multi-indices.
    pub fn entry(&self, out: &[usize], inp: &[usize]) -> C64 {
        self.get(self.index(out), self.index(inp))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, order: self.order, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// Block `(k, l)` of the first tensor factor, as an operator on the remaining factors.
    pub fn aux_block(&self, k: usize, l: usize) -> FaceTensor {
        assert!(self.order >= 2);
        let mut out = FaceTensor::zeros(self.n, self.order - 1);
        let d = out.dim();
        for i in 0..d {
            for j in 0..d {
                out.set(i, j, self.get((k - 1) * d + i, (l - 1) * d + j));
            }
        }
        out
    }

    /// `max |self - other| / max(|self|, |other|)`.
    pub fn rel_diff(&self, other: &FaceTensor) -> f64 {
        let num = (self - other).max_abs();
        let den = self.max_abs().max(other.max_abs());
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

impl Mul for &FaceTensor {
    type Output = FaceTensor;
    fn mul(self, o: &FaceTensor) -> FaceTensor {
        assert_eq!((self.n, self.order), (o.n, o.order));
        let d = self.dim();
        let mut out = FaceTensor::zeros(self.n, self.order);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * o.data[k * d + j];
                }
            }
        }
        out
    }
}

impl Sub for &FaceTensor {
    type Output = FaceTensor;
    fn sub(self, o: &FaceTensor) -> FaceTensor {
        FaceTensor {
            n: self.n,
            order: self.order,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// The permutation `P(e_a ⊗ e_b) = e_b ⊗ e_a`.
pub fn permutation(n: usize) -> FaceTensor {
    let mut t = FaceTensor::zeros(n, 2);
    for a in 1..=n {
        for b in 1..=n {
            let (o, i) = (t.index(&[b, a]), t.index(&[a, b]));
            t.set(o, i, C64::new(1.0, 0.0));
        }
    }
    t
}

/// `Rbar(v, s)` from precomputed interval sums and a weight evaluator.
pub fn rbar_with(w: &Weights, v: C64, s: &IntervalSums) -> Result<FaceTensor> {
    let n = s.n();
    let mut t = FaceTensor::zeros(n, 2);
    for j in 1..=n {
        let d = t.index(&[j, j]);
        t.set(d, d, C64::new(1.0, 0.0));
    }
    let bbar = w.bbar(v)?;
    for j in 1..=n {
        for l in (j + 1)..=n {
            let sjl = s.get(j, l);
            let (jl, lj) = (t.index(&[j, l]), t.index(&[l, j]));
            // E_jj⊗E_ll and E_ll⊗E_jj are diagonal.
            t.set(jl, jl, w.b(v, sjl)?);
            t.set(lj, lj, bbar);
            // E_jl⊗E_lj sends e_l⊗e_j to e_j⊗e_l.
            t.set(jl, lj, w.c(v, sjl)?);
            t.set(lj, jl, w.cbar(v, sjl)?);
        }
    }
    Ok(t)
}

pub fn rbar(v: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<FaceTensor> {
    check_n(s, params)?;
    rbar_with(&Weights::new(params, Star::Plain, t)?, v, &s.sums())
}

fn check_n(s: &DynParams, params: &EllipticParams) -> Result<()> {
    if s.n() != params.n {
        return Err(Error::ParamDomain(format!("dynamical parameters are for N = {}, params have N = {}", s.n(), params.n)));
    }
    Ok(())
}

/// `R+(v, s) = rho+(v) Rbar(v, s)`.
pub fn rplus(v: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<FaceTensor> {
    Ok(rbar(v, s, params, t)?.scale(rho_plus(v, params, t)?))
}

/// `R+(v, s)` from interval sums, for shifted arguments.
pub fn rplus_sums(v: C64, s: &IntervalSums, params: &EllipticParams, t: &Truncation) -> Result<FaceTensor> {
    let w = Weights::new(params, Star::Plain, t)?;
    Ok(rbar_with(&w, v, s)?.scale(rho_plus(v, params, t)?))
}

/// `R*(v, s) = rho+*(v) Rbar*(v, s)` with every bracket starred.
pub fn rstar(v: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<FaceTensor> {
    check_n(s, params)?;
    let w = Weights::new(params, Star::Starred, t)?;
    Ok(rbar_with(&w, v, &s.sums())?.scale(rho_star(v, params, t)?))
}

/// `b bbar - c cbar` for the `(j, l)` ice-rule block; a conditioning diagnostic.
pub fn ice_determinant(v: C64, s: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let w = Weights::new(params, Star::Plain, t)?;
    Ok(w.b(v, s)? * w.bbar(v)? - w.c(v, s)? * w.cbar(v, s)?)
}

/// Scalar constants and functions attached to one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub kappa: C64,
    pub c_n: C64,
    pub g_n: C64,
}

pub fn constants(params: &EllipticParams, t: &Truncation) -> Result<Constants> {
    Ok(Constants {
        kappa: crate::ope::kappa(params, t)?,
        c_n: crate::ope::c_n(params, t)?,
        g_n: g_n(params, t)?,
    })
}

/// `g_N = (q^2; q^{2N}) / (q^{2N}; q^{2N})`.
pub fn g_n(params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let b = params.qpow(2.0 * params.n as f64);
    Ok(qpoch(params.qpow(2.0), b, t)? / qpoch(b, b, t)?)
}

/// `mu(v)`, or `mu*(v)` with `r -> r*`.
pub fn mu(v: C64, params: &EllipticParams, star: Star, t: &Truncation) -> Result<C64> {
    let n = params.n as f64;
    let (p, r) = nome(params, star);
    let z = params.qpowc(v * 2.0);
    let q = |e: f64| params.qpow(e);
    let c = |w: C64| curly(w, params, star, t);
    let prod = c(p * q(2.0 * n - 2.0) * z)? * c(q(2.0) * z)? * c(p / z)? * c(q(2.0 * n) / z)?
        / (c(p * z)? * c(q(2.0 * n) * z)? * c(p * q(2.0 * n - 2.0) / z)? * c(q(2.0) / z)?);
    Ok(zpow(v, (1.0 / r - 1.0) * (n - 1.0) / n, params) * prod)
}

/// `chi(v) = Theta_{q^{2N}}(q z) / Theta_{q^{2N}}(q / z)`.
pub fn chi(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let b = params.qpow(2.0 * params.n as f64);
    let z = params.qpowc(v * 2.0);
    let q = params.q;
    Ok(theta_big(q * z, b, t)? / theta_big(q / z, b, t)?)
}

/// `|rho+(v)/rho+*(v) / ((mu(v)/mu*(v)) chi(1/2 - v)/chi(1/2 + v)) - 1|`, reported only.
pub fn rho_tilde_candidate_residual(v: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    let lhs = rho(v, params, t)?;
    let half = C64::new(0.5, 0.0);
    let rhs = mu(v, params, Star::Plain, t)? / mu(v, params, Star::Starred, t)? * chi(half - v, params, t)?
        / chi(half + v, params, t)?;
    Ok((lhs / rhs - 1.0).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn pr(c: f64, n: usize) -> EllipticParams {
        make_params(C64::new(0.5, 0.0), 7.3, c, n).unwrap()
    }

    fn cx(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn weights_at_zero() {
        let p = pr(0.0, 2);
        let t = Truncation::default();
        let s = cx(1.7);
        assert!(comp_b(cx(0.0), s, &p, &t).unwrap().norm() < 1e-15);
        assert!(comp_bbar(cx(0.0), &p, &t).unwrap().norm() < 1e-15);
        assert!((comp_c(cx(0.0), s, &p, &t).unwrap() - 1.0).norm() < 1e-14);
        assert!((comp_cbar(cx(0.0), s, &p, &t).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn pole_guard_trips() {
        let p = pr(0.0, 2);
        let t = Truncation::default();
        assert!(matches!(comp_b(cx(0.3), cx(0.0), &p, &t), Err(Error::Pole { .. })));
        assert!(matches!(comp_bbar(cx(-1.0), &p, &t), Err(Error::Pole { .. })));
    }

    #[test]
    fn rbar_at_zero_is_permutation() {
        for n in [2, 3, 4] {
            let p = pr(1.0, n);
            let s = DynParams::new(n, (1..n).map(|j| cx(1.7 + 0.3 * j as f64)).collect()).unwrap();
            let r = rbar(cx(0.0), &s, &p, &Truncation::default()).unwrap();
            assert!(r.rel_diff(&permutation(n)) < 1e-12);
        }
    }

    #[test]
    fn weight_conservation() {
        let p = pr(1.0, 3);
        let s = DynParams::new(3, vec![cx(1.7), cx(2.2)]).unwrap();
        let r = rbar(cx(0.3), &s, &p, &Truncation::default()).unwrap();
        for a in 1..=3 {
            for b in 1..=3 {
                for c in 1..=3 {
                    for d in 1..=3 {
                        let mut x = [a, b];
                        let mut y = [c, d];
                        x.sort_unstable();
                        y.sort_unstable();
                        if x != y {
                            assert_eq!(r.entry(&[a, b], &[c, d]), cx(0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn n2_spot_entries() {
        let p = pr(0.0, 2);
        let t = Truncation::default();
        let s = DynParams::new(2, vec![cx(1.7)]).unwrap();
        let (v, sv) = (cx(0.3), cx(1.7));
        let r = rbar(v, &s, &p, &t).unwrap();
        assert_eq!(r.entry(&[1, 2], &[1, 2]), comp_b(v, sv, &p, &t).unwrap());
        assert_eq!(r.entry(&[2, 1], &[2, 1]), comp_bbar(v, &p, &t).unwrap());
        assert_eq!(r.entry(&[1, 2], &[2, 1]), comp_c(v, sv, &p, &t).unwrap());
        assert_eq!(r.entry(&[2, 1], &[1, 2]), comp_cbar(v, sv, &p, &t).unwrap());
        assert_eq!(r.entry(&[1, 1], &[1, 1]), cx(1.0));
    }

    #[test]
    fn rho_star_collapses_at_c0() {
        let p = pr(0.0, 3);
        let t = Truncation::default();
        let v = C64::new(0.23, 0.1);
        assert!((rho(v, &p, &t).unwrap() - 1.0).norm() < 1e-14);
        let s = DynParams::new(3, vec![cx(1.7), cx(2.2)]).unwrap();
        assert_eq!(rplus(v, &s, &p, &t).unwrap(), rstar(v, &s, &p, &t).unwrap());
    }

    #[test]
    fn rho_phi_identity_spot() {
        let t = Truncation::default();
        for (c, n) in [(0.0, 2), (1.0, 3)] {
            let v = C64::new(0.31, 0.07);
            let r = rho_phi_residual(v, &pr(c, n), &t).unwrap();
            assert!(r < 1e-9, "c={c} N={n}: {r:e}");
            assert!((rho_phi_minus_sign_residual(v, &pr(c, n), &t).unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constants_degenerate_at_c0() {
        let t = Truncation::default();
        let k = constants(&pr(0.0, 3), &t).unwrap();
        assert!((k.kappa - 1.0).norm() < 1e-12);
        assert!((k.c_n - 1.0).norm() < 1e-12);
        let p = pr(0.0, 2);
        let want = qpoch(cx(0.25), cx(0.0625), &t).unwrap() / qpoch(cx(0.0625), cx(0.0625), &t).unwrap();
        assert!((g_n(&p, &t).unwrap() - want).norm() < 1e-15);
        let v = C64::new(0.2, 0.05);
        assert!((mu(v, &p, Star::Plain, &t).unwrap() / mu(v, &p, Star::Starred, &t).unwrap() - 1.0).norm() < 1e-14);
    }
}

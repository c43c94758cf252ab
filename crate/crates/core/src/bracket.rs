//! The normalized theta bracket `[v] = q^{v^2/r - v} Theta_p(q^{2v}) / (p;p)^3`.

use crate::error::{Error, Result};
use crate::params::{EllipticParams, Level, Star, Truncation};
use crate::qseries::{qpoch, theta_big};
use crate::C64;
use std::f64::consts::PI;

/// A bracket evaluator for one nome, with `(p;p)_inf^3` computed once.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub level: Level,
    lnq: C64,
    norm: C64,
    trunc: Truncation,
}

impl Bracket {
    pub fn new(level: Level, t: &Truncation) -> Result<Self> {
        let pp = qpoch(level.p, level.p, t)?;
        Ok(Self { level, lnq: level.q.ln(), norm: pp * pp * pp, trunc: *t })
    }

    pub fn plain(params: &EllipticParams, t: &Truncation) -> Result<Self> {
        Self::new(params.level(Star::Plain), t)
    }

    pub fn starred(params: &EllipticParams, t: &Truncation) -> Result<Self> {
        Self::new(params.level(Star::Starred), t)
    }

    /// The monomial prefactor `q^{v^2/r - v}`.
    pub fn prefactor(&self, v: C64) -> C64 {
        (self.lnq * (v * v / self.level.r - v)).exp()
    }

    /// `[v]`.
    pub fn eval(&self, v: C64) -> C64 {
        let z = (self.lnq * (v * 2.0)).exp();
        // z = 0 only through underflow far outside the sampling regime.
        let th = theta_big(z, self.level.p, &self.trunc).unwrap_or(C64::new(f64::NAN, f64::NAN));
        self.prefactor(v) * th / self.norm
    }

    /// `[v]`, rejecting points within `guard` of the zero lattice.
    pub fn eval_guarded(&self, v: C64, what: &str, guard: f64) -> Result<C64> {
        let b = self.eval(v);
        if !(b.norm() >= guard) {
            return Err(Error::Pole { what: format!("[{what}]"), magnitude: b.norm() });
        }
        Ok(b)
    }

    /// `[v + r]` and the `rtau`-shifted bracket, both evaluated from scratch.
    pub fn shifted_pair(&self, v: C64) -> (C64, C64) {
        let r = self.level.r;
        (self.eval(v + r), self.eval(v + self.level.tau * r))
    }
}

/// `[v]` with `(r, p)`.
pub fn bracket(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Ok(Bracket::plain(params, t)?.eval(v))
}

/// `[v]*` with `(r*, p*)`.
pub fn bracket_star(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Ok(Bracket::starred(params, t)?.eval(v))
}

/// Relative residuals of `[v+r] = -[v]` and `[v+r tau] = -exp(-pi i tau - 2 pi i v / r) [v]`.
pub fn quasi_period_residuals_at(b: &Bracket, v: C64) -> Result<(f64, f64)> {
    let base = b.eval(v);
    let scale = b.prefactor(v).norm();
    if base.norm() < 1e-13 * scale {
        return Err(Error::Degenerate { magnitude: base.norm() });
    }
    let (plus_r, plus_rtau) = b.shifted_pair(v);
    let i = C64::new(0.0, 1.0);
    let tau = b.level.tau;
    let factor = (-i * PI * tau - i * 2.0 * PI * v / b.level.r).exp();
    let r1 = (plus_r + base).norm() / base.norm();
    let r2 = (plus_rtau + factor * base).norm() / (factor * base).norm();
    Ok((r1, r2))
}

pub fn quasi_period_residuals(v: C64, params: &EllipticParams, t: &Truncation) -> Result<(f64, f64)> {
    quasi_period_residuals_at(&Bracket::plain(params, t)?, v)
}

/// Trapezoidal value of `oint dz/(2 pi i z) 1/[-v]` around `v = 0`.
///
/// The contour is the circle `|v| = rho` traversed counterclockwise in `v`,
/// with `dz/z = 2 log(q) dv`. The expected value is 1.
pub fn contour_norm_at(b: &Bracket, points: usize) -> C64 {
    let rho = 0.25 * b.level.r.min((b.level.tau * b.level.r).norm()).min(2.0);
    let lnq = b.level.q.ln();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..points {
        let th = 2.0 * PI * k as f64 / points as f64;
        let v = C64::from_polar(rho, th);
        acc += v / b.eval(-v);
    }
    acc * lnq * 2.0 / points as f64
}

pub fn contour_norm(params: &EllipticParams, points: usize, t: &Truncation) -> Result<C64> {
    if points < 256 {
        return Err(Error::ParamDomain(format!("need >= 256 quadrature points, got {points}")));
    }
    Ok(contour_norm_at(&Bracket::plain(params, t)?, points))
}

pub fn contour_norm_star(params: &EllipticParams, points: usize, t: &Truncation) -> Result<C64> {
    if points < 256 {
        return Err(Error::ParamDomain(format!("need >= 256 quadrature points, got {points}")));
    }
    Ok(contour_norm_at(&Bracket::starred(params, t)?, points))
}

/// Central difference of `[v]` at 0 with one Richardson step.
pub fn derivative_at_zero(b: &Bracket, h: f64) -> C64 {
    let d = |h: f64| (b.eval(C64::new(h, 0.0)) - b.eval(C64::new(-h, 0.0))) / (2.0 * h);
    (d(h / 2.0) * 4.0 - d(h)) / 3.0
}

/// `lim_{v -> 0} [v]/[v]*`, from Richardson-extrapolated derivatives at `h = 1e-4`.
pub fn star_norm_constant(params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let b = Bracket::plain(params, t)?;
    let bs = Bracket::starred(params, t)?;
    Ok(derivative_at_zero(&b, 1e-4) / derivative_at_zero(&bs, 1e-4))
}

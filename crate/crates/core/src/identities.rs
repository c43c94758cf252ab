//! Scalar theta-function identities: `f, h, beta, gamma`, the three-term addition identity,
//! and the weak-equality difference formulas used to reorder half currents.

use crate::bracket::Bracket;
use crate::error::{check_redraws, Error, Result};
use crate::params::{EllipticParams, Star, Truncation};
use crate::rmatrix::{Weights, POLE_GUARD};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const HALF: f64 = 0.5;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Brackets and R-matrix weights at one nome.
#[derive(Debug, Clone, Copy)]
pub struct Theta {
    br: Bracket,
    w: Weights,
}

impl Theta {
    pub fn new(params: &EllipticParams, star: Star, t: &Truncation) -> Result<Self> {
        Ok(Self { br: Bracket::new(params.level(star), t)?, w: Weights::new(params, star, t)? })
    }

    fn b(&self, v: C64) -> C64 {
        self.br.eval(v)
    }

    fn den(&self, v: C64) -> Result<C64> {
        self.br.eval_guarded(v, "denominator", POLE_GUARD)
    }

    /// `f(v,w) = [v+1/2-w] / [v-1/2]`.
    pub fn fw(&self, v: C64, w: C64) -> Result<C64> {
        Ok(self.b(v + HALF - w) / self.den(v - HALF)?)
    }

    /// `h(v) = [v-1] / [v+1]`.
    pub fn hh(&self, v: C64) -> Result<C64> {
        Ok(self.b(v - 1.0) / self.den(v + 1.0)?)
    }

    /// `beta(v,w) = [v][w-1] / ([v+1][w])`.
    pub fn beta(&self, v: C64, w: C64) -> Result<C64> {
        Ok(self.b(v) * self.b(w - 1.0) / (self.den(v + 1.0)? * self.den(w)?))
    }

    /// `gamma(v,w) = [v+w][1] / ([v+1][w])`.
    pub fn gamma(&self, v: C64, w: C64) -> Result<C64> {
        Ok(self.b(v + w) * self.b(one()) / (self.den(v + 1.0)? * self.den(w)?))
    }

    /// Relative residual of
    /// `[u1+t][u2+s]/([u1][u2][s]) = [u1-u2+t][u2+s+t]/([u1-u2][u2][s+t])
    ///   + [u2-u1+s][u1+s+t][t]/([u2-u1][u1][s][s+t])`.
    pub fn thetaid(&self, u1: C64, u2: C64, s: C64, t: C64) -> Result<f64> {
        self.thetaid_perturbed(u1, u2, s, t, 0.0)
    }

    /// [`Theta::thetaid`] with `t` shifted by `eps` on the right side only; the negative control.
    pub fn thetaid_perturbed(&self, u1: C64, u2: C64, s: C64, t: C64, eps: f64) -> Result<f64> {
        let lhs = self.b(u1 + t) * self.b(u2 + s) / (self.den(u1)? * self.den(u2)? * self.den(s)?);
        let t = t + eps;
        let rhs = self.b(u1 - u2 + t) * self.b(u2 + s + t) / (self.den(u1 - u2)? * self.den(u2)? * self.den(s + t)?)
            + self.b(u2 - u1 + s) * self.b(u1 + s + t) * self.b(t)
                / (self.den(u2 - u1)? * self.den(u1)? * self.den(s)? * self.den(s + t)?);
        Ok(rel(lhs, rhs))
    }

    /// `A(v,v') - B(v,v')` with
    /// `A = f(v-vl, w-2) f(v'-vl', w-1) f(v'-vl, 2)` and `B = f(v-vl', w-2) f(v'-vl, w-1) f(v'-vl', 2)`.
    pub fn fjl_difference(&self, v: C64, vp: C64, vl: C64, vlp: C64, w: C64) -> Result<C64> {
        let two = C64::new(2.0, 0.0);
        let a = self.fw(v - vl, w - 2.0)? * self.fw(vp - vlp, w - 1.0)? * self.fw(vp - vl, two)?;
        let b = self.fw(v - vlp, w - 2.0)? * self.fw(vp - vl, w - 1.0)? * self.fw(vp - vlp, two)?;
        Ok(a - b)
    }

    /// Closed form of the difference:
    /// `[v-v'+1][v+v'-vl-vl'-w+1][vl-vl'][w-3] / ([v-vl-1/2][v'-vl'-1/2][v-vl'-1/2][v'-vl-1/2])`.
    pub fn fjl_closed(&self, v: C64, vp: C64, vl: C64, vlp: C64, w: C64) -> Result<C64> {
        let num = self.b(v - vp + 1.0) * self.b(v + vp - vl - vlp - w + 1.0) * self.b(vl - vlp) * self.b(w - 3.0);
        let den = self.den(v - vl - HALF)? * self.den(vp - vlp - HALF)? * self.den(v - vlp - HALF)? * self.den(vp - vl - HALF)?;
        Ok(num / den)
    }

    /// `(|A-B - closed| / |A-B|, |h(v'-v)(A-B)(v',v) + (A-B)(v,v')| / |A-B|)`.
    pub fn weak_fjl(&self, v: C64, vp: C64, vl: C64, vlp: C64, w: C64) -> Result<(f64, f64)> {
        let d = self.fjl_difference(v, vp, vl, vlp, w)?;
        let closed = self.fjl_closed(v, vp, vl, vlp, w)?;
        let swapped = self.hh(vp - v)? * self.fjl_difference(vp, v, vl, vlp, w)?;
        Ok((rel(d, closed), rel(-d, swapped)))
    }

    /// Residual of the two-term equality, with `a = v_{l-1}`, `ap = v'_{l-1}`:
    ///
    /// ```text
    /// f(ap-vl,2) - b(vl'-vl,w)/beta(a-ap,w) [w]/[w+1] f(a-vl',2)
    ///   = [1][vl-vl'+a-ap][vl-a+1/2][vl'-ap+3/2] / ([a-ap][vl'-vl+1][ap-vl-1/2][a-vl'-1/2])
    /// ```
    pub fn pre_b11(&self, a: C64, ap: C64, vl: C64, vlp: C64, w: C64) -> Result<f64> {
        let two = C64::new(2.0, 0.0);
        let lhs = self.fw(ap - vl, two)?
            - self.w.b(vlp - vl, w)? / self.beta(a - ap, w)? * self.b(w) / self.den(w + 1.0)? * self.fw(a - vlp, two)?;
        let rhs = self.b(one()) * self.b(vl - vlp + a - ap) * self.b(vl - a + HALF) * self.b(vlp - ap + 1.5)
            / (self.den(a - ap)? * self.den(vlp - vl + 1.0)? * self.den(ap - vl - HALF)? * self.den(a - vlp - HALF)?);
        Ok(rel(lhs, rhs))
    }

    /// Residual of the three-term equality
    ///
    /// ```text
    /// c(a-ap,w1) b(vl'-vl,w1)/beta(a-ap,w1) [w1]/[w1+1] f(ap-vl,w2-1) f(a-vl',w1+w2-1)
    ///   - c(vl'-vl,w1) f(a-vl',w2-1) f(ap-vl,w1+w2-1)
    ///   = -[1][vl-vl'+a-ap][a-vl+3/2-w2][ap-vl'+3/2-w1-w2] / ([a-ap][vl'-vl+1][ap-vl-1/2][a-vl'-1/2])
    /// ```
    pub fn pre_b12(&self, a: C64, ap: C64, vl: C64, vlp: C64, w1: C64, w2: C64) -> Result<f64> {
        let lhs = self.w.c(a - ap, w1)? * self.w.b(vlp - vl, w1)? / self.beta(a - ap, w1)? * self.b(w1)
            / self.den(w1 + 1.0)?
            * self.fw(ap - vl, w2 - 1.0)?
            * self.fw(a - vlp, w1 + w2 - 1.0)?
            - self.w.c(vlp - vl, w1)? * self.fw(a - vlp, w2 - 1.0)? * self.fw(ap - vl, w1 + w2 - 1.0)?;
        let rhs = -self.b(one()) * self.b(vl - vlp + a - ap) * self.b(a - vl + 1.5 - w2) * self.b(ap - vlp + 1.5 - w1 - w2)
            / (self.den(a - ap)? * self.den(vlp - vl + 1.0)? * self.den(ap - vl - HALF)? * self.den(a - vlp - HALF)?);
        Ok(rel(lhs, rhs))
    }
}

/// `|a - b| / max(|a|, |b|)`, or `|a - b|` when both vanish.
fn rel(a: C64, b: C64) -> f64 {
    let m = a.norm().max(b.norm());
    if m == 0.0 {
        0.0
    } else {
        (a - b).norm() / m
    }
}

pub fn fw(v: C64, w: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Theta::new(params, Star::Plain, t)?.fw(v, w)
}

pub fn hh(v: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Theta::new(params, Star::Plain, t)?.hh(v)
}

pub fn beta(v: C64, w: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Theta::new(params, Star::Plain, t)?.beta(v, w)
}

pub fn gamma(v: C64, w: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    Theta::new(params, Star::Plain, t)?.gamma(v, w)
}

pub fn thetaid_residual(u1: C64, u2: C64, s: C64, t_arg: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    Theta::new(params, Star::Plain, t)?.thetaid(u1, u2, s, t_arg)
}

pub fn weak_fjl_residuals(v: C64, vp: C64, vl: C64, vlp: C64, w: C64, params: &EllipticParams, t: &Truncation) -> Result<(f64, f64)> {
    Theta::new(params, Star::Plain, t)?.weak_fjl(v, vp, vl, vlp, w)
}

pub fn pre_b11_residual(a: C64, ap: C64, vl: C64, vlp: C64, w: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    Theta::new(params, Star::Plain, t)?.pre_b11(a, ap, vl, vlp, w)
}

#[allow(clippy::too_many_arguments)]
pub fn pre_b12_residual(
    a: C64,
    ap: C64,
    vl: C64,
    vlp: C64,
    w1: C64,
    w2: C64,
    params: &EllipticParams,
    t: &Truncation,
) -> Result<f64> {
    Theta::new(params, Star::Plain, t)?.pre_b12(a, ap, vl, vlp, w1, w2)
}

/// Maxima over the sampled points for one nome.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IdentityMaxima {
    pub thetaid: f64,
    pub fjl_closed: f64,
    pub fjl_antisym: f64,
    pub pre_b11: f64,
    pub pre_b12: f64,
    /// Smallest residual of the perturbed addition identity.
    pub thetaid_control_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub points: usize,
    pub skipped: usize,
    pub plain: IdentityMaxima,
    pub starred: IdentityMaxima,
}

/// Shift applied to `t` in the negative control.
pub const CONTROL_SHIFT: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
struct Sample {
    z: [C64; 7],
}

fn draw(rng: &mut ChaCha8Rng) -> Sample {
    let mut z = [C64::new(0.0, 0.0); 7];
    for x in &mut z {
        *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
    }
    Sample { z }
}

fn eval_sample(th: &Theta, s: &Sample) -> Result<[f64; 6]> {
    let z = s.z;
    let idr = th.thetaid(z[0], z[1], z[2] + 1.5, z[3])?;
    let ctl = th.thetaid_perturbed(z[0], z[1], z[2] + 1.5, z[3], CONTROL_SHIFT)?;
    let w = z[4] + 2.5;
    let (fc, fa) = th.weak_fjl(z[0], z[1], z[2], z[3], w)?;
    let b11 = th.pre_b11(z[0], z[1], z[2], z[3], w)?;
    let b12 = th.pre_b12(z[0], z[1], z[2], z[3], z[5] + 1.7, z[6] + 2.2)?;
    Ok([idr, fc, fa, b11, b12, ctl])
}

/// Plain and starred residuals of one sample.
type Row = ([f64; 6], [f64; 6]);

/// Seeded samples for every identity family at both nomes. Pole-guarded points are redrawn.
pub fn identity_suite(n_points: usize, seed: u64, params: &EllipticParams, t: &Truncation) -> Result<IdentityReport> {
    if n_points == 0 {
        return Err(Error::ParamDomain("need at least one sample point".into()));
    }
    let plain = Theta::new(params, Star::Plain, t)?;
    let starred = Theta::new(params, Star::Starred, t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_points);
    let mut skipped = 0;
    while rows.len() < n_points {
        let batch: Vec<Sample> = (0..n_points - rows.len()).map(|_| draw(&mut rng)).collect();
        let out: Vec<Result<Row>> = batch
            .par_iter()
            .map(|s| Ok((eval_sample(&plain, s)?, eval_sample(&starred, s)?)))
            .collect();
        for r in out {
            match r {
                Ok(x) => rows.push(x),
                Err(Error::Pole { .. }) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        check_redraws(skipped, n_points)?;
    }
    let fold = |pick: fn(&Row) -> &[f64; 6]| {
        let mut m = IdentityMaxima { thetaid_control_min: f64::INFINITY, ..Default::default() };
        for row in &rows {
            let x = pick(row);
            m.thetaid = m.thetaid.max(x[0]);
            m.fjl_closed = m.fjl_closed.max(x[1]);
            m.fjl_antisym = m.fjl_antisym.max(x[2]);
            m.pre_b11 = m.pre_b11.max(x[3]);
            m.pre_b12 = m.pre_b12.max(x[4]);
            m.thetaid_control_min = m.thetaid_control_min.min(x[5]);
        }
        m
    };
    Ok(IdentityReport { points: rows.len(), skipped, plain: fold(|r| &r.0), starred: fold(|r| &r.1) })
}

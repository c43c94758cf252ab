//! The dynamical Yang-Baxter equation on `(C^N)^{⊗3}`:
//!
//! `R12(v12, s+h3) R13(v13, s) R23(v23, s+h1) = R23(v23, s) R13(v13, s+h2) R12(v12, s)`.

use crate::error::{check_redraws, Error, Result};
use crate::params::{DynParams, EllipticParams, IntervalSums, Star, Truncation};
use crate::rmatrix::{rbar_with, rho_plus, FaceTensor, Weights};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Tensor slots an order-2 operator can occupy inside order 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    S12,
    S13,
    S23,
}

impl Slot {
    /// The spectator factor, 1-based.
    pub fn spectator(self) -> usize {
        match self {
            Slot::S12 => 3,
            Slot::S13 => 2,
            Slot::S23 => 1,
        }
    }
}

/// Place `blocks[m-1]` in `slot`, where `m` is the basis state of the spectator factor.
pub fn embed(slot: Slot, blocks: &[FaceTensor]) -> FaceTensor {
    let n = blocks[0].n;
    let mut out = FaceTensor::zeros(n, 3);
    for (m0, r) in blocks.iter().enumerate() {
        let m = m0 + 1;
        for x in 1..=n {
            for y in 1..=n {
                for xp in 1..=n {
                    for yp in 1..=n {
                        let val = r.entry(&[xp, yp], &[x, y]);
                        if val == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let (o, i) = match slot {
                            Slot::S12 => ([xp, yp, m], [x, y, m]),
                            Slot::S13 => ([xp, m, yp], [x, m, y]),
                            Slot::S23 => ([m, xp, yp], [m, x, y]),
                        };
                        let (oi, ii) = (out.index(&o), out.index(&i));
                        out.set(oi, ii, val);
                    }
                }
            }
        }
    }
    out
}

/// How the dynamical shifts are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shifts {
    /// `s + h^{(k)}`, the equation proper.
    Weight,
    /// Shifts dropped; the negative control.
    Omitted,
}

/// `max|LHS - RHS| / max(|LHS|, |RHS|)` for an arbitrary R provider `r(v, s)`.
pub fn dybe_residual_with<F>(r: F, v: [C64; 3], s: &IntervalSums, shifts: Shifts) -> Result<f64>
where
    F: Fn(C64, &IntervalSums) -> Result<FaceTensor>,
{
    let n = s.n();
    let (v12, v13, v23) = (v[0] - v[1], v[0] - v[2], v[1] - v[2]);
    let plain = |u: C64| -> Result<Vec<FaceTensor>> {
        let t = r(u, s)?;
        Ok(vec![t; n])
    };
    let shifted = |u: C64| -> Result<Vec<FaceTensor>> {
        (1..=n)
            .map(|m| match shifts {
                Shifts::Weight => r(u, &s.shifted(m)),
                Shifts::Omitted => r(u, s),
            })
            .collect()
    };
    let lhs = &(&embed(Slot::S12, &shifted(v12)?) * &embed(Slot::S13, &plain(v13)?)) * &embed(Slot::S23, &shifted(v23)?);
    let rhs = &(&embed(Slot::S23, &plain(v23)?) * &embed(Slot::S13, &shifted(v13)?)) * &embed(Slot::S12, &plain(v12)?);
    Ok(lhs.rel_diff(&rhs))
}

/// Which R enters the equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `R+ = rho+ Rbar`.
    RPlus,
    /// `Rbar` alone.
    Stripped,
}

pub fn dybe_residual_opts(
    v: [C64; 3],
    s: &DynParams,
    params: &EllipticParams,
    t: &Truncation,
    norm: Normalization,
    shifts: Shifts,
) -> Result<f64> {
    if s.n() != params.n {
        return Err(Error::ParamDomain(format!("dynamical parameters are for N = {}, params have N = {}", s.n(), params.n)));
    }
    let w = Weights::new(params, Star::Plain, t)?;
    let provider = |u: C64, ss: &IntervalSums| -> Result<FaceTensor> {
        let rb = rbar_with(&w, u, ss)?;
        match norm {
            Normalization::RPlus => Ok(rb.scale(rho_plus(u, params, t)?)),
            Normalization::Stripped => Ok(rb),
        }
    };
    dybe_residual_with(provider, v, &s.sums(), shifts)
}

/// DYBE residual with `R+`, shifts applied.
pub fn dybe_residual(v1: C64, v2: C64, v3: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    dybe_residual_opts([v1, v2, v3], s, params, t, Normalization::RPlus, Shifts::Weight)
}

/// One sampled point of the DYBE suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DybePoint {
    pub v: [f64; 3],
    pub s: Vec<f64>,
    pub residual: f64,
    pub stripped: f64,
    pub no_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DybeReport {
    pub points: Vec<DybePoint>,
    pub max_residual: f64,
    pub max_stripped: f64,
    /// Max over points of the shift-omitted residual.
    pub max_no_shift: f64,
    pub skipped: usize,
}

/// Draw `(v1, v2, v3, s)` from the sampling box.
pub fn sample_point(rng: &mut ChaCha8Rng, n: usize) -> ([f64; 3], Vec<f64>) {
    let v = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    let s = (1..n).map(|j| rng.gen_range(1.2..2.8) + 0.0137 * j as f64).collect();
    (v, s)
}

fn eval_point(v: [f64; 3], s: Vec<f64>, params: &EllipticParams, t: &Truncation) -> Result<DybePoint> {
    let vc = v.map(|x| C64::new(x, 0.0));
    let dp = DynParams::new(params.n, s.iter().map(|&x| C64::new(x, 0.0)).collect())?;
    Ok(DybePoint {
        residual: dybe_residual_opts(vc, &dp, params, t, Normalization::RPlus, Shifts::Weight)?,
        stripped: dybe_residual_opts(vc, &dp, params, t, Normalization::Stripped, Shifts::Weight)?,
        no_shift: dybe_residual_opts(vc, &dp, params, t, Normalization::RPlus, Shifts::Omitted)?,
        v,
        s,
    })
}

/// `n_points` seeded samples, pole-guarded ones skipped and redrawn.
///
/// Points are drawn serially and evaluated in parallel, so the output is independent of the
/// thread count.
pub fn dybe_suite(n_points: usize, seed: u64, params: &EllipticParams, t: &Truncation) -> Result<DybeReport> {
    if n_points == 0 {
        return Err(Error::ParamDomain("need at least one sample point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    let mut skipped = 0;
    while points.len() < n_points {
        let want = n_points - points.len();
        let batch: Vec<_> = (0..want).map(|_| sample_point(&mut rng, params.n)).collect();
        let evaluated: Vec<Result<DybePoint>> =
            batch.into_par_iter().map(|(v, s)| eval_point(v, s, params, t)).collect();
        for e in evaluated {
            match e {
                Ok(p) => points.push(p),
                Err(Error::Pole { .. }) => skipped += 1,
                Err(other) => return Err(other),
            }
        }
        check_redraws(skipped, n_points)?;
    }
    let max = |f: fn(&DybePoint) -> f64| points.iter().map(f).fold(0.0, f64::max);
    Ok(DybeReport {
        max_residual: max(|p| p.residual),
        max_stripped: max(|p| p.stripped),
        max_no_shift: max(|p| p.no_shift),
        points,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;
    use crate::rmatrix::permutation;

    fn pr(n: usize) -> EllipticParams {
        make_params(C64::new(0.5, 0.0), 7.3, 0.0, n).unwrap()
    }

    fn cx(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn embed_places_spectator_blocks() {
        let p = permutation(2);
        let id = FaceTensor::identity(2, 2);
        let e = embed(Slot::S13, &[p.clone(), id]);
        // Spectator in slot 2 is e_1: swap factors 1 and 3.
        assert_eq!(e.entry(&[2, 1, 1], &[1, 1, 2]), cx(1.0));
        // Spectator e_2: identity.
        assert_eq!(e.entry(&[1, 2, 2], &[1, 2, 2]), cx(1.0));
        assert_eq!(e.entry(&[2, 2, 1], &[1, 2, 2]), cx(0.0));
    }

    #[test]
    fn n2_spot_point() {
        let s = DynParams::new(2, vec![cx(1.7)]).unwrap();
        let r = dybe_residual(cx(0.31), cx(0.11), cx(-0.23), &s, &pr(2), &Truncation::default()).unwrap();
        assert!(r < 1e-9, "{r:e}");
    }

    #[test]
    fn coincident_spectral_parameters() {
        let s = DynParams::new(3, vec![cx(1.7), cx(2.3)]).unwrap();
        let r = dybe_residual(cx(0.2), cx(0.2), cx(-0.1), &s, &pr(3), &Truncation::default()).unwrap();
        assert!(r < 1e-10, "{r:e}");
    }

    #[test]
    fn omitting_shifts_breaks_it() {
        let s = DynParams::new(2, vec![cx(1.7)]).unwrap();
        let v = [cx(0.31), cx(0.11), cx(-0.23)];
        let r = dybe_residual_opts(v, &s, &pr(2), &Truncation::default(), Normalization::RPlus, Shifts::Omitted).unwrap();
        assert!(r > 1e-3, "{r:e}");
        let rep = dybe_suite(50, 42, &pr(2), &Truncation::default()).unwrap();
        assert!(rep.max_no_shift >= 1e-2, "{:e}", rep.max_no_shift);
        assert!(rep.max_residual <= 1e-9 && rep.max_stripped <= 1e-9);
    }

    #[test]
    fn suite_is_deterministic() {
        let t = Truncation::default();
        let a = dybe_suite(4, 7, &pr(2), &t).unwrap();
        let b = dybe_suite(4, 7, &pr(2), &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 4);
    }
}

//! Infinite q-Pochhammer products and the `Theta_p` kernel.
//!
//! Every product is cut once the next factor differs from 1 by less than
//! `tail_tol`; the dropped tail is then bounded by `|z p^M| / (1 - |p|)`.

use crate::error::{Error, Result};
use crate::params::{EllipticParams, Star, Truncation};
use crate::C64;

/// A truncated product together with its certified tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Product {
    pub value: C64,
    pub terms: usize,
    /// Bound on `|log(exact) - log(value)|`.
    pub tail: f64,
}

fn check_base(p: C64) -> Result<()> {
    let m = p.norm();
    if !(m < 1.0) {
        return Err(Error::NonConvergence { modulus: m });
    }
    Ok(())
}

/// `(z; p)_inf` with its tail bound.
pub fn qpoch_bounded(z: C64, p: C64, t: &Truncation) -> Result<Product> {
    check_base(p)?;
    Ok(poch_loop(z, p, t))
}

fn poch_loop(z: C64, p: C64, t: &Truncation) -> Product {
    let one = C64::new(1.0, 0.0);
    let mut acc = one;
    let mut w = z;
    let mut n = 0;
    while n < t.max_terms {
        if w.norm() < t.tail_tol {
            break;
        }
        acc *= one - w;
        w *= p;
        n += 1;
    }
    Product { value: acc, terms: n, tail: w.norm() / (1.0 - p.norm()) }
}

/// `(z; p)_inf = prod_{n>=0} (1 - z p^n)`.
pub fn qpoch(z: C64, p: C64, t: &Truncation) -> Result<C64> {
    qpoch_bounded(z, p, t).map(|r| r.value)
}

/// `(z; t_1, .., t_k)_inf`, the product over all `n_1..n_k >= 0`.
pub fn qpoch_multi(z: C64, bases: &[C64], t: &Truncation) -> Result<C64> {
    for b in bases {
        check_base(*b)?;
    }
    Ok(multi_rec(z, bases, t))
}

fn multi_rec(z: C64, bases: &[C64], t: &Truncation) -> C64 {
    match bases {
        [] => C64::new(1.0, 0.0) - z,
        [p] => poch_loop(z, *p, t).value,
        [first, rest @ ..] => {
            // Outer axis: once |z t_1^n| is below tol every inner product is 1 to working precision.
            let mut acc = C64::new(1.0, 0.0);
            let mut w = z;
            let mut n = 0;
            while n < t.max_terms && w.norm() >= t.tail_tol {
                acc *= multi_rec(w, rest, t);
                w *= *first;
                n += 1;
            }
            acc
        }
    }
}

/// `{z} = (z; p, q^{2N})_inf`; the starred variant uses `p*`.
pub fn curly(z: C64, params: &EllipticParams, star: Star, t: &Truncation) -> Result<C64> {
    let p = match star {
        Star::Plain => params.p,
        Star::Starred => params.p_star,
    };
    qpoch_multi(z, &[p, params.qpow(2.0 * params.n as f64)], t)
}

/// `Theta_p(z) = (z; p)_inf (p/z; p)_inf (p; p)_inf`.
pub fn theta_big(z: C64, p: C64, t: &Truncation) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return Err(Error::Domain("Theta_p(z) needs z != 0".into()));
    }
    Ok(qpoch(z, p, t)? * qpoch(p / z, p, t)? * qpoch(p, p, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn brute(z: C64, p: C64, terms: usize) -> C64 {
        (0..terms).fold(r(1.0), |acc, n| acc * (r(1.0) - z * p.powu(n as u32)))
    }

    #[test]
    fn trivial_products() {
        let t = Truncation::default();
        assert_eq!(qpoch(r(0.0), r(0.3), &t).unwrap(), r(1.0));
        let w = C64::new(0.4, -0.2);
        assert_eq!(qpoch(w, r(0.0), &t).unwrap(), r(1.0) - w);
        assert_eq!(qpoch_multi(r(0.0), &[r(0.1), r(0.2)], &t).unwrap(), r(1.0));
        let u = C64::new(0.7, 0.1);
        assert_eq!(qpoch_multi(u, &[r(0.3)], &t).unwrap(), qpoch(u, r(0.3), &t).unwrap());
    }

    #[test]
    fn single_base_matches_brute_force() {
        let t = Truncation::default();
        let v = qpoch(r(0.3), r(0.1), &t).unwrap();
        assert!((v - brute(r(0.3), r(0.1), 200)).norm() < 1e-12);
    }

    #[test]
    fn double_base_matches_nested_loop() {
        let t = Truncation::default();
        let v = qpoch_multi(r(0.2), &[r(0.1), r(0.15)], &t).unwrap();
        let mut b = r(1.0);
        for i in 0..100 {
            for j in 0..100 {
                b *= r(1.0) - r(0.2) * 0.1f64.powi(i) * 0.15f64.powi(j);
            }
        }
        assert!((v - b).norm() < 1e-12);
    }

    #[test]
    fn curly_against_brute_force() {
        let t = Truncation::default();
        let pr = make_params(r(0.5), 7.3, 0.0, 2).unwrap();
        let v = curly(r(0.3), &pr, Star::Plain, &t).unwrap();
        let q4 = 0.5f64.powi(4);
        let mut b = r(1.0);
        for i in 0..60 {
            for j in 0..80 {
                b *= r(1.0) - r(0.3) * pr.p.powu(i) * q4.powi(j);
            }
        }
        assert!((v - b).norm() < 1e-12);

        // r large drives p to zero, leaving the single-base product.
        let big = make_params(r(0.5), 400.0, 0.0, 2).unwrap();
        let w = C64::new(0.3, 0.2);
        let lim = qpoch(w, r(q4), &t).unwrap();
        assert!((curly(w, &big, Star::Plain, &t).unwrap() - lim).norm() < 1e-13);
    }

    #[test]
    fn theta_values() {
        let t = Truncation::default();
        assert_eq!(theta_big(r(1.0), r(0.01), &t).unwrap(), r(0.0));
        let direct = brute(r(0.4), r(0.01), 200) * brute(r(0.025), r(0.01), 200) * brute(r(0.01), r(0.01), 200);
        assert!((theta_big(r(0.4), r(0.01), &t).unwrap() - direct).norm() < 1e-13);
        assert!(matches!(theta_big(r(0.0), r(0.01), &t), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_divergent_base() {
        let t = Truncation::default();
        assert!(matches!(qpoch(r(0.1), r(1.0), &t), Err(Error::NonConvergence { .. })));
        assert!(qpoch_multi(r(0.1), &[r(0.2), r(1.5)], &t).is_err());
    }

    #[test]
    fn tail_bound_is_reported() {
        let t = Truncation::default();
        let b = qpoch_bounded(r(0.9), r(0.5), &t).unwrap();
        assert!(b.tail < 1e-17);
        assert!(b.terms > 10 && b.terms < 100);
    }
}

//! The vector evaluation representation: current images, gauged half-current matrices and
//! the Gauss assembly of the L-operator, which should reproduce `R+(v1 - v2, P)`.

use crate::bracket::Bracket;
use crate::dybe::{dybe_residual_with, Shifts};
use crate::error::{Error, Result};
use crate::params::{DynParams, EllipticParams, IntervalSums, Star, Truncation};
use crate::qseries::{curly, qpoch, theta_big};
use crate::rmatrix::{rho_plus, rplus_sums, FaceTensor, POLE_GUARD};
use crate::C64;
use serde::Serialize;

/// An `N x N` matrix, as an order-1 [`FaceTensor`].
pub type Mat = FaceTensor;

/// The matrix unit `E_{ab}` (1-based).
pub fn unit(n: usize, a: usize, b: usize) -> Mat {
    let mut m = Mat::zeros(n, 1);
    m.set(a - 1, b - 1, C64::new(1.0, 0.0));
    m
}

pub fn diag(d: &[C64]) -> Mat {
    let mut m = Mat::zeros(d.len(), 1);
    for (i, &x) in d.iter().enumerate() {
        m.set(i, i, x);
    }
    m
}

fn add(a: &Mat, b: &Mat) -> Mat {
    Mat { n: a.n, order: a.order, data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect() }
}

fn check_index(j: usize, max: usize) -> Result<()> {
    if j < 1 || j > max {
        return Err(Error::IndexBounds { index: j, max });
    }
    Ok(())
}

fn guarded(x: C64, what: &str) -> Result<C64> {
    if !(x.norm() >= POLE_GUARD) {
        return Err(Error::Pole { what: what.to_string(), magnitude: x.norm() });
    }
    Ok(x)
}

/// Eigenvalue of `h_j = E_jj - E_{j+1,j+1}` on `e_k`.
fn h_eigen(j: usize, k: usize) -> f64 {
    (k == j) as i32 as f64 - (k == j + 1) as i32 as f64
}

/// `pi_z(k_j(w))`.
pub fn pi_k(j: usize, w: C64, z: C64, params: &EllipticParams, t: &Truncation) -> Result<Mat> {
    let n = params.n;
    check_index(j, n)?;
    let nf = n as f64;
    let q = |e: f64| params.qpow(e);
    let r = params.r;
    let c = |x: C64| curly(x, params, Star::Plain, t);
    let (zw, wz) = (z / w, w / z);
    let num = c(q(r + 2.0 * nf + 1.0) * zw)? * c(q(r + 1.0) * zw)? * c(q(r - 1.0) * wz)? * c(q(r - 2.0 * nf + 3.0) * wz)?;
    let den = c(q(r + 2.0 * nf - 1.0) * zw)? * c(q(r + 3.0) * zw)? * c(q(r + 1.0) * wz)? * c(q(r - 2.0 * nf + 1.0) * wz)?;
    let scalar = num / guarded(den, "{.} denominator of pi(k)")?;
    let th = |e: f64| theta_big(q(e) * zw, params.p, t);
    let below = th(r + 1.0)? / guarded(th(r - 1.0)?, "Theta_p(q^{r-1} z/w)")?;
    let above = th(r + 3.0)? / guarded(th(r + 1.0)?, "Theta_p(q^{r+1} z/w)")?;
    let d: Vec<C64> = (1..=n)
        .map(|k| scalar * if k < j { below } else if k == j { C64::new(1.0, 0.0) } else { above })
        .collect();
    Ok(diag(&d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `pi_z(psi^±_j(q^{∓r} w)) = q^{±h_j} Theta_p(q^{r-j+2h_j+N-1} w/z) / Theta_p(q^{r-j+N-1} w/z)`.
pub fn pi_psi(j: usize, sign: Sign, w: C64, z: C64, params: &EllipticParams, t: &Truncation) -> Result<Mat> {
    let n = params.n;
    if j < 1 || j >= n {
        return Err(Error::IndexBounds { index: j, max: n - 1 });
    }
    let base = params.r - j as f64 + n as f64 - 1.0;
    let den = guarded(theta_big(params.qpow(base) * w / z, params.p, t)?, "Theta_p(q^{r-j+N-1} w/z)")?;
    let s = if sign == Sign::Plus { 1.0 } else { -1.0 };
    let d = (1..=n)
        .map(|k| {
            let h = h_eigen(j, k);
            Ok(params.qpow(s * h) * theta_big(params.qpow(base + 2.0 * h) * w / z, params.p, t)? / den)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(diag(&d))
}

/// A current image `prefactor * matrix * delta(support_ratio * z / w)`, kept symbolic.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCurrent {
    pub matrix: Mat,
    pub prefactor: C64,
    pub support_ratio: C64,
}

fn delta_current(j: usize, matrix: Mat, shift: f64, params: &EllipticParams, t: &Truncation) -> Result<DeltaCurrent> {
    let p = params.p;
    Ok(DeltaCurrent {
        matrix,
        prefactor: qpoch(p * params.qpow(shift), p, t)? / qpoch(p, p, t)?,
        support_ratio: params.qpow(j as f64 - params.n as f64 + 1.0),
    })
}

/// `pi_z(e_j(w)) = E_{j,j+1} (pq^2;p)/(p;p) delta(q^{j-N+1} z/w)`.
pub fn pi_e(j: usize, params: &EllipticParams, t: &Truncation) -> Result<DeltaCurrent> {
    if j < 1 || j >= params.n {
        return Err(Error::IndexBounds { index: j, max: params.n - 1 });
    }
    delta_current(j, unit(params.n, j, j + 1), 2.0, params, t)
}

/// `pi_z(f_j(w)) = E_{j+1,j} (pq^{-2};p)/(p;p) delta(q^{j-N+1} z/w)`.
pub fn pi_f(j: usize, params: &EllipticParams, t: &Truncation) -> Result<DeltaCurrent> {
    if j < 1 || j >= params.n {
        return Err(Error::IndexBounds { index: j, max: params.n - 1 });
    }
    delta_current(j, unit(params.n, j + 1, j), -2.0, params, t)
}

/// Evaluator for the gauged half-current matrices at one parameter point.
#[derive(Debug, Clone, Copy)]
pub struct HalfCurrents<'a> {
    params: &'a EllipticParams,
    t: &'a Truncation,
    br: Bracket,
}

impl<'a> HalfCurrents<'a> {
    pub fn new(params: &'a EllipticParams, t: &'a Truncation) -> Result<Self> {
        Ok(Self { params, t, br: Bracket::plain(params, t)? })
    }

    fn b(&self, v: C64, what: &str) -> Result<C64> {
        self.br.eval_guarded(v, what, POLE_GUARD)
    }

    /// `pi(K_j^+(v1))` with `v = v1 - v2`: `rho+(v) diag([v]/[v+1] (k<j), 1, [v-1]/[v] (k>j))`.
    pub fn k(&self, j: usize, v: C64) -> Result<Mat> {
        let n = self.params.n;
        check_index(j, n)?;
        let rho = rho_plus(v, self.params, self.t)?;
        let below = self.br.eval(v) / self.b(v + 1.0, "v+1")?;
        let above = self.br.eval(v - 1.0) / self.b(v, "v")?;
        let d: Vec<C64> = (1..=n)
            .map(|k| rho * if k < j { below } else if k == j { C64::new(1.0, 0.0) } else { above })
            .collect();
        Ok(diag(&d))
    }

    /// `pi(F_{j,l}^+(v1)) = E_{lj} [v+P-1][1] / ([v][P-1])`.
    pub fn f(&self, j: usize, l: usize, v: C64, pjl: C64) -> Result<Mat> {
        self.check_pair(j, l)?;
        let x = self.br.eval(v + pjl - 1.0) * self.br.eval(C64::new(1.0, 0.0)) / (self.b(v, "v")? * self.b(pjl - 1.0, "P-1")?);
        Ok(unit(self.params.n, l, j).scale(x))
    }

    /// `pi(E_{l,j}^+(v1)) = -E_{jl} [v-P][1] / ([v][P])`.
    pub fn e(&self, l: usize, j: usize, v: C64, pjl: C64) -> Result<Mat> {
        self.check_pair(j, l)?;
        let x = self.br.eval(v - pjl) * self.br.eval(C64::new(1.0, 0.0)) / (self.b(v, "v")? * self.b(pjl, "P")?);
        Ok(unit(self.params.n, j, l).scale(-x))
    }

    fn check_pair(&self, j: usize, l: usize) -> Result<()> {
        check_index(l, self.params.n)?;
        if j >= l {
            return Err(Error::IndexOrder { j, l });
        }
        Ok(())
    }

    /// Gauss product `L_{kl} = sum_{m >= max(k,l)} F_{k,m} K_m E_{m,l}` with `F_{kk} = E_{ll} = 1`.
    ///
    /// `F_{k,m}` is read at `P = s_{k,m} + 1`: the `h`-shift it picks up from standing left of
    /// `K_m`. `E_{m,l}` is read at `P = s_{l,m}`.
    pub fn assemble(&self, v: C64, s: &IntervalSums) -> Result<FaceTensor> {
        let n = self.params.n;
        let mut fs = vec![None; n * n];
        let mut es = vec![None; n * n];
        for j in 1..=n {
            for l in (j + 1)..=n {
                let sjl = s.get(j, l);
                fs[(j - 1) * n + (l - 1)] = Some(self.f(j, l, v, sjl + 1.0)?);
                es[(l - 1) * n + (j - 1)] = Some(self.e(l, j, v, sjl)?);
            }
        }
        let ks = (1..=n).map(|m| self.k(m, v)).collect::<Result<Vec<_>>>()?;
        let mut out = FaceTensor::zeros(n, 2);
        for k in 1..=n {
            for l in 1..=n {
                let mut block = Mat::zeros(n, 1);
                for m in k.max(l)..=n {
                    let mut term = ks[m - 1].clone();
                    if m > k {
                        term = fs[(k - 1) * n + (m - 1)].as_ref().expect("filled above") * &term;
                    }
                    if m > l {
                        term = &term * es[(m - 1) * n + (l - 1)].as_ref().expect("filled above");
                    }
                    block = add(&block, &term);
                }
                for a in 1..=n {
                    for b in 1..=n {
                        let (o, i) = (out.index(&[k, a]), out.index(&[l, b]));
                        out.set(o, i, block.get(a - 1, b - 1));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `L(v1, v2)` on `C^N (aux) ⊗ C^N (quantum)`.
pub fn assemble_l(v1: C64, v2: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<FaceTensor> {
    check_n(s, params)?;
    HalfCurrents::new(params, t)?.assemble(v1 - v2, &s.sums())
}

fn check_n(s: &DynParams, params: &EllipticParams) -> Result<()> {
    if s.n() != params.n {
        return Err(Error::ParamDomain(format!("dynamical parameters are for N = {}, params have N = {}", s.n(), params.n)));
    }
    Ok(())
}

/// Relative max-norm difference between the assembled L and `R+(v1 - v2, P)`.
pub fn l_equals_r_residual(v1: C64, v2: C64, s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    let l = assemble_l(v1, v2, s, params, t)?;
    let r = rplus_sums(v1 - v2, &s.sums(), params, t)?;
    Ok(l.rel_diff(&r))
}

/// `max_j` relative difference between `pi(psi^±_j(q^{∓r}w))` and
/// `q^{±h_j} pi(k_j(q^{N-j}w)) pi(k_{j+1}(q^{N-j}w))^{-1}`.
pub fn psikk_rep_residual(w: C64, z: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    let n = params.n;
    let mut worst: f64 = 0.0;
    for j in 1..n {
        let ws = params.qpow((n - j) as f64) * w;
        let (kj, kj1) = (pi_k(j, ws, z, params, t)?, pi_k(j + 1, ws, z, params, t)?);
        for (sign, s) in [(Sign::Plus, 1.0), (Sign::Minus, -1.0)] {
            let lhs = pi_psi(j, sign, w, z, params, t)?;
            let rhs: Vec<C64> = (1..=n)
                .map(|k| params.qpow(s * h_eigen(j, k)) * kj.get(k - 1, k - 1) / kj1.get(k - 1, k - 1))
                .collect();
            worst = worst.max(lhs.rel_diff(&diag(&rhs)));
        }
    }
    Ok(worst)
}

/// `|DYBE(L-based R) - DYBE(R+)|` at one point.
pub fn cross_wiring_residual(v: [C64; 3], s: &DynParams, params: &EllipticParams, t: &Truncation) -> Result<CrossWiring> {
    check_n(s, params)?;
    let hc = HalfCurrents::new(params, t)?;
    let sums = s.sums();
    let via_l = dybe_residual_with(|u, ss| hc.assemble(u, ss), v, &sums, Shifts::Weight)?;
    let via_r = dybe_residual_with(|u, ss| rplus_sums(u, ss, params, t), v, &sums, Shifts::Weight)?;
    Ok(CrossWiring { via_l, via_r, difference: (via_l - via_r).abs() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossWiring {
    pub via_l: f64,
    pub via_r: f64,
    pub difference: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn pr(n: usize) -> EllipticParams {
        make_params(C64::new(0.5, 0.0), 7.3, 0.0, n).unwrap()
    }

    fn cx(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn dyn_s(n: usize) -> DynParams {
        DynParams::new(n, (1..n).map(|j| cx(1.6 + 0.37 * j as f64)).collect()).unwrap()
    }

    #[test]
    fn pi_k_has_three_levels() {
        let p = pr(4);
        let m = pi_k(2, C64::new(0.7, 0.2), cx(1.1), &p, &Truncation::default()).unwrap();
        let d: Vec<C64> = (0..4).map(|i| m.get(i, i)).collect();
        assert!((d[2] - d[3]).norm() < 1e-15);
        assert!((d[0] - d[1]).norm() > 1e-6 && (d[1] - d[2]).norm() > 1e-6);
        assert_eq!(m.get(0, 1), cx(0.0));
    }

    #[test]
    fn delta_currents() {
        let p = pr(3);
        let t = Truncation::default();
        let e = pi_e(1, &p, &t).unwrap();
        assert_eq!(e.matrix, unit(3, 1, 2));
        assert!((e.support_ratio - cx(2.0)).norm() < 1e-14);
        let f = pi_f(2, &p, &t).unwrap();
        assert_eq!(f.matrix, unit(3, 3, 2));
        assert!((f.support_ratio - cx(1.0)).norm() < 1e-15);
        assert!(pi_e(3, &p, &t).is_err());
    }

    #[test]
    fn n2_rows_of_gauss_product() {
        let p = pr(2);
        let t = Truncation::default();
        let s = dyn_s(2);
        let v = cx(0.27);
        let hc = HalfCurrents::new(&p, &t).unwrap();
        let l = assemble_l(v, cx(0.0), &s, &p, &t).unwrap();
        let k2 = hc.k(2, v).unwrap();
        assert!(l.aux_block(2, 2).rel_diff(&k2) < 1e-15);
        let e21 = hc.e(2, 1, v, s.sums().get(1, 2)).unwrap();
        assert!(l.aux_block(2, 1).rel_diff(&(&k2 * &e21)) < 1e-15);
        assert!(hc.e(2, 1, v, cx(1.0)).unwrap().get(0, 1).re != 0.0);
    }

    #[test]
    fn l_matches_r_plus() {
        let t = Truncation::default();
        for n in [2, 3, 4] {
            let r = l_equals_r_residual(C64::new(0.31, 0.05), cx(-0.12), &dyn_s(n), &pr(n), &t).unwrap();
            assert!(r < 1e-9, "N={n}: {r:e}");
        }
    }

    #[test]
    fn near_coincident_points() {
        let t = Truncation::default();
        let r = l_equals_r_residual(cx(1e-4), cx(0.0), &dyn_s(3), &pr(3), &t).unwrap();
        assert!(r < 1e-10, "{r:e}");
        assert!(matches!(assemble_l(cx(0.2), cx(0.2), &dyn_s(3), &pr(3), &t), Err(Error::Pole { .. })));
    }

    #[test]
    fn psikk_in_representation() {
        let t = Truncation::default();
        for n in [2, 3] {
            let r = psikk_rep_residual(C64::new(0.8, 0.3), cx(1.3), &pr(n), &t).unwrap();
            assert!(r < 1e-9, "N={n}: {r:e}");
        }
    }

    #[test]
    fn cross_wiring() {
        let t = Truncation::default();
        let v = [cx(0.31), cx(0.11), cx(-0.23)];
        let c = cross_wiring_residual(v, &dyn_s(3), &pr(3), &t).unwrap();
        assert!(c.difference < 1e-10 && c.via_r < 1e-9, "{c:?}");
    }
}

//! Closed-form two-point OPE coefficients, their oscillator cross-checks, and the
//! exchange, product and coincident-point checks built on them.

use crate::error::{Error, Result};
use crate::modes::{ope_from_modes, spec, ModeSpec, OracleResult};
use crate::params::{EllipticParams, Star, Truncation};
use crate::qseries::{curly, qpoch, theta_big};
use crate::C64;

/// Which infinite product a factor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    /// `(z; p)_inf`
    P,
    /// `(z; p*)_inf`
    PStar,
    /// `(z; q^{2N})_inf`
    Q2N,
    /// `{z} = (z; p, q^{2N})_inf`
    Curly,
    /// `{z}* = (z; p*, q^{2N})_inf`
    CurlyStar,
}

/// `(a x; base)^pow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub a: C64,
    pub base: Base,
    pub pow: i32,
}

fn eval_base(z: C64, base: Base, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    match base {
        Base::P => qpoch(z, params.p, t),
        Base::PStar => qpoch(z, params.p_star, t),
        Base::Q2N => qpoch(z, params.qpow(2.0 * params.n as f64), t),
        Base::Curly => curly(z, params, Star::Plain, t),
        Base::CurlyStar => curly(z, params, Star::Starred, t),
    }
}

/// Evaluate a product of factors at `x`.
pub fn eval_factors(fs: &[Factor], x: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let mut acc = C64::new(1.0, 0.0);
    for f in fs {
        acc *= eval_base(f.a * x, f.base, params, t)?.powi(f.pow);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelConstraint {
    Generic,
    LevelOne,
}

/// One OPE coefficient formula, instantiated at concrete indices.
#[derive(Debug, Clone)]
pub struct OpeEntry {
    /// Instance name, e.g. `kk_ordered[1,3]`.
    pub name: String,
    /// The formula family this instance comes from, e.g. `kk_ordered`.
    pub family: &'static str,
    pub left: ModeSpec,
    pub right: ModeSpec,
    pub factors: Vec<Factor>,
    pub level: LevelConstraint,
    /// Distance from the origin to the nearest zero or pole of the closed form.
    pub domain: f64,
}

impl OpeEntry {
    fn new(
        family: &'static str,
        idx: &[usize],
        left: ModeSpec,
        right: ModeSpec,
        factors: Vec<Factor>,
        level: LevelConstraint,
    ) -> Self {
        let domain = factors.iter().map(|f| 1.0 / f.a.norm()).fold(f64::INFINITY, f64::min);
        let name = if idx.is_empty() {
            family.to_string()
        } else {
            let s: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            format!("{family}[{}]", s.join(","))
        };
        OpeEntry { name, family, left, right, factors, level, domain }
    }

    /// The closed form at any `x` (the products converge everywhere).
    pub fn closed_form(&self, x: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
        eval_factors(&self.factors, x, params, t)
    }

    /// Five points on a spiral inside the domain, `|x| <= min(0.4, 0.8 * domain)`.
    pub fn grid(&self) -> Vec<C64> {
        let rmax = 0.4f64.min(0.8 * self.domain);
        (1..=5).map(|k| C64::from_polar(rmax * k as f64 / 5.0, 0.7 * k as f64)).collect()
    }
}

fn fac(a: C64, base: Base, pow: i32) -> Factor {
    Factor { a, base, pow }
}

/// The full table for the given `N`. Level-one entries are built for every `c` but
/// [`verify_entry`] refuses them unless `c = 1`.
pub fn catalog(p: &EllipticParams) -> Result<Vec<OpeEntry>> {
    use Base::*;
    use LevelConstraint::*;
    let n = p.n;
    let nf = n as f64;
    let q = |e: f64| p.qpow(e);
    let pp = p.p;
    let ps = p.p_star;
    let one = C64::new(1.0, 0.0);
    let mut out = Vec::new();

    let kk_same = vec![
        fac(pp * q(2.0), Curly, 1),
        fac(pp * q(2.0 * nf - 2.0), Curly, 1),
        fac(ps * q(2.0 * nf), CurlyStar, 1),
        fac(ps, CurlyStar, 1),
        fac(pp * q(2.0 * nf), Curly, -1),
        fac(pp, Curly, -1),
        fac(ps * q(2.0), CurlyStar, -1),
        fac(ps * q(2.0 * nf - 2.0), CurlyStar, -1),
    ];
    let kk_ordered = vec![
        fac(pp * q(2.0 * nf + 2.0), Curly, 1),
        fac(pp * q(2.0 * nf - 2.0), Curly, 1),
        fac(ps * q(2.0 * nf), CurlyStar, 2),
        fac(pp * q(2.0 * nf), Curly, -2),
        fac(ps * q(2.0 * nf + 2.0), CurlyStar, -1),
        fac(ps * q(2.0 * nf - 2.0), CurlyStar, -1),
    ];
    let kk_reversed = vec![
        fac(pp * q(2.0), Curly, 1),
        fac(pp * q(-2.0), Curly, 1),
        fac(ps, CurlyStar, 2),
        fac(pp, Curly, -2),
        fac(ps * q(2.0), CurlyStar, -1),
        fac(ps * q(-2.0), CurlyStar, -1),
    ];
    for j in 1..=n {
        out.push(OpeEntry::new("kk_same", &[j], spec::k(j, one, p)?, spec::k(j, one, p)?, kk_same.clone(), Generic));
    }
    for j1 in 1..=n {
        for j2 in (j1 + 1)..=n {
            let (a, b) = (spec::k(j1, one, p)?, spec::k(j2, one, p)?);
            out.push(OpeEntry::new("kk_ordered", &[j1, j2], a.clone(), b.clone(), kk_ordered.clone(), Generic));
            out.push(OpeEntry::new("kk_reversed", &[j2, j1], b, a, kk_reversed.clone(), Generic));
        }
    }
    let psipsi_same = vec![
        fac(pp * q(2.0), P, 1),
        fac(ps * q(-2.0), PStar, 1),
        fac(pp * q(-2.0), P, -1),
        fac(ps * q(2.0), PStar, -1),
    ];
    let psipsi_adj = vec![
        fac(pp * q(-1.0), P, 1),
        fac(ps * q(1.0), PStar, 1),
        fac(pp * q(1.0), P, -1),
        fac(ps * q(-1.0), PStar, -1),
    ];
    for j in 1..n {
        let s = spec::psi_plus(j, p)?;
        out.push(OpeEntry::new("psipsi_same", &[j], s.clone(), s, psipsi_same.clone(), Generic));
    }
    for j in 1..n.saturating_sub(1) {
        let (a, b) = (spec::psi_plus(j, p)?, spec::psi_plus(j + 1, p)?);
        out.push(OpeEntry::new("psipsi_adj", &[j, j + 1], a.clone(), b.clone(), psipsi_adj.clone(), Generic));
        out.push(OpeEntry::new("psipsi_adj_rev", &[j + 1, j], b, a, psipsi_adj.clone(), Generic));
    }

    // Level one: boson parts of K+, f, e, Phi, Psi*.
    for j in 1..n {
        let jf = j as f64;
        let (f, e) = (spec::f(j, p)?, spec::e(j, p)?);
        let (kj, kj1) = (spec::k_plus(j, p)?, spec::k_plus(j + 1, p)?);
        let (rj, rj1) = (spec::k_plus_right(j, p)?, spec::k_plus_right(j + 1, p)?);
        let ratio = |a: f64, b: f64, base: Base| vec![fac(q(a), base, 1), fac(q(b), base, -1)];
        let list = [
            ("Kf_j", kj.clone(), f.clone(), ratio(nf - jf + 1.0, nf - jf - 1.0, P)),
            ("Kf_j+1", kj1.clone(), f.clone(), ratio(nf - jf - 3.0, nf - jf - 1.0, P)),
            ("fK_j", f.clone(), rj.clone(), ratio(-nf + jf - 1.0, -nf + jf - 3.0, P)),
            ("fK_j+1", f.clone(), rj1.clone(), ratio(-nf + jf - 1.0, -nf + jf + 1.0, P)),
            ("Ke_j", kj.clone(), e.clone(), ratio(nf - jf - 2.0, nf - jf, PStar)),
            ("Ke_j+1", kj1.clone(), e.clone(), ratio(nf - jf - 2.0, nf - jf - 4.0, PStar)),
            ("eK_j", e.clone(), rj, ratio(-nf + jf - 4.0, -nf + jf - 2.0, PStar)),
            ("eK_j+1", e.clone(), rj1, ratio(-nf + jf, -nf + jf - 2.0, PStar)),
        ];
        for (d, a, b, fs) in list {
            out.push(OpeEntry::new(d, &[j], a, b, fs, LevelOne));
        }
    }

    let phi = spec::phi_n(p);
    let psi = spec::psi_star_n(p);
    let kn = spec::k_plus(n, p)?;
    out.push(OpeEntry::new(
        "phiK_N",
        &[],
        phi.clone(),
        kn.clone(),
        vec![
            fac(pp * q(3.0), Curly, 1),
            fac(pp * q(2.0 * nf - 1.0), Curly, 1),
            fac(pp * q(1.0), Curly, -1),
            fac(pp * q(2.0 * nf + 1.0), Curly, -1),
        ],
        LevelOne,
    ));
    out.push(OpeEntry::new(
        "Kphi_N",
        &[],
        kn.clone(),
        phi.clone(),
        vec![
            fac(q(1.0), Curly, 1),
            fac(q(2.0 * nf - 3.0), Curly, 1),
            fac(q(-1.0), Curly, -1),
            fac(q(2.0 * nf - 1.0), Curly, -1),
        ],
        LevelOne,
    ));
    out.push(OpeEntry::new(
        "psiK_N",
        &[],
        psi.clone(),
        kn.clone(),
        vec![
            fac(ps * q(2.0), CurlyStar, 1),
            fac(ps * q(2.0 * nf + 2.0), CurlyStar, 1),
            fac(ps * q(4.0), CurlyStar, -1),
            fac(ps * q(2.0 * nf), CurlyStar, -1),
        ],
        LevelOne,
    ));
    out.push(OpeEntry::new(
        "Kpsi_N",
        &[],
        kn,
        psi.clone(),
        vec![
            fac(q(-2.0), CurlyStar, 1),
            fac(q(2.0 * nf - 2.0), CurlyStar, 1),
            fac(one, CurlyStar, -1),
            fac(q(2.0 * nf - 4.0), CurlyStar, -1),
        ],
        LevelOne,
    ));
    for j in 1..n {
        let kj = spec::k_plus(j, p)?;
        out.push(OpeEntry::new(
            "phiK_j",
            &[j],
            phi.clone(),
            kj.clone(),
            vec![fac(pp * q(3.0), Curly, 1), fac(pp * q(-1.0), Curly, 1), fac(pp * q(1.0), Curly, -2)],
            LevelOne,
        ));
        out.push(OpeEntry::new(
            "Kphi_j",
            &[j],
            kj.clone(),
            phi.clone(),
            vec![
                fac(q(2.0 * nf + 1.0), Curly, 1),
                fac(q(2.0 * nf - 3.0), Curly, 1),
                fac(q(2.0 * nf - 1.0), Curly, -2),
            ],
            LevelOne,
        ));
        out.push(OpeEntry::new(
            "psiK_j",
            &[j],
            psi.clone(),
            kj.clone(),
            vec![fac(ps * q(2.0), CurlyStar, 2), fac(ps * q(4.0), CurlyStar, -1), fac(ps, CurlyStar, -1)],
            LevelOne,
        ));
        out.push(OpeEntry::new(
            "Kpsi_j",
            &[j],
            kj,
            psi.clone(),
            vec![
                fac(q(2.0 * nf - 2.0), CurlyStar, 2),
                fac(q(2.0 * nf), CurlyStar, -1),
                fac(q(2.0 * nf - 4.0), CurlyStar, -1),
            ],
            LevelOne,
        ));
    }

    let f_last = spec::f(n - 1, p)?;
    let e_last = spec::e(n - 1, p)?;
    let f_phi = vec![fac(pp * q(-1.0), P, 1), fac(q(1.0), P, -1)];
    let e_psi = vec![fac(ps * q(1.0), PStar, 1), fac(q(-1.0), PStar, -1)];
    out.push(OpeEntry::new("fphi", &[], f_last.clone(), phi.clone(), f_phi.clone(), LevelOne));
    out.push(OpeEntry::new("phif", &[], phi.clone(), f_last, f_phi.clone(), LevelOne));
    out.push(OpeEntry::new("epsi", &[], e_last.clone(), psi.clone(), e_psi.clone(), LevelOne));
    out.push(OpeEntry::new("psie", &[], psi.clone(), e_last, e_psi.clone(), LevelOne));

    out.push(OpeEntry::new(
        "phiphi",
        &[],
        phi.clone(),
        phi.clone(),
        vec![
            fac(pp * q(2.0 * nf - 2.0), Curly, 1),
            fac(q(2.0), Curly, 1),
            fac(q(2.0 * nf), Curly, -1),
            fac(pp, Curly, -1),
        ],
        LevelOne,
    ));
    out.push(OpeEntry::new(
        "psipsiN",
        &[],
        psi.clone(),
        psi.clone(),
        vec![
            fac(ps * q(2.0 * nf), CurlyStar, 1),
            fac(one, CurlyStar, 1),
            fac(ps * q(2.0), CurlyStar, -1),
            fac(q(2.0 * nf - 2.0), CurlyStar, -1),
        ],
        LevelOne,
    ));
    let chi_like = vec![fac(q(2.0 * nf - 1.0), Q2N, 1), fac(q(1.0), Q2N, -1)];
    out.push(OpeEntry::new("phipsi", &[], phi.clone(), psi.clone(), chi_like.clone(), LevelOne));
    out.push(OpeEntry::new("psiphi", &[], psi, phi, chi_like, LevelOne));

    let ee_same = vec![
        fac(one, PStar, 1),
        fac(q(-2.0), PStar, 1),
        fac(ps * q(2.0), PStar, -1),
        fac(ps, PStar, -1),
    ];
    let ff_same = vec![fac(one, P, 1), fac(q(2.0), P, 1), fac(pp, P, -1), fac(pp * q(-2.0), P, -1)];
    for j in 1..n {
        let e = spec::e(j, p)?;
        let f = spec::f(j, p)?;
        out.push(OpeEntry::new("ee", &[j], e.clone(), e, ee_same.clone(), LevelOne));
        out.push(OpeEntry::new("ff", &[j], f.clone(), f, ff_same.clone(), LevelOne));
    }
    for j in 1..n.saturating_sub(1) {
        let (e1, e2) = (spec::e(j, p)?, spec::e(j + 1, p)?);
        let (f1, f2) = (spec::f(j, p)?, spec::f(j + 1, p)?);
        out.push(OpeEntry::new("ee12", &[j, j + 1], e1.clone(), e2.clone(), e_psi.clone(), LevelOne));
        out.push(OpeEntry::new("ee21", &[j + 1, j], e2, e1, e_psi.clone(), LevelOne));
        out.push(OpeEntry::new("ff12", &[j, j + 1], f1.clone(), f2.clone(), f_phi.clone(), LevelOne));
        out.push(OpeEntry::new("ff21", &[j + 1, j], f2, f1, f_phi.clone(), LevelOne));
    }
    Ok(out)
}

/// The distinct formula families present in a catalog.
pub fn families(entries: &[OpeEntry]) -> Vec<&'static str> {
    let mut d: Vec<&'static str> = entries.iter().map(|e| e.family).collect();
    d.sort_unstable();
    d.dedup();
    d
}

/// Outcome of comparing a closed form with the oscillator contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryCheck {
    pub residual: f64,
    pub closed: C64,
    pub oracle: OracleResult,
}

/// `|closed(x) - oracle(x)| / |closed(x)|`.
pub fn verify_entry(e: &OpeEntry, x: C64, params: &EllipticParams, t: &Truncation) -> Result<EntryCheck> {
    if e.level == LevelConstraint::LevelOne && !params.is_level_one() {
        return Err(Error::LevelMismatch { name: e.name.clone(), c: params.c });
    }
    if !(x.norm() < e.domain) {
        return Err(Error::Domain(format!("|x| = {} outside |x| < {} for {}", x.norm(), e.domain, e.name)));
    }
    let closed = e.closed_form(x, params, t)?;
    let oracle = ope_from_modes(&e.left, &e.right, x, params, t)?;
    Ok(EntryCheck { residual: (closed - oracle.value).norm() / closed.norm(), closed, oracle })
}

/// Exchange relations checked on closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeKind {
    PsiPsiSame,
    PsiPsiAdj,
    KkSame,
    KkOrdered,
    EeSame,
    FfSame,
    PhiPsi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangePair {
    pub kind: ExchangeKind,
    /// Indices of the left and right current (ignored for `PhiPsi`).
    pub i: usize,
    pub j: usize,
}

impl ExchangePair {
    /// Parse `psipsi_same`, `psipsi_adj`, `kk_same`, `kk_ordered`, `ee_same`, `ff_same`, `phi_psi`
    /// with the lowest admissible indices.
    pub fn parse(name: &str, n: usize) -> Result<Self> {
        use ExchangeKind::*;
        let (kind, i, j) = match name {
            "psipsi_same" => (PsiPsiSame, 1, 1),
            "psipsi_adj" => (PsiPsiAdj, 1, 2),
            "kk_same" => (KkSame, 1, 1),
            "kk_ordered" => (KkOrdered, 1, n),
            "ee_same" => (EeSame, 1, 1),
            "ff_same" => (FfSame, 1, 1),
            "phi_psi" => (PhiPsi, n, n),
            _ => return Err(Error::UnknownPair(name.to_string())),
        };
        if kind == PsiPsiAdj && n < 3 {
            return Err(Error::UnknownPair(format!("{name} needs N >= 3")));
        }
        Ok(ExchangePair { kind, i, j })
    }

    pub fn label(&self) -> String {
        use ExchangeKind::*;
        match self.kind {
            PsiPsiSame => format!("psipsi_same[{}]", self.i),
            PsiPsiAdj => format!("psipsi_adj[{},{}]", self.i, self.j),
            KkSame => format!("kk_same[{}]", self.i),
            KkOrdered => format!("kk_ordered[{},{}]", self.i, self.j),
            EeSame => format!("ee_same[{}]", self.i),
            FfSame => format!("ff_same[{}]", self.i),
            PhiPsi => "phi_psi".to_string(),
        }
    }

    fn level(&self) -> LevelConstraint {
        use ExchangeKind::*;
        match self.kind {
            EeSame | FfSame | PhiPsi => LevelConstraint::LevelOne,
            _ => LevelConstraint::Generic,
        }
    }
}

fn find<'a>(cat: &'a [OpeEntry], name: &str) -> Result<&'a OpeEntry> {
    cat.iter().find(|e| e.name == name).ok_or_else(|| Error::UnknownPair(name.to_string()))
}

/// Product part of `rho^+(v)` at `z = q^{2v}` (no monomial prefactor).
pub fn rho_plus_product(z: C64, params: &EllipticParams, star: Star, t: &Truncation) -> Result<C64> {
    let n = params.n as f64;
    let p = match star {
        Star::Plain => params.p,
        Star::Starred => params.p_star,
    };
    let q = |e: f64| params.qpow(e);
    let c = |w: C64| curly(w, params, star, t);
    Ok(c(p * q(2.0) * z)? * c(p * q(2.0 * n - 2.0) * z)? * c(z.inv())? * c(q(2.0 * n) / z)?
        / (c(p * z)? * c(p * q(2.0 * n) * z)? * c(q(2.0) / z)? * c(q(2.0 * n - 2.0) / z)?))
}

/// The theta/product exchange factor `T(z)` with `A(z1)B(z2) = T(z1/z2) B(z2)A(z1)`.
pub fn exchange_factor(pair: &ExchangePair, z: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    use ExchangeKind::*;
    let q = |e: f64| params.qpow(e);
    let th = |w: C64| theta_big(w, params.p, t);
    let ths = |w: C64| theta_big(w, params.p_star, t);
    match pair.kind {
        PsiPsiSame | PsiPsiAdj => {
            let a = if pair.kind == PsiPsiSame { 2.0 } else { -1.0 };
            Ok(th(q(-a) * z)? * ths(q(a) * z)? / (th(q(a) * z)? * ths(q(-a) * z)?))
        }
        // The OPE catalog requires rho(v2 - v1) = 1/rho(v1 - v2) here; the theta part is unchanged.
        KkSame | KkOrdered => {
            let rho = rho_plus_product(z, params, Star::Plain, t)? / rho_plus_product(z, params, Star::Starred, t)?;
            let forward = kk_forward_factor(pair, z, params, t)?;
            Ok(forward / (rho * rho))
        }
        EeSame => Ok(ths(q(2.0) * z)? / ths(q(-2.0) * z)?),
        FfSame => Ok(th(q(-2.0) * z)? / th(q(2.0) * z)?),
        PhiPsi => {
            let b = params.qpow(2.0 * params.n as f64);
            Ok(theta_big(q(1.0) * z, b, t)? / theta_big(q(1.0) / z, b, t)?)
        }
    }
}

/// `rho(v)` product part, times `Theta_p(z)Theta_{p*}(q^{-2}z)/(Theta_p(q^{-2}z)Theta_{p*}(z))` for ordered pairs.
pub fn kk_forward_factor(pair: &ExchangePair, z: C64, params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let q2 = params.qpow(-2.0);
    let rho = rho_plus_product(z, params, Star::Plain, t)? / rho_plus_product(z, params, Star::Starred, t)?;
    match pair.kind {
        ExchangeKind::KkSame => Ok(rho),
        ExchangeKind::KkOrdered => {
            let th = |w: C64| theta_big(w, params.p, t);
            let ths = |w: C64| theta_big(w, params.p_star, t);
            Ok(rho * th(z)? * ths(q2 * z)? / (th(q2 * z)? * ths(z)?))
        }
        _ => Err(Error::UnknownPair(format!("{} has no rho factor", pair.label()))),
    }
}

/// Residual of the k-k exchange using `rho(v1 - v2)` in place of `rho(v2 - v1)`; a diagnostic,
/// expected to be `O(p)` rather than zero.
pub fn kk_forward_rho_residual(pair: &ExchangePair, x: C64, params: &EllipticParams, t: &Truncation) -> Result<f64> {
    let cat = catalog(params)?;
    let (ab, ba) = exchange_entries(pair, &cat)?;
    let xi = x.inv();
    let g = ab.closed_form(x, params, t)? / (ba.closed_form(xi, params, t)? * kk_forward_factor(pair, xi, params, t)?);
    Ok((g - 1.0).norm())
}

/// Result of one exchange check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeResult {
    /// `|g(x) / (C x^a) - 1|`.
    pub residual: f64,
    /// Fitted monomial exponent `a`.
    pub exponent_gap: C64,
    /// Fitted monomial prefactor `C`.
    pub prefactor: C64,
}

/// Points used to fit the leftover monomial `C x^a`.
pub const EXCHANGE_FIT_POINTS: [f64; 2] = [0.61, 1.37];

fn exchange_entries<'a>(pair: &ExchangePair, cat: &'a [OpeEntry]) -> Result<(&'a OpeEntry, &'a OpeEntry)> {
    use ExchangeKind::*;
    let (i, j) = (pair.i, pair.j);
    Ok(match pair.kind {
        PsiPsiSame => {
            let e = find(cat, &format!("psipsi_same[{i}]"))?;
            (e, e)
        }
        PsiPsiAdj => (find(cat, &format!("psipsi_adj[{i},{j}]"))?, find(cat, &format!("psipsi_adj_rev[{j},{i}]"))?),
        KkSame => {
            let e = find(cat, &format!("kk_same[{i}]"))?;
            (e, e)
        }
        KkOrdered => (find(cat, &format!("kk_ordered[{i},{j}]"))?, find(cat, &format!("kk_reversed[{j},{i}]"))?),
        EeSame => {
            let e = find(cat, &format!("ee[{i}]"))?;
            (e, e)
        }
        FfSame => {
            let e = find(cat, &format!("ff[{i}]"))?;
            (e, e)
        }
        PhiPsi => (find(cat, "phipsi")?, find(cat, "psiphi")?),
    })
}

/// `g(x) = <AB>(x) / (<BA>(1/x) T(1/x))`; a pure monomial when the exchange relation holds.
pub fn exchange_ratio(pair: &ExchangePair, x: C64, cat: &[OpeEntry], params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let (ab, ba) = exchange_entries(pair, cat)?;
    let xi = x.inv();
    Ok(ab.closed_form(x, params, t)? / (ba.closed_form(xi, params, t)? * exchange_factor(pair, xi, params, t)?))
}

/// Product-part residual of an exchange relation at `x`, with the monomial fitted at
/// [`EXCHANGE_FIT_POINTS`] and reported separately.
pub fn exchange_check(pair: &ExchangePair, x: C64, params: &EllipticParams, t: &Truncation) -> Result<ExchangeResult> {
    if pair.level() == LevelConstraint::LevelOne && !params.is_level_one() {
        return Err(Error::LevelMismatch { name: pair.label(), c: params.c });
    }
    let cat = catalog(params)?;
    let [x1, x2] = EXCHANGE_FIT_POINTS.map(|v| C64::new(v, 0.0));
    let g1 = exchange_ratio(pair, x1, &cat, params, t)?;
    let g2 = exchange_ratio(pair, x2, &cat, params, t)?;
    let a = (g2 / g1).ln() / (x2 / x1).ln();
    let c = g1 / (x1.ln() * a).exp();
    let g = exchange_ratio(pair, x, &cat, params, t)?;
    let fit = c * (x.ln() * a).exp();
    Ok(ExchangeResult { residual: (g / fit - 1.0).norm(), exponent_gap: a, prefactor: c })
}

/// `c_N`, the coincident-point value of the ordered `kk` coefficient at `x = q^2`.
pub fn c_n(params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let n = params.n as f64;
    let q = |e: f64| params.qpow(e);
    let c = |w: C64| curly(w, params, Star::Plain, t);
    let cs = |w: C64| curly(w, params, Star::Starred, t);
    let (p, ps) = (params.p, params.p_star);
    Ok(c(p * q(2.0 * n + 4.0))? * c(p * q(2.0 * n))? * cs(ps * q(2.0 * n + 2.0))?.powi(2)
        / (c(p * q(2.0 * n + 2.0))?.powi(2) * cs(ps * q(2.0 * n + 4.0))? * cs(ps * q(2.0 * n))?))
}

/// `kappa = (p;p)(p* q^2;p*) / ((p*;p*)(p q^2;p))`.
pub fn kappa(params: &EllipticParams, t: &Truncation) -> Result<C64> {
    let (p, ps) = (params.p, params.p_star);
    let q2 = params.qpow(2.0);
    Ok(qpoch(p, p, t)? * qpoch(ps * q2, ps, t)? / (qpoch(ps, ps, t)? * qpoch(p * q2, p, t)?))
}

/// Outcome of the ordered product `k_1(z) k_2(q^2 z) ... k_N(q^{2N-2} z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProdkResult {
    /// Product of the pairwise closed-form contractions.
    pub product: C64,
    /// The same product from the oscillator oracle.
    pub oracle_product: C64,
    pub target: C64,
    /// `|product / c_N^{N-1} - 1|`.
    pub residual: f64,
    pub oracle_residual: f64,
    /// Each pair `(i, j, contraction)`.
    pub pairs: Vec<(usize, usize, C64)>,
    /// `max_m |sum_j q^{2jm} B^j_m|` for `|m| <= 20`.
    pub constraint_residual: f64,
    /// `max_m |sum_j q^{-2(j-1)m} B^j_m|` for `|m| <= 20`: the oscillator part left in the product.
    pub operator_residual: f64,
}

pub fn prodk_check(z: C64, params: &EllipticParams, t: &Truncation) -> Result<ProdkResult> {
    let n = params.n;
    let cat = catalog(params)?;
    let mut product = C64::new(1.0, 0.0);
    let mut oracle_product = C64::new(1.0, 0.0);
    let mut pairs = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let e = find(&cat, &format!("kk_ordered[{i},{j}]"))?;
            let zi = z * params.qpow(2.0 * (i as f64 - 1.0));
            let zj = z * params.qpow(2.0 * (j as f64 - 1.0));
            let x = zj / zi;
            let v = e.closed_form(x, params, t)?;
            product *= v;
            oracle_product *= ope_from_modes(&e.left, &e.right, x, params, t)?.value;
            pairs.push((i, j, v));
        }
    }
    let target = c_n(params, t)?.powi(n as i32 - 1);
    let mut constraint_residual: f64 = 0.0;
    let mut operator_residual: f64 = 0.0;
    for m in (-20i64..=20).filter(|&m| m != 0) {
        constraint_residual = constraint_residual.max(crate::modes::constraint_residual(m, params)?);
        let mut acc = vec![C64::new(0.0, 0.0); n - 1];
        let mut scale: f64 = 0.0;
        for j in 1..=n {
            let w = params.qpow(-2.0 * (j as f64 - 1.0) * m as f64);
            for (a, b) in acc.iter_mut().zip(crate::modes::b_in_b_basis(j, m, params)?) {
                scale = scale.max((w * b).norm());
                *a += w * b;
            }
        }
        operator_residual = operator_residual.max(vec_norm(&acc) / scale);
    }
    Ok(ProdkResult {
        product,
        oracle_product,
        target,
        residual: (product / target - 1.0).norm(),
        oracle_residual: (oracle_product / target - 1.0).norm(),
        pairs,
        constraint_residual,
        operator_residual,
    })
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Outcome of comparing `psi_j^+` with `k_j k_{j+1}^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub kappa: C64,
    /// `<k_j(w) k_{j+1}(w)^{-1}>` from the oscillator oracle.
    pub contraction: C64,
    /// `|contraction / kappa - 1|`.
    pub residual: f64,
    /// Max mismatch of the per-mode coefficients of `psi_j^+(q^{-(r-c/2)} z)` and
    /// `k_j(q^{N-j} z) k_{j+1}(q^{N-j} z)^{-1}`, `|m| <= 20`.
    pub mode_residual: f64,
}

pub fn kappa_check(j: usize, params: &EllipticParams, t: &Truncation) -> Result<KappaResult> {
    let one = C64::new(1.0, 0.0);
    let a = spec::k(j, one, params)?;
    let b = spec::k_inv(j + 1, one, params)?;
    let contraction = ope_from_modes(&a, &b, one, params, t)?.value;
    let kap = kappa(params, t)?;

    let psi = spec::psi_plus(j, params)?;
    let zeta_psi = psi.zeta * params.qpow(-(params.r - params.c / 2.0));
    let zeta_k = params.qpow(params.n as f64 - j as f64);
    let mut mode_residual: f64 = 0.0;
    for m in (-20i64..=20).filter(|&m| m != 0) {
        let lp = psi.coeff(m, params);
        let ka = a.coeff(m, params);
        let kb = b.coeff(m, params);
        let sp = zeta_psi.powf(-(m as f64));
        let sk = zeta_k.powf(-(m as f64));
        for idx in 0..params.n {
            let lhs = lp[idx] * sp;
            let rhs = (ka[idx] + kb[idx]) * sk;
            mode_residual = mode_residual.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300));
        }
    }
    Ok(KappaResult { kappa: kap, contraction, residual: (contraction / kap - 1.0).norm(), mode_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::make_params;

    fn pr(c: f64, n: usize) -> EllipticParams {
        make_params(C64::new(0.5, 0.0), 7.3, c, n).unwrap()
    }

    #[test]
    fn catalog_covers_every_family() {
        let cat = catalog(&pr(1.0, 3)).unwrap();
        assert_eq!(families(&cat).len(), 36);
        assert!(cat.len() >= 30);
        // N = 2 has no adjacent pairs among the N-1 simple roots.
        let d2 = families(&catalog(&pr(1.0, 2)).unwrap()).len();
        assert_eq!(d2, 36 - 6);
    }

    #[test]
    fn origin_is_trivial() {
        let p = pr(1.0, 3);
        let t = Truncation::default();
        for e in catalog(&p).unwrap() {
            let v = verify_entry(&e, C64::new(0.0, 0.0), &p, &t).unwrap();
            assert_eq!(v.residual, 0.0, "{}", e.name);
        }
    }

    #[test]
    fn kk_same_spot() {
        let p = pr(1.0, 3);
        let t = Truncation::default();
        let cat = catalog(&p).unwrap();
        let e = find(&cat, "kk_same[1]").unwrap();
        assert!(verify_entry(e, C64::new(0.3, 0.0), &p, &t).unwrap().residual < 1e-8);
        let ee = find(&cat, "ee[1]").unwrap();
        assert!(verify_entry(ee, C64::new(0.25 * ee.domain.min(1.0), 0.0), &p, &t).unwrap().residual < 1e-8);
    }

    #[test]
    fn level_one_entries_are_gated() {
        let p = pr(0.7, 3);
        let cat = catalog(&p).unwrap();
        let e = find(&cat, "phiphi").unwrap();
        let r = verify_entry(e, C64::new(0.1, 0.0), &p, &Truncation::default());
        assert!(matches!(r, Err(Error::LevelMismatch { .. })));
    }

    #[test]
    fn unknown_pair() {
        assert!(matches!(ExchangePair::parse("kk_sideways", 3), Err(Error::UnknownPair(_))));
    }

    #[test]
    fn degenerate_constants_at_c0() {
        let p = pr(0.0, 3);
        let t = Truncation::default();
        assert!((kappa(&p, &t).unwrap() - 1.0).norm() < 1e-12);
        assert!((c_n(&p, &t).unwrap() - 1.0).norm() < 1e-12);
    }
}

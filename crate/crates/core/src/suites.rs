//! Named verification suites. Each returns a list of [`Case`]s for one parameter point.

use crate::bracket::{contour_norm, contour_norm_star, quasi_period_residuals_at, Bracket};
use crate::dybe::dybe_suite;
use crate::error::{check_redraws, Error, Result};
use crate::evalrep::{cross_wiring_residual, l_equals_r_residual, psikk_rep_residual};
use crate::identities::{identity_suite, IdentityMaxima};
use crate::modes::{comm_b_closed, comm_b_derived, constraint_residual};
use crate::ope::{catalog, exchange_check, kappa_check, kk_forward_rho_residual, prodk_check, verify_entry, ExchangeKind, ExchangePair, LevelConstraint};
use crate::params::{DynParams, EllipticParams, Star, Truncation};
use crate::qseries::{curly, qpoch, qpoch_bounded, qpoch_multi, theta_big};
use crate::report::{sort_cases, Case, Report, ReportParams};
use crate::rmatrix::{constants, permutation, rbar, rho_phi_minus_sign_residual, rho_phi_residual, rho_plus, rho_tilde_candidate_residual, rplus, rstar};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Theta,
    Qseries,
    Modes,
    Ope,
    Exchange,
    Rmatrix,
    Dybe,
    Evalrep,
    Identities,
    Constants,
    All,
}

impl Suite {
    pub const EACH: [Suite; 10] = [
        Suite::Theta,
        Suite::Qseries,
        Suite::Modes,
        Suite::Ope,
        Suite::Exchange,
        Suite::Rmatrix,
        Suite::Dybe,
        Suite::Evalrep,
        Suite::Identities,
        Suite::Constants,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Theta => "theta",
            Suite::Qseries => "qseries",
            Suite::Modes => "modes",
            Suite::Ope => "ope",
            Suite::Exchange => "exchange",
            Suite::Rmatrix => "rmatrix",
            Suite::Dybe => "dybe",
            Suite::Evalrep => "evalrep",
            Suite::Identities => "identities",
            Suite::Constants => "constants",
            Suite::All => "all",
        }
    }

    /// Sample count used when none is given.
    pub fn default_points(self) -> usize {
        match self {
            Suite::Theta | Suite::Qseries | Suite::Identities => 100,
            _ => 50,
        }
    }

    /// Per-suite RNG stream, so suites stay independent under one seed.
    fn stream(self) -> u64 {
        Suite::EACH.iter().position(|&s| s == self).unwrap_or(10) as u64
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .copied()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Everything a suite run depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: EllipticParams,
    /// Overrides each suite's default sample count.
    pub points: Option<usize>,
    pub seed: u64,
    /// Overrides the default tolerance of every ordinary case.
    pub tol: Option<f64>,
    pub trunc: Truncation,
}

impl RunConfig {
    fn points(&self, s: Suite) -> usize {
        self.points.unwrap_or_else(|| s.default_points())
    }

    fn rng(&self, s: Suite) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(s.stream());
        r
    }
}

/// Run one suite (or all) and assemble its report.
pub fn run(suite: Suite, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let mut cases = match suite {
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::EACH {
                all.extend(run_cases(s, cfg)?);
            }
            all
        }
        s => run_cases(s, cfg)?,
    };
    if let Some(tol) = cfg.tol {
        cases = cases.into_iter().map(|c| c.with_tol(tol)).collect();
    }
    sort_cases(&mut cases);
    let p = &cfg.params;
    Ok(Report {
        suite: suite.name().to_string(),
        params: ReportParams { q: p.q.re, r: p.r, c: p.c, n: p.n },
        seed: cfg.seed,
        max_residual: Report::max_of(&cases),
        cases,
        elapsed_ms: start.elapsed().as_millis() as u64,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    })
}

/// The cases of a single suite, unsorted.
pub fn run_cases(suite: Suite, cfg: &RunConfig) -> Result<Vec<Case>> {
    match suite {
        Suite::Theta => theta(cfg),
        Suite::Qseries => qseries(cfg),
        Suite::Modes => modes(cfg),
        Suite::Ope => ope(cfg),
        Suite::Exchange => exchange(cfg),
        Suite::Rmatrix => rmatrix(cfg),
        Suite::Dybe => dybe(cfg),
        Suite::Evalrep => evalrep(cfg),
        Suite::Identities => identities(cfg),
        Suite::Constants => constants_suite(cfg),
        Suite::All => Err(Error::UnknownSuite("all cannot be nested".into())),
    }
}

fn star_label(s: Star) -> &'static str {
    match s {
        Star::Plain => "plain",
        Star::Starred => "star",
    }
}

fn rel(a: C64, b: C64) -> f64 {
    let m = a.norm().max(b.norm());
    if m == 0.0 {
        0.0
    } else {
        (a - b).norm() / m
    }
}

fn theta(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let n_pts = cfg.points(Suite::Theta);
    let mut rng = cfg.rng(Suite::Theta);
    let vs: Vec<C64> = (0..n_pts).map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.5..0.5))).collect();
    let pts = [("points", n_pts as f64)];
    let mut out = Vec::new();
    for star in [Star::Plain, Star::Starred] {
        let b = Bracket::new(p.level(star), t)?;
        let (mut odd, mut qr, mut qt): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for &v in &vs {
            odd = odd.max(rel(b.eval(-v), -b.eval(v)));
            match quasi_period_residuals_at(&b, v) {
                Ok((a, c)) => {
                    qr = qr.max(a);
                    qt = qt.max(c);
                }
                Err(Error::Degenerate { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let l = star_label(star);
        out.push(Case::within(format!("theta/oddness[{l}]"), &pts, odd, 1e-11));
        out.push(Case::within(format!("theta/quasi_period_r[{l}]"), &pts, qr, 1e-8));
        out.push(Case::within(format!("theta/quasi_period_rtau[{l}]"), &pts, qt, 1e-8));
    }
    let quad = [("quadrature_points", 4096.0)];
    out.push(Case::within("theta/contour_norm[plain]", &quad, (contour_norm(p, 4096, t)? - 1.0).norm(), 1e-6));
    out.push(Case::within("theta/contour_norm[star]", &quad, (contour_norm_star(p, 4096, t)? - 1.0).norm(), 1e-6));
    if p.c == 0.0 {
        let (b, bs) = (Bracket::plain(p, t)?, Bracket::starred(p, t)?);
        let d = vs.iter().map(|&v| rel(b.eval(v), bs.eval(v))).fold(0.0, f64::max);
        out.push(Case::within("theta/star_equals_plain", &pts, d, 1e-14));
    }
    Ok(out)
}

fn qseries(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let n_pts = cfg.points(Suite::Qseries);
    let mut rng = cfg.rng(Suite::Qseries);
    let zs: Vec<C64> = (0..n_pts)
        .map(|_| C64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(0.0..2.0 * PI)))
        .collect();
    let pts = [("points", n_pts as f64)];
    let q2n = p.qpow(2.0 * p.n as f64);
    let mut out = Vec::new();
    for (label, base) in [("p", p.p), ("p_star", p.p_star), ("q2N", q2n)] {
        let (mut th, mut po): (f64, f64) = (0.0, 0.0);
        for &z in &zs {
            th = th.max(rel(theta_big(base * z, base, t)?, -theta_big(z, base, t)? / z));
            po = po.max(rel(qpoch(z, base, t)? / (1.0 - z), qpoch(base * z, base, t)?));
        }
        out.push(Case::within(format!("qseries/theta_quasi_period[{label}]"), &pts, th, 1e-11));
        out.push(Case::within(format!("qseries/qpoch_shift[{label}]"), &pts, po, 1e-13));
    }
    let (mut cur, mut tail): (f64, f64) = (0.0, 0.0);
    for &z in &zs {
        for star in [Star::Plain, Star::Starred] {
            let base = p.level(star).p;
            cur = cur.max(rel(curly(z, p, star, t)?, qpoch_multi(z, &[base, q2n], t)?));
        }
        for base in [p.p, q2n] {
            tail = tail.max(qpoch_bounded(z, base, t)?.tail);
        }
    }
    out.push(Case::within("qseries/curly_is_double_product", &pts, cur, 0.0));
    out.push(Case::within("qseries/tail_bound", &pts, tail, t.tail_tol / (1.0 - q2n.norm().max(p.p.norm()))));
    Ok(out)
}

fn modes(cfg: &RunConfig) -> Result<Vec<Case>> {
    let p = &cfg.params;
    let n = p.n;
    let mut out = Vec::new();
    for j in 1..=n {
        for k in 1..=n {
            let mut worst: f64 = 0.0;
            for m in (-20i64..=20).filter(|&m| m != 0) {
                let a = comm_b_closed(j, k, m, -m, p)?;
                let b = comm_b_derived(j, k, m, -m, p)?;
                worst = worst.max((a - b).norm() / a.norm().max(1.0));
                // Off-diagonal modes commute.
                if 1 - m != 0 {
                    worst = worst.max(comm_b_derived(j, k, m, 1 - m, p)?.norm());
                }
            }
            out.push(Case::within(format!("modes/comm_b[{j},{k}]"), &[("max_mode", 20.0)], worst, 1e-12));
        }
    }
    let mut cons: f64 = 0.0;
    for m in (-20i64..=20).filter(|&m| m != 0) {
        cons = cons.max(constraint_residual(m, p)?);
    }
    out.push(Case::within("modes/constraint", &[("max_mode", 20.0)], cons, 1e-13));
    Ok(out)
}

fn level_ok(level: LevelConstraint, p: &EllipticParams) -> bool {
    level == LevelConstraint::Generic || p.is_level_one()
}

fn ope(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let mut out = Vec::new();
    for e in catalog(p)? {
        if !level_ok(e.level, p) {
            continue;
        }
        let grid = e.grid();
        let (mut worst, mut tail): (f64, f64) = (0.0, 0.0);
        for &x in &grid {
            let r = verify_entry(&e, x, p, t)?;
            worst = worst.max(r.residual);
            tail = tail.max(r.oracle.tail);
        }
        let radius = grid.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let inputs = [("grid_points", grid.len() as f64), ("max_abs_x", radius), ("oracle_terms", t.max_terms as f64)];
        out.push(Case::within(format!("ope/{}", e.name), &inputs, worst, 1e-8));
        out.push(Case::within(format!("ope/{}/oracle_tail", e.name), &inputs, tail, t.tail_tol));
    }
    Ok(out)
}

/// Every exchange pair admissible at this parameter point.
pub fn exchange_pairs(p: &EllipticParams) -> Vec<ExchangePair> {
    use ExchangeKind::*;
    let n = p.n;
    let mut v = Vec::new();
    for i in 1..n {
        v.push(ExchangePair { kind: PsiPsiSame, i, j: i });
        if i + 1 < n {
            v.push(ExchangePair { kind: PsiPsiAdj, i, j: i + 1 });
        }
    }
    for i in 1..=n {
        v.push(ExchangePair { kind: KkSame, i, j: i });
        for j in (i + 1)..=n {
            v.push(ExchangePair { kind: KkOrdered, i, j });
        }
    }
    if p.is_level_one() {
        for i in 1..n {
            v.push(ExchangePair { kind: EeSame, i, j: i });
            v.push(ExchangePair { kind: FfSame, i, j: i });
        }
        v.push(ExchangePair { kind: PhiPsi, i: n, j: n });
    }
    v
}

/// Sample points for exchange checks.
pub const EXCHANGE_POINTS: [f64; 3] = [0.37, 0.83, 1.77];

fn exchange(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let mut out = Vec::new();
    for pair in exchange_pairs(p) {
        let mut worst: f64 = 0.0;
        let mut fit = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut forward: f64 = 0.0;
        for x in EXCHANGE_POINTS {
            let xc = C64::new(x, 0.0);
            let r = exchange_check(&pair, xc, p, t)?;
            worst = worst.max(r.residual);
            fit = (r.exponent_gap, r.prefactor);
            if matches!(pair.kind, ExchangeKind::KkSame | ExchangeKind::KkOrdered) {
                forward = forward.max(kk_forward_rho_residual(&pair, xc, p, t)?);
            }
        }
        let mut inputs = vec![
            ("points", EXCHANGE_POINTS.len() as f64),
            ("fit_exponent_re", fit.0.re),
            ("fit_exponent_im", fit.0.im),
            ("fit_prefactor_re", fit.1.re),
            ("fit_prefactor_im", fit.1.im),
        ];
        if matches!(pair.kind, ExchangeKind::KkSame | ExchangeKind::KkOrdered) {
            inputs.push(("forward_rho_argument_residual", forward));
        }
        out.push(Case::within(format!("exchange/{}", pair.label()), &inputs, worst, 1e-8));
    }
    Ok(out)
}

fn sample_dyn(rng: &mut ChaCha8Rng, n: usize) -> Result<DynParams> {
    DynParams::new(n, (1..n).map(|j| C64::new(rng.gen_range(1.2..2.8) + 0.0137 * j as f64, 0.0)).collect())
}

fn rmatrix(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let n_pts = cfg.points(Suite::Rmatrix);
    let mut rng = cfg.rng(Suite::Rmatrix);
    let pts = [("points", n_pts as f64)];
    let perm = permutation(p.n);
    let (mut perm_res, mut phi, mut phi_minus, mut scale, mut cons, mut star): (f64, f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut taken, mut attempts) = (0, 0);
    while taken < n_pts {
        check_redraws(attempts - taken, n_pts)?;
        attempts += 1;
        let s = sample_dyn(&mut rng, p.n)?;
        let v = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3));
        let (r0, rb, rp) = match (rbar(C64::new(0.0, 0.0), &s, p, t), rbar(v, &s, p, t), rplus(v, &s, p, t)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (Err(Error::Pole { .. }), _, _) | (_, Err(Error::Pole { .. }), _) | (_, _, Err(Error::Pole { .. })) => continue,
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
        };
        let ph = match rho_phi_residual(v, p, t) {
            Ok(x) => x,
            Err(Error::Pole { .. }) => continue,
            Err(e) => return Err(e),
        };
        taken += 1;
        perm_res = perm_res.max((&r0 - &perm).max_abs());
        phi = phi.max(ph);
        phi_minus = phi_minus.max(rho_phi_minus_sign_residual(v, p, t)?);
        let rho = rho_plus(v, p, t)?;
        for (a, b) in rp.data.iter().zip(&rb.data) {
            if b.norm() > 0.0 {
                scale = scale.max(rel(a / b, rho));
            }
        }
        for a in 1..=p.n {
            for b in 1..=p.n {
                for c in 1..=p.n {
                    for d in 1..=p.n {
                        let (mut x, mut y) = ([a, b], [c, d]);
                        x.sort_unstable();
                        y.sort_unstable();
                        if x != y {
                            cons = cons.max(rb.entry(&[a, b], &[c, d]).norm());
                        }
                    }
                }
            }
        }
        if p.c == 0.0 {
            star = star.max((&rstar(v, &s, p, t)? - &rp).max_abs());
        }
    }
    let mut out = vec![
        Case::within("rmatrix/rbar_zero_is_permutation", &pts, perm_res, 1e-12),
        Case::within("rmatrix/rho_phi", &[("points", n_pts as f64), ("minus_sign_residual", phi_minus)], phi, 1e-9),
        Case::within("rmatrix/rplus_over_rbar_is_rho", &pts, scale, 1e-13),
        Case::within("rmatrix/weight_conservation", &pts, cons, 0.0),
    ];
    if p.c == 0.0 {
        out.push(Case::within("rmatrix/rstar_equals_rplus", &pts, star, 0.0));
    }
    Ok(out)
}

fn dybe(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let n_pts = cfg.points(Suite::Dybe);
    let rep = dybe_suite(n_pts, cfg.seed, p, t)?;
    let pts = [("points", n_pts as f64), ("skipped", rep.skipped as f64)];
    let mut out = vec![
        Case::within("dybe/max_residual", &pts, rep.max_residual, 1e-9),
        Case::within("dybe/max_residual_rbar", &pts, rep.max_stripped, 1e-9),
        Case::control("dybe/shifts_omitted_control", &pts, rep.max_no_shift, 1e-2),
    ];
    for pt in &rep.points {
        let mut inputs = vec![("v1", pt.v[0]), ("v2", pt.v[1]), ("v3", pt.v[2])];
        let names = ["s1", "s2", "s3", "s4", "s5", "s6", "s7"];
        for (k, s) in pt.s.iter().enumerate() {
            inputs.push((names.get(k).copied().unwrap_or("s_extra"), *s));
        }
        out.push(Case::within("dybe/point", &inputs, pt.residual, 1e-9));
    }
    Ok(out)
}

fn evalrep(cfg: &RunConfig) -> Result<Vec<Case>> {
    // The evaluation representation sits at c = 0.
    let p = &cfg.params.with_c(0.0)?;
    let t = &cfg.trunc;
    let n_pts = cfg.points(Suite::Evalrep);
    let mut rng = cfg.rng(Suite::Evalrep);
    let (mut lr, mut psikk, mut cross): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut taken = 0;
    let mut skipped = 0;
    while taken < n_pts {
        let s = sample_dyn(&mut rng, p.n)?;
        let v: [C64; 3] = std::array::from_fn(|_| C64::new(rng.gen_range(-0.5..0.5), 0.0));
        let w = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        let z = C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
        let res = (|| -> Result<(f64, f64, f64)> {
            Ok((
                l_equals_r_residual(v[0], v[1], &s, p, t)?,
                psikk_rep_residual(w, z, p, t)?,
                cross_wiring_residual(v, &s, p, t)?.difference,
            ))
        })();
        match res {
            Ok((a, b, c)) => {
                lr = lr.max(a);
                psikk = psikk.max(b);
                cross = cross.max(c);
                taken += 1;
            }
            Err(Error::Pole { .. }) => {
                skipped += 1;
                check_redraws(skipped, n_pts)?;
            }
            Err(e) => return Err(e),
        }
    }
    let pts = [("points", n_pts as f64), ("skipped", skipped as f64)];
    Ok(vec![
        Case::within("evalrep/l_equals_r", &pts, lr, 1e-9),
        Case::within("evalrep/psikk_in_rep", &pts, psikk, 1e-9),
        Case::within("evalrep/rll_equals_dybe", &pts, cross, 1e-10),
    ])
}

fn identities(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let n_pts = cfg.points(Suite::Identities);
    let rep = identity_suite(n_pts, cfg.seed, p, t)?;
    let pts = [("points", n_pts as f64), ("skipped", rep.skipped as f64)];
    let mut out = Vec::new();
    let fam = |l: &str, m: &IdentityMaxima, out: &mut Vec<Case>| {
        out.push(Case::within(format!("identities/thetaid[{l}]"), &pts, m.thetaid, 1e-9));
        out.push(Case::within(format!("identities/fjl_difference[{l}]"), &pts, m.fjl_closed, 1e-9));
        out.push(Case::within(format!("identities/fjl_antisymmetry[{l}]"), &pts, m.fjl_antisym, 1e-9));
        out.push(Case::within(format!("identities/pre_b11[{l}]"), &pts, m.pre_b11, 1e-9));
        out.push(Case::within(format!("identities/pre_b12[{l}]"), &pts, m.pre_b12, 1e-9));
        out.push(Case::control(format!("identities/thetaid_shifted[{l}]_control"), &pts, m.thetaid_control_min, 1e-3));
    };
    fam("plain", &rep.plain, &mut out);
    fam("star", &rep.starred, &mut out);
    Ok(out)
}

/// Fixed spectral point for the ordered product of `k` currents.
pub const PRODK_Z: C64 = C64::new(0.83, 0.21);

fn constants_suite(cfg: &RunConfig) -> Result<Vec<Case>> {
    let (p, t) = (&cfg.params, &cfg.trunc);
    let mut out = Vec::new();
    let k = constants(p, t)?;
    let nf = p.n as f64;
    if p.c == 0.0 {
        out.push(Case::within("constants/kappa_at_c0", &[], (k.kappa - 1.0).norm(), 1e-12));
        out.push(Case::within("constants/c_n_at_c0", &[], (k.c_n - 1.0).norm(), 1e-12));
    }
    let pr = prodk_check(PRODK_Z, p, t)?;
    let zin = [("z_re", PRODK_Z.re), ("z_im", PRODK_Z.im), ("target_re", pr.target.re), ("product_re", pr.product.re)];
    out.push(Case::within("constants/prodk", &zin, pr.residual, 1e-8));
    out.push(Case::within("constants/prodk_oracle", &zin, pr.oracle_residual, 1e-8));
    out.push(Case::within("constants/prodk_operator_part", &[("max_mode", 20.0)], pr.operator_residual, 1e-13));
    for j in 1..p.n {
        let kc = kappa_check(j, p, t)?;
        let inputs = [("j", j as f64), ("kappa_re", kc.kappa.re), ("contraction_re", kc.contraction.re)];
        out.push(Case::within(format!("constants/kappa_contraction[{j}]"), &inputs, kc.residual, 1e-8));
        out.push(Case::within(format!("constants/psi_kk_modes[{j}]"), &[("j", j as f64), ("max_mode", 20.0)], kc.mode_residual, 1e-12));
    }
    let v = C64::new(0.23, 0.07);
    out.push(Case::within(
        "constants/rho_ratio_mu_chi_candidate",
        &[("v_re", v.re), ("v_im", v.im), ("n", nf)],
        rho_tilde_candidate_residual(v, p, t)?,
        1e-9,
    ));
    Ok(out)
}

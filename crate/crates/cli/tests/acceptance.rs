//! Acceptance run: one line per criterion, nonzero exit on any unexpected outcome.
//!
//! Criteria listed in `EXPECTED_FAILURES` are known not to hold numerically. They
//! are still evaluated in full and reported as FAIL; the run only errors if one of
//! them starts passing, so the list never goes stale.

use ellq_core::{make_params, run, Case, Report, RunConfig, Suite, Truncation, C64};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

const EXPECTED_FAILURES: &[usize] = &[5];

const LEVELS: [f64; 3] = [0.0, 0.7, 1.0];
const SEED: u64 = 42;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

/// Accumulates the per-case verdicts of one criterion.
#[derive(Default)]
struct Tally {
    checked: usize,
    worst: f64,
    failures: Vec<String>,
}

impl Tally {
    fn at_most(&mut self, where_: &str, c: &Case, tol: f64) {
        self.checked += 1;
        self.worst = self.worst.max(c.residual);
        if !(c.residual <= tol) {
            self.failures.push(format!("{where_} {} = {:e} > {tol:e}", c.name, c.residual));
        }
    }

    fn at_least(&mut self, where_: &str, c: &Case, tol: f64) {
        self.checked += 1;
        if !(c.residual >= tol) {
            self.failures.push(format!("{where_} {} = {:e} < {tol:e}", c.name, c.residual));
        }
    }

    fn require(&mut self, ok: bool, msg: impl Into<String>) {
        self.checked += 1;
        if !ok {
            self.failures.push(msg.into());
        }
    }

    fn finish(self) -> Outcome {
        let pass = self.failures.is_empty() && self.checked > 0;
        let mut detail = format!("{} checks, worst residual {:.2e}", self.checked, self.worst);
        if !self.failures.is_empty() {
            let shown: Vec<_> = self.failures.iter().take(4).cloned().collect();
            detail = format!("{detail}; {} failing: {}", self.failures.len(), shown.join("; "));
        }
        Outcome { pass, detail }
    }
}

fn report(suite: Suite, n: usize, c: f64) -> (Report, Duration) {
    let params = make_params(C64::new(0.5, 0.0), 7.3, c, n).expect("default point is valid");
    let cfg = RunConfig { params, points: None, seed: SEED, tol: None, trunc: Truncation::default() };
    let start = Instant::now();
    let r = run(suite, &cfg).unwrap_or_else(|e| panic!("{suite} at N={n} c={c}: {e}"));
    (r, start.elapsed())
}

fn cases<'a>(r: &'a Report, prefix: &'a str) -> impl Iterator<Item = &'a Case> + 'a {
    r.cases.iter().filter(move |c| c.name.starts_with(prefix))
}

/// Run `suite` over the grid and apply `check` to each report, enforcing a wall-clock budget.
fn sweep(suite: Suite, ns: &[usize], levels: &[f64], budget: Duration, check: impl Fn(&str, &Report, &mut Tally)) -> Outcome {
    let mut t = Tally::default();
    for &n in ns {
        for &c in levels {
            let (r, took) = report(suite, n, c);
            let at = format!("[N={n} c={c}]");
            t.require(took < budget, format!("{at} took {took:?}, budget {budget:?}"));
            check(&at, &r, &mut t);
        }
    }
    t.finish()
}

fn theta() -> Outcome {
    sweep(Suite::Theta, &[2, 3], &LEVELS, Duration::from_secs(5), |at, r, t| {
        for prefix in ["theta/oddness", "theta/quasi_period_r", "theta/quasi_period_rtau"] {
            for c in cases(r, prefix) {
                t.require(c.inputs["points"] == 100.0, format!("{at} {} used {} points", c.name, c.inputs["points"]));
                t.at_most(at, c, 1e-8);
            }
        }
        for c in cases(r, "theta/contour_norm") {
            t.require(c.inputs["quadrature_points"] == 4096.0, format!("{at} {} quadrature size", c.name));
            t.at_most(at, c, 1e-6);
        }
    })
}

fn modes() -> Outcome {
    sweep(Suite::Modes, &[2, 3, 4], &LEVELS, Duration::from_secs(5), |at, r, t| {
        let n = r.params.n;
        t.require(cases(r, "modes/comm_b").count() == n * n, format!("{at} missing index pairs"));
        for c in cases(r, "modes/comm_b") {
            t.at_most(at, c, 1e-12);
        }
        for c in cases(r, "modes/constraint") {
            t.at_most(at, c, 1e-13);
        }
    })
}

fn ope() -> Outcome {
    sweep(Suite::Ope, &[2, 3], &LEVELS, Duration::from_secs(30), |at, r, t| {
        for c in cases(r, "ope/").filter(|c| !c.name.ends_with("/oracle_tail")) {
            t.require(c.inputs["grid_points"] == 5.0, format!("{at} {} grid size", c.name));
            t.require(c.inputs["max_abs_x"] <= 0.4, format!("{at} {} grid radius", c.name));
            t.require(c.inputs["oracle_terms"] == 400.0, format!("{at} {} oracle truncation", c.name));
            t.at_most(at, c, 1e-8);
        }
    })
}

fn exchange() -> Outcome {
    sweep(Suite::Exchange, &[2, 3], &LEVELS, Duration::from_secs(20), |at, r, t| {
        let mut want = vec!["exchange/psipsi_same", "exchange/kk_same", "exchange/kk_ordered"];
        if r.params.c == 1.0 {
            want.extend(["exchange/ee_same", "exchange/ff_same", "exchange/phi_psi"]);
        }
        for w in want {
            t.require(cases(r, w).count() > 0, format!("{at} no {w} case"));
        }
        for c in cases(r, "exchange/") {
            t.at_most(at, c, 1e-8);
        }
    })
}

fn constants() -> Outcome {
    sweep(Suite::Constants, &[2, 3], &LEVELS, Duration::from_secs(30), |at, r, t| {
        let n = r.params.n;
        let checked: Vec<&Case> = r
            .cases
            .iter()
            .filter(|c| c.name == "constants/prodk" || c.name.starts_with("constants/kappa_contraction"))
            .collect();
        t.require(checked.len() == n, format!("{at} expected prodk and {} kappa cases", n - 1));
        for c in checked {
            t.at_most(at, c, 1e-8);
        }
        if r.params.c == 0.0 {
            for name in ["constants/kappa_at_c0", "constants/c_n_at_c0"] {
                let c = cases(r, name).next();
                t.require(c.is_some(), format!("{at} no {name} case"));
                if let Some(c) = c {
                    t.at_most(at, c, 1e-12);
                }
            }
        }
    })
}

fn rmatrix() -> Outcome {
    sweep(Suite::Rmatrix, &[2, 3], &LEVELS, Duration::from_secs(10), |at, r, t| {
        for c in cases(r, "rmatrix/rbar_zero_is_permutation") {
            t.at_most(at, c, 1e-12);
        }
        for c in cases(r, "rmatrix/rho_phi") {
            t.require(c.inputs["points"] == 50.0, format!("{at} rho_phi point count"));
            t.at_most(at, c, 1e-9);
        }
    })
}

fn dybe() -> Outcome {
    sweep(Suite::Dybe, &[2, 3], &LEVELS, Duration::from_secs(60), |at, r, t| {
        for c in cases(r, "dybe/max_residual") {
            t.require(c.inputs["points"] == 50.0, format!("{at} {} point count", c.name));
            t.at_most(at, c, 1e-9);
        }
        let control = cases(r, "dybe/shifts_omitted_control").next();
        t.require(control.is_some(), format!("{at} no negative control"));
        if let Some(c) = control {
            t.at_least(at, c, 1e-2);
        }
    })
}

fn evalrep() -> Outcome {
    sweep(Suite::Evalrep, &[2, 3, 4], &[0.0], Duration::from_secs(60), |at, r, t| {
        for (name, tol) in [("evalrep/l_equals_r", 1e-9), ("evalrep/psikk_in_rep", 1e-9), ("evalrep/rll_equals_dybe", 1e-10)] {
            let c = cases(r, name).next();
            t.require(c.is_some(), format!("{at} no {name} case"));
            if let Some(c) = c {
                t.require(c.inputs["points"] == 50.0, format!("{at} {name} point count"));
                t.at_most(at, c, tol);
            }
        }
    })
}

fn identities() -> Outcome {
    sweep(Suite::Identities, &[2, 3], &LEVELS, Duration::from_secs(30), |at, r, t| {
        for fam in ["thetaid", "fjl_difference", "fjl_antisymmetry", "pre_b11", "pre_b12"] {
            for star in ["plain", "star"] {
                let name = format!("identities/{fam}[{star}]");
                let c = r.cases.iter().find(|c| c.name == name);
                t.require(c.is_some(), format!("{at} no {name} case"));
                if let Some(c) = c {
                    t.require(c.inputs["points"] == 100.0, format!("{at} {name} point count"));
                    t.at_most(at, c, 1e-9);
                }
            }
        }
        for c in r.cases.iter().filter(|c| c.is_control()) {
            t.at_least(at, c, 1e-3);
        }
    })
}

fn strip_volatile(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).expect("report is JSON");
    let obj = v.as_object_mut().expect("report is an object");
    obj.remove("timestamp");
    obj.remove("elapsed_ms");
    v
}

fn ellq(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ellq")).args(args).env_remove("ELLQ_THREADS").output().expect("spawn ellq");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn cli() -> Outcome {
    let mut t = Tally::default();
    let dir = tempfile::tempdir().expect("tempdir");
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    // Determinism: identical flags give identical reports, across thread counts too.
    let base = ["verify", "--suite", "all", "--n", "3", "--c", "1", "--seed", "42"];
    let mut texts = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = path(&format!("det{i}.json"));
        let mut args = base.to_vec();
        args.extend(["--threads", threads, "--out", &out]);
        let (code, _) = ellq(&args);
        t.require(code == 0 || code == 1, format!("determinism run exited {code}"));
        texts.push(std::fs::read_to_string(&out).unwrap_or_default());
    }
    let stripped: Vec<_> = texts.iter().map(|s| strip_volatile(s)).collect();
    t.require(stripped.windows(2).all(|w| w[0] == w[1]), "reports differ between identical runs");
    let bytes: Vec<String> = stripped.iter().map(|v| serde_json::to_string_pretty(v).unwrap()).collect();
    t.require(bytes.windows(2).all(|w| w[0] == w[1]), "stripped reports are not byte-identical");

    // Exit-code contract.
    let unwritable = path("missing/dir/report.json");
    let bad_cfg = path("bad.conf");
    std::fs::write(&bad_cfg, "colour = red\n").unwrap();
    let contract: [(&[&str], i32); 8] = [
        (&["verify", "--suite", "theta"], 0),
        (&["verify", "--suite", "constants", "--n", "3", "--c", "1"], 1),
        (&["verify", "--no-such-flag"], 2),
        (&["verify", "--suite", "nonsense"], 3),
        (&["verify", "--suite", "theta", "--q", "1.5"], 4),
        (&["verify", "--suite", "theta", "--out", &unwritable], 5),
        (&["verify", "--suite", "theta", "--config", &bad_cfg], 6),
        (&["verify", "--suite", "rmatrix", "--r", "0.5"], 7),
    ];
    for (args, want) in contract {
        let (code, _) = ellq(args);
        t.require(code == want, format!("`ellq {}` exited {code}, expected {want}", args.join(" ")));
    }
    t.require(!Path::new(&unwritable).exists(), "unwritable path was created");
    t.finish()
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("theta suite", theta),
        ("mode suite", modes),
        ("OPE suite", ope),
        ("exchange suite", exchange),
        ("constants", constants),
        ("R-matrix suite", rmatrix),
        ("DYBE suite", dybe),
        ("evaluation representation suite", evalrep),
        ("identities suite", identities),
        ("CLI determinism and exit codes", cli),
    ];
    let mut unexpected = Vec::new();
    for (i, (label, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        let o = f();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (o.pass, expected_fail) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected)",
        };
        println!("criterion {id:>2} {label}: {tag}: {}", o.detail);
        if o.pass == expected_fail {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#![allow(clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use shiftlab::chains::{
    ContinuousKernelSpec, FiniteKernel, FiniteKernelSpec, KernelSpec, NoiseSpec, WarmStart,
};
use shiftlab::estimator::{HolderFunction, HolderSpec};
use shiftlab::linalg::Matrix;
use shiftlab::points::{Metric, PointSet};
use shiftlab::risk::{risk_report, BoundBudget, ShiftModel};
use shiftlab::similarity::{
    beta_chain_transfer, rho_exact_finite, rho_mc, transfer_to_alpha, FiniteLaw, McBudget,
};
use shiftlab::spectral::{
    absolute_gap_finite, bernstein_tail, mixing_time_finite, negmom_bound, pseudo_gap_finite,
};

struct Verdict {
    pass: bool,
    detail: String,
    /// Everything the run emitted, compared byte for byte on a repeat.
    digest: BTreeMap<String, Vec<u8>>,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict {
            pass,
            detail,
            digest: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, bytes: Vec<u8>) -> Self {
        self.digest.insert(key.to_string(), bytes);
        self
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_kernel(k: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let row: Vec<f64> = (0..k).map(|_| 0.05 + r.random::<f64>()).collect();
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

fn draw(weights: &[f64], r: &mut ChaCha8Rng) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- 1

fn exact_rho_oracle() -> Verdict {
    let mut r = rng(101);
    let mut worst = 0.0f64;
    let mut within = 0;
    let runs = 50;
    let mut values = Vec::new();
    for run in 0..runs {
        let k = r.random_range(2..=20usize);
        let states: Vec<Vec<f64>> = (0..k)
            .map(|_| vec![r.random::<f64>(), r.random::<f64>()])
            .collect();
        let coords = PointSet::from_rows(2, &states).unwrap();
        let p = FiniteKernel::new(
            coords.clone(),
            Matrix::from_rows(&random_kernel(k, &mut r)).unwrap(),
            Metric::SupNorm,
        )
        .unwrap();
        let q = FiniteKernel::new(
            coords.clone(),
            Matrix::from_rows(&random_kernel(k, &mut r)).unwrap(),
            Metric::SupNorm,
        )
        .unwrap();
        let (pp, pq) = (p.invariant_law().unwrap(), q.invariant_law().unwrap());
        let h = 0.05 + 0.5 * r.random::<f64>();

        let exact = rho_exact_finite(&pp, &pq, &coords, Metric::SupNorm, h)
            .unwrap()
            .value;
        let mut brute = 0.0;
        for j in 0..k {
            let mut ball = 0.0;
            for i in 0..k {
                if sup_dist(&states[i], &states[j]) <= h {
                    ball += pp[i];
                }
            }
            brute += pq[j] / ball;
        }
        worst = worst.max((exact - brute).abs());

        let mc = rho_mc(
            &FiniteLaw::new(coords.clone(), &pp).unwrap(),
            &FiniteLaw::new(coords, &pq).unwrap(),
            h,
            McBudget {
                inner: 10_000,
                outer: 10_000,
            },
            Metric::SupNorm,
            1000 + run,
        )
        .unwrap();
        if (mc.value - exact).abs() <= 4.0 * mc.std_error.unwrap() {
            within += 1;
        }
        values.push([exact, mc.value, mc.std_error.unwrap()]);
    }
    let pass = worst <= 1e-12 && within as f64 >= 0.95 * runs as f64;
    Verdict::new(
        pass,
        format!("max |exact - brute| = {worst:.2e}, MC within 4 SE in {within}/{runs}"),
    )
    .with("values", serde_json::to_vec(&values).unwrap())
}

// ---------------------------------------------------------------- 2

fn spectral_inequalities() -> Verdict {
    let mut r = rng(202);
    let mut failures = 0;
    let mut rows = Vec::new();
    for _ in 0..100 {
        let k = r.random_range(2..=12usize);
        // symmetric weights give a kernel reversible for the normalized row sums
        let mut w = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let v = if r.random::<f64>() < 0.3 {
                    0.0
                } else {
                    r.random::<f64>()
                };
                w[i][j] = v;
                w[j][i] = v;
            }
            w[i][i] += 0.05;
        }
        for i in 1..k {
            w[i - 1][i] += 0.05;
            w[i][i - 1] += 0.05;
        }
        let rows_p: Vec<Vec<f64>> = w
            .iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                row.iter().map(|v| v / s).collect()
            })
            .collect();
        let kern = FiniteKernel::on_unit_interval(Matrix::from_rows(&rows_p).unwrap()).unwrap();
        let pi = kern.invariant_law().unwrap();
        let lambda = absolute_gap_finite(&kern).unwrap().radius;
        let gps = pseudo_gap_finite(&kern, 50).unwrap().gamma;
        let tau = mixing_time_finite(&kern, &pi).unwrap();
        let ok = gps >= 1.0 - lambda * lambda - 1e-9
            && 1.0 - lambda * lambda >= 1.0 - lambda - 1e-9
            && gps >= 0.5 / tau as f64 - 1e-9;
        if !ok {
            failures += 1;
        }
        rows.push((gps, lambda, tau));
    }
    Verdict::new(
        failures == 0,
        format!("{failures}/100 kernels violate an inequality"),
    )
    .with("rows", serde_json::to_vec(&rows).unwrap())
}

// ---------------------------------------------------------------- 3

fn negative_moment() -> Verdict {
    let mut r = rng(303);
    let reps = 10_000;
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    let mut rows = Vec::new();
    for s in 0..20 {
        let k = 2 + s % 5;
        let p = random_kernel(k, &mut r);
        let kern = FiniteKernel::on_unit_interval(Matrix::from_rows(&p).unwrap()).unwrap();
        let pi = kern.invariant_law().unwrap();
        let f: Vec<f64> = (0..k)
            .map(|i| if i == 0 { 0.0 } else { r.random::<f64>() })
            .collect();
        let pi_f: f64 = pi.iter().zip(&f).map(|(a, b)| a * b).sum();
        let sup_dev = f.iter().map(|v| (v - pi_f).abs()).fold(0.0, f64::max);
        let gps = pseudo_gap_finite(&kern, 50).unwrap().gamma;
        let n = (1.0 / gps).ceil().max(20.0) as usize;
        // odd scenarios start from a point mass: ‖dμ/dπ‖_∞ = 1/π_0
        let warm = s % 2 == 1;
        let init: Vec<f64> = if warm {
            (0..k).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            pi.clone()
        };
        let norm = if warm { 1.0 / pi[0] } else { 1.0 };
        let bound = negmom_bound(gps, n as f64, pi_f, sup_dev, 1.0, norm).unwrap();
        let mut acc = Vec::with_capacity(reps);
        for _ in 0..reps {
            let mut x = draw(&init, &mut r);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += f[x];
                x = draw(&p[x], &mut r);
            }
            acc.push(1.0 / (1.0 + sum));
        }
        let mean = acc.iter().sum::<f64>() / reps as f64;
        let var = acc.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        if mean - 3.0 * se > bound {
            failures += 1;
        }
        worst_ratio = worst_ratio.max(mean / bound);
        rows.push((mean, se, bound));
    }
    Verdict::new(
        failures == 0,
        format!("{failures}/20 scenarios above the bound; max estimate/bound = {worst_ratio:.3}"),
    )
    .with("rows", serde_json::to_vec(&rows).unwrap())
}

// ---------------------------------------------------------------- 4

fn bernstein_dominance() -> Verdict {
    let mut r = rng(404);
    let reps = 10_000;
    let n = 200usize;
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (a, b) in [(0.3, 0.1), (0.2, 0.2), (0.5, 0.4), (0.1, 0.05)] {
        let kern = FiniteKernel::<f64>::two_state(a, b).unwrap();
        let gps = pseudo_gap_finite(&kern, 50).unwrap().gamma;
        let pi1 = a / (a + b);
        let p = [[1.0 - a, a], [b, 1.0 - b]];
        let var = pi1 * (1.0 - pi1);
        let sup_dev = pi1.max(1.0 - pi1);
        let sums: Vec<f64> = (0..reps)
            .map(|_| {
                let mut x = draw(&[1.0 - pi1, pi1], &mut r);
                let mut s = 0.0;
                for _ in 0..n {
                    s += x as f64 - pi1;
                    x = draw(&p[x], &mut r);
                }
                s
            })
            .collect();
        for frac in [0.1, 0.2] {
            let x = frac * n as f64;
            let freq = sums.iter().filter(|&&s| s <= -x).count() as f64 / reps as f64;
            let bound = bernstein_tail(gps, n as f64, var, sup_dev, 1.0, 1.0, x);
            if freq > bound {
                failures += 1;
            }
            worst = worst.max(freq / bound);
            rows.push((a, b, x, freq, bound));
        }
    }
    Verdict::new(
        failures == 0,
        format!("{failures}/8 tails above the bound; max frequency/bound = {worst:.3}"),
    )
    .with("rows", serde_json::to_vec(&rows).unwrap())
}

// ---------------------------------------------------------------- 5

fn bound_dominance() -> Verdict {
    let two_state = ShiftModel {
        source: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.3, b: 0.1 }),
        target: KernelSpec::Finite(FiniteKernelSpec::TwoState { a: 0.2, b: 0.2 }),
        n_p: 0,
        n_q: 0,
        warm_p: WarmStart::stationary(),
        warm_q: WarmStart::stationary(),
        regression: HolderSpec::new(HolderFunction::Power, 1.0, 1.0).unwrap(),
        noise: NoiseSpec::gaussian(0.5),
        metric: Metric::SupNorm,
    };
    let beta = ShiftModel {
        source: KernelSpec::Continuous(ContinuousKernelSpec::BetaChain { gamma: 1.0 }),
        target: KernelSpec::Continuous(ContinuousKernelSpec::BetaChain { gamma: 0.5 }),
        regression: HolderSpec::new(HolderFunction::Sine { w: None }, 1.0, 1.0).unwrap(),
        noise: NoiseSpec::gaussian(0.1),
        ..two_state.clone()
    };
    let mut checks = 0;
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (name, model, hs, q_div) in [
        ("two-state", &two_state, vec![0.25, 0.5, 1.0, 1.5], 4),
        ("beta", &beta, vec![0.05, 0.1, 0.2, 0.4], 10),
    ] {
        for n in [1_000usize, 10_000] {
            let m = model.with_sizes(n - n / q_div, n / q_div);
            for &h in &hs {
                let rep =
                    risk_report(&m, h, 1024, 16, 500 + n as u64, &BoundBudget::default()).unwrap();
                let b = rep.theoretical_bound.as_ref().unwrap().value;
                checks += 1;
                if rep.within_bound(3.0) != Some(true) {
                    failures += 1;
                    eprintln!(
                        "  {name} n = {n} h = {h}: risk {} > bound {b}",
                        rep.empirical_risk.mean
                    );
                }
                worst = worst.max(rep.empirical_risk.mean / b);
                rows.push(serde_json::to_value(&rep).unwrap());
            }
        }
    }
    Verdict::new(
        failures == 0,
        format!("{failures}/{checks} settings above the bound; max risk/bound = {worst:.3e}"),
    )
    .with("reports", serde_json::to_vec(&rows).unwrap())
}

// ---------------------------------------------------------------- CLI-driven criteria

struct Cli {
    root: PathBuf,
}

struct Run {
    code: i32,
    dir: PathBuf,
    files: BTreeMap<String, Vec<u8>>,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        serde_json::from_slice(&self.files[name]).unwrap()
    }
}

impl Cli {
    fn run(&self, name: &str, config: &str) -> Run {
        let cfg = self.root.join(format!("{name}.toml"));
        std::fs::write(&cfg, config).unwrap();
        let dir = self.root.join(name);
        let code = shiftlab::cli::main_with([
            "shiftlab",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--quiet",
        ]);
        Run {
            code,
            files: read_outputs(&dir),
            dir,
        }
    }
}

/// Output files, with the manifest's timestamp line removed.
fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let Ok(entries) = std::fs::read_dir(dir) else {
        return out;
    };
    for e in entries {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = std::fs::read(&p).unwrap();
        if name == "manifest.json" {
            let text = String::from_utf8(bytes).unwrap();
            bytes = text
                .lines()
                .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
                .collect::<Vec<_>>()
                .join("\n")
                .into_bytes();
        }
        out.insert(name, bytes);
    }
    out
}

fn cli_verdict(pass: bool, detail: String, runs: &[&Run]) -> Verdict {
    let mut v = Verdict::new(pass, detail);
    for r in runs {
        let tag = r.dir.file_name().unwrap().to_string_lossy().into_owned();
        for (k, b) in &r.files {
            v = v.with(&format!("{tag}/{k}"), b.clone());
        }
        v = v.with(&format!("{tag}/exit"), r.code.to_string().into_bytes());
    }
    v
}

fn slope_check(run: &Run, target: f64) -> (bool, f64) {
    let fit = &run.json("report.json")["fit"];
    let slope = fit["slope"].as_f64().unwrap_or(f64::NAN);
    (run.code == 0 && (slope - target).abs() <= 0.15, slope)
}

fn no_shift_rate(cli: &Cli) -> Verdict {
    let run = cli.run(
        "no_shift_rate",
        r#"
kind = "rate-sweep"
seed = 6
tolerance = 0.15

[model]
n_p = 1
n_q = 0
source = { family = "product-beta-chain", gammas = [1.0], floor = 0.8, ambient_dim = 1 }
target = { family = "product-beta-chain", gammas = [1.0], floor = 0.8, ambient_dim = 1 }
regression = { beta = 1.0, L = 1.0, function = { name = "sine" } }
noise = { sigma = 1.0 }

[sweep]
n_list = [1024, 2048, 4096, 8192, 16384, 32768, 65536]
q_fraction = 0.0
test_n = 1024
reps = 32
target_exponent = -0.6666666666666666
rule = { rule = "power", exponent = 0.3333333333333333 }
"#,
    );
    let (pass, slope) = slope_check(&run, -2.0 / 3.0);
    cli_verdict(
        pass,
        format!("slope {slope:.4} vs -0.6667 (exit {})", run.code),
        &[&run],
    )
}

fn shifted_rate(cli: &Cli) -> Verdict {
    let (gp, gq, beta) = (1.0, 0.5, 1.0);
    let (gamma, c) = beta_chain_transfer(gp, gq);
    let eps_p = (1.0 + gp) / (2.0 + gp);
    let alpha = transfer_to_alpha(gamma, 1.0, 1.0, c, eps_p, 1.0)
        .unwrap()
        .alpha;
    let target = -2.0 * beta / (2.0 * beta + alpha);
    let run = cli.run(
        "shifted_rate",
        &format!(
            r#"
kind = "rate-sweep"
seed = 7
tolerance = 0.15

[model]
n_p = 1
n_q = 0
source = {{ family = "beta-chain", gamma = {gp:?} }}
target = {{ family = "beta-chain", gamma = {gq:?} }}
regression = {{ beta = {beta:?}, L = 1.0, function = {{ name = "weierstrass", base = 2.0, terms = 12 }} }}

[sweep]
n_list = [1024, 2048, 4096, 8192, 16384, 32768, 65536]
q_fraction = 0.0
test_n = 1024
reps = 32
target_exponent = {target:?}
rule = {{ rule = "alpha", beta = {beta:?}, alpha = {alpha:?}, d = 1.0 }}
"#
        ),
    );
    let (pass, slope) = slope_check(&run, target);
    let pass = pass && alpha >= 1.0;
    cli_verdict(
        pass,
        format!(
            "alpha = {alpha}, slope {slope:.4} vs {target:.4} (exit {})",
            run.code
        ),
        &[&run],
    )
}

fn transfer_verifier(cli: &Cli) -> Verdict {
    let base = r#"
kind = "transfer-check"
source = { family = "beta-chain", gamma = 1.0 }
target = { family = "beta-chain", gamma = 0.5 }
x_points = 50
y_points = 50
h_points = 50
h_min = 0.001
"#;
    let ok = cli.run("transfer_pass", base);
    let (gamma, c) = beta_chain_transfer(1.0, 0.5);
    let bad = cli.run(
        "transfer_fail",
        &format!("{base}gamma = {:?}\nconstant = {c:?}\n", gamma - 0.2),
    );
    let rep_ok = ok.json("report.json");
    let w = &bad.json("report.json")["check"]["witness"];
    let (wx, wy, wh) = (
        w["x"][0].as_f64().unwrap(),
        w["y"][0].as_f64().unwrap(),
        w["h"].as_f64().unwrap(),
    );
    let pass = ok.code == 0
        && rep_ok["check"]["pass"] == Value::Bool(true)
        && bad.code == 2
        && wx <= 0.05
        && wy <= 0.05
        && (wh - 0.001).abs() < 1e-15;
    cli_verdict(
        pass,
        format!(
            "pass run exit {}, perturbed exit {} with witness x = {wx}, y = {wy}, h = {wh}",
            ok.code, bad.code
        ),
        &[&ok, &bad],
    )
}

const SEGMENT: &str = r#"{ family = "independence", distribution = { law = "embedded", ambient_dim = 2, inner = { law = "uniform", lo = [0.0], hi = [1.0] } } }"#;
const SQUARE: &str = r#"{ family = "independence", distribution = { law = "uniform", lo = [0.0, 0.0], hi = [1.0, 1.0] } }"#;

fn explosion(cli: &Cli) -> Verdict {
    // below h ≈ 0.05 a segment ball holds too little square mass for 10^4 source draws
    let cfg = |s: &str, t: &str| {
        format!("kind = \"rho\"\nseed = 9\ngrid = {{ hi = 1.0, lo = 0.05, points = 10 }}\nsource = {s}\ntarget = {t}\n")
    };
    let fwd = cli.run("explosion", &cfg(SEGMENT, SQUARE));
    let rev = cli.run("explosion_reversed", &cfg(SQUARE, SEGMENT));
    let csv = String::from_utf8(fwd.files["rho.csv"].clone()).unwrap();
    let flagged =
        fwd.json("report.json")["explosion"] == Value::Bool(true) && csv.contains(",inf,");
    let rev_rep = rev.json("report.json");
    let finite = rev_rep["explosion"] == Value::Bool(false)
        && rev_rep["curve"]
            .as_array()
            .unwrap()
            .iter()
            .all(|e| e["value"].is_f64());
    let pass = flagged && fwd.code == 3 && finite && rev.code == 0;
    cli_verdict(pass, format!("segment->square exit {} (flagged {flagged}), square->segment exit {} (finite {finite})", fwd.code, rev.code), &[&fwd, &rev])
}

fn doubling_slope(cli: &Cli) -> Verdict {
    let run = cli.run(
        "doubling",
        &format!("kind = \"rho\"\nseed = 10\nsource = {SEGMENT}\ntarget = {SEGMENT}\n"),
    );
    let rep = run.json("report.json");
    let slope = rep["alpha_fit"]["alpha"].as_f64().unwrap_or(f64::NAN);
    let points = rep["alpha_fit"]["points"].as_u64().unwrap_or(0);
    let pass = run.code == 0 && (slope - 1.0).abs() <= 0.15 && points == 10;
    cli_verdict(
        pass,
        format!("slope {slope:.4} over {points} points vs d_Q = 1"),
        &[&run],
    )
}

fn prediction_gap(cli: &Cli) -> Verdict {
    let cfg = |target: &str| {
        format!(
            r#"
kind = "predict"
seed = 11
m_list = [1, 2, 4, 8]
reps = 64

[bandwidth]
rule = "fixed"
h = 0.5

[model]
n_p = 200
n_q = 50
source = {{ family = "two-state", a = 0.3, b = 0.1 }}
target = {target}
regression = {{ beta = 1.0, L = 1.0, function = {{ name = "power" }} }}
noise = {{ sigma = 0.5 }}
"#
        )
    };
    let ind = cli.run(
        "gap_independence",
        &cfg(r#"{ family = "independence-finite", weights = [0.4, 0.6] }"#),
    );
    let two = cli.run(
        "gap_two_state",
        &cfg(r#"{ family = "two-state", a = 0.2, b = 0.2 }"#),
    );
    let rows = ind.json("report.json")["report"]["rows"].clone();
    let zero = rows.as_array().unwrap().iter().all(|r| {
        let (g, se) = (
            r["gap"]["mean"].as_f64().unwrap(),
            r["gap"]["se"].as_f64().unwrap(),
        );
        g.abs() <= 3.0 * se
    });
    let slope = two.json("report.json")["report"]["decay_fit"]["slope"]
        .as_f64()
        .unwrap_or(f64::NAN);
    let pass = ind.code == 0 && two.code == 0 && zero && slope <= 0.6f64.ln() + 0.3;
    cli_verdict(
        pass,
        format!(
            "independence gap within 3 SE: {zero}; decay slope {slope:.4} vs <= {:.4}",
            0.6f64.ln() + 0.3
        ),
        &[&ind, &two],
    )
}

// ---------------------------------------------------------------- driver

type Criterion = (u32, &'static str, Box<dyn Fn(&Cli) -> Verdict>);

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let root = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        (1, "exact rho oracle", Box::new(|_| exact_rho_oracle())),
        (
            2,
            "spectral inequalities",
            Box::new(|_| spectral_inequalities()),
        ),
        (3, "negative-moment bound", Box::new(|_| negative_moment())),
        (
            4,
            "Bernstein dominance",
            Box::new(|_| bernstein_dominance()),
        ),
        (5, "risk bound dominance", Box::new(|_| bound_dominance())),
        (6, "no-shift rate", Box::new(no_shift_rate)),
        (7, "shifted rate", Box::new(shifted_rate)),
        (8, "transfer-exponent verifier", Box::new(transfer_verifier)),
        (9, "explosion", Box::new(explosion)),
        (10, "doubling slope", Box::new(doubling_slope)),
        (11, "prediction gap", Box::new(prediction_gap)),
    ];
    let first = Cli {
        root: root.path().join("first"),
    };
    let second = Cli {
        root: root.path().join("second"),
    };
    std::fs::create_dir_all(&first.root).unwrap();
    std::fs::create_dir_all(&second.root).unwrap();

    let mut all = true;
    let mut digests = Vec::new();
    for (id, name, f) in &criteria {
        let t = Instant::now();
        let v = f(&first);
        println!(
            "{} {id:>2} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
        all &= v.pass;
        digests.push(v.digest);
    }

    let t = Instant::now();
    let mut differing = Vec::new();
    for ((id, _, f), before) in criteria.iter().zip(&digests) {
        // the second pass writes into a fresh tree, so paths in the manifests differ; compare them with the root masked
        let after = f(&second).digest;
        let mask = |m: &BTreeMap<String, Vec<u8>>, root: &Path| -> BTreeMap<String, Vec<u8>> {
            let r = root.to_string_lossy().into_owned();
            m.iter()
                .map(|(k, v)| {
                    (
                        k.clone(),
                        String::from_utf8_lossy(v)
                            .replace(&r, "<root>")
                            .into_bytes(),
                    )
                })
                .collect()
        };
        if mask(before, &first.root) != mask(&after, &second.root) {
            differing.push(*id);
        }
    }
    let pass = differing.is_empty();
    println!(
        "{} 12 determinism: {} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        if pass {
            "all runs byte-identical on repeat".to_string()
        } else {
            format!("criteria {differing:?} differ on repeat")
        },
        t.elapsed().as_secs_f64()
    );
    all &= pass;
    if !all {
        std::process::exit(1);
    }
}

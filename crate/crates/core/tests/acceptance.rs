//! Acceptance run: one PASS/FAIL line per criterion, each driven by a
//! committed config under `configs/`.
//!
//! Runs without the libtest harness so the lines always reach stdout; a failed
//! criterion makes the process exit nonzero.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use horolab::cli::{evaluate, Command, Invocation, Rendered};
use serde_json::Value;

const TREE_FOUR_POINT_SECONDS: f64 = 10.0;
const HALF_PLANE_FOUR_POINT_SECONDS: f64 = 60.0;
const DRIFT_SECONDS: f64 = 60.0;
const LDT_SECONDS: f64 = 900.0;
const F2_DRIFT: f64 = 0.5;
const DRIFT_TOLERANCE: f64 = 0.02;
const HMET_TOLERANCE: f64 = 0.05;
const FURSTENBERG_TOLERANCE: f64 = 0.05;
const FURSTENBERG_EXACT_TOLERANCE: f64 = 1e-12;
const CONTRACTION_N_MAX: u64 = 64;
const SUBMULT_MAX_TOTAL: u64 = 6;
const CONVOLUTION_MAX_POWER: u64 = 4;
const LDT_MIN_R_SQUARED: f64 = 0.9;
const CONTINUITY_MAX_TILT: f64 = 0.05;
const CONTINUITY_STABILITY_FACTOR: f64 = 2.0;
const SECOND_CONTINUITY_SEED: u64 = 977;
const DETERMINISM_WORKERS: [usize; 2] = [1, 8];

fn config_text(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn run(name: &str, command: Command, seed: Option<u64>) -> Rendered {
    let inv = Invocation { config_text: config_text(name), command, out: PathBuf::new(), seed, cap: None };
    let mut out = evaluate(&inv).unwrap_or_else(|e| panic!("{name} {}: {e}", command.name()));
    assert_eq!(out.len(), 1);
    out.remove(0)
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for key in path {
        cur = &cur[*key];
    }
    cur.as_f64().unwrap_or_else(|| panic!("{path:?} is not a number in {v}"))
}

/// What a criterion produced: its verdict, a one-line summary and the bytes
/// of every output it inspected.
struct Outcome {
    pass: bool,
    detail: String,
    artifacts: Vec<u8>,
}

impl Outcome {
    fn new(pass: bool, detail: String, outputs: &[&Rendered]) -> Self {
        let mut artifacts = Vec::new();
        for r in outputs {
            artifacts.extend_from_slice(&r.json);
            artifacts.extend_from_slice(&r.csv);
        }
        Outcome { pass, detail, artifacts }
    }
}

fn four_point(r: &Rendered) -> (f64, bool) {
    let h = &r.result["hyperbolicity"];
    (num(h, &["max_violation"]), h["holds"].as_bool() == Some(true))
}

fn geometry_exactness(elapsed: &mut Duration) -> Outcome {
    let start = Instant::now();
    let tree = run("tree_f2.toml", Command::ValidateSpace, None);
    let star = run("star.toml", Command::ValidateSpace, None);
    *elapsed = start.elapsed();
    let (tv, th) = four_point(&tree);
    let (sv, sh) = four_point(&star);
    let samples = num(&tree.result, &["hyperbolicity", "samples"]).min(num(&star.result, &["hyperbolicity", "samples"]));
    let pass = th && sh && tv <= 0.0 && sv <= 0.0 && samples >= 1e5 && elapsed.as_secs_f64() < TREE_FOUR_POINT_SECONDS;
    Outcome::new(pass, format!("tree max_violation {tv}, star max_violation {sv}, {samples} quadruples each"), &[&tree, &star])
}

fn half_plane_calibration(elapsed: &mut Duration) -> Outcome {
    let start = Instant::now();
    let hp = run("half_plane.toml", Command::ValidateSpace, None);
    *elapsed = start.elapsed();
    let (v, holds) = four_point(&hp);
    let samples = num(&hp.result, &["hyperbolicity", "samples"]);
    let pass = holds && v <= 0.0 && samples >= 1e6 && elapsed.as_secs_f64() < HALF_PLANE_FOUR_POINT_SECONDS;
    Outcome::new(pass, format!("max_violation {v} over {samples} quadruples"), &[&hp])
}

fn drift_oracle(elapsed: &mut Duration) -> Outcome {
    let start = Instant::now();
    let d = run("tree_f2.toml", Command::Drift, None);
    *elapsed = start.elapsed();
    let mean = num(&d.result, &["mean"]);
    let (n, trials) = (num(&d.result, &["n"]), num(&d.result, &["trials"]));
    let pass = (mean - F2_DRIFT).abs() <= DRIFT_TOLERANCE
        && n == 2000.0
        && trials == 1000.0
        && elapsed.as_secs_f64() < DRIFT_SECONDS;
    Outcome::new(pass, format!("drift {mean:.5} (oracle {F2_DRIFT}, n = {n}, trials = {trials})"), &[&d])
}

fn hmet(_: &mut Duration) -> Outcome {
    let h = run("tree_f2.toml", Command::Hmet, None);
    let plus = num(&h.result, &["plus", "mean"]);
    let minus = num(&h.result, &["minus", "mean"]);
    let pass = (plus - F2_DRIFT).abs() <= HMET_TOLERANCE && (minus + F2_DRIFT).abs() <= HMET_TOLERANCE;
    Outcome::new(pass, format!("probe average {plus:.5}, own-limit average {minus:.5}"), &[&h])
}

fn furstenberg(_: &mut Duration) -> Outcome {
    let f2 = run("tree_f2.toml", Command::Furstenberg, None);
    let hp = run("half_plane.toml", Command::Furstenberg, None);
    let ab = run("tree_ab.toml", Command::Furstenberg, None);
    let diff = |r: &Rendered| num(&r.result, &["difference"]).abs();
    let (d_f2, d_hp, d_ab) = (diff(&f2), diff(&hp), diff(&ab));
    let pass = d_f2 <= FURSTENBERG_TOLERANCE && d_hp <= FURSTENBERG_TOLERANCE && d_ab < FURSTENBERG_EXACT_TOLERANCE;
    Outcome::new(pass, format!("|difference| F2 {d_f2:.2e}, half-plane {d_hp:.2e}, delta_ab {d_ab:.2e}"), &[&f2, &hp, &ab])
}

fn contraction(_: &mut Duration) -> Outcome {
    let c = run("tree_f2.toml", Command::Contraction, None);
    let found = &c.result["search"]["found"];
    let (found_ok, found_text) = if found.is_null() {
        (false, "no contracting (alpha, n)".to_string())
    } else {
        let (n, alpha, value) = (num(found, &["n"]), num(found, &["alpha"]), num(found, &["value"]));
        (value < 1.0 && n <= CONTRACTION_N_MAX as f64, format!("bound {value:.5} at n = {n}, alpha = {alpha}"))
    };
    let rows = c.result["submultiplicativity"].as_array().cloned().unwrap_or_default();
    let mut pairs_needed = 0;
    for m in 1..SUBMULT_MAX_TOTAL {
        pairs_needed += (1..=SUBMULT_MAX_TOTAL - m).filter(|&n| m <= n).count();
    }
    let held = rows.iter().filter(|r| r["holds"].as_bool() == Some(true)).count();
    let covered = rows.len() >= pairs_needed
        && rows.iter().all(|r| num(r, &["m"]) + num(r, &["n"]) <= SUBMULT_MAX_TOTAL as f64);
    let pass = found_ok && covered && held == rows.len();
    Outcome::new(pass, format!("{found_text}; submultiplicativity {held}/{} pairs hold", rows.len()), &[&c])
}

fn bound_checks(_: &mut Duration) -> Outcome {
    let outputs: Vec<Rendered> = ["tree_f2.toml", "half_plane.toml", "star.toml"]
        .iter()
        .map(|name| run(name, Command::ValidateSpace, None))
        .collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in ["tree", "half-plane", "star"].iter().zip(&outputs) {
        let b = &r.result["bounds"];
        let (samples, visual, comparison) =
            (num(b, &["samples"]), num(b, &["visual_violations"]), num(b, &["comparison_violations"]));
        pass &= samples >= 1e4 && visual == 0.0 && comparison == 0.0;
        parts.push(format!("{name} {visual}+{comparison} of {samples}"));
    }
    Outcome::new(pass, format!("violations {}", parts.join(", ")), &outputs.iter().collect::<Vec<_>>())
}

fn convolution(_: &mut Duration) -> Outcome {
    let c = run("tree_f2.toml", Command::Continuity, None);
    let checks = c.result["convolution"].as_array().cloned().unwrap_or_default();
    let violated = checks.iter().filter(|r| r["violated"].as_bool() != Some(false)).count();
    let max_power = checks
        .iter()
        .flat_map(|r| r["powers"].as_array().cloned().unwrap_or_default())
        .map(|p| num(&p, &["n"]))
        .fold(0.0, f64::max);
    let min_slack = checks.iter().map(|r| num(r, &["slack"])).fold(f64::INFINITY, f64::min);
    let pass = !checks.is_empty() && violated == 0 && max_power >= CONVOLUTION_MAX_POWER as f64;
    Outcome::new(
        pass,
        format!("{} pairs, {violated} violated, powers up to {max_power}, min one-step slack {min_slack:.4}", checks.len()),
        &[&c],
    )
}

fn ldt_shape(elapsed: &mut Duration) -> Outcome {
    let start = Instant::now();
    let l = run("tree_f2.toml", Command::Ldt, None);
    *elapsed = start.elapsed();
    let mut pass = elapsed.as_secs_f64() < LDT_SECONDS;
    let mut parts = Vec::new();
    for kind in ["displacement", "horofunction"] {
        let fits = l.result[kind].as_array().cloned().unwrap_or_default();
        let slope_at = |eps: f64| {
            fits.iter().find(|f| (num(f, &["epsilon"]) - eps).abs() < 1e-12).map(|f| num(f, &["slope"]))
        };
        for f in &fits {
            let uncensored = f["censored"].as_array().map_or(0, |c| c.iter().filter(|x| x.as_bool() == Some(false)).count());
            let (slope, r2) = (num(f, &["slope"]), num(f, &["r_squared"]));
            pass &= slope < 0.0 && r2 >= LDT_MIN_R_SQUARED && uncensored >= 2;
            parts.push(format!("{kind} eps {} slope {slope:.5} R2 {r2:.4}", num(f, &["epsilon"])));
        }
        match (slope_at(0.1), slope_at(0.2)) {
            (Some(a), Some(b)) => pass &= b < a,
            _ => pass = false,
        }
    }
    Outcome::new(pass, parts.join("; "), &[&l])
}

fn continuity(_: &mut Duration) -> Outcome {
    let a = run("tree_f2.toml", Command::Continuity, None);
    let b = run("tree_f2.toml", Command::Continuity, Some(SECOND_CONTINUITY_SEED));
    let tilts_ok = |r: &Rendered| {
        r.result["sweep"]["records"]
            .as_array()
            .is_some_and(|recs| recs.iter().all(|x| {
                let label = x["label"].as_str().unwrap_or("");
                label.trim_start_matches("t=").parse::<f64>().is_ok_and(|t| t.abs() <= CONTINUITY_MAX_TILT)
            }))
    };
    let bound = |r: &Rendered| r.result["sweep"]["max_ratio"].as_f64();
    let included_below = |r: &Rendered, max: f64| {
        r.result["sweep"]["records"].as_array().is_some_and(|recs| {
            recs.iter().filter(|x| x["included"].as_bool() == Some(true)).all(|x| num(x, &["ratio"]) <= max)
        })
    };
    let pass = match (bound(&a), bound(&b)) {
        (Some(x), Some(y)) => {
            x.is_finite()
                && y.is_finite()
                && x.max(y) <= CONTINUITY_STABILITY_FACTOR * x.min(y)
                && included_below(&a, x)
                && included_below(&b, y)
                && tilts_ok(&a)
                && tilts_ok(&b)
        }
        _ => false,
    };
    Outcome::new(pass, format!("max ratio {:?} vs {:?} across seeds", bound(&a), bound(&b)), &[&a, &b])
}

type Criterion = (u32, &'static str, fn(&mut Duration) -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "geometry exactness", geometry_exactness),
    (2, "half-plane calibration", half_plane_calibration),
    (3, "drift oracle", drift_oracle),
    (4, "horofunction growth", hmet),
    (5, "furstenberg cross-validation", furstenberg),
    (6, "contraction and submultiplicativity", contraction),
    (7, "visual-ratio and comparison bounds", bound_checks),
    (8, "convolution bounds", convolution),
    (9, "large-deviation shape", ldt_shape),
    (10, "continuity", continuity),
];

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool").install(f)
}

fn line(id: u32, name: &str, pass: bool, detail: &str, seconds: f64) -> String {
    format!("criterion {id:>2} {} {name}: {detail} [{seconds:.2}s]", if pass { "PASS" } else { "FAIL" })
}

fn main() {
    let mut lines = Vec::new();
    let mut first = Vec::new();
    for (id, name, f) in CRITERIA {
        let start = Instant::now();
        let mut timed = Duration::ZERO;
        let outcome = in_pool(DETERMINISM_WORKERS[1], || f(&mut timed));
        let total = start.elapsed().as_secs_f64();
        let shown = if timed.is_zero() { total } else { timed.as_secs_f64() };
        let l = line(id, name, outcome.pass, &outcome.detail, shown);
        println!("{l}");
        lines.push((outcome.pass, l));
        first.push(outcome.artifacts);
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    for workers in DETERMINISM_WORKERS.iter().rev() {
        for ((id, _, f), reference) in CRITERIA.iter().zip(&first) {
            let mut scratch = Duration::ZERO;
            let again = in_pool(*workers, || f(&mut scratch));
            if &again.artifacts != reference {
                mismatched.push(format!("criterion {id} with {workers} workers"));
            }
        }
    }
    let pass = mismatched.is_empty();
    let detail = if pass {
        format!("outputs byte-identical on rerun with {:?} workers", DETERMINISM_WORKERS)
    } else {
        format!("outputs differ: {}", mismatched.join(", "))
    };
    let l = line(11, "determinism", pass, &detail, start.elapsed().as_secs_f64());
    println!("{l}");
    lines.push((pass, l));

    let failed = lines.iter().filter(|(p, _)| !p).count();
    println!("acceptance: {} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use crlab_cli::config::Config;
use crlab_cli::report::{Check, SuiteReport};
use crlab_cli::suites::{run_recorded, MassRuns, SUITES};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

const DESCRIPTIONS: [&str; 12] = [
    "Clifford relations and key formula lines, exact",
    "key operator norms and quartic form on even spinors",
    "Wallis constants, recursion vs quadrature",
    "unit-sphere identity vs closed form",
    "flat connection and flat mass vanish",
    "curvature W vs conformal-change oracle",
    "Green normalization a_1 = 1 and stability of a_n",
    "Weitzenbock identity, reduced form on even and n=1 fields",
    "mass closed forms, boundary sum and assembled constant",
    "extremal ratio constancy and quotient invariance",
    "level sets, binomial bounds and energy expansion",
    "byte-identical output of two seeded runs",
];

/// Wall-clock limits in seconds and the suites they cover.
fn runtime_limit(criterion: u8) -> Option<(f64, &'static [&'static str])> {
    match criterion {
        1 => Some((1.0, &["clifford-check"])),
        3 => Some((1.0, &["alpha"])),
        4 => Some((60.0, &["sphere-identity"])),
        6 => Some((120.0, &["conformal-check"])),
        9 => Some((600.0, &["mass", "real-mass", "pmt7"])),
        11 => Some((900.0, &["levelset-check", "energy-scan"])),
        _ => None,
    }
}

fn read_dir_sorted(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    if let Ok(entries) = std::fs::read_dir(dir) {
        for e in entries.flatten() {
            let name = e.file_name().to_string_lossy().into_owned();
            out.insert(name, std::fs::read(e.path()).unwrap_or_default());
        }
    }
    out
}

fn determinism() -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_crlab");
    let base = std::env::temp_dir().join(format!("crlab-acceptance-{}", std::process::id()));
    let mut outputs = Vec::new();
    for k in 0..2 {
        let dir = base.join(format!("run{}", k));
        let _ = std::fs::remove_dir_all(&dir);
        let run = Command::new(bin).args(["all", "--seed", "0xC0FFEE", "--out"]).arg(&dir).output();
        if let Err(e) = run {
            return (false, format!("could not run {}: {}", bin, e));
        }
        outputs.push(read_dir_sorted(&dir));
    }
    let _ = std::fs::remove_dir_all(&base);
    let (a, b) = (&outputs[0], &outputs[1]);
    if a.is_empty() {
        return (false, "no CSV files written".into());
    }
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    if a.len() != b.len() || !differing.is_empty() {
        return (false, format!("files differ: {:?}", differing));
    }
    (true, format!("{} CSV files identical", a.len()))
}

fn main() {
    let cfg = Config::default();
    let mut mass = MassRuns::default();
    let mut reports: Vec<SuiteReport> = Vec::new();
    let mut seconds: BTreeMap<&str, f64> = BTreeMap::new();
    for s in SUITES {
        let t0 = Instant::now();
        reports.push(run_recorded(s, &cfg, &mut mass));
        seconds.insert(s, t0.elapsed().as_secs_f64());
    }

    let mut failed = 0;
    println!();
    for criterion in 1..=11u8 {
        let mut checks: Vec<Check> =
            reports.iter().flat_map(|r| r.checks.iter().filter(|c| c.criterion == criterion).cloned()).collect();
        if let Some((limit, suites)) = runtime_limit(criterion) {
            let t: f64 = suites.iter().map(|s| seconds[s]).sum();
            checks.push(Check::at_most(criterion, format!("runtime of {} in seconds", suites.join("+")), t, limit));
        }
        let bad: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
        let ok = !checks.is_empty() && bad.is_empty();
        println!(
            "criterion {:2} {}  {}/{} checks  {}",
            criterion,
            if ok { "PASS" } else { "FAIL" },
            checks.len() - bad.len(),
            checks.len(),
            DESCRIPTIONS[criterion as usize - 1]
        );
        for c in bad {
            println!("    failed {}", c.describe());
        }
        if !ok {
            failed += 1;
        }
    }
    let (ok, detail) = determinism();
    println!("criterion 12 {}  {}  {}", if ok { "PASS" } else { "FAIL" }, detail, DESCRIPTIONS[11]);
    if !ok {
        failed += 1;
    }
    println!();
    if failed > 0 {
        println!("{} of 12 criteria failed", failed);
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}

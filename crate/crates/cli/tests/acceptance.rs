//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use dpamp::amplification::{amplified_epsilon, critical_eps_for_unit_ratio, noise_ratio_mean, rate_for_q_bound};
use dpamp::experiments::{mse_table, run_protocol, ExperimentSpec, MseRow, PopulationSource, Release};
use dpamp::oracle::{brute_force_local_sensitivity, random_neighbor_pair, verify_amplification, VIOLATION_TOLERANCE};
use dpamp::rng::tags;
use dpamp::sensitivity::{local_sensitivity, Statistic};
use dpamp::{Bounds, PrivacyBudget, RngStream, SamplingRate};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

fn amplification_anchors() -> Verdict {
    let a = amplified_epsilon(1.0, 0.01);
    let b = amplified_epsilon(0.1, 101.0 / 10_001.0);
    let c = amplified_epsilon(1.0, 101.0 / 10_001.0);
    let pass = (a - 5.152).abs() <= 0.005 && (b - 2.435).abs() <= 0.005 && (c - 5.142).abs() <= 0.005;
    verdict(pass, format!("eps_n = {a:.5}, {b:.5}, {c:.5}"))
}

fn q_bound_anchors() -> Verdict {
    let r3 = rate_for_q_bound(3.0, 0.6).unwrap().value();
    let r01 = rate_for_q_bound(0.1, 0.6).unwrap().value();
    let pass = (r3 - 0.1677).abs() <= 0.0005 && (r01 - 0.614).abs() <= 0.001;
    verdict(pass, format!("rate(eps=3) = {r3:.5}, rate(eps=0.1) = {r01:.5}"))
}

fn critical_eps() -> Verdict {
    let c = critical_eps_for_unit_ratio(SamplingRate::new(1e-4).unwrap()).unwrap();
    let pass = (1.6e-6..=1.7e-6).contains(&c.eps_n) && c.residual.abs() < 1e-10;
    verdict(pass, format!("eps = {:e}, eps_n = {:e}, |r - 1| = {:e}", c.eps, c.eps_n, c.residual.abs()))
}

fn mean_no_gain() -> Verdict {
    // 40 log-spaced ε in [1e-12, 10] times 25 log-spaced rates in [1e-4, 1]
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for i in 0..40 {
        let eps = (1e-12f64.ln() + (10f64.ln() - 1e-12f64.ln()) * i as f64 / 39.0).exp();
        for j in 0..25 {
            let rate = (1e-4f64.ln() * (1.0 - j as f64 / 24.0)).exp().min(1.0);
            let r = noise_ratio_mean(eps, SamplingRate::new(rate).unwrap()).unwrap();
            worst = worst.max(r);
            count += 1;
        }
    }
    verdict(worst <= 1.0 + 1e-12, format!("{count} pairs, max r = {worst:.15}"))
}

fn exact_amplification() -> Verdict {
    let bounds = Bounds::new(0.0, 1.0).unwrap();
    let grid: Vec<f64> = (0..1001).map(|k| -5.0 + 11.0 * k as f64 / 1000.0).collect();
    let mut rng = RngStream::new(2024, tags::ORACLE);
    let (mut worst, mut runs) = (f64::NEG_INFINITY, 0usize);
    for i in 0..200 {
        let size = 1 + i % 8;
        let (a, b) = random_neighbor_pair(size, bounds, &mut rng).unwrap();
        for n in 1..=size {
            for eps in [0.3, 1.0, 3.0] {
                for delta in [0.0, 0.05] {
                    let budget = PrivacyBudget::new(eps, delta).unwrap();
                    let r = verify_amplification(&a, &b, n, Statistic::Mean, budget, &grid).unwrap();
                    worst = worst.max(r.max_violation);
                    runs += 1;
                }
            }
        }
    }
    verdict(worst <= VIOLATION_TOLERANCE, format!("{runs} (pair, n, budget) runs, max violation = {worst:e}"))
}

fn sensitivity_ratios() -> Verdict {
    let anchors = [(0.1, 1001, 1.28), (0.1, 101, 3.72), (1.0, 1001, 4.24), (1.0, 101, 23.30)];
    let mut pass = true;
    let mut parts = Vec::new();
    for file in ["lognormal_eps01.json", "lognormal_eps1.json"] {
        let spec = ExperimentSpec::load(preset(file)).unwrap().resolve(None).unwrap();
        assert!((spec.delta - 4.9995e-5).abs() < 1e-12);
        let result = run_protocol(&spec, 1).unwrap();
        for a in result.aggregates.iter().filter(|a| a.release == Release::Sample) {
            let (_, _, expected) =
                anchors.iter().find(|(e, n, _)| *e == a.epsilon && *n == a.n).expect("preset cell has an anchor");
            let ok = (a.sensitivity_ratio_q50 / expected - 1.0).abs() <= 0.2;
            pass &= ok;
            parts.push(format!("eps={} n={}: {:.3} (anchor {expected})", a.epsilon, a.n, a.sensitivity_ratio_q50));
        }
    }
    pass &= parts.len() == 4;
    verdict(pass, parts.join("; "))
}

fn curve(file: &str) -> Vec<MseRow> {
    let spec = ExperimentSpec::load(preset(file)).unwrap().resolve(None).unwrap();
    mse_table(&run_protocol(&spec, 1).unwrap())
}

fn log_mse(rows: &[MseRow], eps: f64, rate: f64) -> f64 {
    rows.iter()
        .find(|r| r.epsilon == eps && (r.rate - rate).abs() < 5e-4)
        .map(|r| r.log_mse)
        .unwrap_or_else(|| panic!("no cell eps={eps} rate={rate}"))
}

fn best_gain(rows: &[MseRow], eps: f64) -> f64 {
    // population log MSE minus the best sample log MSE; positive means a gain
    let full = log_mse(rows, eps, 1.0);
    let best =
        rows.iter().filter(|r| r.epsilon == eps && r.rate < 1.0).map(|r| r.log_mse).fold(f64::INFINITY, f64::min);
    full - best
}

fn mse_curves() -> Verdict {
    let ln = curve("lognormal_mse.json");
    let mut fails = Vec::new();
    for eps in [0.01, 0.1] {
        if log_mse(&ln, eps, 0.01) >= log_mse(&ln, eps, 1.0) {
            fails.push(format!("lognormal eps={eps}: no gain at rate 0.01"));
        }
    }
    for eps in [1.0, 3.0, 5.0] {
        if log_mse(&ln, eps, 0.01) <= log_mse(&ln, eps, 1.0) {
            fails.push(format!("lognormal eps={eps}: gain at rate 0.01"));
        }
    }
    let (l001, l01, l1) = (log_mse(&ln, 0.5, 0.01), log_mse(&ln, 0.5, 0.1), log_mse(&ln, 0.5, 1.0));
    if !(l001 > l1 && l001 > l01) {
        fails.push(format!("lognormal eps=0.5: rate 0.01 {l001:.3} vs rate 0.1 {l01:.3}, rate 1 {l1:.3}"));
    }

    let bi = curve("bimodal.json");
    let bimodal_gains: Vec<String> = [0.01, 0.1, 0.5, 1.0, 3.0]
        .iter()
        .map(|&eps| {
            let g = best_gain(&bi, eps);
            if g <= 0.0 {
                fails.push(format!("bimodal eps={eps}: no gain"));
            }
            format!("{g:.2}")
        })
        .collect();

    let mean = curve("beta_mean.json");
    for eps in [0.01, 0.1, 0.5, 1.0, 3.0, 5.0] {
        if best_gain(&mean, eps) > 0.0 {
            fails.push(format!("beta mean eps={eps}: a sample beats the population"));
        }
    }
    let detail = if fails.is_empty() {
        format!("bimodal best log-MSE gains (eps<=3): {}", bimodal_gains.join(", "))
    } else {
        fails.join("; ")
    };
    verdict(fails.is_empty(), detail)
}

fn bimodal_structure() -> Verdict {
    let spec = ExperimentSpec::load(preset("bimodal.json")).unwrap();
    assert!(matches!(spec.population, PopulationSource::Bimodal { .. }));
    let pop = spec.population.build().unwrap();
    let s = pop.sorted_values();
    let mid = s.len() / 2;
    let (min, max, median) = (s[0], s[s.len() - 1], s[mid]);
    let gap = s[mid + 1] - median;
    let pass = min == 0.0 && max == 1.0 && (0.16..=0.26).contains(&median) && gap >= 0.15;
    verdict(pass, format!("min {min}, max {max}, median {median:.4}, gap above median {gap:.4}"))
}

fn local_sensitivity_oracle() -> Verdict {
    let bounds = Bounds::new(0.0, 1.0).unwrap();
    let grid = 1001;
    let resolution = bounds.range() / (grid - 1) as f64;
    let mut rng = RngStream::new(99, tags::ORACLE);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let size = 2 * (i % 25) + 3;
        let (pop, _) = random_neighbor_pair(size, bounds, &mut rng).unwrap();
        for stat in [Statistic::Mean, Statistic::Median] {
            let closed = local_sensitivity(&pop, stat).unwrap().value;
            let brute = brute_force_local_sensitivity(&pop, stat, grid).unwrap();
            worst = worst.max((closed - brute).abs());
        }
    }
    verdict(worst <= resolution, format!("max |closed - brute| = {worst:e} (grid step {resolution:e})"))
}

fn thread_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for (file, extra) in
        [("lognormal_eps01.json", None), ("bimodal.json", Some("100")), ("beta_mean.json", Some("200"))]
    {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let out = dir.path().join(format!("{file}-{threads}"));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_dpamp"));
            cmd.args(["simulate", "--spec", preset(file).to_str().unwrap(), "--seed", "7"]).args([
                "--threads",
                threads,
                "--out",
                out.to_str().unwrap(),
            ]);
            if let Some(t) = extra {
                cmd.args(["--replicates", t]);
            }
            assert!(cmd.output().unwrap().status.success());
            outputs.push((
                std::fs::read(out.join("replicates.csv")).unwrap(),
                std::fs::read(out.join("aggregates.csv")).unwrap(),
            ));
        }
        let same = outputs[0] == outputs[1];
        pass &= same;
        parts.push(format!("{file}: {}", if same { "identical" } else { "differ" }));
    }
    verdict(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("amplification anchors", amplification_anchors),
        ("q-bound anchors", q_bound_anchors),
        ("critical-eps solver at rate 1e-4", critical_eps),
        ("mean no-gain over 1000 (eps, rate) pairs", mean_no_gain),
        ("exact amplification inequality", exact_amplification),
        ("smooth-sensitivity ratio anchors", sensitivity_ratios),
        ("MSE-curve findings", mse_curves),
        ("bimodal population structure", bimodal_structure),
        ("local sensitivity vs brute force", local_sensitivity_oracle),
        ("thread-count determinism", thread_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({}) [{:.1}s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if a criterion fails that is not listed in `KNOWN_FAILURES`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hetnet::analytic::{self, Factor, TheoryOptions};
use hetnet::cli::{self, Mode, Overrides, RunConfig, RunRecord, Source};
use hetnet::montecarlo::{self, LaplaceCase, SimOptions};
use hetnet::pointprocess::{sample_mcp, sample_ppp, sample_php, Role, Window};
use hetnet::rng::RandomStream;
use hetnet::specfun::{self, QuadratureSpec};
use hetnet::{NetworkParams, Tier, Topology, Variant};

/// Criteria that fail for reasons recorded in the project notes; they are
/// reported but do not fail the run.
const KNOWN_FAILURES: &[&str] = &["6c"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn timed(id: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (pass, detail) = f();
    Outcome {
        id,
        pass,
        detail,
        elapsed: start.elapsed(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_intensities() -> (bool, String) {
    let window = Window::new(5000.0, true).unwrap();
    let windows = 100u64;
    let area = window.area() * windows as f64;
    let cov = NetworkParams::coverage_reference();
    let cap = NetworkParams::capacity_reference();
    let master = RandomStream::new(101);
    let (mut php, mut mcp) = (0usize, 0usize);
    for i in 0..windows {
        let mut rng = master.fork(i);
        let mbs = sample_ppp(cov.lambda_mc, &window, Role::Mbs, &mut rng).unwrap();
        php += sample_php(&mbs, cov.lambda_sc_prime, cov.r_c, &window, &mut rng).unwrap().len();
        mcp += sample_mcp(cap.lambda_sc_prime, cap.c_bar, cap.r_c, &window, &mut rng).unwrap().1.len();
    }
    let php_expect = cov.lambda_sc_prime * (-cov.lambda_mc * PI * cov.r_c * cov.r_c).exp();
    let mcp_expect = cap.lambda_sc_prime * cap.c_bar;
    let (php_hat, mcp_hat) = (php as f64 / area, mcp as f64 / area);
    let (e1, e2) = (rel(php_hat, php_expect), rel(mcp_hat, mcp_expect));
    (
        e1 < 0.01 && e2 < 0.01,
        format!(
            "PHP {php_hat:.5e} vs {php_expect:.5e} ({:.2}%), MCP {mcp_hat:.5e} vs {mcp_expect:.5e} ({:.2}%) over {area:.1e} m^2",
            100.0 * e1,
            100.0 * e2
        ),
    )
}

fn c2_single_tier_sir() -> (bool, String) {
    let p = NetworkParams::coverage_reference();
    let opts = SimOptions {
        sbs_tier_enabled: false,
        ..SimOptions::default()
    };
    let n = 100_000;
    let sir = montecarlo::sir_samples(&p, Topology::CoverageAided, Tier::Mu, n, 11, &opts).unwrap();
    let hat = sir.iter().filter(|&&v| v > 1.0).count() as f64 / n as f64;
    let expect = 1.0 / (1.0 + PI / 4.0);
    ((hat - expect).abs() <= 0.01, format!("P(SIR>1) = {hat:.5} vs {expect:.5}"))
}

fn c3_special_functions() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for t in [0.1f64, 1.0, 2.0, 10.0, 100.0] {
        let v = specfun::hyp2f1_neg(0.5, 1.5, -t * t).unwrap();
        worst = worst.max(rel(v, t.atan() / t));
    }
    let q = QuadratureSpec::default();
    let o = TheoryOptions::default();
    let mut laplace_dev: f64 = 0.0;
    for (p, r) in [(NetworkParams::coverage_reference(), 30.0), (NetworkParams::capacity_reference(), 30.0)] {
        let values = [
            analytic::laplace_mm(0.0, r, &p).unwrap(),
            analytic::laplace_ss_cov(0.0, r, &p).unwrap(),
            analytic::laplace_sm_cov(0.0, r, &p, &q).unwrap(),
            analytic::laplace_ms_cov(0.0, r, &p, &q).unwrap(),
            analytic::laplace_ms_cap(0.0, &p).unwrap(),
            analytic::laplace_sm_cap(0.0, &p, &o).unwrap(),
            analytic::laplace_ss_cap(0.0, &p, &o).unwrap(),
        ];
        for v in values {
            laplace_dev = laplace_dev.max((v - 1.0).abs());
        }
    }
    (
        worst <= 1e-10 && laplace_dev <= 1e-9,
        format!("2F1 worst rel {worst:.1e}, |L(0) - 1| max {laplace_dev:.1e}"),
    )
}

fn c4_laplace() -> (bool, String) {
    let cov = NetworkParams::coverage_reference();
    let cap = NetworkParams::capacity_reference();
    let q = QuadratureSpec::default();
    let o = TheoryOptions::default();
    let opts = SimOptions::default();
    let mut worst = (0.0, String::new());
    let mut ok = true;
    for r in [10.0f64, 20.0, 40.0] {
        let at = |power: f64| (4f64.exp() - 1.0) * r.powi(4) / power;
        let cases: [(LaplaceCase, &NetworkParams, f64, f64); 7] = {
            let (sm, ss) = (at(cov.p_mc), at(cov.p_sc));
            [
                (LaplaceCase::MacroToMacro { r }, &cov, sm, analytic::laplace_mm(sm, r, &cov).unwrap()),
                (
                    LaplaceCase::SmallToMacroCoverage { r },
                    &cov,
                    sm,
                    analytic::laplace_sm_cov(sm, r, &cov, &q).unwrap(),
                ),
                (
                    LaplaceCase::SmallToSmallCoverage { r },
                    &cov,
                    ss,
                    analytic::laplace_ss_cov(ss, r, &cov).unwrap(),
                ),
                (
                    LaplaceCase::MacroToSmallCoverage { r },
                    &cov,
                    ss,
                    analytic::laplace_ms_cov(ss, r, &cov, &q).unwrap(),
                ),
                (
                    LaplaceCase::SmallToMacroCapacity,
                    &cap,
                    sm,
                    analytic::laplace_sm_cap(sm, &cap, &o).unwrap(),
                ),
                (
                    LaplaceCase::MacroToSmallCapacity,
                    &cap,
                    ss,
                    analytic::laplace_ms_cap(ss, &cap).unwrap(),
                ),
                (
                    LaplaceCase::SmallToSmallCapacity,
                    &cap,
                    ss,
                    analytic::laplace_ss_cap(ss, &cap, &o).unwrap(),
                ),
            ]
        };
        for (case, p, s, theory) in cases {
            let est = montecarlo::laplace_oracle(p, case, s, 100_000, 7, &opts).unwrap();
            let e = rel(est.mean, theory);
            if e > 0.03 {
                ok = false;
            }
            if e > worst.0 {
                worst = (e, format!("{} at r={r}", case.name()));
            }
        }
    }
    (ok, format!("worst deviation {:.2}% ({})", 100.0 * worst.0, worst.1))
}

fn c5_cache_hits() -> (bool, String) {
    let eta = 1.45;
    let n = 1_000_000u64;
    let master = RandomStream::new(5);
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, f_sc) in [0.0f64, 4.0, 16.0, 64.0].into_iter().enumerate() {
        let mut rng = master.fork(k as u64);
        let hits = (0..n)
            .filter(|_| montecarlo::cache_hit(montecarlo::sample_request(eta, &mut rng), f_sc))
            .count();
        let hat = hits as f64 / n as f64;
        let expect = 1.0 - (1.0 + f_sc).powf(1.0 - eta);
        ok &= (hat - expect).abs() <= 0.005;
        parts.push(format!("F_sc={f_sc}: {hat:.5} vs {expect:.5}"));
    }
    (ok, parts.join(", "))
}

fn sweep_config(name: &str, variable: &str) -> RunConfig {
    let ov = Overrides {
        mode: Some(Mode::Both),
        sweep: Some(variable.to_string()),
        realizations: Some(10_000),
        ..Overrides::default()
    };
    cli::parse_config(cli::bundled_config(name).unwrap(), &ov).unwrap()
}

/// `[MU, SU no cache, SU cache]` of one source at every sweep point.
fn curves(records: &[RunRecord], source: Source) -> Vec<[(f64, f64); 3]> {
    let mut out: Vec<[(f64, f64); 3]> = Vec::new();
    for r in records.iter().filter(|r| r.source == source) {
        let k = r.curve() % 3;
        if k == 0 {
            out.push([(0.0, 0.0); 3]);
        }
        out.last_mut().unwrap()[k] = (r.mean, r.ci_half_width);
    }
    out
}

const NAMES: [&str; 3] = ["MU", "SU-nc", "SU-c"];

/// Pairs whose strict order in theory is reversed by a resolved order in
/// simulation.
fn contradictions(theory: &[(f64, f64); 3], sim: &[(f64, f64); 3]) -> Vec<String> {
    let mut out = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            let (ta, tb) = (theory[a].0, theory[b].0);
            let theory_above = ta - tb > 1e-12 * ta.abs().max(tb.abs());
            let sim_below = sim[b].0 - sim[a].0 > sim[a].1 + sim[b].1;
            if theory_above && sim_below {
                out.push(format!("{} > {} in theory only", NAMES[a], NAMES[b]));
            }
        }
    }
    out
}

struct SweepReport {
    label: String,
    dominance: bool,
    monotone: Option<bool>,
    contradicted_points: usize,
    points: usize,
    example: Option<String>,
    elapsed: Duration,
}

fn run_sweep(name: &str, variable: &str) -> SweepReport {
    let cfg = sweep_config(name, variable);
    let start = Instant::now();
    let records = cli::run_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    let theory = curves(&records, Source::Theory);
    let sim = curves(&records, Source::Sim);
    let dominance = sim.iter().all(|c| c[2].0 >= c[1].0);
    let monotone = (variable == "F_sc").then(|| {
        sim.windows(2)
            .all(|w| (1..3).all(|k| w[1][k].0 >= w[0][k].0 - (w[0][k].1 + w[1][k].1)))
    });
    let mut contradicted_points = 0;
    let mut example = None;
    let values = cfg.sweep.values();
    for (i, (t, s)) in theory.iter().zip(&sim).enumerate() {
        let c = contradictions(t, s);
        if !c.is_empty() {
            contradicted_points += 1;
            example.get_or_insert_with(|| format!("{}={}: {}", variable, values[i], c.join("; ")));
        }
    }
    SweepReport {
        label: format!("{}/{}", cfg.topology.short_name(), variable),
        dominance,
        monotone,
        contradicted_points,
        points: sim.len(),
        example,
        elapsed,
    }
}

fn c6() -> Vec<Outcome> {
    let start = Instant::now();
    let reports: Vec<SweepReport> = [("coverage", "gamma"), ("coverage", "F_sc"), ("capacity", "gamma"), ("capacity", "F_sc")]
        .into_iter()
        .map(|(n, v)| run_sweep(n, v))
        .collect();
    let elapsed = start.elapsed();
    let slowest = reports.iter().map(|r| r.elapsed).max().unwrap();
    let within_budget = slowest < Duration::from_secs(600);
    let a_pass = reports.iter().all(|r| r.dominance) && within_budget;
    let a = format!(
        "SU cache >= SU no cache at every point of {} sweeps; slowest sweep {:.1} s",
        reports.len(),
        slowest.as_secs_f64()
    );
    let b_pass = reports.iter().filter_map(|r| r.monotone).all(|m| m);
    let b = reports
        .iter()
        .filter_map(|r| r.monotone.map(|m| format!("{}: {}", r.label, if m { "non-decreasing" } else { "decreasing" })))
        .collect::<Vec<_>>()
        .join(", ");
    let c_pass = reports.iter().all(|r| r.contradicted_points == 0);
    let c = reports
        .iter()
        .map(|r| {
            let mut s = format!("{}: {}/{} points contradicted", r.label, r.contradicted_points, r.points);
            if let Some(e) = &r.example {
                s.push_str(&format!(" (e.g. {e})"));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("; ");
    let per = elapsed / 3;
    vec![
        Outcome {
            id: "6a",
            pass: a_pass,
            detail: a,
            elapsed: per,
        },
        Outcome {
            id: "6b",
            pass: b_pass,
            detail: b,
            elapsed: per,
        },
        Outcome {
            id: "6c",
            pass: c_pass,
            detail: c,
            elapsed: per,
        },
    ]
}

fn c7_composition() -> (bool, String) {
    let o = TheoryOptions::default();
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for t in [Topology::CoverageAided, Topology::CapacityAided] {
        let p = NetworkParams::reference(t);
        let b1 = analytic::factor_b1(t, &p, &o).unwrap();
        let (b2, _) = analytic::factor_b2(t, &p);
        let mu = analytic::avg_rate_mu(t, &p, &o).unwrap();
        worst = worst.max(rel(mu.avg_rate, p.tau_mc * b1 * b2));
        assert_eq!(mu.factors[&Factor::B1], b1);
        let c1 = analytic::factor_c1(t, &p, &o).unwrap();
        let (c2, _) = analytic::factor_c2(t, &p, &o);
        let c3 = analytic::factor_c3(&p);
        let su = analytic::avg_rate_su(t, &p, &o, Variant::WithCache).unwrap();
        let tau = p.tau_sc;
        worst = worst.max(rel(su.avg_rate, tau * (c1 * c2 + c1 * c3 - c1 * c2 * c3)));
        let nc = analytic::avg_rate_su(t, &p, &o, Variant::NoCache).unwrap();
        exact &= nc.avg_rate == tau * c1 * c2;
        exact &= analytic::compose_su(tau, c1, 0.0, c3) == tau * c1 * c3;
        exact &= analytic::compose_su(tau, c1, c2, 0.0) == tau * c1 * c2;
    }
    (
        worst <= 1e-12 && exact,
        format!("worst relative composition error {worst:.1e}; degenerate reductions exact: {exact}"),
    )
}

fn c8_reproducibility() -> (bool, String) {
    let mut texts = Vec::new();
    for threads in [1, 4] {
        let mut cfg = sweep_config("capacity", "gamma");
        cfg.realizations = 1000;
        cfg.sim.threads = Some(threads);
        texts.push(cli::format_csv(&cli::run_sweep(&cfg).unwrap()));
    }
    (texts[0] == texts[1], format!("1 vs 4 workers, {} CSV bytes", texts[0].len()))
}

fn main() -> ExitCode {
    let mut outcomes = vec![
        timed("1", c1_intensities),
        timed("2", c2_single_tier_sir),
        timed("3", c3_special_functions),
        timed("4", c4_laplace),
        timed("5", c5_cache_hits),
    ];
    outcomes.extend(c6());
    outcomes.push(timed("7", c7_composition));
    outcomes.push(timed("8", c8_reproducibility));

    let budget = |id: &str| match id {
        "1" => Some(30.0),
        "2" => Some(120.0),
        _ => None,
    };
    let mut unexpected = 0;
    for o in &mut outcomes {
        if let Some(limit) = budget(o.id) {
            if o.elapsed.as_secs_f64() >= limit {
                o.pass = false;
                o.detail.push_str(&format!("; over the {limit} s budget"));
            }
        }
        let known = KNOWN_FAILURES.contains(&o.id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {:<3} {:<13} [{:>6.1} s] {}",
            o.id,
            tag,
            o.elapsed.as_secs_f64(),
            o.detail
        );
        if !o.pass && !known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

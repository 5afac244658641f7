//! One pass/fail line per acceptance criterion, with timing against its
//! budget. Runs without the test harness so the lines always print.

use std::time::{Duration, Instant};

use endoscopy_core::campaign::{run, RunConfig, Suite};
use endoscopy_core::twisted::unipotent_sqrt;
use endoscopy_core::{MatrixE, RingContext};

struct Line {
    id: u32,
    name: &'static str,
    ok: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

impl Line {
    fn pass(&self) -> bool {
        self.ok && self.elapsed <= self.budget
    }
}

fn cfg(suite: Suite, p: u64, k: u32, n: usize, m: u32, trials: usize) -> RunConfig {
    RunConfig { suite, p, k, n, m, trials, seed: 2024, ..RunConfig::default() }
}

/// Runs the configs in order, summing violations.
fn campaigns(cfgs: &[RunConfig]) -> (bool, String) {
    let mut parts = Vec::new();
    let mut ok = true;
    for c in cfgs {
        let r = run(c).expect("valid config");
        ok &= r.passed();
        parts.push(format!(
            "{}@p={},k={}: {} cases, {} violations",
            c.suite.name(),
            c.p,
            c.k,
            r.summary.cases,
            r.summary.violations
        ));
        if let Some(bad) = r.cases.iter().find(|c| !c.ok) {
            parts.push(format!("first counterexample #{}: {:?}", bad.case, bad.violation));
        }
    }
    (ok, parts.join("; "))
}

fn timed(id: u32, name: &'static str, budget_s: u64, f: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (ok, detail) = f();
    Line { id, name, ok, detail, elapsed: t.elapsed(), budget: Duration::from_secs(budget_s) }
}

fn worked_sqrt() -> (bool, String) {
    let c = RingContext::new(3, 3).unwrap();
    let u = unipotent_sqrt(&MatrixE::from_ints(&c, &[&[4]]), 0).unwrap();
    let ok = u.eq_at_prec(&MatrixE::from_ints(&c, &[&[25]]));
    (ok, format!("sqrt(4) = {}", u.get(0, 0)))
}

const CONDUCTOR_INPUTS: [&[u32]; 4] = [&[0, 0, 0], &[1, 1, 0], &[1, 0, 0], &[0, 0, 0, 0, 0]];

const CONDUCTOR_CSV: [&str; 4] = [
    "m,gl_dim,h_dim,notes\n\
     0,1,1,newform\n\
     1,3,>=1,h dim at m+2 >= h dim at m\n\
     2,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n\
     3,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n",
    "m,gl_dim,h_dim,notes\n\
     0,0,0,below conductor\n\
     1,0,0,below conductor\n\
     2,1,1,newform\n\
     3,3,>=1,h dim at m+2 >= h dim at m\n",
    "m,gl_dim,h_dim,notes\n\
     0,0,0,below conductor\n\
     1,1,1,newform\n\
     2,3,>=1,h dim at m+2 >= h dim at m\n\
     3,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n",
    "m,gl_dim,h_dim,notes\n\
     0,1,1,newform\n\
     1,5,>=1,h dim at m+2 >= h dim at m\n\
     2,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n\
     3,unspecified(>=1),>=1,h dim at m+2 >= h dim at m\n",
];

fn conductor_tables() -> (bool, String) {
    let c = RunConfig {
        suite: Suite::ConductorTable,
        depths: CONDUCTOR_INPUTS.iter().map(|d| d.to_vec()).collect(),
        m_max: 3,
        ..RunConfig::default()
    };
    let r = run(&c).expect("valid config");
    let mut exact = 0;
    for (case, want) in r.cases.iter().zip(CONDUCTOR_CSV) {
        if case.data["csv"].as_str() == Some(want) {
            exact += 1;
        }
    }
    (r.passed() && exact == CONDUCTOR_CSV.len(), format!("{exact}/{} tables byte-exact", CONDUCTOR_CSV.len()))
}

fn main() {
    let lines = vec![
        timed(1, "ring identities", 5, || {
            campaigns(&[cfg(Suite::Ring, 3, 6, 1, 0, 10_000), cfg(Suite::Ring, 5, 5, 1, 0, 10_000)])
        }),
        timed(2, "topological Jordan decomposition", 60, || campaigns(&[cfg(Suite::Tjd, 3, 4, 1, 1, 1000)])),
        timed(3, "unipotent square root", 10, || {
            let (ok, d) = campaigns(&[cfg(Suite::Sqrt, 3, 4, 1, 1, 1000)]);
            let (ok2, d2) = worked_sqrt();
            (ok && ok2, format!("{d}; {d2}"))
        }),
        timed(4, "norm section", 60, || campaigns(&[cfg(Suite::NormSection, 3, 6, 1, 0, 500)])),
        timed(5, "integral section inside o_E[t]", 300, || {
            campaigns(&[
                cfg(Suite::IntegralSection, 3, 6, 1, 1, 200),
                cfg(Suite::IntegralSection, 5, 5, 1, 1, 200),
                cfg(Suite::Hilbert90, 3, 6, 1, 1, 200),
            ])
        }),
        timed(6, "block reduction", 300, || campaigns(&[cfg(Suite::BlockReduce, 3, 6, 1, 1, 400)])),
        timed(7, "class matching", 600, || campaigns(&[cfg(Suite::MatchClasses, 3, 6, 1, 1, 100)])),
        timed(8, "residue conjugacy and lifting", 900, || campaigns(&[cfg(Suite::Residue, 3, 4, 1, 1, 50)])),
        timed(9, "conductor tables", 1, conductor_tables),
    ];
    for l in &lines {
        println!(
            "criterion {} [{}] {}: {:.2}s of {}s; {}",
            l.id,
            if l.pass() { "PASS" } else { "FAIL" },
            l.name,
            l.elapsed.as_secs_f64(),
            l.budget.as_secs(),
            l.detail
        );
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass()).map(|l| l.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

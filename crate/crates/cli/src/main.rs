//! Batch driver for the seeded campaigns.
//!
//! Exit status: 0 when every case passes, 1 on any violation, 2 on a bad
//! configuration.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use endoscopy_core::campaign::{run, RunConfig, Suite};
use endoscopy_core::Error;

#[derive(Parser, Debug, Default)]
#[command(name = "endoscopy", about = "Seeded property campaigns for twisted unitary descent")]
struct Args {
    /// Residue characteristic, an odd prime.
    #[arg(long)]
    p: Option<u64>,
    /// Precision k: arithmetic modulo p^k.
    #[arg(long)]
    prec: Option<u32>,
    /// Matrices have size 2n + 1.
    #[arg(long)]
    n: Option<usize>,
    /// Level of the compact open subgroups.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// One of ring, tjd, sqrt, norm-section, hilbert90, integral-section, block-reduce,
    /// match-classes, residue-conjugacy, conductor-table.
    #[arg(long)]
    suite: Option<String>,
    /// JSON-lines report; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lowest precision accepted before a computation gives up.
    #[arg(long)]
    floor: Option<i32>,
    /// Conductor-table inputs, e.g. `0,0,0;1,1,0`.
    #[arg(long)]
    depths: Option<String>,
    #[arg(long)]
    m_max: Option<u32>,
    /// Conductor tables as CSV, concatenated in input order.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// File of `key = value` lines; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Error> {
    v.parse().map_err(|_| bad(format!("{key} = {v:?} is not a number")))
}

fn parse_depths(s: &str) -> Result<Vec<Vec<u32>>, Error> {
    s.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| part.split(',').map(|d| parse_num("depths", d.trim())).collect())
        .collect()
}

/// Fills unset fields of `args` from a `key = value` file.
fn merge_file(args: &mut Args, text: &str) -> Result<(), Error> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim().to_string()))
            .ok_or_else(|| bad(format!("line {}: expected key = value", lineno + 1)))?;
        match key {
            "p" => args.p = args.p.or(Some(parse_num(key, &val)?)),
            "prec" | "k" => args.prec = args.prec.or(Some(parse_num(key, &val)?)),
            "n" => args.n = args.n.or(Some(parse_num(key, &val)?)),
            "m" => args.m = args.m.or(Some(parse_num(key, &val)?)),
            "seed" => args.seed = args.seed.or(Some(parse_num(key, &val)?)),
            "trials" => args.trials = args.trials.or(Some(parse_num(key, &val)?)),
            "floor" => args.floor = args.floor.or(Some(parse_num(key, &val)?)),
            "m_max" => args.m_max = args.m_max.or(Some(parse_num(key, &val)?)),
            "suite" => args.suite = args.suite.take().or(Some(val)),
            "depths" => args.depths = args.depths.take().or(Some(val)),
            "out" => args.out = args.out.take().or(Some(val.into())),
            "csv" => args.csv = args.csv.take().or(Some(val.into())),
            _ => return Err(bad(format!("line {}: unknown key {key:?}", lineno + 1))),
        }
    }
    Ok(())
}

fn build_config(mut args: Args) -> Result<(RunConfig, Args), Error> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        merge_file(&mut args, &text)?;
    }
    let d = RunConfig::default();
    let suite: Suite = args.suite.as_deref().ok_or_else(|| bad("no suite given"))?.parse()?;
    let cfg = RunConfig {
        p: args.p.unwrap_or(d.p),
        k: args.prec.unwrap_or(d.k),
        n: args.n.unwrap_or(d.n),
        m: args.m.unwrap_or(d.m),
        seed: args.seed.unwrap_or(d.seed),
        trials: args.trials.unwrap_or(d.trials),
        suite,
        floor: args.floor,
        depths: match &args.depths {
            Some(s) => parse_depths(s)?,
            None => d.depths,
        },
        m_max: args.m_max.unwrap_or(d.m_max),
    };
    cfg.validate()?;
    Ok((cfg, args))
}

fn write_outputs(args: &Args, report: &endoscopy_core::campaign::Report) -> io::Result<()> {
    match &args.out {
        Some(path) => report.write_jsonl(io::BufWriter::new(fs::File::create(path)?))?,
        None => report.write_jsonl(io::stdout().lock())?,
    }
    if let Some(path) = &args.csv {
        let mut f = fs::File::create(path)?;
        for c in &report.cases {
            if let Some(csv) = c.data.get("csv").and_then(|v| v.as_str()) {
                f.write_all(csv.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let (cfg, args) = match build_config(Args::parse()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e @ (Error::ConfigInvalid(_) | Error::Parse(_))) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("suite aborted: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_outputs(&args, &report) {
        eprintln!("writing report: {e}");
        return ExitCode::from(1);
    }
    let s = &report.summary;
    eprintln!(
        "{}: {} cases, {} violations, {} ms",
        cfg.suite.name(),
        s.cases,
        s.violations,
        s.timing.elapsed_ms
    );
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_gaps_only() {
        let mut a = Args { p: Some(5), ..Args::default() };
        merge_file(&mut a, "# comment\np = 3\nprec=7\n\nsuite = tjd  # trailing\n").unwrap();
        assert_eq!((a.p, a.prec, a.suite.as_deref()), (Some(5), Some(7), Some("tjd")));
    }

    #[test]
    fn file_errors() {
        assert!(merge_file(&mut Args::default(), "p 3").is_err());
        assert!(merge_file(&mut Args::default(), "colour = red").is_err());
        assert!(merge_file(&mut Args::default(), "p = three").is_err());
    }

    #[test]
    fn depth_lists() {
        assert_eq!(parse_depths("0,0,0; 1,1,0").unwrap(), vec![vec![0, 0, 0], vec![1, 1, 0]]);
        assert!(parse_depths("0,x").is_err());
    }

    #[test]
    fn precision_one_is_a_config_error() {
        let a = Args { prec: Some(1), suite: Some("tjd".into()), ..Args::default() };
        assert!(matches!(build_config(a), Err(Error::ConfigInvalid(_))));
    }
}

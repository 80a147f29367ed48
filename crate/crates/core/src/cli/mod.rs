//! Command-line driver: `estimate`, `verify`, `oracle` and `compare`.

pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::indices::verify_inequality;
use crate::oracle::{mc_vs_oracle_compare, oracle_values};

pub use config::{load_config, parse_config, Overrides, ScenarioConfig};
pub use report::{canonical_json, render_csv, CsvRow};

use report::estimate_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Estimate λ_w (plain and randomized), λ_P for every k_n candidate, and χ.
    Estimate,
    /// Check the random-index inequality with slack accounting.
    Verify,
    /// Exact surrogate values on an enumerable scenario.
    Oracle,
    /// Monte Carlo estimates next to exact values, flagging |z| > 4.
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Verify => "verify",
            Command::Oracle => "oracle",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "anscombe", version, about = "Convergence indices under random time changes")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the config sample count.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; does not change results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Result of one subcommand: the JSON document, its CSV flattening and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub document: Value,
    pub rows: Vec<CsvRow>,
    pub pass: bool,
    pub summary: String,
}

impl RunReport {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(canonical_json(&self.document)),
            Format::Csv => render_csv(&self.rows),
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn envelope(command: Command, cfg: &ScenarioConfig, body: Value, pass: bool) -> Value {
    let mut doc = json!({
        "command": command.name(),
        "config": cfg.echo,
        "tool": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
        "verdict": if pass { "pass" } else { "fail" },
    });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    doc
}

fn named(name: &str, est: &crate::indices::IndexEstimate) -> Value {
    let mut v = to_value(est);
    v["name"] = json!(name);
    v
}

pub fn run_estimate(cfg: &ScenarioConfig) -> Result<RunReport> {
    let sc = &cfg.scenario;
    sc.validate()?;
    let lw = sc.lambda_w()?;
    let lwr = sc.lambda_w_randomized()?;
    let chi = sc.chi()?;
    let lps = sc.lambda_p_all()?;
    let mut best = 0;
    for (i, e) in lps.iter().enumerate() {
        if e.value < lps[best].value {
            best = i;
        }
    }
    let mut quantities = vec![named("lambda_w", &lw), named("lambda_w_randomized", &lwr), named("chi", &chi)];
    let mut rows = estimate_rows("lambda_w", &lw);
    rows.extend(estimate_rows("lambda_w_randomized", &lwr));
    rows.extend(estimate_rows("chi", &chi));
    for (kn, e) in sc.kn_family.iter().zip(&lps) {
        let name = format!("lambda_p[{}]", kn.label());
        quantities.push(named(&name, e));
        rows.extend(estimate_rows(&name, e));
    }
    quantities.push(named("lambda_p_infimum", &lps[best]));
    rows.push(CsvRow::summary("lambda_p_infimum", lps[best].value, lps[best].stderr));
    let summary = format!(
        "estimate: lambda_w={:.4} lambda_w_randomized={:.4} chi={:.4} lambda_p_inf={:.4} ({})",
        lw.value,
        lwr.value,
        chi.value,
        lps[best].value,
        sc.kn_family[best].label()
    );
    let document = envelope(Command::Estimate, cfg, json!({ "quantities": quantities }), true);
    Ok(RunReport { document, rows, pass: true, summary })
}

pub fn run_verify(cfg: &ScenarioConfig) -> Result<RunReport> {
    let rep = verify_inequality(&cfg.scenario)?;
    let mut rows = estimate_rows("lhs", &rep.lhs);
    rows.extend(estimate_rows("rhs_weak", &rep.rhs_weak));
    rows.extend(estimate_rows("rhs_chi", &rep.rhs_chi));
    rows.extend(estimate_rows(&format!("rhs_lp[{}]", rep.best_kn), &rep.rhs_lp));
    rows.push(CsvRow::summary("slack_mc", rep.slack.mc, 0.0));
    rows.push(CsvRow::summary("slack_modulus", rep.slack.modulus, 0.0));
    rows.push(CsvRow::summary("rhs_total", rep.rhs_total(), 0.0));
    let summary = format!(
        "verify: {} lhs={:.4} <= weak={:.4} + chi={:.4} + lp={:.4} + slack={:.4} (total {:.4})",
        if rep.pass { "PASS" } else { "FAIL" },
        rep.lhs.value,
        rep.rhs_weak.value,
        rep.rhs_chi.value,
        rep.rhs_lp.value,
        rep.slack.total,
        rep.rhs_total()
    );
    let mut block = to_value(&rep);
    block["rhs_total"] = json!(rep.rhs_total());
    let document = envelope(Command::Verify, cfg, json!({ "inequality": block }), rep.pass);
    Ok(RunReport { document, rows, pass: rep.pass, summary })
}

pub fn run_oracle(cfg: &ScenarioConfig) -> Result<RunReport> {
    let vals = oracle_values(&cfg.scenario)?;
    let mut rows =
        vec![CsvRow::summary("window_exceedance", vals.exceedance_probe, 0.0), CsvRow::summary("chi", vals.chi, 0.0)];
    rows.extend(vals.chi_table.iter().map(|c| CsvRow::cell("chi", c)));
    for (label, v) in &vals.lambda_p {
        rows.push(CsvRow::summary(&format!("lambda_p[{label}]"), *v, 0.0));
    }
    rows.push(CsvRow::summary("lambda_p_infimum", vals.lambda_p_infimum, 0.0));
    rows.push(CsvRow::summary("lambda_w", vals.lambda_w, 0.0));
    rows.push(CsvRow::summary("lambda_w_randomized", vals.lambda_w_randomized, 0.0));
    if let Some(f) = &vals.five_forms {
        for (name, v) in ["function", "enlargement", "open", "closed", "continuity"].iter().zip(f.values()) {
            rows.push(CsvRow::summary(&format!("lambda_w_form[{name}]"), v, 0.0));
        }
    }
    let summary = format!(
        "oracle: chi={:.6} lambda_p_inf={:.6} lambda_w={:.6} lambda_w_randomized={:.6}",
        vals.chi, vals.lambda_p_infimum, vals.lambda_w, vals.lambda_w_randomized
    );
    let document = envelope(Command::Oracle, cfg, json!({ "oracle": to_value(&vals) }), true);
    Ok(RunReport { document, rows, pass: true, summary })
}

pub fn run_compare(cfg: &ScenarioConfig) -> Result<RunReport> {
    let table = mc_vs_oracle_compare(&cfg.scenario)?;
    let flagged: Vec<&str> = table.iter().filter(|r| r.flagged).map(|r| r.quantity.as_str()).collect();
    let pass = flagged.is_empty();
    let mut rows = Vec::new();
    for r in &table {
        rows.push(CsvRow::summary(&format!("{}.mc", r.quantity), r.mc, r.stderr));
        rows.push(CsvRow::summary(&format!("{}.oracle", r.quantity), r.oracle, 0.0));
    }
    let summary = if pass {
        format!(
            "compare: PASS {} rows, max |z| = {:.3}",
            table.len(),
            table.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
        )
    } else {
        format!("compare: FAIL flagged {}", flagged.join(", "))
    };
    let document = envelope(Command::Compare, cfg, json!({ "comparison": to_value(&table) }), pass);
    Ok(RunReport { document, rows, pass, summary })
}

pub fn run(command: Command, cfg: &ScenarioConfig) -> Result<RunReport> {
    match command {
        Command::Estimate => run_estimate(cfg),
        Command::Verify => run_verify(cfg),
        Command::Oracle => run_oracle(cfg),
        Command::Compare => run_compare(cfg),
    }
}

/// Exit status for an error: 2 for unreadable or invalid configs, 3 for a
/// counterexample to the inclusion, 4 otherwise.
pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Validation(_) => 2,
        Error::TheoremViolation(_) => 3,
        _ => 4,
    }
}

fn report_error(err: &Error) -> ExitCode {
    eprintln!("error [{}]: {err}", err.code());
    if let Error::Validation(list) = err {
        for m in list {
            eprintln!("  - {m}");
        }
    }
    ExitCode::from(exit_code_for(err))
}

pub fn main() -> ExitCode {
    let args = Args::parse();
    let Some(path) = args.config.clone() else {
        return report_error(&Error::Validation(vec!["--config PATH is required".into()]));
    };
    let cfg = match load_config(&path, Overrides { seed: args.seed, samples: args.samples }) {
        Ok(c) => c,
        Err(Error::Io(m)) => return report_error(&Error::Parse(m)),
        Err(e) => return report_error(&e),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return report_error(&Error::Validation(vec!["--threads must be at least 1".into()]));
        }
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return report_error(&Error::Io(e.to_string())),
    };
    let start = Instant::now();
    let result = pool.install(|| run(args.command, &cfg));
    let elapsed = start.elapsed();
    let report = match result {
        Ok(r) => r,
        Err(e) => return report_error(&e),
    };
    let text = match report.render(args.format) {
        Ok(t) => t,
        Err(e) => return report_error(&e),
    };
    match &args.out {
        Some(out) => {
            if let Err(e) = std::fs::write(out, text) {
                return report_error(&Error::Io(format!("{}: {e}", out.display())));
            }
            println!("{}", report.summary);
        }
        None => {
            print!("{text}");
            eprintln!("{}", report.summary);
        }
    }
    eprintln!("wall time: {:.3}s", elapsed.as_secs_f64());
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(exit_code_for(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Validation(vec![])), 2);
        assert_eq!(exit_code_for(&Error::TheoremViolation("x".into())), 3);
        assert_eq!(exit_code_for(&Error::NotEnumerable("x".into())), 4);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let text =
            std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/verify/block_oscillating.json"))
                .unwrap();
        let cfg = parse_config(&text, Overrides { samples: Some(500), ..Default::default() }).unwrap();
        let render = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run(Command::Estimate, &cfg)).unwrap().render(Format::Json).unwrap()
        };
        assert_eq!(render(1), render(3));
    }
}

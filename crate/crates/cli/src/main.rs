// SPDX-License-Identifier: Apache-2.0

//! `seuformal`: per-bit soft-error analysis of the bundled RV32 core.
//!
//! Exit status: 0 success, 1 usage error, 2 internal error (including a
//! witness that does not replay), 3 budget exceeded (partial result).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seuformal::bmc::Verdict;
use seuformal::campaign::{compare, run_with, CampaignConfig, EnvKind, Report, Setup};
use seuformal::oracle::{exhaustive_campaign, Effect, OracleConfig, Stimulus};
use seuformal::property::{Directive, Family};
use seuformal::trace::Trace;

#[derive(Parser)]
#[command(name = "seuformal", version, about = "Single-bit upset analysis by bounded model checking")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check one bit against one property; prints the verdict and witness.
    Check {
        #[command(flatten)]
        common: Common,
        /// Census bit as `register:index` or a global id.
        #[arg(long)]
        bit: String,
        #[arg(long)]
        property: String,
        /// Write the full witness trace to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Run a campaign and write properties.csv, bits.csv and summaries.
    Campaign {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Exhaustive forward fault-injection campaign.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Injection horizon; defaults to k.
        #[arg(long)]
        horizon: Option<usize>,
        /// Write the per-bit effects as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare formal and oracle classifications (concrete environment).
    Diff {
        #[command(flatten)]
        common: Common,
        /// Use this campaign report (summary.json) instead of running one.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a witness trace file and report whether it reproduces the
    /// property failure.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        property: String,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Campaign configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated families: strobe, arch, crash, hang.
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    /// Bound (deepest cycle searched).
    #[arg(long)]
    k: Option<usize>,
    /// Per-check budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    no_induction: bool,
    /// Regex over `register:bit` labels.
    #[arg(long)]
    bits: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// `concrete` or `symbolic`.
    #[arg(long)]
    env: Option<EnvKind>,
    /// `loop`, `wfi_free` or an image file.
    #[arg(long)]
    program: Option<String>,
    #[arg(long)]
    no_alignment: bool,
    /// External DIMACS solver for base-case queries.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    harvest: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<CampaignConfig> {
        let mut c = match &self.config {
            Some(p) => CampaignConfig::load(p).map_err(usage)?,
            None => CampaignConfig::default(),
        };
        if let Some(f) = &self.families {
            c.families = f.clone();
        }
        if let Some(k) = self.k {
            c.k_max = k;
        }
        if let Some(b) = self.budget {
            c.budget_secs = b;
        }
        if self.no_induction {
            c.induction = false;
        }
        if let Some(r) = &self.bits {
            c.bits.regex = Some(r.clone());
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if let Some(e) = self.env {
            c.env.mode = e;
        }
        if let Some(p) = &self.program {
            c.env.program = p.clone();
        }
        if self.no_alignment {
            c.env.alignment_constraint = false;
        }
        if let Some(s) = &self.solver {
            c.external_solver = Some(s.clone());
        }
        if let Some(d) = &self.cache {
            c.cache_dir = Some(d.clone());
        }
        if let Some(h) = self.harvest {
            c.harvest_limit = h;
        }
        c.validate().map_err(usage)?;
        Ok(c)
    }
}

/// Errors in the invocation rather than in the analysis.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

/// Outcome of a successful command.
enum Done {
    Ok,
    Partial,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match run(cli.cmd) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::Partial) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 1 } else { 2 })
        }
    }
}

fn run(cmd: Cmd) -> Result<Done> {
    match cmd {
        Cmd::Check { common, bit, property, trace_out } => check(&common, &bit, &property, trace_out.as_deref()),
        Cmd::Campaign { common, out } => {
            let setup = Setup::build(&common.config()?)?;
            let r = run_with(&setup)?;
            r.write_dir(&out)?;
            print!("{}", r.summary());
            println!("report written to {}", out.display());
            Ok(if r.stats.partial { Done::Partial } else { Done::Ok })
        }
        Cmd::Oracle { common, horizon, out } => {
            let setup = Setup::build(&common.config()?)?;
            let (o, _) = oracle(&setup, horizon)?;
            let census = &setup.core.census;
            let mut by_effect: std::collections::BTreeMap<Effect, usize> = Default::default();
            for (b, e) in &o.bits {
                if !e.effects.is_empty() {
                    let eff: Vec<String> = e.effects.iter().map(|e| e.to_string()).collect();
                    println!("{:<20} {}", census.label(*b), eff.join(","));
                }
                for &x in &e.effects {
                    *by_effect.entry(x).or_default() += 1;
                }
            }
            println!("{} bits, {} runs{}", o.bits.len(), o.runs, if o.partial { " (partial)" } else { "" });
            for (e, n) in by_effect {
                println!("  {e}: {n} bits");
            }
            if let Some(p) = out {
                std::fs::write(&p, serde_json::to_string_pretty(&o)?)?;
            }
            Ok(if o.partial { Done::Partial } else { Done::Ok })
        }
        Cmd::Diff { common, report } => {
            let setup = Setup::build(&common.config()?)?;
            let r: Report = match report {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
                None => run_with(&setup)?,
            };
            let (o, _) = oracle(&setup, Some(r.k_max))?;
            let a = compare(&r, &o);
            print!("{}", a.render());
            Ok(if r.stats.partial || o.partial { Done::Partial } else { Done::Ok })
        }
        Cmd::Replay { common, trace, property } => replay(&common, &trace, &property),
    }
}

fn oracle(setup: &Setup, horizon: Option<usize>) -> Result<(seuformal::oracle::CampaignResult, OracleConfig)> {
    if setup.image.is_none() {
        return Err(usage("the oracle needs a concrete environment (--env concrete)"));
    }
    let bits = setup.config.bits.select(&setup.core.census)?;
    let cfg = OracleConfig {
        horizon: horizon.unwrap_or(setup.config.k_max),
        progress_deadline: setup.gen.progress_deadline.map(|d| d as usize),
        ..Default::default()
    };
    Ok((exhaustive_campaign(&setup.plain, &setup.core.census, &[Stimulus::none()], &bits, cfg)?, cfg))
}

fn setup_for(common: &Common, property: &str) -> Result<(Setup, usize)> {
    let mut c = common.config()?;
    let fam = Family::of(property).ok_or_else(|| usage(format!("`{property}` is not a builtin property name")))?;
    c.families = vec![fam];
    let s = Setup::build(&c)?;
    let i = s.property_index(property).ok_or_else(|| usage(format!("unknown property `{property}`")))?;
    Ok((s, i))
}

fn check(common: &Common, bit: &str, property: &str, trace_out: Option<&Path>) -> Result<Done> {
    let (s, i) = setup_for(common, property)?;
    let b = s.core.census.parse_bit(bit).map_err(usage)?;
    let r = s.check(Some(b), &[i], true, &s.config.bmc_options(1))?.remove(0);
    let p = &s.props[i];
    println!("{} {}: {}", s.core.census.label(b), p.name(), r.verdict.label(p.directive()));
    if let (Some(w), Some(k)) = (&r.witness, r.failed_at) {
        let t = s.witness_trace(i, w, k + 1)?;
        let time = w.values.get(seuformal::fault::FAULT_TIME).and_then(|v| v.first()).copied().unwrap_or(0);
        println!("flip at the end of cycle {time}, {} at cycle {k}, witness replay {}", what(p.directive()), ok(r.replay_ok));
        print!("{}", changes(&t));
        if let Some(path) = trace_out {
            std::fs::write(path, t.to_text())?;
            println!("trace written to {}", path.display());
        }
        if r.replay_ok != Some(true) {
            bail!("witness does not replay");
        }
    }
    let st = &r.stats;
    println!(
        "frames {}, induction {}, {} solver calls, {:.2} s",
        st.frames,
        st.induction_depth.map_or("-".into(), |d| d.to_string()),
        st.solves,
        st.elapsed.as_secs_f64()
    );
    Ok(if st.budget_exceeded && matches!(r.verdict, Verdict::BoundedProven(_)) { Done::Partial } else { Done::Ok })
}

fn what(d: Directive) -> &'static str {
    match d {
        Directive::Cover => "covered",
        _ => "violated",
    }
}

fn ok(r: Option<bool>) -> &'static str {
    match r {
        Some(true) => "ok",
        Some(false) => "FAILED",
        None => "-",
    }
}

/// Trace lines for cycle 0 inputs and every register change, skipping the
/// fault-port bookkeeping.
fn changes(t: &Trace) -> String {
    let mut s = String::new();
    let skip = |n: &str| n.starts_with("fault_") || n.starts_with("golden.fault_");
    for c in 0..t.len() {
        for (r, n) in t.register_names.iter().enumerate() {
            if skip(n) {
                continue;
            }
            let v = t.states[c][r];
            if c == 0 || t.states[c - 1][r] != v {
                s.push_str(&format!("  {c:>3} {n} {v:#x}\n"));
            }
        }
        for (i, n) in t.input_names.iter().enumerate() {
            let v = t.inputs[c][i];
            if (c == 0 && v != 0) || (c > 0 && t.inputs[c - 1][i] != v) {
                s.push_str(&format!("  {c:>3} {n} {v:#x} (input)\n"));
            }
        }
    }
    s
}

fn replay(common: &Common, trace: &Path, property: &str) -> Result<Done> {
    let (s, i) = setup_for(common, property)?;
    let text = std::fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let p = &s.props[i];
    let ts = s.system(p.system);
    let t = Trace::from_text(&text, ts)?;
    let stim = Stimulus {
        values: t
            .input_names
            .iter()
            .enumerate()
            .map(|(k, n)| (n.clone(), t.inputs.iter().map(|row| row[k]).collect()))
            .collect(),
    };
    let sim = s.witness_trace(i, &stim, t.len());
    let mismatched: BTreeSet<String> = match &sim {
        Ok(st) => t
            .register_names
            .iter()
            .enumerate()
            .filter(|(r, _)| (0..t.len()).any(|c| st.states[c][*r] != t.states[c][*r]))
            .map(|(_, n)| n.clone())
            .collect(),
        Err(_) => BTreeSet::new(),
    };
    let reproduces = sim.is_ok() && mismatched.is_empty() && s.verify_stimulus(i, &stim, t.len());
    if reproduces {
        println!("PASS: {} {} at cycle {}", p.name(), what(p.directive()), t.len().saturating_sub(1));
        Ok(Done::Ok)
    } else {
        let why = match sim {
            Err(e) => e.to_string(),
            Ok(_) if !mismatched.is_empty() => format!("state differs in {}", mismatched.into_iter().collect::<Vec<_>>().join(", ")),
            Ok(_) => format!("{} is not {} in the last cycle", p.name(), what(p.directive())),
        };
        println!("FAIL: {why}");
        bail!("trace does not reproduce {}", p.name())
    }
}

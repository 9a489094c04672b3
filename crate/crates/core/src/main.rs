//! Command-line front end.
//!
//! Subcommands:
//!   generate  --seed S --n N --alpha A --atoms-sigma K --atoms-omega M
//!             [--line sigma|omega|none] [--level-min L] [--level-max L] [--out F]
//!   constants --config F [--out F] [--format json|csv] [--timings]
//!   verify    --config F [--suite default|exactness|baseline]
//!   report    --merge F1 F2 ... [--out F] [--format json|csv]
//!   baseline  --out F
//!
//! Exit codes: 0 success, 1 baseline-tier check failure, 2 validation or
//! usage error, 3 exactness-tier check failure.

use std::collections::BTreeMap;
use std::process::ExitCode;

use serde::{Deserialize, Serialize};

use twoweight::report::{digest_bytes, to_json_canonical, Report};
use twoweight::verify::{self, Baselines, GeneratorConfig, SuiteKind};
use twoweight::{Error, Evaluator, Scenario, WhichMeasure};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSpec {
    #[serde(default)]
    path: Option<String>,
    #[serde(default = "default_format")]
    format: String,
}

fn default_format() -> String {
    "json".into()
}

/// Batch configuration: one scenario (inline or generated), command list and
/// output routing. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    commands: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<OutputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budgets: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parallelism: Option<usize>,
    #[serde(default)]
    emit_timings: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exactness_level_max: Option<i32>,
}

impl RunConfig {
    fn load(path: &str) -> Result<RunConfig, Error> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {path}: {e}")))?;
        let cfg: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::Validation(format!("config schema violation: {e}")))?;
        if cfg.schema_version != twoweight::report::SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    fn scenario(&self) -> Result<Scenario, Error> {
        match (&self.scenario, &self.generator) {
            (Some(s), None) => {
                s.validate()?;
                Ok(s.clone())
            }
            (None, Some(g)) => verify::generate_scenario(g),
            (Some(_), Some(_)) => Err(Error::Validation(
                "config must carry either an inline scenario or a generator, not both".into(),
            )),
            (None, None) => {
                Err(Error::Validation("config carries no scenario and no generator".into()))
            }
        }
    }

    fn digest(&self) -> String {
        digest_bytes(to_json_canonical(self).unwrap_or_default().as_bytes())
    }
}

fn usage() -> String {
    "usage:\n  twoweight generate --seed S --n N --alpha A --atoms-sigma K --atoms-omega M \
     [--line sigma|omega|none] [--level-min L] [--level-max L] [--out F]\n  \
     twoweight constants --config F [--out F] [--format json|csv] [--timings]\n  \
     twoweight verify --config F [--suite default|exactness|baseline]\n  \
     twoweight report --merge F1 F2 ... [--out F] [--format json|csv]\n  \
     twoweight baseline --out F"
        .into()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            let payload = serde_json::json!({
                "error": "validation",
                "message": e.to_string(),
            });
            eprintln!("{payload}");
            ExitCode::from(2)
        }
    }
}

fn run(args: &[String]) -> Result<ExitCode, Error> {
    let Some(command) = args.first() else {
        return Err(Error::Validation(usage()));
    };
    let rest = &args[1..];
    match command.as_str() {
        "generate" => cmd_generate(rest),
        "constants" => cmd_constants(rest),
        "verify" => cmd_verify(rest),
        "report" => cmd_report(rest),
        "baseline" => cmd_baseline(rest),
        other => Err(Error::Validation(format!("unknown subcommand {other}\n{}", usage()))),
    }
}

struct Flags {
    values: BTreeMap<String, Vec<String>>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Flags, Error> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut i = 0;
        while i < args.len() {
            let key = args[i]
                .strip_prefix("--")
                .ok_or_else(|| Error::Validation(format!("expected flag, got {}", args[i])))?
                .to_string();
            let mut collected = Vec::new();
            i += 1;
            while i < args.len() && !args[i].starts_with("--") {
                collected.push(args[i].clone());
                i += 1;
            }
            values.entry(key).or_default().extend(collected);
        }
        Ok(Flags { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).and_then(|v| v.first()).map(|s| s.as_str())
    }

    fn get_all(&self, key: &str) -> Vec<String> {
        self.values.get(key).cloned().unwrap_or_default()
    }

    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn required(&self, key: &str) -> Result<&str, Error> {
        self.get(key).ok_or_else(|| Error::Validation(format!("missing --{key}")))
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T, Error> {
        match self.get(key) {
            Some(v) => {
                v.parse().map_err(|_| Error::Validation(format!("bad value for --{key}: {v}")))
            }
            None => default.ok_or_else(|| Error::Validation(format!("missing --{key}"))),
        }
    }
}

fn write_out(path: Option<&str>, payload: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, payload)
            .map_err(|e| Error::Validation(format!("cannot write {p}: {e}"))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn install_pool(workers: Option<usize>) -> Option<rayon::ThreadPool> {
    let count = workers
        .or_else(|| std::env::var("TWOWEIGHT_WORKERS").ok().and_then(|v| v.parse().ok()))?;
    rayon::ThreadPoolBuilder::new().num_threads(count).build().ok()
}

fn cmd_generate(args: &[String]) -> Result<ExitCode, Error> {
    let flags = Flags::parse(args)?;
    let n: usize = flags.parse_num("n", Some(2))?;
    let mut cfg = GeneratorConfig::new(
        flags.parse_num("seed", None::<u64>)?,
        n,
        flags.parse_num("alpha", None::<f64>)?,
        flags.parse_num("atoms-sigma", None::<usize>)?,
        flags.parse_num("atoms-omega", None::<usize>)?,
    );
    cfg.which_on_line = match flags.get("line").unwrap_or("omega") {
        "sigma" => Some(WhichMeasure::Sigma),
        "omega" => Some(WhichMeasure::Omega),
        "none" => None,
        other => return Err(Error::Validation(format!("bad --line value {other}"))),
    };
    cfg.bounds = (vec![0.0; n], vec![1.0; n]);
    cfg.level_min = flags.parse_num("level-min", Some(cfg.level_min))?;
    cfg.level_max = flags.parse_num("level-max", Some(cfg.level_max))?;
    let scenario = verify::generate_scenario(&cfg)?;
    write_out(flags.get("out"), &to_json_canonical(&scenario)?)?;
    Ok(ExitCode::SUCCESS)
}

fn check_command_list(cfg: &RunConfig, invoked: &str) -> Result<(), Error> {
    for c in &cfg.commands {
        if !matches!(c.as_str(), "constants" | "verify" | "generate" | "report") {
            return Err(Error::Validation(format!("unknown command {c} in config")));
        }
    }
    if !cfg.commands.is_empty() && !cfg.commands.iter().any(|c| c == invoked) {
        return Err(Error::Validation(format!(
            "config limits commands to {:?}, but {invoked} was invoked",
            cfg.commands
        )));
    }
    Ok(())
}

fn cmd_constants(args: &[String]) -> Result<ExitCode, Error> {
    let flags = Flags::parse(args)?;
    let cfg = RunConfig::load(flags.required("config")?)?;
    check_command_list(&cfg, "constants")?;
    let _pool = install_pool(cfg.parallelism);
    let scenario = cfg.scenario()?;
    let timings = cfg.emit_timings || flags.has("timings");
    let mut evaluator = Evaluator::new(&scenario)?;
    let constants = evaluator.compute_all(timings)?;
    let report = Report::constants(cfg.digest(), constants);
    emit_report(&report, &cfg, &flags)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &[String]) -> Result<ExitCode, Error> {
    let flags = Flags::parse(args)?;
    let cfg = RunConfig::load(flags.required("config")?)?;
    check_command_list(&cfg, "verify")?;
    let pool = install_pool(cfg.parallelism);
    let suite = match flags.get("suite").or(cfg.suite.as_deref()).unwrap_or("default") {
        "default" => SuiteKind::Default,
        "exactness" => SuiteKind::Exactness,
        "baseline" => SuiteKind::Baseline,
        other => return Err(Error::Validation(format!("unknown suite {other}"))),
    };
    let level_max = cfg.exactness_level_max.unwrap_or(6);
    let baselines = Baselines::frozen();
    let run = || verify::run_suite(suite, level_max, &baselines);
    let mut outcome = match &pool {
        Some(p) => p.install(run),
        None => run(),
    }?;
    if let Some(budgets) = &cfg.budgets {
        for check in outcome.results.iter_mut() {
            if let Some(b) = budgets.get(&check.name) {
                check.override_budget(*b);
            }
        }
        // Exit tier is re-derived after overrides.
        outcome.exit_code = 0;
        for r in &outcome.results {
            if !r.pass {
                if r.name == "testing_vs_norm" || r.name == "zero_operator" {
                    outcome.exit_code = 3;
                    break;
                }
                outcome.exit_code = 1;
            }
        }
    }
    // Human-readable summary goes to stderr; stdout stays a clean payload.
    for r in &outcome.results {
        eprintln!(
            "{} {}: {:.6e} (budget {}, {} samples, {} degenerate)",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.empirical_constant,
            r.budget.map(|b| format!("{b:.6e}")).unwrap_or_else(|| "-".into()),
            r.samples,
            r.degenerate
        );
    }
    let report = Report::verify(cfg.digest(), outcome.results);
    emit_report(&report, &cfg, &flags)?;
    Ok(ExitCode::from(outcome.exit_code as u8))
}

fn cmd_report(args: &[String]) -> Result<ExitCode, Error> {
    let flags = Flags::parse(args)?;
    let paths = flags.get_all("merge");
    if paths.is_empty() {
        return Err(Error::Validation("report --merge needs at least one file".into()));
    }
    let mut reports = Vec::new();
    for p in &paths {
        let raw = std::fs::read_to_string(p)
            .map_err(|e| Error::Validation(format!("cannot read {p}: {e}")))?;
        reports.push(
            serde_json::from_str::<Report>(&raw)
                .map_err(|e| Error::Validation(format!("{p} is not a report: {e}")))?,
        );
    }
    let merged = Report::merge(reports);
    let payload = match flags.get("format").unwrap_or("json") {
        "json" => merged.to_json()?,
        "csv" => merged.to_csv(),
        other => return Err(Error::Validation(format!("unknown format {other}"))),
    };
    write_out(flags.get("out"), &payload)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_baseline(args: &[String]) -> Result<ExitCode, Error> {
    let flags = Flags::parse(args)?;
    let baselines = verify::compute_baselines()?;
    let payload = to_json_canonical(&baselines)?;
    write_out(flags.get("out"), &payload)?;
    Ok(ExitCode::SUCCESS)
}

fn emit_report(report: &Report, cfg: &RunConfig, flags: &Flags) -> Result<(), Error> {
    let format = flags
        .get("format")
        .map(str::to_string)
        .or_else(|| cfg.output.as_ref().map(|o| o.format.clone()))
        .unwrap_or_else(|| "json".into());
    let payload = match format.as_str() {
        "json" => report.to_json()?,
        "csv" => report.to_csv(),
        other => return Err(Error::Validation(format!("unknown format {other}"))),
    };
    let path = flags
        .get("out")
        .map(str::to_string)
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
    write_out(path.as_deref(), &payload)
}

//! Batch commands over the `crwave` library with JSON reports.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crwave::acceptance::{self, random_locpoly, Scope};
use crwave::counterexample::{separation, NonIso, ProductOracle};
use crwave::crnorm::{cr_norm, cr_norm_tight, IntervalJson, RationalJson};
use crwave::distribution::{
    avv_check, dual_norm, validate_additivity, Dirac, Haar, MomentEntryJson, MomentOracle, MomentTable,
};
use crwave::embed::residue_system;
use crwave::locpoly::{LocPolyFun, LocPolyFunJson};
use crwave::multiindex::{index_set, IndexBound};
use crwave::padic::{floor_q, parse_q};
use crwave::wavelet::{analyze, basis_fn, basis_norm, basis_norm_ceiling, synthesize};
use crwave::{Error, Field, FieldCtx, FieldDescriptor, Magnitude, PadicScalar, Q};

#[derive(Parser)]
#[command(name = "crwave", version, about = "C^r wavelet bases and tempered distributions over p-adic fields")]
struct Cli {
    /// Field as JSON, e.g. '{"p":3,"f":2,"e":1}'.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Regularity as `num/den` or an integer.
    #[arg(long, global = true, default_value = "1")]
    r: String,
    #[arg(long, global = true, default_value_t = 5)]
    depth: u32,
    /// Working precision in digits of ϖ.
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Also write the report to this path.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Record wall time in the report (makes it nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certified norms of every basis element attached to `A_{h_max}`.
    Basis {
        #[arg(long, default_value_t = 2)]
        h_max: u32,
    },
    /// Analysis then synthesis of a function file (or a seeded random function).
    Analyze {
        /// LocPolyFun JSON file.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Level of the random function used without `--input`.
        #[arg(long, default_value_t = 2)]
        level: u32,
    },
    /// Additivity, growth criterion and dual norm of a moment oracle.
    Avv {
        /// `dirac`, `haar`, or a moment table JSON file.
        #[arg(long, default_value = "dirac")]
        moments: String,
        /// Maximal moment degree N; defaults to `[r]`.
        #[arg(long)]
        degree: Option<u32>,
        /// Dirac point, an integer or a scalar string.
        #[arg(long, default_value = "0")]
        point: String,
    },
    /// The distribution on `Z_p^d` separating the uniform and tensor growth conditions.
    Counterexample {
        #[arg(long)]
        p: u64,
        /// Comma-separated components, e.g. `3/2,1/2`.
        #[arg(long)]
        r_vec: String,
        /// 1-based coordinate with `r_k < r`.
        #[arg(long)]
        k: usize,
        /// Comma-separated residues; defaults to all ones.
        #[arg(long)]
        alpha: Option<String>,
    },
    /// The acceptance suite.
    Selftest {
        #[arg(long, value_enum, default_value_t = ScopeArg::Fast)]
        scope: ScopeArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Fast,
    Full,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    field: Option<FieldDescriptor>,
    parameters: Value,
    results: Value,
    verdicts: BTreeMap<String, bool>,
    wall_time: Option<f64>,
}

/// Exit status of a command that produced a report.
enum Status {
    Ok,
    Violation,
    Inconclusive,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DepthInsufficient(_) | Error::PrecisionExhausted(_) => 4,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

type Outcome = Result<(RunReport, Status), Failure>;

fn parse_r(text: &str) -> Result<Q, Failure> {
    let r = parse_q(text.trim()).ok_or_else(|| input_error(format!("cannot parse r = {text:?}")))?;
    if r < Q::from_integer(0) {
        return Err(input_error("r must be nonnegative"));
    }
    Ok(r)
}

fn log_q(field: &Field, m: Magnitude) -> Option<RationalJson> {
    m.log_q(field).map(Into::into)
}

impl Cli {
    fn field(&self) -> Result<Field, Failure> {
        let text = self.field.as_deref().ok_or_else(|| input_error("this command needs --field"))?;
        let desc: FieldDescriptor = serde_json::from_str(text).map_err(|e| input_error(format!("bad --field: {e}")))?;
        Ok(FieldCtx::new(desc, self.precision)?)
    }

    fn report(
        &self,
        command: &str,
        field: Option<&Field>,
        parameters: Value,
        results: Value,
        verdicts: BTreeMap<String, bool>,
    ) -> RunReport {
        RunReport {
            command: command.into(),
            field: field.map(|k| k.descriptor()),
            parameters,
            results,
            verdicts,
            wall_time: None,
        }
    }
}

fn cmd_basis(cli: &Cli, h_max: u32) -> Outcome {
    let k = cli.field()?;
    let r = parse_r(&cli.r)?;
    let ceiling = basis_norm_ceiling(&k);
    let mut rows = Vec::new();
    let (mut all_ok, mut tight) = (true, true);
    for a in residue_system(&k, h_max) {
        for i in index_set(&IndexBound::at_most(k.degree(), floor_q(r).max(0) as u32))? {
            let e = basis_fn(&k, &a, &i, r)?;
            let rep = match cr_norm_tight(&e, r, cli.depth) {
                Ok(rep) => rep,
                Err(Error::DepthInsufficient(_)) => {
                    tight = false;
                    cr_norm(&e, r, cli.depth)?
                }
                Err(err) => return Err(err.into()),
            };
            let bound = basis_norm(&k, &a, &i, r);
            let ok = rep.norm.upper <= bound && bound <= ceiling && (a.l() > 0 || rep.norm.lower == Magnitude::one());
            all_ok &= ok;
            rows.push(json!({
                "a": a.truncate(a.l()),
                "i": i,
                "norm": IntervalJson::new(&k, &rep.norm),
                "log_q_bound": log_q(&k, bound),
                "within_bound": ok,
            }));
        }
    }
    let verdicts = BTreeMap::from([("bounds".to_string(), all_ok), ("tight".to_string(), tight)]);
    let report = cli.report(
        "basis",
        Some(&k),
        json!({"r": RationalJson::from(r), "h_max": h_max, "depth": cli.depth}),
        json!({ "elements": rows }),
        verdicts,
    );
    let status = if !all_ok {
        Status::Violation
    } else if !tight {
        Status::Inconclusive
    } else {
        Status::Ok
    };
    Ok((report, status))
}

fn cmd_analyze(cli: &Cli, input: Option<&PathBuf>, level: u32) -> Outcome {
    let r = parse_r(&cli.r)?;
    let f = match input {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            let json: LocPolyFunJson =
                serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            LocPolyFun::from_json(&json, cli.precision)?
        }
        None => {
            let k = cli.field()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            random_locpoly(&mut rng, &k, level, floor_q(r).max(0) as u32)?
        }
    };
    let k = f.field().clone();
    let coeffs = analyze(&f, r)?;
    let round_trip = synthesize(&coeffs).eq_to_precision(&f);
    let norm = cr_norm(&f, r, cli.depth.max(f.level() + 2))?;
    let ratio = coeffs.sup_abs().div(norm.norm.lower);
    let results = json!({
        "function": f.to_json(),
        "coefficients": coeffs.to_json(),
        "norm": norm.to_json(&k),
        "log_q_coefficient_ratio_upper": ratio.and_then(|m| log_q(&k, m)),
    });
    let verdicts = BTreeMap::from([("round_trip".to_string(), round_trip)]);
    let params = json!({"r": RationalJson::from(r), "depth": cli.depth, "seed": cli.seed, "input": input.map(|p| p.display().to_string())});
    Ok((
        cli.report("analyze", Some(&k), params, results, verdicts),
        if round_trip { Status::Ok } else { Status::Violation },
    ))
}

fn parse_point(k: &Field, text: &str) -> Result<PadicScalar, Failure> {
    if text.contains("p^") {
        return Ok(PadicScalar::parse(k, text)?);
    }
    let v: i64 = text.trim().parse().map_err(|_| input_error(format!("bad point {text:?}")))?;
    Ok(PadicScalar::from_i64(k, v))
}

fn cmd_avv(cli: &Cli, moments: &str, degree: Option<u32>, point: &str) -> Outcome {
    let k = cli.field()?;
    let r = parse_r(&cli.r)?;
    let n = degree.unwrap_or(floor_q(r).max(0) as u32);
    let oracle: Box<dyn MomentOracle> = match moments {
        "dirac" => Box::new(Dirac::new(parse_point(&k, point)?, n)?),
        "haar" => Box::new(Haar::new(&k, n)?),
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| input_error(format!("{path}: {e}")))?;
            let rows: Vec<MomentEntryJson> =
                serde_json::from_str(&text).map_err(|e| input_error(format!("{path}: {e}")))?;
            Box::new(MomentTable::from_json(&k, &rows, Some(n))?)
        }
    };
    let add = validate_additivity(oracle.as_ref(), cli.depth)?;
    let avv = avv_check(oracle.as_ref(), r, cli.depth)?;
    let dual = dual_norm(oracle.as_ref(), r, cli.depth)?;
    let results = json!({
        "additivity": {
            "checked": add.checked,
            "failure": add.failure.as_ref().map(|(w, gap)| json!({"witness": w, "log_q_gap": log_q(&k, *gap)})),
        },
        "avv": avv.to_json(&k),
        "dual_norm": {
            "log_q_lower": log_q(&k, dual.lower),
            "log_q_upper": dual.upper.and_then(|m| log_q(&k, m)),
            "witness": dual.witness,
        },
    });
    let verdicts = BTreeMap::from([("additive".to_string(), add.valid()), ("order_r".to_string(), avv.pass)]);
    let params = json!({"r": RationalJson::from(r), "degree": n, "depth": cli.depth, "moments": moments});
    Ok((
        cli.report("avv", Some(&k), params, results, verdicts),
        if add.valid() { Status::Ok } else { Status::Violation },
    ))
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, Failure> {
    text.split(',').map(|s| item(s.trim()).ok_or_else(|| input_error(format!("bad list entry in {text:?}")))).collect()
}

fn cmd_counterexample(cli: &Cli, p: u64, r_vec: &str, k: usize, alpha: Option<&str>) -> Outcome {
    let rs = parse_list(r_vec, parse_q)?;
    let alpha = alpha.map(|a| parse_list(a, |s| s.parse::<u64>().ok())).transpose()?;
    let base = NonIso::build(p, rs.clone(), k, alpha)?;
    let field = base.scalars().clone();
    let params = json!({
        "p": p,
        "r_vec": rs.iter().map(|x| RationalJson::from(*x)).collect::<Vec<_>>(),
        "k": k,
        "alpha": base.alpha(),
        "depth": cli.depth,
    });
    if cli.depth == 0 {
        let report = cli.report("counterexample", Some(&field), params, Value::Null, BTreeMap::new());
        return Ok((report, Status::Inconclusive));
    }
    let rep = separation(base, cli.depth)?;
    let verdicts = BTreeMap::from([
        ("additive".to_string(), rep.additivity_failure.is_none()),
        ("uniform_bound".to_string(), rep.uniform.pass),
        ("tensor_bound".to_string(), rep.tensor.pass),
        ("growth_exact".to_string(), rep.exact),
        ("separated".to_string(), rep.separated()),
    ]);
    let status = if rep.separated() { Status::Ok } else { Status::Violation };
    Ok((
        cli.report(
            "counterexample",
            Some(&field),
            params,
            serde_json::to_value(rep.to_json()).expect("serializable"),
            verdicts,
        ),
        status,
    ))
}

fn cmd_selftest(cli: &Cli, scope: ScopeArg) -> Outcome {
    let scope = match scope {
        ScopeArg::Fast => Scope::Fast,
        ScopeArg::Full => Scope::Full,
    };
    let outcomes = acceptance::run_all(scope);
    let verdicts: BTreeMap<String, bool> =
        outcomes.iter().map(|o| (format!("{:02} {}", o.id, o.name), o.pass)).collect();
    let failing: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    for o in &outcomes {
        eprintln!("criterion {:>2} {:<22} {}", o.id, o.name, if o.pass { "PASS" } else { "FAIL" });
    }
    let results = json!({ "criteria": outcomes, "failing": failing });
    let status = if failing.is_empty() { Status::Ok } else { Status::Violation };
    Ok((cli.report("selftest", None, json!({ "scope": scope }), results, verdicts), status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; --help and --version are not
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Basis { h_max } => cmd_basis(&cli, *h_max),
        Command::Analyze { input, level } => cmd_analyze(&cli, input.as_ref(), *level),
        Command::Avv { moments, degree, point } => cmd_avv(&cli, moments, *degree, point),
        Command::Counterexample { p, r_vec, k, alpha } => cmd_counterexample(&cli, *p, r_vec, *k, alpha.as_deref()),
        Command::Selftest { scope } => cmd_selftest(&cli, *scope),
    };
    match outcome {
        Ok((mut report, status)) => {
            if cli.timing {
                report.wall_time = Some(start.elapsed().as_secs_f64());
            }
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            // A closed pipe (e.g. `| head`) is not an error worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if let Some(path) = &cli.json {
                if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(3);
                }
            }
            ExitCode::from(match status {
                Status::Ok => 0,
                Status::Violation => 2,
                Status::Inconclusive => 4,
            })
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Command-line front end: build covariant codes, run certificates and
//! lower bounds, execute parameter sweeps, and emit machine-readable
//! reports.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use covcode::bounds::{
    correlation_bound_check, environ_distinguishability_lower, thm1_worst_lower, thm2_bounds,
};
use covcode::certify::{certify_minorization, certify_reference};
use covcode::codespace::{
    dicke_thermo, five_qudit_perfect, five_rotor_smooth, three_qutrit, three_rotor_sharp,
    three_rotor_smooth, w_state_code, CovariantCode, FIVE_ROTOR_PHI_DEFAULT,
};
use covcode::fidelity::{fe_via_constant_channel, worst_case_eps_heuristic, AscentOptions};
use covcode::groupcodes::{
    bitflip_code, code_2m, code_422, multiplier, phaseflip_code, verify_kl_erasure,
    verify_transversal_logical, BuiltinGroup, Side,
};
use covcode::noise::ErasureModel;
use covcode::reptheory::{ek_eps_lower_from_dims, ek_min_subsystem_dim, EkMetric};

const EXIT_CONFIG: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "covcode", version, about = "Covariant-code numerical workbench")]
struct Cli {
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (stdout when omitted; sweeps also write <out>.summary.json).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized searches.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest dense matrix dimension any solver may materialize.
    #[arg(long, global = true, default_value_t = 4096)]
    budget_dim: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a code and write its JSON description.
    Build,
    /// Run bounds/certificates/fidelities on one code + erasure model.
    Analyze,
    /// Run analyses over a parameter grid; write CSV plus a slope summary.
    Sweep,
    /// Representation-theoretic dimension and error floors.
    Ek,
    /// Build a group code and verify erasure correction and covariance.
    Group,
    /// Run the built-in invariant suite.
    Verify,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
    fn tolerance(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_TOLERANCE,
            message: msg.into(),
        }
    }
}

impl From<covcode::Error> for Failure {
    fn from(e: covcode::Error) -> Self {
        let code = match &e {
            covcode::Error::BudgetExceeded { .. } => EXIT_BUDGET,
            covcode::Error::InvalidArgument(_)
            | covcode::Error::InvalidGroup(_)
            | covcode::Error::DimensionMismatch(_)
            | covcode::Error::Serde(_) => EXIT_CONFIG,
            _ => EXIT_TOLERANCE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Build => cmd_build(cli),
        Cmd::Analyze => cmd_analyze(cli),
        Cmd::Sweep => cmd_sweep(cli),
        Cmd::Ek => cmd_ek(cli),
        Cmd::Group => cmd_group(cli),
        Cmd::Verify => cmd_verify(cli),
    }
}

fn load_config(cli: &Cli) -> Result<Value, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::config("--config <json> is required"))?;
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("bad config: {e}")))
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Code and model specifications.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
enum CodeSpec {
    ThreeQutrit,
    ThreeRotorSharp {
        h: i64,
        m: i64,
    },
    ThreeRotorSmooth {
        h: i64,
        w: f64,
        #[serde(default = "default_trunc")]
        trunc_eps: f64,
    },
    FiveQudit {
        d: i64,
    },
    FiveRotor {
        h: i64,
        w: f64,
        phi: Option<f64>,
        trunc_eps: Option<f64>,
    },
    Dicke {
        n: i64,
        d: i64,
        levels: i64,
    },
    WState {
        d_l: i64,
        n: i64,
    },
    /// Load a previously built code from its JSON file.
    File {
        path: String,
    },
}

fn default_trunc() -> f64 {
    1e-9
}

impl CodeSpec {
    fn build(&self) -> Result<CovariantCode, Failure> {
        Ok(match self {
            CodeSpec::ThreeQutrit => three_qutrit(),
            CodeSpec::ThreeRotorSharp { h, m } => three_rotor_sharp(*h, *m)?,
            CodeSpec::ThreeRotorSmooth { h, w, trunc_eps } => {
                three_rotor_smooth(*h, *w, *trunc_eps)?
            }
            CodeSpec::FiveQudit { d } => five_qudit_perfect(*d)?,
            CodeSpec::FiveRotor {
                h,
                w,
                phi,
                trunc_eps,
            } => five_rotor_smooth(
                *h,
                *w,
                phi.unwrap_or(FIVE_ROTOR_PHI_DEFAULT),
                trunc_eps.unwrap_or(1e-9),
            )?,
            CodeSpec::Dicke { n, d, levels } => dicke_thermo(*n, *d, *levels)?,
            CodeSpec::WState { d_l, n } => w_state_code(*d_l, *n)?,
            CodeSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                CovariantCode::from_json(&text)?
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum ModelSpec {
    UniformSingle,
    AllPairs,
    Fixed { alpha: Vec<usize> },
    Events { events: Vec<EventSpec> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventSpec {
    alpha: Vec<usize>,
    q: f64,
}

impl ModelSpec {
    fn build(&self, n: usize) -> Result<ErasureModel, Failure> {
        let model = match self {
            ModelSpec::UniformSingle => ErasureModel::uniform_single_erasure(n),
            ModelSpec::AllPairs => ErasureModel::all_pairs_erasure(n),
            ModelSpec::Fixed { alpha } => ErasureModel::fixed_set(alpha.clone()),
            ModelSpec::Events { events } => ErasureModel {
                events: events
                    .iter()
                    .map(|e| covcode::noise::ErasureEvent {
                        alpha: e.alpha.clone(),
                        q: e.q,
                    })
                    .collect(),
            },
        };
        model.validate(n)?;
        Ok(model)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
enum Analysis {
    CertifyReference {
        #[serde(default)]
        reference: usize,
    },
    CertifyMinorization,
    Thm1,
    Thm2 {
        /// Explicit per-event cutoffs [t_minus, t_plus].
        cutoffs: Option<Vec<(f64, f64)>>,
        /// Symmetric cutoff t (same for every event).
        symmetric: Option<f64>,
        /// Symmetric cutoff beta * w, with w read from the code parameters.
        beta: Option<f64>,
    },
    Corr,
    Fe,
    HeuristicWorst {
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
}

fn default_restarts() -> usize {
    16
}

impl Analysis {
    fn column(&self) -> &'static str {
        match self {
            Analysis::CertifyReference { .. } => "certify_reference",
            Analysis::CertifyMinorization => "certify_minorization",
            Analysis::Thm1 => "thm1_worst",
            Analysis::Thm2 { .. } => "thm2_worst",
            Analysis::Corr => "corr_margin",
            Analysis::Fe => "fe",
            Analysis::HeuristicWorst { .. } => "heuristic_worst",
        }
    }
}

struct AnalysisOutcome {
    value: f64,
    detail: Value,
    /// Role in the bracket check.
    role: BracketRole,
}

#[derive(PartialEq)]
enum BracketRole {
    LowerOnEps,
    UpperOnEps,
    Heuristic,
    None,
}

fn run_analysis(
    a: &Analysis,
    code: &CovariantCode,
    model: &ErasureModel,
    seed: u64,
    budget: usize,
) -> Result<AnalysisOutcome, Failure> {
    let opts = AscentOptions {
        max_block: budget,
        ..AscentOptions::default()
    };
    Ok(match a {
        Analysis::CertifyReference { reference } => {
            let c = certify_reference(code, model, *reference)?;
            AnalysisOutcome {
                value: c.bound,
                detail: serde_json::to_value(&c).unwrap(),
                role: BracketRole::UpperOnEps,
            }
        }
        Analysis::CertifyMinorization => {
            let c = certify_minorization(code, model)?;
            AnalysisOutcome {
                value: c.bound,
                detail: serde_json::to_value(&c).unwrap(),
                role: BracketRole::UpperOnEps,
            }
        }
        Analysis::Thm1 => {
            let rep = thm1_worst_lower(code, model)?;
            AnalysisOutcome {
                value: rep.value,
                detail: serde_json::to_value(&rep).unwrap(),
                role: BracketRole::LowerOnEps,
            }
        }
        Analysis::Thm2 {
            cutoffs,
            symmetric,
            beta,
        } => {
            let cuts: Option<Vec<(f64, f64)>> = if let Some(c) = cutoffs {
                Some(c.clone())
            } else {
                let t = if let Some(t) = symmetric {
                    Some(*t)
                } else if let Some(b) = beta {
                    let w = code.params.get("w").and_then(Value::as_f64).ok_or_else(|| {
                        Failure::config("beta cutoff needs a code with a 'w' parameter")
                    })?;
                    Some(b * w)
                } else {
                    None
                };
                t.map(|t| vec![(-t, t); model.events.len()])
            };
            let (avg, worst) = thm2_bounds(code, model, cuts.as_deref())?;
            AnalysisOutcome {
                value: worst.value,
                detail: json!({"average": avg, "worst": worst}),
                role: BracketRole::LowerOnEps,
            }
        }
        Analysis::Corr => {
            let mut eps_events = Vec::new();
            for ev in &model.events {
                let single = ErasureModel::fixed_set(ev.alpha.clone());
                let fe = fe_via_constant_channel(code, &single, &opts)?;
                eps_events.push((1.0 - fe.value * fe.value).max(0.0).sqrt());
            }
            let (lhs, rhs, holds) = correlation_bound_check(code, model, &eps_events)?;
            if !holds {
                return Err(Failure::tolerance(format!(
                    "correlation bound violated: {lhs} > {rhs}"
                )));
            }
            AnalysisOutcome {
                value: rhs - lhs,
                detail: json!({"lhs": lhs, "rhs": rhs, "holds": holds,
                               "eps_events": eps_events}),
                role: BracketRole::None,
            }
        }
        Analysis::Fe => {
            let fe = fe_via_constant_channel(code, model, &opts)?;
            AnalysisOutcome {
                value: fe.value,
                detail: json!({"value": fe.value, "kind": format!("{:?}", fe.kind),
                               "method": fe.method, "residual": fe.residual}),
                role: BracketRole::None,
            }
        }
        Analysis::HeuristicWorst { restarts } => {
            let est = worst_case_eps_heuristic(code, model, *restarts, seed, &opts)?;
            AnalysisOutcome {
                value: est.value,
                detail: json!({"value": est.value, "kind": format!("{:?}", est.kind),
                               "method": est.method}),
                role: BracketRole::Heuristic,
            }
        }
    })
}

/// Verifies lower <= heuristic <= upper across the computed analyses.
fn bracket_check(results: &[(&str, &AnalysisOutcome)]) -> (Value, bool) {
    let tol = 1e-9;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut heuristic: Option<f64> = None;
    for (_, r) in results {
        match r.role {
            BracketRole::LowerOnEps => lower = lower.max(r.value),
            BracketRole::UpperOnEps => upper = upper.min(r.value),
            BracketRole::Heuristic => {
                heuristic = Some(heuristic.map_or(r.value, |h: f64| h.max(r.value)))
            }
            BracketRole::None => {}
        }
    }
    let mut ok = lower <= upper + tol;
    if let Some(h) = heuristic {
        // The heuristic resolves eps only to about sqrt of the fidelity
        // solver tolerance, so its bracket leg gets a looser margin.
        let tol_h = 1e-6;
        ok = ok && lower <= h + tol_h && h <= upper + tol_h;
    }
    let report = json!({
        "max_lower": if lower.is_finite() { Some(lower) } else { None },
        "min_upper": if upper.is_finite() { Some(upper) } else { None },
        "heuristic": heuristic,
        "ok": ok,
    });
    (report, ok)
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

fn cmd_build(cli: &Cli) -> Result<(), Failure> {
    let spec: CodeSpec = serde_json::from_value(load_config(cli)?)
        .map_err(|e| Failure::config(format!("bad code spec: {e}")))?;
    let code = spec.build()?;
    let text = code.to_json()?;
    emit(cli, &text)
}

#[derive(Deserialize)]
struct AnalyzeConfig {
    code: CodeSpec,
    model: ModelSpec,
    analyses: Vec<Analysis>,
    seed: Option<u64>,
}

fn cmd_analyze(cli: &Cli) -> Result<(), Failure> {
    let cfg: AnalyzeConfig = serde_json::from_value(load_config(cli)?)
        .map_err(|e| Failure::config(format!("bad analyze config: {e}")))?;
    let code = cfg.code.build()?;
    let model = cfg.model.build(code.n_subsystems)?;
    let seed = cfg.seed.unwrap_or(cli.seed);
    let mut results: Vec<(&str, AnalysisOutcome)> = Vec::new();
    for a in &cfg.analyses {
        results.push((a.column(), run_analysis(a, &code, &model, seed, cli.budget_dim)?));
    }
    let refs: Vec<(&str, &AnalysisOutcome)> = results.iter().map(|(n, r)| (*n, r)).collect();
    let (bracket, ok) = bracket_check(&refs);
    let mut out = BTreeMap::new();
    for (name, r) in &results {
        out.insert(
            name.to_string(),
            json!({"value": r.value, "detail": r.detail}),
        );
    }
    let report = json!({
        "code": {"family": code.family, "params": code.params},
        "model": model.events.iter().map(|e| json!({"alpha": e.alpha, "q": e.q})).collect::<Vec<_>>(),
        "results": out,
        "bracket": bracket,
    });
    emit(cli, &format!("{:#}\n", report))?;
    if !ok {
        return Err(Failure::tolerance("bracket violated: lower bound exceeds certificate"));
    }
    Ok(())
}

#[derive(Deserialize)]
struct SweepConfig {
    family: String,
    grid: Vec<serde_json::Map<String, Value>>,
    model: ModelSpec,
    analyses: Vec<Analysis>,
    /// Grid key used as the abscissa of the log-log slope fits.
    slope_param: Option<String>,
    seed: Option<u64>,
}

fn format_float(v: f64) -> String {
    format!("{:.16e}", v)
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.to_string()
            } else {
                format_float(n.as_f64().unwrap_or(f64::NAN))
            }
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

fn lsq_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

fn cmd_sweep(cli: &Cli) -> Result<(), Failure> {
    use rayon::prelude::*;
    let cfg: SweepConfig = serde_json::from_value(load_config(cli)?)
        .map_err(|e| Failure::config(format!("bad sweep config: {e}")))?;
    if cfg.grid.is_empty() {
        return Err(Failure::config("empty grid"));
    }
    let seed = cfg.seed.unwrap_or(cli.seed);
    // Stable parameter column order: sorted union of grid keys.
    let mut param_keys: Vec<String> = cfg
        .grid
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect();
    param_keys.sort();
    param_keys.dedup();

    struct Row {
        params: Vec<Value>,
        values: Vec<f64>,
        bracket_ok: bool,
    }
    let rows: Vec<Result<Row, Failure>> = cfg
        .grid
        .par_iter()
        .map(|point| {
            let mut spec = serde_json::Map::new();
            spec.insert("family".into(), Value::String(cfg.family.clone()));
            for (k, v) in point {
                spec.insert(k.clone(), v.clone());
            }
            let spec: CodeSpec = serde_json::from_value(Value::Object(spec))
                .map_err(|e| Failure::config(format!("bad grid point: {e}")))?;
            let code = spec.build()?;
            let model = cfg.model.build(code.n_subsystems)?;
            let mut values = Vec::new();
            let mut outcomes = Vec::new();
            for a in &cfg.analyses {
                let r = run_analysis(a, &code, &model, seed, cli.budget_dim)?;
                values.push(r.value);
                outcomes.push((a.column(), r));
            }
            let refs: Vec<(&str, &AnalysisOutcome)> =
                outcomes.iter().map(|(n, r)| (*n, r)).collect();
            let (_, ok) = bracket_check(&refs);
            Ok(Row {
                params: param_keys
                    .iter()
                    .map(|k| point.get(k).cloned().unwrap_or(Value::Null))
                    .collect(),
                values,
                bracket_ok: ok,
            })
        })
        .collect();

    let mut csv = String::new();
    let mut header: Vec<String> = param_keys.clone();
    header.extend(cfg.analyses.iter().map(|a| a.column().to_string()));
    header.push("bracket_ok".into());
    csv.push_str(&header.join(","));
    csv.push_str("\r\n");
    let mut bracket_failure = false;
    let mut ordinates: Vec<Vec<(f64, f64)>> = vec![Vec::new(); cfg.analyses.len()];
    for (row, point) in rows.into_iter().zip(cfg.grid.iter()) {
        let row = row?;
        let mut fields: Vec<String> = row.params.iter().map(csv_field).collect();
        fields.extend(row.values.iter().map(|&v| format_float(v)));
        fields.push(row.bracket_ok.to_string());
        csv.push_str(&fields.join(","));
        csv.push_str("\r\n");
        bracket_failure |= !row.bracket_ok;
        if let Some(key) = &cfg.slope_param {
            if let Some(x) = point.get(key).and_then(Value::as_f64) {
                for (i, &v) in row.values.iter().enumerate() {
                    ordinates[i].push((x, v));
                }
            }
        }
    }

    let mut slopes = BTreeMap::new();
    for (i, a) in cfg.analyses.iter().enumerate() {
        if let Some(s) = lsq_slope(&ordinates[i]) {
            slopes.insert(a.column().to_string(), s);
        }
    }
    let summary = json!({
        "rows": cfg.grid.len(),
        "seed": seed,
        "slope_param": cfg.slope_param,
        "slopes": slopes,
        "bracket_ok": !bracket_failure,
    });

    match &cli.out {
        Some(path) => {
            std::fs::write(path, &csv)?;
            let mut spath = path.clone().into_os_string();
            spath.push(".summary.json");
            std::fs::write(spath, format!("{:#}\n", summary))?;
        }
        None => {
            print!("{csv}");
            println!("{:#}", summary);
        }
    }
    if bracket_failure {
        return Err(Failure::tolerance("bracket violated at one or more grid points"));
    }
    Ok(())
}

#[derive(Deserialize)]
struct EkConfig {
    d_l: u64,
    n: u64,
    eps: Option<f64>,
    #[serde(default)]
    metric: Option<String>,
    dims: Option<Vec<f64>>,
}

fn cmd_ek(cli: &Cli) -> Result<(), Failure> {
    let cfg: EkConfig = serde_json::from_value(load_config(cli)?)
        .map_err(|e| Failure::config(format!("bad ek config: {e}")))?;
    let mut report = BTreeMap::new();
    if let Some(eps) = cfg.eps {
        let metric = match cfg.metric.as_deref() {
            None | Some("worst") => EkMetric::Worst,
            Some("avg") | Some("average") => EkMetric::Average,
            Some(other) => return Err(Failure::config(format!("unknown metric '{other}'"))),
        };
        let b = ek_min_subsystem_dim(cfg.d_l, cfg.n, eps, metric)?;
        report.insert(
            "min_dim".to_string(),
            json!({
                "lambda1": b.lambda1,
                "dim": b.dim.as_ref().map(|d| d.to_string()),
                "ln_dim": b.ln_dim,
                "vacuous": b.vacuous,
            }),
        );
    }
    if let Some(dims) = &cfg.dims {
        let rep = ek_eps_lower_from_dims(cfg.d_l, cfg.n, dims)?;
        report.insert("eps_floor".to_string(), serde_json::to_value(&rep).unwrap());
    }
    if report.is_empty() {
        return Err(Failure::config("ek needs 'eps' and/or 'dims'"));
    }
    emit(cli, &format!("{:#}\n", json!(report)))
}

#[derive(Deserialize)]
struct GroupConfig {
    group: Value,
    construction: String,
    m: Option<usize>,
    /// Erased sets to verify ("all-single" when omitted).
    kl_sets: Option<Vec<Vec<usize>>>,
}

fn parse_group(v: &Value) -> Result<BuiltinGroup, Failure> {
    let name = v
        .as_str()
        .ok_or_else(|| Failure::config("group must be a name like 'z3', 's3', 'd4', 'q8'"))?;
    let lower = name.to_lowercase();
    if let Some(rest) = lower.strip_prefix('z') {
        let n: usize = rest
            .parse()
            .map_err(|_| Failure::config(format!("bad cyclic order in '{name}'")))?;
        return Ok(BuiltinGroup::Zn(n));
    }
    match lower.as_str() {
        "s3" => Ok(BuiltinGroup::S3),
        "d4" => Ok(BuiltinGroup::D4),
        "q8" => Ok(BuiltinGroup::Q8),
        _ => Err(Failure::config(format!("unknown group '{name}'"))),
    }
}

fn cmd_group(cli: &Cli) -> Result<(), Failure> {
    let cfg: GroupConfig = serde_json::from_value(load_config(cli)?)
        .map_err(|e| Failure::config(format!("bad group config: {e}")))?;
    let name = parse_group(&cfg.group)?;
    let gc = match cfg.construction.as_str() {
        "422" => code_422(name)?,
        "422-stab" => code_2m(name, 2)?,
        "bitflip" => bitflip_code(name, cfg.m.unwrap_or(3))?,
        "phaseflip" => phaseflip_code(name, cfg.m.unwrap_or(3))?,
        "2m" => code_2m(
            name,
            cfg.m
                .ok_or_else(|| Failure::config("construction '2m' needs 'm'"))?,
        )?,
        other => return Err(Failure::config(format!("unknown construction '{other}'"))),
    };
    let sets: Vec<Vec<usize>> = cfg
        .kl_sets
        .unwrap_or_else(|| (0..gc.code.n_subsystems).map(|s| vec![s]).collect());
    let mut kl = Vec::new();
    for set in &sets {
        let v = verify_kl_erasure(&gc.code, set, cli.budget_dim)?;
        kl.push(json!({"alpha": set, "violation": v}));
    }
    // Multiplier covariance for the quantum-double constructions.
    let covariance = if cfg.construction == "422" {
        let ord = gc.group.order;
        let identity: Vec<usize> = (0..ord).collect();
        let mut worst = 0.0f64;
        for l in 0..ord {
            let left = multiplier(&gc.group, l, Side::Left)?;
            let right = multiplier(&gc.group, l, Side::Right)?;
            let phys_l = vec![left.clone(), identity.clone(), left, identity.clone()];
            let exp_l: Vec<usize> = (0..ord * ord)
                .map(|x| gc.group.mul(l, x / ord) * ord + x % ord)
                .collect();
            worst = worst.max(verify_transversal_logical(&gc.code, &phys_l, &exp_l)?);
            let phys_r = vec![
                identity.clone(),
                identity.clone(),
                right.clone(),
                right,
            ];
            let exp_r: Vec<usize> = (0..ord * ord)
                .map(|x| (x / ord) * ord + gc.group.mul(x % ord, l))
                .collect();
            worst = worst.max(verify_transversal_logical(&gc.code, &phys_r, &exp_r)?);
        }
        Some(worst)
    } else {
        None
    };
    let report = json!({
        "group_order": gc.group.order,
        "construction": cfg.construction,
        "d_l": gc.code.d_l(),
        "n_subsystems": gc.code.n_subsystems,
        "isometry_residual": gc.code.verify_isometry(),
        "kl": kl,
        "covariance_residual": covariance,
    });
    emit(cli, &format!("{:#}\n", report))
}

fn cmd_verify(cli: &Cli) -> Result<(), Failure> {
    let budget = cli.budget_dim;
    let opts = AscentOptions {
        max_block: budget,
        ..AscentOptions::default()
    };
    let mut checks: Vec<(String, bool, String)> = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| {
        checks.push((name.to_string(), ok, detail));
    };

    let qutrit = three_qutrit();
    let model = ErasureModel::uniform_single_erasure(3);
    let fe = fe_via_constant_channel(&qutrit, &model, &opts)?;
    push(
        "three-qutrit exact recovery",
        (1.0 - fe.value).abs() < 1e-9,
        format!("fe = {}", fe.value),
    );
    let kl = verify_kl_erasure(&qutrit, &[1], budget)?;
    push("three-qutrit erasure condition", kl < 1e-12, format!("violation = {kl}"));

    let sharp = three_rotor_sharp(1, 20)?;
    let smodel = ErasureModel::uniform_single_erasure(3);
    let cert = certify_minorization(&sharp, &smodel)?;
    let expect = (4.0 / 41.0f64).sqrt();
    push(
        "sharp-rotor certificate closed form",
        (cert.bound - expect).abs() < 1e-12,
        format!("{} vs {expect}", cert.bound),
    );
    let t1 = thm1_worst_lower(&sharp, &smodel)?;
    let heur = worst_case_eps_heuristic(&sharp, &smodel, 8, cli.seed, &opts)?;
    let ok = t1.value <= heur.value + 1e-9 && heur.value <= cert.bound + 1e-9;
    push(
        "sharp-rotor bracket",
        ok,
        format!("{} <= {} <= {}", t1.value, heur.value, cert.bound),
    );
    let dist = environ_distinguishability_lower(&sharp, &smodel, 0, 2)?;
    push(
        "environment distinguishability below certificate",
        dist.value <= cert.bound + 1e-9,
        format!("{} <= {}", dist.value, cert.bound),
    );

    let w = w_state_code(2, 25)?;
    let wcert = certify_reference(&w, &ErasureModel::uniform_single_erasure(25), 0)?;
    let wexpect = (2.0f64.sqrt() + 2.0) / 5.0;
    push(
        "w-state certificate closed form",
        (wcert.bound - wexpect).abs() < 1e-12,
        format!("{} vs {wexpect}", wcert.bound),
    );

    let g422 = code_422(BuiltinGroup::Zn(2))?;
    let worst = (0..4)
        .map(|s| verify_kl_erasure(&g422.code, &[s], budget))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    push("[[4,2,2]] single erasures", worst < 1e-12, format!("violation = {worst}"));

    let all_ok = checks.iter().all(|(_, ok, _)| *ok);
    let report = json!({
        "checks": checks
            .iter()
            .map(|(n, ok, d)| json!({"name": n, "ok": ok, "detail": d}))
            .collect::<Vec<_>>(),
        "ok": all_ok,
    });
    emit(cli, &format!("{:#}\n", report))?;
    if !all_ok {
        return Err(Failure::tolerance("invariant suite failed"));
    }
    Ok(())
}

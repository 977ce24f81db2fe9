//! The `sepkit` command line.
//!
//! Every command builds a JSON report `{sepkit_version, command, config,
//! timestamp, result}`. With `--json` the report goes to stdout (or `--out`);
//! otherwise a short table goes to stderr and the report is written only when
//! `--out` is given. Exit codes: 0 on a completed computation whatever the
//! verdicts, 1 on usage, input or numerical errors, 2 when a guaranteed
//! invariant fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::closure::{closure_sweep, SweepReport};
use crate::criteria::{run_criterion, Criterion, Outcome, RunOptions, Verdict};
use crate::error::{Error, Result};
use crate::geometry::{
    closest_separable_ansatz, definetti_bound, farness_certificate, fidelity_bound_check, ppt_boundary_bisect,
    sep_max_overlap_maxent, tiles_upb_certificate, witness_lower_bound, DEFAULT_BISECTION_TOL,
};
use crate::io::{to_json_string, MatrixDocument};
use crate::linalg::{hermitian_eigenvalues, trace_distance, Side};
use crate::spec::{ParsedState, StateSpec};
use crate::states::{dim_cap, tensor_power_bipartite, Ensemble};
use crate::symext::{self, verify_extension, ExtensionOptions, ExtensionStatus};
use crate::tomography::{acceptance_probability, local_povm};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Witness residual above which a reported extension counts as broken.
const WITNESS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Parser, Serialize)]
#[command(name = "sepkit", version, about = "Separability toolkit for bipartite quantum states")]
pub struct Cli {
    /// Print the JSON report to stdout (or --out) instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the JSON report (or, for `state make`, the matrix document) here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed for every random choice the command makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance override (symmetric-extension feasibility,
    /// boundary bisection width).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run one-shot criteria and the symmetric-extension test on a state.
    Criteria(CriteriaArgs),
    /// Decide k-symmetric extendibility.
    Symext(SymextArgs),
    /// Local-tomography acceptance tests.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// PPT-versus-separable geometry.
    #[command(subcommand)]
    Geometry(GeometryCommand),
    /// Tensor-product closure sweep for a criterion.
    Closure(ClosureArgs),
    /// Build or inspect states.
    #[command(subcommand)]
    State(StateCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct CriteriaArgs {
    /// State spec, e.g. maxent:2, isotropic:3:0.2, tiles, sep:2:2:4:7, file:rho.json
    #[arg(long)]
    pub state: String,
    /// Comma-separated criteria (ppt, reduction, entropic, majorization,
    /// crossnorm, symext); all when omitted.
    #[arg(long, visible_alias = "only", value_delimiter = ',')]
    pub criterion: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = symext::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Multi-start count of the UPB certificate reported for `tiles`.
    #[arg(long, default_value_t = 64)]
    pub upb_starts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SymextArgs {
    #[arg(long)]
    pub state: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = symext::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomoCommand {
    /// Probability that tomography of n-1 copies of SOURCE lands within
    /// eps/2 of TARGET.
    Accept(AcceptArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AcceptArgs {
    #[arg(long)]
    pub target: String,
    /// Defaults to the target.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.75)]
    pub eps: f64,
    #[arg(long, default_value_t = 400)]
    pub trials: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryCommand {
    /// Bisect toward the maximally entangled state for the PPT boundary.
    Boundary(BoundaryArgs),
    /// The finite de Finetti error bound 2 d^2 n / k.
    Definetti(DefinettiArgs),
    /// Witness lower bound on the distance to separable states.
    Witness(WitnessArgs),
    /// Monte-Carlo distance lower bounds against a separable ansatz.
    Farness(FarnessArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub state: String,
}

#[derive(Debug, Args, Serialize)]
pub struct DefinettiArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct WitnessArgs {
    #[arg(long)]
    pub state: String,
    /// Witness operator given as a state spec; `maxent:d` gets the exact
    /// separable maximum.
    #[arg(long)]
    pub witness: String,
    /// Tensor power applied to both state and witness.
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    /// Separable maximum of Tr(W sigma); required unless the witness is maxent.
    #[arg(long)]
    pub sep_max: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub sep_starts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FarnessArgs {
    #[arg(long)]
    pub state: String,
    /// Members of a uniform separable ansatz; when omitted a greedy
    /// closest-separable search builds one.
    #[arg(long, num_args = 1..)]
    pub ansatz: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 50, 150])]
    pub n_list: Vec<u64>,
    #[arg(long, default_value_t = 0.75)]
    pub eps: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// Greedy steps of the separable ansatz.
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ClosureArgs {
    /// ppt, reduction, entropic (both orders), majorization, crossnorm or symext.
    #[arg(long)]
    pub criterion: String,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateCommand {
    /// Write a state as a matrix JSON document (stdout or --out).
    Make(StateArgs),
    /// Summarise a state.
    Show(StateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct StateArgs {
    #[arg(long)]
    pub state: String,
}

/// Outcome of a command: the result payload, a human summary, and whether a
/// guaranteed invariant failed.
struct CommandOutput {
    name: &'static str,
    result: Value,
    table: Vec<String>,
    violation: bool,
}

fn load(spec: &str) -> Result<ParsedState> {
    spec.parse::<StateSpec>()?.build()
}

fn state_summary(p: &ParsedState) -> Value {
    let s = p.state.shape();
    json!({ "spec": p.spec.to_string(), "dims": [s.dim_a, s.dim_b] })
}

fn verdict_line(v: &Verdict) -> String {
    let outcome = match v.outcome {
        Outcome::Pass => "pass",
        Outcome::Fail => "FAIL",
        Outcome::Inconclusive => "inconclusive",
    };
    format!("{:<22} {:<13} margin {:>+.6e}  (tol {:.1e})", v.criterion.name(), outcome, v.margin, v.tol)
}

fn extension_options(cli: &Cli, max_iters: usize) -> ExtensionOptions {
    let mut o = ExtensionOptions { max_iters, ..ExtensionOptions::default() };
    if let Some(t) = cli.tol {
        o.tol = t;
    }
    o
}

fn cmd_criteria(cli: &Cli, a: &CriteriaArgs) -> Result<CommandOutput> {
    let p = load(&a.state)?;
    let mut list = Vec::new();
    if a.criterion.is_empty() {
        list.extend(Criterion::ONE_SHOT);
        list.push(Criterion::SymmetricExtension);
    } else {
        for tok in &a.criterion {
            for c in Criterion::parse_list(tok)? {
                if !list.contains(&c) {
                    list.push(c);
                }
            }
        }
    }
    let opts = RunOptions { symext_k: a.k, symext: extension_options(cli, a.max_iters) };
    let verdicts = list.iter().map(|&c| run_criterion(&p.state, c, &opts)).collect::<Result<Vec<_>>>()?;
    let mut table: Vec<String> = verdicts.iter().map(verdict_line).collect();
    let mut notes = Vec::new();
    let mut upb = Value::Null;
    if p.spec == StateSpec::Tiles {
        let cert = tiles_upb_certificate(a.upb_starts, cli.seed)?;
        let ppt_passed = verdicts.iter().any(|v| v.criterion == Criterion::Ppt && v.passed);
        if cert.certified && ppt_passed {
            notes.push("entangled by UPB certificate despite PPT pass".to_string());
        }
        table.push(format!(
            "UPB certificate: min product overlap {:.6} vs threshold {:.1e} -> {}",
            cert.min_overlap,
            cert.threshold,
            if cert.certified { "entangled" } else { "not certified" }
        ));
        upb = serde_json::to_value(cert)?;
    }
    table.extend(notes.iter().map(|n| format!("note: {n}")));
    Ok(CommandOutput {
        name: "criteria",
        result: json!({ "state": state_summary(&p), "verdicts": verdicts, "upb_certificate": upb, "notes": notes }),
        table,
        violation: false,
    })
}

fn cmd_symext(cli: &Cli, a: &SymextArgs) -> Result<CommandOutput> {
    let p = load(&a.state)?;
    let opts = extension_options(cli, a.max_iters);
    let res = symext::has_symmetric_extension(&p.state, a.k, &opts)?;
    let check = match &res.witness_extension {
        Some(x) => Some(verify_extension(&p.state, a.k, x)?),
        None => None,
    };
    let violation = res.status == ExtensionStatus::Feasible && !check.is_some_and(|c| c.within(WITNESS_CHECK_TOL));
    let table = vec![
        format!("k = {}: {:?} after {} iterations", a.k, res.status, res.iterations),
        format!(
            "residual {:.3e}, certificate {} (tol {:.1e})",
            res.residual,
            res.certificate.map_or_else(|| "none".to_string(), |c| format!("{c:+.3e}")),
            opts.tol
        ),
    ];
    Ok(CommandOutput {
        name: "symext",
        result: json!({
            "state": state_summary(&p),
            "k": a.k,
            "status": res.status,
            "residual": res.residual,
            "iterations": res.iterations,
            "certificate": res.certificate,
            "tol": opts.tol,
            "witness_check": check,
            "witness_check_tol": WITNESS_CHECK_TOL,
        }),
        table,
        violation,
    })
}

fn cmd_accept(cli: &Cli, a: &AcceptArgs) -> Result<CommandOutput> {
    let target = load(&a.target)?;
    let source = match &a.source {
        Some(s) => load(s)?,
        None => target.clone(),
    };
    let povm = local_povm(&target.state, cli.seed)?;
    let est = acceptance_probability(&target.state, &source.state, a.n, a.eps, a.trials, cli.seed)?;
    let table = vec![format!(
        "acceptance {:.4} ± {:.4} (n = {}, eps = {}, {} trials)",
        est.probability, est.std_error, a.n, a.eps, a.trials
    )];
    Ok(CommandOutput {
        name: "tomo accept",
        result: json!({
            "target": state_summary(&target),
            "source": state_summary(&source),
            "n": a.n,
            "eps": a.eps,
            "acceptance": est,
            "povm_outcomes": povm.len(),
            "povm_dual_energy": povm.dual_energy(),
        }),
        table,
        violation: false,
    })
}

fn cmd_boundary(cli: &Cli, a: &BoundaryArgs) -> Result<CommandOutput> {
    let p = load(&a.state)?;
    let tol = cli.tol.unwrap_or(DEFAULT_BISECTION_TOL);
    let res = ppt_boundary_bisect(&p.state, tol, p.ensemble.as_ref())?;
    let fid = fidelity_bound_check(&res.boundary_state)?;
    let violation = (res.certified_separable && !res.bound_ok) || !fid.ok;
    let table = vec![
        format!("t* = {:.9} (bracket width {:.1e})", res.t_star, res.bracket[1] - res.bracket[0]),
        format!("distance to boundary {:.6} vs bound {:.6}", res.distance_from_start, res.bound),
        format!("boundary fidelity with maxent {:.6} vs bound {:.6}", fid.fidelity, fid.bound),
    ];
    Ok(CommandOutput {
        name: "geometry boundary",
        result: json!({ "state": state_summary(&p), "bisection_tol": tol, "boundary": res, "boundary_fidelity": fid }),
        table,
        violation,
    })
}

fn cmd_definetti(a: &DefinettiArgs) -> Result<CommandOutput> {
    let bound = definetti_bound(a.dim, a.n, a.k)?;
    Ok(CommandOutput {
        name: "geometry definetti",
        result: json!({ "dim": a.dim, "n": a.n, "k": a.k, "bound": bound }),
        table: vec![format!("2 dim n / (n + k) = {bound}")],
        violation: false,
    })
}

fn cmd_witness(cli: &Cli, a: &WitnessArgs) -> Result<CommandOutput> {
    if a.power == 0 {
        return Err(Error::InvalidArgument("power must be at least 1".into()));
    }
    let p = load(&a.state)?;
    let w = load(&a.witness)?;
    let rho = tensor_power_bipartite(&p.state, a.power)?;
    let w_op = tensor_power_bipartite(&w.state, a.power)?;
    let (sep_max, source, check) = match (a.sep_max, &w.spec) {
        (Some(v), _) => (v, "given", Value::Null),
        (None, StateSpec::MaxEnt(d)) => {
            let local = u32::try_from(a.power)
                .ok()
                .and_then(|e| d.checked_pow(e))
                .ok_or_else(|| Error::InvalidArgument("witness dimension overflows".into()))?;
            let c = sep_max_overlap_maxent(local, a.sep_starts, cli.seed)?;
            (c.value, "exact 1/d, checked numerically", serde_json::to_value(c)?)
        }
        (None, _) => return Err(Error::Precondition("--sep-max is required unless the witness is maxent:d".into())),
    };
    let value = rho.matrix().trace_product(w_op.matrix()).re;
    let bound = witness_lower_bound(&rho, w_op.matrix(), sep_max)?;
    Ok(CommandOutput {
        name: "geometry witness",
        result: json!({
            "state": state_summary(&p),
            "witness": w.spec.to_string(),
            "power": a.power,
            "witness_value": value,
            "sep_max": sep_max,
            "sep_max_source": source,
            "sep_max_check": check,
            "lower_bound": bound,
        }),
        table: vec![format!("Tr(W rho) = {value:.9}, sep max {sep_max:.9}, lower bound {bound:.9}")],
        violation: false,
    })
}

fn cmd_farness(cli: &Cli, a: &FarnessArgs) -> Result<CommandOutput> {
    let p = load(&a.state)?;
    let (ensemble, source) = if a.ansatz.is_empty() {
        let found = closest_separable_ansatz(&p.state, a.iterations, a.starts, cli.seed)?;
        (found.to_ensemble(), "greedy closest-separable search")
    } else {
        let members = a.ansatz.iter().map(|s| load(s).map(|m| m.state)).collect::<Result<Vec<_>>>()?;
        (Ensemble::uniform(members)?, "given")
    };
    let ansatz_distance = trace_distance(&p.state, &ensemble.state())?;
    let report = farness_certificate(&p.state, &ensemble, &a.n_list, a.eps, a.trials, cli.seed)?;
    let mut table = vec![format!(
        "ansatz ({source}): {} members, trace distance {:.6} from the state",
        ensemble.members().len(),
        ansatz_distance
    )];
    table.extend(report.points.iter().map(|pt| {
        format!(
            "n = {:>5}: accept(target) {:.4}, accept(ansatz) {:.4}, lower bound {:+.4} ± {:.4}",
            pt.n, pt.accept_target.probability, pt.accept_ansatz.probability, pt.lower_bound, pt.std_error
        )
    }));
    Ok(CommandOutput {
        name: "geometry farness",
        result: json!({
            "state": state_summary(&p),
            "ansatz_source": source,
            "ansatz_members": ensemble.members().len(),
            "ansatz_trace_distance": ansatz_distance,
            "farness": report,
        }),
        table,
        violation: false,
    })
}

fn sweep_line(r: &SweepReport) -> String {
    format!(
        "{:<22} {} trials, {} violations, min product margin {:+.3e}, max sub-assertion residual {:.1e}",
        r.criterion.name(),
        r.trials,
        r.violations,
        r.min_product_margin,
        r.max_sub_residual
    )
}

fn cmd_closure(cli: &Cli, a: &ClosureArgs) -> Result<CommandOutput> {
    let mut opts = RunOptions { symext_k: a.k, ..RunOptions::default() };
    if let Some(t) = cli.tol {
        opts.symext.tol = t;
    }
    let reports = Criterion::parse_list(&a.criterion)?
        .into_iter()
        .map(|c| closure_sweep(c, a.trials, cli.seed, &opts))
        .collect::<Result<Vec<_>>>()?;
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    Ok(CommandOutput {
        name: "closure",
        table: reports.iter().map(sweep_line).collect(),
        result: json!({ "sweeps": reports, "violations": violations }),
        violation: violations > 0,
    })
}

fn cmd_state_show(a: &StateArgs) -> Result<CommandOutput> {
    let p = load(&a.state)?;
    let eigs = p.state.eigenvalues();
    let rank_tol = 1e-10 * eigs.first().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    let rank = eigs.iter().filter(|&&x| x > rank_tol).count();
    let purity: f64 = eigs.iter().map(|x| x * x).sum();
    let pt_min = hermitian_eigenvalues(&p.state.partial_transpose())?.last().copied().unwrap_or(0.0);
    let marg = |side| -> Result<Vec<f64>> { hermitian_eigenvalues(&p.state.reduced(side)) };
    let table = vec![
        format!("{}: {}x{}, rank {rank}, purity {purity:.6}", p.spec, p.state.shape().dim_a, p.state.shape().dim_b),
        format!("min partial-transpose eigenvalue {pt_min:+.6e}"),
    ];
    Ok(CommandOutput {
        name: "state show",
        result: json!({
            "state": state_summary(&p),
            "trace": p.state.matrix().trace().re,
            "spectrum": eigs,
            "rank": rank,
            "rank_tol": rank_tol,
            "purity": purity,
            "min_partial_transpose_eigenvalue": pt_min,
            "spectrum_a": marg(Side::A)?,
            "spectrum_b": marg(Side::B)?,
            "ensemble_members": p.ensemble.as_ref().map(|e| e.members().len()),
        }),
        table,
        violation: false,
    })
}

fn cmd_state_make(cli: &Cli, a: &StateArgs) -> Result<i32> {
    let p = load(&a.state)?;
    let mut s = to_json_string(&MatrixDocument::from_density(&p.state))?;
    s.push('\n');
    match &cli.out {
        Some(path) => fs::write(path, s)?,
        None => std::io::stdout().write_all(s.as_bytes())?,
    }
    Ok(0)
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Wraps a result with the version, resolved configuration and timestamp.
fn report(cli: &Cli, name: &str, result: Value) -> Result<Value> {
    Ok(json!({
        "sepkit_version": VERSION,
        "command": name,
        "config": {
            "args": serde_json::to_value(&cli.command)?,
            "json": cli.json,
            "out": cli.out,
            "seed": cli.seed,
            "tol": cli.tol,
            "dim_cap": dim_cap(),
        },
        "timestamp": timestamp(),
        "result": result,
    }))
}

fn execute(cli: &Cli) -> Result<i32> {
    let out = match &cli.command {
        Command::Criteria(a) => cmd_criteria(cli, a)?,
        Command::Symext(a) => cmd_symext(cli, a)?,
        Command::Tomo(TomoCommand::Accept(a)) => cmd_accept(cli, a)?,
        Command::Geometry(GeometryCommand::Boundary(a)) => cmd_boundary(cli, a)?,
        Command::Geometry(GeometryCommand::Definetti(a)) => cmd_definetti(a)?,
        Command::Geometry(GeometryCommand::Witness(a)) => cmd_witness(cli, a)?,
        Command::Geometry(GeometryCommand::Farness(a)) => cmd_farness(cli, a)?,
        Command::Closure(a) => cmd_closure(cli, a)?,
        Command::State(StateCommand::Make(a)) => return cmd_state_make(cli, a),
        Command::State(StateCommand::Show(a)) => cmd_state_show(a)?,
    };
    let doc = report(cli, out.name, out.result)?;
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    if let Some(path) = &cli.out {
        fs::write(path, &text)?;
    } else if cli.json {
        std::io::stdout().write_all(text.as_bytes())?;
    }
    if !cli.json {
        let mut err = std::io::stderr().lock();
        for line in &out.table {
            writeln!(err, "{line}")?;
        }
    }
    if out.violation {
        eprintln!("sepkit: invariant violated (see report)");
        return Ok(2);
    }
    Ok(0)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sepkit: {e}");
            match e {
                Error::InvariantViolation(_) => 2,
                _ => 1,
            }
        }
    }
}

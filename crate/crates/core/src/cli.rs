//! Command-line front end: `simulate`, `analyze`, `verify` and `stability`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rug::Rational;
use serde_json::{json, Value};
use thiserror::Error as ThisError;

use crate::automata::{bbs_trajectory, parse_cells, pbbs_trajectory, render_cells, BbsState, PbbsState};
use crate::curve::{CurveModel, PlaneEdge, PlaneGraph, PlanePoint};
use crate::error::Error;
use crate::exact::{parse_rational, rational_to_pq, RatMatrix, RatVector};
use crate::pipeline::{
    analyze_state, limit_rows, stability_scan, verify_limit, verify_periodic, Analysis, StabilityReport,
};
use crate::puiseux::PuiseuxConfig;

#[derive(Parser, Debug)]
#[command(
    name = "tropbbs",
    version,
    about = "Box-ball system: automaton, tropical spectral data and theta-function solutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evolve a state with the automaton and print its trajectory.
    Simulate(SimulateArgs),
    /// Curve, period matrix, divisor points and `c0` of a periodic state.
    Analyze(AnalyzeArgs),
    /// Compare the theta and limit solutions with the automaton.
    Verify(VerifyArgs),
    /// Abel–Jacobi sums of the state padded with `M` empty boxes.
    Stability(StabilityArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ascii,
    Json,
    Csv,
    Svg,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["bbs", "pbbs", "state"])))]
pub struct SimulateArgs {
    /// State on the integer line, position 0 first.
    #[arg(long)]
    pub bbs: Option<String>,
    /// State on a cycle of `L` boxes.
    #[arg(long)]
    pub pbbs: Option<String>,
    /// File of periodic states, one per line; `#` starts a comment.
    #[arg(long)]
    pub state: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Cells `a:b` (half-open) to print.
    #[arg(long, value_parser = parse_range)]
    pub window: Option<(i64, i64)>,
    #[arg(long, value_enum, default_value_t = Format::Ascii)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
#[command(group(ArgGroup::new("input").required(true).args(["pbbs", "state"])))]
pub struct PeriodicInput {
    /// State on a cycle of `L` boxes.
    #[arg(long)]
    pub pbbs: Option<String>,
    /// File of periodic states, one per line; `#` starts a comment.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Newton–Puiseux steps per root before escalation.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Relative zero test for numerical coefficients.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: PeriodicInput,
    #[arg(long, value_enum, default_value_t = Format::Ascii)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: PeriodicInput,
    #[arg(long, default_value_t = 30)]
    pub steps: usize,
    /// Cells `a:b` checked for the limit solution.
    #[arg(long, value_parser = parse_range)]
    pub window: Option<(i64, i64)>,
    /// Replacement `c0`, comma-separated `p/q` entries.
    #[arg(long, value_parser = parse_vector)]
    pub c0_override: Option<RatVector>,
    #[arg(long, value_enum, default_value_t = Format::Ascii)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub input: PeriodicInput,
    /// Padding range `a:b` (inclusive).
    #[arg(long, value_parser = parse_range, default_value = "1:15")]
    pub m_range: (i64, i64),
    /// Consecutive equal sums required to call the tail stable.
    #[arg(long, default_value_t = 10)]
    pub run: usize,
    #[arg(long, value_enum, default_value_t = Format::Ascii)]
    pub format: Format,
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("bad bound {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad bound {b:?}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

fn parse_vector(s: &str) -> std::result::Result<RatVector, String> {
    s.split(',')
        .map(|x| parse_rational(x).ok_or_else(|| format!("bad rational {x:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(RatVector)
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// The report, with at least one failed comparison.
    #[error("verification failed")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Verify(_) => 3,
            CliError::Domain(e) => match e {
                Error::InvalidStateChar { .. } => 2,
                Error::IncreaseDepth { .. } | Error::Precision(_) | Error::AmbiguousEdge(_) => 4,
                _ => 1,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Verify(report)) => {
            print!("{report}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.exit_code() == 4 {
                eprintln!("hint: retry with a larger --depth");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs one command and returns what it prints.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Verify(args) => verify(args),
        Command::Stability(args) => stability(args),
    }
}

/// Non-empty lines of a state file, comments removed.
pub fn read_state_file(path: &Path) -> CliResult<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn periodic_states(input: &PeriodicInput) -> CliResult<Vec<PbbsState>> {
    let lines = match (&input.pbbs, &input.state) {
        (Some(s), _) => vec![s.clone()],
        (None, Some(path)) => read_state_file(path)?,
        (None, None) => return Err(CliError::Usage("a state is required".into())),
    };
    Ok(lines.iter().map(|l| l.parse()).collect::<Result<Vec<_>, _>>()?)
}

fn config(input: &PeriodicInput) -> CliResult<PuiseuxConfig> {
    let mut cfg = PuiseuxConfig::default();
    if let Some(d) = input.depth {
        if d == 0 {
            return Err(CliError::Usage("--depth must be positive".into()));
        }
        cfg.depth = d;
        cfg.max_depth = cfg.max_depth.max(d);
    }
    if let Some(e) = input.epsilon {
        if !(e > 0.0 && e < 1.0) {
            return Err(CliError::Usage("--epsilon must lie in (0, 1)".into()));
        }
        cfg.epsilon = e;
    }
    Ok(cfg)
}

fn unsupported(format: Format, command: &str) -> CliError {
    CliError::Usage(format!("{command} does not support --format {format:?}").to_lowercase())
}

/// Prints a single JSON value, or an array of them for several states.
fn json_output(values: Vec<Value>) -> String {
    let value = if values.len() == 1 {
        values.into_iter().next().unwrap()
    } else {
        Value::Array(values)
    };
    serde_json::to_string_pretty(&value).unwrap() + "\n"
}

fn pq(r: &Rational) -> Value {
    Value::String(rational_to_pq(r))
}

fn pq_int(v: i64) -> Value {
    pq(&Rational::from(v))
}

fn pq_vector(v: &RatVector) -> Value {
    Value::Array(v.iter().map(pq).collect())
}

fn pq_matrix(m: &RatMatrix) -> Value {
    Value::Array(
        (0..m.dim())
            .map(|i| Value::Array(m.row(i).iter().map(pq).collect()))
            .collect(),
    )
}

fn pq_point(p: &PlanePoint) -> Value {
    json!([pq(&p.0), pq(&p.1)])
}

// ---------------------------------------------------------------- simulate

fn simulate(args: &SimulateArgs) -> CliResult<String> {
    if args.format == Format::Svg {
        return Err(unsupported(args.format, "simulate"));
    }
    let mut runs: Vec<(&str, (i64, i64), Vec<Vec<bool>>)> = Vec::new();
    if let Some(s) = &args.bbs {
        let state = BbsState::new(0, parse_cells(s)?);
        let rows = bbs_trajectory(&state, args.steps);
        let end = rows
            .iter()
            .map(BbsState::end)
            .max()
            .unwrap_or(0)
            .max(state.cells().len() as i64);
        let (a, b) = args.window.unwrap_or((0, end));
        runs.push(("bbs", (a, b), rows.iter().map(|r| r.window(a, b)).collect()));
    } else {
        let input = PeriodicInput {
            pbbs: args.pbbs.clone(),
            state: args.state.clone(),
            depth: None,
            epsilon: None,
        };
        for state in periodic_states(&input)? {
            let rows = pbbs_trajectory(&state, args.steps)?;
            let (a, b) = args.window.unwrap_or((0, state.size() as i64));
            runs.push((
                "pbbs",
                (a, b),
                rows.iter().map(|r| (a..b).map(|n| r.get(n)).collect()).collect(),
            ));
        }
    }
    Ok(match args.format {
        Format::Ascii => runs
            .iter()
            .map(|(_, _, rows)| ascii_rows(rows))
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Csv => {
            let mut out = String::from("t,n,U\n");
            for (_, (a, _), rows) in &runs {
                out += &csv_rows(rows, *a);
            }
            out
        }
        Format::Json => json_output(
            runs.iter()
                .map(|(mode, (a, b), rows)| {
                    json!({
                        "mode": mode,
                        "window": [pq_int(*a), pq_int(*b)],
                        "rows": rows.iter().map(|r| render_cells(r)).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        ),
        Format::Svg => unreachable!(),
    })
}

/// `t=0:   ..111...` rows, labels padded so the cells line up.
pub fn ascii_rows(rows: &[Vec<bool>]) -> String {
    let width = format!("t={}:", rows.len().saturating_sub(1)).len().max(4) + 3;
    rows.iter().enumerate().fold(String::new(), |mut out, (t, r)| {
        let _ = writeln!(out, "{:<width$}{}", format!("t={t}:"), render_cells(r));
        out
    })
}

fn csv_rows(rows: &[Vec<bool>], n0: i64) -> String {
    let mut out = String::new();
    for (t, row) in rows.iter().enumerate() {
        for (k, &b) in row.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{}", n0 + k as i64, u8::from(b));
        }
    }
    out
}

// ----------------------------------------------------------------- analyze

fn analyze(args: &AnalyzeArgs) -> CliResult<String> {
    if args.format == Format::Csv {
        return Err(unsupported(args.format, "analyze"));
    }
    let cfg = config(&args.input)?;
    let states = periodic_states(&args.input)?;
    let mut reports = Vec::new();
    for state in &states {
        let a = analyze_state(state, &cfg)?;
        reports.push(a);
    }
    match args.format {
        Format::Ascii => Ok(reports
            .iter()
            .map(analysis_text)
            .collect::<CliResult<Vec<_>>>()?
            .join("\n")),
        Format::Json => Ok(json_output(
            reports.iter().map(analysis_json).collect::<CliResult<Vec<_>>>()?,
        )),
        Format::Svg => Ok(reports.iter().map(|a| a.curve.to_svg()).collect::<Vec<_>>().join("\n")),
        Format::Csv => unreachable!(),
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn analysis_text(a: &Analysis) -> CliResult<String> {
    let curve = &a.curve;
    let mut out = String::new();
    let _ = writeln!(out, "state      {}", a.state);
    let _ = writeln!(out, "L          {}", curve.size());
    let _ = writeln!(out, "genus      {}", curve.genus());
    if curve.genus() == 0 {
        return Ok(out);
    }
    let (mu, omega) = curve.mu_omega();
    let _ = writeln!(out, "solitons   {}", join(curve.solitons()));
    let _ = writeln!(out, "A          {}", join(curve.interaction()));
    let _ = writeln!(out, "B          {}", curve.period_matrix()?);
    let _ = writeln!(out, "mu         {mu}");
    let _ = writeln!(out, "omega      {omega}");
    let _ = writeln!(out, "kappa      {}", a.kappa);
    let _ = writeln!(out, "points     (X, Y)  mult  location  image");
    for p in &a.points {
        let _ = writeln!(
            out,
            "           ({}, {})  {}  {}{}  {}",
            p.point.x,
            p.point.y,
            p.point.multiplicity,
            p.location,
            if p.shift == 0 {
                String::new()
            } else {
                format!("{:+}", p.shift.to_f64())
            },
            p.image
        );
    }
    let _ = writeln!(out, "c0         {}", a.c0);
    let _ = writeln!(out, "c0 mod B   {}", a.c0_reduced()?);
    Ok(out)
}

/// `{L, solitons, A, B, mu, omega, kappa, vertices, edges}`.
pub fn curve_json(curve: &CurveModel) -> CliResult<Value> {
    let (mu, omega) = curve.mu_omega();
    let b = if curve.genus() == 0 {
        RatMatrix::zeros(0)
    } else {
        curve.period_matrix()?
    };
    let PlaneGraph { vertices, edges } = curve.plane_graph();
    Ok(json!({
        "L": pq_int(curve.size()),
        "solitons": curve.solitons().iter().map(|&s| pq_int(s)).collect::<Vec<_>>(),
        "A": curve.interaction().iter().map(|&s| pq_int(s)).collect::<Vec<_>>(),
        "B": pq_matrix(&b),
        "mu": pq_vector(&mu),
        "omega": pq_vector(&omega),
        "kappa": pq_vector(&curve.riemann_constant()),
        "vertices": vertices.iter().map(pq_point).collect::<Vec<_>>(),
        "edges": edges.iter().map(edge_json).collect::<Vec<_>>(),
    }))
}

fn edge_json(e: &PlaneEdge) -> Value {
    json!({
        "from": pq_point(&e.from),
        "to": e.to.as_ref().map(pq_point),
        "direction": [pq_int(e.direction.0), pq_int(e.direction.1)],
        "weight": pq_int(e.weight),
    })
}

fn analysis_json(a: &Analysis) -> CliResult<Value> {
    let points: Vec<Value> = a
        .points
        .iter()
        .map(|p| {
            json!({
                "x": pq(&p.point.x),
                "y": pq(&p.point.y),
                "multiplicity": p.point.multiplicity,
                "location": p.location.to_string(),
                "shift": pq(&p.shift),
                "image": pq_vector(&p.image),
            })
        })
        .collect();
    let reduced = if a.curve.genus() == 0 {
        Value::Array(Vec::new())
    } else {
        pq_vector(&a.c0_reduced()?)
    };
    Ok(json!({
        "state": a.state.to_string(),
        "genus": a.curve.genus(),
        "curve": curve_json(&a.curve)?,
        "points": points,
        "c0": pq_vector(&a.c0),
        "c0_reduced": reduced,
    }))
}

// ------------------------------------------------------------------ verify

/// Outcome of one comparison: `None` for a pass, else the first bad cell.
type Check = Option<(i64, i64)>;

fn verify(args: &VerifyArgs) -> CliResult<String> {
    if matches!(args.format, Format::Svg | Format::Csv) {
        return Err(unsupported(args.format, "verify"));
    }
    let cfg = config(&args.input)?;
    let mut texts = Vec::new();
    let mut values = Vec::new();
    let mut failed = false;
    for state in periodic_states(&args.input)? {
        let a = analyze_state(&state, &cfg)?;
        let mut ctx = a.theta_context()?;
        if let Some(c0) = &args.c0_override {
            if c0.len() != ctx.genus() {
                return Err(CliError::Usage(format!(
                    "--c0-override needs {} entries, got {}",
                    ctx.genus(),
                    c0.len()
                )));
            }
            ctx = ctx.with_c0(c0.clone())?;
        }
        let periodic = as_check(verify_periodic(&ctx, &state, args.steps))?;
        let (n0, n1) = args.window.unwrap_or_else(|| default_limit_window(&state, args.steps));
        let limit = if ctx.genus() == 0 {
            None
        } else {
            let lim = ctx.limit()?;
            let check = as_check(verify_limit(&lim, n0, n1, args.steps))?;
            // The limit solution must carry the state's balls.
            let balls = match check {
                None => limit_rows(&lim, n0, n1, 0)?[0].ball_count(),
                Some(_) => 0,
            };
            Some((check, balls == state.ball_count()))
        };
        failed |= periodic.is_some() || limit.as_ref().is_some_and(|(c, ok)| c.is_some() || !ok);
        texts.push(verify_text(&state, args.steps, periodic, limit.as_ref(), (n0, n1)));
        values.push(json!({
            "state": state.to_string(),
            "steps": args.steps,
            "periodic": check_json(periodic),
            "limit": limit.as_ref().map(|(c, ok)| json!({
                "window": [pq_int(n0), pq_int(n1)],
                "equation": check_json(*c),
                "ball_count_matches": ok,
            })),
        }));
    }
    let out = match args.format {
        Format::Json => json_output(values),
        _ => texts.join(""),
    };
    if failed {
        Err(CliError::Verify(out))
    } else {
        Ok(out)
    }
}

/// A theta value that is not a ball count counts as a located failure.
fn as_check(r: crate::error::Result<Check>) -> CliResult<Check> {
    match r {
        Ok(c) => Ok(c),
        Err(Error::SolutionMismatch { n, t, .. }) => Ok(Some((n, t))),
        Err(e) => Err(e.into()),
    }
}

/// Wide enough for every ball of the limit solution up to `steps`.
fn default_limit_window(state: &PbbsState, steps: usize) -> (i64, i64) {
    let l = state.size() as i64;
    let reach = (state.ball_count() as i64) * (steps as i64 + 1);
    (-2 * l, 3 * l + reach)
}

fn check_json(c: Check) -> Value {
    match c {
        None => json!({ "pass": true }),
        Some((n, t)) => json!({ "pass": false, "n": n, "t": t }),
    }
}

fn verify_text(
    state: &PbbsState,
    steps: usize,
    periodic: Check,
    limit: Option<&(Check, bool)>,
    window: (i64, i64),
) -> String {
    let verdict = |c: Check| match c {
        None => "PASS".to_string(),
        Some((n, t)) => format!("FAIL at n={n} t={t}"),
    };
    let mut out = String::new();
    let _ = writeln!(out, "state {state}");
    let _ = writeln!(out, "  theta vs automaton, t in [0, {steps}]: {}", verdict(periodic));
    if let Some((c, ok)) = limit {
        let _ = writeln!(
            out,
            "  limit solution on [{}, {}), t in [0, {steps}]: {}",
            window.0,
            window.1,
            verdict(*c)
        );
        let _ = writeln!(out, "  limit ball count: {}", if *ok { "PASS" } else { "FAIL" });
    }
    out
}

// --------------------------------------------------------------- stability

fn stability(args: &StabilityArgs) -> CliResult<String> {
    if matches!(args.format, Format::Svg) {
        return Err(unsupported(args.format, "stability"));
    }
    let cfg = config(&args.input)?;
    let (a, b) = args.m_range;
    if a < 0 {
        return Err(CliError::Usage("--m-range must be non-negative".into()));
    }
    let mut reports = Vec::new();
    for state in periodic_states(&args.input)? {
        let report = stability_scan(&state, a as usize..=b as usize, args.run, &cfg)?;
        reports.push((state, report));
    }
    Ok(match args.format {
        Format::Ascii => reports.iter().map(|(s, r)| stability_text(s, r)).collect::<Vec<_>>().join("\n"),
        Format::Csv => {
            let mut out = String::from("state,M,sum\n");
            for (s, r) in &reports {
                for row in &r.rows {
                    let sum: Vec<String> = row.sum.iter().map(rational_to_pq).collect();
                    let _ = writeln!(out, "{s},{},{}", row.m, sum.join(" "));
                }
            }
            out
        }
        Format::Json => json_output(
            reports
                .iter()
                .map(|(s, r)| {
                    json!({
                        "state": s.to_string(),
                        "rows": r.rows.iter().map(|row| json!({ "M": row.m, "sum": pq_vector(&row.sum) })).collect::<Vec<_>>(),
                        "run": r.window,
                        "m0": r.m0,
                        "stable": r.m0.is_some(),
                    })
                })
                .collect(),
        ),
        Format::Svg => unreachable!(),
    })
}

fn stability_text(state: &PbbsState, r: &StabilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "state {state}");
    let _ = writeln!(out, "  M    Abel-Jacobi sum");
    for row in &r.rows {
        let _ = writeln!(out, "  {:<4} {}", row.m, row.sum);
    }
    match r.m0 {
        Some(m0) => {
            let _ = writeln!(out, "  m0 = {m0}: constant for M = {}..={}", m0 + 1, m0 + r.window);
        }
        None => {
            let _ = writeln!(out, "  not yet stable: no run of {} equal sums", r.window);
        }
    }
    out
}

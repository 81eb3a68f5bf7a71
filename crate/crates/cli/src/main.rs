//! `semispray`: batch driver for metric nonlinear connection checks.
//!
//! Exit codes: 0 when every check passes, 1 on any tolerance failure or an
//! aborted integration, 2 on invalid input.

mod checks;
mod problem;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;

use semispray::flows::{
    conservation_report, integrate_sode_with, parallel_transport, FlowError, FlowErrorKind,
    IntegrationOptions, Trajectory, TransportedVector, BLOW_UP_SPEED,
};
use semispray::geometry::{unique_connection, MetricConnectionField, Tensor11};
use semispray::sampling::DomainBox;
use semispray::{Point, ScalarExpression};

use checks::{model_connection, run_check, run_family, run_hermitian, CheckOptions};
use problem::{check_tolerance, parse_point_text, InputError, Model, ProblemDefinition};
use report::Report;

#[derive(Debug, Parser)]
#[command(
    name = "semispray",
    version,
    about = "Metric nonlinear connections of semisprays and Lagrange spaces"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Override the definition's sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the definition's sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Tolerance for identity-level checks.
    #[arg(long, global = true)]
    tol_algebraic: Option<f64>,
    /// Tolerance for checks through third derivatives and inversion.
    #[arg(long, global = true)]
    tol_derived: Option<f64>,
    /// Emit only newline-delimited JSON records.
    #[arg(long, global = true)]
    json: bool,
    /// Report a failing Helmholtz check without failing the run.
    #[arg(long, global = true)]
    expect_helmholtz_fail: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify every identity for the definition at each point.
    Check { definition: PathBuf },
    /// Print the connection coefficients at each point.
    Connection {
        definition: PathBuf,
        /// Evaluate at this point, `x1,..,xn,y1,..,yn`. Repeatable.
        #[arg(long = "at", value_name = "POINT")]
        at: Vec<String>,
    },
    /// Deform the connection by a (1,1) tensor and verify metricity.
    Family {
        definition: PathBuf,
        /// Tensor file or inline rows `a,b;c,d`; entries may be expressions.
        #[arg(long, value_name = "FILE|ROWS")]
        tensor: String,
    },
    /// Integrate the semispray, optionally transporting a vertical vector.
    Integrate {
        definition: PathBuf,
        /// Initial point `x1,..,xn,y1,..,yn`.
        #[arg(long, value_name = "POINT")]
        from: String,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        steps: usize,
        /// Initial vertical vector `X1,..,Xn` to transport.
        #[arg(long, value_name = "VECTOR")]
        transport: Option<String>,
        /// Write per-sample records here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check the almost Hermitian structure induced by the connection.
    Hermitian { definition: PathBuf },
}

enum Outcome {
    Pass,
    Fail,
}

fn load(path: &Path, g: &GlobalArgs) -> Result<ProblemDefinition, InputError> {
    let mut def = ProblemDefinition::load(path)?;
    if let Some(seed) = g.seed {
        def.seed = seed;
    }
    if let Some(samples) = g.samples {
        if samples == 0 {
            return Err(InputError("--samples must be at least 1".into()));
        }
        def.samples = samples;
    }
    if let Some(t) = g.tol_algebraic {
        def.tolerances.algebraic = check_tolerance("--tol-algebraic", t)?;
    }
    if let Some(t) = g.tol_derived {
        def.tolerances.derived = check_tolerance("--tol-derived", t)?;
    }
    Ok(def)
}

fn emit(report: &Report, json: bool, out: &mut impl Write) -> io::Result<Outcome> {
    if json {
        report.write_json(out)?;
    } else {
        report.write_table(out)?;
    }
    Ok(if report.passed() {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn write_matrix(out: &mut impl Write, m: &DMatrix<f64>) -> io::Result<()> {
    for r in m.row_iter() {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:>14.6e}")).collect();
        writeln!(out, "  [{}]", cells.join(" "))?;
    }
    Ok(())
}

fn format_point(u: &Point) -> String {
    let f = |v: &[f64]| {
        v.iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("x=({}) y=({})", f(u.x()), f(u.y()))
}

fn connection(
    def: &ProblemDefinition,
    at: &[String],
    json: bool,
    out: &mut impl Write,
) -> Result<Outcome, Failure> {
    let points = if at.is_empty() {
        def.evaluation_points()
    } else {
        at.iter()
            .map(|t| parse_point_text(t, def.dim))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut outcome = Outcome::Pass;
    for (i, u) in points.iter().enumerate() {
        match model_connection(&def.model, u) {
            Ok(c) => {
                if json {
                    let rec = json!({"point": i, "x": u.x(), "y": u.y(), "connection": rows(&c.coefficients)});
                    writeln!(out, "{rec}")?;
                } else {
                    writeln!(out, "point {i}: {}", format_point(u))?;
                    write_matrix(out, &c.coefficients)?;
                }
            }
            Err(e) => {
                outcome = Outcome::Fail;
                if json {
                    writeln!(
                        out,
                        "{}",
                        json!({"point": i, "x": u.x(), "y": u.y(), "error": e.to_string()})
                    )?;
                } else {
                    writeln!(out, "point {i}: {}\n  skipped: {e}", format_point(u))?;
                }
            }
        }
    }
    Ok(outcome)
}

fn parse_tensor(arg: &str, dim: usize) -> Result<Tensor11, InputError> {
    let path = Path::new(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {arg}: {e}")))?
    } else {
        arg.to_owned()
    };
    let rows: Vec<&str> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .collect();
    let entries: Vec<&str> = rows
        .iter()
        .flat_map(|r| r.split(',').map(str::trim))
        .collect();
    if rows.len() != dim || entries.len() != dim * dim {
        return Err(InputError(format!(
            "tensor must have {dim} rows of {dim} entries, got {} entries in {} rows",
            entries.len(),
            rows.len()
        )));
    }
    let exprs = entries
        .iter()
        .map(|e| {
            ScalarExpression::parse(e, dim)
                .map_err(|err| InputError(format!("tensor entry {e:?}: {err}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let constants: Option<Vec<f64>> = exprs.iter().map(|e| e.root().as_num()).collect();
    Ok(match constants {
        Some(values) => Tensor11::Constant(DMatrix::from_row_slice(dim, dim, &values)),
        None => Tensor11::Field {
            dim,
            entries: exprs,
        },
    })
}

fn family(
    def: &ProblemDefinition,
    tensor: &str,
    json: bool,
    out: &mut impl Write,
) -> Result<Outcome, Failure> {
    let x = parse_tensor(tensor, def.dim)?;
    let (report, members) = run_family(def, &x);
    if !json {
        for (i, m) in members.iter().enumerate() {
            if let Some(c) = m {
                writeln!(out, "point {i}: {}", format_point(&c.point))?;
                write_matrix(out, &c.coefficients)?;
            }
        }
    }
    Ok(emit(&report, json, out)?)
}

struct IntegrateArgs<'a> {
    from: &'a str,
    h: f64,
    steps: usize,
    transport: Option<&'a str>,
    output: Option<&'a Path>,
}

fn integration_box(def: &ProblemDefinition) -> Option<DomainBox> {
    // base coordinates are confined to the declared box; fiber coordinates
    // only to the speed bound
    let d = def.domain.as_ref()?;
    let n = def.dim;
    let bounds = d.bounds()[..n]
        .iter()
        .copied()
        .chain(std::iter::repeat_n((-BLOW_UP_SPEED, BLOW_UP_SPEED), n))
        .collect();
    DomainBox::new(bounds).ok()
}

fn transport_along(
    def: &ProblemDefinition,
    traj: &Trajectory,
    x0: &[f64],
) -> Result<TransportedVector, semispray::Error> {
    match &def.model {
        Model::Lagrangian(l) => {
            let conn = |u: &Point| unique_connection(l, u).map(|c| c.coefficients);
            parallel_transport(&l.canonic_spray(), &conn, traj, x0)
        }
        Model::Generalized { metric, spray } => {
            let conn = MetricConnectionField { spray, metric };
            parallel_transport(spray, &conn, traj, x0)
        }
    }
}

fn integrate(
    def: &ProblemDefinition,
    args: IntegrateArgs<'_>,
    json: bool,
    out: &mut impl Write,
) -> Result<Outcome, Failure> {
    let u0 = parse_point_text(args.from, def.dim)?;
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(InputError(format!("--h must be positive, got {}", args.h)).into());
    }
    let x0 = args
        .transport
        .map(|t| {
            let v = t
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| InputError(format!("not a number: {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != def.dim {
                return Err(InputError(format!(
                    "--transport needs {} components",
                    def.dim
                )));
            }
            Ok(v)
        })
        .transpose()?;
    let options = IntegrationOptions {
        domain: integration_box(def),
        ..Default::default()
    };
    let result = def
        .model
        .with_fields(|spray, _| integrate_sode_with(spray, &u0, args.h, args.steps, &options));
    let (traj, abort) = match result {
        Ok(traj) => (traj, None),
        Err(FlowError { t, kind, partial }) => (partial, Some((t, kind))),
    };

    let energy = match &def.model {
        Model::Lagrangian(l) if !traj.is_empty() => Some(conservation_report(l, &traj)?),
        _ => None,
    };
    let transported = match &x0 {
        Some(x0) if !traj.is_empty() => Some(transport_along(def, &traj, x0)?),
        _ => None,
    };
    let norms = match &transported {
        Some(x) => Some(def.model.with_fields(|_, metric| x.norms(metric, &traj))?),
        None => None,
    };

    let mut sample_out: Box<dyn Write> = match args.output {
        Some(path) => {
            Box::new(BufWriter::new(File::create(path).map_err(|e| {
                InputError(format!("cannot create {}: {e}", path.display()))
            })?))
        }
        None if json => Box::new(&mut *out),
        None => Box::new(io::sink()),
    };
    for (k, (t, u)) in traj.samples().iter().enumerate() {
        let mut rec = json!({"event": "sample", "t": t, "x": u.x(), "y": u.y()});
        if let Some(e) = &energy {
            rec["energy"] = json!(e.samples[k].1);
        }
        if let (Some(x), Some(n)) = (&transported, &norms) {
            rec["transport"] = json!(x.samples()[k].1.as_slice());
            rec["norm"] = json!(n[k].1);
        }
        writeln!(sample_out, "{rec}")?;
    }

    let energy_drift = energy.as_ref().map(|e| e.max_drift);
    let norm_drift = norms.as_ref().map(|n| {
        let first = n.first().map_or(0.0, |s| s.1);
        n.iter().fold(0.0f64, |acc, s| acc.max((s.1 - first).abs()))
    });
    let (last_t, last_u) = traj.samples().last().cloned().unwrap_or((0.0, u0.clone()));
    let summary = match &abort {
        None => json!({
            "event": "summary", "steps": traj.len().saturating_sub(1), "t": last_t,
            "x": last_u.x(), "y": last_u.y(), "energy_drift": energy_drift, "norm_drift": norm_drift,
        }),
        Some((t, kind)) => json!({"event": "abort", "t": t, "reason": abort_reason(kind)}),
    };
    if args.output.is_some() || json {
        writeln!(sample_out, "{summary}")?;
    }
    sample_out.flush()?;
    drop(sample_out);

    if !json {
        match &abort {
            None => {
                writeln!(
                    out,
                    "integrated {} steps to t = {last_t}",
                    traj.len().saturating_sub(1)
                )?;
                writeln!(out, "final {}", format_point(&last_u))?;
                if let Some(d) = energy_drift {
                    writeln!(out, "energy drift   {d:.3e}")?;
                }
                if let Some(d) = norm_drift {
                    writeln!(out, "g(X,X) drift   {d:.3e}")?;
                }
            }
            Some((t, kind)) => {
                writeln!(out, "aborted after t = {t}: {}", abort_reason(kind))?;
            }
        }
    }
    Ok(if abort.is_some() {
        Outcome::Fail
    } else {
        Outcome::Pass
    })
}

fn abort_reason(kind: &FlowErrorKind) -> String {
    match kind {
        FlowErrorKind::Evaluation(e) => format!("evaluation error: {e}"),
        FlowErrorKind::BlowUp { speed } => {
            format!("blow-up: |y| = {speed:e} exceeds {BLOW_UP_SPEED:e}")
        }
        FlowErrorKind::LeftDomain { coordinate } => {
            format!("coordinate {coordinate} left the domain box")
        }
    }
}

enum Failure {
    Input(InputError),
    Io(io::Error),
    Eval(semispray::Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<semispray::Error> for Failure {
    fn from(e: semispray::Error) -> Self {
        Failure::Eval(e)
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let g = &cli.global;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let outcome = match &cli.command {
        Command::Check { definition } => {
            let def = load(definition, g)?;
            let options = CheckOptions {
                expect_helmholtz_fail: g.expect_helmholtz_fail,
            };
            emit(&run_check(&def, options), g.json, &mut out)?
        }
        Command::Connection { definition, at } => {
            connection(&load(definition, g)?, at, g.json, &mut out)?
        }
        Command::Family { definition, tensor } => {
            family(&load(definition, g)?, tensor, g.json, &mut out)?
        }
        Command::Integrate {
            definition,
            from,
            h,
            steps,
            transport,
            output,
        } => {
            let args = IntegrateArgs {
                from,
                h: *h,
                steps: *steps,
                transport: transport.as_deref(),
                output: output.as_deref(),
            };
            integrate(&load(definition, g)?, args, g.json, &mut out)?
        }
        Command::Hermitian { definition } => {
            emit(&run_hermitian(&load(definition, g)?), g.json, &mut out)?
        }
    };
    out.flush()?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Eval(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

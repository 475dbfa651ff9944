//! Command-line reports of measurement-class Fisher information.
//!
//! Exit codes: 0 on success, 2 on any validation failure (bad flags, bad
//! spec files, out-of-domain parameters), 3 when a singular outcome makes
//! the requested value divergent, 1 on unexpected internal failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mifi::channels::flow_trace;
use mifi::fisher::{
    classical_fi, hierarchy_report, sld, FamilyPoint, HierarchyOptions, NumericOptions,
    OptimizerOptions,
};
use mifi::json;
use mifi::matcore::BipartiteDims;
use mifi::states::{make_builtin, ParameterizedFamily};

mod output;
mod presets;

use output::{Format, SweepPoint};

#[derive(Parser)]
#[command(
    name = "mifi",
    version,
    about = "Fisher information of bipartite states under restricted measurement classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global quantum Fisher information at one parameter value
    Qfi {
        #[command(flatten)]
        family: FamilySel,
        /// Parameter value
        #[arg(long)]
        theta: f64,
        /// Also report the classical information of this measurement
        #[arg(long, value_name = "PATH")]
        povm_file: Option<PathBuf>,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        out: OutFlags,
    },
    /// All six measurement-class values with chain verdicts
    Hierarchy {
        #[command(flatten)]
        family: FamilySel,
        /// Parameter value
        #[arg(long)]
        theta: f64,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        optimizer: OptimizerFlags,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Hierarchy over an inclusive theta grid
    Sweep {
        #[command(flatten)]
        family: FamilySel,
        #[arg(long)]
        theta_min: f64,
        #[arg(long)]
        theta_max: f64,
        /// Number of grid points, both endpoints included
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        optimizer: OptimizerFlags,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Preset scenario with pinned expectations
    Example {
        /// One of: dist-inaccessible, dist-cc, dist-cossin, transfer-1,
        /// transfer-2, transfer-3
        name: String,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        optimizer: OptimizerFlags,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Hierarchy traced through a channel chain
    Flow {
        #[command(flatten)]
        family: FamilySel,
        /// Parameter value
        #[arg(long)]
        theta: f64,
        /// JSON array of channel specs; omitted means an empty chain
        #[arg(long, value_name = "PATH")]
        channels_file: Option<PathBuf>,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        optimizer: OptimizerFlags,
        #[command(flatten)]
        out: OutFlags,
    },
}

#[derive(Args)]
struct FamilySel {
    /// Builtin family name (bell_phase, cc_bernoulli, cossin,
    /// plus_phase_times_zero, bernoulli_qubit)
    #[arg(long, value_name = "NAME", conflicts_with = "family_file")]
    family: Option<String>,
    /// JSON family description
    #[arg(long, value_name = "PATH")]
    family_file: Option<PathBuf>,
    /// First party dimension, when the family does not carry a split
    #[arg(long, value_name = "DIM", requires = "dim_b")]
    dim_a: Option<usize>,
    /// Second party dimension
    #[arg(long, value_name = "DIM", requires = "dim_a")]
    dim_b: Option<usize>,
}

#[derive(Args)]
struct NumericFlags {
    /// Central-difference step for families without analytic derivatives
    #[arg(long, default_value_t = 1e-5)]
    fd_step: f64,
    /// Spectral floor below which eigenvalues count as zero
    #[arg(long, default_value_t = 1e-10)]
    sld_tol: f64,
    /// Outcome probabilities below this are treated as absent
    #[arg(long, default_value_t = 1e-12)]
    p_tol: f64,
}

#[derive(Args)]
struct OptimizerFlags {
    /// Multi-start count for the optimized classes
    #[arg(long, default_value_t = 16)]
    starts: usize,
    /// Random-start seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Function-evaluation budget per start
    #[arg(long, default_value_t = 2000)]
    max_evals: usize,
}

#[derive(Args)]
struct OutFlags {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Lib(mifi::Error),
    Internal(String),
}

impl From<mifi::Error> for Failure {
    fn from(e: mifi::Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(f: &Failure) -> i32 {
    match f {
        Failure::Usage(_) => 2,
        Failure::Internal(_) => 1,
        Failure::Lib(e) => match e {
            mifi::Error::SingularOutcome { .. } => 3,
            mifi::Error::InvalidSpec(_)
            | mifi::Error::UnknownName(_)
            | mifi::Error::ThetaOutOfDomain { .. }
            | mifi::Error::DimMismatch(_)
            | mifi::Error::InvalidDensity(_)
            | mifi::Error::InvalidPovm(_)
            | mifi::Error::NotTracePreserving(_)
            | mifi::Error::NotUnitaryBlock { .. }
            | mifi::Error::MissingConditional { .. }
            | mifi::Error::NotHermitian { .. }
            | mifi::Error::NotTraceless(_)
            | mifi::Error::NotNormalized(_) => 2,
            _ => 1,
        },
    }
}

fn message(f: &Failure) -> String {
    match f {
        Failure::Usage(m) | Failure::Internal(m) => m.clone(),
        Failure::Lib(e) => e.to_string(),
    }
}

fn read_json(path: &Path, what: &str) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{what} {} is not valid JSON: {e}", path.display())))
}

fn load_family(sel: &FamilySel) -> Result<ParameterizedFamily, Failure> {
    match (&sel.family, &sel.family_file) {
        (Some(name), None) => Ok(make_builtin(name)?),
        (None, Some(path)) => Ok(json::parse_family(&read_json(path, "family file")?)?),
        _ => Err(Failure::Usage(
            "pass exactly one of --family NAME or --family-file PATH".into(),
        )),
    }
}

fn resolve_dims(f: &ParameterizedFamily, sel: &FamilySel) -> Result<BipartiteDims, Failure> {
    let dims = match (sel.dim_a, sel.dim_b) {
        (Some(a), Some(b)) => Some(BipartiteDims::new(a, b)?),
        _ => None,
    };
    let dims = dims.or_else(|| f.dims()).ok_or_else(|| {
        Failure::Usage("the family carries no bipartite split; pass --dim-a and --dim-b".into())
    })?;
    if dims.total() != f.dim() {
        return Err(Failure::Usage(format!(
            "split ({}, {}) does not multiply to the family dimension {}",
            dims.dim_a,
            dims.dim_b,
            f.dim()
        )));
    }
    Ok(dims)
}

fn numeric_options(n: &NumericFlags) -> Result<NumericOptions, Failure> {
    for (name, v) in [
        ("--fd-step", n.fd_step),
        ("--sld-tol", n.sld_tol),
        ("--p-tol", n.p_tol),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Failure::Usage(format!("{name} must be a positive number")));
        }
    }
    Ok(NumericOptions {
        fd_step: n.fd_step,
        sld_tol: n.sld_tol,
        p_tol: n.p_tol,
    })
}

fn hierarchy_options(n: &NumericFlags, o: &OptimizerFlags) -> Result<HierarchyOptions, Failure> {
    if o.starts == 0 {
        return Err(Failure::Usage("--starts must be at least 1".into()));
    }
    if o.max_evals == 0 {
        return Err(Failure::Usage("--max-evals must be at least 1".into()));
    }
    Ok(HierarchyOptions {
        numeric: numeric_options(n)?,
        optimizer: OptimizerOptions {
            starts: o.starts,
            seed: o.seed,
            max_evals: o.max_evals,
            ..Default::default()
        },
    })
}

fn emit(out: &OutFlags, content: String) -> Result<(), Failure> {
    output::self_check(out.format, &content).map_err(Failure::Internal)?;
    match &out.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_qfi(
    family: &FamilySel,
    theta: f64,
    povm_file: Option<&Path>,
    numeric: &NumericFlags,
    out: &OutFlags,
) -> Result<(), Failure> {
    let f = load_family(family)?;
    let numeric = numeric_options(numeric)?;
    let point = FamilyPoint::new(&f, theta, &numeric)?;
    let s = sld(&point.rho, &point.drho, numeric.sld_tol)?;
    let classical = match povm_file {
        Some(path) => {
            let m = json::parse_povm(&read_json(path, "measurement file")?)?;
            Some(classical_fi(&point.rho, &point.drho, &m, numeric.p_tol)?)
        }
        None => None,
    };
    let content = match out.format {
        Format::Json => output::qfi_json(theta, s.qfi, s.support_rank, classical),
        Format::Csv => output::qfi_csv(theta, s.qfi, s.support_rank, classical),
    };
    emit(out, content)
}

fn cmd_hierarchy(
    family: &FamilySel,
    theta: f64,
    numeric: &NumericFlags,
    optimizer: &OptimizerFlags,
    out: &OutFlags,
) -> Result<(), Failure> {
    let f = load_family(family)?;
    let dims = resolve_dims(&f, family)?;
    let opts = hierarchy_options(numeric, optimizer)?;
    let report = hierarchy_report(&f, theta, dims, &opts)?;
    let content = match out.format {
        Format::Json => output::hierarchy_json(&report, &opts.optimizer),
        Format::Csv => output::hierarchy_csv(&report),
    };
    emit(out, content)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    family: &FamilySel,
    theta_min: f64,
    theta_max: f64,
    steps: usize,
    numeric: &NumericFlags,
    optimizer: &OptimizerFlags,
    out: &OutFlags,
) -> Result<(), Failure> {
    if steps < 2 {
        return Err(Failure::Usage(
            "--steps must be at least 2 (both endpoints are included)".into(),
        ));
    }
    if !(theta_min < theta_max) || !theta_min.is_finite() || !theta_max.is_finite() {
        return Err(Failure::Usage("--theta-min must be below --theta-max".into()));
    }
    let f = load_family(family)?;
    let dims = resolve_dims(&f, family)?;
    let opts = hierarchy_options(numeric, optimizer)?;
    let mut points = Vec::with_capacity(steps);
    for i in 0..steps {
        let theta = if i + 1 == steps {
            theta_max
        } else {
            theta_min + (theta_max - theta_min) * i as f64 / (steps - 1) as f64
        };
        match hierarchy_report(&f, theta, dims, &opts) {
            Ok(r) => points.push(SweepPoint::Ok(r)),
            Err(e @ mifi::Error::SingularOutcome { .. }) => {
                eprintln!("warning: theta {theta}: {e}; row marked singular_outcome");
                points.push(SweepPoint::Singular { theta });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let content = match out.format {
        Format::Json => output::sweep_json(&points),
        Format::Csv => output::sweep_csv(&points),
    };
    emit(out, content)
}

fn cmd_example(
    name: &str,
    numeric: &NumericFlags,
    optimizer: &OptimizerFlags,
    out: &OutFlags,
) -> Result<(), Failure> {
    if out.format == Format::Csv {
        return Err(Failure::Usage(
            "example reports are JSON only; drop --format csv".into(),
        ));
    }
    let opts = hierarchy_options(numeric, optimizer)?;
    let ex = presets::run_example(name, &opts)?;
    emit(out, output::example_json(&ex))
}

fn cmd_flow(
    family: &FamilySel,
    theta: f64,
    channels_file: Option<&Path>,
    numeric: &NumericFlags,
    optimizer: &OptimizerFlags,
    out: &OutFlags,
) -> Result<(), Failure> {
    if out.format == Format::Csv {
        return Err(Failure::Usage(
            "flow reports are JSON only; drop --format csv".into(),
        ));
    }
    let f = load_family(family)?;
    let dims = resolve_dims(&f, family)?;
    let opts = hierarchy_options(numeric, optimizer)?;
    let channels = match channels_file {
        Some(path) => json::parse_channels(&read_json(path, "channel file")?, dims)?,
        None => Vec::new(),
    };
    let trace = flow_trace(&f, theta, dims, &channels, &opts)?;
    emit(out, output::flow_json(theta, &trace))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Qfi {
            family,
            theta,
            povm_file,
            numeric,
            out,
        } => cmd_qfi(family, *theta, povm_file.as_deref(), numeric, out),
        Command::Hierarchy {
            family,
            theta,
            numeric,
            optimizer,
            out,
        } => cmd_hierarchy(family, *theta, numeric, optimizer, out),
        Command::Sweep {
            family,
            theta_min,
            theta_max,
            steps,
            numeric,
            optimizer,
            out,
        } => cmd_sweep(family, *theta_min, *theta_max, *steps, numeric, optimizer, out),
        Command::Example {
            name,
            numeric,
            optimizer,
            out,
        } => cmd_example(name, numeric, optimizer, out),
        Command::Flow {
            family,
            theta,
            channels_file,
            numeric,
            optimizer,
            out,
        } => cmd_flow(family, *theta, channels_file.as_deref(), numeric, optimizer, out),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("error: {}", message(&f));
        std::process::exit(exit_code(&f));
    }
}

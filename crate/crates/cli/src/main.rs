use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use morse_nf::nf_classical::{classical_normal_form, NfError, NfOptions};
use morse_nf::nf_semiclassical::{semiclassical_normal_form, SemiclassicalOptions};
use morse_nf::report::{
    classical_report, neumann_report, semiclassical_report, verify_report, ClassifyReport, Header,
    ReportError, SystemJson,
};
use morse_nf::symplectic::{
    symplectic_residual, williamson_classify, FrameField, SymplecticError, WilliamsonOptions,
};
use morse_nf::systems::{neumann_local_system, quadratic_forms, NeumannSpec, SystemsError};
use morse_nf::{CoeffKind, Rational};

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  input could not be read or parsed
  2  a precondition failed (not a Cartan subalgebra, linear terms, non-commuting symbols, ...)
  3  verification failed (the report carries the first failing degree and hbar order)";

#[derive(Parser)]
#[command(
    name = "morse-nf",
    version,
    about = "Normal forms of integrable systems near a nondegenerate critical point"
)]
#[command(after_help = EXIT_CODES)]
struct Cli {
    /// Coefficient field; defaults to the input's literals (rational unless a
    /// float appears), and to float for `classify`.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Seed of the generic combination used by the Williamson step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Williamson type and standardizing frame of the quadratic parts.
    Classify { input: PathBuf },
    /// Birkhoff-type normal form of the classical symbols.
    Classical {
        input: PathBuf,
        /// Phase-degree cut N.
        #[arg(long)]
        deg: u32,
    },
    /// Semiclassical normal form `M(hbar) (q - alpha(hbar))`.
    Semiclassical {
        input: PathBuf,
        /// Phase-degree cut N.
        #[arg(long)]
        deg: u32,
        /// hbar-order cut.
        #[arg(long = "h-order", default_value_t = 1)]
        h_order: u32,
        /// Add a seeded commutant element to every level generator.
        #[arg(long)]
        gauge_seed: Option<u64>,
    },
    /// Replays a classical or semiclassical report against its input.
    Verify { input: PathBuf, report: PathBuf },
    /// Local model of the Neumann system at a fixed point.
    Neumann {
        /// JSON spec `{"eigenvalues": [..], "fixed_point": i, "deg_cut": d}`.
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        eigenvalues: Vec<f64>,
        #[arg(long)]
        fixed_point: Option<usize>,
        #[arg(long)]
        deg: Option<u32>,
    },
}

enum Failure {
    Parse(String),
    Precondition(String),
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 1,
            Failure::Precondition(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Precondition(m) | Failure::Verification(m) => m,
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Nf(e) => e.into(),
            other => Failure::Parse(other.to_string()),
        }
    }
}

impl From<NfError> for Failure {
    fn from(e: NfError) -> Self {
        match e {
            NfError::Poly(p) => Failure::Parse(p.to_string()),
            NfError::Symplectic(SymplecticError::IrrationalFrame(m)) => Failure::Precondition(
                format!("no exact frame over the rationals ({m}); rerun with --mode float"),
            ),
            other => Failure::Precondition(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, value: &impl Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Parse(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn kind(sys: &SystemJson, mode: Option<Mode>) -> Result<CoeffKind, Failure> {
    match mode {
        Some(Mode::Rational) => Ok(CoeffKind::Rational),
        Some(Mode::Float) => Ok(CoeffKind::Float),
        None => Ok(sys.kind()?),
    }
}

fn certificate_outcome(ok: bool, at: Option<(u32, u32)>, reason: Option<&str>) -> Outcome {
    if ok {
        return Ok(());
    }
    let (d, h) = at.unwrap_or_default();
    Err(Failure::Verification(format!(
        "verification failed at degree {d}, hbar^{h}: {}",
        reason.unwrap_or("unknown")
    )))
}

fn classify<R: FrameField>(sys: &SystemJson, cli: &Cli, mode: CoeffKind) -> Outcome {
    let sys = sys.system::<R>()?;
    let opts = WilliamsonOptions {
        seed: cli.seed,
        ..WilliamsonOptions::default()
    };
    let basis = williamson_classify(&quadratic_forms(&sys), opts).map_err(|e| match e {
        SymplecticError::SizeMismatch { .. } => Failure::Parse(e.to_string()),
        other => Failure::Precondition(other.to_string()),
    })?;
    let report = ClassifyReport {
        header: Header::new("classify", mode, sys.n, sys.cuts()),
        cartan_type: basis.cartan_type.clone(),
        s: basis.s.to_json(),
        c: basis.c.to_json(),
        frame_residual: symplectic_residual(&basis.s),
        cartan: basis.report.clone(),
    };
    emit(cli.out.as_deref(), &report)
}

fn classical<R: FrameField>(sys: &SystemJson, cli: &Cli, deg: u32) -> Outcome {
    let sys = sys.system::<R>()?;
    let opts = NfOptions {
        williamson: WilliamsonOptions {
            seed: cli.seed,
            ..WilliamsonOptions::default()
        },
        lambda_base: None,
    };
    let nf = classical_normal_form(&sys, deg, opts)?;
    emit(cli.out.as_deref(), &classical_report(&nf))?;
    let c = &nf.certificate;
    certificate_outcome(c.ok, c.first_failure, c.reason.as_deref())
}

fn semiclassical<R: FrameField>(
    sys: &SystemJson,
    cli: &Cli,
    deg: u32,
    h: u32,
    gauge_seed: Option<u64>,
) -> Outcome {
    let sys = sys.system::<R>()?;
    let opts = SemiclassicalOptions {
        nf: NfOptions {
            williamson: WilliamsonOptions {
                seed: cli.seed,
                ..WilliamsonOptions::default()
            },
            lambda_base: None,
        },
        kernel_gauge_seed: gauge_seed,
    };
    let nf = semiclassical_normal_form(&sys, deg, h, opts)?;
    emit(cli.out.as_deref(), &semiclassical_report(&nf))?;
    let c = &nf.certificate;
    certificate_outcome(c.ok, c.first_failure, c.reason.as_deref())
}

fn verify<R: FrameField>(sys: &SystemJson, report: &Value) -> Outcome {
    let sys = sys.system::<R>()?;
    let c = verify_report(&sys, report)?;
    certificate_outcome(c.ok, c.first_failure, c.reason.as_deref())?;
    eprintln!("verified up to degree {}, hbar^{}", c.deg, c.h);
    Ok(())
}

fn neumann(
    cli: &Cli,
    input: Option<&Path>,
    eigenvalues: &[f64],
    fixed_point: Option<usize>,
    deg: Option<u32>,
) -> Outcome {
    let mut spec = match input {
        Some(p) => read_json::<NeumannSpec>(p)?,
        None => NeumannSpec {
            eigenvalues: eigenvalues.to_vec(),
            chart_center: fixed_point.ok_or_else(|| {
                Failure::Parse("--fixed-point is required without an input file".into())
            })?,
            deg_cut: 4,
        },
    };
    if let Some(d) = deg {
        spec.deg_cut = d;
    }
    let chart = neumann_local_system(&spec).map_err(|e| match e {
        SystemsError::Symplectic(s) => Failure::Precondition(s.to_string()),
        other => Failure::Parse(other.to_string()),
    })?;
    let report = neumann_report(&chart);
    emit(cli.out.as_deref(), &report)?;
    if !report.matches {
        return Err(Failure::Verification(format!(
            "type {:?} differs from the expected {:?}",
            report.cartan_type.signature(),
            report.expected.signature()
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Classify { input } => {
            let sys: SystemJson = read_json(input)?;
            // the eigen-decomposition is numerical unless exactness is asked for
            match cli.mode {
                Some(Mode::Rational) => classify::<Rational>(&sys, cli, CoeffKind::Rational),
                _ => classify::<f64>(&sys, cli, CoeffKind::Float),
            }
        }
        Command::Classical { input, deg } => {
            let sys: SystemJson = read_json(input)?;
            match kind(&sys, cli.mode)? {
                CoeffKind::Float => classical::<f64>(&sys, cli, *deg),
                _ => classical::<Rational>(&sys, cli, *deg),
            }
        }
        Command::Semiclassical {
            input,
            deg,
            h_order,
            gauge_seed,
        } => {
            let sys: SystemJson = read_json(input)?;
            match kind(&sys, cli.mode)? {
                CoeffKind::Float => semiclassical::<f64>(&sys, cli, *deg, *h_order, *gauge_seed),
                _ => semiclassical::<Rational>(&sys, cli, *deg, *h_order, *gauge_seed),
            }
        }
        Command::Verify { input, report } => {
            let sys: SystemJson = read_json(input)?;
            let report: Value = read_json(report)?;
            let mode = report
                .pointer("/header/mode")
                .cloned()
                .and_then(|m| serde_json::from_value::<CoeffKind>(m).ok())
                .ok_or_else(|| Failure::Parse("report has no header.mode".into()))?;
            match mode {
                CoeffKind::Float => verify::<f64>(&sys, &report),
                _ => verify::<Rational>(&sys, &report),
            }
        }
        Command::Neumann {
            input,
            eigenvalues,
            fixed_point,
            deg,
        } => neumann(cli, input.as_deref(), eigenvalues, *fixed_point, *deg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

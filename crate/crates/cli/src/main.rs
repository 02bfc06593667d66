use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use sigma3::abel_jacobi::abel_jacobi;
use sigma3::curve::CurveFile;
use sigma3::exact::LaurentPoly;
use sigma3::identities::{kiepert_determinant, psi_numeric, sample_point, trial_rng, verify_all, KiepertMatrix};
use sigma3::periods::{compute_periods, lattice_reduce, load_or_compute, riemann_diagnostics, CVector3, PeriodData};
use sigma3::sigma::{MultiIndex, SigmaContext};
use sigma3::{Config, Curve, CurveFunction, Error};

#[derive(Parser)]
#[command(name = "sigma3", version, about = "Genus-3 hyperelliptic sigma functions and their determinant identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CurveArgs {
    /// Curve file `{"lambda": [[re, im] x 7]}` for lambda_0..lambda_6; defaults to f = x^7 + 1.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Target accuracy of the period integrals.
    #[arg(long, default_value_t = 1e-10)]
    quad_tol: f64,
    /// Directory for cached periods (overrides SIGMA3_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the period matrices and write them as JSON.
    Periods {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(short, long, default_value = "periods.json")]
        output: PathBuf,
    },
    /// Evaluate sigma, wp or the Abel–Jacobi map.
    Eval {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(value_enum)]
        kind: EvalKind,
        /// `u1re,u1im,u2re,u2im,u3re,u3im` for sigma and wp; `x_re,x_im,sheet` for aj.
        #[arg(long = "at", required = true, allow_hyphen_values = true)]
        at: Vec<String>,
        /// Derivative indices for sigma (e.g. `1,3`) or wp indices (e.g. `2,3` or `3,3,3`).
        #[arg(long, default_value = "")]
        indices: String,
    },
    /// Run every check and write a JSON report; exit status 1 if any section fails.
    Verify {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Residual bound for all identity checks (default 1e-6, and 1e-5 for the psi_n comparisons).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "report.json")]
        report: PathBuf,
    },
    /// Division values psi_n, symbolically or at random curve points.
    Psi {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        n: usize,
        /// Derivation `d/du_j` used by the determinant.
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long, conflicts_with = "numeric")]
        symbolic: bool,
        #[arg(long)]
        numeric: bool,
        /// Number of random points for --numeric.
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Sigma,
    Wp,
    Aj,
}

/// Failure with its exit status: 1 failing checks, 2 invalid input, 3 numerical failure.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::QuadratureNonConvergence { .. }
            | Error::IllConditionedOmega { .. }
            | Error::InvalidPeriods(_)
            | Error::DegenerateGeometry(_)
            | Error::RootFindFailure { .. }
            | Error::DegenerateNormalization(_) => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Periods { curve, output } => cmd_periods(&curve, &output),
        Command::Eval { curve, kind, at, indices } => cmd_eval(&curve, kind, &at, &indices),
        Command::Verify { curve, trials, seed, tol, report } => cmd_verify(&curve, trials, seed, tol, &report),
        Command::Psi { curve, n, j, symbolic, numeric, points, seed } => {
            cmd_psi(&curve, n, j, symbolic || !numeric, points, seed)
        }
    }
}

fn config(args: &CurveArgs) -> CliResult<Config> {
    let cfg = Config { quad_tol: args.quad_tol, ..Config::default() };
    cfg.validate()?;
    Ok(cfg)
}

fn load_curve(args: &CurveArgs, cfg: &Config) -> CliResult<Curve> {
    let Some(path) = &args.curve else { return Ok(Curve::x7_plus_1()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let file: CurveFile =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: malformed curve file: {e}", path.display())))?;
    Ok(file.to_curve(cfg)?)
}

fn context(args: &CurveArgs, cfg: &Config) -> CliResult<(Curve, SigmaContext)> {
    let curve = load_curve(args, cfg)?;
    let pd = load_or_compute(&curve, cfg, args.cache_dir.as_deref())?;
    let ctx = SigmaContext::new(&curve, &pd, cfg)?;
    Ok((curve, ctx))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_periods(args: &CurveArgs, output: &Path) -> CliResult<u8> {
    let cfg = config(args)?;
    let curve = load_curve(args, &cfg)?;
    let pd: PeriodData = compute_periods(&curve, &cfg)?;
    let (defect, min_eig) = riemann_diagnostics(&pd.z);
    println!("Z symmetry residual: {defect:.3e}");
    println!("min eigenvalue of Im Z: {min_eig:.6}");
    write_json(output, &pd)?;
    Ok(0)
}

fn parse_floats(s: &str, count: usize) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::input(format!("{s:?}: {e}")))?;
    if v.len() != count {
        return Err(Failure::input(format!("{s:?}: expected {count} comma-separated numbers")));
    }
    Ok(v)
}

fn parse_indices(s: &str) -> CliResult<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|e| Failure::input(format!("{s:?}: {e}")))).collect()
}

fn cmd_eval(args: &CurveArgs, kind: EvalKind, at: &[String], indices: &str) -> CliResult<u8> {
    let cfg = config(args)?;
    let (curve, ctx) = context(args, &cfg)?;
    let idx = parse_indices(indices)?;
    let mut out = Vec::new();
    for a in at {
        out.push(match kind {
            EvalKind::Aj => {
                let v = parse_floats(a, 3)?;
                let sheet = if v[2] == 1.0 {
                    1
                } else if v[2] == -1.0 {
                    -1
                } else {
                    return Err(Failure::input(format!("{a:?}: sheet must be 1 or -1")));
                };
                let p = curve.point_over(Complex64::new(v[0], v[1]), sheet);
                let u = abel_jacobi(&p, &curve, &ctx.periods)?;
                let r = lattice_reduce(&u.u, &ctx.periods);
                json!({"x": p.x, "y": p.y, "u": u.u.as_slice(), "u_reduced": r.u.as_slice(), "a": r.a, "b": r.b})
            }
            EvalKind::Sigma | EvalKind::Wp => {
                let v = parse_floats(a, 6)?;
                let u = CVector3::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]));
                let value = match kind {
                    EvalKind::Sigma => ctx.sigma(&u, MultiIndex::from_indices(&idx)?),
                    _ => ctx.wp(&u, &idx)?,
                };
                json!({"u": u.as_slice(), "indices": idx, "value": value})
            }
        });
    }
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Failure::input(e.to_string()))?);
    Ok(0)
}

fn cmd_verify(args: &CurveArgs, trials: usize, seed: u64, tol: Option<f64>, report: &Path) -> CliResult<u8> {
    let mut cfg = Config { trials, seed, ..config(args)? };
    if let Some(tol) = tol {
        cfg.identity_tol = tol;
        cfg.psi_tol = tol;
    }
    cfg.validate()?;
    let (_, ctx) = context(args, &cfg)?;
    let rep = verify_all(&ctx, &cfg);
    for s in &rep.sections {
        println!(
            "{} {:<40} trials {:>3}  max {:.2e}  tol {:.0e}{}",
            if s.pass { "PASS" } else { "FAIL" },
            s.name,
            s.trials,
            s.max_rel_residual,
            s.tolerance,
            s.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
        );
    }
    println!("runtime {:.1}s", rep.runtime_sec);
    write_json(report, &rep)?;
    Ok(if rep.all_pass { 0 } else { 1 })
}

fn cmd_psi(args: &CurveArgs, n: usize, j: usize, symbolic: bool, points: usize, seed: u64) -> CliResult<u8> {
    let cfg = config(args)?;
    if symbolic {
        if n <= 3 {
            return Err(Failure::input(format!("the determinant formula for psi_n requires n > 3, got {n}")));
        }
        let curve = load_curve(args, &cfg)?;
        let m = KiepertMatrix::new(n, j, &curve)?;
        let power = ((j - 1) * n * (n - 1) / 2) as i64;
        let scale = CurveFunction::new(LaurentPoly::x_pow(power), LaurentPoly::zero());
        println!("{}", m.symbolic_determinant(&curve).mul(&scale, &curve));
        return Ok(0);
    }
    if n < 2 {
        return Err(Failure::input(format!("psi_n is defined here for n >= 2, got {n}")));
    }
    if n == 2 {
        eprintln!("warning: sigma(2u) vanishes on the image of the curve, so psi_2 is zero there up to rounding");
    }
    let (_, ctx) = context(args, &cfg)?;
    let mut rows = Vec::new();
    for trial in 0..points {
        let s = sample_point(&ctx, &mut trial_rng(seed, "psi", trial))?;
        let quotient = psi_numeric(&s.u, n, &ctx)?;
        let mut row = json!({"x": s.p.x, "y": s.p.y, "u": s.u.u.as_slice(), "psi_sigma_quotient": quotient});
        if n >= 4 {
            row["psi_determinant"] = json!(kiepert_determinant(&s.u, n, j, &ctx)?);
        }
        rows.push(row);
    }
    println!("{}", serde_json::to_string_pretty(&rows).map_err(|e| Failure::input(e.to_string()))?);
    Ok(0)
}

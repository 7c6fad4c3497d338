mod expr;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use qchar::rat::{parse_rat, Rat};
use qchar::QError;
use thiserror::Error;

use output::Format;

const GRAMMAR: &str = "\
Expression grammar:
  expr   := ['-'] term (('+' | '-') term)*
  term   := power (('*' | '/') power)*
  power  := atom ['^' int]
  atom   := rational | q | q^int | q^(rational) | (expr) | call
  call   := eta(m)                      η(mτ)
          | L(c,h)                      Virasoro minimal character, e.g. L(7/10,3/80)
          | sf(slN; Λ; λ)               string function, weights like [2,0,0]
          | b(slN; Λ; λ)                coset character η^{N-1}·sf
          | ucpf(name)                  G3, G4, G4-lattice or a basis family
          | fock(family)                Fock-space basis count
          | lattice(AN[*s]; shift)      θ/η^rank of s·A_N, shift in lattice coordinates
          | orbifold(AN[*s]; ±±; shift) Z2 orbifold sector
          | coeff(slN; NS+|NS-|R)       free-fermion z-coefficient extraction
          | fermion(NS+|NS-|R; copies)  free-fermion traces
Division is allowed only by eta products, q-powers and numbers.
Families: sl3-untwisted sl3-twisted sl4-untwisted sl4-sixth sl4-eighth";

#[derive(Parser, Debug)]
#[command(name = "qchar", version, about = "Exact q-series, string functions and character identity checks")]
struct Cli {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for corpus evaluation (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expand an expression as a q-series
    #[command(after_help = GRAMMAR)]
    Expand {
        expr: String,
        #[command(flatten)]
        order: Order,
    },
    /// Check identities from a corpus file or the built-in corpus
    Verify(VerifyArgs),
    /// Pentagon/hexagon residuals and F/R solving over ζ₈
    Fusion(FusionArgs),
    /// Fermionic sums, Fock counts and dilogarithm central charges
    Ucpf(UcpfArgs),
    /// Numeric S-transformation checks
    Modular(ModularArgs),
}

#[derive(Args, Debug)]
struct Order {
    /// Truncation order T (coefficients strictly below q^T)
    #[arg(long, default_value = "20", value_parser = positive_rat)]
    order: Rat,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Corpus file (JSON list of cases)
    corpus: Option<PathBuf>,
    /// Use the built-in corpus
    #[arg(long, conflicts_with = "corpus")]
    builtin: bool,
    /// Tag or id prefix; repeatable. "negative-controls" selects the perturbed copies
    #[arg(long)]
    filter: Vec<String>,
    /// Override every case's order
    #[arg(long, value_parser = positive_rat)]
    order: Option<Rat>,
    /// Write the selected cases to a file instead of checking them
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FusionArgs {
    /// Built-in ring: sl3, sl4 or z2
    #[arg(long, conflicts_with = "ring")]
    builtin: Option<String>,
    /// Ring file in the plain-text layout
    #[arg(long)]
    ring: Option<PathBuf>,
    /// Enumerate all F/R solutions
    #[arg(long, conflicts_with = "residual")]
    solve: bool,
    /// Residuals of a named assignment: reference or trivial
    #[arg(long)]
    residual: Option<String>,
    /// Maximum number of solutions to enumerate
    #[arg(long, default_value_t = 4096)]
    cap: usize,
}

#[derive(Args, Debug)]
struct UcpfArgs {
    /// Built-in basis family
    #[arg(long, conflicts_with_all = ["matrix", "config"])]
    family: Option<String>,
    /// Named G matrix with a = 0
    #[arg(long, conflicts_with = "config")]
    matrix: Option<String>,
    /// JSON config {"G": [[..]], "a": [..], "sign": [..], "prefactor": "num/den"}
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the Fock-space count of the family instead of the sum
    #[arg(long, requires = "family")]
    fock: bool,
    /// Print the dilogarithm central charge of the matrix instead of the sum
    #[arg(long)]
    dilog: bool,
    #[command(flatten)]
    order: Order,
}

#[derive(Args, Debug)]
struct ModularArgs {
    /// Points in the upper half plane, e.g. 0.9i or 0.1+1.2i
    #[arg(long, value_delimiter = ',', value_parser = parse_tau, default_values = ["0.9i", "1.3i"])]
    tau: Vec<Complex64>,
    /// Truncation order of the expansions
    #[arg(long, default_value = "60", value_parser = positive_rat)]
    order: Rat,
    /// Relative error tolerance
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] QError),
    #[error(transparent)]
    Expr(#[from] expr::ParseError),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Expr(_) | CliError::Usage(_) => 2,
            CliError::Lib(e) => match e {
                QError::Parse(_)
                | QError::InvalidArgument(_)
                | QError::NotInCoset(_)
                | QError::NonDominant(_)
                | QError::RankMismatch(..) => 2,
                QError::Io(_) => 3,
                QError::Cap(_) => 4,
                _ => 1,
            },
        }
    }
}

fn positive_rat(s: &str) -> Result<Rat, String> {
    let t = parse_rat(s).map_err(|e| e.to_string())?;
    if t <= Rat::from_integer(0.into()) {
        return Err("order must be positive".into());
    }
    Ok(t)
}

fn parse_tau(s: &str) -> Result<Complex64, String> {
    let t = s.trim().replace(' ', "");
    let bad = || format!("bad τ '{s}' (expected like 0.9i or 0.1+1.2i)");
    let body = t.strip_suffix('i').ok_or_else(bad)?;
    // split at the last sign that is not a leading one or part of an exponent
    let cut = body
        .char_indices()
        .rev()
        .find(|&(i, c)| (c == '+' || c == '-') && i > 0 && !body[..i].ends_with(['e', 'E']))
        .map(|(i, _)| i);
    let (re, im) = match cut {
        Some(i) => (body[..i].parse::<f64>().map_err(|_| bad())?, body[i..].parse::<f64>().map_err(|_| bad())?),
        None => (0.0, if body.is_empty() { 1.0 } else { body.parse::<f64>().map_err(|_| bad())? }),
    };
    if im <= 0.0 {
        return Err(format!("τ = {s} is not in the upper half plane"));
    }
    Ok(Complex64::new(re, im))
}

/// Outcome of a command: printed output and whether every check passed.
struct Outcome {
    text: String,
    pass: bool,
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let fmt = cli.format;
    match cli.command {
        Command::Expand { expr, order } => {
            let node = expr::parse_expr(&expr)?;
            let s = qchar::verify::evaluate(&node, &order.order)?;
            Ok(Outcome { text: output::series(&s, fmt), pass: true })
        }
        Command::Verify(a) => verify(a, fmt),
        Command::Fusion(a) => fusion(a, fmt),
        Command::Ucpf(a) => ucpf(a, fmt),
        Command::Modular(a) => modular(a, fmt),
    }
}

fn verify(a: VerifyArgs, fmt: Format) -> Result<Outcome, CliError> {
    use qchar::verify::{builtin_selection, load_corpus, run_corpus, save_corpus};
    let cases = match (&a.corpus, a.builtin) {
        (Some(p), false) => load_corpus(p)?,
        (None, true) => builtin_selection(&a.filter),
        _ => return Err(CliError::Usage("give a corpus file or --builtin".into())),
    };
    if let Some(path) = &a.export {
        let chosen: Vec<_> = qchar::verify::select(&cases, &a.filter).into_iter().cloned().collect();
        save_corpus(&chosen, path)?;
        return Ok(Outcome { text: format!("wrote {} cases to {}\n", chosen.len(), path.display()), pass: true });
    }
    let summary = run_corpus(&cases, &a.filter, a.order.as_ref());
    if summary.reports.is_empty() {
        return Err(CliError::Usage("no cases match the filters".into()));
    }
    Ok(Outcome { pass: summary.all_pass(), text: output::corpus(&summary, fmt) })
}

fn fusion(a: FusionArgs, fmt: Format) -> Result<Outcome, CliError> {
    use qchar::fusion::*;
    let (ring, name) = match (&a.builtin, &a.ring) {
        (Some(n), None) => (builtin_ring(n)?, n.clone()),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| QError::Io(format!("{}: {e}", p.display())))?;
            (FusionRing::parse(&text)?, p.display().to_string())
        }
        _ => return Err(CliError::Usage("give --builtin NAME or --ring FILE".into())),
    };
    // equations are posed on the sub-ring closed under the tabulated rows
    let ring = ring.untwisted();
    if a.solve {
        let sols = solve_fr(&ring, a.cap)?;
        let reference = (name == "sl3").then(sl3_reference_solution);
        let contains = reference.as_ref().map(|r| sols.contains(r));
        return Ok(Outcome { text: output::solutions(&ring, &sols, contains, fmt), pass: contains != Some(false) });
    }
    let which = a.residual.as_deref().ok_or_else(|| CliError::Usage("give --solve or --residual NAME".into()))?;
    let sol = match which {
        "reference" if name == "sl3" => sl3_reference_solution(),
        "reference" => fr_solution_space(&ring)?.representative(),
        "trivial" => FRSolution::default(),
        other => return Err(CliError::Usage(format!("unknown assignment '{other}' (reference, trivial)"))),
    };
    let rows = vec![
        ("pentagon", pentagon_residual(&ring, &sol)),
        ("hexagon", hexagon_residual(&ring, &sol)),
        ("r-square", rmat_residual(&ring, &sol)?),
    ];
    let pass = rows.iter().all(|(_, r)| r.is_zero());
    Ok(Outcome { text: output::residuals(&rows, fmt), pass })
}

#[derive(serde::Deserialize)]
struct UcpfConfig {
    #[serde(rename = "G")]
    g: Vec<Vec<qchar::RatS>>,
    #[serde(default)]
    a: Vec<qchar::RatS>,
    #[serde(default)]
    sign: Vec<u8>,
    #[serde(default)]
    prefactor: Option<qchar::RatS>,
}

fn ucpf(a: UcpfArgs, fmt: Format) -> Result<Outcome, CliError> {
    use qchar::ucpf::*;
    let t = &a.order.order;
    let spec = if let Some(f) = &a.family {
        let fam: BasisFamily = f.parse()?;
        if a.fock {
            let s = fock_basis_count(fam, t)?;
            return Ok(Outcome { text: output::series(&s, fmt), pass: true });
        }
        fam.ucpf_spec()
    } else if let Some(m) = &a.matrix {
        let g = g_matrix(m)?;
        let n = g.len();
        UcpfSpec::new(g).with_a(vec![Rat::from_integer(0.into()); n])
    } else if let Some(p) = &a.config {
        let text = std::fs::read_to_string(p).map_err(|e| QError::Io(format!("{}: {e}", p.display())))?;
        let c: UcpfConfig = serde_json::from_str(&text).map_err(|e| QError::Parse(format!("ucpf config: {e}")))?;
        let g: Vec<Vec<Rat>> = c.g.into_iter().map(|row| row.into_iter().map(|x| x.0).collect()).collect();
        let n = g.len();
        if g.iter().any(|row| row.len() != n) {
            return Err(QError::Parse("ucpf config: G must be square".into()).into());
        }
        let av: Vec<Rat> = if c.a.is_empty() { vec![Rat::from_integer(0.into()); n] } else { c.a.into_iter().map(|x| x.0).collect() };
        let mut spec = UcpfSpec::new(g).with_a(av).with_sign(c.sign);
        if let Some(d) = c.prefactor {
            spec = spec.with_prefactor(d.0);
        }
        spec
    } else {
        return Err(CliError::Usage("give --family, --matrix or --config".into()));
    };
    if a.dilog {
        let c = dilog_central_charge(&spec.g)?;
        return Ok(Outcome { text: output::scalar("central_charge", c, fmt), pass: true });
    }
    let s = ucpf_series(&spec, t)?;
    Ok(Outcome { text: output::series(&s, fmt), pass: true })
}

fn modular(a: ModularArgs, fmt: Format) -> Result<Outcome, CliError> {
    use qchar::verify::{eta_s_check, sl4_s_rows_check};
    let eta = eta_s_check(&a.tau, &a.order, a.tol)?;
    let sl4 = sl4_s_rows_check(&a.tau, &a.order, a.tol)?;
    let pass = eta.max_rel_err < a.tol && sl4.max_rel_err < a.tol;
    let text = output::modular(&[("eta", &eta), ("sl4-rows", &sl4)], a.tol, fmt);
    Ok(Outcome { text, pass })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(if out.pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_parsing() {
        assert_eq!(parse_tau("0.9i").unwrap(), Complex64::new(0.0, 0.9));
        assert_eq!(parse_tau("0.1+1.2i").unwrap(), Complex64::new(0.1, 1.2));
        assert_eq!(parse_tau("-0.5+1e-1i").unwrap(), Complex64::new(-0.5, 0.1));
        assert_eq!(parse_tau("i").unwrap(), Complex64::new(0.0, 1.0));
        assert!(parse_tau("0.5-1i").is_err());
        assert!(parse_tau("2").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Lib(QError::Cap("x".into())).code(), 4);
        assert_eq!(CliError::Lib(QError::Io("x".into())).code(), 3);
        assert_eq!(CliError::Lib(QError::Parse("x".into())).code(), 2);
        assert_eq!(CliError::Lib(QError::IncreaseT("x".into())).code(), 1);
    }

    #[test]
    fn orders_must_be_positive() {
        assert!(positive_rat("0").is_err());
        assert!(positive_rat("-1/2").is_err());
        assert_eq!(positive_rat("15/2").unwrap(), qchar::rat::r(15, 2));
    }
}

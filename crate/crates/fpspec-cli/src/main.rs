use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use fpspec::eigen::{default_phi, logspace_desc, oracle_mu, scan, EigenResult, ScanReport};
use fpspec::kappa::{compute_kappa, kappa_from_scan, solve_h0, H0Options, KappaReport};
use fpspec::{make_params, FpError, ModelParams};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "fpspec", version, about = "Small-eta eigenvalue and diffusion coefficient of a heavy-tailed Fokker-Planck operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Local tolerance of the ODE integrator.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for randomized probe points.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with any of the flag names as keys; flags take precedence.
    #[arg(long, global = true, env = "FPSPEC_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diffusion coefficient from the connection problem.
    Kappa {
        #[arg(long)]
        beta: Option<f64>,
        /// Also fit kappa from an eigenvalue scan and report the relative gap.
        #[arg(long)]
        check_scan: bool,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Eigenvalue mu(eta) over a range of eta.
    Scan {
        #[arg(long)]
        beta: Option<f64>,
        /// Explicit eta values (repeatable, may be negative); overrides the range.
        #[arg(long, allow_hyphen_values = true)]
        eta: Vec<f64>,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Cross-module invariant checks, printed as a pass/fail table.
    Selftest,
}

#[derive(Args, Debug, Default)]
struct RangeArgs {
    #[arg(long)]
    eta_min: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// Keys accepted in the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    beta: Option<f64>,
    eta: Option<Vec<f64>>,
    eta_min: Option<f64>,
    eta_max: Option<f64>,
    points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<Format>,
    jobs: Option<usize>,
    tol: Option<f64>,
    check_scan: Option<bool>,
    seed: Option<u64>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
struct RunConfig {
    params: ModelParams,
    etas: Vec<f64>,
    out: Option<PathBuf>,
    format: Format,
    jobs: usize,
    check_scan: bool,
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Numerical(String),
}

impl From<FpError> for Failure {
    fn from(e: FpError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numerical(format!("i/o: {e}"))
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let file = load_file_config(cli.common.config.as_deref())?;
    let c = &cli.common;
    let (beta, etas_flag, range, check_flag) = match &cli.command {
        Command::Kappa { beta, check_scan, range } => (*beta, Vec::new(), range, *check_scan),
        Command::Scan { beta, eta, range } => (*beta, eta.clone(), range, false),
        Command::Selftest => (None, Vec::new(), &RangeArgs::default() as &RangeArgs, false),
    };
    let beta = beta.or(file.beta).unwrap_or(3.0);
    let mut params = make_params(beta)?;
    if let Some(tol) = c.tol.or(file.tol) {
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Failure::Config(format!("--tol {tol} must lie in (0, 1e-6]")));
        }
        params = params.with_ode_tol(tol);
    }
    let etas = if !etas_flag.is_empty() {
        etas_flag
    } else if let Some(list) = file.eta.clone().filter(|l| !l.is_empty()) {
        list
    } else {
        let lo = range.eta_min.or(file.eta_min).unwrap_or(1e-4);
        let hi = range.eta_max.or(file.eta_max).unwrap_or(1e-2);
        let n = range.points.or(file.points).unwrap_or(10);
        if n == 0 {
            return Err(Failure::Config("empty eta list (--points 0)".into()));
        }
        if !(lo > 0.0 && lo <= hi) {
            return Err(Failure::Config(format!("need 0 < eta-min <= eta-max, got {lo} and {hi}")));
        }
        logspace_desc(lo, hi, n)
    };
    for &eta in &etas {
        if !(eta != 0.0 && eta.abs() <= params.eta0) {
            return Err(Failure::Config(format!("eta = {eta} must be nonzero with |eta| <= {}", params.eta0)));
        }
    }
    let jobs = c.jobs.or(file.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Failure::Config("--jobs must be at least 1".into()));
    }
    // Scans default to CSV, kappa reports to JSON; selftest prints a table unless JSON is asked for.
    let default_format = if matches!(cli.command, Command::Kappa { .. }) { Format::Json } else { Format::Csv };
    Ok(RunConfig {
        params,
        etas,
        out: c.out.clone().or(file.out),
        format: c.format.or(file.format).unwrap_or(default_format),
        jobs,
        check_scan: check_flag || file.check_scan.unwrap_or(false),
        seed: c.seed.or(file.seed).unwrap_or(0),
    })
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Scientific notation with 17 significant digits.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(full).unwrap_or_default()
}

fn cmd_kappa(cfg: &RunConfig) -> Result<(), Failure> {
    let h0 = solve_h0(&cfg.params, H0Options::default())?;
    let mut report: KappaReport = compute_kappa(&h0, &cfg.params)?;
    let mut check_failed = None;
    if cfg.check_scan {
        let scan = scan(&cfg.etas, &cfg.params, &default_phi(&cfg.params)?, cfg.jobs, false)?;
        let ok: Vec<EigenResult> = scan.points.into_iter().filter_map(|p| p.result.ok()).collect();
        let fit = kappa_from_scan(&ok, &cfg.params)?;
        let gap = (report.kappa_shoot - fit.kappa).abs() / report.kappa_shoot;
        report.kappa_scan = Some(fit.kappa);
        report.rel_gap = Some(gap);
        if gap > 0.05 {
            check_failed = Some(gap);
        }
    }
    let mut w = sink(&cfg.out)?;
    match cfg.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?,
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["beta", "kappa_shoot", "kappa_scan", "rel_gap", "err_series", "err_mid", "err_tail", "a_mix_re", "a_mix_im"])
                .and_then(|_| {
                    c.write_record([
                        full(report.beta),
                        full(report.kappa_shoot),
                        opt(report.kappa_scan),
                        opt(report.rel_gap),
                        full(report.err_series),
                        full(report.err_mid),
                        full(report.err_tail),
                        full(report.a_mix_re),
                        full(report.a_mix_im),
                    ])
                })
                .and_then(|_| c.flush().map_err(Into::into))
                .map_err(|e| Failure::Numerical(format!("csv: {e}")))?;
        }
    }
    match check_failed {
        Some(gap) => Err(Failure::Numerical(format!("kappa from the scan differs by {:.2}% from kappa_shoot", 100.0 * gap))),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct ScanRow {
    eta: f64,
    re_mu: Option<f64>,
    im_mu: Option<f64>,
    oracle_re_mu: Option<f64>,
    oracle_im_mu: Option<f64>,
    rel_gap: Option<f64>,
    b_residual: Option<f64>,
    status: String,
}

#[derive(Serialize)]
struct ScanOutput {
    beta: f64,
    rows: Vec<ScanRow>,
    slope: f64,
    kappa: Option<f64>,
}

fn rows(report: &ScanReport) -> Vec<ScanRow> {
    report
        .points
        .iter()
        .map(|p| match &p.result {
            Ok(r) => ScanRow {
                eta: p.eta,
                re_mu: Some(r.mu.re),
                im_mu: Some(r.mu.im),
                oracle_re_mu: r.oracle_mu.map(|z| z.re),
                oracle_im_mu: r.oracle_mu.map(|z| z.im),
                rel_gap: r.rel_gap,
                b_residual: Some(r.b_residual),
                status: "ok".into(),
            },
            Err(e) => ScanRow {
                eta: p.eta,
                re_mu: None,
                im_mu: None,
                oracle_re_mu: None,
                oracle_im_mu: None,
                rel_gap: None,
                b_residual: None,
                status: format!("failed: {e}"),
            },
        })
        .collect()
}

fn cmd_scan(cfg: &RunConfig) -> Result<(), Failure> {
    let report = scan(&cfg.etas, &cfg.params, &default_phi(&cfg.params)?, cfg.jobs, true)?;
    let ok: Vec<EigenResult> = report.points.iter().filter_map(|p| p.result.as_ref().ok().cloned()).collect();
    let kappa = kappa_from_scan(&ok, &cfg.params).ok().map(|f| f.kappa);
    let out = ScanOutput { beta: report.beta, rows: rows(&report), slope: report.slope, kappa };
    let mut w = sink(&cfg.out)?;
    match cfg.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&out).expect("scan serializes"))?,
        Format::Csv => {
            let mut c = csv::WriterBuilder::new().flexible(true).from_writer(&mut w);
            let mut write = || -> csv::Result<()> {
                c.write_record(["eta", "re_mu", "im_mu", "oracle_re_mu", "oracle_im_mu", "rel_gap", "b_residual", "status"])?;
                for r in &out.rows {
                    c.write_record([
                        full(r.eta),
                        opt(r.re_mu),
                        opt(r.im_mu),
                        opt(r.oracle_re_mu),
                        opt(r.oracle_im_mu),
                        opt(r.rel_gap),
                        opt(r.b_residual),
                        r.status.clone(),
                    ])?;
                }
                c.write_record(["slope".to_string(), opt(Some(out.slope).filter(|s| s.is_finite()))])?;
                c.write_record(["kappa".to_string(), opt(out.kappa)])?;
                c.flush()?;
                Ok(())
            };
            write().map_err(|e| Failure::Numerical(format!("csv: {e}")))?;
        }
    }
    let failed = out.rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} of {} scan points failed", out.rows.len())));
    }
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
    pass: bool,
}

fn check(name: &'static str, value: Result<f64, FpError>, bound: f64) -> Check {
    let value = value.unwrap_or(f64::INFINITY);
    Check { name, value, bound, pass: value <= bound }
}

fn selftest_checks(seed: u64) -> Vec<Check> {
    use fpspec::airy::{ai, rotated_pair};
    use fpspec::basis0::{apply_t0, build_basis, solve_psi};
    use fpspec::diffusion::frac_laplacian_pv;
    use fpspec::ode::wronskian_drift;
    use std::f64::consts::PI;

    let mut out = Vec::new();
    out.push(check("airy: Ai(0)", Ok((ai(C64::new(0.0, 0.0)).ai.re - 0.355_028_053_887_817_2).abs()), 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jj = fpspec::airy::j();
    let mut worst_identity = 0.0f64;
    let mut worst_wronskian = 0.0f64;
    for _ in 0..200 {
        let lambda = C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
        let s = rng.gen_range(-10.0..10.0);
        let p = rotated_pair(lambda);
        let (a, b, c) = (p.a(s).0, p.b(s).0, p.c(s).0);
        worst_identity = worst_identity.max((a + jj * b + jj * jj * c).norm() / a.norm().max(b.norm()).max(c.norm()));
        worst_wronskian = worst_wronskian.max((p.wronskian(s) - 1.0 / (2.0 * PI)).norm());
    }
    out.push(check("airy: three-solution identity", Ok(worst_identity), 1e-10));
    out.push(check("airy: rotated-pair Wronskian", Ok(worst_wronskian), 1e-9));

    let params = make_params(3.0).expect("beta = 3 is admissible");
    let basis = solve_psi(&params, 100.0).and_then(|psi| build_basis(&params, psi));
    match &basis {
        Ok(b) => {
            out.push(check("basis0: Wronskian drift", wronskian_drift(&b.psi1, &b.psi2), 1e-8));
            out.push(check("basis0: T0 residual (Gaussian)", apply_t0(|v: f64| (-v * v).exp(), b).map(|t| t.residual), 1e-6));
        }
        Err(e) => out.push(check("basis0: build", Err(e.clone()), 0.0)),
    }

    let conj = oracle_mu(1e-3, &params, 120.0, 4000).and_then(|plus| {
        oracle_mu(-1e-3, &params, 120.0, 4000).map(|minus| (plus.mu - minus.mu.conj()).norm() / plus.mu.norm())
    });
    out.push(check("oracle: conjugation symmetry", conj, 1e-8));

    let params4 = make_params(4.0).expect("beta = 4 is admissible");
    let im_h0 = solve_h0(&params4, H0Options::default()).map(|h| (h.eval(0.05).0.im + 1.0 / 120.0).abs() / (1.0 / 120.0));
    out.push(check("kappa: Im H0(0.05) at gamma = 2", im_h0, 0.05));

    let alpha = 1.3;
    let exact = 2f64.powf(alpha) * gamma((alpha + 1.0) / 2.0) / PI.sqrt();
    let pv = frac_laplacian_pv(&|x: f64| (-x * x).exp(), 0.0, alpha).map(|v| (v - exact).abs() / exact);
    out.push(check("diffusion: fractional Laplacian of a Gaussian", pv, 1e-6));
    out
}

fn cmd_selftest(cfg: &RunConfig) -> Result<(), Failure> {
    let checks = selftest_checks(cfg.seed);
    let mut w = sink(&cfg.out)?;
    match cfg.format {
        Format::Json => writeln!(w, "{}", serde_json::to_string_pretty(&checks).expect("checks serialize"))?,
        Format::Csv => {
            writeln!(w, "{:<48} {:>12} {:>10}  result", "check", "value", "bound")?;
            for c in &checks {
                writeln!(w, "{:<48} {:>12.3e} {:>10.1e}  {}", c.name, c.value, c.bound, if c.pass { "PASS" } else { "FAIL" })?;
            }
        }
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} self-test checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| match cli.command {
        Command::Kappa { .. } => cmd_kappa(&cfg),
        Command::Scan { .. } => cmd_scan(&cfg),
        Command::Selftest => cmd_selftest(&cfg),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("fpspec: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("fpspec: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

//! Command-line front end. Every command reads one config file and writes
//! CSV files into the output directory.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::attenuation_lab::{run_attenuation_experiment, sweep};
use crate::burgers_models::{BurgersSolver, BurgersState};
use crate::config::{ConfigError, RunConfig};
use crate::dispersion::{dispersion_relation, fit_power_law, log_spaced};
use crate::error::Error;
use crate::frac_calculus::FracOrder;
use crate::frac_laplacian::{build_gradient, build_laplacian, Grid1D, SpectralMultiplier};
use crate::output::{num, CsvTable};
use crate::wave_models::{simulate, SimulationOptions, SourceKind, SourceSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fracwave",
    version,
    about = "Fractional-damping wave models and attenuation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Reserved; every algorithm is deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Verdict tolerance on |y_hat - y| (overrides experiment.tolerance).
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Complex wavenumber over a log-spaced frequency grid, with a power-law fit.
    Dispersion,
    /// Probe traces for a wave model or snapshots for a Burgers run.
    Simulate,
    /// Two-probe attenuation experiment with a PASS/FAIL verdict.
    Attenuate,
    /// Attenuation experiments over models, exponents and coefficients.
    Sweep,
    /// Laplacian, its fractional power and the gradient, plus identity checks.
    Operators,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Dispersion => "dispersion",
            Self::Simulate => "simulate",
            Self::Attenuate => "attenuate",
            Self::Sweep => "sweep",
            Self::Operators => "operators",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(Error),
    Io(std::io::Error),
    Verdict(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(e) => write!(f, "config error: {e}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Verdict(v) => f.write_str(v),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::InvalidOrder { .. }
            | Error::NonPeriodicGrid
            | Error::Unresolved(_)
            | Error::DimensionMismatch { .. } => Self::Config(ConfigError {
                line: None,
                key: None,
                message: e.to_string(),
            }),
            e => Self::Numerical(e),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            EXIT_OK
        }
        Err(CliError::Verdict(v)) => {
            println!("{v}");
            EXIT_NUMERICAL
        }
        Err(e) => {
            eprintln!("fracwave {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns its stdout lines.
pub fn execute(cli: &Cli) -> CliResult<Vec<String>> {
    let path = cli.config.as_ref().ok_or_else(|| ConfigError {
        line: None,
        key: None,
        message: "--config <path> is required".into(),
    })?;
    let cfg = RunConfig::load(path)?;
    std::fs::create_dir_all(&cli.out)?;
    let ctx = Context {
        cfg: &cfg,
        out: &cli.out,
        command: cli.command,
    };
    match cli.command {
        Command::Dispersion => cmd_dispersion(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Attenuate => cmd_attenuate(&ctx, cli.tolerance),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Operators => cmd_operators(&ctx),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: &'a Path,
    command: Command,
}

impl Context<'_> {
    fn table<S: AsRef<str>>(&self, header: &[S]) -> CsvTable {
        let mut t = CsvTable::new(header);
        t.meta(format!(
            "fracwave {} {}",
            self.command.name(),
            env!("CARGO_PKG_VERSION")
        ));
        for line in self.cfg.echo() {
            t.meta(line);
        }
        t
    }

    fn write(&self, name: &str, table: &CsvTable) -> CliResult<String> {
        let file = format!("{}{name}", self.cfg.raw("output", "prefix"));
        let path = self.out.join(&file);
        table.write(&path)?;
        Ok(path.display().to_string())
    }
}

fn cmd_dispersion(ctx: &Context) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let medium = cfg.medium()?;
    let model = cfg.model()?;
    let lo = cfg.f64("experiment", "omega_min")?;
    let hi = cfg.f64("experiment", "omega_max")?;
    let count = cfg.usize("experiment", "omega_count")?;
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(ConfigError {
            line: None,
            key: Some("experiment.omega_min".into()),
            message: "need 0 < omega_min < omega_max and omega_count >= 2".into(),
        }
        .into());
    }
    let mut table = ctx.table(&["omega", "k_re", "k_im", "alpha", "phase_speed"]);
    let mut points = Vec::with_capacity(count);
    for w in log_spaced(lo, hi, count) {
        let d = dispersion_relation(model, &medium, w)?;
        table.row_nums(&[d.omega, d.k.re, d.k.im, d.alpha, d.phase_speed]);
        points.push((d.omega, d.alpha));
    }
    let mut lines = Vec::new();
    match fit_power_law(&points) {
        Ok(fit) => {
            table
                .footer_kv("alpha0_hat", num(fit.alpha0_hat))
                .footer_kv("y_hat", num(fit.y_hat))
                .footer_kv("r2", num(fit.r2));
            lines.push(format!(
                "y_hat = {} alpha0_hat = {}",
                num(fit.y_hat),
                num(fit.alpha0_hat)
            ));
        }
        Err(e) => {
            table.footer_kv("fit_error", &e);
            lines.push(format!("fit unavailable: {e}"));
        }
    }
    lines.insert(0, ctx.write("dispersion.csv", &table)?);
    Ok(lines)
}

fn cmd_simulate(ctx: &Context) -> CliResult<Vec<String>> {
    if ctx.cfg.is_burgers()? {
        simulate_burgers(ctx)
    } else {
        simulate_wave(ctx)
    }
}

fn simulate_wave(ctx: &Context) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let medium = cfg.medium()?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let probes = cfg.probes(&grid)?;
    let kind = match cfg.raw("experiment", "source_kind") {
        "driven" => SourceKind::DrivenPoint,
        "initial" => SourceKind::InitialPulse,
        "none" => SourceKind::DrivenPoint,
        v => {
            return Err(ConfigError {
                line: None,
                key: Some("experiment.source_kind".into()),
                message: format!("expected driven, initial or none, got `{v}`"),
            }
            .into())
        }
    };
    let source = SourceSpec {
        kind,
        location: cfg.position(&grid, "source")?,
        pulse: cfg.pulse()?,
    };
    let source = (cfg.raw("experiment", "source_kind") != "none").then_some(source);
    let duration = cfg
        .f64_or_auto("experiment", "duration")?
        .unwrap_or(grid.length() / medium.c());
    let traces = simulate(
        model,
        &medium,
        &grid,
        source.as_ref(),
        duration,
        &probes,
        &SimulationOptions {
            dt: cfg.f64_or_auto("experiment", "dt")?,
            solver: cfg.solver_options()?,
        },
    )?;
    let mut header = vec!["t".to_string()];
    for i in 0..probes.len() {
        header.push(format!("probe{i}_re"));
        header.push(format!("probe{i}_im"));
    }
    let mut table = ctx.table(&header);
    table.meta_kv("dt", num(traces.dt));
    for (i, &p) in probes.iter().enumerate() {
        table.meta_kv(&format!("probe{i}_x"), num(grid.x(p)));
    }
    for (j, t) in traces.times.iter().enumerate() {
        let mut row = vec![*t];
        for tr in &traces.traces {
            row.push(tr[j].re);
            row.push(tr[j].im);
        }
        table.row_nums(&row);
    }
    Ok(vec![
        ctx.write("traces.csv", &table)?,
        format!("dt = {} steps = {}", num(traces.dt), traces.times.len() - 1),
    ])
}

fn simulate_burgers(ctx: &Context) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let grid = cfg.grid()?;
    let (params, variant) = cfg.burgers()?;
    let solver = BurgersSolver::new(params, variant, grid)?;
    let amp = cfg.f64("experiment", "initial_amplitude")?;
    let offset = cfg.f64("experiment", "initial_offset")?;
    let l = grid.length();
    let p: Vec<f64> = (0..grid.n())
        .map(|i| offset + amp * (2.0 * std::f64::consts::PI * grid.x(i) / l).sin())
        .collect();
    let mut state = BurgersState::from_real(&p);
    let snaps = solver.run(
        &mut state,
        cfg.f64("experiment", "t_end")?,
        cfg.f64("experiment", "cfl_fraction")?,
        cfg.usize("experiment", "snapshot_every")?,
    )?;
    let mut table = ctx.table(&["t", "x", "p_re", "p_im"]);
    for s in &snaps {
        for (i, v) in s.p.iter().enumerate() {
            table.row_nums(&[s.t, grid.x(i), v.re, v.im]);
        }
    }
    Ok(vec![
        ctx.write("snapshots.csv", &table)?,
        format!("snapshots = {} t_end = {}", snaps.len(), num(state.t)),
    ])
}

fn cmd_attenuate(ctx: &Context, tolerance: Option<f64>) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let medium = cfg.medium()?;
    let model = cfg.model()?;
    let setup = cfg.experiment()?;
    let tol = match tolerance {
        Some(t) => t,
        None => cfg.f64("experiment", "tolerance")?,
    };
    let result = run_attenuation_experiment(model, &medium, &setup)?;
    let m = &result.measurement;
    let mut table = ctx.table(&["omega", "alpha_measured", "alpha_predicted"]);
    table
        .meta_kv("dt", num(m.dt))
        .meta_kv("probe_separation", num(m.dx))
        .meta_kv(
            "window",
            format!(
                "tukey half_width = {} taper = {}",
                num(m.window_half_width),
                num(m.taper)
            ),
        )
        .meta_kv("band", format!("{} {}", num(m.band.0), num(m.band.1)));
    for ((w, a), p) in m.omega.iter().zip(&m.alpha).zip(&result.predicted) {
        table.row_nums(&[*w, *a, *p]);
    }
    let err = (result.fit.y_hat - medium.y().value()).abs();
    let pass = err <= tol;
    let verdict = format!(
        "{} |y_hat - y| = {} tolerance = {} y_hat = {} alpha0_hat = {}",
        if pass { "PASS" } else { "FAIL" },
        num(err),
        num(tol),
        num(result.fit.y_hat),
        num(result.fit.alpha0_hat)
    );
    table
        .footer_kv("alpha0_hat", num(result.fit.alpha0_hat))
        .footer_kv("y_hat", num(result.fit.y_hat))
        .footer_kv("r2", num(result.fit.r2))
        .footer_kv("max_deviation", num(result.max_deviation))
        .footer_kv("verdict", if pass { "PASS" } else { "FAIL" });
    let file = ctx.write("attenuation.csv", &table)?;
    if pass {
        Ok(vec![file, verdict])
    } else {
        Err(CliError::Verdict(verdict))
    }
}

fn cmd_sweep(ctx: &Context) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let medium = cfg.medium()?;
    let models = cfg.sweep_models()?;
    let ys = cfg.list_f64("experiment", "sweep_y")?;
    let alpha0s = cfg.list_f64("experiment", "sweep_alpha0")?;
    let setup = cfg.experiment()?;
    let rows = sweep(&models, &ys, &alpha0s, medium.c(), &setup);
    let mut table = ctx.table(&[
        "model",
        "y",
        "alpha0",
        "y_hat",
        "alpha0_hat",
        "r2",
        "band_lo",
        "band_hi",
        "max_deviation",
        "error",
    ]);
    let mut failures = 0;
    for r in &rows {
        let mut cells = vec![r.model.name().to_string(), num(r.y), num(r.alpha0)];
        match &r.outcome {
            Ok(s) => {
                cells.extend(
                    [
                        s.y_hat,
                        s.alpha0_hat,
                        s.r2,
                        s.band.0,
                        s.band.1,
                        s.max_deviation,
                    ]
                    .map(num),
                );
                cells.push(String::new());
            }
            Err(e) => {
                failures += 1;
                cells.extend(std::iter::repeat_n(String::new(), 6));
                cells.push(format!("\"{}\"", e.to_string().replace('"', "'")));
            }
        }
        table.row(cells);
    }
    Ok(vec![
        ctx.write("sweep.csv", &table)?,
        format!("cells = {} failed = {failures}", rows.len()),
    ])
}

fn matrix_table(ctx: &Context, m: &DMatrix<f64>, label: &str) -> CsvTable {
    let header: Vec<String> = (0..m.ncols()).map(|j| format!("c{j}")).collect();
    let mut t = ctx.table(&header);
    t.meta_kv("matrix", label);
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        t.row_nums(&row);
    }
    t
}

/// Deterministic test vector for the matrix-versus-FFT comparison.
fn probe_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64;
            (1.3 * x).sin() + 0.5 * (0.37 * x * x).cos()
        })
        .collect()
}

fn cmd_operators(ctx: &Context) -> CliResult<Vec<String>> {
    let cfg = ctx.cfg;
    let grid: Grid1D = cfg.grid()?;
    let r = FracOrder::new(cfg.f64("experiment", "operator_r")?).map_err(|e| ConfigError {
        line: None,
        key: Some("experiment.operator_r".into()),
        message: e.to_string(),
    })?;
    let a = build_laplacian(&grid);
    let half = a.frac_power_matrix(FracOrder::new(0.5)?);
    let power = a.frac_power_matrix(r);
    let b = build_gradient(&grid);
    let am = a.matrix();
    let bm = b.matrix();
    let n = grid.n();

    let mut files = vec![
        ctx.write("operator_A.csv", &matrix_table(ctx, am, "A"))?,
        ctx.write("operator_A_half.csv", &matrix_table(ctx, &half, "A^(1/2)"))?,
        ctx.write("operator_B.csv", &matrix_table(ctx, bm, "B"))?,
    ];
    if r.value() != 0.5 {
        files.push(ctx.write(
            "operator_A_pow.csv",
            &matrix_table(ctx, &power, &format!("A^({r})")),
        )?);
    }

    let mut eig = ctx.table(&["index", "eigenvalue"]);
    let mut spectrum: Vec<f64> = a.eigenvalues().iter().copied().collect();
    spectrum.sort_by(f64::total_cmp);
    for (i, l) in spectrum.iter().enumerate() {
        eig.row(vec![i.to_string(), num(*l)]);
    }
    files.push(ctx.write("operator_eigenvalues.csv", &eig)?);

    let fft_dev = if grid.is_periodic() && 2.0 * r.value() <= 3.0 {
        let u = probe_vector(n);
        let via_matrix = &power * nalgebra::DVector::from_vec(u.clone());
        let spec = SpectralMultiplier::magnitude_power(&grid, FracOrder::new(2.0 * r.value())?)?;
        let input: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let via_fft = spec.apply(&input)?;
        let scale = via_matrix.amax().max(f64::MIN_POSITIVE);
        via_matrix
            .iter()
            .zip(&via_fft)
            .map(|(m, f)| (m - f.re).abs())
            .fold(0.0, f64::max)
            / scale
    } else {
        f64::NAN
    };

    let mut report = ctx.table(&["quantity", "value"]);
    let a_norm = am.norm();
    let rows: Vec<(&str, f64)> = vec![
        ("symmetry_residual_A", (am - am.transpose()).norm()),
        (
            "symmetry_residual_A_half",
            (&half - half.transpose()).norm(),
        ),
        (
            "symmetry_residual_A_pow",
            (&power - power.transpose()).norm(),
        ),
        ("sqrt_square_residual", (&half * &half - am).norm() / a_norm),
        (
            "pow_minus_identity",
            (&power - DMatrix::<f64>::identity(n, n)).norm(),
        ),
        ("skew_residual_B", (bm + bm.transpose()).norm()),
        ("B_minus_A_half", (bm - &half).norm()),
        ("matrix_vs_fft", fft_dev),
    ];
    for (name, v) in rows {
        report.row(vec![name.to_string(), num(v)]);
    }
    report.meta_kv("r", r);
    files.push(ctx.write("operator_report.csv", &report)?);
    Ok(files)
}

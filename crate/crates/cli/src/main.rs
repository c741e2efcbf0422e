use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ltb_core::geodesics::{singular_start_with, RootChoice};
use ltb_core::sweep::render;
use ltb_core::verification::{check_dphidt_on_horizon, check_phi_equals_rprime, log_grid};
use ltb_core::*;

/// Endstate analysis for marginally bound spherical dust collapse
#[derive(Parser, Debug)]
#[command(name = "ltb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify one model as naked singularity or black hole
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Classify a grid of power-law models and emit CSV or JSON
    Sweep {
        /// profile exponents, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long)]
        a_min: f64,
        #[arg(long)]
        a_max: f64,
        #[arg(long, default_value_t = 50)]
        a_steps: usize,
        #[arg(long, value_enum, default_value_t = SpacingArg::Log)]
        spacing: SpacingArg,
        #[arg(long, default_value_t = 0.1)]
        r_max: f64,
        /// worker threads (falls back to LTB_WORKERS)
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// output file; stdout when absent
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        tol: ToleranceArgs,
    },
    /// Shoot the outgoing radial null ray from the central singularity
    Geodesic {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        tol: ToleranceArgs,
        /// initial deviation x(epsilon) - x0
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Roots of the tangent quartic for the n = 3 profile
    Roots {
        #[arg(long)]
        a: f64,
    },
    /// Run the identity suite; exits 1 on any failure
    Verify {
        /// models as n:a, repeatable (default: a fixed reference set)
        #[arg(long = "model", value_parser = parse_model_spec)]
        models: Vec<(u32, f64)>,
        #[arg(long, default_value_t = 1e-4)]
        r_min: f64,
        #[arg(long, default_value_t = 0.1)]
        r_max: f64,
        #[arg(long, default_value_t = 60)]
        points: usize,
    },
    /// Print the critical constants
    Constants,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// JSON model file; overrides the flags below
    #[arg(long, conflicts_with_all = ["n", "a", "gamma"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    n: Option<u32>,
    #[arg(long, required_unless_present = "config")]
    a: Option<f64>,
    /// extra term of k(r) as power:coeff, repeatable
    #[arg(long, value_parser = parse_gamma)]
    gamma: Vec<GammaTerm>,
    #[arg(long, default_value_t = 0.1)]
    r_max: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        match &self.config {
            Some(path) => load_model_config(path),
            None => ModelParams::new(
                self.n.expect("required by clap"),
                self.a.expect("required by clap"),
                self.gamma.clone(),
                self.r_max,
            ),
        }
    }
}

/// Overrides for integration and classification defaults.
#[derive(Args, Debug, Default)]
struct ToleranceArgs {
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// starting radius of forward shots
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    escape_factor: Option<f64>,
    #[arg(long, value_enum)]
    root: Option<RootArg>,
    /// probe anchor radii, comma separated
    #[arg(long, value_delimiter = ',')]
    probe_radii: Option<Vec<f64>>,
    #[arg(long)]
    anchor_depth: Option<f64>,
    #[arg(long)]
    r_floor: Option<f64>,
    #[arg(long)]
    probe_margin: Option<f64>,
    #[arg(long)]
    always_probe: bool,
}

impl ToleranceArgs {
    fn settings(&self) -> NumericSettings {
        let mut s = NumericSettings::default();
        let step = &mut s.step;
        if let Some(v) = self.rtol {
            step.rtol = v;
        }
        if let Some(v) = self.atol {
            step.atol = v;
        }
        if let Some(v) = self.h_min {
            step.h_min = v;
        }
        if let Some(v) = self.h_max {
            step.h_max = v;
        }
        if let Some(v) = self.max_steps {
            step.max_steps = v;
        }
        if let Some(v) = self.epsilon {
            s.epsilon = v;
        }
        if let Some(v) = self.escape_factor {
            s.escape_factor = v;
        }
        if let Some(v) = self.root {
            s.root_choice = match v {
                RootArg::Smallest => RootChoice::Smallest,
                RootArg::Largest => RootChoice::Largest,
            };
        }
        if let Some(v) = &self.probe_radii {
            s.probe_radii = v.clone();
        }
        if let Some(v) = self.anchor_depth {
            s.anchor_depth = v;
        }
        if let Some(v) = self.r_floor {
            s.r_floor = v;
        }
        if let Some(v) = self.probe_margin {
            s.probe_margin = v;
        }
        s.always_probe |= self.always_probe;
        s
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RootArg {
    Smallest,
    Largest,
}

fn parse_gamma(s: &str) -> std::result::Result<GammaTerm, String> {
    let (p, c) = s.split_once(':').ok_or("expected power:coeff")?;
    let power = p.trim().parse::<u32>().map_err(|e| format!("power: {e}"))?;
    let coeff = c.trim().parse::<f64>().map_err(|e| format!("coeff: {e}"))?;
    Ok(GammaTerm { power, coeff })
}

fn parse_model_spec(s: &str) -> std::result::Result<(u32, f64), String> {
    let (n, a) = s.split_once(':').ok_or("expected n:a")?;
    let n = n.trim().parse::<u32>().map_err(|e| format!("n: {e}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| format!("a: {e}"))?;
    Ok((n, a))
}

#[derive(Serialize)]
struct RunProvenance {
    tool_version: &'static str,
    settings: NumericSettings,
}

impl RunProvenance {
    fn new(settings: NumericSettings) -> Self {
        RunProvenance {
            tool_version: env!("CARGO_PKG_VERSION"),
            settings,
        }
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    #[serde(flatten)]
    report: ClassificationReport,
    provenance: RunProvenance,
}

#[derive(Serialize)]
struct GeodesicOutput<'a> {
    start: SingularStart,
    path: &'a GeodesicPath,
    provenance: RunProvenance,
}

#[derive(Serialize)]
struct RootValue {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct RootsOutput {
    a: f64,
    coefficients: [f64; 5],
    roots: Vec<RootValue>,
    admissible: Vec<f64>,
    physical: Vec<f64>,
    double_root: bool,
    regime: &'static str,
}

#[derive(Serialize)]
struct IdentitySummary {
    max_rel_err: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CheckLine {
    n: u32,
    a: f64,
    check: String,
    max_rel_err: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyOutput {
    identity: IdentitySummary,
    checks: Vec<CheckLine>,
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn write_out(text: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn verify(models: &[(u32, f64)], r_min: f64, r_max: f64, points: usize) -> Result<VerifyOutput> {
    let grid = log_grid(r_min, r_max, points);
    let mut checks = Vec::new();
    for &(n, a) in models {
        let params = ModelParams::power_law(n, a, r_max)?;
        let mut results = vec![
            check_subsolution_margin(&params, &grid)?,
            check_phi_on_horizon(&params, &grid)?,
            check_phi_equals_rprime(&params, &grid)?,
        ];
        if n >= 4 {
            results.push(check_dphidt_on_horizon(&params, &grid)?);
        }
        for res in results {
            checks.push(CheckLine {
                n,
                a,
                check: res.name.to_string(),
                max_rel_err: res.max_rel_err,
                tolerance: res.tolerance,
                pass: res.pass,
            });
        }
    }
    let max_rel_err = checks
        .iter()
        .filter(|c| !c.check.starts_with("dphidt"))
        .map(|c| c.max_rel_err)
        .fold(0.0, f64::max);
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyOutput {
        identity: IdentitySummary { max_rel_err, pass },
        checks,
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Classify { model, tol } => {
            let params = model.params()?;
            let settings = tol.settings();
            let report = classify(&params, &settings);
            write_out(
                &json(&ClassifyOutput {
                    report,
                    provenance: RunProvenance::new(settings),
                })?,
                None,
            )?;
        }
        Command::Sweep {
            n,
            a_min,
            a_max,
            a_steps,
            spacing,
            r_max,
            workers,
            format,
            output,
            tol,
        } => {
            let grid = SweepGrid {
                n_values: n,
                a_min,
                a_max,
                a_steps,
                spacing: match spacing {
                    SpacingArg::Linear => Spacing::Linear,
                    SpacingArg::Log => Spacing::Logarithmic,
                },
            };
            let settings = SweepSettings {
                r_max,
                numeric: tol.settings(),
            };
            let result = run_sweep(&grid, &settings, workers)?;
            match &output {
                Some(path) => emit(&result, format.into(), path)?,
                None => write_out(&render(&result, format.into())?, None)?,
            }
        }
        Command::Geodesic {
            model,
            tol,
            offset,
            format,
            output,
        } => {
            let params = model.params()?;
            let settings = tol.settings();
            let start = singular_start_with(&params, settings.root_choice)?
                .with_epsilon(settings.epsilon)
                .with_offset(offset);
            let path = integrate_from_singularity(&params, start, params.r_max(), &settings.step)?;
            let text = match format {
                FormatArg::Csv => path.to_csv(&params),
                FormatArg::Json => json(&GeodesicOutput {
                    start,
                    path: &path,
                    provenance: RunProvenance::new(settings),
                })?,
            };
            write_out(&text, output.as_ref())?;
        }
        Command::Roots { a } => {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidArgument(format!("a must be positive, got {a}")));
            }
            let rep = solve_roots(a);
            let out = RootsOutput {
                a,
                coefficients: rep.quartic_coeffs,
                roots: rep.all_roots.iter().map(|z| RootValue { re: z.re, im: z.im }).collect(),
                admissible: rep.admissible.clone(),
                physical: rep.physical.clone(),
                double_root: rep.double_root,
                regime: rep.regime().as_str(),
            };
            write_out(&json(&out)?, None)?;
        }
        Command::Verify {
            models,
            r_min,
            r_max,
            points,
        } => {
            let models = if models.is_empty() {
                vec![(1, 1.0), (2, 0.5), (3, 4.0), (4, 1.0)]
            } else {
                models
            };
            let out = verify(&models, r_min, r_max, points)?;
            write_out(&json(&out)?, None)?;
            if !out.identity.pass {
                return Ok(Outcome::VerificationFailed);
            }
        }
        Command::Constants => {
            write_out(&json(&critical_constants())?, None)?;
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kirchhoff_core::evolution::{evolve_series, EvolveConfig};
use kirchhoff_core::io::{read_field, write_json};
use kirchhoff_core::modulation::{
    mod_distance, orthogonality_residuals, sample_perturbation, FitOptions, PerturbationSpec,
};
use kirchhoff_core::verify::{run_criteria, write_summary, CriterionReport, Lab};
use kirchhoff_core::{parse_config, run_all, Error, RunConfig, VerificationSummary};
use serde_json::json;

const CONFIG_ERROR: u8 = 2;
const HARD_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "kirchhoff",
    version,
    about = "Ground states, spectra, modulation and dynamics for the Kirchhoff-NLS limit problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set box_nodes=32`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Nonlinearity exponent.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct DirArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory (default: config, then $KIRCHHOFF_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Radial ground state: cross-validation, Pohozaev identities, rescaling.
    Groundstate(DirArgs),
    /// Linearised spectra, constrained infima and operator identities.
    Spectrum(DirArgs),
    /// Modulation fits, or a single fit of `--field`.
    Modfit {
        #[command(flatten)]
        args: DirArgs,
        /// Binary field file to fit instead of running the checks.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Energy-gap scan and the constrained quadratic-form probe.
    Coercivity(DirArgs),
    /// One perturbed stability run written as CSV.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        /// Perturbation size relative to the ground-state norm (0 for none).
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV destination (default: series.csv under the output root).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every check; writes summary.json, timings.json and the artifacts.
    VerifyAll(DirArgs),
}

fn overrides(
    common: &Common,
    extra: &[(&str, Option<String>)],
) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for s in &common.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {s:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(p) = common.p {
        out.push(("p".into(), p.to_string()));
    }
    for (k, v) in extra {
        if let Some(v) = v {
            out.push((k.to_string(), v.clone()));
        }
    }
    Ok(out)
}

fn load(common: &Common, extra: &[(&str, Option<String>)]) -> Result<RunConfig, Error> {
    parse_config(common.config.as_deref(), &overrides(common, extra)?)
}

fn load_dir(args: &DirArgs) -> Result<RunConfig, Error> {
    let out = args.out.as_ref().map(|p| json!(p).to_string());
    load(&args.common, &[("output_dir", out)])
}

fn print_report(r: &CriterionReport) {
    println!(
        "[{}] {:>2} {} ({:.1} s)",
        if r.pass { "PASS" } else { "FAIL" },
        r.id,
        r.title,
        r.seconds
    );
    for c in &r.checks {
        println!(
            "       {} {}",
            if c.pass { "ok  " } else { "FAIL" },
            c.describe()
        );
    }
    if let Some(e) = &r.error {
        println!("       error: {e}");
    }
}

fn summary_code(s: &VerificationSummary) -> u8 {
    s.exit_code() as u8
}

fn criteria(cfg: &RunConfig, ids: &[u8]) -> Result<u8, Error> {
    let out = cfg.output_root();
    let summary = run_criteria(cfg, ids, Some(&out), print_report)?;
    write_summary(&summary, &out)?;
    Ok(summary_code(&summary))
}

fn fit_file(cfg: &RunConfig, path: &Path) -> Result<u8, Error> {
    let phi = read_field(
        File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
    )?;
    let mut lab = Lab::new(cfg, None)?;
    let gs = lab.ground()?;
    let w = phi.grid().half_width() / gs.length_scale();
    let state = lab.box_state(phi.grid().nodes_per_axis(), w)?;
    let fit = mod_distance(&phi, state, &FitOptions::default())?;
    let res = orthogonality_residuals(&fit, state)?;
    let report = json!({
        "x0": fit.x0,
        "gamma": fit.gamma,
        "dist": fit.dist,
        "dist_relative": fit.dist / state.norm(),
        "orthogonality": res,
        "warnings": fit.warnings,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn evolve(
    common: &Common,
    eps: Option<f64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    perturb: Option<f64>,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let s = |v: Option<f64>| v.map(|x| x.to_string());
    let cfg = load(
        common,
        &[("epsilon", s(eps)), ("dt", s(dt)), ("t_end", s(t_end))],
    )?;
    let amplitude = perturb.unwrap_or(cfg.perturb);
    if amplitude.is_nan() || amplitude < 0.0 {
        return Err(Error::Config(format!(
            "perturb must be non-negative, got {amplitude}"
        )));
    }
    if cfg.epsilon != 1.0 {
        return Err(Error::Config(
            "stability runs are defined for eps = 1".into(),
        ));
    }
    let mut lab = Lab::new(&cfg, None)?;
    let state = lab.box_state(cfg.box_nodes, cfg.box_half_width)?.clone();
    let phi = if amplitude == 0.0 {
        state.field.clone()
    } else {
        sample_perturbation(&state, amplitude, seed, &PerturbationSpec::default())?
    };
    let mut ev = EvolveConfig::new(cfg.p, cfg.dt, cfg.t_end);
    ev.output_every = cfg.output_every;
    let (series, _) = evolve_series(&state, &phi, seed, &ev)?;
    let path = out.unwrap_or_else(|| cfg.output_root().join("series.csv"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    series.write_csv(BufWriter::new(File::create(&path)?))?;
    let summary = series.summary();
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({ "csv": path, "summary": summary, "aborted": series.aborted })
        )?
    );
    Ok(if series.aborted.is_some() {
        HARD_FAILURE
    } else {
        0
    })
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Groundstate(a) => criteria(&load_dir(&a)?, &[1, 2, 3]),
        Command::Spectrum(a) => criteria(&load_dir(&a)?, &[4, 5, 6]),
        Command::Modfit { args, field } => {
            let cfg = load_dir(&args)?;
            match field {
                Some(path) => fit_file(&cfg, &path),
                None => criteria(&cfg, &[7]),
            }
        }
        Command::Coercivity(a) => criteria(&load_dir(&a)?, &[8, 9]),
        Command::Evolve {
            common,
            eps,
            dt,
            t_end,
            perturb,
            seed,
            out,
        } => evolve(&common, eps, dt, t_end, perturb, seed, out),
        Command::VerifyAll(a) => {
            let cfg = load_dir(&a)?;
            let summary = run_all(&cfg)?;
            summary.criteria.iter().for_each(print_report);
            println!("overall: {}", if summary.pass { "PASS" } else { "FAIL" });
            write_json(&cfg.output_root().join("config.json"), &cfg)?;
            Ok(summary_code(&summary))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CONFIG_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() {
                CONFIG_ERROR
            } else {
                HARD_FAILURE
            })
        }
    }
}

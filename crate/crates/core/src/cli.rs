//! Command-line front end: `iontrap-bench {chain|compile|simulate|experiment|fit}`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::analysis::{
    bootstrap, fit_decay, fit_fringe, fit_gaussian, fit_linear, fit_power_law, to_json, write_results, Config, ConfigError, Dataset, DecayForm,
    FitError, FitResult, RunManifest, BOOTSTRAP_RESAMPLES,
};
use crate::chain::{self, IonSpecies, TrapConfig};
use crate::compiler::{compile, CircuitIR, CompileError};
use crate::engine::{EngineError, Simulator};
use crate::experiments::{run_experiment, ExperimentError, ExperimentKind, Setup};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Parser)]
#[command(name = "iontrap-bench", version, about = "Trapped-ion pulse-level simulator and characterization bench")]
pub struct Cli {
    /// Master seed; every shot stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium positions and normal modes of a linear chain.
    Chain {
        #[arg(long)]
        n: usize,
        /// Axial COM frequency, Hz.
        #[arg(long, default_value_t = crate::constants::TRAP_AXIAL_HZ)]
        fax: f64,
        /// Radial COM frequency, Hz.
        #[arg(long, default_value_t = crate::constants::TRAP_RADIAL_HZ)]
        frad: f64,
    },
    /// Lower a circuit file to a pulse schedule (JSON).
    Compile {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        machine: Option<PathBuf>,
    },
    /// Run a circuit and write per-shot records.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Overrides experiment.shots.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Run a characterization experiment.
    Experiment {
        #[arg(value_parser = parse_kind)]
        kind: ExperimentKind,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated sweep values replacing the default sweep.
        #[arg(long, value_delimiter = ',')]
        sweep: Vec<f64>,
    },
    /// Fit a model to a points.csv series.
    Fit {
        #[arg(long, value_enum)]
        model: FitModel,
        #[arg(long)]
        data: PathBuf,
        /// Series name; defaults to the first one in the file.
        #[arg(long)]
        series: Option<String>,
        /// Fringe frequency for the fringe model.
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        /// Add bootstrap errors from this many parametric resamples.
        #[arg(long, num_args = 0..=1, default_missing_value = "200")]
        bootstrap: Option<usize>,
    },
    /// Print every configuration key with its default.
    Schema,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Machine/experiment configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Noise configuration file, applied after --config.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// `key=value` overrides, applied last.
    #[arg(long = "set")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<(Config, Vec<String>), CliError> {
        let mut cfg = Config::default();
        let mut inputs = Vec::new();
        for p in [&self.config, &self.noise].into_iter().flatten() {
            cfg.overlay_file(p)?;
            inputs.push(p.display().to_string());
        }
        for s in &self.set {
            cfg.set_str(s)?;
        }
        Ok((cfg, inputs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Exponential,
    Rb,
    Geometric,
    Gaussian,
    Fringe,
    PowerLaw,
    Linear,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    ExperimentKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown experiment {s:?}; expected one of {}", names.join(", "))
    })
}

/// Runs the parsed command, inside a dedicated pool when `--threads` is set.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build().map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            std::fs::write(p, body).map_err(io_err(p))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Chain { n, fax, frad } => emit(out, &chain_csv(*n, *fax, *frad)?),
        Command::Compile { circuit, machine } => {
            let cfg = match machine {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            let text = std::fs::read_to_string(circuit).map_err(io_err(circuit))?;
            let schedule = compile(&CircuitIR::parse(&text)?, &cfg.machine())?;
            emit(out, &format!("{}\n", schedule.to_json()))
        }
        Command::Simulate { circuit, cfg, shots } => {
            let (cfg, mut inputs) = cfg.load()?;
            let text = std::fs::read_to_string(circuit).map_err(io_err(circuit))?;
            inputs.insert(0, circuit.display().to_string());
            let schedule = compile(&CircuitIR::parse(&text)?, &cfg.machine())?;
            let sim = Simulator::new(cfg.machine(), cfg.noise(), cfg.engine())?;
            let res = sim.run(&schedule, shots.unwrap_or(cfg.shots()), cli.seed, 0)?;
            match out {
                None => emit(None, &res.to_csv()),
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
                    let p = dir.join("shots.csv");
                    std::fs::write(&p, res.to_csv()).map_err(io_err(&p))?;
                    let summary = json!({
                        "n_qubits": res.n_qubits,
                        "shots": res.shots.len(),
                        "populations": res.populations(),
                        "population_errors": res.population_errors(),
                        "valid_fraction": res.valid_fraction(),
                    });
                    let p = dir.join("summary.json");
                    std::fs::write(&p, to_json(&summary)).map_err(io_err(&p))?;
                    let mut m = RunManifest::new(cli.seed, &cfg.digest(), inputs);
                    m.outputs = vec!["shots.csv".into(), "summary.json".into(), "manifest.json".into()];
                    let p = dir.join("manifest.json");
                    std::fs::write(&p, to_json(&m)).map_err(io_err(&p))
                }
            }
        }
        Command::Experiment { kind, cfg, sweep } => {
            let (cfg, inputs) = cfg.load()?;
            let setup = Setup::from_config(&cfg, cli.seed);
            let result = run_experiment(*kind, &setup, sweep)?;
            let summary = json!({
                "experiment": kind.name(),
                "seed": cli.seed,
                "config_digest": cfg.digest(),
                "intervals": "1 sigma statistical",
                "result": result.summary,
            });
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results").join(kind.name()));
            let series: Vec<(&str, &Dataset)> = result.series.iter().map(|(n, d)| (n.as_str(), d)).collect();
            let manifest = RunManifest::new(cli.seed, &cfg.digest(), inputs);
            write_results(&dir, &series, &summary, &manifest).map_err(io_err(&dir))?;
            Ok(())
        }
        Command::Fit { model, data, series, n, bootstrap: resamples } => {
            let text = std::fs::read_to_string(data).map_err(io_err(data))?;
            let ds = read_points(&text, series.as_deref())?;
            let fitter = |d: &Dataset| -> Result<FitResult, FitError> {
                match model {
                    FitModel::Exponential => fit_decay(d, DecayForm::Exponential),
                    FitModel::Rb => fit_decay(d, DecayForm::RbSurvival),
                    FitModel::Geometric => fit_decay(d, DecayForm::Geometric),
                    FitModel::Gaussian => fit_gaussian(d),
                    FitModel::Fringe => fit_fringe(d, *n),
                    FitModel::PowerLaw => fit_power_law(d),
                    FitModel::Linear => fit_linear(d),
                }
            };
            let mut fit = fitter(&ds)?;
            if let Some(r) = resamples {
                bootstrap(&ds, &mut fit, fitter, if *r == 0 { BOOTSTRAP_RESAMPLES } else { *r }, cli.seed);
            }
            emit(out, &to_json(&fit))
        }
        Command::Schema => emit(out, &crate::analysis::schema_table()),
    }
}

/// Positions as `ion_index,position_um`, a blank line, then modes as
/// `mode_index,freq_hz,direction`.
pub fn chain_csv(n: usize, fax: f64, frad: f64) -> Result<String, CliError> {
    let trap = TrapConfig::from_hz(fax, frad);
    let c = chain::equilibrium_positions(n, IonSpecies::calcium40(), trap).map_err(EngineError::from)?;
    let mut out = String::from("ion_index,position_um\n");
    for (i, x) in c.positions.iter().enumerate() {
        let _ = writeln!(out, "{i},{x:.16e}");
    }
    out.push_str("\nmode_index,freq_hz,direction\n");
    let axial = chain::axial_mode_spectrum(&c);
    let radial = chain::radial_mode_spectrum(&c).map_err(EngineError::from)?;
    let mut k = 0;
    for spec in [&axial, &radial] {
        for w in &spec.frequencies {
            let _ = writeln!(out, "{k},{:.16e},{}", w / (2.0 * std::f64::consts::PI), spec.direction);
            k += 1;
        }
    }
    Ok(out)
}

/// Reads one series of a `series,x,y,yerr,shots` file.
pub fn read_points(text: &str, series: Option<&str>) -> Result<Dataset, CliError> {
    let bad = |line: usize, m: &str| CliError::Usage(format!("points file line {line}: {m}"));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "series,x,y,yerr,shots" => {}
        _ => return Err(bad(1, "expected header series,x,y,yerr,shots")),
    }
    let mut want = series.map(str::to_string);
    let (mut x, mut y, mut e, mut shots) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(i + 1, "expected five fields"));
        }
        let name = want.get_or_insert_with(|| f[0].to_string());
        if f[0] != name {
            continue;
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        x.push(num(f[1])?);
        y.push(num(f[2])?);
        e.push(num(f[3])?);
        shots.push(f[4].trim().parse::<u64>().map_err(|_| bad(i + 1, "bad shot count"))?);
    }
    if x.is_empty() {
        return Err(CliError::Usage("no points for the requested series".into()));
    }
    let mut ds = Dataset::new(x, y, e)?;
    ds.shots = shots;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::points_csv;

    #[test]
    fn points_round_trip() {
        let d = Dataset::new(vec![0.0, 1.5], vec![0.25, 1.0 / 3.0], vec![0.1, 0.2]).unwrap();
        let mut d2 = d.clone();
        d2.y[0] = 9.0;
        let text = points_csv(&[("a", &d), ("b", &d2)]);
        let back = read_points(&text, Some("a")).unwrap();
        assert_eq!(back.x, d.x);
        assert_eq!(back.y, d.y);
        assert_eq!(read_points(&text, None).unwrap().y, d.y);
        assert_eq!(read_points(&text, Some("b")).unwrap().y[0], 9.0);
        assert!(read_points(&text, Some("c")).is_err());
    }

    #[test]
    fn chain_table_has_both_blocks() {
        let s = chain_csv(3, 1e6, 3e6).unwrap();
        assert!(s.starts_with("ion_index,position_um\n0,"));
        assert_eq!(s.lines().filter(|l| l.ends_with(",axial")).count(), 3);
        assert_eq!(s.lines().filter(|l| l.ends_with(",radial")).count(), 3);
    }

    #[test]
    fn parses_global_flags_after_subcommand() {
        let cli = Cli::try_parse_from(["iontrap-bench", "experiment", "rb", "--seed", "7", "--threads", "2", "--set", "experiment.shots=10"]).unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.threads, Some(2));
        assert!(matches!(cli.command, Command::Experiment { kind: ExperimentKind::Rb, .. }));
        assert!(Cli::try_parse_from(["iontrap-bench", "experiment", "nope"]).is_err());
    }
}

//! Command-line driver.

use crate::config::{ConfigError, ExperimentConfig, Preset};
use crate::farfield::FarFieldMatrix;
use crate::forward::{assemble_far_field_matrix, ForwardError};
use crate::geometry::{ParametricCurve, Point, ShapeKind};
use crate::imaging::{add_noise, apply_mask, evaluate_grid, ImagingError, Indicator, NoiseModel};
use crate::oracle::{disk_far_field_matrix, OracleError};
use crate::verify::{
    check_decay_slope_for, check_equivalence_chain, check_funk_hecke, check_operator_identity, CheckRecord,
    VerifyError,
};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

pub const THREADS_ENV: &str = "PLATE_ECHO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "plate-echo", version, about = "Clamped-cavity plate scattering and direct-sampling imaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file layered over the preset
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// overrides imaging.seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// overrides output.dir
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// star (default) or peanut
    #[arg(long, global = true)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the forward problem and write the far-field matrix
    Forward,
    /// Evaluate an imaging function from a far-field matrix
    Image {
        /// defaults to <out>/<output.matrix>
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Run the verification suite
    Verify,
    /// Write the disk far-field matrix from the mode solution
    Oracle,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("degenerate output: {0}")]
    Degenerate(String),
    #[error("{0} verification check(s) failed")]
    Verify(usize),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Degenerate(_) => 4,
            CliError::Verify(_) => 5,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<ForwardError> for CliError {
    fn from(e: ForwardError) -> Self {
        match e {
            ForwardError::NodeCount(_) | ForwardError::Wavenumber(_) | ForwardError::DirectionCount(_) => {
                CliError::Config(ConfigError::Invalid(e.to_string()))
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Domain | OracleError::Order { .. } => CliError::Config(ConfigError::Invalid(e.to_string())),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        CliError::Config(ConfigError::Invalid(e.to_string()))
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::Degenerate => CliError::Degenerate(e.to_string()),
            other => CliError::Config(ConfigError::Invalid(other.to_string())),
        }
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// Preset, then config file, then command-line overrides; validated.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let preset = cli.preset.unwrap_or_default();
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text, preset)?
        }
        None => ExperimentConfig::preset(preset),
    };
    if let Some(seed) = cli.seed {
        cfg.imaging.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn forward_matrix(cfg: &ExperimentConfig) -> Result<FarFieldMatrix, CliError> {
    let curve = cfg.curve()?;
    Ok(assemble_far_field_matrix(
        &curve,
        cfg.forward.k,
        cfg.forward.n_dirs,
        cfg.forward.quad_nodes,
    )?)
}

/// Writes the far-field matrix; returns its path and the identity record.
pub fn cmd_forward(cfg: &ExperimentConfig) -> Result<(PathBuf, CheckRecord), CliError> {
    let f = forward_matrix(cfg)?;
    let path = cfg.output.dir.join(&cfg.output.matrix);
    write_atomic(&path, f.to_text().as_bytes())?;
    Ok((path, check_operator_identity(&f, 1e-2).record()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageSummary {
    pub csv: PathBuf,
    pub pgm: Option<PathBuf>,
    pub argmax: Point,
    pub value: f64,
}

impl std::fmt::Display for ImageSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "image argmax_x={:.6} argmax_y={:.6} value={:.6e} csv={}",
            self.argmax[0],
            self.argmax[1],
            self.value,
            self.csv.display()
        )
    }
}

pub fn read_matrix(path: &Path, cfg: &ExperimentConfig) -> Result<FarFieldMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let f = FarFieldMatrix::from_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if f.n_dirs() != cfg.forward.n_dirs {
        return Err(CliError::Input(format!(
            "{} has N={} but the configuration expects {}",
            path.display(),
            f.n_dirs(),
            cfg.forward.n_dirs
        )));
    }
    if f.k != cfg.forward.k {
        return Err(CliError::Input(format!(
            "{} has k={} but the configuration expects {}",
            path.display(),
            f.k,
            cfg.forward.k
        )));
    }
    Ok(f)
}

/// Noise, then mask, then grid evaluation.
pub fn image_from_matrix(
    f: &FarFieldMatrix,
    cfg: &ExperimentConfig,
) -> Result<crate::imaging::ImagingGrid, CliError> {
    let im = &cfg.imaging;
    let noisy = add_noise(f, &NoiseModel::new(im.delta, im.seed)?);
    let masked = apply_mask(&noisy, &cfg.mask())?;
    Ok(evaluate_grid(&masked, &im.grid, im.rho, im.which)?)
}

pub fn cmd_image(cfg: &ExperimentConfig, matrix: Option<&Path>) -> Result<ImageSummary, CliError> {
    let default = cfg.output.dir.join(&cfg.output.matrix);
    let f = read_matrix(matrix.unwrap_or(&default), cfg)?;
    let grid = image_from_matrix(&f, cfg)?;
    let csv = cfg.output.dir.join(&cfg.output.grid_csv);
    write_atomic(&csv, grid.to_csv().as_bytes())?;
    let pgm = if cfg.output.grid_pgm.is_empty() {
        None
    } else {
        let path = cfg.output.dir.join(&cfg.output.grid_pgm);
        write_atomic(&path, &grid.to_pgm())?;
        Some(path)
    };
    let (_, argmax, value) = grid.argmax();
    Ok(ImageSummary { csv, pgm, argmax, value })
}

pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let radius = match cfg.shape.kind {
        ShapeKind::Circle => cfg.shape.params.first().copied().unwrap_or(1.0),
        _ => 1.0,
    };
    let f = disk_far_field_matrix(radius, cfg.forward.k, cfg.forward.n_dirs)?;
    let path = cfg.output.dir.join(&cfg.output.oracle_matrix);
    write_atomic(&path, f.to_text().as_bytes())?;
    Ok(path)
}

/// Uniform points in the imaging extent, seeded.
pub fn sample_points(cfg: &ExperimentConfig, count: usize) -> Vec<Point> {
    let g = &cfg.imaging.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.imaging.seed);
    (0..count)
        .map(|_| [rng.gen_range(g.x_min..=g.x_max), rng.gen_range(g.y_min..=g.y_max)])
        .collect()
}

fn relative_max_difference(a: &FarFieldMatrix, b: &FarFieldMatrix) -> f64 {
    let num = (&a.entries - &b.entries).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let den = b.entries.iter().map(|v| v.norm()).fold(0.0, f64::max);
    num / den
}

/// First positive zero of `J_0`.
pub const J0_FIRST_ZERO: f64 = 2.404825557695773;

/// The full suite. Records are returned whether or not they pass.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>, CliError> {
    let k = cfg.forward.k;
    let n = cfg.forward.n_dirs;
    let shape = cfg.shape.kind.name();
    let mut records = Vec::new();

    for (label, dist, tol) in [
        ("funk_hecke_coincident", 0.0, 1e-13),
        ("funk_hecke_j0_zero", J0_FIRST_ZERO / k, 1e-12),
        ("funk_hecke_kr10", 10.0 / k, 1e-10),
    ] {
        let x = [0.3, -0.2];
        let z = [x[0] + dist * 0.6, x[1] + dist * 0.8];
        let value = check_funk_hecke(k, x, z, n)?;
        records.push(CheckRecord::upper(label, "none", k, n, value, tol));
    }

    let oracle = disk_far_field_matrix(1.0, k, n)?;
    let disk = ParametricCurve::new(ShapeKind::Circle, &[1.0]).map_err(|e| CliError::Solver(e.to_string()))?;
    let disk_bie = assemble_far_field_matrix(&disk, k, n, cfg.forward.quad_nodes)?;
    records.push(CheckRecord::upper(
        "disk_oracle_agreement",
        "circle",
        k,
        n,
        relative_max_difference(&disk_bie, &oracle),
        1e-6,
    ));

    let oracle_identity = check_operator_identity(&oracle, 1e-6);
    records.push(CheckRecord {
        name: "operator_identity_oracle".into(),
        ..oracle_identity.record()
    });
    let f = forward_matrix(cfg)?;
    let bie_identity = check_operator_identity(&f, 1e-2);
    records.push(CheckRecord {
        name: "operator_identity_bie".into(),
        ..bie_identity.record()
    });

    let points = sample_points(cfg, cfg.verify.chain_points);
    records.push(CheckRecord::upper(
        "equivalence_chain_oracle",
        "circle",
        k,
        n,
        check_equivalence_chain(&oracle, &points),
        1e-6,
    ));
    records.push(CheckRecord::upper(
        "equivalence_chain_bie",
        shape,
        k,
        n,
        check_equivalence_chain(&f, &points),
        0.05,
    ));

    let curve = cfg.curve()?;
    let decay = assemble_far_field_matrix(&curve, k, cfg.verify.decay_dirs, cfg.forward.quad_nodes)?;
    let radii = cfg.decay_radii();
    for (which, rho) in [(Indicator::Ip, 1.0), (Indicator::Ip, 2.0), (Indicator::Norm, 1.0), (Indicator::Norm, 2.0)] {
        let slope = check_decay_slope_for(&decay, &curve, which, rho, &radii, cfg.verify.decay_samples)?;
        let expected = match which {
            Indicator::Ip => -rho,
            Indicator::Norm => -rho / 2.0,
        };
        records.push(CheckRecord::upper(
            &format!("decay_slope_{which}_rho{rho}"),
            shape,
            k,
            decay.n_dirs(),
            ((slope - expected) / expected).abs(),
            0.2,
        ));
    }
    Ok(records)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    // fails only if a pool already exists, which keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Forward => {
            let (path, record) = cmd_forward(&cfg)?;
            println!("{record}");
            println!("wrote {}", path.display());
        }
        Command::Image { matrix } => {
            let summary = cmd_image(&cfg, matrix.as_deref())?;
            println!("{summary}");
        }
        Command::Oracle => {
            let path = cmd_oracle(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Verify => {
            let records = verify_suite(&cfg)?;
            for r in &records {
                println!("{r}");
            }
            let failed = records.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(CliError::Verify(failed));
            }
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> ExitCode {
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

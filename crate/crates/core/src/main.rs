use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eomech::config::RunConfig;
use eomech::dynamics::FrequencyGrid;
use eomech::error::{Error, Result};
use eomech::output::{self, Format};
use eomech::params::derive;
use eomech::sweep::{self, Axis, Scale, SweepGrid};

#[derive(Parser)]
#[command(name = "eomech", version, about = "Electro-optomechanical entanglement source simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults to the reference device at C_om = 1.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct OmegaGrid {
    /// Half-span of the frequency grid in Hz.
    #[arg(long)]
    omega_span: Option<f64>,
    #[arg(long)]
    omega_points: Option<usize>,
}

#[derive(Args)]
struct MapArgs {
    /// Grid size as <nx>x<ny>.
    #[arg(long, default_value = "50x50")]
    grid: String,
    /// C_om axis range as <min>:<max>.
    #[arg(long, default_value = "0.1:60")]
    c_om_range: String,
    /// κ_e,c/κ_e,i axis range as <min>:<max>.
    #[arg(long, default_value = "1:1000")]
    ratio_range: String,
    /// Use linear instead of log axes.
    #[arg(long)]
    linear: bool,
    /// Thermal bath occupancy; defaults to the configured value.
    #[arg(long)]
    n_ba: Option<f64>,
}

#[derive(Args)]
struct Efficiency {
    /// Detection efficiency on both sides.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long)]
    eta_o: Option<f64>,
    #[arg(long)]
    eta_e: Option<f64>,
}

impl Efficiency {
    fn pair(&self) -> (f64, f64) {
        (self.eta_o.unwrap_or(self.eta), self.eta_e.unwrap_or(self.eta))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Output spectra u(ω), v(ω), w(ω).
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaGrid,
    },
    /// Entanglement of formation and purity over C_om × κ_e,c/κ_e,i.
    MapEf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Fidelity bound and maximal CHSH value with threshold contours.
    MapThresholds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        eff: Efficiency,
    },
    /// S(0, φ_e; π/2, φ_e + π/2) for a list of bath occupancies.
    ChshCurve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eff: Efficiency,
        /// Comma-separated bath occupancies.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1.67,5")]
        n_ba: Vec<f64>,
        #[arg(long, default_value_t = 361)]
        phi_points: usize,
    },
    /// Counting-rate budget; the configuration must contain a detectors block.
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        omega: OmegaGrid,
    },
    /// Level-set polylines of a map field.
    Contour {
        #[command(flatten)]
        common: Common,
        /// Grid JSON written by map-ef or map-thresholds; recomputed when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        field: String,
        #[arg(long)]
        level: f64,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        eff: Efficiency,
    },
}

enum Failure {
    Error(Error),
    UnstableEverywhere,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::UnstableEverywhere => 3,
        Failure::Error(e) => match e {
            Error::Config(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::InvalidParameter { .. }
            | Error::UnreachableTarget { .. } => 2,
            Error::Unstable { .. } => 3,
            _ => 4,
        },
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_path(p),
        None => {
            let mut cfg = RunConfig::reference();
            cfg.params = cfg.params.with_c_om(1.0)?;
            Ok(cfg)
        }
    }
}

fn parse_pair<T: std::str::FromStr>(text: &str, sep: char, what: &str) -> Result<(T, T)> {
    let bad = || Error::Config(format!("cannot parse {what} `{text}`"));
    let (a, b) = text.split_once(sep).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn axes(map: &MapArgs) -> Result<(Axis, Axis)> {
    let (nx, ny): (usize, usize) = parse_pair(&map.grid.to_lowercase(), 'x', "--grid")?;
    let (x0, x1): (f64, f64) = parse_pair(&map.c_om_range, ':', "--c-om-range")?;
    let (y0, y1): (f64, f64) = parse_pair(&map.ratio_range, ':', "--ratio-range")?;
    let scale = if map.linear { Scale::Linear } else { Scale::Log };
    Ok((Axis::new("c_om", scale, x0, x1, nx)?, Axis::new("readout_ratio", scale, y0, y1, ny)?))
}

fn omega_grid(omega: &OmegaGrid) -> Result<Option<FrequencyGrid>> {
    match (omega.omega_span, omega.omega_points) {
        (None, None) => Ok(None),
        (span, points) => {
            let span = span.ok_or_else(|| Error::Config("--omega-points needs --omega-span".into()))?;
            Ok(Some(FrequencyGrid::symmetric(std::f64::consts::TAU * span, points.unwrap_or(4001))?))
        }
    }
}

fn format_of(common: &Common) -> Format {
    match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn map_output(common: &Common, params: &serde_json::Value, grid: &SweepGrid) -> std::result::Result<String, Failure> {
    if grid.all_unstable() {
        return Err(Failure::UnstableEverywhere);
    }
    Ok(match format_of(common) {
        Format::Csv => output::grid_csv(params, grid),
        Format::Json => output::json_document(params, grid)?,
    })
}

fn run_map(
    cfg: &RunConfig,
    map: &MapArgs,
    eff: Option<&Efficiency>,
) -> std::result::Result<(SweepGrid, serde_json::Value), Failure> {
    let (x, y) = axes(map)?;
    let n_ba = match map.n_ba {
        Some(n) => n,
        None => derive(&cfg.params)?.n_ba,
    };
    let grid = match eff {
        None => sweep::map_entanglement(&cfg.params, x, y, n_ba)?,
        Some(e) => {
            let (eo, ee) = e.pair();
            sweep::map_thresholds(&cfg.params, x, y, n_ba, eo, ee)?
        }
    };
    let mut params = cfg.resolved_json()?;
    params["map"] = serde_json::json!({ "n_ba": n_ba, "eta": eff.map(|e| e.pair()) });
    Ok((grid, params))
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Spectrum { common, omega } => {
            let cfg = load(common.config.as_deref())?;
            let table = sweep::spectrum_table(&cfg.params, omega_grid(&omega)?.as_ref())?;
            let params = cfg.resolved_json()?;
            let text = match format_of(&common) {
                Format::Csv => output::spectrum_csv(&params, &table),
                Format::Json => output::json_document(&params, &table)?,
            };
            emit(&common, &text)?;
        }
        Command::MapEf { common, map } => {
            let cfg = load(common.config.as_deref())?;
            let (grid, params) = run_map(&cfg, &map, None)?;
            emit(&common, &map_output(&common, &params, &grid)?)?;
        }
        Command::MapThresholds { common, map, eff } => {
            let cfg = load(common.config.as_deref())?;
            let (grid, params) = run_map(&cfg, &map, Some(&eff))?;
            emit(&common, &map_output(&common, &params, &grid)?)?;
        }
        Command::ChshCurve { common, eff, n_ba, phi_points } => {
            let cfg = load(common.config.as_deref())?;
            let (eo, ee) = eff.pair();
            let phi = Axis::new("phi_e", Scale::Linear, 0.0, std::f64::consts::TAU, phi_points)?;
            let curves = sweep::chsh_curves(&cfg.params, &phi, &n_ba, eo, ee)?;
            let mut params = cfg.resolved_json()?;
            params["eta"] = serde_json::json!([eo, ee]);
            let text = match format_of(&common) {
                Format::Csv => output::chsh_csv(&params, &curves),
                Format::Json => output::json_document(&params, &curves)?,
            };
            emit(&common, &text)?;
        }
        Command::Rates { common, omega } => {
            let cfg = load(common.config.as_deref())?;
            let detectors = cfg
                .detectors
                .ok_or_else(|| Error::Config("rates needs a `detectors` block in the configuration".into()))?;
            let budget = sweep::rates(&cfg.params, &detectors, omega_grid(&omega)?.as_ref())?;
            let params = cfg.resolved_json()?;
            let text = match format_of(&common) {
                Format::Csv => output::rates_csv(&params, &budget),
                Format::Json => output::json_document(&params, &budget)?,
            };
            emit(&common, &text)?;
        }
        Command::Contour { common, input, field, level, map, eff } => {
            let (grid, mut params) = match &input {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                    let doc: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
                    let grid: SweepGrid = serde_json::from_value(doc["result"].clone()).map_err(Error::from)?;
                    (grid, doc["params"].clone())
                }
                None => {
                    let cfg = load(common.config.as_deref())?;
                    run_map(&cfg, &map, Some(&eff))?
                }
            };
            if grid.all_unstable() {
                return Err(Failure::UnstableEverywhere);
            }
            let lines = grid.contour(&field, level)?;
            params["contour"] = serde_json::json!({ "field": field, "level": level });
            let name = format!("{field}={}", output::format_float(level));
            let contours = std::collections::BTreeMap::from([(name, lines)]);
            let text = match format_of(&common) {
                Format::Csv => output::contours_csv(&params, &grid.x_axis.name, &grid.y_axis.name, &contours),
                Format::Json => output::json_document(&params, &contours)?,
            };
            emit(&common, &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::UnstableEverywhere => eprintln!("error: every grid cell is unstable"),
                Failure::Error(e) => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

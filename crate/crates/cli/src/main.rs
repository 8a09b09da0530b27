use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use fwm_core::config::{Format, SimulationConfig};
use fwm_core::presets::{preset, PRESET_NAMES};
use fwm_core::runner::{run, OutputFile, RunOutput};
use fwm_core::Error;

mod plot;

/// Reproduces the FWM spectral-filtering figures and runs custom configurations.
#[derive(Parser, Debug)]
#[command(name = "fwmsim", version)]
struct Cli {
    /// Figure preset to run.
    #[arg(long, value_parser = PRESET_NAMES, conflicts_with = "config", required_unless_present_any = ["config", "dump_preset"])]
    preset: Option<String>,

    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print the configuration of a preset and exit.
    #[arg(long, value_parser = PRESET_NAMES, conflicts_with_all = ["preset", "config"])]
    dump_preset: Option<String>,

    /// Output directory; falls back to output.directory, then ./fwmsim-out.
    #[arg(long, env = "FWMSIM_OUT_DIR")]
    out_dir: Option<PathBuf>,

    /// Output kinds, comma separated: csv, json, svg. Defaults to the
    /// configuration's output.formats.
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    format: Option<Vec<Format>>,

    /// Worker threads for spectra and sweeps.
    #[arg(long)]
    threads: Option<usize>,

    /// Accepted for interface stability; every computation is deterministic.
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, short)]
    verbose: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        "svg" => Ok(Format::Svg),
        _ => Err(format!("unknown format `{s}` (expected csv, json or svg)")),
    }
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Validation(_) => Failure::Config(e.to_string()),
            other => Failure::Numerical(format!("numerical error: {other}")),
        }
    }
}

fn load(cli: &Cli) -> Result<SimulationConfig, Failure> {
    if let Some(name) = &cli.preset {
        return preset(name).ok_or_else(|| Failure::Config(format!("unknown preset {name}")));
    }
    let path = cli.config.as_ref().expect("clap enforces --preset or --config");
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    SimulationConfig::from_toml(&text).map_err(Failure::from)
}

/// Writes files one by one and deletes them all if any write fails.
struct Writer {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, Failure> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn rollback(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn write_all(w: &mut Writer, out: &RunOutput, formats: &[Format]) -> Result<(), Failure> {
    if formats.contains(&Format::Csv) {
        for OutputFile { name, contents } in &out.csv {
            w.write(name, contents.as_bytes())?;
        }
    }
    if formats.contains(&Format::Json) {
        let m = out.manifest_file();
        w.write(&m.name, m.contents.as_bytes())?;
    }
    if formats.contains(&Format::Svg) {
        for spec in &out.plots {
            let svg = plot::render(spec).map_err(|e| Failure::Io(format!("cannot render {}: {e}", spec.name)))?;
            w.write(&format!("{}.svg", spec.name), svg.as_bytes())?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(name) = &cli.dump_preset {
        print!("{}", preset(name).expect("validated by clap").to_toml());
        return Ok(());
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let config = load(cli)?;
    let out = run(&config)?;
    let formats = cli.format.clone().unwrap_or_else(|| config.output.formats.clone());
    let dir = cli
        .out_dir
        .clone()
        .or_else(|| config.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fwmsim-out"));

    let mut w = Writer::new(&dir)?;
    if let Err(e) = write_all(&mut w, &out, &formats) {
        w.rollback();
        return Err(e);
    }
    for line in &out.summary {
        println!("{line}");
    }
    if cli.verbose {
        for p in &w.written {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fwmsim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

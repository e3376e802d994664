use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use regionbench_core::harness::{
    discover_cases, evaluate_corpus, gen_proxy_case, load_case, load_frame_dir, synthetic_source_video,
    write_case, EvalConfig, HarnessError, ProxyKind, ProxyParams, Rect,
};
use regionbench_core::validation::{read_pairs_csv, top_gap_filter, validate_pairs};

const EXIT_CASE_ERROR: u8 = 1;
const EXIT_CONFIG_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "regionbench", version, about = "Region-aware evaluation for edited videos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every case directory under a corpus root.
    Eval {
        #[arg(long)]
        cases: PathBuf,
        /// JSON config; all fields optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Overrides the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Build proxy cases with known best and worst contestants.
    GenProxy {
        /// Directory of source frames (*.png, name order).
        #[arg(long, required_unless_present = "synthetic")]
        source: Option<PathBuf>,
        /// Procedural source instead of --source, as WIDTHxHEIGHTxFRAMES.
        #[arg(long, conflicts_with = "source")]
        synthetic: Option<String>,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Expand ring width in pixels.
        #[arg(long)]
        margin: Option<usize>,
        /// Reveal rectangle as X,Y,W,H.
        #[arg(long)]
        rect: Option<String>,
    },
    /// Agreement and margin correlation from a pair file.
    Validate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep only the given fraction of largest-gap pairs per metric.
        #[arg(long)]
        top_gap: Option<f64>,
    },
    /// Structural validation of one case directory.
    CheckCase { dir: PathBuf },
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), HarnessError> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| HarnessError::Config(format!("expected WIDTHxHEIGHTxFRAMES, got {s:?}")))?;
    match parts[..] {
        [w, h, t] if w > 0 && h > 0 => Ok((w, h, t)),
        _ => Err(HarnessError::Config(format!("expected WIDTHxHEIGHTxFRAMES, got {s:?}"))),
    }
}

fn parse_rect(s: &str) -> Result<Rect, HarnessError> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| HarnessError::Config(format!("expected X,Y,W,H, got {s:?}")))?;
    match v[..] {
        [x, y, w, h] => Ok(Rect { x, y, w, h }),
        _ => Err(HarnessError::Config(format!("expected X,Y,W,H, got {s:?}"))),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Returns the process exit code for a completed command.
fn run(cli: Cli) -> Result<u8, HarnessError> {
    match cli.command {
        Command::Eval {
            cases,
            config,
            out,
            format,
            workers,
        } => {
            let mut cfg = match config {
                Some(p) => EvalConfig::load(&p).map_err(|e| match e {
                    HarnessError::Io { path, source } => HarnessError::Config(format!("{}: {source}", path.display())),
                    other => other,
                })?,
                None => EvalConfig::default(),
            };
            if let Some(w) = workers {
                cfg.workers = w;
            }
            cfg.validate()?;
            let paths = discover_cases(&cases)?;
            let report = evaluate_corpus(&paths, &cfg)?;
            let text = match format {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
            };
            write_file(&out, &text)?;
            let failed = report.failed_cases();
            for c in report.cases.iter().filter(|c| c.error.is_some()) {
                eprintln!("{}: {}", c.case_id, c.error.as_deref().unwrap_or_default());
            }
            println!("{} cases, {failed} failed -> {}", report.cases.len(), out.display());
            Ok(if failed > 0 { EXIT_CASE_ERROR } else { 0 })
        }
        Command::GenProxy {
            source,
            synthetic,
            kind,
            seed,
            out,
            margin,
            rect,
        } => {
            let kind: ProxyKind = kind.parse().map_err(HarnessError::Config)?;
            let frames = match (source, synthetic) {
                (Some(dir), _) => load_frame_dir(&dir)?,
                (None, Some(dims)) => {
                    let (w, h, t) = parse_dims(&dims)?;
                    synthetic_source_video(seed, w, h, t)
                }
                (None, None) => return Err(HarnessError::Config("--source or --synthetic is required".into())),
            };
            let params = ProxyParams {
                margin,
                rect: rect.as_deref().map(parse_rect).transpose()?,
                reveal_mask: None,
            };
            for case in gen_proxy_case(&frames, kind, &params, seed)? {
                let dir = out.join(&case.meta.case_id);
                write_case(&case, &dir)?;
                println!("{}", dir.display());
            }
            Ok(0)
        }
        Command::Validate { pairs, out, top_gap } => {
            let file = std::fs::File::open(&pairs).map_err(|e| HarnessError::Io {
                path: pairs.clone(),
                source: e,
            })?;
            let mut list = read_pairs_csv(file).map_err(|e| HarnessError::Case(e.to_string()))?;
            if let Some(f) = top_gap {
                if !(0.0..=1.0).contains(&f) || f == 0.0 {
                    return Err(HarnessError::Config("--top-gap must lie in (0, 1]".into()));
                }
                list = top_gap_filter(&list, f);
            }
            let summary = validate_pairs(&list).map_err(|e| HarnessError::Case(e.to_string()))?;
            let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            text.push('\n');
            write_file(&out, &text)?;
            println!("{} metrics, {} pairs -> {}", summary.len(), list.len(), out.display());
            Ok(0)
        }
        Command::CheckCase { dir } => {
            let case = load_case(&dir)?;
            let reveal: usize = case.masks.iter().map(|m| m.reveal.count()).sum();
            let expand: usize = case.masks.iter().map(|m| m.expand.count()).sum();
            println!(
                "{}: {} frames at {}x{}, reveal {reveal} px, expand {expand} px, cameras {}, objects {}",
                case.meta.case_id,
                case.frame_count(),
                case.width(),
                case.height(),
                if case.trajectories.has_cameras() { "yes" } else { "no" },
                case.trajectories.objects_gt.len(),
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                HarnessError::Config(_) => EXIT_CONFIG_ERROR,
                _ => EXIT_CASE_ERROR,
            })
        }
    }
}

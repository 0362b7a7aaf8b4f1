use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tactag::imprintsim::{
    eval_classification_observed, eval_insertion_observed, eval_refinement_observed,
    render_imprint, trial_rng, InsertionSpec, Perturbation, PerturbationRanges, RenderedImprint,
    SensorSpec,
};
use tactag::meshcloud::export_stl;
use tactag::persist::{
    load_library, read_mask_image, read_ply, save_library, write_mask_png, write_ply, LoadCheck,
};
use tactag::registration::{refine_pose, RefineOptions};
use tactag::shapemetrics::{classify, generate_library_with, LibraryConfig};
use tactag::{Error, PatternLibrary64};

#[derive(Parser)]
#[command(
    name = "tactag",
    version,
    about = "Tactile tag pattern libraries: generate, recognise, refine"
)]
struct Cli {
    /// Seed for generation and simulation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Library directory.
    #[arg(long, global = true, default_value = "library")]
    library: PathBuf,
    /// Pixel pitch of masks and the simulated sensor in mm; defaults to the library's.
    #[arg(long, global = true)]
    pitch: Option<f64>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
    /// Skip Hu recomputation and the dispersion check when loading.
    #[arg(long, global = true)]
    fast_check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pattern library.
    Generate(GenerateArgs),
    /// Write the STL, cloud and mask of one entry.
    Export(ExportArgs),
    /// Identify the pattern in an imprint mask.
    Classify {
        #[arg(long)]
        imprint: PathBuf,
    },
    /// Estimate the in-plane pose of a classified imprint.
    Refine {
        #[arg(long)]
        label: String,
        #[arg(long)]
        imprint_cloud: PathBuf,
        #[arg(long)]
        imprint_mask: PathBuf,
    },
    /// Render one simulated imprint.
    Simulate(SimulateArgs),
    /// Run an experiment and write a report.
    Evaluate {
        #[command(subcommand)]
        kind: EvalKind,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1095)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    divisions: usize,
    #[arg(long, default_value_t = 10)]
    n_min: usize,
    #[arg(long, default_value_t = 20)]
    n_max: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Output directory; defaults to --library.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Candidates tried per requested pattern before giving up.
    #[arg(long, default_value_t = 200)]
    attempts: usize,
    /// Name an entry, as INDEX=NAME. Repeatable.
    #[arg(long = "label", value_parser = parse_label)]
    labels: Vec<(usize, String)>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    label: String,
    #[arg(long)]
    stl: Option<PathBuf>,
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SensorArgs {
    /// Depth noise standard deviation in mm.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Fraction of cloud points dropped.
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    label: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    y: f64,
    /// Rotation in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta: f64,
    #[command(flatten)]
    sensor: SensorArgs,
    #[arg(long, default_value = "imprint.png")]
    mask: PathBuf,
    #[arg(long, default_value = "imprint.ply")]
    cloud: PathBuf,
}

#[derive(Subcommand)]
enum EvalKind {
    /// Classify imprints of randomly chosen entries under random perturbations.
    Classification {
        /// Number of entries drawn from the library.
        #[arg(long, default_value_t = 30)]
        patterns: usize,
        /// Imprints per entry.
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[command(flatten)]
        sensor: SensorArgs,
        #[arg(long, default_value = "eval-classification")]
        out: PathBuf,
    },
    /// Recover pure Y offsets of one entry.
    Refinement {
        /// Entry label; defaults to the first entry.
        #[arg(long)]
        label: Option<String>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            default_value = "-3,-2,-1,1,2,3"
        )]
        offsets: Vec<f64>,
        #[command(flatten)]
        sensor: SensorArgs,
        #[arg(long, default_value = "eval-refinement")]
        out: PathBuf,
    },
    /// Peg-in-hole Monte Carlo.
    Insertion {
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 31.6)]
        hole: f64,
        #[arg(long, default_value_t = 30.2)]
        peg: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        no_refine: bool,
        #[command(flatten)]
        sensor: SensorArgs,
        #[arg(long, default_value = "eval-insertion")]
        out: PathBuf,
    },
}

fn parse_label(s: &str) -> Result<(usize, String), String> {
    let (i, name) = s.split_once('=').ok_or("expected INDEX=NAME")?;
    let i = i.parse().map_err(|_| format!("bad index {i:?}"))?;
    if name.is_empty() {
        return Err("empty label".into());
    }
    Ok((i, name.to_owned()))
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => 1,
            e if e.is_numerical() => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

struct Ctx {
    seed: u64,
    library: PathBuf,
    pitch: Option<f64>,
    quiet: bool,
    check: LoadCheck,
}

impl Ctx {
    fn load(&self) -> CliResult<PatternLibrary64> {
        let t = Instant::now();
        let lib = load_library(&self.library, self.check)?;
        self.note(format!(
            "loaded {} entries in {:.2?}",
            lib.len(),
            t.elapsed()
        ));
        Ok(lib)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn pitch(&self, lib: &PatternLibrary64) -> f64 {
        self.pitch.unwrap_or(lib.config.pitch_mm)
    }

    fn sensor(&self, lib: &PatternLibrary64, args: &SensorArgs) -> SensorSpec<f64> {
        SensorSpec {
            pitch: self.pitch(lib),
            depth_mm: lib.config.depth_mm,
            depth_noise_sigma: args.noise,
            dropout_fraction: args.dropout,
            ..SensorSpec::default()
        }
    }
}

fn index_of(lib: &PatternLibrary64, label: Option<&str>) -> CliResult<usize> {
    match label {
        None if lib.is_empty() => Err(Error::EmptyLibrary.into()),
        None => Ok(0),
        Some(l) => lib
            .entries
            .iter()
            .position(|e| e.label == l)
            .ok_or_else(|| Error::UnknownLabel(l.to_owned()).into()),
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    })
}

/// Runs an experiment while collecting every rendered imprint, then writes
/// them as `trial_{i:04}.png/.ply` under `out`.
fn with_emitted<R>(
    out: &Path,
    run: impl FnOnce(&(dyn Fn(usize, &RenderedImprint<f64>) + Sync)) -> tactag::Result<R>,
) -> CliResult<R> {
    fs::create_dir_all(out).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", out.display()),
    })?;
    let shots = Mutex::new(Vec::new());
    let result = run(&|i, shot: &RenderedImprint<f64>| {
        shots.lock().unwrap().push((i, shot.clone()));
    })?;
    let mut shots = shots.into_inner().unwrap();
    shots.sort_by_key(|s| s.0);
    for (i, shot) in &shots {
        write_mask_png(&shot.mask, out.join(format!("trial_{i:04}.png")))?;
        write_ply(&shot.cloud, out.join(format!("trial_{i:04}.ply")))?;
    }
    Ok(result)
}

fn generate(ctx: &Ctx, a: GenerateArgs) -> CliResult {
    let config = LibraryConfig {
        divisions: a.divisions,
        extent: a.divisions as f64,
        n_min: a.n_min,
        n_max: a.n_max,
        alpha: a.alpha,
        seed: ctx.seed,
        pitch_mm: ctx.pitch.unwrap_or(0.05),
        ..LibraryConfig::default()
    };
    let t = Instant::now();
    let mut last = 0;
    let mut lib = generate_library_with(config, a.count, a.attempts, |p| {
        if p.admitted >= last + 100 {
            last = p.admitted;
            ctx.note(format!(
                "{} / {} admitted after {} candidates",
                p.admitted, a.count, p.attempts
            ));
        }
    })?;
    for (i, name) in a.labels {
        lib.set_label(i, name)?;
    }
    let out = a.out.as_deref().unwrap_or(&ctx.library);
    save_library(&lib, out)?;
    let min = lib.min_dispersion().map(|d| d.0).unwrap_or(f64::INFINITY);
    println!(
        "generated {} patterns in {:.1?}; min pairwise distance {min:.4}; saved to {}",
        lib.len(),
        t.elapsed(),
        out.display()
    );
    Ok(())
}

fn export(ctx: &Ctx, a: ExportArgs) -> CliResult {
    let lib = ctx.load()?;
    let e = lib.entry(&a.label)?;
    if let Some(p) = &a.stl {
        export_stl(&e.mesh, p)?;
    }
    if let Some(p) = &a.cloud {
        write_ply(&e.cloud, p)?;
    }
    if let Some(p) = &a.mask {
        write_mask_png(&e.mask, p)?;
    }
    println!(
        "{}: {} triangles, {} faces, {} cloud points",
        e.label,
        e.pattern.n(),
        e.mesh.faces.len(),
        e.cloud.len()
    );
    Ok(())
}

fn classify_cmd(ctx: &Ctx, imprint: &Path) -> CliResult {
    let lib = ctx.load()?;
    let mask = read_mask_image(imprint, ctx.pitch(&lib), None)?;
    let t = Instant::now();
    let r = classify(&mask, &lib)?;
    let ms = t.elapsed().as_secs_f64() * 1e3;
    let margin = r
        .runner_up_margin
        .map_or("n/a".to_owned(), |m| format!("{m:.4}"));
    println!(
        "label {}\nloss {:.4}\nmargin {margin}\nelapsed_ms {ms:.1}",
        r.label, r.loss
    );
    Ok(())
}

fn refine_cmd(ctx: &Ctx, label: &str, cloud: &Path, mask: &Path) -> CliResult {
    let lib = ctx.load()?;
    let entry = lib.entry(label)?;
    let cloud = read_ply(cloud)?;
    let mask = read_mask_image(mask, ctx.pitch(&lib), None)?;
    let r = refine_pose(&cloud, &mask, entry, &RefineOptions::default())?;
    println!(
        "y_ref {:.4}\ntheta_z {:.4}\nrmse {:.4}\nconverged {}",
        r.y_ref, r.theta_z, r.residual_rmse, r.converged
    );
    Ok(())
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> CliResult {
    let lib = ctx.load()?;
    let index = index_of(&lib, Some(&a.label))?;
    let sensor = ctx.sensor(&lib, &a.sensor);
    let pert = Perturbation::new(a.x, a.y, a.theta);
    let mut rng = trial_rng(ctx.seed, 0);
    let shot = render_imprint(&lib, index, &pert, &sensor, &mut rng)?;
    write_mask_png(&shot.mask, &a.mask)?;
    write_ply(&shot.cloud, &a.cloud)?;
    println!(
        "{}x{} mask with {} pixels, {} cloud points{}",
        shot.mask.width,
        shot.mask.height,
        shot.mask.count(),
        shot.cloud.len(),
        if shot.partial {
            " (partial capture)"
        } else {
            ""
        }
    );
    Ok(())
}

fn evaluate(ctx: &Ctx, kind: EvalKind) -> CliResult {
    let lib = ctx.load()?;
    let ranges = PerturbationRanges::default();
    let options = RefineOptions::default();
    match kind {
        EvalKind::Classification {
            patterns,
            trials,
            sensor,
            out,
        } => {
            let sensor = ctx.sensor(&lib, &sensor);
            let report = with_emitted(&out, |obs| {
                eval_classification_observed(
                    &lib, patterns, trials, &sensor, &ranges, ctx.seed, obs,
                )
            })?;
            println!(
                "{:>5} {:>10} {:>10} {:>7} {:>7}",
                "trial", "expected", "predicted", "loss", "margin"
            );
            for (i, t) in report.trials.iter().enumerate() {
                let margin = t.margin.map_or("n/a".to_owned(), |m| format!("{m:.3}"));
                println!(
                    "{i:>5} {:>10} {:>10} {:>7.3} {margin:>7}",
                    t.expected, t.predicted, t.loss
                );
            }
            println!(
                "correct {}/{} ({:.1}%), mean {:.1} ms",
                report.correct,
                report.total,
                100.0 * report.accuracy(),
                report.mean_ms
            );
            write_json(
                &out.join("report.json"),
                &json!({
                    "kind": "classification", "seed": ctx.seed, "sensor": sensor, "report": report,
                }),
            )?;
        }
        EvalKind::Refinement {
            label,
            offsets,
            sensor,
            out,
        } => {
            let index = index_of(&lib, label.as_deref())?;
            let sensor = ctx.sensor(&lib, &sensor);
            let rows = with_emitted(&out, |obs| {
                eval_refinement_observed(&lib, index, &offsets, &sensor, &options, ctx.seed, obs)
            })?;
            println!(
                "{:>7} {:>8} {:>8} {:>8} {:>7} {:>7}",
                "offset", "y_ref", "theta", "error", "err%", "rmse"
            );
            for r in &rows {
                println!(
                    "{:>7.2} {:>8.3} {:>8.3} {:>8.3} {:>7.2} {:>7.3}",
                    r.offset, r.y_ref, r.theta_z, r.error_mm, r.error_pct, r.rmse
                );
            }
            write_json(
                &out.join("report.json"),
                &json!({
                    "kind": "refinement", "seed": ctx.seed, "label": lib.entries[index].label,
                    "sensor": sensor, "rows": rows,
                }),
            )?;
        }
        EvalKind::Insertion {
            label,
            hole,
            peg,
            trials,
            no_refine,
            sensor,
            out,
        } => {
            let index = index_of(&lib, label.as_deref())?;
            let sensor = ctx.sensor(&lib, &sensor);
            let spec = InsertionSpec::new(peg, hole)?;
            let report = with_emitted(&out, |obs| {
                eval_insertion_observed(
                    &lib, index, &spec, trials, !no_refine, &sensor, &ranges, &options, ctx.seed,
                    obs,
                )
            })?;
            println!(
                "{:>5} {:>8} {:>8} {:>8} {:>7}",
                "trial", "y", "y_ref", "resid", "success"
            );
            for (i, t) in report.trials.iter().enumerate() {
                let y_ref = t.y_ref.map_or("-".to_owned(), |v| format!("{v:.3}"));
                println!(
                    "{i:>5} {:>8.3} {y_ref:>8} {:>8.3} {:>7}",
                    t.perturbation.y, t.residual.y, t.success
                );
            }
            println!(
                "hole {hole} mm, refinement {}: {}/{} ({:.0}%)",
                if no_refine { "off" } else { "on" },
                report.successes,
                report.trials.len(),
                100.0 * report.rate()
            );
            write_json(
                &out.join("report.json"),
                &json!({
                    "kind": "insertion", "seed": ctx.seed, "label": lib.entries[index].label,
                    "spec": spec, "sensor": sensor, "report": report,
                }),
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let ctx = Ctx {
        seed: cli.seed,
        library: cli.library,
        pitch: cli.pitch,
        quiet: cli.quiet,
        check: if cli.fast_check {
            LoadCheck::Fast
        } else {
            LoadCheck::Strict
        },
    };
    if ctx.pitch.is_some_and(|p| p.is_nan() || p <= 0.0) {
        return Err(Error::InvalidArgument("--pitch must be positive".into()).into());
    }
    match cli.command {
        Command::Generate(a) => generate(&ctx, a),
        Command::Export(a) => export(&ctx, a),
        Command::Classify { imprint } => classify_cmd(&ctx, &imprint),
        Command::Refine {
            label,
            imprint_cloud,
            imprint_mask,
        } => refine_cmd(&ctx, &label, &imprint_cloud, &imprint_mask),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Evaluate { kind } => evaluate(&ctx, kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

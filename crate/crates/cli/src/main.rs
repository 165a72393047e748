use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narrascope::cluster::{cluster_embedding, ClusterInput};
use narrascope::contingency::{build_table, TableMode};
use narrascope::ingest::{
    load_beats, marker_boundaries, parse_offsets, FormatProfile, SceneUnit, UnitsDocument,
};
use narrascope::montecarlo::{
    format_table, repeated_runs, summarize_table, Execution, RandomizationReport,
    DEFAULT_THRESHOLD, DEFAULT_TRIALS,
};
use narrascope::report::{
    analyze_batch, analyze_units, parse_script, render_dendrogram_dot, render_dendrogram_svg,
    render_factor_svg, write_atomic, AnalysisBundle, AnalysisConfig, LengthMeasure, ScriptIdentity,
    CONFIG_DIR_ENV,
};
use narrascope::{Error, Result};

#[derive(Parser)]
#[command(
    name = "narrascope",
    version,
    about = "Narrative structure of film and TV scripts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and tokenize a script into a units document.
    Parse(ParseArgs),
    /// Build the table, embedding, hierarchy and style profile.
    Analyze(AnalyzeArgs),
    /// Export the hierarchy of a bundle and cut it into segments.
    Cluster(ClusterArgs),
    /// Randomization test of the style attributes.
    Test(TestArgs),
    /// Write SVG (and DOT) plots of a bundle.
    Render(RenderArgs),
    /// Analyze and test every `*.txt` script in a directory.
    Batch(BatchArgs),
}

#[derive(Args)]
struct ProfileArgs {
    /// Shipped profile (imsdb, twiztv), a name found as `<name>.toml` in the
    /// config directory, or a path to a TOML profile.
    #[arg(long, default_value = "imsdb")]
    profile: String,
    /// Directory searched for named profiles.
    #[arg(long, env = CONFIG_DIR_ENV)]
    config_dir: Option<PathBuf>,
}

impl ProfileArgs {
    fn resolve(&self) -> Result<FormatProfile> {
        FormatProfile::resolve(&self.profile, self.config_dir.as_deref())
    }
}

#[derive(Args)]
struct BeatArgs {
    /// Split scene N (1-based) into beats instead of analyzing all scenes.
    #[arg(long)]
    scene: Option<usize>,
    /// Sidecar file of byte offsets into the scene body, one per line.
    #[arg(long, requires = "scene", conflicts_with = "beat_marker")]
    beats: Option<PathBuf>,
    /// Line separating beats inside the scene body. Defaults to the
    /// profile's beat marker.
    #[arg(long, requires = "scene")]
    beat_marker: Option<String>,
}

#[derive(Args)]
struct ParseArgs {
    script: PathBuf,
    #[command(flatten)]
    profile: ProfileArgs,
    #[command(flatten)]
    beats: BeatArgs,
    /// Leave heading lines out of the tokens.
    #[arg(long)]
    no_headings: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Presence,
    Frequency,
}

#[derive(Clone, Copy, ValueEnum)]
enum LengthArg {
    Tokens,
    DistinctWords,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputArg {
    Correlations,
    Projections,
}

impl From<InputArg> for ClusterInput {
    fn from(a: InputArg) -> Self {
        match a {
            InputArg::Correlations => ClusterInput::Correlations,
            InputArg::Projections => ClusterInput::Projections,
        }
    }
}

#[derive(Args)]
struct AnalysisArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, value_enum, default_value = "presence")]
    mode: ModeArg,
    /// Leave heading lines out of the tokens.
    #[arg(long)]
    no_headings: bool,
    /// How unit lengths are measured for tempo and rhythm.
    #[arg(long, value_enum, default_value = "tokens")]
    length: LengthArg,
    /// Vectors the hierarchy is built from.
    #[arg(long, value_enum, default_value = "correlations")]
    cluster_input: InputArg,
    /// Number of most frequent words kept in the summary.
    #[arg(long, default_value_t = 20)]
    top_words: usize,
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig> {
        Ok(AnalysisConfig {
            profile: self.profile.resolve()?,
            mode: match self.mode {
                ModeArg::Presence => TableMode::Presence,
                ModeArg::Frequency => TableMode::Frequency,
            },
            include_headings: !self.no_headings,
            length_measure: match self.length {
                LengthArg::Tokens => LengthMeasure::Tokens,
                LengthArg::DistinctWords => LengthMeasure::DistinctWords,
            },
            cluster_input: self.cluster_input.into(),
            top_words: self.top_words,
        })
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Script text, or a units JSON document from `parse`.
    input: PathBuf,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    beats: BeatArgs,
    /// Also write the pruned contingency table as JSON.
    #[arg(long)]
    table_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    bundle: PathBuf,
    /// Number of contiguous segments to cut the sequence into.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Recluster from these vectors instead of using the stored hierarchy.
    #[arg(long, value_enum)]
    input: Option<InputArg>,
    /// Dendrogram JSON output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Newick output.
    #[arg(long)]
    newick: Option<PathBuf>,
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads for trials; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Run trials on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl ExecArgs {
    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel {
                threads: self.threads,
            }
        }
    }
}

#[derive(Args)]
struct TestArgs {
    bundle: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Percentage of trials a real value must lie on one side of.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    exec: ExecArgs,
    /// Repeat the whole test this many times with seeds seed, seed+1, ...
    #[arg(long)]
    repeat: Option<usize>,
    /// Report JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeated-run summary JSON output.
    #[arg(long, requires = "repeat")]
    repeat_out: Option<PathBuf>,
    /// Store the report in the bundle file.
    #[arg(long)]
    update: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    Dendrogram,
    Factors,
}

#[derive(Args)]
struct RenderArgs {
    bundle: PathBuf,
    #[arg(long, value_enum, default_value = "dendrogram")]
    plot: PlotArg,
    /// Factor pair for the factor plot, 1-based.
    #[arg(long, default_value = "1,2", value_parser = parse_axes)]
    axes: (usize, usize),
    /// Output directory; defaults to the bundle's directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_axes(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two factors like 1,2")?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

#[derive(Args)]
struct BatchArgs {
    dir: PathBuf,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    exec: ExecArgs,
    /// Directory for bundles and the significance table.
    #[arg(long)]
    out_dir: PathBuf,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

/// Units of the script, or the beats of one scene when requested. Beats are
/// tokenized from their own text; the scene heading is not counted.
fn select_units(
    units: Vec<SceneUnit>,
    beats: &BeatArgs,
    profile: &FormatProfile,
) -> Result<Vec<SceneUnit>> {
    let Some(n) = beats.scene else {
        return Ok(units);
    };
    let count = units.len();
    let mut scene = units.into_iter().find(|u| u.index == n).ok_or_else(|| {
        Error::InvalidBoundaries(format!(
            "scene {n} not found; the script has {count} scenes"
        ))
    })?;
    let offsets = if let Some(path) = &beats.beats {
        parse_offsets(&fs::read_to_string(path)?)?
    } else if let Some(marker) = beats.beat_marker.as_ref().or(profile.beat_marker.as_ref()) {
        let (body, offsets) = marker_boundaries(&scene.body, marker);
        scene.body = body;
        offsets
    } else {
        Vec::new()
    };
    load_beats(&scene, &offsets)
}

fn cmd_parse(args: &ParseArgs) -> Result<()> {
    let text = fs::read_to_string(&args.script)?;
    let profile = args.profile.resolve()?;
    let config = AnalysisConfig {
        profile: profile.clone(),
        include_headings: !args.no_headings,
        ..AnalysisConfig::default()
    };
    let units = select_units(parse_script(&text, &config)?, &args.beats, &profile)?;
    let doc = UnitsDocument::new(file_name(&args.script), profile.name, units);
    emit(
        args.out.as_deref(),
        &with_newline(serde_json::to_string_pretty(&doc)?),
    )
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let config = args.analysis.config()?;
    let bytes = fs::read(&args.input)?;
    let identity = ScriptIdentity::of(file_name(&args.input), &bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::DegenerateInput(format!("input is not UTF-8: {e}")))?;
    let is_units = args.input.extension().is_some_and(|x| x == "json");
    let units = if is_units {
        UnitsDocument::from_json(&text)?.units
    } else {
        parse_script(&text, &config)?
    };
    let units = select_units(units, &args.beats, &config.profile)?;
    let bundle = analyze_units(identity, &units, &config)?;
    if let Some(path) = &args.table_out {
        let (table, _) = narrascope::contingency::prune(&build_table(&units, config.mode)?)?;
        write_atomic(path, with_newline(table.to_json()?).as_bytes())?;
    }
    log::info!(
        "{} units, vocabulary {}, {} factors",
        bundle.table.n_units,
        bundle.table.vocabulary_size,
        bundle.embedding.n_factors()
    );
    emit(args.out.as_deref(), &with_newline(bundle.to_json()?))
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let bundle = AnalysisBundle::load(&args.bundle)?;
    let dendrogram = match args.input {
        Some(input) => cluster_embedding(&bundle.embedding, input.into())?,
        None => bundle.dendrogram.clone(),
    };
    let segments = dendrogram.cut(args.k)?;
    if let Some(path) = &args.json {
        write_atomic(path, with_newline(dendrogram.to_json()?).as_bytes())?;
    }
    if let Some(path) = &args.newick {
        write_atomic(path, with_newline(dendrogram.to_newick()).as_bytes())?;
    }
    let mut out = String::new();
    for (a, b) in segments {
        let (la, lb) = (dendrogram.labels[a - 1], dendrogram.labels[b - 1]);
        let _ = writeln!(out, "{la}-{lb}");
    }
    print!("{out}");
    Ok(())
}

fn report_text(report: &RandomizationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} trials, seed {}, threshold {}%",
        report.n_trials, report.seed, report.threshold
    );
    let _ = writeln!(
        out,
        "attr  {:<22} {:>14} {:>7} {:>7}  direction",
        "name", "real", "<=%", ">=%"
    );
    for a in &report.attributes {
        let _ = writeln!(
            out,
            "{:>4}  {:<22} {:>14.6} {:>7.1} {:>7.1}  {}",
            a.attribute,
            a.name,
            a.real,
            100.0 * a.frac_le,
            100.0 * a.frac_ge,
            a.direction.symbol()
        );
    }
    out
}

fn cmd_test(args: &TestArgs) -> Result<()> {
    let mut bundle = AnalysisBundle::load(&args.bundle)?;
    let exec = args.exec.execution();
    let report = bundle
        .randomize(args.trials, args.seed, args.threshold, exec)?
        .clone();
    if let Some(path) = &args.out {
        write_atomic(
            path,
            with_newline(serde_json::to_string_pretty(&report)?).as_bytes(),
        )?;
    }
    print!("{}", report_text(&report));
    if let Some(runs) = args.repeat {
        let inputs = bundle.style_inputs()?;
        let rr = repeated_runs(&inputs, args.trials, args.seed, runs, args.threshold, exec)?;
        println!("\n{runs} runs: share of runs reaching the threshold");
        for a in 0..rr.share_le.len() {
            println!(
                "{:>4}  <= {:>5.1}%   >= {:>5.1}%",
                a + 1,
                100.0 * rr.share_le[a],
                100.0 * rr.share_ge[a]
            );
        }
        if let Some(path) = &args.repeat_out {
            write_atomic(
                path,
                with_newline(serde_json::to_string_pretty(&rr)?).as_bytes(),
            )?;
        }
    }
    if args.update {
        write_atomic(&args.bundle, with_newline(bundle.to_json()?).as_bytes())?;
    }
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let bundle = AnalysisBundle::load(&args.bundle)?;
    let dir = match &args.out_dir {
        Some(d) => d.clone(),
        None => args
            .bundle
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    fs::create_dir_all(&dir)?;
    let stem = args.bundle.file_stem().map_or_else(
        || "bundle".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let mut written = Vec::new();
    match args.plot {
        PlotArg::Dendrogram => {
            let svg = dir.join(format!("{stem}.dendrogram.svg"));
            write_atomic(&svg, render_dendrogram_svg(&bundle.dendrogram).as_bytes())?;
            let dot = dir.join(format!("{stem}.dendrogram.dot"));
            write_atomic(&dot, render_dendrogram_dot(&bundle.dendrogram).as_bytes())?;
            written.extend([svg, dot]);
        }
        PlotArg::Factors => {
            let (a, b) = args.axes;
            let svg = dir.join(format!("{stem}.factors-{a}-{b}.svg"));
            write_atomic(
                &svg,
                render_factor_svg(&bundle.embedding, args.axes)?.as_bytes(),
            )?;
            written.push(svg);
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_batch(args: &BatchArgs) -> Result<()> {
    let config = args.analysis.config()?;
    fs::create_dir_all(&args.out_dir)?;
    let results = analyze_batch(
        &args.dir,
        &config,
        args.trials,
        args.seed,
        args.threshold,
        args.exec.execution(),
    )?;
    if results.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "no *.txt scripts in {}",
            args.dir.display()
        )));
    }
    let mut reports = Vec::new();
    let mut first_error = None;
    for (name, result) in results {
        match result {
            Ok(bundle) => {
                let path = args.out_dir.join(format!("{name}.bundle.json"));
                write_atomic(&path, with_newline(bundle.to_json()?).as_bytes())?;
                if let Some(r) = bundle.randomization {
                    reports.push((name, r));
                }
            }
            Err(e) => {
                eprintln!("{name}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    let rows = summarize_table(&reports, args.threshold);
    let table = format_table(&rows);
    write_atomic(
        &args.out_dir.join("significance.json"),
        with_newline(serde_json::to_string_pretty(&rows)?).as_bytes(),
    )?;
    write_atomic(&args.out_dir.join("significance.txt"), table.as_bytes())?;
    print!("{table}");
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Test(a) => cmd_test(a),
        Command::Render(a) => cmd_render(a),
        Command::Batch(a) => cmd_batch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end for the hierarchical community detection
//! library: sample graphs, fit hierarchies, score them, and run the
//! batch sweeps. Every command is deterministic given its seed, and
//! exit codes separate bad input (1) from failed I/O (2).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use hcd::experiments::{
    fit_graph, merges_from_text, merges_to_text, rows_to_csv, run_phase_diagram, run_robustness,
    scaled_ladder_params, score_fit, thresholds_table, write_text, ExperimentError, FitOutcome,
    Method, PhaseDiagramConfig, RobustnessConfig, DEFAULT_MIN_SPLIT,
};
use hcd::generator::{sample_hsbm_sized, NoiseKind, SizeMode};
use hcd::linkage::tree_from_dendrogram;
use hcd::model::ModelError;
use hcd::{ClusterTree, Graph, HsbmParams, Partition};

/// A failure with the exit code the shell should see: 1 for anything
/// wrong with the input, 2 for a filesystem operation that failed.
enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Model(m) => CliError::Validation(m.to_string()),
            io @ ExperimentError::Io { .. } => CliError::Io(io.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hcd",
    version,
    about = "Hierarchical community detection: generate, fit, score, and sweep"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a graph from a balanced hierarchical block model.
    Generate(GenerateArgs),
    /// Recover a hierarchy from an edge list.
    Fit(FitArgs),
    /// Score fitted labels and merges against a planted truth.
    Score(ScoreArgs),
    /// Print divergences and feasibility flags for a rate ladder.
    Thresholds(ThresholdsArgs),
    /// Sweep recovery accuracy over the two interior rates.
    PhaseDiagram(PhaseArgs),
    /// Sweep linkage stability against label corruption.
    Robustness(RobustnessArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Tree depth d.
    #[arg(long)]
    depth: usize,
    /// Comma-separated rate ladder a0,...,ad; probabilities are a·ln(n)/n.
    #[arg(long)]
    levels: String,
    /// Number of nodes.
    #[arg(long)]
    nodes: usize,
    /// Children per tree node.
    #[arg(long, default_value_t = 2)]
    arity: usize,
    /// multinomial (sizes drawn from the prior) or fixed (deterministic).
    #[arg(long, default_value = "multinomial")]
    size_mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for edges.tsv, truth.tsv and params.tsv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Edge list file, one `i<TAB>j` pair per line.
    #[arg(long)]
    edges: PathBuf,
    /// Node count, for graphs whose highest ids are isolated.
    #[arg(long)]
    nodes: Option<usize>,
    /// bottom-up, top-down, or both.
    #[arg(long, default_value = "both")]
    method: String,
    /// Smallest part the splitter keeps splitting.
    #[arg(long, default_value_t = DEFAULT_MIN_SPLIT)]
    min_split: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for pred_*.tsv, merges_*.tsv and dendrogram_*.nwk.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Planted labels, one per line.
    #[arg(long)]
    truth: PathBuf,
    /// Planted parameters in tree-text form, for the truth tree.
    #[arg(long)]
    params: PathBuf,
    /// Fitted labels, one per line.
    #[arg(long)]
    pred: PathBuf,
    /// Fitted merge log, one `left<TAB>right<TAB>similarity` per line.
    #[arg(long)]
    merges: PathBuf,
    /// Method name to put in the CSV rows.
    #[arg(long, default_value = "fit")]
    label: String,
    /// Score CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Comma-separated strictly increasing rate ladder a0,...,ad.
    #[arg(long)]
    levels: String,
    /// Number of nodes for the finite-size columns.
    #[arg(long)]
    nodes: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    /// Optional key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Children per tree node.
    #[arg(long)]
    arity: Option<usize>,
    /// Root rate a0.
    #[arg(long)]
    a_low: Option<f64>,
    /// Leaf rate a3.
    #[arg(long)]
    a_high: Option<f64>,
    /// Depth-1 rates: comma list or start:stop:step range.
    #[arg(long)]
    a1: Option<String>,
    /// Depth-2 rates: comma list or start:stop:step range.
    #[arg(long)]
    a2: Option<String>,
    /// bottom-up, top-down, or both.
    #[arg(long)]
    methods: Option<String>,
    /// multinomial or fixed.
    #[arg(long)]
    size_mode: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-pool width; default uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    /// Optional key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    /// Tree depth d.
    #[arg(long)]
    depth: Option<usize>,
    /// Within-community probability; level h gets p·beta^(h-d).
    #[arg(long)]
    p_top: Option<f64>,
    /// Separation ratios: comma list or start:stop:step range.
    #[arg(long)]
    betas: Option<String>,
    /// Corrupted fractions: comma list or start:stop:step range.
    #[arg(long)]
    etas: Option<String>,
    /// uniform, adversarial, or both.
    #[arg(long)]
    scenarios: Option<String>,
    /// multinomial or fixed.
    #[arg(long)]
    size_mode: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-pool width; default uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land on stdout and succeed;
            // everything else is a validation failure.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Generate(args) => generate(args),
        Cmd::Fit(args) => fit(args),
        Cmd::Score(args) => score(args),
        Cmd::Thresholds(args) => thresholds(args),
        Cmd::PhaseDiagram(args) => phase_diagram(args),
        Cmd::Robustness(args) => robustness(args),
    }
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let levels = parse_list(&args.levels).map_err(CliError::Validation)?;
    if levels.len() != args.depth + 1 {
        return Err(CliError::Validation(format!(
            "--depth {} expects {} levels, got {}",
            args.depth,
            args.depth + 1,
            levels.len()
        )));
    }
    let mode = parse_size_mode(&args.size_mode).map_err(CliError::Validation)?;
    let params = scaled_ladder_params(args.arity, &levels, args.nodes)?;
    let (graph, truth) = sample_hsbm_sized(&params, args.nodes, args.seed, mode)?;

    make_dir(&args.out)?;
    write_text(&args.out.join("edges.tsv"), &graph.to_edge_list())?;
    write_text(&args.out.join("truth.tsv"), &truth.to_lines())?;
    write_text(&args.out.join("params.tsv"), &params.to_tree_text())?;
    Ok(())
}

fn fit(args: FitArgs) -> Result<(), CliError> {
    let text = read_file(&args.edges)?;
    let graph = Graph::parse_edge_list(&text, args.nodes)?;
    let methods = parse_methods(&args.method).map_err(CliError::Validation)?;
    if args.min_split == 0 {
        return Err(CliError::Validation(
            "--min-split must be at least 1".into(),
        ));
    }
    make_dir(&args.out)?;
    for method in methods {
        let outcome = fit_graph(&graph, method, args.min_split, args.seed)?;
        let tag = method.tag();
        write_text(
            &args.out.join(format!("pred_{tag}.tsv")),
            &outcome.partition.to_lines(),
        )?;
        write_text(
            &args.out.join(format!("merges_{tag}.tsv")),
            &merges_to_text(&outcome.dendrogram),
        )?;
        write_text(
            &args.out.join(format!("dendrogram_{tag}.nwk")),
            &outcome.dendrogram.to_newick(),
        )?;
    }
    Ok(())
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    let truth = Partition::parse_lines(&read_file(&args.truth)?)?;
    let params = HsbmParams::parse_tree_text(&read_file(&args.params)?)?;
    let pred = Partition::parse_lines(&read_file(&args.pred)?)?;
    let dendrogram = merges_from_text(pred.clone(), &read_file(&args.merges)?)?;
    let tree = tree_from_dendrogram(&dendrogram)?;
    let outcome = FitOutcome {
        partition: pred,
        dendrogram,
        tree,
    };
    let truth_tree = ClusterTree::identity(params.tree.clone());
    let rows = score_fit(&args.label, &truth, &truth_tree, &outcome)?;
    emit_csv(args.out.as_deref(), rows_to_csv(&rows))
}

fn thresholds(args: ThresholdsArgs) -> Result<(), CliError> {
    let levels = parse_list(&args.levels).map_err(CliError::Validation)?;
    let rows = thresholds_table(&levels, args.nodes)?;
    emit_csv(args.out.as_deref(), rows_to_csv(&rows))
}

fn phase_diagram(args: PhaseArgs) -> Result<(), CliError> {
    let mut file = FileConfig::load(args.config.as_deref())?;
    let cfg = PhaseDiagramConfig {
        arity: resolve(args.arity, &mut file, "arity")?.unwrap_or(2),
        n: require(resolve(args.nodes, &mut file, "nodes")?, "--nodes")?,
        a_low: require(resolve(args.a_low, &mut file, "a-low")?, "--a-low")?,
        a_high: require(resolve(args.a_high, &mut file, "a-high")?, "--a-high")?,
        a1_grid: parse_grid(&require(resolve(args.a1, &mut file, "a1")?, "--a1")?)
            .map_err(CliError::Validation)?,
        a2_grid: parse_grid(&require(resolve(args.a2, &mut file, "a2")?, "--a2")?)
            .map_err(CliError::Validation)?,
        methods: parse_methods(
            &resolve(args.methods, &mut file, "methods")?.unwrap_or_else(|| "both".into()),
        )
        .map_err(CliError::Validation)?,
        size_mode: parse_size_mode(
            &resolve(args.size_mode, &mut file, "size-mode")?
                .unwrap_or_else(|| "multinomial".into()),
        )
        .map_err(CliError::Validation)?,
        replicates: resolve(args.replicates, &mut file, "replicates")?.unwrap_or(10),
        base_seed: resolve(args.seed, &mut file, "seed")?.unwrap_or(0),
        jobs: resolve(args.jobs, &mut file, "jobs")?,
    };
    let out = resolve(args.out, &mut file, "out")?;
    file.finish()?;
    let rows = run_phase_diagram(&cfg)?;
    emit_csv(out.as_deref(), rows_to_csv(&rows))
}

fn robustness(args: RobustnessArgs) -> Result<(), CliError> {
    let mut file = FileConfig::load(args.config.as_deref())?;
    let cfg = RobustnessConfig {
        depth: resolve(args.depth, &mut file, "depth")?.unwrap_or(3),
        n: require(resolve(args.nodes, &mut file, "nodes")?, "--nodes")?,
        p_top: require(resolve(args.p_top, &mut file, "p-top")?, "--p-top")?,
        betas: parse_grid(&require(resolve(args.betas, &mut file, "betas")?, "--betas")?)
            .map_err(CliError::Validation)?,
        etas: parse_grid(&require(resolve(args.etas, &mut file, "etas")?, "--etas")?)
            .map_err(CliError::Validation)?,
        scenarios: parse_scenarios(
            &resolve(args.scenarios, &mut file, "scenarios")?.unwrap_or_else(|| "both".into()),
        )
        .map_err(CliError::Validation)?,
        size_mode: parse_size_mode(
            &resolve(args.size_mode, &mut file, "size-mode")?
                .unwrap_or_else(|| "multinomial".into()),
        )
        .map_err(CliError::Validation)?,
        replicates: resolve(args.replicates, &mut file, "replicates")?.unwrap_or(10),
        base_seed: resolve(args.seed, &mut file, "seed")?.unwrap_or(0),
        jobs: resolve(args.jobs, &mut file, "jobs")?,
    };
    let out = resolve(args.out, &mut file, "out")?;
    file.finish()?;
    let rows = run_robustness(&cfg)?;
    emit_csv(out.as_deref(), rows_to_csv(&rows))
}

/// A parsed key=value config file; keys are spelled like the long
/// flags. Reading a key consumes it, and leftovers are an error so
/// typos cannot silently vanish.
struct FileConfig {
    entries: BTreeMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        if let Some(path) = path {
            let text = read_file(path)?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::Validation(format!(
                        "{}:{}: expected key=value, got {line:?}",
                        path.display(),
                        i + 1
                    )));
                };
                entries.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn finish(self) -> Result<(), CliError> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.entries.keys().map(String::as_str).collect();
            Err(CliError::Validation(format!(
                "unknown config key(s): {}",
                keys.join(", ")
            )))
        }
    }
}

/// The flag wins when present; otherwise the config file entry is
/// parsed. Either way the key is consumed.
fn resolve<T>(flag: Option<T>, file: &mut FileConfig, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    let entry = file.take(key);
    if flag.is_some() {
        return Ok(flag);
    }
    match entry {
        None => Ok(None),
        Some(s) => s
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::Validation(format!("config key {key}: {e}"))),
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("{flag} is required (flag or config file)")))
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("bad number {s:?}"))
}

/// Comma-separated numbers.
fn parse_list(spec: &str) -> Result<Vec<f64>, String> {
    spec.split(',').map(parse_f64).collect()
}

/// Comma-separated numbers, or an inclusive `start:stop:step` range.
fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    if !spec.contains(':') {
        return parse_list(spec);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("bad range {spec:?}, expected start:stop:step"));
    }
    let start = parse_f64(parts[0])?;
    let stop = parse_f64(parts[1])?;
    let step = parse_f64(parts[2])?;
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && start <= stop) {
        return Err(format!(
            "bad range {spec:?}: needs start <= stop and step > 0"
        ));
    }
    let mut values = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + f64::from(i) * step;
        if v > stop + step * 1e-9 {
            break;
        }
        values.push(v);
        i += 1;
    }
    Ok(values)
}

fn parse_methods(spec: &str) -> Result<Vec<Method>, String> {
    if spec == "both" {
        return Ok(vec![Method::BottomUp, Method::TopDown]);
    }
    spec.split(',')
        .map(|s| s.trim().parse::<Method>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_scenarios(spec: &str) -> Result<Vec<NoiseKind>, String> {
    if spec == "both" {
        return Ok(vec![NoiseKind::Uniform, NoiseKind::Adversarial]);
    }
    spec.split(',')
        .map(|s| match s.trim() {
            "uniform" => Ok(NoiseKind::Uniform),
            "adversarial" => Ok(NoiseKind::Adversarial),
            other => Err(format!(
                "unknown scenario {other:?}, expected uniform or adversarial"
            )),
        })
        .collect()
}

fn parse_size_mode(spec: &str) -> Result<SizeMode, String> {
    match spec {
        "multinomial" => Ok(SizeMode::Multinomial),
        "fixed" => Ok(SizeMode::Fixed),
        other => Err(format!(
            "unknown size mode {other:?}, expected multinomial or fixed"
        )),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit_csv(out: Option<&Path>, csv: String) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(write_text(path, &csv)?),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

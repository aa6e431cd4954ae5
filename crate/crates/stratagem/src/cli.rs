//! Subcommand surface of the `stratagem` binary. Everything routes through
//! [`run`], which returns the process exit code (0 success, 1 domain
//! failure, 2 usage error) so tests can drive the CLI in-process.

use std::collections::BTreeMap;
use std::error::Error;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::agent::encode::{encode, EncoderId};
use crate::agent::reward::RewardKind;
use crate::corpus::augment::{augment_corpus, FilterParams, RuleParaphraser};
use crate::corpus::generate::{generate_corpus, TemplateBank};
use crate::corpus::{read_corpus, write_corpus, CorpusExample};
use crate::extract::eval::kfold_evaluate;
use crate::extract::model::{train, ExtractionModel, Task, TrainConfig};
use crate::game::map::GameMap;
use crate::game::state::{
    builtin_initializations, load_initialization, read_initializations, read_states, GameState,
    MapInitialization, Player,
};
use crate::intent::{check_against_selections, check_consistency};
use crate::sim::{simulate, EgoPolicy};

#[derive(Debug, Parser)]
#[command(
    name = "stratagem",
    version,
    about = "Wargame simulation, intent DSL, corpus tooling, and intent extraction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic strategy corpus.
    GenCorpus(GenCorpusArgs),
    /// Paraphrase-augment an existing corpus.
    Augment(AugmentArgs),
    /// Train an extraction model on a corpus.
    Train(TrainArgs),
    /// K-fold cross-validated evaluation.
    Eval(EvalArgs),
    /// Predict intent for text + selections with a trained model.
    Predict(PredictArgs),
    /// Check corpus examples for consistency and selection agreement.
    Check(CheckArgs),
    /// Roll out full games against the scripted opponents.
    Simulate(SimulateArgs),
    /// Encode game states as feature vectors.
    Encode(EncodeArgs),
}

fn load_map(path: &Option<PathBuf>) -> Result<GameMap, Box<dyn Error>> {
    Ok(match path {
        Some(path) => GameMap::read_file(path)?,
        None => GameMap::canonical().clone(),
    })
}

fn load_inits(
    path: &Option<PathBuf>,
    map: &GameMap,
) -> Result<Vec<MapInitialization>, Box<dyn Error>> {
    Ok(match path {
        Some(path) => read_initializations(path, map)?,
        None => builtin_initializations().to_vec(),
    })
}

#[derive(Debug, Args)]
struct GenCorpusArgs {
    /// Number of examples to generate.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Map initialization file (defaults to the built-in fifteen).
    #[arg(long)]
    maps: Option<PathBuf>,
    /// Map file (defaults to the built-in map).
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn gen_corpus(args: &GenCorpusArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let inits = load_inits(&args.maps, &map)?;
    let examples = generate_corpus(
        &map,
        &inits,
        TemplateBank::builtin(),
        args.n as usize,
        args.seed,
    )?;
    write_corpus(&examples, &args.out)?;

    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    for example in &examples {
        for constraint in example.intent.non_null_constraints() {
            *histogram.entry(constraint.class().to_string()).or_insert(0) += 1;
        }
    }
    println!(
        "wrote {} examples to {}",
        examples.len(),
        args.out.display()
    );
    let classes: Vec<String> = histogram
        .iter()
        .map(|(class, count)| format!("{class}={count}"))
        .collect();
    println!("constraint histogram: {}", classes.join(" "));
    Ok(0)
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reject candidates below this normalized edit distance.
    #[arg(long, default_value_t = 0.15)]
    min_edit_ratio: f64,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn augment_cmd(args: &AugmentArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let examples = read_corpus(&args.corpus, &map)?;
    let params = FilterParams {
        min_edit_distance_ratio: args.min_edit_ratio,
        ..FilterParams::default()
    };
    let augmented = augment_corpus(&examples, &RuleParaphraser::default(), &params, args.seed);
    write_corpus(&augmented, &args.out)?;
    let changed = examples
        .iter()
        .zip(&augmented)
        .filter(|(a, b)| a.text != b.text)
        .count();
    println!(
        "augmented {} examples ({} texts rewritten) into {}",
        augmented.len(),
        changed,
        args.out.display()
    );
    Ok(0)
}

#[derive(Debug, Args)]
struct TrainishArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Which head group to fit: goals, constraints, or both.
    #[arg(long, default_value = "both")]
    task: Task,
    /// Goal-loss CE weight.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    momentum: f64,
    /// Temperature schedule steepness.
    #[arg(long, default_value_t = 10.0)]
    anneal_k: f64,
    /// Temperature schedule midpoint (fraction of the run).
    #[arg(long, default_value_t = 0.5)]
    anneal_mid: f64,
    /// Text feature hash dimension.
    #[arg(long, default_value_t = 2048)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    map: Option<PathBuf>,
}

impl TrainishArgs {
    fn config(&self, folds: usize) -> TrainConfig {
        TrainConfig {
            task: self.task,
            epochs: self.epochs,
            batch_size: self.batch,
            learning_rate: self.lr,
            momentum: self.momentum,
            alpha: self.alpha,
            anneal_steepness: self.anneal_k,
            anneal_midpoint: self.anneal_mid,
            seed: self.seed,
            folds,
            text_dim: self.dim,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: TrainishArgs,
    /// Corpus for an optional pretraining pass.
    #[arg(long)]
    pretrain: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the training-curve log (JSON).
    #[arg(long)]
    log: Option<PathBuf>,
}

fn train_cmd(args: &TrainArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.common.map)?;
    let corpus = read_corpus(&args.common.corpus, &map)?;
    let pretrain = args
        .pretrain
        .as_ref()
        .map(|path| read_corpus(path, &map))
        .transpose()?;
    let config = args.common.config(TrainConfig::default().folds);
    let (model, log) = train(&corpus, &map, &config, pretrain.as_deref())?;
    model.save(&args.out)?;
    for (epoch, loss) in log.goal_epoch_losses.iter().enumerate() {
        println!("goal epoch {epoch}: mean loss {loss:.6}");
    }
    for (epoch, loss) in log.constraint_epoch_losses.iter().enumerate() {
        println!("constraint epoch {epoch}: mean loss {loss:.6}");
    }
    if let Some(path) = &args.log {
        std::fs::write(path, serde_json::to_string_pretty(&log)?)?;
    }
    println!("model written to {}", args.out.display());
    Ok(0)
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: TrainishArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Where to write the evaluation report (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn eval_cmd(args: &EvalArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.common.map)?;
    let corpus = read_corpus(&args.common.corpus, &map)?;
    let config = args.common.config(args.folds);
    let summary = kfold_evaluate(&corpus, &map, &config)?;
    println!("{summary}");
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&summary)?)?;
        println!("report written to {}", path.display());
    }
    Ok(0)
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Predict every example in a corpus file.
    #[arg(long, conflicts_with_all = ["text", "selections"])]
    corpus: Option<PathBuf>,
    /// Strategy description for a one-off prediction.
    #[arg(long, requires = "selections")]
    text: Option<String>,
    /// Selections as `Territory=count,...` for a one-off prediction.
    #[arg(long, requires = "text")]
    selections: Option<String>,
    #[arg(long)]
    map: Option<PathBuf>,
}

fn parse_selections(spec: &str) -> Result<BTreeMap<String, u32>, Box<dyn Error>> {
    let mut out = BTreeMap::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let (name, count) = item
            .split_once('=')
            .ok_or_else(|| format!("expected `Territory=count`, found `{item}`"))?;
        out.insert(name.trim().to_string(), count.trim().parse::<u32>()?);
    }
    Ok(out)
}

fn predict_cmd(args: &PredictArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let model = ExtractionModel::load(&args.model)?;
    match (&args.corpus, &args.text, &args.selections) {
        (Some(corpus), _, _) => {
            for example in read_corpus(corpus, &map)? {
                let intent = model.predict(&map, &example.text, &example.selections)?;
                println!("{}", serde_json::to_string(&intent)?);
            }
        }
        (None, Some(text), Some(selections)) => {
            let selections = parse_selections(selections)?;
            let intent = model.predict(&map, text, &selections)?;
            println!("{}", serde_json::to_string(&intent)?);
        }
        _ => return Err("predict needs either --corpus or --text with --selections".into()),
    }
    Ok(0)
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Corpus file to check.
    #[arg(long = "example-file")]
    example_file: PathBuf,
    #[arg(long)]
    maps: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
}

fn check_cmd(args: &CheckArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let inits = load_inits(&args.maps, &map)?;
    let examples = read_corpus(&args.example_file, &map)?;
    let mut clean = true;
    for (index, example) in examples.iter().enumerate() {
        let mut problems: Vec<String> = Vec::new();
        let consistency = check_consistency(&example.intent);
        if !consistency.is_empty() {
            problems.push(format!("consistency: {consistency}"));
        }
        match build_state(example, &inits, &map) {
            Ok(state) => {
                let agreement =
                    check_against_selections(&example.intent, &map, &state, Player::Ego);
                if !agreement.is_empty() {
                    problems.push(format!("selections: {agreement}"));
                }
            }
            Err(message) => problems.push(message),
        }
        if problems.is_empty() {
            println!("example {}: clean", index + 1);
        } else {
            clean = false;
            for problem in problems {
                println!("example {}: {problem}", index + 1);
            }
        }
    }
    Ok(if clean { 0 } else { 1 })
}

fn build_state(
    example: &CorpusExample,
    inits: &[MapInitialization],
    map: &GameMap,
) -> Result<GameState, String> {
    let init = inits
        .iter()
        .find(|i| i.id == example.map_id)
        .ok_or_else(|| format!("unknown map id {}", example.map_id))?;
    let base = load_initialization(init, map).map_err(|e| e.to_string())?;
    base.with_ego_selections(map, &example.selections)
        .map_err(|e| format!("selections: {e}"))
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Which fixed map initialization to start from.
    #[arg(long)]
    init_id: u8,
    #[arg(long, default_value_t = 100)]
    episodes: u32,
    /// Ego policy: random or heuristic.
    #[arg(long, default_value = "random")]
    policy: EgoPolicy,
    /// Reward function: sparse, turn-count, survival, or rules-based.
    #[arg(long, default_value = "sparse")]
    reward: RewardKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    maps: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
}

fn simulate_cmd(args: &SimulateArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let inits = load_inits(&args.maps, &map)?;
    let init = inits
        .iter()
        .find(|i| i.id == args.init_id)
        .ok_or_else(|| format!("unknown init id {}", args.init_id))?;
    let start = load_initialization(init, &map)?;
    let summary = simulate(
        &map,
        &start,
        args.episodes,
        args.policy,
        args.reward,
        args.seed,
    );
    println!("{summary}");
    Ok(0)
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// JSON-lines state file (one serialized state per line).
    #[arg(long, conflicts_with = "init_id")]
    state_file: Option<PathBuf>,
    /// Encode the starting state of a fixed initialization instead.
    #[arg(long)]
    init_id: Option<u8>,
    /// Encoder: f54, f54n, f132, f132n, f134n, or f298n.
    #[arg(long)]
    encoder: EncoderId,
    #[arg(long)]
    maps: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
}

fn encode_cmd(args: &EncodeArgs) -> Result<i32, Box<dyn Error>> {
    let map = load_map(&args.map)?;
    let states: Vec<GameState> = match (&args.state_file, args.init_id) {
        (Some(path), None) => read_states(path)?,
        (None, Some(id)) => {
            let inits = load_inits(&args.maps, &map)?;
            let init = inits
                .iter()
                .find(|i| i.id == id)
                .ok_or_else(|| format!("unknown init id {id}"))?;
            vec![load_initialization(init, &map)?]
        }
        _ => return Err("encode needs exactly one of --state-file or --init-id".into()),
    };
    for state in &states {
        let encoded = encode(&map, state, args.encoder);
        let line: Vec<String> = encoded.values.iter().map(|v| v.to_string()).collect();
        println!("{}", line.join(","));
    }
    Ok(0)
}

/// Parses and executes a command line, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    let result = match &cli.command {
        Command::GenCorpus(args) => gen_corpus(args),
        Command::Augment(args) => augment_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::Eval(args) => eval_cmd(args),
        Command::Predict(args) => predict_cmd(args),
        Command::Check(args) => check_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::Encode(args) => encode_cmd(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

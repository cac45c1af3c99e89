//! Command line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    generate_pairs, prepare_pairs, run_prepared, stratified_benchmark, sweep_parameters,
    sweep_table, BenchConfig, BenchPair, Policy, SweepAxis,
};
use crate::datasetgen::{
    build_dataset, load_dataset, save_dataset, split_dataset, CorrespondenceSource, PairRecord,
};
use crate::decision::{
    evaluate_scorer, train_scorer, AccuracyReport, ExternalScorer, FallbackScorer, Sample, Scorer,
    ScorerModel,
};
use crate::error::{Error, Result};
use crate::geom::{read_cloud, write_xyz, RigidTransform};
use crate::hypgen::{read_correspondences, read_hypotheses, write_correspondences, Hypothesis};
use crate::metrics::{rotation_error, translation_error, SuccessThreshold};
use crate::pipeline::{register, select};

#[derive(Debug, Parser)]
#[command(name = "dpcr", version, about = "Point cloud registration with a learned hypothesis scorer")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a machine-readable report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic scene pairs with correspondences.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Number of pairs (default: `pairs.pair_count`).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        inlier_ratio: Option<f64>,
    },
    /// Build a labeled dataset of merged clouds from pairs.
    DatasetGen {
        /// Directory written by `synth`; generated on the fly when absent.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Use each pair's correspondence file instead of the corruptor.
        #[arg(long)]
        use_correspondences: bool,
    },
    /// Train the scorer on a dataset.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Ignore source/target tags (ablation).
        #[arg(long)]
        no_tags: bool,
    },
    /// Accuracy of a scorer on a dataset.
    EvalScorer {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Register one pair; prints the transform and its score.
    Register {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Correspondence file (`px py pz qx qy qz` per line).
        #[arg(long, required_unless_present = "hypotheses")]
        correspondences: Option<PathBuf>,
        /// Ranked hypothesis file, used instead of generating hypotheses.
        #[arg(long)]
        hypotheses: Option<PathBuf>,
        /// Ground-truth transform file, to report RE/TE.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        #[command(flatten)]
        scorer: ScorerArgs,
    },
    /// Benchmark a policy on synthetic or stored pairs.
    Bench {
        #[command(flatten)]
        scorer: ScorerArgs,
        /// Directory written by `synth`; generated from the config when absent.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PolicyArg::Decision)]
        policy: PolicyArg,
        /// Run both policies for every configured inlier ratio.
        #[arg(long)]
        stratified: bool,
    },
    /// Sweep `m` or the score threshold on a fixed pair set.
    Sweep {
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Decision,
    Mic,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    /// Trained scorer file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// External scorer command line; falls back to `--model` on failure.
    #[arg(long)]
    external: Option<String>,
}

impl ScorerArgs {
    fn load(&self) -> Result<Box<dyn Scorer>> {
        let model = self.model.as_deref().map(ScorerModel::load).transpose()?;
        match (&self.external, model) {
            (Some(cmd), Some(fallback)) => Ok(Box::new(FallbackScorer {
                primary: ExternalScorer::from_command_line(cmd)?,
                fallback,
            })),
            (Some(cmd), None) => Ok(Box::new(ExternalScorer::from_command_line(cmd)?)),
            (None, Some(m)) => Ok(Box::new(m)),
            (None, None) => Err(Error::InvalidConfig("a scorer is required: --model or --external".into())),
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on a runtime error, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.propagate_seed();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli, &cfg))
}

fn write_report(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text)?;
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn row12_line(t: &RigidTransform) -> String {
    t.to_row12().map(|v| v.to_string()).join(" ")
}

fn read_transform(path: &Path) -> Result<RigidTransform> {
    let ts = read_hypotheses(path)?;
    ts.first()
        .copied()
        .ok_or_else(|| Error::parse(path, 1, "expected 12 numbers"))
}

const SOURCE_FILE: &str = "source.xyz";
const TARGET_FILE: &str = "target.xyz";
const GT_FILE: &str = "ground_truth.txt";
const CORR_FILE: &str = "correspondences.txt";

fn write_pairs(dir: &Path, pairs: &[BenchPair]) -> Result<()> {
    for bp in pairs {
        let d = dir.join(&bp.pair.pair_id);
        fs::create_dir_all(&d)?;
        write_xyz(&d.join(SOURCE_FILE), &bp.pair.source)?;
        write_xyz(&d.join(TARGET_FILE), &bp.pair.target)?;
        fs::write(d.join(GT_FILE), row12_line(&bp.pair.ground_truth) + "\n")?;
        write_correspondences(&d.join(CORR_FILE), &bp.correspondences)?;
    }
    Ok(())
}

/// Pairs stored by `synth`, in directory-name order.
fn read_pairs(dir: &Path) -> Result<Vec<BenchPair>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(SOURCE_FILE).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::InvalidConfig(format!("no pairs under {}", dir.display())));
    }
    dirs.iter()
        .map(|d| {
            Ok(BenchPair {
                pair: PairRecord {
                    source: read_cloud(&d.join(SOURCE_FILE))?,
                    target: read_cloud(&d.join(TARGET_FILE))?,
                    ground_truth: read_transform(&d.join(GT_FILE))?,
                    pair_id: d.file_name().unwrap().to_string_lossy().into_owned(),
                },
                correspondences: read_correspondences(&d.join(CORR_FILE))?,
            })
        })
        .collect()
}

fn pairs_from(dir: Option<&Path>, cfg: &BenchConfig) -> Result<Vec<BenchPair>> {
    match dir {
        Some(d) => read_pairs(d),
        None => generate_pairs(&cfg.pairs),
    }
}

fn print_accuracy(label: &str, r: &AccuracyReport) {
    println!(
        "{label}: correct {:.4}  wrong {:.4}  average {:.4}  (tp {} fn {} fp {} tn {})",
        r.correct_accuracy,
        r.wrong_accuracy,
        r.weighted_accuracy,
        r.confusion.true_positive,
        r.confusion.false_negative,
        r.confusion.false_positive,
        r.confusion.true_negative
    );
}

fn dispatch(cli: &Cli, cfg: &BenchConfig) -> Result<()> {
    let report = cli.report.as_deref();
    match &cli.command {
        Command::Synth { out, count, inlier_ratio } => {
            let mut set = cfg.pairs;
            if let Some(n) = count {
                set.pair_count = *n;
            }
            if let Some(r) = inlier_ratio {
                set.scene.inlier_ratio = *r;
            }
            let pairs = generate_pairs(&set)?;
            write_pairs(out, &pairs)?;
            println!("wrote {} pairs to {}", pairs.len(), out.display());
            write_report(report, &to_json(&serde_json::json!({ "pairs": pairs.len(), "config": set })))
        }
        Command::DatasetGen { pairs, out, use_correspondences } => {
            let bench_pairs = pairs_from(pairs.as_deref(), cfg)?;
            let records: Vec<PairRecord> = bench_pairs.iter().map(|b| b.pair.clone()).collect();
            let sets: Vec<_> = bench_pairs.iter().map(|b| b.correspondences.clone()).collect();
            let source = if *use_correspondences {
                CorrespondenceSource::Provided(&sets)
            } else {
                CorrespondenceSource::Synthetic
            };
            let data = build_dataset(&records, source, &cfg.dataset, cfg.seed)?;
            save_dataset(out, &data, &cfg.dataset.mining)?;
            let correct = data.iter().filter(|r| r.label.is_correct()).count();
            println!(
                "wrote {} records ({} correct, {} wrong) to {}",
                data.len(),
                correct,
                data.len() - correct,
                out.display()
            );
            Ok(())
        }
        Command::Train { dataset, out, no_tags } => {
            let data = load_dataset(dataset)?;
            let (train, val) = split_dataset(&data, cfg.split_fraction, cfg.seed)?;
            let tc = crate::decision::TrainConfig {
                with_tags: !no_tags,
                ..cfg.train
            };
            let ts: Vec<Sample> = train.iter().map(|r| r.sample()).collect();
            let vs: Vec<Sample> = val.iter().map(|r| r.sample()).collect();
            let model = train_scorer(&ts, &tc)?;
            model.save(out)?;
            let tr = evaluate_scorer(&model, &ts, tc.scale)?;
            print_accuracy("train", &tr);
            let va = evaluate_scorer(&model, &vs, tc.scale)?;
            print_accuracy("validation", &va);
            write_report(
                report,
                &to_json(&serde_json::json!({ "train": tr, "validation": va, "final_loss": model.final_loss })),
            )
        }
        Command::EvalScorer { dataset, scorer, scale } => {
            let data = load_dataset(dataset)?;
            let s = scorer.load()?;
            let samples: Vec<Sample> = data.iter().map(|r| r.sample()).collect();
            let r = evaluate_scorer(s.as_ref(), &samples, *scale)?;
            print_accuracy("accuracy", &r);
            write_report(report, &to_json(&r))
        }
        Command::Register { source, target, correspondences, hypotheses, ground_truth, scorer } => {
            let p = read_cloud(source)?;
            let q = read_cloud(target)?;
            let s = scorer.load()?;
            let outcome = match hypotheses {
                Some(h) => select(&p, &q, &Hypothesis::from_transforms(&read_hypotheses(h)?), s.as_ref(), &cfg.pipeline)?,
                None => register(
                    &p,
                    &q,
                    &read_correspondences(correspondences.as_deref().expect("required by clap"))?,
                    s.as_ref(),
                    &cfg.pipeline,
                )?,
            };
            println!("transform {}", row12_line(&outcome.transform));
            println!(
                "score {} rank {} scanned {} truncated {}",
                outcome.score, outcome.rank, outcome.scanned, outcome.truncated
            );
            let mut extra = serde_json::Map::new();
            if let Some(gt) = ground_truth {
                let gt = read_transform(gt)?;
                let re = rotation_error(&outcome.transform.rotation, &gt.rotation);
                let te = translation_error(&outcome.transform.translation, &gt.translation);
                let ok = SuccessThreshold::default().accepts(re, te);
                println!("re {re} te {te} success {ok}");
                extra.insert("re".into(), re.into());
                extra.insert("te".into(), te.into());
                extra.insert("success".into(), ok.into());
            }
            let mut v = serde_json::to_value(outcome).expect("serializable");
            if let serde_json::Value::Object(m) = &mut v {
                m.extend(extra);
            }
            write_report(report, &to_json(&v))
        }
        Command::Bench { scorer, pairs, policy, stratified } => {
            let s = scorer.load()?;
            if *stratified {
                let r = stratified_benchmark(&cfg.inlier_ratios, &cfg.pairs, s.as_ref(), &cfg.pipeline, cfg.voxel)?;
                for st in &r.strata {
                    println!(
                        "inlier_ratio={} decision_rr={:.4} mic_rr={:.4} upper_bound_rr={:.4}",
                        st.inlier_ratio, st.decision.rr, st.mic.rr, st.upper_bound_rr
                    );
                }
                return write_report(report, &to_json(&r));
            }
            let bench_pairs = pairs_from(pairs.as_deref(), cfg)?;
            let cached = prepare_pairs(&bench_pairs, &cfg.pipeline, cfg.voxel)?;
            let policy = match policy {
                PolicyArg::Decision => Policy::Decision,
                PolicyArg::Mic => Policy::Mic,
            };
            let mut r = run_prepared(&cached, s.as_ref(), &cfg.pipeline, policy, cfg.include_runtime)?;
            r.config = serde_json::to_value(cfg).expect("serializable");
            println!("{}", r.summary_line());
            write_report(report, &r.to_json())
        }
        Command::Sweep { scorer, pairs, axis, values } => {
            let s = scorer.load()?;
            let bench_pairs = pairs_from(pairs.as_deref(), cfg)?;
            let rows = sweep_parameters(*axis, values, &cfg.pipeline, &bench_pairs, cfg.voxel, s.as_ref())?;
            let table = sweep_table(*axis, &rows);
            print!("{table}");
            write_report(report, &table)
        }
    }
}

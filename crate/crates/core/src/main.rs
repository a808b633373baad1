use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamsec::attack::{attack_rows, AttackConfig, AttackRegistry};
use beamsec::channel::{build_raw, io as dsio, Dataset, NormMeta};
use beamsec::defense::{adversarial_train, evaluate_robustness, rounds_csv};
use beamsec::harness::{
    emit_report, fmt_sig, run_experiment, summarize, worker_threads, ExperimentConfig, ExperimentResult,
    ReportFormat,
};
use beamsec::numcore::{checkpoint, mse_loss, predict_rows, train};
use beamsec::{rng, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "beamsec", version, about = "Beam-rate prediction under FGSM attack and adversarial training")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of repetitions (overrides the config).
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Comma-separated attack budgets (overrides the config).
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<f64>>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate train/test datasets (BMDS1 plus CSV export).
    Generate,
    /// Train an undefended model on the generated training set.
    Train {
        /// Training set; defaults to `<out>/train.bmds`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Attack a trained model on the test set for every budget.
    Attack {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Adversarially train a model and record the rounds.
    Defend {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Full SC1/SC2/SC3 experiment with repetitions.
    Run,
    /// Summarise an existing results file.
    Report {
        /// Defaults to `<out>/results.csv`.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.repetitions = reps;
    }
    if let Some(eps) = &common.eps {
        cfg.attack_grid = eps.clone();
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn test_mse(model: &beamsec::numcore::MlpModel, data: &Dataset) -> Result<f64> {
    mse_loss(&predict_rows(model, &data.features)?, &data.labels)
}

fn generate(cfg: &ExperimentConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let mut params = cfg.scenario_params.clone();
    params.seed = cfg.base_seed;
    let raw = build_raw(&params, cfg.num_instances)?;
    let (train_raw, test_raw) = raw.split(cfg.train_fraction);
    let meta = NormMeta::fit(&train_raw)?;
    for (name, part) in [("train", &train_raw), ("test", &test_raw)] {
        let data = meta.apply(part)?;
        dsio::write_dataset(&dir.join(format!("{name}.bmds")), &data, None)?;
        dsio::write_csv(&dir.join(format!("{name}.csv")), &data)?;
        println!("{name}: {} rows x {} features", data.len(), data.num_features());
    }
    Ok(())
}

fn train_cmd(cfg: &ExperimentConfig, data: Option<PathBuf>) -> Result<()> {
    let dir = &cfg.output_dir;
    let (train_set, _) = dsio::read_dataset(&data.unwrap_or_else(|| dir.join("train.bmds")))?;
    let mut model = cfg.architecture.build(train_set.num_features(), cfg.base_seed)?;
    let mut stream = rng::child(cfg.base_seed, 1 << 40);
    let losses = train(&mut model, &train_set.features, &train_set.labels, &cfg.train_cfg, &mut stream)?;
    for (epoch, loss) in losses.iter().enumerate() {
        println!("epoch {epoch}: train_mse {}", fmt_sig(*loss));
    }
    create_dir(dir)?;
    checkpoint::save(&model, &dir.join("model.bmmlp"))?;
    let test_path = dir.join("test.bmds");
    if test_path.exists() {
        let (test, _) = dsio::read_dataset(&test_path)?;
        println!("test_mse {}", fmt_sig(test_mse(&model, &test)?));
    }
    Ok(())
}

fn attack_cmd(cfg: &ExperimentConfig, model: Option<PathBuf>, data: Option<PathBuf>) -> Result<()> {
    let dir = &cfg.output_dir;
    let model = checkpoint::load(&model.unwrap_or_else(|| dir.join("model.bmmlp")))?;
    let (test, _) = dsio::read_dataset(&data.unwrap_or_else(|| dir.join("test.bmds")))?;
    let registry = AttackRegistry::default();
    create_dir(dir)?;
    let mut table = String::from("epsilon,mse\n");
    table.push_str(&format!("0,{}\n", fmt_sig(test_mse(&model, &test)?)));
    for &eps in &cfg.attack_grid {
        let attack = registry.create("fgsm", AttackConfig::linf(eps))?;
        let adv = test.with_features(attack_rows(attack.as_ref(), &model, &test.features, &test.labels)?)?;
        let mse = test_mse(&model, &adv)?;
        dsio::write_dataset(&dir.join(format!("test_adv_eps{eps}.bmds")), &adv, Some(eps))?;
        table.push_str(&format!("{},{}\n", fmt_sig(eps), fmt_sig(mse)));
    }
    print!("{table}");
    write_text(&dir.join("attack.csv"), &table)
}

fn defend_cmd(cfg: &ExperimentConfig, data: Option<PathBuf>) -> Result<()> {
    cfg.defense_cfg.validate()?;
    let dir = &cfg.output_dir;
    let (train_set, _) = dsio::read_dataset(&data.unwrap_or_else(|| dir.join("train.bmds")))?;
    let model = cfg.architecture.build(train_set.num_features(), cfg.base_seed)?;
    let mut stream = rng::child(cfg.base_seed, (1 << 40) + 1);
    let outcome = adversarial_train(model, &train_set, &cfg.train_cfg, &cfg.defense_cfg, &mut stream)?;
    create_dir(dir)?;
    let rounds = rounds_csv(&outcome.rounds);
    print!("{rounds}");
    println!("best_round {}", outcome.best_round);
    write_text(&dir.join("rounds.csv"), &rounds)?;
    checkpoint::save(&outcome.model, &dir.join("defended.bmmlp"))?;
    let test_path = dir.join("test.bmds");
    if test_path.exists() {
        let (test, _) = dsio::read_dataset(&test_path)?;
        let mut grid = vec![0.0];
        grid.extend_from_slice(&cfg.attack_grid);
        let mut table = String::from("epsilon,mse\n");
        for p in evaluate_robustness(&outcome.model, &test, &grid)? {
            table.push_str(&format!("{},{}\n", fmt_sig(p.epsilon), fmt_sig(p.mse)));
        }
        print!("{table}");
        write_text(&dir.join("defended_attack.csv"), &table)?;
    }
    Ok(())
}

fn run_cmd(cfg: &ExperimentConfig, format: ReportFormat) -> Result<()> {
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    write_text(&dir.join("config.json"), &cfg.to_json())?;
    let result = run_experiment(cfg)?;
    result.write_to(dir)?;
    let summary = summarize(&result)?;
    for path in emit_report(&summary, format, dir)? {
        println!("wrote {}", path.display());
    }
    print!("{}", summary.summary_csv());
    Ok(())
}

fn report_cmd(cfg: &ExperimentConfig, results: Option<PathBuf>, format: ReportFormat) -> Result<()> {
    let dir = &cfg.output_dir;
    let result = ExperimentResult::read_results(&results.unwrap_or_else(|| dir.join("results.csv")))?;
    let summary = summarize(&result)?;
    for path in emit_report(&summary, format, dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    let format: ReportFormat = cli.common.format.parse()?;
    let cfg = load_config(&cli.common)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    match cli.command {
        Command::Generate => generate(&cfg),
        Command::Train { data } => train_cmd(&cfg, data),
        Command::Attack { model, data } => attack_cmd(&cfg, model, data),
        Command::Defend { data } => defend_cmd(&cfg, data),
        Command::Run => run_cmd(&cfg, format),
        Command::Report { results } => report_cmd(&cfg, results, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

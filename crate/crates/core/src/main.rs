use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qfmap::ansatz::{train, AnsatzSpec};
use qfmap::benchmark::{evaluate_with_grid, render_table, run_benchmark, write_grid_csv, BenchmarkConfig};
use qfmap::dataset::{
    adhoc_benchmark, bench_fraction, make_adhoc, make_moons, moons_benchmark, Dataset, DEFAULT_ADHOC_GAP,
    DEFAULT_MOONS_NOISE,
};
use qfmap::decompose::{qsd, read_unitary_csv};
use qfmap::ga::{evolve, GaConfig, MutationMode};
use qfmap::kernel::{kernel_matrix, EvalMode, FeatureMap, QuantumKernel};
use qfmap::linalg::{phase_aligned_distance, unitarity_error};
use qfmap::optim::OptimizerConfig;
use qfmap::simplify::{ablate, simplify};
use qfmap::statevector::unitary_of;
use qfmap::{Result, SvmConfig};

#[derive(Parser, Serialize)]
#[command(name = "qfmap", version, about = "Quantum feature maps for kernel SVMs")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
struct GlobalArgs {
    /// Master seed for data, search and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Shots per kernel entry; 0 evaluates kernels exactly.
    #[arg(long, global = true, default_value_t = 0)]
    shots: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Args, Serialize, Clone)]
struct DataArgs {
    /// `moons`, `adhoc` (100/40 benchmark splits) or a CSV path.
    #[arg(long)]
    data: String,
    /// Separate test CSV; otherwise a CSV is split by --train-fraction.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args, Serialize, Clone)]
struct SvmArgs {
    /// Box constraint of the soft-margin SVM.
    #[arg(long = "c", default_value_t = 1000.0)]
    c: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

impl SvmArgs {
    fn config(&self, seed: u64) -> SvmConfig {
        SvmConfig {
            c: self.c,
            tol: self.tol,
            seed,
            ..SvmConfig::default()
        }
    }
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a dataset CSV.
    GenData(GenDataArgs),
    /// Genetic search for a feature-map circuit.
    TrainGa(TrainGaArgs),
    /// Train a variational ansatz.
    TrainAnsatz(TrainAnsatzArgs),
    /// Compile a unitary from CSV into a circuit.
    Decompose(DecomposeArgs),
    /// Simplify a circuit, optionally ablating rotations against data.
    Simplify(SimplifyArgs),
    /// Train and score a QSVM with a circuit, exporting a decision grid.
    Eval(EvalArgs),
    /// Compare all methods on both benchmark datasets.
    Benchmark(BenchmarkArgs),
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum DataKind {
    Moons,
    Adhoc,
}

#[derive(Args, Serialize)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    kind: DataKind,
    #[arg(long, default_value_t = 140)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_MOONS_NOISE)]
    noise: f64,
    #[arg(long, default_value_t = DEFAULT_ADHOC_GAP)]
    gap: f64,
    /// Whole dataset, unsplit.
    #[arg(long, required_unless_present = "out_train")]
    out: Option<PathBuf>,
    #[arg(long, requires = "out_test")]
    out_train: Option<PathBuf>,
    #[arg(long, requires = "out_train")]
    out_test: Option<PathBuf>,
    /// Stratified train share when writing split files.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
#[serde(rename_all = "kebab-case")]
enum MutationArg {
    Single,
    PerBit,
}

#[derive(Args, Serialize)]
struct TrainGaArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long, default_value_t = 30)]
    population: usize,
    #[arg(long, default_value_t = 8)]
    genes: usize,
    #[arg(long, default_value_t = 20.0)]
    weight: f64,
    #[arg(long, default_value_t = 10)]
    pool: usize,
    #[arg(long, default_value_t = 0.8)]
    mutation_prob: f64,
    #[arg(long, value_enum, default_value = "single")]
    mutation: MutationArg,
    #[arg(long, default_value_t = 30)]
    generations: usize,
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    /// Circuit JSON; the history CSV is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum AnsatzArg {
    He,
    Ud,
}

#[derive(Args, Serialize)]
struct TrainAnsatzArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long, value_enum)]
    kind: AnsatzArg,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 500)]
    max_evals: usize,
    /// Extra descents from the best point once the trust radius bottoms out.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Result JSON with parameters; the circuit JSON and history CSV are
    /// written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DecomposeArgs {
    /// Header-free CSV; each row holds `re,im` pairs.
    #[arg(long)]
    unitary: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SimplifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Enables accuracy-guarded ablation.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long, default_value_t = 50)]
    resolution: usize,
    /// Grid CSV (x, y, decision); two-feature data only.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Trained model JSON (alphas, bias, support indices, circuit path).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Train Gram matrix as header-free CSV.
    #[arg(long)]
    kernel_csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BenchmarkArgs {
    #[arg(long, default_value_t = 30)]
    generations: usize,
    #[arg(long, default_value_t = 500)]
    max_evals: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_data(data: &str, test: Option<&Path>, train_fraction: Option<f64>, seed: u64) -> Result<Dataset> {
    match (data, test) {
        ("moons", None) => moons_benchmark(seed),
        ("adhoc", None) => adhoc_benchmark(seed),
        (path, Some(test)) => Dataset::from_parts(Dataset::load_csv(path)?, Dataset::load_csv(test)?),
        (path, None) => Dataset::load_csv(path)?.split(train_fraction.unwrap_or_else(bench_fraction), seed),
    }
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<Dataset> {
        load_data(&self.data, self.test.as_deref(), self.train_fraction, seed)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn read_map(path: &Path) -> Result<FeatureMap> {
    FeatureMap::from_json(&std::fs::read_to_string(path)?)
}

fn gen_data(g: &GlobalArgs, a: &GenDataArgs) -> Result<Value> {
    let data = match a.kind {
        DataKind::Moons => make_moons(a.n, a.noise, g.seed)?,
        DataKind::Adhoc => make_adhoc(a.n, a.gap, g.seed)?,
    };
    if let Some(out) = &a.out {
        data.save_csv(out)?;
    }
    let mut result = json!({ "samples": data.len(), "features": data.dim(), "out": a.out });
    if let (Some(train), Some(test)) = (&a.out_train, &a.out_test) {
        let split = data.split(a.train_fraction.unwrap_or_else(bench_fraction), g.seed)?;
        split.train_set().save_csv(train)?;
        split.test_set().save_csv(test)?;
        result["train"] = json!({ "path": train, "samples": split.train_indices().len() });
        result["test"] = json!({ "path": test, "samples": split.test_indices().len() });
    }
    Ok(result)
}

fn train_ga(g: &GlobalArgs, a: &TrainGaArgs) -> Result<Value> {
    let data = a.data.load(g.seed)?;
    let cfg = GaConfig {
        population: a.population,
        genes: a.genes,
        weight: a.weight,
        pool_size: a.pool,
        mutation_prob: a.mutation_prob,
        mutation_mode: match a.mutation {
            MutationArg::Single => MutationMode::SingleBit,
            MutationArg::PerBit => MutationMode::PerBit,
        },
        generations: a.generations,
        n_qubits: a.qubits,
        shots: g.shots,
        seed: g.seed,
        svm: a.svm.config(g.seed),
    };
    let r = evolve(&cfg, &data)?;
    write_json(&a.out, &r.circuit)?;
    let history = sibling(&a.out, "_history.csv");
    r.write_history_csv(BufWriter::new(File::create(&history)?))?;
    Ok(json!({
        "best_chromosome": r.best,
        "fitness": r.eval.fitness,
        "accuracy": r.eval.accuracy,
        "gate_cost": r.eval.gate_cost,
        "circuit": r.circuit,
        "history_csv": history,
    }))
}

fn train_ansatz(g: &GlobalArgs, a: &TrainAnsatzArgs) -> Result<Value> {
    let data = a.data.load(g.seed)?;
    let spec = match a.kind {
        AnsatzArg::He => AnsatzSpec::hardware_efficient(a.depth),
        AnsatzArg::Ud => AnsatzSpec::unitary_decomposition(),
    };
    let spec = AnsatzSpec {
        n_features: data.dim(),
        ..spec
    };
    let opt = OptimizerConfig {
        max_evals: a.max_evals,
        restarts: a.restarts,
        ..OptimizerConfig::default()
    };
    let r = train(
        &spec,
        &data,
        &opt,
        &a.svm.config(g.seed),
        EvalMode::from_shots(g.shots, g.seed),
        g.seed,
    )?;
    let simplified = qfmap::simplify::peephole(&r.circuit);
    let history = sibling(&a.out, "_history.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&history)?));
    w.write_record(["iteration", "theta_norm", "objective"])
        .map_err(std::io::Error::other)?;
    for (i, h) in r.history.iter().enumerate() {
        w.write_record([i.to_string(), h.theta_norm.to_string(), h.value.to_string()])
            .map_err(std::io::Error::other)?;
    }
    w.flush()?;
    let circuit_path = sibling(&a.out, "_circuit.json");
    write_json(&circuit_path, &r.circuit)?;
    let result = json!({
        "spec": r.spec,
        "params": r.params,
        "accuracy": r.accuracy,
        "evals": r.evals,
        "capped": r.capped,
        "gate_cost": r.circuit.gate_cost(),
        "simplified_gate_cost": simplified.gate_cost(),
        "circuit": r.circuit,
        "circuit_json": circuit_path,
        "history_csv": history,
    });
    write_json(&a.out, &result)?;
    Ok(result)
}

fn decompose(a: &DecomposeArgs) -> Result<Value> {
    let u = read_unitary_csv(BufReader::new(File::open(&a.unitary)?))?;
    let circuit = qsd(&u)?;
    let v = unitary_of(&circuit, &[])?;
    let report = json!({
        "n_qubits": circuit.n_qubits(),
        "gate_cost": circuit.gate_cost(),
        "gates": circuit.len(),
        "input_unitarity_error": unitarity_error(&u),
        "reconstruction_error": phase_aligned_distance(&v, &u),
    });
    write_json(&a.out, &circuit)?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(report)
}

fn simplify_cmd(g: &GlobalArgs, a: &SimplifyArgs) -> Result<Value> {
    let map = read_map(&a.circuit)?;
    let (out, report) = match &a.data {
        Some(spec) => {
            let data = load_data(spec, a.test.as_deref(), a.train_fraction, g.seed)?;
            ablate(
                &map,
                &data,
                &a.svm.config(g.seed),
                EvalMode::from_shots(g.shots, g.seed),
            )?
        }
        None => {
            let (circuit, report) = simplify(&map.circuit);
            (
                FeatureMap {
                    circuit,
                    derived: map.derived.clone(),
                },
                report,
            )
        }
    };
    std::fs::write(&a.out, out.to_json()?)?;
    if let Some(path) = &a.report {
        write_json(path, &report)?;
    }
    Ok(json!({ "report": report, "circuit": out }))
}

fn eval(g: &GlobalArgs, a: &EvalArgs) -> Result<Value> {
    let map = read_map(&a.circuit)?;
    let data = a.data.load(g.seed)?;
    let resolution = if a.grid.is_some() { a.resolution } else { 0 };
    let mode = EvalMode::from_shots(g.shots, g.seed);
    let out = evaluate_with_grid(&map, &data, &a.svm.config(g.seed), mode, resolution)?;
    if let Some(path) = &a.grid {
        write_grid_csv(&out.grid, BufWriter::new(File::create(path)?))?;
    }
    if let Some(path) = &a.model {
        write_json(path, &json!({ "circuit": a.circuit, "model": out.model }))?;
    }
    if let Some(path) = &a.kernel_csv {
        let (xtr, _) = data.train();
        let k = kernel_matrix(&QuantumKernel::with_mode(map, mode), &xtr, &xtr)?;
        k.write_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(json!({ "report": out.report, "grid_rows": out.grid.len() }))
}

fn benchmark(g: &GlobalArgs, a: &BenchmarkArgs) -> Result<Value> {
    let mut cfg = BenchmarkConfig {
        data_seed: g.seed,
        ansatz_seed: g.seed,
        shots: g.shots,
        ..BenchmarkConfig::default()
    };
    for ga in [&mut cfg.moons_ga, &mut cfg.adhoc_ga] {
        ga.generations = a.generations;
        ga.seed = g.seed;
    }
    cfg.optimizer.max_evals = a.max_evals;
    let rows = run_benchmark(&cfg)?;
    eprint!("{}", render_table(&rows));
    let result = json!({ "rows": rows, "table": render_table(&rows) });
    if let Some(path) = &a.out {
        write_json(path, &result)?;
    }
    Ok(result)
}

fn run(cli: &Cli) -> Result<Value> {
    let g = &cli.global;
    match &cli.command {
        Command::GenData(a) => gen_data(g, a),
        Command::TrainGa(a) => train_ga(g, a),
        Command::TrainAnsatz(a) => train_ansatz(g, a),
        Command::Decompose(a) => decompose(a),
        Command::Simplify(a) => simplify_cmd(g, a),
        Command::Eval(a) => eval(g, a),
        Command::Benchmark(a) => benchmark(g, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.global.log_level)
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = run(&cli).and_then(|result| {
        let echo = json!({ "config": &cli, "result": result });
        println!("{}", serde_json::to_string_pretty(&echo)?);
        Ok(())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

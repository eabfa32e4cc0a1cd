use clap::{Args, Parser, Subcommand};
use primeforms_core::arch::{Arch, DensityEstimate, IntegralEstimate, RealWitness};
use primeforms_core::count::{
    arc_parameter, count_prime_solutions, gauss_average_csv, gauss_average_probe,
    major_arc_measure, minor_arc_probe, CountResult, MajorArcMeasure, MinorArcReport, Strategy,
};
use primeforms_core::local::{Budget, EulerProduct, HenselWitness, Local, SeriesTruncation};
use primeforms_core::numeric::primes_up_to;
use primeforms_core::pipeline::{analyze, compare, Factors, Prediction, Predictor, RunConfig};
use primeforms_core::poly::parse_system;
use primeforms_core::report::SCHEMA;
use primeforms_core::{Error, PolySystem};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "primeforms",
    version,
    about = "Circle-method laboratory for prime solutions of systems of forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// System file (text or JSON).
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    #[arg(long, global = true, env = "PRIMEFORMS_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for CSV tables.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    #[arg(long, global = true)]
    mc_samples: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    max_cost: Option<u128>,
    /// Comma-separated list of P values.
    #[arg(long = "p", global = true, value_delimiter = ',')]
    p_list: Option<Vec<u64>>,
    /// Singular series cutoff.
    #[arg(long, global = true)]
    h: Option<u64>,
    #[arg(long, global = true)]
    p_max: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Degree profile, Birch estimates, thresholds and block rank.
    Analyze,
    /// Singular series, Euler product and Hensel checks.
    Local,
    /// Singular integral, slab density and a real witness.
    Arch,
    /// Exact weighted prime-solution counts.
    Count,
    /// Predicted main term at each P.
    Predict,
    /// Observed counts against the prediction, with the hypothesis checklist.
    Compare,
    /// Minor-arc decay probe.
    ProbeArcs {
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Average of |C(q, a)| against q^(n - 3/2).
    ProbeGauss {
        #[arg(long, default_value_t = 50)]
        q_max: u64,
    },
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(Error::Budget { .. }) => 3,
            Failure::Core(Error::Invariant(_)) => 4,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

struct Setup {
    cfg: RunConfig,
    sys: PolySystem,
}

fn setup(c: &Common) -> Result<Setup, Failure> {
    let (mut cfg, base) = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
            let cfg = RunConfig::from_json(&text)?;
            (
                cfg,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            )
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = c.quad_nodes {
        cfg.quad_nodes = v;
    }
    if let Some(v) = c.mc_samples {
        cfg.mc_samples = v;
    }
    if let Some(v) = c.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = c.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = c.max_cost {
        cfg.max_cost = v;
    }
    if let Some(v) = &c.p_list {
        cfg.p_list = v.clone();
    }
    if let Some(v) = c.h {
        cfg.h = v;
    }
    if let Some(v) = c.p_max {
        cfg.p_max = v;
    }
    cfg.validate()?;
    let path = match (&c.system, &cfg.system) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) if p.is_relative() => base.join(p),
        (None, Some(p)) => p.clone(),
        (None, None) => {
            return Err(Failure::Usage(
                "no system given (--system or \"system\" in the config)".into(),
            ))
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
    let sys = parse_system(&text)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    Ok(Setup { cfg, sys })
}

fn emit<T: Serialize>(c: &Common, report: &T) -> Result<(), Failure> {
    let text =
        serde_json::to_string_pretty(report).map_err(|e| Failure::Usage(e.to_string()))? + "\n";
    match &c.out {
        Some(path) => fs::write(path, text).map_err(|e| io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_csv(c: &Common, name: &str, body: &str) -> Result<(), Failure> {
    if let Some(dir) = &c.csv {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LocalReport {
    schema: u32,
    system: String,
    series: SeriesTruncation,
    euler: EulerProduct,
    hensel: Vec<HenselWitness>,
}

#[derive(Serialize)]
struct ArchReport {
    schema: u32,
    system: String,
    integral: IntegralEstimate,
    slab: DensityEstimate,
    real_witness: Option<RealWitness>,
}

#[derive(Serialize)]
struct CountReport {
    schema: u32,
    system: String,
    rows: Vec<CountResult>,
}

#[derive(Serialize)]
struct PredictReport {
    schema: u32,
    system: String,
    factors: Factors,
    predictions: Vec<Prediction>,
}

#[derive(Serialize)]
struct ArcMeasureRow {
    p: u64,
    #[serde(flatten)]
    measure: MajorArcMeasure,
}

#[derive(Serialize)]
struct ArcsReport {
    schema: u32,
    system: String,
    probe: MinorArcReport,
    major_arc_measure: Vec<ArcMeasureRow>,
}

#[derive(Serialize)]
struct GaussReport<'a> {
    schema: u32,
    system: String,
    rows: &'a [primeforms_core::count::GaussAverageRow],
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    let Setup { cfg, sys } = setup(c)?;
    let system = sys.to_text();
    match cli.command {
        Command::Analyze => emit(c, &analyze(&sys, &cfg)?),
        Command::Local => {
            let local = Local::new(&sys, Budget::default());
            let series = local.singular_series(cfg.h, cfg.series_method)?;
            let euler = local.euler_product(cfg.p_max, cfg.k_max)?;
            let hensel = primes_up_to(cfg.p_max)
                .into_iter()
                .map(|p| local.hensel_check(p, cfg.k_max, cfg.seed))
                .collect::<Result<Vec<_>, _>>()?;
            write_csv(c, "series.csv", &series.to_csv())?;
            emit(
                c,
                &LocalReport {
                    schema: SCHEMA,
                    system,
                    series,
                    euler,
                    hensel,
                },
            )
        }
        Command::Arch => {
            let region = cfg.region_for(sys.n())?;
            let arch = Arch::new(&sys, &region, cfg.quad_spec())?;
            let integral = arch.singular_integral(cfg.theta_cutoff, cfg.mc_samples, cfg.seed)?;
            let slab = arch.real_density(cfg.epsilon, cfg.mc_samples, cfg.seed)?;
            let real_witness = arch.find_real_point(&sys, cfg.real_restarts, cfg.seed);
            emit(
                c,
                &ArchReport {
                    schema: SCHEMA,
                    system,
                    integral,
                    slab,
                    real_witness,
                },
            )
        }
        Command::Count => {
            let region = cfg.region_for(sys.n())?;
            let compiled = sys.compile();
            let rows = cfg
                .p_list
                .iter()
                .map(|&p| count_prime_solutions(&compiled, &region, p, cfg.strategy, cfg.max_cost))
                .collect::<Result<Vec<_>, _>>()?;
            let mut csv = String::from("P,weighted,prime_tuples,solutions,strategy\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.p, r.weighted, r.unweighted, r.solutions, r.strategy
                ));
            }
            write_csv(c, "count.csv", &csv)?;
            emit(
                c,
                &CountReport {
                    schema: SCHEMA,
                    system,
                    rows,
                },
            )
        }
        Command::Predict => {
            let region = cfg.region_for(sys.n())?;
            let pr = Predictor::new(&sys, &region, &cfg)?;
            let predictions = cfg.p_list.iter().map(|&p| pr.at(p)).collect();
            emit(
                c,
                &PredictReport {
                    schema: SCHEMA,
                    system,
                    factors: pr.factors,
                    predictions,
                },
            )
        }
        Command::Compare => {
            let report = compare(&sys, &cfg)?;
            write_csv(c, "compare.csv", &report.to_csv())?;
            write_csv(c, "plot.csv", &report.plot_data())?;
            emit(c, &report)
        }
        Command::ProbeArcs { samples } => {
            let region = cfg.region_for(sys.n())?;
            let probe =
                minor_arc_probe(&sys, &region, &cfg.p_list, samples, cfg.seed, cfg.max_cost)?;
            let degrees = sys.degrees();
            let major_arc_measure = cfg
                .p_list
                .iter()
                .map(|&p| ArcMeasureRow {
                    p,
                    measure: major_arc_measure(
                        &degrees,
                        p as f64,
                        arc_parameter(p as f64, sys.r()),
                    ),
                })
                .collect();
            write_csv(c, "arcs.csv", &probe.to_csv())?;
            emit(
                c,
                &ArcsReport {
                    schema: SCHEMA,
                    system,
                    probe,
                    major_arc_measure,
                },
            )
        }
        Command::ProbeGauss { q_max } => {
            let rows = gauss_average_probe(&sys, q_max, &Budget::default())?;
            write_csv(c, "gauss.csv", &gauss_average_csv(&rows))?;
            emit(
                c,
                &GaussReport {
                    schema: SCHEMA,
                    system,
                    rows: &rows,
                },
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

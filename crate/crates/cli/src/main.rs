use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use estat_core::bench::{self, BenchOp, BenchRecord};
use estat_core::{
    adcov, dcor, dcov, dvar, edist, edist_matrix, eqdist_test_multivariate,
    eqdist_test_univariate, init_threads_from_env, load_csv, pdcor, Dataset, Error, RngSeed,
    UnivariateSample,
};

mod format;

/// Energy statistics on CSV numeric matrices.
///
/// Each input file holds one observation per row. Set ESTAT_THREADS to cap
/// the number of worker threads.
#[derive(Parser)]
#[command(name = "estat", version)]
struct Cli {
    /// Print results as JSON with full precision.
    #[arg(long, global = true)]
    json: bool,

    /// Skip the first line of every input file.
    #[arg(long, global = true)]
    header: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy distance between two samples, or the distance matrix of three or more.
    Edist {
        #[arg(required = true, num_args = 2..)]
        files: Vec<PathBuf>,
    },
    /// Distance variance.
    Dvar {
        file: PathBuf,
        #[command(flatten)]
        bc: Bc,
    },
    /// Distance covariance.
    Dcov {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        bc: Bc,
    },
    /// Distance correlation, with both distance variances.
    Dcor {
        x: PathBuf,
        y: PathBuf,
        #[command(flatten)]
        bc: Bc,
    },
    /// Bias-corrected partial distance correlation of X and Y given Z.
    Pdcor { x: PathBuf, y: PathBuf, z: PathBuf },
    /// Permutation test for equal distributions.
    Eqdist {
        x: PathBuf,
        y: PathBuf,
        /// Number of permutations.
        #[arg(long, default_value_t = 999)]
        perms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random-projection approximation of the squared distance covariance.
    Adcov {
        x: PathBuf,
        y: PathBuf,
        /// Number of projections.
        #[arg(long, default_value_t = estat_core::approx::DEFAULT_REPLICATES)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time operations over a grid of sizes and fit log-log slopes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [1000, 2000, 4000, 8000])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 5])]
        p: Vec<usize>,
        /// Operations: edist, dvar, dcov, dcor, adcov, dcov1d.
        #[arg(long, value_delimiter = ',', default_values = ["dcor", "edist"])]
        ops: Vec<BenchOp>,
        #[arg(long, default_value_t = 3)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the slope table to this file.
        #[arg(long)]
        slopes: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Bc {
    /// Use the bias-corrected estimator.
    #[arg(long)]
    bc: bool,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("estat: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("estat: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads_from_env()?;
    let load = |path: &Path| load_csv(path, cli.header);
    let stdout = io::stdout();
    let mut out = stdout.lock();

    let value = match cli.command {
        Command::Edist { files } => {
            let data = files.iter().map(|f| load(f)).collect::<Result<Vec<_>, _>>()?;
            if data.len() == 2 {
                let v = edist(&data[0], &data[1])?;
                Output::Scalar("edist", v)
            } else {
                let m = edist_matrix(&data)?;
                Output::Matrix(m.rows().map(<[f64]>::to_vec).collect())
            }
        }
        Command::Dvar { file, bc } => Output::Scalar("dvar", dvar(&load(&file)?, bc.bc)?),
        Command::Dcov { x, y, bc } => Output::Scalar("dcov", dcov(&load(&x)?, &load(&y)?, bc.bc)?),
        Command::Dcor { x, y, bc } => {
            let r = dcor(&load(&x)?, &load(&y)?, bc.bc)?;
            Output::Record(vec![
                ("dcov", r.dcov),
                ("dvarX", r.dvar_x),
                ("dvarY", r.dvar_y),
                ("dcor", r.dcor),
            ])
        }
        Command::Pdcor { x, y, z } => {
            Output::Scalar("pdcor", pdcor(&load(&x)?, &load(&y)?, &load(&z)?)?)
        }
        Command::Eqdist { x, y, perms, seed } => {
            let (x, y) = (load(&x)?, load(&y)?);
            let r = if x.p() == 1 && y.p() == 1 {
                eqdist_test_univariate(&univariate(&x)?, &univariate(&y)?, perms, RngSeed(seed))?
            } else {
                eqdist_test_multivariate(&x, &y, perms, RngSeed(seed))?
            };
            if cli.json {
                Output::Json(json!({
                    "statistic": r.statistic,
                    "permutations": r.permutations,
                    "exceed_count": r.exceed_count,
                    "p_value": r.p_value,
                }))
            } else {
                Output::Scalar("p_value", r.p_value)
            }
        }
        Command::Adcov { x, y, k, seed } => {
            let r = adcov(&load(&x)?, &load(&y)?, k, RngSeed(seed))?;
            if cli.json {
                Output::Json(json!({ "estimate": r.estimate, "k": r.k, "seed": seed }))
            } else {
                Output::Scalar("estimate", r.estimate)
            }
        }
        Command::Bench {
            n,
            p,
            ops,
            replicates,
            seed,
            slopes,
        } => {
            let grid: Vec<(usize, usize)> =
                p.iter().flat_map(|&p| n.iter().map(move |&n| (n, p))).collect();
            return run_bench(&mut out, &grid, &ops, replicates, seed, slopes, cli.json);
        }
    };
    value.write(&mut out, cli.json)?;
    Ok(())
}

fn univariate(d: &Dataset) -> Result<UnivariateSample, Error> {
    UnivariateSample::new(d.column(0).to_vec())
}

fn run_bench(
    out: &mut impl Write,
    grid: &[(usize, usize)],
    ops: &[BenchOp],
    replicates: usize,
    seed: u64,
    slopes_path: Option<PathBuf>,
    as_json: bool,
) -> Result<(), Failure> {
    let mut io_result = Ok(());
    if !as_json {
        writeln!(out, "{}", bench::RECORD_HEADER)?;
    }
    let records = bench::run_bench_with(grid, ops, replicates, RngSeed(seed), |r| {
        if !as_json && io_result.is_ok() {
            io_result = writeln!(out, "{}", bench::format_record(r)).and_then(|_| out.flush());
        }
    })?;
    io_result?;
    let fits = bench::fit_slopes(&records)?;
    if let Some(path) = slopes_path {
        let mut file = std::fs::File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        bench::write_slopes(&mut file, &fits)?;
    }
    if as_json {
        let records: Vec<Value> = records.iter().map(record_json).collect();
        let fits: Vec<Value> = fits
            .iter()
            .map(|(op, p, f)| {
                json!({ "op": op.name(), "p": p, "slope": f.slope, "ci_low": f.ci_low, "ci_high": f.ci_high })
            })
            .collect();
        writeln!(out, "{}", json!({ "records": records, "slopes": fits }))?;
    } else {
        writeln!(out)?;
        bench::write_slopes(out, &fits)?;
    }
    Ok(())
}

fn record_json(r: &BenchRecord) -> Value {
    json!({ "op": r.op.name(), "n": r.n, "p": r.p, "replicate": r.replicate, "seconds": r.seconds })
}

enum Output {
    Scalar(&'static str, f64),
    Record(Vec<(&'static str, f64)>),
    Matrix(Vec<Vec<f64>>),
    Json(Value),
}

impl Output {
    fn write(self, out: &mut impl Write, as_json: bool) -> io::Result<()> {
        match (self, as_json) {
            (Output::Json(v), _) => writeln!(out, "{v}"),
            (Output::Scalar(name, v), true) => writeln!(out, "{}", json!({ name: v })),
            (Output::Scalar(_, v), false) => writeln!(out, "{}", format::significant(v)),
            (Output::Record(fields), true) => {
                let map: serde_json::Map<String, Value> =
                    fields.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
                writeln!(out, "{}", Value::Object(map))
            }
            (Output::Record(fields), false) => {
                for (_, v) in fields {
                    writeln!(out, "{}", format::significant(v))?;
                }
                Ok(())
            }
            (Output::Matrix(rows), true) => writeln!(out, "{}", json!({ "matrix": rows })),
            (Output::Matrix(rows), false) => write!(out, "{}", format::matrix(&rows)),
        }
    }
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srbm_cli::format::to_json;
use srbm_cli::instance::{read_instance, Instance, RawData};
use srbm_cli::plot::slice_plot;
use srbm_cli::report::{
    build_diagnosis, build_projection, check_tol, exit_code, one_based_empirical, one_based_error,
    one_based_vp, validated, SimulationDocument, Verdict, DEFAULT_TOL,
};
use srbm_core::classify::is_m_matrix;
use srbm_core::product_form::alpha_formula;
use srbm_core::simulate::{empirical_product_form_test, simulate_with_dump, Dump, Scheme, SimConfig};
use srbm_core::tandem::{conjectured_path, entrance_velocities};
use srbm_core::{Error, Result, TandemSpec};

const EXIT_PRODUCT_FORM: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_NOT_PRODUCT_FORM: u8 = 3;

/// Product-form diagnostics for reflecting Brownian motions in the orthant.
///
/// Exit status: 0 product form (or success), 3 not product form, 2 invalid
/// instance or arguments, 1 internal error. Stations are numbered from 1.
#[derive(Parser)]
#[command(name = "srbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide product form by skew symmetry and by symmetry points.
    Diagnose {
        instance: PathBuf,
        /// Write the document here instead of standard output (no timestamp).
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Two-dimensional SRBM obtained from a pair of stations.
    Project {
        instance: PathBuf,
        #[arg(long, num_args = 2, value_names = ["I", "J"], required = true)]
        pair: Vec<usize>,
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Slice ellipse, ray points and symmetry points of a pair.
    Plot {
        instance: PathBuf,
        #[arg(long, num_args = 2, value_names = ["I", "J"], required = true)]
        pair: Vec<usize>,
        /// SVG output; printed to standard output when neither --svg nor --csv is given.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Monte Carlo estimate of the stationary law.
    Simulate(SimulateArgs),
    /// Expand a tandem spec into raw (sigma, mu, r) data.
    Tandem(TandemArgs),
}

#[derive(Args)]
struct SimulateArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 2e4)]
    horizon: f64,
    #[arg(long, default_value_t = 2e3)]
    burn_in: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Independent paths run concurrently with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    replications: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Bridge)]
    scheme: SchemeArg,
    /// Compare rates with the closed-form alpha; exit 3 when the check fails.
    #[arg(long)]
    check_alpha: bool,
    /// Raw path CSV of the first replication.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    dump_every: u64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SchemeArg {
    Bridge,
    Endpoint,
}

#[derive(Args)]
struct TandemArgs {
    /// Instance file in the tandem form; alternatively give --beta and --c.
    instance: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    c: Option<Vec<f64>>,
    /// Print entrance velocities and the normal vector instead.
    #[arg(long)]
    vp: bool,
    /// Also build the conjectured path to this point (three stations).
    #[arg(long, num_args = 3, value_names = ["Z1", "Z2", "Z3"])]
    path: Option<Vec<f64>>,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pair_indices(pair: &[usize]) -> Result<(usize, usize)> {
    let (i, j) = (pair[0], pair[1]);
    if i == 0 || j == 0 {
        return Err(Error::InvalidConfig("stations are numbered from 1".into()));
    }
    Ok((i - 1, j - 1))
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}

fn diagnose(path: &Path, json_out: Option<&Path>, tol: f64) -> Result<u8> {
    let instance = read_instance(path)?;
    let mut doc = build_diagnosis(&instance, tol)?;
    if json_out.is_none() {
        doc.generated_at = Some(timestamp());
    }
    emit(&to_json(&doc), json_out)?;
    let pf = &doc.product_form;
    if !pf.agree {
        eprintln!(
            "error: skew-symmetry ({}) and geometric ({}) verdicts disagree",
            pf.skew_ok, pf.geometric_ok
        );
        return Ok(EXIT_INTERNAL);
    }
    Ok(match doc.verdict {
        Verdict::ProductForm => {
            eprintln!("product form");
            EXIT_PRODUCT_FORM
        }
        Verdict::NotProductForm => {
            let failing: Vec<String> = pf
                .failing_pairs
                .iter()
                .map(|f| format!("({}, {})", f.i, f.j))
                .collect();
            eprintln!("not product form; failing pairs: {}", failing.join(" "));
            EXIT_NOT_PRODUCT_FORM
        }
    })
}

fn project(path: &Path, pair: &[usize], json_out: Option<&Path>, tol: f64) -> Result<u8> {
    let instance = read_instance(path)?;
    let (i, j) = pair_indices(pair)?;
    let doc = build_projection(&instance, i, j, tol)?;
    emit(&to_json(&doc), json_out)?;
    if doc.degenerate {
        return Err(Error::DegeneratePair { i, j, c: doc.c_ij });
    }
    Ok(match doc.product_form_2d {
        Some(true) => EXIT_PRODUCT_FORM,
        _ => EXIT_NOT_PRODUCT_FORM,
    })
}

fn plot(
    path: &Path,
    pair: &[usize],
    svg: Option<&Path>,
    csv: Option<&Path>,
    samples: usize,
    tol: f64,
) -> Result<u8> {
    check_tol(tol)?;
    let data = read_instance(path)?.data()?;
    data.validate()?;
    let (i, j) = pair_indices(pair)?;
    let figure = slice_plot(&data, i, j, samples, tol)?;
    if let Some(p) = csv {
        std::fs::write(p, figure.to_csv())?;
    }
    if svg.is_some() || csv.is_none() {
        emit(&figure.to_svg(), svg)?;
    }
    Ok(EXIT_PRODUCT_FORM)
}

fn run_simulation(args: &SimulateArgs) -> Result<u8> {
    let instance = read_instance(&args.instance)?;
    let (data, _) = validated(&instance)?;
    let mut warnings = Vec::new();
    if !is_m_matrix(data.r())? {
        warnings.push(
            "R is not an M-matrix: the stability condition is only necessary, \
             so a stationary law may not exist"
                .to_string(),
        );
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let config = SimConfig {
        step: args.step,
        horizon: args.horizon,
        burn_in: args.burn_in,
        seed: args.seed,
        batches: args.batches,
        initial_state: None,
        replications: args.replications,
        scheme: match args.scheme {
            SchemeArg::Bridge => Scheme::Bridge,
            SchemeArg::Endpoint => Scheme::Endpoint,
        },
    };
    let estimate = match &args.dump {
        Some(path) => {
            let mut writer = BufWriter::new(File::create(path)?);
            let est = simulate_with_dump(
                &data,
                &config,
                Some(Dump {
                    writer: &mut writer,
                    every: args.dump_every,
                }),
            )?;
            writer.flush()?;
            est
        }
        None => simulate_with_dump(&data, &config, None)?,
    };
    let (alpha, empirical) = if args.check_alpha {
        let alpha = alpha_formula(&data)?;
        let verdict = empirical_product_form_test(&estimate, &alpha);
        (Some(alpha), Some(one_based_empirical(verdict)))
    } else {
        (None, None)
    };
    let code = match &empirical {
        Some(v) if !v.all_pass => EXIT_NOT_PRODUCT_FORM,
        _ => EXIT_PRODUCT_FORM,
    };
    let doc = SimulationDocument {
        config,
        estimate,
        alpha,
        empirical,
        warnings,
    };
    emit(&to_json(&doc), args.json_out.as_deref())?;
    Ok(code)
}

fn tandem(args: &TandemArgs) -> Result<u8> {
    let spec = match (&args.instance, &args.beta, &args.c) {
        (Some(path), None, None) => match read_instance(path)? {
            Instance::Tandem(spec) => spec,
            Instance::Raw(_) => {
                return Err(Error::InvalidInstance(
                    "expected a {\"tandem\": ...} instance".into(),
                ))
            }
        },
        (None, Some(beta), Some(c)) => TandemSpec::new(beta.clone(), c.clone())?,
        _ => {
            return Err(Error::InvalidConfig(
                "give either an instance file or both --beta and --c".into(),
            ))
        }
    };
    let out = args.json_out.as_deref();
    if !args.vp && args.path.is_none() {
        emit(&to_json(&RawData::from(&spec.build_srbm()?)), out)?;
        return Ok(EXIT_PRODUCT_FORM);
    }
    let mut vp = match entrance_velocities(&spec) {
        Ok(vp) => one_based_vp(vp),
        Err(Error::NotProductForm) => {
            eprintln!("the tandem spec does not satisfy c_0 = c_i for all i < d");
            return Ok(EXIT_NOT_PRODUCT_FORM);
        }
        Err(e) => return Err(e),
    };
    if let Some(z) = &args.path {
        vp.path = Some(conjectured_path(&spec, [z[0], z[1], z[2]])?);
    }
    emit(&to_json(&vp), out)?;
    Ok(EXIT_PRODUCT_FORM)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Diagnose {
            instance,
            json_out,
            tol,
        } => diagnose(instance, json_out.as_deref(), *tol),
        Command::Project {
            instance,
            pair,
            json_out,
            tol,
        } => project(instance, pair, json_out.as_deref(), *tol),
        Command::Plot {
            instance,
            pair,
            svg,
            csv,
            samples,
            tol,
        } => plot(instance, pair, svg.as_deref(), csv.as_deref(), *samples, *tol),
        Command::Simulate(args) => run_simulation(args),
        Command::Tandem(args) => tandem(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {}", one_based_error(e));
            ExitCode::from(code)
        }
    }
}

//! Command-line surface over the library: deterministic setup and
//! publication, encoding, trilinear evaluation, zero testing, trapdoor
//! decoding, the self-attack harness, and benchmarks.
//!
//! Artifacts are flat JSON documents versioned with a `"v"` field. Exit
//! codes: 0 success, 2 precondition violation, 3 schema or serialization
//! error, 4 internal invariant breach (a 4 is always a bug). Verbosity is
//! controlled by the `TRILINEAR_LOG` environment variable.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::attacks::{
    global_descent_scan, harvest, linear_term_attack, mumford_constraints,
    protocol_linear_term_attack, toy_cubic_curve, toy_hyperplane, AttackReport, LinearTermOutcome,
    SampleSet,
};
use crate::descent::{global_descent, mask_tuple, DescentTable, DescentTuple};
use crate::field::ExtensionField;
use crate::pairing::{mu_dlog, BasisSide};
use crate::protocol::{
    encode, setup, trapdoor_decode, trilinear_eval, zero_test, AlgebraElement, ProtocolEngine,
    PublicParams, SetupParams, Trapdoor,
};
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Parser)]
#[command(
    name = "trilinear",
    version,
    about = "Trilinear maps from jacobian descent: setup, evaluation, and self-attack tooling"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate parameters deterministically and write publicparams.json
    /// and trapdoor.json.
    Setup(SetupArgs),
    /// Encode an exponent as a randomized third-slot group element.
    Encode(EncodeArgs),
    /// Evaluate the trilinear map from the published artifact alone.
    Eval(EvalArgs),
    /// Test whether an encoding lies in the hidden relation module.
    ZeroTest(ZeroTestArgs),
    /// Decode an encoding with the trapdoor.
    Decode(DecodeArgs),
    /// Run a self-attack against published parameters or a planted toy.
    Attack(AttackArgs),
    /// Measure per-operation medians of the published evaluator.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SetupArgs {
    /// Field characteristic (odd prime <= 31).
    #[arg(long, default_value_t = 7)]
    p: u64,
    /// Extension degree of K over the prime field (4..=8).
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Curve genus (2).
    #[arg(long, default_value_t = 2)]
    g: usize,
    /// Torsion prime dividing p^d - 1.
    #[arg(long, default_value_t = 5)]
    ell: u64,
    /// Setup seed; the same seed reproduces both artifacts byte for byte.
    #[arg(long)]
    seed: u64,
    /// Degree bound for encodings (defaults to d).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Number of published generator maps (defaults to d^2).
    #[arg(long = "N1")]
    n1: Option<usize>,
    /// Sparse annihilator terms mixed into each encoding (defaults to d^2).
    #[arg(long)]
    t: Option<usize>,
    /// Directory for the output artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Exponent to encode, reduced mod ell.
    z: u64,
    /// Published parameters.
    #[arg(long, default_value = "publicparams.json")]
    pp: PathBuf,
    /// Encoding randomness seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the encoding.
    #[arg(long, default_value = "gamma.json")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// First slot exponent.
    x: u64,
    /// Second slot exponent.
    y: u64,
    /// Path to the encoding produced by `encode`.
    gamma: PathBuf,
    /// Published parameters.
    #[arg(long, default_value = "publicparams.json")]
    pp: PathBuf,
}

#[derive(Args)]
struct ZeroTestArgs {
    /// Path to the encoding produced by `encode`.
    gamma: PathBuf,
    /// Published parameters.
    #[arg(long, default_value = "publicparams.json")]
    pp: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Path to the encoding produced by `encode`.
    gamma: PathBuf,
    /// The private side of a setup.
    #[arg(long, default_value = "trapdoor.json")]
    trapdoor: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    /// One of: linear-term, descent-scan, harvest-stats.
    name: String,
    /// Published parameters (victim of linear-term and harvest-stats).
    #[arg(long)]
    pp: Option<PathBuf>,
    /// Attack a planted toy victim instead of published parameters.
    #[arg(long, value_parser = ["hyperplane", "cubic"])]
    toy: Option<String>,
    /// Attack randomness / harvesting seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of points to harvest or sample.
    #[arg(long = "N", default_value_t = 500)]
    n: usize,
    /// Random-mix tries for the descent scan.
    #[arg(long, default_value_t = 1000)]
    t: usize,
    /// Private side; required by descent-scan (a defender-side audit).
    #[arg(long)]
    trapdoor: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Published parameters.
    #[arg(long, default_value = "publicparams.json")]
    pp: PathBuf,
    /// Randomness seed for the benched operations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// On-disk shape of an encoding: the element plus enough context to reject
/// cross-parameter misuse early.
#[derive(Serialize, Deserialize)]
struct GammaFile {
    v: u32,
    ell: u64,
    gamma: AlgebraElement,
}

/// Parse arguments from the process environment, run, and return the exit
/// code for the process.
pub fn run() -> i32 {
    let env = env_logger::Env::new().filter_or("TRILINEAR_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Setup(a) => cmd_setup(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Eval(a) => cmd_eval(a),
        Command::ZeroTest(a) => cmd_zero_test(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::pre(format!("cannot read {what} at {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_params(path: &Path) -> Result<PublicParams> {
    read_json(path, "published parameters")
}

fn read_gamma(path: &Path, ell: Option<u64>) -> Result<AlgebraElement> {
    let file: GammaFile = read_json(path, "encoding")?;
    if file.v != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "encoding format version {} unsupported, want {FORMAT_VERSION}",
            file.v
        )));
    }
    if let Some(ell) = ell {
        if file.ell != ell {
            return Err(Error::Schema(format!(
                "encoding was produced for ell = {}, parameters use ell = {ell}",
                file.ell
            )));
        }
    }
    Ok(file.gamma)
}

fn emit(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_setup(a: SetupArgs) -> Result<()> {
    let mut sp = SetupParams::new(a.p, a.d, a.g, a.ell, a.seed);
    if let Some(n) = a.n {
        sp.n = n;
    }
    if let Some(n1) = a.n1 {
        sp.n1 = n1;
    }
    if let Some(t) = a.t {
        sp.t = t;
    }
    let out = setup(&sp)?;
    fs::create_dir_all(&a.out)?;
    let pp_path = a.out.join("publicparams.json");
    let td_path = a.out.join("trapdoor.json");
    write_json(&pp_path, &out.params)?;
    write_json(&td_path, &out.trapdoor)?;
    emit(&json!({
        "v": FORMAT_VERSION,
        "publicparams": pp_path,
        "trapdoor": td_path,
        "ell": out.params.ell,
        "zeta": out.params.zeta,
    }))
}

fn cmd_encode(a: EncodeArgs) -> Result<()> {
    let pp = read_params(&a.pp)?;
    let gamma = encode(&pp, a.z, a.seed)?;
    write_json(
        &a.out,
        &GammaFile {
            v: FORMAT_VERSION,
            ell: pp.ell,
            gamma,
        },
    )?;
    emit(&json!({ "v": FORMAT_VERSION, "out": a.out }))
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let pp = read_params(&a.pp)?;
    let gamma = read_gamma(&a.gamma, Some(pp.ell))?;
    let value = trilinear_eval(&pp, a.x, a.y, &gamma)?;
    let kk = ExtensionField::new(pp.field.p, pp.field.modulus.clone())?;
    let exponent = mu_dlog(&kk, &pp.zeta.value, &value, pp.ell)?;
    emit(&json!({
        "v": FORMAT_VERSION,
        "value": value,
        "exponent": exponent,
    }))
}

fn cmd_zero_test(a: ZeroTestArgs) -> Result<()> {
    let pp = read_params(&a.pp)?;
    let gamma = read_gamma(&a.gamma, Some(pp.ell))?;
    let zero = zero_test(&pp, &gamma)?;
    emit(&json!({ "v": FORMAT_VERSION, "zero": zero }))
}

fn cmd_decode(a: DecodeArgs) -> Result<()> {
    let td: Trapdoor = read_json(&a.trapdoor, "trapdoor")?;
    let gamma = read_gamma(&a.gamma, Some(td.ell))?;
    let z = trapdoor_decode(&td, &gamma)?;
    emit(&json!({ "v": FORMAT_VERSION, "z": z }))
}

fn cmd_attack(a: AttackArgs) -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(a.seed ^ 0x6174_7461_636b);
    let report = match a.name.as_str() {
        "linear-term" => {
            let outcome = if let Some(kind) = &a.toy {
                let toy = match kind.as_str() {
                    "hyperplane" => toy_hyperplane(7, 4, a.n.min(200), a.seed)?,
                    _ => toy_cubic_curve(7, 4, a.n.min(200), a.seed)?,
                };
                let coords: Vec<_> = toy.samples.points.iter().map(|p| p.coords.as_slice()).collect();
                linear_term_attack(&toy.kk, &coords, &toy.s_prime, toy.target, &mut rng)?
            } else {
                let pp = read_params(required(&a.pp, "--pp (or --toy)")?)?;
                let samples = harvest(&pp, a.n, a.seed)?;
                protocol_linear_term_attack(&pp, &samples, &mut rng)?
            };
            let LinearTermOutcome { report, .. } = outcome;
            report
        }
        "descent-scan" => {
            let td: Trapdoor = read_json(required(&a.trapdoor, "--trapdoor")?, "trapdoor")?;
            let (pp_r, engine) = td.regenerate()?;
            if let Some(pp_path) = &a.pp {
                let pp = read_params(pp_path)?;
                if serde_json::to_value(&pp)? != serde_json::to_value(&pp_r)? {
                    return Err(Error::Schema(
                        "trapdoor does not regenerate the given parameters".into(),
                    ));
                }
            }
            descent_scan_report(&engine, a.t, &mut rng)?
        }
        "harvest-stats" => {
            let pp = read_params(required(&a.pp, "--pp")?)?;
            let samples = harvest(&pp, a.n, a.seed)?;
            harvest_stats_report(&samples)
        }
        other => {
            return Err(Error::pre(format!(
                "unknown attack '{other}'; expected linear-term, descent-scan, or harvest-stats"
            )));
        }
    };
    let value = serde_json::to_value(&report)?;
    emit(&value)?;
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn required<'a>(opt: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    opt.as_deref()
        .ok_or_else(|| Error::pre(format!("this attack needs {flag}")))
}

/// Defender-side audit: descend the curve's own weight constraints through
/// the private basis, verify the scanner flags them in the clear, mask them
/// through the hidden relation module, and verify the scanner then finds
/// nothing across random mixes.
fn descent_scan_report(
    engine: &ProtocolEngine,
    tries: usize,
    rng: &mut impl rand::Rng,
) -> Result<AttackReport> {
    let kk = &engine.kk;
    let d = kk.degree();
    let table = DescentTable::build(kk, engine.u.clone(), 6)?;
    let constraints = mumford_constraints(&engine.curve)?;
    let planted: Vec<DescentTuple> = constraints
        .iter()
        .map(|c| global_descent(kk, c, &table))
        .collect::<Result<_>>()?;
    let masked: Vec<DescentTuple> = planted
        .iter()
        .map(|t| mask_tuple(kk, t, &constraints, &table, rng))
        .collect::<Result<_>>()?;
    let (planted_hits, _) = global_descent_scan(kk, &planted, &table, 0, rng);
    let (masked_hits, _) = global_descent_scan(kk, &masked, &table, tries, rng);
    let mut dims = std::collections::BTreeMap::new();
    dims.insert("d".into(), d);
    dims.insert("tuples".into(), planted.len());
    dims.insert("planted_hits".into(), planted_hits.len());
    dims.insert("masked_hits".into(), masked_hits.len());
    dims.insert("tries".into(), tries);
    let leaked = !masked_hits.is_empty();
    Ok(AttackReport {
        attack: "descent-scan".into(),
        applicable: true,
        dims,
        recovered: leaked,
        details: if leaked {
            "a masked tuple still exposes a global-descent block — do not publish".into()
        } else if planted_hits.is_empty() {
            "scanner failed to flag the unmasked constraint descents — audit is broken".into()
        } else {
            format!(
                "unmasked constraint descents are flagged, masked ones leak nothing across \
                 {tries} random mixes (expected random hit rate about p^{d} / p^{})",
                d * d
            )
        },
    })
}

fn harvest_stats_report(samples: &SampleSet) -> AttackReport {
    let distinct: std::collections::BTreeSet<_> =
        samples.points.iter().map(|p| &p.coords).collect();
    let beta: std::collections::BTreeSet<_> = samples
        .points
        .iter()
        .filter(|p| p.side == BasisSide::Beta)
        .map(|p| &p.coords)
        .collect();
    let alpha: std::collections::BTreeSet<_> = samples
        .points
        .iter()
        .filter(|p| p.side == BasisSide::Alpha)
        .map(|p| &p.coords)
        .collect();
    let revisits = samples
        .points
        .iter()
        .filter(|p| p.word.starts_with("revisit("))
        .count();
    let mut dims = std::collections::BTreeMap::new();
    dims.insert("points".into(), samples.len());
    dims.insert("distinct".into(), distinct.len());
    dims.insert("beta_distinct".into(), beta.len());
    dims.insert("alpha_distinct".into(), alpha.len());
    dims.insert("revisits".into(), revisits);
    AttackReport {
        attack: "harvest-stats".into(),
        applicable: true,
        dims,
        recovered: false,
        details: "distinct counts measure the component-wise full-weight closure of the \
                  published points under the published operations"
            .into(),
    }
}

fn median_ms(samples: &mut Vec<Duration>) -> f64 {
    samples.sort_unstable();
    let mid = samples[samples.len() / 2];
    mid.as_secs_f64() * 1e3
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let pp = read_params(&a.pp)?;
    let engine = ProtocolEngine::from_params(&pp)?;
    let mut rng = ChaCha12Rng::seed_from_u64(a.seed ^ 0x6265_6e63_68);
    let alpha = &pp.points.d_alpha_prime;
    let beta = &pp.points.d_beta;

    let mut pairing = vec![];
    for _ in 0..9 {
        let t = Instant::now();
        engine.pair(alpha, beta, &mut rng)?;
        pairing.push(t.elapsed());
    }
    let mut add = vec![];
    for _ in 0..9 {
        let t = Instant::now();
        engine.point_add(beta, beta)?;
        add.push(t.elapsed());
    }
    let mut enc = vec![];
    let mut gamma = None;
    for i in 0..9 {
        let t = Instant::now();
        let g = encode(&pp, 3, a.seed.wrapping_add(i))?;
        enc.push(t.elapsed());
        gamma = Some(g);
    }
    let gamma = gamma.expect("at least one encode rep");
    let mut eval = vec![];
    for _ in 0..5 {
        let t = Instant::now();
        trilinear_eval(&pp, 2, 3, &gamma)?;
        eval.push(t.elapsed());
    }
    emit(&json!({
        "v": FORMAT_VERSION,
        "median_ms": {
            "pairing": median_ms(&mut pairing),
            "add": median_ms(&mut add),
            "encode": median_ms(&mut enc),
            "eval": median_ms(&mut eval),
        },
        "reps": { "pairing": 9, "add": 9, "encode": 9, "eval": 5 },
    }))
}

//! Command-line frontend over the `monosig` library: compute signatures,
//! aggregate them to blockwise marginals and invert, draw words, evaluate
//! rate functionals, verify the conditioned sampler, and tabulate decay
//! exponents.
//!
//! Exit codes: 0 success, 2 unreadable/malformed inputs or bad flags,
//! 3 domain violations in well-formed data, 4 size/depth caps exceeded.

mod output;
mod svg;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monosig::rng::{rng_from_seed, RNG_ALGORITHM};
use monosig::*;
use output::{sig6, write_csv, write_json, write_json_compact, write_svg, CliError, Meta};
use serde::Deserialize;
use serde_json::json;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::result::Result;
use svg::{overlay, trace, Polyline, PALETTE};

#[derive(Parser)]
#[command(
    name = "monosig",
    version,
    about = "Signatures of monotone paths and their blockwise inversion"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute a truncated signature; print level-sum diagnostics
    Sign(SignArgs),
    /// Aggregate a signature to block marginals and reconstruct the path
    Invert(InvertArgs),
    /// Draw words from a signature's word weights
    Sample(SampleArgs),
    /// Evaluate rate functionals of a candidate against a reference path
    Rate(RateArgs),
    /// Compare the conditioned word sampler against exact word weights
    Simulate(SimulateArgs),
    /// Tabulate word-event probabilities and decay exponents across sizes
    Decay(DecayArgs),
}

#[derive(Args)]
struct SignArgs {
    /// Monotone path JSON ({"dim", "segments"})
    #[arg(long, value_name = "FILE", conflicts_with = "poly")]
    path: Option<PathBuf>,
    /// Polynomial curve JSON ({"kind": "poly", "coeffs"}); needs --mesh
    #[arg(long, value_name = "FILE", requires = "mesh")]
    poly: Option<PathBuf>,
    /// Uniform sampling mesh for --poly; must divide 1
    #[arg(long, requires = "poly", conflicts_with = "path")]
    mesh: Option<f64>,
    /// Truncation depth
    #[arg(long)]
    depth: usize,
    /// Write the signature JSON here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    /// Number of equal blocks (with --n)
    #[arg(long, requires = "n", conflicts_with = "partition")]
    k: Option<usize>,
    /// Block size for --k equal blocks
    #[arg(long, requires = "k", conflicts_with = "partition")]
    n: Option<usize>,
    /// Explicit block sizes, comma separated (e.g. 4,4 or 2,2,2,2)
    #[arg(long, value_delimiter = ',')]
    partition: Option<Vec<usize>>,
}

impl PartitionArgs {
    fn resolve(&self, default: Option<Vec<usize>>) -> Result<Vec<usize>, CliError> {
        if let Some(p) = &self.partition {
            return Ok(p.clone());
        }
        match (self.k, self.n) {
            (Some(k), Some(n)) => {
                if k == 0 {
                    return Err(CliError::Parse("--k must be at least 1".into()));
                }
                Ok(vec![n; k])
            }
            _ => default.ok_or_else(|| {
                CliError::Parse("specify --k K --n B or --partition a,b,c".into())
            }),
        }
    }
}

#[derive(Args)]
struct InvertArgs {
    /// Signature JSON produced by `monosig sign`
    #[arg(long, value_name = "FILE")]
    sig: PathBuf,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Joint argmax over block-count profiles instead of row-wise marginals
    #[arg(long)]
    joint: bool,
    /// Write the marginal table CSV here (j,m,weight)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the full reconstruction JSON here
    #[arg(long, value_name = "FILE")]
    recon: Option<PathBuf>,
    /// Write the joint block-count weights JSON here
    #[arg(long, value_name = "FILE")]
    blocks: Option<PathBuf>,
    /// Write an overlay figure of the estimator here
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    /// Monotone path JSON drawn alongside the estimator in the figure
    #[arg(long, value_name = "FILE", requires = "svg")]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Signature JSON produced by `monosig sign`
    #[arg(long, value_name = "FILE")]
    sig: PathBuf,
    /// Word length to draw at
    #[arg(long)]
    depth: usize,
    /// Number of words to draw
    #[arg(long)]
    trials: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Write the sampled words and marginal summary JSON here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RateArgs {
    /// Reference monotone path JSON
    #[arg(long, value_name = "FILE")]
    path: PathBuf,
    /// Candidate JSON: {"dim","grid","segments"}, or a monotone path
    /// taken in its normalized unit-speed parametrization
    #[arg(long, value_name = "FILE")]
    candidate: PathBuf,
    /// Time change JSON ({"dim": 1, "grid", "segments"}); adds the joint
    /// space-time rate of (candidate, time change)
    #[arg(long = "time-change", value_name = "FILE")]
    time_change: Option<PathBuf>,
    /// Write the rate report JSON here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Reference monotone path JSON
    #[arg(long, value_name = "FILE")]
    path: PathBuf,
    /// Word length to simulate at
    #[arg(long)]
    depth: usize,
    /// Number of sampler draws
    #[arg(long)]
    trials: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass/fail cap on the total-variation distance
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the simulation report JSON here
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum EventKind {
    /// Every letter is e1
    AllE1,
    /// The first floor(fraction * N) letters are all e1
    E1Prefix,
    /// The word's lattice path stays within an l1 ball around a center path
    Ball,
}

#[derive(Args)]
struct DecayArgs {
    /// Reference monotone path JSON
    #[arg(long, value_name = "FILE")]
    path: PathBuf,
    /// Word event to track
    #[arg(long, value_enum)]
    event: EventKind,
    /// Prefix fraction for e1-prefix
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Center path JSON for ball ({"dim","grid","segments"} or monotone)
    #[arg(long, value_name = "FILE")]
    center: Option<PathBuf>,
    /// l1 radius for ball
    #[arg(long)]
    radius: Option<f64>,
    /// Word sizes, comma separated (default 2,4,6,8,10,12)
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Shorthand for sizes 1..=MAX
    #[arg(long, conflicts_with = "sizes")]
    max_n: Option<usize>,
    /// Write the decay table CSV here (N,probability,decay_rate)
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Sign(a) => cmd_sign(a),
        Cmd::Invert(a) => cmd_invert(a),
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Rate(a) => cmd_rate(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Decay(a) => cmd_decay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

// ---------------------------------------------------------------- loaders

#[derive(Deserialize)]
struct PathShape {
    dim: usize,
    segments: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct PolyShape {
    kind: String,
    coeffs: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct CandidateShape {
    dim: usize,
    grid: Vec<f64>,
    segments: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct SigShape {
    dim: usize,
    depth: usize,
    levels: Vec<Vec<f64>>,
}

fn parse_shape<T: serde::de::DeserializeOwned>(
    name: &str,
    text: &str,
) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{name}: {e}")))
}

fn load_monotone(path: &Path, meta: &mut Meta) -> Result<MonotonePath, CliError> {
    let file = meta.read_input(path)?;
    let shape: PathShape = parse_shape(&file.name, &file.text)?;
    Ok(MonotonePath::new(shape.dim, shape.segments)?)
}

fn load_signature(path: &Path, meta: &mut Meta) -> Result<TruncatedSignature, CliError> {
    let file = meta.read_input(path)?;
    let shape: SigShape = parse_shape(&file.name, &file.text)?;
    TruncatedSignature::from_levels(shape.dim, shape.depth, shape.levels).map_err(|e| {
        if e.is_capacity() {
            CliError::Capability(e.to_string())
        } else {
            CliError::Parse(format!("{}: {e}", file.name))
        }
    })
}

/// Candidate files carry an explicit grid; a plain monotone path is also
/// accepted and taken in its normalized unit-speed parametrization.
fn load_candidate(path: &Path, meta: &mut Meta) -> Result<CandidatePath, CliError> {
    let file = meta.read_input(path)?;
    let value: serde_json::Value = parse_shape(&file.name, &file.text)?;
    if value.get("grid").is_some() {
        let shape: CandidateShape =
            serde_json::from_value(value).map_err(|e| CliError::Parse(format!("{}: {e}", file.name)))?;
        Ok(CandidatePath::new(shape.dim, shape.grid, shape.segments)?)
    } else {
        let shape: PathShape =
            serde_json::from_value(value).map_err(|e| CliError::Parse(format!("{}: {e}", file.name)))?;
        let path = MonotonePath::new(shape.dim, shape.segments)?;
        Ok(path.normalize()?.natural_parametrization()?)
    }
}

fn load_time_change(path: &Path, meta: &mut Meta) -> Result<CandidatePath, CliError> {
    let file = meta.read_input(path)?;
    let shape: CandidateShape = parse_shape(&file.name, &file.text)?;
    Ok(CandidatePath::new(shape.dim, shape.grid, shape.segments)?)
}

// --------------------------------------------------------------- commands

fn cmd_sign(a: SignArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("sign");
    let raw = match (&a.path, &a.poly) {
        (Some(p), None) => load_monotone(p, &mut meta)?,
        (None, Some(p)) => {
            let file = meta.read_input(p)?;
            let shape: PolyShape = parse_shape(&file.name, &file.text)?;
            if shape.kind != "poly" {
                return Err(CliError::Parse(format!(
                    "{}: unsupported curve kind {:?}",
                    file.name, shape.kind
                )));
            }
            let spec = PolySpec::new(shape.coeffs)?;
            discretize(|t| spec.eval(t), spec.dim(), a.mesh.unwrap())?
        }
        _ => return Err(CliError::Parse("specify --path FILE or --poly FILE".into())),
    };
    let length = raw.l1_length();
    let norm = raw.normalize()?;
    let sig = path_signature(&norm, a.depth)?;
    println!(
        "path: {} segments, dim {}, total variation {:.12e} (normalized before signing)",
        norm.segments().len(),
        norm.dim(),
        length
    );
    if a.depth >= 1 {
        let endpoint = norm
            .endpoint()
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!("level 1 (endpoint): ({endpoint})");
    }
    println!("level sums against 1/n!:");
    println!("{:>5}  {:>14}  {:>14}  {:>9}", "level", "sum", "expected", "rel err");
    for (n, sum, expected, rel) in level_sum_report(&sig, 1.0)? {
        println!("{n:>5}  {sum:>14.6e}  {expected:>14.6e}  {rel:>9.2e}");
    }
    if let Some(out) = &a.out {
        let payload = serde_json::to_value(&sig).expect("signature to json");
        write_json(out, &meta, payload)?;
        println!("signature written to {}", out.display());
    }
    Ok(())
}

fn cmd_invert(a: InvertArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("invert");
    let sig = load_signature(&a.sig, &mut meta)?;
    let partition = a.partition.resolve(None)?;
    let n: usize = partition.iter().sum();
    let dist = word_weights(&sig, n)?;
    let bw = symmetrized_weights(&dist, &partition)?;
    let mode = if a.joint {
        ArgmaxMode::Joint
    } else {
        ArgmaxMode::RowwiseMarginal
    };
    let rec = reconstruct_from_blocks(&bw, mode)?;
    println!(
        "partition {:?}, word length {}, {} argmax",
        partition,
        n,
        if a.joint { "joint" } else { "row-wise" }
    );
    for (j, row) in rec.marginal_rows.iter().enumerate() {
        let cells = row
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!(
            "block {} (size {}): [{cells}]  argmax {}{}",
            j + 1,
            partition[j],
            rec.argmax[j],
            if rec.ties[j] { "  (tie)" } else { "" }
        );
    }
    println!("independence gap: {:.3e}", rec.independence_gap);
    let steps = rec
        .estimator
        .grid()
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let mut cum = vec![0.0; rec.estimator.dim()];
            for seg in &rec.estimator.segments()[..i] {
                for (c, v) in cum.iter_mut().zip(seg) {
                    *c += v;
                }
            }
            format!(
                "{q:.4} -> ({})",
                cum.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    println!("estimator: {steps}");
    if let Some(out) = &a.out {
        let mut rows = Vec::new();
        for (j, row) in rec.marginal_rows.iter().enumerate() {
            for (m, &w) in row.iter().enumerate() {
                rows.push(format!("{},{},{}", j + 1, m, sig6(w)));
            }
        }
        write_csv(out, &meta, "j,m,weight", &rows)?;
        println!("marginal table written to {}", out.display());
    }
    if let Some(recon) = &a.recon {
        let payload = serde_json::to_value(&rec).expect("reconstruction to json");
        write_json(recon, &meta, payload)?;
        println!("reconstruction written to {}", recon.display());
    }
    if let Some(blocks) = &a.blocks {
        let payload = serde_json::to_value(&bw).expect("block weights to json");
        write_json(blocks, &meta, payload)?;
        println!("block weights written to {}", blocks.display());
    }
    if let Some(svg_path) = &a.svg {
        let mut lines = Vec::new();
        if let Some(truth) = &a.truth {
            let true_path = load_monotone(truth, &mut meta)?;
            let cp = true_path.normalize()?.natural_parametrization()?;
            lines.push(Polyline {
                label: "true path".into(),
                color: PALETTE[1],
                points: trace(&cp),
            });
        }
        lines.push(Polyline {
            label: format!("estimator {partition:?}"),
            color: PALETTE[0],
            points: trace(&rec.estimator),
        });
        write_svg(svg_path, &overlay(&lines, &meta.svg_comment()))?;
        println!("figure written to {}", svg_path.display());
    }
    Ok(())
}

fn cmd_sample(a: SampleArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("sample");
    let sig = load_signature(&a.sig, &mut meta)?;
    meta.seed = Some(a.seed);
    meta.algorithm = Some(RNG_ALGORITHM);
    let dist = word_weights(&sig, a.depth)?;
    let sampler = WordSampler::new(&dist)?;
    let partition = a.partition.resolve(Some(vec![a.depth]))?;
    let exact = piece_marginals(&symmetrized_weights(&dist, &partition)?);
    let d = dist.dim();
    // composition rank lookup per block, in the lex-ascending order
    let rank_maps: Vec<HashMap<Vec<usize>, usize>> = partition
        .iter()
        .map(|&nj| {
            compositions(nj, d)
                .into_iter()
                .enumerate()
                .map(|(r, c)| (c, r))
                .collect()
        })
        .collect();
    let mut boundaries = vec![0usize];
    for &b in &partition {
        boundaries.push(boundaries.last().unwrap() + b);
    }
    let mut empirical: Vec<Vec<f64>> =
        exact.rows().iter().map(|r| vec![0.0; r.len()]).collect();
    let mut rng = rng_from_seed(a.seed);
    let inv_n = 1.0 / a.depth as f64;
    let mut words_json = Vec::with_capacity(a.trials);
    for _ in 0..a.trials {
        let word = sampler.sample(&mut rng);
        for (j, w) in boundaries.windows(2).enumerate() {
            let mut counts = vec![0usize; d];
            for &l in &word.letters()[w[0]..w[1]] {
                counts[l as usize] += 1;
            }
            empirical[j][rank_maps[j][&counts]] += 1.0;
        }
        if a.out.is_some() {
            let mut cum = vec![0.0f64; d];
            let mut points = Vec::with_capacity(a.depth + 1);
            points.push(cum.clone());
            for &l in word.letters() {
                cum[l as usize] += inv_n;
                points.push(cum.clone());
            }
            words_json.push(json!({
                "letters": word.letters(),
                "index": word.index(),
                "lattice_points": points,
            }));
        }
    }
    let scale = 1.0 / a.trials as f64;
    for row in &mut empirical {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    let max_dev = empirical
        .iter()
        .zip(exact.rows())
        .flat_map(|(e, x)| e.iter().zip(x).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    println!(
        "drew {} words of length {} (seed {}, {})",
        a.trials, a.depth, a.seed, RNG_ALGORITHM
    );
    println!(
        "empirical vs exact block marginals, partition {:?}: max |dev| = {:.3e}",
        partition, max_dev
    );
    if let Some(out) = &a.out {
        let payload = json!({
            "n": a.depth,
            "trials": a.trials,
            "seed": a.seed,
            "algorithm": RNG_ALGORITHM,
            "partition": partition,
            "empirical_marginals": empirical,
            "exact_marginals": exact.rows(),
            "max_marginal_deviation": max_dev,
            "words": words_json,
        });
        write_json_compact(out, &meta, payload)?;
        println!("samples written to {}", out.display());
    }
    Ok(())
}

fn rate_to_json(eval: &RateEval) -> serde_json::Value {
    json!({
        "value": if eval.value.is_finite() {
            serde_json::Value::from(eval.value)
        } else {
            serde_json::Value::Null
        },
        "infinite": eval.value.is_infinite(),
        "feasible": eval.feasible,
        "violation": eval.violation,
    })
}

fn print_rate(label: &str, eval: &RateEval) {
    if eval.value.is_finite() {
        println!("{label}: {:.12e}", eval.value);
    } else {
        let why = match eval.violation.as_deref() {
            Some(v) if v.starts_with("endpoint mass") => "A^d_1 endpoint".to_string(),
            Some(v) => v.to_string(),
            None => "infinite".to_string(),
        };
        println!("{label}: +inf ({why})");
    }
}

fn cmd_rate(a: RateArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("rate");
    let reference = load_monotone(&a.path, &mut meta)?;
    let candidate = load_candidate(&a.candidate, &mut meta)?;
    let w = rate_w(&candidate, &reference)?;
    print_rate("rate_W", &w);
    let mut payload = serde_json::Map::new();
    payload.insert("rate_w".into(), rate_to_json(&w));
    if let Some(tc) = &a.time_change {
        let xi = load_time_change(tc, &mut meta)?;
        let xt = rate_xt(&candidate, &xi, &reference)?;
        print_rate("rate_XT", &xt);
        payload.insert("rate_xt".into(), rate_to_json(&xt));
    }
    if let Some(out) = &a.out {
        write_json(out, &meta, serde_json::Value::Object(payload))?;
        println!("rate report written to {}", out.display());
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("simulate");
    let reference = load_monotone(&a.path, &mut meta)?;
    meta.seed = Some(a.seed);
    meta.algorithm = Some(RNG_ALGORITHM);
    let norm = reference.normalize()?;
    let sig = path_signature(&norm, a.depth)?;
    let dist = word_weights(&sig, a.depth)?;
    let mut counts = vec![0u64; dist.weights().len()];
    let mut rng = rng_from_seed(a.seed);
    for _ in 0..a.trials {
        let sample = simulate_conditioned_word(&norm, a.depth, &mut rng)?;
        counts[sample.word.index()] += 1;
    }
    let tv = 0.5
        * counts
            .iter()
            .zip(dist.weights())
            .map(|(&c, &p)| (c as f64 / a.trials as f64 - p).abs())
            .sum::<f64>();
    println!(
        "tv_distance: {:.6e} ({} trials, word length {}, seed {}, {})",
        tv, a.trials, a.depth, a.seed, RNG_ALGORITHM
    );
    let pass = a.threshold.map(|th| tv <= th);
    if let (Some(th), Some(ok)) = (a.threshold, pass) {
        println!("threshold {th}: {}", if ok { "PASS" } else { "FAIL" });
    }
    if let Some(out) = &a.out {
        let mut payload = serde_json::Map::new();
        payload.insert("trials".into(), a.trials.into());
        payload.insert("tv_distance".into(), tv.into());
        payload.insert("seed".into(), a.seed.into());
        payload.insert("algorithm".into(), RNG_ALGORITHM.into());
        payload.insert("n".into(), a.depth.into());
        if let Some(th) = a.threshold {
            payload.insert("threshold".into(), th.into());
            payload.insert("pass".into(), pass.unwrap().into());
        }
        write_json(out, &meta, serde_json::Value::Object(payload))?;
        println!("simulation report written to {}", out.display());
    }
    Ok(())
}

fn cmd_decay(a: DecayArgs) -> Result<(), CliError> {
    let mut meta = Meta::new("decay");
    let reference = load_monotone(&a.path, &mut meta)?;
    let event = match a.event {
        EventKind::AllE1 => WordEvent::AllFirstLetter,
        EventKind::E1Prefix => WordEvent::FirstLetterPrefix {
            fraction: a.fraction,
        },
        EventKind::Ball => {
            let center_path = a.center.as_ref().ok_or_else(|| {
                CliError::Parse("--event ball needs --center FILE and --radius R".into())
            })?;
            let radius = a.radius.ok_or_else(|| {
                CliError::Parse("--event ball needs --radius R".into())
            })?;
            WordEvent::SupNormBall {
                center: load_candidate(center_path, &mut meta)?,
                radius,
            }
        }
    };
    let sizes = match (&a.sizes, a.max_n) {
        (Some(s), _) => s.clone(),
        (None, Some(m)) => (1..=m).collect(),
        (None, None) => vec![2, 4, 6, 8, 10, 12],
    };
    let rows = empirical_decay(&reference, &event, &sizes)?;
    println!("{:>4}  {:>12}  {:>12}", "N", "probability", "decay_rate");
    for row in &rows {
        println!(
            "{:>4}  {:>12}  {:>12}",
            row.n,
            sig6(row.probability),
            sig6(row.decay_rate)
        );
    }
    if let Some(out) = &a.out {
        let lines: Vec<String> = rows
            .iter()
            .map(|r| format!("{},{},{}", r.n, sig6(r.probability), sig6(r.decay_rate)))
            .collect();
        write_csv(out, &meta, "N,probability,decay_rate", &lines)?;
        println!("decay table written to {}", out.display());
    }
    Ok(())
}

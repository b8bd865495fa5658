//! Command-line front end.
//!
//! Subcommands map one-to-one onto the library areas: `test` estimates
//! rejection rates of the canonical testers, `witness` runs the square-witness
//! pipeline, `generate` emits hard instances and arithmetic sets, `oracle`
//! exposes the exact references, `experiment` runs a Monte Carlo plan, and
//! `lemma` checks the registered sampling lemmas against their stated bounds.
//!
//! Exit codes: 0 when the command (and any verdict it renders) succeeds,
//! 2 when a check fails (a lemma does not pass, a verifier says no, a
//! domination certificate does not exist), 1 for operational errors.
//! `SUBTEST_THREADS` caps the worker pool used by the Monte Carlo paths.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use thiserror::Error;

use subtest::core::{CoreError, CountVector, Edge, EdgeDistribution, MassFunction, RngSeed};
use subtest::generators::{
    behrend_set, generate_instance, parse_instance_core, pattern_from_json, property_to_json,
    threefold_sidon_set, zn_sidon_set, Family, GeneratorError, Group, Side, SidonSet,
    TestInstance, Verification,
};
use subtest::harness::{
    default_lemma_params, estimate_rejection, lemma_check, run_experiment, run_lemma_suite,
    ExperimentPlan, HarnessError, LemmaOutcome, LemmaReport, DEFAULT_LEMMA_TRIALS, LEMMA_IDS,
};
use subtest::oracles::{
    check_domination_counts, enumerate_violations, exact_distance,
    exact_tv_sample_distributions, verify_3ap_free, verify_exactly_one_copy, verify_kfold_sidon,
    DominationOutcome, OracleError,
};
use subtest::testers::{PatternGraph, Property, TesterError};
use subtest::witness::{
    classify, concentrated_budget, descendant, dilute_budget, square_witness, WitnessError,
};
use subtest::{mass_to_f64, parse_mass, rat_int, render_mass, Rat};

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} is not valid JSON: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Tester(#[from] TesterError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

// ---------------------------------------------------------------------------
// argument grammar
// ---------------------------------------------------------------------------

/// Laboratory for one-sided property testing of edge distributions:
/// canonical testers, LP witnesses, hard instances, exact oracles, Monte
/// Carlo experiments, and registered lemma checks.
#[derive(Parser)]
#[command(name = "subtest", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a canonical tester repeatedly and print accept/reject tallies as CSV
    Test(TestArgs),
    /// Solve the square-witness program for an instance and emit it as JSON
    Witness(WitnessArgs),
    /// Generate a hard instance (or an arithmetic set) as JSON
    Generate(GenerateArgs),
    /// Exact reference computations with JSON input and output
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Run an experiment plan and write the report as CSV
    Experiment(ExperimentArgs),
    /// Check a registered sampling lemma against its stated bound
    Lemma(LemmaArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Property: bip, clique, hom:<pattern>, or free:<pattern>; a pattern is
    /// edge, triangle, square, path:<t>, complete:<k>, or a JSON file
    #[arg(long)]
    property: String,
    /// Instance file (JSON)
    #[arg(long)]
    instance: PathBuf,
    /// Samples drawn per trial
    #[arg(long)]
    m: u64,
    /// Number of independent trials
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Master seed; trial t derives its own stream from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WitnessArgs {
    /// Instance file (JSON)
    #[arg(long)]
    instance: PathBuf,
    /// Distance parameter, e.g. 1/4 or 0.25
    #[arg(long)]
    eps: String,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Family: triangle, square, bipartite:<k>, tree:<pattern>, or clique
    #[arg(long, conflicts_with = "set")]
    family: Option<String>,
    /// Arithmetic set export: behrend:<n>, sidon:<p>, or zn-sidon:<n>
    #[arg(long)]
    set: Option<String>,
    /// Size parameter passed to the family
    #[arg(long, conflicts_with = "set")]
    n: Option<u32>,
    /// Which side to generate: yes, no, or pair
    #[arg(long, default_value = "no", conflicts_with = "set")]
    side: String,
    /// Master seed for the construction
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Exact distance from an instance to the property
    Distance {
        /// Instance file (JSON)
        #[arg(long)]
        instance: PathBuf,
        /// Property override; defaults to the property stored in the instance
        #[arg(long)]
        property: Option<String>,
    },
    /// Enumerate the minimal violations of a property inside an instance
    Violations {
        /// Instance file (JSON)
        #[arg(long)]
        instance: PathBuf,
        /// Property override; defaults to the property stored in the instance
        #[arg(long)]
        property: Option<String>,
    },
    /// Exact total variation between the m-sample processes of two families
    Tv {
        /// Family file: an instance, or {"distributions": [{n, edges, weights}, ...]}
        #[arg(long)]
        yes: PathBuf,
        /// Family file for the other side
        #[arg(long)]
        no: PathBuf,
        /// Number of samples shown to the distinguisher
        #[arg(long)]
        m: u64,
    },
    /// Decide whether one count-vector distribution dominates another
    Dominate {
        /// Distribution file: {"atoms": [{"counts": [[atom, count], ...], "mass": "1/2"}, ...]}
        #[arg(long)]
        mu: PathBuf,
        /// Distribution file for the candidate dominator
        #[arg(long)]
        nu: PathBuf,
        /// Mass fraction of mu that must be coupled, e.g. 3/4
        #[arg(long)]
        lambda1: String,
        /// Scale applied to nu inside the coupling, e.g. 1/2
        #[arg(long)]
        lambda2: String,
    },
    /// Verify a structural claim about a set or an edge set
    Verify {
        /// Claim: 3ap-free, sidon, or one-copy
        #[arg(long)]
        kind: String,
        /// Input file: an integer list or set JSON for the arithmetic claims,
        /// an instance for one-copy
        #[arg(long)]
        input: PathBuf,
        /// Pattern for one-copy: edge, triangle, square, path:<t>,
        /// complete:<k>, or a JSON file
        #[arg(long)]
        pattern: Option<String>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Plan file (JSON)
    #[arg(long)]
    plan: PathBuf,
    /// Report file (CSV)
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct LemmaArgs {
    /// Lemma id, or "all" for the whole registered suite
    #[arg(long)]
    id: String,
    /// Parameter file (JSON); defaults to the shipped parameters
    #[arg(long)]
    params: Option<PathBuf>,
    /// Number of Monte Carlo trials
    #[arg(long, default_value_t = DEFAULT_LEMMA_TRIALS)]
    trials: u64,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the full reports as a JSON array instead of summary lines
    #[arg(long)]
    json: bool,
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Test(args) => run_test(args),
        Cmd::Witness(args) => run_witness(args),
        Cmd::Generate(args) => run_generate(args),
        Cmd::Oracle(cmd) => run_oracle(cmd),
        Cmd::Experiment(args) => run_experiment_cmd(args),
        Cmd::Lemma(args) => run_lemma(args),
    }
}

// ---------------------------------------------------------------------------
// test
// ---------------------------------------------------------------------------

fn run_test(args: TestArgs) -> Result<ExitCode, CliError> {
    let property = parse_property_arg(&args.property)?;
    let (instance, _) = load_instance(&args.instance, property.clone())?;
    let est = estimate_rejection(
        &instance,
        &property,
        args.m,
        args.trials,
        RngSeed::new(args.seed, 0),
    )?;
    let accepts = est.trials - est.rejections;
    println!("schema=1");
    println!("property,m,trials,accepts,rejections,rejection_rate,std_error");
    println!(
        "{},{},{},{},{},{:.6},{:.6}",
        args.property, est.m, est.trials, accepts, est.rejections, est.rate, est.std_error
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// witness
// ---------------------------------------------------------------------------

fn run_witness(args: WitnessArgs) -> Result<ExitCode, CliError> {
    let eps = parse_rat_arg(&args.eps)?;
    let fallback = Property::HFree(PatternGraph::square());
    let (instance, _) = load_instance(&args.instance, fallback)?;

    let witness = square_witness(&instance.mu, &eps)?;
    let desc = descendant(&witness)?;
    let label = classify(&desc, &eps)?;

    let squares: Vec<Value> = witness
        .weights()
        .iter()
        .map(|(square, w)| {
            let edges: Vec<Value> = square.iter().map(edge_json).collect();
            json!({"edges": edges, "weight": render_mass(w)})
        })
        .collect();
    let matching = json!({
        "epsilon": render_mass(witness.epsilon()),
        "n": witness.n(),
        "support": witness.support_len(),
        "total": render_mass(&witness.total()),
        "fourth_power_sum": render_mass(&witness.fourth_power_sum()),
        "squares": squares,
    });

    // Per-edge slack in the load constraint: p(e) minus the total weight of
    // the squares through e. Nonnegative by construction.
    let mut load: BTreeMap<Edge, Rat> = BTreeMap::new();
    for (square, w) in witness.weights() {
        for e in square {
            *load.entry(*e).or_insert_with(|| rat_int(0)) += w.clone();
        }
    }
    let slacks: Vec<Value> = instance
        .mu
        .mass()
        .support()
        .map(|(e, mass)| {
            let used = load.get(e).cloned().unwrap_or_else(|| rat_int(0));
            json!({"edge": edge_json(e), "slack": render_mass(&(mass.clone() - used))})
        })
        .collect();

    let budgets = json!({
        "dilute": dilute_budget(witness.n(), mass_to_f64(&eps))?,
        "concentrated": concentrated_budget(&witness)?,
    });

    let mut top = Map::new();
    top.insert("matching".into(), matching);
    top.insert("descendant".into(), dist_to_json(&desc));
    top.insert("case".into(), json!(label.label.as_str()));
    top.insert(
        "classification".into(),
        json!({
            "dilute_mass": render_mass(&label.dilute_mass),
            "concentrated_mass": render_mass(&label.concentrated_mass),
            "warning": label.warning,
        }),
    );
    top.insert("slacks".into(), Value::Array(slacks));
    top.insert("budgets".into(), budgets);

    emit_json(&Value::Object(top), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

fn run_generate(args: GenerateArgs) -> Result<ExitCode, CliError> {
    let seed = RngSeed::new(args.seed, 0);
    if let Some(set) = &args.set {
        let value = generate_set(set, seed)?;
        emit_json(&value, args.out.as_deref())?;
        return Ok(ExitCode::SUCCESS);
    }

    let family_arg = args
        .family
        .as_deref()
        .ok_or_else(|| usage("one of --family or --set is required"))?;
    let family = parse_family_arg(family_arg)?;
    let n = args
        .n
        .ok_or_else(|| usage("--n is required with --family"))?;

    let text = match args.side.as_str() {
        "pair" => {
            let yes = generate_instance(&family, n, Side::Yes, seed)?;
            let no = generate_instance(&family, n, Side::No, seed)?;
            let pair = json!({"yes": yes.to_json(), "no": no.to_json()});
            let mut s = serde_json::to_string_pretty(&pair).expect("pair serializes");
            s.push('\n');
            s
        }
        side => {
            let side = Side::parse(side)?;
            generate_instance(&family, n, side, seed)?.to_json_string()
        }
    };
    emit_text(&text, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn generate_set(spec: &str, seed: RngSeed) -> Result<Value, CliError> {
    if let Some(n) = spec.strip_prefix("behrend:") {
        let n: u64 = n
            .parse()
            .map_err(|_| usage(format!("bad behrend size {n}")))?;
        let elements = behrend_set(n)?;
        return Ok(json!({
            "kind": "behrend",
            "n": n,
            "size": elements.len(),
            "elements": elements,
        }));
    }
    let set = if let Some(p) = spec.strip_prefix("sidon:") {
        let p: u64 = p.parse().map_err(|_| usage(format!("bad prime {p}")))?;
        threefold_sidon_set(p, seed)?
    } else if let Some(n) = spec.strip_prefix("zn-sidon:") {
        let n: u64 = n
            .parse()
            .map_err(|_| usage(format!("bad group order {n}")))?;
        zn_sidon_set(n, seed)?
    } else {
        return Err(usage(format!(
            "unknown set {spec}; use behrend:<n>, sidon:<p>, or zn-sidon:<n>"
        )));
    };
    Ok(sidon_to_json(&set))
}

fn sidon_to_json(set: &SidonSet) -> Value {
    json!({
        "kind": "sidon",
        "group": group_to_json(&set.group),
        "fold": set.fold,
        "size": set.elements.len(),
        "elements": set.elements,
    })
}

fn group_to_json(group: &Group) -> Value {
    match *group {
        Group::Zn { n } => json!({"zn": n}),
        Group::PrimePlane { p } => json!({"prime_plane": p}),
    }
}

fn group_from_json(v: &Value) -> Result<Group, CliError> {
    let obj = v
        .as_object()
        .ok_or_else(|| usage("group must be an object like {\"zn\": 7}"))?;
    if let Some(n) = obj.get("zn").and_then(Value::as_u64) {
        return Ok(Group::Zn { n });
    }
    if let Some(p) = obj.get("prime_plane").and_then(Value::as_u64) {
        return Ok(Group::PrimePlane { p });
    }
    Err(usage("group must carry a zn or prime_plane order"))
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn run_oracle(cmd: OracleCmd) -> Result<ExitCode, CliError> {
    match cmd {
        OracleCmd::Distance { instance, property } => {
            let (inst, property) = load_instance_with_property(&instance, property.as_deref())?;
            let d = exact_distance(&inst.positives, inst.mu.mass(), &property, inst.n)?;
            let out = json!({
                "n": inst.n,
                "property": property_to_json(&property),
                "distance": render_mass(&d),
                "distance_float": mass_to_f64(&d),
            });
            emit_json(&out, None)?;
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Violations { instance, property } => {
            let (inst, property) = load_instance_with_property(&instance, property.as_deref())?;
            let hg = enumerate_violations(&property, inst.n, &inst.positives)?;
            let minimal = hg.verify_minimal(&property)?;
            let hyperedges: Vec<Value> = hg
                .hyperedges
                .iter()
                .map(|h| {
                    let entries: Vec<Value> = h
                        .iter()
                        .map(|(e, present)| json!({"edge": edge_json(e), "present": present}))
                        .collect();
                    Value::Array(entries)
                })
                .collect();
            let out = json!({
                "n": inst.n,
                "property": property_to_json(&property),
                "count": hg.len(),
                "minimal": minimal,
                "hyperedges": hyperedges,
            });
            emit_json(&out, None)?;
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Tv { yes, no, m } => {
            let family_yes = load_distribution_family(&yes)?;
            let family_no = load_distribution_family(&no)?;
            let tv = exact_tv_sample_distributions(&family_yes, &family_no, m)?;
            let out = json!({
                "m": m,
                "yes_members": family_yes.len(),
                "no_members": family_no.len(),
                "tv": render_mass(&tv),
                "tv_float": mass_to_f64(&tv),
            });
            emit_json(&out, None)?;
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::Dominate {
            mu,
            nu,
            lambda1,
            lambda2,
        } => {
            let mu = load_count_distribution(&mu)?;
            let nu = load_count_distribution(&nu)?;
            let lambda1 = parse_rat_arg(&lambda1)?;
            let lambda2 = parse_rat_arg(&lambda2)?;
            match check_domination_counts(&mu, &nu, &lambda1, &lambda2)? {
                DominationOutcome::Dominates(cert) => {
                    let coupling: Vec<Value> = cert
                        .entries
                        .iter()
                        .map(|(from, to, mass)| {
                            json!({
                                "mu_atom": counts_json(from),
                                "nu_atom": counts_json(to),
                                "mass": render_mass(mass),
                            })
                        })
                        .collect();
                    let out = json!({
                        "dominates": true,
                        "lambda1": render_mass(&cert.lambda1),
                        "lambda2": render_mass(&cert.lambda2),
                        "achieved": render_mass(&cert.achieved),
                        "verified": cert.verify(&mu, &nu, |w, z| w.dominates(z)),
                        "coupling": coupling,
                    });
                    emit_json(&out, None)?;
                    Ok(ExitCode::SUCCESS)
                }
                DominationOutcome::Infeasible { optimum } => {
                    let out = json!({
                        "dominates": false,
                        "lambda1": render_mass(&lambda1),
                        "lambda2": render_mass(&lambda2),
                        "optimum": render_mass(&optimum),
                    });
                    emit_json(&out, None)?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        OracleCmd::Verify {
            kind,
            input,
            pattern,
        } => run_verify(&kind, &input, pattern.as_deref()),
    }
}

fn run_verify(kind: &str, input: &Path, pattern: Option<&str>) -> Result<ExitCode, CliError> {
    let v = read_json(input)?;
    let (verified, detail) = match kind {
        "3ap-free" => {
            let elements = elements_from_json(&v)?;
            (verify_3ap_free(&elements), json!(elements.len()))
        }
        "sidon" => {
            let set = sidon_from_json(&v)?;
            (verify_kfold_sidon(&set), json!(set.elements.len()))
        }
        "one-copy" => {
            let spec =
                pattern.ok_or_else(|| usage("--pattern is required for one-copy"))?;
            let h = parse_pattern_arg(spec)?;
            let core = parse_instance_core(&v)?;
            (verify_exactly_one_copy(&core.positives, &h)?, json!(core.positives.len()))
        }
        other => {
            return Err(usage(format!(
                "unknown claim {other}; use 3ap-free, sidon, or one-copy"
            )))
        }
    };
    let out = json!({"kind": kind, "size": detail, "verified": verified});
    emit_json(&out, None)?;
    Ok(if verified {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn elements_from_json(v: &Value) -> Result<Vec<u64>, CliError> {
    let arr = match v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("elements")
            .and_then(Value::as_array)
            .ok_or_else(|| usage("set file lacks an elements array"))?,
        _ => return Err(usage("set file must be an integer array or carry one")),
    };
    arr.iter()
        .map(|x| {
            x.as_u64()
                .ok_or_else(|| usage(format!("set element {x} is not a nonnegative integer")))
        })
        .collect()
}

fn sidon_from_json(v: &Value) -> Result<SidonSet, CliError> {
    let obj = v
        .as_object()
        .ok_or_else(|| usage("sidon set file must be a JSON object"))?;
    let group = group_from_json(
        obj.get("group")
            .ok_or_else(|| usage("sidon set file lacks a group"))?,
    )?;
    let fold = obj
        .get("fold")
        .and_then(Value::as_u64)
        .ok_or_else(|| usage("sidon set file lacks a fold"))?;
    let fold = u32::try_from(fold).map_err(|_| usage(format!("fold {fold} out of range")))?;
    let elements = elements_from_json(v)?;
    Ok(SidonSet::new(group, elements, fold)?)
}

fn load_count_distribution(path: &Path) -> Result<MassFunction<CountVector<u32>>, CliError> {
    let v = read_json(path)?;
    let atoms = v
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| usage(format!("{} lacks an atoms array", path.display())))?;
    let mut map: BTreeMap<CountVector<u32>, Rat> = BTreeMap::new();
    for atom in atoms {
        let counts_v = atom
            .get("counts")
            .and_then(Value::as_array)
            .ok_or_else(|| usage("each atom needs a counts array"))?;
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        for pair in counts_v {
            let pair = pair
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| usage("each count is a [atom, count] pair"))?;
            let key = pair[0]
                .as_u64()
                .and_then(|k| u32::try_from(k).ok())
                .ok_or_else(|| usage("count atoms must be small nonnegative integers"))?;
            let count = pair[1]
                .as_u64()
                .ok_or_else(|| usage("counts must be nonnegative integers"))?;
            if counts.insert(key, count).is_some() {
                return Err(usage(format!("atom {key} appears twice in one vector")));
            }
        }
        let mass = atom
            .get("mass")
            .ok_or_else(|| usage("each atom needs a mass"))?;
        let mass = parse_mass(mass).map_err(CliError::Usage)?;
        if map.insert(CountVector::from_counts(counts), mass).is_some() {
            return Err(usage("a count vector appears twice"));
        }
    }
    Ok(MassFunction::from_map(map)?)
}

fn counts_json(v: &CountVector<u32>) -> Value {
    let entries: Vec<Value> = v.entries().map(|(atom, count)| json!([atom, count])).collect();
    Value::Array(entries)
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

fn run_experiment_cmd(args: ExperimentArgs) -> Result<ExitCode, CliError> {
    let plan_value = read_json(&args.plan)?;
    let plan = ExperimentPlan::from_json(&plan_value)?;
    let start = Instant::now();
    let report = run_experiment(&plan)?;
    let elapsed = start.elapsed().as_millis();
    fs::write(&args.out, report.to_csv()).map_err(|source| CliError::Write {
        path: args.out.clone(),
        source,
    })?;
    eprintln!(
        "{} rows in {} ms; {} warnings",
        report.rows.len(),
        elapsed,
        report.warnings.len()
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// lemma
// ---------------------------------------------------------------------------

fn run_lemma(args: LemmaArgs) -> Result<ExitCode, CliError> {
    let seed = RngSeed::new(args.seed, 0);
    let reports: Vec<LemmaReport> = if args.id == "all" {
        if args.params.is_some() {
            return Err(usage(
                "explicit parameters apply to a single lemma; drop --params or name one id",
            ));
        }
        run_lemma_suite(args.trials, seed)?
    } else {
        if !LEMMA_IDS.contains(&args.id.as_str()) {
            return Err(usage(format!(
                "unknown lemma {}; known ids: {} (or all)",
                args.id,
                LEMMA_IDS.join(", ")
            )));
        }
        let params = match &args.params {
            Some(path) => read_json(path)?,
            None => default_lemma_params(&args.id)?,
        };
        vec![lemma_check(&args.id, &params, args.trials, seed)?]
    };

    if args.json {
        let arr: Vec<Value> = reports.iter().map(LemmaReport::to_json).collect();
        emit_json(&Value::Array(arr), None)?;
    } else {
        for report in &reports {
            println!("{}", report.summary_line());
        }
    }
    let all_passed = reports.iter().all(|r| r.outcome == LemmaOutcome::Passed);
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

// ---------------------------------------------------------------------------
// shared parsing and serialization
// ---------------------------------------------------------------------------

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads an instance, tolerating files without a `meta` object; the second
/// component reports whether the instance carried its own property.
fn load_instance(path: &Path, fallback: Property) -> Result<(TestInstance, bool), CliError> {
    let v = read_json(path)?;
    if v.get("meta").is_some() {
        return Ok((TestInstance::from_json(&v)?, true));
    }
    let core = parse_instance_core(&v)?;
    Ok((
        TestInstance {
            n: core.n,
            positives: core.positives,
            mu: core.mu,
            side: Side::No,
            certified_distance: rat_int(0),
            property: fallback,
            family: "custom".into(),
            generator_params: BTreeMap::new(),
            seed: RngSeed::new(0, 0),
            permutations: Vec::new(),
            verified: Verification::Structural,
        },
        false,
    ))
}

fn load_instance_with_property(
    path: &Path,
    property_arg: Option<&str>,
) -> Result<(TestInstance, Property), CliError> {
    let fallback = Property::HFree(PatternGraph::square());
    let (instance, has_own) = load_instance(path, fallback)?;
    match property_arg {
        Some(spec) => {
            let property = parse_property_arg(spec)?;
            Ok((instance, property))
        }
        None if has_own => {
            let property = instance.property.clone();
            Ok((instance, property))
        }
        None => Err(usage(format!(
            "{} carries no property; pass --property",
            path.display()
        ))),
    }
}

fn load_distribution_family(path: &Path) -> Result<Vec<EdgeDistribution>, CliError> {
    let v = read_json(path)?;
    if let Some(list) = v.get("distributions").and_then(Value::as_array) {
        if list.is_empty() {
            return Err(usage(format!("{} lists no distributions", path.display())));
        }
        return list
            .iter()
            .map(|d| Ok(parse_instance_core(d)?.mu))
            .collect();
    }
    Ok(vec![parse_instance_core(&v)?.mu])
}

fn parse_rat_arg(s: &str) -> Result<Rat, CliError> {
    let v = if s.contains('/') {
        Value::String(s.to_string())
    } else if let Ok(i) = s.parse::<i64>() {
        json!(i)
    } else {
        let f: f64 = s
            .parse()
            .map_err(|_| usage(format!("cannot parse {s} as a rational")))?;
        json!(f)
    };
    parse_mass(&v).map_err(CliError::Usage)
}

fn parse_pattern_arg(spec: &str) -> Result<PatternGraph, CliError> {
    match spec {
        "edge" => Ok(PatternGraph::single_edge()),
        "triangle" => Ok(PatternGraph::triangle()),
        "square" => Ok(PatternGraph::square()),
        _ => {
            if let Some(t) = spec.strip_prefix("path:") {
                let t: u32 = t
                    .parse()
                    .map_err(|_| usage(format!("bad path length {t}")))?;
                return Ok(PatternGraph::path(t)?);
            }
            if let Some(k) = spec.strip_prefix("complete:") {
                let k: u32 = k
                    .parse()
                    .map_err(|_| usage(format!("bad clique size {k}")))?;
                return Ok(PatternGraph::complete(k)?);
            }
            let v = read_json(Path::new(spec))?;
            Ok(pattern_from_json(&v)?)
        }
    }
}

fn parse_property_arg(spec: &str) -> Result<Property, CliError> {
    match spec {
        "bip" => Ok(Property::HomToH(PatternGraph::single_edge())),
        "clique" => Ok(Property::Clique),
        _ => {
            if let Some(p) = spec.strip_prefix("hom:") {
                return Ok(Property::HomToH(parse_pattern_arg(p)?));
            }
            if let Some(p) = spec.strip_prefix("free:") {
                return Ok(Property::HFree(parse_pattern_arg(p)?));
            }
            Err(usage(format!(
                "unknown property {spec}; use bip, clique, hom:<pattern>, or free:<pattern>"
            )))
        }
    }
}

fn parse_family_arg(spec: &str) -> Result<Family, CliError> {
    match spec {
        "triangle" => Ok(Family::Triangle),
        "square" => Ok(Family::Square),
        "clique" => Ok(Family::Clique),
        _ => {
            if let Some(k) = spec.strip_prefix("bipartite:") {
                let k: u32 = k
                    .parse()
                    .map_err(|_| usage(format!("bad part count {k}")))?;
                return Ok(Family::Bipartite { k });
            }
            if let Some(p) = spec.strip_prefix("tree:") {
                return Ok(Family::Tree {
                    pattern: parse_pattern_arg(p)?,
                });
            }
            Err(usage(format!(
                "unknown family {spec}; use triangle, square, bipartite:<k>, tree:<pattern>, or clique"
            )))
        }
    }
}

fn edge_json(e: &Edge) -> Value {
    json!([e.a(), e.b()])
}

fn dist_to_json(d: &EdgeDistribution) -> Value {
    let edges: Vec<Value> = d.mass().support().map(|(e, _)| edge_json(e)).collect();
    let weights: Vec<Value> = d
        .mass()
        .support()
        .map(|(_, w)| json!(render_mass(w)))
        .collect();
    json!({"n": d.n(), "edges": edges, "weights": weights})
}

fn emit_json(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("tree serializes");
    text.push('\n');
    emit_text(&text, out)
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

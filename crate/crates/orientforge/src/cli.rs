//! Command-line interface. Scripts branch on the exit status: 0 means
//! yes/success, 1 means no/infeasible/property-failure, 2 means input
//! error, 3 means a search budget was exceeded. Certificates, instances and
//! provenance are files; diagnostics go to the error stream.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::formats;
use crate::gadgets::{
    self, parse_gadget, synth::SynthOutcome, synth::SynthRequest, verify_gadget, GadgetStore,
    VerifyOutcome,
};
use crate::graph::{check_orientation, check_packing, is_simple, PathPacking, PathTriple};
use crate::harness::{self, ExperimentConfig};
use crate::oracle::{solve_medep, solve_po, solve_sat_bruteforce, SatVerdict, SolveOutcome};
use crate::reductions::{self, Po2MedepOutcome};

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Environment variable naming the gadget store directory; `./gadgets` by
/// default.
pub const GADGET_STORE_ENV: &str = "ORIENTFORGE_GADGET_STORE";

#[derive(Parser)]
#[command(
    name = "orientforge",
    version,
    about = "Reductions between 3-SAT, partial orientation, and exact-length-3 edge-disjoint path packing, with exact solvers and verified gadgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a reduction and write the target instance plus provenance.
    Reduce {
        #[command(subcommand)]
        which: ReduceCommand,
    },
    /// Solve an instance exactly.
    Solve {
        #[command(subcommand)]
        which: SolveCommand,
    },
    /// Check a certificate against an instance.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
    /// Inspect, verify, or synthesize gadget templates.
    Gadget {
        #[command(subcommand)]
        which: GadgetCommand,
    },
    /// Generate random instances.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
    },
    /// Run the seeded equivalence experiments and write report files.
    Experiment {
        /// TOML config; defaults to the built-in configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// 3-SAT to partial orientation.
    Sat2po(Sat2PoArgs),
    /// Partial orientation to exact-length-3 path packing.
    Po2medep(Po2MedepArgs),
    /// Composition: 3-SAT all the way to a simple packing instance.
    Sat2smedep(Sat2SmedepArgs),
}

#[derive(Args)]
struct Sat2PoArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    prov: PathBuf,
    /// Occurrence bound applied before the reduction.
    #[arg(long = "max-occ", default_value_t = 3)]
    max_occ: u32,
}

#[derive(Args)]
struct Po2MedepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    prov: PathBuf,
    /// Fail (status 1) if the output graph has parallel edges.
    #[arg(long = "require-simple")]
    require_simple: bool,
}

// The composed reduction always demands a simple output graph; that is the
// point of the target problem.
#[derive(Args)]
struct Sat2SmedepArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    prov: PathBuf,
    #[arg(long = "max-occ", default_value_t = 3)]
    max_occ: u32,
}

#[derive(Subcommand)]
enum SolveCommand {
    Po(SolveArgs),
    Medep(SolveArgs),
    Sat(SolveArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_NODE_BUDGET)]
    budget: u64,
    /// Write the certificate here on a yes answer.
    #[arg(long)]
    cert: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    Orientation(VerifyArgs),
    Packing(VerifyArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Subcommand)]
enum GadgetCommand {
    Verify {
        #[arg(long)]
        template: PathBuf,
    },
    Show {
        #[arg(long)]
        template: PathBuf,
    },
    Synth {
        #[arg(long)]
        t: u32,
        #[arg(long)]
        f: u32,
        #[arg(long = "max-vertices")]
        max_vertices: u32,
        /// Structural candidates examined before giving up.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    Cnf {
        #[arg(long)]
        vars: u32,
        #[arg(long)]
        clauses: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "occurrence-cap")]
        occurrence_cap: Option<u32>,
    },
    Po {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        edges: usize,
        #[arg(long = "max-rho", default_value_t = 2)]
        max_rho: u32,
        #[arg(long = "max-delta", default_value_t = 2)]
        max_delta: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point shared by `main` and the integration tests.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_YES,
                _ => EXIT_INPUT,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| format!("cannot create {}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn store_dir() -> PathBuf {
    std::env::var_os(GADGET_STORE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("gadgets"))
}

fn load_store() -> Result<GadgetStore, String> {
    let dir = store_dir();
    if dir.is_dir() {
        GadgetStore::load_dir(&dir).map_err(|e| format!("{e}"))
    } else {
        Err(format!(
            "gadget store directory {} not found; set {GADGET_STORE_ENV} or create it (the repository ships one under gadgets/)",
            dir.display()
        ))
    }
}

fn parse_po_file(path: &Path) -> Result<crate::graph::PartialOrientationInstance, String> {
    let parsed = formats::parse_po(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    for warning in &parsed.warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    Ok(parsed.instance)
}

fn dispatch(command: Command) -> Result<i32, String> {
    match command {
        Command::Reduce { which } => reduce(which),
        Command::Solve { which } => solve(which),
        Command::Verify { which } => verify(which),
        Command::Gadget { which } => gadget(which),
        Command::Gen { which } => generate(which),
        Command::Experiment { config, out_dir } => experiment(config, out_dir),
    }
}

fn check_max_occ(max_occ: u32) -> Result<(), String> {
    if max_occ < 3 {
        return Err(format!(
            "--max-occ must be at least 3 (a clause consumes three ports), got {max_occ}"
        ));
    }
    Ok(())
}

fn reduce(which: ReduceCommand) -> Result<i32, String> {
    match which {
        ReduceCommand::Sat2po(args) => {
            check_max_occ(args.max_occ)?;
            let formula = formats::parse_cnf(&read(&args.input)?).map_err(|e| format!("{e}"))?;
            let store = load_store()?;
            let bounded = reductions::bound_occurrences(&formula, args.max_occ);
            let (instance, prov) =
                reductions::sat_to_po(&bounded, &store).map_err(|e| format!("{e}"))?;
            write(&args.out, &formats::write_po(&instance))?;
            write(&args.prov, &reductions::write_provenance(&prov))?;
            eprintln!(
                "reduced {} vars, {} clauses to {} vertices, {} edges",
                bounded.num_vars,
                bounded.clauses.len(),
                instance.graph.num_vertices(),
                instance.graph.num_edges()
            );
            Ok(EXIT_YES)
        }
        ReduceCommand::Po2medep(args) => {
            let instance = parse_po_file(&args.input)?;
            match reductions::po_to_medep(&instance) {
                Po2MedepOutcome::TriviallyInfeasible { delta_sum, rho_sum } => {
                    eprintln!(
                        "trivially infeasible: prescribed out-degree sum {delta_sum}, in-degree sum {rho_sum}"
                    );
                    Ok(EXIT_NO)
                }
                Po2MedepOutcome::Instance(medep, prov) => {
                    if args.require_simple {
                        let (simple, pairs) = is_simple(&medep.graph);
                        if !simple {
                            eprintln!(
                                "output is a multigraph ({} parallel pairs), --require-simple refused",
                                pairs.len()
                            );
                            return Ok(EXIT_NO);
                        }
                    }
                    write(&args.out, &formats::write_medep(&medep))?;
                    let provenance = reductions::ProvenanceMap {
                        medep: Some(prov),
                        ..Default::default()
                    };
                    write(&args.prov, &reductions::write_provenance(&provenance))?;
                    eprintln!("k = {}", medep.k);
                    Ok(EXIT_YES)
                }
            }
        }
        ReduceCommand::Sat2smedep(args) => {
            check_max_occ(args.max_occ)?;
            let formula = formats::parse_cnf(&read(&args.input)?).map_err(|e| format!("{e}"))?;
            let store = load_store()?;
            let bounded = reductions::bound_occurrences(&formula, args.max_occ);
            let (instance, mut prov) =
                reductions::sat_to_po(&bounded, &store).map_err(|e| format!("{e}"))?;
            match reductions::po_to_medep(&instance) {
                Po2MedepOutcome::TriviallyInfeasible { .. } => {
                    eprintln!("trivially infeasible");
                    Ok(EXIT_NO)
                }
                Po2MedepOutcome::Instance(medep, medep_prov) => {
                    let (simple, pairs) = is_simple(&medep.graph);
                    if !simple {
                        eprintln!(
                            "output is a multigraph ({} parallel pairs); the composed reduction must stay simple",
                            pairs.len()
                        );
                        return Ok(EXIT_NO);
                    }
                    prov.medep = Some(medep_prov);
                    write(&args.out, &formats::write_medep(&medep))?;
                    write(&args.prov, &reductions::write_provenance(&prov))?;
                    eprintln!("k = {}", medep.k);
                    Ok(EXIT_YES)
                }
            }
        }
    }
}

fn solve(which: SolveCommand) -> Result<i32, String> {
    match which {
        SolveCommand::Po(args) => {
            let instance = parse_po_file(&args.input)?;
            match solve_po(&instance, args.budget) {
                SolveOutcome::Solvable(orientation) => {
                    if let Some(cert) = &args.cert {
                        write(cert, &formats::write_orientation(&orientation))?;
                    }
                    eprintln!("solvable");
                    Ok(EXIT_YES)
                }
                SolveOutcome::Unsolvable => {
                    eprintln!("unsolvable");
                    Ok(EXIT_NO)
                }
                SolveOutcome::BudgetExceeded => {
                    eprintln!("budget exceeded after {} nodes", args.budget);
                    Ok(EXIT_BUDGET)
                }
            }
        }
        SolveCommand::Medep(args) => {
            let instance = formats::parse_medep(&read(&args.input)?).map_err(|e| format!("{e}"))?;
            match solve_medep(&instance, args.budget) {
                SolveOutcome::Solvable(packing) => {
                    if let Some(cert) = &args.cert {
                        write(cert, &formats::write_packing(&packing))?;
                    }
                    eprintln!("solvable: {} disjoint paths", packing.paths.len());
                    Ok(EXIT_YES)
                }
                SolveOutcome::Unsolvable => {
                    eprintln!("unsolvable");
                    Ok(EXIT_NO)
                }
                SolveOutcome::BudgetExceeded => {
                    eprintln!("budget exceeded after {} nodes", args.budget);
                    Ok(EXIT_BUDGET)
                }
            }
        }
        SolveCommand::Sat(args) => {
            let formula = formats::parse_cnf(&read(&args.input)?).map_err(|e| format!("{e}"))?;
            match solve_sat_bruteforce(&formula, 24).map_err(|e| format!("{e}"))? {
                SatVerdict::Sat(assignment) => {
                    if let Some(cert) = &args.cert {
                        let mut body = String::from("v");
                        for (i, value) in assignment.values.iter().enumerate() {
                            let var = i as i64 + 1;
                            body.push_str(&format!(" {}", if *value { var } else { -var }));
                        }
                        body.push('\n');
                        write(cert, &body)?;
                    }
                    eprintln!("satisfiable");
                    Ok(EXIT_YES)
                }
                SatVerdict::Unsat => {
                    eprintln!("unsatisfiable");
                    Ok(EXIT_NO)
                }
            }
        }
    }
}

fn verify(which: VerifyCommand) -> Result<i32, String> {
    match which {
        VerifyCommand::Orientation(args) => {
            let instance = parse_po_file(&args.input)?;
            let orientation =
                formats::parse_orientation(&read(&args.cert)?).map_err(|e| format!("{e}"))?;
            match check_orientation(&instance, &orientation) {
                Ok(verdict) if verdict.is_valid() => {
                    eprintln!("valid");
                    Ok(EXIT_YES)
                }
                Ok(crate::graph::OrientationVerdict::Invalid {
                    vertex,
                    kind,
                    expected,
                    actual,
                }) => {
                    eprintln!(
                        "invalid: vertex {vertex} has {kind} count {actual}, prescribed {expected}"
                    );
                    Ok(EXIT_NO)
                }
                Ok(_) => unreachable!(),
                Err(e) => Err(format!("{e}")),
            }
        }
        VerifyCommand::Packing(args) => {
            let instance = formats::parse_medep(&read(&args.input)?).map_err(|e| format!("{e}"))?;
            let raw = formats::parse_packing(&read(&args.cert)?).map_err(|e| format!("{e}"))?;
            let mut paths = Vec::new();
            for (first, middle, last) in raw {
                paths.push(
                    PathTriple::resolve(&instance, first, middle, last)
                        .map_err(|e| format!("{e}"))?,
                );
            }
            match check_packing(&instance, &PathPacking { paths }).map_err(|e| format!("{e}"))? {
                crate::graph::PackingVerdict::Valid => {
                    eprintln!("valid");
                    Ok(EXIT_YES)
                }
                crate::graph::PackingVerdict::Invalid(reason) => {
                    eprintln!("invalid: {reason}");
                    Ok(EXIT_NO)
                }
            }
        }
    }
}

fn gadget(which: GadgetCommand) -> Result<i32, String> {
    match which {
        GadgetCommand::Verify { template } => {
            let parsed = parse_gadget(&read(&template)?).map_err(|e| format!("{e}"))?;
            match verify_gadget(&parsed, crate::oracle::DEFAULT_NODE_BUDGET) {
                Ok(VerifyOutcome::Verified(_)) => {
                    eprintln!("verified");
                    Ok(EXIT_YES)
                }
                Ok(VerifyOutcome::Failed(problems)) => {
                    for problem in problems {
                        eprintln!("failed: {problem}");
                    }
                    Ok(EXIT_NO)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(EXIT_BUDGET)
                }
            }
        }
        GadgetCommand::Show { template } => {
            let parsed = parse_gadget(&read(&template)?).map_err(|e| format!("{e}"))?;
            println!(
                "kind: {}",
                match parsed.kind {
                    gadgets::GadgetKind::Variable => "variable",
                    gadgets::GadgetKind::Clause => "clause",
                }
            );
            println!(
                "vertices: {}  edges: {}  ports: {}",
                parsed.inst.graph.num_vertices(),
                parsed.inst.graph.num_edges(),
                parsed.ports.len()
            );
            for v in parsed.inst.graph.vertices() {
                println!("  vertex {v}: spec {}", parsed.inst.specs[v.index()]);
            }
            for (i, port) in parsed.ports.iter().enumerate() {
                println!("  port {i}: {} at vertex {}", port.polarity, port.vertex);
            }
            match verify_gadget(&parsed, crate::oracle::DEFAULT_NODE_BUDGET) {
                Ok(VerifyOutcome::Verified(_)) => println!("verification: ok"),
                Ok(VerifyOutcome::Failed(problems)) => {
                    println!("verification: FAILED");
                    for problem in problems {
                        println!("  {problem}");
                    }
                    return Ok(EXIT_NO);
                }
                Err(e) => {
                    println!("verification: {e}");
                    return Ok(EXIT_BUDGET);
                }
            }
            Ok(EXIT_YES)
        }
        GadgetCommand::Synth {
            t,
            f,
            max_vertices,
            budget,
            out,
        } => {
            let request = SynthRequest::new(t, f, max_vertices, budget);
            match gadgets::synth::synth_gadget(&request) {
                SynthOutcome::Found(template) => {
                    write(&out, &gadgets::write_gadget(&template))?;
                    eprintln!(
                        "found a verified template with {} vertices",
                        template.inst.graph.num_vertices()
                    );
                    Ok(EXIT_YES)
                }
                SynthOutcome::NotFound => {
                    eprintln!("no template up to {max_vertices} vertices");
                    Ok(EXIT_NO)
                }
                SynthOutcome::BudgetExceeded => {
                    eprintln!("budget of {budget} candidates exceeded");
                    Ok(EXIT_BUDGET)
                }
            }
        }
    }
}

fn generate(which: GenCommand) -> Result<i32, String> {
    match which {
        GenCommand::Cnf {
            vars,
            clauses,
            seed,
            out,
            occurrence_cap,
        } => {
            let formula = harness::gen_random_cnf(vars, clauses, seed, occurrence_cap)
                .map_err(|e| format!("{e}"))?;
            write(&out, &formats::write_cnf(&formula))?;
            Ok(EXIT_YES)
        }
        GenCommand::Po {
            vertices,
            edges,
            max_rho,
            max_delta,
            seed,
            out,
        } => {
            let instance = harness::gen_random_po(vertices, edges, max_rho, max_delta, seed)
                .map_err(|e| format!("{e}"))?;
            write(&out, &formats::write_po(&instance))?;
            Ok(EXIT_YES)
        }
    }
}

fn experiment(config_path: Option<PathBuf>, out_dir: PathBuf) -> Result<i32, String> {
    let config: ExperimentConfig = match config_path {
        Some(path) => toml::from_str(&read(&path)?)
            .map_err(|e| format!("bad config {}: {e}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let store = if store_dir().is_dir() {
        GadgetStore::load_dir(&store_dir()).map_err(|e| format!("{e}"))?
    } else {
        eprintln!("note: no gadget store directory, using the built-in store");
        GadgetStore::builtin()
    };
    let report = harness::run_equivalence_experiments(&config, &store);
    report
        .write_files(&out_dir)
        .map_err(|e| format!("cannot write report: {e}"))?;
    for p in &report.properties {
        eprintln!(
            "{:<36} {:>4}/{:<4} {:>8.3}s{}",
            p.name,
            p.passes,
            p.instances,
            p.seconds,
            if p.ok() { "" } else { "  FAIL" }
        );
    }
    eprintln!(
        "report written to {}; overall {}",
        out_dir.display(),
        if report.all_passed() { "PASS" } else { "FAIL" }
    );
    Ok(if report.all_passed() {
        EXIT_YES
    } else {
        EXIT_NO
    })
}

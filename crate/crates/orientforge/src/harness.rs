//! Seeded random generators and the equivalence experiment harness.
//!
//! All randomness flows from the single config seed through a counted
//! splitting discipline (one derived seed per property and instance), so a
//! config determines the report byte for byte. Wall-clock timings are
//! diagnostics: they go to the error stream and, unless the config opts out
//! of deterministic reports, the report files carry a zeroed seconds column.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formats::{write_orientation, write_packing, Assignment, CnfFormula};
use crate::gadgets::{
    mirror_complete, mirror_extend, verify_gadget, GadgetError, GadgetStore, PortPolarity,
    VerifyOutcome,
};
use crate::graph::{
    check_orientation, check_packing, is_simple, DegreeSpec, Multigraph,
    PartialOrientationInstance, VertexId,
};
use crate::oracle::{
    enumerate_orientations, solve_medep, solve_po, solve_sat_bruteforce, PortConstraint,
    PortedInstance, SatVerdict, SolveOutcome,
};
use crate::reductions::{
    bound_occurrences, decode_orientation, encode_assignment, orientation_to_packing,
    packing_to_orientation, po_to_medep, sat_to_po, Po2MedepOutcome,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("occurrence cap {cap} on {vars} variables cannot host {clauses} clauses")]
    InfeasibleCap { cap: u32, vars: u32, clauses: usize },
    #[error("generator needs at least {min} vertices, got {got}")]
    TooFewVertices { min: usize, got: usize },
}

/// Scales and budgets for one experiment run. Identical configs produce
/// byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Orientation/packing equivalence: instance count and size caps.
    pub equivalence_instances: usize,
    pub equivalence_max_vertices: usize,
    pub equivalence_max_edges: usize,
    pub equivalence_max_rho: u32,
    pub equivalence_max_delta: u32,
    /// End-to-end SAT side: instance count and size caps.
    pub sat_instances: usize,
    pub sat_max_vars: u32,
    pub sat_max_clauses: usize,
    /// Pipeline simplicity: formula count.
    pub simplicity_instances: usize,
    /// Translation round trips over exhaustively enumerated orientations.
    pub round_trip_instances: usize,
    /// Solver agreement with the exhaustive enumerator.
    pub oracle_agreement_instances: usize,
    pub solver_budget: u64,
    /// Zero the seconds column in report files so repeated runs compare
    /// byte for byte; measured times always go to the error stream.
    pub deterministic_report: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            equivalence_instances: 100,
            equivalence_max_vertices: 6,
            equivalence_max_edges: 8,
            equivalence_max_rho: 2,
            equivalence_max_delta: 2,
            sat_instances: 50,
            sat_max_vars: 4,
            sat_max_clauses: 2,
            simplicity_instances: 20,
            round_trip_instances: 25,
            oracle_agreement_instances: 200,
            solver_budget: crate::oracle::DEFAULT_NODE_BUDGET,
            deterministic_report: true,
        }
    }
}

/// Two rounds of splitmix64, used to derive independent per-instance seeds.
fn derive_seed(base: u64, property: u64, instance: u64) -> u64 {
    let mut x = base
        ^ property.wrapping_mul(0x9e3779b97f4a7c15)
        ^ instance.wrapping_mul(0xbf58476d1ce4e5b9);
    for _ in 0..2 {
        x = x.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        x = z ^ (z >> 31);
    }
    x
}

/// Uniform 3-CNF generator. With an occurrence cap, literals are rejection
/// sampled so no variable exceeds the cap in either polarity.
pub fn gen_random_cnf(
    vars: u32,
    clauses: usize,
    seed: u64,
    occurrence_cap: Option<u32>,
) -> Result<CnfFormula, HarnessError> {
    assert!(vars >= 1, "generator needs at least one variable");
    if let Some(cap) = occurrence_cap {
        // Capacity is per polarity, so each variable can host 2 * cap
        // literals in total.
        if (2 * cap as u64) * (vars as u64) < 3 * (clauses as u64) {
            return Err(HarnessError::InfeasibleCap { cap, vars, clauses });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = vec![0u32; vars as usize];
    let mut neg = vec![0u32; vars as usize];
    let mut out = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let mut clause = [0i32; 3];
        for slot in &mut clause {
            let mut attempts = 0;
            let lit = loop {
                let var = rng.gen_range(1..=vars);
                let positive = rng.gen_bool(0.5);
                let used = if positive {
                    pos[(var - 1) as usize]
                } else {
                    neg[(var - 1) as usize]
                };
                if occurrence_cap.is_none_or(|cap| used < cap) {
                    break if positive { var as i32 } else { -(var as i32) };
                }
                attempts += 1;
                if attempts > 10_000 {
                    // Deterministic fallback: first variable and polarity
                    // with spare capacity (one exists by the cap arithmetic).
                    let cap = occurrence_cap.expect("fallback only under a cap");
                    let found = (1..=vars).find_map(|v| {
                        if pos[(v - 1) as usize] < cap {
                            Some(v as i32)
                        } else if neg[(v - 1) as usize] < cap {
                            Some(-(v as i32))
                        } else {
                            None
                        }
                    });
                    break found.expect("capacity argument guarantees a free slot");
                }
            };
            if lit > 0 {
                pos[(lit - 1) as usize] += 1;
            } else {
                neg[(-lit - 1) as usize] += 1;
            }
            *slot = lit;
        }
        out.push(clause);
    }
    Ok(CnfFormula::new(vars, out))
}

/// Random orientation instance: a loop-free multigraph plus specs sampled
/// under the rho/delta caps, with theta absorbing the rest of each degree.
pub fn gen_random_po(
    vertices: usize,
    edges: usize,
    max_rho: u32,
    max_delta: u32,
    seed: u64,
) -> Result<PartialOrientationInstance, HarnessError> {
    if vertices < 2 && edges > 0 {
        return Err(HarnessError::TooFewVertices {
            min: 2,
            got: vertices,
        });
    }
    if vertices == 0 {
        return Ok(PartialOrientationInstance::new(Multigraph::new(0), vec![]).unwrap());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = Multigraph::new(vertices);
    for _ in 0..edges {
        let a = rng.gen_range(0..vertices);
        let b = loop {
            let b = rng.gen_range(0..vertices);
            if b != a {
                break b;
            }
        };
        graph
            .add_edge(VertexId(a as u32), VertexId(b as u32))
            .expect("loop-free by construction");
    }
    let mut specs = Vec::with_capacity(vertices);
    for v in 0..vertices {
        let deg = graph.degree(VertexId(v as u32)) as u32;
        let mut chosen = None;
        for _ in 0..16 {
            let rho = rng.gen_range(0..=max_rho);
            let delta = rng.gen_range(0..=max_delta);
            if rho + delta <= deg {
                chosen = Some((rho, delta));
                break;
            }
        }
        // Degree-respecting fallback when sampling keeps overshooting.
        let (rho, delta) = chosen.unwrap_or_else(|| {
            let rho = max_rho.min(deg);
            (rho, max_delta.min(deg - rho))
        });
        specs.push(DegreeSpec::new(rho, delta, deg - rho - delta));
    }
    Ok(PartialOrientationInstance::new(graph, specs).expect("theta absorbs the remainder"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub instances: usize,
    pub passes: usize,
    pub failures: usize,
    pub budget_exceeded: usize,
    pub seconds: f64,
    pub notes: Vec<String>,
}

impl PropertyResult {
    fn new(name: &'static str) -> Self {
        PropertyResult {
            name,
            instances: 0,
            passes: 0,
            failures: 0,
            budget_exceeded: 0,
            seconds: 0.0,
            notes: Vec::new(),
        }
    }

    fn pass(&mut self) {
        self.instances += 1;
        self.passes += 1;
    }

    fn fail(&mut self, note: String) {
        self.instances += 1;
        self.failures += 1;
        self.notes.push(note);
    }

    /// Budget blow-ups are recorded apart from refutations but still make
    /// the property fail.
    fn budget(&mut self, note: String) {
        self.instances += 1;
        self.failures += 1;
        self.budget_exceeded += 1;
        self.notes.push(note);
    }

    pub fn ok(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    pub properties: Vec<PropertyResult>,
    /// Deterministic certificate bundle produced along the way.
    pub certificates: String,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.ok())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "orientforge experiment report").unwrap();
        writeln!(out, "seed {}", self.config.seed).unwrap();
        for p in &self.properties {
            writeln!(
                out,
                "{} {}: instances={} passes={} failures={} budget_exceeded={}",
                if p.ok() { "PASS" } else { "FAIL" },
                p.name,
                p.instances,
                p.passes,
                p.failures,
                p.budget_exceeded
            )
            .unwrap();
            for note in &p.notes {
                writeln!(out, "  note: {note}").unwrap();
            }
        }
        writeln!(
            out,
            "overall {}",
            if self.all_passed() { "PASS" } else { "FAIL" }
        )
        .unwrap();
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "property\tinstances\tpasses\tfailures\tbudget_exceeded\tseconds"
        )
        .unwrap();
        for p in &self.properties {
            let seconds = if self.config.deterministic_report {
                0.0
            } else {
                p.seconds
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{seconds:.3}",
                p.name, p.instances, p.passes, p.failures, p.budget_exceeded
            )
            .unwrap();
        }
        out
    }

    /// Writes `report.txt`, `report.tsv` and `certificates.txt`.
    pub fn write_files(&self, dir: &std::path::Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), self.to_text())?;
        std::fs::write(dir.join("report.tsv"), self.to_tsv())?;
        std::fs::write(dir.join("certificates.txt"), &self.certificates)?;
        Ok(())
    }
}

/// Runs every gadget, oracle and reduction invariant at the configured
/// scale. A non-empty failure count anywhere makes `all_passed` false.
pub fn run_equivalence_experiments(config: &ExperimentConfig, store: &GadgetStore) -> Report {
    let mut properties = Vec::new();
    let mut certificates = String::new();

    properties.push(timed(gadget_store_integrity(store)));
    properties.push(timed(clause_truth_table(store)));
    properties.push(timed(clause_symmetry(store)));
    properties.push(timed(variable_gadget_orientations(store)));
    properties.push(timed(mirror_completion_rules(store)));
    properties.push(timed(oracle_agreement(config)));
    properties.push(timed(packing_equivalence(config, &mut certificates)));
    properties.push(timed(sat_side(config, store)));
    properties.push(timed(unsat_side(config, store)));
    properties.push(timed(pipeline_simplicity(config, store)));
    properties.push(timed(encode_decode_round_trip(store)));
    properties.push(timed(packing_round_trip(config)));

    Report {
        config: config.clone(),
        properties,
        certificates,
    }
}

fn timed(mut f: (PropertyResult, Instant)) -> PropertyResult {
    f.0.seconds = f.1.elapsed().as_secs_f64();
    f.0
}

fn start(name: &'static str) -> (PropertyResult, Instant) {
    (PropertyResult::new(name), Instant::now())
}

fn gadget_store_integrity(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("gadget_store_integrity");
    let mut templates: Vec<(String, &crate::gadgets::GadgetTemplate)> = store
        .variable_multiplicities()
        .iter()
        .map(|&m| (format!("var_m{m}"), store.variable_gadget(m).unwrap()))
        .collect();
    if let Ok(clause) = store.clause_gadget() {
        templates.push(("clause".into(), clause));
    }
    for (name, template) in templates {
        match verify_gadget(template, crate::oracle::DEFAULT_NODE_BUDGET) {
            Ok(VerifyOutcome::Verified(_)) => p.pass(),
            Ok(VerifyOutcome::Failed(problems)) => {
                p.fail(format!("{name}: {}", problems.join("; ")))
            }
            Err(e) => p.budget(format!("{name}: {e}")),
        }
    }
    (p, t)
}

fn clause_truth_table(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("clause_truth_table");
    let Ok(template) = store.clause_gadget() else {
        p.fail("store has no clause gadget".into());
        return (p, t);
    };
    let literals = template.port_indices(PortPolarity::LiteralSlot);
    for pattern in 0u8..8 {
        let mut constraints = vec![PortConstraint::Free; template.ports.len()];
        for &pidx in &literals {
            constraints[pidx] = PortConstraint::FreeDirectedOnly;
        }
        // Pin the pattern on top of directed-only slots.
        for (bit, &pidx) in literals.iter().enumerate() {
            constraints[pidx] = if pattern >> bit & 1 == 1 {
                PortConstraint::MustBeToward
            } else {
                PortConstraint::MustBeAway
            };
        }
        match enumerate_orientations(&template.inst, &constraints, 1, 10_000_000) {
            Ok(result) => {
                let want_some = pattern != 0;
                if (result.count > 0) == want_some {
                    p.pass();
                } else {
                    p.fail(format!(
                        "pattern {pattern:#05b}: count {} unexpected",
                        result.count
                    ));
                }
            }
            Err(e) => p.budget(format!("pattern {pattern:#05b}: {e}")),
        }
    }
    (p, t)
}

fn clause_symmetry(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("clause_symmetry");
    let Ok(template) = store.clause_gadget() else {
        p.fail("store has no clause gadget".into());
        return (p, t);
    };
    let Some(table) = template.extensions.as_ref() else {
        p.fail("clause gadget has no extension table".into());
        return (p, t);
    };
    let perms: [[u8; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    for perm in perms {
        let mut ok = true;
        for pattern in 0u8..8 {
            let mut mapped = 0u8;
            for bit in 0..3 {
                if pattern >> bit & 1 == 1 {
                    mapped |= 1 << perm[bit as usize];
                }
            }
            if table.present(pattern) != table.present(mapped) {
                ok = false;
            }
        }
        if ok {
            p.pass();
        } else {
            p.fail(format!("extension presence not invariant under {perm:?}"));
        }
    }
    (p, t)
}

fn variable_gadget_orientations(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("variable_gadget_two_orientations");
    let Ok(template) = store.variable_gadget(1) else {
        p.fail("store has no m=1 gadget".into());
        return (p, t);
    };
    let constraints = vec![PortConstraint::Free; template.ports.len()];
    match enumerate_orientations(&template.inst, &constraints, 8, 1_000_000) {
        Ok(result) => {
            let directed = result.witnesses.iter().all(|w| {
                w.port_states
                    .iter()
                    .all(|s| *s != crate::oracle::PortState::Undirected)
            });
            if result.count == 2 && !result.hit_cap && directed {
                p.pass();
            } else {
                p.fail(format!(
                    "m=1 gadget: count={} hit_cap={} directed={}",
                    result.count, result.hit_cap, directed
                ));
            }
        }
        Err(e) => p.budget(format!("{e}")),
    }
    (p, t)
}

fn mirror_completion_rules(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("mirror_completion");
    // Port-free input is rejected.
    let empty = PortedInstance::new(Multigraph::new(0), vec![], vec![]).unwrap();
    match mirror_complete(&empty) {
        Err(GadgetError::NoPorts) => p.pass(),
        other => p.fail(format!("port-free mirror must be rejected, got {other:?}")),
    }
    // Doubling and the witness-extension rule on every stored variable
    // gadget.
    for m in store.variable_multiplicities() {
        let template = store.variable_gadget(m).unwrap();
        match mirror_complete(&template.inst) {
            Ok((closed, map)) => {
                let doubled = closed.graph.num_vertices() == 2 * template.inst.graph.num_vertices();
                let Some(canonical) = template.canonical.as_ref() else {
                    p.fail(format!("m={m}: template carries no canonical orientations"));
                    continue;
                };
                let mut extended_ok = true;
                for state in [&canonical.true_state, &canonical.false_state] {
                    let extended = mirror_extend(&map, state);
                    if !check_orientation(&closed, &extended)
                        .map(|v| v.is_valid())
                        .unwrap_or(false)
                    {
                        extended_ok = false;
                    }
                }
                if doubled && extended_ok {
                    p.pass();
                } else {
                    p.fail(format!(
                        "m={m}: doubled={doubled} witness_rule={extended_ok}"
                    ));
                }
            }
            Err(e) => p.fail(format!("m={m}: {e}")),
        }
    }
    (p, t)
}

fn random_po_for(config: &ExperimentConfig, property: u64, i: u64) -> PartialOrientationInstance {
    let mut sizes = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, property, i));
    let vertices = sizes.gen_range(2..=config.equivalence_max_vertices);
    let edges = sizes.gen_range(0..=config.equivalence_max_edges);
    gen_random_po(
        vertices,
        edges,
        config.equivalence_max_rho,
        config.equivalence_max_delta,
        derive_seed(config.seed, property, i ^ 0x5eed),
    )
    .expect("sizes are in range")
}

fn oracle_agreement(config: &ExperimentConfig) -> (PropertyResult, Instant) {
    let (mut p, t) = start("oracle_agreement");
    for i in 0..config.oracle_agreement_instances {
        let inst = random_po_for(config, 1, i as u64);
        if inst.graph.num_edges() > 12 {
            // Agreement is defined at enumerable scale.
            continue;
        }
        let ported = PortedInstance::closed(&inst);
        let enumerated = match enumerate_orientations(&ported, &[], 1, config.solver_budget) {
            Ok(r) => r,
            Err(e) => {
                p.budget(format!("instance {i}: {e}"));
                continue;
            }
        };
        match solve_po(&inst, config.solver_budget) {
            SolveOutcome::Solvable(o) => {
                let valid = check_orientation(&inst, &o)
                    .map(|v| v.is_valid())
                    .unwrap_or(false);
                if enumerated.count > 0 && valid {
                    p.pass();
                } else {
                    p.fail(format!("instance {i}: solver witness disagrees"));
                }
            }
            SolveOutcome::Unsolvable => {
                if enumerated.count == 0 {
                    p.pass();
                } else {
                    p.fail(format!("instance {i}: solver missed a solution"));
                }
            }
            SolveOutcome::BudgetExceeded => p.budget(format!("instance {i}: solver budget")),
        }
    }
    (p, t)
}

/// Orientation solvability must coincide with packing solvability on the
/// reduced instance, with witnesses translating both ways.
fn packing_equivalence(
    config: &ExperimentConfig,
    certificates: &mut String,
) -> (PropertyResult, Instant) {
    let (mut p, t) = start("orientation_packing_equivalence");
    for i in 0..config.equivalence_instances {
        let inst = random_po_for(config, 2, i as u64);
        let po_outcome = solve_po(&inst, config.solver_budget);
        match po_to_medep(&inst) {
            Po2MedepOutcome::TriviallyInfeasible { .. } => {
                // The shortcut counts as unsolvable; it must only fire when
                // the orientation side is unsolvable or needs no directed
                // edges at all.
                let delta_sum: u64 = inst.specs.iter().map(|s| s.delta as u64).sum();
                let rho_sum: u64 = inst.specs.iter().map(|s| s.rho as u64).sum();
                let consistent = match &po_outcome {
                    SolveOutcome::Solvable(_) => delta_sum == 0 && rho_sum == 0,
                    SolveOutcome::Unsolvable => true,
                    SolveOutcome::BudgetExceeded => false,
                };
                if consistent {
                    p.pass();
                } else {
                    p.fail(format!("instance {i}: shortcut disagrees with solver"));
                }
            }
            Po2MedepOutcome::Instance(medep, prov) => {
                let medep_outcome = solve_medep(&medep, config.solver_budget);
                match (&po_outcome, &medep_outcome) {
                    (SolveOutcome::BudgetExceeded, _) | (_, SolveOutcome::BudgetExceeded) => {
                        p.budget(format!("instance {i}: budget"));
                    }
                    (SolveOutcome::Solvable(o), SolveOutcome::Solvable(pk)) => {
                        let ok = check_orientation(&inst, o).unwrap().is_valid()
                            && check_packing(&medep, pk).unwrap().is_valid();
                        // Cross-translate both witnesses.
                        let translated = orientation_to_packing(o, &inst, &prov)
                            .map(|pk2| check_packing(&medep, &pk2).unwrap().is_valid())
                            .unwrap_or(false);
                        let back = packing_to_orientation(pk, &inst, &prov)
                            .map(|o2| check_orientation(&inst, &o2).unwrap().is_valid())
                            .unwrap_or(false);
                        if ok && translated && back {
                            writeln!(certificates, "# equivalence instance {i}").unwrap();
                            certificates.push_str(&write_orientation(o));
                            certificates.push_str(&write_packing(pk));
                            p.pass();
                        } else {
                            p.fail(format!(
                                "instance {i}: witness translation failed (ok={ok} fwd={translated} back={back})"
                            ));
                        }
                    }
                    (SolveOutcome::Unsolvable, SolveOutcome::Unsolvable) => p.pass(),
                    (a, b) => p.fail(format!(
                        "instance {i}: verdicts disagree ({} vs {})",
                        verdict_name(a),
                        verdict_name(b)
                    )),
                }
            }
        }
    }
    (p, t)
}

fn verdict_name<W>(v: &SolveOutcome<W>) -> &'static str {
    match v {
        SolveOutcome::Solvable(_) => "solvable",
        SolveOutcome::Unsolvable => "unsolvable",
        SolveOutcome::BudgetExceeded => "budget-exceeded",
    }
}

/// Brute-force satisfiability must agree with the reduction end to end.
fn sat_side(config: &ExperimentConfig, store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("sat_encode_solve_agreement");
    for i in 0..config.sat_instances {
        let mut sizes = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 3, i as u64));
        let clauses = sizes.gen_range(1..=config.sat_max_clauses);
        // With one occurrence per polarity, 2 * vars literals must cover
        // 3 * clauses slots.
        let min_vars = (3 * clauses).div_ceil(2).max(2) as u32;
        let vars = sizes.gen_range(min_vars..=config.sat_max_vars.max(min_vars));
        let formula = match gen_random_cnf(
            vars,
            clauses,
            derive_seed(config.seed, 3, (i as u64) ^ 0xc4f),
            Some(1),
        ) {
            Ok(f) => f,
            Err(e) => {
                p.fail(format!("instance {i}: generator: {e}"));
                continue;
            }
        };
        let (inst, prov) = match sat_to_po(&formula, store) {
            Ok(x) => x,
            Err(e) => {
                p.fail(format!("instance {i}: reduction: {e}"));
                continue;
            }
        };
        let sat = solve_sat_bruteforce(&formula, 24).expect("few variables");
        let solved = solve_po(&inst, config.solver_budget);
        match (sat, solved) {
            (SatVerdict::Sat(assignment), SolveOutcome::Solvable(witness)) => {
                let encoded = encode_assignment(&formula, &assignment, &prov);
                let encoded_ok = encoded
                    .map(|o| check_orientation(&inst, &o).unwrap().is_valid())
                    .unwrap_or(false);
                let witness_ok = check_orientation(&inst, &witness).unwrap().is_valid();
                let decoded_ok = decode_orientation(&witness, &prov)
                    .map(|a| formula.evaluate(&a))
                    .unwrap_or(false);
                if encoded_ok && witness_ok && decoded_ok {
                    p.pass();
                } else {
                    p.fail(format!(
                        "instance {i}: encode={encoded_ok} witness={witness_ok} decode={decoded_ok}"
                    ));
                }
            }
            (SatVerdict::Unsat, SolveOutcome::Unsolvable) => p.pass(),
            (_, SolveOutcome::BudgetExceeded) => p.budget(format!("instance {i}: solver budget")),
            (a, b) => p.fail(format!(
                "instance {i}: SAT {:?} but orientation {}",
                matches!(a, SatVerdict::Sat(_)),
                verdict_name(&b)
            )),
        }
    }
    (p, t)
}

/// The contradictory two-clause formula over one variable needs the m = 3
/// gadget and must come out unsolvable.
fn unsat_side(config: &ExperimentConfig, store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("unsat_pipeline_unsolvable");
    let formula = CnfFormula::new(1, vec![[1, 1, 1], [-1, -1, -1]]);
    match solve_sat_bruteforce(&formula, 24) {
        Ok(SatVerdict::Unsat) => {}
        other => {
            p.fail(format!("reference check expected unsat, got {other:?}"));
            return (p, t);
        }
    }
    match sat_to_po(&formula, store) {
        Ok((inst, _)) => match solve_po(&inst, config.solver_budget) {
            SolveOutcome::Unsolvable => p.pass(),
            SolveOutcome::Solvable(_) => p.fail("reduction of a contradiction is solvable".into()),
            SolveOutcome::BudgetExceeded => p.budget("solver budget".into()),
        },
        Err(e) => p.fail(format!("reduction: {e}")),
    }
    (p, t)
}

/// The full pipeline output must be a simple graph whose vertices keep
/// prescribed in- and out-degrees at most 1.
fn pipeline_simplicity(
    config: &ExperimentConfig,
    store: &GadgetStore,
) -> (PropertyResult, Instant) {
    let (mut p, t) = start("pipeline_simplicity");
    for i in 0..config.simplicity_instances {
        let mut sizes = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 4, i as u64));
        let vars = sizes.gen_range(2..=5u32);
        let clauses = sizes.gen_range(1..=4usize);
        let formula = gen_random_cnf(
            vars,
            clauses,
            derive_seed(config.seed, 4, (i as u64) ^ 0x51e),
            None,
        )
        .expect("no cap");
        let bounded = bound_occurrences(&formula, 3);
        let (inst, _) = match sat_to_po(&bounded, store) {
            Ok(x) => x,
            Err(e) => {
                p.fail(format!("instance {i}: reduction: {e}"));
                continue;
            }
        };
        let degrees_ok = inst.specs.iter().all(|s| s.rho <= 1 && s.delta <= 1);
        let (po_simple, _) = is_simple(&inst.graph);
        match po_to_medep(&inst) {
            Po2MedepOutcome::Instance(medep, _) => {
                let (out_simple, pairs) = is_simple(&medep.graph);
                if degrees_ok && po_simple && out_simple {
                    p.pass();
                } else {
                    p.fail(format!(
                        "instance {i}: degrees_ok={degrees_ok} po_simple={po_simple} out_simple={out_simple} pairs={pairs:?}"
                    ));
                }
            }
            Po2MedepOutcome::TriviallyInfeasible { .. } => {
                p.fail(format!(
                    "instance {i}: pipeline output unexpectedly degenerate"
                ));
            }
        }
    }
    (p, t)
}

/// decode(encode(a)) = a over every satisfying assignment of the one-clause
/// formula on three variables.
fn encode_decode_round_trip(store: &GadgetStore) -> (PropertyResult, Instant) {
    let (mut p, t) = start("encode_decode_round_trip");
    let formula = CnfFormula::new(3, vec![[1, 2, 3]]);
    let Ok((inst, prov)) = sat_to_po(&formula, store) else {
        p.fail("reduction failed".into());
        return (p, t);
    };
    for bits in 0u32..8 {
        let values: Vec<bool> = (0..3).map(|j| bits >> (2 - j) & 1 == 1).collect();
        let assignment = Assignment::new(values);
        if !formula.evaluate(&assignment) {
            continue;
        }
        let ok = encode_assignment(&formula, &assignment, &prov)
            .ok()
            .filter(|o| check_orientation(&inst, o).unwrap().is_valid())
            .and_then(|o| decode_orientation(&o, &prov).ok())
            .is_some_and(|decoded| decoded == assignment);
        if ok {
            p.pass();
        } else {
            p.fail(format!("assignment {bits:#05b} does not round trip"));
        }
    }
    (p, t)
}

/// packing_to_orientation(orientation_to_packing(o)) = o over every
/// brute-forced orientation of small random instances.
fn packing_round_trip(config: &ExperimentConfig) -> (PropertyResult, Instant) {
    let (mut p, t) = start("packing_round_trip");
    for i in 0..config.round_trip_instances {
        let mut sizes = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 5, i as u64));
        let vertices = sizes.gen_range(2..=5usize);
        let edges = sizes.gen_range(1..=6usize);
        let inst = gen_random_po(
            vertices,
            edges,
            2,
            2,
            derive_seed(config.seed, 5, (i as u64) ^ 0x9a1),
        )
        .expect("sizes in range");
        let ported = PortedInstance::closed(&inst);
        let all = match enumerate_orientations(&ported, &[], 4096, config.solver_budget) {
            Ok(r) => r,
            Err(e) => {
                p.budget(format!("instance {i}: {e}"));
                continue;
            }
        };
        match po_to_medep(&inst) {
            Po2MedepOutcome::TriviallyInfeasible { delta_sum, rho_sum } => {
                // Lopsided sums admit no orientation at all; the k = 0 case
                // stays on the orientation side by design.
                if delta_sum == rho_sum || all.count == 0 {
                    p.pass();
                } else {
                    p.fail(format!("instance {i}: shortcut on a solvable instance"));
                }
            }
            Po2MedepOutcome::Instance(medep, prov) => {
                let mut ok = true;
                for w in &all.witnesses {
                    let orientation = w.to_orientation();
                    let packing = match orientation_to_packing(&orientation, &inst, &prov) {
                        Ok(pk) => pk,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    };
                    if !check_packing(&medep, &packing).unwrap().is_valid() {
                        ok = false;
                        break;
                    }
                    match packing_to_orientation(&packing, &inst, &prov) {
                        Ok(back) if back == orientation => {}
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    p.pass();
                } else {
                    p.fail(format!("instance {i}: round trip failed"));
                }
            }
        }
    }
    (p, t)
}

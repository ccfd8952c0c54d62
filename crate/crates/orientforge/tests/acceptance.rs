//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. The experiment harness runs once at full scale and is shared; the
//! determinism criterion runs it a second time and compares bytes.

use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use orientforge::gadgets::{
    verify_gadget, GadgetKind, GadgetStore, GadgetTemplate, Port, PortPolarity, VerifyOutcome,
};
use orientforge::graph::{DegreeSpec, Multigraph, VertexId};
use orientforge::harness::{run_equivalence_experiments, ExperimentConfig, Report};
use orientforge::oracle::{enumerate_orientations, PortConstraint, PortState, DEFAULT_NODE_BUDGET};

fn store_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../gadgets"))
}

fn store() -> &'static GadgetStore {
    static STORE: OnceLock<GadgetStore> = OnceLock::new();
    STORE.get_or_init(|| {
        GadgetStore::load_dir(store_dir()).expect("shipped gadget store must load and verify")
    })
}

fn report() -> &'static (Report, f64) {
    static REPORT: OnceLock<(Report, f64)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let start = Instant::now();
        let report = run_equivalence_experiments(&ExperimentConfig::default(), store());
        (report, start.elapsed().as_secs_f64())
    })
}

fn property<'r>(report: &'r Report, name: &str) -> &'r orientforge::harness::PropertyResult {
    report
        .properties
        .iter()
        .find(|p| p.name == name)
        .unwrap_or_else(|| panic!("report has no property {name}"))
}

fn announce(criterion: &str, ok: bool, detail: String) {
    println!(
        "acceptance {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{criterion}: {detail}");
}

/// Clause gadget with its three corner roles permuted; used to check that
/// the truth table is invariant under coordinate permutations.
fn permuted_clause_gadget(perm: [usize; 3]) -> GadgetTemplate {
    let mut graph = Multigraph::new(7);
    let corner = |j: usize| VertexId(perm[j] as u32);
    let anchor = |j: usize| VertexId(3 + perm[j] as u32);
    let hub = VertexId(6);
    for (u, v) in [
        (corner(0), corner(1)),
        (corner(1), corner(2)),
        (corner(2), corner(0)),
        (hub, corner(0)),
        (hub, corner(1)),
        (hub, corner(2)),
        (corner(0), anchor(0)),
        (corner(1), anchor(1)),
        (corner(2), anchor(2)),
    ] {
        graph.add_edge(u, v).unwrap();
    }
    let specs = vec![
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 1, 3),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(1, 0, 1),
        DegreeSpec::new(0, 1, 3),
    ];
    let mut ports: Vec<Port> = (0..3)
        .map(|j| Port::new(corner(j), PortPolarity::LiteralSlot))
        .collect();
    for j in 0..3 {
        ports.push(Port::new(anchor(j), PortPolarity::ResolutionPort));
    }
    ports.push(Port::new(hub, PortPolarity::ResolutionPort));
    GadgetTemplate::new(GadgetKind::Clause, graph, specs, ports).unwrap()
}

/// Pattern presence table of a clause template: for each directed pattern
/// of the literal slots (bit j set = slot j toward), whether any orientation
/// exists with resolution ports free.
fn presence_table(template: &GadgetTemplate) -> [bool; 8] {
    let literals = template.port_indices(PortPolarity::LiteralSlot);
    let mut table = [false; 8];
    for (pattern, entry) in table.iter_mut().enumerate() {
        let mut constraints = vec![PortConstraint::Free; template.ports.len()];
        for (bit, &pidx) in literals.iter().enumerate() {
            constraints[pidx] = if pattern >> bit & 1 == 1 {
                PortConstraint::MustBeToward
            } else {
                PortConstraint::MustBeAway
            };
        }
        let result =
            enumerate_orientations(&template.inst, &constraints, 1, DEFAULT_NODE_BUDGET).unwrap();
        *entry = result.count > 0;
    }
    table
}

#[test]
fn criterion_1_clause_gadget_truth_table() {
    let start = Instant::now();
    let template = store().clause_gadget().expect("store has a clause gadget");
    let literals = template.port_indices(PortPolarity::LiteralSlot);
    assert_eq!(literals.len(), 3);

    // One enumeration with the literal slots free-but-directed; classify
    // every witness by its literal pattern.
    let mut constraints = vec![PortConstraint::Free; template.ports.len()];
    for &pidx in &literals {
        constraints[pidx] = PortConstraint::FreeDirectedOnly;
    }
    let all = enumerate_orientations(&template.inst, &constraints, 100_000, DEFAULT_NODE_BUDGET)
        .expect("clause enumeration fits the budget");
    assert!(!all.hit_cap, "witness cap too small for the clause gadget");
    let mut counts = [0usize; 8];
    for w in &all.witnesses {
        let mut pattern = 0u8;
        for (bit, &pidx) in literals.iter().enumerate() {
            match w.port_states[pidx] {
                PortState::Toward => pattern |= 1 << bit,
                PortState::Away => {}
                PortState::Undirected => panic!("directed-only constraint violated"),
            }
        }
        counts[pattern as usize] += 1;
    }
    let all_away_absent = counts[0] == 0;
    let others_present = (1..8).all(|p| counts[p] >= 1);

    // Symmetry under all six coordinate permutations of the literal slots
    // together with the corner vertices.
    let base = presence_table(template);
    let perms: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let mut symmetric = true;
    for perm in perms {
        let permuted = presence_table(&permuted_clause_gadget(perm));
        for pattern in 0u8..8 {
            let mut mapped = 0u8;
            for bit in 0..3 {
                if pattern >> bit & 1 == 1 {
                    mapped |= 1 << perm[bit as usize];
                }
            }
            if permuted[pattern as usize] != base[mapped as usize] {
                symmetric = false;
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    announce(
        "criterion 1 (clause gadget truth table)",
        all_away_absent && others_present && symmetric && elapsed <= 10.0,
        format!(
            "all-away count {}, other patterns present {}, symmetric {}, {:.2}s <= 10s",
            counts[0], others_present, symmetric, elapsed
        ),
    );
}

#[test]
fn criterion_2_single_use_variable_gadget() {
    let start = Instant::now();
    let template = store().variable_gadget(1).expect("store has m=1");
    let constraints = vec![PortConstraint::Free; template.ports.len()];
    let result = enumerate_orientations(&template.inst, &constraints, 8, DEFAULT_NODE_BUDGET)
        .expect("tiny enumeration");
    let exactly_two = result.count == 2 && !result.hit_cap;
    let directed = result
        .witnesses
        .iter()
        .all(|w| w.port_states.iter().all(|s| *s != PortState::Undirected));
    let tports = template.port_indices(PortPolarity::TPort);
    let fports = template.port_indices(PortPolarity::FPort);
    let polarity = |w: &orientforge::oracle::PortedOrientation, t: PortState, f: PortState| {
        tports.iter().all(|&p| w.port_states[p] == t)
            && fports.iter().all(|&p| w.port_states[p] == f)
    };
    let one_true = result
        .witnesses
        .iter()
        .filter(|w| polarity(w, PortState::Away, PortState::Toward))
        .count()
        == 1;
    let one_false = result
        .witnesses
        .iter()
        .filter(|w| polarity(w, PortState::Toward, PortState::Away))
        .count()
        == 1;
    let elapsed = start.elapsed().as_secs_f64();
    announce(
        "criterion 2 (m=1 variable gadget)",
        exactly_two && directed && one_true && one_false && elapsed <= 1.0,
        format!(
            "count {} (cap hit {}), ports directed {}, polarities {}/{} in {:.3}s <= 1s",
            result.count, result.hit_cap, directed, one_true, one_false, elapsed
        ),
    );
}

#[test]
fn criterion_3_gadget_store_completeness() {
    let loaded = store();
    let mut all_verified = true;
    let mut detail = Vec::new();
    for m in [1u32, 2, 3] {
        match loaded.variable_gadget(m) {
            Ok(template) => match verify_gadget(template, DEFAULT_NODE_BUDGET) {
                Ok(VerifyOutcome::Verified(_)) => detail.push(format!("m={m} verified")),
                other => {
                    all_verified = false;
                    detail.push(format!("m={m} failed: {other:?}"));
                }
            },
            Err(e) => {
                all_verified = false;
                detail.push(format!("m={m} missing: {e}"));
            }
        }
    }
    match loaded.clause_gadget() {
        Ok(template) => match verify_gadget(template, DEFAULT_NODE_BUDGET) {
            Ok(VerifyOutcome::Verified(_)) => detail.push("clause verified".into()),
            other => {
                all_verified = false;
                detail.push(format!("clause failed: {other:?}"));
            }
        },
        Err(e) => {
            all_verified = false;
            detail.push(format!("clause missing: {e}"));
        }
    }
    announce(
        "criterion 3 (gadget store completeness)",
        all_verified,
        detail.join(", "),
    );
}

#[test]
fn criterion_4_orientation_packing_equivalence() {
    let (report, _) = report();
    let p = property(report, "orientation_packing_equivalence");
    announce(
        "criterion 4 (orientation/packing equivalence)",
        p.instances == 100 && p.failures == 0 && p.budget_exceeded == 0 && p.seconds <= 60.0,
        format!(
            "{}/{} instances, {} budget events, {:.2}s <= 60s; notes: {:?}",
            p.passes, p.instances, p.budget_exceeded, p.seconds, p.notes
        ),
    );
}

#[test]
fn criterion_5_pipeline_simplicity() {
    let (report, _) = report();
    let p = property(report, "pipeline_simplicity");
    announce(
        "criterion 5 (pipeline simplicity and degree bounds)",
        p.instances == 20 && p.failures == 0 && p.seconds <= 30.0,
        format!(
            "{}/{} instances, {:.2}s <= 30s; notes: {:?}",
            p.passes, p.instances, p.seconds, p.notes
        ),
    );
}

#[test]
fn criterion_6_sat_side_end_to_end() {
    let (report, _) = report();
    let p = property(report, "sat_encode_solve_agreement");
    // Budget blow-ups count as failures here; the per-instance budget is
    // five seconds, so fifty instances must finish well inside 250 s.
    announce(
        "criterion 6 (SAT-side end to end)",
        p.instances == 50 && p.failures == 0 && p.budget_exceeded == 0 && p.seconds <= 250.0,
        format!(
            "{}/{} instances, {} budget events, {:.2}s <= 250s; notes: {:?}",
            p.passes, p.instances, p.budget_exceeded, p.seconds, p.notes
        ),
    );
}

#[test]
fn criterion_7_unsat_side_end_to_end() {
    let (report, _) = report();
    let p = property(report, "unsat_pipeline_unsolvable");
    announce(
        "criterion 7 (UNSAT side with the m=3 gadget)",
        p.instances == 1 && p.failures == 0 && p.seconds <= 600.0,
        format!(
            "{}/{} instances, {:.2}s <= 600s; notes: {:?}",
            p.passes, p.instances, p.seconds, p.notes
        ),
    );
}

#[test]
fn criterion_8_round_trips() {
    let (report, _) = report();
    let encode = property(report, "encode_decode_round_trip");
    let packing = property(report, "packing_round_trip");
    let elapsed = encode.seconds + packing.seconds;
    announce(
        "criterion 8 (round trips)",
        encode.instances == 7
            && encode.failures == 0
            && packing.instances == 25
            && packing.failures == 0
            && elapsed <= 30.0,
        format!(
            "encode/decode {}/{}, packing {}/{}, {:.2}s <= 30s",
            encode.passes, encode.instances, packing.passes, packing.instances, elapsed
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let (first, _) = report();
    let second = run_equivalence_experiments(&ExperimentConfig::default(), store());
    let text_equal = first.to_text() == second.to_text();
    let tsv_equal = first.to_tsv() == second.to_tsv();
    let certs_equal = first.certificates == second.certificates;

    // Also compare the files as written to disk.
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    first.write_files(dir_a.path()).unwrap();
    second.write_files(dir_b.path()).unwrap();
    let mut files_equal = true;
    for name in ["report.txt", "report.tsv", "certificates.txt"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        if a != b {
            files_equal = false;
        }
    }
    announce(
        "criterion 9 (byte-identical reports and certificates)",
        text_equal && tsv_equal && certs_equal && files_equal,
        format!(
            "text {text_equal}, tsv {tsv_equal}, certificates {certs_equal}, files {files_equal}"
        ),
    );
}

#[test]
fn full_report_is_green() {
    let (report, elapsed) = report();
    for p in &report.properties {
        println!(
            "property {}: {} ({}/{} instances, {} budget events)",
            p.name,
            if p.ok() { "PASS" } else { "FAIL" },
            p.passes,
            p.instances,
            p.budget_exceeded
        );
    }
    announce(
        "experiment harness overall",
        report.all_passed(),
        format!("{} properties in {:.2}s", report.properties.len(), elapsed),
    );
}

#[test]
fn oracle_agreement_at_scale() {
    let (report, _) = report();
    let p = property(report, "oracle_agreement");
    announce(
        "oracle agreement (solver vs exhaustive enumeration)",
        p.instances >= 200 && p.failures == 0,
        format!("{}/{} instances agree", p.passes, p.instances),
    );
}

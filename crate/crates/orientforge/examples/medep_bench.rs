use orientforge::formats::CnfFormula;
use orientforge::gadgets::GadgetStore;
use orientforge::oracle::{solve_medep, SolveOutcome, DEFAULT_NODE_BUDGET};
use orientforge::reductions::{bound_occurrences, po_to_medep, sat_to_po, Po2MedepOutcome};
use std::time::Instant;

fn main() {
    let store = GadgetStore::builtin();
    let formulas = vec![
        ("1 clause", CnfFormula::new(3, vec![[1, 2, 3]])),
        ("2 clauses", CnfFormula::new(3, vec![[1, 2, 3], [-1, -2, 3]])),
        ("3 clauses", CnfFormula::new(3, vec![[1, 2, 3], [-1, -2, 3], [2, -3, 1]])),
        ("4 clauses", CnfFormula::new(4, vec![[1, 2, 3], [-1, -2, 4], [2, -3, -4], [-2, 3, 4]])),
        ("unsat", CnfFormula::new(1, vec![[1, 1, 1], [-1, -1, -1]])),
    ];
    for (name, f) in formulas {
        let bounded = bound_occurrences(&f, 3);
        let (po, _) = sat_to_po(&bounded, &store).unwrap();
        let Po2MedepOutcome::Instance(medep, _) = po_to_medep(&po) else { continue };
        let t = Instant::now();
        let out = solve_medep(&medep, DEFAULT_NODE_BUDGET);
        println!(
            "{name}: k={} edges={} -> {} in {:.2}s",
            medep.k,
            medep.graph.num_edges(),
            match out {
                SolveOutcome::Solvable(_) => "solvable",
                SolveOutcome::Unsolvable => "unsolvable",
                SolveOutcome::BudgetExceeded => "budget",
            },
            t.elapsed().as_secs_f64()
        );
    }
}

//! Property tests: exact round trips for every grammar, total parsers on
//! adversarial input, and the directed-count balance of valid orientations.

use proptest::prelude::*;

use orientforge::formats::{
    parse_cnf, parse_medep, parse_orientation, parse_packing, parse_po, write_medep,
    write_orientation, write_packing, write_po,
};
use orientforge::graph::{
    DegreeSpec, EdgeId, EdgeState, MedepInstance, Multigraph, Orientation,
    PartialOrientationInstance, PathPacking, PathTriple, VertexId,
};
use orientforge::harness::gen_random_po;
use orientforge::oracle::{enumerate_orientations, PortedInstance};
use orientforge::reductions::{po_to_medep, Po2MedepOutcome};

fn arb_multigraph(max_v: usize, max_e: usize) -> impl Strategy<Value = Multigraph> {
    (2..=max_v).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n), 0..=max_e).prop_map(move |pairs| {
            let mut g = Multigraph::new(n);
            for (a, b) in pairs {
                if a != b {
                    g.add_edge(VertexId(a as u32), VertexId(b as u32)).unwrap();
                }
            }
            g
        })
    })
}

fn arb_po_instance() -> impl Strategy<Value = PartialOrientationInstance> {
    arb_multigraph(6, 10).prop_flat_map(|g| {
        let n = g.num_vertices();
        proptest::collection::vec((0u32..3, 0u32..3, 0u32..4), n).prop_map(move |raw| {
            let specs = raw
                .iter()
                .map(|&(r, d, t)| DegreeSpec::new(r, d, t))
                .collect();
            PartialOrientationInstance::new_unchecked(g.clone(), specs).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn po_round_trip(inst in arb_po_instance()) {
        let text = write_po(&inst);
        let parsed = parse_po(&text).unwrap();
        prop_assert_eq!(&parsed.instance, &inst);
        prop_assert_eq!(write_po(&parsed.instance), text);
    }

    #[test]
    fn medep_round_trip(g in arb_multigraph(6, 10), k in 1u32..5) {
        let inst = MedepInstance::new(g, VertexId(0), VertexId(1), k).unwrap();
        let text = write_medep(&inst);
        let parsed = parse_medep(&text).unwrap();
        prop_assert_eq!(&parsed, &inst);
        prop_assert_eq!(write_medep(&parsed), text);
    }

    #[test]
    fn orientation_certificate_round_trip(states in proptest::collection::btree_map(0u32..64, 0u8..3, 0..20)) {
        let mut orientation = Orientation::new();
        for (e, s) in states {
            orientation.set(EdgeId(e), match s {
                0 => EdgeState::Forward,
                1 => EdgeState::Backward,
                _ => EdgeState::Undirected,
            });
        }
        let text = write_orientation(&orientation);
        let parsed = parse_orientation(&text).unwrap();
        prop_assert_eq!(parsed, orientation);
    }

    #[test]
    fn packing_certificate_round_trip(triples in proptest::collection::vec((0u32..64, 0u32..64, 0u32..64), 0..12)) {
        let packing = PathPacking {
            paths: triples
                .iter()
                .map(|&(a, b, c)| PathTriple {
                    first: EdgeId(a),
                    middle: EdgeId(b),
                    last: EdgeId(c),
                    inner_u: VertexId(0),
                    inner_v: VertexId(1),
                })
                .collect(),
        };
        let text = write_packing(&packing);
        let parsed = parse_packing(&text).unwrap();
        let expected: Vec<_> = packing
            .paths
            .iter()
            .map(|t| (t.first, t.middle, t.last))
            .collect();
        prop_assert_eq!(parsed, expected);
    }

    /// Every parser returns a structured result on arbitrary input; none
    /// may panic.
    #[test]
    fn parsers_are_total(text in "\\PC*") {
        let _ = parse_cnf(&text);
        let _ = parse_po(&text);
        let _ = parse_medep(&text);
        let _ = parse_orientation(&text);
        let _ = parse_packing(&text);
        let _ = orientforge::gadgets::parse_gadget(&text);
        let _ = orientforge::reductions::parse_provenance(&text);
    }

    /// Same, biased toward almost-well-formed record lines.
    #[test]
    fn parsers_are_total_on_recordish_input(
        lines in proptest::collection::vec("(po|medep|v|e|o|p|port|prov|c|#)( -?[0-9xk]{1,3}| fwd| bwd| und| tport)*", 0..8)
    ) {
        let text = lines.join("\n");
        let _ = parse_cnf(&text);
        let _ = parse_po(&text);
        let _ = parse_medep(&text);
        let _ = parse_orientation(&text);
        let _ = parse_packing(&text);
        let _ = orientforge::gadgets::parse_gadget(&text);
        let _ = orientforge::reductions::parse_provenance(&text);
    }

    /// In any valid orientation the prescribed in-degrees, the prescribed
    /// out-degrees, and the directed edges all count the same thing.
    #[test]
    fn valid_orientations_balance_directed_counts(seed in 0u64..500) {
        let inst = gen_random_po(5, 7, 2, 2, seed).unwrap();
        let ported = PortedInstance::closed(&inst);
        let result = enumerate_orientations(&ported, &[], 64, 10_000_000).unwrap();
        for w in &result.witnesses {
            let directed = w
                .edge_states
                .iter()
                .filter(|s| **s != EdgeState::Undirected)
                .count() as u32;
            let rho_sum: u32 = inst.specs.iter().map(|s| s.rho).sum();
            let delta_sum: u32 = inst.specs.iter().map(|s| s.delta).sum();
            prop_assert_eq!(rho_sum, directed);
            prop_assert_eq!(delta_sum, directed);
        }
    }

    /// Writing and re-parsing the packing reduction of a random orientation
    /// instance is exact.
    #[test]
    fn medep_reduction_round_trips_through_text(seed in 0u64..200) {
        let inst = gen_random_po(5, 10, 2, 2, seed).unwrap();
        if let Po2MedepOutcome::Instance(medep, _) = po_to_medep(&inst) {
            let text = write_medep(&medep);
            let parsed = parse_medep(&text).unwrap();
            prop_assert_eq!(&parsed, &medep);
            prop_assert_eq!(write_medep(&parsed), text);
        }
    }
}

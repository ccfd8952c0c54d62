//! Bounded search for variable gadgets: enumerate connected candidate
//! subgraphs with port attachments in a fixed deterministic order,
//! deduplicate by canonical form (iterative color refinement plus minimal
//! adjacency code), and let the enumeration oracle accept or reject each
//! candidate. The first verified candidate in enumeration order wins.

use std::collections::HashSet;

use crate::graph::{DegreeSpec, Multigraph, VertexId};
use crate::oracle::OracleError;

use super::{
    verify_gadget, with_analysis, GadgetKind, GadgetTemplate, Port, PortPolarity, VerifyOutcome,
};

#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub t_ports: u32,
    pub f_ports: u32,
    pub max_vertices: u32,
    /// Largest undirected degree in the spec alphabet (rho and delta are
    /// always at most 1).
    pub theta_cap: u32,
    /// Number of structural candidates examined before giving up.
    pub budget: u64,
}

impl SynthRequest {
    pub fn new(t_ports: u32, f_ports: u32, max_vertices: u32, budget: u64) -> Self {
        SynthRequest {
            t_ports,
            f_ports,
            max_vertices,
            theta_cap: 4,
            budget,
        }
    }
}

#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum SynthOutcome {
    Found(GadgetTemplate),
    NotFound,
    BudgetExceeded,
}

/// Per-candidate oracle budget; a candidate that cannot be decided within it
/// makes the whole search report `BudgetExceeded` rather than guess.
const ORACLE_BUDGET_PER_CANDIDATE: u64 = 1_000_000;

struct Search {
    t: usize,
    f: usize,
    theta_cap: u32,
    candidates_left: u64,
    seen: HashSet<Vec<u32>>,
    result: Option<GadgetTemplate>,
    budget_hit: bool,
}

pub fn synth_gadget(req: &SynthRequest) -> SynthOutcome {
    if req.t_ports == 0 || req.f_ports == 0 {
        return SynthOutcome::NotFound;
    }
    // Every port must be directed one way in the "true" orientation and the
    // other way in "false". Counting directed incidences globally, the two
    // orientations force both sums rho - delta = f - t and rho - delta =
    // t - f, so unequal port counts admit no template at all.
    if req.t_ports != req.f_ports {
        return SynthOutcome::NotFound;
    }
    let mut search = Search {
        t: req.t_ports as usize,
        f: req.f_ports as usize,
        theta_cap: req.theta_cap,
        candidates_left: req.budget,
        seen: HashSet::new(),
        result: None,
        budget_hit: false,
    };
    let min_n = search.t + search.f;
    for n in min_n.max(1)..=req.max_vertices as usize {
        search.enumerate_graphs(n);
        if search.result.is_some() || search.budget_hit {
            break;
        }
    }
    match (search.result, search.budget_hit) {
        (Some(t), _) => SynthOutcome::Found(t),
        (None, true) => SynthOutcome::BudgetExceeded,
        (None, false) => SynthOutcome::NotFound,
    }
}

impl Search {
    fn port_count(&self, v: usize) -> u32 {
        if v < self.t + self.f {
            1
        } else {
            0
        }
    }

    /// Maximum structural degree of a vertex: spec sums are capped at
    /// 2 + theta_cap and ports use up incidences.
    fn degree_cap(&self, v: usize) -> u32 {
        2 + self.theta_cap - self.port_count(v)
    }

    fn enumerate_graphs(&mut self, n: usize) {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        let mut mult = vec![0u32; pairs.len()];
        let mut degree = vec![0u32; n];
        self.matrix_dfs(n, &pairs, 0, &mut mult, &mut degree);
    }

    fn matrix_dfs(
        &mut self,
        n: usize,
        pairs: &[(usize, usize)],
        idx: usize,
        mult: &mut Vec<u32>,
        degree: &mut Vec<u32>,
    ) {
        if self.result.is_some() || self.budget_hit {
            return;
        }
        if idx == pairs.len() {
            self.finish_matrix(n, pairs, mult, degree);
            return;
        }
        let (a, b) = pairs[idx];
        let max_m = (self.degree_cap(a) - degree[a]).min(self.degree_cap(b) - degree[b]);
        for m in 0..=max_m {
            degree[a] += m;
            degree[b] += m;
            mult[idx] = m;
            self.matrix_dfs(n, pairs, idx + 1, mult, degree);
            mult[idx] = 0;
            degree[a] -= m;
            degree[b] -= m;
            if self.result.is_some() || self.budget_hit {
                return;
            }
        }
    }

    fn finish_matrix(&mut self, n: usize, pairs: &[(usize, usize)], mult: &[u32], degree: &[u32]) {
        // Isolated vertices cannot occur in a connected candidate, and port
        // vertices need at least one real edge.
        if n > 1 && degree.contains(&0) {
            return;
        }
        if !connected(n, pairs, mult) {
            return;
        }
        // Port vertices must flip the port between the two orientations, so
        // they need both an in- and an out-slot: rho = delta = 1 exactly,
        // which pins theta by the sum invariant.
        let mut specs = vec![DegreeSpec::new(0, 0, 0); n];
        let port_vertices = self.t + self.f;
        for v in 0..port_vertices {
            let theta = degree[v] as i64 + 1 - 2;
            if theta < 0 || theta > self.theta_cap as i64 {
                return;
            }
            specs[v] = DegreeSpec::new(1, 1, theta as u32);
        }
        self.spec_dfs(n, pairs, mult, degree, port_vertices, &mut specs);
    }

    fn spec_dfs(
        &mut self,
        n: usize,
        pairs: &[(usize, usize)],
        mult: &[u32],
        degree: &[u32],
        v: usize,
        specs: &mut Vec<DegreeSpec>,
    ) {
        if self.result.is_some() || self.budget_hit {
            return;
        }
        if v == n {
            let rho_sum: u32 = specs.iter().map(|s| s.rho).sum();
            let delta_sum: u32 = specs.iter().map(|s| s.delta).sum();
            if rho_sum == delta_sum {
                self.try_candidate(n, pairs, mult, specs);
            }
            return;
        }
        for (rho, delta) in [(0u32, 0u32), (0, 1), (1, 0), (1, 1)] {
            let sum = rho + delta;
            if degree[v] < sum {
                continue;
            }
            let theta = degree[v] - sum;
            if theta > self.theta_cap {
                continue;
            }
            specs[v] = DegreeSpec::new(rho, delta, theta);
            self.spec_dfs(n, pairs, mult, degree, v + 1, specs);
        }
    }

    fn try_candidate(
        &mut self,
        n: usize,
        pairs: &[(usize, usize)],
        mult: &[u32],
        specs: &[DegreeSpec],
    ) {
        if self.candidates_left == 0 {
            self.budget_hit = true;
            return;
        }
        self.candidates_left -= 1;

        let code = canonical_code(n, pairs, mult, specs, self.t, self.f);
        if !self.seen.insert(code) {
            return;
        }

        let mut graph = Multigraph::new(n);
        for (idx, &(a, b)) in pairs.iter().enumerate() {
            for _ in 0..mult[idx] {
                graph
                    .add_edge(VertexId(a as u32), VertexId(b as u32))
                    .expect("candidate edges are loop-free");
            }
        }
        let mut ports = Vec::new();
        for v in 0..self.t {
            ports.push(Port::new(VertexId(v as u32), PortPolarity::TPort));
        }
        for v in self.t..self.t + self.f {
            ports.push(Port::new(VertexId(v as u32), PortPolarity::FPort));
        }
        let template = match GadgetTemplate::new(GadgetKind::Variable, graph, specs.to_vec(), ports)
        {
            Ok(t) => t,
            Err(_) => return,
        };
        match verify_gadget(&template, ORACLE_BUDGET_PER_CANDIDATE) {
            Ok(VerifyOutcome::Verified(analysis)) => {
                self.result = Some(with_analysis(template, analysis));
            }
            Ok(VerifyOutcome::Failed(_)) => {}
            Err(OracleError::BudgetExceeded { .. }) => {
                self.budget_hit = true;
            }
            Err(_) => unreachable!("verification raises only budget errors"),
        }
    }
}

fn connected(n: usize, pairs: &[(usize, usize)], mult: &[u32]) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        if mult[idx] > 0 {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut visited = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                visited += 1;
                stack.push(w);
            }
        }
    }
    visited == n
}

/// Canonical code of a colored multigraph: iterative neighborhood
/// refinement, then the lexicographically minimal (colors, adjacency) code
/// over all permutations preserving the initial colors.
fn canonical_code(
    n: usize,
    pairs: &[(usize, usize)],
    mult: &[u32],
    specs: &[DegreeSpec],
    t: usize,
    f: usize,
) -> Vec<u32> {
    let mut matrix = vec![0u32; n * n];
    for (idx, &(a, b)) in pairs.iter().enumerate() {
        matrix[a * n + b] = mult[idx];
        matrix[b * n + a] = mult[idx];
    }
    // Initial colors: port class and spec.
    let class = |v: usize| -> u32 {
        if v < t {
            0
        } else if v < t + f {
            1
        } else {
            2
        }
    };
    let initial: Vec<u32> = (0..n)
        .map(|v| {
            let s = specs[v];
            class(v) * 1000 + s.rho * 100 + s.delta * 10 + s.theta
        })
        .collect();

    // Iterative refinement to a stable partition.
    let mut colors = dense_ids(&initial);
    loop {
        let mut signatures: Vec<(u32, Vec<(u32, u32)>)> = Vec::with_capacity(n);
        for v in 0..n {
            let mut neigh: Vec<(u32, u32)> = (0..n)
                .filter(|&u| matrix[v * n + u] > 0)
                .map(|u| (colors[u], matrix[v * n + u]))
                .collect();
            neigh.sort();
            signatures.push((colors[v], neigh));
        }
        let mut sorted: Vec<&(u32, Vec<(u32, u32)>)> = signatures.iter().collect();
        sorted.sort();
        sorted.dedup();
        let new_colors: Vec<u32> = signatures
            .iter()
            .map(|sig| sorted.binary_search(&sig).unwrap() as u32)
            .collect();
        if new_colors == colors {
            break;
        }
        colors = new_colors;
    }

    // Permutations must preserve the initial colors; refined colors are
    // isomorphism invariants, so restricting to refined cells stays sound
    // and keeps the permutation set small.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (colors[v], initial[v], v));
    let mut cells: Vec<Vec<usize>> = Vec::new();
    for &v in &order {
        match cells.last_mut() {
            Some(cell) if (colors[cell[0]], initial[cell[0]]) == (colors[v], initial[v]) => {
                cell.push(v)
            }
            _ => cells.push(vec![v]),
        }
    }
    let mut best: Option<Vec<u32>> = None;
    let mut perm = Vec::with_capacity(n);
    min_code_over_cells(&cells, 0, &mut perm, &matrix, &initial, n, &mut best);
    best.unwrap_or_default()
}

fn min_code_over_cells(
    cells: &[Vec<usize>],
    cell_idx: usize,
    perm: &mut Vec<usize>,
    matrix: &[u32],
    initial: &[u32],
    n: usize,
    best: &mut Option<Vec<u32>>,
) {
    if cell_idx == cells.len() {
        let mut code: Vec<u32> = perm.iter().map(|&v| initial[v]).collect();
        for i in 0..n {
            for j in i + 1..n {
                code.push(matrix[perm[i] * n + perm[j]]);
            }
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            *best = Some(code);
        }
        return;
    }
    let mut cell = cells[cell_idx].clone();
    permutations(&mut cell, 0, &mut |arrangement| {
        let len_before = perm.len();
        perm.extend_from_slice(arrangement);
        min_code_over_cells(cells, cell_idx + 1, perm, matrix, initial, n, best);
        perm.truncate(len_before);
    });
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn dense_ids(values: &[u32]) -> Vec<u32> {
    let mut sorted: Vec<u32> = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    values
        .iter()
        .map(|v| sorted.binary_search(v).unwrap() as u32)
        .collect()
}

use std::collections::{BTreeMap, HashMap};

use super::{Schedule, SemanticsError, SolverConfig};
use crate::argcore::{ArgId, ArgumentGraph, DegreeAssignment, Polarity};

/// `I(x, f)`: weighted degrees of supporters minus weighted degrees of
/// attackers. Each sum is accumulated in source-id order.
pub fn influence(
    arg_id: &ArgId,
    graph: &ArgumentGraph,
    degrees: &BTreeMap<ArgId, f64>,
) -> Result<f64, SemanticsError> {
    if !graph.contains_argument(arg_id) {
        return Err(SemanticsError::UnknownArgument(arg_id.clone()));
    }
    let mut support = 0.0;
    let mut attack = 0.0;
    for rel in graph.incoming(arg_id) {
        let f = *degrees
            .get(&rel.source)
            .ok_or_else(|| SemanticsError::UnknownArgument(rel.source.clone()))?;
        match rel.polarity {
            Polarity::Support => support += rel.weight * f,
            Polarity::Attack => attack += rel.weight * f,
        }
    }
    Ok(support - attack)
}

/// Index-based view of the graph used by the iteration.
struct Network<'g> {
    ids: Vec<&'g ArgId>,
    tau: Vec<f64>,
    /// Per target, `(source, weight)` lists in source order.
    supporters: Vec<Vec<(usize, f64)>>,
    attackers: Vec<Vec<(usize, f64)>>,
}

impl<'g> Network<'g> {
    fn new(graph: &'g ArgumentGraph) -> Self {
        let ids: Vec<&ArgId> = graph.argument_ids().collect();
        let index: HashMap<&ArgId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let tau = graph.arguments().map(|a| a.tau).collect();
        let mut supporters = vec![Vec::new(); ids.len()];
        let mut attackers = vec![Vec::new(); ids.len()];
        // Relations are sorted by source, so each list ends up in source order.
        for rel in graph.relations() {
            let (s, t) = (index[&rel.source], index[&rel.target]);
            match rel.polarity {
                Polarity::Support => supporters[t].push((s, rel.weight)),
                Polarity::Attack => attackers[t].push((s, rel.weight)),
            }
        }
        Network {
            ids,
            tau,
            supporters,
            attackers,
        }
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn influence(&self, x: usize, f: &[f64]) -> f64 {
        let support: f64 = self.supporters[x].iter().fold(0.0, |acc, &(y, w)| acc + w * f[y]);
        let attack: f64 = self.attackers[x].iter().fold(0.0, |acc, &(y, w)| acc + w * f[y]);
        support - attack
    }

    fn parents(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.supporters[x].iter().chain(&self.attackers[x]).map(|&(y, _)| y)
    }

    /// Strongly connected components, upstream components first.
    fn components(&self) -> Vec<Vec<usize>> {
        // Tarjan over the reversed edges (target -> source) emits every
        // component after the components it depends on.
        let n = self.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut next = 0;
        let parents: Vec<Vec<usize>> = (0..n).map(|x| self.parents(x).collect()).collect();

        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            // Explicit DFS frames (node, next child position).
            let mut frames = vec![(root, 0usize)];
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
                if *pos < parents[v].len() {
                    let w = parents[v][*pos];
                    *pos += 1;
                    if index[w] == usize::MAX {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        frames.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    frames.pop();
                    if let Some(&(u, _)) = frames.last() {
                        low[u] = low[u].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
        out
    }
}

/// Damped iteration restricted to `nodes`; all other entries of `f` are
/// held fixed. Returns `(iterations, residual)`.
fn iterate(net: &Network, cfg: &SolverConfig, nodes: &[usize], f: &mut [f64]) -> (u64, f64) {
    let lambda = cfg.damping;
    let mut next = vec![0.0; nodes.len()];
    let mut residual = 0.0;
    for it in 1..=cfg.max_iterations {
        for (slot, &x) in next.iter_mut().zip(nodes) {
            let target = cfg.squash(net.tau[x] + net.influence(x, f));
            *slot = ((1.0 - lambda) * f[x] + lambda * target).clamp(0.0, 1.0);
        }
        residual = 0.0;
        for (&v, &x) in next.iter().zip(nodes) {
            residual = f64::max(residual, (v - f[x]).abs());
            f[x] = v;
        }
        if residual < cfg.tolerance {
            return (it, residual);
        }
    }
    (cfg.max_iterations, residual)
}

/// Computes acceptability degrees, starting from `f⁽⁰⁾ = τ`.
///
/// With [`Schedule::Condensed`] (the default) the graph is split into
/// strongly connected components processed upstream first. A node outside
/// any cycle sees only final parent degrees, so its damped iteration would
/// reach `σ(τ + I)` exactly; it is assigned that value directly. Cyclic
/// components run the damped update with their upstream inputs fixed. The
/// fixed points are those of the synchronous iteration, and acyclic graphs
/// are evaluated exactly. `iterations_used` is the largest sweep count of
/// any component and `residual` the largest final residual.
///
/// [`Schedule::Synchronous`] updates every node from the previous sweep.
///
/// The returned assignment has no option scores; see
/// [`score_all_options`](super::score_all_options).
pub fn solve(graph: &ArgumentGraph, cfg: &SolverConfig) -> Result<DegreeAssignment, SemanticsError> {
    cfg.validate()?;
    let net = Network::new(graph);
    let mut f = net.tau.clone();

    let (iterations, residual) = match cfg.schedule {
        Schedule::Synchronous => {
            if net.len() == 0 {
                (0, 0.0)
            } else {
                let all: Vec<usize> = (0..net.len()).collect();
                iterate(&net, cfg, &all, &mut f)
            }
        }
        Schedule::Condensed => {
            let mut iterations = 0;
            let mut residual: f64 = 0.0;
            for comp in net.components() {
                if let [x] = comp[..] {
                    f[x] = cfg.squash(net.tau[x] + net.influence(x, &f)).clamp(0.0, 1.0);
                    iterations = iterations.max(1);
                } else {
                    let (it, r) = iterate(&net, cfg, &comp, &mut f);
                    iterations = iterations.max(it);
                    residual = residual.max(r);
                }
            }
            (iterations, residual)
        }
    };

    let assignment = DegreeAssignment {
        degrees: net.ids.iter().map(|id| (*id).clone()).zip(f).collect(),
        option_scores: BTreeMap::new(),
        iterations_used: iterations,
        residual,
    };
    if residual >= cfg.tolerance {
        return Err(SemanticsError::NonConvergence {
            iterations,
            residual,
            partial: Box::new(assignment),
        });
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argcore::graph::tests::{arg, option};
    use crate::argcore::{Relation, Role, Stance};
    use crate::semantics::Squash;
    use proptest::prelude::*;

    fn graph(taus: &[(&str, f64)], rels: &[(&str, &str, Polarity, f64)]) -> ArgumentGraph {
        let mut g = ArgumentGraph::new();
        g.add_option(option("o")).unwrap();
        for (id, tau) in taus {
            g.add_argument(arg(id, "o", Stance::Support, Role::RegisteredNurse, *tau)).unwrap();
        }
        for (s, t, p, w) in rels {
            g.add_relation(Relation::new(*s, *t, *p, *w)).unwrap();
        }
        g
    }

    fn degrees(pairs: &[(&str, f64)]) -> BTreeMap<ArgId, f64> {
        pairs.iter().map(|(k, v)| (ArgId::from(*k), *v)).collect()
    }

    #[test]
    fn influence_examples() {
        let g = graph(&[("x", 0.1)], &[]);
        assert_eq!(influence(&"x".into(), &g, &degrees(&[("x", 0.1)])).unwrap(), 0.0);

        let g = graph(
            &[("x", 0.1), ("y", 0.5), ("z", 0.4)],
            &[("y", "x", Polarity::Support, 0.5), ("z", "x", Polarity::Attack, 0.25)],
        );
        let f = degrees(&[("x", 0.1), ("y", 0.5), ("z", 0.4)]);
        // 0.5·0.5 − 0.25·0.4
        assert!((influence(&"x".into(), &g, &f).unwrap() - 0.15).abs() < 1e-15);

        let g = graph(
            &[("x", 0.1), ("y", 0.3), ("z", 0.3)],
            &[("y", "x", Polarity::Support, 0.7), ("z", "x", Polarity::Attack, 0.7)],
        );
        let f = degrees(&[("x", 0.1), ("y", 0.3), ("z", 0.3)]);
        assert_eq!(influence(&"x".into(), &g, &f).unwrap(), 0.0);

        assert!(matches!(
            influence(&"nope".into(), &g, &f),
            Err(SemanticsError::UnknownArgument(_))
        ));
    }

    #[test]
    fn no_relations_returns_tau() {
        let g = graph(&[("a", 0.2), ("b", 0.9), ("c", 0.0)], &[]);
        for schedule in [Schedule::Condensed, Schedule::Synchronous] {
            let cfg = SolverConfig { schedule, ..Default::default() };
            let d = solve(&g, &cfg).unwrap();
            assert_eq!(d.degrees[&ArgId::from("a")], 0.2);
            assert_eq!(d.degrees[&ArgId::from("b")], 0.9);
            assert!(d.iterations_used <= 2);
        }
    }

    #[test]
    fn empty_graph() {
        let d = solve(&ArgumentGraph::new(), &SolverConfig::default()).unwrap();
        assert!(d.degrees.is_empty());
        assert_eq!(d.iterations_used, 0);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn two_node_support_and_attack() {
        let g = graph(&[("x", 0.4), ("y", 0.5)], &[("y", "x", Polarity::Support, 0.5)]);
        let d = solve(&g, &SolverConfig::default()).unwrap();
        assert_eq!(d.degrees[&ArgId::from("y")], 0.5);
        assert!((d.degrees[&ArgId::from("x")] - 0.65).abs() < 1e-12);

        let g = graph(&[("x", 0.4), ("y", 0.5)], &[("y", "x", Polarity::Attack, 0.5)]);
        let d = solve(&g, &SolverConfig::default()).unwrap();
        assert!((d.degrees[&ArgId::from("x")] - 0.15).abs() < 1e-12);
    }

    /// Grid search over [0,1]² at step 1e-3 for points where the update map
    /// moves the vector by less than the grid can resolve.
    fn grid_fixed_points(tau: f64, alpha: f64) -> Vec<(f64, f64)> {
        let step = 1e-3;
        let tol = (1.0 + alpha) * step / 2.0 + 1e-12;
        let mut hits = Vec::new();
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (a, b) = (i as f64 * step, j as f64 * step);
                let fa = (tau + alpha * b).clamp(0.0, 1.0);
                let fb = (tau + alpha * a).clamp(0.0, 1.0);
                if (fa - a).abs() <= tol && (fb - b).abs() <= tol {
                    hits.push((a, b));
                }
            }
        }
        hits
    }

    #[test]
    fn mutual_support_cycle() {
        let oracle = grid_fixed_points(0.2, 0.5);
        assert!(!oracle.is_empty());
        assert!(oracle.iter().all(|(a, b)| (a - 0.4).abs() <= 1.001e-3 && (b - 0.4).abs() <= 1.001e-3));

        let g = graph(
            &[("x", 0.2), ("y", 0.2)],
            &[("x", "y", Polarity::Support, 0.5), ("y", "x", Polarity::Support, 0.5)],
        );
        let cfg = SolverConfig { tolerance: 1e-9, ..Default::default() };
        for schedule in [Schedule::Condensed, Schedule::Synchronous] {
            let d = solve(&g, &SolverConfig { schedule, ..cfg }).unwrap();
            for v in d.degrees.values() {
                assert!((v - 0.4).abs() < 1e-6, "{v}");
            }
        }
        // Default tolerance lands within the grid oracle's resolution.
        let d = solve(&g, &SolverConfig::default()).unwrap();
        assert!(d.degrees.values().all(|v| (v - 0.4).abs() < 1e-5));
    }

    #[test]
    fn non_convergence_carries_partial_result() {
        // Undamped mutual attack oscillates between τ and 0 forever.
        let g = graph(
            &[("x", 1.0), ("y", 1.0)],
            &[("x", "y", Polarity::Attack, 1.0), ("y", "x", Polarity::Attack, 1.0)],
        );
        let cfg = SolverConfig { damping: 1.0, max_iterations: 50, ..Default::default() };
        match solve(&g, &cfg) {
            Err(SemanticsError::NonConvergence { iterations, residual, partial }) => {
                assert_eq!(iterations, 50);
                assert!(residual >= cfg.tolerance);
                assert_eq!(partial.degrees.len(), 2);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
        // The same graph settles with damping.
        solve(&g, &SolverConfig::default()).unwrap();
    }

    #[test]
    fn schedules_agree_on_cycles_with_tails() {
        let g = graph(
            &[("a", 0.3), ("b", 0.6), ("c", 0.2), ("d", 0.5), ("e", 0.7)],
            &[
                ("a", "b", Polarity::Support, 0.4),
                ("b", "c", Polarity::Attack, 0.3),
                ("c", "b", Polarity::Support, 0.2),
                ("c", "d", Polarity::Support, 0.6),
                ("e", "a", Polarity::Attack, 0.5),
            ],
        );
        let tight = SolverConfig { tolerance: 1e-13, ..Default::default() };
        let cond = solve(&g, &tight).unwrap();
        let sync = solve(&g, &SolverConfig { schedule: Schedule::Synchronous, ..tight }).unwrap();
        for (k, v) in &cond.degrees {
            assert!((v - sync.degrees[k]).abs() < 1e-10, "{k}");
        }
    }

    fn random_graph() -> impl Strategy<Value = ArgumentGraph> {
        (1usize..9)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.0f64..=1.0, n),
                    proptest::collection::vec((0..n, 0..n, any::<bool>(), 0.0f64..1.5), 0..20),
                )
            })
            .prop_map(|(taus, edges)| {
                let mut g = ArgumentGraph::new();
                g.add_option(option("o")).unwrap();
                for (i, t) in taus.iter().enumerate() {
                    g.add_argument(arg(&format!("n{i}"), "o", Stance::Support, Role::Pharmacist, *t))
                        .unwrap();
                }
                for (s, t, p, w) in edges {
                    let pol = if p { Polarity::Support } else { Polarity::Attack };
                    let _ = g.add_relation(Relation::new(format!("n{s}"), format!("n{t}"), pol, w));
                }
                g
            })
    }

    proptest! {
        #[test]
        fn degrees_stay_in_unit_interval(g in random_graph(), logistic in any::<bool>()) {
            let cfg = SolverConfig {
                squash: if logistic { Squash::Logistic } else { Squash::Clip },
                max_iterations: 500,
                ..Default::default()
            };
            let d = match solve(&g, &cfg) {
                Ok(d) => d,
                Err(SemanticsError::NonConvergence { partial, .. }) => *partial,
                Err(e) => panic!("{e}"),
            };
            prop_assert_eq!(d.degrees.len(), g.len());
            for v in d.degrees.values() {
                prop_assert!((0.0..=1.0).contains(v));
            }
        }

        #[test]
        fn insertion_order_is_irrelevant(g in random_graph()) {
            let mut rev = ArgumentGraph::new();
            rev.add_option(option("o")).unwrap();
            for a in g.arguments().collect::<Vec<_>>().into_iter().rev() {
                rev.add_argument(a.clone()).unwrap();
            }
            for r in g.relations().iter().rev() {
                rev.add_relation(r.clone()).unwrap();
            }
            let cfg = SolverConfig { max_iterations: 500, ..Default::default() };
            prop_assert_eq!(solve(&g, &cfg), solve(&rev, &cfg));
        }
    }
}

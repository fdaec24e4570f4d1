//! Acceptance gate. Runs every primary criterion at its stated size and
//! tolerance and prints one PASS/FAIL line each. Exits nonzero if any
//! criterion fails.
//!
//! All randomness is seeded, so a failure reproduces.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::sync::Arc;
use std::time::{Duration, Instant};

use canoe::argcore::{
    ArgId, Argument, ArgumentGraph, ArgumentStatus, CareOption, CaseFlag, DocId, OptionCategory,
    OptionId, PatientCase, Polarity, Relation, Role, Stance,
};
use canoe::contestation::{
    run_session, save_session, timestamp, verify_session_dir, Command, Edit, EditAction,
    ErrorClass, NewArgument, NewRelation, Session, SessionConfigs,
};
use canoe::pipeline::{
    assess_complexity, load_corpus, recruit_team, retrieve_evidence, RuleBook, ScriptedBackend,
};
use canoe::plangen::Calendar;
use canoe::semantics::{score_all_options, solve, AggregationConfig, SolverConfig, Squash};
use chrono::{TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<String, String>;

const EPOCH: i64 = 1_793_000_000;

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

// ---------------------------------------------------------------------------
// Graph fixtures and an independent evaluator.

struct Net {
    n: usize,
    tau: Vec<f64>,
    /// `(source, target, signed weight)`
    edges: Vec<(usize, usize, f64)>,
}

fn node(i: usize) -> String {
    format!("n{i:02}")
}

fn option(i: usize) -> CareOption {
    CareOption {
        option_id: OptionId::new(format!("o{i}")),
        title: format!("option {i}"),
        description: String::new(),
        category: OptionCategory::Coordination,
    }
}

fn argument(id: String, option: usize, stance: Stance, tau: f64) -> Argument {
    Argument {
        arg_id: ArgId::new(id),
        content: "fixture".into(),
        stance,
        role: Role::RegisteredNurse,
        target_option: OptionId::new(format!("o{option}")),
        cited_evidence: Vec::new(),
        tau,
        tau_pinned: false,
        status: ArgumentStatus::Accepted,
    }
}

/// Builds a graph with `n_options` options; node `i` argues on option
/// `placement(i)`.
fn build(
    tau: &[f64],
    edges: &[(usize, usize, Polarity, f64)],
    n_options: usize,
    placement: impl Fn(usize) -> (usize, Stance),
) -> ArgumentGraph {
    let mut g = ArgumentGraph::new();
    for o in 0..n_options {
        g.add_option(option(o)).unwrap();
    }
    for (i, &t) in tau.iter().enumerate() {
        let (o, stance) = placement(i);
        g.add_argument(argument(node(i), o, stance, t)).unwrap();
    }
    for &(s, t, p, w) in edges {
        g.add_relation(Relation::new(node(s), node(t), p, w))
            .unwrap();
    }
    g
}

/// Reads τ and weights back from the graph, after any rounding it applied.
fn net_of(g: &ArgumentGraph) -> Net {
    let ids: Vec<String> = g.argument_ids().map(|a| a.as_str().to_string()).collect();
    let index: HashMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    Net {
        n: ids.len(),
        tau: g.arguments().map(|a| a.tau).collect(),
        edges: g
            .relations()
            .iter()
            .map(|r| {
                let w = if r.polarity == Polarity::Support {
                    r.weight
                } else {
                    -r.weight
                };
                (index[r.source.as_str()], index[r.target.as_str()], w)
            })
            .collect(),
    }
}

fn squash(kind: Squash, k: f64, v: f64) -> f64 {
    match kind {
        Squash::Clip => v.clamp(0.0, 1.0),
        Squash::Logistic => 1.0 / (1.0 + (-k * (v - 0.5)).exp()),
    }
}

/// One undamped application of the update rule to every node.
fn step(net: &Net, kind: Squash, k: f64, f: &[f64]) -> Vec<f64> {
    let mut v = net.tau.clone();
    for &(s, t, w) in &net.edges {
        v[t] += w * f[s];
    }
    v.into_iter().map(|x| squash(kind, k, x)).collect()
}

/// Parents-first evaluation along `order`.
fn topological_eval(net: &Net, kind: Squash, k: f64, order: &[usize]) -> Vec<f64> {
    let mut f = vec![f64::NAN; net.n];
    for &x in order {
        let mut v = net.tau[x];
        for &(s, t, w) in &net.edges {
            if t == x {
                assert!(!f[s].is_nan(), "order is not topological");
                v += w * f[s];
            }
        }
        f[x] = squash(kind, k, v);
    }
    f
}

fn solved(g: &ArgumentGraph, cfg: &SolverConfig) -> Vec<f64> {
    let d = solve(g, cfg).expect("solver converges");
    g.argument_ids().map(|id| d.degrees[id]).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

struct Dag {
    tau: Vec<f64>,
    edges: Vec<(usize, usize, Polarity, f64)>,
    order: Vec<usize>,
}

fn random_dag(rng: &mut ChaCha8Rng, max_nodes: usize, max_edges: usize) -> Dag {
    let n = rng.random_range(1..=max_nodes);
    let tau: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    if n > 1 {
        for _ in 0..rng.random_range(0..=max_edges) {
            let i = rng.random_range(0..n - 1);
            let j = rng.random_range(i + 1..n);
            let (s, t) = (order[i], order[j]);
            if seen.insert((s, t)) {
                let p = if rng.random_bool(0.5) {
                    Polarity::Support
                } else {
                    Polarity::Attack
                };
                edges.push((s, t, p, weight(rng, 0.9)));
            }
        }
    }
    Dag { tau, edges, order }
}

/// Uniform on `(0, max]`.
fn weight(rng: &mut ChaCha8Rng, max: f64) -> f64 {
    max * (1.0 - rng.random::<f64>())
}

fn random_squash(rng: &mut ChaCha8Rng) -> Squash {
    if rng.random_bool(0.5) {
        Squash::Clip
    } else {
        Squash::Logistic
    }
}

fn cfg_with(squash: Squash) -> SolverConfig {
    SolverConfig {
        squash,
        ..SolverConfig::default()
    }
}

fn one_option(_: usize) -> (usize, Stance) {
    (0, Stance::Support)
}

// ---------------------------------------------------------------------------

fn dag_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let dag = random_dag(&mut rng, 12, 20);
        let kind = random_squash(&mut rng);
        let g = build(&dag.tau, &dag.edges, 1, one_option);
        let cfg = cfg_with(kind);
        let want = topological_eval(&net_of(&g), kind, cfg.logistic_k, &dag.order);
        let err = max_diff(&solved(&g, &cfg), &want);
        worst = worst.max(err);
        ensure(err <= 1e-9, || format!("graph {i}: ∞-norm error {err:e}"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "1000 DAGs, clip and logistic, max ∞-norm error {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn random_small_graph(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<(usize, usize, Polarity, f64)>) {
    let n = rng.random_range(1..=3);
    let tau: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random_bool(0.6) {
                let p = if rng.random_bool(0.5) {
                    Polarity::Support
                } else {
                    Polarity::Attack
                };
                edges.push((s, t, p, weight(rng, 0.9)));
            }
        }
    }
    (tau, edges)
}

fn grid_residual(net: &Net, g: &[f64]) -> f64 {
    max_diff(g, &step(net, Squash::Clip, 0.0, g))
}

/// Grid points whose residual is small enough that a true fixed point may
/// lie in their cell. Every fixed point `f*` has a grid point within `h/2`
/// whose residual is at most `(1 + L)·h/2`, with `L` the largest total
/// incoming weight.
fn brute_force() -> Check {
    const H: f64 = 1e-3;
    const STEPS: i64 = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let (mut full, mut windowed) = (0, 0);
    for i in 0..200 {
        let (tau, edges) = random_small_graph(&mut rng);
        let g = build(&tau, &edges, 1, one_option);
        let net = net_of(&g);
        let f = solved(&g, &SolverConfig::default());
        let lip = (0..net.n)
            .map(|x| {
                net.edges
                    .iter()
                    .filter(|e| e.1 == x)
                    .map(|e| e.2.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        let threshold = (1.0 + lip) * H / 2.0 + 1e-12;

        let mut best = f64::INFINITY;
        let mut consider = |idx: &[i64]| {
            let p: Vec<f64> = idx.iter().map(|&k| k as f64 * H).collect();
            if grid_residual(&net, &p) <= threshold {
                best = best.min(max_diff(&p, &f));
            }
        };
        if net.n <= 2 {
            // The whole grid.
            full += 1;
            let mut idx = vec![0i64; net.n];
            loop {
                consider(&idx);
                let mut d = 0;
                while d < net.n && idx[d] == STEPS {
                    idx[d] = 0;
                    d += 1;
                }
                if d == net.n {
                    break;
                }
                idx[d] += 1;
            }
        } else {
            // Only points within 2e-3 of the solver output can answer the
            // question, so the window around it is searched exhaustively.
            windowed += 1;
            let centre: Vec<i64> = f.iter().map(|v| (v / H).round() as i64).collect();
            for a in -3..=3 {
                for b in -3..=3 {
                    for c in -3..=3 {
                        let idx = [centre[0] + a, centre[1] + b, centre[2] + c];
                        if idx.iter().all(|k| (0..=STEPS).contains(k)) {
                            consider(&idx);
                        }
                    }
                }
            }
        }
        worst = worst.max(best);
        ensure(best <= 2e-3, || {
            format!("graph {i}: nearest grid fixed point at {best:e}")
        })?;
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "200 graphs ({full} full-grid, {windowed} windowed), farthest grid fixed point {worst:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

/// Random digraph, cycles allowed, each node's incoming weights summing to
/// at most 0.9.
fn random_bounded_graph(
    rng: &mut ChaCha8Rng,
    max_nodes: usize,
) -> (Vec<f64>, Vec<(usize, usize, Polarity, f64)>) {
    let n = rng.random_range(1..=max_nodes);
    let tau: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let density = rng.random_range(0.05..0.5);
    let mut edges = Vec::new();
    for t in 0..n {
        let sources: Vec<usize> = (0..n)
            .filter(|&s| s != t && rng.random_bool(density))
            .collect();
        if sources.is_empty() {
            continue;
        }
        let total = weight(rng, 0.9);
        let parts: Vec<f64> = sources.iter().map(|_| weight(rng, 1.0)).collect();
        let sum: f64 = parts.iter().sum();
        for (s, part) in sources.into_iter().zip(parts) {
            // Round down so the rounded weights still respect the bound.
            let w = ((total * part / sum) * 1e8).floor() / 1e8;
            if w > 0.0 {
                let p = if rng.random_bool(0.5) {
                    Polarity::Support
                } else {
                    Polarity::Attack
                };
                edges.push((s, t, p, w));
            }
        }
    }
    (tau, edges)
}

fn convergence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = SolverConfig::default();
    let mut max_iter = 0;
    let mut cyclic = 0;
    for i in 0..500 {
        let (tau, edges) = random_bounded_graph(&mut rng, 15);
        let g = build(&tau, &edges, 1, one_option);
        let net = net_of(&g);
        for x in 0..net.n {
            let incoming: f64 = net
                .edges
                .iter()
                .filter(|e| e.1 == x)
                .map(|e| e.2.abs())
                .sum();
            ensure(incoming <= 0.9, || {
                format!("graph {i}: generator exceeded the weight bound")
            })?;
        }
        let d = solve(&g, &cfg).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(d.residual < 1e-6 && d.iterations_used <= 10_000, || {
            format!(
                "graph {i}: residual {:e} after {}",
                d.residual, d.iterations_used
            )
        })?;
        if d.iterations_used > 1 {
            cyclic += 1;
        }
        max_iter = max_iter.max(d.iterations_used);
    }
    Ok(format!(
        "500/500 converged ({cyclic} with cycles), most iterations {max_iter}"
    ))
}

fn boundedness_and_neutrality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let agg = AggregationConfig::default();
    for i in 0..500 {
        let (tau, edges) = random_bounded_graph(&mut rng, 15);
        let n_options = rng.random_range(1..=4);
        // The last option never gets arguments.
        let used = (n_options - 1).max(1);
        let placement: Vec<(usize, Stance)> = (0..tau.len())
            .map(|_| {
                let s = if rng.random_bool(0.5) {
                    Stance::Support
                } else {
                    Stance::Challenge
                };
                (rng.random_range(0..used), s)
            })
            .collect();
        let g = build(&tau, &edges, n_options, |x| placement[x]);
        let cfg = cfg_with(random_squash(&mut rng));
        let d = score_all_options(&g, &cfg, &agg).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(d.degrees.values().all(|v| (0.0..=1.0).contains(v)), || {
            format!("graph {i}: degree out of range")
        })?;
        ensure(
            d.option_scores.values().all(|v| (0.0..=1.0).contains(v)),
            || format!("graph {i}: option score out of range"),
        )?;
        if n_options > 1 {
            let empty = OptionId::new(format!("o{}", n_options - 1));
            ensure(d.option_scores[&empty] == 0.5, || {
                format!("graph {i}: empty option scored {}", d.option_scores[&empty])
            })?;
        }
    }
    // Symmetric support and challenge: equal multisets of degrees, listed
    // in unrelated id orders.
    for i in 0..500 {
        let m = rng.random_range(1..=6);
        let values: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let mut shuffled = values.clone();
        shuffled.shuffle(&mut rng);
        let mut g = ArgumentGraph::new();
        g.add_option(option(0)).unwrap();
        for (k, (&a, &b)) in values.iter().zip(&shuffled).enumerate() {
            g.add_argument(argument(format!("s{k}"), 0, Stance::Support, a))
                .unwrap();
            g.add_argument(argument(format!("c{}", m - 1 - k), 0, Stance::Challenge, b))
                .unwrap();
        }
        let cfg = cfg_with(random_squash(&mut rng));
        let d = score_all_options(&g, &cfg, &agg).map_err(|e| e.to_string())?;
        let f = d.option_scores[&OptionId::new("o0")];
        ensure(f == 0.5, || format!("symmetric case {i}: scored {f}"))?;
    }
    Ok(
        "500 random graphs in [0,1], empty options exactly 0.5, 500 symmetric options exactly 0.5"
            .into(),
    )
}

fn monotonicity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    for i in 0..500 {
        let mut dag = random_dag(&mut rng, 12, 20);
        while dag.tau.len() < 2 {
            dag = random_dag(&mut rng, 12, 20);
        }
        let n = dag.tau.len();
        let kind = random_squash(&mut rng);
        let cfg = cfg_with(kind);
        // y before x in the order keeps the graph acyclic.
        let yi = rng.random_range(0..n - 1);
        let xi = rng.random_range(yi + 1..n);
        let (y, x) = (dag.order[yi], dag.order[xi]);
        let base = solved(&build(&dag.tau, &dag.edges, 1, one_option), &cfg);
        let w = weight(&mut rng, 0.9);
        for p in [Polarity::Support, Polarity::Attack] {
            if dag.edges.iter().any(|e| e.0 == y && e.1 == x && e.2 == p) {
                continue;
            }
            let mut edges = dag.edges.clone();
            edges.push((y, x, p, w));
            let after = solved(&build(&dag.tau, &edges, 1, one_option), &cfg);
            tested += 1;
            match p {
                Polarity::Support => ensure(after[x] >= base[x], || {
                    format!(
                        "graph {i}: support edge lowered f(x) from {} to {}",
                        base[x], after[x]
                    )
                })?,
                Polarity::Attack => ensure(after[x] <= base[x], || {
                    format!(
                        "graph {i}: attack edge raised f(x) from {} to {}",
                        base[x], after[x]
                    )
                })?,
            }
        }
    }
    Ok(format!("500 DAGs, {tested} added edges, no violation"))
}

fn hand_checked() -> Check {
    let two = |p: Polarity| build(&[0.4, 0.5], &[(1, 0, p, 0.5)], 1, one_option);
    let cfg = SolverConfig::default();
    // x = τ_x ± α·τ_y with y unsupported.
    let (tx, ty, a): (f64, f64, f64) = (0.4, 0.5, 0.5);
    for (p, sign, name) in [
        (Polarity::Support, 1.0, "support"),
        (Polarity::Attack, -1.0, "attack"),
    ] {
        let f = solved(&two(p), &cfg);
        let want = [(tx + sign * a * ty).clamp(0.0, 1.0), ty];
        ensure(max_diff(&f, &want) <= 1e-6, || {
            format!("two-node {name}: got {f:?}, want {want:?}")
        })?;
    }

    // Mutual support: f = τ + α f, so f = τ / (1 − α); checked against a
    // 1e-3 grid search as well.
    let (tau, alpha) = (0.2, 0.5);
    let g = build(
        &[tau, tau],
        &[
            (0, 1, Polarity::Support, alpha),
            (1, 0, Polarity::Support, alpha),
        ],
        1,
        one_option,
    );
    let closed = tau / (1.0 - alpha);
    let net = net_of(&g);
    let grid = (0..=1000)
        .flat_map(|i| (0..=1000).map(move |j| [i as f64 * 1e-3, j as f64 * 1e-3]))
        .min_by(|p, q| grid_residual(&net, p).total_cmp(&grid_residual(&net, q)))
        .unwrap();
    ensure(max_diff(&grid, &[closed, closed]) <= 1e-3, || {
        format!("grid oracle found {grid:?}")
    })?;
    let tight = SolverConfig {
        tolerance: 1e-9,
        ..SolverConfig::default()
    };
    let f = solved(&g, &tight);
    let err = max_diff(&f, &[closed, closed]);
    ensure(err <= 1e-6, || {
        format!("mutual support: got {f:?}, want {closed}")
    })?;
    let default_err = max_diff(&solved(&g, &cfg), &[closed, closed]);
    Ok(format!(
        "(0.5, 0.65), (0.5, 0.15) at default config; cycle (0.4, 0.4) error {err:.1e} at tolerance 1e-9 ({default_err:.1e} at default 1e-6)"
    ))
}

// ---------------------------------------------------------------------------
// Contestation.

fn sample_session() -> Session {
    let case =
        PatientCase::from_json(&fs::read_to_string(samples().join("case.json")).unwrap()).unwrap();
    let corpus = load_corpus(&samples().join("corpus")).unwrap();
    run_session(
        &case,
        &corpus,
        &RuleBook::builtin(),
        SessionConfigs::default(),
        &ScriptedBackend,
    )
    .unwrap()
}

fn random_command(rng: &mut ChaCha8Rng, s: &Session, calendar: &Calendar, step: usize) -> Command {
    let ids: Vec<ArgId> = s.graph().argument_ids().cloned().collect();
    let options: Vec<OptionId> = s.graph().options().map(|o| o.option_id.clone()).collect();
    let docs: Vec<DocId> = s.base().evidence.iter().map(|d| d.doc_id.clone()).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        ids.choose(rng)
            .cloned()
            .unwrap_or_else(|| ArgId::new("missing"))
    };
    let reviewer = Role::HumanReviewer;
    let edit = |edit| {
        Command::Edit(EditAction {
            actor: reviewer,
            edit,
        })
    };
    match rng.random_range(0..100) {
        0..=14 => edit(Edit::Accept { target: pick(rng) }),
        15..=29 => edit(Edit::Reject { target: pick(rng) }),
        30..=39 => edit(Edit::Modify {
            target: pick(rng),
            content: format!("revised in step {step}"),
        }),
        40..=51 => edit(Edit::Add {
            argument: NewArgument {
                content: format!("reviewer note {step}"),
                stance: if rng.random_bool(0.5) {
                    Stance::Support
                } else {
                    Stance::Challenge
                },
                role: None,
                target_option: options.choose(rng).unwrap().clone(),
                cited_evidence: docs.choose_multiple(rng, 2).cloned().collect(),
            },
        }),
        52..=63 => edit(Edit::PinTau {
            target: pick(rng),
            tau: rng.random(),
        }),
        64..=79 => edit(Edit::AddRelation {
            relation: NewRelation {
                source: pick(rng),
                target: pick(rng),
                polarity: if rng.random_bool(0.5) {
                    Polarity::Support
                } else {
                    Polarity::Attack
                },
                weight: rng.random_range(0.0..1.0),
            },
        }),
        80..=91 => Command::Revalidate { actor: reviewer },
        92..=95 => Command::Approve {
            actor: Role::HumanCarePlanner,
            force: rng.random_bool(0.8),
            bulk_accepted: Vec::new(),
        },
        _ => Command::Plan {
            actor: Role::HumanCarePlanner,
            calendar: rng.random_bool(0.5).then(|| calendar.clone()),
        },
    }
}

fn at(step: usize) -> String {
    timestamp(Utc.timestamp_opt(EPOCH + 60 * step as i64, 0).unwrap())
}

fn tamper_detected(dir: &Path, audit: &str, pos: usize, replacement: u8) -> Result<(), String> {
    let mut bytes = audit.as_bytes().to_vec();
    bytes[pos] = replacement;
    fs::write(dir.join("audit.jsonl"), &bytes).unwrap();
    let outcome = verify_session_dir(dir);
    fs::write(dir.join("audit.jsonl"), audit).unwrap();
    match outcome {
        Err(e) if e.class() == ErrorClass::BrokenChain => Ok(()),
        other => Err(format!(
            "byte {pos} -> {:?} not reported as a broken chain: {:?}",
            replacement as char,
            other.map(|_| "accepted")
        )),
    }
}

fn replacement(rng: &mut ChaCha8Rng, original: u8) -> u8 {
    loop {
        let b = rng.random_range(0x20u8..0x7f);
        if b != original {
            return b;
        }
    }
}

/// Runs the replay and revalidation criteria on the same 100 sequences.
fn contestation() -> (Check, Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = sample_session();
    let calendar =
        Calendar::from_json(&fs::read_to_string(samples().join("calendar.json")).unwrap()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let (mut entries, mut refused, mut tampers, mut worst) = (0, 0, 0usize, 0.0f64);
    let mut longest = (0, String::new(), PathBuf::new());
    let mut replay_result: Result<(), String> = Ok(());
    let mut reval_result: Result<(), String> = Ok(());

    for seq in 0..100 {
        let mut s = base.clone();
        let len = rng.random_range(1..=30);
        for step in 0..len {
            let cmd = random_command(&mut rng, &s, &calendar, step);
            let before = s.clone();
            if s.execute(cmd, &at(step)).is_err() {
                refused += 1;
                if s != before {
                    replay_result = Err(format!(
                        "sequence {seq}: a refused command changed the session"
                    ));
                }
            }
        }
        entries += s.audit().len();

        // Replay in memory and from disk.
        let replayed = Session::replay(s.base().clone(), s.initial_graph().clone(), s.audit());
        if replay_result.is_ok() {
            replay_result = match replayed {
                Ok(r) if r.files() == s.files() => Ok(()),
                Ok(_) => Err(format!(
                    "sequence {seq}: replay differs from the live session"
                )),
                Err(e) => Err(format!("sequence {seq}: replay failed: {e}")),
            };
        }
        let dir = tmp.path().join(format!("s{seq:03}"));
        save_session(&dir, &s).unwrap();
        if replay_result.is_ok() {
            replay_result = match verify_session_dir(&dir) {
                Ok(r) if r.files() == s.files() => Ok(()),
                Ok(_) => Err(format!("sequence {seq}: reloaded session differs")),
                Err(e) => Err(format!("sequence {seq}: verify failed: {e}")),
            };
        }

        // Random single-byte tampering through the on-disk replay path.
        let audit = fs::read_to_string(dir.join("audit.jsonl")).unwrap();
        if !audit.is_empty() && replay_result.is_ok() {
            for _ in 0..10 {
                let pos = rng.random_range(0..audit.len());
                let b = replacement(&mut rng, audit.as_bytes()[pos]);
                tampers += 1;
                if let Err(e) = tamper_detected(&dir, &audit, pos, b) {
                    replay_result = Err(format!("sequence {seq}: {e}"));
                    break;
                }
            }
        }
        if s.audit().len() > longest.0 {
            longest = (s.audit().len(), audit, dir.clone());
        }

        // Degrees against a from-scratch solve of the edited graph.
        if s.degrees().is_none() {
            if let Err(e) = s.execute(
                Command::Revalidate {
                    actor: Role::HumanReviewer,
                },
                &at(len),
            ) {
                reval_result = Err(format!("sequence {seq}: revalidate refused: {e}"));
                continue;
            }
        }
        let fresh_graph = ArgumentGraph::from_json(&s.graph().to_canonical()).unwrap();
        let cfg = &s.configs();
        let fresh = score_all_options(&fresh_graph, &cfg.solver, &cfg.aggregation).unwrap();
        let have = s.degrees().unwrap();
        let mut err: f64 = 0.0;
        for (id, v) in &fresh.degrees {
            err = err.max((have.degrees.get(id).copied().unwrap_or(f64::NAN) - v).abs());
        }
        for (id, v) in &fresh.option_scores {
            err = err.max((have.option_scores.get(id).copied().unwrap_or(f64::NAN) - v).abs());
        }
        let same_keys = fresh.degrees.len() == have.degrees.len()
            && fresh.option_scores.len() == have.option_scores.len();
        if !(err <= 1e-9 && same_keys) && reval_result.is_ok() {
            reval_result = Err(format!(
                "sequence {seq}: differs from a fresh solve by {err:e}"
            ));
        }
        worst = worst.max(err);
    }

    // Every byte of the longest log, each changed once.
    let (_, audit, dir) = &longest;
    let mut exhaustive = 0;
    if replay_result.is_ok() {
        for pos in 0..audit.len() {
            let b = replacement(&mut rng, audit.as_bytes()[pos]);
            exhaustive += 1;
            if let Err(e) = tamper_detected(dir, audit, pos, b) {
                replay_result = Err(format!("longest log: {e}"));
                break;
            }
        }
    }

    let replay = replay_result.map(|()| {
        format!(
            "100 sequences, {entries} audit entries ({refused} refused commands left no trace), replay identical; {tampers} random + {exhaustive} exhaustive single-byte tamperings all caught"
        )
    });
    let reval = reval_result
        .map(|()| format!("100 edited graphs, max deviation from a fresh solve {worst:.1e}"));
    (replay, reval)
}

// ---------------------------------------------------------------------------
// End to end.

fn canoe(args: &[&str]) -> Result<String, String> {
    let out = Process::new(env!("CARGO_BIN_EXE_canoe"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", EPOCH.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "canoe {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn sorted_edits() -> Vec<PathBuf> {
    let mut edits: Vec<_> = fs::read_dir(samples().join("edits"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    edits.sort();
    edits
}

fn cli_flow(dir: &Path) -> Result<(), String> {
    let s = samples();
    let p = |x: &Path| x.to_str().unwrap().to_string();
    canoe(&[
        "run",
        &p(&s.join("case.json")),
        "--corpus",
        &p(&s.join("corpus")),
        "--out",
        &p(dir),
    ])?;
    for e in sorted_edits() {
        canoe(&["edit", &p(dir), "--action", &p(&e)])?;
    }
    canoe(&["revalidate", &p(dir)])?;
    canoe(&["approve", &p(dir), "--force"])?;
    canoe(&["plan", &p(dir), "--calendar", &p(&s.join("calendar.json"))])?;
    Ok(())
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let path = e.unwrap().path();
        let dest = to.join(path.file_name().unwrap());
        if path.is_dir() {
            copy_dir(&path, &dest);
        } else {
            fs::copy(&path, &dest).unwrap();
        }
    }
}

fn http_flow(data: &Path) -> Result<(), String> {
    copy_dir(&samples().join("corpus"), &data.join("corpus"));
    let state = canoe_service::AppState::new(data)
        .map_err(|e| e.to_string())?
        .with_clock(Arc::new(|| Utc.timestamp_opt(EPOCH, 0).unwrap()));
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            canoe_service::serve(listener, state).await.unwrap();
        });
    });
    let base = format!("http://{}/v1", rx.recv().unwrap());
    let http = reqwest::blocking::Client::new();
    let post = |path: &str, body: Value| -> Result<(), String> {
        let r = http
            .post(format!("{base}{path}"))
            .json(&body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = r.status();
        if status.is_success() {
            Ok(())
        } else {
            Err(format!(
                "POST {path}: {status} {}",
                r.text().unwrap_or_default()
            ))
        }
    };
    let read_json =
        |p: &Path| -> Value { serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap() };
    let sid = "/sessions/s-aging-in-place-01";
    post(
        "/cases",
        json!({"actor": "human_reviewer", "case": read_json(&samples().join("case.json"))}),
    )?;
    post(
        "/cases/aging-in-place-01/run",
        json!({"actor": "human_reviewer"}),
    )?;
    for e in sorted_edits() {
        post(&format!("{sid}/edits"), read_json(&e))?;
    }
    post(
        &format!("{sid}/revalidate"),
        json!({"actor": "human_reviewer"}),
    )?;
    post(
        &format!("{sid}/approve"),
        json!({"actor": "human_care_planner", "force": true}),
    )?;
    post(
        &format!("{sid}/plan"),
        json!({"actor": "human_care_planner", "calendar": read_json(&samples().join("calendar.json"))}),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn end_to_end() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let (a, b, data) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("data"),
    );
    cli_flow(&a)?;
    cli_flow(&b)?;
    http_flow(&data)?;
    let elapsed = start.elapsed();
    let c = data.join("sessions/s-aging-in-place-01");
    let (da, db, dc) = (dir_bytes(&a), dir_bytes(&b), dir_bytes(&c));
    ensure(da.iter().any(|(n, _)| n == "plan.json"), || {
        "no plan file written".into()
    })?;
    ensure(da == db, || "two CLI runs differ".into())?;
    ensure(da == dc, || {
        "CLI and HTTP session directories differ".into()
    })?;
    let golden = dir_bytes(&samples().join("golden/planned"));
    ensure(da == golden, || {
        "session differs from samples/golden/planned".into()
    })?;
    within(elapsed, 5.0)?;
    Ok(format!(
        "2 CLI runs + 1 HTTP run, {} files byte-identical to each other and the golden fixture, {:.2} s",
        da.len(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// Pipeline rubric.

const CONDITIONS: [&str; 8] = [
    "osteoarthritis",
    "hypertension",
    "type 2 diabetes",
    "heart failure",
    "copd",
    "dementia",
    "stroke",
    "chronic kidney disease",
];

fn random_case(rng: &mut ChaCha8Rng) -> PatientCase {
    let mut c = PatientCase::empty("rubric");
    c.age = rng.random_range(60..100);
    c.conditions = CONDITIONS
        .iter()
        .filter(|_| rng.random_bool(0.3))
        .map(|s| s.to_string())
        .collect();
    c.medications = (0..rng.random_range(0..10))
        .map(|i| format!("med-{i}"))
        .collect();
    c.adl_impairments = rng.random_range(0..=6);
    c.iadl_impairments = rng.random_range(0..=8);
    c.falls_90d = rng.random_range(0..5);
    c.hospitalizations_90d = rng.random_range(0..4);
    c.flags = CaseFlag::ALL
        .iter()
        .copied()
        .filter(|_| rng.random_bool(0.3))
        .collect();
    c
}

/// A case at least as severe as `a` in every feature.
fn dominating(rng: &mut ChaCha8Rng, a: &PatientCase) -> PatientCase {
    let mut b = a.clone();
    for cond in CONDITIONS {
        if !b.conditions.iter().any(|c| c == cond) && rng.random_bool(0.2) {
            b.conditions.push(cond.to_string());
        }
    }
    let extra = rng.random_range(0..4);
    let start = b.medications.len();
    b.medications
        .extend((start..start + extra).map(|i| format!("med-{i}")));
    b.adl_impairments = rng.random_range(a.adl_impairments..=6);
    b.iadl_impairments = rng.random_range(a.iadl_impairments..=8);
    b.falls_90d += rng.random_range(0..3);
    b.hospitalizations_90d += rng.random_range(0..2);
    for f in CaseFlag::ALL {
        if rng.random_bool(0.3) {
            b.flags.insert(f);
        }
    }
    b
}

fn pipeline_rubric() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rules = RuleBook::builtin();
    let mut level_changes = 0;
    for i in 0..500 {
        let a = random_case(&mut rng);
        let b = dominating(&mut rng, &a);
        let (ca, cb) = (
            assess_complexity(&a, &rules.complexity),
            assess_complexity(&b, &rules.complexity),
        );
        ensure(cb.raw_score >= ca.raw_score && cb.level >= ca.level, || {
            format!("pair {i}: dominating case scored {:?} below {:?}", cb, ca)
        })?;
        if cb.level > ca.level {
            level_changes += 1;
        }
        for (case, level) in [(&a, ca.level), (&b, cb.level)] {
            let roster = recruit_team(case, level, &rules.recruitment);
            let roles: BTreeSet<Role> = roster.roles.iter().copied().collect();
            ensure(roles.contains(&Role::CareCoordinator), || {
                format!("pair {i}: no care coordinator")
            })?;
            for (role, _) in rules.recruitment.base_for(level) {
                ensure(roles.contains(&role), || {
                    format!("pair {i}: base role {role} missing at {level}")
                })?;
            }
        }
        let ra: BTreeSet<Role> = recruit_team(&a, ca.level, &rules.recruitment)
            .roles
            .into_iter()
            .collect();
        let rb: BTreeSet<Role> = recruit_team(&b, cb.level, &rules.recruitment)
            .roles
            .into_iter()
            .collect();
        ensure(ra.is_subset(&rb), || {
            format!("pair {i}: dominating case lost roles")
        })?;
    }

    let corpus = load_corpus(&samples().join("corpus")).unwrap();
    let vocab: Vec<String> = corpus
        .iter()
        .flat_map(|d| {
            d.text
                .split_whitespace()
                .map(|w| w.to_string())
                .collect::<Vec<_>>()
        })
        .collect();
    for i in 0..500 {
        let words = rng.random_range(1..12);
        let query: Vec<&str> = vocab
            .choose_multiple(&mut rng, words)
            .map(|s| s.as_str())
            .collect();
        let query = query.join(" ");
        let top_k = rng.random_range(1..=12);
        let first = retrieve_evidence(&query, &corpus, top_k).map_err(|e| e.to_string())?;
        let mut shuffled = corpus.clone();
        shuffled.shuffle(&mut rng);
        let again = retrieve_evidence(&query, &shuffled, top_k).map_err(|e| e.to_string())?;
        ensure(first == again, || {
            format!("query {i}: result depends on corpus order")
        })?;
        ensure(first.len() == top_k.min(corpus.len()), || {
            format!("query {i}: wrong result count")
        })?;
        ensure(
            first.windows(2).all(|w| {
                w[0].similarity > w[1].similarity
                    || (w[0].similarity == w[1].similarity && w[0].doc_id < w[1].doc_id)
            }),
            || format!("query {i}: results not ordered by similarity then id"),
        )?;
    }
    Ok(format!(
        "500 dominance pairs monotone ({level_changes} crossed a level), rosters cover base and grow with severity; 500 queries order-independent and sorted"
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let start = Instant::now();
    let mut results: Vec<(&str, Check)> = vec![
        ("Solver correctness (DAG oracle)", dag_oracle()),
        ("Solver correctness (brute force)", brute_force()),
        ("Convergence", convergence()),
        ("Boundedness & neutrality", boundedness_and_neutrality()),
        ("Monotonicity", monotonicity()),
        ("Hand-checked fixtures", hand_checked()),
    ];
    let (replay, reval) = contestation();
    results.push(("Contestation replay", replay));
    results.push(("Revalidate-from-scratch equivalence", reval));
    results.push(("End-to-end determinism", end_to_end()));
    results.push(("Pipeline rubric tests", pipeline_rubric()));

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Ergodic optimisation: maximal cycle means of `−log H`, subactions,
//! conditional minima and the ground-state support test.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symbolic::{birkhoff, CylinderFunction, CylinderMeasure, ShiftModel, Word};
use crate::transfer::ConditionalExpectation;

/// Tolerance under which two cycle means count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Words of length `L = max(H.depth − 1, 1)` joined by the admissible words of
/// length `L + 1`; edge `e` carries `−log H(e)`.
#[derive(Debug, Clone)]
struct CylinderGraph {
    node_len: usize,
    nodes: Vec<Word>,
    // (source, target, weight, edge word), in lexicographic edge order
    edges: Vec<(usize, usize, f64, Word)>,
}

impl CylinderGraph {
    fn new(f: &CylinderFunction) -> Result<Self> {
        let model = f.model();
        let node_len = f.depth().saturating_sub(1).max(1);
        model.check_depth(node_len + 1)?;
        let nodes = model.words(node_len);
        let mut edges = Vec::new();
        model.for_each_word(node_len + 1, |_, e| {
            edges.push((
                model.rank(&e[..node_len]),
                model.rank(&e[1..]),
                f.eval(e),
                Word::from(e),
            ));
        });
        Ok(CylinderGraph {
            node_len,
            nodes,
            edges,
        })
    }
}

/// Mean of `f` along the periodic orbit of `period`, summed from its least rotation.
pub fn cycle_mean(f: &CylinderFunction, period: &Word) -> Result<f64> {
    let period = period.least_rotation();
    let len = period.len();
    if len == 0 {
        return Err(Error::InvalidArgument("cycle must be non-empty".into()));
    }
    let symbols = period.symbols();
    let mut closed = symbols.to_vec();
    closed.push(symbols[0]);
    f.model().check_admissible(&closed)?;
    let depth = f.depth();
    let mut window = Vec::with_capacity(depth);
    let mut sum = 0.0;
    for r in 0..len {
        window.clear();
        window.extend((0..depth).map(|i| symbols[(r + i) % len]));
        sum += f.eval(&window);
    }
    Ok(sum / len as f64)
}

/// Slack `V(target) − V(source) − (f(e) − m)` of one edge of the cylinder graph.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSlack {
    pub edge: Word,
    pub slack: f64,
}

/// The maximal ergodic average of `−log H`, a periodic orbit attaining it and an
/// edge-slack certificate from a subaction.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub m: f64,
    /// Period of the lexicographically least maximizing cycle found.
    pub witness: Word,
    /// Other maximizing cycles within the tie tolerance.
    pub ties: Vec<Word>,
    /// Karp's maximum cycle mean, for comparison with `m`.
    pub karp_value: f64,
    pub certificate: Vec<EdgeSlack>,
}

impl Optimum {
    /// Edges on which the subaction inequality is tight.
    pub fn equality_set(&self, tol: f64) -> Vec<Word> {
        self.certificate
            .iter()
            .filter(|e| e.slack.abs() <= tol)
            .map(|e| e.edge.clone())
            .collect()
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// `m(H) = max over invariant measures of −∫ log H`, via Karp's algorithm on the cylinder graph.
pub fn m_value(h: &CylinderFunction) -> Result<Optimum> {
    h.check_positive()?;
    let f = -&h.ln();
    let graph = CylinderGraph::new(&f)?;
    let n = graph.nodes.len();

    // best[k][v]: heaviest walk of exactly k edges ending at v, walks may start anywhere
    let mut best = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    best[0].iter_mut().for_each(|b| *b = 0.0);
    for k in 0..n {
        for &(s, t, w, _) in &graph.edges {
            let cand = best[k][s] + w;
            if cand > best[k + 1][t] {
                best[k + 1][t] = cand;
                pred[k + 1][t] = s;
            }
        }
    }
    let mut karp_value = f64::NEG_INFINITY;
    for v in 0..n {
        if best[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let worst = (0..n)
            .filter(|&k| best[k][v] > f64::NEG_INFINITY)
            .map(|k| (best[n][v] - best[k][v]) / (n - k) as f64)
            .fold(f64::INFINITY, f64::min);
        karp_value = karp_value.max(worst);
    }

    // every cycle on a heaviest n-edge walk is a candidate witness
    let mut candidates: Vec<Word> = Vec::new();
    for v in 0..n {
        if best[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let mut walk = vec![v];
        let mut cur = v;
        for k in (1..=n).rev() {
            cur = pred[k][cur];
            walk.push(cur);
        }
        walk.reverse();
        let mut last_seen = vec![usize::MAX; n];
        for (pos, &node) in walk.iter().enumerate() {
            if last_seen[node] != usize::MAX {
                let cycle: Vec<usize> = walk[last_seen[node]..pos]
                    .iter()
                    .map(|&u| graph.nodes[u].symbols()[0])
                    .collect();
                let word = Word::from(cycle).least_rotation();
                if !candidates.contains(&word) {
                    candidates.push(word);
                }
            }
            last_seen[node] = pos;
        }
    }
    let mut scored = candidates
        .into_iter()
        .map(|w| cycle_mean(&f, &w).map(|m| (m, w)))
        .collect::<Result<Vec<_>>>()?;
    let top = scored
        .iter()
        .map(|(m, _)| *m)
        .fold(f64::NEG_INFINITY, f64::max);
    scored.retain(|(m, _)| ties(*m, top));
    scored.sort_by(|a, b| a.1.cmp(&b.1));
    let (m, witness) = scored.remove(0);
    let tie_words = scored.into_iter().map(|(_, w)| w).collect();

    let v = subaction_for(h, m, SubactionOptions::default())?;
    let certificate = graph
        .edges
        .iter()
        .map(|(s, t, w, e)| EdgeSlack {
            edge: e.clone(),
            slack: v.values()[*t] - v.values()[*s] - (w - m),
        })
        .collect();

    Ok(Optimum {
        m,
        witness,
        ties: tie_words,
        karp_value,
        certificate,
    })
}

/// Controls for the max-plus iteration behind [`subaction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubactionOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Consecutive sweeps below `tol` required to stop.
    pub stable_sweeps: usize,
}

impl Default for SubactionOptions {
    fn default() -> Self {
        SubactionOptions {
            tol: 1e-12,
            max_iter: 10_000,
            stable_sweeps: 3,
        }
    }
}

/// A subaction `V` with `V(Tx) − V(x) ≥ −log H(x) − m(H)`.
pub fn subaction(h: &CylinderFunction, options: SubactionOptions) -> Result<CylinderFunction> {
    let opt = m_value(h)?;
    subaction_for(h, opt.m, options)
}

/// `V(x) = sup{Σ_{j<n} (−log H − m)(T^j y) : n ≥ 1, T^n y = x}` by Bellman iteration.
pub fn subaction_for(h: &CylinderFunction, m: f64, options: SubactionOptions) -> Result<CylinderFunction> {
    let f = -&h.ln();
    let graph = CylinderGraph::new(&f)?;
    let n = graph.nodes.len();
    let mut v = vec![f64::NEG_INFINITY; n];
    let mut stable = 0;
    let mut change = f64::INFINITY;
    for _ in 0..options.max_iter {
        let mut next = vec![f64::NEG_INFINITY; n];
        for &(s, t, w, _) in &graph.edges {
            let cand = (w - m) + v[s].max(0.0);
            if cand > next[t] {
                next[t] = cand;
            }
        }
        change = next
            .iter()
            .zip(&v)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max);
        v = next;
        if change < options.tol {
            stable += 1;
            if stable >= options.stable_sweeps {
                return CylinderFunction::new(h.shared_model().clone(), graph.node_len, v);
            }
        } else {
            stable = 0;
        }
    }
    Err(Error::NotConverged {
        what: "subaction value iteration",
        iterations: options.max_iter,
        residual: change,
        diagnostic: format!("a cycle has positive mean after subtracting m = {m}"),
    })
}

/// `H̃ = H e^{−V + V∘T}`, so that `−log H̃ = −log H + V − V∘T`.
pub fn cohomologous_tilt(h: &CylinderFunction, v: &CylinderFunction) -> Result<CylinderFunction> {
    let v_shift = crate::symbolic::alpha_power(v, 1)?;
    let exponent = v_shift.try_sub(v)?;
    h.try_mul(&exponent.exp())
}

/// Words minimizing `H^{[n]}` within each class of words sharing their last `tail_len` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    pub n: usize,
    pub tail_len: usize,
    pub members: Vec<Word>,
}

impl GroundSet {
    pub fn word_len(&self) -> usize {
        self.n + self.tail_len
    }

    /// Membership of the cylinder given by the first `n + tail_len` symbols of `word`.
    pub fn contains_prefix(&self, word: &[usize]) -> bool {
        let len = self.word_len();
        word.len() >= len && self.members.binary_search(&Word::from(&word[..len])).is_ok()
    }
}

/// Length of the tail classes used by [`conditional_minima`].
pub fn ground_tail_len(h: &CylinderFunction) -> usize {
    if h.model().is_full() {
        h.depth().saturating_sub(1)
    } else {
        h.depth().saturating_sub(1).max(1)
    }
}

/// The conditional minimum points of `H^{[n]}`, ties kept to relative tolerance 1e-12.
pub fn conditional_minima(h: &CylinderFunction, n: usize) -> Result<GroundSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    h.check_positive()?;
    let model = h.model();
    let tail_len = ground_tail_len(h);
    let len = n + tail_len;
    let log_hn = additive_birkhoff(&h.ln(), n)?.refine(len)?;
    let mut class_min = vec![f64::INFINITY; model.word_count(tail_len)];
    model.for_each_word(len, |i, w| {
        let c = model.rank(&w[n..]);
        class_min[c] = class_min[c].min(log_hn.values()[i]);
    });
    let mut members = Vec::new();
    model.for_each_word(len, |i, w| {
        let c = model.rank(&w[n..]);
        if ties(log_hn.values()[i], class_min[c]) {
            members.push(Word::from(w));
        }
    });
    Ok(GroundSet {
        n,
        tail_len,
        members,
    })
}

/// `Σ_{j<n} f∘T^j`.
fn additive_birkhoff(f: &CylinderFunction, n: usize) -> Result<CylinderFunction> {
    let model = f.shared_model().clone();
    let d = f.depth();
    CylinderFunction::from_fn(model.clone(), d + n - 1, |w| {
        (0..n).map(|i| f.values()[model.rank(&w[i..i + d])]).sum()
    })
}

/// Result of the boundedness test for `β ↦ ∫ E_n^β(1) dμ`.
#[derive(Debug, Clone, PartialEq, Eq, Copy, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroundClass {
    Bounded,
    Unbounded,
}

/// `I(β) = ∫ E_n^β(1) dμ` on a grid with its growth classification.
#[derive(Debug, Clone)]
pub struct GroundReport {
    pub n: usize,
    pub betas: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    /// Least-squares slope of `log I` over the top half of the grid.
    pub slope: f64,
    pub class: GroundClass,
    /// A charged cylinder outside the conditional minima, when one exists.
    pub witness: Option<Word>,
}

/// Slope threshold above which `I(β)` is classified unbounded.
pub const UNBOUNDED_SLOPE: f64 = 1e-6;

/// `E_n^β(1)(x) = Σ_{z ~_n x} p^{[n]}(z) (H^{[n]}(x)/H^{[n]}(z))^β`, integrated against `μ`.
pub fn ground_support_test(
    p: &CylinderFunction,
    h: &CylinderFunction,
    mu: &CylinderMeasure,
    n: usize,
    betas: &[f64],
) -> Result<GroundReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if betas.len() < 2 || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("beta grid must be increasing with at least two points".into()));
    }
    h.check_positive()?;
    h.check_model(mu.model())?;
    let e = ConditionalExpectation::new(p.clone())?;
    let model: Arc<ShiftModel> = h.shared_model().clone();
    let depth = e.output_depth(n, h.depth() + n - 1).max(1);
    if mu.depth() < depth {
        return Err(Error::DepthTooSmall {
            have: mu.depth(),
            need: depth,
        });
    }
    let mu = mu.marginal(depth)?;
    let log_hn = additive_birkhoff(&h.ln(), n)?.refine(depth)?;
    let pn = birkhoff(p, n)?.refine(depth)?;

    // group words by tail from position n on
    let tail_len = depth - n;
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); model.word_count(tail_len)];
    model.for_each_word(depth, |i, w| classes[model.rank(&w[n..])].push(i));
    let mut class_of = vec![0usize; model.word_count(depth)];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }

    let values: Vec<f64> = betas
        .iter()
        .map(|&beta| {
            mu.masses()
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0.0)
                .map(|(x, &m)| {
                    let lx = log_hn.values()[x];
                    let ebeta: f64 = classes[class_of[x]]
                        .iter()
                        .map(|&z| pn.values()[z] * (beta * (lx - log_hn.values()[z])).exp())
                        .sum();
                    m * ebeta
                })
                .sum()
        })
        .collect();

    let half = betas.len() / 2;
    let xs = &betas[half..];
    let ys: Vec<f64> = values[half..].iter().map(|v| v.ln()).collect();
    let slope = least_squares_slope(xs, &ys);
    let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let class = if slope > UNBOUNDED_SLOPE {
        GroundClass::Unbounded
    } else {
        GroundClass::Bounded
    };

    let ground = conditional_minima(h, n)?;
    let words = model.words(depth);
    let witness = mu
        .masses()
        .iter()
        .zip(&words)
        .find(|(&m, w)| m > 0.0 && !ground.contains_prefix(w.symbols()))
        .map(|(_, w)| w.clone());

    Ok(GroundReport {
        n,
        betas: betas.to_vec(),
        values,
        sup,
        slope,
        class,
        witness,
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

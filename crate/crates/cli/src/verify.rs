//! The invariant suite behind `verify-all`: one tagged check per identity, each
//! reporting its largest defect against a fixed tolerance.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thermoform::ergopt::{
    cohomologous_tilt, conditional_minima, cycle_mean, ground_support_test, m_value, subaction_for, GroundClass,
    SubactionOptions,
};
use thermoform::kms::{f_op, gibbs_state, kms_check, kms_probe, GaugeSpec, KmsOptions};
use thermoform::monomial::{
    adjoint_in, min_eigenvalue_in, random_monomial, trace_measure, AlgebraElement, ComplexFunction, Monomial,
    MonomialAlgebra,
};
use thermoform::renewal::{phase_transition_report, tower_pressure, RenewalModel};
use thermoform::symbolic::{alpha_power, CylinderFunction, CylinderMeasure, Point, ShiftModel, Word};
use thermoform::transfer::{quasi_basis_level, ConditionalExpectation, TransferOperator};

use crate::config::{measure, RunConfig};
use crate::error::CliError;
use crate::output::{num, Report, Table};
use crate::tasks::{ground_depth, kms_defects, kms_state_depth, random_pairs, Setup};

/// Outcome of one tagged check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub tag: &'static str,
    pub description: &'static str,
    pub max_defect: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<(f64, String), CliError>;

struct PlannedCheck {
    tag: &'static str,
    description: &'static str,
    tolerance: f64,
    run: Box<dyn Fn() -> Outcome + Send + Sync>,
}

const REPRESENTATION_SAMPLES: usize = 12;
const RANDOM_DEPTH: usize = 5;
const BETAS: [f64; 5] = [0.5, 0.8, 0.9, 1.0, 1.2];

struct Context {
    setup: Setup,
    spec: GaugeSpec,
    algebra: MonomialAlgebra,
    config: RunConfig,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_fn(model: &Arc<ShiftModel>, depth: usize, r: &mut ChaCha8Rng) -> Result<CylinderFunction, CliError> {
    CylinderFunction::from_fn(model.clone(), depth, |_| r.random_range(-1.0..1.0)).map_err(|e| CliError::engine("model", e))
}

fn engine(e: thermoform::Error) -> CliError {
    CliError::engine("verify", e)
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Context {
    fn representation_depth(&self, xs: &[&AlgebraElement]) -> usize {
        xs.iter().map(|x| self.algebra.min_represent_depth(x)).max().unwrap_or(1).max(1)
    }

    fn represent(&self, x: &AlgebraElement, depth: usize) -> Result<DMatrix<Complex64>, CliError> {
        self.algebra.represent(x, depth).map_err(engine)
    }

    fn sample_elements(&self, stream: u64, max_level: usize) -> Result<Vec<(AlgebraElement, AlgebraElement)>, CliError> {
        let mut r = rng(self.config.numeric.seed, stream);
        let model = &self.setup.model;
        (0..REPRESENTATION_SAMPLES)
            .map(|_| {
                let element = |r: &mut ChaCha8Rng| -> Result<AlgebraElement, CliError> {
                    let terms = (0..2)
                        .map(|_| {
                            let level = r.random_range(0..=max_level);
                            random_monomial(model.clone(), level, 2, r).map_err(engine)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(AlgebraElement::new(terms))
                };
                Ok((element(&mut r)?, element(&mut r)?))
            })
            .collect()
    }

    fn expectation_identities(&self) -> Outcome {
        let model = &self.setup.model;
        let p = &self.setup.p;
        let e = ConditionalExpectation::new(p.clone()).map_err(engine)?;
        let lp = TransferOperator::normalized(p.clone()).map_err(engine)?;
        let mut r = rng(self.config.numeric.seed, 1);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let f = random_fn(model, RANDOM_DEPTH, &mut r)?;
            let g = random_fn(model, RANDOM_DEPTH, &mut r)?;
            let lhs = lp.apply(&f.try_mul(&alpha_power(&g, 1).map_err(engine)?).map_err(engine)?).map_err(engine)?;
            let rhs = lp.apply(&f).map_err(engine)?.try_mul(&g).map_err(engine)?;
            worst = worst.max(lhs.max_abs_diff(&rhs));
            for n in 1..=self.config.verify.levels {
                let en = e.apply(n, &f).map_err(engine)?;
                worst = worst.max(e.apply(n, &en).map_err(engine)?.max_abs_diff(&en));
                let nested = e.apply(n + 1, &en).map_err(engine)?;
                worst = worst.max(nested.max_abs_diff(&e.apply(n + 1, &f).map_err(engine)?));
            }
        }
        let f = random_fn(model, RANDOM_DEPTH, &mut r)?;
        let mut index_defect = 0.0f64;
        for m in 1..=self.config.verify.levels.min(3) {
            let qb = quasi_basis_level(p, m).map_err(engine)?;
            let mut sum = CylinderFunction::zero(model.clone());
            let mut squares = CylinderFunction::zero(model.clone());
            for u in &qb.elements {
                let term = u.try_mul(&e.apply(m, &u.try_mul(&f).map_err(engine)?).map_err(engine)?).map_err(engine)?;
                sum = sum.try_add(&term).map_err(engine)?;
                squares = squares.try_add(&u.try_mul(u).map_err(engine)?).map_err(engine)?;
            }
            worst = worst.max(sum.max_abs_diff(&f));
            index_defect = index_defect.max(squares.max_abs_diff(&qb.index));
            if m == 1 {
                index_defect = index_defect.max(qb.index.max_abs_diff(&p.recip()));
            }
        }
        let scale = p.recip().sup_norm().max(1.0);
        Ok((
            worst.max(index_defect / scale),
            format!("identities {} index {}", num(worst), num(index_defect)),
        ))
    }

    fn product_rule(&self) -> Outcome {
        let mut worst = 0.0f64;
        for (x, y) in self.sample_elements(2, 3)? {
            let xy = self.algebra.multiply(&x, &y).map_err(engine)?;
            let d = self.representation_depth(&[&x, &y, &xy]);
            let (rx, ry, rxy) = (self.represent(&x, d)?, self.represent(&y, d)?, self.represent(&xy, d)?);
            let scale = max_norm(&rx).max(1.0) * max_norm(&ry).max(1.0);
            worst = worst.max(max_norm(&(&rx * &ry - rxy)) / scale);
        }
        Ok((worst, format!("{REPRESENTATION_SAMPLES} pairs")))
    }

    fn level_reduction(&self) -> Outcome {
        let mut r = rng(self.config.numeric.seed, 3);
        let model = &self.setup.model;
        let mut worst = 0.0f64;
        for _ in 0..REPRESENTATION_SAMPLES {
            let n = r.random_range(0..=2);
            let x = random_monomial(model.clone(), n, 2, &mut r).map_err(engine)?;
            for m in n + 1..=n + 2 {
                let reduced = self.algebra.reduce_level(&x, m).map_err(engine)?;
                let xe: AlgebraElement = x.clone().into();
                let d = self.representation_depth(&[&reduced, &xe]);
                let rx = self.represent(&xe, d)?;
                let scale = max_norm(&rx).max(1.0);
                worst = worst.max(max_norm(&(self.represent(&reduced, d)? - rx)) / scale);
            }
        }
        Ok((worst, format!("{REPRESENTATION_SAMPLES} monomials, two levels up")))
    }

    fn representation(&self) -> Outcome {
        let mut worst = 0.0f64;
        let mut min_eig = f64::INFINITY;
        for (x, _) in self.sample_elements(4, 3)? {
            let d = self.representation_depth(&[&x]);
            let tau = trace_measure(&self.algebra, d).map_err(engine)?;
            let rx = self.represent(&x, d)?;
            let scale = max_norm(&rx).max(1.0);
            worst = worst.max(max_norm(&(adjoint_in(&tau, &rx) - self.represent(&x.adjoint(), d)?)) / scale);
            let xx = self.algebra.multiply(&x.adjoint(), &x).map_err(engine)?;
            let dx = self.representation_depth(&[&xx]);
            let tau = trace_measure(&self.algebra, dx).map_err(engine)?;
            let e = min_eigenvalue_in(&tau, &self.represent(&xx, dx)?) / (scale * scale);
            min_eig = min_eig.min(e);
        }
        Ok((worst.max(-min_eig), format!("adjoint {} min eigenvalue of x*x {}", num(worst), num(min_eig))))
    }

    fn factors_through_expectation(&self) -> Outcome {
        let mut r = rng(self.config.numeric.seed, 5);
        let model = &self.setup.model;
        let mut worst = 0.0f64;
        for (x, _) in self.sample_elements(6, 3)? {
            let a = random_fn(model, 2, &mut r)?.to_complex();
            let b = random_fn(model, 3, &mut r)?.to_complex();
            let fa: AlgebraElement = Monomial::function(a.clone()).into();
            let fb: AlgebraElement = Monomial::function(b.clone()).into();
            let axb = self
                .algebra
                .multiply(&self.algebra.multiply(&fa, &x).map_err(engine)?, &fb)
                .map_err(engine)?;
            let lhs = self.algebra.expectation_g(&axb).map_err(engine)?;
            let g = self.algebra.expectation_g(&x).map_err(engine)?;
            let rhs = a.try_mul(&g).and_then(|t| t.try_mul(&b)).map_err(engine)?;
            let scale = g.sup_norm().max(1.0);
            worst = worst.max(lhs.max_abs_diff(&rhs) / scale);
            let gxx: ComplexFunction = self
                .algebra
                .expectation_g(&self.algebra.multiply(&x.adjoint(), &x).map_err(engine)?)
                .map_err(engine)?;
            let s = gxx.sup_norm().max(1.0);
            for z in gxx.values() {
                worst = worst.max(-z.re / s).max(z.im.abs() / s);
            }
        }
        Ok((worst, "G(a x b) = a G(x) b and G(x*x) >= 0".into()))
    }

    fn candidate(&self, depth: usize) -> Result<CylinderMeasure, CliError> {
        match &self.config.verify.candidate {
            None => gibbs_state(&self.spec, depth).map_err(engine),
            Some(c) => measure(&self.setup.model, c, "verify.candidate", depth, |d| {
                gibbs_state(&self.spec, d).map_err(engine)
            }),
        }
    }

    fn kms_condition(&self) -> Outcome {
        let v = &self.config.verify;
        let pairs = random_pairs(&self.setup.model, v.pairs, 3, 2, self.config.numeric.seed)?;
        let levels = v.levels;
        let need = kms_state_depth(&self.algebra, &self.spec, &pairs)?.max(self.spec.base_depth() + levels);
        let phi = self.candidate(need)?;
        let defects = kms_defects(&self.algebra, &self.spec, &phi, &pairs)?;
        let equality = defects.iter().copied().fold(0.0, f64::max);
        let condition = kms_check(&self.spec, &phi, levels).map_err(engine)?.max_condition_defect();
        let which = if v.candidate.is_some() { "candidate" } else { "gibbs" };
        Ok((
            equality.max(condition),
            format!(
                "{which} state: equality {} over {} pairs, F-condition {}",
                num(equality),
                pairs.len(),
                num(condition)
            ),
        ))
    }

    fn f_operator_nesting(&self) -> Outcome {
        let mut r = rng(self.config.numeric.seed, 7);
        let model = &self.setup.model;
        let f = random_fn(model, 4, &mut r)?;
        let mut worst = 0.0f64;
        let mut min_one = f64::INFINITY;
        for n in 0..self.config.verify.levels {
            let nested = f_op(&self.spec, n + 1, &f_op(&self.spec, n, &f).map_err(engine)?).map_err(engine)?;
            let direct = f_op(&self.spec, n + 1, &f).map_err(engine)?;
            worst = worst.max(nested.max_abs_diff(&direct) / direct.sup_norm().max(1.0));
            let one = f_op(&self.spec, n + 1, &CylinderFunction::one(model.clone())).map_err(engine)?;
            min_one = min_one.min(one.min_value());
        }
        let defect = if min_one > 0.0 { worst } else { f64::INFINITY };
        Ok((defect, format!("min F_n(1) {}", num(min_one))))
    }

    fn gibbs_levels(&self) -> Result<(CylinderMeasure, usize), CliError> {
        let levels = self.config.verify.levels;
        Ok((gibbs_state(&self.spec, self.spec.base_depth() + levels).map_err(engine)?, levels))
    }

    fn bridge_identity(&self) -> Outcome {
        let (nu, levels) = self.gibbs_levels()?;
        let check = kms_check(&self.spec, &nu, levels).map_err(engine)?;
        let op = TransferOperator::new(self.spec.boltzmann_weight()).map_err(engine)?;
        let one: CylinderFunction = CylinderFunction::one(self.setup.model.clone());
        let mut scale = 1.0f64;
        for n in 1..=levels {
            scale = scale.max(op.apply_n(&one, n).map_err(engine)?.sup_norm());
        }
        Ok((check.max_bridge_defect() / scale, format!("n <= {levels}")))
    }

    fn gibbs_is_kms(&self) -> Outcome {
        let (nu, levels) = self.gibbs_levels()?;
        let check = kms_check(&self.spec, &nu, levels).map_err(engine)?;
        Ok((check.max_condition_defect(), format!("n <= {levels}")))
    }

    /// Full shift with depth-one `H` and `p`: the iteration is exact at the marginal depth.
    fn probe_is_exact(&self) -> bool {
        self.setup.model.is_full() && self.setup.h.depth() <= 1 && self.setup.p.depth() <= 1
    }

    /// Worst total variation to the Gibbs state over the seeded starts, at the
    /// marginal depth or at the base depth, with the largest pairwise distance.
    fn probe(&self, levels: usize, shallow: bool) -> Result<(f64, f64, Vec<f64>), CliError> {
        let n = &self.config.numeric;
        let options = KmsOptions {
            levels,
            tol: n.tol,
            max_passes: n.max_iter,
        };
        let probe = kms_probe(&self.spec, options, n.starts, n.seed).map_err(engine)?;
        let depth = if shallow { self.spec.base_depth() } else { probe.results[0].marginal_depth };
        let gibbs = gibbs_state(&self.spec, depth).map_err(engine)?;
        let mut to_gibbs = 0.0f64;
        let mut pairwise = 0.0f64;
        let marginals: Vec<CylinderMeasure> = probe
            .results
            .iter()
            .map(|r| r.marginal().marginal(depth))
            .collect::<Result<_, _>>()
            .map_err(engine)?;
        for (i, m) in marginals.iter().enumerate() {
            to_gibbs = to_gibbs.max(m.total_variation(&gibbs).map_err(engine)?);
            for other in &marginals[i + 1..] {
                pairwise = pairwise.max(m.total_variation(other).map_err(engine)?);
            }
        }
        let first = marginals[0].marginal(1).map_err(engine)?;
        Ok((to_gibbs, pairwise, first.masses().to_vec()))
    }

    fn kms_uniqueness(&self) -> Outcome {
        let n = &self.config.numeric;
        let fmt = |v: &[f64]| v.iter().map(|&m| num(m)).collect::<Vec<_>>().join(", ");
        if self.probe_is_exact() {
            let (to_gibbs, pairwise, first) = self.probe(n.levels, false)?;
            return Ok((
                pairwise.max(to_gibbs),
                format!(
                    "{} starts, pairwise {}, to gibbs {}, depth-1 marginal [{}]",
                    n.starts,
                    num(pairwise),
                    num(to_gibbs),
                    fmt(&first)
                ),
            ));
        }
        let half = n.levels.div_ceil(2);
        let (coarse, _, _) = self.probe(half, true)?;
        let (fine, pairwise, first) = self.probe(n.levels, true)?;
        let ratio = if fine <= self.config.verify.probe_tol { 0.0 } else { fine / coarse };
        Ok((
            ratio,
            format!(
                "depth-{} distance to gibbs {} at {half} levels, {} at {} levels (pairwise {}), depth-1 marginal [{}]",
                self.spec.base_depth(),
                num(coarse),
                num(fine),
                n.levels,
                num(pairwise),
                fmt(&first)
            ),
        ))
    }

    fn ergodic_optimization(&self) -> Outcome {
        let h = &self.setup.h;
        let model = &self.setup.model;
        let opt = m_value(h).map_err(engine)?;
        let f = -&h.ln();
        let (best, max_len) = enumerate_cycles(&f, 12, 200_000)?;
        let node_len = h.depth().saturating_sub(1).max(1);
        let exact = model.word_count(node_len) <= max_len;
        let gap = if exact { (opt.m - best).abs() } else { (best - opt.m).max(0.0) };
        let v = subaction_for(h, opt.m, SubactionOptions::default()).map_err(engine)?;
        let len = f.depth().max(v.depth() + 1);
        let mut min_slack = f64::INFINITY;
        model.for_each_word(len, |_, w| {
            min_slack = min_slack.min(v.eval(&w[1..]) - v.eval(w) - (f.eval(w) - opt.m));
        });
        let period = opt.witness.symbols();
        let k = period.len();
        let mut witness_slack = 0.0f64;
        for r in 0..k {
            let w: Vec<usize> = (0..len).map(|i| period[(r + i) % k]).collect();
            witness_slack = witness_slack.max((v.eval(&w[1..]) - v.eval(&w) - (f.eval(&w) - opt.m)).abs());
        }
        let mut average_gap = 0.0f64;
        let tilted = -&cohomologous_tilt(h, &v).map_err(engine)?.ln();
        for w in model.words(4.min(model.max_depth())) {
            if let (Ok(a), Ok(b)) = (cycle_mean(&f, &w), cycle_mean(&tilted, &w)) {
                average_gap = average_gap.max((a - b).abs());
            }
        }
        Ok((
            gap.max(-min_slack).max(witness_slack).max(average_gap),
            format!(
                "m {} witness {} enumeration {} up to length {max_len}{}, min slack {}",
                num(opt.m),
                opt.witness,
                num(best),
                if exact { "" } else { " (lower bound)" },
                num(min_slack)
            ),
        ))
    }

    fn ground_boundedness(&self) -> Outcome {
        let s = &self.setup;
        let betas = &self.config.ground.betas;
        let mut mismatches = 0usize;
        let mut overshoot = 0.0f64;
        let mut tested = 0usize;
        for n in 1..=2 {
            let ms = conditional_minima(&s.h, n).map_err(engine)?;
            let depth = ground_depth(&s.p, &s.h, n)?;
            if s.model.check_depth(depth).is_err() {
                continue;
            }
            for x in sample_points(&s.model) {
                let mu = CylinderMeasure::dirac(s.model.clone(), &x, depth).map_err(engine)?;
                let report = ground_support_test(&s.p, &s.h, &mu, n, betas).map_err(engine)?;
                let inside = ms.contains_prefix(x.cylinder(ms.word_len()).symbols());
                if (report.class == GroundClass::Bounded) != inside {
                    mismatches += 1;
                }
                if inside {
                    overshoot = overshoot.max(report.sup - 1.0);
                }
                tested += 1;
            }
        }
        Ok((
            mismatches as f64 + overshoot.max(0.0),
            format!("{tested} point masses, {mismatches} misclassified, bounded sup - 1 = {}", num(overshoot)),
        ))
    }

    fn ground_support(&self) -> Outcome {
        let h = &self.setup.h;
        let model = &self.setup.model;
        let mut violations = 0usize;
        let mut sets = Vec::new();
        for n in 1..=5 {
            let ms = conditional_minima(h, n).map_err(engine)?;
            if model.check_depth(ms.word_len()).is_err() {
                break;
            }
            sets.push(ms);
        }
        for pair in sets.windows(2) {
            violations += pair[1].members.iter().filter(|w| !pair[0].contains_prefix(w.symbols())).count();
        }
        let opt = m_value(h).map_err(engine)?;
        let v = subaction_for(h, opt.m, SubactionOptions::default()).map_err(engine)?;
        let tilted = cohomologous_tilt(h, &v).map_err(engine)?;
        let x = Point::periodic(model, opt.witness.clone()).map_err(engine)?;
        let mut missing = 0usize;
        for n in 1..=4 {
            let ms = conditional_minima(&tilted, n).map_err(engine)?;
            if !ms.contains_prefix(x.cylinder(ms.word_len()).symbols()) {
                missing += 1;
            }
        }
        Ok((
            (violations + missing) as f64,
            format!(
                "nesting checked for n <= {}, witness {} in the tilted minima for n <= 4",
                sets.len().saturating_sub(1),
                opt.witness
            ),
        ))
    }

    fn renewal(&self) -> Outcome {
        let r = &self.config.renewal;
        let model = RenewalModel::new(r.gamma, r.truncation).map_err(|e| CliError::engine("renewal", e))?;
        let mut worst = 0.0f64;
        for beta in BETAS {
            let p = model.pressure(beta).map_err(engine)?;
            let oracle = tower_pressure(&model, beta, 1e-12, 500).map_err(engine)?;
            worst = worst.max((p.pressure - oracle.pressure).abs() / p.truncation_bound.max(1e-6) * 1e-6);
        }
        let p1 = model.pressure(1.0).map_err(engine)?.pressure;
        let p12 = model.pressure(1.2).map_err(engine)?.pressure;
        let grid: Vec<f64> = (5..=9)
            .map(|i| model.pressure(i as f64 / 10.0).map(|p| p.pressure))
            .collect::<Result<_, _>>()
            .map_err(engine)?;
        let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
        let t = phase_transition_report(&model).map_err(engine)?;
        let rel = (t.left_derivative / t.mean_g_mu_tilde - 1.0).abs();
        let masses = model.eigenmeasure_masses();
        let missing = 1.0 - masses.iter().rev().sum::<f64>();
        let mut defect = worst.max(p1);
        if p12 != 0.0 || !decreasing || t.right_derivative != 0.0 || !(t.left_derivative < 0.0) {
            defect = f64::INFINITY;
        }
        if rel > 0.02 || missing > model.mass_tail_bound() + 1e-12 || missing < -1e-12 {
            defect = f64::INFINITY;
        }
        Ok((
            defect,
            format!(
                "P(1) {}, left derivative {} vs mean {}, jump {}",
                num(p1),
                num(t.left_derivative),
                num(t.mean_g_mu_tilde),
                num(t.jump)
            ),
        ))
    }
}

/// Eventually periodic points with preperiod at most one and period at most two.
fn sample_points(model: &Arc<ShiftModel>) -> Vec<Point> {
    let mut prefixes = vec![Word::empty()];
    prefixes.extend(model.words(1));
    let periods: Vec<Word> = (1..=2)
        .flat_map(|len| model.words(len))
        .filter(|w| w.is_primitive() && w.least_rotation() == *w)
        .collect();
    let mut points = Vec::new();
    for prefix in &prefixes {
        for period in &periods {
            if let Ok(x) = Point::new(model, prefix.clone(), period.clone()) {
                points.push(x);
            }
        }
    }
    points
}

/// Largest periodic average of `f` over admissible periods up to `max_len`, with
/// the length actually reached under the word budget.
fn enumerate_cycles(f: &CylinderFunction, max_len: usize, budget: usize) -> Result<(f64, usize), CliError> {
    let model = f.model();
    let d = f.depth();
    let mut best = f64::NEG_INFINITY;
    let mut reached = 0;
    for len in 1..=max_len.min(model.max_depth()) {
        if model.word_count(len) > budget {
            break;
        }
        for w in model.words(len) {
            let s = w.symbols();
            if !model.allows(s[len - 1], s[0]) {
                continue;
            }
            let mut window = vec![0; d];
            let mut sum = 0.0;
            for r in 0..len {
                for (i, slot) in window.iter_mut().enumerate() {
                    *slot = s[(r + i) % len];
                }
                sum += f.eval(&window);
            }
            best = best.max(sum / len as f64);
        }
        reached = len;
    }
    Ok((best, reached))
}

fn suite(ctx: Arc<Context>) -> Vec<PlannedCheck> {
    macro_rules! planned {
        ($tag:expr, $desc:expr, $tol:expr, $method:ident) => {{
            let c = ctx.clone();
            PlannedCheck {
                tag: $tag,
                description: $desc,
                tolerance: $tol,
                run: Box::new(move || c.$method()),
            }
        }};
    }
    let kms_tol = ctx.config.verify.kms_tol;
    let probe_tol = ctx.config.verify.probe_tol;
    let mut planned = vec![
        planned!("product-rule", "represent(xy) = represent(x) represent(y)", 1e-13, product_rule),
        planned!("level-reduction", "reduce_level preserves the represented operator", 1e-13, level_reduction),
        planned!("representation", "represent is a positive *-homomorphism", 1e-12, representation),
        planned!(
            "expectation-identities",
            "bimodule rule, E_n idempotent and nested, quasi-basis and index",
            1e-12,
            expectation_identities
        ),
        planned!("factors-through-expectation", "G is a positive conditional expectation", 1e-12, factors_through_expectation),
        planned!("kms-condition", "psi(x sigma_{i beta}(y)) = psi(y x) and phi o F_n = phi", kms_tol, kms_condition),
        planned!("f-operator-nesting", "F_{n+1} F_n = F_{n+1} and F_n(1) > 0", 1e-12, f_operator_nesting),
        planned!("bridge-identity", "L_{H,beta}^n f = L_p^n(Lambda^[n] f)", 1e-13, bridge_identity),
        planned!("gibbs-is-kms", "the Gibbs state is fixed by every F_n*", kms_tol, gibbs_is_kms),
        if ctx.probe_is_exact() {
            planned!("kms-uniqueness", "seeded starts reach the same state, equal to the Gibbs state", probe_tol, kms_uniqueness)
        } else {
            planned!(
                "kms-uniqueness",
                "distance of seeded starts to the Gibbs state at the base depth at least halves from N/2 to N levels",
                0.5,
                kms_uniqueness
            )
        },
        planned!("ergodic-optimization", "m(H) against cycle enumeration, subaction slack", 1e-10, ergodic_optimization),
        planned!("ground-boundedness", "point masses are bounded exactly on the conditional minima", 1e-9, ground_boundedness),
        planned!("ground-support", "M_{n+1} in M_n, tilted minima contain the maximizing orbit", 0.0, ground_support),
    ];
    if ctx.config.verify.renewal {
        planned.push(planned!("renewal-transition", "renewal pressure, tower oracle and phase transition", 1e-6, renewal));
    }
    planned
}

/// Depth limits the suite needs, checked before any computation.
fn precheck(ctx: &Context) -> Result<(), CliError> {
    let model = &ctx.setup.model;
    let depth = ctx.spec.working_depth(ctx.config.numeric.levels);
    model
        .check_depth(depth)
        .map_err(|e| CliError::validation("numeric.levels", e.to_string()))?;
    model
        .check_depth(ctx.spec.base_depth() + ctx.config.verify.levels + 2)
        .map_err(|e| CliError::validation("verify.levels", e.to_string()))?;
    model
        .check_depth(RANDOM_DEPTH + ctx.config.verify.levels + 1)
        .map_err(|e| CliError::validation("verify.levels", e.to_string()))?;
    Ok(())
}

pub fn run_checks(config: &RunConfig) -> Result<Vec<Check>, CliError> {
    let setup = Setup::new(config)?;
    let spec = setup.spec(config.potential.beta)?;
    let algebra = MonomialAlgebra::from_spec(&spec);
    let ctx = Context {
        setup,
        spec,
        algebra,
        config: config.clone(),
    };
    precheck(&ctx)?;
    let ctx = Arc::new(ctx);
    let planned = suite(ctx);
    Ok(planned
        .par_iter()
        .map(|s| {
            let (max_defect, detail, errored) = match (s.run)() {
                Ok((d, detail)) => (d, detail, false),
                Err(e) => (f64::INFINITY, e.to_string(), true),
            };
            Check {
                tag: s.tag,
                description: s.description,
                max_defect,
                tolerance: s.tolerance,
                passed: !errored && max_defect <= s.tolerance,
                detail,
            }
        })
        .collect())
}

pub fn verify_all(config: &RunConfig) -> Result<Report, CliError> {
    let checks = run_checks(config)?;
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.tag.to_string()).collect();
    let mut table = Table::new(&["tag", "max_defect", "tolerance", "status"]);
    for c in &checks {
        table.push(vec![
            c.tag.to_string(),
            num(c.max_defect),
            num(c.tolerance),
            if c.passed { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    #[derive(Serialize)]
    struct VerifyReport {
        passed: bool,
        failed: Vec<String>,
        checks: Vec<Check>,
    }
    let mut report = Report::new(
        VerifyReport {
            passed: failed.is_empty(),
            failed: failed.clone(),
            checks,
        },
        Some(table),
    );
    report.failed = failed;
    Ok(report)
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoform::ergopt::{conditional_minima, ground_support_test, m_value, subaction, GroundClass, SubactionOptions};
use thermoform::kms::{gibbs_state, kms_probe, lambda_cocycle, GaugeSpec, KmsOptions};
use thermoform::monomial::{
    gauge, kms_equality_defect, random_monomial, AlgebraElement, ComplexFunction, Monomial, MonomialAlgebra,
};
use thermoform::renewal::{phase_transition_report, tower_pressure, RenewalModel};
use thermoform::symbolic::{alpha_power, CylinderFunction, CylinderMeasure, Point, ShiftModel, Word};
use thermoform::transfer::{quasi_basis, rpf_solve, uniform_weight, ConditionalExpectation, RpfOptions, TransferOperator};

const RPF_EIGENVALUE_TOL: f64 = 1e-10;
const RPF_MAX_ITER: usize = 500;
const PRESSURE_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-12;
const BRIDGE_TOL: f64 = 1e-13;
const KMS_TOL: f64 = 1e-8;
const MONOMIAL_TOL: f64 = 1e-9;
const HAND_VALUE_TOL: f64 = 1e-12;
const REPRESENTATION_TOL: f64 = 1e-13;
const SLACK_TOL: f64 = 1e-10;
const GROUND_SUP_TOL: f64 = 1e-9;
const SLOPE_REL_TOL: f64 = 0.05;
const MASS_TOL: f64 = 1e-8;
const ROOT_PRESSURE_TOL: f64 = 1e-6;
const DERIVATIVE_REL_TOL: f64 = 0.02;
const ORACLE_TOL: f64 = 1e-6;

const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;
const APERY: f64 = 1.202_056_903_159_594_3;
const NU_M0: f64 = 0.831_907_372_6;

/// Collects named comparisons; the first failures are reported in the detail line.
#[derive(Default)]
struct Gate {
    checks: usize,
    failures: Vec<String>,
}

impl Gate {
    fn le(&mut self, what: &str, defect: f64, tol: f64) {
        self.checks += 1;
        if !(defect <= tol) {
            self.failures.push(format!("{what}: {defect:.3e} > {tol:.0e}"));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn finish(self, summary: String) -> Result<String, String> {
        if self.failures.is_empty() {
            Ok(format!("{} checks; {summary}", self.checks))
        } else {
            let shown: Vec<&str> = self.failures.iter().take(3).map(String::as_str).collect();
            Err(format!("{} of {} checks failed; {}", self.failures.len(), self.checks, shown.join("; ")))
        }
    }
}

fn full2() -> Arc<ShiftModel> {
    Arc::new(ShiftModel::full_shift(2).unwrap())
}

fn golden() -> Arc<ShiftModel> {
    Arc::new(ShiftModel::golden_mean())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_fn(model: &Arc<ShiftModel>, depth: usize, r: &mut impl Rng) -> CylinderFunction {
    CylinderFunction::from_fn(model.clone(), depth, |_| r.random_range(-1.0..1.0)).unwrap()
}

fn random_positive(model: &Arc<ShiftModel>, depth: usize, r: &mut impl Rng) -> CylinderFunction {
    CylinderFunction::from_fn(model.clone(), depth, |_| r.random_range(0.2..2.0)).unwrap()
}

/// Positive weights summing to one over each preimage set `{a x : a}`.
fn random_normalized(model: &Arc<ShiftModel>, r: &mut impl Rng) -> CylinderFunction {
    let raw = random_positive(model, 2, r);
    let mut totals = vec![0.0; model.word_count(1)];
    model.for_each_word(2, |i, w| totals[model.rank(&w[1..])] += raw.values()[i]);
    let mut values = Vec::new();
    model.for_each_word(2, |i, w| values.push(raw.values()[i] / totals[model.rank(&w[1..])]));
    CylinderFunction::new(model.clone(), 2, values).unwrap()
}

fn h23() -> CylinderFunction {
    CylinderFunction::new(full2(), 1, vec![2.0, 3.0]).unwrap()
}

fn half() -> CylinderFunction {
    CylinderFunction::constant(full2(), 0.5)
}

fn diff(a: &CylinderFunction, b: &CylinderFunction) -> f64 {
    let d = a.depth().max(b.depth());
    a.refine(d).unwrap().max_abs_diff(&b.refine(d).unwrap())
}

fn complex_diff(a: &ComplexFunction, b: &ComplexFunction) -> f64 {
    let d = a.depth().max(b.depth());
    let (a, b) = (a.refine(d).unwrap(), b.refine(d).unwrap());
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Product measure with `P(0) = p0` on the full 2-shift.
fn bernoulli(p0: f64, depth: usize) -> CylinderMeasure {
    let model = full2();
    let mut masses = Vec::new();
    model.for_each_word(depth, |_, w| {
        masses.push(w.iter().map(|&a| if a == 0 { p0 } else { 1.0 - p0 }).product());
    });
    CylinderMeasure::new(model, depth, masses).unwrap()
}

/// `Σ_{a : ax admissible} w(ax) f(ax)` on each word of length `depth`.
fn brute_transfer(w: &CylinderFunction, f: &CylinderFunction, depth: usize) -> CylinderFunction {
    let model = w.shared_model().clone();
    CylinderFunction::from_fn(model.clone(), depth, |x| {
        (0..model.alphabet_size())
            .map(|a| {
                let mut ax = vec![a];
                ax.extend_from_slice(x);
                if model.is_admissible(&ax) {
                    w.eval(&ax) * f.eval(&ax)
                } else {
                    0.0
                }
            })
            .sum()
    })
    .unwrap()
}

fn rpf_solver() -> Result<String, String> {
    let mut g = Gate::default();
    let op = TransferOperator::new(CylinderFunction::constant(golden(), 1.0)).unwrap();
    let sol = rpf_solve(&op, RpfOptions { max_iter: RPF_MAX_ITER, ..RpfOptions::default() }).map_err(|e| e.to_string())?;
    let golden_err = (sol.eigenvalue - GOLDEN_RATIO).abs();
    g.le("golden-mean eigenvalue", golden_err, RPF_EIGENVALUE_TOL);
    g.holds("golden-mean iterations", sol.iterations <= RPF_MAX_ITER);
    let mut worst: f64 = 0.0;
    for beta in [0.0, 0.5, 1.0, 2.0] {
        let spec = GaugeSpec::new(CylinderFunction::constant(full2(), 2.0), half(), beta).unwrap();
        let op = TransferOperator::new(spec.boltzmann_weight()).unwrap();
        let p = rpf_solve(&op, RpfOptions::default()).map_err(|e| e.to_string())?.pressure();
        let err = (p - (1.0 - beta) * 2f64.ln()).abs();
        worst = worst.max(err);
        g.le(&format!("pressure at beta {beta}"), err, PRESSURE_TOL);
    }
    g.finish(format!(
        "golden error {golden_err:.1e} in {} iterations, pressure error {worst:.1e}",
        sol.iterations
    ))
}

fn operator_identities() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    let mut le = |g: &mut Gate, what: &str, d: f64| {
        worst = worst.max(d);
        g.le(what, d, IDENTITY_TOL);
    };
    for (name, model) in [("full shift", full2()), ("golden mean", golden())] {
        for seed in 0..4u64 {
            let mut r = rng(100 + seed);
            let p = if seed == 0 { uniform_weight(model.clone()) } else { random_normalized(&model, &mut r) };
            let f = random_fn(&model, 5, &mut r);
            let h = random_fn(&model, 5, &mut r);
            let lp = TransferOperator::new(p.clone()).unwrap();

            let lf = lp.apply(&f).unwrap();
            le(&mut g, &format!("{name}: L_p against direct sum"), diff(&lf, &brute_transfer(&p, &f, 5)));
            let lhs = lp.apply(&f.try_mul(&alpha_power(&h, 1).unwrap()).unwrap()).unwrap();
            le(&mut g, &format!("{name}: L_p(f alpha(g)) = L_p(f) g"), diff(&lhs, &lf.try_mul(&h).unwrap()));

            let e = ConditionalExpectation::new(p.clone()).unwrap();
            for n in 1..=3 {
                let en = e.apply(n, &f).unwrap();
                le(&mut g, &format!("{name}: E_{n} idempotent"), diff(&e.apply(n, &en).unwrap(), &en));
                let outer = e.apply(n + 1, &en).unwrap();
                le(&mut g, &format!("{name}: E_{} E_{n} = E_{}", n + 1, n + 1), diff(&outer, &e.apply(n + 1, &f).unwrap()));
            }

            let qb = quasi_basis(&p).unwrap();
            let mut sum = CylinderFunction::zero(model.clone());
            let mut squares = CylinderFunction::zero(model.clone());
            for u in &qb.elements {
                let inner = e.apply(1, &u.try_mul(&f).unwrap()).unwrap();
                sum = sum.try_add(&u.try_mul(&inner).unwrap()).unwrap();
                squares = squares.try_add(&u.try_mul(u).unwrap()).unwrap();
            }
            le(&mut g, &format!("{name}: quasi-basis reconstruction"), diff(&sum, &f));
            let inverse = p.map(|v: f64| 1.0 / v);
            le(&mut g, &format!("{name}: index = 1/p"), diff(&qb.index, &inverse));
            le(&mut g, &format!("{name}: index = sum of squares"), diff(&squares, &inverse));
        }
    }
    g.finish(format!("worst defect {worst:.1e}"))
}

fn bridge_identity() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    for (name, model) in [("full shift", full2()), ("golden mean", golden())] {
        for (k, beta) in [0.5, 1.0, 2.0].into_iter().enumerate() {
            let mut r = rng(200 + k as u64);
            let h = random_positive(&model, 2, &mut r);
            let p = random_normalized(&model, &mut r);
            let spec = GaugeSpec::new(h.clone(), p.clone(), beta).unwrap();
            let f = random_fn(&model, 5, &mut r);
            let gibbs = TransferOperator::new(spec.boltzmann_weight()).unwrap();
            let p_op = TransferOperator::new(p.clone()).unwrap();
            for n in 1..=4 {
                let lambda = lambda_cocycle(&spec, n).unwrap();
                let direct = CylinderFunction::from_fn(model.clone(), n + 1, |w| {
                    (0..n).map(|i| h.eval(&w[i..]).powf(-beta) / p.eval(&w[i..])).product()
                })
                .unwrap();
                let scale = direct.sup_norm().max(1.0);
                g.le(&format!("{name}: cocycle n={n}"), diff(&lambda, &direct) / scale, BRIDGE_TOL);

                let lhs = gibbs.apply_n(&f, n).unwrap();
                let rhs = p_op.apply_n(&lambda.try_mul(&f).unwrap(), n).unwrap();
                let d = diff(&lhs, &rhs) / lhs.sup_norm().max(1.0);
                worst = worst.max(d);
                g.le(&format!("{name}: beta {beta} n={n}"), d, BRIDGE_TOL);
            }
        }
    }
    g.finish(format!("worst relative defect {worst:.1e}"))
}

fn kms_probe_criterion() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    for beta in [1.0, 0.5, 2.0] {
        let spec = GaugeSpec::new(h23(), half(), beta).unwrap();
        let probe = kms_probe(&spec, KmsOptions::default(), 5, 17).map_err(|e| e.to_string())?;
        g.holds(&format!("beta {beta}: five starts"), probe.results.len() == 5);
        g.le(&format!("beta {beta}: pairwise distance"), probe.max_pairwise_tv, KMS_TOL);
        let w0 = 2f64.powf(-beta);
        let w1 = 3f64.powf(-beta);
        let product = bernoulli(w0 / (w0 + w1), probe.results[0].marginal_depth);
        let reference = if beta == 1.0 {
            let gibbs = gibbs_state(&spec, product.depth()).unwrap();
            g.le("beta 1: gibbs state is Bernoulli(3/5, 2/5)", gibbs.total_variation(&bernoulli(0.6, product.depth())).unwrap(), KMS_TOL);
            gibbs
        } else {
            let op = TransferOperator::new(spec.boltzmann_weight()).unwrap();
            let sol = rpf_solve(&op, RpfOptions { depth: Some(product.depth()), ..RpfOptions::default() }).unwrap();
            g.le(&format!("beta {beta}: dual eigenvector is a product"), sol.eigenmeasure.total_variation(&product).unwrap(), KMS_TOL);
            sol.eigenmeasure
        };
        for (i, res) in probe.results.iter().enumerate() {
            let d = res.marginal().total_variation(&reference).unwrap();
            worst = worst.max(d);
            g.le(&format!("beta {beta}: start {i} against reference"), d, KMS_TOL);
        }
    }
    g.finish(format!("worst distance {worst:.1e}"))
}

fn random_pairs(model: &Arc<ShiftModel>, count: usize, seed: u64) -> Vec<(AlgebraElement, AlgebraElement)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let (lx, ly) = (r.random_range(0..=3), r.random_range(0..=3));
            let x = random_monomial(model.clone(), lx, 2, &mut r).unwrap();
            let y = random_monomial(model.clone(), ly, 2, &mut r).unwrap();
            (x.into(), y.into())
        })
        .collect()
}

fn monomial_kms() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    let mut r = rng(300);
    let cases = [
        ("full shift", GaugeSpec::new(h23(), half(), 1.0).unwrap()),
        (
            "golden mean",
            GaugeSpec::new(random_positive(&golden(), 2, &mut r), random_normalized(&golden(), &mut r), 0.7).unwrap(),
        ),
    ];
    for (k, (name, spec)) in cases.iter().enumerate() {
        let alg = MonomialAlgebra::from_spec(spec);
        let pairs = random_pairs(spec.shared_model(), 200, 310 + k as u64);
        let shift = Complex64::new(0.0, spec.beta());
        let mut depth = 1;
        for (x, y) in &pairs {
            let sy = gauge(spec, y, shift).unwrap();
            depth = depth.max(alg.g_depth(&alg.multiply(x, &sy).unwrap()));
            depth = depth.max(alg.g_depth(&alg.multiply(y, x).unwrap()));
        }
        let nu = gibbs_state(spec, depth).unwrap();
        let mut case_worst: f64 = 0.0;
        for (x, y) in &pairs {
            case_worst = case_worst.max(kms_equality_defect(&alg, spec, &nu, x, y).unwrap());
        }
        worst = worst.max(case_worst);
        g.le(&format!("{name}: 200 pairs"), case_worst, MONOMIAL_TOL);
    }
    let spec = &cases[0].1;
    let alg = MonomialAlgebra::from_spec(spec);
    let e1: AlgebraElement = Monomial::projection(full2(), 1).into();
    let rotated = gauge(spec, &e1, Complex64::new(0.0, 1.0)).unwrap();
    let nu = gibbs_state(spec, 3).unwrap();
    let value = alg.state_eval(&nu, &alg.multiply(&e1, &rotated).unwrap()).unwrap();
    let hand = (value - Complex64::new(0.5, 0.0)).norm();
    g.le("hand value 1/2", hand, HAND_VALUE_TOL);
    g.finish(format!("worst pair defect {worst:.1e}, hand value error {hand:.1e}"))
}

fn random_element(model: &Arc<ShiftModel>, r: &mut impl Rng) -> AlgebraElement {
    AlgebraElement::new(
        (0..2)
            .map(|_| {
                let level = r.random_range(0..=3);
                random_monomial(model.clone(), level, 3, r).unwrap()
            })
            .collect(),
    )
}

fn matrix_norm(m: &nalgebra::DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

fn representation() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    for (name, model) in [("full shift", full2()), ("golden mean", golden())] {
        for seed in 0..10u64 {
            let mut r = rng(400 + seed);
            let p = if seed % 2 == 0 { uniform_weight(model.clone()) } else { random_normalized(&model, &mut r) };
            let alg = MonomialAlgebra::new(p).unwrap();
            let (x, y) = (random_element(&model, &mut r), random_element(&model, &mut r));
            let xy = alg.multiply(&x, &y).unwrap();
            let d = [&x, &y, &xy].iter().map(|e| alg.min_represent_depth(e)).max().unwrap().max(1);
            let (rx, ry, rxy) = (alg.represent(&x, d).unwrap(), alg.represent(&y, d).unwrap(), alg.represent(&xy, d).unwrap());
            let scale = matrix_norm(&rx) * matrix_norm(&ry);
            let err = (&rx * &ry - &rxy).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
            worst = worst.max(err);
            g.le(&format!("{name} seed {seed}: product"), err, REPRESENTATION_TOL);

            let f = ComplexFunction::from_fn(model.clone(), d, |_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).unwrap();
            let mut action = ComplexFunction::zero(model.clone());
            for t in x.terms() {
                let inner = alg.expectation().apply(t.level, &t.right.try_mul(&f).unwrap()).unwrap();
                action = action.try_add(&t.left.try_mul(&inner).unwrap()).unwrap();
            }
            let image = ComplexFunction::new(model.clone(), d, (&rx * DVector::from_vec(f.values().to_vec())).as_slice().to_vec()).unwrap();
            let err = complex_diff(&image, &action) / matrix_norm(&rx);
            worst = worst.max(err);
            g.le(&format!("{name} seed {seed}: action"), err, REPRESENTATION_TOL);

            let level = r.random_range(0..=2);
            let mono = random_monomial(model.clone(), level, 2, &mut r).unwrap();
            let target = level + r.random_range(1..=2);
            let reduced = alg.reduce_level(&mono, target).unwrap();
            g.holds(&format!("{name} seed {seed}: reduced level"), reduced.terms().iter().all(|t| t.level == target));
            let mono: AlgebraElement = mono.into();
            let d = alg.min_represent_depth(&mono).max(alg.min_represent_depth(&reduced)).max(1);
            let (a, b) = (alg.represent(&mono, d).unwrap(), alg.represent(&reduced, d).unwrap());
            let err = (&a - &b).iter().map(|z| z.norm()).fold(0.0, f64::max) / matrix_norm(&a);
            worst = worst.max(err);
            g.le(&format!("{name} seed {seed}: reduce_level"), err, REPRESENTATION_TOL);
        }
    }
    g.finish(format!("worst relative defect {worst:.1e}"))
}

/// Largest mean of `f` over periodic words of length at most `max_len`.
fn brute_max_mean(f: &CylinderFunction, max_len: usize) -> f64 {
    let model = f.model();
    let d = f.depth();
    let mut best = f64::NEG_INFINITY;
    for len in 1..=max_len {
        for w in model.words(len) {
            let s = w.symbols();
            if !model.allows(s[len - 1], s[0]) {
                continue;
            }
            let sum: f64 = (0..len)
                .map(|r| {
                    let window: Vec<usize> = (0..d).map(|i| s[(r + i) % len]).collect();
                    f.eval(&window)
                })
                .sum();
            best = best.max(sum / len as f64);
        }
    }
    best
}

/// `V(Tw) − V(w) − (f(w) − m)` on every admissible word long enough for `f` and `V∘T`.
fn slacks(f: &CylinderFunction, v: &CylinderFunction, m: f64) -> Vec<(Vec<usize>, f64)> {
    let len = f.depth().max(v.depth() + 1);
    let mut out = Vec::new();
    f.model().for_each_word(len, |_, w| {
        out.push((w.to_vec(), v.eval(&w[1..]) - v.eval(w) - (f.eval(w) - m)));
    });
    out
}

fn ergodic_optimization() -> Result<String, String> {
    let mut g = Gate::default();
    let mut worst: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for (name, model) in [("full shift", full2()), ("golden mean", golden())] {
        for seed in 0..20u64 {
            let mut r = rng(500 + seed);
            let h = random_positive(&model, 2, &mut r);
            let f = h.map(|v: f64| -v.ln());
            let opt = m_value(&h).map_err(|e| e.to_string())?;
            let err = (opt.m - brute_max_mean(&f, 12)).abs();
            worst = worst.max(err);
            g.le(&format!("{name} seed {seed}: m against enumeration"), err, 1e-12);

            let v = subaction(&h, SubactionOptions::default()).map_err(|e| e.to_string())?;
            let table = slacks(&f, &v, opt.m);
            let least = table.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
            min_slack = min_slack.min(least);
            g.le(&format!("{name} seed {seed}: slack"), -least, SLACK_TOL);
            let period = opt.witness.symbols();
            let len = table[0].0.len();
            for r in 0..period.len() {
                let window: Vec<usize> = (0..len).map(|i| period[(r + i) % period.len()]).collect();
                let slack = table.iter().find(|(w, _)| *w == window).map(|(_, s)| *s).unwrap_or(f64::NAN);
                g.le(&format!("{name} seed {seed}: equality on the witness"), slack.abs(), SLACK_TOL);
            }
        }
    }
    let f = CylinderFunction::new(full2(), 2, vec![0.0, -2.0, 1.0, -3.0]).unwrap();
    let h = f.map(|v: f64| (-v).exp());
    let opt = m_value(&h).map_err(|e| e.to_string())?;
    g.le("worked example m = 0", opt.m.abs(), SLACK_TOL);
    let v = subaction(&h, SubactionOptions::default()).map_err(|e| e.to_string())?;
    let v_err = (v.eval(&[0]) - 1.0).abs().max((v.eval(&[1]) + 1.0).abs());
    g.le("worked example V = (1, -1)", v_err, SLACK_TOL);
    g.finish(format!("enumeration gap {worst:.1e}, least slack {min_slack:.1e}"))
}

fn ground_dichotomy() -> Result<String, String> {
    let mut g = Gate::default();
    let model = full2();
    let betas: Vec<f64> = (0..=10).map(|i| 5.0 * i as f64).collect();
    let dirac = |prefix: &[usize]| {
        let x = Point::new(&model, Word::from(prefix), Word::from(&[0][..])).unwrap();
        CylinderMeasure::dirac(model.clone(), &x, 4).unwrap()
    };

    let bounded = ground_support_test(&half(), &h23(), &dirac(&[]), 1, &betas).map_err(|e| e.to_string())?;
    g.holds("fixed point 0 is BOUNDED", bounded.class == GroundClass::Bounded);
    g.le("sup of I", bounded.sup - 1.0, GROUND_SUP_TOL);
    for (b, v) in betas.iter().zip(&bounded.values) {
        g.le(&format!("I({b}) at 0"), (v - 0.5 - 0.5 * (2.0f64 / 3.0).powf(*b)).abs(), 1e-12);
    }

    let unbounded = ground_support_test(&half(), &h23(), &dirac(&[1]), 1, &betas).map_err(|e| e.to_string())?;
    g.holds("point 10 is UNBOUNDED", unbounded.class == GroundClass::Unbounded);
    let slope_err = (unbounded.slope / 1.5f64.ln() - 1.0).abs();
    g.le("slope against log 3/2", slope_err, SLOPE_REL_TOL);
    for (b, v) in betas.iter().zip(&unbounded.values) {
        let exact = 0.5 + 0.5 * 1.5f64.powf(*b);
        g.le(&format!("I({b}) at 10"), (v - exact).abs() / exact, 1e-12);
    }

    let mut r = rng(600);
    for (name, h) in [("full shift", h23()), ("golden mean", random_positive(&golden(), 2, &mut r))] {
        for n in 1..=4 {
            let outer = conditional_minima(&h, n).map_err(|e| e.to_string())?;
            let inner = conditional_minima(&h, n + 1).map_err(|e| e.to_string())?;
            g.holds(
                &format!("{name}: M_{} inside M_{n}", n + 1),
                inner.members.iter().all(|w| outer.contains_prefix(w.symbols())),
            );
        }
    }
    for n in 1..=5 {
        let set = conditional_minima(&h23(), n).map_err(|e| e.to_string())?;
        g.holds(&format!("M_{n} for H = (2, 3) is the zero word"), set.members == vec![Word::new(vec![0; n])]);
    }
    g.finish(format!("sup {:.12}, slope {:.6}", bounded.sup, unbounded.slope))
}

fn fisher_felderhof() -> Result<String, String> {
    let mut g = Gate::default();
    let model = RenewalModel::new(3.0, 100_000).map_err(|e| e.to_string())?;
    let masses = model.eigenmeasure_masses();
    g.le("nu(M_0) against the tabulated value", (masses[0] - NU_M0).abs(), MASS_TOL);
    g.le("nu(M_0) = 1/zeta(3)", (masses[0] - 1.0 / APERY).abs(), 1e-14);
    let missing = 1.0 - masses.iter().sum::<f64>();
    g.holds("missing mass within the tail bound", missing >= -1e-12 && missing <= model.mass_tail_bound() + 1e-12);

    let p1 = model.pressure(1.0).map_err(|e| e.to_string())?.pressure;
    g.le("P(1)", p1, ROOT_PRESSURE_TOL);
    let p12 = model.pressure(1.2).map_err(|e| e.to_string())?.pressure;
    g.holds("P(1.2) = 0", p12 == 0.0);
    let curve: Vec<f64> = [0.5, 0.6, 0.7, 0.8, 0.9]
        .iter()
        .map(|&b| model.pressure(b).map(|p| p.pressure))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    g.holds("P strictly decreasing on 0.5..0.9", curve.windows(2).all(|w| w[1] < w[0]));

    let pt = phase_transition_report(&model).map_err(|e| e.to_string())?;
    g.holds("derivative jump at 1 is nonzero", pt.jump.abs() > 1e-3 && !pt.truncation_dominated);
    let rel = ((pt.left_derivative - pt.mean_g_mu_tilde) / pt.mean_g_mu_tilde).abs();
    g.le("left derivative against the mean of g", rel, DERIVATIVE_REL_TOL);

    let mut worst: f64 = 0.0;
    for beta in [0.5, 0.8, 0.9, 1.0, 1.2] {
        let root = model.pressure(beta).map_err(|e| e.to_string())?.pressure;
        let tower = tower_pressure(&model, beta, 1e-12, 500).map_err(|e| e.to_string())?.pressure;
        worst = worst.max((root - tower).abs());
        g.le(&format!("root against tower at beta {beta}"), (root - tower).abs(), ORACLE_TOL);
    }
    g.finish(format!(
        "nu(M_0) {:.10}, P(1) {p1:.1e}, jump {:.4}, left derivative {:.4} vs {:.4}, oracle gap {worst:.1e}",
        masses[0], pt.jump, pt.left_derivative, pt.mean_g_mu_tilde
    ))
}

fn verify_all_report(threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(["verify-all", "--seed", "11", "--threads", threads])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Result<String, String> {
    let mut g = Gate::default();
    let first = verify_all_report("2")?;
    let second = verify_all_report("2")?;
    g.holds("two runs are byte-identical", first == second);
    let single = verify_all_report("1")?;
    g.holds("thread count does not change the report", first == single);
    g.holds("report is nonempty", !first.is_empty());
    g.finish(format!("{} bytes", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 10] = [
        ("rpf-solver", rpf_solver),
        ("operator-identities", operator_identities),
        ("bridge-identity", bridge_identity),
        ("kms-probe", kms_probe_criterion),
        ("monomial-kms", monomial_kms),
        ("representation", representation),
        ("ergodic-optimization", ergodic_optimization),
        ("ground-dichotomy", ground_dichotomy),
        ("fisher-felderhof", fisher_felderhof),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! One function per subcommand, each turning a validated configuration into a report.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thermoform::ergopt::{
    cohomologous_tilt, conditional_minima, ground_support_test, m_value, subaction_for, GroundClass,
    SubactionOptions,
};
use thermoform::kms::{gibbs_state, kms_check, kms_probe, GaugeSpec, KmsOptions};
use thermoform::monomial::{gauge, kms_equality_defect, random_monomial, AlgebraElement, Monomial, MonomialAlgebra};
use thermoform::renewal::{phase_transition_report, tower_pressure, PhaseTransition, RenewalModel};
use thermoform::symbolic::{CylinderFunction, CylinderMeasure, ShiftModel, Word};
use thermoform::transfer::{rpf_solve, ConditionalExpectation, RpfOptions, TransferOperator};

use crate::config::{measure, Depth, RunConfig};
use crate::error::CliError;
use crate::output::{num, Report, Table};

/// The model and potentials shared by most tasks.
pub struct Setup {
    pub model: Arc<ShiftModel>,
    pub h: CylinderFunction,
    pub p: CylinderFunction,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self, CliError> {
        let model = config.shift_model()?;
        let h = config.h(&model)?;
        let p = config.p(&model)?;
        Ok(Setup { model, h, p })
    }

    pub fn spec(&self, beta: f64) -> Result<GaugeSpec, CliError> {
        GaugeSpec::new(self.h.clone(), self.p.clone(), beta).map_err(|e| CliError::engine("potential", e))
    }
}

pub fn table_of(f: &CylinderFunction) -> BTreeMap<String, f64> {
    f.model()
        .words(f.depth())
        .into_iter()
        .zip(f.values())
        .map(|(w, &v)| (w.to_string(), v))
        .collect()
}

pub fn masses_of(mu: &CylinderMeasure) -> BTreeMap<String, f64> {
    mu.model()
        .words(mu.depth())
        .into_iter()
        .zip(mu.masses())
        .map(|(w, &v)| (w.to_string(), v))
        .collect()
}

#[derive(Serialize)]
struct RpfReport {
    eigenvalue: f64,
    pressure: f64,
    depth: usize,
    iterations: usize,
    eigenfunction_residual: f64,
    eigenmeasure_residual: f64,
    primitive: bool,
    eigenfunction: BTreeMap<String, f64>,
    eigenmeasure: BTreeMap<String, f64>,
}

pub fn rpf(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let weight = match config.weight(&s.model)? {
        Some(w) => w,
        None => s.h.powf(-config.potential.beta),
    };
    let op = TransferOperator::new(weight).map_err(|e| CliError::engine("potential.weight", e))?;
    let options = RpfOptions {
        depth: match config.numeric.depth {
            Depth::Auto => None,
            Depth::Fixed(d) => Some(d),
        },
        tol: config.numeric.tol,
        max_iter: config.numeric.max_iter,
    };
    let sol = rpf_solve(&op, options).map_err(|e| CliError::engine("numeric.depth", e))?;
    let depth = sol.eigenmeasure.depth();
    let k = sol
        .eigenfunction
        .refine(depth)
        .map_err(|e| CliError::engine("numeric.depth", e))?;
    let mut table = Table::new(&["word", "eigenfunction", "eigenmeasure"]);
    for ((w, kv), mv) in s.model.words(depth).iter().zip(k.values()).zip(sol.eigenmeasure.masses()) {
        table.push(vec![w.to_string(), num(*kv), num(*mv)]);
    }
    let report = RpfReport {
        eigenvalue: sol.eigenvalue,
        pressure: sol.pressure(),
        depth,
        iterations: sol.iterations,
        eigenfunction_residual: sol.eigenfunction_residual,
        eigenmeasure_residual: sol.eigenmeasure_residual,
        primitive: sol.primitive,
        eigenfunction: table_of(&k),
        eigenmeasure: masses_of(&sol.eigenmeasure),
    };
    Ok(Report::new(report, Some(table)))
}

#[derive(Serialize)]
struct KmsPoint {
    beta: f64,
    working_depth: usize,
    marginal_depth: usize,
    passes: Vec<usize>,
    max_residual: f64,
    max_pairwise_tv: f64,
    max_tv_to_gibbs: f64,
    gibbs_condition_defect: f64,
    gibbs_bridge_defect: f64,
    gibbs: BTreeMap<String, f64>,
    #[serde(skip)]
    marginals: Vec<CylinderMeasure>,
    #[serde(skip)]
    gibbs_measure: Option<CylinderMeasure>,
}

/// Multi-start KMS iteration at one inverse temperature, compared with the Gibbs state.
fn kms_point(config: &RunConfig, s: &Setup, beta: f64) -> Result<KmsPoint, CliError> {
    let spec = s.spec(beta)?;
    let options = KmsOptions {
        levels: config.numeric.levels,
        tol: config.numeric.tol,
        max_passes: config.numeric.max_iter,
    };
    s.model
        .check_depth(spec.working_depth(options.levels))
        .map_err(|e| CliError::validation("numeric.levels", e.to_string()))?;
    let probe = kms_probe(&spec, options, config.numeric.starts, config.numeric.seed)
        .map_err(|e| CliError::engine("numeric.levels", e))?;
    let marginal_depth = probe.results[0].marginal_depth;
    let gibbs = gibbs_state(&spec, marginal_depth).map_err(|e| CliError::engine("potential", e))?;
    let marginals: Vec<CylinderMeasure> = probe.results.iter().map(|r| r.marginal()).collect();
    let mut max_tv = 0.0f64;
    for m in &marginals {
        max_tv = max_tv.max(m.total_variation(&gibbs).map_err(|e| CliError::engine("potential", e))?);
    }
    let check_levels = options.levels.min(4);
    let deep = gibbs_state(&spec, spec.base_depth() + check_levels).map_err(|e| CliError::engine("potential", e))?;
    let check = kms_check(&spec, &deep, check_levels).map_err(|e| CliError::engine("potential", e))?;
    Ok(KmsPoint {
        beta,
        working_depth: spec.working_depth(options.levels),
        marginal_depth,
        passes: probe.results.iter().map(|r| r.iterations).collect(),
        max_residual: probe.results.iter().map(|r| r.residual).fold(0.0, f64::max),
        max_pairwise_tv: probe.max_pairwise_tv,
        max_tv_to_gibbs: max_tv,
        gibbs_condition_defect: check.max_condition_defect(),
        gibbs_bridge_defect: check.max_bridge_defect(),
        gibbs: masses_of(&gibbs),
        marginals,
        gibbs_measure: Some(gibbs),
    })
}

pub fn kms(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let betas = config.kms.betas.clone().unwrap_or_else(|| vec![config.potential.beta]);
    let points = betas
        .par_iter()
        .map(|&b| kms_point(config, &s, b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new(&["beta", "word", "gibbs", "probe_min", "probe_max"]);
    for pt in &points {
        let gibbs = pt.gibbs_measure.as_ref().expect("set by kms_point");
        for (i, w) in s.model.words(pt.marginal_depth).iter().enumerate() {
            let values = pt.marginals.iter().map(|m| m.masses()[i]);
            let lo = values.clone().fold(f64::INFINITY, f64::min);
            let hi = values.fold(f64::NEG_INFINITY, f64::max);
            table.push(vec![num(pt.beta), w.to_string(), num(gibbs.masses()[i]), num(lo), num(hi)]);
        }
    }
    #[derive(Serialize)]
    struct KmsReport {
        starts: usize,
        levels: usize,
        points: Vec<KmsPoint>,
    }
    let report = KmsReport {
        starts: config.numeric.starts,
        levels: config.numeric.levels,
        points,
    };
    Ok(Report::new(report, Some(table)))
}

/// A seeded random element pair of levels at most `max_level`.
pub fn random_pairs(
    model: &Arc<ShiftModel>,
    count: usize,
    max_level: usize,
    coefficient_depth: usize,
    seed: u64,
) -> Result<Vec<(Monomial, Monomial)>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (lx, ly) = (rng.random_range(0..=max_level), rng.random_range(0..=max_level));
            let x = random_monomial(model.clone(), lx, coefficient_depth, &mut rng);
            let y = random_monomial(model.clone(), ly, coefficient_depth, &mut rng);
            match (x, y) {
                (Ok(x), Ok(y)) => Ok((x, y)),
                (Err(e), _) | (_, Err(e)) => Err(CliError::engine("monomial.coefficient_depth", e)),
            }
        })
        .collect()
}

/// Depth of a state that evaluates both sides of the KMS equality for every pair.
pub fn kms_state_depth(
    alg: &MonomialAlgebra,
    spec: &GaugeSpec,
    pairs: &[(Monomial, Monomial)],
) -> Result<usize, CliError> {
    let beta = Complex64::new(0.0, spec.beta());
    let mut depth = 1;
    for (x, y) in pairs {
        let (x, y): (AlgebraElement, AlgebraElement) = (x.clone().into(), y.clone().into());
        let sy = gauge(spec, &y, beta).map_err(|e| CliError::engine("potential", e))?;
        let lhs = alg.multiply(&x, &sy).map_err(|e| CliError::engine("monomial", e))?;
        let rhs = alg.multiply(&y, &x).map_err(|e| CliError::engine("monomial", e))?;
        depth = depth.max(alg.g_depth(&lhs)).max(alg.g_depth(&rhs));
    }
    Ok(depth)
}

/// `|ψ(x σ_{iβ}(y)) − ψ(yx)|` with `ψ = φ ∘ G`, for each pair in order.
pub fn kms_defects(
    alg: &MonomialAlgebra,
    spec: &GaugeSpec,
    phi: &CylinderMeasure,
    pairs: &[(Monomial, Monomial)],
) -> Result<Vec<f64>, CliError> {
    pairs
        .par_iter()
        .map(|(x, y)| {
            kms_equality_defect(alg, spec, phi, &x.clone().into(), &y.clone().into())
                .map_err(|e| CliError::engine("monomial", e))
        })
        .collect()
}

/// `ψ(e_1 σ_{iβ}(e_1))` for the Gibbs state.
pub fn projection_pairing(alg: &MonomialAlgebra, spec: &GaugeSpec, phi: &CylinderMeasure) -> Result<f64, CliError> {
    let e1: AlgebraElement = Monomial::projection(spec.shared_model().clone(), 1).into();
    let rotated = gauge(spec, &e1, Complex64::new(0.0, spec.beta())).map_err(|e| CliError::engine("potential", e))?;
    let product = alg.multiply(&e1, &rotated).map_err(|e| CliError::engine("monomial", e))?;
    let v = alg.state_eval(phi, &product).map_err(|e| CliError::engine("monomial", e))?;
    Ok(v.re)
}

pub fn monomial_check(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let spec = s.spec(config.potential.beta)?;
    let alg = MonomialAlgebra::from_spec(&spec);
    let mc = &config.monomial;
    let pairs = random_pairs(&s.model, mc.pairs, mc.max_level, mc.coefficient_depth, config.numeric.seed)?;
    let need = kms_state_depth(&alg, &spec, &pairs)?.max(spec.base_depth() + 1);
    let depth = match config.numeric.depth {
        Depth::Auto => need,
        Depth::Fixed(d) if d >= need => d,
        Depth::Fixed(d) => {
            return Err(CliError::validation(
                "numeric.depth",
                format!("depth {d} is too small for these pairs, need at least {need}"),
            ))
        }
    };
    let phi = gibbs_state(&spec, depth).map_err(|e| CliError::engine("potential", e))?;
    let defects = kms_defects(&alg, &spec, &phi, &pairs)?;
    let pairing = projection_pairing(&alg, &spec, &phi)?;
    let mut table = Table::new(&["pair", "level_x", "level_y", "defect"]);
    for (i, ((x, y), d)) in pairs.iter().zip(&defects).enumerate() {
        table.push(vec![i.to_string(), x.level.to_string(), y.level.to_string(), num(*d)]);
    }
    #[derive(Serialize)]
    struct MonomialReport {
        beta: f64,
        pairs: usize,
        max_level: usize,
        state_depth: usize,
        max_defect: f64,
        worst_pair: usize,
        projection_pairing: f64,
    }
    let (worst_pair, max_defect) = defects
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    let report = MonomialReport {
        beta: spec.beta(),
        pairs: pairs.len(),
        max_level: mc.max_level,
        state_depth: depth,
        max_defect,
        worst_pair,
        projection_pairing: pairing,
    };
    Ok(Report::new(report, Some(table)))
}

pub fn optimize(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let opt = m_value(&s.h).map_err(|e| CliError::engine("potential.h", e))?;
    #[derive(Serialize)]
    struct OptimizeReport {
        m: f64,
        karp_value: f64,
        witness: Word,
        ties: Vec<Word>,
        equality_set: Vec<Word>,
        min_slack: f64,
    }
    let tol = config.numeric.tol.max(1e-12);
    let report = OptimizeReport {
        m: opt.m,
        karp_value: opt.karp_value,
        witness: opt.witness.clone(),
        ties: opt.ties.clone(),
        equality_set: opt.equality_set(tol),
        min_slack: opt.certificate.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min),
    };
    let mut table = Table::new(&["edge", "slack"]);
    for e in &opt.certificate {
        table.push(vec![e.edge.to_string(), num(e.slack)]);
    }
    Ok(Report::new(report, Some(table)))
}

pub fn subaction(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let opt = m_value(&s.h).map_err(|e| CliError::engine("potential.h", e))?;
    let options = SubactionOptions {
        tol: config.numeric.tol,
        max_iter: config.numeric.max_iter,
        ..SubactionOptions::default()
    };
    let v = subaction_for(&s.h, opt.m, options).map_err(|e| CliError::engine("potential.h", e))?;
    let tilted = cohomologous_tilt(&s.h, &v).map_err(|e| CliError::engine("potential.h", e))?;
    let neg_log = -&tilted.ln();
    let len = s.h.depth().max(v.depth() + 1);
    let f = -&s.h.ln();
    let mut table = Table::new(&["word", "subaction", "neg_log_h", "neg_log_tilted", "slack"]);
    let mut min_slack = f64::INFINITY;
    s.model.for_each_word(len, |_, w| {
        let slack = v.eval(&w[1..]) - v.eval(w) - (f.eval(w) - opt.m);
        min_slack = min_slack.min(slack);
        table.push(vec![
            Word::from(w).to_string(),
            num(v.eval(w)),
            num(f.eval(w)),
            num(neg_log.eval(w)),
            num(slack),
        ]);
    });
    #[derive(Serialize)]
    struct SubactionReport {
        m: f64,
        witness: Word,
        subaction: BTreeMap<String, f64>,
        tilted_neg_log_h: BTreeMap<String, f64>,
        max_tilted: f64,
        min_slack: f64,
    }
    let report = SubactionReport {
        m: opt.m,
        witness: opt.witness,
        subaction: table_of(&v),
        tilted_neg_log_h: table_of(&neg_log),
        max_tilted: neg_log.max_value(),
        min_slack,
    };
    Ok(Report::new(report, Some(table)))
}

/// Depth at which [`ground_support_test`] reads the measure.
pub fn ground_depth(p: &CylinderFunction, h: &CylinderFunction, n: usize) -> Result<usize, CliError> {
    let e = ConditionalExpectation::new(p.clone()).map_err(|e| CliError::engine("potential.p", e))?;
    Ok(e.output_depth(n, h.depth() + n - 1).max(1))
}

pub fn ground(config: &RunConfig) -> Result<Report, CliError> {
    let s = Setup::new(config)?;
    let g = &config.ground;
    let depth = ground_depth(&s.p, &s.h, g.n)?;
    s.model
        .check_depth(depth)
        .map_err(|e| CliError::validation("ground.n", e.to_string()))?;
    let mu = measure(&s.model, &g.measure, "ground.measure", depth, |d| {
        gibbs_state(&s.spec(config.potential.beta)?, d).map_err(|e| CliError::engine("potential", e))
    })?;
    let r = ground_support_test(&s.p, &s.h, &mu, g.n, &g.betas).map_err(|e| CliError::engine("ground", e))?;
    let ms = conditional_minima(&s.h, g.n).map_err(|e| CliError::engine("potential.h", e))?;
    let mut table = Table::new(&["beta", "value"]);
    for (b, v) in r.betas.iter().zip(&r.values) {
        table.push(vec![num(*b), num(*v)]);
    }
    #[derive(Serialize)]
    struct GroundReport {
        n: usize,
        class: GroundClass,
        sup: f64,
        slope: f64,
        witness: Option<Word>,
        tail_len: usize,
        conditional_minima: Vec<Word>,
        betas: Vec<f64>,
        values: Vec<f64>,
    }
    let report = GroundReport {
        n: r.n,
        class: r.class,
        sup: r.sup,
        slope: r.slope,
        witness: r.witness,
        tail_len: ms.tail_len,
        conditional_minima: ms.members,
        betas: r.betas,
        values: r.values,
    };
    Ok(Report::new(report, Some(table)))
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub beta: f64,
    pub pressure: f64,
    pub root_residual: f64,
    pub iterations: usize,
    pub truncation_bound: f64,
    pub oracle_pressure: Option<f64>,
    pub oracle_difference: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenewalReport {
    pub gamma: f64,
    #[serde(rename = "K")]
    pub truncation: usize,
    pub zeta: f64,
    pub mass_m0: f64,
    pub mass_m1: f64,
    pub mass_sum: f64,
    pub mass_tail_bound: f64,
    pub curve: Vec<CurvePoint>,
    pub transition: PhaseTransition,
}

pub fn renewal_report(gamma: f64, truncation: usize, betas: &[f64], oracle: bool) -> Result<RenewalReport, CliError> {
    let model = RenewalModel::new(gamma, truncation).map_err(|e| CliError::engine("renewal", e))?;
    let curve = betas
        .par_iter()
        .map(|&beta| {
            let pt = model.pressure(beta).map_err(|e| CliError::engine("renewal.betas", e))?;
            let oracle_pressure = if oracle {
                Some(
                    tower_pressure(&model, beta, 1e-12, 500)
                        .map_err(|e| CliError::engine("renewal.oracle", e))?
                        .pressure,
                )
            } else {
                None
            };
            Ok(CurvePoint {
                beta,
                pressure: pt.pressure,
                root_residual: pt.root_residual,
                iterations: pt.iterations,
                truncation_bound: pt.truncation_bound,
                oracle_pressure,
                oracle_difference: oracle_pressure.map(|o| (o - pt.pressure).abs()),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let transition = phase_transition_report(&model).map_err(|e| CliError::engine("renewal", e))?;
    let masses = model.eigenmeasure_masses();
    Ok(RenewalReport {
        gamma,
        truncation,
        zeta: model.zeta(),
        mass_m0: masses[0],
        mass_m1: masses[1],
        mass_sum: masses.iter().rev().sum(),
        mass_tail_bound: model.mass_tail_bound(),
        curve,
        transition,
    })
}

pub fn renewal(config: &RunConfig) -> Result<Report, CliError> {
    let r = &config.renewal;
    let report = renewal_report(r.gamma, r.truncation, &r.betas, r.oracle)?;
    let mut table = Table::new(&["beta", "pressure", "root_residual"]);
    for pt in &report.curve {
        table.push(vec![num(pt.beta), num(pt.pressure), num(pt.root_residual)]);
    }
    Ok(Report::new(report, Some(table)))
}

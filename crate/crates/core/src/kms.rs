//! The Λ-cocycle, the operators `F_n`, the fixed-point iteration for KMS
//! states and the comparison with Gibbs states.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::symbolic::{birkhoff, CylinderFunction, CylinderMeasure, ShiftModel};
use crate::transfer::{rpf_solve, ConditionalExpectation, RpfOptions, RpfSolution, TransferOperator};

/// Gauge data: a strictly positive potential `H`, a normalized weight `p`
/// and an inverse temperature `β ≥ 0`.
#[derive(Debug, Clone)]
pub struct GaugeSpec {
    h: CylinderFunction,
    beta: f64,
    expectation: ConditionalExpectation,
}

impl GaugeSpec {
    pub fn new(h: CylinderFunction, p: CylinderFunction, beta: f64) -> Result<Self> {
        h.check_positive()?;
        h.check_model(p.model())?;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be finite and nonnegative, got {beta}")));
        }
        Ok(GaugeSpec {
            h,
            beta,
            expectation: ConditionalExpectation::new(p)?,
        })
    }

    pub fn h(&self) -> &CylinderFunction {
        &self.h
    }

    pub fn p(&self) -> &CylinderFunction {
        self.expectation.p()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The same potentials at another inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        GaugeSpec::new(self.h.clone(), self.p().clone(), beta)
    }

    pub fn model(&self) -> &ShiftModel {
        self.h.model()
    }

    pub fn shared_model(&self) -> &Arc<ShiftModel> {
        self.h.shared_model()
    }

    pub fn expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    /// `max(H.depth, p.depth, m)` with `m` the depth at which admissibility is read.
    pub fn base_depth(&self) -> usize {
        let m = if self.model().is_full() { 1 } else { 2 };
        self.h.depth().max(self.p().depth()).max(m)
    }

    /// Depth on which `F_1*, …, F_levels*` act exactly.
    pub fn working_depth(&self, levels: usize) -> usize {
        self.base_depth() + levels
    }

    /// `H^{-β}`, the weight of the Gibbs transfer operator.
    pub fn boltzmann_weight(&self) -> CylinderFunction {
        self.h.powf(-self.beta)
    }

    /// `H^{-β} p^{-1}`.
    pub fn lambda(&self) -> CylinderFunction {
        self.boltzmann_weight().try_mul(&self.p().recip()).expect("H and p share a model")
    }
}

/// `Λ^{[n]} = (H^{-β} p^{-1})^{[n]}`.
pub fn lambda_cocycle(spec: &GaugeSpec, n: usize) -> Result<CylinderFunction> {
    birkhoff(&spec.lambda(), n)
}

/// `F_n(f) = Λ^{-[n]} E_n(Λ^{[n]} f)`.
pub fn f_op(spec: &GaugeSpec, n: usize, f: &CylinderFunction) -> Result<CylinderFunction> {
    if n == 0 {
        return Ok(f.clone());
    }
    let lam = lambda_cocycle(spec, n)?;
    let inner = spec.expectation.apply(n, &lam.try_mul(f)?)?;
    lam.recip().try_mul(&inner)
}

/// Cylinder weights `w ↦ φ(F_n 1_{[w]})` at the depth of `φ`; their total is `φ(F_n 1)`.
pub fn f_dual(spec: &GaugeSpec, n: usize, phi: &CylinderMeasure) -> Result<Vec<f64>> {
    let depth = phi.depth();
    let need = spec.base_depth() + n.max(1) - 1;
    if depth < need {
        return Err(Error::DepthTooSmall { have: depth, need });
    }
    if n == 0 {
        return Ok(phi.masses().to_vec());
    }
    let model = spec.shared_model().clone();
    let lam = lambda_cocycle(spec, n)?.refine(depth)?;
    let boltz = birkhoff(&spec.boltzmann_weight(), n)?.refine(depth)?;
    let tail_len = depth - n;

    // S(t) = Σ_{x : x[n..] = t} φ(x) Λ^{-[n]}(x)
    let mut tail_sums = vec![0.0; model.word_count(tail_len)];
    model.for_each_word(depth, |i, x| {
        tail_sums[model.rank(&x[n..])] += phi.masses()[i] / lam.values()[i];
    });
    let mut out = Vec::with_capacity(phi.masses().len());
    model.for_each_word(depth, |i, w| {
        out.push(boltz.values()[i] * tail_sums[model.rank(&w[n..])]);
    });
    Ok(out)
}

/// `φ ∘ F_n` rescaled to a probability.
pub fn f_dual_normalized(spec: &GaugeSpec, n: usize, phi: &CylinderMeasure) -> Result<CylinderMeasure> {
    let weights = f_dual(spec, n, phi)?;
    CylinderMeasure::from_weights(phi.shared_model().clone(), phi.depth(), weights)
}

/// Controls for [`kms_iterate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsOptions {
    /// Number of operators `F_1 … F_N` applied per pass.
    pub levels: usize,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for KmsOptions {
    fn default() -> Self {
        KmsOptions {
            levels: 8,
            tol: 1e-12,
            max_passes: 50,
        }
    }
}

/// Outcome of [`kms_iterate`].
#[derive(Debug, Clone)]
pub struct KmsResult {
    /// The fixed state at the working depth.
    pub state: CylinderMeasure,
    /// Depth of the reported marginal. It is independent of the start for depth-one
    /// data on a full shift; otherwise the start still enters through the tail, with
    /// an effect that decays geometrically in the number of levels.
    pub marginal_depth: usize,
    pub iterations: usize,
    /// `max_n Σ_w |φ(F_n 1_w) − φ(w)|` at the fixed state.
    pub residual: f64,
    /// Total variation change of each pass.
    pub log: Vec<f64>,
}

impl KmsResult {
    pub fn marginal(&self) -> CylinderMeasure {
        self.state
            .marginal(self.marginal_depth)
            .expect("marginal depth never exceeds the working depth")
    }
}

/// Applies `φ ↦ φ(F_n 1)^{-1} F_n* φ` for `n = 1, …, N` in passes until a pass moves
/// `φ` by less than `tol` in total variation.
pub fn kms_iterate(spec: &GaugeSpec, phi0: &CylinderMeasure, options: KmsOptions) -> Result<KmsResult> {
    if options.levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if phi0.model() != spec.model() {
        return Err(Error::ModelMismatch);
    }
    let need = spec.working_depth(options.levels);
    if phi0.depth() < need {
        return Err(Error::DepthTooSmall {
            have: phi0.depth(),
            need,
        });
    }
    let mut phi = phi0.clone();
    let mut log = Vec::new();
    for pass in 1..=options.max_passes {
        let start = phi.clone();
        for n in 1..=options.levels {
            phi = f_dual_normalized(spec, n, &phi)?;
        }
        let change = phi.total_variation(&start)?;
        log.push(change);
        if change < options.tol {
            let residual = kms_defects(spec, &phi, options.levels)?
                .into_iter()
                .fold(0.0, f64::max);
            return Ok(KmsResult {
                marginal_depth: phi.depth() - spec.base_depth(),
                state: phi,
                iterations: pass,
                residual,
                log,
            });
        }
    }
    Err(Error::NotConverged {
        what: "KMS fixed-point iteration",
        iterations: options.max_passes,
        residual: log.last().copied().unwrap_or(f64::INFINITY),
        diagnostic: format!("pass changes {log:?}"),
    })
}

/// Deviation `Σ_w |φ(F_n 1_w) − φ(w)|` for `n = 1, …, levels` at the depth of `φ`.
pub fn kms_defects(spec: &GaugeSpec, phi: &CylinderMeasure, levels: usize) -> Result<Vec<f64>> {
    (1..=levels)
        .map(|n| {
            let image = f_dual(spec, n, phi)?;
            Ok(image
                .iter()
                .zip(phi.masses())
                .map(|(a, b)| (a - b).abs())
                .sum())
        })
        .collect()
}

/// The Gibbs state: the normalized eigenmeasure of `L_{H^{-β}}` at depth `depth`.
pub fn gibbs_state(spec: &GaugeSpec, depth: usize) -> Result<CylinderMeasure> {
    gibbs_solution(spec, depth).map(|s| s.eigenmeasure)
}

/// RPF data for the weight `H^{-β}`.
pub fn gibbs_solution(spec: &GaugeSpec, depth: usize) -> Result<RpfSolution> {
    let op = TransferOperator::new(spec.boltzmann_weight())?;
    rpf_solve(
        &op,
        RpfOptions {
            depth: Some(depth),
            ..RpfOptions::default()
        },
    )
}

/// Iterates from `starts` seeded random probabilities at the working depth.
pub fn kms_probe(spec: &GaugeSpec, options: KmsOptions, starts: usize, seed: u64) -> Result<KmsProbe> {
    let depth = spec.working_depth(options.levels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<CylinderMeasure> = (0..starts)
        .map(|_| CylinderMeasure::random(spec.shared_model().clone(), depth, &mut rng))
        .collect::<Result<_>>()?;
    let results = initial
        .iter()
        .map(|phi0| kms_iterate(spec, phi0, options))
        .collect::<Result<Vec<_>>>()?;
    let marginals: Vec<CylinderMeasure> = results.iter().map(KmsResult::marginal).collect();
    let mut max_pairwise = 0.0f64;
    for i in 0..marginals.len() {
        for j in i + 1..marginals.len() {
            max_pairwise = max_pairwise.max(marginals[i].total_variation(&marginals[j])?);
        }
    }
    Ok(KmsProbe {
        results,
        max_pairwise_tv: max_pairwise,
    })
}

/// Multi-start agreement of [`kms_iterate`].
#[derive(Debug, Clone)]
pub struct KmsProbe {
    pub results: Vec<KmsResult>,
    /// Largest total variation distance between marginals of two starts.
    pub max_pairwise_tv: f64,
}

/// Per-level defects of a candidate state.
#[derive(Debug, Clone, PartialEq)]
pub struct KmsCheck {
    /// `max_w |φ(F_n 1_w) − φ(w)|` for `n = 1, …`.
    pub condition_defects: Vec<f64>,
    /// `‖L_{H^{-β}}^n f − L_p^n(Λ^{[n]} f)‖_∞` over cylinder indicators.
    pub bridge_defects: Vec<f64>,
}

impl KmsCheck {
    pub fn max_condition_defect(&self) -> f64 {
        self.condition_defects.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_bridge_defect(&self) -> f64 {
        self.bridge_defects.iter().copied().fold(0.0, f64::max)
    }
}

/// Checks `φ ∘ F_n = φ` on the cylinder indicators at the depth of `φ` and the
/// transfer-operator bridge identity, for `n = 1, …, levels`. Levels beyond what
/// the depth of `φ` supports are not checked.
pub fn kms_check(spec: &GaugeSpec, phi: &CylinderMeasure, levels: usize) -> Result<KmsCheck> {
    let supported = (phi.depth() + 1).saturating_sub(spec.base_depth());
    let levels = levels.min(supported);
    let mut condition_defects = Vec::with_capacity(levels);
    for n in 1..=levels {
        let image = f_dual(spec, n, phi)?;
        condition_defects.push(
            image
                .iter()
                .zip(phi.masses())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    let model = spec.shared_model().clone();
    let gibbs_op = TransferOperator::new(spec.boltzmann_weight())?;
    let p_op = spec.expectation.operator();
    let test_depth = spec.base_depth() + 1;
    let mut bridge_defects = Vec::with_capacity(levels);
    for n in 1..=levels {
        let lam = lambda_cocycle(spec, n)?;
        let mut defect = 0.0f64;
        for w in model.words(test_depth) {
            let f = CylinderFunction::<f64>::indicator(model.clone(), &w)?;
            let lhs = gibbs_op.apply_n(&f, n)?;
            let rhs = p_op.apply_n(&lam.try_mul(&f)?, n)?;
            defect = defect.max(lhs.max_abs_diff(&rhs));
        }
        bridge_defects.push(defect);
    }
    Ok(KmsCheck {
        condition_defects,
        bridge_defects,
    })
}

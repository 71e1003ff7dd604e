//! Ruelle transfer operators, the conditional expectations `E_n`, quasi-bases
//! and the Ruelle–Perron–Frobenius eigensolver.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symbolic::{alpha_power, birkhoff, CylinderFunction, CylinderMeasure, Scalar, ShiftModel};

/// Tolerance on `L(1) = 1` for a normalized weight.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// `(L f)(x) = Σ_{T z = x} w(z) f(z)` for a strictly positive weight `w`.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    weight: CylinderFunction,
    normalized: bool,
}

/// Smallest depth on which admissibility of `a·x` can be read off.
fn admissibility_depth(model: &ShiftModel) -> usize {
    if model.is_full() {
        1
    } else {
        2
    }
}

impl TransferOperator {
    pub fn new(weight: CylinderFunction) -> Result<Self> {
        weight.check_positive()?;
        Ok(TransferOperator {
            weight,
            normalized: false,
        })
    }

    /// An operator flagged normalized; rejects weights with `L(1) ≠ 1`.
    pub fn normalized(weight: CylinderFunction) -> Result<Self> {
        let mut op = TransferOperator::new(weight)?;
        let image = op.apply(&CylinderFunction::<f64>::one(op.shared_model().clone()))?;
        let defect = image.values().iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        if defect > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { defect });
        }
        op.normalized = true;
        Ok(op)
    }

    pub fn weight(&self) -> &CylinderFunction {
        &self.weight
    }

    pub fn model(&self) -> &ShiftModel {
        self.weight.model()
    }

    pub fn shared_model(&self) -> &Arc<ShiftModel> {
        self.weight.shared_model()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Depth of `L f` for `f` of depth `depth`.
    pub fn image_depth(&self, depth: usize) -> usize {
        self.weight.depth().max(depth).max(admissibility_depth(self.model())) - 1
    }

    pub fn apply<T: Scalar>(&self, f: &CylinderFunction<T>) -> Result<CylinderFunction<T>> {
        f.check_model(self.model())?;
        let model = self.shared_model().clone();
        let d = self.image_depth(f.depth()) + 1;
        let w = self.weight.refine(d)?;
        let f = f.refine(d)?;
        let (w, f) = (w.values(), f.values());
        let k = model.alphabet_size();
        let mut buf = vec![0usize; d];
        CylinderFunction::from_fn(model.clone(), d - 1, |x| {
            buf[1..].copy_from_slice(x);
            let mut acc = T::zero();
            for a in 0..k {
                if x.is_empty() || model.allows(a, x[0]) {
                    buf[0] = a;
                    let r = model.rank(&buf);
                    acc = acc + T::from_real(w[r]) * f[r];
                }
            }
            acc
        })
    }

    pub fn apply_n<T: Scalar>(&self, f: &CylinderFunction<T>, n: usize) -> Result<CylinderFunction<T>> {
        let mut g = f.clone();
        for _ in 0..n {
            g = self.apply(&g)?;
        }
        Ok(g)
    }

    /// Unnormalized dual image on cylinders: `(L*ν)[w] = w(w) · ν[w₁…]`.
    fn dual_apply(&self, nu: &CylinderMeasure) -> Result<Vec<f64>> {
        let depth = nu.depth();
        let model = self.model();
        let w = self.weight.refine(depth)?;
        let tail = nu.marginal(depth - 1)?;
        let mut out = Vec::with_capacity(model.word_count(depth));
        model.for_each_word(depth, |i, word| {
            out.push(w.values()[i] * tail.masses()[model.rank(&word[1..])]);
        });
        Ok(out)
    }
}

/// `L_w f` for a weight `w`.
pub fn apply<T: Scalar>(op: &TransferOperator, f: &CylinderFunction<T>) -> Result<CylinderFunction<T>> {
    op.apply(f)
}

/// The conditional expectations `E_n = α^n L_p^n` for a normalized weight `p`.
#[derive(Debug, Clone)]
pub struct ConditionalExpectation {
    op: TransferOperator,
}

impl ConditionalExpectation {
    pub fn new(p: CylinderFunction) -> Result<Self> {
        Ok(ConditionalExpectation {
            op: TransferOperator::normalized(p)?,
        })
    }

    pub fn p(&self) -> &CylinderFunction {
        self.op.weight()
    }

    pub fn operator(&self) -> &TransferOperator {
        &self.op
    }

    pub fn shared_model(&self) -> &Arc<ShiftModel> {
        self.op.shared_model()
    }

    /// Depth needed to represent `E_n f` for `f` of depth `depth`.
    pub fn output_depth(&self, n: usize, depth: usize) -> usize {
        if n == 0 {
            return depth;
        }
        let m = admissibility_depth(self.op.model());
        depth.max(n + self.p().depth().max(m) - 1)
    }

    /// `E_n f`: the `p^{[n]}`-weighted average of `f` over points sharing the tail from position `n` on.
    pub fn apply<T: Scalar>(&self, n: usize, f: &CylinderFunction<T>) -> Result<CylinderFunction<T>> {
        if n == 0 {
            return Ok(f.clone());
        }
        let g = self.op.apply_n(f, n)?;
        let out = alpha_power(&g, n)?;
        let depth = self.output_depth(n, f.depth());
        if out.depth() < depth {
            out.refine(depth)
        } else {
            Ok(out)
        }
    }
}

/// `E_n f` for a normalized weight `p`.
pub fn cond_expectation<T: Scalar>(p: &CylinderFunction, n: usize, f: &CylinderFunction<T>) -> Result<CylinderFunction<T>> {
    ConditionalExpectation::new(p.clone())?.apply(n, f)
}

/// A quasi-basis `{u_i}` for `E_m` together with the index `Σ u_i²`.
#[derive(Debug, Clone)]
pub struct QuasiBasis {
    pub level: usize,
    pub elements: Vec<CylinderFunction>,
    pub index: CylinderFunction,
}

/// Quasi-basis for `E_1`: `u_a = (p^{-1} 1_{[a]})^{1/2}`, index `p^{-1}`.
pub fn quasi_basis(p: &CylinderFunction) -> Result<QuasiBasis> {
    quasi_basis_level(p, 1)
}

/// Quasi-basis for `E_m`: `u_w = (p^{-[m]} 1_{[w]})^{1/2}` over words of length `m`.
pub fn quasi_basis_level(p: &CylinderFunction, m: usize) -> Result<QuasiBasis> {
    TransferOperator::normalized(p.clone())?;
    let model = p.shared_model().clone();
    let index = birkhoff(&p.recip(), m)?;
    let root = index.sqrt();
    let mut elements = Vec::with_capacity(model.word_count(m));
    for w in model.words(m) {
        let ind = CylinderFunction::indicator(model.clone(), &w)?;
        elements.push(root.try_mul(&ind)?);
    }
    Ok(QuasiBasis {
        level: m,
        elements,
        index,
    })
}

/// `{E_n(u_w)}` for the level-`m` quasi-basis: a quasi-basis for `E_m` on the range of `E_n`.
pub fn restriction_quasi_basis(e: &ConditionalExpectation, n: usize, m: usize) -> Result<Vec<CylinderFunction>> {
    if n > m {
        return Err(Error::InvalidArgument(format!(
            "restriction level {n} exceeds quasi-basis level {m}"
        )));
    }
    quasi_basis_level(e.p(), m)?
        .elements
        .iter()
        .map(|u| e.apply(n, u))
        .collect()
}

/// Controls for [`rpf_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpfOptions {
    /// Working depth; defaults to the smallest depth on which the dual step sees admissibility.
    pub depth: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RpfOptions {
    fn default() -> Self {
        RpfOptions {
            depth: None,
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Leading eigendata `L k = c k`, `L* ν = c ν`, `∫ k dν = 1`.
#[derive(Debug, Clone)]
pub struct RpfSolution {
    pub eigenvalue: f64,
    pub eigenfunction: CylinderFunction,
    pub eigenmeasure: CylinderMeasure,
    pub iterations: usize,
    /// `‖L k − c k‖_∞ / ‖k‖_∞` at the last step.
    pub eigenfunction_residual: f64,
    /// Total variation change of the normalized dual iterate at the last step.
    pub eigenmeasure_residual: f64,
    pub primitive: bool,
}

impl RpfSolution {
    pub fn pressure(&self) -> f64 {
        self.eigenvalue.ln()
    }
}

/// Power iteration for the leading eigenvalue, eigenfunction and eigenmeasure.
pub fn rpf_solve(op: &TransferOperator, options: RpfOptions) -> Result<RpfSolution> {
    let model = op.shared_model().clone();
    let min_depth = op.weight().depth().max(admissibility_depth(&model));
    let depth = options.depth.unwrap_or(min_depth);
    if depth < min_depth {
        return Err(Error::DepthTooSmall {
            have: depth,
            need: min_depth,
        });
    }
    model.check_depth(depth)?;
    let primitive = model.is_primitive();

    let count = model.word_count(depth);
    let mut k = CylinderFunction::<f64>::one(model.clone()).refine(depth)?;
    let mut nu = CylinderMeasure::new(model.clone(), depth, vec![1.0 / count as f64; count])?;
    let mut c = 0.0;
    let mut res_k = f64::INFINITY;
    let mut res_nu = f64::INFINITY;

    for iteration in 1..=options.max_iter {
        let lk: CylinderFunction = op.apply(&k)?.refine(depth)?;
        c = lk.sup_norm();
        res_k = lk
            .values()
            .iter()
            .zip(k.values())
            .map(|(a, b)| (a - c * b).abs())
            .fold(0.0, f64::max)
            / c;
        k = lk.scale(1.0 / c);

        let next = CylinderMeasure::from_weights(model.clone(), depth, op.dual_apply(&nu)?)?;
        res_nu = next.total_variation(&nu)?;
        nu = next;

        if res_k <= options.tol && res_nu <= options.tol {
            let scale = nu.integrate(&k)?;
            return Ok(RpfSolution {
                eigenvalue: c,
                eigenfunction: k.scale(1.0 / scale),
                eigenmeasure: nu,
                iterations: iteration,
                eigenfunction_residual: res_k,
                eigenmeasure_residual: res_nu,
                primitive,
            });
        }
    }
    let diagnostic = if primitive {
        format!("eigenvalue estimate {c}, eigenmeasure residual {res_nu:e}")
    } else {
        format!("transition matrix is not primitive; eigenvalue estimate {c}, eigenmeasure residual {res_nu:e}")
    };
    Err(Error::NotConverged {
        what: "RPF power iteration",
        iterations: options.max_iter,
        residual: res_k.max(res_nu),
        diagnostic,
    })
}

/// Topological pressure `log c` of the weight.
pub fn pressure(op: &TransferOperator, options: RpfOptions) -> Result<f64> {
    rpf_solve(op, options).map(|s| s.pressure())
}

/// The weight `1/#{a : a·x admissible}`, normalized for every model.
pub fn uniform_weight(model: Arc<ShiftModel>) -> CylinderFunction {
    let deg: Vec<f64> = (0..model.alphabet_size())
        .map(|b| (0..model.alphabet_size()).filter(|&a| model.allows(a, b)).count() as f64)
        .collect();
    if model.is_full() {
        return CylinderFunction::constant(model.clone(), 1.0 / deg[0]);
    }
    CylinderFunction::from_fn(model, 2, |w| 1.0 / deg[w[1]]).expect("depth 2 is always tabulable")
}

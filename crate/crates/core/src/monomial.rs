//! Finite sums of monomials `a·e_n·b`: products, adjoints, the gauge action,
//! the expectation `G` and the depth-`d` representation.

use std::ops::Add;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kms::GaugeSpec;
use crate::symbolic::{birkhoff, CylinderFunction, CylinderMeasure, ShiftModel};
use crate::transfer::{quasi_basis_level, rpf_solve, ConditionalExpectation, RpfOptions, TransferOperator};

pub type ComplexFunction = CylinderFunction<Complex64>;

/// `left · e_level · right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub left: ComplexFunction,
    pub level: usize,
    pub right: ComplexFunction,
}

impl Monomial {
    pub fn new(left: ComplexFunction, level: usize, right: ComplexFunction) -> Result<Self> {
        left.check_model(right.model())?;
        Ok(Monomial { left, level, right })
    }

    /// The projection `e_n`.
    pub fn projection(model: Arc<ShiftModel>, level: usize) -> Self {
        let one = ComplexFunction::one(model);
        Monomial {
            left: one.clone(),
            level,
            right: one,
        }
    }

    /// `a = a·e_0·1`.
    pub fn function(a: ComplexFunction) -> Self {
        let one = ComplexFunction::one(a.shared_model().clone());
        Monomial {
            left: a,
            level: 0,
            right: one,
        }
    }

    pub fn model(&self) -> &ShiftModel {
        self.left.model()
    }

    pub fn adjoint(&self) -> Monomial {
        Monomial {
            left: self.right.conj(),
            level: self.level,
            right: self.left.conj(),
        }
    }
}

/// A finite sum of monomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlgebraElement {
    terms: Vec<Monomial>,
}

impl AlgebraElement {
    pub fn new(terms: Vec<Monomial>) -> Self {
        AlgebraElement { terms }
    }

    pub fn zero() -> Self {
        AlgebraElement { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|t| t.level).max().unwrap_or(0)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: Complex64) -> Self {
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    left: t.left.scale(c),
                    level: t.level,
                    right: t.right.clone(),
                })
                .collect(),
        }
    }

    /// `(a e_n b)* = b̄ e_n ā`, termwise.
    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            terms: self.terms.iter().map(Monomial::adjoint).collect(),
        }
    }

    /// Folds level-0 terms into a single function and merges terms that share
    /// their level and right factor.
    pub fn canonicalize(&self) -> Result<Self> {
        let mut out: Vec<Monomial> = Vec::new();
        for t in &self.terms {
            let t = if t.level == 0 {
                Monomial::function(t.left.try_mul(&t.right)?)
            } else {
                t.clone()
            };
            if let Some(existing) = out
                .iter_mut()
                .find(|e| e.level == t.level && e.right.max_abs_diff(&t.right) == 0.0)
            {
                existing.left = existing.left.try_add(&t.left)?.simplified();
            } else {
                out.push(Monomial {
                    left: t.left.simplified(),
                    level: t.level,
                    right: t.right.simplified(),
                });
            }
        }
        out.retain(|t| t.left.sup_norm() > 0.0 && t.right.sup_norm() > 0.0);
        Ok(AlgebraElement { terms: out })
    }
}

impl From<Monomial> for AlgebraElement {
    fn from(m: Monomial) -> Self {
        AlgebraElement { terms: vec![m] }
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;

    fn add(mut self, rhs: AlgebraElement) -> AlgebraElement {
        self.terms.extend(rhs.terms);
        self
    }
}

/// Algebra operations for a fixed normalized weight `p`.
#[derive(Debug, Clone)]
pub struct MonomialAlgebra {
    expectation: ConditionalExpectation,
}

impl MonomialAlgebra {
    pub fn new(p: CylinderFunction) -> Result<Self> {
        Ok(MonomialAlgebra {
            expectation: ConditionalExpectation::new(p)?,
        })
    }

    pub fn from_spec(spec: &GaugeSpec) -> Self {
        MonomialAlgebra {
            expectation: spec.expectation().clone(),
        }
    }

    pub fn expectation(&self) -> &ConditionalExpectation {
        &self.expectation
    }

    pub fn shared_model(&self) -> &Arc<ShiftModel> {
        self.expectation.shared_model()
    }

    /// `(a e_n b)(c e_m d) = a E_n(bc) e_m d` for `n ≤ m`, `a e_n E_m(bc) d` for `n ≥ m`.
    pub fn multiply_monomials(&self, x: &Monomial, y: &Monomial) -> Result<Monomial> {
        let bc = x.right.try_mul(&y.left)?;
        if x.level <= y.level {
            let mid = self.expectation.apply(x.level, &bc)?;
            Monomial::new(x.left.try_mul(&mid)?, y.level, y.right.clone())
        } else {
            let mid = self.expectation.apply(y.level, &bc)?;
            Monomial::new(x.left.clone(), x.level, mid.try_mul(&y.right)?)
        }
    }

    pub fn multiply(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        let mut terms = Vec::with_capacity(x.terms.len() * y.terms.len());
        for s in &x.terms {
            for t in &y.terms {
                terms.push(self.multiply_monomials(s, t)?);
            }
        }
        Ok(AlgebraElement { terms })
    }

    /// `G(a e_n b) = a p^{[n]} b`, summed over terms.
    pub fn expectation_g(&self, x: &AlgebraElement) -> Result<ComplexFunction> {
        let mut acc = ComplexFunction::zero(self.shared_model().clone());
        for t in &x.terms {
            let pn = birkhoff(self.expectation.p(), t.level)?.to_complex();
            acc = acc.try_add(&t.left.try_mul(&pn)?.try_mul(&t.right)?)?;
        }
        Ok(acc)
    }

    /// Depth of `G(x)`.
    pub fn g_depth(&self, x: &AlgebraElement) -> usize {
        let p_depth = self.expectation.p().depth();
        x.terms
            .iter()
            .map(|t| {
                let pn = if t.level == 0 { 0 } else { p_depth + t.level - 1 };
                t.left.depth().max(t.right.depth()).max(pn)
            })
            .max()
            .unwrap_or(0)
    }

    /// `ψ(x) = ∫ G(x) dφ`.
    pub fn state_eval(&self, phi: &CylinderMeasure, x: &AlgebraElement) -> Result<Complex64> {
        phi.integrate(&self.expectation_g(x)?)
    }

    /// Rewrites `a e_n b` as `Σ_w (a v_w) e_m (v̄_w b)` with `v_w = E_n(u_w)` for the
    /// level-`m` quasi-basis `{u_w}`.
    pub fn reduce_level(&self, x: &Monomial, m: usize) -> Result<AlgebraElement> {
        if m < x.level {
            return Err(Error::InvalidArgument(format!(
                "cannot reduce level {} to the lower level {m}",
                x.level
            )));
        }
        if m == x.level {
            return Ok(x.clone().into());
        }
        let basis = quasi_basis_level(self.expectation.p(), m)?;
        let mut terms = Vec::with_capacity(basis.elements.len());
        for u in &basis.elements {
            let v = self.expectation.apply(x.level, u)?.to_complex();
            terms.push(Monomial::new(x.left.try_mul(&v)?, m, v.conj().try_mul(&x.right)?)?);
        }
        Ok(AlgebraElement { terms })
    }

    /// Smallest depth at which [`MonomialAlgebra::represent`] accepts `x`.
    pub fn min_represent_depth(&self, x: &AlgebraElement) -> usize {
        x.terms
            .iter()
            .map(|t| {
                t.left
                    .depth()
                    .max(t.right.depth())
                    .max(self.expectation.output_depth(t.level, 0))
            })
            .max()
            .unwrap_or(0)
    }

    /// The matrix of `f ↦ Σ a·E_n(b·f)` in the indicator basis of depth-`d` cylinders.
    pub fn represent(&self, x: &AlgebraElement, depth: usize) -> Result<DMatrix<Complex64>> {
        let need = self.min_represent_depth(x);
        if depth < need {
            return Err(Error::DepthTooSmall { have: depth, need });
        }
        let model = self.shared_model().clone();
        model.check_depth(depth)?;
        let size = model.word_count(depth);
        let mut out = DMatrix::<Complex64>::zeros(size, size);
        for t in &x.terms {
            let e = self.expectation_matrix(t.level, depth)?;
            let a = t.left.refine(depth)?;
            let b = t.right.refine(depth)?;
            for i in 0..size {
                for j in 0..size {
                    let eij = e[(i, j)];
                    if eij != 0.0 {
                        out[(i, j)] += a.values()[i] * b.values()[j] * eij;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `E_n` as a matrix on depth-`d` cylinders: entry `(x, z)` is `p^{[n]}(z)`
    /// when `z` and `x` agree from position `n` on.
    pub fn expectation_matrix(&self, n: usize, depth: usize) -> Result<DMatrix<f64>> {
        let need = self.expectation.output_depth(n, 0);
        if depth < need {
            return Err(Error::DepthTooSmall { have: depth, need });
        }
        let model = self.shared_model().clone();
        let size = model.word_count(depth);
        if n == 0 {
            return Ok(DMatrix::identity(size, size));
        }
        let pn = birkhoff(self.expectation.p(), n)?.refine(depth)?;
        let words = model.words(depth);
        let tail = n.min(depth);
        let mut out = DMatrix::zeros(size, size);
        for (i, x) in words.iter().enumerate() {
            for (j, z) in words.iter().enumerate() {
                if x.symbols()[tail..] == z.symbols()[tail..] {
                    out[(i, j)] = pn.values()[j];
                }
            }
        }
        Ok(out)
    }
}

/// `σ_z(a e_n b) = a·h^{iz[n]}·e_n·h^{−iz[n]}·b` with `h^{w} = exp(w log H)`.
pub fn gauge(spec: &GaugeSpec, x: &AlgebraElement, z: Complex64) -> Result<AlgebraElement> {
    let log_h = spec.h().ln().to_complex();
    let i = Complex64::i();
    let forward = log_h.map(|v| (i * z * v).exp());
    let backward = log_h.map(|v| (-i * z * v).exp());
    let mut terms = Vec::with_capacity(x.terms.len());
    for t in &x.terms {
        if t.level == 0 {
            terms.push(t.clone());
            continue;
        }
        let hf = birkhoff(&forward, t.level)?;
        let hb = birkhoff(&backward, t.level)?;
        terms.push(Monomial::new(t.left.try_mul(&hf)?, t.level, hb.try_mul(&t.right)?)?);
    }
    Ok(AlgebraElement { terms })
}

/// `|ψ(x σ_{iβ}(y)) − ψ(y x)|` for `ψ = φ ∘ G`.
pub fn kms_equality_defect(
    algebra: &MonomialAlgebra,
    spec: &GaugeSpec,
    phi: &CylinderMeasure,
    x: &AlgebraElement,
    y: &AlgebraElement,
) -> Result<f64> {
    let sy = gauge(spec, y, Complex64::new(0.0, spec.beta()))?;
    let lhs = algebra.state_eval(phi, &algebra.multiply(x, &sy)?)?;
    let rhs = algebra.state_eval(phi, &algebra.multiply(y, x)?)?;
    Ok((lhs - rhs).norm())
}

/// A random monomial with coefficient functions of the given depth.
pub fn random_monomial<R: Rng + ?Sized>(
    model: Arc<ShiftModel>,
    level: usize,
    depth: usize,
    rng: &mut R,
) -> Result<Monomial> {
    let mut coeff = || {
        ComplexFunction::from_fn(model.clone(), depth, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    };
    let left = coeff()?;
    let right = coeff()?;
    Monomial::new(left, level, right)
}

/// The measure `τ` with `L_p* τ = τ`, at depth `depth`.
pub fn trace_measure(algebra: &MonomialAlgebra, depth: usize) -> Result<CylinderMeasure> {
    let op: &TransferOperator = algebra.expectation().operator();
    Ok(rpf_solve(
        op,
        RpfOptions {
            depth: Some(depth),
            ..RpfOptions::default()
        },
    )?
    .eigenmeasure)
}

/// Adjoint of a represented operator in `L²(τ)`: `D^{-1} R^H D`, `D = diag(τ)`.
pub fn adjoint_in(tau: &CylinderMeasure, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let m = tau.masses();
    let rh = r.adjoint();
    DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| rh[(i, j)] * (m[j] / m[i]))
}

/// Smallest eigenvalue of a represented operator that is self-adjoint in `L²(τ)`,
/// read from the Hermitian matrix `D^{1/2} R D^{-1/2}`.
pub fn min_eigenvalue_in(tau: &CylinderMeasure, r: &DMatrix<Complex64>) -> f64 {
    let m = tau.masses();
    let sym = DMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * (m[i] / m[j]).sqrt());
    let herm = (&sym + sym.adjoint()).scale(0.5);
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full2() -> Arc<ShiftModel> {
        Arc::new(ShiftModel::full_shift(2).unwrap())
    }

    fn algebra(m: &Arc<ShiftModel>) -> MonomialAlgebra {
        MonomialAlgebra::new(CylinderFunction::constant(m.clone(), 0.5)).unwrap()
    }

    #[test]
    fn product_examples() {
        let m = full2();
        let alg = algebra(&m);
        let e1: AlgebraElement = Monomial::projection(m.clone(), 1).into();
        let e2: AlgebraElement = Monomial::projection(m.clone(), 2).into();
        let prod = alg.multiply(&e1, &e2).unwrap();
        assert_eq!(alg.represent(&prod, 3).unwrap(), alg.represent(&e2, 3).unwrap());

        let ind = CylinderFunction::<f64>::indicator(m.clone(), &"0".parse().unwrap())
            .unwrap()
            .to_complex();
        let y: AlgebraElement = Monomial::new(ind, 1, ComplexFunction::one(m.clone())).unwrap().into();
        let prod = alg.multiply(&e1, &y).unwrap();
        let expected = e1.scale(Complex64::new(0.5, 0.0));
        let diff = alg.represent(&prod, 2).unwrap() - alg.represent(&expected, 2).unwrap();
        assert!(diff.norm() < 1e-15);
    }

    #[test]
    fn represent_e1() {
        let m = full2();
        let alg = algebra(&m);
        let e1: AlgebraElement = Monomial::projection(m.clone(), 1).into();
        let r = alg.represent(&e1, 2).unwrap();
        // averaging over the first symbol: 00~10, 01~11
        assert_eq!(r[(0, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(r[(0, 2)], Complex64::new(0.5, 0.0));
        assert_eq!(r[(0, 1)], Complex64::new(0.0, 0.0));
        let e0: AlgebraElement = Monomial::projection(m, 0).into();
        assert_eq!(alg.represent(&e0, 2).unwrap(), DMatrix::identity(4, 4));
    }

    #[test]
    fn g_examples() {
        let m = full2();
        let alg = algebra(&m);
        let g1 = alg.expectation_g(&Monomial::projection(m.clone(), 1).into()).unwrap();
        assert!(g1.values().iter().all(|v| (v.re - 0.5).abs() < 1e-15));
        let g2 = alg.expectation_g(&Monomial::projection(m, 2).into()).unwrap();
        assert!(g2.values().iter().all(|v| (v.re - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hand_kms_value() {
        let m = full2();
        let h = CylinderFunction::new(m.clone(), 1, vec![2.0, 3.0]).unwrap();
        let spec = GaugeSpec::new(h, CylinderFunction::constant(m.clone(), 0.5), 1.0).unwrap();
        let alg = MonomialAlgebra::from_spec(&spec);
        let gibbs = crate::kms::gibbs_state(&spec, 2).unwrap();
        let e1: AlgebraElement = Monomial::projection(m, 1).into();
        let s = gauge(&spec, &e1, Complex64::new(0.0, 1.0)).unwrap();
        let v = alg.state_eval(&gibbs, &alg.multiply(&e1, &s).unwrap()).unwrap();
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn reduce_e0_to_level_one() {
        let m = full2();
        let alg = algebra(&m);
        let red = alg.reduce_level(&Monomial::projection(m.clone(), 0), 1).unwrap();
        assert_eq!(red.terms().len(), 2);
        let s = 2f64.sqrt();
        assert!((red.terms()[0].left.values()[0].re - s).abs() < 1e-15);
        let id = alg.represent(&red, 1).unwrap();
        assert!((id - DMatrix::identity(2, 2)).norm() < 1e-14);
    }
}

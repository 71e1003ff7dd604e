use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbolic::{Point, Scalar, ShiftModel, Word};

/// A function on the shift space that is constant on cylinders of length `depth`.
///
/// Values are stored in the lexicographic order of the admissible words of
/// length `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFunction<T: Scalar = f64> {
    model: Arc<ShiftModel>,
    depth: usize,
    values: Vec<T>,
}

impl<T: Scalar> CylinderFunction<T> {
    pub fn new(model: Arc<ShiftModel>, depth: usize, values: Vec<T>) -> Result<Self> {
        model.check_depth(depth)?;
        let expected = model.word_count(depth);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                depth,
                expected,
                got: values.len(),
            });
        }
        Ok(CylinderFunction {
            model,
            depth,
            values,
        })
    }

    pub fn constant(model: Arc<ShiftModel>, c: T) -> Self {
        CylinderFunction {
            model,
            depth: 0,
            values: vec![c],
        }
    }

    pub fn zero(model: Arc<ShiftModel>) -> Self {
        Self::constant(model, T::zero())
    }

    pub fn one(model: Arc<ShiftModel>) -> Self {
        Self::constant(model, T::one())
    }

    /// Tabulates `f` over the admissible words of length `depth`.
    pub fn from_fn<F: FnMut(&[usize]) -> T>(
        model: Arc<ShiftModel>,
        depth: usize,
        mut f: F,
    ) -> Result<Self> {
        model.check_depth(depth)?;
        let mut values = Vec::with_capacity(model.word_count(depth));
        model.for_each_word(depth, |_, w| values.push(f(w)));
        Ok(CylinderFunction {
            model,
            depth,
            values,
        })
    }

    /// The indicator of the cylinder `[word]`.
    pub fn indicator(model: Arc<ShiftModel>, word: &Word) -> Result<Self> {
        model.check_admissible(word.symbols())?;
        model.check_depth(word.len())?;
        let mut values = vec![T::zero(); model.word_count(word.len())];
        values[model.rank(word.symbols())] = T::one();
        Ok(CylinderFunction {
            model,
            depth: word.len(),
            values,
        })
    }

    pub fn model(&self) -> &ShiftModel {
        &self.model
    }

    pub fn shared_model(&self) -> &Arc<ShiftModel> {
        &self.model
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value on any point whose first `depth` symbols are the prefix of `word`.
    ///
    /// Panics if `word` is shorter than the depth.
    pub fn eval(&self, word: &[usize]) -> T {
        assert!(
            word.len() >= self.depth,
            "word of length {} is shorter than depth {}",
            word.len(),
            self.depth
        );
        self.values[self.model.rank(&word[..self.depth])]
    }

    pub fn eval_word(&self, word: &Word) -> T {
        self.eval(word.symbols())
    }

    pub fn eval_point(&self, x: &Point) -> T {
        self.eval(x.cylinder(self.depth).symbols())
    }

    /// The same function tabulated at a deeper level.
    pub fn refine(&self, depth: usize) -> Result<Self> {
        if depth < self.depth {
            return Err(Error::DepthTooSmall {
                have: depth,
                need: self.depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        self.model.check_depth(depth)?;
        let mut values = Vec::with_capacity(self.model.word_count(depth));
        if self.depth == 0 {
            values.resize(self.model.word_count(depth), self.values[0]);
        } else {
            let values_ref = &self.values;
            let model = &self.model;
            model.for_each_word(self.depth, |i, w| {
                let reps = model.extension_count(w.len(), w.last().copied(), depth);
                values.extend(std::iter::repeat_n(values_ref[i], reps));
            });
        }
        Ok(CylinderFunction {
            model: self.model.clone(),
            depth,
            values,
        })
    }

    /// Checks that both functions live on the same model.
    pub fn check_model(&self, other: &ShiftModel) -> Result<()> {
        if std::ptr::eq(self.model.as_ref(), other) || *self.model == *other {
            Ok(())
        } else {
            Err(Error::ModelMismatch)
        }
    }

    pub fn map<U: Scalar, F: Fn(T) -> U>(&self, f: F) -> CylinderFunction<U> {
        CylinderFunction {
            model: self.model.clone(),
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination after refining both operands to the larger depth.
    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        self.check_model(&other.model)?;
        let depth = self.depth.max(other.depth);
        let a = self.refine(depth)?;
        let b = other.refine(depth)?;
        Ok(CylinderFunction {
            model: self.model.clone(),
            depth,
            values: a.values.iter().zip(&b.values).map(|(&x, &y)| f(x, y)).collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x * y)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    pub fn conj(&self) -> Self {
        self.map(Scalar::conj)
    }

    pub fn to_complex(&self) -> CylinderFunction<Complex64> {
        self.map(Scalar::to_complex)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.modulus()).fold(0.0, f64::max)
    }

    /// Sup-norm distance, after refining to a common depth.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.try_sub(other)
            .map(|d| d.sup_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// The shallowest depth at which this function is exactly representable.
    pub fn minimal_depth(&self) -> usize {
        (0..self.depth)
            .find(|&d| {
                let coarse = self.restrict_depth(d);
                coarse.refine(self.depth).map(|r| r.values == self.values).unwrap_or(false)
            })
            .unwrap_or(self.depth)
    }

    /// The function re-tabulated at its minimal depth.
    pub fn simplified(&self) -> Self {
        self.restrict_depth(self.minimal_depth())
    }

    // Reads the value of the first extension of each shallower word.
    fn restrict_depth(&self, depth: usize) -> Self {
        let mut values = Vec::with_capacity(self.model.word_count(depth));
        let model = &self.model;
        let mut index = 0;
        model.for_each_word(depth, |_, w| {
            values.push(self.values[index]);
            index += model.extension_count(w.len(), w.last().copied(), self.depth);
        });
        CylinderFunction {
            model: self.model.clone(),
            depth,
            values,
        }
    }
}

impl CylinderFunction<f64> {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn recip(&self) -> Self {
        self.map(f64::recip)
    }

    pub fn ln(&self) -> Self {
        self.map(f64::ln)
    }

    pub fn exp(&self) -> Self {
        self.map(f64::exp)
    }

    pub fn sqrt(&self) -> Self {
        self.map(f64::sqrt)
    }

    pub fn powf(&self, e: f64) -> Self {
        self.map(|v| v.powf(e))
    }

    /// Errors unless every value is strictly positive.
    pub fn check_positive(&self) -> Result<()> {
        let min = self.min_value();
        if min > 0.0 && min.is_finite() {
            Ok(())
        } else {
            Err(Error::NotPositive { min })
        }
    }
}

impl CylinderFunction<Complex64> {
    pub fn re(&self) -> CylinderFunction<f64> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> CylinderFunction<f64> {
        self.map(|v| v.im)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $try:ident) => {
        impl<T: Scalar> $trait<&CylinderFunction<T>> for &CylinderFunction<T> {
            type Output = CylinderFunction<T>;

            /// Panics if the operands live on different models.
            fn $method(self, rhs: &CylinderFunction<T>) -> CylinderFunction<T> {
                self.$try(rhs).expect("operands must share a shift model")
            }
        }

        impl<T: Scalar> $trait<CylinderFunction<T>> for CylinderFunction<T> {
            type Output = CylinderFunction<T>;

            fn $method(self, rhs: CylinderFunction<T>) -> CylinderFunction<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

binary_op!(Add, add, try_add);
binary_op!(Sub, sub, try_sub);
binary_op!(Mul, mul, try_mul);

impl<T: Scalar> Neg for &CylinderFunction<T> {
    type Output = CylinderFunction<T>;

    fn neg(self) -> CylinderFunction<T> {
        self.map(|v| -v)
    }
}

/// `f ∘ T^n`: drops the first `n` symbols; the depth grows by `n`.
pub fn alpha_power<T: Scalar>(f: &CylinderFunction<T>, n: usize) -> Result<CylinderFunction<T>> {
    if n == 0 {
        return Ok(f.clone());
    }
    let depth = f.depth + n;
    let model = f.shared_model().clone();
    CylinderFunction::from_fn(model.clone(), depth, |w| f.values[model.rank(&w[n..])])
}

/// The multiplicative cocycle `f · f∘T ··· f∘T^{n-1}`, with the empty product 1.
pub fn birkhoff<T: Scalar>(f: &CylinderFunction<T>, n: usize) -> Result<CylinderFunction<T>> {
    if n == 0 {
        return Ok(CylinderFunction::one(f.shared_model().clone()));
    }
    let d = f.depth;
    let model = f.shared_model().clone();
    CylinderFunction::from_fn(model.clone(), d + n - 1, |w| {
        let mut acc = T::one();
        for i in 0..n {
            acc = acc * f.values[model.rank(&w[i..i + d])];
        }
        acc
    })
}

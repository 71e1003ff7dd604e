use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::symbolic::{CylinderFunction, Point, Scalar, ShiftModel, Word};

const MASS_TOLERANCE: f64 = 1e-9;

/// A Borel probability measure given by its masses on cylinders of length `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMeasure {
    model: Arc<ShiftModel>,
    depth: usize,
    masses: Vec<f64>,
}

impl CylinderMeasure {
    /// Validates nonnegativity and total mass 1 (within 1e-9).
    pub fn new(model: Arc<ShiftModel>, depth: usize, masses: Vec<f64>) -> Result<Self> {
        model.check_depth(depth)?;
        let expected = model.word_count(depth);
        if masses.len() != expected {
            return Err(Error::LengthMismatch {
                depth,
                expected,
                got: masses.len(),
            });
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("negative or non-finite mass {bad}")));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("masses sum to {total}, not 1")));
        }
        Ok(CylinderMeasure {
            model,
            depth,
            masses,
        })
    }

    /// Rescales nonnegative weights to a probability.
    pub fn from_weights(model: Arc<ShiftModel>, depth: usize, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        CylinderMeasure::new(model, depth, weights)
    }

    /// A measure with independent uniform random cylinder weights.
    pub fn random<R: Rng + ?Sized>(model: Arc<ShiftModel>, depth: usize, rng: &mut R) -> Result<Self> {
        model.check_depth(depth)?;
        let weights = (0..model.word_count(depth))
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        CylinderMeasure::from_weights(model, depth, weights)
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

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Mass of the cylinder `[word]` for any admissible word no longer than the depth.
    pub fn mass(&self, word: &Word) -> Result<f64> {
        self.model.check_admissible(word.symbols())?;
        let m = self.marginal(word.len())?;
        Ok(m.masses[self.model.rank(word.symbols())])
    }

    /// The same measure seen on the coarser partition into length-`depth` cylinders.
    pub fn marginal(&self, depth: usize) -> Result<Self> {
        if depth > self.depth {
            return Err(Error::DepthTooSmall {
                have: self.depth,
                need: depth,
            });
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let mut masses = Vec::with_capacity(self.model.word_count(depth));
        let model = &self.model;
        let mut index = 0;
        model.for_each_word(depth, |_, w| {
            let n = model.extension_count(w.len(), w.last().copied(), self.depth);
            masses.push(self.masses[index..index + n].iter().sum());
            index += n;
        });
        Ok(CylinderMeasure {
            model: self.model.clone(),
            depth,
            masses,
        })
    }

    /// `∫ f dμ`; the function must not be deeper than the measure.
    pub fn integrate<T: Scalar>(&self, f: &CylinderFunction<T>) -> Result<T> {
        f.check_model(&self.model)?;
        if f.depth() > self.depth {
            return Err(Error::DepthTooSmall {
                have: self.depth,
                need: f.depth(),
            });
        }
        let f = f.refine(self.depth)?;
        Ok(self
            .masses
            .iter()
            .zip(f.values())
            .map(|(&m, &v)| T::from_real(m) * v)
            .sum())
    }

    /// Total variation distance `½ Σ |μ(w) − ν(w)|` on the coarser common partition.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        if *self.model != *other.model {
            return Err(Error::ModelMismatch);
        }
        let depth = self.depth.min(other.depth);
        let a = self.marginal(depth)?;
        let b = other.marginal(depth)?;
        Ok(0.5 * a.masses.iter().zip(&b.masses).map(|(x, y)| (x - y).abs()).sum::<f64>())
    }

    /// The Dirac mass at an eventually periodic point.
    pub fn dirac(model: Arc<ShiftModel>, point: &Point, depth: usize) -> Result<Self> {
        model.check_depth(depth)?;
        let mut masses = vec![0.0; model.word_count(depth)];
        masses[model.rank(point.cylinder(depth).symbols())] = 1.0;
        Ok(CylinderMeasure {
            model,
            depth,
            masses,
        })
    }
}

/// `∫ f dμ`.
pub fn integrate<T: Scalar>(mu: &CylinderMeasure, f: &CylinderFunction<T>) -> Result<T> {
    mu.integrate(f)
}

/// The Dirac mass at the periodic point `periodic_word^∞`.
pub fn point_mass(model: Arc<ShiftModel>, periodic_word: &Word, depth: usize) -> Result<CylinderMeasure> {
    let point = Point::periodic(&model, periodic_word.clone())?;
    CylinderMeasure::dirac(model, &point, depth)
}

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoform::symbolic::{CylinderFunction, CylinderMeasure, ShiftModel};
use thermoform::transfer::uniform_weight;

pub fn full2() -> Arc<ShiftModel> {
    Arc::new(ShiftModel::full_shift(2).unwrap())
}

pub fn golden() -> Arc<ShiftModel> {
    Arc::new(ShiftModel::golden_mean())
}

pub fn models() -> Vec<Arc<ShiftModel>> {
    vec![full2(), golden()]
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_fn(model: &Arc<ShiftModel>, depth: usize, rng: &mut impl Rng) -> CylinderFunction {
    CylinderFunction::from_fn(model.clone(), depth, |_| rng.random_range(-1.0..1.0)).unwrap()
}

pub fn random_positive(model: &Arc<ShiftModel>, depth: usize, rng: &mut impl Rng) -> CylinderFunction {
    CylinderFunction::from_fn(model.clone(), depth, |_| rng.random_range(0.2..2.0)).unwrap()
}

/// A random normalized weight: positive on each preimage set, summing to one.
pub fn random_normalized(model: &Arc<ShiftModel>, depth: usize, rng: &mut impl Rng) -> CylinderFunction {
    let depth = depth.max(if model.is_full() { 1 } else { 2 });
    let raw = random_positive(model, depth, rng);
    let mut totals = vec![0.0; model.word_count(depth - 1)];
    model.for_each_word(depth, |i, w| totals[model.rank(&w[1..])] += raw.values()[i]);
    let mut values = Vec::new();
    model.for_each_word(depth, |i, w| values.push(raw.values()[i] / totals[model.rank(&w[1..])]));
    CylinderFunction::new(model.clone(), depth, values).unwrap()
}

pub fn p_uniform(model: &Arc<ShiftModel>) -> CylinderFunction {
    uniform_weight(model.clone())
}

pub fn h23() -> CylinderFunction {
    CylinderFunction::new(full2(), 1, vec![2.0, 3.0]).unwrap()
}

pub fn half(model: &Arc<ShiftModel>) -> CylinderFunction {
    CylinderFunction::constant(model.clone(), 0.5)
}

pub fn random_measure(model: &Arc<ShiftModel>, depth: usize, rng: &mut impl Rng) -> CylinderMeasure {
    CylinderMeasure::random(model.clone(), depth, rng).unwrap()
}

pub fn bernoulli(p0: f64, depth: usize) -> CylinderMeasure {
    let model = full2();
    let mut masses = Vec::new();
    model.for_each_word(depth, |_, w| {
        masses.push(w.iter().map(|&a| if a == 0 { p0 } else { 1.0 - p0 }).product());
    });
    CylinderMeasure::new(model, depth, masses).unwrap()
}

pub fn tabulate(f: &CylinderFunction, depth: usize) -> Vec<f64> {
    let mut out = Vec::new();
    f.model().for_each_word(depth, |_, w| out.push(f.eval(w)));
    out
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `Σ_{a : ax admissible} w(ax) f(ax)` word by word at the given depth.
pub fn brute_transfer(w: &CylinderFunction, f: &CylinderFunction, depth: usize) -> Vec<f64> {
    let model = w.model();
    let mut out = Vec::new();
    model.for_each_word(depth, |_, x| {
        let mut acc = 0.0;
        for a in 0..model.alphabet_size() {
            let mut ax = vec![a];
            ax.extend_from_slice(x);
            if model.is_admissible(&ax) {
                acc += w.eval(&ax) * f.eval(&ax);
            }
        }
        out.push(acc);
    });
    out
}

/// `Σ_{z : z[n..] = x[n..]} Π_{i<n} p(T^i z) f(z)` word by word at the given depth.
pub fn brute_expectation(p: &CylinderFunction, n: usize, f: &CylinderFunction, depth: usize) -> Vec<f64> {
    let model = p.model();
    let words = model.words(depth);
    words
        .iter()
        .map(|x| {
            words
                .iter()
                .filter(|z| z.symbols()[n..] == x.symbols()[n..])
                .map(|z| {
                    let z = z.symbols();
                    let weight: f64 = (0..n).map(|i| p.eval(&z[i..])).product();
                    weight * f.eval(z)
                })
                .sum()
        })
        .collect()
}

/// Dense matrix of `f ↦ L_w f` on depth-`depth` tabulations, in rank order.
pub fn transfer_matrix(w: &CylinderFunction, depth: usize) -> nalgebra::DMatrix<f64> {
    let model = w.model();
    let n = model.word_count(depth);
    let mut m = nalgebra::DMatrix::zeros(n, n);
    model.for_each_word(depth, |i, x| {
        for a in 0..model.alphabet_size() {
            let mut ax = vec![a];
            ax.extend_from_slice(x);
            if model.is_admissible(&ax) {
                let j = model.rank(&ax[..depth]);
                m[(i, j)] += w.eval(&ax);
            }
        }
    });
    m
}

pub fn spectral_radius(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

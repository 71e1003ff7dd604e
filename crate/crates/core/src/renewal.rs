//! The renewal shift with potential `g = a_k` on `M_k = [1^k 0]`: eigenmeasure
//! masses, the truncated pressure curve and its first-order phase transition.

use serde::Serialize;

use crate::error::{Error, Result};

/// Riemann zeta by Euler–Maclaurin summation, for `s > 1`.
pub fn zeta(s: f64, tol: f64) -> Result<f64> {
    if !(s > 1.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("zeta needs s > 1, got {s}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    // Bernoulli numbers B_2, B_4, B_6, B_8
    const B: [f64; 4] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let correction = |n: f64, j: usize| -> f64 {
        // B_{2j}/(2j)! · s(s+1)…(s+2j−2) · n^{−s−2j+1}
        let mut rising = 1.0;
        let mut fact = 1.0;
        for i in 0..(2 * j - 1) {
            rising *= s + i as f64;
        }
        for i in 1..=(2 * j) {
            fact *= i as f64;
        }
        B[j - 1] / fact * rising * n.powf(-s - 2.0 * j as f64 + 1.0)
    };
    let mut n = 16usize;
    loop {
        let nf = n as f64;
        // first neglected term bounds the remainder
        if correction(nf, 4).abs() < tol || n >= 1 << 20 {
            let mut sum = Neumaier::default();
            for k in (1..n).rev() {
                sum.add((k as f64).powf(-s));
            }
            sum.add(nf.powf(1.0 - s) / (s - 1.0));
            sum.add(0.5 * nf.powf(-s));
            for j in 1..=3 {
                sum.add(correction(nf, j));
            }
            return Ok(sum.value());
        }
        n *= 2;
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Potential values `a_k` and partial sums `s_k` on the cells `M_0, …, M_K`.
#[derive(Debug, Clone)]
pub struct RenewalModel {
    gamma: f64,
    truncation: usize,
    zeta: f64,
    a: Vec<f64>,
    s: Vec<f64>,
}

impl RenewalModel {
    /// `gamma > 2`, cells `M_0 … M_K` with `K = truncation ≥ 1`.
    pub fn new(gamma: f64, truncation: usize) -> Result<Self> {
        if !(gamma > 2.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must exceed 2, got {gamma}")));
        }
        if truncation < 1 {
            return Err(Error::InvalidArgument("truncation level must be at least 1".into()));
        }
        let zeta = zeta(gamma, 1e-15)?;
        let mut a = Vec::with_capacity(truncation + 1);
        a.push(-zeta.ln());
        for k in 1..=truncation {
            a.push(-gamma * (1.0 / k as f64).ln_1p());
        }
        let mut acc = Neumaier::default();
        let s = a
            .iter()
            .map(|&x| {
                acc.add(x);
                acc.value()
            })
            .collect();
        Ok(RenewalModel {
            gamma,
            truncation,
            zeta,
            a,
            s,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `g` on `M_k`.
    pub fn potential(&self) -> &[f64] {
        &self.a
    }

    /// `s_k = a_0 + … + a_k`.
    pub fn partial_sums(&self) -> &[f64] {
        &self.s
    }

    /// `ν(M_k) = e^{s_k}` for `k ≤ K`.
    pub fn eigenmeasure_masses(&self) -> Vec<f64> {
        self.s.iter().map(|s| s.exp()).collect()
    }

    /// Upper bound for `Σ_{k>K} ν(M_k)`.
    pub fn mass_tail_bound(&self) -> f64 {
        tail_integral(self.truncation, self.gamma) / self.zeta
    }

    /// `F(P) = Σ_{k≤K} exp(β s_k − (k+1)P)` and `F'(P)`.
    pub fn renewal_sum(&self, beta: f64, pressure: f64) -> (f64, f64) {
        let mut f = Neumaier::default();
        let mut df = Neumaier::default();
        for (k, &s) in self.s.iter().enumerate() {
            let len = (k + 1) as f64;
            let term = (beta * s - len * pressure).exp();
            f.add(term);
            df.add(-len * term);
        }
        (f.value(), df.value())
    }

    /// Solves `F(P) = 1` for `P ≥ 0`, with `P = 0` when `F(0) ≤ 1`.
    pub fn pressure(&self, beta: f64) -> Result<PressurePoint> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        let (f0, df0) = self.renewal_sum(beta, 0.0);
        let missing = self.sum_tail_bound(beta);
        if f0 <= 1.0 {
            return Ok(PressurePoint {
                beta,
                pressure: 0.0,
                root_residual: 0.0,
                iterations: 0,
                truncation_bound: missing / df0.abs(),
            });
        }
        // F is decreasing and F(ln F(0)) ≤ 1
        let (mut lo, mut hi) = (0.0, f0.ln());
        let mut p = 0.5 * (lo + hi);
        for iteration in 1..=200 {
            let (f, df) = self.renewal_sum(beta, p);
            if f > 1.0 {
                lo = p;
            } else {
                hi = p;
            }
            let newton = p - (f - 1.0) / df;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - p).abs() <= 4.0 * f64::EPSILON * p || hi - lo <= 4.0 * f64::EPSILON * hi {
                let (f, df) = self.renewal_sum(beta, next);
                return Ok(PressurePoint {
                    beta,
                    pressure: next,
                    root_residual: (f - 1.0).abs(),
                    iterations: iteration,
                    truncation_bound: missing / df.abs(),
                });
            }
            p = next;
        }
        let (f, _) = self.renewal_sum(beta, p);
        Err(Error::NotConverged {
            what: "renewal pressure root",
            iterations: 200,
            residual: (f - 1.0).abs(),
            diagnostic: format!("bracket [{lo}, {hi}] at beta {beta}"),
        })
    }

    /// Upper bound for the dropped terms `Σ_{k>K} e^{β s_k}`.
    pub fn sum_tail_bound(&self, beta: f64) -> f64 {
        self.zeta.powf(-beta) * tail_integral(self.truncation, beta * self.gamma)
    }
}

/// `∫_{K+1}^∞ x^{−e} dx`, or infinity when divergent.
fn tail_integral(k: usize, e: f64) -> f64 {
    if e <= 1.0 {
        f64::INFINITY
    } else {
        ((k + 1) as f64).powf(1.0 - e) / (e - 1.0)
    }
}

/// One point of the pressure curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressurePoint {
    pub beta: f64,
    pub pressure: f64,
    pub root_residual: f64,
    pub iterations: usize,
    /// Bound on the effect of the truncation on `P`, to first order.
    pub truncation_bound: f64,
}

/// `P(βg)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureCurve {
    pub points: Vec<PressurePoint>,
}

impl PressureCurve {
    pub fn betas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.beta).collect()
    }

    pub fn pressures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pressure).collect()
    }
}

pub fn pressure_curve(model: &RenewalModel, betas: &[f64]) -> Result<PressureCurve> {
    Ok(PressureCurve {
        points: betas.iter().map(|&b| model.pressure(b)).collect::<Result<_>>()?,
    })
}

/// Spectral radius bracket of the truncated tower matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TowerEstimate {
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// Midpoint of the bracket on `max(0, log ρ)`.
    pub pressure: f64,
    pub iterations: usize,
}

/// Certified bracket on the spectral radius of the truncated tower matrix
/// `(Af)(i) = e^{βa_0} f(0) + e^{βa_{i+1}} f(i+1)`, `(Af)(K) = e^{βa_0} f(0)`.
///
/// Starts from the row-sum bounds and bisects on `t` with the M-matrix test:
/// `t > ρ(A)` exactly when `(tI − A)x = 1` has a positive solution. Stops once
/// the bracket on `max(0, log ρ)` is narrower than `tol`.
pub fn tower_pressure(model: &RenewalModel, beta: f64, tol: f64, max_iter: usize) -> Result<TowerEstimate> {
    let w: Vec<f64> = model.a.iter().map(|a| (beta * a).exp()).collect();
    let k = model.truncation;
    let row_sum = |i: usize| if i < k { w[0] + w[i + 1] } else { w[0] };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..=k {
        lo = lo.min(row_sum(i));
        hi = hi.max(row_sum(i));
    }
    let mut coeffs = vec![(0.0, 0.0); k + 1];
    for iteration in 0..=max_iter {
        let (p_lo, p_hi) = (lo.ln().max(0.0), hi.ln().max(0.0));
        if p_hi - p_lo <= tol {
            return Ok(TowerEstimate {
                rho_lower: lo,
                rho_upper: hi,
                pressure: 0.5 * (p_lo + p_hi),
                iterations: iteration,
            });
        }
        let t = 0.5 * (lo + hi);
        if dominates_radius(&w, t, &mut coeffs) {
            hi = t;
        } else {
            lo = t;
        }
    }
    Err(Error::NotConverged {
        what: "tower bisection",
        iterations: max_iter,
        residual: hi - lo,
        diagnostic: format!("spectral radius bracket [{lo}, {hi}] at beta {beta}"),
    })
}

// Solves (tI − A)x = 1 by writing each x_i = c_i + d_i x_0 from the bottom row up,
// then checks x > 0 componentwise.
fn dominates_radius(w: &[f64], t: f64, coeffs: &mut [(f64, f64)]) -> bool {
    let k = w.len() - 1;
    coeffs[k] = (1.0 / t, w[0] / t);
    for i in (0..k).rev() {
        let (c, d) = coeffs[i + 1];
        coeffs[i] = ((1.0 + w[i + 1] * c) / t, (w[0] + w[i + 1] * d) / t);
    }
    let (c0, d0) = coeffs[0];
    if !(d0 < 1.0) {
        return false;
    }
    let x0 = c0 / (1.0 - d0);
    x0 > 0.0 && coeffs.iter().all(|&(c, d)| c + d * x0 > 0.0)
}

/// Derivatives of `P(βg)` at `β = 1` and the equilibrium data there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTransition {
    /// One-sided differences `(P(1) − P(1−δ))/δ` for each step.
    pub steps: Vec<f64>,
    pub left_differences: Vec<f64>,
    /// Richardson combination of the two one-sided differences.
    pub left_derivative: f64,
    pub right_derivative: f64,
    pub jump: f64,
    /// `∫ g dμ̃` for the absolutely continuous equilibrium `μ̃ = f dν`.
    pub mean_g_mu_tilde: f64,
    /// `g` at the fixed point `111…`, the mean under the other equilibrium.
    pub g_at_fixed_point: f64,
    /// Set when truncation error is not small against the finite differences.
    pub truncation_dominated: bool,
}

const DERIVATIVE_STEPS: [f64; 2] = [1e-2, 1e-3];

/// Left and right derivatives at `β = 1`, compared with `∫ g dμ̃`.
pub fn phase_transition_report(model: &RenewalModel) -> Result<PhaseTransition> {
    let p1 = model.pressure(1.0)?;
    let mut left = Vec::new();
    let mut dominated = false;
    for &d in &DERIVATIVE_STEPS {
        let pl = model.pressure(1.0 - d)?;
        let diff = (p1.pressure - pl.pressure) / d;
        if (pl.truncation_bound + p1.truncation_bound) > 1e-2 * d * diff.abs() {
            dominated = true;
        }
        left.push(diff);
    }
    let (d1, d2) = (DERIVATIVE_STEPS[0], DERIVATIVE_STEPS[1]);
    let left_derivative = (d1 * left[1] - d2 * left[0]) / (d1 - d2);
    let right = model.pressure(1.0 + d2)?;
    let right_derivative = (right.pressure - p1.pressure) / d2;

    // eigenfunction of the β = 1 tower with e^{a_0} f(0) normalized to 1
    let k = model.truncation;
    let mut f = vec![0.0; k + 1];
    f[k] = 1.0;
    for j in (0..k).rev() {
        f[j] = 1.0 + model.a[j + 1].exp() * f[j + 1];
    }
    let mut num = Neumaier::default();
    let mut den = Neumaier::default();
    for j in 0..=k {
        let weight = f[j] * model.s[j].exp();
        num.add(model.a[j] * weight);
        den.add(weight);
    }

    Ok(PhaseTransition {
        steps: DERIVATIVE_STEPS.to_vec(),
        left_differences: left,
        left_derivative,
        right_derivative,
        jump: left_derivative - right_derivative,
        mean_g_mu_tilde: num.value() / den.value(),
        g_at_fixed_point: 0.0,
        truncation_dominated: dominated,
    })
}

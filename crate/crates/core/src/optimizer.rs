//! Peak search over time, optimal fields and grid sweeps.

use std::f64::consts::PI;
use std::fmt::Debug;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chain::{ChainSpec, EncodingState};
use crate::encodings::{singular_values, TransferKernel};
use crate::error::{Error, Result};
use crate::fidelity::FieldDecomposition;
use crate::propagator::Spectral;

pub const COARSE_STEP: f64 = 0.1;
pub const REFINE_TOLERANCE: f64 = 1e-3;
/// Values closer than this count as ties; ties go to the earliest time.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Number of coarse local maxima refined by golden-section search.
pub const REFINED_CANDIDATES: usize = 4;

/// Grid points evaluated from one exactly computed set of mode phases.
const PHASOR_CHUNK: usize = 64;

/// A scalar function of time.
pub trait TimeObjective: Sync {
    fn value(&self, t: f64) -> f64;

    /// Values at `start + i·step`, i = 0..count.
    fn values_on_grid(&self, start: f64, step: f64, count: usize) -> Vec<f64> {
        (0..count)
            .into_par_iter()
            .map(|i| self.value(start + step * i as f64))
            .collect()
    }
}

/// Adapts a closure to [`TimeObjective`].
pub struct FnObjective<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> TimeObjective for FnObjective<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

/// Mode phases e^{−iE_m t} on a uniform time grid. Each chunk starts from
/// exactly evaluated phases and advances by multiplying with e^{−iE_m·step},
/// so rounding drift is bounded by the chunk length.
struct PhaseStepper<'a> {
    energies: &'a [f64],
    re: Vec<f64>,
    im: Vec<f64>,
    step_re: Vec<f64>,
    step_im: Vec<f64>,
}

impl<'a> PhaseStepper<'a> {
    fn new(energies: &'a [f64], t: f64, step: f64) -> Self {
        let (re, im) = energies
            .iter()
            .map(|&e| (-e * t).sin_cos())
            .map(|(s, c)| (c, s))
            .unzip();
        let (step_re, step_im) = energies
            .iter()
            .map(|&e| (-e * step).sin_cos())
            .map(|(s, c)| (c, s))
            .unzip();
        Self {
            energies,
            re,
            im,
            step_re,
            step_im,
        }
    }

    fn advance(&mut self) {
        for m in 0..self.energies.len() {
            let (a, b) = (self.re[m], self.im[m]);
            let (c, d) = (self.step_re[m], self.step_im[m]);
            self.re[m] = a * c - b * d;
            self.im[m] = a * d + b * c;
        }
    }
}

fn chunked_grid<F>(energies: &[f64], start: f64, step: f64, count: usize, eval: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let chunks = count.div_ceil(PHASOR_CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let first = c * PHASOR_CHUNK;
            let last = (first + PHASOR_CHUNK).min(count);
            let mut stepper = PhaseStepper::new(energies, start + step * first as f64, step);
            let mut out = Vec::with_capacity(last - first);
            for i in first..last {
                if i > first {
                    stepper.advance();
                }
                out.push(eval(&stepper.re, &stepper.im));
            }
            out
        })
        .collect()
}

/// Σ_m (a_m + i b_m)(x_m + i y_m)
#[inline]
fn complex_dot(a: &[f64], b: &[f64], x: &[f64], y: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for m in 0..a.len() {
        re += a[m] * x[m] - b[m] * y[m];
        im += a[m] * y[m] + b[m] * x[m];
    }
    Complex64::new(re, im)
}

/// Direct-overlap fidelity of a fixed encoding as a function of time,
/// evaluated in mode space: only the receiver window amplitudes are formed
/// and the tail sum follows from Σ_j |w_j|² = 1 − |α₀|².
pub struct EncodingFidelity {
    energies: Vec<f64>,
    vacuum: f64,
    /// Receiver-window rows (weights on the mode phases) with the sender
    /// amplitude paired to each; a single folded row when α₀ = 0.
    rows: Vec<(Vec<f64>, Vec<f64>, Complex64)>,
    folded: bool,
}

impl EncodingFidelity {
    pub fn new(chain: &ChainSpec, enc: &EncodingState) -> Result<Self> {
        enc.check_chain(chain)?;
        let n = chain.n_sites();
        let r = enc.region_size();
        let sp = Spectral::new(chain);
        let coefficients = sp.project(enc.amplitudes());
        let norm = sp.norm();
        let vacuum = enc.vacuum_amplitude().norm_sqr();
        let receiver_row = |i: usize| -> Vec<Complex64> {
            (1..=n)
                .map(|m| coefficients[m - 1] * (norm * sp.sines.sin(m, n - r + i)))
                .collect()
        };
        let split = |row: Vec<Complex64>| -> (Vec<f64>, Vec<f64>) { row.iter().map(|z| (z.re, z.im)).unzip() };

        let folded = vacuum == 0.0;
        let rows = if r == 0 {
            Vec::new()
        } else if folded {
            // Σ_i α_i* w_{N−r+i} as one row; G is its conjugate
            let mut acc = vec![Complex64::default(); n];
            for &(i, a) in enc.amplitudes() {
                for (slot, z) in acc.iter_mut().zip(receiver_row(i)) {
                    *slot += a.conj() * z;
                }
            }
            let (re, im) = split(acc);
            vec![(re, im, Complex64::new(1.0, 0.0))]
        } else {
            (1..=r)
                .map(|i| {
                    let (re, im) = split(receiver_row(i));
                    (re, im, enc.amplitude(i))
                })
                .collect()
        };
        Ok(Self {
            energies: sp.modes.energies().to_vec(),
            vacuum,
            rows,
            folded,
        })
    }

    fn evaluate(&self, phase_re: &[f64], phase_im: &[f64]) -> f64 {
        if self.rows.is_empty() {
            return 1.0;
        }
        if self.folded {
            let (re, im, _) = &self.rows[0];
            return complex_dot(re, im, phase_re, phase_im).norm();
        }
        let mut g = Complex64::new(self.vacuum, 0.0);
        let mut window = 0.0;
        for (re, im, alpha) in &self.rows {
            let w = complex_dot(re, im, phase_re, phase_im);
            g += alpha * w.conj();
            window += w.norm_sqr();
        }
        let tail = (1.0 - self.vacuum - window).max(0.0);
        (g.norm_sqr() + self.vacuum * tail).sqrt()
    }
}

impl TimeObjective for EncodingFidelity {
    fn value(&self, t: f64) -> f64 {
        let stepper = PhaseStepper::new(&self.energies, t, 0.0);
        self.evaluate(&stepper.re, &stepper.im)
    }

    fn values_on_grid(&self, start: f64, step: f64, count: usize) -> Vec<f64> {
        chunked_grid(&self.energies, start, step, count, |re, im| self.evaluate(re, im))
    }
}

/// σ₁ of the sender→receiver block as a function of time.
pub struct TopSingularValue {
    energies: Vec<f64>,
    kernel: TransferKernel,
}

impl TopSingularValue {
    pub fn new(chain: &ChainSpec, r: usize) -> Result<Self> {
        Ok(Self {
            kernel: TransferKernel::new(chain, r)?,
            energies: chain.modes().energies().to_vec(),
        })
    }

    pub fn region(&self) -> usize {
        self.kernel.region()
    }

    fn evaluate(&self, re: &[f64], im: &[f64]) -> f64 {
        singular_values(self.kernel.block(re, im))[0]
    }
}

impl TimeObjective for TopSingularValue {
    fn value(&self, t: f64) -> f64 {
        let stepper = PhaseStepper::new(&self.energies, t, 0.0);
        self.evaluate(&stepper.re, &stepper.im)
    }

    fn values_on_grid(&self, start: f64, step: f64, count: usize) -> Vec<f64> {
        chunked_grid(&self.energies, start, step, count, |re, im| self.evaluate(re, im))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakResult {
    pub t0: f64,
    pub fidelity: f64,
    pub window: (f64, f64),
    pub coarse_step: f64,
    pub refined_tolerance: f64,
}

/// Golden-section maximization on [lo, hi]; returns the best point seen.
fn golden_max(objective: &dyn TimeObjective, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = objective.value(c);
    let mut fd = objective.value(d);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective.value(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective.value(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn better(candidate: (f64, f64), incumbent: (f64, f64)) -> bool {
    let (t, f) = candidate;
    let (t_best, f_best) = incumbent;
    f > f_best + TIE_TOLERANCE || ((f - f_best).abs() <= TIE_TOLERANCE && t < t_best)
}

/// Window-global maximum of `objective` on [lo, hi]: a scan at
/// [`COARSE_STEP`] followed by golden-section refinement of the brackets
/// (two grid points either side) around the best coarse local maxima.
pub fn find_peak(objective: &dyn TimeObjective, window: (f64, f64)) -> Result<PeakResult> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let steps = ((hi - lo) / COARSE_STEP + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|i| lo + COARSE_STEP * i as f64).collect();
    let mut values = objective.values_on_grid(lo, COARSE_STEP, steps + 1);
    if hi - times[steps] > 1e-9 {
        times.push(hi);
        values.push(objective.value(hi));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("objective is not finite at t = {}", times[i])));
    }

    let last = times.len() - 1;
    let mut peaks: Vec<usize> = (0..=last)
        .filter(|&i| (i == 0 || values[i] >= values[i - 1]) && (i == last || values[i] >= values[i + 1]))
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut best = (times[0], values[0]);
    for (i, &v) in values.iter().enumerate() {
        if better((times[i], v), best) {
            best = (times[i], v);
        }
    }
    for &i in peaks.iter().take(REFINED_CANDIDATES) {
        let a = times[i.saturating_sub(2)];
        let b = times[(i + 2).min(last)];
        let refined = golden_max(objective, a, b, REFINE_TOLERANCE);
        if better(refined, best) {
            best = refined;
        }
    }
    Ok(PeakResult {
        t0: best.0,
        fidelity: best.1,
        window,
        coarse_step: COARSE_STEP,
        refined_tolerance: REFINE_TOLERANCE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptimum {
    /// Smallest non-negative field maximizing Re[e^{2iht} L(t)].
    pub h_star: f64,
    /// Period π/t of the fidelity in h (infinite at t = 0).
    pub period: f64,
    /// max_h Re[e^{2iht} L(t)] = |L|; the field term itself peaks at
    /// |L|·sin²θ/2.
    pub attains: f64,
}

pub fn optimal_field(decomp: &FieldDecomposition) -> FieldOptimum {
    let l = decomp.l();
    let t = decomp.time();
    let period = if t != 0.0 { PI / t.abs() } else { f64::INFINITY };
    if l.norm() == 0.0 || t == 0.0 {
        return FieldOptimum {
            h_star: 0.0,
            period,
            attains: l.norm(),
        };
    }
    // e^{2iht} must rotate arg L onto the positive real axis
    let angle = (-l.arg()).rem_euclid(2.0 * PI);
    let mut h_star = angle / (2.0 * t);
    if t < 0.0 {
        h_star = h_star.rem_euclid(period);
    }
    if h_star >= period {
        h_star -= period;
    }
    FieldOptimum {
        h_star,
        period,
        attains: l.norm(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroFieldBehavior {
    MaxAtZeroField,
    MinAtZeroField,
    Indeterminate,
}

/// Whether h = 0 maximizes the ξ_k fidelity at the Ψ_k arrival peak:
/// k even needs N ≡ 3 (mod 4), k odd needs N ≡ 1 (mod 4). Even N gives an
/// imaginary L, so the field term vanishes at h = 0.
pub fn h0_parity_prediction(n: usize, k: usize) -> ZeroFieldBehavior {
    if n.is_multiple_of(2) {
        return ZeroFieldBehavior::Indeterminate;
    }
    let wanted = if k.is_multiple_of(2) { 3 } else { 1 };
    if n % 4 == wanted {
        ZeroFieldBehavior::MaxAtZeroField
    } else {
        ZeroFieldBehavior::MinAtZeroField
    }
}

/// Evaluates `objective` at every grid point, keeping grid order. Errors
/// carry the index and coordinates of the failing point.
pub fn sweep<P, R, F>(grid: &[P], objective: F) -> Result<Vec<R>>
where
    P: Debug + Sync,
    R: Send,
    F: Fn(&P) -> Result<R> + Sync,
{
    grid.par_iter()
        .enumerate()
        .map(|(index, point)| {
            objective(point).map_err(|source| Error::Sweep {
                index,
                coords: format!("{point:?}"),
                source: Box::new(source),
            })
        })
        .collect()
}

//! Single-excitation transition amplitudes
//!
//! f_{s,j}(t) = 2/(N+1) Σ_m sin(q_m s) sin(q_m j) e^{−i E_m t}
//!
//! evaluated by direct summation for isolated (s, j) queries and by a
//! type-I discrete sine transform (through a complex FFT of length 2(N+1))
//! whenever a whole row is needed. A dense eigendecomposition of the
//! tridiagonal single-excitation Hamiltonian is kept as an independent
//! verification path.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::chain::{ChainSpec, EncodingState, ModeTable, PropagatedState};
use crate::error::{Error, Result};

/// Largest chain accepted by [`dense_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 4096;

/// Bound on the component that the parity lemma says must vanish.
pub const PARITY_TOLERANCE: f64 = 1e-10;

/// sin(π l / (N+1)) for l = 0..2(N+1). Every sin(q_m s) is an entry of this
/// table since m·s only matters modulo 2(N+1).
#[derive(Debug)]
pub struct SineTable {
    period: usize,
    values: Vec<f64>,
}

impl SineTable {
    fn build(n: usize) -> Self {
        let period = 2 * (n + 1);
        let denom = (n + 1) as f64;
        let values = (0..period)
            .map(|l| (std::f64::consts::PI * l as f64 / denom).sin())
            .collect();
        Self { period, values }
    }

    /// Shared table for chains of `n` sites, built on first use.
    pub fn for_sites(n: usize) -> Arc<SineTable> {
        static CACHE: OnceLock<RwLock<HashMap<usize, Arc<SineTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(table) = cache.read().unwrap().get(&n) {
            return Arc::clone(table);
        }
        let mut guard = cache.write().unwrap();
        Arc::clone(guard.entry(n).or_insert_with(|| Arc::new(Self::build(n))))
    }

    /// sin(q_m · s) with 1-based mode index `m`.
    #[inline]
    pub fn sin(&self, m: usize, s: usize) -> f64 {
        self.values[(m * s) % self.period]
    }
}

type PlanCache = HashMap<usize, Arc<dyn Fft<f64>>>;

/// DST-I of length N, y_j = Σ_m v_m sin(π m j/(N+1)), computed from the
/// odd extension of v through a forward FFT of length 2(N+1).
pub(crate) struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub(crate) fn for_sites(n: usize) -> Self {
        static PLANS: OnceLock<RwLock<PlanCache>> = OnceLock::new();
        let plans = PLANS.get_or_init(Default::default);
        let len = 2 * (n + 1);
        if let Some(fft) = plans.read().unwrap().get(&len) {
            return Self {
                n,
                fft: Arc::clone(fft),
            };
        }
        let mut guard = plans.write().unwrap();
        let fft = guard
            .entry(len)
            .or_insert_with(|| FftPlanner::new().plan_fft_forward(len));
        Self {
            n,
            fft: Arc::clone(fft),
        }
    }

    /// `input[m-1]` holds v_m; returns y_j at index j-1.
    pub(crate) fn apply(&self, input: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        debug_assert_eq!(input.len(), n);
        let len = 2 * (n + 1);
        let mut buf = vec![Complex64::default(); len];
        for (m, &v) in input.iter().enumerate() {
            buf[m + 1] = v;
            buf[len - 1 - m] = -v;
        }
        self.fft.process(&mut buf);
        // X_j = −2i y_j
        buf[1..=n]
            .iter()
            .map(|x| Complex64::new(-0.5 * x.im, 0.5 * x.re))
            .collect()
    }
}

/// Mode-space view of a chain shared by the fast evaluation paths.
pub(crate) struct Spectral {
    pub(crate) chain: ChainSpec,
    pub(crate) modes: ModeTable,
    pub(crate) sines: Arc<SineTable>,
}

impl Spectral {
    pub(crate) fn new(chain: &ChainSpec) -> Self {
        Self {
            chain: *chain,
            modes: chain.modes(),
            sines: SineTable::for_sites(chain.n_sites()),
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.chain.n_sites()
    }

    pub(crate) fn norm(&self) -> f64 {
        2.0 / (self.n() + 1) as f64
    }

    /// e^{−i E_m t}
    pub(crate) fn phases(&self, t: f64) -> Vec<Complex64> {
        self.modes
            .energies()
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * t))
            .collect()
    }

    /// e^{2iJt cos q_m}: the field-free phases of the reduced amplitudes.
    pub(crate) fn reduced_phases(&self, t: f64) -> Vec<Complex64> {
        let jt = 2.0 * self.chain.coupling() * t;
        self.modes
            .cosines()
            .iter()
            .map(|&c| Complex64::from_polar(1.0, jt * c))
            .collect()
    }

    /// c_m = Σ_s β_s sin(q_m s) for a sparse list of sender weights.
    pub(crate) fn project(&self, weights: &[(usize, Complex64)]) -> Vec<Complex64> {
        (1..=self.n())
            .map(|m| weights.iter().map(|&(s, b)| b * self.sines.sin(m, s)).sum())
            .collect()
    }

    /// Σ_s β_s g_{s,j} for all j, where g has mode phases `phases`.
    pub(crate) fn synthesize(&self, coefficients: &[Complex64], phases: &[Complex64]) -> Vec<Complex64> {
        let v: Vec<Complex64> = coefficients.iter().zip(phases).map(|(c, p)| c * p).collect();
        let norm = self.norm();
        SineTransform::for_sites(self.n())
            .apply(&v)
            .into_iter()
            .map(|y| y * norm)
            .collect()
    }

    fn direct(&self, s: usize, j: usize, phases: impl Iterator<Item = Complex64>) -> Complex64 {
        let sum: Complex64 = phases
            .enumerate()
            .map(|(i, p)| p * (self.sines.sin(i + 1, s) * self.sines.sin(i + 1, j)))
            .sum();
        sum * self.norm()
    }
}

/// f_{s,j}(t) by direct summation over modes.
pub fn amplitude(chain: &ChainSpec, s: usize, j: usize, t: f64) -> Result<Complex64> {
    chain.check_site(s)?;
    chain.check_site(j)?;
    let sp = Spectral::new(chain);
    let phases = sp.modes.energies().iter().map(|&e| Complex64::from_polar(1.0, -e * t));
    Ok(sp.direct(s, j, phases))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityClass {
    PurelyReal,
    PurelyImaginary,
}

impl ParityClass {
    /// Real when s and j share parity, imaginary otherwise.
    pub fn of(s: usize, j: usize) -> Self {
        if (s + j).is_multiple_of(2) {
            ParityClass::PurelyReal
        } else {
            ParityClass::PurelyImaginary
        }
    }
}

/// Field-free amplitude f̃_{s,j}(t), with f = e^{−2iht} f̃.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedAmplitude {
    pub parity_class: ParityClass,
    /// Real part for `PurelyReal`, imaginary part for `PurelyImaginary`.
    pub value: f64,
    /// Magnitude of the component that vanishes by parity.
    pub discarded: f64,
    pub s: usize,
    pub j: usize,
    pub t: f64,
}

impl ReducedAmplitude {
    pub fn as_complex(&self) -> Complex64 {
        match self.parity_class {
            ParityClass::PurelyReal => Complex64::new(self.value, 0.0),
            ParityClass::PurelyImaginary => Complex64::new(0.0, self.value),
        }
    }
}

/// f̃_{s,j}(t) tagged by parity class. Fails with
/// [`Error::ParityViolation`] when the component that must vanish exceeds
/// [`PARITY_TOLERANCE`].
pub fn reduced_amplitude(chain: &ChainSpec, s: usize, j: usize, t: f64) -> Result<ReducedAmplitude> {
    chain.check_site(s)?;
    chain.check_site(j)?;
    let sp = Spectral::new(chain);
    let jt = 2.0 * chain.coupling() * t;
    let phases = sp.modes.cosines().iter().map(|&c| Complex64::from_polar(1.0, jt * c));
    let z = sp.direct(s, j, phases);
    let parity_class = ParityClass::of(s, j);
    let (value, discarded) = match parity_class {
        ParityClass::PurelyReal => (z.re, z.im.abs()),
        ParityClass::PurelyImaginary => (z.im, z.re.abs()),
    };
    if discarded.is_nan() || discarded >= PARITY_TOLERANCE {
        return Err(Error::ParityViolation { s, j, t, discarded });
    }
    Ok(ReducedAmplitude {
        parity_class,
        value,
        discarded,
        s,
        j,
        t,
    })
}

/// [f_{s,1}(t), …, f_{s,N}(t)] through the sine transform.
pub fn amplitude_row(chain: &ChainSpec, s: usize, t: f64) -> Result<Vec<Complex64>> {
    chain.check_site(s)?;
    let sp = Spectral::new(chain);
    let coefficients: Vec<Complex64> = (1..=sp.n()).map(|m| Complex64::new(sp.sines.sin(m, s), 0.0)).collect();
    Ok(sp.synthesize(&coefficients, &sp.phases(t)))
}

/// f_{s,j}(t) for a list of targets. Direct sums when fewer than √N values
/// are requested, otherwise one row transform.
pub fn amplitudes_at(chain: &ChainSpec, s: usize, targets: &[usize], t: f64) -> Result<Vec<Complex64>> {
    chain.check_site(s)?;
    for &j in targets {
        chain.check_site(j)?;
    }
    let n = chain.n_sites();
    if (targets.len() as f64) < (n as f64).sqrt() {
        let sp = Spectral::new(chain);
        let phases = sp.phases(t);
        Ok(targets
            .iter()
            .map(|&j| sp.direct(s, j, phases.iter().copied()))
            .collect())
    } else {
        let row = amplitude_row(chain, s, t)?;
        Ok(targets.iter().map(|&j| row[j - 1]).collect())
    }
}

/// Evolves `enc` to time `t`: w_j(t) = Σ_s α_s f_{s,j}(t), α₀ unchanged.
pub fn propagate(chain: &ChainSpec, enc: &EncodingState, t: f64) -> Result<PropagatedState> {
    enc.check_chain(chain)?;
    let n = chain.n_sites();
    let site_amplitudes = if enc.amplitudes().is_empty() {
        vec![Complex64::default(); n]
    } else {
        let sp = Spectral::new(chain);
        let coefficients = sp.project(enc.amplitudes());
        sp.synthesize(&coefficients, &sp.phases(t))
    };
    Ok(PropagatedState {
        vacuum_amplitude: enc.vacuum_amplitude(),
        site_amplitudes,
        time: t,
    })
}

/// Propagation by numerical diagonalization of the N×N single-excitation
/// block (diagonal 2h, off-diagonals −J). Shares nothing with the
/// closed-form path beyond the chain parameters.
pub fn dense_oracle(chain: &ChainSpec, enc: &EncodingState, t: f64) -> Result<PropagatedState> {
    enc.check_chain(chain)?;
    let n = chain.n_sites();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    let mut hamiltonian = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        hamiltonian[(i, i)] = 2.0 * chain.field();
        if i + 1 < n {
            hamiltonian[(i, i + 1)] = -chain.coupling();
            hamiltonian[(i + 1, i)] = -chain.coupling();
        }
    }
    let eigen = SymmetricEigen::new(hamiltonian);

    let mut initial = DVector::<Complex64>::zeros(n);
    for &(s, a) in enc.amplitudes() {
        initial[s - 1] = a;
    }
    let vectors = eigen.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let mut coefficients = vectors.adjoint() * initial;
    for (c, &lambda) in coefficients.iter_mut().zip(eigen.eigenvalues.iter()) {
        *c *= Complex64::from_polar(1.0, -lambda * t);
    }
    let evolved = vectors * coefficients;
    Ok(PropagatedState {
        vacuum_amplitude: enc.vacuum_amplitude(),
        site_amplitudes: evolved.iter().copied().collect(),
        time: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::make_encoding;
    use crate::encodings::make_psi_k;

    fn chain(n: usize, h: f64) -> ChainSpec {
        ChainSpec::new(n, 1.0, h).unwrap()
    }

    fn site_state(n: usize, s: usize) -> EncodingState {
        make_encoding(n, Complex64::default(), [(s, Complex64::new(1.0, 0.0))]).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn identity_at_time_zero() {
        let c = chain(5, 0.4);
        assert!(close(
            amplitude(&c, 2, 2, 0.0).unwrap(),
            Complex64::new(1.0, 0.0),
            1e-14
        ));
        assert!(amplitude(&c, 2, 3, 0.0).unwrap().norm() < 1e-14);
        let row = amplitude_row(&chain(3, 0.0), 1, 0.0).unwrap();
        assert!(close(row[0], Complex64::new(1.0, 0.0), 1e-14));
        assert!(row[1].norm() < 1e-14 && row[2].norm() < 1e-14);
    }

    #[test]
    fn two_site_chain_closed_form() {
        // H = [[0, −1], [−1, 0]]: e^{−iHt} = cos t + i sin t σx.
        let c = chain(2, 0.0);
        for &t in &[0.3, 1.0, 2.7, 10.0] {
            let f = amplitude(&c, 1, 2, t).unwrap();
            assert!(close(f, Complex64::new(0.0, t.sin()), 1e-14), "{t}");
            let dense = dense_oracle(&c, &site_state(2, 1), t).unwrap();
            assert!(close(dense.site(1), Complex64::new(t.cos(), 0.0), 1e-12));
            assert!(close(dense.site(2), Complex64::new(0.0, t.sin()), 1e-12));
        }
    }

    #[test]
    fn single_site_chain_picks_up_field_phase() {
        let c = chain(1, 0.35);
        let t = 1.7;
        let dense = dense_oracle(&c, &site_state(1, 1), t).unwrap();
        let expected = Complex64::from_polar(1.0, -2.0 * 0.35 * t);
        assert!(close(dense.site(1), expected, 1e-13));
        assert!(close(amplitude(&c, 1, 1, t).unwrap(), expected, 1e-13));
    }

    #[test]
    fn five_site_amplitude_matches_dense() {
        let c = chain(5, 0.0);
        let dense = dense_oracle(&c, &site_state(5, 1), 1.3).unwrap();
        let f = amplitude(&c, 1, 4, 1.3).unwrap();
        assert!(close(f, dense.site(4), 1e-10));
    }

    #[test]
    fn reduced_amplitude_parity_examples() {
        let c = chain(7, 0.9);
        let r = reduced_amplitude(&c, 1, 1, 0.0).unwrap();
        assert_eq!(r.parity_class, ParityClass::PurelyReal);
        assert!((r.value - 1.0).abs() < 1e-14);

        for &(n, s, j, t, class) in &[
            (4usize, 2usize, 3usize, 0.7, ParityClass::PurelyImaginary),
            (5, 1, 3, 2.0, ParityClass::PurelyReal),
        ] {
            let h = 0.45;
            let c = chain(n, h);
            let r = reduced_amplitude(&c, s, j, t).unwrap();
            assert_eq!(r.parity_class, class);
            let dense = dense_oracle(&c, &site_state(n, s), t).unwrap();
            let expected = dense.site(j) * Complex64::from_polar(1.0, 2.0 * h * t);
            assert!(close(r.as_complex(), expected, 1e-10));
        }
    }

    #[test]
    fn out_of_range_sites_rejected() {
        let c = chain(4, 0.0);
        assert!(amplitude(&c, 0, 1, 1.0).is_err());
        assert!(amplitude(&c, 1, 5, 1.0).is_err());
        assert!(reduced_amplitude(&c, 5, 1, 1.0).is_err());
        assert!(amplitude_row(&c, 5, 1.0).is_err());
        assert!(amplitudes_at(&c, 1, &[2, 9], 1.0).is_err());
    }

    #[test]
    fn row_matches_direct_sums() {
        let c = chain(100, 0.0);
        let row = amplitude_row(&c, 1, 51.75).unwrap();
        for j in 1..=100 {
            assert!(close(row[j - 1], amplitude(&c, 1, j, 51.75).unwrap(), 1e-10));
        }
        let norm: f64 = amplitude_row(&chain(5, 0.0), 3, 1.0)
            .unwrap()
            .iter()
            .map(|z| z.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_at_uses_both_paths_consistently() {
        let c = chain(64, 0.2);
        let few = amplitudes_at(&c, 3, &[10], 7.5).unwrap();
        let many: Vec<usize> = (1..=64).collect();
        let all = amplitudes_at(&c, 3, &many, 7.5).unwrap();
        assert!(close(few[0], all[9], 1e-12));
    }

    #[test]
    fn vacuum_is_stationary() {
        let c = chain(9, 0.8);
        let vac = EncodingState::ground(9).unwrap();
        let out = propagate(&c, &vac, 12.0).unwrap();
        assert_eq!(out.vacuum_amplitude, Complex64::new(1.0, 0.0));
        assert!(out.site_amplitudes.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn propagate_identity_at_zero_and_dense_agreement() {
        let c = chain(100, 0.0);
        let psi = make_psi_k(&c, 2).unwrap();
        let out = propagate(&c, &psi, 0.0).unwrap();
        for j in 1..=100 {
            assert!(close(out.site(j), psi.amplitude(j), 1e-13));
        }

        let c6 = chain(6, 0.3);
        let psi6 = make_psi_k(&c6, 2).unwrap();
        let fast = propagate(&c6, &psi6, 2.5).unwrap();
        let dense = dense_oracle(&c6, &psi6, 2.5).unwrap();
        for j in 1..=6 {
            assert!(close(fast.site(j), dense.site(j), 1e-10));
        }

        let c8 = chain(8, -0.2);
        let psi3 = make_psi_k(&c8, 3).unwrap();
        let fast = propagate(&c8, &psi3, 3.1).unwrap();
        let dense = dense_oracle(&c8, &psi3, 3.1).unwrap();
        for j in 1..=8 {
            assert!(close(fast.site(j), dense.site(j), 1e-9));
        }
    }

    #[test]
    fn dense_oracle_guard() {
        let c = chain(DENSE_ORACLE_LIMIT + 1, 0.0);
        let enc = site_state(DENSE_ORACLE_LIMIT + 1, 1);
        assert!(matches!(dense_oracle(&c, &enc, 1.0), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn mismatched_chain_rejected() {
        let enc = site_state(5, 1);
        assert!(propagate(&chain(6, 0.0), &enc, 1.0).is_err());
    }

    #[test]
    fn sine_table_is_shared() {
        let a = SineTable::for_sites(33);
        let b = SineTable::for_sites(33);
        assert!(Arc::ptr_eq(&a, &b));
        let q = std::f64::consts::PI * 5.0 / 34.0;
        assert!((a.sin(5, 7) - (q * 7.0).sin()).abs() < 1e-15);
    }
}

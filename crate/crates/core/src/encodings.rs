//! Encoding families and the sender→receiver transfer block.
//!
//! * Ψ_k: alternating superposition over the odd sites 1, 3, …, 2k−1.
//! * ξ_k: cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|Ψ_k⟩.
//! * Φ_r: top right singular vector of the r×r block of the propagator
//!   mapping the first r sites onto the last r sites. Its singular value σ₁
//!   is the post-decoding fidelity √C_B.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::chain::{ChainSpec, EncodingState};
use crate::error::{Error, Result};
use crate::propagator::{SineTable, Spectral};

/// Below this gap σ₁ is treated as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiParameters {
    theta: f64,
    phi: f64,
    k: usize,
}

impl XiParameters {
    /// θ ∈ [0, π], φ ∈ [0, 2π), k ≥ 1.
    pub fn new(theta: f64, phi: f64, k: usize) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid("theta", format!("{theta} is outside [0, π]")));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::invalid("phi", format!("{phi} is outside [0, 2π)")));
        }
        if k < 1 {
            return Err(Error::invalid("k", "k must be at least 1"));
        }
        Ok(Self { theta, phi, k })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

pub(crate) fn check_family(chain: &ChainSpec, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::invalid("k", "k must be at least 1"));
    }
    let needed = 2 * k - 1;
    if needed > chain.n_sites() {
        return Err(Error::ChainTooShort {
            needed,
            n: chain.n_sites(),
        });
    }
    Ok(())
}

/// Amplitudes of Ψ_k as (site, value) pairs.
pub(crate) fn psi_k_amplitudes(k: usize) -> Vec<(usize, Complex64)> {
    let a = (1.0 / k as f64).sqrt();
    (0..k)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (2 * m + 1, Complex64::new(sign * a, 0.0))
        })
        .collect()
}

pub fn make_psi_k(chain: &ChainSpec, k: usize) -> Result<EncodingState> {
    check_family(chain, k)?;
    EncodingState::new(chain.n_sites(), Complex64::default(), psi_k_amplitudes(k))
}

pub fn make_xi_k(chain: &ChainSpec, params: &XiParameters) -> Result<EncodingState> {
    check_family(chain, params.k)?;
    let half = params.theta / 2.0;
    let weight = Complex64::from_polar(half.sin(), params.phi);
    let amplitudes: Vec<(usize, Complex64)> = psi_k_amplitudes(params.k)
        .into_iter()
        .map(|(s, a)| (s, a * weight))
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .collect();
    EncodingState::new(chain.n_sites(), Complex64::new(half.cos(), 0.0), amplitudes)
}

/// Mode-space weights for the r×r sender→receiver block.
///
/// Receiver site N−r+b equals N+1−b' with b' = r+1−b, and
/// sin(q_m (N+1−b')) = (−1)^{m+1} sin(q_m b'), so
/// K[b][a] = Σ_m w_{a,b'}(m) e^{−iE_m t} with w symmetric in (a, b').
/// Only the pairs a ≤ b' are stored.
pub(crate) struct TransferKernel {
    r: usize,
    n: usize,
    /// Row-major, one row of N weights per stored pair.
    weights: Vec<f64>,
}

impl TransferKernel {
    pub(crate) fn new(chain: &ChainSpec, r: usize) -> Result<Self> {
        check_region(chain, r)?;
        let n = chain.n_sites();
        let sines = SineTable::for_sites(n);
        let norm = 2.0 / (n + 1) as f64;
        let mut weights = Vec::with_capacity(r * (r + 1) / 2 * n);
        for a in 1..=r {
            for b in a..=r {
                weights.extend((1..=n).map(|m| {
                    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                    sign * norm * sines.sin(m, a) * sines.sin(m, b)
                }));
            }
        }
        Ok(Self { r, n, weights })
    }

    pub(crate) fn region(&self) -> usize {
        self.r
    }

    fn pair_index(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        // rows for lo' < lo: Σ (r − lo' + 1)
        let before = (lo - 1) * (2 * self.r + 2 - lo) / 2;
        before + (hi - lo)
    }

    /// Block for mode phases split into real and imaginary parts.
    pub(crate) fn block(&self, phase_re: &[f64], phase_im: &[f64]) -> DMatrix<Complex64> {
        let n = self.n;
        let pairs: Vec<Complex64> = self
            .weights
            .chunks_exact(n)
            .map(|row| {
                let mut re = 0.0;
                let mut im = 0.0;
                for ((w, pr), pi) in row.iter().zip(phase_re).zip(phase_im) {
                    re += w * pr;
                    im += w * pi;
                }
                Complex64::new(re, im)
            })
            .collect();
        let r = self.r;
        DMatrix::from_fn(r, r, |b, a| pairs[self.pair_index(a + 1, r - b)])
    }
}

fn check_region(chain: &ChainSpec, r: usize) -> Result<()> {
    if r < 1 || r > chain.n_sites() {
        return Err(Error::RegionOutOfRange { r, n: chain.n_sites() });
    }
    Ok(())
}

/// K with K[b][a] = f_{a, N−r+b}(t) for a, b ∈ 1..=r (stored 0-based).
/// C_B of an encoding vector v over sites 1..r is ‖K v‖².
pub fn transfer_block(chain: &ChainSpec, r: usize, t: f64) -> Result<DMatrix<Complex64>> {
    let kernel = TransferKernel::new(chain, r)?;
    let phases = Spectral::new(chain).phases(t);
    let re: Vec<f64> = phases.iter().map(|p| p.re).collect();
    let im: Vec<f64> = phases.iter().map(|p| p.im).collect();
    Ok(kernel.block(&re, &im))
}

/// Singular values of a block in descending order.
pub(crate) fn singular_values(block: DMatrix<Complex64>) -> Vec<f64> {
    let mut values: Vec<f64> = block.singular_values().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimalEncodingResult {
    pub region_size: usize,
    pub time: f64,
    /// σ₁ = F_r = √C_B(t).
    pub top_singular_value: f64,
    /// Amplitudes over sites 1..=r, unit norm, largest component real
    /// and positive.
    pub encoding: Vec<Complex64>,
    /// σ₁ − σ₂ (σ₂ = 0 when r = 1).
    pub spectral_gap: f64,
}

impl OptimalEncodingResult {
    pub fn capture_probability(&self) -> f64 {
        self.top_singular_value * self.top_singular_value
    }

    pub fn to_encoding_state(&self, n_sites: usize) -> Result<EncodingState> {
        EncodingState::new(
            n_sites,
            Complex64::default(),
            self.encoding
                .iter()
                .enumerate()
                .filter(|(_, a)| a.norm_sqr() > 0.0)
                .map(|(i, &a)| (i + 1, a)),
        )
    }
}

/// Reference used to pick a vector inside a degenerate top subspace.
fn degenerate_reference(r: usize) -> Vec<Complex64> {
    if (r + 1).is_multiple_of(2) {
        let mut v = vec![Complex64::default(); r];
        for (s, a) in psi_k_amplitudes(r.div_ceil(2)) {
            v[s - 1] = a;
        }
        v
    } else {
        vec![Complex64::new(1.0 / (r as f64).sqrt(), 0.0); r]
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        v[best] = Complex64::new(v[best].norm(), 0.0);
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
    norm
}

/// Top right singular vector of the transfer block at time t.
pub fn optimal_encoding(chain: &ChainSpec, r: usize, t: f64) -> Result<OptimalEncodingResult> {
    let block = transfer_block(chain, r, t)?;
    let svd = block.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    // rows of V^H are conjugated right singular vectors
    let right = |i: usize| -> Vec<Complex64> { v_t.row(order[i]).iter().map(|z| z.conj()).collect() };

    let top = sigma[0];
    let second = sigma.get(1).copied().unwrap_or(0.0);
    let gap = top - second;

    let mut encoding = right(0);
    if gap < DEGENERACY_GAP {
        let reference = degenerate_reference(r);
        let mut projected = vec![Complex64::default(); r];
        for i in (0..r).take_while(|&i| top - sigma[i] < DEGENERACY_GAP) {
            let v = right(i);
            let overlap: Complex64 = v.iter().zip(&reference).map(|(a, b)| a.conj() * b).sum();
            for (p, a) in projected.iter_mut().zip(&v) {
                *p += a * overlap;
            }
        }
        if normalize(&mut projected) > 1e-12 {
            encoding = projected;
        }
    }
    normalize(&mut encoding);
    fix_phase(&mut encoding);

    Ok(OptimalEncodingResult {
        region_size: r,
        time: t,
        top_singular_value: top,
        encoding,
        spectral_gap: gap,
    })
}

/// Euclidean distance between the optimal vector, rotated by the global
/// phase that maximizes Re⟨ψ|e^{iφ}Φ⟩, and the amplitudes of `psi`.
pub fn encoding_distance(opt: &OptimalEncodingResult, psi: &EncodingState) -> Result<f64> {
    let r = opt.region_size;
    if psi.vacuum_amplitude().norm() > 1e-12 {
        return Err(Error::invalid(
            "encoding",
            "distance is defined for single-excitation encodings only",
        ));
    }
    if let Some(&(site, _)) = psi.amplitudes().iter().find(|&&(s, _)| s > r) {
        return Err(Error::SupportMismatch { site, r });
    }
    let mut target = vec![Complex64::default(); r];
    for &(s, a) in psi.amplitudes() {
        target[s - 1] = a;
    }
    let overlap: Complex64 = target.iter().zip(&opt.encoding).map(|(p, f)| p.conj() * f).sum();
    let align = if overlap.norm() > 0.0 {
        overlap.conj() / overlap.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    Ok(opt
        .encoding
        .iter()
        .zip(&target)
        .map(|(f, p)| (f * align - p).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::amplitude;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn chain(n: usize, h: f64) -> ChainSpec {
        ChainSpec::new(n, 1.0, h).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn psi_family_members() {
        let psi2 = make_psi_k(&chain(100, 0.0), 2).unwrap();
        assert_eq!(psi2.amplitudes(), &[(1, re(FRAC_1_SQRT_2)), (3, re(-FRAC_1_SQRT_2))]);
        let psi1 = make_psi_k(&chain(10, 0.0), 1).unwrap();
        assert_eq!(psi1.amplitudes(), &[(1, re(1.0))]);
        let psi3 = make_psi_k(&chain(100, 0.0), 3).unwrap();
        let a = 1.0 / 3f64.sqrt();
        for (&(site, got), (want_site, want)) in psi3.amplitudes().iter().zip([(1, a), (3, -a), (5, a)]) {
            assert_eq!(site, want_site);
            assert!((got - re(want)).norm() < 1e-15);
        }
        assert_eq!(psi3.region_size(), 5);
        assert!(matches!(
            make_psi_k(&chain(4, 0.0), 3),
            Err(Error::ChainTooShort { needed: 5, n: 4 })
        ));
    }

    #[test]
    fn xi_family_members() {
        let c = chain(20, 0.0);
        let vac = make_xi_k(&c, &XiParameters::new(0.0, 1.0, 3).unwrap()).unwrap();
        assert_eq!(vac.region_size(), 0);
        assert_eq!(vac.vacuum_amplitude(), re(1.0));

        let full = make_xi_k(&c, &XiParameters::new(PI, 0.0, 2).unwrap()).unwrap();
        let psi2 = make_psi_k(&c, 2).unwrap();
        assert!(full.vacuum_amplitude().norm() < 1e-16);
        for s in 1..=3 {
            assert!((full.amplitude(s) - psi2.amplitude(s)).norm() < 1e-15);
        }

        let half = make_xi_k(&c, &XiParameters::new(PI / 2.0, 0.0, 2).unwrap()).unwrap();
        assert!((half.vacuum_amplitude() - re(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((half.amplitude(1) - re(0.5)).norm() < 1e-15);
        assert!((half.amplitude(3) - re(-0.5)).norm() < 1e-15);
    }

    #[test]
    fn xi_parameter_ranges() {
        assert!(XiParameters::new(-0.1, 0.0, 1).is_err());
        assert!(XiParameters::new(3.2, 0.0, 1).is_err());
        assert!(XiParameters::new(1.0, 2.0 * PI, 1).is_err());
        assert!(XiParameters::new(1.0, 0.0, 0).is_err());
        assert!(XiParameters::new(PI, 6.2, 4).is_ok());
    }

    #[test]
    fn kernel_pair_indexing_covers_every_pair() {
        let kernel = TransferKernel::new(&chain(12, 0.0), 5).unwrap();
        let mut seen = vec![false; 15];
        for a in 1..=5 {
            for b in a..=5 {
                let i = kernel.pair_index(a, b);
                assert_eq!(i, kernel.pair_index(b, a));
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
        assert!(seen.into_iter().all(|x| x));
    }

    #[test]
    fn block_is_identity_when_regions_coincide() {
        let k = transfer_block(&chain(4, 0.3), 4, 0.0).unwrap();
        for b in 0..4 {
            for a in 0..4 {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((k[(b, a)] - re(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn block_entries_are_propagator_amplitudes() {
        let c = chain(4, 0.6);
        let k = transfer_block(&c, 2, 1.1).unwrap();
        for a in 1..=2 {
            for b in 1..=2 {
                let f = amplitude(&c, a, 4 - 2 + b, 1.1).unwrap();
                assert!((k[(b - 1, a - 1)] - f).norm() < 1e-12);
            }
        }
        let c = chain(31, -0.2);
        let k = transfer_block(&c, 6, 9.3).unwrap();
        for a in 1..=6 {
            for b in 1..=6 {
                let f = amplitude(&c, a, 31 - 6 + b, 9.3).unwrap();
                assert!((k[(b - 1, a - 1)] - f).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn region_validated() {
        assert!(matches!(
            transfer_block(&chain(5, 0.0), 0, 1.0),
            Err(Error::RegionOutOfRange { .. })
        ));
        assert!(matches!(
            optimal_encoding(&chain(5, 0.0), 6, 1.0),
            Err(Error::RegionOutOfRange { .. })
        ));
    }

    #[test]
    fn degenerate_identity_block_picks_psi() {
        let c = chain(5, 0.0);
        let opt = optimal_encoding(&c, 5, 0.0).unwrap();
        assert!((opt.top_singular_value - 1.0).abs() < 1e-12);
        assert!(opt.spectral_gap < 1e-10);
        let psi3 = make_psi_k(&c, 3).unwrap();
        assert!(encoding_distance(&opt, &psi3).unwrap() < 1e-12);

        let c4 = chain(4, 0.0);
        let opt = optimal_encoding(&c4, 4, 0.0).unwrap();
        for z in &opt.encoding {
            assert!((z - re(0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn optimal_vector_is_normalized_and_phase_fixed() {
        let opt = optimal_encoding(&chain(40, 0.0), 5, 21.3).unwrap();
        let norm: f64 = opt.encoding.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let pivot = opt
            .encoding
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        assert!(pivot.im == 0.0 && pivot.re > 0.0);
        assert!(opt.top_singular_value <= 1.0 + 1e-12);
    }

    #[test]
    fn distance_to_itself_is_zero() {
        let c = chain(30, 0.0);
        let opt = optimal_encoding(&c, 3, 14.0).unwrap();
        let phi = opt.to_encoding_state(30).unwrap();
        assert!(encoding_distance(&opt, &phi).unwrap() < 1e-12);
        // a global phase does not change the distance
        let rotated = EncodingState::new(
            30,
            Complex64::default(),
            phi.amplitudes()
                .iter()
                .map(|&(s, a)| (s, a * Complex64::from_polar(1.0, 2.1))),
        )
        .unwrap();
        assert!(encoding_distance(&opt, &rotated).unwrap() < 1e-12);
    }

    #[test]
    fn distance_rejects_support_outside_region() {
        let c = chain(30, 0.0);
        let opt = optimal_encoding(&c, 3, 14.0).unwrap();
        let psi3 = make_psi_k(&c, 3).unwrap();
        assert!(matches!(
            encoding_distance(&opt, &psi3),
            Err(Error::SupportMismatch { site: 5, r: 3 })
        ));
    }
}

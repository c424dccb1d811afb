//! Chain parameters and the zero/one-excitation state model.
//!
//! Only the vacuum |0⟩ and the single-excitation states |j⟩ (one flipped
//! spin at site j) are represented. Sites are 1-based everywhere in the
//! public interface.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::format::sig17;

/// Norm deviation accepted (and corrected) when building an encoding.
pub const CONSTRUCTION_NORM_TOLERANCE: f64 = 1e-6;

/// Uniform XY chain: `n_sites` spins, nearest-neighbour exchange `coupling`
/// (J > 0) and a static global field `field` (h). Energies are in units
/// with ħ = 1, times in ħ/J.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    coupling: f64,
    field: f64,
}

impl ChainSpec {
    pub fn new(n_sites: usize, coupling: f64, field: f64) -> Result<Self> {
        if n_sites < 1 {
            return Err(Error::invalid("n_sites", "chain needs at least one site"));
        }
        if !coupling.is_finite() || coupling <= 0.0 {
            return Err(Error::invalid(
                "coupling",
                format!("J must be finite and positive, got {coupling}"),
            ));
        }
        if !field.is_finite() {
            return Err(Error::invalid("field", format!("h must be finite, got {field}")));
        }
        Ok(Self {
            n_sites,
            coupling,
            field,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    /// Same chain with a different field.
    pub fn with_field(&self, field: f64) -> Result<Self> {
        Self::new(self.n_sites, self.coupling, field)
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            return Err(Error::SiteOutOfRange { site, n: self.n_sites });
        }
        Ok(())
    }

    pub fn modes(&self) -> ModeTable {
        ModeTable::new(self)
    }
}

/// Convenience constructor mirroring [`ChainSpec::new`].
pub fn make_chain(n_sites: usize, coupling: f64, field: f64) -> Result<ChainSpec> {
    ChainSpec::new(n_sites, coupling, field)
}

/// Normal modes of the single-excitation block: q_m = πm/(N+1) and
/// E_m = 2h − 2J cos q_m for m = 1..N (stored 0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct ModeTable {
    wavenumbers: Vec<f64>,
    cosines: Vec<f64>,
    energies: Vec<f64>,
}

impl ModeTable {
    pub fn new(chain: &ChainSpec) -> Self {
        let n = chain.n_sites;
        let denom = (n + 1) as f64;
        let wavenumbers: Vec<f64> = (1..=n).map(|m| PI * m as f64 / denom).collect();
        let cosines: Vec<f64> = wavenumbers.iter().map(|q| q.cos()).collect();
        let energies = cosines
            .iter()
            .map(|c| 2.0 * chain.field - 2.0 * chain.coupling * c)
            .collect();
        Self {
            wavenumbers,
            cosines,
            energies,
        }
    }

    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// cos q_m, 0-based in m.
    pub fn cosines(&self) -> &[f64] {
        &self.cosines
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

/// Initial encoding α₀|0⟩ + Σ_j α_j |j⟩ with sparse single-excitation
/// support.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingState {
    n_sites: usize,
    vacuum: Complex64,
    amplitudes: Vec<(usize, Complex64)>,
}

impl EncodingState {
    /// Validates the support, renormalizes when the norm is within
    /// [`CONSTRUCTION_NORM_TOLERANCE`] of one (but not within rounding of
    /// it) and rejects it otherwise.
    /// Input order does not matter; the stored list is sorted by site.
    pub fn new(
        n_sites: usize,
        vacuum: Complex64,
        amplitudes: impl IntoIterator<Item = (usize, Complex64)>,
    ) -> Result<Self> {
        if n_sites < 1 {
            return Err(Error::invalid("n_sites", "chain needs at least one site"));
        }
        let mut amplitudes: Vec<(usize, Complex64)> = amplitudes.into_iter().collect();
        amplitudes.sort_by_key(|&(site, _)| site);
        for pair in amplitudes.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateSite(pair[0].0));
            }
        }
        for &(site, amp) in &amplitudes {
            if site == 0 || site > n_sites {
                return Err(Error::SiteOutOfRange { site, n: n_sites });
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::invalid("amplitude", format!("non-finite value at site {site}")));
            }
        }
        if !vacuum.re.is_finite() || !vacuum.im.is_finite() {
            return Err(Error::invalid("vacuum amplitude", "non-finite value"));
        }

        let norm_sqr = vacuum.norm_sqr() + amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>();
        let norm = norm_sqr.sqrt();
        if norm.is_nan() || (norm - 1.0).abs() > CONSTRUCTION_NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                norm,
                tolerance: CONSTRUCTION_NORM_TOLERANCE,
            });
        }
        // already unit up to rounding: keep the values so serialized states
        // read back bit for bit
        let scale = if (norm - 1.0).abs() <= 64.0 * f64::EPSILON {
            1.0
        } else {
            1.0 / norm
        };
        Ok(Self {
            n_sites,
            vacuum: vacuum * scale,
            amplitudes: amplitudes.into_iter().map(|(s, a)| (s, a * scale)).collect(),
        })
    }

    /// The all-down ground state |0⟩.
    pub fn ground(n_sites: usize) -> Result<Self> {
        Self::new(n_sites, Complex64::new(1.0, 0.0), [])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn vacuum_amplitude(&self) -> Complex64 {
        self.vacuum
    }

    /// Occupied sites with their amplitudes, sorted by site.
    pub fn amplitudes(&self) -> &[(usize, Complex64)] {
        &self.amplitudes
    }

    /// Amplitude on `site`, zero when unoccupied.
    pub fn amplitude(&self, site: usize) -> Complex64 {
        self.amplitudes
            .binary_search_by_key(&site, |&(s, _)| s)
            .map(|i| self.amplitudes[i].1)
            .unwrap_or_default()
    }

    /// r: the largest occupied site, 0 for the pure vacuum.
    pub fn region_size(&self) -> usize {
        self.amplitudes.last().map_or(0, |&(s, _)| s)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum.norm_sqr() + self.amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>()
    }

    /// Dense amplitudes over sites 1..=r (index 0 is site 1).
    pub fn dense_region(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.region_size()];
        for &(s, a) in &self.amplitudes {
            out[s - 1] = a;
        }
        out
    }

    /// Same amplitudes on a chain with a different number of sites.
    pub fn on_chain(&self, n_sites: usize) -> Result<Self> {
        Self::new(n_sites, self.vacuum, self.amplitudes.iter().copied())
    }

    pub fn check_chain(&self, chain: &ChainSpec) -> Result<()> {
        if self.n_sites != chain.n_sites() {
            return Err(Error::invalid(
                "encoding",
                format!(
                    "encoding is defined on {} sites but the chain has {}",
                    self.n_sites,
                    chain.n_sites()
                ),
            ));
        }
        Ok(())
    }

    /// `{"n": N, "alpha0": [re, im], "amps": [{"site": j, "re": x, "im": y}, ...]}`
    /// with 17 significant digits per number.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        write!(
            out,
            "{{\"n\": {}, \"alpha0\": [{}, {}], \"amps\": [",
            self.n_sites,
            sig17(self.vacuum.re),
            sig17(self.vacuum.im)
        )
        .unwrap();
        for (i, (site, a)) in self.amplitudes.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write!(
                out,
                "{{\"site\": {}, \"re\": {}, \"im\": {}}}",
                site,
                sig17(a.re),
                sig17(a.im)
            )
            .unwrap();
        }
        out.push_str("]}");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawEncoding = serde_json::from_str(text).map_err(|e| Error::Parse(format!("encoding JSON: {e}")))?;
        let n =
            usize::try_from(raw.n).map_err(|_| Error::Parse(format!("encoding JSON: n = {} out of range", raw.n)))?;
        let amps = raw
            .amps
            .into_iter()
            .map(|a| {
                usize::try_from(a.site)
                    .map(|s| (s, Complex64::new(a.re, a.im)))
                    .map_err(|_| Error::Parse(format!("encoding JSON: site {} out of range", a.site)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, Complex64::new(raw.alpha0[0], raw.alpha0[1]), amps)
    }
}

/// Shortcut for [`EncodingState::new`].
pub fn make_encoding(
    n_sites: usize,
    vacuum: Complex64,
    amplitudes: impl IntoIterator<Item = (usize, Complex64)>,
) -> Result<EncodingState> {
    EncodingState::new(n_sites, vacuum, amplitudes)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEncoding {
    n: u64,
    alpha0: [f64; 2],
    #[serde(default)]
    amps: Vec<RawAmplitude>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAmplitude {
    site: u64,
    re: f64,
    #[serde(default)]
    im: f64,
}

/// State at time t: α₀|0⟩ + Σ_j w_j(t)|j⟩ over all N sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatedState {
    pub vacuum_amplitude: Complex64,
    /// w_j for j = 1..N, stored 0-based.
    pub site_amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl PropagatedState {
    /// w_j with 1-based `site`.
    pub fn site(&self, site: usize) -> Complex64 {
        self.site_amplitudes[site - 1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vacuum_amplitude.norm_sqr() + crate::summation::pairwise_norm_sqr(&self.site_amplitudes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn make_chain_accepts_valid_parameters() {
        let chain = make_chain(100, 1.0, 0.0).unwrap();
        assert_eq!((chain.n_sites(), chain.coupling(), chain.field()), (100, 1.0, 0.0));
        assert!(make_chain(1, 1.0, 0.0).is_ok());
        assert!(make_chain(50, 2.0, 0.3).is_ok());
    }

    #[test]
    fn make_chain_rejects_bad_parameters() {
        assert!(make_chain(0, 1.0, 0.0).is_err());
        assert!(make_chain(5, 0.0, 0.0).is_err());
        assert!(make_chain(5, -1.0, 0.0).is_err());
        assert!(make_chain(5, f64::NAN, 0.0).is_err());
        assert!(make_chain(5, f64::INFINITY, 0.0).is_err());
        assert!(make_chain(5, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn mode_table_shape_and_symmetry() {
        for &(n, h) in &[(1usize, 0.0), (2, 0.3), (17, -0.7), (100, 0.0), (1001, 1.25)] {
            let chain = make_chain(n, 1.3, h).unwrap();
            let modes = chain.modes();
            let q = modes.wavenumbers();
            let e = modes.energies();
            assert_eq!(q.len(), n);
            assert!(q.iter().all(|&x| x > 0.0 && x < PI));
            assert!(q.windows(2).all(|w| w[0] < w[1]));
            assert!(e.windows(2).all(|w| w[0] < w[1]));
            for m in 0..n {
                assert!((e[m] + e[n - 1 - m] - 4.0 * h).abs() < 1e-12);
            }
            assert_eq!(modes, ModeTable::new(&chain));
        }
    }

    #[test]
    fn psi2_literal_encoding() {
        let enc = make_encoding(100, c(0.0), [(1, c(FRAC_1_SQRT_2)), (3, c(-FRAC_1_SQRT_2))]).unwrap();
        assert_eq!(enc.region_size(), 3);
        assert_eq!(enc.amplitude(2), c(0.0));
        assert!((enc.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_vacuum_has_empty_region() {
        let enc = make_encoding(10, c(1.0), []).unwrap();
        assert_eq!(enc.region_size(), 0);
        assert!(enc.dense_region().is_empty());
    }

    #[test]
    fn decimal_literals_are_renormalized() {
        let enc = make_encoding(10, c(0.0), [(1, c(0.6)), (3, c(-0.8000003))]).unwrap();
        assert!((enc.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_encodings() {
        assert!(matches!(
            make_encoding(10, c(0.0), [(1, c(0.6)), (2, c(0.8001))]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            make_encoding(10, c(0.0), [(1, c(0.6)), (1, c(0.8))]),
            Err(Error::DuplicateSite(1))
        ));
        assert!(matches!(
            make_encoding(10, c(0.0), [(11, c(1.0))]),
            Err(Error::SiteOutOfRange { site: 11, n: 10 })
        ));
        assert!(matches!(
            make_encoding(10, c(0.0), [(0, c(1.0))]),
            Err(Error::SiteOutOfRange { site: 0, .. })
        ));
        assert!(make_encoding(10, c(0.0), []).is_err());
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let enc = make_encoding(5, c(0.0), [(3, c(0.8)), (1, c(0.6))]).unwrap();
        assert_eq!(enc.amplitudes()[0].0, 1);
        assert_eq!(enc.amplitudes()[1].0, 3);
    }

    #[test]
    fn json_layout() {
        let enc = make_encoding(4, Complex64::new(0.6, 0.0), [(2, Complex64::new(0.0, 0.8))]).unwrap();
        assert_eq!(
            enc.to_json(),
            "{\"n\": 4, \"alpha0\": [0.59999999999999998, 0], \"amps\": [{\"site\": 2, \"re\": 0, \"im\": 0.80000000000000004}]}"
        );
        assert_eq!(EncodingState::from_json(&enc.to_json()).unwrap(), enc);
    }

    #[test]
    fn json_rejects_garbage() {
        assert!(EncodingState::from_json("").is_err());
        assert!(EncodingState::from_json("{\"n\": 0, \"alpha0\": [1, 0], \"amps\": []}").is_err());
        assert!(EncodingState::from_json("{\"n\": 3, \"alpha0\": [1, 0], \"amps\": [], \"x\": 1}").is_err());
        assert!(EncodingState::from_json("{\"n\": -3, \"alpha0\": [1, 0]}").is_err());
        assert!(
            EncodingState::from_json("{\"n\": 3, \"alpha0\": [0, 0], \"amps\": [{\"site\": 9, \"re\": 1}]}").is_err()
        );
    }
}

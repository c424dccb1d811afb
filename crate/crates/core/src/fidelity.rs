//! Transfer fidelities.
//!
//! The direct-overlap fidelity of an encoding α₀|0⟩ + Σ α_i|i⟩ spread over
//! the first r sites is
//!
//! F = √(|G|² + |α₀|² Σ_{i ≤ N−r} |w_i|²),  G = |α₀|² + Σ_i α_i w*_{N−r+i}.
//!
//! For the ξ_k family this has a closed form in terms of the field-free
//! quantities C_ν(t) = Σ_p (−1)^p f̃_{2p+1,ν}(t) and
//! L(t) = (1/k) Σ_m (−1)^{m+1} C*_{N+2(m−k)}(t). Two closed forms are kept,
//! differing in the weight of the tail term Σ_{m ≤ N+1−2k} |C_m|²:
//! [`Variant::Overlap`] uses sin²θ/(4k), which is what expanding the overlap
//! formula gives, and [`Variant::DoubledTail`] uses sin²θ/(2k).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::chain::{ChainSpec, EncodingState};
use crate::encodings::{check_family, make_xi_k, XiParameters};
use crate::error::{Error, Result};
use crate::optimizer::optimal_field;
use crate::propagator::{propagate, Spectral};
use crate::summation::{pairwise_norm_sqr, pairwise_sum};

/// Node count of the fine Simpson grid for θ-averages.
pub const QUADRATURE_NODES: usize = 4097;
/// Node count of the coarse grid used for the convergence check.
pub const QUADRATURE_CHECK_NODES: usize = 2049;
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Tail weight sin²θ/(4k); agrees with the direct overlap.
    Overlap,
    /// Tail weight sin²θ/(2k).
    DoubledTail,
}

impl Variant {
    /// Label used on the command line and in output files.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Overlap => "eq6",
            Variant::DoubledTail => "eq8",
        }
    }

    fn tail_factor(self, k: usize) -> f64 {
        match self {
            Variant::Overlap => 1.0 / (2.0 * k as f64),
            Variant::DoubledTail => 1.0 / k as f64,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq6" => Ok(Variant::Overlap),
            "eq8" => Ok(Variant::DoubledTail),
            other => Err(Error::Parse(format!("unknown variant {other:?} (expected eq6 or eq8)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityComponents {
    pub l_abs: f64,
    /// Σ_{m ≤ N+1−2k} |C_m|²
    pub tail: f64,
    pub theta: f64,
    pub phi: f64,
    pub field: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityReport {
    pub time: f64,
    pub fidelity: f64,
    pub variant: Variant,
    pub components: Option<FidelityComponents>,
}

/// Direct-overlap fidelity of `enc` after evolving for time `t`.
pub fn fidelity_direct(chain: &ChainSpec, enc: &EncodingState, t: f64) -> Result<FidelityReport> {
    enc.check_chain(chain)?;
    let r = enc.region_size();
    let fidelity = if r == 0 {
        1.0
    } else {
        let n = chain.n_sites();
        let state = propagate(chain, enc, t)?;
        let w = &state.site_amplitudes;
        let vacuum = enc.vacuum_amplitude().norm_sqr();
        let g = Complex64::new(vacuum, 0.0)
            + enc
                .amplitudes()
                .iter()
                .map(|&(i, a)| a * w[n - r + i - 1].conj())
                .sum::<Complex64>();
        let tail = pairwise_norm_sqr(&w[..n - r]);
        (g.norm_sqr() + vacuum * tail).sqrt()
    };
    Ok(FidelityReport {
        time: t,
        fidelity,
        variant: Variant::Overlap,
        components: None,
    })
}

/// L(t) and C_ν(t) for the Ψ_k family; both independent of the field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDecomposition {
    n: usize,
    k: usize,
    t: f64,
    l: Complex64,
    c: Vec<Complex64>,
}

impl FieldDecomposition {
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn l(&self) -> Complex64 {
        self.l
    }

    /// C_ν with 1-based ν.
    pub fn c(&self, nu: usize) -> Complex64 {
        self.c[nu - 1]
    }

    pub fn c_values(&self) -> &[Complex64] {
        &self.c
    }

    /// Σ_{m=1}^{N+1−2k} |C_m|², summed pairwise.
    pub fn tail(&self) -> f64 {
        pairwise_norm_sqr(&self.c[..self.n + 1 - 2 * self.k])
    }
}

pub fn field_decomposition(chain: &ChainSpec, k: usize, t: f64) -> Result<FieldDecomposition> {
    check_family(chain, k)?;
    let n = chain.n_sites();
    let sp = Spectral::new(chain);
    let weights: Vec<(usize, Complex64)> = (0..k)
        .map(|p| {
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            (2 * p + 1, Complex64::new(sign, 0.0))
        })
        .collect();
    let c = sp.synthesize(&sp.project(&weights), &sp.reduced_phases(t));
    let l = (1..=k)
        .map(|m| {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            c[n + 2 * m - 2 * k - 1].conj() * sign
        })
        .sum::<Complex64>()
        / k as f64;
    Ok(FieldDecomposition { n, k, t, l, c })
}

/// The field-dependent part (sin²θ/2)·Re[e^{2iht} L(t)].
pub fn fidelity_field_term(decomp: &FieldDecomposition, theta: f64, h: f64) -> f64 {
    let s = theta.sin();
    0.5 * s * s * (Complex64::from_polar(1.0, 2.0 * h * decomp.t) * decomp.l).re
}

fn closed_form(l: Complex64, l_field_term: f64, tail: f64, k: usize, theta: f64, variant: Variant) -> f64 {
    let half = theta / 2.0;
    let c2 = half.cos().powi(2);
    let s2 = half.sin().powi(2);
    let sin_sq = theta.sin().powi(2);
    let radicand = c2 * c2 + l_field_term + 0.5 * sin_sq * variant.tail_factor(k) * tail + s2 * s2 * l.norm_sqr();
    radicand.max(0.0).sqrt()
}

/// F_k for ξ_k at the chain's field. `DoubledTail` evaluates the closed
/// form; `Overlap` propagates ξ_k and applies [`fidelity_direct`].
pub fn fidelity_xi(chain: &ChainSpec, params: &XiParameters, t: f64, variant: Variant) -> Result<FidelityReport> {
    let decomp = field_decomposition(chain, params.k(), t)?;
    let components = Some(FidelityComponents {
        l_abs: decomp.l.norm(),
        tail: decomp.tail(),
        theta: params.theta(),
        phi: params.phi(),
        field: chain.field(),
    });
    let fidelity = match variant {
        Variant::DoubledTail => {
            let field_term = fidelity_field_term(&decomp, params.theta(), chain.field());
            closed_form(decomp.l, field_term, decomp.tail(), params.k(), params.theta(), variant)
        }
        Variant::Overlap => fidelity_direct(chain, &make_xi_k(chain, params)?, t)?.fidelity,
    };
    Ok(FidelityReport {
        time: t,
        fidelity,
        variant,
        components,
    })
}

/// F_k^max from |L| and the tail sum, the field term at its maximum.
pub fn max_fidelity_from_components(l_abs: f64, tail: f64, k: usize, theta: f64, variant: Variant) -> f64 {
    let s = theta.sin();
    closed_form(Complex64::new(l_abs, 0.0), 0.5 * s * s * l_abs, tail, k, theta, variant)
}

/// F_k with h chosen to maximize the field term. The `Overlap` variant sets
/// the field to the optimum from [`optimal_field`] and evaluates the direct
/// overlap; `DoubledTail` uses the closed form.
pub fn fidelity_xi_max(chain: &ChainSpec, k: usize, theta: f64, t: f64, variant: Variant) -> Result<f64> {
    let params = XiParameters::new(theta, 0.0, k)?;
    let decomp = field_decomposition(chain, k, t)?;
    match variant {
        Variant::DoubledTail => Ok(max_fidelity_from_components(
            decomp.l.norm(),
            decomp.tail(),
            k,
            theta,
            variant,
        )),
        Variant::Overlap => {
            let tuned = chain.with_field(optimal_field(&decomp).h_star)?;
            Ok(fidelity_direct(&tuned, &make_xi_k(&tuned, &params)?, t)?.fidelity)
        }
    }
}

/// Composite Simpson rule on `nodes` equally spaced points (odd count).
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, nodes: usize) -> f64 {
    debug_assert!(nodes >= 3 && nodes % 2 == 1);
    let step = (hi - lo) / (nodes - 1) as f64;
    let terms: Vec<f64> = (0..nodes)
        .map(|i| {
            let weight = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            weight * f(lo + step * i as f64)
        })
        .collect();
    pairwise_sum(&terms) * step / 3.0
}

/// ½∫₀^π F_k^max(θ) sin θ dθ for given |L| and tail sum.
pub fn average_fidelity(l_abs: f64, tail: f64, k: usize, variant: Variant) -> Result<f64> {
    let integrand = |theta: f64| max_fidelity_from_components(l_abs, tail, k, theta, variant) * theta.sin();
    let fine = 0.5 * simpson(integrand, 0.0, PI, QUADRATURE_NODES);
    let coarse = 0.5 * simpson(integrand, 0.0, PI, QUADRATURE_CHECK_NODES);
    let rel = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if rel.is_nan() || rel >= QUADRATURE_TOLERANCE {
        return Err(Error::Numerical(format!(
            "θ-average not converged: relative difference {rel:e} between {QUADRATURE_NODES} and {QUADRATURE_CHECK_NODES} nodes"
        )));
    }
    Ok(fine)
}

/// θ-average of F_k^max for ξ_k at time t. Independent of φ.
pub fn fidelity_xi_avg(chain: &ChainSpec, k: usize, t: f64, variant: Variant) -> Result<f64> {
    let decomp = field_decomposition(chain, k, t)?;
    average_fidelity(decomp.l.norm(), decomp.tail(), k, variant)
}

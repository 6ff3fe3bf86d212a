//! Linear Heisenberg–Langevin network of the optical (a), microwave (c) and
//! mechanical (b) modes, its frequency-domain scattering matrix, and the
//! reduction of the output field to a standard-form two-mode state.
//!
//! Conventions:
//!
//! * Mode vector `(a, a†, c, c†, b, b†)`; input/output vector over the ten
//!   ports `(a_c, a_c†, a_i, a_i†, c_c, c_c†, c_i, c_i†, b, b†)`.
//! * Each doubled slot holds the Fourier component of its operator at the
//!   same frequency, `(a[ω], (a†)[ω])` with `(a†)[ω] = a[−ω]†`, so that
//!   `S(ω) = Nᵀ(−iω − M)⁻¹N − I` and the spectral correlation matrix is
//!   `C(ω) = S(ω) N_in S(ω)†`.
//! * Quadratures `q = a + a†`, `p = −i(a − a†)`; vacuum covariance is `I`.
//!
//! Spectra are evaluated in the frame co-rotating with the mechanics (see
//! [`LinearNetwork::rotating_wave`]), where ω = 0 is the down-conversion
//! resonance: an optical photon at −ω pairs with a microwave photon at +ω.

use nalgebra::{Matrix4, SMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, PHYSICALITY_TOL};
use crate::params::{derive, DerivedParams, SystemParams};

pub type Matrix6c = SMatrix<Complex64, 6, 6>;
pub type Matrix6x10c = SMatrix<Complex64, 6, 10>;
pub type Matrix10c = SMatrix<Complex64, 10, 10>;
pub type Matrix10 = SMatrix<f64, 10, 10>;

/// Slot indices in the mode vector.
pub mod slot {
    pub const A: usize = 0;
    pub const A_DAG: usize = 1;
    pub const C: usize = 2;
    pub const C_DAG: usize = 3;
    pub const B: usize = 4;
    pub const B_DAG: usize = 5;
}

/// First (annihilation) slot of each port in the input/output vector.
pub mod port {
    pub const OPTICAL_COUPLING: usize = 0;
    pub const OPTICAL_INTERNAL: usize = 2;
    pub const MICROWAVE_COUPLING: usize = 4;
    pub const MICROWAVE_INTERNAL: usize = 6;
    pub const MECHANICAL: usize = 8;
}

/// Maximum RWA-forbidden correlator (vacuum units) tolerated when reducing
/// to the standard form.
pub const STANDARD_FORM_TOL: f64 = 1e-9;
/// Closed-form elements are refused when |1 + C_em − C_om| is below this.
pub const DIVERGENCE_TOL: f64 = 1e-9;
/// An eigenvalue of the drift matrix counts as decaying when Re λ < −this.
pub const STABILITY_TOL: f64 = 1e-12;
/// Eigenmodes with less than this fraction of their norm on the cavities
/// are treated as invisible at the output ports.
pub const VISIBILITY_TOL: f64 = 1e-24;
/// Largest grid [`FrequencyGrid::for_network`] will build.
pub const MAX_GRID_POINTS: usize = 4_000_001;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// Rotating with the pump: optical mode at Δ_p, microwave and mechanics
    /// at their lab frequencies.
    Pump,
    /// Rotating at `reference` for every mode, counter-rotating couplings dropped.
    CoRotating { reference: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetwork {
    pub drift: Matrix6c,
    pub coupling: Matrix6x10c,
    pub frame: Frame,
    pub derived: DerivedParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub omega: f64,
    pub s_modes: Matrix10c,
    pub s_quads: Matrix10c,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardFormState {
    pub omega: f64,
    /// Optical quadrature variance.
    pub u: f64,
    /// Microwave quadrature variance.
    pub v: f64,
    /// Cross-correlation magnitude.
    pub w: f64,
}

impl StandardFormState {
    pub fn new(omega: f64, u: f64, v: f64, w: f64) -> Self {
        StandardFormState { omega, u, v, w }
    }

    pub fn vacuum() -> Self {
        StandardFormState::new(0.0, 1.0, 1.0, 0.0)
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn squeezed_vacuum(r: f64) -> Self {
        let (s, ch) = ((2.0 * r).sinh(), (2.0 * r).cosh());
        StandardFormState::new(0.0, ch, ch, s)
    }

    pub fn covariance(&self) -> Matrix4<f64> {
        gaussian::standard_form(self.u, self.v, self.w)
    }

    /// det V = (uv − w²)².
    pub fn det(&self) -> f64 {
        let d = self.u * self.v - self.w * self.w;
        d * d
    }

    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        gaussian::standard_form_symplectic(self.u, self.v, self.w)
    }

    pub fn check_physical(&self) -> Result<()> {
        if !(self.u.is_finite() && self.v.is_finite() && self.w.is_finite()) {
            return Err(Error::Unphysical { min_symplectic: f64::NAN });
        }
        let (min, _) = self.symplectic_eigenvalues();
        if !(min >= 1.0 - PHYSICALITY_TOL) || self.u < 1.0 - PHYSICALITY_TOL || self.v < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Unphysical { min_symplectic: min });
        }
        Ok(())
    }
}

/// Drift and input coupling matrices of the pump-frame Langevin equations.
pub fn build_network(params: &SystemParams) -> Result<LinearNetwork> {
    use slot::*;
    let d = derive(params)?;
    let g_om = d.g_om;
    let g_em = params.g_em;

    let mut m = Matrix6c::zeros();
    m[(A, A)] = I * params.delta_p - c(d.kappa_o / 2.0);
    m[(A_DAG, A_DAG)] = -I * params.delta_p - c(d.kappa_o / 2.0);
    m[(C, C)] = -I * params.omega_e - c(d.kappa_e / 2.0);
    m[(C_DAG, C_DAG)] = I * params.omega_e - c(d.kappa_e / 2.0);
    m[(B, B)] = -I * params.omega_m - c(params.kappa_m / 2.0);
    m[(B_DAG, B_DAG)] = I * params.omega_m - c(params.kappa_m / 2.0);

    m[(A, B)] = I * g_om;
    m[(A, B_DAG)] = I * g_om;
    m[(A_DAG, B)] = -I * g_om;
    m[(A_DAG, B_DAG)] = -I * g_om;
    m[(C, B)] = I * g_em;
    m[(C_DAG, B_DAG)] = -I * g_em;
    m[(B, A)] = I * g_om;
    m[(B, A_DAG)] = I * g_om;
    m[(B, C)] = I * g_em;
    m[(B_DAG, A)] = -I * g_om;
    m[(B_DAG, A_DAG)] = -I * g_om;
    m[(B_DAG, C_DAG)] = -I * g_em;

    let mut n = Matrix6x10c::zeros();
    let ports = [
        (A, port::OPTICAL_COUPLING, params.kappa_o_c),
        (A, port::OPTICAL_INTERNAL, params.kappa_o_i),
        (C, port::MICROWAVE_COUPLING, params.kappa_e_c),
        (C, port::MICROWAVE_INTERNAL, params.kappa_e_i),
        (B, port::MECHANICAL, params.kappa_m),
    ];
    for (mode, p, rate) in ports {
        n[(mode, p)] = c(rate.sqrt());
        n[(mode + 1, p + 1)] = c(rate.sqrt());
    }

    Ok(LinearNetwork { drift: m, coupling: n, frame: Frame::Pump, derived: d })
}

/// Network in the frame co-rotating with the mechanics, as used for all
/// spectra and reduced states.
pub fn build_rwa_network(params: &SystemParams) -> Result<LinearNetwork> {
    Ok(build_network(params)?.rotating_wave(params.omega_m))
}

impl LinearNetwork {
    /// Moves every mode into the frame rotating at `reference` and drops the
    /// couplings that then oscillate at ±2·`reference`.
    ///
    /// In the pump frame the optical annihilation slot evolves as e^{+iΔ_p t}
    /// while the microwave and mechanical annihilation slots evolve as
    /// e^{−iω t}; a coupling survives only between slots sharing the same sign.
    /// On the blue sideband this keeps the down-conversion (a b) and
    /// beam-splitter (c b†) terms and removes the optomechanical a b† terms.
    pub fn rotating_wave(&self, reference: f64) -> LinearNetwork {
        let rotation = match self.frame {
            Frame::Pump => [reference, -reference, -reference, reference, -reference, reference],
            Frame::CoRotating { .. } => return self.clone(),
        };
        let sign = |x: f64| x.partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
        let mut drift = self.drift;
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    drift[(i, i)] -= I * rotation[i];
                } else if sign(rotation[i]) != sign(rotation[j]) {
                    drift[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        LinearNetwork {
            drift,
            coupling: self.coupling,
            frame: Frame::CoRotating { reference },
            derived: self.derived,
        }
    }

    /// The drift matrix expressed on real quadratures, Q M Q⁻¹.
    pub fn quadrature_drift(&self) -> SMatrix<f64, 6, 6> {
        let q = quadrature_transform::<6>();
        let q_inv = quadrature_transform_inverse::<6>();
        (q * self.drift * q_inv).map(|z| z.re)
    }

    /// Spectral linewidths 2|Re λ| of the drift eigenmodes, ascending.
    pub fn linewidths(&self) -> Vec<f64> {
        let mut widths: Vec<f64> = self.eigenvalues().iter().map(|z| 2.0 * z.re.abs()).collect();
        widths.sort_by(|a, b| a.total_cmp(b));
        widths
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.quadrature_drift().complex_eigenvalues().iter().copied().collect()
    }

    /// Linewidths of the eigenmodes that reach the optical or microwave
    /// cavity, i.e. that can shape an output spectrum. A mode confined to the
    /// mechanics (no coupling) is excluded.
    pub fn output_linewidths(&self) -> Vec<f64> {
        let mut widths: Vec<f64> = self
            .eigenvalues()
            .into_iter()
            .filter(|&lambda| self.cavity_weight(lambda) > VISIBILITY_TOL)
            .map(|z| 2.0 * z.re.abs())
            .collect();
        widths.sort_by(|a, b| a.total_cmp(b));
        widths
    }

    /// Fraction of the eigenvector norm on the a and c slots, by inverse iteration.
    fn cavity_weight(&self, lambda: Complex64) -> f64 {
        let shift = lambda + Complex64::new(1.0, 1.0) * (1e-9 * lambda.norm()).max(1e-300);
        let lu = (self.drift - Matrix6c::from_diagonal_element(shift)).lu();
        let mut x = nalgebra::SVector::<Complex64, 6>::from_element(c(1.0));
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    let n = y.norm();
                    if n == 0.0 {
                        return 0.0;
                    }
                    x = y / c(n);
                }
                _ => return 1.0,
            }
        }
        (0..4).map(|k| x[k].norm_sqr()).sum::<f64>()
    }
}

/// Q = I_k ⊗ [[1, 1], [−i, i]] mapping (a, a†) pairs to (q, p).
pub fn quadrature_transform<const N: usize>() -> SMatrix<Complex64, N, N> {
    let mut q = SMatrix::<Complex64, N, N>::zeros();
    for k in (0..N).step_by(2) {
        q[(k, k)] = c(1.0);
        q[(k, k + 1)] = c(1.0);
        q[(k + 1, k)] = -I;
        q[(k + 1, k + 1)] = I;
    }
    q
}

pub fn quadrature_transform_inverse<const N: usize>() -> SMatrix<Complex64, N, N> {
    let mut q = SMatrix::<Complex64, N, N>::zeros();
    for k in (0..N).step_by(2) {
        q[(k, k)] = c(0.5);
        q[(k, k + 1)] = I * 0.5;
        q[(k + 1, k)] = c(0.5);
        q[(k + 1, k + 1)] = -I * 0.5;
    }
    q
}

/// J = I₅ ⊗ diag(1, −1), the commutator matrix of the doubled port vector.
pub fn commutator_matrix() -> Matrix10c {
    Matrix10c::from_fn(|i, j| if i != j { c(0.0) } else if i % 2 == 0 { c(1.0) } else { c(-1.0) })
}

/// Ω = I₅ ⊗ [[0, 1], [−1, 0]].
pub fn symplectic_form() -> Matrix10 {
    Matrix10::from_fn(|i, j| {
        if i % 2 == 0 && j == i + 1 {
            1.0
        } else if i % 2 == 1 && j + 1 == i {
            -1.0
        } else {
            0.0
        }
    })
}

pub fn scattering(network: &LinearNetwork, omega: f64) -> Result<ScatteringMatrix> {
    let system = Matrix6c::from_diagonal_element(-I * omega) - network.drift;
    let response = system
        .lu()
        .solve(&network.coupling)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or(Error::Singular { omega })?;
    let s_modes = network.coupling.transpose() * response - Matrix10c::identity();
    let s_quads = quadrature_transform::<10>() * s_modes * quadrature_transform_inverse::<10>();
    Ok(ScatteringMatrix { omega, s_modes, s_quads })
}

/// Input noise spectral matrix ⟨X_in X_in†⟩: vacuum on the optical ports and
/// the microwave coupling port, occupancy `n_ba` on the microwave internal
/// and mechanical ports.
pub fn input_noise(n_ba: f64) -> Matrix10c {
    let mut d = [0.0; 10];
    for k in (0..10).step_by(2) {
        let n = if k >= port::MICROWAVE_INTERNAL { n_ba } else { 0.0 };
        d[k] = n + 1.0;
        d[k + 1] = n;
    }
    Matrix10c::from_diagonal(&nalgebra::SVector::<Complex64, 10>::from_fn(|k, _| c(d[k])))
}

/// Output spectral correlation matrix C(ω) = S N_in S†.
pub fn output_correlations(network: &LinearNetwork, omega: f64, n_ba: f64) -> Result<Matrix10c> {
    let s = scattering(network, omega)?.s_modes;
    Ok(s * input_noise(n_ba) * s.adjoint())
}

/// Symmetrized quadrature spectral covariance of all ten output slots.
///
/// This is the real part of the Hermitian matrix Q (C − J/2) Q†, i.e. the
/// average over ±ω; at ω = 0 it equals S_x V_in S_xᵀ with
/// V_in = diag(I₆, (2n̄+1) I₄).
pub fn output_covariance(network: &LinearNetwork, omega: f64, n_ba: f64) -> Result<Matrix10> {
    let corr = output_correlations(network, omega, n_ba)?;
    let sym = corr - commutator_matrix() * c(0.5);
    let q = quadrature_transform::<10>();
    let v = (q * sym * q.adjoint()).map(|z| z.re);
    Ok((v + v.transpose()) * 0.5)
}

/// Second moments of the output pair (optical coupling port at −ω,
/// microwave coupling port at +ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelations {
    pub omega: f64,
    /// Optical photon-flux spectral density at −ω.
    pub n_o: f64,
    /// Microwave photon-flux spectral density at +ω.
    pub n_e: f64,
    /// ⟨c[ω] a[−ω]⟩.
    pub cross: Complex64,
    /// Largest correlator forbidden by the rotating-wave structure, in
    /// quadrature (vacuum) units.
    pub off_pattern: f64,
}

pub fn pair_correlations(network: &LinearNetwork, omega: f64, n_ba: f64) -> Result<PairCorrelations> {
    use port::{MICROWAVE_COUPLING as E, OPTICAL_COUPLING as O};
    let corr = output_correlations(network, omega, n_ba)?;
    let forbidden = [
        corr[(O, O + 1)],
        corr[(E, E + 1)],
        corr[(O, E)],
        corr[(O + 1, E + 1)],
    ];
    let off_pattern = 2.0 * forbidden.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(PairCorrelations {
        omega,
        n_o: corr[(O + 1, O + 1)].re,
        n_e: corr[(E, E)].re - 1.0,
        cross: corr[(E, O + 1)],
        off_pattern,
    })
}

/// Reduced output state {q_o[−ω], p_o[−ω], q_e[ω], p_e[ω]} in standard form.
///
/// The phase of ⟨c[ω] a[−ω]⟩ is absorbed into the microwave quadrature
/// reference, leaving the cross block diag(−w, w) with w ≥ 0.
pub fn reduce_standard_form(network: &LinearNetwork, omega: f64, n_ba: f64) -> Result<StandardFormState> {
    let pair = pair_correlations(network, omega, n_ba)?;
    if !(pair.off_pattern <= STANDARD_FORM_TOL) {
        return Err(Error::NonStandardForm { residual: pair.off_pattern });
    }
    Ok(StandardFormState::new(
        omega,
        1.0 + 2.0 * pair.n_o,
        1.0 + 2.0 * pair.n_e,
        2.0 * pair.cross.norm(),
    ))
}

/// Resonant (ω = 0) standard-form elements in closed form.
pub fn closed_form_uvw(derived: &DerivedParams, n_ba: f64) -> Result<StandardFormState> {
    let margin = 1.0 + derived.c_em - derived.c_om;
    if !(margin.abs() >= DIVERGENCE_TOL) {
        return Err(Error::Divergent { margin });
    }
    let (zo, ze) = (derived.zeta_o, derived.zeta_e);
    let (c_om, c_em) = (derived.c_om, derived.c_em);
    let denom = margin * margin;
    let u = 1.0 + 8.0 * zo * c_om * (1.0 + c_em + n_ba + c_em * n_ba * (1.0 - ze)) / denom;
    let v = 1.0 + 8.0 * ze * (c_em * (c_om + n_ba) + (c_om - 1.0).powi(2) * n_ba * (1.0 - ze)) / denom;
    let w = 4.0 * (zo * ze * c_em * c_om).sqrt() * (1.0 + c_em + c_om + 2.0 * n_ba * (ze + c_om * (1.0 - ze)))
        / denom;
    Ok(StandardFormState::new(0.0, u, v, w))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part among the drift eigenvalues (rad/s).
    pub max_real: f64,
    /// 1 + C_em − C_om of the parameters the network was built from.
    pub pdc_margin: f64,
}

pub fn stability(network: &LinearNetwork) -> Stability {
    let max_real = network
        .quadrature_drift()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Stability {
        stable: max_real < -STABILITY_TOL,
        max_real,
        pdc_margin: network.derived.pdc_margin,
    }
}

pub fn require_stable(network: &LinearNetwork) -> Result<()> {
    let s = stability(network);
    if s.stable {
        Ok(())
    } else {
        Err(Error::Unstable { max_real: s.max_real })
    }
}

/// Standard-form states over a frequency grid, in grid order.
pub fn spectrum(network: &LinearNetwork, omegas: &[f64], n_ba: f64) -> Result<Vec<StandardFormState>> {
    require_stable(network)?;
    omegas
        .par_iter()
        .map(|&w| reduce_standard_form(network, w, n_ba))
        .collect()
}

/// Uniform frequency grid symmetric about zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyGrid {
    pub omegas: Vec<f64>,
    pub step: f64,
}

/// Minimum resolution accepted for spectral integrals.
pub const MIN_POINTS_PER_LINEWIDTH: f64 = 8.0;
/// Resolution of [`FrequencyGrid::for_network`].
pub const DEFAULT_POINTS_PER_LINEWIDTH: f64 = 16.0;
/// Half-span of [`FrequencyGrid::for_network`] in units of the widest relevant linewidth.
pub const DEFAULT_SPAN_LINEWIDTHS: f64 = 20.0;

impl FrequencyGrid {
    /// `points` samples (rounded up to odd, so ω = 0 is included) on [−half_span, half_span].
    pub fn symmetric(half_span: f64, points: usize) -> Result<Self> {
        if !(half_span.is_finite() && half_span > 0.0) {
            return Err(Error::param("omega_span", format!("must be finite and > 0, got {half_span}")));
        }
        if points < 3 {
            return Err(Error::param("omega_points", format!("need at least 3, got {points}")));
        }
        let points = points | 1;
        let half = (points / 2) as f64;
        let step = half_span / half;
        let omegas = (0..points).map(|k| (k as f64 - half) * step).collect();
        Ok(FrequencyGrid { omegas, step })
    }

    /// Grid resolving the narrowest drift linewidth and spanning the widest
    /// of that linewidth and κ_e (the microwave thermal-leakage pedestal).
    pub fn for_network(network: &LinearNetwork) -> Result<Self> {
        let narrowest = narrowest_linewidth(network);
        if !(narrowest > 0.0) {
            return Err(Error::Unstable { max_real: stability(network).max_real });
        }
        let half_span = DEFAULT_SPAN_LINEWIDTHS * narrowest.max(network.derived.kappa_e);
        let step = narrowest / DEFAULT_POINTS_PER_LINEWIDTH;
        let points = 2.0 * (half_span / step).ceil() + 1.0;
        if points > MAX_GRID_POINTS as f64 {
            return Err(Error::param(
                "omega_points",
                format!("default grid would need {points:e} points; pass an explicit span and point count"),
            ));
        }
        Self::symmetric(half_span, points as usize)
    }

    /// Same span, `factor`× the density.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let half_span = *self.omegas.last().unwrap_or(&0.0);
        Self::symmetric(half_span, (self.omegas.len() - 1) * factor + 1)
    }

    pub fn points_per_linewidth(&self, linewidth: f64) -> f64 {
        linewidth / self.step
    }

    /// Rejects grids with fewer than [`MIN_POINTS_PER_LINEWIDTH`] samples
    /// across the narrowest linewidth of `network`.
    pub fn check_resolution(&self, network: &LinearNetwork) -> Result<()> {
        let ppl = self.points_per_linewidth(narrowest_linewidth(network));
        if !(ppl >= MIN_POINTS_PER_LINEWIDTH) {
            return Err(Error::CoarseGrid { points_per_linewidth: ppl, required: MIN_POINTS_PER_LINEWIDTH });
        }
        Ok(())
    }

    /// Trapezoidal integral of samples taken on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        trapezoid(values, self.step)
    }
}

pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Narrowest linewidth among the output-visible eigenmodes (all modes when
/// none is visible).
pub fn narrowest_linewidth(network: &LinearNetwork) -> f64 {
    let visible = network.output_linewidths();
    let widths = if visible.is_empty() { network.linewidths() } else { visible };
    widths.first().copied().unwrap_or(0.0)
}

//! Time-bin analyzers, on/off detectors, heralded coincidence statistics and
//! counting-rate budgets.
//!
//! A detector with efficiency η is the POVM Π_off = Σ (1 − η)^N |N⟩⟨N|.
//! For a Gaussian state with covariance V (vacuum = I) its no-click
//! probability is 2/((2 − η)√det Σ) with Σ = η/(2 − η)·V + I.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2, Matrix4, SMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    pair_correlations, require_stable, spectrum, FrequencyGrid, LinearNetwork, StandardFormState,
};
use crate::entanglement::{chsh_s, chsh_settings, check_eta, fidelity_lower_bound, BellReport, ProbabilityTable};
use crate::error::{Error, Result};

type Matrix8 = SMatrix<f64, 8, 8>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta: f64,
    pub transmissivity: f64,
    /// Dark count rate, Hz.
    pub dark_rate: f64,
    /// Collection window τ_b, seconds.
    pub window: f64,
}

impl DetectorModel {
    pub fn ideal(window: f64) -> Self {
        DetectorModel { eta: 1.0, transmissivity: 1.0, dark_rate: 0.0, window }
    }

    pub fn validate(&self) -> Result<()> {
        check_eta("eta", self.eta)?;
        if !(0.0..=1.0).contains(&self.transmissivity) {
            return Err(Error::param(
                "transmissivity",
                format!("must lie in [0, 1], got {}", self.transmissivity),
            ));
        }
        if !(self.dark_rate.is_finite() && self.dark_rate >= 0.0) {
            return Err(Error::param("dark_rate", format!("must be finite and >= 0, got {}", self.dark_rate)));
        }
        if !(self.window.is_finite() && self.window > 0.0) {
            return Err(Error::param("window", format!("must be finite and > 0, got {}", self.window)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    fn index(self) -> usize {
        match self {
            Branch::Plus => 0,
            Branch::Minus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub phi_o: f64,
    pub phi_e: f64,
    pub mu: Branch,
    pub nu: Branch,
}

impl MeasurementSetting {
    pub fn new(phi_o: f64, phi_e: f64, mu: Branch, nu: Branch) -> Self {
        MeasurementSetting { phi_o, phi_e, mu, nu }
    }

    /// Weight of w² in the coincidence probability, (1 + μν cos(φ_o − φ_e))/2.
    pub fn overlap(&self) -> f64 {
        0.5 * (1.0 + self.mu.sign() * self.nu.sign() * (self.phi_o - self.phi_e).cos())
    }
}

/// Real quadrature map of a passive two-mode transformation a′ = U a.
fn passive_quadrature_map(u: &Matrix2<Complex64>) -> Matrix4<f64> {
    let mut t = Matrix4::zeros();
    for k in 0..2 {
        for j in 0..2 {
            let z = u[(k, j)];
            t[(2 * k, 2 * j)] = z.re;
            t[(2 * k, 2 * j + 1)] = -z.im;
            t[(2 * k + 1, 2 * j)] = z.im;
            t[(2 * k + 1, 2 * j + 1)] = z.re;
        }
    }
    t
}

/// Optical interferometer: (a⁺, a⁻) = [[1, e^{−iφ}], [−e^{iφ}, 1]] (a⁽¹⁾, a⁽²⁾)/√2.
fn optical_analyzer(phi: f64) -> Matrix2<Complex64> {
    let e = Complex64::from_polar(1.0, phi);
    Matrix2::new(Complex64::new(1.0, 0.0), e.conj(), -e, Complex64::new(1.0, 0.0)).unscale(2f64.sqrt())
}

/// Microwave analyzer: (c⁺, c⁻) = [[1, e^{iφ}], [−e^{−iφ}, 1]] (c⁽¹⁾, c⁽²⁾)/√2.
fn microwave_analyzer(phi: f64) -> Matrix2<Complex64> {
    let e = Complex64::from_polar(1.0, phi);
    Matrix2::new(Complex64::new(1.0, 0.0), e, -e.conj(), Complex64::new(1.0, 0.0)).unscale(2f64.sqrt())
}

/// Covariance of two uncorrelated time-bin copies of `state`, ordered
/// (a⁽¹⁾, a⁽²⁾, c⁽¹⁾, c⁽²⁾), each as a (q, p) pair.
fn time_bin_covariance(state: &StandardFormState) -> Matrix8 {
    let mut v = Matrix8::zeros();
    for k in 0..4 {
        v[(k, k)] = state.u;
        v[(4 + k, 4 + k)] = state.v;
    }
    for bin in 0..2 {
        let (o, e) = (2 * bin, 4 + 2 * bin);
        v[(o, e)] = -state.w;
        v[(e, o)] = -state.w;
        v[(o + 1, e + 1)] = state.w;
        v[(e + 1, o + 1)] = state.w;
    }
    v
}

/// Reduced covariance of {q_o^μ, p_o^μ, q_e^ν, p_e^ν} behind the analyzers.
pub fn measurement_covariance(state: &StandardFormState, setting: &MeasurementSetting) -> Result<Matrix4<f64>> {
    state.check_physical()?;
    let mut t = Matrix8::zeros();
    t.fixed_view_mut::<4, 4>(0, 0).copy_from(&passive_quadrature_map(&optical_analyzer(setting.phi_o)));
    t.fixed_view_mut::<4, 4>(4, 4).copy_from(&passive_quadrature_map(&microwave_analyzer(setting.phi_e)));
    let full = t * time_bin_covariance(state) * t.transpose();
    let rows = [
        2 * setting.mu.index(),
        2 * setting.mu.index() + 1,
        4 + 2 * setting.nu.index(),
        4 + 2 * setting.nu.index() + 1,
    ];
    Ok(Matrix4::from_fn(|i, j| full[(rows[i], rows[j])]))
}

fn no_click_single(v: &Matrix2<f64>, eta: f64) -> f64 {
    let k = eta / (2.0 - eta);
    let sigma = v * k + Matrix2::identity();
    2.0 / ((2.0 - eta) * sigma.determinant().sqrt())
}

fn no_click_joint(v: &Matrix4<f64>, eta_o: f64, eta_e: f64) -> f64 {
    let scale = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        eta_o / (2.0 - eta_o),
        eta_o / (2.0 - eta_o),
        eta_e / (2.0 - eta_e),
        eta_e / (2.0 - eta_e),
    ));
    let sigma = v * scale + Matrix4::identity();
    4.0 / ((2.0 - eta_o) * (2.0 - eta_e) * sigma.determinant().sqrt())
}

/// Click probability 1 − 2/((2 − η)√det Σ) of one on/off detector.
pub fn click_probability(v: &Matrix2<f64>, eta: f64) -> Result<f64> {
    check_eta("eta", eta)?;
    Ok(1.0 - no_click_single(v, eta))
}

fn split(v: &Matrix4<f64>) -> (Matrix2<f64>, Matrix2<f64>) {
    (v.fixed_view::<2, 2>(0, 0).into_owned(), v.fixed_view::<2, 2>(2, 2).into_owned())
}

/// Both detectors click, evaluated from the 4×4 covariance through the
/// single and joint Σ determinants.
pub fn coincidence_from_covariance(v: &Matrix4<f64>, eta_o: f64, eta_e: f64) -> Result<f64> {
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    let (va, vc) = split(v);
    Ok(1.0 - no_click_single(&va, eta_o) - no_click_single(&vc, eta_e) + no_click_joint(v, eta_o, eta_e))
}

/// Optical detector clicks while the microwave detector stays silent.
pub fn click_no_click_from_covariance(v: &Matrix4<f64>, eta_o: f64, eta_e: f64) -> Result<f64> {
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    let (_, vc) = split(v);
    Ok(no_click_single(&vc, eta_e) - no_click_joint(v, eta_o, eta_e))
}

/// Both detectors silent.
pub fn no_click_from_covariance(v: &Matrix4<f64>, eta_o: f64, eta_e: f64) -> Result<f64> {
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    Ok(no_click_joint(v, eta_o, eta_e))
}

/// Coincidence probability behind the analyzers, covariance path.
pub fn coincidence_probability_covariance(
    state: &StandardFormState,
    setting: &MeasurementSetting,
    eta_o: f64,
    eta_e: f64,
) -> Result<f64> {
    coincidence_from_covariance(&measurement_covariance(state, setting)?, eta_o, eta_e)
}

/// Closed-form coincidence probability
/// 1 − 2/a − 2/b + 4/(ab − η_oη_e w² (1 + μν cos(φ_o − φ_e))/2),
/// a = 2 + η_o(u − 1), b = 2 + η_e(v − 1), evaluated without cancellation.
pub fn coincidence_probability(
    state: &StandardFormState,
    setting: &MeasurementSetting,
    eta_o: f64,
    eta_e: f64,
) -> Result<f64> {
    state.check_physical()?;
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    Ok(closed_form(state, setting.overlap(), eta_o, eta_e))
}

fn closed_form(state: &StandardFormState, overlap: f64, eta_o: f64, eta_e: f64) -> f64 {
    let (da, db) = (eta_o * (state.u - 1.0), eta_e * (state.v - 1.0));
    let ab = (2.0 + da) * (2.0 + db);
    let x = eta_o * eta_e * state.w * state.w * overlap;
    (da * db + 4.0 * x / (ab - x)) / ab
}

/// Single-side click probability 1 − 2/(2 + η(u − 1)) behind either analyzer port.
pub fn single_click_probability(variance: f64, eta: f64) -> Result<f64> {
    check_eta("eta", eta)?;
    let d = eta * (variance - 1.0);
    Ok(d / (2.0 + d))
}

/// Heralded table p^{μν} at analyzer phases (φ_o, φ_e).
pub fn normalized_probabilities(
    state: &StandardFormState,
    phi_o: f64,
    phi_e: f64,
    eta_o: f64,
    eta_e: f64,
) -> Result<ProbabilityTable> {
    let mut raw = [[0.0; 2]; 2];
    for mu in Branch::BOTH {
        for nu in Branch::BOTH {
            raw[mu.index()][nu.index()] =
                coincidence_probability(state, &MeasurementSetting::new(phi_o, phi_e, mu, nu), eta_o, eta_e)?;
        }
    }
    ProbabilityTable::from_raw(phi_o, phi_e, raw)
}

/// CHSH report at (0, φ_e; π/2, φ_e + π/2) plus the fidelity bound, both
/// from heralded tables.
pub fn bell_report(state: &StandardFormState, eta_o: f64, eta_e: f64, phi_e: f64) -> Result<BellReport> {
    let [a, b, a2, b2] = chsh_settings(phi_e);
    let tables = [(a, b), (a2, b2), (a2, b), (a, b2)]
        .map(|(po, pe)| normalized_probabilities(state, po, pe, eta_o, eta_e));
    let [t0, t1, t2, t3] = tables;
    let mut report = chsh_s(&[t0?, t1?, t2?, t3?])?;
    let p00 = normalized_probabilities(state, 0.0, 0.0, eta_o, eta_e)?;
    let p_half = normalized_probabilities(state, FRAC_PI_2, FRAC_PI_2, eta_o, eta_e)?;
    report.f_lb = Some(fidelity_lower_bound(&p00, &p_half)?);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratedCoincidence {
    /// ∫ P(ω) dω over the grid (rad/s).
    pub value: f64,
    /// |I − I_{2h}| / |I| from the half-density subgrid, when it exists.
    pub resolution_estimate: Option<f64>,
}

fn checked_states(network: &LinearNetwork, n_ba: f64, grid: &FrequencyGrid) -> Result<Vec<StandardFormState>> {
    require_stable(network)?;
    grid.check_resolution(network)?;
    spectrum(network, &grid.omegas, n_ba)
}

fn integrate_with_estimate(grid: &FrequencyGrid, values: &[f64]) -> IntegratedCoincidence {
    let value = grid.integrate(values);
    let resolution_estimate = ((values.len() - 1).is_multiple_of(2) && values.len() >= 5).then(|| {
        let half: Vec<f64> = values.iter().step_by(2).copied().collect();
        let coarse = crate::dynamics::trapezoid(&half, 2.0 * grid.step);
        if value == 0.0 {
            if coarse == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            ((value - coarse) / value).abs()
        }
    });
    IntegratedCoincidence { value, resolution_estimate }
}

/// Frequency-integrated coincidence probability for one setting.
pub fn coincidence_integrated(
    network: &LinearNetwork,
    n_ba: f64,
    setting: &MeasurementSetting,
    eta_o: f64,
    eta_e: f64,
    grid: &FrequencyGrid,
) -> Result<IntegratedCoincidence> {
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    let states = checked_states(network, n_ba, grid)?;
    let values: Vec<f64> = states.iter().map(|s| closed_form(s, setting.overlap(), eta_o, eta_e)).collect();
    Ok(integrate_with_estimate(grid, &values))
}

/// Heralded table from frequency-integrated coincidences.
pub fn normalized_probabilities_integrated(
    network: &LinearNetwork,
    n_ba: f64,
    phi_o: f64,
    phi_e: f64,
    eta_o: f64,
    eta_e: f64,
    grid: &FrequencyGrid,
) -> Result<ProbabilityTable> {
    check_eta("eta_o", eta_o)?;
    check_eta("eta_e", eta_e)?;
    let states = checked_states(network, n_ba, grid)?;
    let mut raw = [[0.0; 2]; 2];
    for mu in Branch::BOTH {
        for nu in Branch::BOTH {
            let overlap = MeasurementSetting::new(phi_o, phi_e, mu, nu).overlap();
            let values: Vec<f64> = states.iter().map(|s| closed_form(s, overlap, eta_o, eta_e)).collect();
            raw[mu.index()][nu.index()] = grid.integrate(&values);
        }
    }
    ProbabilityTable::from_raw(phi_o, phi_e, raw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRates {
    /// Optical photon flux, Hz.
    pub r_o: f64,
    /// Microwave photon flux, Hz.
    pub r_e: f64,
    pub omegas: Vec<f64>,
    /// ⟨c[ω] a[−ω]⟩ spectral density; |·| = w(ω)/2.
    pub cross_spectrum: Vec<Complex64>,
    pub step: f64,
}

/// Photon fluxes R = (1/2π)∫(u − 1)/2 dω (optical) and (1/2π)∫(v − 1)/2 dω
/// (microwave) from the coupling ports, plus the pair cross spectrum.
pub fn generation_rates(network: &LinearNetwork, n_ba: f64, grid: &FrequencyGrid) -> Result<GenerationRates> {
    require_stable(network)?;
    grid.check_resolution(network)?;
    let pairs = grid
        .omegas
        .par_iter()
        .map(|&w| pair_correlations(network, w, n_ba))
        .collect::<Result<Vec<_>>>()?;
    let flux_o: Vec<f64> = pairs.iter().map(|p| p.n_o).collect();
    let flux_e: Vec<f64> = pairs.iter().map(|p| p.n_e).collect();
    Ok(GenerationRates {
        r_o: grid.integrate(&flux_o) / TAU,
        r_e: grid.integrate(&flux_e) / TAU,
        omegas: grid.omegas.clone(),
        cross_spectrum: pairs.iter().map(|p| p.cross).collect(),
        step: grid.step,
    })
}

impl GenerationRates {
    /// Pair correlation function R_oe(τ) = (1/2π)∫ ⟨c[ω]a[−ω]⟩ e^{−iωτ} dω.
    pub fn pair_correlation(&self, tau: f64) -> Complex64 {
        let n = self.omegas.len();
        let sum: Complex64 = self
            .omegas
            .iter()
            .zip(&self.cross_spectrum)
            .enumerate()
            .map(|(k, (&w, &m))| {
                let weight = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
                m * Complex64::from_polar(weight, -w * tau)
            })
            .sum();
        sum * self.step / TAU
    }

    /// ∫₀^τ_b |R_oe(τ)|² dτ.
    pub fn correlated_pairs(&self, window: f64) -> Result<f64> {
        let period = TAU / self.step;
        if !(period > 2.0 * window) {
            return Err(Error::param(
                "omega_grid",
                format!("frequency step {:e} rad/s aliases R_oe within the {window:e} s window", self.step),
            ));
        }
        let half_span = self.omegas.last().copied().unwrap_or(0.0);
        let max_step = PI / (4.0 * half_span.max(f64::MIN_POSITIVE));
        let intervals = ((window / max_step).ceil() as usize).max(64);
        let dt = window / intervals as f64;
        let values: Vec<f64> = (0..=intervals)
            .into_par_iter()
            .map(|k| self.pair_correlation(k as f64 * dt).norm_sqr())
            .collect();
        Ok(crate::dynamics::trapezoid(&values, dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum G2 {
    Finite(f64),
    /// No accidental coincidences but nonzero correlated ones.
    Infinite,
    /// No coincidences at all.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBudget {
    pub r_o: f64,
    pub r_e: f64,
    pub r_cc: f64,
    pub r_ac: f64,
    pub r_c: f64,
    pub g2: G2,
    /// D_o/(η_o T_o R_o); absent when the detected signal rate vanishes.
    pub xi_o: Option<f64>,
    pub xi_e: Option<f64>,
    /// g2 / (2 + ξ_o + ξ_e + ξ_o ξ_e); entanglement fidelity needs this ≫ 1.
    pub condition_ratio: Option<f64>,
    /// Fraction of time the detectors collect, τ_b / repetition period.
    pub duty_cycle: f64,
    /// Time-averaged joint detection rate R_c · duty_cycle, Hz.
    pub joint_rate: f64,
}

fn dark_ratio(dark: f64, signal: f64) -> Option<f64> {
    if signal > 0.0 {
        Some(dark / signal)
    } else if dark == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

/// Counting-rate budget for collection windows τ_b repeated every
/// `repetition_period` seconds (continuous collection when `None`).
pub fn rate_budget(
    rates: &GenerationRates,
    optical: &DetectorModel,
    microwave: &DetectorModel,
    repetition_period: Option<f64>,
) -> Result<RateBudget> {
    optical.validate()?;
    microwave.validate()?;
    if optical.window != microwave.window {
        return Err(Error::param("window", "optical and microwave collection windows differ"));
    }
    let window = optical.window;
    let duty_cycle = match repetition_period {
        None => 1.0,
        Some(t) if t.is_finite() && t >= window => window / t,
        Some(t) => {
            return Err(Error::param(
                "repetition_period",
                format!("must be finite and >= the collection window {window:e} s, got {t:e}"),
            ))
        }
    };
    let signal_o = optical.eta * optical.transmissivity * rates.r_o;
    let signal_e = microwave.eta * microwave.transmissivity * rates.r_e;
    let r_ac = (signal_o + optical.dark_rate) * (signal_e + microwave.dark_rate) * window;
    let r_cc = optical.eta * microwave.eta * optical.transmissivity * microwave.transmissivity
        * rates.correlated_pairs(window)?;
    let r_c = r_ac + r_cc;
    let g2 = if r_ac > 0.0 {
        G2::Finite(r_c / r_ac)
    } else if r_cc > 0.0 {
        G2::Infinite
    } else {
        G2::Undefined
    };
    let xi_o = dark_ratio(optical.dark_rate, signal_o);
    let xi_e = dark_ratio(microwave.dark_rate, signal_e);
    let condition_ratio = match (g2, xi_o, xi_e) {
        (G2::Finite(g), Some(a), Some(b)) => Some(g / (2.0 + a + b + a * b)),
        _ => None,
    };
    Ok(RateBudget {
        r_o: rates.r_o,
        r_e: rates.r_e,
        r_cc,
        r_ac,
        r_c,
        g2,
        xi_o,
        xi_e,
        condition_ratio,
        duty_cycle,
        joint_rate: r_c * duty_cycle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_rwa_network;
    use crate::params::SystemParams;
    use std::f64::consts::FRAC_PI_4;

    fn state(u: f64, v: f64, w: f64) -> StandardFormState {
        StandardFormState::new(0.0, u, v, w)
    }

    fn operating_point() -> StandardFormState {
        state(1.0801399168750, 1.4005, 0.4263351020130)
    }

    #[test]
    fn analyzers_are_unitary() {
        for phi in [0.0, 0.3, 2.0] {
            for u in [optical_analyzer(phi), microwave_analyzer(phi)] {
                assert!((u * u.adjoint() - Matrix2::identity()).norm() < 1e-15);
                let t = passive_quadrature_map(&u);
                assert!((t * t.transpose() - Matrix4::identity()).amax() < 1e-15);
            }
        }
    }

    #[test]
    fn analyzer_blocks() {
        let s = operating_point();
        for mu in Branch::BOTH {
            for nu in Branch::BOTH {
                let v = measurement_covariance(&s, &MeasurementSetting::new(0.4, -1.1, mu, nu)).unwrap();
                let (va, vc) = split(&v);
                assert!((va - Matrix2::identity() * s.u).amax() < 1e-14);
                assert!((vc - Matrix2::identity() * s.v).amax() < 1e-14);
            }
        }
        let v = measurement_covariance(&state(1.3, 2.0, 0.0), &MeasurementSetting::new(0.4, 1.0, Branch::Plus, Branch::Minus))
            .unwrap();
        assert_eq!(v.fixed_view::<2, 2>(0, 2).amax(), 0.0);
    }

    #[test]
    fn closed_form_matches_covariance_path() {
        let s = operating_point();
        for (po, pe) in [(0.0, 0.0), (0.3, 1.7), (FRAC_PI_2, FRAC_PI_4), (2.5, -0.4)] {
            for mu in Branch::BOTH {
                for nu in Branch::BOTH {
                    let set = MeasurementSetting::new(po, pe, mu, nu);
                    let a = coincidence_probability(&s, &set, 0.5, 0.7).unwrap();
                    let b = coincidence_probability_covariance(&s, &set, 0.5, 0.7).unwrap();
                    assert!((a - b).abs() < 1e-12, "{po} {pe} {mu:?} {nu:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn vacuum_never_clicks() {
        for eta in [0.0, 0.4, 1.0] {
            assert!(click_probability(&Matrix2::identity(), eta).unwrap().abs() < 1e-15);
        }
        assert_eq!(click_probability(&(Matrix2::identity() * 5.0), 0.0).unwrap(), 0.0);
        assert!(click_probability(&Matrix2::identity(), 1.5).is_err());
    }

    #[test]
    fn thermal_click() {
        let (n, eta) = (0.8, 0.6);
        let p = click_probability(&(Matrix2::identity() * (2.0 * n + 1.0)), eta).unwrap();
        assert!((p - (1.0 - 1.0 / (1.0 + eta * n))).abs() < 1e-14);
    }

    #[test]
    fn independent_sides_factorize() {
        let s = state(1.6, 1.2, 0.0);
        let set = MeasurementSetting::new(0.2, 0.9, Branch::Plus, Branch::Plus);
        let p = coincidence_probability(&s, &set, 0.5, 0.8).unwrap();
        let expected = single_click_probability(1.6, 0.5).unwrap() * single_click_probability(1.2, 0.8).unwrap();
        assert!((p - expected).abs() < 1e-15);
        assert_eq!(coincidence_probability(&operating_point(), &set, 0.0, 0.8).unwrap(), 0.0);
    }

    #[test]
    fn operating_point_regression() {
        let set = MeasurementSetting::new(0.0, 0.0, Branch::Plus, Branch::Plus);
        let p = coincidence_probability(&operating_point(), &set, 0.5, 0.5).unwrap();
        // 1 − 2/a − 2/b + 4/(ab − w²/4) by hand, a = 2.04006996, b = 2.20025
        let (a, b) = (2.0400699584375, 2.20025);
        let hand = 1.0 - 2.0 / a - 2.0 / b + 4.0 / (a * b - 0.25 * 0.4263351020130f64.powi(2));
        assert!((p - hand).abs() < 1e-13, "{p} vs {hand}");
    }

    #[test]
    fn anticorrelated_branch_is_minimal_at_equal_phases() {
        let s = operating_point();
        let at = |po: f64, pe: f64, nu: Branch| {
            coincidence_probability(&s, &MeasurementSetting::new(po, pe, Branch::Plus, nu), 0.5, 0.5).unwrap()
        };
        let min_eq = at(0.7, 0.7, Branch::Minus);
        for k in 0..64 {
            for j in 0..64 {
                let (po, pe) = (k as f64 * TAU / 64.0, j as f64 * TAU / 64.0);
                for nu in Branch::BOTH {
                    assert!(at(po, pe, nu) >= min_eq - 1e-15);
                }
            }
        }
    }

    #[test]
    fn heralded_tables() {
        let t = normalized_probabilities(&state(1.3, 1.5, 0.0), 0.3, 1.1, 0.5, 0.5).unwrap();
        for p in t.p.iter().flatten() {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let t = normalized_probabilities(&operating_point(), 0.4, 0.4, 0.5, 0.5).unwrap();
        assert!((t.p.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(t.p[0][0] > t.p[0][1]);
        assert!(matches!(
            normalized_probabilities(&StandardFormState::vacuum(), 0.0, 0.0, 0.5, 0.5),
            Err(Error::UndefinedNormalization)
        ));
    }

    #[test]
    fn dual_paths_for_bell_quantities() {
        let s = operating_point();
        let report = bell_report(&s, 0.5, 0.5, FRAC_PI_4).unwrap();
        let f = crate::entanglement::fidelity_lower_bound_analytic(&s, 0.5, 0.5).unwrap();
        let smax = crate::entanglement::chsh_max_analytic(&s, 0.5, 0.5).unwrap();
        assert!((report.f_lb.unwrap() - f).abs() < 1e-12);
        assert!((report.s_value - smax).abs() < 1e-12);
        for phi_e in [0.0, 0.5, 2.0] {
            let a = bell_report(&s, 0.5, 0.5, phi_e).unwrap().s_value;
            let b = crate::entanglement::chsh_s_analytic(&s, 0.5, 0.5, phi_e).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn reference_device() -> LinearNetwork {
        build_rwa_network(&SystemParams::reference().with_c_om(1.0).unwrap().with_n_ba(1.67)).unwrap()
    }

    #[test]
    fn integrated_coincidence_converges() {
        let net = reference_device();
        let grid = FrequencyGrid::for_network(&net).unwrap();
        let set = MeasurementSetting::new(0.0, 0.0, Branch::Plus, Branch::Plus);
        let coarse = coincidence_integrated(&net, 1.67, &set, 0.5, 0.5, &grid).unwrap();
        let fine = coincidence_integrated(&net, 1.67, &set, 0.5, 0.5, &grid.refined(2).unwrap()).unwrap();
        assert!(((coarse.value - fine.value) / fine.value).abs() < 1e-6);
        assert!(coarse.resolution_estimate.unwrap() < 1e-6);
        let too_coarse = FrequencyGrid::symmetric(*grid.omegas.last().unwrap(), 51).unwrap();
        assert!(matches!(
            coincidence_integrated(&net, 1.67, &set, 0.5, 0.5, &too_coarse),
            Err(Error::CoarseGrid { .. })
        ));
    }

    #[test]
    fn zero_coupling_gives_no_coincidences() {
        let mut p = SystemParams::reference().with_n_ba(0.0);
        p.g_em = 0.0;
        let net = build_rwa_network(&p).unwrap();
        let grid = FrequencyGrid::for_network(&net).unwrap();
        let set = MeasurementSetting::new(0.0, 0.0, Branch::Plus, Branch::Plus);
        assert_eq!(coincidence_integrated(&net, 0.0, &set, 0.5, 0.5, &grid).unwrap().value, 0.0);
        let rates = generation_rates(&net, 0.0, &grid).unwrap();
        assert_eq!(rates.r_o, 0.0);
        assert!(rates.r_e.abs() < 1e-3);
        assert!(rates.cross_spectrum.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn thermal_leakage_rates() {
        let net = build_rwa_network(&SystemParams::reference().with_n_ba(1.67)).unwrap();
        let grid = FrequencyGrid::for_network(&net).unwrap();
        let rates = generation_rates(&net, 1.67, &grid).unwrap();
        assert_eq!(rates.r_o, 0.0);
        assert!(rates.r_e > 0.0);
    }

    #[test]
    fn ideal_detectors_budget() {
        let net = reference_device();
        let grid = FrequencyGrid::for_network(&net).unwrap();
        let rates = generation_rates(&net, 1.67, &grid).unwrap();
        let ideal = DetectorModel::ideal(1e-6);
        let b = rate_budget(&rates, &ideal, &ideal, None).unwrap();
        assert_eq!(b.xi_o, Some(0.0));
        assert_eq!(b.r_c, b.r_ac + b.r_cc);
        assert_eq!(b.joint_rate, b.r_c);
        let pulsed = rate_budget(&rates, &ideal, &ideal, Some(10e-6)).unwrap();
        assert!((pulsed.duty_cycle - 0.1).abs() < 1e-15);
        assert!(pulsed.joint_rate > 1e3 && pulsed.joint_rate < 1e5, "{pulsed:?}");
        assert!(rate_budget(&rates, &ideal, &ideal, Some(1e-7)).is_err());
        let G2::Finite(g) = b.g2 else { panic!("g2 {:?}", b.g2) };
        assert_eq!(b.condition_ratio, Some(g / 2.0));

        let lossy = DetectorModel { transmissivity: 0.5, ..ideal };
        let l = rate_budget(&rates, &lossy, &lossy, None).unwrap();
        assert!((l.r_cc - 0.25 * b.r_cc).abs() < 1e-12 * b.r_cc);
        assert!((l.r_ac - 0.25 * b.r_ac).abs() < 1e-12 * b.r_ac);

        let dark = DetectorModel { dark_rate: 1e3, ..ideal };
        let d = rate_budget(&rates, &dark, &dark, None).unwrap();
        let G2::Finite(gd) = d.g2 else { panic!() };
        assert!(d.r_ac > b.r_ac && gd < g);
    }

    #[test]
    fn budget_flags() {
        let rates = GenerationRates { r_o: 0.0, r_e: 0.0, omegas: vec![-1.0, 0.0, 1.0], cross_spectrum: vec![Complex64::new(0.0, 0.0); 3], step: 1.0 };
        let ideal = DetectorModel::ideal(1e-6);
        let b = rate_budget(&rates, &ideal, &ideal, None).unwrap();
        assert_eq!(b.g2, G2::Undefined);
        assert_eq!(b.condition_ratio, None);
        let bad = DetectorModel { eta: 2.0, ..ideal };
        assert!(rate_budget(&rates, &bad, &ideal, None).is_err());
    }
}

//! Entanglement of formation, Gaussian purity, the heralded Bell-state
//! fidelity lower bound and the CHSH quantity.
//!
//! The probability-fed functions take normalized heralded tables (see
//! [`crate::detection::normalized_probabilities`]); the `*_analytic`
//! functions evaluate the resonant closed forms directly from (u, v, w).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use serde::{Deserialize, Serialize};

use crate::dynamics::StandardFormState;
use crate::error::{Error, Result};
use crate::gaussian::PHYSICALITY_TOL;

/// Tolerance on Σ p = 1 for a heralded probability table.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Relative tolerance within which a negative γ² − β₊β₋ is treated as zero.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub e_f: f64,
    pub r_antisqueeze: f64,
    pub purity: f64,
    pub gamma: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
}

/// Normalized heralded probabilities p^{μν} at one analyzer setting.
/// `p[i][j]` holds μ = ± for i = 0/1 and ν = ± for j = 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub phi_o: f64,
    pub phi_e: f64,
    pub p: [[f64; 2]; 2],
}

impl ProbabilityTable {
    /// Normalizes raw coincidence probabilities (or integrated counts).
    pub fn from_raw(phi_o: f64, phi_e: f64, raw: [[f64; 2]; 2]) -> Result<Self> {
        let sum: f64 = raw.iter().flatten().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::UndefinedNormalization);
        }
        let p = raw.map(|row| row.map(|x| x / sum));
        Ok(ProbabilityTable { phi_o, phi_e, p })
    }

    pub fn uniform(phi_o: f64, phi_e: f64) -> Self {
        ProbabilityTable { phi_o, phi_e, p: [[0.25; 2]; 2] }
    }

    pub fn check(&self) -> Result<()> {
        let sum: f64 = self.p.iter().flatten().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL || self.p.iter().flatten().any(|&x| !(x >= 0.0)) {
            return Err(Error::Unnormalized { sum });
        }
        Ok(())
    }

    /// Correlator E = p^{++} + p^{−−} − p^{+−} − p^{−+}.
    pub fn correlator(&self) -> f64 {
        self.p[0][0] + self.p[1][1] - self.p[0][1] - self.p[1][0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellReport {
    /// (φ_o, φ_e, φ_o′, φ_e′).
    pub settings: [f64; 4],
    /// E(φ_o, φ_e), E(φ_o′, φ_e′), E(φ_o′, φ_e), E(φ_o, φ_e′).
    pub correlators: [f64; 4],
    pub s_value: f64,
    /// Present when the tables at (0, 0) and (π/2, π/2) were supplied.
    pub f_lb: Option<f64>,
}

fn check_physical(state: &StandardFormState) -> Result<()> {
    state.check_physical()
}

pub fn purity(state: &StandardFormState) -> Result<f64> {
    check_physical(state)?;
    let det = state.det();
    if det < 1.0 - PHYSICALITY_TOL {
        return Err(Error::Unphysical { min_symplectic: state.symplectic_eigenvalues().0 });
    }
    // 1/√det V with det V = (uv − w²)²
    Ok((1.0 / (state.u * state.v - state.w * state.w)).min(1.0))
}

pub fn entanglement_of_formation(state: &StandardFormState) -> Result<EntanglementReport> {
    check_physical(state)?;
    let (u, v, w) = (state.u, state.v, state.w);
    let gamma = 2.0 * (state.det() + 1.0) - (u - v).powi(2);
    let beta_plus = (u + v + 2.0 * w).powi(2);
    let beta_minus = (u + v - 2.0 * w).powi(2);

    let mut disc = gamma * gamma - beta_plus * beta_minus;
    if disc < 0.0 {
        if disc >= -DISCRIMINANT_TOL * gamma * gamma {
            disc = 0.0;
        } else {
            return Err(Error::Unphysical { min_symplectic: state.symplectic_eigenvalues().0 });
        }
    }
    let r = 0.25 * ((gamma - disc.sqrt()) / beta_minus).ln();
    let r = if r > 0.0 { r } else { 0.0 };
    Ok(EntanglementReport {
        e_f: ef_from_antisqueeze(r),
        r_antisqueeze: r,
        purity: purity(state)?,
        gamma,
        beta_plus,
        beta_minus,
    })
}

/// cosh²r log₂ cosh²r − sinh²r log₂ sinh²r.
pub fn ef_from_antisqueeze(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let c2 = r.cosh().powi(2);
    let s2 = r.sinh().powi(2);
    (c2 * c2.log2() - s2 * s2.log2()).max(0.0)
}

/// Main-text fidelity lower bound from the tables at settings (0, 0) and (π/2, π/2).
pub fn fidelity_lower_bound(p00: &ProbabilityTable, p_half: &ProbabilityTable) -> Result<f64> {
    p00.check()?;
    p_half.check()?;
    let same: f64 = [p00, p_half].iter().map(|t| t.p[0][0] + t.p[1][1]).sum();
    Ok(same / 2.0 - p_half.p[0][1] / 2.0 - p_half.p[1][0] / 2.0 - (p00.p[0][1] * p00.p[1][0]).sqrt())
}

/// CHSH combination E(φ_o, φ_e) + E(φ_o′, φ_e′) + E(φ_o′, φ_e) − E(φ_o, φ_e′).
///
/// `tables` are at (φ_o, φ_e), (φ_o′, φ_e′), (φ_o′, φ_e), (φ_o, φ_e′).
pub fn chsh_s(tables: &[ProbabilityTable; 4]) -> Result<BellReport> {
    for t in tables {
        t.check()?;
    }
    let correlators = tables.map(|t| t.correlator());
    Ok(BellReport {
        settings: [tables[0].phi_o, tables[0].phi_e, tables[1].phi_o, tables[1].phi_e],
        correlators,
        s_value: correlators[0] + correlators[1] + correlators[2] - correlators[3],
        f_lb: None,
    })
}

/// Detector response terms shared by the resonant closed forms:
/// a = 2 + η_o(u − 1), b = 2 + η_e(v − 1), x = η_o η_e w².
#[derive(Debug, Clone, Copy)]
struct Response {
    a: f64,
    b: f64,
    x: f64,
    /// Product of single-side click probabilities, (a − 2)(b − 2)/(ab).
    p0: f64,
}

impl Response {
    fn new(state: &StandardFormState, eta_o: f64, eta_e: f64) -> Result<Self> {
        check_physical(state)?;
        check_eta("eta_o", eta_o)?;
        check_eta("eta_e", eta_e)?;
        let (da, db) = (eta_o * (state.u - 1.0), eta_e * (state.v - 1.0));
        let (a, b) = (2.0 + da, 2.0 + db);
        Ok(Response { a, b, x: eta_o * eta_e * state.w * state.w, p0: da * db / (a * b) })
    }

    /// 4/(ab − x·f) − 4/(ab), e.g. 𝒜 − ℬ for f = 1.
    fn excess(&self, f: f64) -> f64 {
        let ab = self.a * self.b;
        4.0 * self.x * f / (ab * (ab - self.x * f))
    }

    /// Normalized difference (X − Y)/(2 − 4/a − 4/b + X + Y) for
    /// X = 4/(ab − x·f₁), Y = 4/(ab − x·f₂).
    fn contrast(&self, f1: f64, f2: f64) -> Result<f64> {
        let (e1, e2) = (self.excess(f1), self.excess(f2));
        let denom = 2.0 * self.p0 + e1 + e2;
        if !(denom > 0.0) {
            return Err(Error::UndefinedNormalization);
        }
        Ok((e1 - e2) / denom)
    }
}

pub(crate) fn check_eta(name: &'static str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param(name, format!("efficiency must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Resonant F_lb = (𝒜 − ℬ)/(2 − 4/a − 4/b + 𝒜 + ℬ).
///
/// Evaluated in the algebraically identical form (𝒜 − ℬ)/(2P₀ + 𝒜 − ℬ),
/// P₀ = (a−2)(b−2)/(ab), which avoids cancellation for weak signals.
/// Undefined (no heralds at all) when η or the signal vanishes on both terms.
pub fn fidelity_lower_bound_analytic(state: &StandardFormState, eta_o: f64, eta_e: f64) -> Result<f64> {
    let r = Response::new(state, eta_o, eta_e)?;
    if r.x == 0.0 {
        return Ok(0.0);
    }
    r.contrast(1.0, 0.0)
}

/// S(0, φ_e; π/2, φ_e + π/2) in closed form.
pub fn chsh_s_analytic(state: &StandardFormState, eta_o: f64, eta_e: f64, phi_e: f64) -> Result<f64> {
    let r = Response::new(state, eta_o, eta_e)?;
    if r.x == 0.0 {
        return Ok(0.0);
    }
    let cos2 = |t: f64| t.cos().powi(2);
    let sin2 = |t: f64| t.sin().powi(2);
    let ef = r.contrast(cos2(FRAC_PI_4 - phi_e / 2.0), cos2(FRAC_PI_4 + phi_e / 2.0))?;
    let gh = r.contrast(cos2(phi_e / 2.0), sin2(phi_e / 2.0))?;
    Ok(2.0 * ef + 2.0 * gh)
}

/// |S|max = |4(𝒞 − 𝒟)/(2 − 4/a − 4/b + 𝒞 + 𝒟)|, attained at φ_e = π/4 + kπ.
pub fn chsh_max_analytic(state: &StandardFormState, eta_o: f64, eta_e: f64) -> Result<f64> {
    let r = Response::new(state, eta_o, eta_e)?;
    if r.x == 0.0 {
        return Ok(0.0);
    }
    let c = FRAC_PI_8.cos().powi(2);
    let s = FRAC_PI_8.sin().powi(2);
    Ok((4.0 * r.contrast(c, s)?).abs())
}

/// The analyzer settings (φ_o, φ_e, φ_o′, φ_e′) = (0, φ_e, π/2, φ_e + π/2).
pub fn chsh_settings(phi_e: f64) -> [f64; 4] {
    [0.0, phi_e, FRAC_PI_2, phi_e + FRAC_PI_2]
}

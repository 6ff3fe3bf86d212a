//! Device and environment parameters.
//!
//! Every rate and frequency is stored as an angular frequency in rad/s. The
//! JSON configuration layer ([`crate::config`]) takes ordinary frequencies in
//! Hz and converts once on load.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Piezoelectric (electromechanical) coupling rate.
    pub g_em: f64,
    /// Single-photon optomechanical coupling rate.
    pub g_om0: f64,
    /// Mean intracavity pump photon number.
    pub n_pump: f64,
    pub kappa_o_i: f64,
    pub kappa_o_c: f64,
    pub kappa_e_i: f64,
    pub kappa_e_c: f64,
    pub kappa_m: f64,
    pub omega_m: f64,
    pub omega_e: f64,
    /// Optical carrier frequency. Metadata only.
    pub omega_o: f64,
    /// Pump detuning; ω_m puts the pump on the blue sideband.
    pub delta_p: f64,
    /// Bath temperature in kelvin.
    pub temperature: f64,
    /// Explicit bath occupancy, bypassing the Planck formula.
    pub n_ba_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Pump-enhanced optomechanical coupling g_om0·√n_pump.
    pub g_om: f64,
    pub kappa_o: f64,
    pub kappa_e: f64,
    /// Optical extraction ratio κ_o,c/κ_o.
    pub zeta_o: f64,
    /// Microwave extraction ratio κ_e,c/κ_e.
    pub zeta_e: f64,
    pub c_om: f64,
    pub c_em: f64,
    pub n_ba: f64,
    /// 1 + C_em − C_om; the closed-form output state diverges where this vanishes.
    pub pdc_margin: f64,
}

impl SystemParams {
    /// The experimentally feasible operating point used throughout: all
    /// entries of the reference parameter table, with κ_o,c = κ_o,i,
    /// κ_e,c = 150·κ_e,i, the blue-sideband pump, T = 1 K and no pump
    /// photons (set the cooperativity with [`SystemParams::with_c_om`]).
    pub fn reference() -> Self {
        let kappa_e_i = TAU * 100e3;
        let kappa_o_i = TAU * 0.24e9;
        let omega_m = TAU * 10e9;
        SystemParams {
            g_em: TAU * 2.0e6,
            g_om0: TAU * 5.5e3,
            n_pump: 0.0,
            kappa_o_i,
            kappa_o_c: kappa_o_i,
            kappa_e_i,
            kappa_e_c: 150.0 * kappa_e_i,
            kappa_m: TAU * 20e3,
            omega_m,
            omega_e: TAU * 10e9,
            omega_o: TAU * 195e12,
            delta_p: omega_m,
            temperature: 1.0,
            n_ba_override: None,
        }
    }

    /// Sets κ_e,c = ratio·κ_e,i.
    pub fn with_readout_ratio(mut self, ratio: f64) -> Self {
        self.kappa_e_c = ratio * self.kappa_e_i;
        self
    }

    pub fn with_n_ba(mut self, n_ba: f64) -> Self {
        self.n_ba_override = Some(n_ba);
        self
    }

    /// Sets the pump photon number so that the optomechanical cooperativity
    /// equals `target`.
    pub fn with_c_om(mut self, target: f64) -> Result<Self> {
        self.n_pump = required_pump_photons(&self, target)?;
        Ok(self)
    }

    pub fn kappa_o(&self) -> f64 {
        self.kappa_o_i + self.kappa_o_c
    }

    pub fn kappa_e(&self) -> f64 {
        self.kappa_e_i + self.kappa_e_c
    }

    pub fn validate(&self) -> Result<()> {
        // Couplings and individual loss ports may vanish; total linewidths may not.
        let non_negative = [
            ("g_em", self.g_em),
            ("g_om0", self.g_om0),
            ("kappa_o_i", self.kappa_o_i),
            ("kappa_o_c", self.kappa_o_c),
            ("kappa_e_i", self.kappa_e_i),
            ("kappa_e_c", self.kappa_e_c),
        ];
        for (name, value) in non_negative {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        let positive = [
            ("kappa_o", self.kappa_o()),
            ("kappa_e", self.kappa_e()),
            ("kappa_m", self.kappa_m),
            ("omega_m", self.omega_m),
            ("omega_e", self.omega_e),
            ("omega_o", self.omega_o),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !self.delta_p.is_finite() {
            return Err(Error::param("delta_p", "must be finite"));
        }
        if !self.n_pump.is_finite() || self.n_pump < 0.0 {
            return Err(Error::param("n_pump", format!("must be finite and >= 0, got {}", self.n_pump)));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::param(
                "temperature",
                format!("must be finite and >= 0, got {}", self.temperature),
            ));
        }
        if let Some(n) = self.n_ba_override {
            if !n.is_finite() || n < 0.0 {
                return Err(Error::param("n_ba_override", format!("must be finite and >= 0, got {n}")));
            }
        }
        Ok(())
    }
}

/// Bose–Einstein occupancy (e^{ħω/k_B T} − 1)⁻¹ of a bath mode at angular
/// frequency `omega` and temperature `temperature`. Zero temperature is
/// handled exactly.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> Result<f64> {
    if !omega.is_finite() || omega <= 0.0 {
        return Err(Error::param("omega", format!("must be finite and > 0, got {omega}")));
    }
    if !temperature.is_finite() || temperature < 0.0 {
        return Err(Error::param(
            "temperature",
            format!("must be finite and >= 0, got {temperature}"),
        ));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR * omega / (K_B * temperature);
    // exp_m1 keeps precision in the classical (x ≪ 1) limit; overflow gives +inf → 0.
    Ok(1.0 / x.exp_m1())
}

pub fn derive(params: &SystemParams) -> Result<DerivedParams> {
    params.validate()?;
    let kappa_o = params.kappa_o();
    let kappa_e = params.kappa_e();
    let g_om = params.g_om0 * params.n_pump.sqrt();
    let c_om = 4.0 * g_om * g_om / (kappa_o * params.kappa_m);
    let c_em = 4.0 * params.g_em * params.g_em / (kappa_e * params.kappa_m);
    let n_ba = match params.n_ba_override {
        Some(n) => n,
        None => thermal_occupancy(params.omega_e, params.temperature)?,
    };
    Ok(DerivedParams {
        g_om,
        kappa_o,
        kappa_e,
        zeta_o: params.kappa_o_c / kappa_o,
        zeta_e: params.kappa_e_c / kappa_e,
        c_om,
        c_em,
        n_ba,
        pdc_margin: 1.0 + c_em - c_om,
    })
}

/// Pump photon number that yields optomechanical cooperativity `target_c_om`.
pub fn required_pump_photons(params: &SystemParams, target_c_om: f64) -> Result<f64> {
    if !target_c_om.is_finite() || target_c_om < 0.0 {
        return Err(Error::param("c_om", format!("must be finite and >= 0, got {target_c_om}")));
    }
    if target_c_om == 0.0 {
        return Ok(0.0);
    }
    if !(params.g_om0 > 0.0) {
        return Err(Error::UnreachableTarget {
            target: target_c_om,
            reason: "g_om0 is zero",
        });
    }
    let g_om_sq = target_c_om * params.kappa_o() * params.kappa_m / 4.0;
    Ok(g_om_sq / (params.g_om0 * params.g_om0))
}

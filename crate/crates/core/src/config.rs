//! JSON run configuration.
//!
//! Frequencies and rates are given in Hz (keys ending in `_hz`) and
//! converted to rad/s on load. Omitted device keys take the reference
//! values of [`SystemParams::reference`]. The pump is set by exactly one of
//! `n_pump` or `c_om`.
//!
//! ```json
//! {
//!   "c_om": 1.0,
//!   "kappa_e_c_hz": 15.0e6,
//!   "n_ba_override": 1.67,
//!   "detectors": {
//!     "optical": { "eta": 1.0, "transmissivity": 1.0, "dark_rate_hz": 0.0 },
//!     "microwave": { "eta": 1.0, "transmissivity": 1.0, "dark_rate_hz": 0.0 },
//!     "window_s": 1e-6,
//!     "repetition_period_s": 1e-5
//!   }
//! }
//! ```

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::DetectorModel;
use crate::error::{Error, Result};
use crate::params::{derive, SystemParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_em_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_om0_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_om: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_o_i_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_o_c_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_e_i_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_e_c_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_m_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_e_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_o_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_p_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ba_override: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detectors: Option<RawDetectors>,
    /// Written by [`RunConfig::resolved_json`] for reference; ignored on input.
    #[serde(default, skip_serializing)]
    pub derived: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDetector {
    pub eta: f64,
    pub transmissivity: f64,
    pub dark_rate_hz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDetectors {
    pub optical: RawDetector,
    pub microwave: RawDetector,
    pub window_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition_period_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detectors {
    pub optical: DetectorModel,
    pub microwave: DetectorModel,
    pub repetition_period: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub detectors: Option<Detectors>,
}

fn hz(value: Option<f64>, default_rad: f64) -> f64 {
    value.map_or(default_rad, |v| TAU * v)
}

impl RawDetector {
    fn resolve(&self, window: f64) -> DetectorModel {
        DetectorModel { eta: self.eta, transmissivity: self.transmissivity, dark_rate: self.dark_rate_hz, window }
    }
}

impl RawConfig {
    pub fn resolve(&self) -> Result<RunConfig> {
        let r = SystemParams::reference();
        let omega_m = hz(self.omega_m_hz, r.omega_m);
        let mut params = SystemParams {
            g_em: hz(self.g_em_hz, r.g_em),
            g_om0: hz(self.g_om0_hz, r.g_om0),
            n_pump: self.n_pump.unwrap_or(0.0),
            kappa_o_i: hz(self.kappa_o_i_hz, r.kappa_o_i),
            kappa_o_c: hz(self.kappa_o_c_hz, r.kappa_o_c),
            kappa_e_i: hz(self.kappa_e_i_hz, r.kappa_e_i),
            kappa_e_c: hz(self.kappa_e_c_hz, r.kappa_e_c),
            kappa_m: hz(self.kappa_m_hz, r.kappa_m),
            omega_m,
            omega_e: hz(self.omega_e_hz, r.omega_e),
            omega_o: hz(self.omega_o_hz, r.omega_o),
            delta_p: hz(self.delta_p_hz, omega_m),
            temperature: self.temperature_k.unwrap_or(r.temperature),
            n_ba_override: self.n_ba_override,
        };
        match (self.n_pump, self.c_om) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `n_pump` or `c_om`, not both".into()));
            }
            (None, Some(c_om)) => params = params.with_c_om(c_om)?,
            _ => {}
        }
        params.validate()?;

        let detectors = match &self.detectors {
            None => None,
            Some(d) => {
                let det = Detectors {
                    optical: d.optical.resolve(d.window_s),
                    microwave: d.microwave.resolve(d.window_s),
                    repetition_period: d.repetition_period_s,
                };
                det.optical.validate().map_err(|e| Error::Config(format!("detectors.optical: {e}")))?;
                det.microwave.validate().map_err(|e| Error::Config(format!("detectors.microwave: {e}")))?;
                if let Some(t) = det.repetition_period {
                    if !(t.is_finite() && t >= d.window_s) {
                        return Err(Error::Config(format!(
                            "detectors.repetition_period_s must be >= window_s, got {t}"
                        )));
                    }
                }
                Some(det)
            }
        };
        Ok(RunConfig { params, detectors })
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        raw.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn reference() -> Self {
        RunConfig { params: SystemParams::reference(), detectors: None }
    }

    /// The fully resolved configuration in file units, with the derived
    /// cooperativities and bath occupancy alongside.
    pub fn resolved_json(&self) -> Result<serde_json::Value> {
        let p = &self.params;
        let d = derive(p)?;
        let raw = RawConfig {
            g_em_hz: Some(p.g_em / TAU),
            g_om0_hz: Some(p.g_om0 / TAU),
            n_pump: Some(p.n_pump),
            c_om: None,
            kappa_o_i_hz: Some(p.kappa_o_i / TAU),
            kappa_o_c_hz: Some(p.kappa_o_c / TAU),
            kappa_e_i_hz: Some(p.kappa_e_i / TAU),
            kappa_e_c_hz: Some(p.kappa_e_c / TAU),
            kappa_m_hz: Some(p.kappa_m / TAU),
            omega_m_hz: Some(p.omega_m / TAU),
            omega_e_hz: Some(p.omega_e / TAU),
            omega_o_hz: Some(p.omega_o / TAU),
            delta_p_hz: Some(p.delta_p / TAU),
            temperature_k: Some(p.temperature),
            n_ba_override: p.n_ba_override,
            derived: None,
            detectors: self.detectors.map(|det| RawDetectors {
                optical: RawDetector {
                    eta: det.optical.eta,
                    transmissivity: det.optical.transmissivity,
                    dark_rate_hz: det.optical.dark_rate,
                },
                microwave: RawDetector {
                    eta: det.microwave.eta,
                    transmissivity: det.microwave.transmissivity,
                    dark_rate_hz: det.microwave.dark_rate,
                },
                window_s: det.optical.window,
                repetition_period_s: det.repetition_period,
            }),
        };
        let mut value = serde_json::to_value(raw)?;
        value["derived"] = serde_json::json!({
            "c_om": d.c_om,
            "c_em": d.c_em,
            "zeta_o": d.zeta_o,
            "zeta_e": d.zeta_e,
            "n_ba": d.n_ba,
            "pdc_margin": d.pdc_margin,
        });
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_device() {
        let cfg = RunConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg.params, SystemParams::reference());
        assert!(cfg.detectors.is_none());
    }

    #[test]
    fn hz_are_converted_once() {
        let cfg = RunConfig::from_json_str(r#"{"kappa_m_hz": 1000.0, "omega_m_hz": 5e9}"#).unwrap();
        assert_eq!(cfg.params.kappa_m, TAU * 1000.0);
        assert_eq!(cfg.params.delta_p, TAU * 5e9);
    }

    #[test]
    fn cooperativity_target() {
        let cfg = RunConfig::from_json_str(r#"{"c_om": 1.0}"#).unwrap();
        assert!((derive(&cfg.params).unwrap().c_om - 1.0).abs() < 1e-12);
        assert!(matches!(
            RunConfig::from_json_str(r#"{"c_om": 1.0, "n_pump": 3.0}"#),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json_str(r#"{"kappa_m": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("kappa_m"), "{err}");
        let err = RunConfig::from_json_str(
            r#"{"detectors": {"optical": {"eta": 1, "transmissivity": 1, "dark_rate_hz": 0, "gain": 2},
                "microwave": {"eta": 1, "transmissivity": 1, "dark_rate_hz": 0}, "window_s": 1e-6}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gain"), "{err}");
    }

    #[test]
    fn detectors_block() {
        let cfg = RunConfig::from_json_str(
            r#"{"detectors": {"optical": {"eta": 0.5, "transmissivity": 0.9, "dark_rate_hz": 10},
                "microwave": {"eta": 0.6, "transmissivity": 1, "dark_rate_hz": 0}, "window_s": 1e-6}}"#,
        )
        .unwrap();
        let d = cfg.detectors.unwrap();
        assert_eq!(d.optical.window, 1e-6);
        assert_eq!(d.optical.dark_rate, 10.0);
        assert_eq!(d.repetition_period, None);
        let bad = r#"{"detectors": {"optical": {"eta": 1.5, "transmissivity": 0.9, "dark_rate_hz": 10},
                "microwave": {"eta": 0.6, "transmissivity": 1, "dark_rate_hz": 0}, "window_s": 1e-6}}"#;
        assert!(matches!(RunConfig::from_json_str(bad), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json_str(r#"{"kappa_m_hz": -1}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"temperature_k": -1}"#).is_err());
        assert!(RunConfig::from_json_str("[1, 2]").is_err());
    }

    #[test]
    fn resolved_json_round_trips() {
        let cfg = RunConfig::from_json_str(r#"{"c_om": 2.0, "n_ba_override": 1.67}"#).unwrap();
        let mut value = cfg.resolved_json().unwrap();
        assert!(value["derived"]["c_em"].as_f64().unwrap() > 50.0);
        value.as_object_mut().unwrap().remove("derived");
        let again = RunConfig::from_json_str(&value.to_string()).unwrap();
        for (a, b) in [
            (again.params.n_pump, cfg.params.n_pump),
            (again.params.kappa_o_c, cfg.params.kappa_o_c),
            (again.params.g_em, cfg.params.g_em),
        ] {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        assert_eq!(again.params.n_ba_override, Some(1.67));
    }
}

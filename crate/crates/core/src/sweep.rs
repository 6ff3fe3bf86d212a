//! Parameter sweeps over (C_om, κ_e,c/κ_e,i) and the other tabulated runs
//! behind the command-line tool.
//!
//! Maps are evaluated at resonance from the closed-form standard-form
//! elements, one cell per grid node; cells whose network is unstable or sits
//! on the divergence line carry a status flag and no values.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{extract_contour, Polyline};
use crate::detection::{bell_report, generation_rates, rate_budget, RateBudget};
use crate::dynamics::{
    build_rwa_network, closed_form_uvw, spectrum, stability, FrequencyGrid, StandardFormState, DIVERGENCE_TOL,
};
use crate::entanglement::{chsh_max_analytic, entanglement_of_formation, fidelity_lower_bound_analytic};
use crate::error::{Error, Result};
use crate::params::{derive, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, scale: Scale, min: f64, max: f64, count: usize) -> Result<Self> {
        let ok = min.is_finite() && max.is_finite() && min < max && count >= 2;
        if !ok || (scale == Scale::Log && min <= 0.0) {
            return Err(Error::Config(format!(
                "axis `{name}` needs finite min < max (min > 0 for log) and count >= 2, got [{min}, {max}] x {count}"
            )));
        }
        Ok(Axis { name: name.to_string(), scale, min, max, count })
    }

    /// Value at fractional node index `t` ∈ [0, count − 1].
    pub fn value_at(&self, t: f64) -> f64 {
        let s = t / (self.count - 1) as f64;
        match self.scale {
            Scale::Linear => self.min + s * (self.max - self.min),
            Scale::Log => (self.min.ln() + s * (self.max.ln() - self.min.ln())).exp(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.count).map(|k| self.value_at(k as f64)).collect();
        // pin the endpoints exactly
        v[0] = self.min;
        v[self.count - 1] = self.max;
        v
    }

    /// Inverse of [`Axis::value_at`].
    pub fn index_of(&self, value: f64) -> f64 {
        let s = match self.scale {
            Scale::Linear => (value - self.min) / (self.max - self.min),
            Scale::Log => (value.ln() - self.min.ln()) / (self.max.ln() - self.min.ln()),
        };
        s * (self.count - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Stable,
    Unstable,
    /// |1 + C_em − C_om| below the divergence tolerance.
    Divergent,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Stable => "stable",
            CellStatus::Unstable => "unstable",
            CellStatus::Divergent => "divergent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    /// Row-major, `index = iy * nx + ix`.
    pub status: Vec<CellStatus>,
    pub fields: BTreeMap<String, Vec<Option<f64>>>,
    /// Polylines in axis coordinates.
    pub contours: BTreeMap<String, Vec<Polyline>>,
}

impl SweepGrid {
    pub fn nx(&self) -> usize {
        self.x_axis.count
    }

    pub fn ny(&self) -> usize {
        self.y_axis.count
    }

    pub fn field(&self, name: &str) -> Option<&[Option<f64>]> {
        self.fields.get(name).map(|v| v.as_slice())
    }

    pub fn all_unstable(&self) -> bool {
        self.status.iter().all(|&s| s != CellStatus::Stable)
    }

    /// Level set of a field in axis coordinates; flagged cells are skipped.
    pub fn contour(&self, field: &str, level: f64) -> Result<Vec<Polyline>> {
        let values = self
            .field(field)
            .ok_or_else(|| Error::Config(format!("grid has no field `{field}`")))?;
        Ok(extract_contour(values, self.nx(), self.ny(), level)
            .into_iter()
            .map(|line| line.into_iter().map(|(x, y)| (self.x_axis.value_at(x), self.y_axis.value_at(y))).collect())
            .collect())
    }

    pub fn add_contour(&mut self, name: &str, field: &str, level: f64) -> Result<()> {
        let lines = self.contour(field, level)?;
        self.contours.insert(name.to_string(), lines);
        Ok(())
    }
}

/// Default axes of the (C_om, κ_e,c/κ_e,i) maps.
pub fn default_axes(nx: usize, ny: usize) -> Result<(Axis, Axis)> {
    Ok((Axis::new("c_om", Scale::Log, 0.1, 60.0, nx)?, Axis::new("readout_ratio", Scale::Log, 1.0, 1000.0, ny)?))
}

/// Which observables a map evaluates per stable cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    Entanglement,
    Thresholds { eta_o: f64, eta_e: f64 },
}

struct Cell {
    status: CellStatus,
    values: Vec<(&'static str, f64)>,
}

fn evaluate_cell(base: &SystemParams, c_om: f64, ratio: f64, n_ba: f64, kind: MapKind) -> Result<Cell> {
    let params = base.with_readout_ratio(ratio).with_c_om(c_om)?;
    let derived = derive(&params)?;
    if derived.pdc_margin.abs() < DIVERGENCE_TOL {
        return Ok(Cell { status: CellStatus::Divergent, values: Vec::new() });
    }
    if !stability(&build_rwa_network(&params)?).stable {
        return Ok(Cell { status: CellStatus::Unstable, values: Vec::new() });
    }
    let state = closed_form_uvw(&derived, n_ba)?;
    let (nu_minus, _) = state.symplectic_eigenvalues();
    let mut values = vec![("u", state.u), ("v", state.v), ("w", state.w), ("min_symplectic", nu_minus)];
    match kind {
        MapKind::Entanglement => {
            let rep = entanglement_of_formation(&state)?;
            values.push(("e_f", rep.e_f));
            values.push(("purity", rep.purity));
        }
        MapKind::Thresholds { eta_o, eta_e } => {
            values.push(("f_lb", fidelity_lower_bound_analytic(&state, eta_o, eta_e)?));
            values.push(("s_max", chsh_max_analytic(&state, eta_o, eta_e)?));
        }
    }
    Ok(Cell { status: CellStatus::Stable, values })
}

fn field_names(kind: MapKind) -> &'static [&'static str] {
    match kind {
        MapKind::Entanglement => &["u", "v", "w", "min_symplectic", "e_f", "purity"],
        MapKind::Thresholds { .. } => &["u", "v", "w", "min_symplectic", "f_lb", "s_max"],
    }
}

/// Evaluates a map over C_om (x) × κ_e,c/κ_e,i (y) at bath occupancy `n_ba`.
pub fn run_map(base: &SystemParams, x_axis: Axis, y_axis: Axis, n_ba: f64, kind: MapKind) -> Result<SweepGrid> {
    if !(n_ba.is_finite() && n_ba >= 0.0) {
        return Err(Error::param("n_ba", format!("must be finite and >= 0, got {n_ba}")));
    }
    if !(base.kappa_e_i > 0.0) {
        return Err(Error::param("kappa_e_i", "readout-ratio axis needs kappa_e_i > 0"));
    }
    let (xs, ys) = (x_axis.values(), y_axis.values());
    let coords: Vec<(f64, f64)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
    let cells = coords
        .par_iter()
        .map(|&(x, y)| evaluate_cell(base, x, y, n_ba, kind))
        .collect::<Result<Vec<Cell>>>()?;

    let mut fields: BTreeMap<String, Vec<Option<f64>>> =
        field_names(kind).iter().map(|&n| (n.to_string(), Vec::with_capacity(cells.len()))).collect();
    for cell in &cells {
        for name in field_names(kind) {
            let v = cell.values.iter().find(|(n, _)| n == name).map(|&(_, v)| v);
            fields.get_mut(*name).expect("field registered").push(v);
        }
    }
    let mut grid = SweepGrid {
        x_axis,
        y_axis,
        status: cells.iter().map(|c| c.status).collect(),
        fields,
        contours: BTreeMap::new(),
    };
    grid.contours.insert("pdc_divergence".into(), divergence_line(base, &grid.x_axis, &grid.y_axis)?);
    if let MapKind::Thresholds { .. } = kind {
        grid.add_contour("f_lb=0.5", "f_lb", 0.5)?;
        grid.add_contour("s_max=2", "s_max", 2.0)?;
    }
    Ok(grid)
}

/// Entanglement of formation and purity map.
pub fn map_entanglement(base: &SystemParams, x_axis: Axis, y_axis: Axis, n_ba: f64) -> Result<SweepGrid> {
    run_map(base, x_axis, y_axis, n_ba, MapKind::Entanglement)
}

/// Fidelity-bound and maximal CHSH map with their 1/2 and 2 threshold contours.
pub fn map_thresholds(
    base: &SystemParams,
    x_axis: Axis,
    y_axis: Axis,
    n_ba: f64,
    eta_o: f64,
    eta_e: f64,
) -> Result<SweepGrid> {
    crate::entanglement::check_eta("eta_o", eta_o)?;
    crate::entanglement::check_eta("eta_e", eta_e)?;
    run_map(base, x_axis, y_axis, n_ba, MapKind::Thresholds { eta_o, eta_e })
}

/// The line C_om = 1 + C_em(ratio) sampled at the y nodes inside the x range.
fn divergence_line(base: &SystemParams, x_axis: &Axis, y_axis: &Axis) -> Result<Vec<Polyline>> {
    let mut lines: Vec<Polyline> = Vec::new();
    let mut current: Polyline = Vec::new();
    for y in y_axis.values() {
        let c_em = derive(&base.with_readout_ratio(y))?.c_em;
        let x = 1.0 + c_em;
        if x >= x_axis.min && x <= x_axis.max {
            current.push((x, y));
        } else if !current.is_empty() {
            lines.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        lines.push(current);
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshCurve {
    pub n_ba: f64,
    pub phi_e: Vec<f64>,
    pub s: Vec<f64>,
    pub max_abs_s: f64,
    pub argmax_phi_e: f64,
}

/// S(0, φ_e; π/2, φ_e + π/2) on a φ_e grid for each bath occupancy, from
/// heralded resonant probability tables.
pub fn chsh_curves(
    base: &SystemParams,
    phi_axis: &Axis,
    n_ba_values: &[f64],
    eta_o: f64,
    eta_e: f64,
) -> Result<Vec<ChshCurve>> {
    let derived = derive(base)?;
    let stab = stability(&build_rwa_network(base)?);
    if !stab.stable {
        return Err(Error::Unstable { max_real: stab.max_real });
    }
    let phis = phi_axis.values();
    n_ba_values
        .iter()
        .map(|&n_ba| {
            let state = closed_form_uvw(&derived, n_ba)?;
            let s = phis
                .par_iter()
                .map(|&phi| bell_report(&state, eta_o, eta_e, phi).map(|r| r.s_value))
                .collect::<Result<Vec<f64>>>()?;
            let (k, max_abs_s) = s
                .iter()
                .map(|x| x.abs())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (k, a)| if a > best.1 { (k, a) } else { best });
            Ok(ChshCurve { n_ba, phi_e: phis.clone(), s, max_abs_s, argmax_phi_e: phis[k] })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub states: Vec<StandardFormState>,
}

/// Output spectra u(ω), v(ω), w(ω) on a grid (rad/s, co-rotating frame).
pub fn spectrum_table(params: &SystemParams, grid: Option<&FrequencyGrid>) -> Result<SpectrumTable> {
    let network = build_rwa_network(params)?;
    let n_ba = network.derived.n_ba;
    let default;
    let grid = match grid {
        Some(g) => g,
        None => {
            default = FrequencyGrid::for_network(&network)?;
            &default
        }
    };
    Ok(SpectrumTable { states: spectrum(&network, &grid.omegas, n_ba)? })
}

/// Full counting-rate budget for a configuration with detectors.
pub fn rates(
    params: &SystemParams,
    detectors: &crate::config::Detectors,
    grid: Option<&FrequencyGrid>,
) -> Result<RateBudget> {
    let network = build_rwa_network(params)?;
    let n_ba = network.derived.n_ba;
    let grid = match grid {
        Some(g) => g.clone(),
        None => FrequencyGrid::for_network(&network)?,
    };
    let generated = generation_rates(&network, n_ba, &grid)?;
    rate_budget(&generated, &detectors.optical, &detectors.microwave, detectors.repetition_period)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, TAU};

    #[test]
    fn axes() {
        let a = Axis::new("x", Scale::Log, 1.0, 1000.0, 4).unwrap();
        let v = a.values();
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 10.0).abs() < 1e-12 && (v[2] - 100.0).abs() < 1e-10);
        assert_eq!(v[3], 1000.0);
        assert!((a.index_of(100.0) - 2.0).abs() < 1e-12);
        assert!(Axis::new("x", Scale::Log, 0.0, 1.0, 4).is_err());
        assert!(Axis::new("x", Scale::Linear, 1.0, 1.0, 4).is_err());
    }

    #[test]
    fn zero_cooperativity_row_is_separable() {
        let x = Axis::new("c_om", Scale::Linear, 0.0, 2.0, 3).unwrap();
        let y = Axis::new("readout_ratio", Scale::Log, 1.0, 1000.0, 4).unwrap();
        let g = map_entanglement(&SystemParams::reference(), x, y, 1.67).unwrap();
        let e_f = g.field("e_f").unwrap();
        for iy in 0..4 {
            assert_eq!(e_f[iy * 3], Some(0.0));
            assert!(e_f[iy * 3 + 1].unwrap() > 0.0);
        }
    }

    #[test]
    fn unstable_cells_are_flagged() {
        let (x, y) = default_axes(12, 6).unwrap();
        let g = map_entanglement(&SystemParams::reference(), x, y, 1.67).unwrap();
        let unstable = g.status.iter().filter(|&&s| s == CellStatus::Unstable).count();
        assert!(unstable > 0);
        for (k, s) in g.status.iter().enumerate() {
            let has_value = g.field("e_f").unwrap()[k].is_some();
            assert_eq!(has_value, *s == CellStatus::Stable);
        }
        assert!(!g.contours["pdc_divergence"].is_empty());
        assert!(!g.all_unstable());
    }

    #[test]
    fn threshold_contours_present() {
        let (x, y) = default_axes(20, 20).unwrap();
        let g = map_thresholds(&SystemParams::reference(), x, y, 1.67, 0.5, 0.5).unwrap();
        assert!(!g.contours["f_lb=0.5"].is_empty());
        assert!(!g.contours["s_max=2"].is_empty());
        let f = g.field("f_lb").unwrap();
        let s = g.field("s_max").unwrap();
        for k in 0..f.len() {
            if let (Some(f), Some(s)) = (f[k], s[k]) {
                assert!(s <= 2.0 || f > 0.5);
            }
        }
    }

    #[test]
    fn chsh_curve_peaks_at_quarter_pi() {
        let base = SystemParams::reference().with_c_om(1.0).unwrap();
        let phi = Axis::new("phi_e", Scale::Linear, 0.0, TAU, 73).unwrap();
        let curves = chsh_curves(&base, &phi, &[0.0, 1.67, 5.0], 0.5, 0.5).unwrap();
        let step = TAU / 72.0;
        let first_peak = curves[0].argmax_phi_e % std::f64::consts::PI;
        assert!((first_peak - FRAC_PI_4).abs() <= step);
        assert!(curves[0].max_abs_s > 2.0);
        assert!(curves[0].max_abs_s > curves[1].max_abs_s && curves[1].max_abs_s > curves[2].max_abs_s);
    }

    #[test]
    fn spectrum_default_grid() {
        let p = SystemParams::reference().with_c_om(1.0).unwrap().with_n_ba(1.67);
        let t = spectrum_table(&p, None).unwrap();
        let mid = t.states[t.states.len() / 2];
        assert_eq!(mid.omega, 0.0);
        assert!(mid.v > mid.u);
    }
}

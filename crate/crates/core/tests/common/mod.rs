#![allow(dead_code)]

use std::f64::consts::TAU;

use eomech::dynamics::{build_rwa_network, stability, StandardFormState};
use eomech::params::{derive, SystemParams};
use proptest::prelude::*;

pub fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

/// Device parameters around the reference point, with C_om a fraction of the
/// divergence value 1 + C_em.
pub fn device(c_fraction: std::ops::Range<f64>) -> impl Strategy<Value = SystemParams> {
    (
        log_uniform(1e5, 1e7),
        log_uniform(1e7, 1e9),
        log_uniform(1e7, 1e9),
        log_uniform(1e4, 1e6),
        log_uniform(1.0, 1000.0),
        log_uniform(1e3, 1e5),
        c_fraction,
        0.0..10.0f64,
    )
        .prop_map(|(g_em, ko_i, ko_c, ke_i, ratio, km, frac, n_ba)| {
            let mut p = SystemParams::reference();
            p.g_em = TAU * g_em;
            p.kappa_o_i = TAU * ko_i;
            p.kappa_o_c = TAU * ko_c;
            p.kappa_e_i = TAU * ke_i;
            p.kappa_m = TAU * km;
            let p = p.with_readout_ratio(ratio).with_n_ba(n_ba);
            let c_em = derive(&p).unwrap().c_em;
            p.with_c_om(frac * (1.0 + c_em)).unwrap()
        })
}

pub fn is_stable(p: &SystemParams) -> bool {
    stability(&build_rwa_network(p).unwrap()).stable
}

/// Two-mode squeezed vacuum with independent thermal noise added to each side.
pub fn physical_state() -> impl Strategy<Value = StandardFormState> {
    (0.0..2.0f64, 0.0..5.0f64, 0.0..5.0f64).prop_map(|(r, n1, n2)| {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        StandardFormState::new(0.0, c + 2.0 * n1, c + 2.0 * n2, s)
    })
}

/// Largest w keeping (u, v, w) physical.
pub fn w_max(u: f64, v: f64) -> f64 {
    ((u.min(v) - 1.0) * (u.max(v) + 1.0)).sqrt()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

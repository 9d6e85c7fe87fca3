//! Upper bounds on `ν_m(Φ^*)` and `ν(Φ^*)`.
//!
//! The main tool is the diamond-distance bound
//! `ν_m(Φ^*) <= ⌈mn(x + d - ℓ)/(2x)⌉ - 1`, where `d = d_⋄(xΔ, Φ)` and
//! `ℓ = λ_min(Φ^*(I))`. It is combined with the Schmidt-rank bound
//! `(m - k)(n - k)` for `k`-positive maps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{check_square_map, depolarizing, HPMap, MapSpec};
use crate::sdp::{diamond_distance_with, SdpSettings};
use crate::tensor::{operator_norm, CMat};

/// Values within this distance of an integer are treated as that integer
/// before taking the ceiling, absorbing solver error in `d`.
pub const SNAP_TOL: f64 = 1e-6;

/// Tolerance for the complete-positivity test that enables the closed form
/// `d = ||(xΔ - Φ)^*(I)||`.
const CP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Trivial,
    Lemma,
    ExactFormula,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMethod {
    /// `xΔ - Φ` is completely positive and `d = ||(xΔ - Φ)^*(I)||`.
    CpShortcut,
    Sdp,
}

/// An upper bound on `ν_m` of the adjoint of `map`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub map: String,
    pub m: usize,
    pub n: usize,
    pub bound: usize,
    pub method: BoundMethod,
    pub x_used: Option<f64>,
    pub d_value: Option<f64>,
    pub ell_value: Option<f64>,
    pub d_method: Option<DistanceMethod>,
    /// `⌈mn(x + d - ℓ)/(2x)⌉ - 1` before clamping or comparison.
    pub lemma_value: Option<i64>,
    /// `(m - k)(n - k)` for the known positivity order `k`.
    pub trivial_value: Option<usize>,
}

/// `(m - k)(n - k)`.
pub fn trivial_upper(m: usize, n: usize, k: usize) -> Result<usize> {
    if k < 1 || k > m.min(n) {
        return Err(Error::InvalidArgument(format!("positivity order k = {k} must lie in 1..={}", m.min(n))));
    }
    Ok((m - k) * (n - k))
}

/// Trivial bound from the map's recorded positivity order, if any.
fn trivial_for(map: &HPMap, m: usize, n: usize) -> Option<usize> {
    map.positivity().map(|k| {
        let k = k.clamp(1, m.min(n));
        (m - k) * (n - k)
    })
}

fn snapped_ceil(v: f64) -> i64 {
    let r = v.round();
    if (v - r).abs() <= SNAP_TOL * v.abs().max(1.0) {
        r as i64
    } else {
        v.ceil() as i64
    }
}

/// `⌈mn(x + d - ℓ)/(2x)⌉ - 1`.
pub fn lemma_formula(m: usize, n: usize, x: f64, d: f64, ell: f64) -> i64 {
    snapped_ceil((m * n) as f64 * (x + d - ell) / (2.0 * x)) - 1
}

/// `d_⋄(xΔ, Φ)`, via the closed form when `xΔ - Φ` is completely positive.
pub fn distance_to_scaled_depolarizing(map: &HPMap, x: f64, settings: &SdpSettings) -> Result<(f64, DistanceMethod)> {
    let n = check_square_map(map)?;
    let delta = depolarizing(n)?.scaled(x);
    let psi = delta.combine(1.0, map, -1.0)?;
    if psi.is_completely_positive(CP_TOL) {
        let d = operator_norm(&psi.adjoint().apply(&CMat::identity(n, n))?);
        return Ok((d, DistanceMethod::CpShortcut));
    }
    Ok((diamond_distance_with(&delta, map, settings)?, DistanceMethod::Sdp))
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("x must be positive, got {x}")));
    }
    Ok(())
}

/// The diamond-distance bound at a single `x`, unclamped by the trivial
/// bound (only floored at 0).
pub fn lemma_bound(map: &HPMap, m: usize, x: f64) -> Result<BoundReport> {
    lemma_bound_with(map, m, x, &SdpSettings::default())
}

pub fn lemma_bound_with(map: &HPMap, m: usize, x: f64, settings: &SdpSettings) -> Result<BoundReport> {
    check_x(x)?;
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let n = check_square_map(map)?;
    let (d, d_method) = distance_to_scaled_depolarizing(map, x, settings)?;
    let ell = map.ell();
    let raw = lemma_formula(m, n, x, d, ell);
    Ok(BoundReport {
        map: map.label().to_string(),
        m,
        n,
        bound: raw.max(0) as usize,
        method: BoundMethod::Lemma,
        x_used: Some(x),
        d_value: Some(d),
        ell_value: Some(ell),
        d_method: Some(d_method),
        lemma_value: Some(raw),
        trivial_value: trivial_for(map, m, n),
    })
}

/// `24` log-spaced points in `[n/10, 10n]`.
pub fn default_x_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = ((n as f64 / 10.0).ln(), (10.0 * n as f64).ln());
    (0..24).map(|i| (lo + (hi - lo) * i as f64 / 23.0).exp()).collect()
}

/// Best diamond-distance bound over `grid` (ties go to the smallest `x`),
/// then the minimum with the trivial bound.
pub fn lemma_bound_scan(map: &HPMap, m: usize, grid: &[f64]) -> Result<BoundReport> {
    lemma_bound_scan_with(map, m, grid, &SdpSettings::default())
}

pub fn lemma_bound_scan_with(map: &HPMap, m: usize, grid: &[f64], settings: &SdpSettings) -> Result<BoundReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("x grid is empty".into()));
    }
    for &x in grid {
        check_x(x)?;
    }
    let reports: Vec<BoundReport> =
        grid.par_iter().map(|&x| lemma_bound_with(map, m, x, settings)).collect::<Result<_>>()?;
    let mut best = reports[0].clone();
    for r in &reports[1..] {
        let (rv, bv) = (r.lemma_value.unwrap_or(i64::MAX), best.lemma_value.unwrap_or(i64::MAX));
        if rv < bv || (rv == bv && r.x_used < best.x_used) {
            best = r.clone();
        }
    }
    if let Some(t) = best.trivial_value {
        if t < best.bound {
            best.bound = t;
            best.method = BoundMethod::Trivial;
        }
    }
    Ok(best)
}

/// The real-valued bound `n(x + d_⋄ - ℓ)/(2x)` on `ν(Φ^*)`.
pub fn nu_ratio_upper(map: &HPMap, x: f64) -> Result<f64> {
    nu_ratio_upper_with(map, x, &SdpSettings::default())
}

pub fn nu_ratio_upper_with(map: &HPMap, x: f64, settings: &SdpSettings) -> Result<f64> {
    check_x(x)?;
    let n = check_square_map(map)?;
    let (d, _) = distance_to_scaled_depolarizing(map, x, settings)?;
    Ok(n as f64 * (x + d - map.ell()) / (2.0 * x))
}

/// Closed-form `ν_m` for maps where it is known: the transpose map
/// (`(m-1)(n-1)`) and the reduction family (`⌈m/k⌉ - 1`).
pub fn exact_nu(label: &str, m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let spec = MapSpec::parse(label)?;
    let n = spec.params.get("n").copied().unwrap_or(3.0);
    if n < 1.0 || n.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("parameter `n` must be a positive integer, got {n}")));
    }
    let n = n as usize;
    match spec.name.as_str() {
        "transpose" => Ok((m - 1) * (n - 1)),
        "reduction" => {
            let k = spec.params.get("k").copied().unwrap_or(1.0);
            if !(1.0..=n as f64).contains(&k) {
                return Err(Error::NoExactFormula(format!("{label} (needs 1 <= k <= n)")));
            }
            Ok(((m as f64 / k).ceil() as usize).saturating_sub(1))
        }
        _ => Err(Error::NoExactFormula(label.to_string())),
    }
}

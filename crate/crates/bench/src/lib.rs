//! Shared fixtures for the criterion benchmarks.

use cislunar_core::astro::{kepler_to_cart, Body, KeplerianElements, StateVector};
use cislunar_core::constants::MU_MOON;
use cislunar_core::mission::MissionConfig;

/// A 5000 km x 12000 km lunar orbit 30 days after separation.
pub fn lunar_orbit(cfg: &MissionConfig) -> StateVector {
    let el = KeplerianElements::new(8_500.0, 0.41, 45.0, 30.0, 60.0, 10.0, MU_MOON);
    let (r, v) = kepler_to_cart(&el).expect("bound elements");
    StateVector::new(cfg.initial_state.epoch + 30.0 * 86_400.0, r, v, 11.0, Body::Moon)
}

#![allow(dead_code)]

use refdiff_cli::config::{
    AngleConfig, FieldConfig, LatticeConfig, LayerConfig, ModelConfig, RodsConfig, RunConfig, Theta0Config, Threshold,
};

pub const CANONICAL_BOTTOM: f64 = -9.910955;

/// Six absorbing Gaussian layers, 1.8 Å apart, on a slab of depth `bottom`.
pub fn layers(bottom: f64) -> Vec<LayerConfig> {
    let mut out = Vec::new();
    let mut zc = -0.8;
    while zc > bottom {
        out.push(LayerConfig { z_center: zc, amplitude: 2.5, lateral_width: 1.5, depth_width: 0.6, absorption: 0.1 });
        zc -= 1.8;
    }
    out
}

/// Eleven rods on a 4 Å × 5 Å cell at γ = 20 Å⁻¹.
pub fn config(model: ModelConfig, bottom: f64, method: &str, dz: f64, theta0: Theta0Config) -> RunConfig {
    RunConfig {
        lattice: LatticeConfig { a1: [4.0, 0.0], a2: [0.0, 5.0] },
        rods: RodsConfig::Cutoff(2.6),
        gamma: 20.0,
        field: FieldConfig { z_e: bottom, bulk_period: None, model },
        angles: AngleConfig { theta0, theta1: vec![0.0] },
        method: method.into(),
        dz,
        rhst_threshold: Threshold::default(),
        threads: None,
        output: None,
        bench: None,
    }
}

pub fn full_grid() -> Theta0Config {
    Theta0Config::Range { start: 0.1, step: 0.1, count: 69 }
}

pub fn canonical(method: &str, dz: f64, theta0: Theta0Config) -> RunConfig {
    config(ModelConfig::GaussianLayers { layers: layers(CANONICAL_BOTTOM) }, CANONICAL_BOTTOM, method, dz, theta0)
}

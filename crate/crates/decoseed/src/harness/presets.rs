//! Built-in scenario presets: calibrated, self-validating configurations
//! covering every model family, runnable by name from the CLI.

use num_complex::Complex64;

use crate::harness::config::FreeParticleBlock;
use crate::harness::config::{
    ArakiZurekBlock, CouplingFamily, MeasureFamily, ModelBlock, OracleBlock, OutputBlock,
    OutputFormat, RhoSpec, ScatteringBlock, ScenarioConfig, SingleModeBlock, TimeBlock,
    VanHoveBlock,
};
use crate::tol;

pub const PRESET_NAMES: [&str; 10] = [
    "az_gaussian",
    "az_bump_s1",
    "az_bump_s2",
    "az_bump_s3",
    "az_point_spectrum",
    "vanhove_ir_regular",
    "vanhove_ir_divergent",
    "single_mode",
    "free_particle_pfeifer",
    "scattering_weak",
];

pub fn preset_names() -> &'static [&'static str] {
    &PRESET_NAMES
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn two_level_system() -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let h_s = vec![vec![re(0.0), re(0.0)], vec![re(0.0), re(1.0)]];
    let v_s = vec![vec![re(0.5), re(0.0)], vec![re(0.0), re(-0.5)]];
    (h_s, v_s)
}

fn common(
    name: &str,
    model: ModelBlock,
    t_max: f64,
    n_steps: usize,
    oracle: OracleBlock,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        model,
        time: TimeBlock { t_max, n_steps },
        oracle,
        output: OutputBlock {
            directory: format!("out/{name}"),
            formats: vec![OutputFormat::Csv, OutputFormat::Svg],
        },
    }
}

fn oracle_on(dim: usize, tolerance: f64) -> OracleBlock {
    OracleBlock {
        enabled: true,
        dim,
        tolerance,
    }
}

fn oracle_off() -> OracleBlock {
    OracleBlock {
        enabled: false,
        dim: 32,
        tolerance: tol::ORACLE_TOL_DEFAULT,
    }
}

fn az_bump(name: &str, smoothness: u32) -> ScenarioConfig {
    let (h_s, v_s) = two_level_system();
    common(
        name,
        ModelBlock::ArakiZurek(ArakiZurekBlock {
            h_s,
            v_s,
            family: MeasureFamily::Bump { smoothness },
            grid_points: 2048,
            rho: RhoSpec::UniformPlus,
        }),
        60.0,
        256,
        oracle_on(32, 1e-10),
    )
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "az_gaussian" => {
            let (h_s, v_s) = two_level_system();
            Some(common(
                name,
                ModelBlock::ArakiZurek(ArakiZurekBlock {
                    h_s,
                    v_s,
                    family: MeasureFamily::Gaussian {
                        sigma: 1.0,
                        center: 0.0,
                    },
                    grid_points: 4096,
                    rho: RhoSpec::UniformPlus,
                }),
                8.0,
                256,
                oracle_on(32, 1e-10),
            ))
        }
        "az_bump_s1" => Some(az_bump(name, 1)),
        "az_bump_s2" => Some(az_bump(name, 2)),
        "az_bump_s3" => Some(az_bump(name, 3)),
        "az_point_spectrum" => {
            let (h_s, v_s) = two_level_system();
            Some(common(
                name,
                ModelBlock::ArakiZurek(ArakiZurekBlock {
                    h_s,
                    v_s,
                    family: MeasureFamily::PointSpectrum {
                        atoms: vec![(-2.0, 0.1), (-1.0, 0.2), (0.0, 0.4), (1.0, 0.2), (2.0, 0.1)],
                    },
                    grid_points: tol::DEFAULT_GRID_POINTS,
                    rho: RhoSpec::UniformPlus,
                }),
                10.0,
                256,
                oracle_on(5, 1e-10),
            ))
        }
        "vanhove_ir_regular" => Some(common(
            name,
            ModelBlock::VanHove(VanHoveBlock {
                alpha: 1.0,
                beta: 0.0,
                coupling: CouplingFamily::DampedLinear {
                    amplitude: 1.0,
                    decay: 1.0,
                },
                dispersion_speed: 1.0,
                k_min: 1e-4,
                k_max: 20.0,
                grid_points: 4096,
                allow_ir_divergent: false,
                cutoffs: vec![],
                t_probe: 10.0,
            }),
            100.0,
            256,
            oracle_off(),
        )),
        "vanhove_ir_divergent" => Some(common(
            name,
            ModelBlock::VanHove(VanHoveBlock {
                alpha: 1.0,
                beta: 0.0,
                coupling: CouplingFamily::PowerLaw {
                    amplitude: 1.0,
                    exponent: -0.25,
                },
                dispersion_speed: 1000.0,
                k_min: 1e-4,
                k_max: 1.0,
                grid_points: 16384,
                allow_ir_divergent: true,
                cutoffs: vec![1e-2, 1e-3, 1e-4],
                t_probe: 10.0,
            }),
            10.0,
            128,
            oracle_off(),
        )),
        "single_mode" => Some(common(
            name,
            ModelBlock::SingleMode(SingleModeBlock {
                eps: 1.0,
                f0: 1.0,
                alpha: 0.5,
                beta: -0.5,
                terms: vec![(0.0, 0.0, 1.0)],
            }),
            4.0 * std::f64::consts::PI,
            256,
            oracle_on(80, 1e-8),
        )),
        "free_particle_pfeifer" => Some(common(
            name,
            ModelBlock::FreeParticle(FreeParticleBlock {
                f0: 1.0,
                alpha: 0.5,
                beta: -0.5,
                terms: vec![(0.0, 0.0, 1.0)],
            }),
            5.0,
            256,
            oracle_on(300, 1e-6),
        )),
        "scattering_weak" => {
            let h_s = vec![vec![re(0.0), re(0.0)], vec![re(0.0), re(7.0)]];
            let v_s = vec![vec![re(1.0), re(0.0)], vec![re(0.0), re(-1.0)]];
            Some(common(
                name,
                ModelBlock::Scattering(ScatteringBlock {
                    h_s,
                    v_s,
                    env_dim: 64,
                    level_spacing: 20.0,
                    coupling_sigma: 1.0,
                    potential_norm: 0.05,
                    seed: 42,
                    horizon: 4.0,
                    moller_samples: 80,
                    rho: RhoSpec::UniformPlus,
                }),
                4.0,
                128,
                oracle_on(64, 1e-10),
            ))
        }
        _ => None,
    }
}

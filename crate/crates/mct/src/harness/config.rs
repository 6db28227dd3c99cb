//! Flat `key = value` scenario configuration.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; keys are
//! dotted section paths; values are bare strings, booleans, numbers, or
//! space-separated number lists. Pole groups are separated by `;`.

use crate::init::{GraphHeights, InitialGeometry};
use crate::solver::{DtSpec, Scheme};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    pub resolution: usize,
    pub geometry: GeometryConfig,
    pub r_trunc: Option<f64>,
    pub well: String,
    pub epsilon: f64,
    pub sweep: Option<SweepConfig>,
    pub transport: TransportConfig,
    pub scheme: Scheme,
    pub dt: DtSpec,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub upwind: bool,
    pub settle_time: f64,
    pub snapshot_times: Vec<f64>,
    /// (x, y, z, s) pole placements for the monotonicity audit.
    pub poles: Vec<[f64; 4]>,
    pub audit_window: Option<(f64, f64)>,
    pub audit_tolerance: f64,
    pub density_radii: Option<Vec<f64>>,
    pub density_band: f64,
    pub max_centers: usize,
    pub n_random_centers: usize,
    pub theta_radius: Option<f64>,
    pub checks: ChecksConfig,
    pub check_times: Vec<f64>,
    pub output_dir: String,
    pub field_dumps: bool,
    pub interface_csv: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryConfig {
    Circle { center: [f64; 2], r0: f64 },
    Sphere { center: [f64; 3], r0: f64 },
    TwoCircles { c1: [f64; 2], r1: f64, c2: [f64; 2], r2: f64 },
    Annulus { center: [f64; 2], r_in: f64, r_out: f64 },
    Graph { heights: Vec<f64> },
}

impl GeometryConfig {
    pub fn build(&self) -> InitialGeometry {
        match self {
            GeometryConfig::Circle { center, r0 } => InitialGeometry::Circle {
                center: *center,
                r0: *r0,
            },
            GeometryConfig::Sphere { center, r0 } => InitialGeometry::Sphere {
                center: *center,
                r0: *r0,
            },
            GeometryConfig::TwoCircles { c1, r1, c2, r2 } => InitialGeometry::TwoCircles {
                c1: *c1,
                r1: *r1,
                c2: *c2,
                r2: *r2,
            },
            GeometryConfig::Annulus { center, r_in, r_out } => InitialGeometry::Annulus {
                center: *center,
                r_in: *r_in,
                r_out: *r_out,
            },
            GeometryConfig::Graph { heights } => InitialGeometry::Graph(GraphHeights {
                samples: heights.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// Per-entry resolutions (same length as epsilons); the sweep may co-vary
    /// the grid so eps/h stays in [2, 8].
    pub resolutions: Vec<usize>,
    /// Diagnostic time for the |xi| integral column.
    pub xi_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig {
    pub kind: String,
    pub params: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub samples_dir: Option<String>,
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChecksConfig {
    pub radius_law: bool,
    pub translation_law: bool,
    pub stationarity: bool,
    pub wave_translation: bool,
    pub dissipation: bool,
    pub energy_growth: bool,
    pub discrepancy_bound: bool,
    pub energy_concentration: bool,
    pub unit_density: bool,
    pub bv_bound: bool,
    pub monotonicity: bool,
    pub energy_collapse: bool,
    pub planar_sigma: bool,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        ChecksConfig {
            radius_law: false,
            translation_law: false,
            stationarity: false,
            wave_translation: false,
            dissipation: false,
            energy_growth: false,
            discrepancy_bound: true,
            energy_concentration: false,
            unit_density: false,
            bv_bound: true,
            monotonicity: false,
            energy_collapse: false,
            planar_sigma: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("config invalid:\n{}", messages.join("\n"))]
pub struct ConfigInvalid {
    pub messages: Vec<String>,
}

/// Parses the flat key = value format.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigInvalid> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    let mut errors = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let key = k.trim().to_string();
                if kv.insert(key.clone(), v.trim().to_string()).is_some() {
                    errors.push(format!("line {}: duplicate key {key}", lineno + 1));
                }
            }
            None => errors.push(format!("line {}: expected key = value", lineno + 1)),
        }
    }
    if !errors.is_empty() {
        return Err(ConfigInvalid { messages: errors });
    }
    build_config(&kv)
}

fn f64_field(
    kv: &BTreeMap<String, String>,
    key: &'static str,
    default: Option<f64>,
    errors: &mut Vec<String>,
    used: &mut Vec<&'static str>,
) -> f64 {
    used.push(key);
    match kv.get(key) {
        Some(v) => match v.parse::<f64>() {
            Ok(x) => x,
            Err(_) => {
                errors.push(format!("{key}: not a number: {v}"));
                0.0
            }
        },
        None => match default {
            Some(d) => d,
            None => {
                errors.push(format!("{key}: required"));
                0.0
            }
        },
    }
}

fn build_config(kv: &BTreeMap<String, String>) -> Result<ScenarioConfig, ConfigInvalid> {
    let mut errors: Vec<String> = Vec::new();
    let mut used: Vec<&'static str> = Vec::new();

    used.push("name");
    let name = kv.get("name").cloned().unwrap_or_else(|| "unnamed".into());
    let dim = f64_field(kv, "grid.dim", Some(2.0), &mut errors, &mut used) as usize;
    let resolution = f64_field(kv, "grid.resolution", None, &mut errors, &mut used) as usize;

    // geometry
    let geometry = {
        used.push("geometry.kind");
        let kind = kv.get("geometry.kind").cloned().unwrap_or_default();
        let list = |key: &'static str, errors: &mut Vec<String>| -> Vec<f64> {
            match kv.get(key) {
                Some(v) => parse_list(v).unwrap_or_else(|e| {
                    errors.push(format!("{key}: {e}"));
                    Vec::new()
                }),
                None => {
                    errors.push(format!("{key}: required for geometry.kind = {kind}"));
                    Vec::new()
                }
            }
        };
        match kind.as_str() {
            "circle" => {
                used.extend(["geometry.center", "geometry.r0"]);
                let c = list("geometry.center", &mut errors);
                let r0 = kv
                    .get("geometry.r0")
                    .and_then(|v| v.parse().ok())
                    .unwrap_or_else(|| {
                        errors.push("geometry.r0: required number".into());
                        0.0
                    });
                GeometryConfig::Circle {
                    center: [c.first().copied().unwrap_or(0.5), c.get(1).copied().unwrap_or(0.5)],
                    r0,
                }
            }
            "sphere" => {
                used.extend(["geometry.center", "geometry.r0"]);
                let c = list("geometry.center", &mut errors);
                let r0 = kv
                    .get("geometry.r0")
                    .and_then(|v| v.parse().ok())
                    .unwrap_or_else(|| {
                        errors.push("geometry.r0: required number".into());
                        0.0
                    });
                GeometryConfig::Sphere {
                    center: [
                        c.first().copied().unwrap_or(0.5),
                        c.get(1).copied().unwrap_or(0.5),
                        c.get(2).copied().unwrap_or(0.5),
                    ],
                    r0,
                }
            }
            "two_circles" => {
                used.extend(["geometry.c1", "geometry.r1", "geometry.c2", "geometry.r2"]);
                let c1 = list("geometry.c1", &mut errors);
                let c2 = list("geometry.c2", &mut errors);
                let r1 = kv.get("geometry.r1").and_then(|v| v.parse().ok()).unwrap_or_else(|| {
                    errors.push("geometry.r1: required number".into());
                    0.0
                });
                let r2 = kv.get("geometry.r2").and_then(|v| v.parse().ok()).unwrap_or_else(|| {
                    errors.push("geometry.r2: required number".into());
                    0.0
                });
                GeometryConfig::TwoCircles {
                    c1: [c1.first().copied().unwrap_or(0.3), c1.get(1).copied().unwrap_or(0.5)],
                    r1,
                    c2: [c2.first().copied().unwrap_or(0.7), c2.get(1).copied().unwrap_or(0.5)],
                    r2,
                }
            }
            "annulus" => {
                used.extend(["geometry.center", "geometry.r_in", "geometry.r_out"]);
                let c = list("geometry.center", &mut errors);
                let r_in = kv.get("geometry.r_in").and_then(|v| v.parse().ok()).unwrap_or_else(|| {
                    errors.push("geometry.r_in: required number".into());
                    0.0
                });
                let r_out = kv.get("geometry.r_out").and_then(|v| v.parse().ok()).unwrap_or_else(|| {
                    errors.push("geometry.r_out: required number".into());
                    0.0
                });
                GeometryConfig::Annulus {
                    center: [c.first().copied().unwrap_or(0.5), c.get(1).copied().unwrap_or(0.5)],
                    r_in,
                    r_out,
                }
            }
            "graph" => {
                used.push("geometry.heights");
                let heights = list("geometry.heights", &mut errors);
                GeometryConfig::Graph { heights }
            }
            other => {
                errors.push(format!(
                    "geometry.kind: unknown '{other}' (circle|sphere|two_circles|annulus|graph)"
                ));
                GeometryConfig::Circle {
                    center: [0.5, 0.5],
                    r0: 0.25,
                }
            }
        }
    };

    used.push("geometry.r_trunc");
    let r_trunc = match kv.get("geometry.r_trunc").map(|s| s.as_str()) {
        None | Some("auto") => None,
        Some(v) => match v.parse::<f64>() {
            Ok(x) => Some(x),
            Err(_) => {
                errors.push(format!("geometry.r_trunc: expected auto or number, got {v}"));
                None
            }
        },
    };

    used.push("well");
    let well = kv.get("well").cloned().unwrap_or_else(|| "quartic".into());
    let epsilon = f64_field(kv, "epsilon", Some(0.0), &mut errors, &mut used);

    // sweep
    used.extend(["sweep.epsilon", "sweep.resolution", "sweep.xi_time"]);
    let sweep = match kv.get("sweep.epsilon") {
        Some(v) => {
            let epsilons = parse_list(v).unwrap_or_else(|e| {
                errors.push(format!("sweep.epsilon: {e}"));
                Vec::new()
            });
            let resolutions: Vec<usize> = match kv.get("sweep.resolution") {
                Some(r) => parse_list(r)
                    .unwrap_or_else(|e| {
                        errors.push(format!("sweep.resolution: {e}"));
                        Vec::new()
                    })
                    .into_iter()
                    .map(|x| x as usize)
                    .collect(),
                None => vec![resolution; epsilons.len()],
            };
            if resolutions.len() != epsilons.len() {
                errors.push("sweep.resolution: must match sweep.epsilon length".into());
            }
            let xi_time = kv
                .get("sweep.xi_time")
                .and_then(|v| v.parse().ok())
                .unwrap_or(0.005);
            Some(SweepConfig {
                epsilons,
                resolutions,
                xi_time,
            })
        }
        None => None,
    };

    // transport
    used.extend([
        "transport.kind",
        "transport.params",
        "transport.p",
        "transport.q",
        "transport.beta",
        "transport.samples_dir",
        "transport.sample_times",
    ]);
    let transport = TransportConfig {
        kind: kv.get("transport.kind").cloned().unwrap_or_else(|| "zero".into()),
        params: kv
            .get("transport.params")
            .map(|v| {
                parse_list(v).unwrap_or_else(|e| {
                    errors.push(format!("transport.params: {e}"));
                    Vec::new()
                })
            })
            .unwrap_or_default(),
        p: kv.get("transport.p").and_then(|v| v.parse().ok()).unwrap_or(2.0),
        q: kv.get("transport.q").and_then(|v| v.parse().ok()).unwrap_or(4.0),
        beta: kv.get("transport.beta").and_then(|v| v.parse().ok()).unwrap_or(0.25),
        samples_dir: kv.get("transport.samples_dir").cloned(),
        sample_times: kv
            .get("transport.sample_times")
            .map(|v| parse_list(v).unwrap_or_default())
            .unwrap_or_default(),
    };
    if !(transport.beta > 0.0 && transport.beta < 0.5) {
        errors.push(format!(
            "transport.beta: {} not in (0, 1/2)",
            transport.beta
        ));
    }

    // solver
    used.push("solver.scheme");
    let scheme = match kv.get("solver.scheme").map(|s| s.as_str()) {
        None | Some("semi_implicit") => Scheme::SemiImplicit,
        Some("explicit") => Scheme::Explicit,
        Some(other) => {
            errors.push(format!(
                "solver.scheme: unknown '{other}' (explicit|semi_implicit)"
            ));
            Scheme::SemiImplicit
        }
    };
    used.push("solver.dt");
    let dt = match kv.get("solver.dt").map(|s| s.as_str()) {
        None | Some("auto") => DtSpec::Auto,
        Some(v) => match v.parse::<f64>() {
            Ok(x) => DtSpec::Fixed(x),
            Err(_) => {
                errors.push(format!("solver.dt: expected auto or number, got {v}"));
                DtSpec::Auto
            }
        },
    };
    let t_end = f64_field(kv, "solver.t_end", None, &mut errors, &mut used);
    let cfl_safety = f64_field(kv, "solver.cfl_safety", Some(0.5), &mut errors, &mut used);
    used.push("solver.upwind");
    let upwind = parse_bool(kv.get("solver.upwind"), false, "solver.upwind", &mut errors);
    let settle_time = f64_field(kv, "init.settle_time", Some(0.0), &mut errors, &mut used);

    // diagnostics
    used.extend([
        "diagnostics.snapshot_times",
        "diagnostics.poles",
        "diagnostics.audit_window",
        "diagnostics.audit_tolerance",
        "diagnostics.density_radii",
        "diagnostics.density_band",
        "diagnostics.max_centers",
        "diagnostics.n_random_centers",
        "diagnostics.theta_radius",
        "checks.times",
    ]);
    let snapshot_times: Vec<f64> = kv
        .get("diagnostics.snapshot_times")
        .map(|v| {
            parse_list(v).unwrap_or_else(|e| {
                errors.push(format!("diagnostics.snapshot_times: {e}"));
                Vec::new()
            })
        })
        .unwrap_or_default();
    if snapshot_times.windows(2).any(|w| w[0] >= w[1]) {
        errors.push("diagnostics.snapshot_times: must be strictly increasing".into());
    }
    if let Some(&last) = snapshot_times.last() {
        if last > t_end + 1e-14 {
            errors.push(format!(
                "diagnostics.snapshot_times: last time {last} exceeds solver.t_end {t_end}"
            ));
        }
    }
    let poles: Vec<[f64; 4]> = kv
        .get("diagnostics.poles")
        .map(|v| {
            v.split(';')
                .filter(|g| !g.trim().is_empty())
                .filter_map(|g| {
                    let nums = parse_list(g).ok()?;
                    match nums.len() {
                        3 => Some([nums[0], nums[1], 0.0, nums[2]]),
                        4 => Some([nums[0], nums[1], nums[2], nums[3]]),
                        _ => {
                            errors.push(format!(
                                "diagnostics.poles: group '{}' needs x y [z] s",
                                g.trim()
                            ));
                            None
                        }
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    let audit_window = kv.get("diagnostics.audit_window").and_then(|v| {
        let nums = parse_list(v).ok()?;
        if nums.len() == 2 {
            Some((nums[0], nums[1]))
        } else {
            errors.push("diagnostics.audit_window: expected two times".into());
            None
        }
    });
    let audit_tolerance = f64_field(kv, "diagnostics.audit_tolerance", Some(2e-3), &mut errors, &mut used);
    let density_radii = match kv.get("diagnostics.density_radii").map(|s| s.as_str()) {
        None | Some("auto") => None,
        Some(v) => match parse_list(v) {
            Ok(list) => Some(list),
            Err(e) => {
                errors.push(format!("diagnostics.density_radii: {e}"));
                None
            }
        },
    };
    let density_band = f64_field(kv, "diagnostics.density_band", Some(0.95), &mut errors, &mut used);
    let max_centers = f64_field(kv, "diagnostics.max_centers", Some(2000.0), &mut errors, &mut used) as usize;
    let n_random_centers = f64_field(kv, "diagnostics.n_random_centers", Some(100.0), &mut errors, &mut used) as usize;
    let theta_radius = match kv.get("diagnostics.theta_radius").map(|s| s.as_str()) {
        None | Some("auto") => None,
        Some(v) => match v.parse::<f64>() {
            Ok(x) => Some(x),
            Err(_) => {
                errors.push(format!("diagnostics.theta_radius: expected auto or number, got {v}"));
                None
            }
        },
    };
    let check_times: Vec<f64> = kv
        .get("checks.times")
        .map(|v| parse_list(v).unwrap_or_default())
        .unwrap_or_default();

    // checks
    let mut checks = ChecksConfig::default();
    {
        let mut flag = |field: &'static str, slot: &mut bool| {
            used.push(field);
            *slot = parse_bool(kv.get(field), *slot, field, &mut errors);
        };
        flag("checks.radius_law", &mut checks.radius_law);
        flag("checks.translation_law", &mut checks.translation_law);
        flag("checks.stationarity", &mut checks.stationarity);
        flag("checks.wave_translation", &mut checks.wave_translation);
        flag("checks.dissipation", &mut checks.dissipation);
        flag("checks.energy_growth", &mut checks.energy_growth);
        flag("checks.discrepancy_bound", &mut checks.discrepancy_bound);
        flag("checks.energy_concentration", &mut checks.energy_concentration);
        flag("checks.unit_density", &mut checks.unit_density);
        flag("checks.bv_bound", &mut checks.bv_bound);
        flag("checks.monotonicity", &mut checks.monotonicity);
        flag("checks.energy_collapse", &mut checks.energy_collapse);
        flag("checks.planar_sigma", &mut checks.planar_sigma);
    }

    used.extend(["output.dir", "output.field_dumps", "output.interface_csv", "seed"]);
    let output_dir = kv
        .get("output.dir")
        .cloned()
        .unwrap_or_else(|| format!("out/{name}"));
    let field_dumps = parse_bool(kv.get("output.field_dumps"), true, "output.field_dumps", &mut errors);
    let interface_csv = parse_bool(
        kv.get("output.interface_csv"),
        true,
        "output.interface_csv",
        &mut errors,
    );
    let seed = f64_field(kv, "seed", Some(42.0), &mut errors, &mut used) as u64;

    // unknown keys are config errors (typos must not silently pass)
    for key in kv.keys() {
        if !used.contains(&key.as_str()) {
            errors.push(format!("{key}: unknown key"));
        }
    }

    // semantic validation
    if resolution < 16 {
        errors.push(format!("grid.resolution: {resolution} below 16"));
    }
    if sweep.is_none() {
        if epsilon <= 0.0 {
            errors.push("epsilon: required positive number (or provide sweep.epsilon)".into());
        } else {
            let ratio = epsilon * resolution as f64;
            if !(2.0 - 1e-9..=8.0 + 1e-9).contains(&ratio) {
                errors.push(format!(
                    "epsilon: eps/h = {ratio:.3} outside [2, 8]"
                ));
            }
        }
    }
    if let Some(sw) = &sweep {
        if sw.epsilons.is_empty() {
            errors.push("sweep.epsilon: empty list".into());
        }
        for (k, (&e, &r)) in sw.epsilons.iter().zip(sw.resolutions.iter()).enumerate() {
            let ratio = e * r as f64;
            if !(2.0 - 1e-9..=8.0 + 1e-9).contains(&ratio) {
                errors.push(format!(
                    "sweep entry {k}: eps/h = {ratio:.3} outside [2, 8]"
                ));
            }
        }
    }
    if t_end < 0.0 {
        errors.push("solver.t_end: negative".into());
    }

    if !errors.is_empty() {
        return Err(ConfigInvalid { messages: errors });
    }
    Ok(ScenarioConfig {
        name,
        dim,
        resolution,
        geometry,
        r_trunc,
        well,
        epsilon,
        sweep,
        transport,
        scheme,
        dt,
        t_end,
        cfl_safety,
        upwind,
        settle_time,
        snapshot_times,
        poles,
        audit_window,
        audit_tolerance,
        density_radii,
        density_band,
        max_centers,
        n_random_centers,
        theta_radius,
        checks,
        check_times,
        output_dir,
        field_dumps,
        interface_csv,
        seed,
    })
}

fn parse_bool(
    v: Option<&String>,
    default: bool,
    field: &str,
    errors: &mut Vec<String>,
) -> bool {
    match v.map(|s| s.as_str()) {
        None => default,
        Some("true") => true,
        Some("false") => false,
        Some(other) => {
            errors.push(format!("{field}: expected true|false, got {other}"));
            default
        }
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>, String> {
    v.split([' ', ','])
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {s}"))
        })
        .collect()
}

/// Renders a config back to the flat text format (used by dump-defaults).
pub fn render_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let fmt_list = |xs: &[f64]| {
        xs.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    line("name", cfg.name.clone());
    line("grid.dim", cfg.dim.to_string());
    line("grid.resolution", cfg.resolution.to_string());
    match &cfg.geometry {
        GeometryConfig::Circle { center, r0 } => {
            line("geometry.kind", "circle".into());
            line("geometry.center", fmt_list(center));
            line("geometry.r0", r0.to_string());
        }
        GeometryConfig::Sphere { center, r0 } => {
            line("geometry.kind", "sphere".into());
            line("geometry.center", fmt_list(center));
            line("geometry.r0", r0.to_string());
        }
        GeometryConfig::TwoCircles { c1, r1, c2, r2 } => {
            line("geometry.kind", "two_circles".into());
            line("geometry.c1", fmt_list(c1));
            line("geometry.r1", r1.to_string());
            line("geometry.c2", fmt_list(c2));
            line("geometry.r2", r2.to_string());
        }
        GeometryConfig::Annulus { center, r_in, r_out } => {
            line("geometry.kind", "annulus".into());
            line("geometry.center", fmt_list(center));
            line("geometry.r_in", r_in.to_string());
            line("geometry.r_out", r_out.to_string());
        }
        GeometryConfig::Graph { heights } => {
            line("geometry.kind", "graph".into());
            line("geometry.heights", fmt_list(heights));
        }
    }
    if let Some(rt) = cfg.r_trunc {
        line("geometry.r_trunc", rt.to_string());
    }
    line("well", cfg.well.clone());
    if cfg.epsilon > 0.0 {
        line("epsilon", cfg.epsilon.to_string());
    }
    if let Some(sw) = &cfg.sweep {
        line("sweep.epsilon", fmt_list(&sw.epsilons));
        line(
            "sweep.resolution",
            sw.resolutions
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(" "),
        );
        line("sweep.xi_time", sw.xi_time.to_string());
    }
    line("transport.kind", cfg.transport.kind.clone());
    if !cfg.transport.params.is_empty() {
        line("transport.params", fmt_list(&cfg.transport.params));
    }
    line("transport.p", cfg.transport.p.to_string());
    line("transport.q", cfg.transport.q.to_string());
    line("transport.beta", cfg.transport.beta.to_string());
    line(
        "solver.scheme",
        match cfg.scheme {
            Scheme::Explicit => "explicit".into(),
            Scheme::SemiImplicit => "semi_implicit".into(),
        },
    );
    line(
        "solver.dt",
        match cfg.dt {
            DtSpec::Auto => "auto".into(),
            DtSpec::Fixed(x) => x.to_string(),
        },
    );
    line("solver.t_end", cfg.t_end.to_string());
    line("solver.cfl_safety", cfg.cfl_safety.to_string());
    line("solver.upwind", cfg.upwind.to_string());
    if cfg.settle_time > 0.0 {
        line("init.settle_time", cfg.settle_time.to_string());
    }
    if !cfg.snapshot_times.is_empty() {
        line("diagnostics.snapshot_times", fmt_list(&cfg.snapshot_times));
    }
    if !cfg.poles.is_empty() {
        let groups: Vec<String> = cfg
            .poles
            .iter()
            .map(|p| {
                if cfg.dim == 3 {
                    format!("{} {} {} {}", p[0], p[1], p[2], p[3])
                } else {
                    format!("{} {} {}", p[0], p[1], p[3])
                }
            })
            .collect();
        line("diagnostics.poles", groups.join(" ; "));
    }
    if let Some((a, b)) = cfg.audit_window {
        line("diagnostics.audit_window", format!("{a} {b}"));
    }
    line("diagnostics.audit_tolerance", cfg.audit_tolerance.to_string());
    if let Some(r) = &cfg.density_radii {
        line("diagnostics.density_radii", fmt_list(r));
    }
    line("diagnostics.density_band", cfg.density_band.to_string());
    line("diagnostics.max_centers", cfg.max_centers.to_string());
    line(
        "diagnostics.n_random_centers",
        cfg.n_random_centers.to_string(),
    );
    if let Some(r) = cfg.theta_radius {
        line("diagnostics.theta_radius", r.to_string());
    }
    if !cfg.check_times.is_empty() {
        line("checks.times", fmt_list(&cfg.check_times));
    }
    let c = &cfg.checks;
    for (k, v) in [
        ("checks.radius_law", c.radius_law),
        ("checks.translation_law", c.translation_law),
        ("checks.stationarity", c.stationarity),
        ("checks.wave_translation", c.wave_translation),
        ("checks.dissipation", c.dissipation),
        ("checks.energy_growth", c.energy_growth),
        ("checks.discrepancy_bound", c.discrepancy_bound),
        ("checks.energy_concentration", c.energy_concentration),
        ("checks.unit_density", c.unit_density),
        ("checks.bv_bound", c.bv_bound),
        ("checks.monotonicity", c.monotonicity),
        ("checks.energy_collapse", c.energy_collapse),
        ("checks.planar_sigma", c.planar_sigma),
    ] {
        line(k, v.to_string());
    }
    line("output.dir", cfg.output_dir.clone());
    line("output.field_dumps", cfg.field_dumps.to_string());
    line("output.interface_csv", cfg.interface_csv.to_string());
    line("seed", cfg.seed.to_string());
    s
}

/// Built-in scenario library.
pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "plane_stationary",
        "plane_translate",
        "circle_shrink",
        "circle_transport",
        "two_circles_disjoint",
        "annulus_collapse",
        "sphere_shrink",
        "rough_u_circle",
        "circle_sweep",
        "energy_sweep",
    ]
}

pub fn builtin_config(name: &str) -> Option<ScenarioConfig> {
    let text = builtin_text(name)?;
    Some(parse_config(&text).expect("builtin config must parse"))
}

pub fn builtin_text(name: &str) -> Option<String> {
    let t_star_quarter_circle = 0.25f64 * 0.25 / 2.0; // r0^2/2 for r0 = 0.25
    let base = match name {
        "plane_stationary" => format!(
            "name = plane_stationary\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = graph\n\
             geometry.heights = {heights}\n\
             well = quartic\n\
             epsilon = 0.03125\n\
             transport.kind = zero\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.01\n\
             solver.cfl_safety = 0.5\n\
             init.settle_time = 0.006\n\
             diagnostics.snapshot_times = 0.002 0.004 0.006 0.008 0.01\n\
             checks.stationarity = true\n\
             checks.planar_sigma = true\n\
             output.dir = out/plane_stationary\n",
            heights = vec!["0.25"; 16].join(" ")
        ),
        "plane_translate" => format!(
            "name = plane_translate\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = graph\n\
             geometry.heights = {heights}\n\
             well = quartic\n\
             epsilon = 0.03125\n\
             transport.kind = constant\n\
             transport.params = 0.5 0\n\
             transport.p = 2\n\
             transport.q = 4\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.02\n\
             solver.cfl_safety = 0.5\n\
             init.settle_time = 0.006\n\
             diagnostics.snapshot_times = 0.005 0.01 0.015 0.02\n\
             checks.wave_translation = true\n\
             checks.energy_growth = true\n\
             output.dir = out/plane_translate\n",
            heights = vec!["0.25"; 16].join(" ")
        ),
        "circle_shrink" => format!(
            "name = circle_shrink\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = circle\n\
             geometry.center = 0.5 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             epsilon = 0.015625\n\
             transport.kind = zero\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.02\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.001 0.0025 0.004 0.005 0.0075 0.01 0.0125 0.015 0.0175 0.02\n\
             diagnostics.poles = 0.5 0.5 {ts} ; 0.75 0.5 0.021 ; 0.3 0.7 0.05\n\
             diagnostics.audit_window = 0.001 0.02\n\
             checks.times = 0.005 0.01 0.02\n\
             checks.radius_law = true\n\
             checks.dissipation = true\n\
             checks.energy_concentration = true\n\
             checks.unit_density = true\n\
             checks.monotonicity = true\n\
             output.dir = out/circle_shrink\n",
            ts = t_star_quarter_circle
        ),
        "circle_transport" => format!(
            "name = circle_transport\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = circle\n\
             geometry.center = 0.4 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             epsilon = 0.015625\n\
             transport.kind = constant\n\
             transport.params = 0.5 0\n\
             transport.p = 2\n\
             transport.q = 4\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.02\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.001 0.0025 0.004 0.005 0.0075 0.01 0.0125 0.015 0.0175 0.02\n\
             diagnostics.poles = {px} 0.5 {ts}\n\
             diagnostics.audit_window = 0.001 0.02\n\
             checks.times = 0.005 0.01 0.02\n\
             checks.radius_law = true\n\
             checks.translation_law = true\n\
             checks.energy_growth = true\n\
             checks.monotonicity = true\n\
             output.dir = out/circle_transport\n",
            px = 0.4 + 0.5 * t_star_quarter_circle,
            ts = t_star_quarter_circle
        ),
        "two_circles_disjoint" => "name = two_circles_disjoint\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = two_circles\n\
             geometry.c1 = 0.3 0.5\n\
             geometry.r1 = 0.15\n\
             geometry.c2 = 0.7 0.5\n\
             geometry.r2 = 0.15\n\
             well = quartic\n\
             epsilon = 0.015625\n\
             transport.kind = zero\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.008\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.002 0.004 0.006 0.008\n\
             checks.times = 0.004 0.008\n\
             checks.radius_law = true\n\
             checks.dissipation = true\n\
             checks.energy_concentration = true\n\
             output.dir = out/two_circles_disjoint\n"
            .to_string(),
        "annulus_collapse" => "name = annulus_collapse\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = annulus\n\
             geometry.center = 0.5 0.5\n\
             geometry.r_in = 0.15\n\
             geometry.r_out = 0.35\n\
             well = quartic\n\
             epsilon = 0.015625\n\
             transport.kind = zero\n\
             solver.scheme = semi_implicit\n\
             solver.t_end = 0.075\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.002 0.005 0.008 0.0112 0.015 0.02 0.03 0.04 0.05 0.06 0.07 0.075\n\
             checks.energy_concentration = true\n\
             checks.energy_collapse = true\n\
             output.dir = out/annulus_collapse\n"
            .to_string(),
        "sphere_shrink" => "name = sphere_shrink\n\
             grid.dim = 3\n\
             grid.resolution = 128\n\
             geometry.kind = sphere\n\
             geometry.center = 0.5 0.5 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             epsilon = 0.03125\n\
             transport.kind = zero\n\
             transport.p = 2.5\n\
             solver.scheme = semi_implicit\n\
             solver.t_end = 0.008\n\
             solver.cfl_safety = 0.15\n\
             diagnostics.snapshot_times = 0.002 0.004 0.006 0.008\n\
             diagnostics.max_centers = 800\n\
             checks.times = 0.004 0.008\n\
             checks.radius_law = true\n\
             checks.energy_concentration = true\n\
             output.dir = out/sphere_shrink\n"
            .to_string(),
        "rough_u_circle" => "name = rough_u_circle\n\
             grid.dim = 2\n\
             grid.resolution = 256\n\
             geometry.kind = circle\n\
             geometry.center = 0.5 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             epsilon = 0.015625\n\
             transport.kind = rough_radial\n\
             transport.params = 0.3 0.3 1.0\n\
             transport.p = 1.6\n\
             transport.q = 4\n\
             solver.scheme = explicit\n\
             solver.t_end = 0.01\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.0025 0.005 0.0075 0.01\n\
             checks.energy_growth = true\n\
             output.dir = out/rough_u_circle\n"
            .to_string(),
        // the eps sweep on circle_shrink: eps halves while eps/h grows, so
        // both the model error and the lattice bias shrink along the sweep
        "circle_sweep" => "name = circle_sweep\n\
             grid.dim = 2\n\
             grid.resolution = 128\n\
             geometry.kind = circle\n\
             geometry.center = 0.5 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             sweep.epsilon = 0.03125 0.015625 0.0078125\n\
             sweep.resolution = 128 362 1024\n\
             sweep.xi_time = 0.005\n\
             transport.kind = zero\n\
             solver.scheme = semi_implicit\n\
             solver.t_end = 0.02\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.snapshot_times = 0.001 0.0025 0.005 0.01 0.015 0.02\n\
             diagnostics.density_radii = 0.04 0.08 0.12 0.16 0.2 0.24 0.28 0.32 0.36 0.4 0.44\n\
             diagnostics.max_centers = 1000\n\
             output.field_dumps = false\n\
             output.interface_csv = false\n\
             output.dir = out/circle_sweep\n"
            .to_string(),
        // initial-energy-only sweep over circle, two_circles, annulus is
        // assembled by the harness from this base config
        "energy_sweep" => "name = energy_sweep\n\
             grid.dim = 2\n\
             grid.resolution = 128\n\
             geometry.kind = circle\n\
             geometry.center = 0.5 0.5\n\
             geometry.r0 = 0.25\n\
             well = quartic\n\
             sweep.epsilon = 0.03125 0.015625 0.0078125\n\
             sweep.resolution = 128 362 1024\n\
             transport.kind = zero\n\
             solver.scheme = semi_implicit\n\
             solver.t_end = 0\n\
             solver.cfl_safety = 0.5\n\
             diagnostics.density_radii = 0.04 0.08 0.12 0.16 0.2 0.24 0.28 0.32 0.36 0.4 0.44\n\
             output.field_dumps = false\n\
             output.interface_csv = false\n\
             output.dir = out/energy_sweep\n"
            .to_string(),
        _ => return None,
    };
    Some(base)
}

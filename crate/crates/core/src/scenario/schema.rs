//! Scenario files: one JSON document describing the system source, the
//! simulation setup, analysis options, seeds, and initial conditions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    build_aggregate_matrices, build_full_matrices, build_mode, reduce_zero_mode, DeaParams,
    GeneratorParams, Line, LoadBox, NetworkParams, SecondaryParams, SwitchedSystem,
};
use crate::hybrid::{LoadGenerator, SimConfig};
use crate::matjson::mat_from_rows;

/// Whether `simulate` runs the slow-switching or the ISS system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    #[default]
    SlowSwitching,
    Iss,
}

/// A mode given directly by its matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InlineMode {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub u: Vec<f64>,
}

/// Per-mode override of one DEA block's digital parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeaOverride {
    pub index: usize,
    #[serde(default)]
    pub inertia: Option<f64>,
    #[serde(default)]
    pub damping: Option<f64>,
    /// Drops the DEA entirely for this mode (offline asset).
    #[serde(default)]
    pub offline: bool,
}

/// A mode of a parameterized model: switching input plus optional DEA
/// overrides that trigger a matrix rebuild.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamMode {
    pub u: Vec<f64>,
    #[serde(default)]
    pub dea_overrides: Vec<DeaOverride>,
}

/// Network description in scenario files; bus numbers are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkJson {
    pub bus_count: usize,
    pub gen_buses: Vec<usize>,
    pub dea_buses: Vec<usize>,
    /// Rows `[from, to, reactance]` with 1-based bus numbers.
    pub lines: Vec<(usize, usize, f64)>,
    pub sync_speed: f64,
    #[serde(default)]
    pub loads: Vec<f64>,
}

impl NetworkJson {
    fn to_params(&self) -> Result<NetworkParams> {
        let conv = |b: usize, what: &str| -> Result<usize> {
            if b == 0 || b > self.bus_count {
                return Err(Error::Config {
                    path: format!("/system/network/{what}"),
                    message: format!("bus number {b} out of 1..={}", self.bus_count),
                });
            }
            Ok(b - 1)
        };
        Ok(NetworkParams {
            bus_count: self.bus_count,
            gen_buses: self
                .gen_buses
                .iter()
                .map(|&b| conv(b, "gen_buses"))
                .collect::<Result<_>>()?,
            dea_buses: self
                .dea_buses
                .iter()
                .map(|&b| conv(b, "dea_buses"))
                .collect::<Result<_>>()?,
            lines: self
                .lines
                .iter()
                .map(|&(f, t, x)| {
                    Ok(Line {
                        from: conv(f, "lines")?,
                        to: conv(t, "lines")?,
                        reactance: x,
                    })
                })
                .collect::<Result<_>>()?,
            sync_speed: self.sync_speed,
            loads: if self.loads.is_empty() {
                vec![0.0; self.bus_count]
            } else {
                self.loads.clone()
            },
        })
    }
}

/// Where the switched system comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemSource {
    /// Matrices given verbatim.
    Inline {
        modes: Vec<InlineMode>,
        load_box: LoadBox,
    },
    /// Common-frequency aggregate model rebuilt per mode.
    Aggregate {
        generators: Vec<GeneratorParams>,
        deas: Vec<DeaParams>,
        secondary: SecondaryParams,
        modes: Vec<ParamMode>,
        load_box: LoadBox,
    },
    /// Per-bus model with zero-mode reduction, rebuilt per mode.
    FullOrder {
        network: NetworkJson,
        generators: Vec<GeneratorParams>,
        deas: Vec<DeaParams>,
        #[serde(default)]
        integral_gain: f64,
        modes: Vec<ParamMode>,
        load_box: LoadBox,
    },
}

/// Limit-set construction options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OmegaOptions {
    pub eps_tail: f64,
    pub chord_tol: f64,
    pub max_samples: usize,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        OmegaOptions {
            eps_tail: 1e-3,
            chord_tol: 1e-3,
            max_samples: 20_000,
        }
    }
}

/// Certificate synthesis options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CertOptions {
    pub theta: f64,
    pub n0: f64,
}

impl Default for CertOptions {
    fn default() -> Self {
        CertOptions { theta: 0.5, n0: 1.0 }
    }
}

/// Initial conditions: explicit states or a seeded ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Explicit { states: Vec<Vec<f64>> },
    RandomBall { radius: f64, count: usize },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::RandomBall {
            radius: 3.0,
            count: 5,
        }
    }
}

impl InitSpec {
    pub fn count(&self) -> usize {
        match self {
            InitSpec::Explicit { states } => states.len(),
            InitSpec::RandomBall { count, .. } => *count,
        }
    }
}

fn default_out_dir() -> String {
    "out".into()
}

/// One scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSource,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub sim_kind: SimKind,
    #[serde(default)]
    pub load: Option<LoadGenerator>,
    #[serde(default)]
    pub omega: OmegaOptions,
    #[serde(default)]
    pub cert: CertOptions,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub inits: InitSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl Scenario {
    /// Parses a scenario document, reporting the JSON pointer of schema
    /// violations.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: format!("/{}", e.path().to_string().replace('.', "/")),
                message: e.inner().to_string(),
            })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config {
                path: "/seeds".into(),
                message: "at least one seed is required".into(),
            });
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config {
                path: "/seeds".into(),
                message: "seeds must be unique".into(),
            });
        }
        self.sim.validate()?;
        Ok(())
    }

    /// Builds the switched system this scenario describes.
    pub fn build_system(&self) -> Result<SwitchedSystem> {
        build_system(&self.system)
    }
}

fn apply_overrides(deas: &[DeaParams], overrides: &[DeaOverride], path: &str) -> Result<Vec<DeaParams>> {
    let mut out: Vec<Option<DeaParams>> = deas.iter().cloned().map(Some).collect();
    for (k, ov) in overrides.iter().enumerate() {
        let slot = out.get_mut(ov.index).ok_or_else(|| Error::Config {
            path: format!("{path}/dea_overrides/{k}/index"),
            message: format!("DEA index {} out of range", ov.index),
        })?;
        if ov.offline {
            *slot = None;
            continue;
        }
        if let Some(d) = slot.as_mut() {
            if let Some(m) = ov.inertia {
                d.inertia = m;
            }
            if let Some(dd) = ov.damping {
                d.damping = dd;
            }
        }
    }
    Ok(out.into_iter().flatten().collect())
}

/// Assembles the switched system from any of the three sources.
pub fn build_system(source: &SystemSource) -> Result<SwitchedSystem> {
    match source {
        SystemSource::Inline { modes, load_box } => {
            let mut built = Vec::with_capacity(modes.len());
            for (q, m) in modes.iter().enumerate() {
                let a = mat_from_rows(&m.a).map_err(|e| Error::Config {
                    path: format!("/system/modes/{q}/a"),
                    message: e,
                })?;
                let b = mat_from_rows(&m.b).map_err(|e| Error::Config {
                    path: format!("/system/modes/{q}/b"),
                    message: e,
                })?;
                built.push(build_mode(q, a, b, DVector::from_vec(m.u.clone()))?);
            }
            SwitchedSystem::new(built, load_box.clone())
        }
        SystemSource::Aggregate {
            generators,
            deas,
            secondary,
            modes,
            load_box,
        } => {
            let mut built = Vec::with_capacity(modes.len());
            for (q, m) in modes.iter().enumerate() {
                let deas_q = apply_overrides(deas, &m.dea_overrides, &format!("/system/modes/{q}"))?;
                let (a, b) = build_aggregate_matrices(generators, &deas_q, secondary)?;
                if m.u.len() != b.ncols() {
                    return Err(Error::Config {
                        path: format!("/system/modes/{q}/u"),
                        message: format!("expected {} input channels, got {}", b.ncols(), m.u.len()),
                    });
                }
                built.push(build_mode(q, a, b, DVector::from_vec(m.u.clone()))?);
            }
            SwitchedSystem::new(built, load_box.clone())
        }
        SystemSource::FullOrder {
            network,
            generators,
            deas,
            integral_gain,
            modes,
            load_box,
        } => {
            let net = network.to_params()?;
            // One shared reduction basis: the angle-translation kernel is
            // mode-independent, so T from the first mode serves all of
            // them and every mode lives in the same reduced coordinates.
            let mut shared_t: Option<DMatrix<f64>> = None;
            let mut built = Vec::with_capacity(modes.len());
            for (q, m) in modes.iter().enumerate() {
                let deas_q = apply_overrides(deas, &m.dea_overrides, &format!("/system/modes/{q}"))?;
                if deas_q.len() != deas.len() {
                    return Err(Error::Config {
                        path: format!("/system/modes/{q}/dea_overrides"),
                        message: "full-order modes cannot drop DEA buses (state dimension must not change)"
                            .into(),
                    });
                }
                let (a_bar, b_bar, _layout) =
                    build_full_matrices(&net, generators, &deas_q, *integral_gain)?;
                let (a, b) = match &shared_t {
                    Some(t) => (t.transpose() * &a_bar * t, t.transpose() * &b_bar),
                    None => {
                        let (a, b, t) = reduce_zero_mode(&a_bar, &b_bar)?;
                        shared_t = Some(t);
                        (a, b)
                    }
                };
                if m.u.len() != b.ncols() {
                    return Err(Error::Config {
                        path: format!("/system/modes/{q}/u"),
                        message: format!("expected {} input channels, got {}", b.ncols(), m.u.len()),
                    });
                }
                built.push(build_mode(q, a, b, DVector::from_vec(m.u.clone()))?);
            }
            SwitchedSystem::new(built, load_box.clone())
        }
    }
}

/// Applies `--set key=value` overrides onto the raw JSON document by
/// dotted path; values parse as JSON scalars with a string fallback.
/// Overrides target existing leaves (or add new keys on an existing
/// object); missing intermediate structure is a config error.
pub fn apply_dotted_overrides(doc: &mut serde_json::Value, sets: &[(String, String)]) -> Result<()> {
    for (key, raw) in sets {
        let value: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
        let pointer: String = key.split('.').fold(String::new(), |mut acc, part| {
            acc.push('/');
            acc.push_str(part);
            acc
        });
        let (parent_ptr, leaf) = match pointer.rfind('/') {
            Some(0) => ("", &pointer[1..]),
            Some(k) => (&pointer[..k], &pointer[k + 1..]),
            None => ("", pointer.as_str()),
        };
        let parent = doc.pointer_mut(parent_ptr).ok_or_else(|| Error::Config {
            path: parent_ptr.to_string(),
            message: "override path does not exist".into(),
        })?;
        match parent {
            serde_json::Value::Object(map) => {
                map.insert(leaf.to_string(), value);
            }
            serde_json::Value::Array(arr) => {
                let idx: usize = leaf.parse().map_err(|_| Error::Config {
                    path: pointer.clone(),
                    message: format!("expected an array index, got {leaf}"),
                })?;
                if idx >= arr.len() {
                    return Err(Error::Config {
                        path: pointer.clone(),
                        message: "array index out of range".into(),
                    });
                }
                arr[idx] = value;
            }
            _ => {
                return Err(Error::Config {
                    path: parent_ptr.to_string(),
                    message: "override parent is not an object or array".into(),
                })
            }
        }
    }
    Ok(())
}

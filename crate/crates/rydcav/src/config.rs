//! Run configuration: a flat `key = value` text format with dotted section
//! prefixes (`params.J = 10`), strict parsing (unknown keys rejected with
//! line-precise messages), and lossless round-tripping through
//! [`RunConfig::to_text`].

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::dynamics::Window;
use crate::hilbert::{AtomicLabel, HilbertSpace};
use crate::model::{Branch, SystemParams};
use crate::states::{self, QuantumState};
use crate::tomography::Mode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("{0}")]
    Schema(String),
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// Initial-state descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    LocalizedFock {
        atoms: AtomicLabel,
        n1: usize,
        n2: usize,
    },
    NormalFock {
        atoms: AtomicLabel,
        n1: usize,
        n2: usize,
    },
    Coherent {
        atoms: AtomicLabel,
        alpha: C64,
        beta: C64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub branch: Branch,
    pub n_list: Vec<usize>,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Absorption,
    Emission,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub branch: Branch,
    pub n_list: Vec<usize>,
    pub samples: usize,
}

/// Measurement time of the filter protocol: the nominal preparation time
/// `pi / (2 sqrt(2) xi)` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureTime {
    Auto,
    At(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub measure: AtomicLabel,
    pub time: MeasureTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec {
    pub mode: Mode,
    pub extent: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySpec {
    pub t_end: f64,
    pub samples: usize,
    pub n_bar: f64,
}

/// Complete run description. Optional sections are only required by the
/// subcommands that consume them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub recipe: Option<String>,
    pub params: SystemParams,
    pub n_max: usize,
    pub state: Option<StateSpec>,
    pub grid: Option<GridSpec>,
    pub window: Option<Window>,
    pub sweep: Option<SweepSpec>,
    pub scan: Option<ScanSpec>,
    pub filter: Option<FilterSpec>,
    pub wigner: Option<WignerSpec>,
    pub decay: Option<DecaySpec>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

impl RunConfig {
    /// Canonical key/value pairs, in serialization order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| kv.push((k.to_string(), v));
        if let Some(r) = &self.recipe {
            push("recipe", r.clone());
        }
        push("params.g", fmt_f64(self.params.g));
        push("params.omega", fmt_f64(self.params.omega));
        push("params.delta", fmt_f64(self.params.delta));
        push("params.J", fmt_f64(self.params.j));
        push("params.v_dd", fmt_f64(self.params.v_dd));
        push("params.kappa", fmt_f64(self.params.kappa));
        push("params.gamma", fmt_f64(self.params.gamma));
        push("params.gamma_r", fmt_f64(self.params.gamma_r));
        push("space.n_max", self.n_max.to_string());
        if let Some(state) = &self.state {
            match state {
                StateSpec::LocalizedFock { atoms, n1, n2 } => {
                    push("state.kind", "localized_fock".into());
                    push("state.atoms", atoms.name().into());
                    push("state.n1", n1.to_string());
                    push("state.n2", n2.to_string());
                }
                StateSpec::NormalFock { atoms, n1, n2 } => {
                    push("state.kind", "normal_fock".into());
                    push("state.atoms", atoms.name().into());
                    push("state.n1", n1.to_string());
                    push("state.n2", n2.to_string());
                }
                StateSpec::Coherent { atoms, alpha, beta } => {
                    push("state.kind", "coherent".into());
                    push("state.atoms", atoms.name().into());
                    push("state.alpha_re", fmt_f64(alpha.re));
                    push("state.alpha_im", fmt_f64(alpha.im));
                    push("state.beta_re", fmt_f64(beta.re));
                    push("state.beta_im", fmt_f64(beta.im));
                }
            }
        }
        if let Some(g) = &self.grid {
            push("grid.t_end", fmt_f64(g.t_end));
            push("grid.samples", g.samples.to_string());
        }
        if let Some(w) = &self.window {
            match w {
                Window::PerPhoton => push("window.kind", "per_photon".into()),
                Window::TwoPhoton => push("window.kind", "two_photon".into()),
                Window::Fixed(t) => {
                    push("window.kind", "fixed".into());
                    push("window.t", fmt_f64(*t));
                }
            }
        }
        if let Some(s) = &self.sweep {
            push("sweep.branch", s.branch.name().into());
            push(
                "sweep.n_list",
                s.n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            push("sweep.from", fmt_f64(s.from));
            push("sweep.to", fmt_f64(s.to));
            push("sweep.points", s.points.to_string());
            push("sweep.samples", s.samples.to_string());
        }
        if let Some(s) = &self.scan {
            push(
                "scan.kind",
                match s.kind {
                    ScanKind::Absorption => "absorption".into(),
                    ScanKind::Emission => "emission".into(),
                },
            );
            push("scan.branch", s.branch.name().into());
            push(
                "scan.n_list",
                s.n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            push("scan.samples", s.samples.to_string());
        }
        if let Some(f) = &self.filter {
            push("filter.measure", f.measure.name().into());
            match f.time {
                MeasureTime::Auto => push("filter.time", "auto".into()),
                MeasureTime::At(t) => push("filter.time", fmt_f64(t)),
            }
        }
        if let Some(w) = &self.wigner {
            push("wigner.mode", w.mode.name().into());
            push("wigner.extent", fmt_f64(w.extent));
            push("wigner.points", w.points.to_string());
        }
        if let Some(d) = &self.decay {
            push("decay.t_end", fmt_f64(d.t_end));
            push("decay.samples", d.samples.to_string());
            push("decay.n_bar", fmt_f64(d.n_bar));
        }
        kv
    }

    /// Serialize to the flat text format. `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Parse from text, rejecting unknown keys.
    pub fn parse(text: &str) -> ConfigResult<Self> {
        Self::parse_with_base(text, None)
    }

    /// Parse `text` on top of an optional base config: keys present in the
    /// text override the base, everything else carries over.
    pub fn parse_with_base(text: &str, base: Option<&RunConfig>) -> ConfigResult<Self> {
        let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
        if let Some(base) = base {
            for (k, v) in base.to_pairs() {
                map.insert(k, (v, 0));
            }
        }
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Line {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{raw}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Line {
                    line: line_no,
                    msg: "empty key or value".into(),
                });
            }
            map.insert(key, (value, line_no));
        }
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, (String, usize)>) -> ConfigResult<Self> {
        fn take(map: &mut BTreeMap<String, (String, usize)>, key: &str) -> Option<(String, usize)> {
            map.remove(key)
        }
        fn require(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<(String, usize)> {
            take(map, key).ok_or_else(|| ConfigError::Schema(format!("missing key `{key}`")))
        }
        fn parse_val<T: std::str::FromStr>(key: &str, raw: (String, usize)) -> ConfigResult<T> {
            raw.0.parse().map_err(|_| ConfigError::Line {
                line: raw.1,
                msg: format!(
                    "invalid value `{}` for `{key}` (expected {})",
                    raw.0,
                    std::any::type_name::<T>()
                ),
            })
        }
        fn opt_val<T: std::str::FromStr>(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<Option<T>> {
            take(map, key).map(|raw| parse_val(key, raw)).transpose()
        }
        fn req_val<T: std::str::FromStr>(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<T> {
            let raw = require(map, key)?;
            parse_val(key, raw)
        }
        fn atoms_val(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<AtomicLabel> {
            let raw = require(map, key)?;
            AtomicLabel::parse(&raw.0).ok_or(ConfigError::Line {
                line: raw.1,
                msg: format!("invalid atomic label `{}` (expected G|S|A|R|gr|rg)", raw.0),
            })
        }
        fn branch_val(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<Branch> {
            let raw = require(map, key)?;
            Branch::parse(&raw.0).ok_or(ConfigError::Line {
                line: raw.1,
                msg: format!("invalid branch `{}` (expected c1|c2)", raw.0),
            })
        }
        fn n_list_val(
            map: &mut BTreeMap<String, (String, usize)>,
            key: &str,
        ) -> ConfigResult<Vec<usize>> {
            let raw = require(map, key)?;
            if raw.0.trim().is_empty() {
                return Ok(Vec::new());
            }
            raw.0
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<usize>().map_err(|_| ConfigError::Line {
                        line: raw.1,
                        msg: format!("invalid photon number `{tok}` in `{key}`"),
                    })
                })
                .collect()
        }

        let recipe = take(&mut map, "recipe").map(|(v, _)| v);
        let params = SystemParams {
            g: req_val(&mut map, "params.g")?,
            omega: req_val(&mut map, "params.omega")?,
            delta: req_val(&mut map, "params.delta")?,
            j: req_val(&mut map, "params.J")?,
            v_dd: req_val(&mut map, "params.v_dd")?,
            kappa: req_val(&mut map, "params.kappa")?,
            gamma: req_val(&mut map, "params.gamma")?,
            gamma_r: req_val(&mut map, "params.gamma_r")?,
        };
        let n_max: usize = req_val(&mut map, "space.n_max")?;

        let state = if let Some((kind, line)) = take(&mut map, "state.kind") {
            Some(match kind.as_str() {
                "localized_fock" => StateSpec::LocalizedFock {
                    atoms: atoms_val(&mut map, "state.atoms")?,
                    n1: req_val(&mut map, "state.n1")?,
                    n2: req_val(&mut map, "state.n2")?,
                },
                "normal_fock" => StateSpec::NormalFock {
                    atoms: atoms_val(&mut map, "state.atoms")?,
                    n1: req_val(&mut map, "state.n1")?,
                    n2: req_val(&mut map, "state.n2")?,
                },
                "coherent" => StateSpec::Coherent {
                    atoms: atoms_val(&mut map, "state.atoms")?,
                    alpha: C64::new(
                        req_val(&mut map, "state.alpha_re")?,
                        req_val(&mut map, "state.alpha_im")?,
                    ),
                    beta: C64::new(
                        req_val(&mut map, "state.beta_re")?,
                        req_val(&mut map, "state.beta_im")?,
                    ),
                },
                other => {
                    return Err(ConfigError::Line {
                        line,
                        msg: format!(
                            "invalid state kind `{other}` \
                             (expected localized_fock|normal_fock|coherent)"
                        ),
                    })
                }
            })
        } else {
            None
        };

        let grid = match opt_val::<f64>(&mut map, "grid.t_end")? {
            Some(t_end) => Some(GridSpec {
                t_end,
                samples: req_val(&mut map, "grid.samples")?,
            }),
            None => None,
        };

        let window = if let Some((kind, line)) = take(&mut map, "window.kind") {
            Some(match kind.as_str() {
                "per_photon" => Window::PerPhoton,
                "two_photon" => Window::TwoPhoton,
                "fixed" => Window::Fixed(req_val(&mut map, "window.t")?),
                other => {
                    return Err(ConfigError::Line {
                        line,
                        msg: format!(
                            "invalid window kind `{other}` \
                             (expected per_photon|two_photon|fixed)"
                        ),
                    })
                }
            })
        } else {
            None
        };

        let sweep = if map.contains_key("sweep.branch") {
            Some(SweepSpec {
                branch: branch_val(&mut map, "sweep.branch")?,
                n_list: n_list_val(&mut map, "sweep.n_list")?,
                from: req_val(&mut map, "sweep.from")?,
                to: req_val(&mut map, "sweep.to")?,
                points: req_val(&mut map, "sweep.points")?,
                samples: req_val(&mut map, "sweep.samples")?,
            })
        } else {
            None
        };

        let scan = if let Some((kind, line)) = take(&mut map, "scan.kind") {
            let kind = match kind.as_str() {
                "absorption" => ScanKind::Absorption,
                "emission" => ScanKind::Emission,
                other => {
                    return Err(ConfigError::Line {
                        line,
                        msg: format!("invalid scan kind `{other}` (expected absorption|emission)"),
                    })
                }
            };
            Some(ScanSpec {
                kind,
                branch: branch_val(&mut map, "scan.branch")?,
                n_list: n_list_val(&mut map, "scan.n_list")?,
                samples: req_val(&mut map, "scan.samples")?,
            })
        } else {
            None
        };

        let filter = if map.contains_key("filter.measure") {
            let measure = atoms_val(&mut map, "filter.measure")?;
            let time_raw = require(&mut map, "filter.time")?;
            let time = if time_raw.0 == "auto" {
                MeasureTime::Auto
            } else {
                MeasureTime::At(parse_val("filter.time", time_raw)?)
            };
            Some(FilterSpec { measure, time })
        } else {
            None
        };

        let wigner = if let Some((mode, line)) = take(&mut map, "wigner.mode") {
            let mode = Mode::parse(&mode).ok_or(ConfigError::Line {
                line,
                msg: format!("invalid mode `{mode}` (expected a1|a2|c1|c2)"),
            })?;
            Some(WignerSpec {
                mode,
                extent: req_val(&mut map, "wigner.extent")?,
                points: req_val(&mut map, "wigner.points")?,
            })
        } else {
            None
        };

        let decay = match opt_val::<f64>(&mut map, "decay.t_end")? {
            Some(t_end) => Some(DecaySpec {
                t_end,
                samples: req_val(&mut map, "decay.samples")?,
                n_bar: req_val(&mut map, "decay.n_bar")?,
            }),
            None => None,
        };

        if let Some((key, (_, line))) = map.into_iter().next() {
            return Err(ConfigError::Line {
                line,
                msg: format!("unknown key `{key}`"),
            });
        }

        Ok(Self {
            recipe,
            params,
            n_max,
            state,
            grid,
            window,
            sweep,
            scan,
            filter,
            wigner,
            decay,
        })
    }

    pub fn space(&self) -> crate::Result<HilbertSpace> {
        HilbertSpace::new(self.n_max)
    }

    /// Construct the configured initial state.
    pub fn build_initial_state(&self, space: &HilbertSpace) -> crate::Result<QuantumState> {
        let spec = self
            .state
            .as_ref()
            .ok_or_else(|| crate::Error::BadGrid("config has no state.* section".into()))?;
        match spec {
            StateSpec::LocalizedFock { atoms, n1, n2 } => {
                states::localized_fock(space, *atoms, *n1, *n2)
            }
            StateSpec::NormalFock { atoms, n1, n2 } => {
                states::normal_mode_fock(space, *atoms, *n1, *n2)
            }
            StateSpec::Coherent { atoms, alpha, beta } => {
                states::coherent_product(space, *atoms, *alpha, *beta)
            }
        }
    }
}

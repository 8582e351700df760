//! TOML map and schedule files.
//!
//! ```toml
//! family = "linear-sft"
//! slopes = [2.0, 4.0]
//! matrix = [[1, 1], [1, 1]]
//! branch_intervals = [[0.0, 0.5], [0.75, 1.0]]
//!
//! [numerics]
//! depth = 20
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapModel;
use crate::pressure::PressureOptions;
use crate::symbolic::TransitionMatrix;
use crate::wmeasure::{GrowthPolicy, StageSpec, StageTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    Preset,
    MannevillePomeau,
    LinearSft,
    ParabolicLinearBlend,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub depth: Option<usize>,
    pub min_depth: Option<usize>,
    pub grid: Option<usize>,
    pub max_words: Option<u64>,
    pub d_big: Option<f64>,
    pub d0_tol: Option<f64>,
    pub induced_nodes: Option<usize>,
    pub induced_terms: Option<usize>,
    pub n_rep: Option<usize>,
}

impl Numerics {
    pub fn pressure_options(&self) -> Result<PressureOptions> {
        let mut o = PressureOptions::default();
        if let Some(v) = self.depth {
            o.depth = Some(v);
        }
        if let Some(v) = self.min_depth {
            o.min_depth = v;
        }
        if let Some(v) = self.grid {
            if v < 2 {
                return Err(Error::Schema("numerics.grid must be at least 2".into()));
            }
            o.grid = v;
        }
        if let Some(v) = self.max_words {
            o.max_words = v;
        }
        if let Some(v) = self.d_big {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::Schema("numerics.d_big must be finite and > 1".into()));
            }
            o.d_big = v;
        }
        if let Some(v) = self.induced_nodes {
            if !(6..=96).contains(&v) {
                return Err(Error::Schema("numerics.induced_nodes must be in 6..=96".into()));
            }
            o.induced_nodes = v;
        }
        if let Some(v) = self.induced_terms {
            if !(16..=1 << 16).contains(&v) {
                return Err(Error::Schema("numerics.induced_terms must be in 16..=65536".into()));
            }
            o.induced_terms = v;
        }
        Ok(o)
    }

    pub fn d0_tol(&self) -> Result<f64> {
        match self.d0_tol {
            Some(t) if !(t > 0.0) => Err(Error::Schema("numerics.d0_tol must be positive".into())),
            Some(t) => Ok(t),
            None => Ok(1e-3),
        }
    }

    pub fn n_rep(&self) -> usize {
        self.n_rep.unwrap_or(crate::measures::DEFAULT_N_REP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub family: FamilyTag,
    pub name: Option<String>,
    pub preset: Option<String>,
    pub s: Option<f64>,
    pub split: Option<f64>,
    pub slopes: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<i64>>>,
    pub branch_intervals: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub numerics: Numerics,
}

pub const PRESETS: [&str; 4] = ["gc24", "doubling", "fibonacci", "eq-exponent-triple"];

pub fn preset(name: &str) -> Result<MapModel> {
    match name {
        "gc24" => Ok(MapModel::gc24()),
        "doubling" => Ok(MapModel::doubling()),
        "fibonacci" => Ok(MapModel::fibonacci()),
        "eq-exponent-triple" => Ok(MapModel::eq_exponent_triple()),
        _ => Err(Error::Schema(format!(
            "unknown preset {name:?}; known presets: {}",
            PRESETS.join(", ")
        ))),
    }
}

fn forbid(present: bool, key: &str, family: &str) -> Result<()> {
    if present {
        return Err(Error::Schema(format!("key {key:?} does not apply to family {family:?}")));
    }
    Ok(())
}

fn require<T: Clone>(v: &Option<T>, key: &str, family: &str) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Schema(format!("family {family:?} requires key {key:?}")))
}

/// Parses a matrix given as nested 0/1 arrays, e.g. `[[1, 1], [1, 0]]`.
pub fn parse_transition_matrix(text: &str) -> Result<TransitionMatrix> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Wrapper {
        matrix: Vec<Vec<i64>>,
    }
    let w: Wrapper = toml::from_str(&format!("matrix = {text}"))
        .map_err(|e| Error::Schema(format!("matrix: {}", e.message())))?;
    TransitionMatrix::from_integers(&w.matrix)
}

impl MapConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn preset(name: &str) -> Self {
        Self {
            family: FamilyTag::Preset,
            name: None,
            preset: Some(name.to_string()),
            s: None,
            split: None,
            slopes: None,
            matrix: None,
            branch_intervals: None,
            numerics: Numerics::default(),
        }
    }

    pub fn build(&self) -> Result<MapModel> {
        let linear_keys = self.slopes.is_some() || self.matrix.is_some() || self.branch_intervals.is_some();
        let model = match self.family {
            FamilyTag::Preset => {
                let f = "preset";
                forbid(self.s.is_some() || self.split.is_some() || linear_keys, "s/split/slopes/matrix/branch_intervals", f)?;
                preset(&require(&self.preset, "preset", f)?)?
            }
            FamilyTag::MannevillePomeau => {
                let f = "manneville-pomeau";
                forbid(self.preset.is_some(), "preset", f)?;
                forbid(self.split.is_some() || linear_keys, "split/slopes/matrix/branch_intervals", f)?;
                MapModel::manneville_pomeau(require(&self.s, "s", f)?)?
            }
            FamilyTag::ParabolicLinearBlend => {
                let f = "parabolic-linear-blend";
                forbid(self.preset.is_some() || linear_keys, "preset/slopes/matrix/branch_intervals", f)?;
                MapModel::parabolic_linear_blend(self.s.unwrap_or(1.0), self.split.unwrap_or(0.5))?
            }
            FamilyTag::LinearSft => {
                let f = "linear-sft";
                forbid(self.preset.is_some() || self.s.is_some() || self.split.is_some(), "preset/s/split", f)?;
                let slopes = require(&self.slopes, "slopes", f)?;
                let matrix = match &self.matrix {
                    Some(m) => TransitionMatrix::from_integers(m)?,
                    None => TransitionMatrix::full(slopes.len())?,
                };
                let intervals: Vec<(f64, f64)> = require(&self.branch_intervals, "branch_intervals", f)?
                    .iter()
                    .map(|i| (i[0], i[1]))
                    .collect();
                MapModel::linear_sft(&slopes, matrix, &intervals)?
            }
        };
        self.numerics.pressure_options()?;
        self.numerics.d0_tol()?;
        Ok(match &self.name {
            Some(n) => model.named(n),
            None => model,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    pub level: Option<usize>,
    pub symbols: Option<Vec<usize>>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthConfig {
    pub factor: Option<f64>,
    pub index_growth: Option<bool>,
    pub first: Option<usize>,
    pub budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub seed: Option<u64>,
    pub switch_times: Option<Vec<usize>>,
    /// Number of times the stage list is repeated.
    pub repeat: Option<usize>,
    pub growth: Option<GrowthConfig>,
    pub stage: Vec<StageConfig>,
}

impl ScheduleConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn stages(&self) -> Result<Vec<StageSpec>> {
        if self.stage.is_empty() {
            return Err(Error::Schema("schedule needs at least one [[stage]]".into()));
        }
        let mut one = Vec::new();
        for (k, s) in self.stage.iter().enumerate() {
            let target = match (s.q, s.alpha) {
                (Some(q), None) if q.is_finite() => StageTarget::Q(q),
                (None, Some(a)) if a.is_finite() && a > 0.0 => StageTarget::Alpha(a),
                _ => {
                    return Err(Error::Schema(format!(
                        "stage {} needs exactly one of a finite q or a positive alpha",
                        k + 1
                    )))
                }
            };
            one.push(StageSpec {
                level: s.level,
                symbols: s.symbols.clone(),
                target,
            });
        }
        let repeat = self.repeat.unwrap_or(1);
        if repeat == 0 || repeat.saturating_mul(one.len()) > 64 {
            return Err(Error::Schema("repeat must give between 1 and 64 stages".into()));
        }
        Ok(one.iter().cycle().take(repeat * one.len()).cloned().collect())
    }

    pub fn policy(&self) -> Result<GrowthPolicy> {
        let mut p = GrowthPolicy::default();
        if let Some(g) = &self.growth {
            if let Some(f) = g.factor {
                if !(f >= 1.0 && f.is_finite()) {
                    return Err(Error::Schema("growth.factor must be ≥ 1".into()));
                }
                p.factor = f;
            }
            if let Some(b) = g.index_growth {
                p.index_growth = b;
            }
            if let Some(v) = g.first {
                if v == 0 {
                    return Err(Error::Schema("growth.first must be positive".into()));
                }
                p.first = v;
            }
            if let Some(v) = g.budget {
                p.budget = v;
            }
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gc24_by_hand() {
        let c = MapConfig::from_toml_str(
            "family = \"linear-sft\"\nslopes = [2.0, 4.0]\nmatrix = [[1,1],[1,1]]\nbranch_intervals = [[0.0,0.5],[0.75,1.0]]\n",
        )
        .unwrap();
        let m = c.build().unwrap();
        assert_eq!(m.slopes().unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(MapConfig::from_toml_str("family = \"preset\"\npreset = \"gc24\"\nbogus = 1\n"), Err(Error::Schema(_))));
        let c = MapConfig::from_toml_str("family = \"manneville-pomeau\"\n").unwrap();
        assert!(matches!(c.build(), Err(Error::Schema(_))));
        let e = parse_transition_matrix("[[1,1],[0,0]]").unwrap_err();
        assert!(e.to_string().contains("mixing"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn schedule_repeat() {
        let s = ScheduleConfig::from_toml_str("repeat = 2\n[[stage]]\nq = 0.0\n[[stage]]\nalpha = 1.2\n").unwrap();
        assert_eq!(s.stages().unwrap().len(), 4);
        assert!(ScheduleConfig::from_toml_str("[[stage]]\nq = 0.0\nalpha = 1.0\n").unwrap().stages().is_err());
    }
}

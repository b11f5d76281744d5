//! `key=value` run configuration shared by files and command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::FiniteAbelianGroup;
use crate::linalg::{ExactMatrix, MatrixJson};
use crate::models::{disjoint_positions, standard_alternating, EntryDistribution, MatrixModel};
use crate::rng::SeedSpec;

/// Keys accepted in configuration files and as flags.
pub const KEYS: &[&str] = &[
    "model",
    "n",
    "m",
    "modulus",
    "dist",
    "perturbation",
    "c_file",
    "c_rank",
    "h",
    "k",
    "positions",
    "units",
    "seed",
    "stream",
    "trials",
    "group",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub modulus: Option<u64>,
    pub dist: Option<EntryDistribution>,
    pub perturbation: Option<EntryDistribution>,
    pub c_file: Option<PathBuf>,
    /// Rank of the standard block form used as `C` when no file is given.
    pub c_rank: Option<usize>,
    pub h: Option<u64>,
    pub k: Option<usize>,
    pub positions: Option<Vec<(usize, usize)>>,
    pub units: Option<Vec<i64>>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub trials: Option<u64>,
    pub group: Option<FiniteAbelianGroup>,
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse {value:?}")))
}

fn parse_positions(value: &str) -> Result<Vec<(usize, usize)>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (i, j) = pair
                .split_once('-')
                .ok_or_else(|| Error::Parse(format!("positions: expected i-j, got {pair:?}")))?;
            Ok((num("positions", i)?, num("positions", j)?))
        })
        .collect()
}

impl RunConfig {
    /// Parse `key=value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = Some(value.to_string()),
            "n" => self.n = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "modulus" => self.modulus = Some(num(key, value)?),
            "dist" => self.dist = Some(value.parse()?),
            "perturbation" => self.perturbation = Some(value.parse()?),
            "c_file" => self.c_file = Some(PathBuf::from(value)),
            "c_rank" => self.c_rank = Some(num(key, value)?),
            "h" => self.h = Some(num(key, value)?),
            "k" => self.k = Some(num(key, value)?),
            "positions" => self.positions = Some(parse_positions(value)?),
            "units" => {
                self.units = Some(
                    value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|u| num(key, u))
                        .collect::<Result<_>>()?,
                )
            }
            "seed" => self.seed = Some(num(key, value)?),
            "stream" => self.stream = Some(num(key, value)?),
            "trials" => self.trials = Some(num(key, value)?),
            "group" => self.group = Some(value.parse()?),
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Fields set in `other` replace the ones here.
    pub fn merge(&mut self, other: Self) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(model, n, m, modulus, dist, perturbation, c_file, c_rank, h, k, positions, units, seed, stream, trials, group);
    }

    pub fn seed_spec(&self) -> SeedSpec {
        SeedSpec::new(self.seed.unwrap_or(0), self.stream.unwrap_or(0))
    }

    fn require_n(&self) -> Result<usize> {
        self.n
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidModel("missing key n (a positive size)".into()))
    }

    /// The alternating `C` named by `c_file` or `c_rank`.
    pub fn form(&self) -> Result<ExactMatrix> {
        let a = self.modulus.unwrap_or(0);
        if let Some(path) = &self.c_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let json: MatrixJson =
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let mut c = ExactMatrix::from_json(&json)?;
            if self.modulus.is_some() && c.modulus() != a {
                c = c.reduce_mod(a)?;
            }
            return Ok(c);
        }
        let n = self.require_n()?;
        Ok(standard_alternating(n, self.c_rank.unwrap_or(0), a))
    }

    pub fn to_model(&self) -> Result<MatrixModel> {
        let kind = self
            .model
            .as_deref()
            .ok_or_else(|| Error::InvalidModel("missing key model".into()))?;
        let a = self.modulus.unwrap_or(0);
        let model = match kind {
            "iid" => {
                let n = self.require_n()?;
                MatrixModel::iid(n, self.m.unwrap_or(n), a)?
            }
            "symmetric" => MatrixModel::symmetric(self.require_n()?, a)?,
            "c_symmetric" => MatrixModel::c_symmetric(self.form()?)?,
            "symmetric_mod_h" => {
                let h = self
                    .h
                    .ok_or_else(|| Error::InvalidModel("symmetric_mod_h needs h".into()))?;
                let base = MatrixModel::symmetric_mod_h(self.require_n()?, h, a)?;
                match &self.perturbation {
                    Some(p) => base.with_perturbation(p.clone())?,
                    None => base,
                }
            }
            "corner_perturbed" => {
                let positions = match (&self.positions, self.k) {
                    (Some(p), _) => p.clone(),
                    (None, Some(k)) => disjoint_positions(k),
                    (None, None) => {
                        return Err(Error::InvalidModel("corner_perturbed needs positions or k".into()))
                    }
                };
                let units = self.units.clone().unwrap_or_else(|| vec![1; positions.len()]);
                MatrixModel::corner_perturbed(self.require_n()?, positions, units, a)?
            }
            "alternating_uniform" => MatrixModel::alternating_uniform(self.require_n()?, a)?,
            "random_corner" => {
                let k = self
                    .k
                    .ok_or_else(|| Error::InvalidModel("random_corner needs k".into()))?;
                MatrixModel::random_corner(self.require_n()?, k, a)?
            }
            other => return Err(Error::InvalidModel(format!("unknown model {other:?}"))),
        };
        match &self.dist {
            Some(d) => model.with_distribution(d.clone()),
            None => Ok(model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;

    #[test]
    fn parses_example_lines() {
        let cfg = RunConfig::parse(
            "model=c_symmetric\nn=6\nmodulus=4\ndist=two_point:0,1,0.5\nseed=12345\n# comment\nc_rank=4\n",
        )
        .unwrap();
        assert_eq!(cfg.n, Some(6));
        assert_eq!(cfg.seed, Some(12345));
        let model = cfg.to_model().unwrap();
        assert_eq!(model.modulus(), 4);
        match model.kind() {
            ModelKind::CSymmetric { c, .. } => assert_eq!(c, &standard_alternating(6, 4, 4)),
            k => panic!("unexpected {k:?}"),
        }
    }

    #[test]
    fn positions_and_units() {
        let cfg = RunConfig::parse("model=corner_perturbed\nn=5\nmodulus=3\npositions=0-1,2-3\nunits=1,2").unwrap();
        assert_eq!(cfg.positions, Some(vec![(0, 1), (2, 3)]));
        assert!(cfg.to_model().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("colour=blue").is_err());
        assert!(RunConfig::parse("n=forty").is_err());
        assert!(RunConfig::parse("just words").is_err());
        assert!(RunConfig::parse("model=iid").unwrap().to_model().is_err());
        assert!(RunConfig::parse("model=bogus\nn=3").unwrap().to_model().is_err());
    }

    #[test]
    fn merge_prefers_later_values() {
        let mut a = RunConfig::parse("n=3\nmodulus=2").unwrap();
        a.merge(RunConfig::parse("n=5").unwrap());
        assert_eq!((a.n, a.modulus), (Some(5), Some(2)));
    }

    #[test]
    fn every_key_is_accepted() {
        for key in KEYS {
            let value = match *key {
                "model" => "iid",
                "dist" | "perturbation" => "uniform_mod:2",
                "c_file" => "c.json",
                "positions" => "0-1",
                "units" => "1",
                "group" => "2,2",
                _ => "2",
            };
            let mut cfg = RunConfig::default();
            cfg.set(key, value).unwrap();
        }
    }
}

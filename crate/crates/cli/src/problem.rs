use std::collections::{BTreeMap, HashMap};

use anyhow::{Context as _, Result};
use fblab_core::homfun::parse_expr_with;
use fblab_core::{Budget, Space, SpaceDescriptor};
use serde::Deserialize;

use crate::tasks::{Context, Task};
use crate::Invalid;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Text(String),
    Table(SpaceDescriptor),
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Space> {
        Ok(match self {
            SpaceSpec::Text(s) => s.parse()?,
            SpaceSpec::Table(d) => d.build()?,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Members(Vec<String>),
    Directify { directify: Vec<String> },
}

/// A declarative batch of tasks over one space.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub seed: Option<u64>,
    pub space: Option<SpaceSpec>,
    pub optimizer: Option<Budget>,
    /// Named expressions, resolved in file order; later ones may use earlier names.
    #[serde(default)]
    pub expressions: toml::Table,
    #[serde(default)]
    pub families: BTreeMap<String, FamilySpec>,
    #[serde(default, rename = "task")]
    pub tasks: Vec<Task>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile> {
        toml::from_str(text).map_err(|e| Invalid(format!("problem file: {e}")).into())
    }

    /// Resolves names and builds the run context; `seed` overrides the file's seed.
    pub fn resolve(self, seed: Option<u64>, starts: Option<usize>) -> Result<(Context, Vec<Task>)> {
        let space = self
            .space
            .as_ref()
            .map(SpaceSpec::build)
            .transpose()
            .context("field `space`")?;
        let mut budget = self.optimizer.unwrap_or_default();
        if let Some(s) = self.seed {
            budget.seed = s;
        }
        if let Some(s) = seed {
            budget.seed = s;
        }
        if let Some(s) = starts {
            budget.starts = s;
        }
        budget.validate().context("field `optimizer`")?;

        let dim = space.as_ref().map(Space::dim);
        let mut exprs = HashMap::new();
        for (name, value) in &self.expressions {
            let src = value
                .as_str()
                .ok_or_else(|| Invalid(format!("expressions.{name}: expected a string")))?;
            let e = parse_expr_with(src, dim, &exprs)
                .with_context(|| format!("expressions.{name}"))?;
            exprs.insert(name.clone(), e);
        }
        let mut families = HashMap::new();
        let mut directified = HashMap::new();
        for (name, spec) in self.families {
            let (members, dir) = match spec {
                FamilySpec::Members(m) => (m, false),
                FamilySpec::Directify { directify } => (directify, true),
            };
            if members.is_empty() {
                return Err(Invalid(format!("families.{name}: empty family")).into());
            }
            if let Some(missing) = members.iter().find(|m| !exprs.contains_key(*m)) {
                return Err(Invalid(format!("families.{name}: unknown expression {missing:?}")).into());
            }
            families.insert(name.clone(), members);
            directified.insert(name, dir);
        }
        let ctx = Context {
            space,
            budget,
            exprs,
            families,
            directified,
        };
        Ok((ctx, self.tasks))
    }
}

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rug::Float;
use serde_json::Value;
use tentcert::geometry::{PointConfig, Subdivision, Triangulation};
use tentcert::numeric::parse_float;
use tentcert::refine::Candidate;

use crate::exit;

/// Heights together with the literals they were read from.
pub struct Heights {
    pub values: Vec<Float>,
    pub literals: Vec<String>,
}

/// Marks errors caused by malformed input so they map to exit code 2.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InvalidInput>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() {
        return exit::INVALID_INPUT;
    }
    match e.downcast_ref::<tentcert::Error>() {
        Some(tentcert::Error::TermBudget { .. }) => exit::TERM_BUDGET,
        Some(
            tentcert::Error::Json(_)
            | tentcert::Error::Parse(_)
            | tentcert::Error::InvalidConfig(_)
            | tentcert::Error::Degenerate(_)
            | tentcert::Error::InvalidSubdivision(_)
            | tentcert::Error::DimensionMismatch { .. },
        ) => exit::INVALID_INPUT,
        _ => exit::FAILURE,
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!(InvalidInput(format!("{}: {e}", path.display()))))
}

pub fn load_config(path: &Path) -> Result<PointConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    PointConfig::from_json_str(&text).map_err(|e| anyhow!(InvalidInput(format!("{}: {e}", path.display()))))
}

/// Reads a JSON array of heights, or an object with a `heights` array.
pub fn load_heights(path: &Path, n: usize, prec: u32) -> Result<Heights> {
    let v = read_json(path)?;
    let arr = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("heights")
            .and_then(Value::as_array)
            .ok_or_else(|| InvalidInput(format!("{}: no heights array", path.display())))?,
        _ => bail!(InvalidInput(format!("{}: expected heights", path.display()))),
    };
    if arr.len() != n {
        bail!(InvalidInput(format!("{} heights for {n} points", arr.len())));
    }
    let literals: Vec<String> = arr
        .iter()
        .map(|h| match h {
            Value::String(s) => Ok(s.clone()),
            Value::Number(num) => Ok(num.to_string()),
            other => Err(InvalidInput(format!("height {other} is not a number"))),
        })
        .collect::<std::result::Result<_, _>>()?;
    let values = literals
        .iter()
        .map(|s| parse_float(s, prec).map_err(|e| anyhow!(InvalidInput(e.to_string()))))
        .collect::<Result<_>>()?;
    Ok(Heights { values, literals })
}

fn index_lists(v: &Value) -> Result<Vec<Vec<usize>>> {
    serde_json::from_value(v.clone()).map_err(|e| anyhow!(InvalidInput(format!("bad index list: {e}"))))
}

/// Reads explicit candidates. Each entry has a `label` and one of
/// `cells` (convex cells by index), `regions` (cells as unions of
/// simplices) or `triangulation` (unreduced system on every height).
pub fn load_candidates(path: &Path, x: &PointConfig) -> Result<Vec<Candidate>> {
    let v = read_json(path)?;
    let entries = match v.get("candidates") {
        Some(Value::Array(a)) => a.clone(),
        _ => vec![v],
    };
    let mut out = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let label = e.get("label").and_then(Value::as_str).map_or_else(|| format!("candidate {i}"), str::to_owned);
        let invalid = |err: tentcert::Error| anyhow!(InvalidInput(format!("{label}: {err}")));
        let c = if let Some(cells) = e.get("cells") {
            let s = Subdivision::from_cells(x, &index_lists(cells)?).map_err(invalid)?;
            Candidate::reduced(x, label, &s)?
        } else if let Some(regions) = e.get("regions") {
            let regions: Vec<Vec<Vec<usize>>> = serde_json::from_value(regions.clone())
                .map_err(|err| anyhow!(InvalidInput(format!("{label}: bad regions: {err}"))))?;
            let s = Subdivision::from_pieces(x, &regions).map_err(invalid)?;
            Candidate::reduced(x, label, &s)?
        } else if let Some(t) = e.get("triangulation") {
            let t = Triangulation::new(x, &index_lists(t)?).map_err(invalid)?;
            Candidate::unreduced(x, label, t)
        } else {
            bail!(InvalidInput(format!("{label}: needs cells, regions or triangulation")));
        };
        out.push(c);
    }
    Ok(out)
}

pub fn write_output(path: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

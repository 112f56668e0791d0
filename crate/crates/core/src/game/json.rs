//! Native JSON game format:
//! `{"players": n, "actions": [..], "utilities": [...], "metadata": {...}}`
//! where `utilities[i][a_1]...[a_n]` is player `i`'s payoff.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Graph, NormalFormGame};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GameMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<Graph>,
}

#[derive(Serialize, Deserialize)]
struct GameDoc {
    players: usize,
    actions: Vec<usize>,
    utilities: Value,
    #[serde(default)]
    metadata: GameMetadata,
}

fn nest(values: &[f64], actions: &[usize]) -> Value {
    match actions.split_first() {
        None => Value::from(values[0]),
        Some((&k, rest)) => {
            let block = values.len() / k;
            Value::Array((0..k).map(|a| nest(&values[a * block..(a + 1) * block], rest)).collect())
        }
    }
}

fn flatten(value: &Value, actions: &[usize], out: &mut Vec<f64>, path: &mut Vec<usize>) -> Result<()> {
    match actions.split_first() {
        None => {
            let x = value.as_f64().ok_or_else(|| {
                Error::Shape(format!("utility at {path:?} is not a number"))
            })?;
            out.push(x);
            Ok(())
        }
        Some((&k, rest)) => {
            let arr = value
                .as_array()
                .filter(|a| a.len() == k)
                .ok_or_else(|| Error::Shape(format!("utilities at {path:?} must be an array of length {k}")))?;
            for (a, v) in arr.iter().enumerate() {
                path.push(a);
                flatten(v, rest, out, path)?;
                path.pop();
            }
            Ok(())
        }
    }
}

pub fn to_json(game: &NormalFormGame<f64>, metadata: &GameMetadata) -> Result<String> {
    let mut full = vec![game.num_players()];
    full.extend_from_slice(game.actions());
    let doc = GameDoc {
        players: game.num_players(),
        actions: game.actions().to_vec(),
        utilities: nest(game.raw_utilities(), &full),
        metadata: metadata.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(src: &str) -> Result<(NormalFormGame<f64>, GameMetadata)> {
    let doc: GameDoc = serde_json::from_str(src)?;
    if doc.players != doc.actions.len() {
        return Err(Error::Shape(format!(
            "players = {} but {} action counts given",
            doc.players,
            doc.actions.len()
        )));
    }
    let mut full = vec![doc.players];
    full.extend_from_slice(&doc.actions);
    let mut flat = Vec::new();
    flatten(&doc.utilities, &full, &mut flat, &mut Vec::new())?;
    let game = NormalFormGame::new(doc.actions, flat)?;
    Ok((game, doc.metadata))
}

//! Versioned line-oriented model files.
//!
//! Layout: a version header, one line naming the label inventory (either a
//! scheme plus its types or a bare label list), then one tab-separated line
//! per nonzero weight — `S key label weight` for state weights and
//! `T from to weight` for transitions. Weights carry 17 significant digits,
//! which round-trips f64 exactly. Lines are emitted in sorted order so the
//! files are diff-stable.

use std::io::{BufRead, Write};

use super::model::{CrfModel, LabelInventory, TransitionRules};
use super::CrfError;
use crate::corpus::{LabelScheme, SchemeKind};

const MAGIC: &str = "nerkit-crf 1";

/// Formats a float with 17 significant digits (lossless for f64).
pub(crate) fn format_weight(w: f64) -> String {
    format!("{w:.16e}")
}

pub fn save_model<W: Write>(writer: &mut W, model: &CrfModel) -> Result<(), CrfError> {
    writeln!(writer, "{MAGIC}")?;
    match model.inventory().scheme() {
        Some(scheme) => {
            write!(writer, "scheme\t{}", scheme.kind().as_str())?;
            for t in scheme.types() {
                write!(writer, "\t{t}")?;
            }
            writeln!(writer)?;
        }
        None => {
            write!(writer, "labels")?;
            for name in model.inventory().names() {
                write!(writer, "\t{name}")?;
            }
            writeln!(writer)?;
        }
    }
    for (key, row) in model.state_rows() {
        if key.contains('\t') || key.contains('\n') {
            return Err(CrfError::InvalidAttributeKey(key.clone()));
        }
        for (y, &w) in row.iter().enumerate() {
            if w != 0.0 {
                writeln!(
                    writer,
                    "S\t{key}\t{}\t{}",
                    model.inventory().name(y),
                    format_weight(w)
                )?;
            }
        }
    }
    let l = model.label_count();
    for i in 0..l {
        for j in 0..l {
            let w = model.transition_weight(i, j);
            if w != 0.0 {
                writeln!(
                    writer,
                    "T\t{}\t{}\t{}",
                    model.inventory().name(i),
                    model.inventory().name(j),
                    format_weight(w)
                )?;
            }
        }
    }
    Ok(())
}

pub fn load_model<R: BufRead>(reader: R) -> Result<CrfModel, CrfError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| CrfError::ModelFormat("empty model file".into()))??;
    if header != MAGIC {
        return Err(CrfError::VersionMismatch {
            expected: MAGIC.into(),
            found: header,
        });
    }
    let inventory_line = lines
        .next()
        .ok_or_else(|| CrfError::ModelFormat("missing label inventory line".into()))??;
    let fields: Vec<&str> = inventory_line.split('\t').collect();
    let (inventory, rules) = match fields[0] {
        "scheme" => {
            if fields.len() < 3 {
                return Err(CrfError::ModelFormat("scheme line needs kind and types".into()));
            }
            let kind = match fields[1] {
                "bilou" => SchemeKind::Bilou,
                "bio" => SchemeKind::Bio,
                other => {
                    return Err(CrfError::ModelFormat(format!("unknown scheme kind {other:?}")))
                }
            };
            let types = fields[2..].iter().map(|s| s.to_string()).collect();
            let scheme = LabelScheme::new(kind, types)
                .map_err(|e| CrfError::ModelFormat(e.to_string()))?;
            let rules = TransitionRules::for_scheme(&scheme);
            (LabelInventory::from_scheme(scheme), rules)
        }
        "labels" => {
            let names: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
            let n = names.len();
            (
                LabelInventory::custom(names)?,
                TransitionRules::permissive(n),
            )
        }
        other => {
            return Err(CrfError::ModelFormat(format!(
                "expected scheme or labels line, found {other:?}"
            )))
        }
    };
    let mut model = CrfModel::zeroed(inventory, rules);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| CrfError::ModelFormat(format!("line {}: {msg}", lineno + 3));
        match fields[0] {
            "S" => {
                if fields.len() != 4 {
                    return Err(bad("state line needs 4 fields"));
                }
                let label = model
                    .inventory()
                    .index_of(fields[2])
                    .ok_or_else(|| bad(&format!("unknown label {:?}", fields[2])))?;
                let w: f64 = fields[3].parse().map_err(|_| bad("bad weight"))?;
                model.set_state_weight(fields[1], label, w);
            }
            "T" => {
                if fields.len() != 4 {
                    return Err(bad("transition line needs 4 fields"));
                }
                let from = model
                    .inventory()
                    .index_of(fields[1])
                    .ok_or_else(|| bad(&format!("unknown label {:?}", fields[1])))?;
                let to = model
                    .inventory()
                    .index_of(fields[2])
                    .ok_or_else(|| bad(&format!("unknown label {:?}", fields[2])))?;
                let w: f64 = fields[3].parse().map_err(|_| bad("bad weight"))?;
                model.set_transition_weight(from, to, w);
            }
            other => return Err(bad(&format!("unknown record kind {other:?}"))),
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let scheme = LabelScheme::bilou(vec!["LOC".into(), "PER".into()]).unwrap();
        let mut model = CrfModel::for_scheme(scheme);
        model.set_state_weight("a:w[0]=Obama", 1, 1.0 / 3.0);
        model.set_state_weight("kb:linkp", 4, -2.718281828459045);
        model.set_transition_weight(0, 1, 1e-17);
        let mut bytes = Vec::new();
        save_model(&mut bytes, &model).unwrap();
        let loaded = load_model(&bytes[..]).unwrap();
        assert_eq!(loaded, model);
    }

    #[test]
    fn save_is_deterministic() {
        let scheme = LabelScheme::bilou(vec!["PER".into()]).unwrap();
        let mut model = CrfModel::for_scheme(scheme);
        model.set_state_weight("z", 0, 1.0);
        model.set_state_weight("a", 2, -1.0);
        let mut first = Vec::new();
        save_model(&mut first, &model).unwrap();
        let mut second = Vec::new();
        save_model(&mut second, &model).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        let a_pos = text.find("S\ta").unwrap();
        let z_pos = text.find("S\tz").unwrap();
        assert!(a_pos < z_pos, "state lines must be sorted by key");
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let err = load_model("nerkit-crf 99\nlabels\tA\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CrfError::VersionMismatch { .. }));
    }

    #[test]
    fn custom_inventory_round_trips() {
        let inv = LabelInventory::custom(vec!["A".into(), "B".into()]).unwrap();
        let mut model = CrfModel::zeroed(inv, TransitionRules::permissive(2));
        model.set_state_weight("f", 0, 0.1);
        let mut bytes = Vec::new();
        save_model(&mut bytes, &model).unwrap();
        let loaded = load_model(&bytes[..]).unwrap();
        assert_eq!(loaded.inventory().names(), model.inventory().names());
        assert_eq!(loaded.state_weight("f", 0), 0.1);
    }
}

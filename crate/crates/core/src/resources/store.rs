//! Resource directory persistence.
//!
//! Each table is one UTF-8 TSV with a one-line version header. Keys are
//! written in sorted order and probabilities with 17 significant digits, so
//! save → load is lossless and files are diff-stable across runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{
    AliasDictionary, AliasEntry, BilouPosition, Gazetteer, KnowledgeResources, LinkProbTable,
    NameStatistics, ResourceError, TypeProbTable,
};
use crate::crf::format_weight;

const NAME_STATS: &str = "name_stats.tsv";
const POS_SEQS: &str = "pos_seqs.tsv";
const LINK_PROB: &str = "link_prob.tsv";
const TYPE_PROB: &str = "type_prob.tsv";
const TYPE_POS_PROB: &str = "type_pos_prob.tsv";
const ALIASES: &str = "aliases.tsv";

fn header(table: &str) -> String {
    format!("nerkit-tsv {table} 1")
}

fn open_table(dir: &Path, file: &str) -> Result<impl BufRead, ResourceError> {
    let path = dir.join(file);
    let handle = File::open(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ResourceError::MissingTable(file.to_string())
        } else {
            ResourceError::Io(e)
        }
    })?;
    Ok(BufReader::new(handle))
}

/// Reads lines after validating the version header; blank lines skipped.
fn read_rows(dir: &Path, file: &str, table: &str) -> Result<Vec<String>, ResourceError> {
    let reader = open_table(dir, file)?;
    let mut lines = reader.lines();
    let first = lines
        .next()
        .transpose()?
        .unwrap_or_default();
    if first != header(table) {
        return Err(ResourceError::VersionMismatch {
            file: file.to_string(),
            found: first,
        });
    }
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if !line.is_empty() {
            rows.push(line);
        }
    }
    Ok(rows)
}

fn split_fields<'a>(
    row: &'a str,
    n: usize,
    file: &str,
    line: usize,
) -> Result<Vec<&'a str>, ResourceError> {
    let fields: Vec<&str> = row.split('\t').collect();
    if fields.len() != n {
        return Err(ResourceError::Parse {
            file: file.to_string(),
            line,
            message: format!("expected {n} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

fn parse_prob(s: &str, file: &str, line: usize) -> Result<f64, ResourceError> {
    s.parse().map_err(|_| ResourceError::Parse {
        file: file.to_string(),
        line,
        message: format!("bad probability {s:?}"),
    })
}

/// Writes all tables into `dir`, creating it if needed. Existing gazetteer
/// files are removed first so the directory mirrors the given resources
/// exactly.
pub fn save_resources(resources: &KnowledgeResources, dir: &Path) -> Result<(), ResourceError> {
    fs::create_dir_all(dir)?;
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("gaz_") && name.ends_with(".tsv") {
            fs::remove_file(entry.path())?;
        }
    }

    let mut w = BufWriter::new(File::create(dir.join(NAME_STATS))?);
    writeln!(w, "{}", header("name_stats"))?;
    for (token, weight) in &resources.name_stats.token_weight {
        writeln!(w, "{token}\t{}", format_weight(*weight))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join(POS_SEQS))?);
    writeln!(w, "{}", header("pos_seqs"))?;
    for seq in &resources.name_stats.top_pos_sequences {
        writeln!(w, "{}", seq.join(" "))?;
    }
    w.flush()?;

    for gazetteer in &resources.gazetteers {
        let file = format!("gaz_{}.tsv", gazetteer.name());
        let mut w = BufWriter::new(File::create(dir.join(file))?);
        writeln!(w, "{}", header("gazetteer"))?;
        for entry in gazetteer.entries() {
            writeln!(w, "{}", entry.join(" "))?;
        }
        w.flush()?;
    }

    let mut w = BufWriter::new(File::create(dir.join(LINK_PROB))?);
    writeln!(w, "{}", header("link_prob"))?;
    for (token, p) in &resources.link_prob.probs {
        writeln!(w, "{token}\t{}", format_weight(*p))?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join(TYPE_PROB))?);
    writeln!(w, "{}", header("type_prob"))?;
    for (token, row) in &resources.type_prob.unconditioned {
        for (ty, p) in row {
            writeln!(w, "{token}\t{ty}\t{}", format_weight(*p))?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join(TYPE_POS_PROB))?);
    writeln!(w, "{}", header("type_pos_prob"))?;
    for (token, row) in &resources.type_prob.positioned {
        for ((pos, ty), p) in row {
            writeln!(w, "{token}\t{}\t{ty}\t{}", pos.as_str(), format_weight(*p))?;
        }
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(dir.join(ALIASES))?);
    writeln!(w, "{}", header("aliases"))?;
    for (id, entry) in &resources.aliases.entries {
        for surface in &entry.surfaces {
            writeln!(w, "{id}\t{}\t{surface}", entry.entity_type)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a directory written by [`save_resources`]. A missing table file is
/// an error naming that file; gazetteers (`gaz_*.tsv`) are discovered and
/// loaded in filename order.
pub fn load_resources(dir: &Path) -> Result<KnowledgeResources, ResourceError> {
    let mut token_weight = BTreeMap::new();
    for (i, row) in read_rows(dir, NAME_STATS, "name_stats")?.iter().enumerate() {
        let f = split_fields(row, 2, NAME_STATS, i + 2)?;
        token_weight.insert(f[0].to_string(), parse_prob(f[1], NAME_STATS, i + 2)?);
    }
    let top_pos_sequences = read_rows(dir, POS_SEQS, "pos_seqs")?
        .iter()
        .map(|row| row.split(' ').map(String::from).collect())
        .collect();
    let name_stats = NameStatistics {
        token_weight,
        top_pos_sequences,
    };

    let mut gaz_files: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            (name.starts_with("gaz_") && name.ends_with(".tsv")).then_some(name)
        })
        .collect();
    gaz_files.sort();
    let mut gazetteers = Vec::with_capacity(gaz_files.len());
    for file in gaz_files {
        let name = file["gaz_".len()..file.len() - ".tsv".len()].to_string();
        let entries: BTreeSet<Vec<String>> = read_rows(dir, &file, "gazetteer")?
            .iter()
            .map(|row| row.split(' ').map(String::from).collect())
            .collect();
        gazetteers.push(Gazetteer::new(name, entries)?);
    }

    let mut probs = BTreeMap::new();
    for (i, row) in read_rows(dir, LINK_PROB, "link_prob")?.iter().enumerate() {
        let f = split_fields(row, 2, LINK_PROB, i + 2)?;
        probs.insert(f[0].to_string(), parse_prob(f[1], LINK_PROB, i + 2)?);
    }
    let link_prob = LinkProbTable { probs };

    let mut unconditioned: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, row) in read_rows(dir, TYPE_PROB, "type_prob")?.iter().enumerate() {
        let f = split_fields(row, 3, TYPE_PROB, i + 2)?;
        unconditioned
            .entry(f[0].to_string())
            .or_default()
            .insert(f[1].to_string(), parse_prob(f[2], TYPE_PROB, i + 2)?);
    }
    let mut positioned: BTreeMap<String, BTreeMap<(BilouPosition, String), f64>> = BTreeMap::new();
    for (i, row) in read_rows(dir, TYPE_POS_PROB, "type_pos_prob")?.iter().enumerate() {
        let f = split_fields(row, 4, TYPE_POS_PROB, i + 2)?;
        let pos = BilouPosition::parse(f[1]).ok_or_else(|| ResourceError::Parse {
            file: TYPE_POS_PROB.to_string(),
            line: i + 2,
            message: format!("bad position {:?}", f[1]),
        })?;
        positioned
            .entry(f[0].to_string())
            .or_default()
            .insert(
                (pos, f[2].to_string()),
                parse_prob(f[3], TYPE_POS_PROB, i + 2)?,
            );
    }
    let type_prob = TypeProbTable {
        unconditioned,
        positioned,
    };

    let mut entries: BTreeMap<String, AliasEntry> = BTreeMap::new();
    for (i, row) in read_rows(dir, ALIASES, "aliases")?.iter().enumerate() {
        let f = split_fields(row, 3, ALIASES, i + 2)?;
        let entry = entries.entry(f[0].to_string()).or_insert_with(|| AliasEntry {
            entity_type: f[1].to_string(),
            surfaces: BTreeSet::new(),
        });
        if entry.entity_type != f[1] {
            return Err(ResourceError::DuplicateEntityType(f[0].to_string()));
        }
        entry.surfaces.insert(f[2].to_string());
    }
    let aliases = AliasDictionary::build(entries);

    Ok(KnowledgeResources {
        name_stats,
        gazetteers,
        link_prob,
        type_prob,
        aliases,
    })
}

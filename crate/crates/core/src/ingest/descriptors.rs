//! Per-compound raw descriptor vectors.
//!
//! Keyed-text layout: one `names` entry listing the descriptor names, then
//! one entry per compound with its full raw vector. All vectors must share
//! the `names` length (`D_raw`), and every value must be finite.
//!
//! ```text
//! names = mass radius charge ...
//! LiF = 25.94 0.9 1.0 ...
//! NaF = 41.99 1.16 1.0 ...
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::digest::Hasher;
use crate::error::{Error, Result};
use crate::kvtext::{self, KvDoc};

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTable {
    names: Vec<String>,
    compounds: BTreeMap<String, Vec<f64>>,
}

impl DescriptorTable {
    pub fn new(names: Vec<String>, compounds: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::invalid("descriptor table", "empty names list"));
        }
        for (id, values) in &compounds {
            if values.len() != names.len() {
                return Err(Error::Shape(format!(
                    "compound {id} has {} descriptors, table width is {}",
                    values.len(),
                    names.len()
                )));
            }
            for (i, v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Data(format!("compound {id} descriptor {i} is not finite")));
                }
            }
        }
        Ok(DescriptorTable { names, compounds })
    }

    pub fn d_raw(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn compounds(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.compounds
    }

    pub fn n_compounds(&self) -> usize {
        self.compounds.len()
    }

    pub fn get(&self, compound_id: &str) -> Result<&[f64]> {
        self.compounds
            .get(compound_id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownCompound(compound_id.to_string()))
    }

    /// Content digest (names + sorted compound vectors), independent of the
    /// order compounds appeared in the source file.
    pub fn digest(&self) -> String {
        let mut h = Hasher::new();
        h.u64(self.names.len() as u64);
        for name in &self.names {
            h.str(name);
        }
        for (id, values) in &self.compounds {
            h.str(id);
            h.f64s(values);
        }
        h.finish()
    }
}

pub fn parse_descriptors(path: &Path) -> Result<DescriptorTable> {
    let doc = KvDoc::read(path)?;
    let names_raw = doc
        .get("names")
        .ok_or_else(|| Error::parse(path, 0, "missing `names` entry"))?;
    let names: Vec<String> = names_raw
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();

    let mut compounds = BTreeMap::new();
    for (key, value) in doc.entries() {
        if key == "names" {
            continue;
        }
        let values = kvtext::parse_f64s(value).map_err(|e| Error::Data(format!("compound {key}: {e}")))?;
        compounds.insert(key.clone(), values);
    }
    DescriptorTable::new(names, compounds)
}

pub fn write_descriptors(table: &DescriptorTable, path: &Path) -> Result<()> {
    let mut doc = KvDoc::new();
    doc.push("names", table.names().join(" "));
    for (id, values) in table.compounds() {
        doc.push_f64s(id.clone(), values);
    }
    doc.write(path)
}

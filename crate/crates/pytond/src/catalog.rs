//! Contextual information about the stored data: schemas, constraints,
//! cardinalities and tensor layouts. Loaded from a JSON config file or,
//! through the engine crate, from a live database catalog.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Int64,
    Float64,
    Bool,
    String,
    Date,
}

impl ScalarType {
    pub fn is_numeric(&self) -> bool {
        matches!(self, ScalarType::Int64 | ScalarType::Float64)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarType::Int64 => "int64",
            ScalarType::Float64 => "float64",
            ScalarType::Bool => "bool",
            ScalarType::String => "string",
            ScalarType::Date => "date",
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub table: String,
    pub ref_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<Column>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary_key: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unique: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub foreign_keys: Vec<ForeignKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<u64>,
}

impl TableSchema {
    pub fn new(name: impl Into<String>, columns: Vec<(&str, ScalarType)>) -> Self {
        TableSchema {
            name: name.into(),
            columns: columns
                .into_iter()
                .map(|(name, ty)| Column {
                    name: name.to_string(),
                    ty,
                })
                .collect(),
            primary_key: None,
            unique: Vec::new(),
            foreign_keys: Vec::new(),
            cardinality: None,
        }
    }

    pub fn with_primary_key(mut self, cols: &[&str]) -> Self {
        self.primary_key = Some(cols.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn with_cardinality(mut self, n: u64) -> Self {
        self.cardinality = Some(n);
        self
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_type(&self, name: &str) -> Option<ScalarType> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.ty)
    }

    /// Column-name sets known to be unique: the primary key plus any
    /// declared unique constraints.
    pub fn unique_sets(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        if let Some(pk) = &self.primary_key {
            out.push(pk.clone());
        }
        for u in &self.unique {
            if !out.contains(u) {
                out.push(u.clone());
            }
        }
        out
    }
}

/// How a table stores a tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayoutSpec {
    /// One row per tensor row: an id column plus one column per value.
    Dense {
        id_column: String,
        value_columns: Vec<String>,
    },
    /// (row_ID, col_ID, val) triples with 0-based ids.
    Coo {
        row: String,
        col: String,
        val: String,
        shape: (u64, u64),
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Catalog {
    pub tables: BTreeMap<String, TableSchema>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub layouts: BTreeMap<String, LayoutSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid catalog config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Serialized form of the config file: a table list rather than a map so
/// duplicates can be reported instead of silently merged.
#[derive(Debug, Serialize, Deserialize)]
struct ConfigFile {
    tables: Vec<TableSchema>,
    #[serde(default)]
    layouts: BTreeMap<String, LayoutSpec>,
}

impl Catalog {
    pub fn new(tables: Vec<TableSchema>) -> Self {
        let mut cat = Catalog::default();
        for t in tables {
            cat.tables.insert(t.name.clone(), t);
        }
        cat
    }

    pub fn with_layout(mut self, table: &str, layout: LayoutSpec) -> Self {
        self.layouts.insert(table.to_string(), layout);
        self
    }

    pub fn table(&self, name: &str) -> Option<&TableSchema> {
        self.tables.get(name)
    }

    pub fn base_names(&self) -> std::collections::HashSet<String> {
        self.tables.keys().cloned().collect()
    }

    pub fn load_from_config(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Catalog::from_config_str(&text)
    }

    pub fn from_config_str(text: &str) -> Result<Catalog, CatalogError> {
        let file: ConfigFile = serde_json::from_str(text)?;
        let mut cat = Catalog::default();
        for t in file.tables {
            if cat.tables.contains_key(&t.name) {
                return Err(CatalogError::Invalid(format!(
                    "tables[{}]: duplicate table",
                    t.name
                )));
            }
            cat.tables.insert(t.name.clone(), t);
        }
        cat.layouts = file.layouts;
        cat.check()?;
        Ok(cat)
    }

    pub fn to_config_string(&self) -> String {
        let file = ConfigFile {
            tables: self.tables.values().cloned().collect(),
            layouts: self.layouts.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }

    /// Validates referential integrity of the declared constraints.
    pub fn check(&self) -> Result<(), CatalogError> {
        let invalid = |msg: String| Err(CatalogError::Invalid(msg));
        for (name, t) in &self.tables {
            let path = |rest: &str| format!("tables[{name}].{rest}");
            let mut seen = std::collections::HashSet::new();
            for c in &t.columns {
                if !seen.insert(&c.name) {
                    return invalid(path(&format!("columns: duplicate column {}", c.name)));
                }
            }
            let check_cols = |cols: &[String], what: &str| -> Result<(), CatalogError> {
                for c in cols {
                    if t.column_index(c).is_none() {
                        return Err(CatalogError::Invalid(
                            path(&format!("{what}: unknown column {c}")).to_string(),
                        ));
                    }
                }
                Ok(())
            };
            if let Some(pk) = &t.primary_key {
                check_cols(pk, "primary_key")?;
            }
            for (i, u) in t.unique.iter().enumerate() {
                check_cols(u, &format!("unique[{i}]"))?;
            }
            for (i, fk) in t.foreign_keys.iter().enumerate() {
                check_cols(&fk.columns, &format!("foreign_keys[{i}]"))?;
                let Some(target) = self.tables.get(&fk.table) else {
                    return invalid(path(&format!(
                        "foreign_keys[{i}]: unknown table {}",
                        fk.table
                    )));
                };
                for c in &fk.ref_columns {
                    if target.column_index(c).is_none() {
                        return invalid(path(&format!(
                            "foreign_keys[{i}]: unknown column {c} in {}",
                            fk.table
                        )));
                    }
                }
            }
        }
        for (name, layout) in &self.layouts {
            let Some(t) = self.tables.get(name) else {
                return invalid(format!("layouts[{name}]: unknown table"));
            };
            match layout {
                LayoutSpec::Dense {
                    id_column,
                    value_columns,
                } => {
                    for c in std::iter::once(id_column).chain(value_columns) {
                        if t.column_index(c).is_none() {
                            return invalid(format!("layouts[{name}]: unknown column {c}"));
                        }
                    }
                }
                LayoutSpec::Coo { row, col, val, .. } => {
                    for c in [row, col, val] {
                        if t.column_index(c).is_none() {
                            return invalid(format!("layouts[{name}]: unknown column {c}"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_minimal_config() {
        let cfg = r#"{
            "tables": [
                {
                    "name": "lineitem",
                    "columns": [
                        {"name": "orderkey", "type": "int64"},
                        {"name": "linenumber", "type": "int64"},
                        {"name": "quantity", "type": "float64"}
                    ],
                    "primary_key": ["orderkey", "linenumber"],
                    "cardinality": 6005
                }
            ]
        }"#;
        let cat = Catalog::from_config_str(cfg).unwrap();
        assert_eq!(cat.tables.len(), 1);
        let t = cat.table("lineitem").unwrap();
        assert_eq!(t.unique_sets(), vec![vec!["orderkey", "linenumber"]]);
        assert_eq!(t.cardinality, Some(6005));
    }

    #[test]
    fn rejects_pk_on_missing_column() {
        let cfg = r#"{
            "tables": [
                {
                    "name": "t",
                    "columns": [{"name": "a", "type": "int64"}],
                    "primary_key": ["nope"]
                }
            ]
        }"#;
        let err = Catalog::from_config_str(cfg).unwrap_err();
        assert!(err.to_string().contains("unknown column nope"), "{err}");
    }

    #[test]
    fn rejects_duplicate_table() {
        let cfg = r#"{
            "tables": [
                {"name": "t", "columns": [{"name": "a", "type": "int64"}]},
                {"name": "t", "columns": [{"name": "b", "type": "int64"}]}
            ]
        }"#;
        let err = Catalog::from_config_str(cfg).unwrap_err();
        assert!(err.to_string().contains("duplicate table"), "{err}");
    }

    #[test]
    fn config_roundtrips() {
        let cat = Catalog::new(vec![TableSchema::new(
            "x",
            vec![("id", ScalarType::Int64), ("v", ScalarType::Float64)],
        )
        .with_primary_key(&["id"])])
        .with_layout(
            "x",
            LayoutSpec::Dense {
                id_column: "id".into(),
                value_columns: vec!["v".into()],
            },
        );
        let text = cat.to_config_string();
        let back = Catalog::from_config_str(&text).unwrap();
        assert_eq!(back, cat);
    }
}

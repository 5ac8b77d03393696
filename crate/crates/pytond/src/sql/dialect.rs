//! Backend dialects. Differences are kept as data (external-function
//! templates plus a few literal/clause styles) so adding a dialect does
//! not touch the lowering logic.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DialectId {
    /// DuckDB, the embedded analytical engine.
    Duck,
    /// Generic ANSI SQL text.
    Ansi,
}

impl DialectId {
    pub fn name(&self) -> &'static str {
        match self {
            DialectId::Duck => "duck",
            DialectId::Ansi => "ansi",
        }
    }

    pub fn parse(s: &str) -> Option<DialectId> {
        match s {
            "duck" | "duckdb" => Some(DialectId::Duck),
            "ansi" => Some(DialectId::Ansi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitStyle {
    /// `LIMIT n`
    Limit,
    /// `FETCH FIRST n ROWS ONLY`
    FetchFirst,
}

#[derive(Debug, Clone)]
pub struct Dialect {
    pub id: DialectId,
    /// Ext-call templates with `{0}`, `{1}`, ... argument slots.
    ext_templates: BTreeMap<&'static str, &'static str>,
    pub limit_style: LimitStyle,
    /// TRUE/FALSE keywords, or 1/0 for engines without boolean literals.
    pub keyword_bools: bool,
}

impl Dialect {
    pub fn duck() -> Dialect {
        Dialect {
            id: DialectId::Duck,
            ext_templates: BTreeMap::from([
                ("round", "round({0})"),
                ("abs", "abs({0})"),
                ("upper", "upper({0})"),
                ("lower", "lower({0})"),
                ("strlen", "length({0})"),
                ("substr", "substr({0}, {1}, {2})"),
            ]),
            limit_style: LimitStyle::Limit,
            keyword_bools: true,
        }
    }

    pub fn ansi() -> Dialect {
        Dialect {
            id: DialectId::Ansi,
            ext_templates: BTreeMap::from([
                ("round", "ROUND({0})"),
                ("abs", "ABS({0})"),
                ("upper", "UPPER({0})"),
                ("lower", "LOWER({0})"),
                ("strlen", "CHARACTER_LENGTH({0})"),
                ("substr", "SUBSTRING({0} FROM {1} FOR {2})"),
            ]),
            limit_style: LimitStyle::FetchFirst,
            keyword_bools: true,
        }
    }

    pub fn get(id: DialectId) -> Dialect {
        match id {
            DialectId::Duck => Dialect::duck(),
            DialectId::Ansi => Dialect::ansi(),
        }
    }

    pub fn ext_call(&self, name: &str, args: &[String]) -> Option<String> {
        let template = self.ext_templates.get(name)?;
        let mut out = template.to_string();
        for (i, arg) in args.iter().enumerate() {
            out = out.replace(&format!("{{{i}}}"), arg);
        }
        Some(out)
    }

    pub fn bool_literal(&self, v: bool) -> String {
        if self.keyword_bools {
            if v { "TRUE" } else { "FALSE" }.to_string()
        } else {
            if v { "1" } else { "0" }.to_string()
        }
    }

    pub fn limit_clause(&self, n: u64) -> String {
        match self.limit_style {
            LimitStyle::Limit => format!("LIMIT {n}"),
            LimitStyle::FetchFirst => format!("FETCH FIRST {n} ROWS ONLY"),
        }
    }

    pub fn string_literal(&self, s: &str) -> String {
        format!("'{}'", s.replace('\'', "''"))
    }
}

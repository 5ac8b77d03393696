//! Frontend value descriptors and the public type environment.

use crate::catalog::ScalarType;
use crate::tondir::ast::Constant;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Dense,
    Sparse,
}

/// Arguments of the compiler's decorator.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoratorArgs {
    pub layout: Layout,
    /// column name -> distinct values, for pivot translation.
    pub distinct_values: BTreeMap<String, Vec<Constant>>,
    /// relation -> unique column set hints.
    pub unique: Vec<(String, Vec<String>)>,
}

impl Default for DecoratorArgs {
    fn default() -> Self {
        DecoratorArgs {
            layout: Layout::Dense,
            distinct_values: BTreeMap::new(),
            unique: Vec::new(),
        }
    }
}

/// Inferred type of one source variable.
#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Frame {
        schema: Vec<(String, ScalarType)>,
    },
    Tensor {
        order: u8,
        cols: usize,
        layout: Layout,
    },
    Scalar(ScalarType),
    /// Boolean row mask over a dataframe.
    Mask,
    /// Unmaterialized column expression over a dataframe.
    Series(ScalarType),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeEnv {
    pub vars: BTreeMap<String, VarType>,
}

impl TypeEnv {
    pub fn get(&self, var: &str) -> Option<&VarType> {
        self.vars.get(var)
    }

    pub fn frame_schema(&self, var: &str) -> Option<Vec<(String, ScalarType)>> {
        match self.vars.get(var)? {
            VarType::Frame { schema } => Some(schema.clone()),
            _ => None,
        }
    }
}

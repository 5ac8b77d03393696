//! Sort/limit placement. CTEs do not preserve ordering, so a sort on a
//! non-final rule is only meaningful next to a limit. Separately defined
//! sort and limit pairs are merged into one head; a dangling non-final
//! sort is pushed to the sink when that is safe, otherwise rejected.

use crate::tondir::analysis::dependency_graph;
use crate::tondir::ast::*;

#[derive(Debug, thiserror::Error)]
pub enum CoalesceError {
    #[error("rule {rule}: sort on a non-final rule would be lost through the CTE and cannot be coalesced with a limit or pushed to the sink")]
    OrderingLost { rule: usize },
}

pub fn coalesce_sort_limit(p: &Program) -> Result<Program, CoalesceError> {
    let mut prog = p.clone();
    loop {
        let graph = dependency_graph(&prog, None).expect("graph");
        let sink = prog.rules.len().saturating_sub(1);
        let Some(idx) = prog.rules.iter().enumerate().position(|(i, r)| {
            i != sink && r.head.sort.is_some() && r.head.limit.is_none()
        }) else {
            return Ok(prog);
        };
        let consumers = graph.consumers[idx].clone();
        // The sort can move only through a sole consumer that reads the
        // whole relation through a single plain access.
        let [consumer_idx] = consumers.as_slice() else {
            return Err(CoalesceError::OrderingLost { rule: idx });
        };
        let producer_name = prog.rules[idx].name().to_string();
        let sort = prog.rules[idx].head.sort.clone().unwrap();
        let producer_head = prog.rules[idx].head.rel.vars.clone();
        let consumer = &prog.rules[*consumer_idx];
        let access = sole_plain_access(consumer, &producer_name);
        let consumer_has_sort = consumer.head.sort.is_some();
        let consumer_takes = consumer.head.limit.is_some() || *consumer_idx == sink;
        match access {
            Some(vars) if !consumer_has_sort && consumer_takes => {
                // Map sort variables through the positional access.
                let mapped: Option<Vec<String>> = sort
                    .vars
                    .iter()
                    .map(|v| {
                        producer_head
                            .iter()
                            .position(|h| h == v)
                            .and_then(|k| vars.get(k).cloned())
                    })
                    .collect();
                let Some(mapped_vars) = mapped else {
                    return Err(CoalesceError::OrderingLost { rule: idx });
                };
                prog.rules[idx].head.sort = None;
                prog.rules[*consumer_idx].head.sort = Some(SortSpec {
                    vars: mapped_vars,
                    ascending: sort.ascending.clone(),
                });
            }
            _ => return Err(CoalesceError::OrderingLost { rule: idx }),
        }
    }
}

fn sole_plain_access(rule: &Rule, name: &str) -> Option<Vec<String>> {
    let mut found: Option<Vec<String>> = None;
    for atom in &rule.body {
        if let Atom::Rel(rel) = atom {
            if rel.name == name {
                if found.is_some() {
                    return None;
                }
                found = Some(rel.vars.clone());
            }
        }
    }
    found
}

//! Flow-breaker classification for rule inlining. The kinds are checked
//! in a fixed order and the first match wins.

use crate::tondir::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowBreakerKind {
    Aggregate,
    GroupBy,
    Distinct,
    SortLimit,
    OuterJoin,
    SinkRule,
    /// Not a breaker: the rule is fusible.
    None,
}

pub fn classify_flow_breaker(rule: &Rule, consumers: &[usize]) -> FlowBreakerKind {
    fn body_has_agg(atoms: &[Atom]) -> bool {
        atoms.iter().any(|a| match a {
            Atom::Compare(c) => c.rhs.contains_agg(),
            Atom::Exists(inner) => body_has_agg(inner),
            _ => false,
        })
    }
    if body_has_agg(&rule.body) {
        return FlowBreakerKind::Aggregate;
    }
    if rule.head.group.is_some() {
        return FlowBreakerKind::GroupBy;
    }
    if rule
        .body
        .iter()
        .any(|a| matches!(a, Atom::ExtAtom(e) if e.name == "unique"))
    {
        return FlowBreakerKind::Distinct;
    }
    if rule.head.sort.is_some() || rule.head.limit.is_some() {
        return FlowBreakerKind::SortLimit;
    }
    if rule
        .body
        .iter()
        .any(|a| matches!(a, Atom::ExtAtom(e) if e.is_outer()))
    {
        return FlowBreakerKind::OuterJoin;
    }
    if consumers.is_empty() {
        return FlowBreakerKind::SinkRule;
    }
    FlowBreakerKind::None
}

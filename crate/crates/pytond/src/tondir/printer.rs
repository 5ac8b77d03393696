//! Textual rendering of TondIR. The printed form re-parses to a
//! structurally equal program; internal version suffixes (`name$k`) are
//! stripped so redefined relations keep their surface names.

use super::ast::*;
use std::fmt::Write;

/// Strips the internal `$k` version suffix from a relation name.
pub fn surface_name(name: &str) -> &str {
    match name.find('$') {
        Some(i) => &name[..i],
        None => name,
    }
}

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for rule in &p.rules {
        print_rule(&mut out, rule);
        out.push('\n');
    }
    out
}

fn print_rule(out: &mut String, rule: &Rule) {
    print_access(out, &rule.head.rel);
    if let Some(group) = &rule.head.group {
        write!(out, " group({})", group.join(", ")).unwrap();
    }
    if let Some(sort) = &rule.head.sort {
        let flags: Vec<&str> = sort
            .ascending
            .iter()
            .map(|a| if *a { "True" } else { "False" })
            .collect();
        write!(out, " sort([{}], [{}])", sort.vars.join(", "), flags.join(", ")).unwrap();
    }
    if let Some(n) = rule.head.limit {
        write!(out, " limit({n})").unwrap();
    }
    out.push_str(" :- ");
    for (i, atom) in rule.body.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_atom(out, atom);
    }
    out.push('.');
}

fn print_access(out: &mut String, rel: &RelationAccess) {
    write!(out, "{}({})", surface_name(&rel.name), rel.vars.join(", ")).unwrap();
}

fn print_atom(out: &mut String, atom: &Atom) {
    match atom {
        Atom::Rel(rel) => print_access(out, rel),
        Atom::Const(c) => {
            out.push('(');
            if c.vars.len() == 1 {
                write!(out, "{}=[", c.vars[0]).unwrap();
                for (i, row) in c.rows.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write!(out, "{}", row[0]).unwrap();
                }
            } else {
                write!(out, "({})=[", c.vars.join(", ")).unwrap();
                for (i, row) in c.rows.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    write!(out, "({})", cells.join(", ")).unwrap();
                }
            }
            out.push_str("])");
        }
        Atom::Exists(body) => {
            out.push_str("exists(");
            for (i, inner) in body.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_atom(out, inner);
            }
            out.push(')');
        }
        Atom::Compare(c) => {
            write!(out, "({}{}", c.lhs, c.op).unwrap();
            print_term(out, &c.rhs, 0);
            out.push(')');
        }
        Atom::ExtAtom(e) => {
            write!(out, "{}({})", e.name, e.args.join(", ")).unwrap();
        }
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Or => 1,
        BinOp::And => 2,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
        BinOp::Like | BinOp::Concat => 4,
        BinOp::Add | BinOp::Sub => 5,
        BinOp::Mul | BinOp::Div => 6,
    }
}

fn print_term(out: &mut String, term: &Term, parent_prec: u8) {
    match term {
        Term::Var(v) => out.push_str(v),
        Term::Const(c) => {
            write!(out, "{c}").unwrap();
        }
        Term::Agg(f, arg) => {
            write!(out, "{}(", f.as_str()).unwrap();
            print_term(out, arg, 0);
            out.push(')');
        }
        Term::Ext(name, args) => {
            write!(out, "{name}(").unwrap();
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_term(out, arg, 0);
            }
            out.push(')');
        }
        Term::If(c, t, e) => {
            out.push_str("if(");
            print_term(out, c, 0);
            out.push_str(", ");
            print_term(out, t, 0);
            out.push_str(", ");
            print_term(out, e, 0);
            out.push(')');
        }
        Term::BinOp(op, l, r) => {
            let prec = binop_prec(*op);
            let parens = prec < parent_prec || matches!(op, BinOp::Eq) && parent_prec == 0;
            // `=` at the top level of an rhs would be ambiguous with the
            // assignment form, so it is always parenthesized there.
            let parens = parens || (binop_prec(*op) == 3 && parent_prec == 3);
            if parens {
                out.push('(');
            }
            print_term(out, l, prec);
            match op {
                BinOp::And | BinOp::Or | BinOp::Like | BinOp::Concat => {
                    write!(out, " {} ", op.as_str()).unwrap();
                }
                _ => out.push_str(op.as_str()),
            }
            // Right operand of a left-associative chain needs parens at
            // equal precedence.
            print_term(out, r, prec + 1);
            if parens {
                out.push(')');
            }
        }
    }
}

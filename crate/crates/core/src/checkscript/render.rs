use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Canonical source text for a program. Parsing the output yields a
/// structurally equal program; the empty program renders as "".
pub fn render(prog: &CheckProgram) -> String {
    let mut out = String::new();
    if let Some(id) = prog.rule_id {
        let _ = writeln!(out, "rule {id}");
    }
    for s in &prog.statements {
        stmt(&mut out, s, 0);
    }
    out
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in body {
        stmt(out, s, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    out.push_str(&INDENT.repeat(depth));
    stmt_inline(out, s, depth);
    out.push('\n');
}

fn stmt_inline(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Let { name, value, .. } => {
            let _ = write!(out, "let {name} = {}", render_expr(value));
        }
        Stmt::For {
            var, iter, body, ..
        } => {
            let _ = write!(out, "for {var} in {} ", render_expr(iter));
            block(out, body, depth);
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
            ..
        } => {
            let _ = write!(out, "if {} ", render_expr(cond));
            block(out, then_body, depth);
            match else_body.as_deref() {
                None => {}
                Some([nested @ Stmt::If { .. }]) => {
                    out.push_str(" else ");
                    stmt_inline(out, nested, depth);
                }
                Some(body) => {
                    out.push_str(" else ");
                    block(out, body, depth);
                }
            }
        }
        Stmt::Classify {
            target,
            status,
            fields,
            ..
        } => {
            let _ = write!(out, "classify({}, {}", render_expr(target), status.label());
            for f in fields {
                out.push_str(", ");
                out.push_str(f.kind.keyword());
                if let Some(n) = &f.name {
                    out.push('.');
                    out.push_str(n);
                }
                out.push('=');
                out.push_str(&render_expr(&f.value));
            }
            out.push(')');
        }
        Stmt::Report { value, .. } => {
            let _ = write!(out, "report({})", render_expr(value));
        }
    }
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

/// Render an expression with the minimum parentheses its precedence needs.
pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

fn expr_at(out: &mut String, e: &Expr, min: Prec) {
    if e.precedence() < min {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn args(out: &mut String, list: &[Expr]) {
    out.push('(');
    for (i, a) in list.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a);
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Number { value, unit } => {
            let _ = write!(out, "{value}");
            if let Some(u) = unit {
                out.push(' ');
                out.push_str(u.word());
            }
        }
        ExprKind::Str(s) => out.push_str(&quote(s)),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Unary {
            op: UnaryOp::Neg,
            operand,
        } => {
            out.push('-');
            expr_at(out, operand, Prec::Neg);
        }
        ExprKind::Unary {
            op: UnaryOp::Not,
            operand,
        } => {
            out.push_str("not ");
            expr_at(out, operand, Prec::Not);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let left_min = if op.is_comparison() { p.next() } else { p };
            expr_at(out, lhs, left_min);
            let _ = write!(out, " {} ", op.symbol());
            expr_at(out, rhs, p.next());
        }
        ExprKind::Call { name, args: a } => {
            out.push_str(name);
            args(out, a);
        }
        ExprKind::Method {
            receiver,
            name,
            args: a,
        } => {
            expr_at(out, receiver, Prec::Postfix);
            out.push('.');
            out.push_str(name);
            args(out, a);
        }
        ExprKind::Lambda { param, body } => {
            let _ = write!(out, "{param} => ");
            expr(out, body);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn roundtrip(src: &str) -> String {
        let p = parse(src).unwrap();
        let text = render(&p);
        assert_eq!(parse(&text).unwrap(), p, "{text}");
        text
    }

    #[test]
    fn empty_program() {
        assert_eq!(render(&CheckProgram::default()), "");
    }

    #[test]
    fn canonical_layout() {
        let text = roundtrip("rule 2 for s in collect(Stair){if s.param(\"width\")>=36 in{classify(s,compliant)}else if true{}else{report(\"x\\n\")}}");
        assert_eq!(
            text,
            "rule 2\nfor s in collect(Stair) {\n    if s.param(\"width\") >= 36 in {\n        classify(s, compliant)\n    } else if true {\n    } else {\n        report(\"x\\n\")\n    }\n}\n"
        );
    }

    #[test]
    fn parentheses_only_where_needed() {
        assert_eq!(
            roundtrip("let x = (a + b) * c - (d - e)"),
            "let x = (a + b) * c - (d - e)\n"
        );
        assert_eq!(
            roundtrip("let x = not (a and b) or -(c).f()"),
            "let x = not (a and b) or -c.f()\n"
        );
        assert_eq!(
            roundtrip("let x = (a == b) == c"),
            "let x = (a == b) == c\n"
        );
        assert_eq!(
            roundtrip("let x = (-a).f() + (1 in).g()"),
            "let x = (-a).f() + 1 in.g()\n"
        );
    }
}

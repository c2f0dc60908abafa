use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::expr::{Coord, Expr, Node, Symbol};
use super::rational::Rational;

/// Display names for coordinates.
pub trait Names {
    fn coord(&self, c: Coord) -> String;
}

/// Index-based names: `x0`, `y1`, `y1_0`, `y1_0_1`, `p`, `p0_1`, `q1`, `lam1`.
pub struct PlainNames;

impl Names for PlainNames {
    fn coord(&self, c: Coord) -> String {
        match c {
            Coord::Base(m) => format!("x{m}"),
            Coord::Fiber(i) => format!("y{i}"),
            Coord::Jet(i, m) => format!("y{i}_{m}"),
            Coord::Jet2(i, a, b) => format!("y{i}_{a}_{b}"),
            Coord::MomentumScalar => String::from("p"),
            Coord::Momentum(m, i) => format!("p{m}_{i}"),
            Coord::Source(i) => format!("q{i}"),
            Coord::Dual(i) => format!("lam{i}"),
        }
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

/// Render in the same grammar the parser accepts.
pub fn render(e: &Expr, names: &dyn Names) -> String {
    let mut out = String::new();
    write(e, names, &mut out, 0);
    out
}

fn write(e: &Expr, names: &dyn Names, out: &mut String, ctx: u8) {
    match e.node() {
        Node::Num(r) => {
            let p = if r.is_negative() {
                PREC_ADD
            } else if r.is_integer() {
                PREC_ATOM
            } else {
                PREC_MUL
            };
            paren(out, p < ctx || (r.is_negative() && ctx > 0), |o| o.push_str(&format!("{r}")));
        }
        Node::Sym(Symbol::Coord(c)) => out.push_str(&names.coord(*c)),
        Node::Sym(Symbol::Param(p)) => out.push_str(p),
        Node::Fun(a) => {
            out.push_str(&a.name);
            if a.derivs.iter().any(|d| *d > 0) {
                out.push_str("'[");
                let ds: Vec<String> = a.derivs.iter().map(|d| format!("{d}")).collect();
                out.push_str(&ds.join(","));
                out.push(']');
            }
            out.push('(');
            for (k, arg) in a.args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write(arg, names, out, 0);
            }
            out.push(')');
        }
        Node::Func(kind, a) => {
            out.push_str(kind.name());
            out.push('(');
            write(a, names, out, 0);
            out.push(')');
        }
        Node::Pow(b, k) => {
            if k.is_negative() {
                paren(out, PREC_MUL < ctx, |o| {
                    o.push_str("1/");
                    write_pow(b, &-k, names, o, PREC_POW);
                });
            } else {
                paren(out, PREC_POW < ctx, |o| write_pow(b, k, names, o, 0));
            }
        }
        Node::Mul(fs) => paren(out, PREC_MUL < ctx, |o| write_product(fs, names, o)),
        Node::Add(ts) => paren(out, PREC_ADD < ctx, |o| {
            for (k, t) in ts.iter().enumerate() {
                let (c, rest) = t.split_coeff();
                if k == 0 {
                    write(t, names, o, PREC_ADD);
                } else if c.is_negative() {
                    o.push_str(" - ");
                    let flipped = Expr::num(-c) * rest;
                    write(&flipped, names, o, PREC_MUL);
                } else {
                    o.push_str(" + ");
                    write(t, names, o, PREC_MUL);
                }
            }
        }),
    }
}

fn write_pow(b: &Expr, k: &Rational, names: &dyn Names, out: &mut String, ctx: u8) {
    if k.is_one() {
        write(b, names, out, ctx.max(PREC_POW));
        return;
    }
    let wrap = ctx > PREC_POW;
    paren(out, wrap, |o| {
        write(b, names, o, PREC_ATOM);
        o.push('^');
        if k.is_integer() {
            o.push_str(&format!("{k}"));
        } else {
            o.push_str(&format!("({k})"));
        }
    });
}

fn write_product(fs: &[Expr], names: &dyn Names, out: &mut String) {
    let mut coef = Rational::one();
    let mut num: Vec<&Expr> = Vec::new();
    let mut den: Vec<(&Expr, Rational)> = Vec::new();
    for f in fs {
        match f.node() {
            Node::Num(r) => coef = &coef * r,
            Node::Pow(b, k) if k.is_negative() => den.push((b, -k)),
            _ => num.push(f),
        }
    }
    let mut wrote = false;
    if coef.is_negative() {
        out.push('-');
        coef = -coef;
    }
    let numer = Rational::from_big(coef.numer().clone(), num_bigint::BigInt::from(1));
    let denom = Rational::from_big(coef.denom().clone(), num_bigint::BigInt::from(1));
    if !numer.is_one() || num.is_empty() {
        out.push_str(&format!("{numer}"));
        wrote = true;
    }
    for f in num {
        if wrote {
            out.push('*');
        }
        write(f, names, out, PREC_MUL + 1);
        wrote = true;
    }
    if !denom.is_one() {
        out.push_str(&format!("/{denom}"));
    }
    for (b, k) in den {
        out.push('/');
        write_pow(b, &k, names, out, PREC_MUL + 1);
    }
}

fn paren(out: &mut String, wrap: bool, f: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    f(out);
    if wrap {
        out.push(')');
    }
}

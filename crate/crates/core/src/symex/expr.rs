use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::rational::Rational;

/// A coordinate on the jet bundle or on one of its dual bundles.
///
/// Field indices come first for jet coordinates: `Jet(i, mu)` is z^i_mu,
/// `Jet2(i, mu, sigma)` is the second-order coordinate with `mu <= sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Base(u16),
    Fiber(u16),
    Jet(u16, u16),
    Jet2(u16, u16, u16),
    MomentumScalar,
    /// p^mu_i stored as (mu, i).
    Momentum(u16, u16),
    Source(u16),
    Dual(u16),
}

impl Coord {
    pub fn jet2(field: usize, a: usize, b: usize) -> Coord {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Coord::Jet2(field as u16, a as u16, b as u16)
    }

    pub fn jet(field: usize, dir: usize) -> Coord {
        Coord::Jet(field as u16, dir as u16)
    }

    pub fn base(mu: usize) -> Coord {
        Coord::Base(mu as u16)
    }

    pub fn fiber(i: usize) -> Coord {
        Coord::Fiber(i as u16)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Coord(Coord),
    Param(Arc<str>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Ln => "ln",
        }
    }
}

/// Application of an undeclared function, with a derivative count per slot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Applied {
    pub name: Arc<str>,
    pub args: Vec<Expr>,
    pub derivs: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Rational),
    Sym(Symbol),
    Fun(Applied),
    Func(Elementary, Expr),
    Pow(Expr, Rational),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

/// Immutable, normalized symbolic scalar.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl core::fmt::Debug for Expr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&super::render::render(self, &super::render::PlainNames))
    }
}

impl core::fmt::Display for Expr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(&super::render::render(self, &super::render::PlainNames))
    }
}

const MAX_EXPAND_POWER: i64 = 24;

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(r: Rational) -> Expr {
        Expr::raw(Node::Num(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Rational::from_int(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::num(Rational::new(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn coord(c: Coord) -> Expr {
        Expr::raw(Node::Sym(Symbol::Coord(c)))
    }

    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Sym(Symbol::Param(Arc::from(name))))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::raw(Node::Sym(s))
    }

    pub fn x(mu: usize) -> Expr {
        Expr::coord(Coord::base(mu))
    }

    pub fn y(i: usize) -> Expr {
        Expr::coord(Coord::fiber(i))
    }

    pub fn z(i: usize, mu: usize) -> Expr {
        Expr::coord(Coord::jet(i, mu))
    }

    pub fn z2(i: usize, mu: usize, sigma: usize) -> Expr {
        Expr::coord(Coord::jet2(i, mu, sigma))
    }

    pub fn applied(name: &str, args: Vec<Expr>) -> Expr {
        let n = args.len();
        Expr::raw(Node::Fun(Applied { name: Arc::from(name), args, derivs: vec![0; n] }))
    }

    pub(crate) fn applied_with(a: Applied) -> Expr {
        Expr::raw(Node::Fun(a))
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r.is_one())
    }

    pub fn as_coord(&self) -> Option<Coord> {
        match self.node() {
            Node::Sym(Symbol::Coord(c)) => Some(*c),
            _ => None,
        }
    }

    /// Terms of a sum, or the expression itself as a single term.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Split a term into numeric coefficient and the remaining monomial.
    pub fn split_coeff(&self) -> (Rational, Expr) {
        match self.node() {
            Node::Num(r) => (r.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(r) => {
                    let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::raw(Node::Mul(fs[1..].to_vec())) };
                    (r.clone(), rest)
                }
                _ => (Rational::one(), self.clone()),
            },
            _ => (Rational::one(), self.clone()),
        }
    }

    fn scaled(key: &Expr, c: Rational) -> Expr {
        if c.is_one() {
            return key.clone();
        }
        if key.is_one() {
            return Expr::num(c);
        }
        match key.node() {
            Node::Mul(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::num(c));
                v.extend(fs.iter().cloned());
                Expr::raw(Node::Mul(v))
            }
            _ => Expr::raw(Node::Mul(vec![Expr::num(c), key.clone()])),
        }
    }

    pub fn add_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut constant = Rational::zero();
        let mut acc: BTreeMap<Expr, Rational> = BTreeMap::new();
        fn push(e: Expr, constant: &mut Rational, acc: &mut BTreeMap<Expr, Rational>) {
            match e.node() {
                Node::Add(ts) => {
                    for t in ts {
                        push(t.clone(), constant, acc);
                    }
                }
                Node::Num(r) => *constant = &*constant + r,
                _ => {
                    let (c, key) = e.split_coeff();
                    let slot = acc.entry(key).or_insert_with(Rational::zero);
                    *slot = &*slot + &c;
                }
            }
        }
        for e in items {
            push(e, &mut constant, &mut acc);
        }
        let mut out = Vec::new();
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (key, c) in acc {
            if !c.is_zero() {
                out.push(Expr::scaled(&key, c));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Add(out)),
        }
    }

    pub fn mul_all<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut coef = Rational::one();
        let mut bases: BTreeMap<Expr, Rational> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut sums: Vec<Expr> = Vec::new();
        fn push(
            e: Expr,
            coef: &mut Rational,
            bases: &mut BTreeMap<Expr, Rational>,
            exp_args: &mut Vec<Expr>,
            sums: &mut Vec<Expr>,
        ) {
            match e.node() {
                Node::Num(r) => *coef = &*coef * r,
                Node::Mul(fs) => {
                    for f in fs {
                        push(f.clone(), coef, bases, exp_args, sums);
                    }
                }
                Node::Add(_) => sums.push(e.clone()),
                Node::Pow(b, k) => {
                    let slot = bases.entry(b.clone()).or_insert_with(Rational::zero);
                    *slot = &*slot + k;
                }
                Node::Func(Elementary::Exp, a) => exp_args.push(a.clone()),
                _ => {
                    let slot = bases.entry(e.clone()).or_insert_with(Rational::zero);
                    *slot = &*slot + &Rational::one();
                }
            }
        }
        for e in items {
            push(e, &mut coef, &mut bases, &mut exp_args, &mut sums);
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        if !sums.is_empty() {
            let mut rest: Vec<Expr> = Vec::new();
            rest.push(Expr::num(coef));
            for (b, k) in bases {
                rest.push(Expr::raw(Node::Pow(b, k)));
            }
            for a in exp_args {
                rest.push(Expr::raw(Node::Func(Elementary::Exp, a)));
            }
            let mut acc = vec![Expr::mul_all(rest)];
            for s in sums {
                let mut next = Vec::with_capacity(acc.len() * 2);
                for a in &acc {
                    for t in s.terms() {
                        next.push(Expr::mul_all([a.clone(), t]));
                    }
                }
                acc = next;
            }
            return Expr::add_all(acc);
        }
        let mut factors: Vec<Expr> = Vec::new();
        let mut redo = false;
        for (b, k) in bases {
            if k.is_zero() {
                continue;
            }
            if let Node::Num(r) = b.node() {
                // rational base with a non-integer exponent: pull out the integer part
                match r.pow_exact(&k) {
                    Some(v) => coef = &coef * &v,
                    None => {
                        let fl = floor(&k);
                        let frac = &k - &fl;
                        coef = &coef * &r.powi(fl.to_i64().unwrap_or(0));
                        factors.push(Expr::raw(Node::Pow(b.clone(), frac)));
                    }
                }
                continue;
            }
            if k.is_one() {
                factors.push(b);
            } else {
                let p = Expr::pow_raw_checked(&b, &k);
                if !matches!(p.node(), Node::Pow(..)) && p != b {
                    redo = true;
                }
                factors.push(p);
            }
        }
        if !exp_args.is_empty() {
            let arg = Expr::add_all(exp_args);
            let e = Expr::func(Elementary::Exp, arg);
            if !matches!(e.node(), Node::Func(Elementary::Exp, _)) {
                redo = true;
            }
            factors.push(e);
        }
        if redo {
            let mut all = factors;
            all.push(Expr::num(coef));
            return Expr::mul_all(all);
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        factors.sort();
        if factors.is_empty() {
            return Expr::num(coef);
        }
        if coef.is_one() && factors.len() == 1 {
            return factors.pop().unwrap();
        }
        let mut v = Vec::with_capacity(factors.len() + 1);
        if !coef.is_one() {
            v.push(Expr::num(coef));
        }
        v.extend(factors);
        if v.len() == 1 {
            return v.pop().unwrap();
        }
        Expr::raw(Node::Mul(v))
    }

    /// Combine base and summed exponent coming out of a product.
    fn pow_raw_checked(b: &Expr, k: &Rational) -> Expr {
        match b.node() {
            Node::Add(_) if k.is_integer() && !k.is_negative() => Expr::pow(b, k.clone()),
            _ => Expr::raw(Node::Pow(b.clone(), k.clone())),
        }
    }

    pub fn pow(b: &Expr, k: Rational) -> Expr {
        if k.is_zero() {
            return Expr::one();
        }
        if k.is_one() {
            return b.clone();
        }
        match b.node() {
            Node::Num(r) => match r.pow_exact(&k) {
                Some(v) => Expr::num(v),
                None => {
                    if r.is_zero() {
                        return Expr::raw(Node::Pow(b.clone(), k));
                    }
                    if r.is_negative() {
                        return Expr::raw(Node::Pow(b.clone(), k));
                    }
                    let fl = floor(&k);
                    let frac = &k - &fl;
                    let c = r.powi(fl.to_i64().unwrap_or(0));
                    Expr::mul_all([Expr::num(c), Expr::raw(Node::Pow(b.clone(), frac))])
                }
            },
            Node::Pow(c, f) => Expr::pow(c, f * &k),
            Node::Mul(fs) => {
                let neg_coeff = matches!(fs[0].node(), Node::Num(r) if r.is_negative());
                if k.is_integer() || !neg_coeff {
                    Expr::mul_all(fs.iter().map(|f| Expr::pow(f, k.clone())))
                } else {
                    Expr::raw(Node::Pow(b.clone(), k))
                }
            }
            Node::Func(Elementary::Exp, a) => Expr::func(Elementary::Exp, a * &Expr::num(k)),
            Node::Add(_) => match k.to_i64() {
                Some(n) if n > 0 && n <= MAX_EXPAND_POWER => {
                    let mut acc = b.clone();
                    for _ in 1..n {
                        acc = Expr::mul_all([acc, b.clone()]);
                    }
                    acc
                }
                _ => Expr::raw(Node::Pow(b.clone(), k)),
            },
            _ => Expr::raw(Node::Pow(b.clone(), k)),
        }
    }

    pub fn powi(&self, n: i64) -> Expr {
        Expr::pow(self, Rational::from_int(n))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::pow(self, Rational::new(1, 2))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    pub fn func(kind: Elementary, a: Expr) -> Expr {
        match kind {
            Elementary::Sin if a.is_zero() => Expr::zero(),
            Elementary::Cos if a.is_zero() => Expr::one(),
            Elementary::Exp => {
                if a.is_zero() {
                    return Expr::one();
                }
                match a.node() {
                    Node::Func(Elementary::Ln, inner) => inner.clone(),
                    Node::Mul(fs) if fs.len() == 2 => match (fs[0].node(), fs[1].node()) {
                        (Node::Num(k), Node::Func(Elementary::Ln, inner)) => Expr::pow(inner, k.clone()),
                        _ => Expr::raw(Node::Func(kind, a)),
                    },
                    _ => Expr::raw(Node::Func(kind, a)),
                }
            }
            Elementary::Ln => {
                if a.is_one() {
                    return Expr::zero();
                }
                match a.node() {
                    Node::Func(Elementary::Exp, inner) => inner.clone(),
                    Node::Pow(b, k) => Expr::num(k.clone()) * Expr::func(Elementary::Ln, b.clone()),
                    _ => Expr::raw(Node::Func(kind, a)),
                }
            }
            _ => Expr::raw(Node::Func(kind, a)),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::func(Elementary::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::func(Elementary::Cos, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::func(Elementary::Exp, a)
    }

    pub fn ln(a: Expr) -> Expr {
        Expr::func(Elementary::Ln, a)
    }

    /// Every coordinate occurring anywhere in the expression.
    pub fn coords(&self) -> BTreeSet<Coord> {
        let mut out = BTreeSet::new();
        self.visit_symbols(&mut |s| {
            if let Symbol::Coord(c) = s {
                out.insert(*c);
            }
        });
        out
    }

    pub fn params(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.visit_symbols(&mut |s| {
            if let Symbol::Param(p) = s {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn visit_symbols(&self, f: &mut dyn FnMut(&Symbol)) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => f(s),
            Node::Fun(a) => a.args.iter().for_each(|e| e.visit_symbols(f)),
            Node::Func(_, a) => a.visit_symbols(f),
            Node::Pow(b, _) => b.visit_symbols(f),
            Node::Mul(v) | Node::Add(v) => v.iter().for_each(|e| e.visit_symbols(f)),
        }
    }

    pub fn contains_coord(&self, c: Coord) -> bool {
        let mut hit = false;
        self.visit_symbols(&mut |s| {
            if matches!(s, Symbol::Coord(d) if *d == c) {
                hit = true;
            }
        });
        hit
    }

    pub fn depends_on(&self, pred: &dyn Fn(Coord) -> bool) -> bool {
        let mut hit = false;
        self.visit_symbols(&mut |s| {
            if let Symbol::Coord(c) = s {
                if pred(*c) {
                    hit = true;
                }
            }
        });
        hit
    }

    pub fn has_applied(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => false,
            Node::Fun(_) => true,
            Node::Func(_, a) => a.has_applied(),
            Node::Pow(b, _) => b.has_applied(),
            Node::Mul(v) | Node::Add(v) => v.iter().any(|e| e.has_applied()),
        }
    }

    pub fn is_constant(&self) -> bool {
        let mut any = false;
        self.visit_symbols(&mut |_| any = true);
        !any && !self.has_applied()
    }
}

fn floor(k: &Rational) -> Rational {
    use num_integer::Integer;
    let (q, _) = k.numer().div_mod_floor(k.denom());
    Rational::from_big(q, num_bigint::BigInt::from(1))
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Expr {
        Expr::num(r)
    }
}

impl From<Coord> for Expr {
    fn from(c: Coord) -> Expr {
        Expr::coord(c)
    }
}

macro_rules! ops {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

ops!(Add, add, |a, b| Expr::add_all([a, b]));
ops!(Sub, sub, |a, b| Expr::add_all([a, -b]));
ops!(Mul, mul, |a, b| Expr::mul_all([a, b]));
ops!(Div, div, |a, b| Expr::mul_all([a, b.recip()]));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self])
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -(self.clone())
    }
}

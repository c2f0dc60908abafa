use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Applied, Coord, Elementary, Expr, Node, Symbol};
use super::rational::Rational;

/// Points used by the sampling fallback of [`equivalent`].
pub const SAMPLE_POINTS: usize = 32;
/// Relative tolerance of the sampling fallback.
pub const SAMPLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("cannot evaluate undeclared function `{0}`")]
    Function(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// Outcome of an equivalence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    /// The normalized difference is the zero node.
    Structural,
    /// The difference vanished at every sampled point.
    Probabilistic,
    NotEqual,
}

impl Equivalence {
    pub fn holds(self) -> bool {
        !matches!(self, Equivalence::NotEqual)
    }
}

impl Expr {
    /// Partial derivative with respect to a coordinate.
    pub fn diff(&self, c: Coord) -> Expr {
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(Symbol::Coord(d)) => {
                if *d == c {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sym(Symbol::Param(_)) => Expr::zero(),
            Node::Fun(a) => {
                let mut terms = Vec::new();
                for (k, arg) in a.args.iter().enumerate() {
                    let inner = arg.diff(c);
                    if inner.is_zero() {
                        continue;
                    }
                    let mut d = a.clone();
                    d.derivs[k] += 1;
                    terms.push(Expr::applied_with(d) * inner);
                }
                Expr::add_all(terms)
            }
            Node::Func(kind, a) => {
                let inner = a.diff(c);
                if inner.is_zero() {
                    return inner;
                }
                let outer = match kind {
                    Elementary::Sin => Expr::cos(a.clone()),
                    Elementary::Cos => -Expr::sin(a.clone()),
                    Elementary::Exp => self.clone(),
                    Elementary::Ln => a.recip(),
                };
                outer * inner
            }
            Node::Pow(b, k) => {
                let inner = b.diff(c);
                if inner.is_zero() {
                    return inner;
                }
                Expr::mul_all([Expr::num(k.clone()), Expr::pow(b, k - &Rational::one()), inner])
            }
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for k in 0..fs.len() {
                    let dk = fs[k].diff(c);
                    if dk.is_zero() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                    for (j, f) in fs.iter().enumerate() {
                        if j != k {
                            prod.push(f.clone());
                        }
                    }
                    prod.push(dk);
                    terms.push(Expr::mul_all(prod));
                }
                Expr::add_all(terms)
            }
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.diff(c))),
        }
    }

    /// Rebuild the expression, replacing symbols for which `f` returns a value.
    pub fn map_symbols(&self, f: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => f(s).unwrap_or_else(|| self.clone()),
            Node::Fun(a) => Expr::applied_with(Applied {
                name: a.name.clone(),
                args: a.args.iter().map(|e| e.map_symbols(f)).collect(),
                derivs: a.derivs.clone(),
            }),
            Node::Func(kind, a) => Expr::func(*kind, a.map_symbols(f)),
            Node::Pow(b, k) => Expr::pow(&b.map_symbols(f), k.clone()),
            Node::Mul(v) => Expr::mul_all(v.iter().map(|e| e.map_symbols(f))),
            Node::Add(v) => Expr::add_all(v.iter().map(|e| e.map_symbols(f))),
        }
    }

    /// Simultaneous substitution of coordinates.
    pub fn substitute(&self, bindings: &BTreeMap<Coord, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.map_symbols(&|s| match s {
            Symbol::Coord(c) => bindings.get(c).cloned(),
            Symbol::Param(_) => None,
        })
    }

    /// Simultaneous substitution of named parameters.
    pub fn substitute_params(&self, bindings: &BTreeMap<String, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.map_symbols(&|s| match s {
            Symbol::Param(p) => bindings.get(&**p).cloned(),
            Symbol::Coord(_) => None,
        })
    }

    /// Replace undeclared-function applications by closed forms.
    ///
    /// `f` receives the function name and the substituted arguments and returns
    /// the closed form as an expression in fresh parameter slots `#0, #1, ...`;
    /// derivatives are taken before the slots are filled.
    pub fn map_applied(&self, f: &dyn Fn(&str) -> Option<(Expr, usize)>) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Fun(a) => {
                let args: Vec<Expr> = a.args.iter().map(|e| e.map_applied(f)).collect();
                match f(&a.name) {
                    Some((body, arity)) if arity == args.len() => {
                        let mut d = body;
                        for (k, n) in a.derivs.iter().enumerate() {
                            for _ in 0..*n {
                                d = d.diff_slot(k);
                            }
                        }
                        let slots: BTreeMap<String, Expr> =
                            args.iter().enumerate().map(|(k, e)| (slot_name(k), e.clone())).collect();
                        d.substitute_params(&slots)
                    }
                    _ => Expr::applied_with(Applied { name: a.name.clone(), args, derivs: a.derivs.clone() }),
                }
            }
            Node::Func(kind, a) => Expr::func(*kind, a.map_applied(f)),
            Node::Pow(b, k) => Expr::pow(&b.map_applied(f), k.clone()),
            Node::Mul(v) => Expr::mul_all(v.iter().map(|e| e.map_applied(f))),
            Node::Add(v) => Expr::add_all(v.iter().map(|e| e.map_applied(f))),
        }
    }

    fn diff_slot(&self, k: usize) -> Expr {
        // slots are parameters; differentiate by swapping the slot for a scratch coordinate
        let scratch = Coord::Dual(u16::MAX);
        let name = slot_name(k);
        let lifted = self.map_symbols(&|s| match s {
            Symbol::Param(p) if **p == *name => Some(Expr::coord(scratch)),
            _ => None,
        });
        let d = lifted.diff(scratch);
        d.map_symbols(&|s| match s {
            Symbol::Coord(c) if *c == scratch => Some(Expr::param(&name)),
            _ => None,
        })
    }

    /// Numeric value; every symbol must be bound.
    pub fn eval(&self, point: &BTreeMap<Coord, f64>, params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Num(r) => r.to_f64(),
            Node::Sym(Symbol::Coord(c)) => {
                *point.get(c).ok_or_else(|| EvalError::Unbound(alloc::format!("{c:?}")))?
            }
            Node::Sym(Symbol::Param(p)) => *params.get(&**p).ok_or_else(|| EvalError::Unbound(String::from(&**p)))?,
            Node::Fun(a) => return Err(EvalError::Function(String::from(&*a.name))),
            Node::Func(kind, a) => {
                let x = a.eval(point, params)?;
                match kind {
                    Elementary::Sin => libm::sin(x),
                    Elementary::Cos => libm::cos(x),
                    Elementary::Exp => libm::exp(x),
                    Elementary::Ln => {
                        if x <= 0.0 {
                            return Err(EvalError::Domain("logarithm of a non-positive number"));
                        }
                        libm::log(x)
                    }
                }
            }
            Node::Pow(b, k) => {
                let x = b.eval(point, params)?;
                if let Some(n) = k.to_i64() {
                    if x == 0.0 && n < 0 {
                        return Err(EvalError::Domain("division by zero"));
                    }
                    libm::pow(x, n as f64)
                } else {
                    if x < 0.0 {
                        return Err(EvalError::Domain("fractional power of a negative number"));
                    }
                    if x == 0.0 && k.is_negative() {
                        return Err(EvalError::Domain("division by zero"));
                    }
                    libm::pow(x, k.to_f64())
                }
            }
            Node::Mul(v) => {
                let mut acc = 1.0;
                for e in v {
                    acc *= e.eval(point, params)?;
                }
                acc
            }
            Node::Add(v) => {
                let mut acc = 0.0;
                for e in v {
                    acc += e.eval(point, params)?;
                }
                acc
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain("non-finite value"))
        }
    }
}

pub(crate) fn slot_name(k: usize) -> String {
    alloc::format!("#{k}")
}

/// Partial derivative, exported under the operation's name.
pub fn differentiate(e: &Expr, c: Coord) -> Expr {
    e.diff(c)
}

pub fn substitute(e: &Expr, bindings: &BTreeMap<Coord, Expr>) -> Expr {
    e.substitute(bindings)
}

pub fn evaluate(e: &Expr, point: &BTreeMap<Coord, f64>, params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    e.eval(point, params)
}

/// Decide `a == b`: structurally when the normalized difference is zero,
/// otherwise by sampling at random points.
pub fn equivalent(a: &Expr, b: &Expr) -> Equivalence {
    let d = a - b;
    if d.is_zero() {
        return Equivalence::Structural;
    }
    if d.is_constant() || d.has_applied() {
        return Equivalence::NotEqual;
    }
    let mut coords = a.coords();
    coords.extend(b.coords());
    let mut params = a.params();
    params.extend(b.params());
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a65_7462_616c);
    let mut agreed = 0;
    let mut attempts = 0;
    while agreed < SAMPLE_POINTS {
        attempts += 1;
        if attempts > SAMPLE_POINTS * 8 {
            return Equivalence::NotEqual;
        }
        let point: BTreeMap<Coord, f64> = coords.iter().map(|c| (*c, rng.gen_range(0.2..1.8))).collect();
        let pv: BTreeMap<String, f64> = params.iter().map(|p| (String::from(&**p), rng.gen_range(0.2..1.8))).collect();
        let (va, vb) = match (a.eval(&point, &pv), b.eval(&point, &pv)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => continue,
        };
        let scale = 1f64.max(va.abs()).max(vb.abs());
        if (va - vb).abs() > SAMPLE_TOL * scale {
            return Equivalence::NotEqual;
        }
        agreed += 1;
    }
    Equivalence::Probabilistic
}

/// Split `e` as a polynomial in the coordinates selected by `is_var`.
///
/// Returns monomial (sorted multiset of variables) -> coefficient, or `None`
/// when some selected coordinate occurs non-polynomially.
pub fn polynomial_coefficients(e: &Expr, is_var: &dyn Fn(Coord) -> bool) -> Option<BTreeMap<Vec<Coord>, Expr>> {
    let mut out: BTreeMap<Vec<Coord>, Vec<Expr>> = BTreeMap::new();
    for term in e.terms() {
        let factors: Vec<Expr> = match term.node() {
            Node::Mul(fs) => fs.clone(),
            _ => alloc::vec![term.clone()],
        };
        let mut mono: Vec<Coord> = Vec::new();
        let mut rest: Vec<Expr> = Vec::new();
        for f in factors {
            match f.node() {
                Node::Sym(Symbol::Coord(c)) if is_var(*c) => mono.push(*c),
                Node::Pow(b, k) => match (b.as_coord(), k.to_i64()) {
                    (Some(c), Some(n)) if is_var(c) && n > 0 => {
                        for _ in 0..n {
                            mono.push(c);
                        }
                    }
                    _ => {
                        if f.depends_on(is_var) {
                            return None;
                        }
                        rest.push(f.clone());
                    }
                },
                _ => {
                    if f.depends_on(is_var) {
                        return None;
                    }
                    rest.push(f.clone());
                }
            }
        }
        mono.sort();
        out.entry(mono).or_default().push(Expr::mul_all(rest));
    }
    Some(
        out.into_iter()
            .map(|(k, v)| (k, Expr::add_all(v)))
            .filter(|(_, v)| !v.is_zero())
            .collect(),
    )
}

/// Name of a parameter slot used by [`Expr::map_applied`] bodies.
pub fn slot(k: usize) -> Expr {
    Expr::param(&slot_name(k))
}

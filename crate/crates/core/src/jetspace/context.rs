use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::symex::{Coord, Expr, Names, ParseErrorKind, Scope};

/// Which first derivatives of a field are kept (S-splitting of the state space).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    /// No derivatives.
    Static,
    /// Time derivative only.
    Time,
    /// Spatial derivatives only.
    Space,
    /// All derivatives.
    Both,
}

impl Split {
    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "none" => Some(Split::Static),
            "t" => Some(Split::Time),
            "x" => Some(Split::Space),
            "tx" | "xt" => Some(Split::Both),
            _ => None,
        }
    }

    pub fn admits(self, mu: usize) -> bool {
        match self {
            Split::Static => false,
            Split::Time => mu == 0,
            Split::Space => mu != 0,
            Split::Both => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JetKind {
    Full,
    /// Same admitted directions for every field.
    Partial(Vec<usize>),
    Split(Vec<Split>),
    /// No jet coordinates at all.
    Ret,
    /// An arbitrary admitted set.
    General,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("at least one base coordinate and one field are required")]
    Empty,
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("jet pair ({0}, {1}) out of range")]
    PairOutOfRange(usize, usize),
    #[error("splitting has {got} entries for {fields} fields")]
    SplitLength { got: usize, fields: usize },
    #[error("admitted pairs disagree with the splitting at ({0}, {1})")]
    SplitMismatch(usize, usize),
    #[error("metric must be a {0}x{0} matrix")]
    MetricShape(usize),
    #[error("metric is not symmetric at ({0}, {1})")]
    MetricNotSymmetric(usize, usize),
    #[error("metric entries may depend on base coordinates only")]
    MetricNotBasic,
    #[error("metric is singular")]
    SingularMetric,
    #[error("metric determinant changes sign")]
    MetricSignChanges,
}

/// Chart of a partial first jet bundle together with the base metric.
#[derive(Clone, Debug)]
pub struct JetContext {
    base: Vec<Arc<str>>,
    fields: Vec<Arc<str>>,
    admitted: BTreeSet<(usize, usize)>,
    kind: JetKind,
    metric: Vec<Vec<Expr>>,
    vol: Expr,
    log_vol_grad: Vec<Expr>,
    params: BTreeSet<Arc<str>>,
    functions: BTreeMap<Arc<str>, usize>,
}

#[derive(Clone, Debug)]
enum JetSpec {
    Full,
    Pairs(Vec<(usize, usize)>),
    Directions(Vec<usize>),
}

/// Builder for [`JetContext`]; defaults to the full jet bundle with a Euclidean metric.
#[derive(Clone, Debug)]
pub struct ContextBuilder {
    base: Vec<String>,
    fields: Vec<String>,
    jets: JetSpec,
    split: Option<Vec<Split>>,
    metric: Option<Vec<Vec<Expr>>>,
    params: Vec<String>,
    functions: Vec<(String, usize)>,
}

const RESERVED: [&str; 8] = ["d", "sin", "cos", "exp", "ln", "log", "sqrt", "lam"];

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl ContextBuilder {
    pub fn new<S: AsRef<str>>(base: &[S], fields: &[S]) -> Self {
        ContextBuilder {
            base: base.iter().map(|s| s.as_ref().to_string()).collect(),
            fields: fields.iter().map(|s| s.as_ref().to_string()).collect(),
            jets: JetSpec::Full,
            split: None,
            metric: None,
            params: Vec::new(),
            functions: Vec::new(),
        }
    }

    pub fn full(mut self) -> Self {
        self.jets = JetSpec::Full;
        self
    }

    /// No jet coordinates (the RET case).
    pub fn ret(mut self) -> Self {
        self.jets = JetSpec::Pairs(Vec::new());
        self
    }

    /// Admit the given `(direction, field)` pairs.
    pub fn pairs(mut self, pairs: &[(usize, usize)]) -> Self {
        self.jets = JetSpec::Pairs(pairs.to_vec());
        self
    }

    /// K-partial bundle for an integrable K spanned by coordinate directions.
    pub fn directions(mut self, dirs: &[usize]) -> Self {
        self.jets = JetSpec::Directions(dirs.to_vec());
        self
    }

    /// S-splitting; base index 0 is time. Combined with explicit pairs the two must agree.
    pub fn split(mut self, split: &[Split]) -> Self {
        self.split = Some(split.to_vec());
        self
    }

    pub fn metric(mut self, g: Vec<Vec<Expr>>) -> Self {
        self.metric = Some(g);
        self
    }

    pub fn param(mut self, name: &str) -> Self {
        self.params.push(name.to_string());
        self
    }

    pub fn function(mut self, name: &str, arity: usize) -> Self {
        self.functions.push((name.to_string(), arity));
        self
    }

    pub fn build(self) -> Result<JetContext, ContextError> {
        let n1 = self.base.len();
        let m = self.fields.len();
        if n1 == 0 || m == 0 {
            return Err(ContextError::Empty);
        }
        let mut seen = BTreeSet::new();
        let names = self
            .base
            .iter()
            .chain(&self.fields)
            .chain(&self.params)
            .chain(self.functions.iter().map(|(n, _)| n));
        for name in names {
            if !valid_name(name) {
                return Err(ContextError::InvalidName(name.clone()));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(ContextError::Reserved(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(ContextError::Duplicate(name.clone()));
            }
        }
        let explicit: Option<BTreeSet<(usize, usize)>> = match &self.jets {
            JetSpec::Full if self.split.is_some() => None,
            JetSpec::Full => Some((0..n1).flat_map(|mu| (0..m).map(move |i| (mu, i))).collect()),
            JetSpec::Pairs(ps) => {
                for &(mu, i) in ps {
                    if mu >= n1 || i >= m {
                        return Err(ContextError::PairOutOfRange(mu, i));
                    }
                }
                Some(ps.iter().copied().collect())
            }
            JetSpec::Directions(ds) => {
                for &mu in ds {
                    if mu >= n1 {
                        return Err(ContextError::PairOutOfRange(mu, 0));
                    }
                }
                Some(ds.iter().flat_map(|&mu| (0..m).map(move |i| (mu, i))).collect())
            }
        };
        let admitted = match &self.split {
            Some(split) => {
                if split.len() != m {
                    return Err(ContextError::SplitLength { got: split.len(), fields: m });
                }
                let induced: BTreeSet<(usize, usize)> = (0..n1)
                    .flat_map(|mu| (0..m).map(move |i| (mu, i)))
                    .filter(|&(mu, i)| split[i].admits(mu))
                    .collect();
                if let Some(p) = &explicit {
                    if let Some(&(mu, i)) = p.symmetric_difference(&induced).next() {
                        return Err(ContextError::SplitMismatch(mu, i));
                    }
                }
                induced
            }
            None => explicit.unwrap_or_default(),
        };
        let kind = classify_kind(n1, m, &admitted, self.split.as_deref());
        let metric = match self.metric {
            Some(g) => g,
            None => (0..n1).map(|r| (0..n1).map(|c| if r == c { Expr::one() } else { Expr::zero() }).collect()).collect(),
        };
        if metric.len() != n1 || metric.iter().any(|r| r.len() != n1) {
            return Err(ContextError::MetricShape(n1));
        }
        for r in 0..n1 {
            for c in 0..r {
                if metric[r][c] != metric[c][r] {
                    return Err(ContextError::MetricNotSymmetric(r, c));
                }
            }
        }
        if metric.iter().flatten().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_))) || e.has_applied()) {
            return Err(ContextError::MetricNotBasic);
        }
        let det = linalg::det(&metric);
        if det.is_zero() {
            return Err(ContextError::SingularMetric);
        }
        let sign = determinant_sign(&det, n1)?;
        let vol = (Expr::int(sign) * det).sqrt();
        let log_vol = Expr::ln(vol.clone());
        let log_vol_grad = (0..n1).map(|mu| log_vol.diff(Coord::base(mu))).collect();
        Ok(JetContext {
            base: self.base.iter().map(|s| Arc::from(s.as_str())).collect(),
            fields: self.fields.iter().map(|s| Arc::from(s.as_str())).collect(),
            admitted,
            kind,
            metric,
            vol,
            log_vol_grad,
            params: self.params.iter().map(|s| Arc::from(s.as_str())).collect(),
            functions: self.functions.iter().map(|(s, k)| (Arc::from(s.as_str()), *k)).collect(),
        })
    }
}

fn classify_kind(n1: usize, m: usize, admitted: &BTreeSet<(usize, usize)>, split: Option<&[Split]>) -> JetKind {
    if let Some(s) = split {
        return JetKind::Split(s.to_vec());
    }
    if admitted.is_empty() {
        return JetKind::Ret;
    }
    if admitted.len() == n1 * m {
        return JetKind::Full;
    }
    let dirs: BTreeSet<usize> = admitted.iter().map(|p| p.0).collect();
    if admitted.len() == dirs.len() * m {
        return JetKind::Partial(dirs.into_iter().collect());
    }
    JetKind::General
}

/// Sign of a metric determinant, sampled over the base.
fn determinant_sign(det: &Expr, n1: usize) -> Result<i64, ContextError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7472);
    let params: Vec<String> = det.params().iter().map(|p| p.to_string()).collect();
    let mut sign = 0i64;
    for _ in 0..16 {
        let point: BTreeMap<Coord, f64> = (0..n1).map(|mu| (Coord::base(mu), rng.gen_range(0.3..1.7))).collect();
        let pv: BTreeMap<String, f64> = params.iter().map(|p| (p.clone(), rng.gen_range(0.3..1.7))).collect();
        let Ok(v) = det.eval(&point, &pv) else { continue };
        if v.abs() < 1e-300 {
            continue;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if sign != 0 && s != sign {
            return Err(ContextError::MetricSignChanges);
        }
        sign = s;
    }
    if sign == 0 {
        return Err(ContextError::SingularMetric);
    }
    Ok(sign)
}

impl JetContext {
    /// Number of base coordinates, n+1.
    pub fn base_dim(&self) -> usize {
        self.base.len()
    }

    /// Number of fields, m.
    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn base_name(&self, mu: usize) -> &str {
        &self.base[mu]
    }

    pub fn field_name(&self, i: usize) -> &str {
        &self.fields[i]
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.base.iter().position(|b| &**b == name)
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| &**f == name)
    }

    pub fn kind(&self) -> &JetKind {
        &self.kind
    }

    pub fn is_full(&self) -> bool {
        self.admitted.len() == self.base_dim() * self.field_count()
    }

    pub fn is_ret(&self) -> bool {
        self.admitted.is_empty()
    }

    /// Whether z^i_mu is a coordinate.
    pub fn admits(&self, mu: usize, i: usize) -> bool {
        self.admitted.contains(&(mu, i))
    }

    /// Admitted `(direction, field)` pairs in order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.admitted.iter().copied()
    }

    /// Directions in which field `i` has a jet coordinate.
    pub fn directions(&self, i: usize) -> Vec<usize> {
        (0..self.base_dim()).filter(|&mu| self.admits(mu, i)).collect()
    }

    /// Whether the coordinate lives on the (second) partial jet space or a dual bundle.
    pub fn admits_coord(&self, c: Coord) -> bool {
        match c {
            Coord::Base(mu) => (mu as usize) < self.base_dim(),
            Coord::Fiber(i) => (i as usize) < self.field_count(),
            Coord::Jet(i, mu) => self.admits(mu as usize, i as usize),
            Coord::Jet2(i, a, b) => self.admits(a as usize, i as usize) || self.admits(b as usize, i as usize),
            Coord::Momentum(mu, i) => (mu as usize) < self.base_dim() && (i as usize) < self.field_count(),
            Coord::Source(i) | Coord::Dual(i) => (i as usize) < self.field_count(),
            Coord::MomentumScalar => true,
        }
    }

    /// Coordinates of Y followed by the admitted jet coordinates.
    pub fn coordinates(&self) -> Vec<Coord> {
        let mut out: Vec<Coord> = (0..self.base_dim()).map(Coord::base).collect();
        out.extend((0..self.field_count()).map(Coord::fiber));
        out.extend(self.admitted.iter().map(|&(mu, i)| Coord::jet(i, mu)));
        out
    }

    pub fn metric(&self) -> &[Vec<Expr>] {
        &self.metric
    }

    /// sqrt|det G|.
    pub fn vol(&self) -> &Expr {
        &self.vol
    }

    /// d/dx^mu of ln sqrt|det G|.
    pub fn dlam(&self, mu: usize) -> &Expr {
        &self.log_vol_grad[mu]
    }

    pub fn is_euclidean_volume(&self) -> bool {
        self.vol.is_one()
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| &**p)
    }

    pub fn has_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| &**p == name)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&str, usize)> {
        self.functions.iter().map(|(k, v)| (&**k, *v))
    }

    /// Same chart with extra parameters and undetermined functions.
    pub fn extended(&self, params: &[&str], functions: &[(&str, usize)]) -> Result<JetContext, ContextError> {
        let mut out = self.clone();
        for p in params {
            if self.has_param(p) {
                continue;
            }
            check_new_name(&out, p)?;
            out.params.insert(Arc::from(*p));
        }
        for (f, k) in functions {
            if self.functions.get(*f) == Some(k) {
                continue;
            }
            check_new_name(&out, f)?;
            out.functions.insert(Arc::from(*f), *k);
        }
        Ok(out)
    }

    /// Levi-Civita symbols Gamma^nu_{lambda mu} of the base metric, indexed `[nu][lambda][mu]`.
    pub fn christoffel(&self) -> Vec<Vec<Vec<Expr>>> {
        let n1 = self.base_dim();
        let inv = linalg::inverse(&self.metric).expect("metric is invertible");
        let g = &self.metric;
        let dg = |a: usize, b: usize, c: usize| g[a][b].diff(Coord::base(c));
        (0..n1)
            .map(|nu| {
                (0..n1)
                    .map(|la| {
                        (0..n1)
                            .map(|mu| {
                                let terms = (0..n1).map(|k| &inv[nu][k] * &(dg(k, mu, la) + dg(k, la, mu) - dg(la, mu, k)));
                                Expr::add_all(terms) * Expr::frac(1, 2)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Display name of a coordinate in the expression grammar.
    pub fn coord_name(&self, c: Coord) -> String {
        let b = |mu: u16| self.base.get(mu as usize).map_or_else(|| format!("x{mu}"), |s| s.to_string());
        let f = |i: u16| self.fields.get(i as usize).map_or_else(|| format!("y{i}"), |s| s.to_string());
        match c {
            Coord::Base(mu) => b(mu),
            Coord::Fiber(i) => f(i),
            Coord::Jet(i, mu) => {
                let sep = if self.admits(mu as usize, i as usize) { "," } else { ";" };
                format!("d({}{sep}{})", f(i), b(mu))
            }
            Coord::Jet2(i, a, c2) => {
                let sep = if self.admits_coord(c) { "," } else { ";" };
                format!("d({}{sep}{},{})", f(i), b(a), b(c2))
            }
            Coord::MomentumScalar => "p[]".to_string(),
            Coord::Momentum(mu, i) => format!("p[{},{}]", f(i), b(mu)),
            Coord::Source(i) => format!("q[{}]", f(i)),
            Coord::Dual(i) => format!("lam[{}]", f(i)),
        }
    }

    pub fn render(&self, e: &Expr) -> String {
        crate::symex::render(e, self)
    }

    pub fn parse(&self, text: &str) -> Result<Expr, crate::symex::ParseError> {
        crate::symex::parse(text, self)
    }
}

fn check_new_name(ctx: &JetContext, name: &str) -> Result<(), ContextError> {
    if !valid_name(name) {
        return Err(ContextError::InvalidName(name.to_string()));
    }
    if RESERVED.contains(&name) {
        return Err(ContextError::Reserved(name.to_string()));
    }
    let taken = ctx.base_index(name).is_some()
        || ctx.field_index(name).is_some()
        || ctx.has_param(name)
        || ctx.functions.contains_key(name);
    if taken {
        return Err(ContextError::Duplicate(name.to_string()));
    }
    Ok(())
}

impl Names for JetContext {
    fn coord(&self, c: Coord) -> String {
        self.coord_name(c)
    }
}

impl Scope for JetContext {
    fn identifier(&self, name: &str) -> Option<Expr> {
        if let Some(mu) = self.base_index(name) {
            return Some(Expr::x(mu));
        }
        if let Some(i) = self.field_index(name) {
            return Some(Expr::y(i));
        }
        if self.has_param(name) {
            return Some(Expr::param(name));
        }
        None
    }

    fn jet(&self, field: &str, dirs: &[&str], fresh: bool) -> Result<Expr, ParseErrorKind> {
        let i = self.field_index(field).ok_or_else(|| ParseErrorKind::UnknownIdentifier(field.to_string()))?;
        let mut ds = Vec::with_capacity(dirs.len());
        for d in dirs {
            ds.push(self.base_index(d).ok_or_else(|| ParseErrorKind::UnknownIdentifier(d.to_string()))?);
        }
        let c = match ds.as_slice() {
            [mu] => Coord::jet(i, *mu),
            [a, b] => Coord::jet2(i, *a, *b),
            _ => return Err(ParseErrorKind::Invalid("d() takes one or two directions".to_string())),
        };
        if !fresh && !self.admits_coord(c) {
            return Err(ParseErrorKind::NotAdmitted(format!("d({field},{})", dirs.join(","))));
        }
        Ok(Expr::coord(c))
    }

    fn bracket(&self, head: &str, idx: &[&str]) -> Result<Expr, ParseErrorKind> {
        let field = |s: &str| self.field_index(s).ok_or_else(|| ParseErrorKind::UnknownIdentifier(s.to_string()));
        let c = match (head, idx) {
            ("p", []) => Coord::MomentumScalar,
            ("p", [f, d]) => {
                let mu = self.base_index(d).ok_or_else(|| ParseErrorKind::UnknownIdentifier(d.to_string()))?;
                Coord::Momentum(mu as u16, field(f)? as u16)
            }
            ("q", [f]) => Coord::Source(field(f)? as u16),
            ("lam", [f]) => Coord::Dual(field(f)? as u16),
            _ => return Err(ParseErrorKind::UnknownIdentifier(format!("{head}[{}]", idx.join(",")))),
        };
        Ok(Expr::coord(c))
    }

    fn function(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }
}

//! System files: TOML with a fixed set of sections and strict keys.

use std::collections::BTreeMap;
use std::path::Path;

use jetbal::balance::{Boundary, Grid};
use jetbal::crel::{ConstitutiveRelation, CoveringCr};
use jetbal::forms::{eta_form, Form, VectorField};
use jetbal::jetspace::{Connection, ContextBuilder, Frame, JetContext, Split};
use jetbal::ret::{dual_context, DomainSampler, RetSystem};
use jetbal::symex::{Coord, Expr};
use serde::Deserialize;
use toml::Spanned;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}, column {column}: {message}")]
    Invalid { line: usize, column: usize, message: String },
    #[error("{0}")]
    Missing(String),
}

type Text = Spanned<String>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    context: Option<RawContext>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    constitutive: Option<RawConstitutive>,
    #[serde(default)]
    vectorfields: BTreeMap<String, RawField>,
    #[serde(default)]
    sections: BTreeMap<String, RawSection>,
    ret: Option<RawRet>,
    frame: Option<RawFrame>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContext {
    base: Vec<String>,
    fields: Vec<String>,
    kind: Option<Spanned<String>>,
    jets: Option<Vec<[Spanned<String>; 2]>>,
    split: Option<BTreeMap<String, Spanned<String>>>,
    metric: Option<Vec<Vec<Text>>>,
    #[serde(default)]
    functions: BTreeMap<String, usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstitutive {
    kind: Option<Spanned<String>>,
    #[serde(rename = "F", default)]
    flux: BTreeMap<String, BTreeMap<String, Text>>,
    #[serde(rename = "Pi", default)]
    source: BTreeMap<String, Text>,
    #[serde(rename = "L")]
    lagrangian: Option<Text>,
    #[serde(rename = "D")]
    dissipation: Option<Text>,
    h: Option<BTreeMap<String, Text>>,
    #[serde(default)]
    negated: bool,
    covering: Option<Spanned<String>>,
    connection: Option<BTreeMap<String, BTreeMap<String, Text>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    #[serde(default)]
    args: Vec<String>,
    #[serde(default)]
    functions: Vec<String>,
    components: BTreeMap<String, Text>,
    alpha: Option<BTreeMap<String, Text>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    components: BTreeMap<String, Text>,
    domain: Option<Vec<[f64; 2]>>,
    boundary: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRet {
    mode: Spanned<String>,
    entropy: Option<Vec<Text>>,
    potential: Option<Vec<Text>>,
    source: Option<Vec<Text>>,
    psi: Option<Text>,
    center: Option<Vec<f64>>,
    radius: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    vectors: Vec<Vec<Text>>,
}

/// A named vector field with its optional boundary potential `alpha`.
#[derive(Clone, Debug)]
pub struct NamedField {
    pub field: VectorField,
    pub alpha: Option<Form>,
}

#[derive(Clone, Debug)]
pub struct Section {
    pub components: Vec<Expr>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub boundary: Boundary,
}

impl Section {
    pub fn grid(&self, points: usize) -> Result<Grid, jetbal::balance::BalanceError> {
        Grid::new(self.lower.clone(), self.upper.clone(), vec![points; self.lower.len()], self.boundary)
    }
}

#[derive(Clone, Debug)]
pub struct RetSpec {
    pub system: RetSystem,
    pub psi: Option<Expr>,
    pub sampler: DomainSampler,
}

#[derive(Clone, Debug)]
pub struct SystemFile {
    pub name: String,
    pub context: JetContext,
    pub parameters: BTreeMap<String, f64>,
    pub relation: Option<ConstitutiveRelation>,
    pub covering: Option<CoveringCr>,
    pub connection: Option<Connection>,
    pub fields: BTreeMap<String, NamedField>,
    pub sections: BTreeMap<String, Section>,
    pub ret: Option<RetSpec>,
    pub frame: Option<Frame>,
}

/// Byte offset to 1-based line and column.
fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

struct Loader<'a> {
    src: &'a str,
}

impl Loader<'_> {
    fn invalid<T>(&self, offset: usize, message: impl Into<String>) -> Result<T, LoadError> {
        let (line, column) = position(self.src, offset);
        Err(LoadError::Invalid { line, column, message: message.into() })
    }

    fn expr(&self, ctx: &JetContext, text: &Text) -> Result<Expr, LoadError> {
        ctx.parse(text.get_ref()).or_else(|e| {
            // skip the opening quote
            self.invalid(text.span().start + 1 + e.pos, format!("{}: {}", e.kind, text.get_ref()))
        })
    }

    fn index<T>(&self, what: &str, names: impl Fn(&str) -> Option<T>, key: &str, at: usize) -> Result<T, LoadError> {
        match names(key) {
            Some(v) => Ok(v),
            None => self.invalid(at, format!("unknown {what} `{key}`")),
        }
    }

    fn context(&self, raw: &RawContext, params: &BTreeMap<String, f64>, extra_functions: &[(String, usize)]) -> Result<JetContext, LoadError> {
        let base_index = |s: &str| raw.base.iter().position(|b| b == s);
        let field_index = |s: &str| raw.fields.iter().position(|f| f == s);
        let mut b = ContextBuilder::new(&raw.base, &raw.fields);
        let choices = [raw.kind.is_some(), raw.jets.is_some(), raw.split.is_some()];
        if choices.iter().filter(|c| **c).count() != 1 {
            return Err(LoadError::Missing("[context] needs exactly one of `kind`, `jets`, `split`".into()));
        }
        if let Some(kind) = &raw.kind {
            b = match kind.get_ref().as_str() {
                "full" => b.full(),
                "ret" => b.ret(),
                other => return self.invalid(kind.span().start, format!("unknown context kind `{other}` (full, ret)")),
            };
        }
        if let Some(jets) = &raw.jets {
            let mut pairs = Vec::new();
            for [dir, field] in jets {
                let mu = self.index("base coordinate", base_index, dir.get_ref(), dir.span().start)?;
                let i = self.index("field", field_index, field.get_ref(), field.span().start)?;
                pairs.push((mu, i));
            }
            b = b.pairs(&pairs);
        }
        if let Some(split) = &raw.split {
            let mut classes = vec![Split::Static; raw.fields.len()];
            for (name, value) in split {
                let i = self.index("field", field_index, name, value.span().start)?;
                classes[i] = match Split::parse(value.get_ref()) {
                    Some(s) => s,
                    None => return self.invalid(value.span().start, "split must be one of none, t, x, tx"),
                };
            }
            b = b.split(&classes);
        }
        for p in params.keys() {
            b = b.param(p);
        }
        for (f, k) in raw.functions.iter().map(|(f, k)| (f.clone(), *k)).chain(extra_functions.iter().cloned()) {
            b = b.function(&f, k);
        }
        let plain = b.clone().build().map_err(|e| LoadError::Missing(format!("[context]: {e}")))?;
        if let Some(rows) = &raw.metric {
            let g = rows
                .iter()
                .map(|row| row.iter().map(|t| self.expr(&plain, t)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            return b.metric(g).build().map_err(|e| LoadError::Missing(format!("[context]: {e}")));
        }
        Ok(plain)
    }

    /// `table[field][dir]` into `[i][mu]`, missing entries zero.
    fn matrix(&self, ctx: &JetContext, table: &BTreeMap<String, BTreeMap<String, Text>>) -> Result<Vec<Vec<Expr>>, LoadError> {
        let mut out = vec![vec![Expr::zero(); ctx.base_dim()]; ctx.field_count()];
        for (field, row) in table {
            let at = row.values().next().map_or(0, |t| t.span().start);
            let i = self.index("field", |s| ctx.field_index(s), field, at)?;
            for (dir, text) in row {
                let mu = self.index("base coordinate", |s| ctx.base_index(s), dir, text.span().start)?;
                out[i][mu] = self.expr(ctx, text)?;
            }
        }
        Ok(out)
    }

    fn per_field(&self, ctx: &JetContext, table: &BTreeMap<String, Text>) -> Result<Vec<Expr>, LoadError> {
        let mut out = vec![Expr::zero(); ctx.field_count()];
        for (field, text) in table {
            let i = self.index("field", |s| ctx.field_index(s), field, text.span().start)?;
            out[i] = self.expr(ctx, text)?;
        }
        Ok(out)
    }

    fn per_dir(&self, ctx: &JetContext, table: &BTreeMap<String, Text>) -> Result<Vec<Expr>, LoadError> {
        let mut out = vec![Expr::zero(); ctx.base_dim()];
        for (dir, text) in table {
            let mu = self.index("base coordinate", |s| ctx.base_index(s), dir, text.span().start)?;
            out[mu] = self.expr(ctx, text)?;
        }
        Ok(out)
    }

    fn relation(&self, ctx: &JetContext, raw: &RawConstitutive) -> Result<ConstitutiveRelation, LoadError> {
        let kind = raw.kind.as_ref().map_or("general", |k| k.get_ref().as_str());
        let at = raw.kind.as_ref().map_or(0, |k| k.span().start);
        let need = |t: &Option<Text>, key: &str| -> Result<Expr, LoadError> {
            match t {
                Some(t) => self.expr(ctx, t),
                None => self.invalid(at, format!("kind `{kind}` needs `{key}`")),
            }
        };
        let flux = self.matrix(ctx, &raw.flux)?;
        let source = self.per_field(ctx, &raw.source)?;
        let cr = match kind {
            "general" => ConstitutiveRelation::general(ctx, flux, source),
            "ret" => ConstitutiveRelation::ret(ctx, flux, source),
            "lagrangian" => ConstitutiveRelation::lagrangian(ctx, need(&raw.lagrangian, "L")?),
            "semi-lagrangian" => ConstitutiveRelation::semi_lagrangian(ctx, need(&raw.lagrangian, "L")?, source),
            "l-plus-d" => {
                ConstitutiveRelation::l_plus_d(ctx, need(&raw.lagrangian, "L")?, need(&raw.dissipation, "D")?)
            }
            "vector-potential" => {
                let Some(h) = &raw.h else { return self.invalid(at, "kind `vector-potential` needs `h`") };
                ConstitutiveRelation::vector_potential(ctx, self.per_dir(ctx, h)?, source)
            }
            other => {
                return self.invalid(
                    at,
                    format!("unknown relation kind `{other}` (general, ret, lagrangian, semi-lagrangian, l-plus-d, vector-potential)"),
                )
            }
        };
        let cr = match cr {
            Ok(cr) => cr,
            Err(e) => return self.invalid(at, format!("[constitutive]: {e}")),
        };
        Ok(if raw.negated { cr.negated() } else { cr })
    }

    fn covering(&self, cr: &ConstitutiveRelation, raw: &RawConstitutive) -> Result<Option<CoveringCr>, LoadError> {
        let choice = raw.covering.as_ref().map(|c| (c.get_ref().as_str(), c.span().start));
        match choice {
            Some(("lift", _)) => Ok(Some(CoveringCr::lift(cr))),
            Some(("legendre", at)) => match CoveringCr::legendre(cr) {
                Ok(c) => Ok(Some(c)),
                Err(e) => self.invalid(at, format!("covering: {e}")),
            },
            Some((other, at)) => self.invalid(at, format!("unknown covering `{other}` (lift, legendre)")),
            None if cr.lagrangian_density().is_some() => Ok(CoveringCr::legendre(cr).ok()),
            None => Ok(Some(CoveringCr::lift(cr))),
        }
    }

    fn field(&self, ctx: &JetContext, raw: &RawField) -> Result<NamedField, LoadError> {
        let mut field = VectorField::zero();
        for (key, text) in &raw.components {
            let coord = ctx.parse(key).ok().and_then(|e| e.as_coord());
            let Some(c) = coord.filter(|c| !matches!(c, Coord::Jet2(..))) else {
                return self.invalid(text.span().start, format!("`{key}` is not a coordinate"));
            };
            field.set(c, self.expr(ctx, text)?);
        }
        let alpha = match &raw.alpha {
            None => None,
            Some(table) => {
                let comps = self.per_dir(ctx, table)?;
                let mut form = Form::zero();
                for (mu, a) in comps.iter().enumerate() {
                    form = form + eta_form(ctx, &[mu]).expect("direction in range").scale(a);
                }
                Some(form)
            }
        };
        Ok(NamedField { field, alpha })
    }

    fn section(&self, ctx: &JetContext, raw: &RawSection) -> Result<Section, LoadError> {
        let mut comps: Vec<Option<Expr>> = vec![None; ctx.field_count()];
        for (name, text) in &raw.components {
            let i = self.index("field", |s| ctx.field_index(s), name, text.span().start)?;
            let e = self.expr(ctx, text)?;
            if e.depends_on(&|c| !matches!(c, Coord::Base(_))) {
                return self.invalid(text.span().start, "section components may depend on base coordinates only");
            }
            comps[i] = Some(e);
        }
        let Some(components) = comps.into_iter().collect::<Option<Vec<_>>>() else {
            return Err(LoadError::Missing("a section needs one component per field".into()));
        };
        let n1 = ctx.base_dim();
        let domain = raw.domain.clone().unwrap_or_else(|| vec![[0.0, 1.0]; n1]);
        if domain.len() != n1 {
            return Err(LoadError::Missing(format!("section domain needs {n1} intervals")));
        }
        let boundary = match raw.boundary.as_ref().map(|b| (b.get_ref().as_str(), b.span().start)) {
            None | Some(("one-sided", _)) => Boundary::OneSided,
            Some(("periodic", _)) => Boundary::Periodic,
            Some((other, at)) => return self.invalid(at, format!("unknown boundary `{other}` (periodic, one-sided)")),
        };
        Ok(Section {
            components,
            lower: domain.iter().map(|d| d[0]).collect(),
            upper: domain.iter().map(|d| d[1]).collect(),
            boundary,
        })
    }

    fn list(&self, ctx: &JetContext, items: &[Text]) -> Result<Vec<Expr>, LoadError> {
        items.iter().map(|t| self.expr(ctx, t)).collect()
    }

    fn ret(&self, ctx: &JetContext, raw: &RawRet, cr: Option<&ConstitutiveRelation>) -> Result<RetSpec, LoadError> {
        let at = raw.mode.span().start;
        let fail = |e: jetbal::ret::RetError| self.invalid::<RetSystem>(at, format!("[ret]: {e}"));
        let m = ctx.field_count();
        let (system, psi) = match raw.mode.get_ref().as_str() {
            "primal" => {
                let Some(cr) = cr else { return Err(LoadError::Missing("primal [ret] data need [constitutive]".into())) };
                let Some(entropy) = &raw.entropy else { return self.invalid(at, "primal mode needs `entropy`") };
                let entropy = self.list(ctx, entropy)?;
                let sys = RetSystem::primal(ctx, entropy, cr.fluxes().to_vec(), cr.sources().to_vec());
                (sys.or_else(fail)?, None)
            }
            "dual" => {
                let dual = dual_context(ctx).or_else(|e| self.invalid(at, format!("[ret]: {e}")))?;
                let Some(potential) = &raw.potential else { return self.invalid(at, "dual mode needs `potential`") };
                let potential = self.list(&dual, potential)?;
                let psi = raw.psi.as_ref().map(|p| self.expr(&dual, p)).transpose()?;
                let source = match (&raw.source, &psi) {
                    (Some(s), None) => self.list(&dual, s)?,
                    (None, Some(psi)) => jetbal::ret::gradient_source(psi, m),
                    _ => return self.invalid(at, "dual mode needs exactly one of `source`, `psi`"),
                };
                (RetSystem::dual(&dual, potential, source).or_else(fail)?, psi)
            }
            other => return self.invalid(at, format!("unknown ret mode `{other}` (primal, dual)")),
        };
        let center = raw.center.clone().unwrap_or_else(|| vec![0.0; m]);
        if center.len() != m {
            return self.invalid(at, format!("`center` needs {m} entries"));
        }
        let sampler = DomainSampler::cube(center, raw.radius.unwrap_or(1.0), raw.seed.unwrap_or(0))
            .with_count(raw.samples.unwrap_or(0));
        Ok(RetSpec { system, psi, sampler })
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "system".into(), |s| s.to_string_lossy().into_owned())
}

pub fn load(path: &Path) -> Result<SystemFile, LoadError> {
    let src = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse(&stem(path), &src)
}

pub fn parse(name: &str, src: &str) -> Result<SystemFile, LoadError> {
    let raw: RawFile = toml::from_str(src).map_err(|e| LoadError::Syntax(e.to_string().trim_end().to_string()))?;
    let l = Loader { src };
    let Some(raw_ctx) = &raw.context else { return Err(LoadError::Missing("missing [context] section".into())) };
    let mut extra = Vec::new();
    for f in raw.vectorfields.values() {
        extra.extend(f.functions.iter().map(|name| (name.clone(), f.args.len())));
    }
    let context = l.context(raw_ctx, &raw.parameters, &extra)?;
    let relation = raw.constitutive.as_ref().map(|c| l.relation(&context, c)).transpose()?;
    let covering = match (&relation, &raw.constitutive) {
        (Some(cr), Some(c)) => l.covering(cr, c)?,
        _ => None,
    };
    let connection = match raw.constitutive.as_ref().and_then(|c| c.connection.as_ref()) {
        None => None,
        Some(table) => {
            let comps = l.matrix(&context, table)?;
            Some(Connection::new(&context, comps).map_err(|e| LoadError::Missing(format!("connection: {e}")))?)
        }
    };
    let fields = raw
        .vectorfields
        .iter()
        .map(|(k, f)| Ok((k.clone(), l.field(&context, f)?)))
        .collect::<Result<BTreeMap<_, _>, LoadError>>()?;
    let sections = raw
        .sections
        .iter()
        .map(|(k, s)| Ok((k.clone(), l.section(&context, s)?)))
        .collect::<Result<BTreeMap<_, _>, LoadError>>()?;
    let ret = raw.ret.as_ref().map(|r| l.ret(&context, r, relation.as_ref())).transpose()?;
    let frame = match &raw.frame {
        None => None,
        Some(f) => {
            let vectors = f
                .vectors
                .iter()
                .map(|row| l.list(&context, row))
                .collect::<Result<Vec<_>, _>>()?;
            Some(Frame::new(&context, vectors).map_err(|e| LoadError::Missing(format!("[frame]: {e}")))?)
        }
    };
    Ok(SystemFile {
        name: name.into(),
        context,
        parameters: raw.parameters,
        relation,
        covering,
        connection,
        fields,
        sections,
        ret,
        frame,
    })
}

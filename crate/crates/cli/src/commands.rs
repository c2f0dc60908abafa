//! One function per subcommand, each returning a [`Report`].

use std::collections::BTreeMap;

use jetbal::balance::{
    euler_lagrange, generate, pullback_residuals, routes_agree, verify_section, BalanceSystem, GridSection,
    NumericSection, VerifyOptions,
};
use jetbal::crel::ConstitutiveRelation;
use jetbal::forms::{eta_form, Form, FormsError};
use jetbal::jetspace::{Connection, JetContext};
use jetbal::noether::{
    admissibility_system, classify_symmetry, energy_momentum, energy_momentum_balance, fdiv, noether_balance,
    noether_current, symmetry_system, DeterminingSystem, Marker, Route, SymmetryClass,
};
use jetbal::ret::{
    dual_balance_system, entropy_from_potential, entropy_principle, flux_from_potential, four_potential,
    holonomicity_check, invert_legendre, lagrange_liu_map, primal_holonomicity, radial_monotonicity,
    residual_inequality, ruppeiner_metric, sample_nonnegative, FourPotential, Holonomicity, InequalityReport, RetData,
};
use jetbal::selftest;
use jetbal::symex::{equivalent, Coord, Expr};
use serde_json::{json, Map, Value};

use crate::report::{count, float, floats, short, Report};
use crate::system::{self, NamedField, Section, SystemFile};
use crate::{Cli, CliError, Command, Flags, RouteArg};

pub fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let f = &cli.flags;
    match &cli.command {
        Command::Derive { file } => derive(&system::load(file)?),
        Command::ElCompare { file } => el_compare(&system::load(file)?),
        Command::Admissible { file, field, route } => admissible(&system::load(file)?, field, *route),
        Command::Symmetry { file, field } => symmetry(&system::load(file)?, field),
        Command::Noether { file, field, section, sampled } => {
            noether(&system::load(file)?, f, field, section.as_deref(), *sampled)
        }
        Command::EnergyMomentum { file, section, sampled } => {
            energy(&system::load(file)?, f, section.as_deref(), *sampled)
        }
        Command::Classify { file } => classify(&system::load(file)?, f),
        Command::RetAudit { file } => ret_audit(&system::load(file)?, f),
        Command::Verify { file, section, sampled } => verify(&system::load(file)?, f, section, *sampled),
        Command::FormsSelftest { seed, corrupt_eta } => Ok(forms_selftest(*seed, *corrupt_eta)),
    }
}

fn same(a: &Expr, b: &Expr) -> bool {
    a == b || equivalent(a, b).holds()
}

fn params(file: &SystemFile, flags: &Flags) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = file.parameters.clone();
    for (k, v) in flags.param_overrides()? {
        if !file.context.has_param(&k) {
            return Err(CliError::Usage(format!("unknown parameter `{k}`")));
        }
        out.insert(k, v);
    }
    Ok(out)
}

fn relation(file: &SystemFile) -> Result<&ConstitutiveRelation, CliError> {
    file.relation.as_ref().ok_or_else(|| CliError::Module("system has no [constitutive] section".into()))
}

fn named<'a, T>(what: &str, table: &'a BTreeMap<String, T>, name: &str) -> Result<&'a T, CliError> {
    table.get(name).ok_or_else(|| {
        let known: Vec<&str> = table.keys().map(String::as_str).collect();
        CliError::Usage(format!("no {what} `{name}` (available: {})", known.join(", ")))
    })
}

fn field<'a>(file: &'a SystemFile, name: &str) -> Result<&'a NamedField, CliError> {
    named("vector field", &file.fields, name)
}

fn section<'a>(file: &'a SystemFile, name: &str) -> Result<&'a Section, CliError> {
    named("section", &file.sections, name)
}

fn header(r: &mut Report, file: &SystemFile) {
    let ctx = &file.context;
    let base: Vec<&str> = (0..ctx.base_dim()).map(|mu| ctx.base_name(mu)).collect();
    let fields: Vec<&str> = (0..ctx.field_count()).map(|i| ctx.field_name(i)).collect();
    r.line(format!("system: {} (base {}; fields {})", file.name, base.join(" "), fields.join(" ")));
    r.set("system", file.name.clone());
}

fn field_names(ctx: &JetContext) -> Vec<String> {
    (0..ctx.field_count()).map(|i| ctx.field_name(i).to_string()).collect()
}

fn base_names(ctx: &JetContext) -> Vec<String> {
    (0..ctx.base_dim()).map(|mu| ctx.base_name(mu).to_string()).collect()
}

/// Residual lines `label: expr = 0` plus the JSON object.
fn residuals(r: &mut Report, ctx: &JetContext, labels: &[String], exprs: &[Expr], key: &str) {
    let mut obj = Map::new();
    for (label, e) in labels.iter().zip(exprs) {
        let text = ctx.render(e);
        r.line(format!("  {label}: {text} = 0"));
        obj.insert(label.clone(), text.into());
    }
    r.set(key, Value::Object(obj));
}

fn derive(file: &SystemFile) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let mut r = Report::new("derive");
    header(&mut r, file);
    r.line(format!("relation: {}", cr.kind().name()));
    r.set("kind", cr.kind().name());
    let sys = generate(cr);
    r.line("balance system:");
    residuals(&mut r, ctx, &field_names(ctx), sys.residuals(), "residuals");
    let agree = routes_agree(cr);
    r.line(format!("reduced-horizontal route agrees: {}", yes(agree)));
    r.set("routes_agree", agree);
    r.check(agree);
    if let Some(frame) = &file.frame {
        let holonomic = frame.is_holonomic();
        r.line(format!("frame: {}", if holonomic { "holonomic" } else { "nonholonomic (torsion present)" }));
        r.set("frame_holonomic", holonomic);
    }
    Ok(r)
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn el_compare(file: &SystemFile) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let l = cr.lagrangian_density().ok_or_else(|| CliError::Module("relation has no Lagrangian".into()))?;
    let mut r = Report::new("el-compare");
    header(&mut r, file);
    r.line(format!("L = {}", ctx.render(l)));
    let generated = generate(cr);
    let el = euler_lagrange(ctx, l);
    let mut obj = Map::new();
    for (i, name) in field_names(ctx).into_iter().enumerate() {
        let eq = same(generated.residual(i), el.residual(i));
        r.line(format!("  {name}: {}", if eq { "equal" } else { "DIFFERENT" }));
        if !eq {
            r.line(format!("    generated:      {}", ctx.render(generated.residual(i))));
            r.line(format!("    euler-lagrange: {}", ctx.render(el.residual(i))));
        }
        obj.insert(name, eq.into());
        r.check(eq);
    }
    r.set("equal", Value::Object(obj));
    Ok(r)
}

fn marker(ctx: &JetContext, m: Marker) -> String {
    match m {
        Marker::Free => "free".into(),
        Marker::First { field, dir } => ctx.coord_name(Coord::jet(field, dir)),
        Marker::Second { field, a, b } => ctx.coord_name(Coord::jet2(field, a, b)),
    }
}

fn determining(r: &mut Report, ctx: &JetContext, sys: &DeterminingSystem) {
    let eqs: Vec<_> = sys.nontrivial().collect();
    r.line(format!("determining equations: {}", eqs.len()));
    let mut list = Vec::new();
    for e in eqs {
        let mono: Vec<String> = e.monomial.iter().map(|c| ctx.coord_name(*c)).collect();
        let mono = mono.join("*");
        let at = if mono.is_empty() { marker(ctx, e.marker) } else { format!("{} * {mono}", marker(ctx, e.marker)) };
        let text = ctx.render(&e.expr);
        r.line(format!("  [{at}] {text} = 0"));
        list.push(json!({ "marker": marker(ctx, e.marker), "monomial": mono, "expr": text }));
    }
    r.set("equations", Value::Array(list));
}

fn admissible(file: &SystemFile, name: &str, route: RouteArg) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let xi = &field(file, name)?.field;
    let mut r = Report::new("admissible");
    header(&mut r, file);
    r.line(format!("field {name}: {}", xi.render(ctx)));
    let d = fdiv(cr, xi).map_err(CliError::module)?;
    r.line(format!("FDiv = {}", ctx.render(&d)));
    r.set("fdiv", ctx.render(&d));
    let route = match route {
        RouteArg::Full => Route::Full,
        RouteArg::Admitted => Route::Admitted,
    };
    let sys = admissibility_system(cr, xi, route).map_err(CliError::module)?;
    determining(&mut r, ctx, &sys);
    let ok = sys.is_satisfied();
    r.line(format!("admissible: {}", yes(ok)));
    r.set("admissible", ok);
    r.check(ok);
    Ok(r)
}

fn class_name(c: &SymmetryClass) -> &'static str {
    match c {
        SymmetryClass::Variational => "variational",
        SymmetryClass::Noether(_) => "noether",
        SymmetryClass::Cartan => "cartan",
        SymmetryClass::None => "none",
    }
}

fn symmetry(file: &SystemFile, name: &str) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let nf = field(file, name)?;
    let mut r = Report::new("symmetry");
    header(&mut r, file);
    r.line(format!("field {name}: {}", nf.field.render(ctx)));
    let mut holds = true;
    if nf.field.components().all(|(c, _)| !matches!(c, Coord::Jet(..))) {
        let sys = symmetry_system(cr, &nf.field).map_err(CliError::module)?;
        let mut obj = Map::new();
        r.line("symmetry equations:");
        for (i, row) in sys.flux.iter().enumerate() {
            for (nu, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    let key = format!("E[{},{}]", ctx.field_name(i), ctx.base_name(nu));
                    r.line(format!("  {key}: {} = 0", ctx.render(e)));
                    obj.insert(key, ctx.render(e).into());
                }
            }
        }
        for (k, e) in sys.source.iter().enumerate() {
            if !e.is_zero() {
                let key = format!("S[{}]", ctx.field_name(k));
                r.line(format!("  {key}: {} = 0", ctx.render(e)));
                obj.insert(key, ctx.render(e).into());
            }
        }
        holds = sys.holds();
        r.line(format!("equations hold: {}", yes(holds)));
        r.set("equations", Value::Object(obj));
        r.set("holds", holds);
    }
    let class = match &file.covering {
        Some(ccr) => Some(classify_symmetry(ccr, &nf.field, nf.alpha.as_ref()).map_err(CliError::module)?),
        None => None,
    };
    if let Some(c) = &class {
        r.line(format!("class: {}", class_name(c)));
        r.set("class", class_name(c));
    }
    let ok = holds || class.as_ref().is_some_and(|c| *c != SymmetryClass::None);
    r.check(ok);
    Ok(r)
}

fn section_check(
    r: &mut Report,
    file: &SystemFile,
    flags: &Flags,
    sys: &BalanceSystem,
    labels: &[String],
    name: &str,
    sampled: bool,
) -> Result<(), CliError> {
    let ctx = &file.context;
    let s = section(file, name)?;
    let params = params(file, flags)?;
    let comps: Vec<String> = s.components.iter().map(|e| ctx.render(e)).collect();
    r.line(format!("section {name}: ({})", comps.join(", ")));
    let pulled = pullback_residuals(sys, &s.components).map_err(CliError::module)?;
    let exact = pulled.iter().all(Expr::is_zero);
    r.line("pulled-back residuals:");
    residuals(r, ctx, labels, &pulled, "pullback");
    r.line(format!("identically zero: {}", yes(exact)));
    r.set("pullback_zero", exact);
    let grid = s.grid(flags.grid).map_err(CliError::module)?;
    let opts = VerifyOptions { order: flags.stencil, params: params.clone() };
    let numeric = if sampled {
        NumericSection::Sampled(GridSection::sample(grid, &s.components, &params).map_err(CliError::module)?)
    } else {
        NumericSection::Closed { section: s.components.clone(), grid }
    };
    let rep = verify_section(sys, &numeric, &opts).map_err(CliError::module)?;
    let tol = flags.tol.unwrap_or(if sampled { 1e-3 } else { 1e-8 });
    let mode = if sampled { format!("sampled, stencil order {}", flags.stencil) } else { "exact jets".into() };
    r.line(format!("grid: {} points per axis, {} points, {mode}", flags.grid, rep.points));
    r.line(format!("max |residual|: {} (tol {})", short(rep.max_abs), short(tol)));
    let l2: Vec<String> = rep.l2.iter().map(|v| short(*v)).collect();
    r.line(format!("l2: {}", l2.join(" ")));
    if let Some(e) = rep.error_estimate {
        r.line(format!("stencil error estimate: {}", short(e)));
    }
    let mut obj = Map::new();
    obj.insert("max_abs".into(), float(rep.max_abs));
    obj.insert("l2".into(), floats(&rep.l2));
    obj.insert("points".into(), count(rep.points));
    obj.insert("sampled".into(), sampled.into());
    obj.insert("tol".into(), float(tol));
    obj.insert("error_estimate".into(), rep.error_estimate.map_or(Value::Null, float));
    r.set("grid", Value::Object(obj));
    r.check(rep.max_abs <= tol);
    Ok(())
}

fn noether(
    file: &SystemFile,
    flags: &Flags,
    name: &str,
    sec: Option<&str>,
    sampled: bool,
) -> Result<Report, CliError> {
    let ctx = &file.context;
    let ccr = file.covering.as_ref().ok_or_else(|| CliError::Module("system has no covering relation".into()))?;
    let xi = &field(file, name)?.field;
    let mut r = Report::new("noether");
    header(&mut r, file);
    r.line(format!("field {name}: {}", xi.render(ctx)));
    let current = noether_current(ccr, xi).map_err(CliError::module)?;
    r.line(format!("current: {}", current.render(ctx)));
    r.set("current", current.render(ctx));
    let sys = noether_balance(ccr, xi).map_err(CliError::module)?;
    r.line("balance law:");
    let labels = vec!["noether".to_string()];
    residuals(&mut r, ctx, &labels, sys.residuals(), "residual");
    if let Some(s) = sec {
        section_check(&mut r, file, flags, &sys, &labels, s, sampled)?;
    }
    Ok(r)
}

fn energy(file: &SystemFile, flags: &Flags, sec: Option<&str>, sampled: bool) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let conn = file.connection.clone().unwrap_or_else(|| Connection::flat(ctx));
    let em = energy_momentum(cr, &conn);
    let mut r = Report::new("energy-momentum");
    header(&mut r, file);
    let base = base_names(ctx);
    r.line("tensor T[nu,mu]:");
    let mut tensor = Map::new();
    for (nu, row) in em.tensor.iter().enumerate() {
        for (mu, e) in row.iter().enumerate() {
            let key = format!("T[{},{}]", base[nu], base[mu]);
            r.line(format!("  {key} = {}", ctx.render(e)));
            tensor.insert(key, ctx.render(e).into());
        }
    }
    r.set("tensor", Value::Object(tensor));
    let mut adm = Map::new();
    for (mu, name) in base.iter().enumerate() {
        let ok = em.admissible[mu];
        r.line(format!("direction {name}: condition {} = 0, admissible {}", ctx.render(&em.conditions[mu]), yes(ok)));
        adm.insert(name.clone(), ok.into());
        r.check(ok);
    }
    r.set("admissible", Value::Object(adm));
    let sys = energy_momentum_balance(cr, &conn);
    r.line("balance laws:");
    residuals(&mut r, ctx, &base, sys.residuals(), "residuals");
    if let Some(s) = sec {
        section_check(&mut r, file, flags, &sys, &base, s, sampled)?;
    }
    Ok(r)
}

fn point(ctx: &JetContext, text: Option<&str>) -> Result<BTreeMap<Coord, f64>, CliError> {
    let mut out = BTreeMap::new();
    for (name, v) in crate::parse_bindings(text.unwrap_or(""))? {
        let c = ctx
            .parse(&name)
            .ok()
            .and_then(|e| e.as_coord())
            .ok_or_else(|| CliError::Usage(format!("`{name}` is not a coordinate")))?;
        out.insert(c, v);
    }
    Ok(out)
}

fn classify(file: &SystemFile, flags: &Flags) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let ctx = &file.context;
    let at = point(ctx, flags.at.as_deref())?;
    let idx = jetbal::balance::classify(cr, &at, &params(file, flags)?).map_err(CliError::module)?;
    let mut r = Report::new("classify");
    header(&mut r, file);
    let bound: Vec<String> = at.iter().map(|(c, v)| format!("{}={v}", ctx.coord_name(*c))).collect();
    r.line(format!("at: {}", if bound.is_empty() { "(nothing bound)".into() } else { bound.join(",") }));
    r.line(format!("(h,p,e) = ({},{},{})", idx.hyperbolic, idx.parabolic, idx.stationary));
    r.set("index", json!([count(idx.hyperbolic), count(idx.parabolic), count(idx.stationary)]));
    if let Some(reg) = idx.regular {
        r.line(format!("regular (det A1 != 0): {}", yes(reg)));
        r.set("regular", reg);
    }
    if idx.marginal {
        r.line("warning: a singular value is close to the rank threshold");
    }
    r.set("marginal", idx.marginal);
    Ok(r)
}

fn holonomicity_lines(r: &mut Report, ctx: &JetContext, h: &Holonomicity) {
    match h.witness() {
        None => r.line("holonomicity: pass"),
        Some((mu, i)) => r.line(format!(
            "holonomicity: FAIL at ({}, {}), {} pairs",
            ctx.base_name(mu),
            ctx.field_name(i),
            h.failures.len()
        )),
    }
    r.set("holonomic", h.holds());
}

fn inequality_lines(r: &mut Report, label: &str, key: &str, rep: &InequalityReport) {
    let verdict = if rep.holds() { "pass".to_string() } else { format!("FAIL ({} violations)", rep.violations.len()) };
    r.line(format!("{label}: {verdict}, min {} over {} samples", short(rep.min), rep.samples));
    let mut obj = Map::new();
    obj.insert("holds".into(), rep.holds().into());
    obj.insert("min".into(), float(rep.min));
    obj.insert("argmin".into(), floats(&rep.argmin));
    obj.insert("samples".into(), count(rep.samples));
    obj.insert("violations".into(), count(rep.violations.len()));
    r.set(key, Value::Object(obj));
}

fn matrix_text(ctx: &JetContext, m: &[Vec<Expr>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|row| format!("[{}]", row.iter().map(|e| ctx.render(e)).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn ret_audit(file: &SystemFile, flags: &Flags) -> Result<Report, CliError> {
    let spec = file.ret.as_ref().ok_or_else(|| CliError::Module("system has no [ret] section".into()))?;
    let params = params(file, flags)?;
    let mut r = Report::new("ret-audit");
    header(&mut r, file);
    let sys = &spec.system;
    let ctx = sys.context();
    let m = ctx.field_count();
    let verdict = match sys.data() {
        RetData::Primal(p) => {
            r.set("mode", "primal");
            let points = spec.sampler.points();
            let map = lagrange_liu_map(&p.entropy[0], m, &points, &params).map_err(CliError::module)?;
            let lams: Vec<String> =
                map.lambda.iter().enumerate().map(|(i, l)| format!("lam{} = {}", i + 1, ctx.render(l))).collect();
            r.line(format!("multipliers: {}", lams.join(", ")));
            let conv = &map.convexity;
            let flagged: Vec<_> = conv.flagged().collect();
            if flagged.is_empty() {
                r.line(format!("convexity: sampled negative definite at {} points (not a proof)", conv.samples.len()));
            } else {
                r.line(format!(
                    "convexity: FAIL at {} of {} points, first {:?} at {:?}",
                    flagged.len(),
                    conv.samples.len(),
                    flagged[0].class,
                    flagged[0].point
                ));
            }
            r.set("sampled_definite", conv.sampled_definite());
            r.line(format!("ruppeiner metric: {}", matrix_text(ctx, &ruppeiner_metric(&p.entropy[0], m))));

            let holo = primal_holonomicity(&map.lambda, &p.flux, &p.entropy);
            holonomicity_lines(&mut r, ctx, &holo);
            let dual = jetbal::ret::dual_context(ctx).map_err(CliError::module)?;
            match four_potential(&map.lambda, &p.flux, &p.entropy).map_err(CliError::module)? {
                FourPotential::Symbolic(sp) => {
                    let texts: Vec<String> = sp.potential.iter().map(|e| dual.render(e)).collect();
                    r.line(format!("four-potential: {}", texts.join(", ")));
                    r.line(format!("entropy reconstructed from potential: {}", yes(sp.reconstructs)));
                    r.set("potential", texts);
                    r.check(sp.reconstructs);
                }
                FourPotential::Numeric(_) => {
                    r.line("four-potential: numeric (Newton inverse of the multiplier map)");
                    r.set("potential", "numeric");
                }
            }
            let mut worst: f64 = 0.0;
            let mut inverted = conv.sampled_definite();
            if inverted {
                let guess = spec.sampler.center.clone();
                for u in points.iter().take(100) {
                    let at: BTreeMap<Coord, f64> = u.iter().enumerate().map(|(i, v)| (Coord::fiber(i), *v)).collect();
                    let lam = map.lambda.iter().map(|l| l.eval(&at, &params)).collect::<Result<Vec<_>, _>>();
                    let lam = lam.map_err(CliError::module)?;
                    match invert_legendre(&map.lambda, &lam, &guess, &params) {
                        Ok(inv) => {
                            let err = u.iter().zip(&inv.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                            worst = worst.max(err);
                        }
                        Err(e) => {
                            r.line(format!("legendre inversion: FAIL ({e})"));
                            inverted = false;
                            break;
                        }
                    }
                }
                let tol = flags.tol.unwrap_or(1e-10);
                if inverted {
                    r.line(format!("legendre round-trip max error: {} (tol {})", short(worst), short(tol)));
                    inverted = worst < tol;
                }
                r.set("roundtrip_error", float(worst));
            }
            let sigma = Expr::add_all(map.lambda.iter().zip(&p.source).map(|(l, s)| l * s));
            r.line(format!("production: {}", ctx.render(&sigma)));
            let ineq = sample_nonnegative(&sigma, &spec.sampler, &params).map_err(CliError::module)?;
            inequality_lines(&mut r, "residual inequality", "residual_inequality", &ineq);
            conv.sampled_definite() && inverted && entropy_principle(&holo, &ineq)
        }
        RetData::Dual(d) => {
            r.set("mode", "dual");
            let texts: Vec<String> = d.potential.iter().map(|e| ctx.render(e)).collect();
            r.line(format!("four-potential: {}", texts.join(", ")));
            r.set("potential", texts);
            let flux = flux_from_potential(&d.potential, m);
            let holo = holonomicity_check(&d.potential, &flux);
            holonomicity_lines(&mut r, ctx, &holo);
            let entropy: Vec<String> = entropy_from_potential(&d.potential, m).iter().map(|e| ctx.render(e)).collect();
            r.line(format!("entropy flux: {}", entropy.join(", ")));
            r.line(format!("production: {}", ctx.render(&d.production)));
            let ineq = residual_inequality(&d.source, &spec.sampler, &params).map_err(CliError::module)?;
            inequality_lines(&mut r, "residual inequality", "residual_inequality", &ineq);
            let mut ok = entropy_principle(&holo, &ineq);
            if let Some(psi) = &spec.psi {
                let radial = radial_monotonicity(psi, m, &spec.sampler, &params).map_err(CliError::module)?;
                inequality_lines(&mut r, "radial monotonicity", "radial_monotonicity", &radial);
                ok &= radial.holds();
            }
            let ds = dual_balance_system(ctx, &d.potential, &d.source).map_err(CliError::module)?;
            r.line("dual balance system (symmetric Hessians checked):");
            residuals(&mut r, ctx, &field_names(ctx), ds.system.residuals(), "dual_residuals");
            ok
        }
    };
    r.line(format!("entropy principle: {}", if verdict { "satisfied" } else { "NOT satisfied" }));
    r.set("entropy_principle", verdict);
    r.check(verdict);
    Ok(r)
}

fn verify(file: &SystemFile, flags: &Flags, name: &str, sampled: bool) -> Result<Report, CliError> {
    let cr = relation(file)?;
    let mut r = Report::new("verify");
    header(&mut r, file);
    let sys = generate(cr);
    section_check(&mut r, file, flags, &sys, &field_names(&file.context), name, sampled)?;
    Ok(r)
}

/// Swaps the sign of `eta_{01}` in three dimensions.
fn corrupted_eta(ctx: &JetContext, idx: &[usize]) -> Result<Form, FormsError> {
    let e = eta_form(ctx, idx)?;
    Ok(if ctx.base_dim() == 3 && idx == [0, 1] { -e } else { e })
}

fn forms_selftest(seed: u64, corrupt: bool) -> Report {
    let opts = selftest::Options { seed, ..Default::default() };
    let suites = if corrupt { selftest::run(&opts, &corrupted_eta) } else { selftest::run(&opts, &eta_form) };
    let mut r = Report::new("forms-selftest");
    r.line(format!("seed: {seed}"));
    let mut obj = Map::new();
    for s in &suites {
        let mut line = format!("{}: {}/{}", s.name, s.passed, s.total);
        if let Some(f) = &s.failure {
            line.push_str(&format!(" (first failure: {f})"));
        }
        r.line(line);
        obj.insert(
            s.name.into(),
            json!({ "passed": count(s.passed), "total": count(s.total), "failure": s.failure.clone() }),
        );
        r.check(s.ok());
    }
    r.set("suites", Value::Object(obj));
    r.set("seed", seed.to_string());
    r
}

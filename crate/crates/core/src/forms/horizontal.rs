use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{eta_form, exterior_d, Form, FormsError};
use crate::jetspace::JetContext;
use crate::symex::{Coord, Expr};

/// Which first derivatives a total derivative is allowed to produce.
///
/// `Full` follows a section: every `y^i` picks up its derivative along `mu`,
/// admitted or not. `Reduced` keeps only the admitted pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    #[default]
    Full,
    Reduced,
}

/// Directions along which `y^i` is differentiated in the given mode.
fn y_directions(ctx: &JetContext, i: usize, mode: Mode) -> Vec<usize> {
    match mode {
        Mode::Full => (0..ctx.base_dim()).collect(),
        Mode::Reduced => ctx.directions(i),
    }
}

/// Total derivative `d_mu e`, truncated at second order (second-jet
/// coordinates are treated as constants).
pub fn total_derivative(ctx: &JetContext, mu: usize, e: &Expr, mode: Mode) -> Expr {
    let mut terms = alloc::vec![e.diff(Coord::base(mu))];
    for c in e.coords() {
        match c {
            Coord::Fiber(i) => {
                let i = i as usize;
                let admitted = mode == Mode::Full || ctx.admits(mu, i);
                if admitted {
                    terms.push(Expr::z(i, mu) * e.diff(c));
                }
            }
            Coord::Jet(i, s) => {
                if mode == Mode::Full || ctx.admits(s as usize, i as usize) {
                    terms.push(Expr::z2(i as usize, s as usize, mu) * e.diff(c));
                }
            }
            _ => {}
        }
    }
    Expr::add_all(terms)
}

/// Image of a single differential under the horizontal projection.
fn project_differential(ctx: &JetContext, c: Coord, mode: Mode) -> Form {
    match c {
        Coord::Base(_) => Form::d(c),
        Coord::Fiber(i) => y_directions(ctx, i as usize, mode)
            .into_iter()
            .map(|mu| Form::monomial(Expr::z(i as usize, mu), &[Coord::base(mu)]))
            .sum(),
        Coord::Jet(i, s) => (0..ctx.base_dim())
            .map(|mu| Form::monomial(Expr::z2(i as usize, s as usize, mu), &[Coord::base(mu)]))
            .sum(),
        Coord::Jet2(..) => Form::zero(),
        _ => Form::d(c),
    }
}

/// Apply a differential-by-differential substitution multiplicatively.
fn map_differentials(w: &Form, image: &dyn Fn(Coord) -> Form, coeff: &dyn Fn(&Expr) -> Expr) -> Form {
    let mut out = Form::zero();
    let mut cache: BTreeMap<Coord, Form> = BTreeMap::new();
    for (m, c) in w.terms() {
        let mut acc = Form::scalar(coeff(c));
        for v in m {
            let img = cache.entry(*v).or_insert_with(|| image(*v));
            acc = acc.wedge(img);
            if acc.is_zero() {
                break;
            }
        }
        out = out + acc;
    }
    out
}

/// Horizontal projection `h0`: `dy^i -> y^i_mu dx^mu`, `dz^i_s -> z^i_{s mu} dx^mu`.
pub fn horizontal_projection(ctx: &JetContext, w: &Form, mode: Mode) -> Form {
    map_differentials(w, &|c| project_differential(ctx, c, mode), &|e| e.clone())
}

/// Reduced horizontal differential: `d^(f dc_1 ^ ...) = d_mu f dx^mu ^ dc_1 ^ ...`.
pub fn reduced_horizontal_d(ctx: &JetContext, w: &Form, mode: Mode) -> Form {
    let mut out = Form::zero();
    for (m, c) in w.terms() {
        for mu in 0..ctx.base_dim() {
            let dc = total_derivative(ctx, mu, c, mode);
            let mut mono = Vec::with_capacity(m.len() + 1);
            mono.push(Coord::base(mu));
            mono.extend_from_slice(m);
            out.push(dc, mono);
        }
    }
    out
}

/// Horizontal differential `d_H = dx^mu ^ d_mu`, with `d_mu` also acting on
/// differentials (`d_mu dy^i = dz^i_mu`). Second-jet differentials are
/// truncated.
pub fn horizontal_d(ctx: &JetContext, w: &Form, mode: Mode) -> Form {
    let mut out = Form::zero();
    for mu in 0..ctx.base_dim() {
        let dxmu = Form::dx(mu);
        let mut lie = Form::zero();
        for (m, c) in w.terms() {
            lie.push(total_derivative(ctx, mu, c, mode), m.to_vec());
            for (k, v) in m.iter().enumerate() {
                let moved = match *v {
                    Coord::Fiber(i) if mode == Mode::Full || ctx.admits(mu, i as usize) => Coord::jet(i as usize, mu),
                    Coord::Jet(i, s) if mode == Mode::Full || ctx.admits(s as usize, i as usize) => {
                        Coord::jet2(i as usize, s as usize, mu)
                    }
                    _ => continue,
                };
                let mut mono = m.to_vec();
                mono[k] = moved;
                lie.push(c.clone(), mono);
            }
        }
        out = out + dxmu.wedge(&lie);
    }
    out
}

/// Contact forms `w^i = dy^i - sum_{(mu,i) in P} z^i_mu dx^mu` followed by
/// `w^i_s = dz^i_s - z^i_{s mu} dx^mu` for each admitted `(s, i)`.
pub fn contact_generators(ctx: &JetContext) -> Vec<Form> {
    let mut out = Vec::new();
    for i in 0..ctx.field_count() {
        let mut w = Form::dy(i);
        for mu in ctx.directions(i) {
            w = w - Form::monomial(Expr::z(i, mu), &[Coord::base(mu)]);
        }
        out.push(w);
    }
    for (s, i) in ctx.pairs() {
        let mut w = Form::dz(i, s);
        for mu in 0..ctx.base_dim() {
            w = w - Form::monomial(Expr::z2(i, s, mu), &[Coord::base(mu)]);
        }
        out.push(w);
    }
    out
}

/// Vertical endomorphism applied along `eta`: the `dz^i_mu` component `F`
/// of a 1-form yields `-z^i_mu F eta + F dy^i ^ eta_mu`.
pub fn vertical_endomorphism(ctx: &JetContext, lambda: &Form) -> Result<Form, FormsError> {
    if !ctx.is_full() {
        return Err(FormsError::NotFullJet);
    }
    if lambda.terms().any(|(m, _)| m.len() != 1) {
        return Err(FormsError::NotDegreeOne);
    }
    let eta = eta_form(ctx, &[])?;
    let mut out = Form::zero();
    for (m, f) in lambda.terms() {
        if let Coord::Jet(i, mu) = m[0] {
            let (i, mu) = (i as usize, mu as usize);
            out = out - eta.scale(&(Expr::z(i, mu) * f));
            out = out + Form::dy(i).wedge(&eta_form(ctx, &[mu])?).scale(f);
        }
    }
    Ok(out)
}

/// Pullback by the second jet of a section `y^i = s^i(x)`.
pub fn pullback_section(ctx: &JetContext, w: &Form, s: &[Expr]) -> Result<Form, FormsError> {
    let m = ctx.field_count();
    if s.len() != m {
        return Err(FormsError::SectionLength { got: s.len(), fields: m });
    }
    if s.iter().any(|e| e.depends_on(&|c| !matches!(c, Coord::Base(_)))) {
        return Err(FormsError::SectionNotBasic);
    }
    if w.differentials().iter().any(|c| !matches!(c, Coord::Base(_) | Coord::Fiber(_) | Coord::Jet(..) | Coord::Jet2(..))) {
        return Err(FormsError::DualCoordinate);
    }
    let n1 = ctx.base_dim();
    let value = |c: Coord| -> Expr {
        match c {
            Coord::Fiber(i) => s[i as usize].clone(),
            Coord::Jet(i, a) => s[i as usize].diff(Coord::Base(a)),
            Coord::Jet2(i, a, b) => s[i as usize].diff(Coord::Base(a)).diff(Coord::Base(b)),
            _ => Expr::coord(c),
        }
    };
    let mut bindings = BTreeMap::new();
    for c in w.terms().flat_map(|(m, e)| m.iter().copied().chain(e.coords())).collect::<Vec<_>>() {
        if matches!(c, Coord::Fiber(_) | Coord::Jet(..) | Coord::Jet2(..)) {
            bindings.insert(c, value(c));
        }
    }
    let image = |c: Coord| -> Form {
        if let Coord::Base(_) = c {
            return Form::d(c);
        }
        let v = value(c);
        (0..n1).map(|mu| Form::monomial(v.diff(Coord::base(mu)), &[Coord::base(mu)])).sum()
    };
    Ok(map_differentials(w, &image, &|e| e.substitute(&bindings)))
}

/// Pullback along a coordinate map: each coordinate `c` in `images` is replaced
/// by its image, `dc` by the differential of that image.
pub fn pullback(w: &Form, images: &BTreeMap<Coord, Expr>) -> Form {
    let image = |c: Coord| match images.get(&c) {
        Some(e) => exterior_d(&Form::scalar(e.clone())),
        None => Form::d(c),
    };
    map_differentials(w, &image, &|e| e.substitute(images))
}

//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use jetbal::balance::{
    classify, euler_lagrange, generate, pullback_residuals, routes_agree, GridSection, NumericSection, VerifyOptions,
};
use jetbal::crel::{theta_pc, ConstitutiveRelation};
use jetbal::forms::{eta_form, Form, VectorField};
use jetbal::jetspace::{ContextBuilder, JetContext};
use jetbal::noether::{admissibility_system, fdiv, fdiv_frozen, noether_residual, Marker, Route};
use jetbal::ret::{
    dual_balance_system, dual_context, flux_from_potential, gradient_source, holonomicity_check, invert_legendre,
    lagrange_liu_map, residual_inequality, DomainSampler, RetData, MIN_SAMPLES,
};
use jetbal::selftest::{self, Suite};
use jetbal::symex::{equivalent, Coord, Expr};
use jetbal_cli::system::{self, SystemFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn shipped(name: &str) -> SystemFile {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "systems", name].iter().collect();
    system::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn same(a: &Expr, b: &Expr) -> bool {
    a == b || equivalent(a, b).holds()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, || format!("took {t:.2?}, limit {limit:?}"))
}

fn vertical(comps: &[Expr]) -> VectorField {
    VectorField::from_components(comps.iter().enumerate().map(|(i, e)| (Coord::fiber(i), e.clone())))
}

fn coeff(rng: &mut ChaCha8Rng) -> Expr {
    Expr::frac(rng.gen_range(-5..=5), rng.gen_range(1..=3))
}

fn monomial(rng: &mut ChaCha8Rng, vars: &[Expr], max_deg: usize) -> Expr {
    (0..rng.gen_range(0..=max_deg)).fold(Expr::one(), |acc, _| acc * vars[rng.gen_range(0..vars.len())].clone())
}

fn burgers() -> Outcome {
    let start = Instant::now();
    let file = shipped("burgers.sys");
    let cr = file.relation.as_ref().ok_or("no relation")?;
    let sys = generate(cr);
    let expected = Expr::z(0, 0) + Expr::y(0) * Expr::z(0, 1) - Expr::param("delta") * Expr::z2(0, 1, 1);
    ensure(sys.residual(0) == &expected, || format!("got {}", file.context.render(sys.residual(0))))?;
    ensure(routes_agree(cr), || "routes disagree".into())?;
    within(start, Duration::from_secs(1))?;
    Ok(file.context.render(&expected))
}

fn sine_gordon() -> Outcome {
    let start = Instant::now();
    let file = shipped("sinegordon.sys");
    let ctx = &file.context;
    let sys = generate(file.relation.as_ref().ok_or("no relation")?);
    let honest = Expr::z2(0, 0, 1) - Expr::sin(Expr::y(0)) * Expr::z(0, 1);
    ensure(sys.residual(0) == &honest, || format!("got {}", ctx.render(sys.residual(0))))?;

    let generic = Expr::exp(Expr::x(0)) * Expr::sin(Expr::x(1)) + Expr::x(1).powi(2);
    let pulled = pullback_residuals(&sys, &[generic.clone()]).map_err(|e| e.to_string())?;
    let sx = generic.diff(Coord::base(1));
    let target = generic.diff(Coord::base(0)).diff(Coord::base(1)) - Expr::sin(generic.clone()) * sx;
    ensure(pulled[0] == target, || format!("generic section gives {}", ctx.render(&pulled[0])))?;

    // charts with s_x = 1 give the textbook form
    let chart = Expr::x(1) + Expr::x(0).powi(3) * Expr::int(2);
    let pulled = pullback_residuals(&sys, &[chart.clone()]).map_err(|e| e.to_string())?;
    let textbook = chart.diff(Coord::base(0)).diff(Coord::base(1)) - Expr::sin(chart);
    ensure(pulled[0] == textbook, || format!("chart section gives {}", ctx.render(&pulled[0])))?;
    within(start, Duration::from_secs(1))?;
    Ok(ctx.render(&honest))
}

fn euler_lagrange_equivalence() -> Outcome {
    let start = Instant::now();
    let ctx = ContextBuilder::new(&["t", "x"], &["u", "v"]).full().build().map_err(|e| e.to_string())?;
    let fields: Vec<Expr> = (0..2).map(Expr::y).chain((0..2).map(Expr::x)).collect();
    let jets: Vec<Expr> = ctx.pairs().map(|(mu, i)| Expr::z(i, mu)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..50 {
        let terms: Vec<Expr> = (0..4)
            .map(|_| coeff(&mut rng) * monomial(&mut rng, &fields, 3) * monomial(&mut rng, &jets, 2))
            .collect();
        let l = Expr::add_all(terms);
        let cr = ConstitutiveRelation::lagrangian(&ctx, l.clone()).map_err(|e| e.to_string())?;
        let generated = generate(&cr);
        let el = euler_lagrange(&ctx, &l);
        ensure(generated.residuals() == el.residuals(), || format!("lagrangian {k}: {}", ctx.render(&l)))?;
    }
    within(start, Duration::from_secs(10))?;
    Ok("50 random Lagrangians".into())
}

fn suites(all: &[Suite], names: &[&str]) -> Outcome {
    let mut parts = Vec::new();
    for name in names {
        let s = all.iter().find(|s| s.name == *name).ok_or_else(|| format!("suite `{name}` missing"))?;
        if !s.ok() {
            return Err(format!("{}: {}/{} ({})", s.name, s.passed, s.total, s.failure.clone().unwrap_or_default()));
        }
        parts.push(format!("{} {}/{}", s.name, s.passed, s.total));
    }
    Ok(parts.join("; "))
}

fn wave_noether() -> Outcome {
    let file = shipped("wave.sys");
    let ccr = file.covering.as_ref().ok_or("no covering")?;
    let xi = &file.fields.get("shift").ok_or("no shift field")?.field;
    let section = file.sections.get("travelling").ok_or("no section")?;
    let opts = VerifyOptions::default();
    let exact = NumericSection::Closed { section: section.components.clone(), grid: section.grid(16).map_err(|e| e.to_string())? };
    let closed = noether_residual(ccr, xi, &exact, &opts).map_err(|e| e.to_string())?;
    ensure(closed.max_abs == 0.0, || format!("closed form residual {}", closed.max_abs))?;
    let run = |n: usize| -> Result<f64, String> {
        let grid = section.grid(n).map_err(|e| e.to_string())?;
        let sampled = GridSection::sample(grid, &section.components, &BTreeMap::new()).map_err(|e| e.to_string())?;
        let rep = noether_residual(ccr, xi, &NumericSection::Sampled(sampled), &opts).map_err(|e| e.to_string())?;
        Ok(rep.max_abs)
    };
    let (coarse, fine) = (run(64)?, run(128)?);
    ensure(fine <= 1e-3, || format!("max deviation {fine:.3e} on 128^2"))?;
    let ratio = coarse / fine;
    ensure((3.6..4.4).contains(&ratio), || format!("refinement ratio {ratio:.3}"))?;
    Ok(format!("exact 0; 128^2 max {fine:.3e}; ratio {ratio:.2}"))
}

fn admissibility() -> Outcome {
    // two-field RET ansatz with generic fluxes
    let ctx = ContextBuilder::new(&["t", "x"], &["u", "v"]).full().build().map_err(|e| e.to_string())?;
    let args = vec![Expr::x(0), Expr::x(1), Expr::y(0), Expr::y(1)];
    let f = |mu: usize, i: usize| Expr::applied(&format!("F{mu}{i}"), args.clone());
    let flux = (0..2).map(|i| (0..2).map(|mu| f(mu, i)).collect()).collect();
    let cr = ConstitutiveRelation::general(&ctx, flux, vec![Expr::zero(); 2]).map_err(|e| e.to_string())?;
    let xi: Vec<Expr> = (0..2).map(|i| Expr::applied(&format!("xi{i}"), args.clone())).collect();
    let sys = admissibility_system(&cr, &vertical(&xi), Route::Full).map_err(|e| e.to_string())?;
    for mu in 0..2 {
        for k in 0..2 {
            let expected = f(mu, 0) * xi[0].diff(Coord::fiber(k)) + f(mu, 1) * xi[1].diff(Coord::fiber(k));
            ensure(sys.get(Marker::First { field: k, dir: mu }) == Some(&expected), || format!("RET z^{k}_{mu} equation"))?;
        }
    }
    let transport =
        Expr::add_all((0..2).map(|i| f(0, i) * xi[i].diff(Coord::base(0)) + f(1, i) * xi[i].diff(Coord::base(1))));
    ensure(sys.get(Marker::Free) == Some(&transport), || "RET transport equation".into())?;
    ensure(sys.equations.len() == 5, || format!("RET system has {} equations", sys.equations.len()))?;

    // 5F fluid vertical ansatz
    let file = shipped("fluid5f.sys");
    let fctx = &file.context;
    let fluid = file.relation.as_ref().ok_or("no relation")?;
    let mut fargs: Vec<Expr> = (0..4).map(Expr::x).collect();
    fargs.extend((0..5).map(Expr::y));
    let fxi: Vec<Expr> = ["xr", "xv1", "xv2", "xv3", "xth"].iter().map(|n| Expr::applied(n, fargs.clone())).collect();
    let fsys = admissibility_system(fluid, &vertical(&fxi), Route::Admitted).map_err(|e| e.to_string())?;
    let state = |n: &str| Expr::applied(n, vec![Expr::y(0), Expr::y(4)]);
    let div = Expr::add_all((1..=3).map(|c| Expr::z(c, c)));
    let stress = |b: usize, a: usize| {
        let mut t = state("mu") * (Expr::z(b, a) + Expr::z(a, b));
        if a == b {
            t = t - state("pr") + state("nu") * div.clone();
        }
        t
    };
    let q = |a: usize| -(state("kappa") * Expr::z(4, a));
    let family = |a: usize, d: &dyn Fn(&Expr) -> Expr| {
        let lhs = Expr::add_all((1..=3).map(|b| Expr::y(0) * Expr::y(a) * Expr::y(b) * d(&fxi[b])))
            + Expr::y(0) * state("eps") * Expr::y(a) * d(&fxi[4]);
        let rhs = Expr::add_all((1..=3).map(|b| stress(a, b) * d(&fxi[b]))) - q(a) * d(&fxi[4]);
        lhs - rhs
    };
    for a in 1..=3 {
        for i in 0..5 {
            let got = fsys.get(Marker::First { field: i, dir: a }).ok_or_else(|| format!("fluid z^{i}_{a} missing"))?;
            let want = family(a, &|e: &Expr| e.diff(Coord::fiber(i)));
            ensure(same(got, &want), || format!("fluid z^{i}_{a}: {}", fctx.render(got)))?;
        }
    }
    let free = Expr::add_all((1..=3).map(|a| family(a, &|e: &Expr| e.diff(Coord::base(a)))));
    ensure(fsys.get(Marker::Free).is_some_and(|g| same(g, &free)), || "fluid free equation".into())?;

    // constant fields
    let consts = vertical(&[Expr::int(1), Expr::int(2), Expr::frac(1, 3), Expr::zero(), Expr::int(-4)]);
    ensure(fdiv(fluid, &consts).map_err(|e| e.to_string())?.is_zero(), || "constant field has FDiv != 0".into())?;

    // bracket non-closure
    let bctx = ContextBuilder::new(&["t", "x"], &["y"]).full().param("c").build().map_err(|e| e.to_string())?;
    let c = Expr::param("c");
    let bcr = ConstitutiveRelation::general(&bctx, vec![vec![Expr::y(0), c.clone()]], vec![Expr::zero()])
        .map_err(|e| e.to_string())?;
    let arg = Expr::x(1) - &c * Expr::x(0) * Expr::y(0).recip();
    let dy = VectorField::coordinate(Coord::fiber(0));
    let (x1, x2) = (dy.scale(&Expr::sin(arg.clone())), dy.scale(&arg.powi(3)));
    for x in [&x1, &x2] {
        ensure(fdiv_frozen(&bcr, x).map_err(|e| e.to_string())?.is_zero(), || "bracket factor not admissible".into())?;
    }
    let defect = fdiv_frozen(&bcr, &x1.bracket(&x2)).map_err(|e| e.to_string())?;
    ensure(!same(&defect, &Expr::zero()), || "bracket is admissible".into())?;
    Ok(format!("RET 5 equations; fluid {} equations; bracket defect nonzero", fsys.equations.len()))
}

fn classification() -> Outcome {
    let file = shipped("burgers.sys");
    let cr = file.relation.as_ref().ok_or("no relation")?;
    let at: BTreeMap<Coord, f64> = [(Coord::fiber(0), 1.0)].into();
    let t = classify(cr, &at, &file.parameters).map_err(|e| e.to_string())?;
    ensure((t.hyperbolic, t.parabolic, t.stationary) == (0, 1, 0), || format!("Burgers {:?}", t))?;

    let two = ContextBuilder::new(&["t", "x"], &["u", "v"]).full().build().map_err(|e| e.to_string())?;
    let mixed = ConstitutiveRelation::general(
        &two,
        vec![vec![Expr::z(0, 0), Expr::zero()], vec![Expr::y(1), Expr::zero()]],
        vec![Expr::zero(); 2],
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let point = |ctx: &JetContext, rng: &mut ChaCha8Rng| -> BTreeMap<Coord, f64> {
        ctx.coordinates().into_iter().map(|c| (c, rng.gen_range(-1.0..1.0))).collect()
    };
    let t = classify(&mixed, &point(&two, &mut rng), &BTreeMap::new()).map_err(|e| e.to_string())?;
    ensure((t.hyperbolic, t.parabolic, t.stationary) == (1, 1, 0), || format!("mixed {:?}", t))?;

    let three = ContextBuilder::new(&["t", "x"], &["u", "v", "w"]).full().build().map_err(|e| e.to_string())?;
    let ys: Vec<Expr> = (0..3).map(Expr::y).collect();
    let zt: Vec<Expr> = (0..3).map(|i| Expr::z(i, 0)).collect();
    for k in 0..50 {
        let flux = (0..3)
            .map(|i| {
                let f0 = match (k + i) % 3 {
                    0 => coeff(&mut rng) * monomial(&mut rng, &ys, 2) + coeff(&mut rng) * Expr::y(i),
                    1 => coeff(&mut rng) * zt[rng.gen_range(0..3)].clone() * monomial(&mut rng, &ys, 1),
                    _ => Expr::zero(),
                };
                vec![f0, coeff(&mut rng) * monomial(&mut rng, &ys, 2)]
            })
            .collect();
        let cr = ConstitutiveRelation::general(&three, flux, vec![Expr::zero(); 3]).map_err(|e| e.to_string())?;
        let t = classify(&cr, &point(&three, &mut rng), &BTreeMap::new()).map_err(|e| e.to_string())?;
        ensure(t.hyperbolic + t.parabolic + t.stationary == 3, || format!("random CR {k}: {:?}", t))?;
    }
    Ok("Burgers (0,1,0); mixed (1,1,0); 50 random sums".into())
}

fn ret_audit() -> Outcome {
    // potentials generate holonomic systems
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let lams: Vec<Expr> = (0..3).map(Expr::y).collect();
    for k in 0..20 {
        let potential: Vec<Expr> = (0..2)
            .map(|_| Expr::add_all((0..4).map(|_| coeff(&mut rng) * monomial(&mut rng, &lams, 4))))
            .collect();
        let flux = flux_from_potential(&potential, 3);
        ensure(holonomicity_check(&potential, &flux).holds(), || format!("potential {k} not holonomic"))?;
    }

    // gradient source of |lam|^4 / 4
    let file = shipped("ret_demo.sys");
    let spec = file.ret.as_ref().ok_or("no [ret]")?;
    let RetData::Dual(d) = spec.system.data() else { return Err("ret_demo is not dual".into()) };
    let psi = spec.psi.as_ref().ok_or("no psi")?;
    let norm_sq = Expr::y(0).powi(2) + Expr::y(1).powi(2);
    ensure(same(psi, &(norm_sq.powi(2) * Expr::frac(1, 4))), || "psi is not |lam|^4/4".into())?;
    ensure(d.source == gradient_source(psi, 2), || "source is not grad psi".into())?;
    let sampler = DomainSampler::cube(vec![0.0, 0.0], 2.0, 5);
    let ineq = residual_inequality(&d.source, &sampler, &BTreeMap::new()).map_err(|e| e.to_string())?;
    ensure(ineq.holds() && ineq.samples >= MIN_SAMPLES, || format!("inequality min {}", ineq.min))?;

    // strictly concave quartic
    let m = 3;
    let us: Vec<Expr> = (0..m).map(Expr::y).collect();
    let h0 = -(Expr::add_all(us.iter().map(|u| u.powi(2))) * Expr::frac(1, 2))
        - Expr::add_all(us.iter().map(|u| u.powi(4))) * Expr::frac(1, 4);
    let map = lagrange_liu_map(&h0, m, &[], &BTreeMap::new()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u: Vec<f64> = (0..m).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lam: Vec<f64> = u.iter().map(|v| -v - v.powi(3)).collect();
        let inv = invert_legendre(&map.lambda, &lam, &vec![0.0; m], &BTreeMap::new()).map_err(|e| e.to_string())?;
        worst = u.iter().zip(&inv.u).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    ensure(worst < 1e-10, || format!("round-trip error {worst:.3e}"))?;

    // dual matrices are symmetric
    let ctx = ContextBuilder::new(&["t", "x"], &["a", "b", "c"]).ret().build().map_err(|e| e.to_string())?;
    let dual = dual_context(&ctx).map_err(|e| e.to_string())?;
    for k in 0..20 {
        let potential: Vec<Expr> = (0..2)
            .map(|_| Expr::add_all((0..4).map(|_| coeff(&mut rng) * monomial(&mut rng, &lams, 3))))
            .collect();
        let ds = dual_balance_system(&dual, &potential, &[Expr::y(0), Expr::zero(), Expr::y(2)])
            .map_err(|e| format!("potential {k}: {e}"))?;
        for a in &ds.matrices {
            for i in 0..3 {
                for j in 0..3 {
                    ensure(a[i][j] == a[j][i], || format!("potential {k}: entry ({i},{j})"))?;
                }
            }
        }
    }
    Ok(format!("holonomic 20/20; inequality min {:.3e} over {}; round-trip {worst:.1e}", ineq.min, ineq.samples))
}

fn fluid() -> Outcome {
    let file = shipped("fluid5f.sys");
    let ctx = &file.context;
    let cr = file.relation.as_ref().ok_or("no relation")?;
    let p = |s: &str| ctx.parse(s).map_err(|e| format!("{s}: {e:?}"));
    let continuity = p("d(rho;t) + d(rho;x1)*v1 + rho*d(v1,x1) + d(rho;x2)*v2 + rho*d(v2,x2) + d(rho;x3)*v3 + rho*d(v3,x3)")?;
    let sys = generate(cr);
    ensure(sys.residual(0) == &continuity, || format!("mass balance {}", ctx.render(sys.residual(0))))?;

    // Poincare-Cartan form, one display term at a time
    let eta = |mu: usize| eta_form(ctx, &[mu]).expect("direction");
    let vol = eta_form(ctx, &[]).expect("volume");
    let term = |i: usize, w: &Form, c: &str| -> Result<Form, String> { Ok(Form::dy(i).wedge(w).scale(&p(c)?)) };
    let stress = |b: usize, a: usize| {
        let mut s = format!("mu(rho,theta)*(d(v{b},x{a}) + d(v{a},x{b}))");
        if a == b {
            s.push_str(" - pr(rho,theta) + nu(rho,theta)*(d(v1,x1) + d(v2,x2) + d(v3,x3))");
        }
        s
    };
    let mut alpha = Vec::new();
    alpha.push(term(0, &eta(0), "rho")?);
    for b in 1..=3 {
        alpha.push(term(0, &eta(b), &format!("rho*v{b}"))?);
    }
    for a in 1..=3 {
        alpha.push(term(a, &eta(0), &format!("rho*v{a}"))?);
        for b in 1..=3 {
            alpha.push(term(a, &eta(b), &format!("rho*v{a}*v{b} - ({})", stress(a, b)))?);
        }
    }
    alpha.push(term(4, &eta(0), "rho*eps(rho,theta)")?);
    for b in 1..=3 {
        alpha.push(term(4, &eta(b), &format!("rho*eps(rho,theta)*v{b} - kappa(rho,theta)*d(theta,x{b})"))?);
    }
    let mut beta = Vec::new();
    for a in 1..=3 {
        beta.push(term(a, &vol, &format!("rho*f{a}"))?);
    }
    let power: Vec<String> =
        (1..=3).flat_map(|a| (1..=3).map(move |b| (a, b))).map(|(a, b)| format!("({})*d(v{b},x{a})", stress(b, a))).collect();
    beta.push(term(4, &vol, &format!("{} + r", power.join(" + ")))?);

    let theta = theta_pc(cr, None);
    let (alpha, beta): (Form, Form) = (alpha.into_iter().sum(), beta.into_iter().sum());
    for (got, want, part) in [(theta.alpha(), &alpha, "flux"), (theta.beta(), &beta, "source")] {
        for (diffs, c) in want.terms() {
            ensure(same(&got.coefficient(diffs), c), || format!("{part} term {diffs:?}"))?;
        }
        ensure(got.len() == want.len(), || format!("{part} part has {} terms, expected {}", got.len(), want.len()))?;
    }
    Ok(format!("continuity exact; {} flux and {} source terms", alpha.len(), beta.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let opts = selftest::Options::default();
    let all = selftest::run(&opts, &eta_form);
    let selftest_time = start.elapsed();
    let timed = |r: Outcome| -> Outcome {
        let r = r?;
        ensure(selftest_time <= Duration::from_secs(30), || format!("selftest took {selftest_time:.2?}"))?;
        Ok(format!("{r} (all suites {selftest_time:.2?})"))
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("Burgers balance law", Box::new(burgers)),
        ("sine-Gordon", Box::new(sine_gordon)),
        ("Euler-Lagrange equivalence", Box::new(euler_lagrange_equivalence)),
        (
            "differential laws",
            Box::new(|| timed(suites(&all, &["d^2 = 0", "dhat^2 = 0", "dtilde^2 = 0", "h0(dhat - d) = 0"]))),
        ),
        ("eta table", Box::new(|| suites(&all, &["eta table"]))),
        (
            "prolongation homomorphism",
            Box::new(|| suites(&all, &["prolongation homomorphism", "torsion-free frame prolongation"])),
        ),
        ("dual-bundle lifts", Box::new(|| suites(&all, &["momentum lift", "source lift"]))),
        ("wave Noether residual", Box::new(wave_noether)),
        ("admissibility splits", Box::new(admissibility)),
        ("classification", Box::new(classification)),
        ("RET audit", Box::new(ret_audit)),
        ("5F fluid", Box::new(fluid)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.2?}]: {detail}", k + 1, t.elapsed());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

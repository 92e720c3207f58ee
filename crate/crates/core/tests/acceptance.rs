//! Acceptance run: each criterion is checked directly against closed-form
//! oracles written out here, and must also pass in the `verify` suite.
//! Prints one PASS/FAIL line per criterion; exits nonzero on any FAIL.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

use ves_core::algebra::{homogeneity_check, AlgebraElement, AlgebraSection, EllipticStructure, Fiber};
use ves_core::burgers::{burgers_field, BurgersOptions, ExprSeed, Seed};
use ves_core::canonical::{build_chart, injectivity_scan, invert_xi, jacobian_check, InjectivityVerdict, NewtonOptions};
use ves_core::numerics::{nested_convergence_study, study_base, ConvergenceReport};
use ves_core::poincare::{cayley, cayley_inv_point, cayley_point, self_dilatation_residual, xi_disk_form};
use ves_core::seedlang::Params;
use ves_core::spectral::{intertwining_residual_field, lambda_from_structure, rigidity_tolerance, transport_residual};
use ves_core::vekua::{
    coefficient_bound_report, reduce, reduced_residual_field, sample_expression, PassengerField, PassengerKind,
    VekuaProblem,
};
use ves_core::verify::{run_suite, Fault, VerifyConfig, VerifyReport};
use ves_core::{ComplexGridField, Error, GridSpec, Result, StencilOrder};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ORDER: StencilOrder = StencilOrder::Second;
const DELTAS: [f64; 3] = [1.0, 0.1, 0.01];

fn default_grid() -> GridSpec {
    GridSpec::new(-0.5, 2.0, -1.0, 1.0, 201, 201).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Failure notes for one criterion; empty means PASS.
type Notes = Vec<String>;

type Criterion = fn(&mut Notes) -> Result<()>;

fn expect(notes: &mut Notes, ok: bool, what: impl FnOnce() -> String) {
    if !ok {
        notes.push(what());
    }
}

fn order_ok(notes: &mut Notes, name: &str, report: Result<ConvergenceReport>) {
    match report {
        Ok(r) => {
            let rounding = r.samples.iter().all(|s| s.1 <= 1e-12);
            expect(notes, rounding || r.order.is_some_and(|p| (1.8..=2.2).contains(&p)), || {
                format!("{name}: order {:?}, samples {:?}", r.order, r.samples)
            });
        }
        Err(e) => notes.push(format!("{name}: {e}")),
    }
}

fn delta_exact(delta: f64, x: f64, y: f64) -> (Complex64, Complex64, Complex64, f64) {
    let s = 1.0 + x;
    let lambda = (y + I * delta) / s;
    let xi = (y - I * delta * x) / s;
    let phi = 2.0 * I * delta / (s * s);
    let det = delta / (s * s * s);
    (lambda, xi, phi, det)
}

fn criterion_1(notes: &mut Notes) -> Result<()> {
    let grid = default_grid();
    let mut rng = StdRng::seed_from_u64(1);
    for delta in DELTAS {
        let l = lambda_from_structure(&EllipticStructure::delta_family(delta)?.sample(&grid)?)?;
        let chart = build_chart(&l, ORDER)?;
        let (mut e_l, mut e_xi, mut e_phi, mut e_det) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for k in 0..grid.len() {
            let (x, y) = grid.point(k);
            let (lambda, xi, phi, det) = delta_exact(delta, x, y);
            e_l = e_l.max(rel(l.lambda().values()[k], lambda));
            e_xi = e_xi.max(rel(chart.xi.values()[k], xi));
            if chart.phi.mask()[k] {
                e_phi = e_phi.max(rel(chart.phi.values()[k], phi));
                e_det = e_det.max((chart.jac_det.values()[k] - det).abs() / det.abs().max(1.0));
            }
        }
        expect(notes, e_l <= 1e-12, || format!("δ={delta}: λ off by {e_l:e}"));
        expect(notes, e_xi <= 1e-12, || format!("δ={delta}: ξ off by {e_xi:e}"));
        expect(notes, e_phi <= 1e-10, || format!("δ={delta}: Φ off by {e_phi:e}"));
        expect(notes, e_det <= 1e-10, || format!("δ={delta}: det off by {e_det:e}"));

        // Inverse: x = −q/(δ+q), y = pδ/(δ+q).
        let st = EllipticStructure::delta_family(delta)?;
        let mut e_inv = 0.0f64;
        for _ in 0..200 {
            let (x, y) = (rng.gen_range(-0.5..2.0), rng.gen_range(-1.0..1.0));
            let (_, xi, _, _) = delta_exact(delta, x, y);
            let (p, q) = (xi.re, xi.im);
            let (ex, ey) = (-q / (delta + q), p * delta / (delta + q));
            let inv = invert_xi(&st, xi, (0.0, 0.0), NewtonOptions::default())?;
            e_inv = e_inv
                .max((inv.x - ex).abs() / ex.abs().max(1.0))
                .max((inv.y - ey).abs() / ey.abs().max(1.0));
        }
        expect(notes, e_inv <= 1e-10, || format!("δ={delta}: inversion off by {e_inv:e}"));
    }
    Ok(())
}

fn criterion_2(notes: &mut Notes) -> Result<()> {
    let base = default_grid();
    // Same spacing, extended left past the fold at x = −1.
    let grid = GridSpec::new(-1.5, 2.0, -1.0, 1.0, 281, 201)?;
    assert_eq!(grid.hx(), base.hx());
    for delta in DELTAS {
        let mut p = Params::new();
        p.insert("delta".into(), Complex64::new(delta, 0.0));
        let seed = ExprSeed::new("w + delta*1i", &p)?;
        let sol = burgers_field(&seed, &grid, &BurgersOptions::default())?;
        let mut worst = 0.0f64;
        for k in (0..grid.len()).filter(|&k| sol.lambda.mask()[k]) {
            let (x, y) = grid.point(k);
            worst = worst.max(rel(sol.lambda.values()[k], delta_exact(delta, x, y).0));
        }
        expect(notes, worst <= 1e-10, || format!("δ={delta}: λ off by {worst:e}"));
        let cert = sol.self_certification(&seed)?;
        expect(notes, cert <= 1e-12, || format!("δ={delta}: |λ − h(y − λx)| = {cert:e}"));
        for (j, b) in sol.left_boundary().into_iter().enumerate() {
            let ok = b.is_some_and(|b| (b + 1.0).abs() <= grid.hx() * (1.0 + 1e-9));
            expect(notes, ok, || format!("δ={delta}: row {j} starts at {b:?}"));
        }
    }
    Ok(())
}

fn shear() -> EllipticStructure {
    EllipticStructure::custom_lambda("x + i", &Params::new()).unwrap()
}

fn criterion_3(notes: &mut Notes) -> Result<()> {
    let base = study_base(&default_grid(), 3)?;
    let mut cases: Vec<(String, EllipticStructure)> = vec![("shear".into(), shear())];
    for d in DELTAS {
        cases.push((format!("δ={d}"), EllipticStructure::delta_family(d)?));
    }
    for (tag, st) in cases {
        let study = nested_convergence_study(&base, 3, |g| {
            let s = Arc::new(st.sample(g)?);
            let w = AlgebraSection::from_fn(s, |x, y| (x * x - y * (2.0 * x).cos(), (y + x).exp() * 0.5))?;
            intertwining_residual_field(&w, ORDER)
        });
        order_ok(notes, &tag, study);
    }
    Ok(())
}

fn criterion_4(notes: &mut Notes) -> Result<()> {
    let grid = default_grid();
    let tol = rigidity_tolerance(&grid);
    let mut cases = vec![("constant".to_string(), EllipticStructure::constant(2.0, 1.0)?, true)];
    for d in DELTAS {
        cases.push((format!("δ={d}"), EllipticStructure::delta_family(d)?, true));
    }
    cases.push(("shear".into(), shear(), false));
    for (tag, st, rigid) in cases {
        let sampled = st.sample(&grid)?;
        let l = lambda_from_structure(&sampled)?;
        let t = transport_residual(&l, ORDER)?;
        let (_, sd) = self_dilatation_residual(&cayley(&l)?, ORDER)?;
        let h = homogeneity_check(&sampled, ORDER)?;
        let verdicts = [t.rigid, sd.max < tol, h.rigid];
        expect(notes, verdicts == [rigid; 3], || format!("{tag}: verdicts {verdicts:?}, expected {rigid}"));
        if !rigid {
            // λ = x + i: T = 1 and Im λ = 1.
            expect(notes, (t.max_rho_t - 1.0).abs() <= tol, || format!("{tag}: max ρ_T = {}", t.max_rho_t));
        }
    }
    Ok(())
}

fn criterion_5(notes: &mut Notes) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(5);
    let (mut fwd, mut back) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let l = Complex64::new(rng.gen_range(-5.0..5.0), 10f64.powf(rng.gen_range(-2.0..2.0)));
        fwd = fwd.max(rel(cayley_inv_point(cayley_point(l)?)?, l));
        let mu = Complex64::from_polar(rng.gen_range(0.0..0.99), rng.gen_range(-3.0..3.0));
        back = back.max((cayley_point(cayley_inv_point(mu)?)? - mu).norm());
    }
    expect(notes, fwd <= 1e-13, || format!("λ round trip {fwd:e}"));
    expect(notes, back <= 1e-13, || format!("μ round trip {back:e}"));

    let grid = default_grid();
    let mut rigid = vec![("constant".to_string(), EllipticStructure::constant(2.0, 1.0)?)];
    for d in DELTAS {
        rigid.push((format!("δ={d}"), EllipticStructure::delta_family(d)?));
    }
    for (tag, st) in rigid {
        let l = lambda_from_structure(&st.sample(&grid)?)?;
        let xi = xi_disk_form(&cayley(&l)?)?;
        let mut worst = 0.0f64;
        for k in (0..grid.len()).filter(|&k| xi.mask()[k]) {
            let (x, y) = grid.point(k);
            let direct = y - l.lambda().values()[k] * x;
            worst = worst.max(rel(xi.values()[k], direct));
        }
        expect(notes, worst <= 1e-12, || format!("{tag}: disk-form ξ off by {worst:e}"));
    }
    Ok(())
}

fn criterion_6(notes: &mut Notes) -> Result<()> {
    let grid = GridSpec::new(-0.5, 2.0, -1.0, 1.0, 201, 201)?;
    for delta in DELTAS {
        let mut p = Params::new();
        p.insert("delta".into(), Complex64::new(delta, 0.0));
        let seed = ExprSeed::new("w + delta*1i", &p)?;
        let sol = burgers_field(&seed, &grid, &BurgersOptions::default())?;
        let chart = build_chart(&sol.spectral()?, ORDER)?;
        let check = jacobian_check(&chart, ORDER, Some(&sol.j))?;
        expect(notes, check.report.min_det > 0.0, || format!("δ={delta}: min det {}", check.report.min_det));
        // det = Im λ/|J|² against the closed form δ/(1+x)³.
        let mut worst = 0.0f64;
        for k in (0..grid.len()).filter(|&k| chart.jac_det.mask()[k]) {
            let (x, y) = grid.point(k);
            let exact = delta_exact(delta, x, y).3;
            worst = worst.max((chart.jac_det.values()[k] - exact).abs() / exact);
        }
        expect(notes, worst <= 1e-10, || format!("δ={delta}: Burgers det off by {worst:e}"));
    }
    Ok(())
}

fn criterion_7(notes: &mut Notes) -> Result<()> {
    let grid = default_grid();
    let none = Params::new();
    let l = lambda_from_structure(&EllipticStructure::delta_family(0.1)?.sample(&grid)?)?;
    let chart = build_chart(&l, ORDER)?;
    let problem = VekuaProblem::new(
        l.clone(),
        sample_expression("x*y + 1i", &none, &grid)?,
        sample_expression("exp(x - y)", &none, &grid)?,
        sample_expression("x^2", &none, &grid)?,
    )?;
    let reduced = reduce(&problem, &chart, ORDER)?;
    let div = reduced.division_residual();
    expect(notes, div <= 1e-13, || format!("A′Φ − 2A_λ = {div:e}"));

    // Homogeneous passenger f = g(ξ), g(w) = w².
    let g: Arc<dyn Seed> = Arc::new(ExprSeed::new("w^2", &none)?);
    let base = study_base(&grid, 3)?;
    let study = nested_convergence_study(&base, 3, |gr| {
        let l = lambda_from_structure(&EllipticStructure::delta_family(0.1)?.sample(gr)?)?;
        let chart = build_chart(&l, ORDER)?;
        let reduced = reduce(&VekuaProblem::homogeneous(l), &chart, ORDER)?;
        let f = PassengerField::from_generator(Arc::clone(&g), PassengerKind::Holomorphic, &chart)?;
        reduced_residual_field(&f.f, &reduced, ORDER)
    });
    order_ok(notes, "passenger w²", study);
    Ok(())
}

fn criterion_8(notes: &mut Notes) -> Result<()> {
    let mut rng = StdRng::seed_from_u64(8);
    let (mut mult, mut inv) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let beta: f64 = rng.gen_range(-2.0..2.0);
        let fiber = Fiber::new(beta * beta / 4.0 + rng.gen_range(0.1..2.0), beta)?;
        let w = AlgebraElement::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let t = AlgebraElement::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        // N(U + Vi) = |U + Vλ|² through the transport map.
        let n = |e: AlgebraElement| (e.u + e.v * fiber.lambda()).norm_sqr();
        mult = mult.max((n(fiber.mul(w, t)) - n(w) * n(t)).abs() / (n(w) * n(t)));
        let one = fiber.mul(w, fiber.inv(w)?);
        inv = inv.max((one.u - 1.0).abs().max(one.v.abs()));
    }
    expect(notes, mult <= 1e-12, || format!("norm multiplicativity {mult:e}"));
    expect(notes, inv <= 1e-12, || format!("inverse round trip {inv:e}"));
    Ok(())
}

fn criterion_9(notes: &mut Notes) -> Result<()> {
    let none = Params::new();
    let grid = GridSpec::new(0.0, 1.0, -1.0, 1.0, 81, 161)?;
    for delta in DELTAS {
        let l = lambda_from_structure(&EllipticStructure::delta_family(delta)?.sample(&grid)?)?;
        let chart = build_chart(&l, ORDER)?;
        let problem = VekuaProblem::new(
            l,
            sample_expression("1 + x*y", &none, &grid)?,
            ComplexGridField::constant(grid, Complex64::default()),
            ComplexGridField::constant(grid, Complex64::default()),
        )?;
        let r = coefficient_bound_report(&reduce(&problem, &chart, ORDER)?, 2, None)?;
        // |A′|/|2A_λ| = 1/|Φ| = (1+x)²/(2δ), at most 2/δ on x ∈ [0, 1].
        expect(notes, r.measured_max_ratio <= r.bound_factor * (1.0 + 1e-12), || {
            format!("δ={delta}: measured {} > bound {}", r.measured_max_ratio, r.bound_factor)
        });
        expect(notes, r.bound_factor <= 2.0 / delta * (1.0 + 1e-9), || {
            format!("δ={delta}: bound {} exceeds 2/δ", r.bound_factor)
        });
    }
    let grid = GridSpec::new(-0.5, 0.5, -0.5, 0.5, 81, 81)?;
    let seed = ExprSeed::new("1i*exp(w)", &none)?;
    let sol = burgers_field(&seed, &grid, &BurgersOptions::default())?;
    let l = sol.spectral()?;
    let chart = build_chart(&l, ORDER)?;
    let problem = VekuaProblem::new(
        l,
        sample_expression("cos(x) + 1i*y", &none, &grid)?,
        ComplexGridField::constant(grid, Complex64::default()),
        ComplexGridField::constant(grid, Complex64::default()),
    )?;
    let r = coefficient_bound_report(&reduce(&problem, &chart, ORDER)?, 2, Some(&sol.j))?;
    expect(notes, r.holds && r.measured_max_ratio <= r.bound_factor, || {
        format!("seed i·exp(w): measured {} > bound {}", r.measured_max_ratio, r.bound_factor)
    });
    Ok(())
}

fn criterion_10(notes: &mut Notes) -> Result<()> {
    // ξ = (x − 0.5)² + iy folds the square onto itself.
    let grid = GridSpec::new(0.0, 1.0, -1.0, 1.0, 41, 81)?;
    let folded = ComplexGridField::from_fn(grid, |x, y| Complex64::new((x - 0.5) * (x - 0.5), y));
    let rep = injectivity_scan(&folded, 1e-6)?;
    let mirrored = rep.collisions.iter().any(|c| (c.first.0 + c.second.0 - 1.0).abs() < 1e-12 && c.first.1 == c.second.1);
    expect(notes, rep.verdict == InjectivityVerdict::CollisionsFound && mirrored, || {
        format!("planted fold missed: {} collisions", rep.total_collisions)
    });

    let config = VerifyConfig {
        grid: GridSpec::new(-0.5, 2.0, -1.0, 1.0, 101, 81)?,
        deltas: vec![1.0, 0.1],
        fault: Some(Fault::CorruptPhiFactorization),
        ..Default::default()
    };
    let faulty = run_suite(&config)?;
    let failed: Vec<&str> = faulty.failed().map(|c| c.name.as_str()).collect();
    expect(notes, !faulty.passed && !failed.is_empty(), || "corrupted factorization passed".into());
    expect(notes, failed.iter().all(|n| n.starts_with("phi_factored_vs_")), || {
        format!("unexpected failures under the fault: {failed:?}")
    });

    let grid = default_grid();
    let l = lambda_from_structure(&shear().sample(&grid)?)?;
    let chart = build_chart(&l, ORDER)?;
    match reduce(&VekuaProblem::homogeneous(l), &chart, ORDER) {
        Err(Error::NotRigid { max_rho_t, tolerance, .. }) => {
            expect(notes, max_rho_t > tolerance, || format!("refused with ρ_T {max_rho_t} ≤ {tolerance}"))
        }
        Err(e) => notes.push(format!("reduce failed for another reason: {e}")),
        Ok(_) => notes.push("reduce accepted λ = x + i".into()),
    }
    Ok(())
}

fn suite() -> Result<VerifyReport> {
    run_suite(&VerifyConfig {
        grid: default_grid(),
        deltas: DELTAS.to_vec(),
        ..Default::default()
    })
}

fn main() {
    let report = suite();
    let checks: [(u8, Criterion); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut all = true;
    for (n, check) in checks {
        let mut notes = Notes::new();
        if let Err(e) = check(&mut notes) {
            notes.push(format!("error: {e}"));
        }
        match &report {
            Ok(r) if r.criterion_passed(n) => {}
            Ok(r) => {
                let names: Vec<&str> = r.failed().filter(|c| c.criterion == n).map(|c| c.name.as_str()).collect();
                notes.push(format!("verify suite failed {names:?}"));
            }
            Err(e) => notes.push(format!("verify suite error: {e}")),
        }
        if notes.is_empty() {
            println!("criterion {n}: PASS");
        } else {
            all = false;
            println!("criterion {n}: FAIL");
            for note in notes {
                println!("    {note}");
            }
        }
    }
    if !all {
        std::process::exit(1);
    }
}

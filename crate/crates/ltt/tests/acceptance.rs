//! Acceptance suite: every shipping criterion in one target, one pass/fail
//! line each. Run with `cargo test --test acceptance -- --nocapture` to see
//! the lines even on success.

use ltt::analytic::{
    age_density, density_given_mrca, density_given_origin, expect_given_mrca, expect_given_origin,
    expect_given_survival, expect_unknown_age, uniform_grid,
};
use ltt::bdmath::u_of_t;
use ltt::quad::{integrate_semi_infinite, integrate_unit, Substitution};
use ltt::sim::mc_ltt;
use ltt::{BirthDeathParams, Condition, QuadratureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn pass(name: &'static str, detail: String) -> Criterion {
    Criterion {
        name,
        passed: true,
        detail,
    }
}

fn fail(name: &'static str, detail: String) -> Criterion {
    Criterion {
        name,
        passed: false,
        detail,
    }
}

fn params(lambda: f64, mu: f64) -> BirthDeathParams {
    BirthDeathParams::new(lambda, mu).unwrap()
}

fn param_grid() -> Vec<BirthDeathParams> {
    [(1.0, 0.0), (1.0, 0.5), (1.0, 0.99), (1.0, 1.0)]
        .iter()
        .map(|&(l, m)| params(l, m))
        .collect()
}

const SIGMAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

// 1. origin and mrca pmfs sum to 1 within 1e-12 over the full grid, < 1 s.
fn c01_normalization() -> Criterion {
    let name = "1 normalization (pmfs sum to 1 within 1e-12, < 1 s)";
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        for t in [1.0, 10.0] {
            for n in [2u32, 5, 10, 50] {
                for sigma in SIGMAS {
                    let so: f64 = (1..=n)
                        .map(|m| density_given_origin(n, m, sigma, t, &p).unwrap())
                        .sum();
                    let sm: f64 = (2..=n)
                        .map(|m| density_given_mrca(n, m, sigma, t, &p).unwrap())
                        .sum();
                    worst = worst.max((so - 1.0).abs()).max((sm - 1.0).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("worst deviation {worst:.3e}, runtime {elapsed:.2?}");
    if worst < 1e-12 && elapsed.as_secs_f64() < 1.0 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 2. sum of m * pmf matches the closed-form expectations within 1e-10.
fn c02_expectation_consistency() -> Criterion {
    let name = "2 expectation consistency (sum m*pmf vs closed forms, 1e-10)";
    let mut worst: f64 = 0.0;
    for p in param_grid() {
        for t in [1.0, 10.0] {
            for n in [2u32, 5, 10, 50] {
                for sigma in SIGMAS {
                    let by_sum: f64 = (1..=n)
                        .map(|m| m as f64 * density_given_origin(n, m, sigma, t, &p).unwrap())
                        .sum();
                    worst =
                        worst.max((by_sum - expect_given_origin(n, sigma, t, &p).unwrap()).abs());
                    let by_sum: f64 = (2..=n)
                        .map(|m| m as f64 * density_given_mrca(n, m, sigma, t, &p).unwrap())
                        .sum();
                    worst = worst.max((by_sum - expect_given_mrca(n, sigma, t, &p).unwrap()).abs());
                }
            }
        }
    }
    let detail = format!("worst deviation {worst:.3e}");
    if worst < 1e-10 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 3. pmf under (rho, delta, t) equals pmf under (rho, 1, delta t) within
// 1e-12 at 20 random parameter points.
fn c03_scaling() -> Criterion {
    let name = "3 scaling (pmf invariant under (rho, delta t), 1e-12, 20 points)";
    let mut rng = ChaCha12Rng::seed_from_u64(0xacce97);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lambda = rng.gen_range(0.1..3.0);
        let rho = rng.gen_range(0.0..0.95);
        let t = rng.gen_range(0.5..10.0);
        let sigma = rng.gen_range(0.05..0.95);
        let n = rng.gen_range(2..30u32);
        let p = params(lambda, rho * lambda);
        let rescaled = params(1.0 / (1.0 - rho), rho / (1.0 - rho));
        for m in 1..=n {
            let a = density_given_origin(n, m, sigma, t, &p).unwrap();
            let b = density_given_origin(n, m, sigma, p.delta * t, &rescaled).unwrap();
            let err = if a > 0.0 {
                ((a - b) / a).abs()
            } else {
                (a - b).abs()
            };
            worst = worst.max(err);
        }
    }
    let detail = format!("worst relative deviation {worst:.3e}");
    if worst < 1e-12 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 4. survival-conditioned expectation equals the sum over n of the
// origin-conditioned expectation weighted by P[n | survival], truncated
// at tail mass < 1e-12, within 1e-8 at 10 parameter points.
fn c04_survival_decomposition() -> Criterion {
    let name = "4 survival decomposition (formula vs truncated sum, 1e-8, 10 points)";
    let cases = [
        (1.0, 0.0, 0.5, 2.0),
        (1.0, 0.5, 0.25, 2.0),
        (1.0, 0.5, 0.5, 2.0),
        (1.0, 0.5, 0.75, 2.0),
        (0.5, 0.4, 0.5, 3.0),
        (2.0, 1.5, 0.3, 1.5),
        (1.0, 0.99, 0.5, 2.0),
        (1.0, 1.0, 0.5, 2.0),
        (0.2, 0.1, 0.6, 8.0),
        (3.0, 0.5, 0.4, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (lambda, mu, sigma, t) in cases {
        let p = params(lambda, mu);
        let u = u_of_t(t, &p).unwrap();
        let mut total = 0.0;
        let mut pn = 1.0 - u; // P[n | survival] = (1 - u) u^{n-1}
        let mut n = 1u32;
        // E[m | origin, n] <= n, so the remaining tail is bounded by
        // sum_{k >= n} k (1-u) u^{k-1} = pn (n + u/(1-u)) < pn (n + 1/(1-u))
        while pn * (n as f64 + 1.0 / (1.0 - u)) > 1e-13 && n <= 500_000 {
            total += expect_given_origin(n, sigma, t, &p).unwrap() * pn;
            pn *= u;
            n += 1;
        }
        let direct = expect_given_survival(sigma, t, &p).unwrap();
        worst = worst.max((total - direct).abs());
    }
    let detail = format!("worst deviation {worst:.3e}");
    if worst < 1e-8 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 5. Monte Carlo vs analytic, origin conditioning: Yule lambda=0.2, t=10,
// n=5, sigma in {0.25, 0.5, 0.75}, >= 2e4 accepted trees, 3 SE, < 60 s.
fn c05_mc_origin() -> Criterion {
    let name = "5 Monte-Carlo agreement, origin (Yule, n=5, 2e4 trees, 3 SE, < 60 s)";
    let start = Instant::now();
    let p = params(0.2, 0.0);
    let grid = [0.25, 0.5, 0.75];
    let curve = match mc_ltt(&Condition::OriginAge(10.0), 5, &p, &grid, 20_000, 4242) {
        Ok(c) => c,
        Err(e) => return fail(name, format!("mc_ltt failed: {e}")),
    };
    let mut detail = String::new();
    let mut ok = true;
    for pt in &curve.points {
        let want = expect_given_origin(5, pt.sigma, 10.0, &p).unwrap();
        let se = pt.stderr.unwrap();
        let dev = (pt.expected_lineages - want).abs() / se;
        detail.push_str(&format!("sigma={}: {:.2} SE; ", pt.sigma, dev));
        ok &= dev < 3.0;
    }
    let elapsed = start.elapsed();
    detail.push_str(&format!("runtime {elapsed:.2?}"));
    if ok && elapsed.as_secs_f64() < 60.0 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 6. Monte Carlo vs analytic, MRCA and survival conditioning:
// (lambda, mu) = (1, 0.5), t = 3, n = 6 (MRCA), >= 1e4 accepted trees, 3 SE.
fn c06_mc_mrca_and_survival() -> Criterion {
    let name = "6 Monte-Carlo agreement, MRCA and survival (1e4 trees, 3 SE)";
    let p = params(1.0, 0.5);
    let grid = [0.25, 0.5, 0.75];
    let mut detail = String::new();
    let mut ok = true;

    let curve = match mc_ltt(&Condition::MrcaAge(3.0), 6, &p, &grid, 10_000, 4243) {
        Ok(c) => c,
        Err(e) => return fail(name, format!("mc_ltt (mrca) failed: {e}")),
    };
    for pt in &curve.points {
        let want = expect_given_mrca(6, pt.sigma, 3.0, &p).unwrap();
        let dev = (pt.expected_lineages - want).abs() / pt.stderr.unwrap();
        detail.push_str(&format!("mrca sigma={}: {:.2} SE; ", pt.sigma, dev));
        ok &= dev < 3.0;
    }

    let curve = match mc_ltt(&Condition::Survival(3.0), 1, &p, &grid, 10_000, 4244) {
        Ok(c) => c,
        Err(e) => return fail(name, format!("mc_ltt (survival) failed: {e}")),
    };
    for pt in &curve.points {
        let want = expect_given_survival(pt.sigma, 3.0, &p).unwrap();
        let dev = (pt.expected_lineages - want).abs() / pt.stderr.unwrap();
        detail.push_str(&format!("survival sigma={}: {:.2} SE; ", pt.sigma, dev));
        ok &= dev < 3.0;
    }
    if ok {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// Yule unknown-age expectation via the quadrature route (the rho -> 0
// limit of the general integral), for cross-checking the closed form.
fn yule_by_integral(n: u32, sigma: f64, q: &QuadratureSpec) -> f64 {
    let nf = n as f64;
    let r = integrate_semi_infinite(
        |t| (-2.0 * t + (sigma * t).exp_m1().ln() + (nf - 2.0) * (-(-t).exp_m1()).ln()).exp(),
        Substitution::ExpDecay,
        q,
    );
    1.0 + nf * (nf - 1.0) * r.value
}

// 7. unknown-age Yule closed form: n=2 sigma=0.5 gives 4/3; closed form vs
// quadrature route within 1e-6 for n <= 20 and within 1e-8 for n = 25..35.
fn c07_yule_closed_form() -> Criterion {
    let name = "7 unknown-age Yule closed form (4/3; vs quadrature 1e-6 / 1e-8)";
    let q = QuadratureSpec::default();
    let yule = params(1.0, 0.0);
    let v = expect_unknown_age(2, 0.5, &yule, &q).unwrap();
    let base_err = (v - 4.0 / 3.0).abs();
    let mut worst_small: f64 = 0.0;
    for n in 2..=20u32 {
        for sigma in [0.2, 0.5, 0.9] {
            let a = expect_unknown_age(n, sigma, &yule, &q).unwrap();
            worst_small = worst_small.max((a - yule_by_integral(n, sigma, &q)).abs());
        }
    }
    let mut worst_large: f64 = 0.0;
    for n in 25..=35u32 {
        for sigma in [0.3, 0.7] {
            let a = expect_unknown_age(n, sigma, &yule, &q).unwrap();
            worst_large = worst_large.max((a - yule_by_integral(n, sigma, &q)).abs());
        }
    }
    let detail = format!(
        "|E(2, 1/2) - 4/3| = {base_err:.3e}; n<=20 worst {worst_small:.3e}; n=25..35 worst {worst_large:.3e}"
    );
    if base_err <= 4.0 * f64::EPSILON && worst_small < 1e-6 && worst_large < 1e-8 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 8. unknown-age general case: rho = 1e-8 matches Yule within 1e-5;
// rho = 0.9999 matches the critical integral within 1e-3; Monte Carlo under
// the uniform age prior within 3 SE at n = 5, rho = 0.5.
fn c08_unknown_age_general() -> Criterion {
    let name = "8 unknown-age general case (rho limits 1e-5/1e-3; MC 3 SE)";
    let q = QuadratureSpec::default();
    let mut detail = String::new();
    let mut ok = true;

    let near_yule = params(1.0, 1e-8);
    let yule = params(1.0, 0.0);
    let near_crit = params(1.0, 0.9999);
    let crit = params(1.0, 1.0);
    let mut worst_yule: f64 = 0.0;
    let mut worst_crit: f64 = 0.0;
    for sigma in [0.25, 0.5, 0.75] {
        let a = expect_unknown_age(10, sigma, &near_yule, &q).unwrap();
        let b = expect_unknown_age(10, sigma, &yule, &q).unwrap();
        worst_yule = worst_yule.max((a - b).abs());
        let a = expect_unknown_age(10, sigma, &near_crit, &q).unwrap();
        let b = expect_unknown_age(10, sigma, &crit, &q).unwrap();
        worst_crit = worst_crit.max((a - b).abs());
    }
    detail.push_str(&format!(
        "rho=1e-8 vs Yule {worst_yule:.3e}; rho=0.9999 vs critical {worst_crit:.3e}; "
    ));
    ok &= worst_yule < 1e-5 && worst_crit < 1e-3;

    let p = params(1.0, 0.5);
    let grid = [0.25, 0.5, 0.75];
    // modest replicate count: the posterior age has an exponential tail,
    // and a rare old-age draw makes the fixed-age rejection step expensive
    match mc_ltt(&Condition::UniformAgePrior, 5, &p, &grid, 2_000, 4245) {
        Ok(curve) => {
            for pt in &curve.points {
                let want = expect_unknown_age(5, pt.sigma, &p, &q).unwrap();
                let dev = (pt.expected_lineages - want).abs() / pt.stderr.unwrap();
                detail.push_str(&format!("mc sigma={}: {:.2} SE; ", pt.sigma, dev));
                ok &= dev < 3.0;
            }
        }
        Err(e) => return fail(name, format!("mc_ltt (uniform prior) failed: {e}")),
    }
    if ok {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 9. posterior origin-age density integrates to 1 within 1e-8 for
// n in {1,2,5,10} and (lambda,mu) in {(1,0),(1,0.5),(1,1)}; the n=1 Yule
// density equals lambda e^{-lambda t} pointwise within 1e-12.
fn c09_age_density() -> Criterion {
    let name = "9 age density (normalizes to 1 within 1e-8; n=1 Yule pointwise 1e-12)";
    let q = QuadratureSpec::default();
    let mut worst_mass: f64 = 0.0;
    for (l, m) in [(1.0, 0.0), (1.0, 0.5), (1.0, 1.0)] {
        let p = params(l, m);
        let sub = if p.rho == 1.0 {
            Substitution::Rational
        } else {
            Substitution::ExpDecay
        };
        for n in [1u32, 2, 5, 10] {
            let r = integrate_semi_infinite(|t| age_density(t, n, &p).unwrap_or(0.0), sub, &q);
            worst_mass = worst_mass.max((r.value - 1.0).abs());
        }
    }
    let mut worst_point: f64 = 0.0;
    let lambda = 0.7;
    let p = params(lambda, 0.0);
    for t in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let want = lambda * (-lambda * t).exp();
        worst_point = worst_point.max((age_density(t, 1, &p).unwrap() - want).abs());
    }
    let detail =
        format!("worst mass deviation {worst_mass:.3e}; worst n=1 pointwise {worst_point:.3e}");
    if worst_mass < 1e-8 && worst_point < 1e-12 {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

// 10. figure-shape properties: origin-conditioned expectation at sigma=0.5
// strictly decreasing in lambda for each rho (curves ordered bottom-to-top
// by decreasing lambda); unknown-age expectation strictly decreasing in rho
// and everywhere below the straight line 1 + (n-1) sigma.
fn c10_figure_shapes() -> Criterion {
    let name = "10 figure shapes (ordering in lambda and rho; below straight line)";
    let q = QuadratureSpec::default();
    let lambdas = [0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];
    let rhos = [0.0, 0.25, 0.5, 0.75, 1.0];
    let (n, t) = (10u32, 10.0);
    let mut failures = String::new();

    for rho in rhos {
        let mut prev = f64::INFINITY;
        for lambda in lambdas {
            let p = params(lambda, rho * lambda);
            let e = expect_given_origin(n, 0.5, t, &p).unwrap();
            if e >= prev {
                failures.push_str(&format!(
                    "not decreasing in lambda at rho={rho} lambda={lambda}; "
                ));
            }
            prev = e;
        }
    }

    let mut prev = f64::INFINITY;
    for rho in rhos {
        let p = params(1.0, rho);
        let e = expect_unknown_age(n, 0.5, &p, &q).unwrap();
        if e >= prev {
            failures.push_str(&format!("unknown-age not decreasing in rho at rho={rho}; "));
        }
        prev = e;
        for sigma in uniform_grid(101) {
            let e = expect_unknown_age(n, sigma, &p, &q).unwrap();
            if e > 1.0 + (n as f64 - 1.0) * sigma + 1e-12 {
                failures.push_str(&format!("above straight line at rho={rho} sigma={sigma}; "));
            }
        }
    }
    if failures.is_empty() {
        pass(name, "orderings and convexity bound hold".into())
    } else {
        fail(name, failures)
    }
}

// 11. boundary exactness: sigma=0 gives exactly 1 (origin, survival,
// unknown-age) or 2 (MRCA); sigma=1 gives exactly n (conditions with n).
fn c11_boundary_exactness() -> Criterion {
    let name = "11 boundary exactness (sigma=0 -> 1 or 2, sigma=1 -> n, exact)";
    let q = QuadratureSpec::default();
    let mut failures = String::new();
    for p in param_grid() {
        for n in [2u32, 5, 10] {
            let t = 3.0;
            if expect_given_origin(n, 0.0, t, &p).unwrap() != 1.0 {
                failures.push_str("origin sigma=0; ");
            }
            if expect_given_origin(n, 1.0, t, &p).unwrap() != n as f64 {
                failures.push_str("origin sigma=1; ");
            }
            if expect_given_mrca(n, 0.0, t, &p).unwrap() != 2.0 {
                failures.push_str("mrca sigma=0; ");
            }
            if expect_given_mrca(n, 1.0, t, &p).unwrap() != n as f64 {
                failures.push_str("mrca sigma=1; ");
            }
            if expect_given_survival(0.0, t, &p).unwrap() != 1.0 {
                failures.push_str("survival sigma=0; ");
            }
            if expect_unknown_age(n, 0.0, &p, &q).unwrap() != 1.0 {
                failures.push_str("unknown-age sigma=0; ");
            }
            if expect_unknown_age(n, 1.0, &p, &q).unwrap() != n as f64 {
                failures.push_str("unknown-age sigma=1; ");
            }
        }
    }
    if failures.is_empty() {
        pass(name, "all boundaries exact".into())
    } else {
        fail(name, failures)
    }
}

// 12. quadrature honesty: on integrals with known values, the true error
// never exceeds 10x the reported error estimate when converged.
fn c12_quadrature_honesty() -> Criterion {
    let name = "12 quadrature honesty (|value - truth| <= 10x reported error)";
    let q = QuadratureSpec::default();
    let pi = std::f64::consts::PI;
    type Case = (&'static str, Box<dyn Fn(f64) -> f64>, Substitution, f64);
    let semi: Vec<Case> = vec![
        (
            "exp",
            Box::new(|t: f64| (-t).exp()),
            Substitution::ExpDecay,
            1.0,
        ),
        (
            "t exp",
            Box::new(|t: f64| t * (-t).exp()),
            Substitution::ExpDecay,
            1.0,
        ),
        (
            "gauss",
            Box::new(|t: f64| (-t * t / 2.0).exp()),
            Substitution::ExpDecay,
            (pi / 2.0).sqrt(),
        ),
        (
            "damped cos",
            Box::new(|t: f64| (-t).exp() * t.cos()),
            Substitution::ExpDecay,
            0.5,
        ),
        (
            "rational",
            Box::new(|t: f64| t / (1.0 + t).powi(3)),
            Substitution::Rational,
            0.5,
        ),
        (
            "exp via rational",
            Box::new(|t: f64| (-t).exp()),
            Substitution::Rational,
            1.0,
        ),
    ];
    let mut failures = String::new();
    let mut worst_ratio: f64 = 0.0;
    for (label, f, sub, truth) in semi {
        let r = integrate_semi_infinite(f, sub, &q);
        if !r.converged {
            failures.push_str(&format!("{label} did not converge; "));
            continue;
        }
        let ratio = (r.value - truth).abs() / r.error_estimate.max(f64::MIN_POSITIVE);
        worst_ratio = worst_ratio.max(ratio);
        if (r.value - truth).abs() > 10.0 * r.error_estimate {
            failures.push_str(&format!(
                "{label}: off by {:.3e} vs error {:.3e}; ",
                (r.value - truth).abs(),
                r.error_estimate
            ));
        }
    }
    let r = integrate_unit(|x: f64| x.ln(), &q);
    if r.converged && (r.value + 1.0).abs() > 10.0 * r.error_estimate {
        failures.push_str("log singularity dishonest; ");
    }
    let detail = format!("worst |err|/estimate ratio {worst_ratio:.2}; {failures}");
    if failures.is_empty() {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

#[test]
fn acceptance() {
    let criteria = [
        c01_normalization(),
        c02_expectation_consistency(),
        c03_scaling(),
        c04_survival_decomposition(),
        c05_mc_origin(),
        c06_mc_mrca_and_survival(),
        c07_yule_closed_form(),
        c08_unknown_age_general(),
        c09_age_density(),
        c10_figure_shapes(),
        c11_boundary_exactness(),
        c12_quadrature_honesty(),
    ];
    let mut failed = 0;
    println!();
    for c in &criteria {
        if c.passed {
            println!("PASS {} -- {}", c.name, c.detail);
        } else {
            println!("FAIL {} -- {}", c.name, c.detail);
            failed += 1;
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

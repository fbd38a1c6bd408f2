//! The `verify` subcommand: self-contained cross-checks of the analytic
//! layer (normalization, boundary exactness, the rescaling identity, and
//! the survival decomposition), printed one pass/fail line per property.

use crate::analytic::{
    density_given_mrca, density_given_origin, expect_given_mrca, expect_given_origin,
    expect_given_survival,
};
use crate::bdmath::{u_of_t, BirthDeathParams};
use crate::quad::QuadratureSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::fmt::Write;

pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct Report {
    pub properties: Vec<PropertyResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn failures(&self) -> usize {
        self.properties.iter().filter(|p| !p.passed).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            if p.passed {
                writeln!(out, "PASS {}", p.name).unwrap();
            } else {
                writeln!(out, "FAIL {}: {}", p.name, p.detail).unwrap();
            }
        }
        writeln!(
            out,
            "{}/{} properties passed",
            self.properties.len() - self.failures(),
            self.properties.len()
        )
        .unwrap();
        out
    }
}

fn param_grid() -> Vec<BirthDeathParams> {
    [(1.0, 0.0), (1.0, 0.5), (1.0, 0.99), (1.0, 1.0)]
        .iter()
        .map(|&(l, m)| BirthDeathParams::new(l, m).unwrap())
        .collect()
}

fn check_normalization() -> PropertyResult {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for p in param_grid() {
        for t in [1.0, 10.0] {
            for n in [2u32, 5, 10, 50] {
                for i in 1..=9 {
                    let sigma = i as f64 / 10.0;
                    let so: f64 = (1..=n)
                        .map(|m| density_given_origin(n, m, sigma, t, &p).unwrap())
                        .sum();
                    let sm: f64 = (2..=n)
                        .map(|m| density_given_mrca(n, m, sigma, t, &p).unwrap())
                        .sum();
                    for (label, s) in [("origin", so), ("mrca", sm)] {
                        let err = (s - 1.0).abs();
                        if err > worst {
                            worst = err;
                            detail = format!(
                                "{label} pmf sum {s} at n={n} sigma={sigma} t={t} mu={}",
                                p.mu
                            );
                        }
                    }
                }
            }
        }
    }
    PropertyResult {
        name: "normalization (origin and mrca pmfs sum to 1 within 1e-12)",
        passed: worst < 1e-12,
        detail: format!("worst deviation {worst:.3e}: {detail}"),
    }
}

fn check_expectation_consistency() -> PropertyResult {
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for p in param_grid() {
        for t in [1.0, 10.0] {
            for n in [2u32, 5, 10, 50] {
                for i in 1..=9 {
                    let sigma = i as f64 / 10.0;
                    let by_sum: f64 = (1..=n)
                        .map(|m| m as f64 * density_given_origin(n, m, sigma, t, &p).unwrap())
                        .sum();
                    let direct = expect_given_origin(n, sigma, t, &p).unwrap();
                    let err = (by_sum - direct).abs();
                    if err > worst {
                        worst = err;
                        detail = format!("origin n={n} sigma={sigma} t={t} mu={}", p.mu);
                    }
                    let by_sum: f64 = (2..=n)
                        .map(|m| m as f64 * density_given_mrca(n, m, sigma, t, &p).unwrap())
                        .sum();
                    let direct = expect_given_mrca(n, sigma, t, &p).unwrap();
                    let err = (by_sum - direct).abs();
                    if err > worst {
                        worst = err;
                        detail = format!("mrca n={n} sigma={sigma} t={t} mu={}", p.mu);
                    }
                }
            }
        }
    }
    PropertyResult {
        name: "expectation consistency (sum m p vs closed forms within 1e-10)",
        passed: worst < 1e-10,
        detail: format!("worst deviation {worst:.3e}: {detail}"),
    }
}

fn check_boundary() -> PropertyResult {
    let quad = QuadratureSpec::default();
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
            if p.rho <= 1.0 {
                if crate::analytic::expect_unknown_age(n, 0.0, &p, &quad).unwrap() != 1.0 {
                    failures.push_str("unknown-age sigma=0; ");
                }
                if crate::analytic::expect_unknown_age(n, 1.0, &p, &quad).unwrap() != n as f64 {
                    failures.push_str("unknown-age sigma=1; ");
                }
            }
        }
    }
    PropertyResult {
        name: "boundary exactness (sigma=0 -> 1 or 2, sigma=1 -> n, exact)",
        passed: failures.is_empty(),
        detail: failures,
    }
}

fn check_scaling() -> PropertyResult {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5ca1e);
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for _ in 0..20 {
        let lambda = rng.gen_range(0.1..3.0);
        let rho = rng.gen_range(0.0..0.95);
        let t = rng.gen_range(0.5..10.0);
        let sigma = rng.gen_range(0.05..0.95);
        let n = rng.gen_range(2..30u32);
        let p = BirthDeathParams::new(lambda, rho * lambda).unwrap();
        let rescaled = BirthDeathParams::new(1.0 / (1.0 - rho), rho / (1.0 - rho)).unwrap();
        for m in 1..=n {
            let a = density_given_origin(n, m, sigma, t, &p).unwrap();
            let b = density_given_origin(n, m, sigma, p.delta * t, &rescaled).unwrap();
            let err = if a > 0.0 {
                ((a - b) / a).abs()
            } else {
                (a - b).abs()
            };
            if err > worst {
                worst = err;
                detail = format!("n={n} m={m} sigma={sigma:.3} t={t:.3} rho={rho:.3}");
            }
        }
    }
    PropertyResult {
        name: "scaling (pmf under (rho,delta,t) == pmf under (rho,1,delta t) within 1e-12)",
        passed: worst < 1e-12,
        detail: format!("worst relative deviation {worst:.3e}: {detail}"),
    }
}

fn check_survival_decomposition() -> PropertyResult {
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
    let mut detail = String::new();
    for (lambda, mu, sigma, t) in cases {
        let p = BirthDeathParams::new(lambda, mu).unwrap();
        let u = u_of_t(t, &p).unwrap();
        let mut total = 0.0;
        let mut pn = 1.0 - u;
        let mut n = 1u32;
        while pn * (n as f64 + 1.0 / (1.0 - u)) > 1e-13 && n <= 200_000 {
            total += expect_given_origin(n, sigma, t, &p).unwrap() * pn;
            pn *= u;
            n += 1;
        }
        let direct = expect_given_survival(sigma, t, &p).unwrap();
        let err = (total - direct).abs();
        if err > worst {
            worst = err;
            detail = format!(
                "lambda={lambda} mu={mu} sigma={sigma} t={t}: sum {total} vs formula {direct}"
            );
        }
    }
    PropertyResult {
        name: "survival decomposition (formula vs truncated sum within 1e-8)",
        passed: worst < 1e-8,
        detail: format!("worst deviation {worst:.3e}: {detail}"),
    }
}

/// Runs every property and collects the report.
pub fn run_suite(_quad: &QuadratureSpec) -> Report {
    Report {
        properties: vec![
            check_normalization(),
            check_expectation_consistency(),
            check_boundary(),
            check_scaling(),
            check_survival_decomposition(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_suite(&QuadratureSpec::default());
        assert!(report.all_passed(), "{}", report.render());
        assert!(report.render().contains("PASS"));
    }
}

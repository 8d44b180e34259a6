//! Acceptance criteria at their stated tolerances and sample counts.
//! One PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use lie_doubles::verify::{run_property, Bound, PropertyRecord};
use std::process::ExitCode;

const SEED: u64 = 20_261_016;

struct Criterion {
    id: u32,
    title: &'static str,
    /// (property, samples)
    checks: &'static [(&'static str, usize)],
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "factorization", checks: &[("iwasawa_round_trip", 3000), ("left_right_factor_identity", 3000)] },
    Criterion {
        id: 2,
        title: "r-matrix certification",
        checks: &[("antisymmetry", 500), ("cartan_kernel", 500), ("cdybe", 500), ("r_gamma2_two_forms", 500)],
    },
    Criterion { id: 3, title: "reduced brackets match unreduced", checks: &[("reduced_consistency", 200)] },
    Criterion { id: 4, title: "Poisson model map and factor derivatives", checks: &[("model_map_poisson", 200), ("factor_derivatives", 200)] },
    Criterion {
        id: 5,
        title: "exact flows",
        checks: &[("group_law", 30), ("constancy", 30), ("cotangent_constants", 100), ("w_spectrum", 100), ("quasi_constants", 100)],
    },
    Criterion { id: 6, title: "projection cross-validation", checks: &[("projection", 1)] },
    Criterion { id: 7, title: "spin Sutherland identity", checks: &[("spin_sutherland", 500)] },
    Criterion {
        id: 8,
        title: "quasi-Poisson signature",
        checks: &[("quasi_jacobi_invariant", 20), ("quasi_jacobi_generic", 4), ("casimir_center", 200)],
    },
    Criterion { id: 9, title: "modular group action", checks: &[("modular_relations", 200), ("modular_brackets", 50)] },
    Criterion {
        id: 10,
        title: "dressing equivariance and averaging",
        checks: &[("dressing_equivariance", 100), ("transformed_curve", 100), ("haar_average_constancy", 10_000)],
    },
];

fn describe(r: &PropertyRecord) -> String {
    let op = match r.bound {
        Bound::Below => "<=",
        Bound::Above => ">",
    };
    match &r.error {
        Some(e) => format!("{} error: {e}", r.name),
        None => format!("{} {:.2e} {op} {:.0e} (n={})", r.name, r.max_residual, r.tolerance, r.samples),
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    for c in CRITERIA {
        let records: Vec<PropertyRecord> =
            c.checks.iter().map(|&(name, samples)| run_property(name, SEED, samples).expect("criterion names a catalogued property")).collect();
        let pass = records.iter().all(|r| r.pass);
        if !pass {
            failed += 1;
        }
        let detail: Vec<String> = records.iter().map(describe).collect();
        println!("{} criterion {:>2} {}: {}", if pass { "PASS" } else { "FAIL" }, c.id, c.title, detail.join("; "));
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

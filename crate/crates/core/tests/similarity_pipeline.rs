use shiftlab::chains::{ContinuousKernelSpec, KernelSpec, Modulation};
use shiftlab::cli::{rho_between, RhoMethod};
use shiftlab::points::Metric;
use shiftlab::similarity::{
    alpha_family_check, alpha_index_fit_lower, appendix_a_alpha, beta_chain_transfer,
    rho_uniform_cube, transfer_to_alpha, FamilyCase, McBudget,
};
use shiftlab::stats::geometric_grid;

const BUDGET: McBudget = McBudget {
    inner: 10_000,
    outer: 5_000,
};

fn curve(
    p: &ContinuousKernelSpec,
    q: &ContinuousKernelSpec,
    grid: &[f64],
    seed: u64,
) -> Vec<shiftlab::similarity::SimilarityEstimate> {
    let (p, q) = (
        KernelSpec::Continuous(p.clone()),
        KernelSpec::Continuous(q.clone()),
    );
    rho_between(&p, &q, grid, BUDGET, Metric::SupNorm, RhoMethod::Auto, seed)
        .unwrap()
        .curve
}

#[test]
fn beta_chain_alpha_passes_on_mc_curve() {
    let (gp, gq) = (1.0, 0.5);
    let (gamma, c) = beta_chain_transfer(gp, gq);
    let p = ContinuousKernelSpec::BetaChain { gamma: gp };
    let t = transfer_to_alpha(gamma, 1.0, 1.0, c, p.doeblin().0, 1.0).unwrap();
    assert_eq!(t.case, FamilyCase::D);
    // the stationary source is thin near 0, so tiny balls need far more draws
    let grid = geometric_grid(1.0, 0.05, 10);
    let rho = curve(&p, &ContinuousKernelSpec::BetaChain { gamma: gq }, &grid, 1);
    let check = alpha_family_check(&rho, t.alpha, None, 1.1 * t.constant, 1.0).unwrap();
    assert!(check.pass, "{check:?}");
}

#[test]
fn appendix_a_alpha_passes_on_mc_curves() {
    let eps = 0.8;
    let (gp, gq) = (vec![0.6, 0.5], vec![0.4]);
    let t = appendix_a_alpha(&gp, &gq, eps).unwrap();
    let FamilyCase::DPrime { alpha_prime } = t.case else {
        panic!("expected the D' case")
    };
    let p = ContinuousKernelSpec::ProductBetaChain {
        gammas: gp,
        floor: eps,
        modulation: Modulation::Linear,
        ambient_dim: 2,
    };
    let q = ContinuousKernelSpec::ProductBetaChain {
        gammas: gq,
        floor: eps,
        modulation: Modulation::Linear,
        ambient_dim: 2,
    };
    // below h ≈ 0.02 the source mass near the target's edge is too thin for the budget
    let grid = geometric_grid(1.0, 0.02, 12);
    let pq = curve(&p, &q, &grid, 2);
    let qq = curve(&q, &q, &grid, 3);
    let check = alpha_family_check(
        &pq,
        t.alpha,
        Some((alpha_prime, &qq)),
        1.1 * t.constant,
        1.0,
    )
    .unwrap();
    assert!(check.pass, "{check:?}");
}

#[test]
fn embedded_target_has_doubling_slope_one() {
    let seg = ContinuousKernelSpec::EmbeddedTarget {
        inner: Box::new(ContinuousKernelSpec::BetaChain { gamma: 0.0 }),
        ambient_dim: 2,
    };
    let grid = geometric_grid(1.0, 0.005, 20);
    let fit = alpha_index_fit_lower(&curve(&seg, &seg, &grid, 4)).unwrap();
    assert!((fit.alpha - 1.0).abs() <= 0.15, "{fit:?}");
}

#[test]
fn square_curve_matches_closed_form() {
    let sq = KernelSpec::Continuous(ContinuousKernelSpec::Independence {
        distribution: shiftlab::chains::Distribution::unit_cube(2),
    });
    let grid = geometric_grid(0.5, 0.05, 6);
    let rho = rho_between(
        &sq,
        &sq,
        &grid,
        BUDGET,
        Metric::SupNorm,
        RhoMethod::MonteCarlo,
        5,
    )
    .unwrap()
    .curve;
    for e in &rho {
        let exact = rho_uniform_cube(e.h, 2);
        assert!(
            (e.value - exact).abs() <= 4.0 * e.std_error.unwrap(),
            "h = {}: {} vs {exact}",
            e.h,
            e.value
        );
    }
}

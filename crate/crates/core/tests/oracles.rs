//! Solver and fit results checked against independent oracles.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{chain_from_dense, dense_of, product_chain, transient_dense, Dense};
use raidrel_core::ctmc::{build_lumped_chain, build_naive_chain, transient, uniformize};
use raidrel_core::dist::{Lifetime, Weibull};
use raidrel_core::phfit::{fit_three_state, FitMethod};
use raidrel_core::raid::{
    build_disk_model, mds_loss_predicate, FitPlan, LossTrigger, ModelOptions, RebuildEntry,
    ScrubMode, SystemConfig,
};

fn random_generator(seed: u64, n: usize) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n - 1 {
        for j in 0..n {
            if i == j {
                continue;
            }
            let p = if j == n - 1 { 0.3 } else { 0.5 };
            if rng.random::<f64>() < p {
                q[i][j] = rng.random::<f64>() * if j == n - 1 { 0.5 } else { 2.0 };
            }
        }
        q[i][i] = -q[i].iter().sum::<f64>();
    }
    q
}

#[test]
fn uniformization_matches_matrix_exponential() {
    for seed in 0..20 {
        let q = random_generator(seed, 10);
        let chain = chain_from_dense(&q);
        let t = 0.1 + 5.0 * ChaCha8Rng::seed_from_u64(1000 + seed).random::<f64>();
        let got = uniformize(&chain, t, 1e-12).unwrap();
        let dist = &got.distributions.unwrap()[0];
        let mut p0 = vec![0.0; 10];
        p0[0] = 1.0;
        let want = transient_dense(&q, &p0, t);
        let l1: f64 = dist.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 1e-8, "seed {seed}: L1 {l1:e}");
    }
}

#[test]
fn exponential_failure_closed_form() {
    // Two states, failure only: P(down by t) = 1 - e^{-lt}.
    let q = vec![vec![-1e-3, 1e-3], vec![0.0, 0.0]];
    let r = uniformize(&chain_from_dense(&q), 1000.0, 1e-12).unwrap();
    assert!((r.loss[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
    assert!((r.loss[0] - 0.6321).abs() < 1e-4);
}

/// Reduced Case Study 1 style disk with fast clocks so that loss
/// probabilities are far from zero on short horizons.
fn reduced_config(n: usize, scrub: ScrubMode, trigger: LossTrigger, entry: RebuildEntry) -> SystemConfig {
    SystemConfig {
        n,
        k: n - 1,
        ttop: Weibull::new(1.12, 400.0, 0.0).unwrap(),
        ttld: Some(Weibull::exponential(150.0).unwrap()),
        ttr: Weibull::new(2.0, 12.0, 6.0).unwrap(),
        ttscr: Some(Weibull::exponential(40.0).unwrap()),
        fit_plan: FitPlan {
            ttop: FitMethod::ThreeState,
            ttr: FitMethod::Erlang(2),
            ttscr: FitMethod::Erlang(1),
            allow_repair: false,
        },
        options: ModelOptions { scrub, loss_trigger: trigger, rebuild: entry },
    }
}

#[test]
fn lumped_chain_equals_product_chain() {
    let grid = [5.0, 20.0, 60.0, 150.0, 400.0];
    let variants = [
        (ScrubMode::OnDefect, LossTrigger::OnFailure, RebuildEntry::Replace),
        (ScrubMode::FreeRunning, LossTrigger::AnyTransition, RebuildEntry::Restore),
    ];
    for n in [2, 3] {
        for (scrub, trigger, entry) in variants {
            let cfg = reduced_config(n, scrub, trigger, entry);
            let disk = build_disk_model(&cfg).unwrap();
            assert!(disk.len() <= 6, "reduced model has {} states", disk.len());
            let lumped = build_lumped_chain(&disk, n, &mds_loss_predicate(&cfg), 100_000).unwrap();
            let got = transient(&lumped, &grid, 1e-13, false).unwrap();

            let (q, start) =
                product_chain(&disk, n, cfg.tolerance(), trigger == LossTrigger::OnFailure);
            let mut p0 = vec![0.0; q.len()];
            p0[start] = 1.0;
            for (i, &t) in grid.iter().enumerate() {
                let want = *transient_dense(&q, &p0, t).last().unwrap();
                assert!(
                    (got.loss[i] - want).abs() <= 1e-9,
                    "n={n} {scrub:?}/{trigger:?} t={t}: lumped {} product {want}",
                    got.loss[i]
                );
                assert!(want > 1e-4, "oracle loss probability too small to be informative");
            }
            assert!(lumped.len() < q.len());
        }
    }
}

#[test]
fn both_branches_share_one_density() {
    let w = Weibull::new(1.12, 461_386.0, 0.0).unwrap();
    let (a, b) = fit_three_state(&w.moments().unwrap()).unwrap();
    for i in 0..=400 {
        let t = i as f64 * 750.0;
        let (pa, pb) = (a.pdf(t), b.pdf(t));
        assert!((pa - pb).abs() <= 1e-10 * pa.abs(), "t={t}: {pa:e} vs {pb:e}");
    }
}

#[test]
fn naive_chain_without_repair_is_squared_exponential() {
    // 2 disks, tolerance 1, no repair: loss by t is (1 - e^{-lt})^2.
    let lambda = 1e-3;
    let chain = build_naive_chain(1, 2, lambda, 0.0, 0.0).unwrap();
    let grid = [100.0, 500.0, 1000.0, 3000.0];
    let r = transient(&chain, &grid, 1e-12, false).unwrap();
    for (t, p) in grid.iter().zip(&r.loss) {
        let want = (1.0 - (-lambda * t).exp()).powi(2);
        assert!((p - want).abs() < 1e-10, "t={t}: {p} vs {want}");
    }
}

#[test]
fn naive_chain_matches_dense_oracle() {
    for (m, n, h) in [(1, 6, 0.0), (1, 6, 0.3), (2, 8, 0.1)] {
        let chain = build_naive_chain(m, n, 1e-3, 0.05, h).unwrap();
        let q = dense_of(&chain);
        let mut p0 = vec![0.0; q.len()];
        p0[0] = 1.0;
        let r = transient(&chain, &[200.0, 2000.0], 1e-12, false).unwrap();
        for (i, t) in [200.0, 2000.0].iter().enumerate() {
            let want = *transient_dense(&q, &p0, *t).last().unwrap();
            assert!((r.loss[i] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn bypass_off_reduces_to_plain_chain() {
    let a = build_naive_chain(2, 8, 1e-4, 0.02, 0.0).unwrap();
    let q = dense_of(&a);
    for i in 0..q.len() {
        assert_eq!(q[i].iter().filter(|x| **x > 0.0).count(), a.row(i).count());
    }
    // With h = 0 there is exactly one route into LOSS: from the last state.
    let into_loss = (0..a.len()).filter(|&i| a.row(i).any(|(j, _)| j == a.loss_index())).count();
    assert_eq!(into_loss, 1);
}

#[test]
fn naive_versus_detailed_is_recorded() {
    // The classic single-rate chain against the detailed RAID5 model, both
    // with the Case Study 1 means. Observed, not asserted.
    let cfg = SystemConfig::elerath(6, 1, FitMethod::ThreeState);
    let detailed = raidrel_core::raid::analyze(&cfg, &[87_600.0], 1e-9, 1000.0, 1_000_000).unwrap();
    // Bypass: some surviving disk holds a defect, using each disk's
    // long-run defective fraction.
    let exposure = cfg.ttscr.unwrap().mean();
    let defective = exposure / (cfg.ttld.unwrap().mean() + exposure);
    let h = 1.0 - (1.0 - defective).powi(5);
    let naive = build_naive_chain(1, 6, 1.0 / cfg.ttop.mean(), 1.0 / cfg.ttr.mean(), h).unwrap();
    let p = transient(&naive, &[87_600.0], 1e-12, false).unwrap().loss[0] * 1000.0;
    println!(
        "RAID5 10 yr per 1000: naive (h = {h:.4}) {p:.3}, detailed {:.3}",
        detailed.series.points[0].analytic.unwrap()
    );
}

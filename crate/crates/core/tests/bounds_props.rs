mod common;

use common::{replay, small_experiment};
use transid::bounds::{aligned_partition_deltas, lemma6_bound, lemma6_bound_similar, report_for, BoundReport};
use transid::datamat::Snapshot;
use transid::engine::Identifier;
use transid::linalg;
use transid::subspace::{distance, RankPolicy};

const SLACK: f64 = 1e-9;

fn p() -> RankPolicy<f64> {
    RankPolicy::default()
}

#[test]
fn principal_basis_gaps_respect_the_half_angle_bounds() {
    let mut checked = 0;
    for seed in 0..100 {
        let exp = small_experiment(seed);
        let (n, m) = (exp.truth.n(), exp.truth.m());
        let lambda = n + m;
        let truth_space = exp.truth.behavior_space(&p());
        replay(&exp, |id, _, report| {
            let r = report.fresh_rank;
            let h = id.current_subspace();
            let d_t = distance(&truth_space, h).unwrap();
            let truth_side = aligned_partition_deltas(&truth_space, h, n, m).unwrap();
            let bound = lemma6_bound(r, lambda, d_t).unwrap();
            assert!(truth_side.total <= bound + SLACK, "seed {seed}");
            assert!(truth_side.n1 <= truth_side.total + SLACK && truth_side.n2 <= truth_side.total + SLACK);

            let d_s = distance(id.similar_space(), h).unwrap();
            let similar_side = aligned_partition_deltas(id.similar_space(), h, n, m).unwrap();
            assert!(similar_side.total <= lemma6_bound_similar(r, d_s).unwrap() + SLACK, "seed {seed}");
            checked += 1;
        });
    }
    assert!(checked > 300);
}

fn reports(seed: u64) -> (Vec<BoundReport<f64>>, bool) {
    let exp = small_experiment(seed);
    let truth_space = exp.truth.behavior_space(&p());
    let mut out = Vec::new();
    let id = replay(&exp, |id, _, report| {
        if report.rank_increased {
            out.push(report_for(id, &exp.truth, &truth_space).unwrap());
        }
    });
    (out, id.is_complete())
}

#[test]
fn relative_error_bounds_hold_at_fresh_steps() {
    let mut checked = 0;
    for seed in 0..100 {
        let (reports, _) = reports(seed);
        for b in &reports {
            assert!(b.lhs_thm9() <= b.rhs_thm9() + SLACK, "seed {seed} step {}: {} > {}", b.step, b.lhs_thm9(), b.rhs_thm9());
            assert!(b.lhs_thm10() <= b.rhs_thm10() + SLACK, "seed {seed} step {}: {} > {}", b.step, b.lhs_thm10(), b.rhs_thm10());
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn gamma_vanishes_exactly_at_completion_and_shrinks_before() {
    for seed in 0..100 {
        let (reports, complete) = reports(seed);
        assert!(complete);
        let last = reports.last().unwrap();
        assert_eq!(last.gamma(), 0.0);
        assert_eq!(last.rhs_thm9(), 0.0);
        assert!(last.lhs_thm9() < 1e-8);
        for w in reports.windows(2) {
            assert!(w[1].gamma() <= w[0].gamma() + SLACK, "seed {seed}");
            assert!(w[1].beta() + SLACK >= w[0].beta(), "seed {seed}");
        }
        for b in &reports[..reports.len() - 1] {
            assert!(b.gamma() > 0.0);
        }
    }
}

#[test]
fn beta_is_zero_before_any_data() {
    for seed in 0..20 {
        let exp = small_experiment(seed);
        let id = Identifier::new(&exp.similar_data, p()).unwrap();
        let truth_space = exp.truth.behavior_space(&p());
        // no snapshot yet: the similar side is exact, the truth side is undefined
        let d = distance(id.similar_space(), id.current_subspace()).unwrap();
        assert_eq!(lemma6_bound_similar(0, d).unwrap(), 0.0);
        assert!(report_for(&id, &exp.truth, &truth_space).is_err());
    }
}

#[test]
fn reference_block_conditioning_is_basis_invariant() {
    for seed in 0..50 {
        let (reports, _) = reports(seed);
        let exp = small_experiment(seed);
        let lambda = exp.truth.n() + exp.truth.m();
        let top = exp.truth.behavior_space(&p()).basis().rows(0, lambda).into_owned();
        for b in &reports {
            assert!((b.truth.nu1 - top.norm()).abs() < 1e-10);
            let k = linalg::cond2(&top);
            assert!((b.truth.kappa_true - k).abs() <= 1e-8 * k);
        }
    }
}

#[test]
fn rank_based_bounds_survive_duplicate_snapshots() {
    let mut checked = 0;
    for seed in 0..100 {
        let exp = small_experiment(seed);
        let (n, m) = (exp.truth.n(), exp.truth.m());
        let lambda = n + m;
        let truth_space = exp.truth.behavior_space(&p());
        let mut id = Identifier::new(&exp.similar_data, p()).unwrap();
        let snaps: Vec<_> = exp.truth_trajectory.snapshots().collect();
        for (k, h) in snaps.iter().enumerate() {
            if id.is_complete() {
                break;
            }
            id.push(h).unwrap();
            if k % 2 == 1 && !id.is_complete() {
                let dup = Snapshot::from_vector(n, m, h.as_vector() * -2.5 + snaps[k - 1].as_vector()).unwrap();
                let rep = id.push(&dup).unwrap();
                assert!(!rep.rank_increased);
                assert!(id.fresh_rank() < id.step());
                let b = report_for(&id, &exp.truth, &truth_space).unwrap();
                let d_t = distance(&truth_space, id.current_subspace()).unwrap();
                let gap = aligned_partition_deltas(&truth_space, id.current_subspace(), n, m).unwrap();
                assert!(gap.total <= lemma6_bound(id.fresh_rank(), lambda, d_t).unwrap() + SLACK);
                assert!(b.lhs_thm9() <= b.rhs_thm9() + SLACK, "seed {seed}");
                assert!(b.lhs_thm10() <= b.rhs_thm10() + SLACK, "seed {seed}");
                checked += 1;
            }
        }
    }
    assert!(checked > 50);
}

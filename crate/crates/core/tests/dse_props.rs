mod common;

use proptest::prelude::*;
use snn_dse::codec::{Scheme, SpikeSelectConfig};
use snn_dse::dse::{self, Axis, DesignPoint, ExploreOptions};
use snn_dse::engine::SelectorConfig;
use snn_dse::hwmodel::{self, ArchConfig, ArchKind, CostReport, MemOrg, TechConstants};
use snn_dse::mnist::MnistDir;
use snn_dse::netmodel::{CodingParams, NetworkTopology, SpikeProfile};
use snn_dse::trainer;

fn point(latency: f64, energy: f64, logic: f64, accuracy: f64) -> DesignPoint {
    DesignPoint {
        scheme: Scheme::JitteredPeriodic,
        accuracy,
        profile: SpikeProfile::new(vec![1.0]).unwrap(),
        report: CostReport {
            arch: ArchKind::Fpa,
            mem_org: MemOrg::FullyDistributed,
            cycles: latency,
            contention: 1.0,
            latency_s: latency,
            energy_j: energy,
            memory_bits: 8,
            logic_cells: logic,
            registers: 0.0,
            cost: latency * energy * logic,
        },
        objective: latency * energy * logic,
    }
}

/// `a` dominates `b`: no worse anywhere and better somewhere.
fn oracle_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn coords(p: &DesignPoint, axes: &[Axis]) -> Vec<f64> {
    axes.iter().map(|a| a.value(p)).collect()
}

fn points_strategy() -> impl Strategy<Value = Vec<DesignPoint>> {
    // Small integer grids produce many ties and duplicates.
    prop::collection::vec((1u8..6, 1u8..6, 1u8..6, 0u8..4), 1..40).prop_map(|v| {
        v.into_iter().map(|(l, e, g, a)| point(l as f64, e as f64, g as f64, 1.0 - a as f64 / 10.0)).collect()
    })
}

proptest! {
    #[test]
    fn pareto_front_matches_quadratic_oracle(
        points in points_strategy(),
        axes in prop::sample::subsequence(vec![Axis::Latency, Axis::Energy, Axis::Logic, Axis::AccuracyLoss], 1..=4),
    ) {
        let front = dse::pareto_front(&points, &axes);
        let expected: Vec<Vec<f64>> = points
            .iter()
            .map(|p| coords(p, &axes))
            .filter(|c| !points.iter().any(|q| oracle_dominates(&coords(q, &axes), c)))
            .collect();
        prop_assert_eq!(front.len(), expected.len());
        for p in &front {
            let c = coords(p, &axes);
            prop_assert!(!points.iter().any(|q| oracle_dominates(&coords(q, &axes), &c)));
        }
        prop_assert_eq!(dse::pareto_front(&front, &axes), front);
    }
}

fn options() -> ExploreOptions {
    ExploreOptions::default()
}

#[test]
fn single_point_equals_direct_evaluation() {
    let t: NetworkTopology = "784-100-10".parse().unwrap();
    let p = SpikeProfile::new(vec![200.0, 60.0]).unwrap();
    let opts = ExploreOptions {
        schemes: vec![Scheme::JitteredPeriodic],
        archs: vec![ArchKind::Ha],
        mem_orgs: vec![MemOrg::LayerShared],
        ..options()
    };
    let points = dse::explore_profiles(&t, &[(Scheme::JitteredPeriodic, 0.97, p.clone())], &opts).unwrap();
    assert_eq!(points.len(), 1);
    let direct =
        hwmodel::evaluate(&ArchConfig::new(ArchKind::Ha, MemOrg::LayerShared, TechConstants::default()), &t, &p)
            .unwrap();
    assert_eq!(points[0].report, direct);
    assert_eq!(points[0].accuracy, 0.97);
}

fn reference_profiles() -> Vec<(Scheme, f64, SpikeProfile)> {
    let p = |v: &[f64]| SpikeProfile::new(v.to_vec()).unwrap();
    vec![
        (Scheme::JitteredPeriodic, 0.9824, p(&[724.0, 173.0, 103.5, 39.0])),
        (Scheme::SpikeSelect, 0.9787, p(&[1547.0, 74.5, 35.0, 4.0])),
        (Scheme::SingleBurst, 0.768, p(&[62.5, 363.5, 1055.0, 1597.5])),
        (Scheme::FirstSpike, 0.8692, p(&[170.0, 14.0, 61.0, 87.0])),
    ]
}

#[test]
fn reference_profiles_give_36_clean_points_and_expected_front() {
    let t: NetworkTopology = "784-300-300-300-10".parse().unwrap();
    let points = dse::explore_profiles(&t, &reference_profiles(), &options()).unwrap();
    assert_eq!(points.len(), 36);
    let clock = TechConstants::default().clock_period();
    assert!(points.iter().all(|p| p.report.is_consistent(clock)));

    // Jittered Periodic latency ordering of the trade-off figure.
    let jp = |arch| {
        points
            .iter()
            .find(|p| {
                p.scheme == Scheme::JitteredPeriodic
                    && p.report.arch == arch
                    && p.report.mem_org == MemOrg::FullyDistributed
            })
            .unwrap()
            .report
            .latency_s
    };
    assert!(jp(ArchKind::Fpa) < jp(ArchKind::Ha) && jp(ArchKind::Ha) < jp(ArchKind::Tma));

    let axes = [Axis::Latency, Axis::Logic];
    let front = dse::pareto_front(&points, &axes);
    assert!(front.iter().any(|p| p.report.arch == ArchKind::Fpa));
    assert!(front.iter().any(|p| p.report.arch == ArchKind::Tma));
    // Centralized variants are strictly slower copies of the same footprint.
    assert!(front.iter().all(|p| p.report.mem_org != MemOrg::Centralized));
    assert_eq!(dse::pareto_front(&front, &axes), front);
}

#[test]
fn small_net_ranks_parallel_distributed_first() {
    // Fully parallel and multiplexed designs only, as in the high-level sweep.
    let t: NetworkTopology = "784-10-10".parse().unwrap();
    let profile = SpikeProfile::new(vec![305.0, 46.6]).unwrap();
    let opts = ExploreOptions { archs: vec![ArchKind::Fpa, ArchKind::Tma], ..options() };
    let points = dse::explore_profiles(&t, &[(Scheme::JitteredPeriodic, 0.92, profile)], &opts).unwrap();
    let best = &dse::rank_by_cost(&points)[0];
    assert_eq!((best.report.arch, best.report.mem_org), (ArchKind::Fpa, MemOrg::FullyDistributed));

    // Ranking is invariant under a common cost scale.
    let scaled: Vec<DesignPoint> = points
        .iter()
        .cloned()
        .map(|mut p| {
            p.report.cost *= 2.0;
            p
        })
        .collect();
    let a: Vec<_> = dse::rank_by_cost(&points).iter().map(|p| p.label()).collect();
    let b: Vec<_> = dse::rank_by_cost(&scaled).iter().map(|p| p.label()).collect();
    assert_eq!(a, b);
}

#[test]
fn exploration_is_reproducible_on_synthetic_digits() {
    let dir = tempfile::tempdir().unwrap();
    common::write_fake_mnist(dir.path(), 40, 8, 8, 4);
    let data = MnistDir::new(dir.path()).test().unwrap();
    let init = trainer::init_xavier(&"64-12-4".parse().unwrap(), 3);
    let hp = trainer::Hyperparams { epochs: 5, ..Default::default() };
    let net = trainer::train(&init, &data, &data, &hp, |_| {}).unwrap().network;
    let opts = ExploreOptions {
        coding: CodingParams { seed: 5, ..Default::default() },
        selector: SelectorConfig::delta(2),
        spike_select: SpikeSelectConfig::default(),
        ..options()
    };
    let a = dse::explore_with(&net, &data, &opts).unwrap();
    let b = dse::explore_with(&net, &data, &opts).unwrap();
    assert_eq!(a.len(), 36);
    assert_eq!(dse::to_csv(&a), dse::to_csv(&b));
    // Accuracy is attached per scheme.
    for s in Scheme::ALL {
        let accs: Vec<f64> = a.iter().filter(|p| p.scheme == s).map(|p| p.accuracy).collect();
        assert!(accs.iter().all(|&x| x == accs[0]));
    }
}

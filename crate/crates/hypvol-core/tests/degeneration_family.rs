use hypvol_core::cusp_model::W_PERIOD;
use hypvol_core::degeneration::*;
use hypvol_core::schottky::Profile;
use proptest::prelude::*;

fn family(ell: Profile, data: TrigData, grid: Vec<f64>) -> CyclicFamily {
    CyclicFamily::new(ell, Profile::Polynomial(vec![0.3]), data, grid, 0.2).unwrap()
}

fn cyclic_data() -> TrigData {
    TrigData { mean: 0.25, cos: vec![0.1], sin: vec![] }
}

fn zero_data() -> TrigData {
    TrigData { mean: 0.0, cos: vec![], sin: vec![] }
}

#[test]
fn frozen_family_gives_a_constant_sequence() {
    let fam = family(Profile::Polynomial(vec![0.05]), cyclic_data(), vec![0.1, 0.05, 0.025]);
    let run = run_sweep(&fam, &SweepSettings::default());
    let limit = run.limit.as_ref().unwrap().vol_r;
    for r in &run.records {
        let r = r.as_ref().unwrap();
        assert!((r.vol_r - limit).abs() < 1e-12, "eps {}: {} vs {}", r.eps, r.vol_r, limit);
        assert!(r.region_residual < 1e-4);
    }
    assert!(run.gaps().iter().all(|g| g.unwrap() < 1e-12));
    assert!(run.last_gaps_non_increasing(3));
}

#[test]
fn corner_pieces_shrink_linearly_in_ell() {
    let s = SweepSettings::default();
    let pieces = |ell: f64| {
        let fam = family(Profile::Polynomial(vec![ell]), zero_data(), vec![0.1, 0.05]);
        let st = prepare(&fam, 0.1, &s.collar).unwrap();
        run_near(&st, &fam.cutoffs().near, &s.regions).unwrap()
    };
    let small = pieces(1e-3);
    let large = pieces(0.1);
    let corner = |p: &RegionPieces| p.a1.abs() + p.a3.abs();
    // With φ = 0 and a cutoff that is 1 on the corner square, A₁ and A₃
    // are exactly linear in ℓ, so the ratio sits on 1e-2 up to rounding.
    let ratio = corner(&small) / corner(&large);
    assert!(ratio <= 1e-2 * (1.0 + 1e-9), "ratio {ratio}");
    assert!((small.a1 / large.a1 - 1e-2).abs() < 1e-9);
    assert!((small.a3 / large.a3 - 1e-2).abs() < 1e-9);
}

#[test]
fn cusp_region_one_is_the_weighted_area_of_the_cutoff() {
    let s = SweepSettings::default();
    let fam = CyclicFamily::new(
        Profile::Polynomial(vec![0.0, 1.0]),
        Profile::Polynomial(vec![0.0]),
        zero_data(),
        vec![0.1, 0.05],
        0.15,
    )
    .unwrap();
    let st = prepare(&fam, 0.0, &s.collar).unwrap();
    let cut = &fam.cutoffs().near;
    let r = run_near(&st, cut, &s.regions).unwrap();
    // Midpoint rule in (u, v) on the cone |v| ≤ u, with density
    // (1 + v²/u²)/u, against the (u, V = v/u) form used by the solver.
    let d = cut.reach();
    let n = 2000;
    let h = d / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let u = (i as f64 + 0.5) * h;
        let m = 400;
        let hv = 2.0 * u / m as f64;
        for j in 0..m {
            let v = -u + (j as f64 + 0.5) * hv;
            acc += cut.value(u, v) * (1.0 + v * v / (u * u)) / u * hv;
        }
    }
    let oracle = W_PERIOD * acc * h;
    assert!((r.r1 - oracle).abs() < 1e-5 * oracle, "{} {}", r.r1, oracle);
    assert_eq!((r.a1, r.a2, r.a3), (0.0, 0.0, 0.0));
}

#[test]
fn family_rejects_bad_grids() {
    let bad = |grid: Vec<f64>| {
        CyclicFamily::new(Profile::Polynomial(vec![0.0, 1.0]), Profile::Polynomial(vec![0.3]), cyclic_data(), grid, 0.2)
            .is_err()
    };
    assert!(bad(vec![0.05, 0.1]));
    assert!(bad(vec![0.1, -0.05]));
    assert!(bad(vec![0.3, 0.25]));
    assert!(bad(vec![0.1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regions_partition_the_chart(ell in 0.0f64..0.19, u in 1e-9f64..0.2, v in -0.2f64..0.2) {
        let hits = region_indicators(u, v, ell, 0.2).iter().filter(|b| **b).count();
        prop_assert_eq!(hits, 1);
    }

    #[test]
    fn cutoffs_lie_in_the_unit_interval(u in 0.0f64..1.0, v in -1.0f64..1.0, delta in 0.01f64..0.25) {
        let c = CutoffSet::new(delta);
        for x in [c.near.value(u, v), c.total.value(u, v), c.far.value(u, v), c.theta(u, v)] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!((c.total.value(u, v) * c.theta(u, v) - c.far.value(u, v)).abs() < 1e-15);
    }
}

#[test]
fn reference_limit_is_frozen() {
    // Cusped limit of the reference family (ℓ = ε, ν = 0.3, data
    // 0.25 + 0.1 cos 4πw, δ = 0.2). The value is a regression anchor; the
    // region decomposition above is its independent check.
    let fam = CyclicFamily::new(
        Profile::Polynomial(vec![0.0, 1.0]),
        Profile::Polynomial(vec![0.3]),
        cyclic_data(),
        vec![0.1, 0.05],
        0.2,
    )
    .unwrap();
    let r = run_at(&fam, 0.0, &SweepSettings::default()).unwrap();
    assert!((r.vol_r - 0.4088300135).abs() < 1e-9, "{}", r.vol_r);
    assert!(r.region_residual < 1e-4);
}

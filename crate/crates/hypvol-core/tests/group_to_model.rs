use hypvol_core::cusp_model::{phi_theta, CuspParams};
use hypvol_core::moebius::{HalfSpacePoint, MoebiusMap};
use hypvol_core::schottky::{validate_group, AdmissibleFamily, DegeneratingGenerator, GeneratorSpec, Profile};
use hypvol_core::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn loxodromic(p_minus: C64, p_plus: C64, ell: f64, nu: f64) -> MoebiusMap {
    MoebiusMap::from_fixed_points(p_minus, p_plus, C64::new(ell, ell * nu).exp()).unwrap()
}

#[test]
fn genus_two_group_with_separated_fixed_points_is_adapted() {
    let g1 = loxodromic(C64::new(-3.0, 0.0), C64::new(-2.0, 0.0), 2.0, 0.5);
    let g2 = loxodromic(C64::new(2.0, 0.5), C64::new(3.0, -0.2), 2.4, -1.0);
    let (a, b) = g1.canonical_circles().unwrap();
    let (c, d) = g2.canonical_circles().unwrap();
    let group = validate_group(vec![g1, g2], vec![a, b, c, d]).unwrap();
    assert_eq!(group.genus(), 2);
    assert!(group.min_gap() > 0.0);
    assert!(group.max_pairing_error() < 1e-10);
}

#[test]
fn overlapping_circles_are_not_adapted() {
    let g1 = loxodromic(C64::new(-0.5, 0.0), C64::new(0.5, 0.0), 2.5, 0.0);
    let g2 = loxodromic(C64::new(-0.4, 0.1), C64::new(0.6, 0.1), 2.5, 0.0);
    let (a, b) = g1.canonical_circles().unwrap();
    let (c, d) = g2.canonical_circles().unwrap();
    assert!(matches!(validate_group(vec![g1, g2], vec![a, b, c, d]), Err(Error::NotAdapted { .. })));
}

#[test]
fn degenerating_parameters_converge_to_the_parabolic_limit() {
    let gen = DegeneratingGenerator {
        p: C64::new(0.0, 0.0),
        c: C64::new(1.0, 0.0),
        ell: Profile::Polynomial(vec![0.0, 1.0]),
        nu: Profile::Polynomial(vec![0.3, 0.2]),
    };
    let fam = AdmissibleFamily::new(vec![GeneratorSpec::Degenerating(gen)], AdmissibleFamily::geometric_grid(0.1, 6)).unwrap();
    let (lam0, nu0) = fam.family_parameters(0, 0.0).unwrap();
    let mut last = f64::INFINITY;
    for &eps in fam.grid() {
        let (lam, nu) = fam.family_parameters(0, eps).unwrap();
        assert!((nu - (0.3 + 0.2 * eps)).abs() < 1e-10);
        let gap = (lam - lam0).abs() + (nu - nu0).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_conjugates_the_generator_to_a_half_translation(
        ell in 0.05f64..1.0,
        nu in -2.0f64..2.0,
        lambda in 0.5f64..2.0,
        x in 0.1f64..2.0,
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
    ) {
        let p = CuspParams::new(ell, nu, lambda).unwrap();
        let gamma = loxodromic(C64::new(0.0, 0.0), C64::new(lambda * ell, 0.0), ell, nu);
        let pt = HalfSpacePoint::new(x, C64::new(re, im)).unwrap();
        let image = gamma.poincare_extension(&pt);
        let (Ok(a), Ok(b)) = (phi_theta(&p, &pt), phi_theta(&p, &image)) else {
            return Ok(());
        };
        prop_assert!((a[0] - b[0]).abs() < 1e-8 * (1.0 + a[0].abs()));
        prop_assert!((a[1] - b[1]).abs() < 1e-8 * (1.0 + a[1].abs()));
        prop_assert!(((b[2] - a[2]).abs() - 0.5).abs() < 1e-9, "w shift {}", b[2] - a[2]);
    }
}

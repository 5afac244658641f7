use endoscopy_core::descent::{
    block_reduce_h, block_reduce_twisted, match_classes, residue_conjugacy_suite, MatchOptions,
    REPORT_SCHEMA_VERSION,
};
use endoscopy_core::matrices::{membership, Shape};
use endoscopy_core::norms::integral_norm_section;
use endoscopy_core::sample::{random_kmh, torus_element};
use endoscopy_core::twisted::tjd;
use endoscopy_core::{Error, MatrixE, RingContext};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn reduction_at_level_two() {
    let c = RingContext::new(3, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let t = tjd(&random_kmh(&c, 1, 2, &mut rng), 2).unwrap().ss;
        let (k, red) = block_reduce_h(&t, 2).unwrap();
        assert!(membership(&k, Shape::KmH(2)).unwrap());
        assert!(membership(&red, Shape::Reduced(2)).unwrap());
        let (s, _) = integral_norm_section(&t, 2, None).unwrap();
        let r = block_reduce_twisted(&s, 2).unwrap();
        assert!(membership(&r.reduced.delta, Shape::Reduced(2)).unwrap());
    }
}

#[test]
fn reduction_rejects_bad_levels() {
    let c = RingContext::new(3, 6).unwrap();
    let id = MatrixE::identity(&c, 3);
    assert!(matches!(block_reduce_h(&id, 0), Err(Error::ConfigInvalid(_))));
    let short = RingContext::new(3, 3).unwrap();
    assert!(matches!(block_reduce_h(&MatrixE::identity(&short, 3), 1), Err(Error::ConfigInvalid(_))));
}

#[test]
fn report_json_shape() {
    let c = RingContext::new(3, 6).unwrap();
    let u = c.residue_units().into_iter().find(|u| u.residue_order(&c) == 8).unwrap().teichmuller(&c);
    let z = c.one() + c.int(3);
    let pert = MatrixE::diag(&c, &[z, c.one(), z.conj().inv().unwrap()]);
    let gamma = &torus_element(&c, &[u]) * &pert;
    let r = match_classes(&gamma, 1, MatchOptions::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(v["schema_version"], REPORT_SCHEMA_VERSION);
    assert_eq!(v["transfer_factor"], 1);
    assert_eq!(v["j_count"], 1);
    assert_eq!(v["relations"]["centralizer_ranks_equal"], true);
    // witnesses parse back into matrices that multiply correctly
    let t = MatrixE::parse(&c, r.t_target.as_ref().unwrap()).unwrap();
    let vv = MatrixE::parse(&c, r.v_target.as_ref().unwrap()).unwrap();
    assert!((&t * &vv).eq_at_prec(&gamma));
    assert!(r.probes.attempted > 0 && r.probes.identified == r.probes.attempted);
}

#[test]
fn matching_outside_the_group() {
    let c = RingContext::new(3, 6).unwrap();
    // not unitary
    let g = MatrixE::diag(&c, &[c.int(2), c.one(), c.one()]);
    assert!(matches!(match_classes(&g, 1, MatchOptions::default()), Err(Error::NotInCompact(_))));
    // residue eigenvalues collide
    let id = MatrixE::identity(&c, 3);
    assert!(matches!(match_classes(&id, 1, MatchOptions::default()), Err(Error::NotStronglyRegular)));
}

#[test]
fn residue_orbits_match_characteristic_polynomials() {
    let r = residue_conjugacy_suite(&RingContext::new(3, 4).unwrap()).unwrap();
    assert_eq!(r.orbits, r.charpoly_classes);
    assert!(r.split_classes.is_empty());
}

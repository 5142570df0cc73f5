mod common;

use common::{kl_quadrature_error, random_network};
use pbcert::model::PriorRef;
use pbcert::SeededRng;

#[test]
fn closed_form_matches_quadrature() {
    for seed in 0..10 {
        let (err, closed, quad) = kl_quadrature_error(seed);
        assert!(err <= 1e-6, "seed {seed}: closed {closed} quadrature {quad}");
    }
}

#[test]
fn kl_to_self_is_zero() {
    let mut rng = SeededRng::new(3);
    let q = random_network(&[5, 7, 3], &mut rng);
    assert_eq!(q.kl_to_prior(&PriorRef::from_network(&q, 0.1)).unwrap(), 0.0);
}

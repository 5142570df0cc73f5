mod common;

use common::{bounded_xe_fd_error, kl_gradient_fd_error, pathwise_fd_error};

const TOL: f64 = 1e-4;

#[test]
fn pathwise_gradient_matches_finite_differences() {
    for seed in 0..25 {
        let e = pathwise_fd_error(seed);
        assert!(e <= TOL, "seed {seed}: relative error {e:e}");
    }
}

#[test]
fn kl_gradient_matches_finite_differences() {
    for seed in 0..25 {
        let e = kl_gradient_fd_error(seed);
        assert!(e <= TOL, "seed {seed}: relative error {e:e}");
    }
}

#[test]
fn bounded_xe_gradient_matches_finite_differences() {
    for seed in 0..25 {
        let e = bounded_xe_fd_error(seed);
        assert!(e <= TOL, "seed {seed}: relative error {e:e}");
    }
}

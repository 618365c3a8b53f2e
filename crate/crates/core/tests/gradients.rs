mod common;

use common::{logreg_grad_error, mlp_grad_error, tsne_grad_error, GRAD_TOL};

#[test]
fn mlp_backprop_matches_finite_differences() {
    for seed in 0..20 {
        let e = mlp_grad_error(seed, false, false);
        assert!(e < GRAD_TOL, "seed {seed}: {e}");
    }
}

#[test]
fn mlp_backprop_with_fixed_dropout_masks() {
    for seed in 100..120 {
        let e = mlp_grad_error(seed, true, false);
        assert!(e < GRAD_TOL, "seed {seed}: {e}");
    }
}

#[test]
fn mlp_sparse_first_layer_gradient() {
    for seed in 200..220 {
        let e = mlp_grad_error(seed, false, true);
        assert!(e < GRAD_TOL, "seed {seed}: {e}");
    }
}

#[test]
fn logreg_objective_gradient() {
    for seed in 0..20 {
        let e = logreg_grad_error(seed);
        assert!(e < GRAD_TOL, "seed {seed}: {e}");
    }
}

#[test]
fn tsne_kl_gradient() {
    for seed in 0..20 {
        let e = tsne_grad_error(seed);
        assert!(e < GRAD_TOL, "seed {seed}: {e}");
    }
}

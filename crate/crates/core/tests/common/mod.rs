//! Shared oracles for the integration suites: a dense masked reference
//! network (the literal mask-reapplied-every-update procedure), a
//! finite-difference gradient checker, and MNIST discovery.

pub mod dense_ref;

use std::path::PathBuf;

use sparsenet::network::Network;

/// Locate the four uncompressed MNIST IDX files: `$MNIST_DIR` first,
/// then `<workspace>/data/mnist`.
pub fn mnist_dir() -> Option<PathBuf> {
    let mut candidates = Vec::new();
    if let Ok(dir) = std::env::var("MNIST_DIR") {
        candidates.push(PathBuf::from(dir));
    }
    candidates.push(
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../..")
            .join("data/mnist"),
    );
    let files = [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ];
    candidates
        .into_iter()
        .find(|dir| files.iter().all(|f| dir.join(f).exists()))
}

fn loss_at(net: &Network, x: &[f64], target: &[f64]) -> f64 {
    Network::loss(&net.forward_eval(x).unwrap(), target)
}

/// Check every stored weight and bias gradient against central finite
/// differences (step `h`), asserting 1e-6 absolute / 1e-4 relative
/// agreement. Returns (parameters checked, worst absolute error).
pub fn check_gradients(net: &mut Network, x: &[f64], target: &[f64], h: f64) -> (usize, f64) {
    let (_, grads) = net.gradients_for(x, target).unwrap();
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let mut assert_close = |analytic: f64, numeric: f64, what: String| {
        let err = (numeric - analytic).abs();
        assert!(
            err <= 1e-6 || err <= 1e-4 * analytic.abs(),
            "{what}: analytic {analytic} vs numeric {numeric}"
        );
        checked += 1;
        worst = worst.max(err);
    };
    for l in 0..net.layers().len() {
        for i in 0..net.layers()[l].weights.nnz() {
            let orig = net.layers()[l].weights.values()[i];
            net.layers_mut()[l].weights.values_mut()[i] = orig + h;
            let up = loss_at(net, x, target);
            net.layers_mut()[l].weights.values_mut()[i] = orig - h;
            let down = loss_at(net, x, target);
            net.layers_mut()[l].weights.values_mut()[i] = orig;
            assert_close(
                grads.layers[l].0.values()[i],
                (up - down) / (2.0 * h),
                format!("layer {l} weight {i}"),
            );
        }
        for i in 0..net.layers()[l].bias.len() {
            let orig = net.layers()[l].bias[i];
            net.layers_mut()[l].bias[i] = orig + h;
            let up = loss_at(net, x, target);
            net.layers_mut()[l].bias[i] = orig - h;
            let down = loss_at(net, x, target);
            net.layers_mut()[l].bias[i] = orig;
            assert_close(
                grads.layers[l].1[i],
                (up - down) / (2.0 * h),
                format!("layer {l} bias {i}"),
            );
        }
    }
    (checked, worst)
}

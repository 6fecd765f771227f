use proptest::prelude::*;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::*;
use crate::error::Error;
use crate::rng;

fn random(shape: &[usize], seed: u64) -> Tensor {
    let mut r = rng::seeded(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| r.sample(StandardNormal)).collect()).unwrap()
}

fn check(f: impl FnMut(&mut Graph, &[Var]) -> crate::Result<Var>, params: Vec<(&str, Tensor)>) -> GradCheckReport {
    let params: Vec<(String, Tensor)> = params.into_iter().map(|(n, t)| (n.to_string(), t)).collect();
    let report = grad_check(f, &params, &GradCheckOptions::default()).unwrap();
    assert!(report.passed, "{report:?}");
    report
}

#[test]
fn sigmoid_and_softmax_values() {
    let mut g = Graph::new(0);
    let x = g.constant(Tensor::scalar(0.0));
    let s = g.sigmoid(x).unwrap();
    assert_eq!(g.value(s).item(), 0.5);

    let v = g.constant(Tensor::vector(vec![1.7, 1.7, 1.7]));
    let sm = g.softmax(v, vec![1.0; 3]).unwrap();
    for &p in g.value(sm).data() {
        assert!((p - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn masked_mean_ignores_padding() {
    let mut g = Graph::new(0);
    let x = g.constant(Tensor::new(vec![3, 1], vec![2.0, 4.0, 99.0]).unwrap());
    let m = g.masked_mean(x, vec![1.0, 1.0, 0.0]).unwrap();
    assert_eq!(g.value(m).data(), &[3.0]);
}

#[test]
fn analytic_derivatives_at_zero() {
    let mut g = Graph::new(0);
    let x = g.param(Tensor::scalar(0.0));
    let s = g.sigmoid(x).unwrap();
    g.backward(s).unwrap();
    assert_eq!(g.grad(x).unwrap().item(), 0.25);

    let mut g = Graph::new(0);
    let x = g.param(Tensor::scalar(0.0));
    let t = g.tanh(x).unwrap();
    g.backward(t).unwrap();
    assert_eq!(g.grad(x).unwrap().item(), 1.0);
}

#[test]
fn square_at_three() {
    let params = vec![("x".to_string(), Tensor::scalar(3.0))];
    let report = grad_check(
        |g, v| g.mul(v[0], v[0]),
        &params,
        &GradCheckOptions::default(),
    )
    .unwrap();
    assert!(report.passed);
    assert!(report.max_rel_err < 1e-6);
}

#[test]
fn zero_parameters_is_a_vacuous_pass() {
    let report = grad_check(
        |g, _| Ok(g.constant(Tensor::scalar(1.0))),
        &[],
        &GradCheckOptions::default(),
    )
    .unwrap();
    assert!(report.passed);
    assert_eq!(report.checked, 0);
    assert!(report.worst_parameter.is_none());
}

#[test]
fn nondeterministic_function_is_rejected() {
    let mut calls = 0.0;
    let params = vec![("x".to_string(), Tensor::scalar(1.0))];
    let err = grad_check(
        |g, v| {
            calls += 1.0;
            g.add_scalar(v[0], calls)
        },
        &params,
        &GradCheckOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::Contract(_)));
}

#[test]
fn two_layer_perceptron_matches_finite_differences() {
    let x = random(&[5, 4], 1);
    let targets = vec![0, 2, 1, 2, 0];
    check(
        |g, p| {
            let input = g.constant(x.clone());
            let h = g.matmul(input, p[0])?;
            let h = g.add_row(h, p[1])?;
            let h = g.tanh(h)?;
            let o = g.matmul(h, p[2])?;
            let o = g.add_row(o, p[3])?;
            g.cross_entropy(o, targets.clone(), vec![0.2; 5])
        },
        vec![
            ("w1", random(&[4, 6], 2)),
            ("b1", random(&[6], 3)),
            ("w2", random(&[6, 3], 4)),
            ("b2", random(&[3], 5)),
        ],
    );
}

/// Reduces any tensor to a scalar with a fixed random projection so that
/// every output entry contributes a distinct weight.
fn project(g: &mut Graph, y: Var, seed: u64) -> crate::Result<Var> {
    let shape = g.shape(y).to_vec();
    let w = g.constant(random(&shape, seed));
    let p = g.mul(y, w)?;
    g.sum(p)
}

#[test]
fn every_primitive_matches_finite_differences() {
    for seed in 0..5u64 {
        let s = seed * 100;
        check(|g, p| { let y = g.matmul(p[0], p[1])?; project(g, y, s) },
            vec![("a", random(&[2, 3, 4], s + 1)), ("b", random(&[4, 5], s + 2))]);
        check(|g, p| { let y = g.add(p[0], p[1])?; project(g, y, s) },
            vec![("a", random(&[3, 4], s + 1)), ("b", random(&[3, 4], s + 2))]);
        check(|g, p| { let y = g.mul(p[0], p[1])?; project(g, y, s) },
            vec![("a", random(&[3, 4], s + 1)), ("b", random(&[3, 4], s + 2))]);
        check(|g, p| { let y = g.add_row(p[0], p[1])?; project(g, y, s) },
            vec![("a", random(&[3, 4], s + 1)), ("b", random(&[4], s + 2))]);
        check(|g, p| { let y = g.scale(p[0], -1.5)?; let y = g.add_scalar(y, 0.3)?; project(g, y, s) },
            vec![("a", random(&[6], s + 1))]);
        check(|g, p| { let y = g.sigmoid(p[0])?; project(g, y, s) }, vec![("a", random(&[7], s + 1))]);
        check(|g, p| { let y = g.tanh(p[0])?; project(g, y, s) }, vec![("a", random(&[7], s + 1))]);
        check(|g, p| { let y = g.exp(p[0])?; project(g, y, s) }, vec![("a", random(&[7], s + 1))]);
        check(|g, p| { let y = g.sigmoid(p[0])?; let y = g.log(y)?; project(g, y, s) },
            vec![("a", random(&[7], s + 1))]);
        check(|g, p| { let y = g.concat_cols(&[p[0], p[1]])?; let y = g.slice_cols(y, 1, 4)?; project(g, y, s) },
            vec![("a", random(&[3, 2], s + 1)), ("b", random(&[3, 3], s + 2))]);
        check(|g, p| { let y = g.concat_rows(&[p[0], p[1]])?; let y = g.gather_rows(y, vec![4, 0, 0, 2])?; project(g, y, s) },
            vec![("a", random(&[2, 3], s + 1)), ("b", random(&[3, 3], s + 2))]);
        check(|g, p| { let y = g.reshape(p[0], vec![3, 4])?; let y = g.repeat_rows(y, 3)?; project(g, y, s) },
            vec![("a", random(&[2, 6], s + 1))]);
        let mask = vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        check(|g, p| { let y = g.masked_mean(p[0], mask.clone())?; project(g, y, s) },
            vec![("a", random(&[2, 3, 4], s + 1))]);
        check(|g, p| { let y = g.softmax(p[0], mask.clone())?; project(g, y, s) },
            vec![("a", random(&[2, 3], s + 1))]);
        check(|g, p| { let y = g.group_weighted_sum(p[0], p[1])?; project(g, y, s) },
            vec![("w", random(&[2, 3], s + 1)), ("v", random(&[2, 3, 4], s + 2))]);
        check(|g, p| { let y = g.blend(p[0], p[1], vec![1.0, 0.0, 0.25])?; project(g, y, s) },
            vec![("a", random(&[3, 2], s + 1)), ("b", random(&[3, 2], s + 2))]);
        check(|g, p| { let y = g.mask_rows(p[0], vec![1.0, 0.0, 0.5])?; project(g, y, s) },
            vec![("a", random(&[3, 2], s + 1))]);
        check(|g, p| { g.set_training(true); let y = g.dropout(p[0], 0.5)?; project(g, y, s) },
            vec![("a", random(&[4, 4], s + 1))]);
        check(|g, p| g.bce_with_logits(p[0], vec![1.0, 0.0, 1.0, 0.0], vec![0.5, 1.0, 0.0, 2.0]),
            vec![("a", random(&[4], s + 1))]);
        check(|g, p| g.cross_entropy(p[0], vec![1, 0, 3], vec![1.0, 0.0, 0.7]),
            vec![("a", random(&[3, 4], s + 1))]);
    }
}

#[test]
fn backward_requires_a_scalar() {
    let mut g = Graph::new(0);
    let x = g.param(Tensor::vector(vec![1.0, 2.0]));
    let y = g.tanh(x).unwrap();
    assert!(matches!(g.backward(y), Err(Error::Contract(_))));
}

#[test]
fn shape_mismatch_names_the_primitive() {
    let mut g = Graph::new(0);
    let a = g.constant(Tensor::zeros(&[2, 3]));
    let b = g.constant(Tensor::zeros(&[2, 3]));
    match g.matmul(a, b) {
        Err(Error::Dimension { op, lhs, rhs }) => {
            assert_eq!(op, "matmul");
            assert_eq!((lhs, rhs), (vec![2, 3], vec![2, 3]));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn non_finite_outputs_are_rejected() {
    let mut g = Graph::new(0);
    let x = g.constant(Tensor::vector(vec![1.0, 0.0]));
    assert!(matches!(g.log(x), Err(Error::Numeric(_))));
}

#[test]
fn unused_leaves_get_zero_gradient() {
    let mut g = Graph::new(0);
    let a = g.param(Tensor::vector(vec![1.0, 2.0]));
    let unused = g.param(Tensor::vector(vec![3.0]));
    let loss = g.sum(a).unwrap();
    g.backward(loss).unwrap();
    assert_eq!(g.grad(unused).unwrap().data(), &[0.0]);
    assert_eq!(g.grad(a).unwrap().data(), &[1.0, 1.0]);
}

#[test]
fn replay_is_bit_identical() {
    let mut g = Graph::training(9);
    let a = g.param(random(&[4, 3], 1));
    let b = g.param(random(&[3, 2], 2));
    let h = g.matmul(a, b).unwrap();
    let h = g.dropout(h, 0.3).unwrap();
    let h = g.tanh(h).unwrap();
    let _ = g.softmax(h, vec![1.0; 8]).unwrap();
    g.verify_replay().unwrap();
}

#[test]
fn dropout_is_identity_in_eval_mode() {
    let mut g = Graph::new(3);
    let x = g.constant(random(&[10], 1));
    let y = g.dropout(x, 0.5).unwrap();
    assert_eq!(g.value(x), g.value(y));
}

#[test]
fn dropout_scales_kept_activations() {
    let mut g = Graph::training(3);
    let x = g.constant(Tensor::full(&[1000], 1.0));
    let y = g.dropout(x, 0.2).unwrap();
    for &v in g.value(y).data() {
        assert!(v == 0.0 || (v - 1.25).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn softmax_is_a_distribution_over_unmasked(
        values in prop::collection::vec(-30.0f64..30.0, 1..12),
        mask_bits in prop::collection::vec(any::<bool>(), 12),
    ) {
        let n = values.len();
        let mut mask: Vec<f64> = mask_bits[..n].iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        mask[0] = 1.0;
        let mut g = Graph::new(0);
        let x = g.constant(Tensor::vector(values));
        let y = g.softmax(x, mask.clone()).unwrap();
        let out = g.value(y).data();
        let total: f64 = out.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-6);
        for (p, m) in out.iter().zip(&mask) {
            prop_assert!(*p >= 0.0);
            if *m == 0.0 {
                prop_assert_eq!(*p, 0.0);
            }
        }
    }

    #[test]
    fn backward_is_linear_over_independent_losses(seed in 0u64..1000) {
        let a0 = random(&[3, 4], seed);
        let w0 = random(&[4, 2], seed + 1);
        let build = |g: &mut Graph, which: u8| {
            let a = g.param(a0.clone());
            let w = g.param(w0.clone());
            let h = g.matmul(a, w).unwrap();
            let l1 = { let t = g.tanh(h).unwrap(); g.sum(t).unwrap() };
            let l2 = { let s = g.sigmoid(a).unwrap(); let s = g.mul(s, s).unwrap(); g.sum(s).unwrap() };
            let loss = match which { 0 => l1, 1 => l2, _ => g.add(l1, l2).unwrap() };
            g.backward(loss).unwrap();
            (g.grad(a).unwrap(), g.grad(w).unwrap())
        };
        let (a1, w1) = build(&mut Graph::new(0), 0);
        let (a2, w2) = build(&mut Graph::new(0), 1);
        let (a3, w3) = build(&mut Graph::new(0), 2);
        for ((x, y), z) in a1.data().iter().zip(a2.data()).zip(a3.data()) {
            prop_assert!((x + y - z).abs() < 1e-12);
        }
        for ((x, y), z) in w1.data().iter().zip(w2.data()).zip(w3.data()) {
            prop_assert!((x + y - z).abs() < 1e-12);
        }
    }
}

use super::*;
use crate::error::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Build = dyn Fn(&mut Graph, &[Var]) -> crate::Result<Var>;

/// Analytic gradients of `build` at `inputs` next to central differences.
fn check_gradients(inputs: &[(Vec<usize>, Vec<f64>)], build: &Build) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|(s, v)| g.variable(s.clone(), v.clone()).unwrap()).collect();
    let loss = build(&mut g, &vars).unwrap();
    g.backward(loss).unwrap();
    let analytic: Vec<Vec<f64>> = vars.iter().map(|&v| g.grad(v)).collect();

    let eval = |vals: &[(Vec<usize>, Vec<f64>)]| {
        let mut g = Graph::new();
        let vars: Vec<Var> = vals.iter().map(|(s, v)| g.variable(s.clone(), v.clone()).unwrap()).collect();
        let l = build(&mut g, &vars).unwrap();
        g.scalar(l)
    };
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for (i, (_, vals)) in inputs.iter().enumerate() {
        for j in 0..vals.len() {
            let mut plus = inputs.to_vec();
            plus[i].1[j] += eps;
            let mut minus = inputs.to_vec();
            minus[i].1[j] -= eps;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            let a = analytic[i][j];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

#[test]
fn relu_and_matmul_examples() {
    let mut g = Graph::new();
    let x = g.constant(vec![3], vec![-1.0, 0.0, 2.0]).unwrap();
    let r = g.relu(x).unwrap();
    assert_eq!(g.value(r), &[0.0, 0.0, 2.0]);
    let a = g.constant(vec![2, 3], vec![1.0; 6]).unwrap();
    let b = g.constant(vec![3, 1], vec![1.0; 3]).unwrap();
    let c = g.matmul(a, b).unwrap();
    assert_eq!(g.shape(c), &[2, 1]);
    assert_eq!(g.value(c), &[3.0, 3.0]);
}

#[test]
fn conv1d_example() {
    let mut g = Graph::new();
    let x = g.constant(vec![1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let k = g.constant(vec![1, 1, 3], vec![1.0, 0.0, -1.0]).unwrap();
    let y = g.conv1d(x, k, 1, 0).unwrap();
    assert_eq!(g.value(y), &[-2.0, -2.0]);
    // padding and stride
    let y = g.conv1d(x, k, 2, 1).unwrap();
    // padded [0,1,2,3,4,0]: t=0 -> 0 - 2, t=1 -> 2 - 4
    assert_eq!(g.value(y), &[-2.0, -2.0]);
}

#[test]
fn shape_mismatch_names_both_shapes() {
    let mut g = Graph::new();
    let a = g.constant(vec![2, 3], vec![0.0; 6]).unwrap();
    let b = g.constant(vec![2, 3], vec![0.0; 6]).unwrap();
    let err = g.matmul(a, b).unwrap_err();
    assert!(matches!(err, Error::Structural(_)));
    assert!(err.to_string().contains("[2, 3]"));
    let c = g.constant(vec![3], vec![0.0; 3]).unwrap();
    assert!(g.add(a, c).is_err());
    let k = g.constant(vec![1, 4, 3], vec![0.0; 12]).unwrap();
    assert!(g.conv1d(a, k, 1, 0).is_err());
}

#[test]
fn non_finite_forward_is_an_error() {
    let mut g = Graph::new();
    let x = g.constant(vec![1], vec![0.0]).unwrap();
    assert!(g.reciprocal(x).is_err());
    assert!(g.log2(x).is_err());
}

#[test]
fn backward_examples() {
    let mut g = Graph::new();
    let x = g.variable(vec![1], vec![3.0]).unwrap();
    let l = g.mul(x, x).unwrap();
    g.backward(l).unwrap();
    assert_eq!(g.grad(x), vec![6.0]);

    let mut g = Graph::new();
    let x = g.variable(vec![2], vec![-1.0, 2.0]).unwrap();
    let r = g.relu(x).unwrap();
    let l = g.sum(r).unwrap();
    g.backward(l).unwrap();
    assert_eq!(g.grad(x), vec![0.0, 1.0]);
}

#[test]
fn non_participating_grads_are_zero_and_non_scalar_rejected() {
    let mut g = Graph::new();
    let x = g.variable(vec![2], vec![1.0, 2.0]).unwrap();
    let unused = g.variable(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
    let l = g.sum(x).unwrap();
    g.backward(l).unwrap();
    assert_eq!(g.grad(unused), vec![0.0; 3]);
    assert!(matches!(g.backward(x), Err(Error::Usage(_))));
    assert!(matches!(Graph::new().backward(Var::from_raw(0)), Err(Error::Usage(_))));
}

#[test]
fn mask_examples() {
    for (mask, expect) in [
        (vec![true, true], vec![1.0, 1.0]),
        (vec![false, false], vec![0.0, 0.0]),
        (vec![true, false], vec![1.0, 0.0]),
    ] {
        let mut g = Graph::new();
        let x = g.variable(vec![2], vec![0.3, -0.7]).unwrap();
        let m = g.stop_gradient_mask(x, &mask).unwrap();
        assert_eq!(g.value(m), g.value(x));
        let l = g.sum(m).unwrap();
        g.backward(l).unwrap();
        assert_eq!(g.grad(x), expect);
    }
    let mut g = Graph::new();
    let x = g.variable(vec![2], vec![0.3, -0.7]).unwrap();
    assert!(matches!(g.stop_gradient_mask(x, &[true]), Err(Error::Structural(_))));
}

#[test]
fn every_primitive_passes_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = rand_vec(&mut rng, 6, 1.0);
    let w = rand_vec(&mut rng, 6, 1.0);
    let pos: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
    let cases: Vec<(&str, Vec<(Vec<usize>, Vec<f64>)>, Box<Build>)> = vec![
        ("add", vec![(vec![6], v.clone()), (vec![6], w.clone())], Box::new(|g, x| {
            let s = g.add(x[0], x[1])?;
            let s = g.square(s)?;
            g.sum(s)
        })),
        ("sub-mul", vec![(vec![6], v.clone()), (vec![6], w.clone())], Box::new(|g, x| {
            let s = g.sub(x[0], x[1])?;
            let p = g.mul(s, x[0])?;
            g.mean(p)
        })),
        ("matmul-transpose", vec![(vec![2, 3], v.clone()), (vec![2, 3], w.clone())], Box::new(|g, x| {
            let t = g.transpose(x[1])?;
            let m = g.matmul(x[0], t)?;
            let m = g.sigmoid(m)?;
            g.sum(m)
        })),
        ("sqrt-log2-reciprocal", vec![(vec![6], pos.clone())], Box::new(|g, x| {
            let a = g.sqrt(x[0])?;
            let b = g.log2(x[0])?;
            let c = g.reciprocal(x[0])?;
            let s = g.add(a, b)?;
            let s = g.add(s, c)?;
            g.sum(s)
        })),
        ("l1-inner-mul_scalar", vec![(vec![6], v.clone()), (vec![6], w.clone())], Box::new(|g, x| {
            let n = g.l1_norm(x[0])?;
            let y = g.mul_scalar(x[1], n)?;
            g.inner_product(y, x[0])
        })),
        ("pool-sum_rows-scale_columns", vec![(vec![2, 3], v.clone()), (vec![3], w[..3].to_vec())], Box::new(|g, x| {
            let s = g.scale_columns(x[0], x[1])?;
            let r = g.sum_rows(s)?;
            let r = g.square(r)?;
            let p = g.mean_over_length(s)?;
            let p = g.square(p)?;
            let a = g.sum(r)?;
            let b = g.sum(p)?;
            let s = g.add(a, b)?;
            g.scale(s, 0.5)
        })),
        ("reshape-relu-mask", vec![(vec![6], v.clone())], Box::new(|g, x| {
            let r = g.reshape(x[0], vec![2, 3])?;
            let r = g.relu(r)?;
            let m = g.stop_gradient_mask(r, &[true; 6])?;
            let m = g.square(m)?;
            g.sum(m)
        })),
    ];
    for (name, inputs, build) in &cases {
        let err = check_gradients(inputs, build.as_ref());
        assert!(err < 1e-4, "{name}: relative error {err}");
    }
}

fn conv_net(g: &mut Graph, x: &[Var]) -> crate::Result<Var> {
    // input [2, 16]; k1 [4, 2, 3]; k2 [4, 4, 3]; readout [4, 1]
    let h = g.conv1d(x[0], x[1], 2, 1)?;
    let h = g.relu(h)?;
    let r = g.conv1d(h, x[2], 1, 1)?;
    let r = g.sigmoid(r)?;
    let h = g.add(h, r)?;
    let p = g.mean_over_length(h)?;
    let p = g.reshape(p, vec![1, 4])?;
    let y = g.matmul(p, x[3])?;
    let y = g.square(y)?;
    g.sum(y)
}

#[test]
fn random_three_layer_network_matches_finite_differences() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = vec![
            (vec![2, 16], rand_vec(&mut rng, 32, 1.0)),
            (vec![4, 2, 3], rand_vec(&mut rng, 24, 0.8)),
            (vec![4, 4, 3], rand_vec(&mut rng, 48, 0.8)),
            (vec![4, 1], rand_vec(&mut rng, 4, 1.0)),
        ];
        let err = check_gradients(&inputs, &conv_net);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn backward_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x0 = rand_vec(&mut rng, 8, 1.0);
    let grad_of = |which: u8, a: f64, b: f64| {
        let mut g = Graph::new();
        let x = g.variable(vec![8], x0.clone()).unwrap();
        let s = g.sigmoid(x).unwrap();
        let f = g.sum(s).unwrap();
        let q = g.square(x).unwrap();
        let h = g.mean(q).unwrap();
        let loss = match which {
            0 => f,
            1 => h,
            _ => {
                let fa = g.scale(f, a).unwrap();
                let hb = g.scale(h, b).unwrap();
                g.add(fa, hb).unwrap()
            }
        };
        g.backward(loss).unwrap();
        g.grad(x)
    };
    let (a, b) = (0.7, -2.3);
    let gf = grad_of(0, 0.0, 0.0);
    let gh = grad_of(1, 0.0, 0.0);
    let gc = grad_of(2, a, b);
    for i in 0..8 {
        assert!((gc[i] - (a * gf[i] + b * gh[i])).abs() < 1e-10);
    }
}

#[test]
fn forward_and_backward_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let inputs = [
            rand_vec(&mut rng, 32, 1.0),
            rand_vec(&mut rng, 24, 0.8),
            rand_vec(&mut rng, 48, 0.8),
            rand_vec(&mut rng, 4, 1.0),
        ];
        let shapes = [vec![2, 16], vec![4, 2, 3], vec![4, 4, 3], vec![4, 1]];
        let mut g = Graph::new();
        let vars: Vec<Var> =
            shapes.iter().zip(inputs).map(|(s, v)| g.variable(s.clone(), v).unwrap()).collect();
        let l = conv_net(&mut g, &vars).unwrap();
        g.backward(l).unwrap();
        let mut out = vec![g.scalar(l)];
        vars.iter().for_each(|&v| out.extend(g.grad(v)));
        out
    };
    let a = run();
    let b = run();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn sgd_examples() {
    let mut p = vec![Tensor::scalar(1.0).with_grad()];
    p[0].accumulate_grad(&[2.0]).unwrap();
    sgd_step(&mut p, 0.1).unwrap();
    assert!((p[0].values()[0] - 0.8).abs() < 1e-15);
    assert!(p[0].grad().is_none());
    // missing gradient
    assert!(matches!(sgd_step(&mut p, 0.1), Err(Error::Usage(_))));

    p[0].accumulate_grad(&[5.0]).unwrap();
    sgd_step(&mut p, 0.0).unwrap();
    assert!((p[0].values()[0] - 0.8).abs() < 1e-15);
}

#[test]
fn sgd_converges_on_quadratic() {
    let mut p = vec![Tensor::scalar(0.0).with_grad()];
    for _ in 0..200 {
        let mut g = Graph::new();
        let x = g.tensor(&p[0]).unwrap();
        let three = g.constant(vec![1], vec![3.0]).unwrap();
        let d = g.sub(x, three).unwrap();
        let l = g.square(d).unwrap();
        g.backward(l).unwrap();
        p[0].accumulate_grad(&g.grad(x)).unwrap();
        sgd_step(&mut p, 0.1).unwrap();
    }
    // p_k = 3 (1 - 0.8^k)
    assert!((p[0].values()[0] - 3.0).abs() < 1e-3);
}

#[test]
fn momentum_sgd_converges() {
    let mut p = vec![Tensor::scalar(0.0).with_grad()];
    let mut opt = Sgd::new(0.05, 0.9);
    for _ in 0..300 {
        let v = p[0].values()[0];
        p[0].accumulate_grad(&[2.0 * (v - 3.0)]).unwrap();
        opt.step(&mut p).unwrap();
    }
    assert!((p[0].values()[0] - 3.0).abs() < 1e-3);
}

#[test]
fn tensor_invariants() {
    assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    assert!(Tensor::new(vec![0], vec![]).is_err());
    let mut t = Tensor::zeros(vec![2, 3]);
    assert_eq!(t.len(), 6);
    assert!(t.accumulate_grad(&[1.0; 5]).is_err());
    t.accumulate_grad(&[1.0; 6]).unwrap();
    t.accumulate_grad(&[1.0; 6]).unwrap();
    assert_eq!(t.grad().unwrap(), &[2.0; 6]);
}

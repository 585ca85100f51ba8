mod common;

use tmgnn::numerics::gradcheck::{check_input, relative_error};
use tmgnn::numerics::{one_hot_argmax, Rng, Tape, Var};

#[test]
fn every_op_matches_central_differences() {
    let errors = common::op_gradient_errors(20, 2024);
    assert!(errors.len() >= 25);
    let bad: Vec<_> = errors.iter().filter(|(_, e)| *e >= 1e-5).collect();
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn straight_through_routes_the_soft_gradient() {
    let mut rng = Rng::new(5);
    for _ in 0..20 {
        let x = rng.uniform_tensor(3, 4, 2.0);
        let w = rng.uniform_tensor(3, 4, 1.0);
        let grad = |hard: bool| {
            let tape = Tape::new();
            let v = tape.param(x.clone());
            let soft = v.softmax_rows();
            let y = if hard {
                Var::straight_through(one_hot_argmax(&soft.value()), soft).unwrap()
            } else {
                soft
            };
            let forward = y.value();
            let loss = y.mul(tape.constant(w.clone())).unwrap().sum();
            (forward, tape.backward(loss).unwrap().wrt(v))
        };
        let (hard_value, hard_grad) = grad(true);
        let (_, soft_grad) = grad(false);
        assert_eq!(hard_value, one_hot_argmax(&hard_value));
        assert_eq!(hard_grad, soft_grad);
        let fd = check_input(&x, 1e-6, |v| {
            Ok(v.softmax_rows().mul(v.tape().constant(w.clone()))?.sum())
        })
        .unwrap();
        assert!(fd < 1e-5, "{fd}");
    }
}

#[test]
fn relative_error_floor() {
    assert_eq!(relative_error(1.0, 1.0), 0.0);
    assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
    // Both tiny: measured against the floor, not each other.
    assert!(relative_error(1e-9, -1e-9) < 1e-4);
}

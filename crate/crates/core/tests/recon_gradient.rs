mod oracles;

use zigzag_core::ssm::{loss_and_grad, reconstruction_loss};

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..20 {
        let (task, model) = oracles::tiny_recon_instance(seed);
        assert!(model.param_count() <= 200);
        let (_, grad) = loss_and_grad(&task, &model).unwrap();
        let numeric = oracles::central_difference(&model.to_flat(), 1e-6, |x| {
            let mut probe = model.clone();
            probe.set_flat(x);
            reconstruction_loss(&task, &probe).unwrap()
        });
        let err = oracles::relative_error(&grad.to_flat(), &numeric);
        assert!(err <= 1e-4, "seed {seed}: relative error {err}");
    }
}

//! Covariant POVMs on a cyclic group: covariance, Born measures,
//! push-forwards and composition with channels.

use std::sync::Arc;

use qframes::measure::{born_measure, check_covariance, compose_with_channel, push_forward, CovariantPovm, SampleSpace};
use qframes::symmetry::FiniteGroup;
use qframes::{Channel, State};

fn main() -> qframes::Result<()> {
    let z3 = Arc::new(FiniteGroup::cyclic(3));
    let ideal = CovariantPovm::ideal(z3.clone());
    println!("covariance violation of the Z3 position POVM: {:e}", check_covariance(&ideal));

    let omega = State::diagonal(&[0.5, 0.3, 0.2], 1e-12)?;
    let mu = born_measure(ideal.povm(), &omega)?;
    println!("Born measure: {mu:?}");

    // Coarse-grain {0, 1, 2} onto {even, odd}.
    let parity = SampleSpace::new(vec!["even".into(), "odd".into()])?;
    let coarse = push_forward(ideal.povm(), &parity, &[0, 1, 0])?;
    println!("push-forward measure: {:?}", born_measure(&coarse, &omega)?);

    let noisy = compose_with_channel(&Channel::completely_depolarizing(3), ideal.povm())?;
    println!("after full depolarizing every outcome has weight {:?}", born_measure(&noisy, &omega)?);
    Ok(())
}

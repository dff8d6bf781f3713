//! Difference operators on a periodic grid lifted to operator-valued fields.

use qframes::integral::OperatorField;
use qframes::measure::SampleSpace;
use qframes::pde::{
    duality_residual, fourier_mode_field, kernel_basis, kernel_membership, lift_apply, lifted_kernel_preservation,
    DifferenceOperator, ScalarAction,
};
use qframes::{Operator, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let n = 6;
    let d = DifferenceOperator::forward_difference(n);
    println!("dim ker(forward difference) = {}", kernel_basis(&d, DEFAULT_TOL).len());

    let constant = OperatorField::constant(SampleSpace::indexed(n), Operator::pauli_z());
    println!("constant field solves it: {:?}", kernel_membership(&d, &constant, DEFAULT_TOL)?);

    let mode = fourier_mode_field(n, 1, &Operator::pauli_x());
    let lifted = lift_apply(&d, &mode)?;
    println!("lift of a Fourier mode at p = 0 has norm {:.4}", lifted.value(0).norm());
    println!("entrywise vs duality residual {:e}", duality_residual(&d, &mode)?);

    let annihilator = DifferenceOperator::mode_annihilator(n, 1);
    println!("mode 1 solves S − ω: {:?}", kernel_membership(&annihilator, &mode, DEFAULT_TOL)?.0);
    let translations = ScalarAction::translations(n);
    println!("translations keep solutions: {:e}", lifted_kernel_preservation(&translations, &annihilator, &mode, DEFAULT_TOL)?);
    Ok(())
}

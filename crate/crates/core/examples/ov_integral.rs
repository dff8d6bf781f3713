//! Operator-valued integration of a field against a POVM and the identities
//! it satisfies.

use qframes::integral::{
    change_of_variables_check, integral_pairing, ov_integrate, pairing_residual, uniqueness_residual, OperatorField,
};
use qframes::measure::{ideal_povm, SampleSpace};
use qframes::operator::tensor;
use qframes::{Operator, State, C64};

fn main() -> qframes::Result<()> {
    let space = SampleSpace::indexed(2);
    let z = Operator::pauli_z();
    let sign = OperatorField::new(space.clone(), vec![z.clone(), z.scale_real(-1.0)])?;
    let e = ideal_povm(&space);

    let integral = ov_integrate(&sign, &e)?;
    println!("∫ f dE for f = (Z, -Z) equals Z ⊗ Z: {:.1e}", integral.distance(&tensor(&z, &z)?));

    let rho = State::pure(&[C64::new(0.8, 0.0), C64::new(0.6, 0.0)])?;
    let omega = State::diagonal(&[0.25, 0.75], 1e-12)?;
    println!("pairing = {:.4}", integral_pairing(&sign, &e, &rho, &omega)?.re);
    println!("pairing residual {:e}", pairing_residual(&sign, &e, &rho, &omega)?);

    let three = SampleSpace::indexed(3);
    let f3 = OperatorField::new(three.clone(), vec![Operator::pauli_x(), Operator::pauli_y(), z])?;
    println!("change of variables residual {:e}", change_of_variables_check(&f3, &[0, 1, 2, 1], &ideal_povm(&SampleSpace::indexed(4)))?);
    println!("recovery from the ideal POVM residual {:e}", uniqueness_residual(&f3)?);
    Ok(())
}

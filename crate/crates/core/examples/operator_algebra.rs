//! Operators, states, tensor products and channels in both pictures.

use qframes::operator::{expect, partial_trace, tensor, Subsystem};
use qframes::{Channel, Operator, State, C64, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let (x, y, z) = (Operator::pauli_x(), Operator::pauli_y(), Operator::pauli_z());
    let xy = x.matrix() * y.matrix();
    println!("XY = iZ: {}", Operator::new(xy)?.distance(&z.scale(C64::new(0.0, 1.0))) < DEFAULT_TOL);

    let plus = State::pure(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)])?;
    let zero = State::basis(2, 0);
    let joint = plus.tensor(&zero)?;
    let first = partial_trace(joint.op(), Subsystem::Second, (2, 2))?;
    println!("Tr_2[|+><+| ⊗ |0><0|] recovers |+><+|: {:.1e}", first.distance(plus.op()));
    println!("<X ⊗ Z> = {:.3}", expect(&joint, &tensor(&x, &z)?)?.re);

    // Amplitude damping with decay probability 0.36.
    let k0 = Operator::from_real(2, &[1.0, 0.0, 0.0, 0.6])?;
    let k1 = Operator::from_real(2, &[0.0, 0.8, 0.0, 0.0])?;
    let damp = Channel::new(vec![k0.into_matrix(), k1.into_matrix()], DEFAULT_TOL)?;
    let one = State::basis(2, 1);
    let forward = expect(&damp.schrodinger(&one)?, &z)?.re;
    let backward = expect(&one, &damp.heisenberg(&z)?)?.re;
    println!("<Z> after damping |1>: Schrödinger {forward:.4}, Heisenberg {backward:.4}");

    let depol = Channel::completely_depolarizing(2);
    println!("depolarized |+>: {:?}", depol.schrodinger(&plus)?.op().hermitian_eigenvalues());
    Ok(())
}

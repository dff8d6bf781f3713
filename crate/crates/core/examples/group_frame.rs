//! A qubit relative to an ideal Z2 frame: relativization, relative states
//! and restriction to frame states of decreasing sharpness.

use std::sync::Arc;

use qframes::group_frame::{localizability_probe, relative_state, relativize, restrict, GroupFrame, SystemAction};
use qframes::symmetry::{FiniteGroup, UnitaryRep};
use qframes::{Operator, State, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let z2 = Arc::new(FiniteGroup::cyclic(2));
    let sys = SystemAction::new(UnitaryRep::new(z2.clone(), vec![Operator::identity(2), Operator::pauli_x()], DEFAULT_TOL)?);
    let frame = GroupFrame::ideal(z2);

    let z = Operator::pauli_z();
    let rel = relativize(&z, &frame, &sys)?;
    println!("relativized Z is Z ⊗ Z: {}", rel.distance(&z.kron(&z)) < DEFAULT_TOL);

    let rho = State::basis(2, 0);
    let omega = State::basis(2, 1);
    let seen = relative_state(&rho, &omega, &frame, &sys)?;
    println!("|0> seen from a frame in orientation 1: {:?}", seen.op().hermitian_eigenvalues());

    let mixed = State::maximally_mixed(2);
    println!("restriction to a uniform frame state: |Γ(¥(Z))| = {:.1e}", restrict(&z, &mixed, &frame, &sys)?.norm());

    let family: Vec<State> = [1.0, 0.5, 0.25, 0.125, 0.0]
        .iter()
        .map(|&t| State::mix(t, &mixed, &State::basis(2, 0)))
        .collect::<qframes::Result<_>>()?;
    println!("localizability errors: {:?}", localizability_probe(&z, &frame, &sys, &family)?);
    Ok(())
}

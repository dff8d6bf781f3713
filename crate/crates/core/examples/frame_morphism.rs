//! Frame morphisms between ideal frames on a Z2 bundle: a change of gauge
//! and a relocation that swaps the two base points.

use std::sync::Arc;

use qframes::bundle::{
    apply_frame_morphism, gluing_violations, local_theta, permutation_channel, transition_function, BundleFrame,
    FrameMorphism, LocalSection, PrincipalBundle, QuantumField,
};
use qframes::symmetry::{FiniteGroup, UnitaryRep};
use qframes::{Operator, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let z2 = Arc::new(FiniteGroup::cyclic(2));
    // Points (p, h) have index 2p + h.
    let bundle = PrincipalBundle::trivial(vec!["a".into(), "b".into()], z2.clone())?;
    let sigma = LocalSection::new(&bundle, &[(0, 0), (1, 2)])?;
    let flipped = LocalSection::new(&bundle, &[(0, 1), (1, 2)])?;
    println!("transition function: {:?}", transition_function(&bundle, &sigma, &flipped));

    let from = BundleFrame::ideal(bundle.clone(), sigma)?;
    let to = BundleFrame::ideal(bundle, flipped)?;
    let rep = UnitaryRep::new(z2, vec![Operator::identity(2), Operator::pauli_x()], DEFAULT_TOL)?;
    let phi = QuantumField::new(vec![Some(Operator::pauli_z()), Some(Operator::pauli_y())], rep)?;

    let gauge = [1, 0, 2, 3];
    let psi = permutation_channel(&local_theta(&gauge, &from, &to)?, DEFAULT_TOL)?;
    let m = FrameMorphism::from_point_map(psi, &gauge, &from, &to, DEFAULT_TOL)?;
    println!("gauge change: residual {:e}, gluing violations {}", apply_frame_morphism(&m, &phi, &from, &to)?, gluing_violations(&m, &from, &to));

    let relocate = [2, 3, 0, 1];
    let psi = permutation_channel(&local_theta(&relocate, &from, &from)?, DEFAULT_TOL)?;
    let m = FrameMorphism::from_point_map(psi, &relocate, &from, &from, DEFAULT_TOL)?;
    println!("relocation: base map {:?}, residual {:e}", m.base_map(), apply_frame_morphism(&m, &phi, &from, &from)?);
    Ok(())
}

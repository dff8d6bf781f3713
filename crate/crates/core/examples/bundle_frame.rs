//! Frames on a trivial Z2 bundle over two points: relativized fields, their
//! invariance, localization and restriction.

use std::sync::Arc;

use qframes::bundle::{
    field_invariance_residual, localization_error, relativize_field, restrict_field, BundleFrame, LocalSection,
    PrincipalBundle, QuantumField,
};
use qframes::symmetry::{FiniteGroup, UnitaryRep};
use qframes::{Operator, State, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let z2 = Arc::new(FiniteGroup::cyclic(2));
    let bundle = PrincipalBundle::trivial(vec!["a".into(), "b".into()], z2.clone())?;
    println!("total space: {:?}", bundle.total_labels());
    let sigma = LocalSection::constant(&bundle, 0)?;
    let frame = BundleFrame::ideal(bundle, sigma)?;

    let rep = UnitaryRep::new(z2, vec![Operator::identity(2), Operator::pauli_x()], DEFAULT_TOL)?;
    let phi = QuantumField::new(vec![Some(Operator::pauli_z()), Some(Operator::pauli_y())], rep)?;

    let rel = relativize_field(&phi, &frame)?;
    println!("¥(φ) acts on dimension {}, invariance residual {:e}", rel.dim(), field_invariance_residual(&phi, &frame)?);

    for p in 0..2 {
        let b = frame.section().at(p).unwrap();
        let omega = State::basis(frame.dim(), frame.local_index(b).unwrap());
        let (err, _) = localization_error(&phi, &frame, &omega, p)?;
        println!("localized at σ({p}): error {err:e}");
    }
    let uniform = State::maximally_mixed(frame.dim());
    println!("uniform frame state washes the field out: {:.1e}", restrict_field(&phi, &frame, &uniform)?.norm());
    Ok(())
}

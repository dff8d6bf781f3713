//! The S3 ⊃ Z2 frame-bundle model: metric sectors, probabilities over
//! geometries and sector-coupled relativization.

use std::collections::BTreeMap;

use qframes::bundle::{relativize_field, BundleFrame, QuantumField};
use qframes::geometry::{
    gr_coupled_relativize, indefinite_geometry_probabilities, restrict_in_section_metric, s3_defining_rep, s3_model,
    stratify, EquationWeight, MetricSector,
};
use qframes::measure::SampleSpace;
use qframes::pde::DifferenceOperator;
use qframes::{Operator, State, DEFAULT_TOL};

fn main() -> qframes::Result<()> {
    let model = s3_model(2)?;
    let s = stratify(&model, 0)?;
    let labels = model.bundle().total_labels();
    for (i, sector) in s.sectors.iter().enumerate() {
        let names: Vec<&str> = sector.iter().map(|&b| labels[b].as_str()).collect();
        println!("sector {i}: {names:?}");
    }

    let frame = BundleFrame::ideal(model.bundle().clone(), model.reference().clone())?;
    let uniform = State::maximally_mixed(frame.dim());
    let d = indefinite_geometry_probabilities(&model, &frame, &uniform)?;
    println!("cells {:?}, total {}", d.cells, d.total());

    let field = QuantumField::new(
        vec![Some(Operator::diagonal(&[1.0, 2.0, 3.0])), Some(Operator::diagonal(&[0.0, 1.0, -1.0]))],
        s3_defining_rep(),
    )?;
    let on_reference = State::basis(frame.dim(), 0);
    let (full, reduced) = restrict_in_section_metric(&model, &frame, &field, &on_reference)?;
    println!("section-metric restriction agrees: {:e}", full.distance(&reduced));

    let zero = DifferenceOperator::zero(SampleSpace::indexed(2));
    let equations: BTreeMap<_, _> = (0..model.sector_count()).map(|i| (MetricSector(i), zero.clone())).collect();
    let gr = gr_coupled_relativize(&model, &frame, &field, &equations, EquationWeight::Indicator, DEFAULT_TOL)?;
    println!("with trivial equations the coupling is invisible: {:e}", gr.distance(&relativize_field(&field, &frame)?));
    Ok(())
}

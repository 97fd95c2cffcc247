//! Values fixed by the first verified run.

use multifsi_core::datum::{make_initial_datum, InitialDatum};
use multifsi_core::fem::{FemOperators, HProjector, MaterialParams};
use multifsi_core::geometry::GeometryConfig;
use multifsi_core::semigroup::Evolution;

#[test]
fn structure_bump_energy_ratio_at_unit_time() {
    let o = FemOperators::build(&GeometryConfig::default().with_refinement(1), MaterialParams::default()).unwrap();
    let p = HProjector::new(&o).unwrap();
    let phi0 = make_initial_datum(InitialDatum::StructureBump, &o, &p).unwrap();
    let (_, reports) = Evolution::new(&o, 0.01).unwrap().evolve(&phi0, 100, |_, _| Ok(())).unwrap();
    let ratio: f64 = reports[100].e_total / reports[0].e_total;
    assert!((ratio - 3.770509225054317e-1).abs() < 1e-9, "{ratio:.15e}");
}

#[test]
fn level_zero_mesh_counts() {
    let o = FemOperators::<f64>::build(&GeometryConfig::default(), MaterialParams::default()).unwrap();
    let sp = &o.spaces;
    assert_eq!((sp.mesh.num_vertices(), sp.mesh.num_triangles(), sp.mesh.edges.len()), (49, 72, 120));
    assert_eq!((sp.n_fluid(), sp.n_pressure(), sp.n_gamma(), sp.n_solid()), (320, 48, 32, 50));
}

//! Legacy ASCII VTK export of a state on the P1 skeleton of the mesh.
//!
//! Fields are sampled at mesh vertices. Velocity is `u` on fluid vertices
//! and `w_t` on solid ones (they agree on the interface); pressure is zero
//! on vertices that only touch the solid.

use std::io::Write;

use crate::error::Result;
use crate::fem::{FunctionSpaces, StateVector};
use crate::geometry::Subdomain;
use crate::scalar::Real;

fn vertex_vector<T: Real>(local: &[usize], coeffs: &[T], v: usize) -> Option<[f64; 2]> {
    let l = *local.get(v)?;
    (l < coeffs.len() / 2).then(|| [coeffs[2 * l].to_f64_lossy(), coeffs[2 * l + 1].to_f64_lossy()])
}

pub fn write_vtk<T: Real, W: Write>(mut out: W, spaces: &FunctionSpaces<T>, state: &StateVector<T>, pressure: Option<&[T]>, title: &str) -> Result<()> {
    let mesh = &spaces.mesh;
    let nv = mesh.num_vertices();
    let nt = mesh.triangles.len();
    writeln!(out, "# vtk DataFile Version 2.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or("multifsi"))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nv} double")?;
    for p in &mesh.vertices {
        writeln!(out, "{:e} {:e} 0", p[0].to_f64_lossy(), p[1].to_f64_lossy())?;
    }
    writeln!(out, "CELLS {nt} {}", 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {nt}")?;
    writeln!(out, "SCALARS subdomain int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for s in &mesh.subdomain {
        writeln!(out, "{}", if *s == Subdomain::Fluid { 0 } else { 1 })?;
    }

    writeln!(out, "POINT_DATA {nv}")?;
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in 0..nv {
        let p = match (pressure, spaces.pressure_local.get(v)) {
            (Some(p), Some(&l)) if l < p.len() => p[l].to_f64_lossy(),
            _ => 0.0,
        };
        writeln!(out, "{p:e}")?;
    }
    let fields: [(&str, Box<dyn Fn(usize) -> [f64; 2]>); 3] = [
        (
            "velocity",
            Box::new(|v| {
                vertex_vector(&spaces.fluid_local, &state.u, v)
                    .or_else(|| vertex_vector(&spaces.solid_local, &state.w_t, v))
                    .unwrap_or([0.0; 2])
            }),
        ),
        ("displacement", Box::new(|v| vertex_vector(&spaces.solid_local, &state.w, v).unwrap_or([0.0; 2]))),
        ("structure_velocity", Box::new(|v| vertex_vector(&spaces.solid_local, &state.w_t, v).unwrap_or([0.0; 2]))),
    ];
    for (name, f) in fields {
        writeln!(out, "VECTORS {name} double")?;
        for v in 0..nv {
            let x = f(v);
            writeln!(out, "{:e} {:e} 0", x[0], x[1])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FemOperators, MaterialParams};
    use crate::geometry::GeometryConfig;

    #[test]
    fn header_and_counts() {
        let o = FemOperators::<f64>::build(&GeometryConfig::default(), MaterialParams::default()).unwrap();
        let mut s = StateVector::zeros(&o.spaces);
        s.w = o.spaces.interpolate_vector(Subdomain::Solid, |p| [p[0], 0.0]);
        let mut buf = Vec::new();
        let p = vec![1.0; o.spaces.n_pressure()];
        write_vtk(&mut buf, &o.spaces, &s, Some(&p), "test").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 2.0");
        assert!(text.contains("POINTS 49 double"));
        assert!(text.contains("CELLS 72 288"));
        assert!(text.contains("CELL_DATA 72"));
        assert!(text.contains("VECTORS structure_velocity double"));
        assert_eq!(text.lines().filter(|l| *l == "1").count(), 8);
        assert_eq!(text.lines().filter(|l| *l == "1e0").count(), o.spaces.n_pressure());
    }
}

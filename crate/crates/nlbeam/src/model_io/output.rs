use std::io::Write;
use std::path::Path;

use super::ModelIoError;
use crate::solver::{Dof, DofMap, ElementState, Model, StepResult};
use crate::transform::ElementGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    CsvHistory,
    CsvShapes,
    CsvEigen,
}

impl OutputFormat {
    pub const ALL: [OutputFormat; 3] = [OutputFormat::CsvHistory, OutputFormat::CsvShapes, OutputFormat::CsvEigen];

    pub fn file_name(self) -> &'static str {
        match self {
            OutputFormat::CsvHistory => "history.csv",
            OutputFormat::CsvShapes => "shapes.csv",
            OutputFormat::CsvEigen => "eigen.csv",
        }
    }
}

/// Grid point of a deformed element in global coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapePoint {
    pub x: f64,
    pub z: f64,
    pub phi: f64,
    pub m: f64,
    /// Normal force of the segment starting here; `None` at the last point.
    pub n_mid: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Deformed grid of element `e`: the local grid is carried by the rigid
/// motion of its left end. Empty if the element has not been evaluated.
pub fn element_shape(model: &Model, map: &DofMap, state: &[f64], es: &ElementState, e: usize) -> Vec<ShapePoint> {
    let Some(grid) = &es.grid else { return vec![] };
    let spec = &model.elements[e];
    let dofs = map.element_dofs[e];
    let (ua, wa, phi_a) = (state[dofs[0]], state[dofs[1]], state[dofs[2]]);
    let geom = ElementGeometry::from_coordinates(model.nodes[spec.a], model.nodes[spec.b]).expect("validated");
    let (sp, cp) = phi_a.sin_cos();
    let c = geom.cos0 * cp + geom.sin0 * sp;
    let s = geom.sin0 * cp - geom.cos0 * sp;
    let [xa, za] = model.nodes[spec.a];
    (0..grid.x.len())
        .map(|i| {
            let (xi, eta) = (grid.x[i] + grid.u[i], grid.w[i]);
            ShapePoint {
                x: xa + ua + c * xi - s * eta,
                z: za + wa + s * xi + c * eta,
                phi: phi_a + grid.phi[i],
                m: grid.m[i],
                n_mid: grid.n_mid.get(i).copied(),
            }
        })
        .collect()
}

/// Curvature at the central grid point from the second difference of the
/// deformed positions, `|p₊ − 2p + p₋|/Δx²`.
pub fn midspan_curvature(points: &[ShapePoint], dx: f64) -> f64 {
    let i = points.len() / 2;
    let (p, q, r) = (points[i - 1], points[i], points[i + 1]);
    (p.x - 2.0 * q.x + r.x).hypot(p.z - 2.0 * q.z + r.z) / (dx * dx)
}

pub fn write_history<W: Write>(out: W, model: &Model, steps: &[StepResult]) -> Result<(), ModelIoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_string(), "lambda".to_string(), "iterations".to_string()];
    for node in 0..model.nodes.len() {
        for d in [Dof::U, Dof::W, Dof::Phi] {
            header.push(format!("{}{node}", d.name()));
        }
    }
    for c in &model.constraints {
        header.push(format!("r_{}{}", c.dof.name(), c.node));
    }
    w.write_record(&header)?;
    for s in steps {
        let mut row = vec![s.step.to_string(), num(s.lambda), s.iterations.to_string()];
        row.extend(s.state[..3 * model.nodes.len()].iter().map(|&v| num(v)));
        row.extend(s.reactions.iter().map(|r| num(r.value)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_shapes<W: Write>(out: W, model: &Model, map: &DofMap, steps: &[StepResult]) -> Result<(), ModelIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "element", "point", "x", "z", "phi", "m", "n_mid"])?;
    for s in steps {
        for (e, es) in s.elements.iter().enumerate() {
            for (i, p) in element_shape(model, map, &s.state, es, e).iter().enumerate() {
                w.write_record([
                    s.step.to_string(),
                    e.to_string(),
                    i.to_string(),
                    num(p.x),
                    num(p.z),
                    num(p.phi),
                    num(p.m),
                    p.n_mid.map(num).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eigen<W: Write>(out: W, steps: &[StepResult]) -> Result<(), ModelIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "lambda", "min_eigenvalue"])?;
    for s in steps {
        w.write_record([s.step.to_string(), num(s.lambda), s.min_eigenvalue.map(num).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the requested files into `dir`, which is created if missing.
pub fn emit_results(
    dir: &Path,
    model: &Model,
    map: &DofMap,
    steps: &[StepResult],
    formats: &[OutputFormat],
) -> Result<(), ModelIoError> {
    std::fs::create_dir_all(dir)?;
    for &f in formats {
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join(f.file_name()))?);
        match f {
            OutputFormat::CsvHistory => write_history(file, model, steps)?,
            OutputFormat::CsvShapes => write_shapes(file, model, map, steps)?,
            OutputFormat::CsvEigen => write_eigen(file, steps)?,
        }
    }
    Ok(())
}

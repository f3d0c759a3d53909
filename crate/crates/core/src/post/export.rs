//! CSV and legacy VTK writers.
//!
//! Floating-point values are written with 17 significant digits so that a
//! dump re-parses to the identical `f64`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interface::{energy_norm, traction};
use crate::model::{geometry, Partition};
use crate::problem::Problem;
use crate::shapefun::ShapeTables;
use crate::solver::{CrackEventRecord, StepRecord, StepState};

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `path, step, load_factor, control, load, iterations, external_work,
/// stored_energy, dissipated`. `path` numbers the load path (the crack
/// event for crack-growth runs); energies are per unit thickness.
pub fn write_load_displacement(path: &Path, paths: &[Vec<StepRecord>]) -> Result<()> {
    let mut s = String::from("path,step,load_factor,control,load,iterations,external_work,stored_energy,dissipated\n");
    for (k, recs) in paths.iter().enumerate() {
        for r in recs {
            let _ = writeln!(
                s,
                "{k},{},{},{},{},{},{},{},{}",
                r.step,
                num(r.load_factor),
                num(r.control),
                num(r.load),
                r.iterations,
                num(r.external_work),
                num(r.stored_energy),
                num(r.dissipated)
            );
        }
    }
    write(path, &s)
}

/// Ordered midpoints of the cracked faces.
pub fn write_crack_path(path: &Path, events: &[CrackEventRecord]) -> Result<()> {
    let mut s = String::from("order,face,x,y,length\n");
    for (k, e) in events.iter().filter(|e| e.cracked_face.is_some()).enumerate() {
        let m = e.face_midpoint.unwrap_or([f64::NAN; 2]);
        let _ = writeln!(
            s,
            "{k},{},{},{},{}",
            e.cracked_face.expect("filtered"),
            num(m[0]),
            num(m[1]),
            num(e.face_length.unwrap_or(f64::NAN))
        );
    }
    write(path, &s)
}

/// One row per crack event: peak load against crack length.
pub fn write_events(path: &Path, events: &[CrackEventRecord]) -> Result<()> {
    let mut s = String::from("event,crack_length,peak_load,control_at_peak,cracked_face\n");
    for e in events {
        let face = e.cracked_face.map_or(String::new(), |f| f.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{face}",
            e.event,
            num(e.crack_length),
            num(e.peak_load),
            num(e.control_at_peak)
        );
    }
    write(path, &s)
}

/// Face-averaged flux and opening in the face frame (normal `n` from E1 to
/// E2, tangent `s = (-n_y, n_x)`). Openings are `u_E2 - u_E1`, positive when
/// the face opens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceSample {
    pub face: usize,
    pub tau: f64,
    pub d: f64,
    pub t_n: f64,
    pub delta_n: f64,
    pub opening_n: f64,
    pub t_s: f64,
    pub delta_s: f64,
    pub opening_s: f64,
}

/// Samples the listed interior faces of a converged state.
pub fn face_samples(
    problem: &Problem,
    tables: &ShapeTables,
    state: &StepState,
    faces: &[usize],
) -> Vec<FaceSample> {
    let part = &problem.partition;
    faces
        .iter()
        .map(|&f| {
            let face = &part.interior_faces[f];
            let alpha = problem.face_consts[f].alpha;
            let (e1, e2) = face.owners;
            let n = face.normal;
            let s = [-n[1], n[0]];
            let tr1 = traction(state.stress[e1], n);
            let tr2 = traction(state.stress[e2], n);
            let mut acc = FaceSample {
                face: f,
                tau: 0.0,
                d: state.faces[f].max_damage(),
                t_n: 0.0,
                delta_n: 0.0,
                opening_n: 0.0,
                t_s: 0.0,
                delta_s: 0.0,
                opening_s: 0.0,
            };
            for (q, (x, w)) in geometry::gauss2(face.endpoints[0], face.endpoints[1])
                .into_iter()
                .enumerate()
            {
                let wt = w / face.length;
                let ua = tables.get(e1).displacement_at(&state.u, x);
                let ub = tables.get(e2).displacement_at(&state.u, x);
                let open = [ub[0] - ua[0], ub[1] - ua[1]];
                let t_star = [
                    0.5 * (tr1[0] + tr2[0]) + alpha * open[0],
                    0.5 * (tr1[1] + tr2[1]) + alpha * open[1],
                ];
                let delta = [t_star[0] / alpha, t_star[1] / alpha];
                let d = state.faces[f].qp[q].d;
                let td = [(1.0 - d) * t_star[0], (1.0 - d) * t_star[1]];
                let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
                acc.tau += wt * energy_norm(delta, alpha);
                acc.t_n += wt * dot(td, n);
                acc.t_s += wt * dot(td, s);
                acc.delta_n += wt * dot(delta, n);
                acc.delta_s += wt * dot(delta, s);
                acc.opening_n += wt * dot(open, n);
                acc.opening_s += wt * dot(open, s);
            }
            acc
        })
        .collect()
}

pub fn write_traction_separation(path: &Path, rows: &[(usize, FaceSample)]) -> Result<()> {
    let mut s =
        String::from("step,face,tau,d,t_n,delta_n,opening_n,t_s,delta_s,opening_s\n");
    for (step, r) in rows {
        let _ = writeln!(
            s,
            "{step},{},{},{},{},{},{},{},{},{}",
            r.face,
            num(r.tau),
            num(r.d),
            num(r.t_n),
            num(r.delta_n),
            num(r.opening_n),
            num(r.t_s),
            num(r.delta_s),
            num(r.opening_s)
        );
    }
    write(path, &s)
}

/// Parsed legacy VTK field dump.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub points: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    /// Field arrays by name: (components, values).
    pub fields: Vec<(String, usize, Vec<f64>)>,
}

impl VtkData {
    pub fn field(&self, name: &str) -> Option<(usize, &[f64])> {
        self.fields
            .iter()
            .find(|f| f.0 == name)
            .map(|f| (f.1, f.2.as_slice()))
    }
}

const VTK_LINE: u8 = 3;
const VTK_POLYGON: u8 = 7;

/// Writes subdomain polygons followed by interior faces as line cells.
/// Cell fields: `stress`, `strain`, `displacement` (of the Fragile Point)
/// on polygons and `damage` on faces; entries of the other kind are zero.
pub fn write_vtk(path: &Path, part: &Partition, state: &StepState) -> Result<()> {
    let mut s = String::new();
    let np = part.n_points();
    let nf = part.interior_faces.len();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "fpm step {}", state.step);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", part.nodes.len());
    for p in &part.nodes {
        let _ = writeln!(s, "{} {} 0", num(p[0]), num(p[1]));
    }
    let size: usize = part.subdomains.iter().map(|c| c.nodes.len() + 1).sum::<usize>() + 3 * nf;
    let _ = writeln!(s, "CELLS {} {size}", np + nf);
    for c in &part.subdomains {
        let ids: Vec<String> = c.nodes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "{} {}", c.nodes.len(), ids.join(" "));
    }
    for f in &part.interior_faces {
        let _ = writeln!(s, "2 {} {}", f.nodes[0], f.nodes[1]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", np + nf);
    for _ in 0..np {
        let _ = writeln!(s, "{VTK_POLYGON}");
    }
    for _ in 0..nf {
        let _ = writeln!(s, "{VTK_LINE}");
    }
    let _ = writeln!(s, "CELL_DATA {}", np + nf);
    let _ = writeln!(s, "FIELD fields 4");
    let mut array = |name: &str, comps: usize, value: &dyn Fn(usize) -> Vec<f64>| {
        let _ = writeln!(s, "{name} {comps} {} double", np + nf);
        for c in 0..np + nf {
            let row: Vec<String> = value(c).into_iter().map(num).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    };
    array("stress", 3, &|c| {
        if c < np { state.stress[c].to_vec() } else { vec![0.0; 3] }
    });
    array("strain", 3, &|c| {
        if c < np { state.strain[c].to_vec() } else { vec![0.0; 3] }
    });
    array("displacement", 2, &|c| {
        if c < np { vec![state.u[2 * c], state.u[2 * c + 1]] } else { vec![0.0; 2] }
    });
    array("damage", 1, &|c| {
        if c < np { vec![0.0] } else { vec![state.faces[c - np].max_damage()] }
    });
    write(path, &s)
}

/// Reads a file written by [`write_vtk`].
pub fn read_vtk(path: &Path) -> Result<VtkData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |what: &str| Error::Format(format!("{}: malformed VTK ({what})", path.display()));
    let mut lines = text.lines().skip(4);
    let mut out = VtkData::default();
    let header = |lines: &mut dyn Iterator<Item = &str>, key: &str| -> Result<Vec<String>> {
        let l = lines.next().ok_or_else(|| bad(key))?;
        let parts: Vec<String> = l.split_whitespace().map(String::from).collect();
        if parts.first().map(String::as_str) != Some(key) {
            return Err(bad(key));
        }
        Ok(parts)
    };
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad("count"));
    let float = |s: &str| s.parse::<f64>().map_err(|_| bad("number"));

    let h = header(&mut lines, "POINTS")?;
    for _ in 0..count(&h[1])? {
        let l: Vec<&str> = lines.next().ok_or_else(|| bad("point"))?.split_whitespace().collect();
        out.points.push([float(l[0])?, float(l[1])?]);
    }
    let h = header(&mut lines, "CELLS")?;
    let nc = count(&h[1])?;
    for _ in 0..nc {
        let l: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("cell"))?
            .split_whitespace()
            .map(count)
            .collect::<Result<_>>()?;
        out.cells.push(l[1..].to_vec());
    }
    header(&mut lines, "CELL_TYPES")?;
    for _ in 0..nc {
        let t = lines.next().ok_or_else(|| bad("cell type"))?;
        out.cell_types.push(t.trim().parse().map_err(|_| bad("cell type"))?);
    }
    header(&mut lines, "CELL_DATA")?;
    let h = header(&mut lines, "FIELD")?;
    for _ in 0..count(&h[2])? {
        let l: Vec<String> = lines
            .next()
            .ok_or_else(|| bad("field"))?
            .split_whitespace()
            .map(String::from)
            .collect();
        let (name, comps, n) = (l[0].clone(), count(&l[1])?, count(&l[2])?);
        let mut vals = Vec::with_capacity(comps * n);
        for _ in 0..n {
            for v in lines.next().ok_or_else(|| bad("field value"))?.split_whitespace() {
                vals.push(float(v)?);
            }
        }
        out.fields.push((name, comps, vals));
    }
    Ok(out)
}

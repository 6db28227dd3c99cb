//! Report artifacts: CSV tables, raw field dumps, and the human summary.
//!
//! Floats are printed with 17 significant digits so every CSV row re-parses
//! to the exact in-memory value. The raw field dump is little-endian binary:
//! magic "PFMF", u32 dim, u32 resolution, f64 epsilon, f64 time, then
//! resolution^dim f64 values row-major.

use crate::grid::{PeriodicGrid, ScalarField};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// 17 significant digits: exact f64 round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureRow {
    pub t: f64,
    pub mu_total: f64,
    pub d: f64,
    pub sup_xi_plus: f64,
    pub xi_l1: f64,
    pub tv_w: f64,
    pub brakke_residual: f64,
}

pub fn write_measures_csv(path: &Path, rows: &[MeasureRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,mu_total,D,sup_xi_plus,xi_l1,tv_w,brakke_residual")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.mu_total),
            fmt_f64(r.d),
            fmt_f64(r.sup_xi_plus),
            fmt_f64(r.xi_l1),
            fmt_f64(r.tv_w),
            fmt_f64(r.brakke_residual),
        )?;
    }
    Ok(())
}

pub fn read_measures_csv(path: &Path) -> std::io::Result<Vec<MeasureRow>> {
    let f = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (k, line) in f.lines().enumerate() {
        let line = line?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().unwrap_or(f64::NAN))
            .collect();
        if cols.len() != 7 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("measures.csv row {k}: expected 7 columns"),
            ));
        }
        rows.push(MeasureRow {
            t: cols[0],
            mu_total: cols[1],
            d: cols[2],
            sup_xi_plus: cols[3],
            xi_l1: cols[4],
            tv_w: cols[5],
            brakke_residual: cols[6],
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct MonoRow {
    pub pole: [f64; 3],
    pub s: f64,
    pub t: f64,
    pub value: f64,
    pub delta_from_prev: f64,
    pub discrepancy_term: f64,
    pub transport_term: f64,
    pub tail_term: f64,
    pub pass: bool,
}

pub fn write_monotonicity_csv(path: &Path, rows: &[MonoRow], dim: usize) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if dim == 3 {
        writeln!(
            w,
            "pole_x,pole_y,pole_z,s,t,value,delta_from_prev,discrepancy_term,transport_term,tail_term,pass"
        )?;
    } else {
        writeln!(
            w,
            "pole_x,pole_y,s,t,value,delta_from_prev,discrepancy_term,transport_term,tail_term,pass"
        )?;
    }
    for r in rows {
        let mut cols: Vec<String> = vec![fmt_f64(r.pole[0]), fmt_f64(r.pole[1])];
        if dim == 3 {
            cols.push(fmt_f64(r.pole[2]));
        }
        cols.extend([
            fmt_f64(r.s),
            fmt_f64(r.t),
            fmt_f64(r.value),
            fmt_f64(r.delta_from_prev),
            fmt_f64(r.discrepancy_term),
            fmt_f64(r.transport_term),
            fmt_f64(r.tail_term),
            r.pass.to_string(),
        ]);
        writeln!(w, "{}", cols.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    /// Binding checks decide the exit code; advisory ones only report.
    pub binding: bool,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "CHECK {:<22} {}  [{}] value {:.6e} vs threshold {:.6e}  {}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            if self.binding { "binding" } else { "advisory" },
            self.value,
            self.threshold,
            self.detail
        )
    }
}

pub fn write_checks_csv(path: &Path, checks: &[CheckResult]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "name,binding,pass,value,threshold,detail")?;
    for c in checks {
        writeln!(
            w,
            "{},{},{},{},{},\"{}\"",
            c.name,
            c.binding,
            c.pass,
            fmt_f64(c.value),
            fmt_f64(c.threshold),
            c.detail.replace('"', "'")
        )?;
    }
    Ok(())
}

pub fn read_checks_csv(path: &Path) -> std::io::Result<Vec<CheckResult>> {
    let f = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in f.lines().enumerate() {
        let line = line?;
        if k == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(6, ',').collect();
        if cols.len() != 6 {
            continue;
        }
        out.push(CheckResult {
            name: cols[0].to_string(),
            binding: cols[1] == "true",
            pass: cols[2] == "true",
            value: cols[3].parse().unwrap_or(f64::NAN),
            threshold: cols[4].parse().unwrap_or(f64::NAN),
            detail: cols[5].trim_matches('"').to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub resolution: usize,
    pub energy_error: f64,
    pub xi_l1: f64,
    pub d_max: f64,
    pub interface_error: f64,
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "epsilon,resolution,energy_error,xi_l1,d_max,interface_error,energy_order,xi_order"
    )?;
    for (k, r) in rows.iter().enumerate() {
        let (eo, xo) = if k == 0 {
            (0.0, 0.0)
        } else {
            let prev = &rows[k - 1];
            let le = (prev.epsilon / r.epsilon).ln();
            (
                (prev.energy_error / r.energy_error).ln() / le,
                (prev.xi_l1 / r.xi_l1).ln() / le,
            )
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.epsilon),
            r.resolution,
            fmt_f64(r.energy_error),
            fmt_f64(r.xi_l1),
            fmt_f64(r.d_max),
            fmt_f64(r.interface_error),
            fmt_f64(eo),
            fmt_f64(xo),
        )?;
    }
    Ok(())
}

const FIELD_MAGIC: &[u8; 4] = b"PFMF";

pub fn write_field_dump(
    path: &Path,
    field: &ScalarField,
    epsilon: f64,
    time: f64,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(field.grid.dim as u32).to_le_bytes())?;
    w.write_all(&(field.grid.resolution as u32).to_le_bytes())?;
    w.write_all(&epsilon.to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    for v in &field.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub struct FieldDump {
    pub field: ScalarField,
    pub epsilon: f64,
    pub time: f64,
}

pub fn read_field_dump(path: &Path) -> std::io::Result<FieldDump> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad magic in field dump",
        ));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let resolution = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let epsilon = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let time = f64::from_le_bytes(b8);
    let grid = PeriodicGrid::new(dim, resolution)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
    let mut data = vec![0.0; grid.cell_count()];
    for v in &mut data {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok(FieldDump {
        field: ScalarField { grid, data },
        epsilon,
        time,
    })
}

/// Mesh export: vertex rows tagged with their loop (dim 2) or patch id.
pub fn write_interface_csv(
    path: &Path,
    mesh: &crate::interface::InterfaceMesh,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if mesh.dim == 3 {
        writeln!(w, "patch_id,x,y,z")?;
        for v in &mesh.vertices {
            writeln!(w, "0,{},{},{}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2]))?;
        }
    } else {
        writeln!(w, "loop_id,x,y")?;
        for (k, cycle) in mesh.loops.iter().enumerate() {
            for &vi in cycle {
                let v = mesh.vertices[vi];
                writeln!(w, "{k},{},{}", fmt_f64(v[0]), fmt_f64(v[1]))?;
            }
        }
    }
    Ok(())
}

pub fn render_summary(
    name: &str,
    checks: &[CheckResult],
    extra_lines: &[String],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {name}");
    for line in extra_lines {
        let _ = writeln!(s, "{line}");
    }
    for c in checks {
        let _ = writeln!(s, "{}", c.line());
    }
    let binding_fail = checks.iter().filter(|c| c.binding && !c.pass).count();
    let advisory_fail = checks.iter().filter(|c| !c.binding && !c.pass).count();
    let _ = writeln!(
        s,
        "verdict: {} ({} binding failures, {} advisory flags)",
        if binding_fail == 0 { "PASS" } else { "FAIL" },
        binding_fail,
        advisory_fail
    );
    s
}

//! CSV files for fields, potentials, agents, error series and solver diagnostics.
//!
//! Node indices are signed, `-M..=M`, so `x = i Δx`. Floats are written with 17
//! significant digits, which round-trips every `f64`. Files are written to a
//! temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::agents::AgentData;
use crate::bregman::Diagnostics;
use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpatialGrid, TimeGrid};
use crate::metrics::ErrorSeries;
use crate::potential::Potential;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_atomic(path: &Path, body: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        body(&mut w)?;
        w.flush()?;
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().ok_or_else(|| Error::invalid("output path has no file name"))?.to_owned();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn signed(k: usize, m: usize) -> i64 {
    k as i64 - m as i64
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::invalid(format!("line {line}: cannot parse {what} `{s}`")))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_path(path)?)
}

fn check_header(r: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<()> {
    let header = r.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::invalid(format!("expected header `{}`, got `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

/// `t,i[,j],u`, frames in order, nodes row-major within a frame.
pub fn write_field(path: &Path, field: &SpaceTimeField) -> Result<()> {
    let grid = field.grid();
    let m = grid.half_count();
    write_atomic(path, |w| {
        if grid.dim() == 1 {
            w.write_record(["t", "i", "u"])?;
        } else {
            w.write_record(["t", "i", "j", "u"])?;
        }
        for n in 0..field.num_frames() {
            let t = fmt_f64(field.times().time(n));
            for (k, u) in field.frame(n).iter().enumerate() {
                let [i0, i1] = grid.multi_index(k);
                if grid.dim() == 1 {
                    w.write_record([t.clone(), signed(i0, m).to_string(), fmt_f64(*u)])?;
                } else {
                    w.write_record([t.clone(), signed(i0, m).to_string(), signed(i1, m).to_string(), fmt_f64(*u)])?;
                }
            }
        }
        Ok(())
    })
}

/// Reads a field file; the grid half width is not stored and must be supplied.
pub fn read_field(path: &Path, half_width: f64) -> Result<SpaceTimeField> {
    let mut r = reader(path)?;
    let dim = match r.headers()?.len() {
        3 => 1,
        4 => 2,
        k => return Err(Error::invalid(format!("field file has {k} columns"))),
    };
    check_header(&mut r, if dim == 1 { &["t", "i", "u"] } else { &["t", "i", "j", "u"] })?;
    let mut times: Vec<f64> = Vec::new();
    let mut rows: Vec<(usize, i64, i64, f64)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = line + 2;
        let t: f64 = parse(&rec[0], "t", line)?;
        if times.last() != Some(&t) {
            if times.last().is_some_and(|&last| t < last) {
                return Err(Error::invalid(format!("line {line}: times must be increasing")));
            }
            times.push(t);
        }
        let i: i64 = parse(&rec[1], "i", line)?;
        let (j, u) = if dim == 1 { (0, parse(&rec[2], "u", line)?) } else { (parse(&rec[2], "j", line)?, parse(&rec[3], "u", line)?) };
        rows.push((times.len() - 1, i, j, u));
    }
    if times.len() < 2 {
        return Err(Error::invalid("field file needs at least two frames"));
    }
    let m = rows.iter().map(|r| r.1.unsigned_abs()).max().unwrap_or(0) as usize;
    let grid = SpatialGrid::new(dim, half_width, m)?;
    let count = times.len() - 1;
    let tgrid = TimeGrid::new(times[count], count)?;
    for (n, &t) in times.iter().enumerate() {
        if (t - tgrid.time(n)).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::invalid("field times are not equally spaced from 0"));
        }
    }
    if rows.len() != grid.len() * times.len() {
        return Err(Error::SizeMismatch { expected: grid.len() * times.len(), got: rows.len() });
    }
    let mut values = vec![f64::NAN; rows.len()];
    let shift = m as i64;
    for (n, i, j, u) in rows {
        if j.unsigned_abs() as usize > m {
            return Err(Error::invalid(format!("index j = {j} outside -{m}..={m}")));
        }
        let k = if dim == 1 { (i + shift) as usize } else { grid.flat_index([(i + shift) as usize, (j + shift) as usize]) };
        values[n * grid.len() + k] = u;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("field file has duplicate or missing nodes"));
    }
    SpaceTimeField::new(grid, tgrid, values)
}

/// `i[,j],x[,y],phi` on the full grid.
pub fn write_potential(path: &Path, phi: &Potential) -> Result<()> {
    let grid = *phi.grid();
    let m = grid.half_count();
    let values = phi.full_values();
    write_atomic(path, |w| {
        if grid.dim() == 1 {
            w.write_record(["i", "x", "phi"])?;
        } else {
            w.write_record(["i", "j", "x", "y", "phi"])?;
        }
        for (k, v) in values.iter().enumerate() {
            let [i0, i1] = grid.multi_index(k);
            if grid.dim() == 1 {
                w.write_record([signed(i0, m).to_string(), fmt_f64(grid.coord(i0)), fmt_f64(*v)])?;
            } else {
                w.write_record([
                    signed(i0, m).to_string(),
                    signed(i1, m).to_string(),
                    fmt_f64(grid.coord(i0)),
                    fmt_f64(grid.coord(i1)),
                    fmt_f64(*v),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn read_potential(path: &Path) -> Result<Potential> {
    let mut r = reader(path)?;
    let dim = match r.headers()?.len() {
        3 => 1,
        5 => 2,
        k => return Err(Error::invalid(format!("potential file has {k} columns"))),
    };
    check_header(&mut r, if dim == 1 { &["i", "x", "phi"] } else { &["i", "j", "x", "y", "phi"] })?;
    let mut rows = Vec::new();
    let mut half_width: f64 = 0.0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = line + 2;
        let i: i64 = parse(&rec[0], "i", line)?;
        let j: i64 = if dim == 2 { parse(&rec[1], "j", line)? } else { 0 };
        let x: f64 = parse(&rec[dim], "x", line)?;
        half_width = half_width.max(x.abs());
        let phi: f64 = parse(&rec[2 * dim], "phi", line)?;
        rows.push((i, j, phi));
    }
    let m = rows.iter().map(|r| r.0.unsigned_abs()).max().unwrap_or(0) as usize;
    let grid = SpatialGrid::new(dim, half_width, m)?;
    if rows.len() != grid.len() {
        return Err(Error::SizeMismatch { expected: grid.len(), got: rows.len() });
    }
    let mut values = vec![f64::NAN; grid.len()];
    let shift = m as i64;
    for (i, j, phi) in rows {
        if j.unsigned_abs() as usize > m {
            return Err(Error::invalid(format!("index j = {j} outside -{m}..={m}")));
        }
        let k = if dim == 1 { (i + shift) as usize } else { grid.flat_index([(i + shift) as usize, (j + shift) as usize]) };
        values[k] = phi;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("potential file has duplicate or missing nodes"));
    }
    Potential::new(grid, values)
}

/// `t,agent_id,x1[,x2]`, one row per agent and frame.
pub fn write_agents(path: &Path, agents: &AgentData) -> Result<()> {
    write_atomic(path, |w| {
        if agents.dim() == 1 {
            w.write_record(["t", "agent_id", "x1"])?;
        } else {
            w.write_record(["t", "agent_id", "x1", "x2"])?;
        }
        for (n, &t) in agents.times().iter().enumerate() {
            for v in 0..agents.count() {
                let mut rec = vec![fmt_f64(t), v.to_string()];
                rec.extend(agents.position(n, v).iter().map(|x| fmt_f64(*x)));
                w.write_record(&rec)?;
            }
        }
        Ok(())
    })
}

pub fn read_agents(path: &Path) -> Result<AgentData> {
    let mut r = reader(path)?;
    let dim = match r.headers()?.len() {
        3 => 1,
        4 => 2,
        k => return Err(Error::invalid(format!("agent file has {k} columns"))),
    };
    check_header(&mut r, if dim == 1 { &["t", "agent_id", "x1"] } else { &["t", "agent_id", "x1", "x2"] })?;
    let mut frames: Vec<(f64, BTreeMap<usize, Vec<f64>>)> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = line + 2;
        let t: f64 = parse(&rec[0], "t", line)?;
        let id: usize = parse(&rec[1], "agent_id", line)?;
        let pos = (0..dim).map(|a| parse(&rec[2 + a], "position", line)).collect::<Result<Vec<f64>>>()?;
        if frames.last().map(|f| f.0) != Some(t) {
            if frames.last().is_some_and(|f| t < f.0) {
                return Err(Error::invalid(format!("line {line}: times must be increasing")));
            }
            frames.push((t, BTreeMap::new()));
        }
        if frames.last_mut().expect("frame pushed").1.insert(id, pos).is_some() {
            return Err(Error::invalid(format!("line {line}: agent {id} repeated in a frame")));
        }
    }
    let count = frames.first().map_or(0, |f| f.1.len());
    let mut positions = Vec::new();
    let mut times = Vec::new();
    for (t, agents) in frames {
        if agents.len() != count || agents.keys().next_back() != Some(&(count - 1)) {
            return Err(Error::invalid(format!("frame t = {t} does not list agents 0..{count}")));
        }
        times.push(t);
        positions.extend(agents.into_values().flatten());
    }
    AgentData::new(dim, times, count, positions)
}

/// `t,e_star,e_tilde`; missing series are left empty.
pub fn write_error_series(path: &Path, e_star: Option<&ErrorSeries>, e_tilde: Option<&ErrorSeries>) -> Result<()> {
    let times = e_star.or(e_tilde).map(|s| s.times.clone()).unwrap_or_default();
    let cell = |s: Option<&ErrorSeries>, n: usize| s.map_or(String::new(), |s| fmt_f64(s.values[n]));
    write_atomic(path, |w| {
        w.write_record(["t", "e_star", "e_tilde"])?;
        for (n, t) in times.iter().enumerate() {
            w.write_record([fmt_f64(*t), cell(e_star, n), cell(e_tilde, n)])?;
        }
        Ok(())
    })
}

/// `iteration,objective,delta,radius`.
pub fn write_diagnostics(path: &Path, diagnostics: &Diagnostics) -> Result<()> {
    write_atomic(path, |w| {
        w.write_record(["iteration", "objective", "delta", "radius"])?;
        for k in 0..diagnostics.objective.len() {
            w.write_record([
                (k + 1).to_string(),
                fmt_f64(diagnostics.objective[k]),
                fmt_f64(diagnostics.delta[k]),
                fmt_f64(diagnostics.radius[k]),
            ])?;
        }
        Ok(())
    })
}

/// Generic table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        w.write_record(header)?;
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::SizeMismatch { expected: header.len(), got: row.len() });
            }
            w.write_record(row)?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for dim in [1, 2] {
            let g = SpatialGrid::new(dim, 1.5, 3).unwrap();
            let t = TimeGrid::new(0.3, 3).unwrap();
            let values: Vec<f64> = (0..g.len() * 4).map(|k| (k as f64 * 0.7).sin() / 3.0).collect();
            let f = SpaceTimeField::new(g, t, values).unwrap();
            let path = dir.path().join(format!("f{dim}.csv"));
            write_field(&path, &f).unwrap();
            let back = read_field(&path, 1.5).unwrap();
            assert_eq!(back.values(), f.values());
            assert_eq!(back.grid(), f.grid());
        }
    }

    #[test]
    fn potential_and_agents_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(2, 1.0, 2).unwrap();
        let phi = Potential::new(g, (0..25).map(|k| k as f64 / 7.0).collect()).unwrap();
        let path = dir.path().join("p.csv");
        write_potential(&path, &phi).unwrap();
        assert_eq!(read_potential(&path).unwrap(), phi);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("i,j,x,y,phi\n") && !text.contains('\r'));

        let a = AgentData::new(2, vec![0.0, 0.5], 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 1.0 / 3.0]).unwrap();
        let path = dir.path().join("a.csv");
        write_agents(&path, &a).unwrap();
        assert_eq!(read_agents(&path).unwrap(), a);
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,k,u\n0,0,1\n").unwrap();
        assert!(read_field(&path, 1.0).is_err());
    }
}

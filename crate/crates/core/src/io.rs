//! File formats: time-series CSV, binary checkpoints, attractor-sample
//! files, sweep tables and audit reports.
//!
//! CSV floats are serialized with 17 significant digits so byte-level
//! reproducibility claims are testable textually; binary formats are
//! little-endian throughout and round-trip bit-exactly.

use crate::attractor::{AttractorSample, Metric, SweepTable};
use crate::audit::{AuditReport, AuditStatus};
use crate::basis::BasisSet;
use crate::error::Error;
use crate::field::{Field, NormSet, State};
use crate::integrate::{ModelKind, StepDiagnostics, Trajectory};
use crate::params::DimensionlessParams;
use crate::Result;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const CKP_MAGIC: &[u8; 8] = b"MRBCKP01";
const SMP_MAGIC: &[u8; 8] = b"MRBSMP01";

/// One float, 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column header of the time-series CSV.
pub const TIME_SERIES_HEADER: &str =
    "t,l2_u,l2_gamma,l2_theta,h1_u,h1_gamma,h1_theta,V,pos_part,neg_part,r_u,r_gamma,r_theta";

/// Writes the per-step diagnostics of a trajectory as CSV.
pub fn write_time_series(w: &mut impl Write, rows: &[StepDiagnostics]) -> Result<()> {
    writeln!(w, "{TIME_SERIES_HEADER}")?;
    for d in rows {
        let n = &d.norms;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(n.l2_u),
            fmt_f64(n.l2_gamma),
            fmt_f64(n.l2_theta),
            fmt_f64(n.h1semi_u),
            fmt_f64(n.h1semi_gamma),
            fmt_f64(n.h1semi_theta),
            fmt_f64(n.enstrophy),
            fmt_f64(n.pos_part),
            fmt_f64(n.neg_part),
            fmt_f64(d.residual[0]),
            fmt_f64(d.residual[1]),
            fmt_f64(d.residual[2]),
        )?;
    }
    Ok(())
}

/// Reads a time-series CSV back into diagnostics rows. The cross-term
/// fields are not part of the format and come back as zero; every audit
/// works from the recorded columns alone.
pub fn read_time_series(path: &Path) -> Result<Vec<StepDiagnostics>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format {
        path: path.display().to_string(),
        what: "empty file".into(),
    })?;
    if header.trim() != TIME_SERIES_HEADER {
        return Err(Error::Format {
            path: path.display().to_string(),
            what: "unexpected CSV header".into(),
        });
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format {
                path: path.display().to_string(),
                what: format!("line {}: {e}", lineno + 2),
            })?;
        if vals.len() != 13 {
            return Err(Error::Format {
                path: path.display().to_string(),
                what: format!("line {}: expected 13 columns", lineno + 2),
            });
        }
        rows.push(StepDiagnostics {
            t: vals[0],
            norms: NormSet {
                l2_u: vals[1],
                l2_gamma: vals[2],
                l2_theta: vals[3],
                h1semi_u: vals[4],
                h1semi_gamma: vals[5],
                h1semi_theta: vals[6],
                enstrophy: vals[7],
                pos_part: vals[8],
                neg_part: vals[9],
            },
            div_gamma_sq: 0.0,
            cross_rot: 0.0,
            cross_buoy: 0.0,
            residual: [vals[10], vals[11], vals[12]],
        });
    }
    Ok(rows)
}

/// Convenience wrapper writing a trajectory's diagnostics to a file.
pub fn save_time_series(path: &Path, traj: &Trajectory) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    write_time_series(&mut w, &traj.diagnostics)?;
    w.flush()?;
    Ok(())
}

fn write_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_params(w: &mut impl Write, dp: &DimensionlessParams) -> std::io::Result<()> {
    for v in [dp.ra, dp.pr, dp.k, dp.l, dp.m, dp.g, dp.ax, dp.ay] {
        write_f64(w, v)?;
    }
    Ok(())
}

fn write_coeffs(w: &mut impl Write, c: &[f64]) -> std::io::Result<()> {
    write_u32(w, c.len() as u32)?;
    for &v in c {
        write_f64(w, v)?;
    }
    Ok(())
}

struct Rd<R: Read> {
    r: R,
    path: String,
}

impl<R: Read> Rd<R> {
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.r.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn params(&mut self) -> Result<DimensionlessParams> {
        let vals: Vec<f64> = (0..8).map(|_| self.f64()).collect::<Result<_>>()?;
        DimensionlessParams::new(
            vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6], vals[7],
        )
    }
    fn coeffs(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()? as usize;
        let mut c = vec![0.0; n];
        for v in &mut c {
            *v = self.f64()?;
        }
        Ok(c)
    }
    fn bad(&self, what: impl Into<String>) -> Error {
        Error::Format { path: self.path.clone(), what: what.into() }
    }
}

fn model_tag(m: ModelKind) -> u8 {
    match m {
        ModelKind::Micropolar => 0,
        ModelKind::Newtonian => 1,
    }
}

fn model_from(t: u8) -> Result<ModelKind> {
    match t {
        0 => Ok(ModelKind::Micropolar),
        1 => Ok(ModelKind::Newtonian),
        _ => Err(Error::Format { path: String::new(), what: format!("bad model tag {t}") }),
    }
}

fn write_domain(w: &mut impl Write, spec: &crate::basis::DomainSpec) -> std::io::Result<()> {
    write_f64(w, spec.ax)?;
    write_f64(w, spec.ay)?;
    for v in [spec.mv, spec.nh, spec.n_scalar, spec.n_vector, spec.n_stokes] {
        write_u32(w, v as u32)?;
    }
    Ok(())
}

fn read_domain<R: Read>(r: &mut Rd<R>) -> Result<crate::basis::DomainSpec> {
    let ax = r.f64()?;
    let ay = r.f64()?;
    let mv = r.u32()? as usize;
    let nh = r.u32()? as usize;
    let n_scalar = r.u32()? as usize;
    let n_vector = r.u32()? as usize;
    let n_stokes = r.u32()? as usize;
    Ok(crate::basis::DomainSpec { ax, ay, mv, nh, n_scalar, n_vector, n_stokes })
}

/// Writes a solver checkpoint: header (format version, domain, parameters,
/// model kind, time) followed by the three coefficient arrays.
pub fn save_checkpoint(
    path: &Path,
    state: &State,
    dp: &DimensionlessParams,
    model: ModelKind,
) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(CKP_MAGIC)?;
    write_domain(&mut w, &state.u.basis.domain)?;
    write_params(&mut w, dp)?;
    w.write_all(&[model_tag(model)])?;
    write_f64(&mut w, state.t)?;
    write_coeffs(&mut w, &state.u.coeffs)?;
    write_coeffs(&mut w, &state.gamma.coeffs)?;
    write_coeffs(&mut w, &state.theta.coeffs)?;
    w.flush()?;
    Ok(())
}

/// Loads a checkpoint against already-built bases.
pub fn load_checkpoint(
    path: &Path,
    bases: &BasisSet,
) -> Result<(State, DimensionlessParams, ModelKind)> {
    let f = std::fs::File::open(path)?;
    let mut r = Rd { r: BufReader::new(f), path: path.display().to_string() };
    let mut magic = [0u8; 8];
    r.r.read_exact(&mut magic)?;
    if &magic != CKP_MAGIC {
        return Err(r.bad("bad checkpoint magic"));
    }
    let domain = read_domain(&mut r)?;
    if domain != bases.stokes.domain {
        return Err(r.bad("checkpoint domain does not match the built bases"));
    }
    let dp = r.params()?;
    let model = model_from(r.u8()?).map_err(|_| r.bad("bad model tag"))?;
    let t = r.f64()?;
    let u = r.coeffs()?;
    let g = r.coeffs()?;
    let th = r.coeffs()?;
    let state = State::new(
        t,
        Field::new(bases.stokes.clone(), u)?,
        Field::new(bases.vector.clone(), g)?,
        Field::new(bases.scalar.clone(), th)?,
    )?;
    Ok((state, dp, model))
}

/// Writes an attractor sample: header (parameters, metric tag, window)
/// followed by concatenated state records.
pub fn save_sample(path: &Path, sample: &AttractorSample) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(SMP_MAGIC)?;
    write_domain(&mut w, &sample.states.first().map(|s| s.u.basis.domain).ok_or_else(
        || Error::Precondition("cannot save an empty attractor sample".into()),
    )?)?;
    write_params(&mut w, &sample.dp)?;
    w.write_all(&[model_tag(sample.model)])?;
    w.write_all(&[match sample.metric {
        Metric::X => 0u8,
        Metric::Z => 1u8,
    }])?;
    write_f64(&mut w, sample.burn_in)?;
    write_f64(&mut w, sample.window)?;
    write_f64(&mut w, sample.empirical_t2.unwrap_or(f64::NAN))?;
    write_u32(&mut w, sample.states.len() as u32)?;
    for s in &sample.states {
        write_f64(&mut w, s.t)?;
        write_coeffs(&mut w, &s.u.coeffs)?;
        write_coeffs(&mut w, &s.gamma.coeffs)?;
        write_coeffs(&mut w, &s.theta.coeffs)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads an attractor sample against already-built bases.
pub fn load_sample(path: &Path, bases: &BasisSet) -> Result<AttractorSample> {
    let f = std::fs::File::open(path)?;
    let mut r = Rd { r: BufReader::new(f), path: path.display().to_string() };
    let mut magic = [0u8; 8];
    r.r.read_exact(&mut magic)?;
    if &magic != SMP_MAGIC {
        return Err(r.bad("bad sample magic"));
    }
    let domain = read_domain(&mut r)?;
    if domain != bases.stokes.domain {
        return Err(r.bad("sample domain does not match the built bases"));
    }
    let dp = r.params()?;
    let model = model_from(r.u8()?).map_err(|_| r.bad("bad model tag"))?;
    let metric = match r.u8()? {
        0 => Metric::X,
        1 => Metric::Z,
        t => return Err(r.bad(format!("bad metric tag {t}"))),
    };
    let burn_in = r.f64()?;
    let window = r.f64()?;
    let t2 = r.f64()?;
    let n = r.u32()? as usize;
    let mut states = Vec::with_capacity(n);
    for _ in 0..n {
        let t = r.f64()?;
        let u = r.coeffs()?;
        let g = r.coeffs()?;
        let th = r.coeffs()?;
        states.push(State::new(
            t,
            Field::new(bases.stokes.clone(), u)?,
            Field::new(bases.vector.clone(), g)?,
            Field::new(bases.scalar.clone(), th)?,
        )?);
    }
    Ok(AttractorSample {
        dp,
        model,
        metric,
        burn_in,
        window,
        states,
        empirical_t2: if t2.is_nan() { None } else { Some(t2) },
    })
}

/// Writes the sweep table CSV `K,dist_X,dist_Z,n_samples,burn_in,window`.
pub fn write_sweep_csv(w: &mut impl Write, table: &SweepTable) -> Result<()> {
    writeln!(w, "K,dist_X,dist_Z,n_samples,burn_in,window")?;
    for row in &table.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(row.k),
            fmt_f64(row.dist_x),
            fmt_f64(row.dist_z),
            row.n_samples,
            fmt_f64(row.burn_in),
            fmt_f64(row.window),
        )?;
    }
    Ok(())
}

/// Writes the audit report as CSV `audit,name,worst_margin,t_worst,pass,detail`.
pub fn write_audit_csv(w: &mut impl Write, report: &AuditReport) -> Result<()> {
    writeln!(w, "audit,name,worst_margin,t_worst,pass,detail")?;
    for rec in &report.records {
        let family = rec.name.trim_end_matches("-pos").trim_end_matches("-neg");
        writeln!(
            w,
            "{},{},{},{},{},\"{}\"",
            family,
            rec.name,
            fmt_f64(rec.worst_margin),
            fmt_f64(rec.t_worst),
            rec.status.tag(),
            rec.detail.replace('"', "'"),
        )?;
    }
    Ok(())
}

/// Human-readable audit table.
pub fn write_audit_table(w: &mut impl Write, report: &AuditReport) -> Result<()> {
    writeln!(w, "{:<22} {:>14} {:>10}  {:<14} detail", "audit", "worst margin", "t", "status")?;
    for rec in &report.records {
        writeln!(
            w,
            "{:<22} {:>14.6e} {:>10.4}  {:<14} {}",
            rec.name, rec.worst_margin, rec.t_worst, rec.status.tag(), rec.detail
        )?;
    }
    writeln!(w, "derived: T1 = {:.6e}  R = {:.6e}  D = {}", report.t1, report.ball_radius, report.d)?;
    writeln!(w, "derived: implied c4 = {:.6e}", report.implied_c4)?;
    if let Some(t2) = report.empirical_t2 {
        writeln!(w, "derived: empirical ball-entry time t* = {t2:.6}")?;
    }
    let overall = if report.records.iter().any(|r| r.status == AuditStatus::Fail) {
        "FAIL"
    } else {
        "PASS"
    };
    writeln!(w, "overall: {overall}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::test_spec;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_state(bases: &BasisSet, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mk = |b: &std::sync::Arc<crate::basis::EigenBasis>, rng: &mut ChaCha8Rng| {
            Field::new(b.clone(), (0..b.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        };
        State::new(0.25, mk(&bases.stokes, &mut rng), mk(&bases.vector, &mut rng), mk(&bases.scalar, &mut rng)).unwrap()
    }

    #[test]
    fn float_format_round_trips() {
        let vals = [0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, -2.2250738585072014e-308, 6.02e23];
        for v in vals {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn checkpoint_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let bases = BasisSet::build(&test_spec()).unwrap();
        let dp = DimensionlessParams::new(10.0, 2.0, 0.1, 1.0, 1.0, 0.5, 2.0, 2.0).unwrap();
        let s = sample_state(&bases, 1);
        let p1 = dir.path().join("a.ckp");
        let p2 = dir.path().join("b.ckp");
        save_checkpoint(&p1, &s, &dp, ModelKind::Micropolar).unwrap();
        let (s2, dp2, model) = load_checkpoint(&p1, &bases).unwrap();
        assert_eq!(model, ModelKind::Micropolar);
        assert_eq!(dp2.ra.to_bits(), dp.ra.to_bits());
        assert_eq!(s2.t.to_bits(), s.t.to_bits());
        save_checkpoint(&p2, &s2, &dp2, model).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn time_series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<StepDiagnostics> = (0..5)
            .map(|i| StepDiagnostics {
                t: i as f64 * 0.1,
                norms: NormSet {
                    l2_u: (i as f64).sin().abs(),
                    l2_gamma: 0.5,
                    l2_theta: 1.25e-7,
                    h1semi_u: 2.0,
                    h1semi_gamma: 3.0,
                    h1semi_theta: 4.0,
                    enstrophy: 13.0,
                    pos_part: 0.0,
                    neg_part: 1e-320,
                },
                div_gamma_sq: 0.0,
                cross_rot: 0.0,
                cross_buoy: 0.0,
                residual: [1e-9, -2e-9, 3e-9],
            })
            .collect();
        let p = dir.path().join("ts.csv");
        let mut buf = Vec::new();
        write_time_series(&mut buf, &rows).unwrap();
        std::fs::write(&p, &buf).unwrap();
        let back = read_time_series(&p).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.t.to_bits(), b.t.to_bits());
            assert_eq!(a.norms.l2_u.to_bits(), b.norms.l2_u.to_bits());
            assert_eq!(a.norms.neg_part.to_bits(), b.norms.neg_part.to_bits());
            assert_eq!(a.residual[1].to_bits(), b.residual[1].to_bits());
        }
    }

    #[test]
    fn sample_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bases = BasisSet::build(&test_spec()).unwrap();
        let dp = DimensionlessParams::new(10.0, 2.0, 0.0, 1.0, 1.0, 0.0, 2.0, 2.0).unwrap();
        let sample = AttractorSample {
            dp,
            model: ModelKind::Micropolar,
            metric: Metric::X,
            burn_in: 1.0,
            window: 0.5,
            states: vec![sample_state(&bases, 2), sample_state(&bases, 3)],
            empirical_t2: Some(0.125),
        };
        let p = dir.path().join("s.smp");
        save_sample(&p, &sample).unwrap();
        let back = load_sample(&p, &bases).unwrap();
        assert_eq!(back.states.len(), 2);
        assert_eq!(back.empirical_t2, Some(0.125));
        assert_eq!(back.metric, Metric::X);
        for (a, b) in sample.states.iter().zip(&back.states) {
            for (x, y) in a.u.coeffs.iter().zip(&b.u.coeffs) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

//! On-disk cache of a constructed eigenbasis.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic  b"MRBBAS01"
//! operator tag        u8   (0 scalar, 1 vector, 2 stokes)
//! ax, ay              f64
//! mv, nh, nmodes, gz  u32
//! eigenvalues         nmodes x f64
//! per mode:
//!   id tag            u8   (0 scalar, 1 vector, 2 pol, 3 vort, 4 w)
//!   m, n              i32
//!   vertical index    u32
//!   comp/pol          u8
//!   nterms            u8
//!   per term: comp u8, cx u16, cy u16, scale f64,
//!             prof gz x f64, dprof gz x f64, d2prof gz x f64,
//!             wall 2 x f64, dwall 2 x f64
//! ```
//!
//! A cache hit reproduces eigenvalues and profiles bit-exactly.

use super::{DomainSpec, EigenBasis, Mode, ModeId, ModeTerm, OperatorKind};
use crate::error::Error;
use crate::Result;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"MRBBAS01";

fn op_tag(op: OperatorKind) -> u8 {
    match op {
        OperatorKind::ScalarLaplacian => 0,
        OperatorKind::VectorLaplacian => 1,
        OperatorKind::Stokes => 2,
    }
}

fn op_from_tag(t: u8) -> Result<OperatorKind> {
    Ok(match t {
        0 => OperatorKind::ScalarLaplacian,
        1 => OperatorKind::VectorLaplacian,
        2 => OperatorKind::Stokes,
        _ => return Err(Error::Format { path: String::new(), what: format!("bad operator tag {t}") }),
    })
}

fn n_of(spec: &DomainSpec, op: OperatorKind) -> usize {
    match op {
        OperatorKind::ScalarLaplacian => spec.n_scalar,
        OperatorKind::VectorLaplacian => spec.n_vector,
        OperatorKind::Stokes => spec.n_stokes,
    }
}

/// Canonical cache file name for one basis. Horizontal periods are keyed by
/// their exact bit patterns so formatting cannot alias distinct domains.
pub fn cache_file_name(spec: &DomainSpec, op: OperatorKind) -> String {
    format!(
        "basis-{}-ax{:016x}-ay{:016x}-mv{}-nh{}-n{}.v1.mrb",
        op.tag(),
        spec.ax.to_bits(),
        spec.ay.to_bits(),
        spec.mv,
        spec.nh,
        n_of(spec, op),
    )
}

/// Full cache path inside a directory.
pub fn cache_path(dir: &Path, spec: &DomainSpec, op: OperatorKind) -> PathBuf {
    dir.join(cache_file_name(spec, op))
}

struct Wr<W: Write>(W);

impl<W: Write> Wr<W> {
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.0.write_all(&[v])
    }
    fn u16(&mut self, v: u16) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn i32(&mut self, v: i32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64s(&mut self, v: &[f64]) -> std::io::Result<()> {
        for &x in v {
            self.f64(x)?;
        }
        Ok(())
    }
}

struct Rd<R: Read> {
    r: R,
    path: String,
}

impl<R: Read> Rd<R> {
    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.r.read_exact(&mut b)?;
        Ok(b[0])
    }
    fn u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.r.read_exact(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn i32(&mut self) -> Result<i32> {
        let mut b = [0u8; 4];
        self.r.read_exact(&mut b)?;
        Ok(i32::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; n];
        for x in &mut v {
            *x = self.f64()?;
        }
        Ok(v)
    }
    fn bad(&self, what: impl Into<String>) -> Error {
        Error::Format { path: self.path.clone(), what: what.into() }
    }
}

/// Writes a basis to the cache file.
pub fn save(basis: &EigenBasis, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = Wr(BufWriter::new(f));
    w.0.write_all(MAGIC)?;
    w.u8(op_tag(basis.operator))?;
    w.f64(basis.domain.ax)?;
    w.f64(basis.domain.ay)?;
    w.u32(basis.domain.mv as u32)?;
    w.u32(basis.domain.nh as u32)?;
    w.u32(basis.modes.len() as u32)?;
    w.u32(basis.disc.gz as u32)?;
    for m in &basis.modes {
        w.f64(m.lambda)?;
    }
    for m in &basis.modes {
        let (tag, mm, nn, v, cp) = match m.id {
            ModeId::Scalar { m, n, j } => (0u8, m, n, j, 0u8),
            ModeId::Vector { m, n, j, comp } => (1, m, n, j, comp),
            ModeId::StokesPol { j, pol } => (2, 0, 0, j, pol),
            ModeId::StokesVort { m, n, j } => (3, m, n, j, 0),
            ModeId::StokesW { m, n, l } => (4, m, n, l, 0),
        };
        w.u8(tag)?;
        w.i32(mm)?;
        w.i32(nn)?;
        w.u32(v)?;
        w.u8(cp)?;
        w.u8(m.terms.len() as u8)?;
        for t in &m.terms {
            w.u8(t.comp)?;
            w.u16(t.cx as u16)?;
            w.u16(t.cy as u16)?;
            w.f64(t.scale)?;
            w.f64s(&t.prof)?;
            w.f64s(&t.dprof)?;
            w.f64s(&t.d2prof)?;
            w.f64s(&t.wall)?;
            w.f64s(&t.dwall)?;
        }
    }
    w.0.flush()?;
    Ok(())
}

/// Loads a basis from a cache file, verifying that the header matches the
/// requested spec and operator exactly.
pub fn load(path: &Path, spec: &DomainSpec, op: OperatorKind) -> Result<EigenBasis> {
    let f = std::fs::File::open(path)?;
    let mut r = Rd { r: BufReader::new(f), path: path.display().to_string() };
    let mut magic = [0u8; 8];
    r.r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(r.bad("bad magic / format version"));
    }
    let tag = r.u8()?;
    let got_op = op_from_tag(tag)?;
    if got_op != op {
        return Err(r.bad(format!("operator mismatch: {} vs {}", got_op.tag(), op.tag())));
    }
    let ax = r.f64()?;
    let ay = r.f64()?;
    let mv = r.u32()? as usize;
    let nh = r.u32()? as usize;
    let nmodes = r.u32()? as usize;
    let gz = r.u32()? as usize;
    if ax.to_bits() != spec.ax.to_bits()
        || ay.to_bits() != spec.ay.to_bits()
        || mv != spec.mv
        || nh != spec.nh
        || nmodes != n_of(spec, op)
    {
        return Err(r.bad("cache header does not match the requested domain spec"));
    }
    let disc = spec.discretization();
    if disc.gz != gz {
        return Err(r.bad("vertical grid size mismatch"));
    }
    let lambdas = r.f64s(nmodes)?;
    let mut modes = Vec::with_capacity(nmodes);
    for lambda in lambdas {
        let mode_tag = r.u8()?;
        let m = r.i32()?;
        let n = r.i32()?;
        let v = r.u32()?;
        let cp = r.u8()?;
        let id = match mode_tag {
            0 => ModeId::Scalar { m, n, j: v },
            1 => ModeId::Vector { m, n, j: v, comp: cp },
            2 => ModeId::StokesPol { j: v, pol: cp },
            3 => ModeId::StokesVort { m, n, j: v },
            4 => ModeId::StokesW { m, n, l: v },
            t => return Err(r.bad(format!("bad mode tag {t}"))),
        };
        let nterms = r.u8()? as usize;
        let mut terms = Vec::with_capacity(nterms);
        for _ in 0..nterms {
            let comp = r.u8()?;
            let cx = r.u16()? as usize;
            let cy = r.u16()? as usize;
            let scale = r.f64()?;
            let prof = r.f64s(gz)?;
            let dprof = r.f64s(gz)?;
            let d2prof = r.f64s(gz)?;
            let wall = r.f64s(2)?;
            let dwall = r.f64s(2)?;
            terms.push(ModeTerm {
                comp,
                cx,
                cy,
                scale,
                prof,
                dprof,
                d2prof,
                wall: [wall[0], wall[1]],
                dwall: [dwall[0], dwall[1]],
            });
        }
        modes.push(Mode { lambda, id, terms });
    }
    Ok(EigenBasis { operator: op, domain: *spec, disc, modes })
}

/// Loads the basis from `dir` when a matching cache exists, otherwise
/// builds it and writes the cache.
pub fn load_or_build(dir: &Path, spec: &DomainSpec, op: OperatorKind) -> Result<EigenBasis> {
    let path = cache_path(dir, spec, op);
    if path.exists() {
        return load(&path, spec, op);
    }
    std::fs::create_dir_all(dir)?;
    let disc = spec.discretization();
    let basis = match op {
        OperatorKind::ScalarLaplacian => super::build_scalar_basis(spec, disc)?,
        OperatorKind::VectorLaplacian => super::build_vector_basis(spec, disc)?,
        OperatorKind::Stokes => super::build_stokes_basis(spec, disc)?,
    };
    save(&basis, &path)?;
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::test_spec;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let spec = test_spec();
        let built = load_or_build(dir.path(), &spec, OperatorKind::Stokes).unwrap();
        let loaded = load_or_build(dir.path(), &spec, OperatorKind::Stokes).unwrap();
        assert_eq!(built.len(), loaded.len());
        for (a, b) in built.modes.iter().zip(&loaded.modes) {
            assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
            assert_eq!(a.id, b.id);
            assert_eq!(a.terms.len(), b.terms.len());
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                assert_eq!(ta.scale.to_bits(), tb.scale.to_bits());
                for (x, y) in ta.prof.iter().zip(&tb.prof) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
        // byte-identical rewrite
        let p2 = dir.path().join("rewrite.mrb");
        save(&loaded, &p2).unwrap();
        let b1 = std::fs::read(cache_path(dir.path(), &spec, OperatorKind::Stokes)).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn mismatched_spec_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = test_spec();
        load_or_build(dir.path(), &spec, OperatorKind::ScalarLaplacian).unwrap();
        let mut other = spec;
        other.n_scalar += 1;
        let path = cache_path(dir.path(), &spec, OperatorKind::ScalarLaplacian);
        assert!(load(&path, &other, OperatorKind::ScalarLaplacian).is_err());
    }
}

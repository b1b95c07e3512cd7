//! Binary cache for Floquet bases and dissipators.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   8 bytes  "DDKCACHE"
//! version u32
//! kind    u32 length + UTF-8
//! count   u32
//! entry   name (u32 length + UTF-8), dtype u8, ndim u32, dims u64 × ndim, payload
//! digest  32 bytes SHA-256 of everything above
//! ```
//!
//! dtype 1 = f64, 2 = complex f64 (re, im), 3 = u64, 4 = UTF-8 text. Matrices
//! are stored column-major.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dissipator::{DissipatorData, DissipatorDiagnostics, SpectralModel, TransitionTable};
use crate::dynamics::BasisOptions;
use crate::error::{Error, Result};
use crate::floquet::FloquetBasis;
use crate::linalg::{CMat, RMat};
use crate::model::{ModelParams, SpaceConfig};

pub const MAGIC: &[u8; 8] = b"DDKCACHE";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    F64 { shape: Vec<usize>, data: Vec<f64> },
    C64 { shape: Vec<usize>, data: Vec<C64> },
    U64 { shape: Vec<usize>, data: Vec<u64> },
    Text(String),
}

/// Named arrays tagged with a kind string.
#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub kind: String,
    pub entries: Vec<(String, Entry)>,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CacheCorrupt(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("invalid UTF-8"))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Outcome of decoding a file.
#[derive(Debug)]
pub enum Decoded {
    Ok(Container),
    /// Written by another format version.
    Stale(u32),
}

impl Container {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, e: Entry) {
        self.entries.push((name.into(), e));
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.kind);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, e) in &self.entries {
            put_str(&mut out, name);
            let (tag, shape): (u8, &[usize]) = match e {
                Entry::F64 { shape, .. } => (1, shape),
                Entry::C64 { shape, .. } => (2, shape),
                Entry::U64 { shape, .. } => (3, shape),
                Entry::Text(_) => (4, &[]),
            };
            out.push(tag);
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            match e {
                Entry::F64 { data, .. } => data
                    .iter()
                    .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                Entry::C64 { data, .. } => data.iter().for_each(|z| {
                    out.extend_from_slice(&z.re.to_le_bytes());
                    out.extend_from_slice(&z.im.to_le_bytes());
                }),
                Entry::U64 { data, .. } => data
                    .iter()
                    .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                Entry::Text(s) => put_str(&mut out, s),
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Decoded> {
        if buf.len() < MAGIC.len() + 4 + 32 || &buf[..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if version != VERSION {
            return Ok(Decoded::Stale(version));
        }
        let (body, digest) = buf.split_at(buf.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("checksum mismatch"));
        }
        let mut r = Reader { buf: body, pos: 12 };
        let kind = r.string()?;
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = r.string()?;
            let tag = r.u8()?;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| corrupt("shape overflow"))?;
            let e = match tag {
                1 => Entry::F64 {
                    data: (0..len).map(|_| r.f64()).collect::<Result<_>>()?,
                    shape,
                },
                2 => Entry::C64 {
                    data: (0..len)
                        .map(|_| Ok(C64::new(r.f64()?, r.f64()?)))
                        .collect::<Result<_>>()?,
                    shape,
                },
                3 => Entry::U64 {
                    data: (0..len).map(|_| r.u64()).collect::<Result<_>>()?,
                    shape,
                },
                4 => Entry::Text(r.string()?),
                t => return Err(corrupt(format!("unknown dtype {t}"))),
            };
            entries.push((name, e));
        }
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Decoded::Ok(Container { kind, entries }))
    }

    fn get(&self, name: &str) -> Result<&Entry> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| corrupt(format!("missing entry `{name}`")))
    }

    fn f64s(&self, name: &str) -> Result<(&[usize], &[f64])> {
        match self.get(name)? {
            Entry::F64 { shape, data } => Ok((shape, data)),
            _ => Err(corrupt(format!("entry `{name}` is not f64"))),
        }
    }

    fn c64s(&self, name: &str) -> Result<(&[usize], &[C64])> {
        match self.get(name)? {
            Entry::C64 { shape, data } => Ok((shape, data)),
            _ => Err(corrupt(format!("entry `{name}` is not complex"))),
        }
    }

    fn u64s(&self, name: &str) -> Result<&[u64]> {
        match self.get(name)? {
            Entry::U64 { data, .. } => Ok(data),
            _ => Err(corrupt(format!("entry `{name}` is not u64"))),
        }
    }

    fn text(&self, name: &str) -> Result<&str> {
        match self.get(name)? {
            Entry::Text(s) => Ok(s),
            _ => Err(corrupt(format!("entry `{name}` is not text"))),
        }
    }
}

fn stack_c(mats: &[CMat]) -> Entry {
    let (r, c) = mats.first().map_or((0, 0), |m| (m.nrows(), m.ncols()));
    let mut data = Vec::with_capacity(mats.len() * r * c);
    for m in mats {
        for j in 0..c {
            for i in 0..r {
                data.push(m[(i, j)]);
            }
        }
    }
    Entry::C64 {
        shape: vec![mats.len(), r, c],
        data,
    }
}

fn unstack_c(shape: &[usize], data: &[C64]) -> Result<Vec<CMat>> {
    let [k, r, c] = shape else {
        return Err(corrupt("expected a 3-d complex array"));
    };
    Ok((0..*k)
        .map(|s| CMat::from_fn(*r, *c, |i, j| data[s * r * c + j * r + i]))
        .collect())
}

pub fn encode_basis(b: &FloquetBasis) -> Container {
    let mut c = Container::new("floquet_basis");
    c.push(
        "scalars",
        Entry::F64 {
            shape: vec![2],
            data: vec![b.omega_d, b.origin],
        },
    );
    c.push(
        "quasienergies",
        Entry::F64 {
            shape: vec![b.quasienergies.len()],
            data: b.quasienergies.clone(),
        },
    );
    c.push(
        "flags",
        Entry::U64 {
            shape: vec![2],
            data: vec![b.nu_max as u64, b.driven as u64],
        },
    );
    c.push("coeffs", stack_c(&b.coeffs));
    if let Some(e) = &b.static_energies {
        c.push(
            "static_energies",
            Entry::F64 {
                shape: vec![e.len()],
                data: e.clone(),
            },
        );
    }
    let lens: Vec<u64> = b.degenerate_blocks.iter().map(|v| v.len() as u64).collect();
    let flat: Vec<u64> = b
        .degenerate_blocks
        .iter()
        .flatten()
        .map(|&i| i as u64)
        .collect();
    c.push(
        "block_lengths",
        Entry::U64 {
            shape: vec![lens.len()],
            data: lens,
        },
    );
    c.push(
        "block_members",
        Entry::U64 {
            shape: vec![flat.len()],
            data: flat,
        },
    );
    c
}

pub fn decode_basis(c: &Container) -> Result<FloquetBasis> {
    if c.kind != "floquet_basis" {
        return Err(corrupt(format!("expected floquet_basis, found {}", c.kind)));
    }
    let (_, s) = c.f64s("scalars")?;
    let (_, q) = c.f64s("quasienergies")?;
    let flags = c.u64s("flags")?;
    let (shape, data) = c.c64s("coeffs")?;
    let coeffs = unstack_c(shape, data)?;
    if s.len() != 2 || flags.len() != 2 || coeffs.len() != 2 * flags[0] as usize + 1 {
        return Err(corrupt("inconsistent basis header"));
    }
    if coeffs
        .iter()
        .any(|m| m.nrows() != q.len() || m.ncols() != q.len())
    {
        return Err(corrupt("coefficient shape does not match the dimension"));
    }
    let static_energies = match c.f64s("static_energies") {
        Ok((_, e)) => Some(e.to_vec()),
        Err(_) => None,
    };
    let lens = c.u64s("block_lengths")?;
    let members = c.u64s("block_members")?;
    if lens.iter().sum::<u64>() as usize != members.len() {
        return Err(corrupt("degenerate block lengths do not add up"));
    }
    let mut it = members.iter().map(|&i| i as usize);
    let degenerate_blocks = lens
        .iter()
        .map(|&l| it.by_ref().take(l as usize).collect())
        .collect();
    Ok(FloquetBasis {
        omega_d: s[0],
        origin: s[1],
        quasienergies: q.to_vec(),
        nu_max: flags[0] as usize,
        coeffs,
        driven: flags[1] != 0,
        static_energies,
        degenerate_blocks,
    })
}

pub fn encode_dissipator(d: &DissipatorData) -> Container {
    let mut c = Container::new("dissipator");
    let nu_max = d.tables.first().map_or(0, |t| t.nu_max);
    c.push(
        "nu_max",
        Entry::U64 {
            shape: vec![1],
            data: vec![nu_max as u64],
        },
    );
    let all: Vec<CMat> = d
        .tables
        .iter()
        .flat_map(|t| t.data.iter().cloned())
        .collect();
    c.push("tables", stack_c(&all));
    let n = d.rates.nrows();
    let rates = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| d.rates[(i, j)])
        .collect();
    c.push(
        "rates",
        Entry::F64 {
            shape: vec![n, n],
            data: rates,
        },
    );
    c.push("coherence", stack_c(std::slice::from_ref(&d.coherence)));
    c.push(
        "diagnostics",
        Entry::F64 {
            shape: vec![2],
            data: vec![d.diagnostics.tail_weight, d.diagnostics.min_re_z_relative],
        },
    );
    c.push("warnings", Entry::Text(d.diagnostics.warnings.join("\n")));
    c
}

pub fn decode_dissipator(c: &Container) -> Result<DissipatorData> {
    if c.kind != "dissipator" {
        return Err(corrupt(format!("expected dissipator, found {}", c.kind)));
    }
    let nu_max = *c
        .u64s("nu_max")?
        .first()
        .ok_or_else(|| corrupt("empty nu_max"))? as usize;
    let (shape, data) = c.c64s("tables")?;
    let all = unstack_c(shape, data)?;
    let per = 2 * nu_max + 1;
    if all.len() % per != 0 {
        return Err(corrupt("table count is not a multiple of the mode count"));
    }
    let tables = all
        .chunks(per)
        .map(|ch| TransitionTable {
            nu_max,
            data: ch.to_vec(),
        })
        .collect();
    let (shape, w) = c.f64s("rates")?;
    let [n, n2] = shape else {
        return Err(corrupt("rates must be 2-d"));
    };
    if n != n2 {
        return Err(corrupt("rates must be square"));
    }
    let rates = RMat::from_fn(*n, *n, |i, j| w[j * n + i]);
    let (shape, z) = c.c64s("coherence")?;
    let coherence = unstack_c(shape, z)?
        .pop()
        .ok_or_else(|| corrupt("empty coherence"))?;
    if coherence.nrows() != *n {
        return Err(corrupt("coherence and rates disagree in size"));
    }
    let (_, diag) = c.f64s("diagnostics")?;
    if diag.len() != 2 {
        return Err(corrupt("bad diagnostics"));
    }
    let text = c.text("warnings")?;
    let warnings = if text.is_empty() {
        Vec::new()
    } else {
        text.split('\n').map(str::to_string).collect()
    };
    Ok(DissipatorData {
        tables,
        rates,
        coherence,
        diagnostics: DissipatorDiagnostics {
            tail_weight: diag[0],
            min_re_z_relative: diag[1],
            warnings,
        },
    })
}

#[derive(Serialize)]
struct BasisKey<'a> {
    format: u32,
    params: &'a ModelParams,
    space: &'a SpaceConfig,
    options: &'a BasisOptions,
}

#[derive(Serialize)]
struct DissipatorKey<'a> {
    basis: String,
    spectral: &'a SpectralModel,
}

fn digest<T: Serialize>(v: &T) -> String {
    let text = toml::to_string(v).expect("cache key serializes");
    super::config::hex(&Sha256::digest(text.as_bytes()))
}

pub fn basis_key(params: &ModelParams, space: &SpaceConfig, options: &BasisOptions) -> String {
    digest(&BasisKey {
        format: VERSION,
        params,
        space,
        options,
    })
}

pub fn dissipator_key(basis_key: &str, spectral: &SpectralModel) -> String {
    digest(&DissipatorKey {
        basis: basis_key.to_string(),
        spectral,
    })
}

/// Directory of cache files, one per key and kind. Without a directory
/// every lookup misses and nothing is stored.
#[derive(Clone, Debug, Default)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    fn path(&self, key: &str, kind: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{key}.{kind}.bin")))
    }

    /// Container stored under `key`, if any. Version mismatches are
    /// treated as misses; damaged files are errors.
    pub fn load(&self, key: &str, kind: &str) -> Result<Option<Container>> {
        let Some(path) = self.path(key, kind) else {
            return Ok(None);
        };
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match Container::from_bytes(&bytes)
            .map_err(|e| corrupt(format!("{}: {e}", path.display())))?
        {
            Decoded::Ok(c) => {
                log::info!("cache hit {}", path.display());
                Ok(Some(c))
            }
            Decoded::Stale(v) => {
                log::warn!(
                    "cache file {} has format version {v}, expected {VERSION}; recomputing",
                    path.display()
                );
                Ok(None)
            }
        }
    }

    pub fn store(&self, key: &str, kind: &str, c: &Container) -> Result<()> {
        let Some(path) = self.path(key, kind) else {
            return Ok(());
        };
        super::output::write_atomic(&path, &c.to_bytes())?;
        log::info!("cache stored {}", path.display());
        Ok(())
    }
}

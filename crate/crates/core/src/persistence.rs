//! On-disk formats of a run directory.
//!
//! Population files (`.pop`) and flag files (`.flag`) share one binary
//! encoding, little-endian throughout:
//!
//! ```text
//! header   magic[4] version:u32 kind:u8 width:u8 reserved:u16
//!          islands:u32 island_size:u32 genome_length:u32
//!          generation:u64 master_seed:u64
//! island   count:u32, then `count` individual records      (repeated)
//! record   genes[ceil(m / 8)]  MSB-first, padding bits zero
//!          flags:u8            bit 0 = has fitness, bit 1 = is solution
//!          fitness[width]      raw IEEE-754 bits, zero when absent
//! ```
//!
//! Snapshots (kind 0) have no empty islands and `island_size` equals the
//! largest island. Individual lists (kind 1, used for solution partitions)
//! hold exactly one island of any length. Flag files use magic `IGAF` and
//! carry one island index plus a single record after the header. Writers are
//! canonical: equal values produce identical bytes.
//!
//! A run directory looks like:
//!
//! ```text
//! generations/gen-000000.pop
//! flags/gen-000003-island-001.flag
//! solutions.pop
//! non_solutions.pop
//! report.txt
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{PersistError, Result};
use crate::model::{Genome, Individual, IslandId, PopulationSnapshot};
use crate::pipeline::TerminationFlag;
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;
const POP_MAGIC: &[u8; 4] = b"IGAP";
const FLAG_MAGIC: &[u8; 4] = b"IGAF";
const KIND_SNAPSHOT: u8 = 0;
const KIND_LIST: u8 = 1;
const HAS_FITNESS: u8 = 0b01;
const IS_SOLUTION: u8 = 0b10;

/// Header fields carried by every population file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationHeader {
    pub islands: u32,
    pub island_size: u32,
    pub genome_length: u32,
    pub generation: u64,
    pub master_seed: u64,
}

fn invariant(msg: impl Into<String>) -> PersistError {
    PersistError::Invariant(msg.into())
}

fn to_u32(n: usize, what: &str) -> Result<u32, PersistError> {
    u32::try_from(n).map_err(|_| invariant(format!("{what} {n} exceeds u32")))
}

struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    fn new() -> Self {
        Encoder { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn header<F: Scalar>(&mut self, magic: &[u8; 4], kind: u8, h: &PopulationHeader) {
        self.buf.extend_from_slice(magic);
        self.u32(FORMAT_VERSION);
        self.u8(kind);
        self.u8(F::WIDTH);
        self.u16(0);
        self.u32(h.islands);
        self.u32(h.island_size);
        self.u32(h.genome_length);
        self.u64(h.generation);
        self.u64(h.master_seed);
    }

    fn individual<F: Scalar>(&mut self, ind: &Individual<F>, m: usize) -> Result<(), PersistError> {
        if ind.genome.len() != m {
            return Err(invariant(format!(
                "genome length {} differs from header length {m}",
                ind.genome.len()
            )));
        }
        if ind.is_solution && ind.fitness.is_none() {
            return Err(invariant("solution flag set on an unevaluated individual"));
        }
        let mut packed = vec![0u8; m.div_ceil(8)];
        for (i, &bit) in ind.genome.bits().iter().enumerate() {
            if bit {
                packed[i / 8] |= 0x80 >> (i % 8);
            }
        }
        self.buf.extend_from_slice(&packed);
        let mut flags = 0;
        if ind.fitness.is_some() {
            flags |= HAS_FITNESS;
        }
        if ind.is_solution {
            flags |= IS_SOLUTION;
        }
        self.u8(flags);
        let bits = ind.fitness.map_or(0, Scalar::to_raw_bits);
        self.buf
            .extend_from_slice(&bits.to_le_bytes()[..usize::from(F::WIDTH)]);
        Ok(())
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    fn fail(&self, at: usize, reason: impl Into<String>) -> PersistError {
        PersistError::Parse {
            offset: at as u64,
            reason: reason.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], PersistError> {
        if self.buf.len() - self.pos < n {
            return Err(self.fail(self.pos, format!("truncated while reading {what}")));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8, PersistError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, PersistError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn header<F: Scalar>(&mut self, magic: &[u8; 4]) -> Result<(u8, PopulationHeader), PersistError> {
        if self.take(4, "magic")? != magic {
            return Err(self.fail(0, "bad magic"));
        }
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(PersistError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let kind = self.u8("kind")?;
        let width_at = self.pos;
        let width = self.u8("fitness width")?;
        if width != F::WIDTH {
            return Err(self.fail(
                width_at,
                format!("fitness width {width}, expected {}", F::WIDTH),
            ));
        }
        let reserved_at = self.pos;
        if self.u16("reserved")? != 0 {
            return Err(self.fail(reserved_at, "reserved bytes must be zero"));
        }
        let header = PopulationHeader {
            islands: self.u32("island count")?,
            island_size: self.u32("island size")?,
            genome_length: self.u32("genome length")?,
            generation: self.u64("generation")?,
            master_seed: self.u64("master seed")?,
        };
        if header.genome_length == 0 {
            return Err(self.fail(self.pos - 24, "genome length must be positive"));
        }
        Ok((kind, header))
    }

    fn individual<F: Scalar>(&mut self, m: usize) -> Result<Individual<F>, PersistError> {
        let start = self.pos;
        let packed = self.take(m.div_ceil(8), "genome")?;
        let bits: Vec<bool> = (0..m).map(|i| packed[i / 8] & (0x80 >> (i % 8)) != 0).collect();
        let pad = m % 8;
        if pad != 0 && packed[packed.len() - 1] & (0xff >> pad) != 0 {
            return Err(self.fail(start, "non-zero genome padding bits"));
        }
        let flags_at = self.pos;
        let flags = self.u8("individual flags")?;
        if flags & !(HAS_FITNESS | IS_SOLUTION) != 0 {
            return Err(self.fail(flags_at, format!("unknown individual flags {flags:#04x}")));
        }
        let fit_at = self.pos;
        let mut raw = [0u8; 8];
        raw[..usize::from(F::WIDTH)].copy_from_slice(self.take(usize::from(F::WIDTH), "fitness")?);
        let raw = u64::from_le_bytes(raw);
        let fitness = if flags & HAS_FITNESS != 0 {
            Some(F::from_raw_bits(raw))
        } else {
            if raw != 0 {
                return Err(self.fail(fit_at, "fitness bytes set on an unevaluated individual"));
            }
            None
        };
        let is_solution = flags & IS_SOLUTION != 0;
        if is_solution && fitness.is_none() {
            return Err(self.fail(flags_at, "solution flag set on an unevaluated individual"));
        }
        Ok(Individual {
            genome: Genome::new(bits).map_err(|e| self.fail(start, e.to_string()))?,
            fitness,
            is_solution,
        })
    }

    fn finish(&self) -> Result<(), PersistError> {
        if self.pos != self.buf.len() {
            return Err(self.fail(self.pos, "trailing bytes"));
        }
        Ok(())
    }
}

/// Encodes a snapshot. Fails on empty or inconsistent populations.
pub fn encode_snapshot<F: Scalar>(
    snapshot: &PopulationSnapshot<F>,
    master_seed: u64,
) -> Result<Vec<u8>, PersistError> {
    if snapshot.islands.is_empty() {
        return Err(invariant("a snapshot needs at least one island"));
    }
    if snapshot.islands.iter().any(Vec::is_empty) {
        return Err(invariant("a snapshot cannot contain an empty island"));
    }
    let m = snapshot.genome_length().expect("non-empty");
    let island_size = snapshot.islands.iter().map(Vec::len).max().unwrap_or(0);
    let header = PopulationHeader {
        islands: to_u32(snapshot.islands.len(), "island count")?,
        island_size: to_u32(island_size, "island size")?,
        genome_length: to_u32(m, "genome length")?,
        generation: snapshot.generation,
        master_seed,
    };
    let mut enc = Encoder::new();
    enc.header::<F>(POP_MAGIC, KIND_SNAPSHOT, &header);
    for island in &snapshot.islands {
        enc.u32(to_u32(island.len(), "island length")?);
        for ind in island {
            enc.individual(ind, m)?;
        }
    }
    Ok(enc.buf)
}

fn decode_population<F: Scalar>(
    bytes: &[u8],
    expected_kind: u8,
) -> Result<(PopulationHeader, Vec<Vec<Individual<F>>>), PersistError> {
    let mut dec = Decoder::new(bytes);
    let (kind, header) = dec.header::<F>(POP_MAGIC)?;
    if kind != expected_kind {
        return Err(dec.fail(8, format!("file kind {kind}, expected {expected_kind}")));
    }
    let m = header.genome_length as usize;
    let mut islands = Vec::new();
    for _ in 0..header.islands {
        let len_at = dec.pos;
        let len = dec.u32("island length")?;
        if expected_kind == KIND_SNAPSHOT && (len == 0 || len > header.island_size) {
            return Err(dec.fail(
                len_at,
                format!("island length {len} outside 1..={}", header.island_size),
            ));
        }
        let mut island = Vec::new();
        for _ in 0..len {
            island.push(dec.individual(m)?);
        }
        islands.push(island);
    }
    dec.finish()?;
    Ok((header, islands))
}

pub fn decode_snapshot<F: Scalar>(
    bytes: &[u8],
) -> Result<(PopulationHeader, PopulationSnapshot<F>), PersistError> {
    let (header, islands) = decode_population(bytes, KIND_SNAPSHOT)?;
    if header.islands == 0 {
        return Err(PersistError::Parse {
            offset: 16,
            reason: "a snapshot needs at least one island".into(),
        });
    }
    let max = islands.iter().map(Vec::len).max().unwrap_or(0);
    if max != header.island_size as usize {
        return Err(PersistError::Parse {
            offset: 20,
            reason: format!("island size {} but largest island has {max}", header.island_size),
        });
    }
    let snapshot = PopulationSnapshot::new(header.generation, islands);
    Ok((header, snapshot))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| PersistError::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, PersistError> {
    fs::read(path).map_err(|e| PersistError::io(path, e))
}

pub fn write_snapshot<F: Scalar>(
    path: &Path,
    snapshot: &PopulationSnapshot<F>,
    master_seed: u64,
) -> Result<(), PersistError> {
    write_bytes(path, &encode_snapshot(snapshot, master_seed)?)
}

pub fn read_snapshot<F: Scalar>(path: &Path) -> Result<PopulationSnapshot<F>, PersistError> {
    Ok(decode_snapshot(&read_bytes(path)?)?.1)
}

/// Writes a flat list of individuals (possibly empty) as a single island.
pub fn write_individuals<F: Scalar>(
    path: &Path,
    individuals: &[Individual<F>],
    genome_length: usize,
    generation: u64,
    master_seed: u64,
) -> Result<(), PersistError> {
    let header = PopulationHeader {
        islands: 1,
        island_size: to_u32(individuals.len(), "list length")?,
        genome_length: to_u32(genome_length, "genome length")?,
        generation,
        master_seed,
    };
    if genome_length == 0 {
        return Err(invariant("genome length must be positive"));
    }
    let mut enc = Encoder::new();
    enc.header::<F>(POP_MAGIC, KIND_LIST, &header);
    enc.u32(header.island_size);
    for ind in individuals {
        enc.individual(ind, genome_length)?;
    }
    write_bytes(path, &enc.buf)
}

pub fn read_individuals<F: Scalar>(path: &Path) -> Result<Vec<Individual<F>>, PersistError> {
    let (header, mut islands) = decode_population(&read_bytes(path)?, KIND_LIST)?;
    if header.islands != 1 || islands[0].len() != header.island_size as usize {
        return Err(PersistError::Parse {
            offset: 16,
            reason: "an individual list holds exactly one island".into(),
        });
    }
    Ok(islands.pop().expect("one island"))
}

pub fn encode_flag<F: Scalar>(flag: &TerminationFlag<F>, master_seed: u64) -> Result<Vec<u8>, PersistError> {
    let m = flag.satisfying_individual.genome.len();
    let header = PopulationHeader {
        islands: 1,
        island_size: 1,
        genome_length: to_u32(m, "genome length")?,
        generation: flag.generation,
        master_seed,
    };
    let mut enc = Encoder::new();
    enc.header::<F>(FLAG_MAGIC, KIND_SNAPSHOT, &header);
    enc.u32(flag.island.0);
    enc.individual(&flag.satisfying_individual, m)?;
    Ok(enc.buf)
}

pub fn write_flag<F: Scalar>(
    path: &Path,
    flag: &TerminationFlag<F>,
    master_seed: u64,
) -> Result<(), PersistError> {
    write_bytes(path, &encode_flag(flag, master_seed)?)
}

pub fn read_flag<F: Scalar>(path: &Path) -> Result<TerminationFlag<F>, PersistError> {
    let bytes = read_bytes(path)?;
    let mut dec = Decoder::new(&bytes);
    let (_, header) = dec.header::<F>(FLAG_MAGIC)?;
    let island = IslandId(dec.u32("island index")?);
    let satisfying_individual = dec.individual(header.genome_length as usize)?;
    dec.finish()?;
    Ok(TerminationFlag {
        generation: header.generation,
        island,
        satisfying_individual,
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxGenerations,
    CriterionSatisfied,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxGenerations => "max_generations",
            StopReason::CriterionSatisfied => "criterion_satisfied",
        }
    }
}

/// Outcome of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport<F: Scalar = f64> {
    pub generations: u64,
    pub stop_reason: StopReason,
    pub best: Option<Individual<F>>,
    pub final_snapshot: PathBuf,
    pub solutions: Option<usize>,
    pub elapsed: Duration,
    /// Extra `key=value` lines appended after the standard keys.
    pub extra: Vec<(String, String)>,
}

impl<F: Scalar> RunReport<F> {
    /// `key=value` lines in a fixed order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        line("stop_reason", &self.stop_reason.as_str());
        line("generations", &self.generations);
        match &self.best {
            Some(b) => {
                let fitness = b.fitness.map_or_else(|| "-".to_string(), |f| f.to_string());
                line("best_fitness", &fitness);
                line("best_genome", &b.genome);
            }
            None => {
                line("best_fitness", &"-");
                line("best_genome", &"-");
            }
        }
        line("final_snapshot", &self.final_snapshot.display());
        match self.solutions {
            Some(n) => line("solutions", &n),
            None => line("solutions", &"-"),
        }
        line("elapsed_ms", &self.elapsed.as_millis());
        for (k, v) in &self.extra {
            line(k, v);
        }
        out
    }
}

/// Writes (or overwrites) the report file.
pub fn write_report<F: Scalar>(path: &Path, report: &RunReport<F>) -> Result<(), PersistError> {
    write_bytes(path, report.render().as_bytes())
}

/// Paths inside a run directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self) -> Result<(), PersistError> {
        for dir in [self.generations_dir(), self.flags_dir()] {
            fs::create_dir_all(&dir).map_err(|e| PersistError::io(&dir, e))?;
        }
        Ok(())
    }

    pub fn generations_dir(&self) -> PathBuf {
        self.root.join("generations")
    }

    pub fn flags_dir(&self) -> PathBuf {
        self.root.join("flags")
    }

    pub fn generation(&self, generation: u64) -> PathBuf {
        self.generations_dir().join(format!("gen-{generation:06}.pop"))
    }

    pub fn flag(&self, generation: u64, island: IslandId) -> PathBuf {
        self.flags_dir()
            .join(format!("gen-{generation:06}-island-{:03}.flag", island.0))
    }

    pub fn solutions(&self) -> PathBuf {
        self.root.join("solutions.pop")
    }

    pub fn non_solutions(&self) -> PathBuf {
        self.root.join("non_solutions.pop")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    fn indexed_files(dir: &Path, parse: impl Fn(&str) -> Option<u64>) -> Result<Vec<(u64, PathBuf)>, PersistError> {
        let entries = match fs::read_dir(dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(PersistError::io(dir, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| PersistError::io(dir, e))?;
            if let Some(n) = entry.file_name().to_str().and_then(&parse) {
                out.push((n, entry.path()));
            }
        }
        out.sort();
        Ok(out)
    }

    /// Persisted generation indices, ascending.
    pub fn generations(&self) -> Result<Vec<u64>, PersistError> {
        let parse = |name: &str| {
            name.strip_prefix("gen-")?
                .strip_suffix(".pop")?
                .parse()
                .ok()
        };
        Ok(Self::indexed_files(&self.generations_dir(), parse)?
            .into_iter()
            .map(|(g, _)| g)
            .collect())
    }

    /// Flag files for `generation`.
    pub fn flags_for(&self, generation: u64) -> Result<Vec<PathBuf>, PersistError> {
        let prefix = format!("gen-{generation:06}-island-");
        let parse = |name: &str| name.strip_prefix(&prefix)?.strip_suffix(".flag")?.parse().ok();
        Ok(Self::indexed_files(&self.flags_dir(), parse)?
            .into_iter()
            .map(|(_, p)| p)
            .collect())
    }

    /// Removes artifacts of a previous run except the initial population.
    pub fn clear_outputs(&self) -> Result<(), PersistError> {
        for g in self.generations()? {
            if g > 0 {
                remove(&self.generation(g))?;
            }
        }
        let parse = |name: &str| name.ends_with(".flag").then_some(0);
        for (_, p) in Self::indexed_files(&self.flags_dir(), parse)? {
            remove(&p)?;
        }
        for p in [self.solutions(), self.non_solutions(), self.report()] {
            if p.exists() {
                remove(&p)?;
            }
        }
        Ok(())
    }
}

fn remove(path: &Path) -> Result<(), PersistError> {
    fs::remove_file(path).map_err(|e| PersistError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ind(bits: &str, fitness: Option<f64>, sol: bool) -> Individual {
        Individual {
            genome: bits.parse().unwrap(),
            fitness,
            is_solution: sol,
        }
    }

    fn sample() -> PopulationSnapshot {
        PopulationSnapshot::new(
            7,
            vec![
                vec![ind("101100111", Some(0.75), true), ind("000000001", None, false)],
                vec![ind("111111111", Some(-0.0), false), ind("010101010", Some(f64::NAN), false)],
            ],
        )
    }

    #[test]
    fn round_trip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pop");
        let snap = sample();
        write_snapshot(&path, &snap, 42).unwrap();
        assert_eq!(read_snapshot::<f64>(&path).unwrap(), snap);
    }

    #[test]
    fn header_fields() {
        let bytes = encode_snapshot(&sample(), 42).unwrap();
        let (h, _) = decode_snapshot::<f64>(&bytes).unwrap();
        assert_eq!(
            h,
            PopulationHeader {
                islands: 2,
                island_size: 2,
                genome_length: 9,
                generation: 7,
                master_seed: 42
            }
        );
        assert_eq!(&bytes[..4], b"IGAP");
        // 40 header + 2 islands * (4 + 2 * (2 genome + 1 flags + 8 fitness))
        assert_eq!(bytes.len(), 40 + 2 * (4 + 2 * 11));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_snapshot(&sample(), 1).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match decode_snapshot::<f64>(cut) {
            Err(PersistError::Parse { offset, reason }) => {
                assert_eq!(offset as usize, bytes.len() - 8);
                assert!(reason.contains("fitness"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_and_width_gated() {
        let mut bytes = encode_snapshot(&sample(), 1).unwrap();
        assert!(matches!(
            decode_snapshot::<f32>(&bytes),
            Err(PersistError::Parse { offset: 9, .. })
        ));
        bytes[4] = 2;
        assert!(matches!(
            decode_snapshot::<f64>(&bytes),
            Err(PersistError::Version { found: 2, .. })
        ));
    }

    #[test]
    fn island_count_mismatch_rejected() {
        let mut bytes = encode_snapshot(&sample(), 1).unwrap();
        bytes[12] = 3;
        assert!(matches!(decode_snapshot::<f64>(&bytes), Err(PersistError::Parse { .. })));
    }

    #[test]
    fn empty_population_rejected_on_write() {
        let empty = PopulationSnapshot::<f64>::new(0, vec![vec![]]);
        assert!(matches!(encode_snapshot(&empty, 0), Err(PersistError::Invariant(_))));
        let none = PopulationSnapshot::<f64>::new(0, vec![]);
        assert!(encode_snapshot(&none, 0).is_err());
    }

    #[test]
    fn f32_snapshots() {
        let snap = PopulationSnapshot::new(1, vec![vec![Individual::with_fitness("01".parse().unwrap(), 0.5f32)]]);
        let bytes = encode_snapshot(&snap, 0).unwrap();
        assert_eq!(decode_snapshot::<f32>(&bytes).unwrap().1, snap);
    }

    #[test]
    fn individual_lists_may_be_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pop");
        write_individuals::<f64>(&path, &[], 4, 3, 0).unwrap();
        assert!(read_individuals::<f64>(&path).unwrap().is_empty());
        let list = vec![ind("1010", Some(1.0), true)];
        write_individuals(&path, &list, 4, 3, 0).unwrap();
        assert_eq!(read_individuals::<f64>(&path).unwrap(), list);
        assert!(read_snapshot::<f64>(&path).is_err());
    }

    #[test]
    fn flag_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::new(dir.path());
        run.create().unwrap();
        let flag = TerminationFlag {
            generation: 3,
            island: IslandId(1),
            satisfying_individual: ind("1111", Some(4.0), true),
        };
        let path = run.flag(3, IslandId(1));
        assert!(path.ends_with("flags/gen-000003-island-001.flag"));
        write_flag(&path, &flag, 5).unwrap();
        assert_eq!(read_flag::<f64>(&path).unwrap(), flag);
        assert_eq!(run.flags_for(3).unwrap(), vec![path]);
        assert!(run.flags_for(2).unwrap().is_empty());
    }

    #[test]
    fn report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        let mut report = RunReport {
            generations: 3,
            stop_reason: StopReason::CriterionSatisfied,
            best: Some(ind("0110", Some(0.91), true)),
            final_snapshot: "generations/gen-000003.pop".into(),
            solutions: Some(2),
            elapsed: Duration::from_millis(5),
            extra: vec![],
        };
        write_report(&path, &report).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("stop_reason=criterion_satisfied\n"));
        assert!(text.contains("generations=3\n"));
        assert!(text.contains("best_fitness=0.91\n"));
        report.generations = 9;
        write_report(&path, &report).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("generations=9\n") && !text.contains("generations=3\n"));
    }

    #[test]
    fn run_dir_layout() {
        let run = RunDir::new("/tmp/run");
        assert_eq!(run.generation(12), PathBuf::from("/tmp/run/generations/gen-000012.pop"));
        assert_eq!(run.solutions(), PathBuf::from("/tmp/run/solutions.pop"));
        assert_eq!(run.non_solutions(), PathBuf::from("/tmp/run/non_solutions.pop"));
        assert_eq!(run.report(), PathBuf::from("/tmp/run/report.txt"));
    }

    fn arb_snapshot() -> impl Strategy<Value = PopulationSnapshot> {
        let fitness = prop_oneof![
            Just(None),
            any::<u64>().prop_map(|b| Some(f64::from_bits(b))),
            prop::sample::select(vec![0.0, -0.0, f64::INFINITY, f64::MIN_POSITIVE, 5e-324, f64::MAX])
                .prop_map(Some),
        ];
        (1usize..20, 1usize..4, 1usize..5).prop_flat_map(move |(m, j, r)| {
            let ind = (prop::collection::vec(any::<bool>(), m), fitness.clone(), any::<bool>()).prop_map(
                |(bits, fitness, sol)| Individual {
                    genome: Genome::new(bits).unwrap(),
                    fitness,
                    is_solution: sol && fitness.is_some(),
                },
            );
            (any::<u64>(), prop::collection::vec(prop::collection::vec(ind, r), j))
                .prop_map(|(generation, islands)| PopulationSnapshot::new(generation, islands))
        })
    }

    proptest! {
        #[test]
        fn encoding_round_trips_and_is_canonical(snap in arb_snapshot(), seed in any::<u64>()) {
            let bytes = encode_snapshot(&snap, seed).unwrap();
            let (h, back) = decode_snapshot::<f64>(&bytes).unwrap();
            prop_assert_eq!(h.master_seed, seed);
            prop_assert_eq!(&back, &snap);
            prop_assert_eq!(encode_snapshot(&back, seed).unwrap(), bytes);
        }
    }
}

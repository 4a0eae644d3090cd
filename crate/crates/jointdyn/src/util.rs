//! Small shared utilities: seed derivation, checksums, the flat key-value
//! text format used by manifests and config files, and worker-count lookup.

use crate::error::{Error, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG used everywhere in the library.
pub type Rng = ChaCha8Rng;

/// Build the root RNG for a run.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent sub-seed from a root seed and a stream index.
///
/// splitmix64 finalizer; decorrelates consecutive indices so per-episode and
/// per-component streams do not overlap.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a 64-bit, used as the trailing checksum of binary containers.
#[derive(Clone, Copy)]
pub struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub fn update(&mut self, bytes: &[u8]) {
        let mut h = self.0;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.0 = h;
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = Fnv64::new();
    h.update(bytes);
    h.finish()
}

/// Flat `key = value` text block. Order-preserving, one pair per line,
/// `#` starts a comment. Used by dataset manifests, checkpoint config
/// blocks and train config files.
#[derive(Debug, Clone, Default)]
pub struct KvText {
    pairs: Vec<(String, String)>,
}

impl KvText {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidConfig(format!("missing key `{key}`")))
    }

    pub fn parse_req<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("key `{key}` has unparsable value")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }

    /// Canonical rendering: identical input pairs always produce identical bytes.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(KvText { pairs })
    }
}

/// Exact f64 round trip through hex bits, for text blocks that must be
/// byte-stable across write/read/write cycles.
pub fn f64_to_hex(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 16);
    for v in values {
        s.push_str(&format!("{:016x}", v.to_bits()));
    }
    s
}

pub fn f64_from_hex(hex: &str) -> Result<Vec<f64>> {
    if hex.len() % 16 != 0 {
        return Err(Error::InvalidConfig("hex f64 block has bad length".into()));
    }
    let mut out = Vec::with_capacity(hex.len() / 16);
    for i in (0..hex.len()).step_by(16) {
        let bits = u64::from_str_radix(&hex[i..i + 16], 16)
            .map_err(|_| Error::InvalidConfig("hex f64 block has bad digit".into()))?;
        out.push(f64::from_bits(bits));
    }
    Ok(out)
}

/// Worker count for data-parallel sections, capped by `JOINTDYN_THREADS`.
/// Defaults to 1: all results are reproducible at any worker count because
/// gradient and statistic reduction happens in fixed index order, but the
/// default keeps runs simple.
pub fn worker_count() -> usize {
    std::env::var("JOINTDYN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Map `f` over indexed items on up to `workers` threads, returning results
/// in input order. Each item is processed independently; reduction by the
/// caller in index order keeps results identical for any worker count.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let n = items.len();
    let mut slots: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let chunk = n.div_ceil(workers);
    std::thread::scope(|scope| {
        let f = &f;
        for (w, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let start = w * chunk;
            scope.spawn(move || {
                for (off, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = Some(f(start + off, &items[start + off]));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

//! Challenge-response pair sets and their text file format:
//!
//! ```text
//! # n=<N> k=<K> kind=<proposed|arbiter> seed=<u64>
//! <challenge-bitstring>,<response-bit>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::challenge::Challenge;
use super::{Puf, PufKind};
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::rng::stream_from_seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crp {
    pub challenge: Challenge,
    pub response: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpSet {
    pub n: usize,
    pub k: usize,
    pub kind: PufKind,
    pub seed: u64,
    pub pairs: Vec<Crp>,
}

impl CrpSet {
    /// Draws `count` uniform challenges (with replacement) from a stream
    /// seeded by `seed` and records the PUF's responses.
    pub fn generate<P: Puf + ?Sized>(puf: &P, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("CRP count must be >= 1".into()));
        }
        let n = puf.challenge_len();
        let mut rng = stream_from_seed(seed);
        let pairs = (0..count)
            .map(|_| {
                let challenge = Challenge::random(n, &mut rng);
                let response = puf.respond(&challenge)?;
                Ok(Crp {
                    challenge,
                    response,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            k: puf.xor_fan_in(),
            kind: puf.kind(),
            seed,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The first `count` pairs, keeping the header fields.
    pub fn prefix(&self, count: usize) -> CrpSet {
        CrpSet {
            pairs: self.pairs[..count.min(self.pairs.len())].to_vec(),
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> CrpSet {
        CrpSet {
            n: self.n,
            k: self.k,
            kind: self.kind,
            seed: self.seed,
            pairs: Vec::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.pairs.len() * (self.n + 3) + 64);
        let _ = writeln!(
            s,
            "# n={} k={} kind={} seed={}",
            self.n, self.k, self.kind, self.seed
        );
        for p in &self.pairs {
            let _ = writeln!(s, "{},{}", p.challenge, u8::from(p.response));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty CRP file".into(),
        })?;
        let mut set = parse_header(header)?;
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: lineno, msg };
            let (c, r) = line
                .split_once(',')
                .ok_or_else(|| err("expected `<challenge>,<response>`".into()))?;
            let challenge: Challenge = c.parse().map_err(|e: Error| err(e.to_string()))?;
            if challenge.len() != set.n {
                return Err(err(format!(
                    "challenge has {} bits, header says n={}",
                    challenge.len(),
                    set.n
                )));
            }
            let response = match r {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("invalid response `{other}`"))),
            };
            set.pairs.push(Crp {
                challenge,
                response,
            });
        }
        Ok(set)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn parse_header(line: &str) -> Result<CrpSet> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| err("header must start with `#`".into()))?;
    let (mut n, mut k, mut kind, mut seed) = (None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field `{field}`")))?;
        let bad = |_| err(format!("invalid value for `{key}`: `{value}`"));
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(bad)?),
            "k" => k = Some(value.parse::<usize>().map_err(bad)?),
            "kind" => kind = Some(value.parse::<PufKind>().map_err(|e| err(e.to_string()))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(bad)?),
            other => return Err(err(format!("unknown header field `{other}`"))),
        }
    }
    let missing = |name: &str| err(format!("header missing `{name}`"));
    Ok(CrpSet {
        n: n.ok_or_else(|| missing("n"))?,
        k: k.ok_or_else(|| missing("k"))?,
        kind: kind.ok_or_else(|| missing("kind"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        pairs: Vec::new(),
    })
}

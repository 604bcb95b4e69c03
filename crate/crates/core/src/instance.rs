//! Synthetic desk-scale instance family and exact text serialization.
//!
//! Instances follow a one-factor-per-sector covariance model: each asset
//! carries a loading on its own sector factor, so `Sigma = L L' + D` with
//! `L` having one nonzero per row and `D` a positive idiosyncratic diagonal —
//! positive semidefinite by construction. Expected returns share a sector
//! base level plus asset noise. Cubic risk terms couple intra-sector asset
//! pairs to the sector's anchor (the asset with the largest factor loading),
//! with nonnegative exponential coefficients scaled off the quadratic
//! magnitude.
//!
//! Generation is deterministic per (`n`, `k`, `seed`): every random field
//! draws from its own ChaCha stream (see [`crate::rng::stream`]) in a fixed
//! documented order, and serialization uses shortest round-trip decimal so
//! `load(save(x))` reproduces every coefficient bit-exactly.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::rng::{seeded, stream};

/// Smallest supported problem size.
pub const MIN_ASSETS: usize = 10;
/// Sector count once the universe is large enough to fill ten sectors.
pub const NOMINAL_SECTORS: usize = 10;
/// Minimum assets per sector; below `NOMINAL_SECTORS * ASSETS_PER_SECTOR`
/// assets the generator uses fewer sectors so each can still host cubic
/// terms (a triple needs three distinct same-sector assets).
pub const ASSETS_PER_SECTOR: usize = 5;
/// Cubic coefficient strength relative to the quadratic scale.
pub const ALPHA_CUBIC: f64 = 4.0;
/// Triple budget per asset once the construction saturates.
pub const TRIPLES_PER_ASSET: usize = 4;
/// Size from which the triple list is capped at `TRIPLES_PER_ASSET * n`;
/// below it the natural construction count is kept.
pub const TRIPLE_CAP_FROM: usize = 200;

const FORMAT_MAGIC: &str = "cubopt-instance";
const FORMAT_VERSION: &str = "v1";

/// One cubic interaction term `coeff * x_i * x_j * x_anchor` with `i < j`
/// and all three assets in the same sector.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CubicTerm {
    pub i: usize,
    pub j: usize,
    pub anchor: usize,
    pub coeff: f64,
}

impl CubicTerm {
    /// Index triple in canonical `(i, j, anchor)` order.
    pub fn indices(&self) -> (usize, usize, usize) {
        (self.i, self.j, self.anchor)
    }

    /// True when asset `a` participates in this term.
    pub fn touches(&self, a: usize) -> bool {
        self.i == a || self.j == a || self.anchor == a
    }
}

/// Raw field bundle accepted by [`PortfolioInstance::from_parts`].
#[derive(Debug, Clone)]
pub struct InstanceParts {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub n_sectors: usize,
    pub alpha_cubic: f64,
    pub quad_scale: f64,
    /// Row-major `n x n` symmetric covariance.
    pub covariance: Vec<f64>,
    /// Expected returns, length `n`.
    pub returns: Vec<f64>,
    /// Sector index per asset, length `n`, values `< n_sectors`.
    pub sector_of: Vec<usize>,
    /// Own-sector factor loading per asset, length `n`.
    pub loadings: Vec<f64>,
    pub cubic: Vec<CubicTerm>,
}

/// A validated problem instance.
///
/// Fields are private so the structural invariants checked at construction
/// (symmetric covariance, canonical intra-sector triples, nonnegative cubic
/// coefficients) cannot be broken afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInstance {
    n: usize,
    k: usize,
    seed: u64,
    n_sectors: usize,
    alpha_cubic: f64,
    quad_scale: f64,
    covariance: Vec<f64>,
    returns: Vec<f64>,
    sector_of: Vec<usize>,
    loadings: Vec<f64>,
    cubic: Vec<CubicTerm>,
    /// Per-asset indices into `cubic` for the terms touching that asset.
    triples_of: Vec<Vec<u32>>,
}

/// Instance construction, validation, and file errors.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("need at least {min} assets, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("cardinality K={k} must satisfy 1 <= K < n={n}")]
    BadCardinality { k: usize, n: usize },
    #[error("instance file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance file: {0}")]
    Parse(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

impl PortfolioInstance {
    /// Validates raw parts and builds the instance (including the per-asset
    /// triple adjacency used for O(degree) evaluation updates).
    pub fn from_parts(parts: InstanceParts) -> Result<Self, InstanceError> {
        let InstanceParts {
            n,
            k,
            seed,
            n_sectors,
            alpha_cubic,
            quad_scale,
            covariance,
            returns,
            sector_of,
            loadings,
            cubic,
        } = parts;

        if n == 0 {
            return Err(InstanceError::Invalid("zero assets".into()));
        }
        if !(1..n).contains(&k) {
            return Err(InstanceError::BadCardinality { k, n });
        }
        if n_sectors == 0 || n_sectors > n {
            return Err(InstanceError::Invalid(format!(
                "sector count {n_sectors} out of range for n={n}"
            )));
        }
        if covariance.len() != n * n {
            return Err(InstanceError::Invalid(format!(
                "covariance has {} entries, expected {}",
                covariance.len(),
                n * n
            )));
        }
        for (name, v) in [("returns", &returns), ("loadings", &loadings)] {
            if v.len() != n {
                return Err(InstanceError::Invalid(format!(
                    "{name} has length {}, expected {n}",
                    v.len()
                )));
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(InstanceError::Invalid(format!("{name} contains {bad}")));
            }
        }
        if sector_of.len() != n {
            return Err(InstanceError::Invalid(format!(
                "sector vector has length {}, expected {n}",
                sector_of.len()
            )));
        }
        if let Some(&s) = sector_of.iter().find(|&&s| s >= n_sectors) {
            return Err(InstanceError::Invalid(format!(
                "sector id {s} >= sector count {n_sectors}"
            )));
        }
        if !(alpha_cubic.is_finite() && quad_scale.is_finite() && quad_scale >= 0.0) {
            return Err(InstanceError::Invalid(
                "alpha_cubic/quad_scale must be finite, quad_scale nonnegative".into(),
            ));
        }
        if let Some(bad) = covariance.iter().find(|x| !x.is_finite()) {
            return Err(InstanceError::Invalid(format!("covariance contains {bad}")));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if covariance[i * n + j] != covariance[j * n + i] {
                    return Err(InstanceError::Invalid(format!(
                        "covariance not symmetric at ({i},{j}): {} vs {}",
                        covariance[i * n + j],
                        covariance[j * n + i]
                    )));
                }
            }
        }

        let mut seen = BTreeSet::new();
        for (t, term) in cubic.iter().enumerate() {
            let (i, j, a) = term.indices();
            if i >= n || j >= n || a >= n {
                return Err(InstanceError::Invalid(format!(
                    "triple {t} index out of range: ({i},{j},{a}) with n={n}"
                )));
            }
            if i >= j || a == i || a == j {
                return Err(InstanceError::Invalid(format!(
                    "triple {t} not canonical/distinct: ({i},{j},{a})"
                )));
            }
            if sector_of[i] != sector_of[j] || sector_of[i] != sector_of[a] {
                return Err(InstanceError::Invalid(format!(
                    "triple {t} spans sectors: ({i},{j},{a})"
                )));
            }
            if !(term.coeff.is_finite() && term.coeff >= 0.0) {
                return Err(InstanceError::Invalid(format!(
                    "triple {t} coefficient {} must be finite and nonnegative",
                    term.coeff
                )));
            }
            if !seen.insert((i, j, a)) {
                return Err(InstanceError::Invalid(format!(
                    "duplicate triple ({i},{j},{a})"
                )));
            }
        }

        let mut triples_of = vec![Vec::new(); n];
        for (t, term) in cubic.iter().enumerate() {
            triples_of[term.i].push(t as u32);
            triples_of[term.j].push(t as u32);
            triples_of[term.anchor].push(t as u32);
        }

        Ok(Self {
            n,
            k,
            seed,
            n_sectors,
            alpha_cubic,
            quad_scale,
            covariance,
            returns,
            sector_of,
            loadings,
            cubic,
            triples_of,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn alpha_cubic(&self) -> f64 {
        self.alpha_cubic
    }

    /// Mean absolute off-diagonal covariance magnitude used to scale the
    /// cubic coefficients at generation time.
    pub fn quad_scale(&self) -> f64 {
        self.quad_scale
    }

    /// Row-major symmetric covariance, `n*n` entries.
    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }

    #[inline]
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.n + j]
    }

    /// Row `i` of the covariance.
    #[inline]
    pub fn cov_row(&self, i: usize) -> &[f64] {
        &self.covariance[i * self.n..(i + 1) * self.n]
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn sector_of(&self) -> &[usize] {
        &self.sector_of
    }

    pub fn loadings(&self) -> &[f64] {
        &self.loadings
    }

    pub fn cubic(&self) -> &[CubicTerm] {
        &self.cubic
    }

    /// Indices into [`Self::cubic`] of the terms touching asset `a`.
    pub fn triples_of(&self, a: usize) -> &[u32] {
        &self.triples_of[a]
    }

    /// `out = Sigma * x`, accumulated in ascending index order.
    pub fn cov_mul(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n, "cov_mul vector length mismatch");
        assert_eq!(out.len(), self.n, "cov_mul output length mismatch");
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.cov_row(i);
            let mut acc = 0.0;
            for (rv, xv) in row.iter().zip(x) {
                acc += rv * xv;
            }
            *o = acc;
        }
    }

    /// Serializes to the exact text format (see module docs).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{FORMAT_MAGIC} {FORMAT_VERSION}\n"));
        s.push_str(&format!("n {}\n", self.n));
        s.push_str(&format!("k {}\n", self.k));
        s.push_str(&format!("seed {}\n", self.seed));
        s.push_str(&format!("n_sectors {}\n", self.n_sectors));
        s.push_str(&format!("alpha_cubic {}\n", self.alpha_cubic));
        s.push_str(&format!("quad_scale {}\n", self.quad_scale));
        s.push_str("sectors\n");
        push_row(&mut s, self.sector_of.iter());
        s.push_str("loadings\n");
        push_row(&mut s, self.loadings.iter());
        s.push_str("returns\n");
        push_row(&mut s, self.returns.iter());
        s.push_str("covariance\n");
        for i in 0..self.n {
            push_row(&mut s, self.cov_row(i).iter());
        }
        s.push_str(&format!("triples {}\n", self.cubic.len()));
        for t in &self.cubic {
            s.push_str(&format!("{} {} {} {}\n", t.i, t.j, t.anchor, t.coeff));
        }
        s.push_str("end\n");
        s
    }

    /// Writes the text format to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the text format, validating all structural invariants.
    pub fn from_text(text: &str) -> Result<Self, InstanceError> {
        let mut toks = Tokens::new(text);
        toks.expect(FORMAT_MAGIC)?;
        let version: String = toks.next_str()?;
        if version != FORMAT_VERSION {
            return Err(InstanceError::Parse(format!(
                "unsupported format version {version:?}, expected {FORMAT_VERSION:?}"
            )));
        }
        toks.expect("n")?;
        let n: usize = toks.parse()?;
        toks.expect("k")?;
        let k: usize = toks.parse()?;
        toks.expect("seed")?;
        let seed: u64 = toks.parse()?;
        toks.expect("n_sectors")?;
        let n_sectors: usize = toks.parse()?;
        toks.expect("alpha_cubic")?;
        let alpha_cubic: f64 = toks.parse()?;
        toks.expect("quad_scale")?;
        let quad_scale: f64 = toks.parse()?;
        toks.expect("sectors")?;
        let sector_of = toks.parse_vec::<usize>(n, "sectors")?;
        toks.expect("loadings")?;
        let loadings = toks.parse_vec::<f64>(n, "loadings")?;
        toks.expect("returns")?;
        let returns = toks.parse_vec::<f64>(n, "returns")?;
        toks.expect("covariance")?;
        let covariance = toks.parse_vec::<f64>(n * n, "covariance")?;
        toks.expect("triples")?;
        let n_triples: usize = toks.parse()?;
        let mut cubic = Vec::with_capacity(n_triples);
        for _ in 0..n_triples {
            let i: usize = toks.parse()?;
            let j: usize = toks.parse()?;
            let anchor: usize = toks.parse()?;
            let coeff: f64 = toks.parse()?;
            cubic.push(CubicTerm { i, j, anchor, coeff });
        }
        toks.expect("end")?;
        Self::from_parts(InstanceParts {
            n,
            k,
            seed,
            n_sectors,
            alpha_cubic,
            quad_scale,
            covariance,
            returns,
            sector_of,
            loadings,
            cubic,
        })
    }

    /// Reads and parses an instance file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        let text = fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

fn push_row<T: std::fmt::Display>(s: &mut String, row: impl Iterator<Item = T>) {
    let mut first = true;
    for v in row {
        if !first {
            s.push(' ');
        }
        s.push_str(&v.to_string());
        first = false;
    }
    s.push('\n');
}

/// Whitespace token reader with positional error messages.
struct Tokens<'a> {
    iter: std::str::SplitAsciiWhitespace<'a>,
    consumed: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self { iter: text.split_ascii_whitespace(), consumed: 0 }
    }

    fn next_tok(&mut self) -> Result<&'a str, InstanceError> {
        self.consumed += 1;
        self.iter.next().ok_or_else(|| {
            InstanceError::Parse(format!("unexpected end of file at token {}", self.consumed))
        })
    }

    fn next_str(&mut self) -> Result<String, InstanceError> {
        Ok(self.next_tok()?.to_string())
    }

    fn expect(&mut self, kw: &str) -> Result<(), InstanceError> {
        let tok = self.next_tok()?;
        if tok != kw {
            return Err(InstanceError::Parse(format!(
                "expected {kw:?} at token {}, found {tok:?}",
                self.consumed
            )));
        }
        Ok(())
    }

    fn parse<T: FromStr>(&mut self) -> Result<T, InstanceError>
    where
        T::Err: std::fmt::Display,
    {
        let pos = self.consumed + 1;
        let tok = self.next_tok()?;
        tok.parse().map_err(|e| {
            InstanceError::Parse(format!("token {pos} ({tok:?}): {e}"))
        })
    }

    fn parse_vec<T: FromStr>(&mut self, len: usize, what: &str) -> Result<Vec<T>, InstanceError>
    where
        T::Err: std::fmt::Display,
    {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(self.parse().map_err(|e| match e {
                InstanceError::Parse(msg) => {
                    InstanceError::Parse(format!("in {what} block: {msg}"))
                }
                other => other,
            })?);
        }
        Ok(v)
    }
}

/// Number of sectors used for a universe of `n` assets.
pub fn effective_sectors(n: usize) -> usize {
    (n / ASSETS_PER_SECTOR).clamp(1, NOMINAL_SECTORS)
}

/// Generates the seeded synthetic instance for (`n`, `k`, `seed`).
///
/// Draw order (one ChaCha stream per field, fixed for reproducibility):
///
/// 1. `LOADINGS`: per asset a factor loading `U(0.5, 1.5)`, then per asset
///    an idiosyncratic variance `U(0.05, 0.25)`;
/// 2. `RETURNS`: per sector a base return `U(0.05, 0.15)`, then per asset
///    noise `N(0, 0.02)`;
/// 3. `STRUCTURE` (only when capping applies): which intra-sector pairs
///    keep a cubic term;
/// 4. `COEFFICIENTS`: per kept triple, in canonical order, an `Exp(1)` draw
///    scaled by `quad_scale * alpha_cubic`.
///
/// Sectors are assigned round-robin (`i mod n_sectors`) over
/// [`effective_sectors`]`(n)` sectors. Each sector's anchor is its
/// largest-loading asset (ties to the lowest index); every pair of distinct
/// non-anchor same-sector assets proposes one triple `(i, j, anchor)`. For
/// `n >=` [`TRIPLE_CAP_FROM`] the proposal list is subsampled without
/// replacement to exactly [`TRIPLES_PER_ASSET`]` * n` terms; below that the
/// natural construction count is kept.
pub fn generate_instance(n: usize, k: usize, seed: u64) -> Result<PortfolioInstance, InstanceError> {
    if n < MIN_ASSETS {
        return Err(InstanceError::TooSmall { n, min: MIN_ASSETS });
    }
    if k == 0 || k >= n {
        return Err(InstanceError::BadCardinality { k, n });
    }
    let n_sectors = effective_sectors(n);
    let sector_of: Vec<usize> = (0..n).map(|i| i % n_sectors).collect();

    let mut rng_load = seeded(seed, stream::LOADINGS);
    let loadings: Vec<f64> = (0..n).map(|_| rng_load.random_range(0.5..1.5)).collect();
    let idio: Vec<f64> = (0..n).map(|_| rng_load.random_range(0.05..0.25)).collect();

    let mut covariance = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = if sector_of[i] == sector_of[j] {
                loadings[i] * loadings[j]
            } else {
                0.0
            };
            if i == j {
                v += idio[i];
            }
            covariance[i * n + j] = v;
        }
    }

    let mut rng_ret = seeded(seed, stream::RETURNS);
    let base: Vec<f64> = (0..n_sectors).map(|_| rng_ret.random_range(0.05..0.15)).collect();
    let noise = Normal::new(0.0, 0.02).expect("fixed std is valid");
    let returns: Vec<f64> =
        (0..n).map(|i| base[sector_of[i]] + noise.sample(&mut rng_ret)).collect();

    // Anchor per sector: largest loading, ties to the lowest index.
    let mut anchor_of = vec![usize::MAX; n_sectors];
    for i in 0..n {
        let s = sector_of[i];
        if anchor_of[s] == usize::MAX || loadings[i] > loadings[anchor_of[s]] {
            anchor_of[s] = i;
        }
    }

    // Candidate triples: all non-anchor same-sector pairs, interleaved
    // round-robin across sectors so subsampling has a stable base order.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_sectors];
    for i in 0..n {
        if i != anchor_of[sector_of[i]] {
            members[sector_of[i]].push(i);
        }
    }
    let per_sector: Vec<Vec<(usize, usize)>> = members
        .iter()
        .map(|m| {
            let mut pairs = Vec::new();
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a + 1..] {
                    pairs.push((i, j));
                }
            }
            pairs
        })
        .collect();
    let mut candidates = Vec::new();
    let widest = per_sector.iter().map(Vec::len).max().unwrap_or(0);
    for round in 0..widest {
        for (s, pairs) in per_sector.iter().enumerate() {
            if let Some(&(i, j)) = pairs.get(round) {
                candidates.push((i, j, anchor_of[s]));
            }
        }
    }

    let cap = TRIPLES_PER_ASSET * n;
    let chosen: Vec<(usize, usize, usize)> = if n >= TRIPLE_CAP_FROM && candidates.len() > cap {
        let mut rng_struct = seeded(seed, stream::STRUCTURE);
        let picked = rand::seq::index::sample(&mut rng_struct, candidates.len(), cap);
        picked.iter().map(|idx| candidates[idx]).collect()
    } else {
        candidates
    };
    let mut chosen = chosen;
    chosen.sort_unstable();

    let off_diag_abs_sum: f64 = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| covariance[i * n + j].abs())
                .sum::<f64>()
        })
        .sum();
    let quad_scale = if n > 1 { off_diag_abs_sum / (n * (n - 1)) as f64 } else { 0.0 };

    let mut rng_coeff = seeded(seed, stream::COEFFICIENTS);
    let exp = Exp::new(1.0).expect("unit rate is valid");
    let cubic: Vec<CubicTerm> = chosen
        .into_iter()
        .map(|(i, j, anchor)| CubicTerm {
            i,
            j,
            anchor,
            coeff: exp.sample(&mut rng_coeff) * quad_scale * ALPHA_CUBIC,
        })
        .collect();

    PortfolioInstance::from_parts(InstanceParts {
        n,
        k,
        seed,
        n_sectors,
        alpha_cubic: ALPHA_CUBIC,
        quad_scale,
        covariance,
        returns,
        sector_of,
        loadings,
        cubic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(30, 6, 42).expect("generate");
        let b = generate_instance(30, 6, 42).expect("generate");
        assert_eq!(a.to_text(), b.to_text(), "same inputs must serialize identically");
        let c = generate_instance(30, 6, 43).expect("generate");
        assert_ne!(a.to_text(), c.to_text(), "different seeds must differ");
    }

    #[test]
    fn small_instances_have_natural_triple_counts() {
        for (n, expect_sectors) in [(20, 4), (25, 5), (30, 6), (50, 10)] {
            let inst = generate_instance(n, n / 5, 42).expect("generate");
            assert_eq!(inst.n_sectors(), expect_sectors);
            // Independent count: every non-anchor same-sector pair carries a term.
            let mut sizes = vec![0usize; expect_sectors];
            for &s in inst.sector_of() {
                sizes[s] += 1;
            }
            let natural: usize = sizes.iter().map(|m| (m - 1) * (m - 2) / 2).sum();
            assert_eq!(inst.cubic().len(), natural);
            assert!(n >= 50 || (10..100).contains(&inst.cubic().len()));
        }
    }

    #[test]
    fn desk_scale_triple_count_is_capped() {
        let inst = generate_instance(200, 40, 42).expect("generate");
        assert_eq!(inst.cubic().len(), TRIPLES_PER_ASSET * 200);
        assert_eq!(inst.n_sectors(), NOMINAL_SECTORS);
    }

    #[test]
    fn anchors_maximize_loading_within_sector() {
        let inst = generate_instance(40, 8, 7).expect("generate");
        for term in inst.cubic() {
            let s = inst.sector_of()[term.anchor];
            assert_eq!(inst.sector_of()[term.i], s);
            assert_eq!(inst.sector_of()[term.j], s);
            assert!(term.i < term.j);
            assert!(term.coeff >= 0.0);
            for a in 0..inst.n() {
                if inst.sector_of()[a] == s {
                    let la = inst.loadings()[a];
                    let lk = inst.loadings()[term.anchor];
                    assert!(
                        la < lk || (la == lk && term.anchor <= a),
                        "anchor must carry the sector-max loading (ties to lowest index)"
                    );
                }
            }
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let inst = generate_instance(25, 5, 1042).expect("generate");
        let text = inst.to_text();
        let back = PortfolioInstance::from_text(&text).expect("parse");
        assert_eq!(inst, back);
        assert_eq!(text, back.to_text(), "serialize-parse-serialize must be a fixed point");
    }

    #[test]
    fn hand_written_file_parses() {
        let text = "cubopt-instance v1\n\
                    n 3\nk 1\nseed 7\nn_sectors 1\nalpha_cubic 4\nquad_scale 0.1\n\
                    sectors\n0 0 0\n\
                    loadings\n1 1 1\n\
                    returns\n0.1 0.1 0.1\n\
                    covariance\n1 0 0\n0 1 0\n0 0 1\n\
                    triples 1\n0 1 2 1\n\
                    end\n";
        let inst = PortfolioInstance::from_text(text).expect("parse hand-written file");
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.cubic().len(), 1);
        assert_eq!(inst.cubic()[0].coeff, 1.0);
    }

    #[test]
    fn rejects_malformed_files() {
        let bad_magic = "not-an-instance v1 n 3";
        assert!(matches!(
            PortfolioInstance::from_text(bad_magic),
            Err(InstanceError::Parse(_))
        ));

        let base = "cubopt-instance v1\nn 3\nk 1\nseed 7\nn_sectors 1\nalpha_cubic 4\nquad_scale 0.1\n\
                    sectors\n0 0 0\nloadings\n1 1 1\nreturns\n0.1 0.1 0.1\ncovariance\n";
        let oob_triple =
            format!("{base}1 0 0\n0 1 0\n0 0 1\ntriples 1\n0 1 9 1\nend\n");
        match PortfolioInstance::from_text(&oob_triple) {
            Err(InstanceError::Invalid(msg)) => assert!(msg.contains("out of range")),
            other => panic!("expected index-range error, got {other:?}"),
        }

        let asymmetric =
            format!("{base}1 0.5 0\n0 1 0\n0 0 1\ntriples 0\nend\n");
        match PortfolioInstance::from_text(&asymmetric) {
            Err(InstanceError::Invalid(msg)) => assert!(msg.contains("symmetric")),
            other => panic!("expected symmetry error, got {other:?}"),
        }

        let truncated = "cubopt-instance v1\nn 3\nk 1\n";
        assert!(matches!(
            PortfolioInstance::from_text(truncated),
            Err(InstanceError::Parse(_))
        ));
    }

    #[test]
    fn rejects_bad_generation_parameters() {
        assert!(matches!(
            generate_instance(5, 2, 42),
            Err(InstanceError::TooSmall { .. })
        ));
        assert!(matches!(
            generate_instance(20, 20, 42),
            Err(InstanceError::BadCardinality { .. })
        ));
        assert!(matches!(
            generate_instance(20, 0, 42),
            Err(InstanceError::BadCardinality { .. })
        ));
    }
}

//! Seeded data-generating processes and their empirical statistics:
//! i.i.d. categorical draws, mixtures of sources, Gaussian running means
//! and finite-state Markov chains.
//!
//! One seedable 64-bit generator drives everything; each path owns a stream
//! derived by mixing `(seed, generator id, path index)`, so batches are
//! reproducible bit-for-bit regardless of scheduling.

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::spaces::{ProbMatrix, ProbVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;
use std::path::Path;

/// Generator identifiers entering the per-path stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorId {
    IidCategorical = 1,
    MixtureSources = 2,
    GaussianIid = 3,
    MarkovChain = 4,
}

/// splitmix64 finalizer; decorrelates consecutive stream indices.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-path RNG stream for `(seed, generator, path index)`.
pub fn path_rng(seed: u64, generator: GeneratorId, path: u64) -> ChaCha12Rng {
    let mixed = mix64(mix64(seed ^ mix64(generator as u64)) ^ path);
    ChaCha12Rng::seed_from_u64(mixed)
}

/// K paths of n state indices (1-based states in `{1, ..., d}`).
#[derive(Debug, Clone, PartialEq)]
pub struct StatePathBatch {
    pub paths: Vec<Vec<u16>>,
    pub d: usize,
    pub seed: u64,
    pub generator: GeneratorId,
}

/// K paths of running empirical means in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPathBatch {
    pub paths: Vec<Vec<Vec<f64>>>,
    pub dim: usize,
    pub seed: u64,
}

/// Per-path source label for mixture experiments, drawn once before the
/// path.
pub type SourceAssignment = Vec<u8>;

fn draw_categorical<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> u16 {
    let u: f64 = rng.gen();
    match cdf.iter().position(|c| u < *c) {
        Some(i) => (i + 1) as u16,
        None => cdf.len() as u16,
    }
}

fn cdf_of(theta: &ProbVector) -> Vec<f64> {
    let mut acc = 0.0;
    theta
        .entries()
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect()
}

/// K independent i.i.d. paths with `P(state = i) = theta_i`.
pub fn gen_iid_categorical(theta: &ProbVector, n: usize, k: usize, seed: u64) -> StatePathBatch {
    let cdf = cdf_of(theta);
    let paths = (0..k)
        .map(|p| {
            let mut rng = path_rng(seed, GeneratorId::IidCategorical, p as u64);
            (0..n).map(|_| draw_categorical(&cdf, &mut rng)).collect()
        })
        .collect();
    StatePathBatch {
        paths,
        d: theta.dim(),
        seed,
        generator: GeneratorId::IidCategorical,
    }
}

/// Mixture of two sources: each path first draws its generating parameter
/// (`theta1` with probability `p1`), then runs i.i.d. under it.
pub fn gen_mixture_sources(
    theta1: &ProbVector,
    theta2: &ProbVector,
    p1: f64,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<(StatePathBatch, SourceAssignment)> {
    if theta1.dim() != theta2.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta1.dim(),
            got: theta2.dim(),
        });
    }
    if !(0.0..1.0).contains(&p1) && p1 != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "mixture probability must lie in (0, 1], got {p1}"
        )));
    }
    let (cdf1, cdf2) = (cdf_of(theta1), cdf_of(theta2));
    let mut labels = Vec::with_capacity(k);
    let paths = (0..k)
        .map(|p| {
            let mut rng = path_rng(seed, GeneratorId::MixtureSources, p as u64);
            let pick: f64 = rng.gen();
            let (label, cdf) = if pick < p1 { (1u8, &cdf1) } else { (2u8, &cdf2) };
            labels.push(label);
            (0..n).map(|_| draw_categorical(cdf, &mut rng)).collect()
        })
        .collect();
    Ok((
        StatePathBatch {
            paths,
            d: theta1.dim(),
            seed,
            generator: GeneratorId::MixtureSources,
        },
        labels,
    ))
}

/// K paths of running empirical means of `N(theta, Sigma)` draws. Sampling
/// goes through the Cholesky factor of `Sigma` applied to standard normals.
pub fn gen_gaussian_iid(
    theta: &[f64],
    sigma: &SpdMatrix,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<MeanPathBatch> {
    let d = sigma.dim();
    if theta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    let paths = (0..k)
        .map(|p| {
            let mut rng = path_rng(seed, GeneratorId::GaussianIid, p as u64);
            let mut running = vec![0.0; d];
            let mut out = Vec::with_capacity(n);
            for step in 1..=n {
                let w: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let noise = sigma.chol_mul_vec(&w);
                for i in 0..d {
                    let xi = theta[i] + noise[i];
                    running[i] += (xi - running[i]) / step as f64;
                }
                out.push(running.clone());
            }
            out
        })
        .collect();
    Ok(MeanPathBatch {
        paths,
        dim: d,
        seed,
    })
}

/// K Markov paths from the transition kernel recovered from the stationary
/// pair measure, with deterministic initial state 1.
pub fn gen_markov_chain(
    theta: &ProbMatrix,
    n: usize,
    k: usize,
    seed: u64,
) -> Result<StatePathBatch> {
    let kernel = theta.transition_kernel()?;
    let cdfs: Vec<Vec<f64>> = kernel
        .iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|t| {
                    acc += t;
                    acc
                })
                .collect()
        })
        .collect();
    let paths = (0..k)
        .map(|p| {
            let mut rng = path_rng(seed, GeneratorId::MarkovChain, p as u64);
            let mut state: usize = 1;
            (0..n)
                .map(|_| {
                    let next = draw_categorical(&cdfs[state - 1], &mut rng);
                    state = next as usize;
                    next
                })
                .collect()
        })
        .collect();
    Ok(StatePathBatch {
        paths,
        d: theta.dim(),
        seed,
        generator: GeneratorId::MarkovChain,
    })
}

/// Empirical measure of a state path: normalized visit counts.
pub fn empirical_measure(path: &[u16], d: usize) -> Result<ProbVector> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let mut counts = vec![0u64; d];
    for s in path {
        let idx = *s as usize;
        if idx == 0 || idx > d {
            return Err(Error::InvalidArgument(format!("state {s} outside 1..={d}")));
        }
        counts[idx - 1] += 1;
    }
    let n = path.len() as f64;
    ProbVector::new(counts.iter().map(|c| *c as f64 / n).collect())
}

/// Mean of vector-valued observations.
pub fn empirical_mean(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows.first().ok_or_else(|| Error::InvalidArgument("empty path".into()))?;
    let d = first.len();
    let mut acc = vec![0.0; d];
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for i in 0..d {
            acc[i] += row[i];
        }
    }
    let n = rows.len() as f64;
    for a in &mut acc {
        *a /= n;
    }
    Ok(acc)
}

/// Pair empirical measure of a Markov path: normalized transition counts
/// over `(xi_{k-1}, xi_k)` for `k = 1..n`, including the deterministic
/// initial state `xi_0 = 1`.
pub fn pair_empirical_measure(path: &[u16], d: usize) -> Result<ProbMatrix> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let mut counts = vec![0u64; d * d];
    let mut prev: usize = 1;
    for s in path {
        let idx = *s as usize;
        if idx == 0 || idx > d {
            return Err(Error::InvalidArgument(format!("state {s} outside 1..={d}")));
        }
        counts[(prev - 1) * d + (idx - 1)] += 1;
        prev = idx;
    }
    let n = path.len() as f64;
    ProbMatrix::new(d, counts.iter().map(|c| *c as f64 / n).collect())
}

impl StatePathBatch {
    /// Writes `path,step,state` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display(), e))?;
        writeln!(f, "path,step,state").map_err(|e| Error::io(path.display(), e))?;
        for (p, states) in self.paths.iter().enumerate() {
            for (s, st) in states.iter().enumerate() {
                writeln!(f, "{p},{s},{st}").map_err(|e| Error::io(path.display(), e))?;
            }
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, d: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::Config(format!("cannot open {path:?}: {e}")))?;
        let mut paths: Vec<Vec<u16>> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InputParse {
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            let field = |j: usize| -> Result<u64> {
                rec.get(j)
                    .ok_or_else(|| Error::InputParse {
                        line: i as u64 + 2,
                        message: format!("missing column {j}"),
                    })?
                    .trim()
                    .parse()
                    .map_err(|e: std::num::ParseIntError| Error::InputParse {
                        line: i as u64 + 2,
                        message: e.to_string(),
                    })
            };
            let p = field(0)? as usize;
            let state = field(2)? as u16;
            while paths.len() <= p {
                paths.push(Vec::new());
            }
            paths[p].push(state);
        }
        Ok(Self {
            paths,
            d,
            seed: 0,
            generator: GeneratorId::IidCategorical,
        })
    }
}

impl MeanPathBatch {
    /// Writes `path,step,c0,...,c{d-1}` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path.display(), e))?;
        let header: Vec<String> = (0..self.dim).map(|i| format!("c{i}")).collect();
        writeln!(f, "path,step,{}", header.join(",")).map_err(|e| Error::io(path.display(), e))?;
        for (p, steps) in self.paths.iter().enumerate() {
            for (s, v) in steps.iter().enumerate() {
                let vals: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
                writeln!(f, "{p},{s},{}", vals.join(",")).map_err(|e| Error::io(path.display(), e))?;
            }
        }
        Ok(())
    }
}

//! RVQ codebooks on Grassmann manifolds, nearest-codeword quantization,
//! the bit-scaling law, and the composite-manifold baseline quantizer.

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::subspace::{haar_truncated_unitary, GrassmannPoint};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Desk-scale memory guard: codebooks above this size must be replaced by
/// the perturbation surrogate.
pub const MAX_CODEBOOK_BITS: u32 = 22;

/// An indexed list of 2^bits points on G_{n,p}, drawn i.i.d. from the Haar
/// distribution and reproducible from the seed.
#[derive(Debug, Clone)]
pub struct Codebook {
    n: usize,
    p: usize,
    bits: u32,
    seed: u64,
    entries: Vec<GrassmannPoint>,
}

/// Outcome of a nearest-codeword search.
#[derive(Debug, Clone)]
pub struct QuantizationResult {
    pub index: usize,
    pub point: GrassmannPoint,
    pub distance: f64,
}

impl Codebook {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, k: usize) -> &GrassmannPoint {
        &self.entries[k]
    }

    pub fn entries(&self) -> &[GrassmannPoint] {
        &self.entries
    }

    /// Nearest codeword w.r.t. the chordal distance; ties broken by the
    /// lowest index. Exhaustive scan - correctness over speed at desk
    /// scale.
    pub fn quantize(&self, f: &GrassmannPoint) -> Result<QuantizationResult> {
        if f.ambient_dim() != self.n || f.subspace_dim() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "query is ({}, {}) but codebook lives on G_{{{}, {}}}",
                f.ambient_dim(),
                f.subspace_dim(),
                self.n,
                self.p
            )));
        }
        // Minimizing d_c^2 = p - ||F^H S||_F^2 means maximizing the
        // cross-Gram energy; strict improvement keeps the lowest index.
        let mut best_index = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, s) in self.entries.iter().enumerate() {
            let gram = f.basis().adjoint() * s.basis();
            let score = gram.norm_squared();
            if score > best_score {
                best_score = score;
                best_index = k;
            }
        }
        let distance = (self.p as f64 - best_score).max(0.0).sqrt();
        Ok(QuantizationResult {
            index: best_index,
            point: self.entries[best_index].clone(),
            distance,
        })
    }
}

/// Build an RVQ codebook of 2^bits Haar points on G_{n,p}.
pub fn build_rvq_codebook(n: usize, p: usize, bits: u32, seed: u64) -> Result<Codebook> {
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::ResourceGuard {
            bits,
            max: MAX_CODEBOOK_BITS,
        });
    }
    if p > n || p == 0 {
        return Err(Error::DimensionMismatch(format!(
            "codebook requires 1 <= p <= n, got n={n}, p={p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..1usize << bits)
        .map(|_| haar_truncated_unitary(n, p, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook {
        n,
        p,
        bits,
        seed,
        entries,
    })
}

/// Real dimension of the complex Grassmann manifold G_{n,p}: 2p(n-p).
pub fn grassmann_real_dimension(n: usize, p: usize) -> u32 {
    debug_assert!(p <= n);
    (2 * p * (n - p)) as u32
}

/// Codebook size that keeps quantization leakage bounded as power grows:
/// ceil((G/2) * log2(P)) bits, floored at zero.
pub fn bit_scaling(power: f64, manifold_dim: u32) -> Result<u32> {
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "bit scaling requires positive power, got {power}"
        )));
    }
    let raw = (manifold_dim as f64 / 2.0) * power.log2();
    // Guard against 10.000000000000002-style rounding before the ceil.
    let bits = (raw - 1e-9).ceil();
    Ok(if bits <= 0.0 { 0 } else { bits as u32 })
}

/// Column-major vectorization of a matrix.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_iterator(m.nrows() * m.ncols(), m.iter().copied())
}

/// Inverse of `vectorize`.
pub fn devectorize(v: &CVec, rows: usize, cols: usize) -> CMat {
    debug_assert_eq!(v.len(), rows * cols);
    CMat::from_iterator(rows, cols, v.iter().copied())
}

/// Quantize a precoder as a single line in C^{Md}: vectorize column-major,
/// normalize, pick the nearest codeword on G_{Md,1}, and reshape back.
/// The output has unit Frobenius norm; downstream consumers
/// re-orthonormalize.
pub fn quantize_precoder_vectorized(v: &CMat, cb: &Codebook) -> Result<CMat> {
    let (rows, cols) = (v.nrows(), v.ncols());
    if cb.p() != 1 || cb.n() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "precoder is {} x {} but codebook lives on G_{{{}, {}}}",
            rows,
            cols,
            cb.n(),
            cb.p()
        )));
    }
    let mut vec = vectorize(v);
    let norm = vec.norm();
    if norm < f64::MIN_POSITIVE {
        return Err(Error::NumericalFailure("zero precoder".into()));
    }
    vec /= Complex64::new(norm, 0.0);
    let line = GrassmannPoint::new(CMat::from_column_slice(rows * cols, 1, vec.as_slice()))?;
    let q = cb.quantize(&line)?;
    Ok(devectorize(&q.point.basis().column(0).into_owned(), rows, cols))
}

/// Joint codebook on a product of unit-sphere manifolds: 2^bits tuples of
/// independent Haar unit vectors in C^vec_len, one per factor.
#[derive(Debug, Clone)]
pub struct CompositeCodebook {
    vec_len: usize,
    factors: usize,
    bits: u32,
    seed: u64,
    /// entries[k] holds the `factors` unit vectors of tuple k.
    entries: Vec<Vec<CVec>>,
}

impl CompositeCodebook {
    pub fn vec_len(&self) -> usize {
        self.vec_len
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, k: usize) -> &[CVec] {
        &self.entries[k]
    }
}

pub fn build_composite_codebook(
    vec_len: usize,
    factors: usize,
    bits: u32,
    seed: u64,
) -> Result<CompositeCodebook> {
    if bits > MAX_CODEBOOK_BITS {
        return Err(Error::ResourceGuard {
            bits,
            max: MAX_CODEBOOK_BITS,
        });
    }
    if vec_len == 0 || factors == 0 {
        return Err(Error::DimensionMismatch(
            "composite codebook needs positive vector length and factor count".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..1usize << bits)
        .map(|_| {
            (0..factors)
                .map(|_| {
                    haar_truncated_unitary(vec_len, 1, &mut rng)
                        .map(|g| g.basis().column(0).into_owned())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompositeCodebook {
        vec_len,
        factors,
        bits,
        seed,
        entries,
    })
}

/// Baseline channel quantization: each cross channel is vectorized
/// column-major and normalized to a unit-norm line; the joint codeword
/// minimizing the sum of squared chordal distances over the product
/// manifold is selected. Returns the reconstructed unit-norm channels of
/// the winning tuple.
pub fn nc_cgq_quantize(channels: &[&CMat], cb: &CompositeCodebook) -> Result<Vec<CMat>> {
    if channels.len() != cb.factors {
        return Err(Error::DimensionMismatch(format!(
            "expected {} channels, got {}",
            cb.factors,
            channels.len()
        )));
    }
    let (rows, cols) = (channels[0].nrows(), channels[0].ncols());
    if rows * cols != cb.vec_len || channels.iter().any(|h| h.nrows() != rows || h.ncols() != cols)
    {
        return Err(Error::DimensionMismatch(
            "channel shapes inconsistent with the composite codebook".into(),
        ));
    }
    let queries: Vec<CVec> = channels
        .iter()
        .map(|h| {
            let mut v = vectorize(h);
            let norm = v.norm();
            if norm < f64::MIN_POSITIVE {
                return Err(Error::NumericalFailure("zero channel".into()));
            }
            v /= Complex64::new(norm, 0.0);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    // Sum of squared chordal distances on G_{nm,1} factors is
    // factors - sum |<e_f, q_f>|^2; maximize the correlation sum.
    let mut best_index = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, tuple) in cb.entries.iter().enumerate() {
        let score: f64 = tuple
            .iter()
            .zip(&queries)
            .map(|(e, q)| e.dotc(q).norm_sqr())
            .sum();
        if score > best_score {
            best_score = score;
            best_index = k;
        }
    }
    Ok(cb.entries[best_index]
        .iter()
        .map(|e| devectorize(e, rows, cols))
        .collect())
}

// --- persistence: JSON dump keyed by (n, p, bits, seed) ---

#[derive(Serialize, Deserialize)]
struct CodebookDump {
    n: usize,
    p: usize,
    bits: u32,
    seed: u64,
    /// Column-major [re, im] pairs, one inner vector per entry.
    entries: Vec<Vec<[f64; 2]>>,
}

impl Codebook {
    pub fn to_json(&self) -> Result<String> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.basis().iter().map(|z| [z.re, z.im]).collect())
            .collect();
        Ok(serde_json::to_string(&CodebookDump {
            n: self.n,
            p: self.p,
            bits: self.bits,
            seed: self.seed,
            entries,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: CodebookDump = serde_json::from_str(text)?;
        if dump.entries.len() != 1usize << dump.bits {
            return Err(Error::DimensionMismatch(format!(
                "codebook dump holds {} entries, expected {}",
                dump.entries.len(),
                1usize << dump.bits
            )));
        }
        let entries = dump
            .entries
            .iter()
            .map(|flat| {
                if flat.len() != dump.n * dump.p {
                    return Err(Error::DimensionMismatch("bad codebook entry shape".into()));
                }
                GrassmannPoint::new(CMat::from_iterator(
                    dump.n,
                    dump.p,
                    flat.iter().map(|z| Complex64::new(z[0], z[1])),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Codebook {
            n: dump.n,
            p: dump.p,
            bits: dump.bits,
            seed: dump.seed,
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::chordal_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_bits_single_entry() {
        let cb = build_rvq_codebook(4, 2, 0, 1).unwrap();
        assert_eq!(cb.len(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = haar_truncated_unitary(4, 2, &mut rng).unwrap();
        let q = cb.quantize(&f).unwrap();
        assert_eq!(q.index, 0);
    }

    #[test]
    fn paper_scale_codebook_shape() {
        let cb = build_rvq_codebook(6, 5, 10, 7).unwrap();
        assert_eq!(cb.len(), 1024);
        assert_eq!(cb.entry(0).ambient_dim(), 6);
        assert_eq!(cb.entry(0).subspace_dim(), 5);
    }

    #[test]
    fn entries_pairwise_distinct() {
        let cb = build_rvq_codebook(4, 2, 5, 3).unwrap();
        let mut min = f64::INFINITY;
        for a in 0..cb.len() {
            for b in (a + 1)..cb.len() {
                min = min.min(chordal_distance(cb.entry(a), cb.entry(b)).unwrap());
            }
        }
        assert!(min > 0.0, "min pairwise distance {min}");
    }

    #[test]
    fn reproducible_from_seed() {
        let a = build_rvq_codebook(5, 2, 6, 99).unwrap();
        let b = build_rvq_codebook(5, 2, 6, 99).unwrap();
        for k in 0..a.len() {
            assert_eq!(a.entry(k).basis(), b.entry(k).basis());
        }
    }

    #[test]
    fn resource_guard_trips() {
        assert!(matches!(
            build_rvq_codebook(6, 5, 23, 0),
            Err(Error::ResourceGuard { bits: 23, max: 22 })
        ));
    }

    #[test]
    fn quantizing_a_member_returns_it() {
        let cb = build_rvq_codebook(5, 2, 6, 11).unwrap();
        let q = cb.quantize(cb.entry(17)).unwrap();
        assert_eq!(q.index, 17);
        assert!(q.distance < 1e-7);
    }

    #[test]
    fn quantize_dimension_mismatch() {
        let cb = build_rvq_codebook(5, 2, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = haar_truncated_unitary(6, 2, &mut rng).unwrap();
        assert!(cb.quantize(&f).is_err());
    }

    #[test]
    fn quantize_matches_exhaustive_rescan() {
        // Independent re-implementation of the scan using the
        // projector-difference distance.
        let cb = build_rvq_codebook(6, 5, 7, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let f = haar_truncated_unitary(6, 5, &mut rng).unwrap();
            let q = cb.quantize(&f).unwrap();
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for k in 0..cb.len() {
                let d = ((f.projector() - cb.entry(k).projector()).norm_squared() / 2.0).sqrt();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            assert_eq!(q.index, best);
            assert!((q.distance - best_d).abs() < 1e-9);
        }
    }

    #[test]
    fn quantize_is_the_argmin() {
        let cb = build_rvq_codebook(4, 2, 6, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let f = haar_truncated_unitary(4, 2, &mut rng).unwrap();
            let q = cb.quantize(&f).unwrap();
            for k in 0..cb.len() {
                assert!(q.distance <= chordal_distance(&f, cb.entry(k)).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn real_dimension_formula() {
        assert_eq!(grassmann_real_dimension(6, 5), 10);
        assert_eq!(grassmann_real_dimension(5, 2), 12);
        assert_eq!(grassmann_real_dimension(4, 4), 0);
        assert_eq!(grassmann_real_dimension(10, 1), 18);
    }

    #[test]
    fn bit_scaling_examples() {
        // P = 2^A with G = 10 gives 5A bits.
        for a in 1..8 {
            assert_eq!(bit_scaling((1u64 << a) as f64, 10).unwrap(), 5 * a);
        }
        assert_eq!(bit_scaling(1.0, 10).unwrap(), 0);
        assert_eq!(bit_scaling(4.0, 12).unwrap(), 12);
        assert_eq!(bit_scaling(0.25, 10).unwrap(), 0);
        assert!(bit_scaling(0.0, 10).is_err());
    }

    #[test]
    fn bit_scaling_monotone() {
        let mut prev = 0;
        for db in 0..40 {
            let p = 10f64.powf(db as f64 / 10.0);
            let b = bit_scaling(p, 10).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        assert!(bit_scaling(100.0, 12).unwrap() >= bit_scaling(100.0, 10).unwrap());
    }

    #[test]
    fn vectorize_roundtrip_column_major() {
        let m = CMat::from_fn(3, 2, |i, j| Complex64::new(i as f64, j as f64));
        let v = vectorize(&m);
        assert_eq!(v[1], Complex64::new(1.0, 0.0)); // column-major order
        assert_eq!(devectorize(&v, 3, 2), m);
    }

    #[test]
    fn precoder_vectorized_recovers_codeword() {
        let cb = build_rvq_codebook(10, 1, 5, 13).unwrap();
        // Build a precoder proportional to codeword 9.
        let w = devectorize(&cb.entry(9).basis().column(0).into_owned(), 5, 2);
        let scaled = w.scale(3.0);
        let got = quantize_precoder_vectorized(&scaled, &cb).unwrap();
        assert!((got.norm() - 1.0).abs() < 1e-10);
        // Same line up to a global phase.
        let corr = vectorize(&got).dotc(&vectorize(&w)).norm();
        assert!((corr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn precoder_vectorized_nearest_line_oracle() {
        let cb = build_rvq_codebook(10, 1, 6, 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v = haar_truncated_unitary(5, 2, &mut rng).unwrap();
            let got = quantize_precoder_vectorized(v.basis(), &cb).unwrap();
            assert!((got.norm() - 1.0).abs() < 1e-10);
            let q = vectorize(v.basis()).scale(1.0 / (2.0f64).sqrt());
            // Exhaustive nearest-line search on correlation.
            let mut best = 0;
            let mut best_c = f64::NEG_INFINITY;
            for k in 0..cb.len() {
                let c = cb.entry(k).basis().column(0).dotc(&q).norm_sqr();
                if c > best_c {
                    best_c = c;
                    best = k;
                }
            }
            let expected = devectorize(&cb.entry(best).basis().column(0).into_owned(), 5, 2);
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn composite_quantizer_recovers_member_tuple() {
        let cb = build_composite_codebook(6, 2, 4, 15).unwrap();
        let tuple = cb.entry(5);
        let h0 = devectorize(&tuple[0], 2, 3);
        let h1 = devectorize(&tuple[1], 2, 3);
        let recon = nc_cgq_quantize(&[&h0.scale(2.5), &h1.scale(0.3)], &cb).unwrap();
        assert!((&recon[0] - &h0).norm() < 1e-12);
        assert!((&recon[1] - &h1).norm() < 1e-12);
        for r in &recon {
            assert!((r.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn composite_error_shrinks_with_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let cb5 = build_composite_codebook(6, 2, 5, 17).unwrap();
        let cb10 = build_composite_codebook(6, 2, 10, 18).unwrap();
        let mut err5 = 0.0;
        let mut err10 = 0.0;
        let trials = 60;
        for _ in 0..trials {
            let h0 = crate::linalg::complex_gaussian_matrix(&mut rng, 2, 3);
            let h1 = crate::linalg::complex_gaussian_matrix(&mut rng, 2, 3);
            for (cb, err) in [(&cb5, &mut err5), (&cb10, &mut err10)] {
                let recon = nc_cgq_quantize(&[&h0, &h1], cb).unwrap();
                for (h, r) in [(&h0, &recon[0]), (&h1, &recon[1])] {
                    let q = vectorize(h).scale(1.0 / h.norm());
                    let corr = vectorize(r).dotc(&q).norm_sqr();
                    *err += 1.0 - corr;
                }
            }
        }
        assert!(
            err10 < err5,
            "mean error should shrink with bits: {err5} vs {err10}"
        );
    }

    #[test]
    fn codebook_json_roundtrip() {
        let cb = build_rvq_codebook(4, 2, 3, 77).unwrap();
        let text = cb.to_json().unwrap();
        let back = Codebook::from_json(&text).unwrap();
        assert_eq!(back.n(), 4);
        assert_eq!(back.bits(), 3);
        assert_eq!(back.seed(), 77);
        for k in 0..cb.len() {
            assert_eq!(cb.entry(k).basis(), back.entry(k).basis());
        }
    }
}

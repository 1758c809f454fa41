//! Ring-GSW ciphertexts over one or more keys.
//!
//! A GSW ciphertext over `K` keys is a `2Kw x 2K` matrix whose rows are RLWE
//! vectors. Row `(k, m, d)` (index `k*2w + 2m + d`) encrypts `mu * 2^m * s_k[d]`
//! against the concatenated key `(s_1, ..., s_K)`, which is the row
//! `mu * G[(k, m, d)]` of the block-diagonal gadget matrix.

use rand::Rng;

use crate::bgv::{PublicKey, SecretKey};
use crate::error::{Error, Result};
use crate::noise::NoiseEstimate;
use crate::params::RingParams;
use crate::ring::{decompose_evaluated, sample_binary, Evaluation, RingContext, RingElement};
use crate::KeyId;

/// The gadget `(I_2, 2 I_2, ..., 2^{w-1} I_2)^T`, repeated block-diagonally
/// for `blocks` keys. Never materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GadgetMatrix {
    width: usize,
    blocks: usize,
}

impl GadgetMatrix {
    pub fn new(width: usize, blocks: usize) -> Self {
        Self { width, blocks }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        2 * self.blocks * self.width
    }

    pub fn cols(&self) -> usize {
        2 * self.blocks
    }

    pub fn row_index(&self, block: usize, power: usize, comp: usize) -> usize {
        block * 2 * self.width + 2 * power + comp
    }

    /// `(column, power)` such that row `row` is `2^power` times a unit vector.
    pub fn entry(&self, row: usize) -> (usize, usize) {
        let block = row / (2 * self.width);
        let within = row % (2 * self.width);
        (2 * block + within % 2, within / 2)
    }

    /// Bit decomposition of a `2K`-vector into `2Kw` binary elements laid
    /// out to match the gadget rows.
    pub fn decompose(&self, v: &[RingElement]) -> Result<Vec<RingElement>> {
        self.check_len(v.len(), self.cols())?;
        let mut out = vec![None; self.rows()];
        for (col, x) in v.iter().enumerate() {
            for (power, bits) in x.bit_decomp().into_iter().enumerate() {
                out[self.row_index(col / 2, power, col % 2)] = Some(bits);
            }
        }
        Ok(out.into_iter().map(|x| x.expect("every row filled")).collect())
    }

    /// `bits * G`.
    pub fn recompose(&self, bits: &[RingElement]) -> Result<Vec<RingElement>> {
        self.check_len(bits.len(), self.rows())?;
        let ctx = bits[0].context();
        let mut out = vec![RingElement::zero(ctx); self.cols()];
        for (row, b) in bits.iter().enumerate() {
            let (col, power) = self.entry(row);
            out[col].add_assign(&b.scalar_mul(1u64 << power))?;
        }
        Ok(out)
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got != expected {
            return Err(Error::ShapeMismatch(format!(
                "gadget expects {expected} entries, got {got}"
            )));
        }
        Ok(())
    }
}

/// Which public rows a GSW encryption is built from: the encryption rows
/// under `s_l`, or the switching rows under `s_{l-1}` (both modulo `q_l`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSet {
    Encryption,
    Switching,
}

impl RowSet {
    fn key_level(self, level: usize) -> Result<usize> {
        match self {
            RowSet::Encryption => Ok(level),
            RowSet::Switching => level.checked_sub(1).ok_or(Error::LevelExhausted(0)),
        }
    }

    fn rows(self, pk: &PublicKey, level: usize) -> Result<&[RingElement]> {
        let rows = pk.level(level);
        match self {
            RowSet::Encryption => Ok(&rows.b),
            RowSet::Switching => rows
                .switch
                .as_deref()
                .ok_or_else(|| Error::MissingMaterial(format!("switching rows at level {level}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgswCiphertext {
    rows: Vec<Vec<RingElement>>,
    keyset: Vec<KeyId>,
    key_level: usize,
    noise_variance: f64,
    correction_variance: f64,
    message_bound: f64,
}

impl RgswCiphertext {
    /// `noise_variance` bounds the phase noise of any single row;
    /// `correction_variance` is the noise variance of the randomness
    /// encryption behind the correction blocks of an extended ciphertext
    /// (zero otherwise).
    pub fn from_parts(
        rows: Vec<Vec<RingElement>>,
        keyset: Vec<KeyId>,
        key_level: usize,
        noise_variance: f64,
        correction_variance: f64,
        message_bound: f64,
    ) -> Result<Self> {
        let first = rows
            .first()
            .and_then(|r| r.first())
            .ok_or_else(|| Error::ShapeMismatch("empty GSW ciphertext".into()))?;
        let gadget = GadgetMatrix::new(first.context().width(), keyset.len());
        if rows.len() != gadget.rows() || rows.iter().any(|r| r.len() != gadget.cols()) {
            return Err(Error::ShapeMismatch(format!(
                "GSW matrix must be {}x{}",
                gadget.rows(),
                gadget.cols()
            )));
        }
        Ok(Self {
            rows,
            keyset,
            key_level,
            noise_variance,
            correction_variance,
            message_bound,
        })
    }

    pub fn rows(&self) -> &[Vec<RingElement>] {
        &self.rows
    }

    pub fn keyset(&self) -> &[KeyId] {
        &self.keyset
    }

    pub fn level(&self) -> usize {
        self.rows[0][0].level()
    }

    pub fn key_level(&self) -> usize {
        self.key_level
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn correction_variance(&self) -> f64 {
        self.correction_variance
    }

    /// Variance of the noise that `BitDecomp(v) * C` adds on top of
    /// `mu * <v, s>`, when `v` reaches `rows_hit` rows of the matrix.
    ///
    /// Correction rows all reuse the same `w` randomness encryptions, so
    /// their noise adds coherently: the summed coefficient of each one has
    /// a nonzero mean of up to `rows_hit * degree / 4`.
    pub fn product_variance(&self, rows_hit: usize) -> f64 {
        let n = self.rows[0][0].context().degree() as f64;
        let w = self.gadget().width() as f64;
        let rows = rows_hit as f64;
        let coherent = (rows * n / 4.0).powi(2) + rows * n * 3.0 / 16.0;
        rows * n / 2.0 * self.noise_variance + w * n * self.correction_variance * coherent
    }

    pub fn message_bound(&self) -> f64 {
        self.message_bound
    }

    pub fn gadget(&self) -> GadgetMatrix {
        GadgetMatrix::new(self.rows[0][0].context().width(), self.keyset.len())
    }

    /// `(rows, cols)` of the matrix.
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows[0].len())
    }

    /// Per-row `<row, s> - mu * G[row] * s`. Test oracle for the GSW
    /// invariant; every entry should be a small multiple of `t`.
    pub fn residuals(&self, mu: &RingElement, keys: &[&SecretKey]) -> Result<Vec<RingElement>> {
        let ctx = self.rows[0][0].context().clone();
        let mut s = Vec::with_capacity(2 * self.keyset.len());
        for id in &self.keyset {
            let key = keys
                .iter()
                .find(|k| k.id() == *id)
                .ok_or(Error::KeyNotInSet(*id))?;
            s.extend(key.key_vector(self.key_level, &ctx));
        }
        let mu = mu.lift_centered(&ctx);
        let gadget = self.gadget();
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut acc = RingElement::zero(&ctx);
                for (x, y) in row.iter().zip(&s) {
                    acc.add_assign(&x.mul(y)?)?;
                }
                let (col, power) = gadget.entry(r);
                acc.sub(&mu.mul(&s[col])?.scalar_mul(1u64 << power))
            })
            .collect()
    }

    pub(crate) fn evaluated(&self) -> EvaluatedRgsw {
        EvaluatedRgsw {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| x.to_evaluation()).collect())
                .collect(),
            gadget: self.gadget(),
        }
    }
}

/// Encryption of `powers_of_two(gamma)` for the GSW randomness `gamma`,
/// one RLWE pair per power.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomnessEncryption {
    rows: Vec<[RingElement; 2]>,
    key: KeyId,
    key_level: usize,
    noise_variance: f64,
}

impl RandomnessEncryption {
    pub fn from_parts(
        rows: Vec<[RingElement; 2]>,
        key: KeyId,
        key_level: usize,
        noise_variance: f64,
    ) -> Result<Self> {
        let width = rows
            .first()
            .map(|r| r[0].context().width())
            .ok_or_else(|| Error::ShapeMismatch("empty randomness encryption".into()))?;
        if rows.len() != width {
            return Err(Error::ShapeMismatch(format!(
                "randomness encryption needs {width} rows, got {}",
                rows.len()
            )));
        }
        Ok(Self {
            rows,
            key,
            key_level,
            noise_variance,
        })
    }

    pub fn rows(&self) -> &[[RingElement; 2]] {
        &self.rows
    }

    pub fn key(&self) -> KeyId {
        self.key
    }

    pub fn key_level(&self) -> usize {
        self.key_level
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// A GSW matrix with every entry in the transform domain.
pub(crate) struct EvaluatedRgsw {
    rows: Vec<Vec<Evaluation>>,
    gadget: GadgetMatrix,
}

impl EvaluatedRgsw {
    pub(crate) fn cols(&self) -> usize {
        self.gadget.cols()
    }
}

/// Bit planes of a short vector in the transform domain, each tagged with
/// the entry and power it came from.
pub(crate) struct Decomposition {
    planes: Vec<(usize, usize, Evaluation)>,
}

impl Decomposition {
    pub(crate) fn new(v: &[RingElement]) -> Self {
        let mut planes = Vec::new();
        for (entry, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (power, bits) in decompose_evaluated(x).into_iter().enumerate() {
                if let Some(bits) = bits {
                    planes.push((entry, power, bits));
                }
            }
        }
        Self { planes }
    }

    /// `acc += BitDecomp(v) * C`, reading entry `e` of `v` as column
    /// `2 * block + e` of the gadget.
    pub(crate) fn accumulate(
        &self,
        block: usize,
        c: &EvaluatedRgsw,
        acc: &mut [Evaluation],
        ctx: &RingContext,
    ) {
        for (entry, power, bits) in &self.planes {
            let col = 2 * block + entry;
            let source = &c.rows[c.gadget.row_index(col / 2, *power, col % 2)];
            for (slot, y) in acc.iter_mut().zip(source) {
                slot.mul_acc(ctx, bits, y);
            }
        }
    }
}

/// `BitDecomp(row) * C` for a `2K`-vector `row`.
pub(crate) fn external_product(row: &[RingElement], c: &EvaluatedRgsw) -> Result<Vec<RingElement>> {
    if row.len() != c.cols() {
        return Err(Error::ShapeMismatch(format!(
            "external product of a {}-vector with a {}-column matrix",
            row.len(),
            c.cols()
        )));
    }
    let ctx = row[0].context().clone();
    let mut acc: Vec<Evaluation> = (0..c.cols()).map(|_| Evaluation::zero(&ctx)).collect();
    Decomposition::new(row).accumulate(0, c, &mut acc, &ctx);
    Ok(acc.into_iter().map(|x| x.into_element(&ctx)).collect())
}

/// Variance of `gamma * (b - a s') + t (e0 - e1 s')` for a key whose
/// error and secret coefficients have the given variances.
pub(crate) fn row_variance(params: &RingParams, pk_error_var: f64, secret_var: f64) -> f64 {
    let sigma2 = params.sigma2();
    NoiseEstimate::public_encryption(params.t(), params.degree(), sigma2, pk_error_var, secret_var)
        .variance
}

/// GSW encryption of `mu` from the chosen public rows of `pk` at `level`,
/// together with the encryption of its randomness.
pub fn rgsw_enc<R: Rng + ?Sized>(
    params: &RingParams,
    pk: &PublicKey,
    rows: RowSet,
    level: usize,
    mu: &RingElement,
    rng: &mut R,
) -> Result<(RgswCiphertext, RandomnessEncryption)> {
    let ctx = params.context(level)?.clone();
    let key_level = rows.key_level(level)?;
    let b = rows.rows(pk, level)?;
    let a = &pk.level(level).a;
    let mu = mu.lift_centered(&ctx);
    let t = params.t();
    let width = ctx.width();
    let gamma = sample_binary(rng, &ctx);
    let noise = |rng: &mut R| {
        params
            .noise()
            .sample_poly(rng, params.degree())
            .to_element(&ctx)
            .scalar_mul(t)
    };
    let mut matrix = Vec::with_capacity(2 * width);
    for r in 0..2 * width {
        let mut row = vec![
            gamma.mul(&b[r])?.add(&noise(rng))?,
            gamma.mul(&a[r])?.add(&noise(rng))?,
        ];
        row[r % 2].add_assign(&mu.scalar_mul(1u64 << (r / 2)))?;
        matrix.push(row);
    }
    let mut f_rows = Vec::with_capacity(width);
    for m in 0..width {
        let mask = sample_binary(rng, &ctx);
        let f0 = mask
            .mul(&b[m])?
            .add(&noise(rng))?
            .add(&gamma.scalar_mul(1u64 << m))?;
        let f1 = mask.mul(&a[m])?.add(&noise(rng))?;
        f_rows.push([f0, f1]);
    }
    let weight = pk.weight() as f64 * params.sigma2();
    let variance = row_variance(params, weight, weight);
    Ok((
        RgswCiphertext {
            rows: matrix,
            keyset: vec![pk.id()],
            key_level,
            noise_variance: variance,
            correction_variance: 0.0,
            message_bound: mu.norm() as f64,
        },
        RandomnessEncryption {
            rows: f_rows,
            key: pk.id(),
            key_level,
            noise_variance: variance,
        },
    ))
}

/// Extends a fresh GSW ciphertext under `pk_u` to the ordered key list
/// `pks`. Row block `k != u` holds the original rows in column block `k`
/// and the correction `X_k[r] = BitDecomp(b_k[r] - b_u[r]) * F` in column
/// block `u`; block `u` holds the original rows alone.
pub fn rgsw_extend(
    params: &RingParams,
    c: &RgswCiphertext,
    f: &RandomnessEncryption,
    pks: &[&PublicKey],
    rows: RowSet,
) -> Result<RgswCiphertext> {
    if c.keyset.len() != 1 || f.key != c.keyset[0] {
        return Err(Error::ShapeMismatch(
            "only fresh single-key GSW ciphertexts can be extended".into(),
        ));
    }
    let owner = c.keyset[0];
    let own = pks
        .iter()
        .position(|pk| pk.id() == owner)
        .ok_or(Error::KeyNotInSet(owner))?;
    let level = c.level();
    if rows.key_level(level)? != c.key_level {
        return Err(Error::LevelMismatch {
            left: c.key_level,
            right: rows.key_level(level)?,
        });
    }
    let common = &pks[own].level(level).a;
    if pks.iter().any(|pk| &pk.level(level).a != common) {
        return Err(Error::ReferenceMismatch);
    }
    let ctx = c.rows[0][0].context().clone();
    let width = ctx.width();
    let blocks = pks.len();
    let own_rows = rows.rows(pks[own], level)?;
    let f_eval: Vec<[Evaluation; 2]> = f
        .rows
        .iter()
        .map(|[x, y]| [x.to_evaluation(), y.to_evaluation()])
        .collect();
    let zero = RingElement::zero(&ctx);
    let mut out = Vec::with_capacity(2 * blocks * width);
    let mut variance = c.noise_variance;
    for (k, pk) in pks.iter().enumerate() {
        let other_rows = rows.rows(pk, level)?;
        if k != own {
            let key_var = pk.weight() as f64 * params.sigma2();
            variance = variance.max(
                row_variance(params, key_var, key_var)
                    + width as f64 * params.degree() as f64 * f.noise_variance,
            );
        }
        for (r, row) in c.rows.iter().enumerate() {
            let mut ext = vec![zero.clone(); 2 * blocks];
            ext[2 * k] = row[0].clone();
            ext[2 * k + 1] = row[1].clone();
            if k != own {
                let delta = other_rows[r].sub(&own_rows[r])?;
                let mut acc = [Evaluation::zero(&ctx), Evaluation::zero(&ctx)];
                for (m, bits) in decompose_evaluated(&delta).into_iter().enumerate() {
                    let Some(bits) = bits else { continue };
                    acc[0].mul_acc(&ctx, &bits, &f_eval[m][0]);
                    acc[1].mul_acc(&ctx, &bits, &f_eval[m][1]);
                }
                let [x0, x1] = acc;
                ext[2 * own] = x0.into_element(&ctx);
                ext[2 * own + 1] = x1.into_element(&ctx);
            }
            out.push(ext);
        }
    }
    Ok(RgswCiphertext {
        rows: out,
        keyset: pks.iter().map(|pk| pk.id()).collect(),
        key_level: c.key_level,
        noise_variance: variance,
        correction_variance: if blocks > 1 { f.noise_variance } else { c.correction_variance },
        message_bound: c.message_bound,
    })
}

/// GSW product `BitDecomp(C1) * C2`, encrypting `mu1 * mu2`.
pub fn rgsw_mult(c1: &RgswCiphertext, c2: &RgswCiphertext) -> Result<RgswCiphertext> {
    if c1.keyset != c2.keyset || c1.key_level != c2.key_level {
        return Err(Error::KeysetMismatch);
    }
    if c1.level() != c2.level() {
        return Err(Error::LevelMismatch {
            left: c1.level(),
            right: c2.level(),
        });
    }
    if c1.shape() != c2.shape() {
        return Err(Error::ShapeMismatch("GSW shapes differ".into()));
    }
    let evaluated = c2.evaluated();
    let rows = c1
        .rows
        .iter()
        .map(|row| external_product(row, &evaluated))
        .collect::<Result<Vec<_>>>()?;
    let degree = c1.rows[0][0].context().degree() as f64;
    let q_half = c1.rows[0][0].context().q() as f64 / 2.0;
    Ok(RgswCiphertext {
        rows,
        keyset: c1.keyset.clone(),
        key_level: c1.key_level,
        noise_variance: degree * c2.message_bound.powi(2) * c1.noise_variance
            + c2.product_variance(c2.rows.len()),
        correction_variance: 0.0,
        message_bound: (degree * c1.message_bound * c2.message_bound).min(q_half),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bgv::{kgen, CommonReference};
    use crate::ring::sample_uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fixture {
        params: RingParams,
        keys: Vec<(SecretKey, PublicKey)>,
        rng: ChaCha20Rng,
    }

    fn fixture() -> Fixture {
        let params = RingParams::builder(16, 2).build().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let crs = CommonReference::generate(&params, &mut rng);
        let keys = (0..2)
            .map(|i| kgen(&params, &crs, KeyId(i), &mut rng).unwrap())
            .collect();
        Fixture { params, keys, rng }
    }

    fn assert_residuals_small(res: &[RingElement], t: u64, limit: f64) {
        for r in res {
            for c in r.centered() {
                assert_eq!(c.rem_euclid(t as i64), 0);
                assert!((c.unsigned_abs() as f64) < limit, "{c} vs {limit}");
            }
        }
    }

    #[test]
    fn gadget_roundtrip_on_vectors() {
        let f = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let ctx = f.params.context(2).unwrap();
        for blocks in [1, 2] {
            let g = GadgetMatrix::new(ctx.width(), blocks);
            let v: Vec<RingElement> = (0..g.cols()).map(|_| sample_uniform(&mut rng, ctx)).collect();
            let bits = g.decompose(&v).unwrap();
            assert_eq!(bits.len(), g.rows());
            assert!(bits.iter().all(|b| b.coeffs().iter().all(|&c| c < 2)));
            assert_eq!(g.recompose(&bits).unwrap(), v);
        }
    }

    #[test]
    fn fresh_invariant_shape_and_zero_message() {
        let mut f = fixture();
        let (sk, pk) = &f.keys[0];
        let ctx = f.params.context(3).unwrap().clone();
        for (rows, key_level) in [(RowSet::Encryption, 3), (RowSet::Switching, 2)] {
            for mu in [RingElement::zero(&ctx), sample_uniform(&mut f.rng, &ctx)] {
                let (c, rand) = rgsw_enc(&f.params, pk, rows, 3, &mu, &mut f.rng).unwrap();
                assert_eq!(c.shape(), (2 * ctx.width(), 2));
                assert_eq!(c.key_level(), key_level);
                let limit = 10.0 * c.noise_variance().sqrt();
                assert_residuals_small(&c.residuals(&mu, &[sk]).unwrap(), 2, limit);
                assert_eq!(rand.rows().len(), ctx.width());
            }
        }
    }

    #[test]
    fn randomness_encryption_recomposes_gamma() {
        let mut f = fixture();
        let (sk, pk) = &f.keys[0];
        let ctx = f.params.context(1).unwrap().clone();
        let mu = RingElement::constant(&ctx, 1);
        let (c, rand) = rgsw_enc(&f.params, pk, RowSet::Switching, 1, &mu, &mut f.rng).unwrap();
        // gamma itself is hidden, but F[m] must decrypt to 2^m times F[0].
        let s = sk.s_prime(0).to_element(&ctx);
        let phase = |r: &[RingElement; 2]| r[0].sub(&r[1].mul(&s).unwrap()).unwrap();
        let p0 = phase(&rand.rows()[0]);
        for m in 1..4 {
            let diff = phase(&rand.rows()[m]).sub(&p0.scalar_mul(1 << m)).unwrap();
            for x in diff.centered() {
                assert_eq!(x.rem_euclid(2), 0);
                assert!(x.unsigned_abs() < 1 << 20);
            }
        }
        assert_eq!(c.keyset(), &[KeyId(0)]);
    }

    #[test]
    fn extension_invariant_shape_and_identity() {
        let mut f = fixture();
        let (sk0, pk0) = &f.keys[0];
        let (sk1, pk1) = &f.keys[1];
        let ctx = f.params.context(2).unwrap().clone();
        let mu = sample_uniform(&mut f.rng, &ctx);
        let (c, rand) = rgsw_enc(&f.params, pk1, RowSet::Switching, 2, &mu, &mut f.rng).unwrap();
        let single = rgsw_extend(&f.params, &c, &rand, &[pk1], RowSet::Switching).unwrap();
        assert_eq!(single, c);
        for order in [[pk0, pk1], [pk1, pk0]] {
            let ext = rgsw_extend(&f.params, &c, &rand, &order, RowSet::Switching).unwrap();
            assert_eq!(ext.shape(), (4 * ctx.width(), 4));
            let limit = 10.0 * ext.noise_variance().sqrt();
            assert_residuals_small(&ext.residuals(&mu, &[sk0, sk1]).unwrap(), 2, limit);
            let again = rgsw_extend(&f.params, &c, &rand, &order, RowSet::Switching).unwrap();
            assert_eq!(again, ext);
        }
        let err = rgsw_extend(&f.params, &c, &rand, &[pk0], RowSet::Switching);
        assert_eq!(err, Err(Error::KeyNotInSet(KeyId(1))));
    }

    #[test]
    fn product_truth_table_and_identity() {
        let mut f = fixture();
        let (sk, pk) = &f.keys[0];
        let ctx = f.params.context(3).unwrap().clone();
        let enc = |m: u64, rng: &mut ChaCha20Rng| {
            rgsw_enc(&f.params, pk, RowSet::Encryption, 3, &RingElement::constant(&ctx, m), rng)
                .unwrap()
                .0
        };
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let prod = rgsw_mult(&enc(x, &mut f.rng), &enc(y, &mut f.rng)).unwrap();
            let limit = 10.0 * prod.noise_variance().sqrt();
            let expected = RingElement::constant(&ctx, x & y);
            assert_residuals_small(&prod.residuals(&expected, &[sk]).unwrap(), 2, limit);
        }
        let mu = sample_uniform(&mut f.rng, &ctx);
        let (c, _) = rgsw_enc(&f.params, pk, RowSet::Encryption, 3, &mu, &mut f.rng).unwrap();
        let prod = rgsw_mult(&c, &enc(1, &mut f.rng)).unwrap();
        let limit = 10.0 * prod.noise_variance().sqrt();
        assert_residuals_small(&prod.residuals(&mu, &[sk]).unwrap(), 2, limit);
    }
}

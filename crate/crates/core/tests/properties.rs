use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use mkthe::bgv::{dec, enc, eval_add, kgen, CommonReference, LeveledCiphertext};
use mkthe::threshold::{aggregate_partials, combine_shares, dealer_keygen, partial_decrypt};
use mkthe::wire::{decode, encode};
use mkthe::{Error, KeyId, OwnerId, RingParams};

fn params(t: u64) -> RingParams {
    RingParams::builder(16, t).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Addition of ciphertexts is addition of plaintext vectors mod t.
    #[test]
    fn addition_is_homomorphic(
        seed: u64,
        t in prop::sample::select(vec![2u64, 3, 5, 8, 17]),
        m1 in prop::collection::vec(0u64..1 << 20, 16),
        m2 in prop::collection::vec(0u64..1 << 20, 16),
    ) {
        let params = params(t);
        let m1: Vec<u64> = m1.iter().map(|x| x % t).collect();
        let m2: Vec<u64> = m2.iter().map(|x| x % t).collect();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = CommonReference::generate(&params, &mut rng);
        let (sk, pk) = kgen(&params, &crs, KeyId(1), &mut rng).unwrap();
        let c1 = enc(&params, &pk, &m1, &mut rng).unwrap();
        let c2 = enc(&params, &pk, &m2, &mut rng).unwrap();
        prop_assert_eq!(dec(&params, &sk, &c1).unwrap(), m1.clone());
        let sum = dec(&params, &sk, &eval_add(&c1, &c2).unwrap()).unwrap();
        let expected: Vec<u64> = m1.iter().zip(&m2).map(|(a, b)| (a + b) % t).collect();
        prop_assert_eq!(sum, expected);
    }

    /// Summed partial decryptions equal `c1 * s` up to a multiple of `t`
    /// bounded by `t * N * smudging_bound`.
    #[test]
    fn partials_sum_to_joint_product(seed: u64, owners in 1usize..=4) {
        let params = params(8);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = CommonReference::generate(&params, &mut rng);
        let (pk, _, shares) = dealer_keygen(&params, &crs, KeyId(0), owners, &mut rng)
            .unwrap()
            .into_parts();
        let c = enc(&params, &pk, &[1], &mut rng).unwrap();
        let c1 = &c.parts()[0][1];
        let partials: Vec<_> = shares
            .iter()
            .map(|s| partial_decrypt(&params, s, c1, 4, &mut rng).unwrap())
            .collect();
        let ids: Vec<OwnerId> = shares.iter().map(|s| s.owner()).collect();
        let rho = aggregate_partials(&partials, &ids, 4).unwrap();
        let joint = combine_shares(&shares.iter().collect::<Vec<_>>()).unwrap();
        let exact = c1.mul(&joint.s_prime(c.level()).to_element(c1.context())).unwrap();
        let bound = params.t() as i64 * owners as i64 * params.smudging_bound() as i64;
        for d in rho.sub(&exact).unwrap().centered() {
            prop_assert_eq!(d % params.t() as i64, 0);
            prop_assert!(d.abs() <= bound);
        }
    }

    /// Files decode to the encoded object, and any single flipped bit is
    /// rejected.
    #[test]
    fn wire_roundtrip_and_corruption(seed: u64, flip in any::<prop::sample::Index>(), bit in 0u8..8) {
        let params = params(2);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let crs = CommonReference::generate(&params, &mut rng);
        let (_, pk) = kgen(&params, &crs, KeyId(3), &mut rng).unwrap();
        let c = enc(&params, &pk, &[1, 0, 1], &mut rng).unwrap();
        let bytes = encode(&c, "toy", &params).unwrap();
        prop_assert_eq!(&decode::<LeveledCiphertext>(&bytes, &params).unwrap(), &c);
        let mut damaged = bytes.clone();
        damaged[flip.index(bytes.len())] ^= 1 << bit;
        prop_assert!(matches!(
            decode::<LeveledCiphertext>(&damaged, &params),
            Err(Error::Decode(_))
        ));
    }
}

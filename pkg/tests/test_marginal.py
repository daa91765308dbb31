import unittest

import numpy as np

from context import mudsim
from mudsim import (Constellation, DetectorList, ProbabilityMatrix, bit_extrinsics_from_symbols,
                    extrinsic_from_posterior, list_to_posteriors, symbol_priors_from_bits)
from mudsim.errors import DimensionMismatch, InvalidParameter


class ProbabilityMatrixTest(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidParameter):
            ProbabilityMatrix(np.array([[0.5, 0.2], [0.4, 0.8]]))
        with self.assertRaises(InvalidParameter):
            ProbabilityMatrix(np.array([[1.5], [-0.5]]))
        with self.assertRaises(InvalidParameter):
            ProbabilityMatrix(np.ones(3))

    def test_uniform_and_floor(self):
        u = ProbabilityMatrix.uniform(4, 3)
        self.assertEqual((u.q, u.k), (4, 3))
        np.testing.assert_allclose(u.probs, 0.25)
        f = ProbabilityMatrix(np.array([[1.0], [0.0]])).floored(1e-3)
        np.testing.assert_allclose(f.probs[:, 0], [1 / 1.001, 1e-3 / 1.001])


class ListMarginalTest(unittest.TestCase):
    def test_hand_list(self):
        n0 = 0.5
        found = DetectorList(sequences=[[0, 0], [0, 1]], weights=[0.0, n0 * np.log(2.0)])
        post = list_to_posteriors(found, n0, 2, floor=1e-7)
        np.testing.assert_allclose(post.probs[:, 0], [1.5 / (1.5 + 1e-7), 1e-7 / (1.5 + 1e-7)])
        np.testing.assert_allclose(post.probs[:, 1], [2 / 3, 1 / 3])

    def test_single_sequence_is_near_certain(self):
        found = DetectorList(sequences=[[1, 0, 3]], weights=[2.0])
        post = list_to_posteriors(found, 1.0, 4)
        np.testing.assert_allclose(post.probs[[1, 0, 3], [0, 1, 2]], 1 / (1 + 3e-7))

    def test_equal_weights_split_evenly(self):
        found = DetectorList(sequences=[[0, 1, 1], [1, 1, 1]], weights=[0.5, 0.5])
        post = list_to_posteriors(found, 0.3, 2)
        np.testing.assert_allclose(post.probs[:, 0], 0.5)
        self.assertGreater(post.probs[1, 1], 1 - 1e-6)

    def test_shift_invariance(self):
        rng = np.random.default_rng(3)
        seqs = np.array(list(np.ndindex(2, 2, 2)))
        weights = np.sort(rng.uniform(-3, 3, len(seqs)))
        a = list_to_posteriors(DetectorList(seqs, weights), 0.7, 2)
        b = list_to_posteriors(DetectorList(seqs, weights + 123.0), 0.7, 2)
        np.testing.assert_allclose(a.probs, b.probs, atol=1e-12)

    def test_extreme_weights_stay_finite(self):
        found = DetectorList(sequences=[[0], [1]], weights=[-1e4, 1e4])
        post = list_to_posteriors(found, 1.0, 2)
        self.assertTrue(np.all(np.isfinite(post.probs)))
        self.assertAlmostEqual(post.probs[0, 0], 1.0)
        # covered cells keep their value even when it underflows below the floor
        self.assertLess(post.probs[1, 0], 1e-7)

    def test_extrinsic_divides_out_prior(self):
        prior = ProbabilityMatrix(np.array([[0.2, 0.6], [0.8, 0.4]]))
        np.testing.assert_allclose(extrinsic_from_posterior(prior, prior).probs, 0.5)
        post = ProbabilityMatrix(np.array([[0.5, 0.6], [0.5, 0.4]]))
        np.testing.assert_allclose(extrinsic_from_posterior(post, prior).probs[:, 0], [0.8, 0.2])
        with self.assertRaises(DimensionMismatch):
            extrinsic_from_posterior(post, ProbabilityMatrix.uniform(2, 3))

    def test_extrinsic_composes_back_to_posterior(self):
        rng = np.random.default_rng(4)
        prior = ProbabilityMatrix.normalized(rng.uniform(0.1, 1.0, size=(4, 5)))
        post = ProbabilityMatrix.normalized(rng.uniform(0.1, 1.0, size=(4, 5)))
        ext = extrinsic_from_posterior(post, prior)
        np.testing.assert_allclose(ProbabilityMatrix.normalized(ext.probs * prior.probs).probs,
                                   post.probs, atol=1e-9)
        np.testing.assert_allclose(extrinsic_from_posterior(post, ProbabilityMatrix.uniform(4, 5)).probs,
                                   post.probs, atol=1e-12)


class BitSymbolTest(unittest.TestCase):
    def test_symbol_priors_are_label_products(self):
        priors = symbol_priors_from_bits(np.array([[0.2, 0.7]]), Constellation.qpsk())
        np.testing.assert_allclose(priors.probs[:, 0], [0.24, 0.56, 0.06, 0.14])

    def test_bpsk_bit_extrinsic(self):
        ext = ProbabilityMatrix(np.array([[0.7, 0.1], [0.3, 0.9]]))
        p1 = bit_extrinsics_from_symbols(ext, np.array([[0.5], [0.2]]), Constellation.bpsk())
        np.testing.assert_allclose(p1[:, 0], [0.3, 0.9])

    def test_bit_extrinsic_ignores_own_prior(self):
        rng = np.random.default_rng(2)
        qam = Constellation.qam16()
        ext = ProbabilityMatrix.normalized(rng.uniform(0.1, 1.0, size=(16, 3)))
        bits = rng.uniform(0.1, 0.9, size=(3, 4))
        a = bit_extrinsics_from_symbols(ext, bits, qam)
        bits[:, 2] = 0.99
        b = bit_extrinsics_from_symbols(ext, bits, qam)
        np.testing.assert_allclose(a[:, 2], b[:, 2], atol=1e-12)

    def test_uniform_symbols_give_uniform_bits(self):
        p1 = bit_extrinsics_from_symbols(ProbabilityMatrix.uniform(4, 2), np.full((2, 2), 0.3),
                                         Constellation.qpsk())
        np.testing.assert_allclose(p1, 0.5)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            symbol_priors_from_bits(np.full((2, 3), 0.5), Constellation.qpsk())


if __name__ == '__main__':
    unittest.main()

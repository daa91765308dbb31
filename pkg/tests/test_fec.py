import unittest

import numpy as np

from context import mudsim
from mudsim import BitProbabilityStream, ConvCode, Interleaver, bcjr_decode, brute_force_map, hard_decide, permute
from mudsim.errors import InvalidParameter, LengthMismatch


class ConvCodeTest(unittest.TestCase):
    def setUp(self):
        self.code = ConvCode((0o5, 0o7))

    def test_parameters(self):
        self.assertEqual(self.code.constraint_length, 3)
        self.assertEqual(self.code.memory, 2)
        self.assertEqual(self.code.n_states, 4)
        self.assertEqual(self.code.rate, 0.5)
        self.assertEqual(ConvCode(("05", "07")), self.code)

    def test_hand_trace(self):
        np.testing.assert_array_equal(self.code.encode([1, 0]), [1, 1, 0, 1])
        np.testing.assert_array_equal(self.code.encode([1, 1, 1]), [1, 1, 1, 0, 0, 1])

    def test_impulse_response_is_generators(self):
        # bits of 05 and 07 read from the most significant end
        coded = self.code.encode([1, 0, 0]).reshape(3, 2)
        np.testing.assert_array_equal(coded[:, 0], [1, 0, 1])
        np.testing.assert_array_equal(coded[:, 1], [1, 1, 1])

    def test_linearity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.integers(0, 2, size=(2, 30))
            np.testing.assert_array_equal(self.code.encode(a ^ b), self.code.encode(a) ^ self.code.encode(b))

    def test_batched_rows(self):
        bits = np.random.default_rng(1).integers(0, 2, size=(3, 12))
        batch = self.code.encode(bits)
        for row, coded in zip(bits, batch):
            np.testing.assert_array_equal(self.code.encode(row), coded)

    def test_termination(self):
        coded = self.code.encode([1, 0, 1], terminated=True)
        self.assertEqual(len(coded), self.code.coded_length(3, terminated=True))
        self.assertEqual(len(coded), 10)
        self.assertEqual(self.code.coded_length(500), 1000)

    def test_invalid(self):
        with self.assertRaises(InvalidParameter):
            ConvCode((0, 0o7))
        with self.assertRaises(InvalidParameter):
            ConvCode((0o17, 0o5), constraint_length=3)
        with self.assertRaises(InvalidParameter):
            self.code.encode([0, 2])
        for bad in (("09", "07"), ("x",), (None, 0o7)):
            with self.assertRaises(InvalidParameter):
                ConvCode(bad)
        with self.assertRaises(InvalidParameter):
            ConvCode(5)


class InterleaverTest(unittest.TestCase):
    def test_inverse_undoes_forward(self):
        pi = Interleaver.random(50, np.random.default_rng(3))
        x = np.arange(50) * 1.5
        np.testing.assert_array_equal(pi.inverse(pi.forward(x)), x)
        np.testing.assert_array_equal(pi.forward(x), x[pi.permutation])

    def test_permute_stream(self):
        pi = Interleaver(np.array([2, 0, 1]))
        stream = BitProbabilityStream.from_p1([0.1, 0.2, 0.3])
        np.testing.assert_allclose(permute(stream, pi).p1, [0.3, 0.1, 0.2])
        np.testing.assert_allclose(permute(permute(stream, pi), pi, "inverse").p1, stream.p1)
        with self.assertRaises(InvalidParameter):
            permute(stream, pi, "sideways")

    def test_rejects_bad_input(self):
        with self.assertRaises(InvalidParameter):
            Interleaver(np.array([0, 0, 1]))
        with self.assertRaises(LengthMismatch):
            Interleaver.identity(4).forward(np.zeros(5))


class BcjrTest(unittest.TestCase):
    def setUp(self):
        self.code = ConvCode((0o5, 0o7))
        self.rng = np.random.default_rng(21)

    def _priors(self, n):
        return BitProbabilityStream.from_p1(self.rng.uniform(0.05, 0.95, n))

    def test_matches_enumeration(self):
        for info_len in (1, 3, 6, 8):
            for terminated in (False, True):
                priors = self._priors(self.code.coded_length(info_len, terminated))
                _, info = bcjr_decode(priors, self.code, terminated=terminated)
                ref = brute_force_map(priors, self.code, terminated=terminated)
                np.testing.assert_allclose(info.probs, ref.probs, atol=1e-9)

    def test_extrinsic_ignores_own_prior(self):
        priors = self._priors(16)
        ext, _ = bcjr_decode(priors, self.code)
        changed = priors.probs.copy()
        changed[5] = [0.99, 0.01]
        ext2, _ = bcjr_decode(BitProbabilityStream(changed), self.code)
        self.assertAlmostEqual(ext.p1[5], ext2.p1[5], places=12)
        self.assertNotAlmostEqual(ext.p1[4], ext2.p1[4], places=6)

    def test_extrinsic_times_prior_is_coded_posterior(self):
        for info_len in (1, 4, 8):
            for terminated in (False, True):
                priors = self._priors(self.code.coded_length(info_len, terminated))
                words = (np.arange(2 ** info_len)[:, None] >> np.arange(info_len)[None, :]) & 1
                codewords = self.code.encode(words, terminated=terminated)
                weight = np.prod(priors.probs[np.arange(codewords.shape[1]), codewords], axis=1)
                posterior_p1 = weight @ codewords / weight.sum()
                ext, _ = bcjr_decode(priors, self.code, terminated=terminated)
                joint = ext.probs * priors.probs
                np.testing.assert_allclose(joint[:, 1] / joint.sum(axis=1), posterior_p1, atol=1e-9)

    def test_uniform_priors_give_uniform_output(self):
        ext, info = bcjr_decode(BitProbabilityStream.uniform(20), self.code)
        np.testing.assert_allclose(ext.p1, 0.5, atol=1e-12)
        np.testing.assert_allclose(info.p1, 0.5, atol=1e-12)

    def test_decodes_reliable_codeword(self):
        info_bits = self.rng.integers(0, 2, 40)
        coded = self.code.encode(info_bits)
        priors = BitProbabilityStream.from_p1(np.where(coded == 1, 0.8, 0.2))
        for max_log in (False, True):
            ext, info = bcjr_decode(priors, self.code, max_log=max_log)
            np.testing.assert_array_equal(hard_decide(info), info_bits)
            self.assertTrue(np.all(ext.probs >= 1e-7 * 0.99))

    def test_length_checks(self):
        with self.assertRaises(LengthMismatch):
            bcjr_decode(BitProbabilityStream.uniform(5), self.code)
        with self.assertRaises(LengthMismatch):
            bcjr_decode(BitProbabilityStream.uniform(4), self.code, terminated=True)

    def test_hard_decide_ties_to_zero(self):
        stream = BitProbabilityStream(np.array([[0.5, 0.5], [0.2, 0.8], [0.9, 0.1]]))
        np.testing.assert_array_equal(hard_decide(stream), [0, 1, 0])


if __name__ == '__main__':
    unittest.main()

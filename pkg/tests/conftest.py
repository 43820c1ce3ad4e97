"""Shared fixtures: the bundled bank pipeline and a tiny bank small
enough for exhaustive and sampling oracles."""

import math

import numpy as np
import pytest

from ofbdec import (
    ChannelModel,
    FilterBank,
    Interval,
    allocate_rates,
    analyze,
    default_filter_bank,
    parity_from_polyphase,
    polyphase_from_filters,
    subband_ranges,
)

SQ2 = math.sqrt(2.0)


class BankPipeline:
    """A bank with its derived parity, quantizers and input range."""

    def __init__(self, bank, x_range, delta):
        self.bank = bank
        self.poly = polyphase_from_filters(bank)
        self.parity = parity_from_polyphase(self.poly)
        self.x_range = x_range
        self.q = allocate_rates(subband_ranges(self.poly, x_range), delta)

    def encode(self, x):
        """x -> (subband blocks, index blocks, bit stream)."""
        y = analyze(x, self.poly)
        u = self.q.quantize_block(y)
        return y, u, self.q.encode_stream(u)


@pytest.fixture(scope="session")
def default_pipe():
    return BankPipeline(default_filter_bank(), Interval(-4.0, 4.0), 0.72)


@pytest.fixture(scope="session")
def tiny_pipe():
    # M=3, N=2, L=1; two orthonormal length-2 filters and one length-4
    # filter; every subband gets 2 bits at step 1 over inputs in [-1, 1].
    taps = [
        np.array([1.0, 1.0]) / SQ2,
        np.array([1.0, -1.0]) / SQ2,
        np.array([1.0, 1.0, -1.0, -1.0]) / 2.0,
    ]
    bank = FilterBank(3, 2, 1, taps)
    pipe = BankPipeline(bank, Interval(-1.0, 1.0), 1.0)
    assert pipe.q.rates.tolist() == [2, 2, 2]
    return pipe


def exhaustive_candidates(r, q, ch):
    """All index vectors ranked exactly like the decoder ranks them:
    decreasing total log-likelihood, ties by ascending index vector.

    The oracle's point is the full enumeration (no pruning); per-subband
    scores deliberately use the decoder's arithmetic (sum the squared
    symbol distances, divide once) so the two rankings can be compared
    for exact equality instead of up to float rounding.
    """
    r = np.asarray(r, dtype=float)
    sig2 = ch.effective_sigma2()
    grids = [np.arange(-q.offsets[m], q.offsets[m]) for m in range(q.M)]
    mesh = np.meshgrid(*grids, indexing="ij")
    u_all = np.stack([g.ravel() for g in mesh], axis=1)
    scores = np.zeros(u_all.shape[0])
    for m in range(q.M):
        symbols = 1.0 - 2.0 * q.index_codes(m).astype(float)
        rm = r[q.bit_slices[m]]
        per_index = -np.sum((rm[None, :] - symbols) ** 2, axis=1) / (2.0 * sig2)
        scores = scores + per_index[u_all[:, m] + q.offsets[m]]
    keys = [u_all[:, k] for k in range(u_all.shape[1] - 1, -1, -1)]
    keys.append(-scores)
    order = np.lexsort(keys)
    return u_all[order], scores[order]


def sample_feasible_indexes(state, pipe, rng, n_samples=100_000):
    """Sampling feasibility oracle: index vectors reachable from the
    current history boxes, found by pushing random admissible inputs
    through the bank.  Returns a set of index tuples."""
    poly, q = pipe.poly, pipe.q
    x = rng.uniform(state.input_box.lo, state.input_box.hi,
                    size=(n_samples, poly.N))
    z = x @ poly.E[0].T
    for l in range(1, poly.L + 1):
        hb = state.x_hist[l - 1]
        h = rng.uniform(hb.lo, hb.hi, size=(n_samples, poly.N))
        z += h @ poly.E[l].T
    idx = q.quantize_block(z)
    return {tuple(row) for row in idx}

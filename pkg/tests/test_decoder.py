"""Candidate listing, consistency and parity tests, and the decoders."""

import numpy as np
import pytest
from conftest import exhaustive_candidates, sample_feasible_indexes

from ofbdec import (
    Box,
    ChannelModel,
    DecoderConfig,
    DecoderState,
    FLAG_CLEAN,
    FLAG_NO_CONSISTENT,
    FLAG_PARITY_EXHAUSTED,
    FilterBank,
    QuantizerBank,
    consistency_box,
    decode_classical,
    decode_sequence,
    gen_ar1,
    parity_test,
    polyphase_from_filters,
    step,
    synthesize_ls,
    top_candidates,
)


def two_bit_setup():
    """Two subbands at one bit each: four index vectors total."""
    q = QuantizerBank(
        [1.0, 1.0], [1, 1], Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    )
    ch = ChannelModel(-10.0 * np.log10(2.0))  # sigma2 = 2
    return q, ch


def repeated_scalar_setup(coeffs=(1.0, 1.0), rates=(5, 5)):
    """L=0 bank observing one input sample through two scalar gains."""
    taps = [np.array([c]) for c in coeffs]
    poly = polyphase_from_filters(FilterBank(2, 1, 0, taps))
    q = QuantizerBank(
        [1.0, 1.0],
        list(rates),
        Box(np.array([-20.0, -20.0]), np.array([20.0, 20.0])),
    )
    return poly, q


class TestTopCandidates:
    def test_two_soft_bits_frozen_order(self):
        q, ch = two_bit_setup()
        # bit log-likelihood ratios 3 and 1, both favoring bit 0
        cands = top_candidates(np.array([3.0, 1.0]), q, ch, 4)
        got_u = [c.u.tolist() for c in cands]
        assert got_u == [[-1, -1], [-1, 0], [0, -1], [0, 0]]
        assert np.allclose([c.loglik for c in cands], [-1.0, -2.0, -4.0, -5.0])
        assert [c.rank for c in cands] == [1, 2, 3, 4]

    def test_n_max_truncates(self):
        q, ch = two_bit_setup()
        cands = top_candidates(np.array([3.0, 1.0]), q, ch, 2)
        assert [c.u.tolist() for c in cands] == [[-1, -1], [-1, 0]]

    def test_all_positive_r_gives_all_zero_bits(self, default_pipe):
        q = default_pipe.q
        ch = ChannelModel(7.0)
        rng = np.random.default_rng(1)
        r = rng.uniform(0.1, 2.0, size=q.total_bits)
        best = top_candidates(r, q, ch, 1)[0]
        assert np.array_equal(best.u, -q.offsets)

    def test_ties_break_lexicographically(self, tiny_pipe):
        q = tiny_pipe.q
        ch = ChannelModel(7.0)
        cands = top_candidates(np.zeros(q.total_bits), q, ch, 64)
        u = np.stack([c.u for c in cands])
        assert len(cands) == 64
        assert np.array_equal(u[0], [-2, -2, -2])
        assert np.array_equal(u[1], [-2, -2, -1])
        assert np.array_equal(u[-1], [1, 1, 1])
        for k in range(63):
            assert tuple(u[k]) < tuple(u[k + 1])

    def test_matches_exhaustive_ranking(self, tiny_pipe):
        q = tiny_pipe.q
        ch = ChannelModel(4.0, seed=9)
        rng = ch.stream(0)
        for trial in range(10):
            bits = rng.integers(0, 2, size=q.total_bits)
            r = ch.transmit(bits, ch.stream(1, trial))
            want_u, want_s = exhaustive_candidates(r, q, ch)
            for n_max in (64, 7, 1):
                cands = top_candidates(r, q, ch, n_max)
                got_u = np.stack([c.u for c in cands])
                got_s = np.array([c.loglik for c in cands])
                assert np.array_equal(got_u, want_u[:n_max])
                assert np.array_equal(got_s, want_s[:n_max])


class TestConsistencyBox:
    def test_identity_observation_intersects_cell(self):
        poly, q = repeated_scalar_setup()
        state = DecoderState(Box.uniform(0.0, 10.0, 1), [], [])
        box = consistency_box(np.array([5, 5]), state, poly, q)
        assert np.allclose(box.lo, 4.5) and np.allclose(box.hi, 5.5)

    def test_disjoint_cells_proven_empty(self):
        poly, q = repeated_scalar_setup()
        state = DecoderState(Box.uniform(0.0, 10.0, 1), [], [])
        assert consistency_box(np.array([5, 7]), state, poly, q).is_empty

    def test_touching_cells_collapse_to_point(self):
        poly, q = repeated_scalar_setup()
        state = DecoderState(Box.uniform(0.0, 10.0, 1), [], [])
        box = consistency_box(np.array([5, 6]), state, poly, q)
        assert not box.is_empty
        assert np.allclose(box.lo, 5.5) and np.allclose(box.hi, 5.5)

    def test_gain_two_row_contracts(self):
        poly, q = repeated_scalar_setup(coeffs=(2.0, 1.0))
        state = DecoderState(Box.uniform(0.0, 10.0, 1), [], [])
        box = consistency_box(np.array([10, 5]), state, poly, q)
        assert np.allclose(box.lo, 4.75) and np.allclose(box.hi, 5.25)

    def test_input_box_clips(self):
        poly, q = repeated_scalar_setup()
        state = DecoderState(Box.uniform(0.0, 4.8, 1), [], [])
        box = consistency_box(np.array([5, 5]), state, poly, q)
        assert np.allclose(box.lo, 4.5) and np.allclose(box.hi, 4.8)

    @pytest.mark.parametrize("contractor", ["sweep", "lp"])
    def test_contains_truth_given_true_history(self, tiny_pipe, contractor):
        p = tiny_pipe
        cfg = DecoderConfig(contractor=contractor)
        rng = np.random.default_rng(11)
        for _ in range(40):
            x_prev = rng.uniform(-1.0, 1.0, 2)
            x_cur = rng.uniform(-1.0, 1.0, 2)
            y = p.poly.E[0] @ x_cur + p.poly.E[1] @ x_prev
            u = p.q.quantize_block(y.reshape(1, -1))[0]
            state = DecoderState(
                Box.uniform(-1.0, 1.0, 2), [Box.point(x_prev)], []
            )
            box = consistency_box(u, state, p.poly, p.q, cfg)
            assert not box.is_empty
            assert box.contains(x_cur, tol=1e-9)

    def test_lp_hull_no_wider_than_sweep(self, tiny_pipe):
        p = tiny_pipe
        rng = np.random.default_rng(12)
        for _ in range(40):
            x_prev = rng.uniform(-1.0, 1.0, 2)
            x_cur = rng.uniform(-1.0, 1.0, 2)
            y = p.poly.E[0] @ x_cur + p.poly.E[1] @ x_prev
            u = p.q.quantize_block(y.reshape(1, -1))[0]
            state = DecoderState(
                Box.uniform(-1.0, 1.0, 2), [Box.point(x_prev)], []
            )
            sweep = consistency_box(u, state, p.poly, p.q, DecoderConfig())
            lp = consistency_box(
                u, state, p.poly, p.q, DecoderConfig(contractor="lp")
            )
            assert np.all(lp.lo >= sweep.lo - 1e-7)
            assert np.all(lp.hi <= sweep.hi + 1e-7)

    def test_never_excludes_sampled_reachable_indexes(self, tiny_pipe):
        p = tiny_pipe
        rng = np.random.default_rng(5)
        x_prev = rng.uniform(-1.0, 1.0, 2)
        state = DecoderState(Box.uniform(-1.0, 1.0, 2), [Box.point(x_prev)], [])
        feasible = sample_feasible_indexes(state, p, rng, n_samples=20_000)
        cfg = DecoderConfig()
        assert len(feasible) >= 4
        for tup in feasible:
            box = consistency_box(np.array(tup), state, p.poly, p.q, cfg)
            assert not box.is_empty


class TestParity:
    def _true_state_stream(self, pipe, n, seed):
        rng = np.random.default_rng(seed)
        N, L = pipe.poly.N, pipe.poly.L
        x = np.concatenate([np.zeros(N * L), gen_ar1(n, 0.9, 4.0, rng)])
        y, u, bits = pipe.encode(x)
        return x.reshape(-1, N), y, u, bits

    def test_accepts_transmitted_indexes(self, default_pipe):
        p = default_pipe
        blocks, y, u, _ = self._true_state_stream(p, 1196, seed=7)
        state = DecoderState.initial(
            Box.uniform(-4.0, 4.0, p.poly.N), p.poly, p.parity
        )
        for i in range(u.shape[0]):
            assert parity_test(u[i], state, p.parity, p.q)
            state.push(Box.point(blocks[i]), p.q.cell_box_block(u[i]))

    def test_rejects_cell_shift_in_covered_subband(self, default_pipe):
        # all of the bundled bank's redundancy lives in the subband
        # pairs {0,4} and {1,5}: the long filters' polyphase rows are
        # proportional to Walsh rows 0 and 1, so subbands 2 and 3 are
        # seen by exactly one filter each.  The parity rows reflect
        # that (zero columns there), and a shifted cell in 2 or 3 is
        # genuinely reachable from another input, so neither test can
        # reject it.
        p = default_pipe
        P0 = p.parity.P[0]
        assert np.allclose(P0[:, 2:4], 0.0)
        blocks, y, u, _ = self._true_state_stream(p, 40, seed=3)
        state = DecoderState.initial(
            Box.uniform(-4.0, 4.0, p.poly.N), p.poly, p.parity
        )
        for i in range(u.shape[0] - 1):
            state.push(Box.point(blocks[i]), p.q.cell_box_block(u[i]))
        i = u.shape[0] - 1
        for m, covered in [(0, True), (1, True), (4, True), (5, True),
                           (2, False), (3, False)]:
            shifted = u[i].copy()
            shifted[m] += 10
            assert parity_test(shifted, state, p.parity, p.q) == (not covered)
            if not covered:
                box = consistency_box(shifted, state, p.poly, p.q)
                assert not box.is_empty

    def test_wide_history_boxes_accept_everything(self, default_pipe):
        # a loose history makes the residual interval huge, so the test
        # keeps any candidate: it only ever proves infeasibility
        p = default_pipe
        M = p.poly.M
        wide = Box.uniform(-50.0, 50.0, M)
        state = DecoderState(
            Box.uniform(-4.0, 4.0, p.poly.N),
            [Box.uniform(-4.0, 4.0, p.poly.N)],
            [wide],
        )
        rng = np.random.default_rng(8)
        for _ in range(20):
            u = rng.integers(-p.q.offsets, p.q.offsets, size=M)
            assert parity_test(u, state, p.parity, p.q)


class TestStep:
    def test_noiseless_picks_truth(self, default_pipe):
        p = default_pipe
        rng = np.random.default_rng(21)
        N = p.poly.N
        x = np.concatenate([np.zeros(N), gen_ar1(200, 0.9, 4.0, rng)])
        blocks = x.reshape(-1, N)
        _, u, bits = p.encode(x)
        ch = ChannelModel(7.0, noiseless=True)
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig()
        state = DecoderState.initial(
            Box.uniform(-4.0, 4.0, N), p.poly, p.parity
        )
        for i in range(u.shape[0]):
            res = step(r[i], state, p.poly, p.parity, p.q, ch, cfg)
            assert res.flag == FLAG_CLEAN
            assert np.array_equal(res.u_hat, u[i])
            assert res.x_box.contains(blocks[i], tol=1e-9)
            assert res.n_consistent >= 1
            # the history now carries this instant's boxes
            assert np.array_equal(state.x_hist[0].lo, res.x_box.lo)
            assert np.array_equal(state.y_hist[0].hi, res.y_box.hi)

    def test_skips_inconsistent_leader(self):
        poly, q = repeated_scalar_setup()
        ch = ChannelModel(7.0, noiseless=True)
        bits = np.concatenate([q.binarize(2, 0), q.binarize(2, 1)])
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig(n_max=32, use_pct=False)
        input_box = Box.uniform(0.0, 1.0, 1)
        state = DecoderState(input_box, [], [])
        res = step(r, state, poly, None, q, ch, cfg)
        assert res.flag == FLAG_CLEAN
        assert res.rank > 1
        assert not res.x_box.is_empty
        # everything ranked above the pick was genuinely infeasible
        cands = top_candidates(r, q, ch, cfg.n_max)
        for c in cands[: res.rank - 1]:
            lo = max(q.cell_box(int(c.u[0]), 0).lo,
                     q.cell_box(int(c.u[1]), 1).lo, 0.0)
            hi = min(q.cell_box(int(c.u[0]), 0).hi,
                     q.cell_box(int(c.u[1]), 1).hi, 1.0)
            assert lo > hi

    def test_no_consistent_candidate_falls_back(self):
        poly, q = repeated_scalar_setup()
        ch = ChannelModel(7.0, noiseless=True)
        bits = np.concatenate([q.binarize(2, 0), q.binarize(2, 1)])
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig(n_max=1, use_pct=False)
        state = DecoderState(Box.uniform(0.0, 1.0, 1), [], [])
        res = step(r, state, poly, None, q, ch, cfg)
        assert res.flag == FLAG_NO_CONSISTENT
        assert res.n_consistent == 0
        assert np.array_equal(res.u_hat, [2, 2])
        # least-squares point 2.0 clipped to 1.0, padded by half a step
        assert np.allclose(res.x_box.lo, 0.5)
        assert np.allclose(res.x_box.hi, 1.0)

    def test_corrupt_parity_history_flags_exhaustion(self, default_pipe):
        p = default_pipe
        rng = np.random.default_rng(4)
        N, M = p.poly.N, p.poly.M
        x = np.concatenate([np.zeros(N), gen_ar1(40, 0.9, 4.0, rng)])
        blocks = x.reshape(-1, N)
        _, u, bits = p.encode(x)
        ch = ChannelModel(7.0, noiseless=True)
        r = ch.transmit(bits, ch.stream(0))
        i = u.shape[0] - 1
        bad_y = np.zeros(M)
        bad_y[0] = 100.0
        state = DecoderState(
            Box.uniform(-4.0, 4.0, N),
            [Box.point(blocks[i - 1])],
            [Box.point(bad_y)],
        )
        cfg = DecoderConfig(n_max=1)
        res = step(r[i], state, p.poly, p.parity, p.q, ch, cfg)
        assert res.flag == FLAG_PARITY_EXHAUSTED
        # the first consistent candidate is still returned
        assert np.array_equal(res.u_hat, u[i])


class TestDecodeSequence:
    def test_noiseless_matches_classical_exactly(self, default_pipe):
        p = default_pipe
        rng = np.random.default_rng(3)
        N = p.poly.N
        x = np.concatenate([np.zeros(N), gen_ar1(400, 0.9, 4.0, rng)])
        _, u, bits = p.encode(x)
        ch = ChannelModel(7.0, noiseless=True)
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig()
        x_hat, diag = decode_sequence(
            r, p.poly, p.parity, p.q, ch, cfg, p.x_range
        )
        assert np.array_equal(diag.u_hat, u)
        assert np.all(diag.flags == FLAG_CLEAN)
        assert diag.error_rate == 0.0
        blocks = x.reshape(-1, N)
        assert np.all(diag.x_lo <= blocks + 1e-9)
        assert np.all(blocks <= diag.x_hi + 1e-9)
        # boxes are centered on the point estimate
        assert np.allclose(0.5 * (diag.x_lo + diag.x_hi), x_hat.reshape(-1, N))
        classical = decode_classical(r, p.poly, p.q, window=cfg.window)
        assert np.array_equal(x_hat, classical)

    def test_noisy_decode_beats_hard_decisions(self, default_pipe):
        p = default_pipe
        rng = np.random.default_rng(14)
        N = p.poly.N
        x = np.concatenate([np.zeros(N), gen_ar1(320, 0.9, 4.0, rng)])
        _, _, bits = p.encode(x)
        ch = ChannelModel(7.0, seed=14)
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig()
        x_hat, diag = decode_sequence(
            r, p.poly, p.parity, p.q, ch, cfg, p.x_range
        )
        classical = decode_classical(r, p.poly, p.q, window=cfg.window)
        s = slice(40, -40)
        err_p = np.sum((x[s] - x_hat[s]) ** 2)
        err_c = np.sum((x[s] - classical[s]) ** 2)
        assert err_p < err_c / 2.0

    def test_deterministic(self, tiny_pipe):
        p = tiny_pipe
        rng = np.random.default_rng(6)
        x = np.clip(rng.normal(0.0, 0.5, size=60), -1.0, 1.0)
        _, _, bits = p.encode(x)
        ch = ChannelModel(5.0, seed=2)
        r = ch.transmit(bits, ch.stream(0))
        cfg = DecoderConfig(n_max=8)
        a, da = decode_sequence(r, p.poly, p.parity, p.q, ch, cfg, p.x_range)
        b, db = decode_sequence(r, p.poly, p.parity, p.q, ch, cfg, p.x_range)
        assert np.array_equal(a, b)
        assert np.array_equal(da.flags, db.flags)
        assert np.array_equal(da.u_hat, db.u_hat)

    def test_empty_stream(self, tiny_pipe):
        p = tiny_pipe
        ch = ChannelModel(7.0)
        cfg = DecoderConfig()
        r = np.zeros((0, p.q.total_bits))
        x_hat, diag = decode_sequence(
            r, p.poly, p.parity, p.q, ch, cfg, p.x_range
        )
        assert x_hat.size == 0
        assert diag.flags.size == 0

    def test_classical_noiseless_is_ls_synthesis(self, default_pipe):
        p = default_pipe
        rng = np.random.default_rng(9)
        x = np.clip(rng.normal(0.0, 1.0, size=160), -4.0, 4.0)
        _, u, bits = p.encode(x)
        ch = ChannelModel(7.0, noiseless=True)
        r = ch.transmit(bits, ch.stream(0))
        got = decode_classical(r, p.poly, p.q, window=8)
        want = synthesize_ls(p.poly, p.q.dequantize_block(u), window=8)
        assert np.array_equal(got, want)


class TestConfig:
    def test_n_max_validated(self):
        with pytest.raises(ValueError, match="n_max"):
            DecoderConfig(n_max=0)

    def test_contractor_validated(self):
        with pytest.raises(ValueError, match="contractor"):
            DecoderConfig(contractor="newton")

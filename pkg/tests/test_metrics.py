import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opptrans.metrics import evaluate


class TestEvaluate:
    def test_perfect_fit(self):
        m = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert m.r2 == pytest.approx(1.0, abs=1e-9)
        assert m.mae == pytest.approx(0.0, abs=1e-9)
        assert m.rmse == pytest.approx(0.0, abs=1e-9)

    def test_mean_predictor_r2_zero(self):
        targets = [1.0, 3.0, 5.0]
        m = evaluate([3.0, 3.0, 3.0], targets)
        assert m.r2 == pytest.approx(0.0, abs=1e-9)

    def test_hand_example(self):
        m = evaluate([1.0, 1.0], [0.0, 2.0])
        assert m.mae == pytest.approx(1.0, abs=1e-9)
        assert m.rmse == pytest.approx(1.0, abs=1e-9)
        assert m.r2 == pytest.approx(0.0, abs=1e-9)

    def test_constant_targets_undefined_r2(self):
        m = evaluate([1.0, 2.0], [3.0, 3.0])
        assert m.r2 is None
        assert m.mae == pytest.approx(1.5)
        assert m.rmse == pytest.approx(np.sqrt(2.5))

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            evaluate([1.0], [1.0, 2.0])

    def test_too_few_samples(self):
        with pytest.raises(ValueError, match="at least 2"):
            evaluate([1.0], [1.0])

    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
                    min_size=2, max_size=40))
    @settings(max_examples=80, deadline=None)
    def test_rmse_at_least_mae(self, pairs):
        preds, targets = zip(*pairs)
        m = evaluate(preds, targets)
        assert m.rmse >= m.mae - 1e-12
        assert m.mae >= 0.0
        if m.r2 is not None:
            assert m.r2 <= 1.0 + 1e-12

    @given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)),
                    min_size=3, max_size=20),
           st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_permutation_invariance(self, pairs, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        a = evaluate(*zip(*pairs))
        b = evaluate(*zip(*shuffled))
        assert a.mae == pytest.approx(b.mae, abs=1e-9)
        assert a.rmse == pytest.approx(b.rmse, abs=1e-9)
        if a.r2 is None:
            assert b.r2 is None
        else:
            assert a.r2 == pytest.approx(b.r2, abs=1e-9)

"""Feature vector assembly for the data rate predictors.

Feature order is fixed for a model's lifetime:
rsrp, rsrq, sinr, cqi, ta, velocity, cell_code, payload_size.
"""

from __future__ import annotations

from collections import Counter

import numpy as np

FEATURE_NAMES = ["rsrp", "rsrq", "sinr", "cqi", "ta", "velocity",
                 "cell_code", "payload_size"]
N_FEATURES = len(FEATURE_NAMES)

UNKNOWN_CELL_CODE = 0


class CellIdEncoder:
    """Frequency-ranked integer encoding of cell identifiers.

    The mapping is fixed at training time; unseen cells map to the reserved
    code 0.  Ties in frequency are broken by cell id string order so the
    encoding is deterministic.
    """

    def __init__(self):
        self.mapping_ = None

    def fit(self, cell_ids):
        counts = Counter(cell_ids)
        ranked = sorted(counts, key=lambda c: (-counts[c], c))
        self.mapping_ = {c: i + 1 for i, c in enumerate(ranked)}
        return self

    def encode(self, cell_id):
        if self.mapping_ is None:
            raise RuntimeError("CellIdEncoder is not fitted")
        return self.mapping_.get(cell_id, UNKNOWN_CELL_CODE)


def feature_matrix(samples, payload_bytes, encoder):
    """Assemble the (n, 8) feature matrix for a list of ContextSamples.

    ``payload_bytes`` is a scalar or a per-sample array: payload is supplied
    per prediction call, it is not part of the stored context.
    """
    payload = np.broadcast_to(np.asarray(payload_bytes, dtype=float),
                              (len(samples),))
    rows = np.empty((len(samples), N_FEATURES))
    for i, s in enumerate(samples):
        rows[i] = (s.rsrp, s.rsrq, s.sinr, s.cqi, s.ta, s.velocity,
                   encoder.encode(s.cell_id), payload[i])
    return rows


def training_set(traces, payload_bytes=50000):
    """Build (encoder, X, y) from traces that carry measured data rates."""
    all_samples = [s for tr in traces for s in tr.samples
                   if s.measured_data_rate is not None]
    if not all_samples:
        raise ValueError("traces carry no measured data rates")
    encoder = CellIdEncoder().fit([s.cell_id for s in all_samples])
    X = feature_matrix(all_samples, payload_bytes, encoder)
    y = np.array([s.measured_data_rate for s in all_samples])
    return encoder, X, y

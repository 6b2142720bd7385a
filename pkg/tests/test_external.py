import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from mixlens.errors import AdapterConnectionError, PredictionError, ProtocolError
from mixlens.external import connect_external

STUB = Path(__file__).parent / "adapters" / "stub_adapter.py"


def stub_command(*flags: str) -> str:
    return " ".join([shlex.quote(sys.executable), shlex.quote(str(STUB)), *flags])


@pytest.fixture
def handle():
    h = connect_external(stub_command())
    yield h
    h.close()


class TestHandshake:
    def test_captures_classes_and_batch_limit(self, handle):
        assert handle.class_names == ["negative", "neutral", "positive"]
        assert handle.batch_limit == 8
        assert handle.kind == "external"
        assert handle.name == "stub"

    def test_invalid_handshake_line(self):
        with pytest.raises(ProtocolError):
            connect_external(stub_command("--bad-handshake"))

    def test_duplicate_class_list(self):
        with pytest.raises(ProtocolError):
            connect_external(stub_command("--dup-classes"))

    def test_unreachable_command(self):
        with pytest.raises(AdapterConnectionError):
            connect_external("/no/such/binary-anywhere")

    def test_handshake_timeout(self):
        # `cat` consumes the request and never answers
        with pytest.raises(AdapterConnectionError):
            connect_external("sleep 5", handshake_timeout=0.5)


class TestPredict:
    def test_rows_ordered_and_normalized(self, handle):
        rows = handle.predict_proba(["good good", "bad", "so so"])
        assert rows.shape == (3, 3)
        assert np.abs(rows.sum(axis=1) - 1.0).max() < 1e-6
        assert rows[0, 2] > rows[0, 0]  # "good good" leans positive
        assert rows[1, 0] > rows[1, 2]  # "bad" leans negative

    def test_batch_limit_enforced_client_side(self, handle):
        with pytest.raises(ValueError):
            handle.predict_proba(["x"] * 9)

    def test_predict_all_chunks(self, handle):
        texts = [f"text {i} good" if i % 2 else f"text {i} bad" for i in range(30)]
        rows = handle.predict_all(texts)
        assert rows.shape == (30, 3)
        direct = handle.predict_proba(texts[:8])
        assert np.array_equal(rows[:8], direct)

    def test_error_response_aborts_batch_with_indices(self):
        h = connect_external(stub_command("--fail-predict"))
        try:
            with pytest.raises(PredictionError) as err:
                h.predict_proba(["a", "b", "c"])
            assert err.value.batch_indices == [0, 1, 2]
        finally:
            h.close()

    def test_transport_death_is_prediction_error_with_indices(self):
        h = connect_external(stub_command("--die-on-predict"))
        with pytest.raises(PredictionError) as err:
            h.predict_proba(["a", "b"])
        assert err.value.batch_indices == [0, 1]

    def test_empty_batch(self, handle):
        rows = handle.predict_proba([])
        assert rows.shape == (0, 3)

    def test_concurrent_callers_are_serialized(self, handle):
        def query(i: int):
            return handle.predict_proba([f"good text {i}", "bad"])

        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(query, range(20)))
        for rows in results:
            assert rows.shape == (2, 3)
            assert np.abs(rows.sum(axis=1) - 1.0).max() < 1e-6


class TestShutdown:
    def test_clean_exit_zero(self):
        h = connect_external(stub_command())
        h.predict_proba(["good"])
        h.close()
        assert h._proc.returncode == 0

    def test_context_manager_closes(self):
        with connect_external(stub_command()) as h:
            h.predict_proba(["good"])
        assert h._proc.returncode == 0

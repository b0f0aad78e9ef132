import socket
import threading

import numpy as np
import pytest

from cvqkd import session, wire
from cvqkd.errors import ProtocolError
from cvqkd.pipeline import PipelineConfig, ledger_text, run_pipeline


def _run_session(config):
    sa, sb = socket.socketpair()
    res = {}

    def bob():
        with sb.makefile("rb") as r, sb.makefile("wb") as w:
            res["bob"] = session.run_bob(r, w)

    t = threading.Thread(target=bob)
    t.start()
    with sa.makefile("rb") as r, sa.makefile("wb") as w:
        res["alice"] = session.run_alice(r, w, config)
    t.join()
    sa.close()
    sb.close()
    return res["alice"], res["bob"]


CONFIG = PipelineConfig(loss=0.54, var_mod=4.0, n_symbols=50_000, n_bands=6,
                        seed=31)


@pytest.fixture(scope="module")
def completed_session():
    return _run_session(CONFIG)


def test_session_keys_agree(completed_session):
    alice, bob = completed_session
    assert alice.confirmed and bob.confirmed
    assert alice.key_bytes == bob.key_bytes
    assert len(alice.key_bytes) > 0


def test_session_matches_pipeline(completed_session):
    alice, _ = completed_session
    pres = run_pipeline(CONFIG)
    assert alice.key_bytes == pres.key_bytes


def test_transcript_audit_matches_ledger(completed_session):
    alice, bob = completed_session
    pres = run_pipeline(CONFIG)
    total = sum(r.leaked_bits for r in pres.records)
    for side in (alice, bob):
        audit = session.audit_transcript(side.transcript)
        assert audit["total_bits"] == total


def test_transcript_dump_load_roundtrip(tmp_path, completed_session):
    alice, _ = completed_session
    path = tmp_path / "transcript.log"
    session.dump_transcript(path, alice.transcript)
    back = session.load_transcript(path)
    assert len(back) == len(alice.transcript)
    for (d1, t1, b1), (d2, t2, b2) in zip(back, alice.transcript):
        assert (d1, t1, b1) == (d2, t2, b2)
    audit = session.audit_transcript(back)
    assert audit["total_bits"] == session.audit_transcript(
        alice.transcript
    )["total_bits"]


def test_bob_rejects_garbage():
    sa, sb = socket.socketpair()

    def bob():
        with sb.makefile("rb") as r, sb.makefile("wb") as w:
            with pytest.raises(ProtocolError):
                session.run_bob(r, w)

    t = threading.Thread(target=bob)
    t.start()
    sa.sendall(b"not a frame at all" * 10)
    sa.shutdown(socket.SHUT_WR)
    t.join(timeout=20)
    assert not t.is_alive()
    sa.close()
    sb.close()


def test_bob_aborts_on_unexpected_message():
    sa, sb = socket.socketpair()
    errors = []

    def bob():
        with sb.makefile("rb") as r, sb.makefile("wb") as w:
            try:
                session.run_bob(r, w)
            except ProtocolError as exc:
                errors.append(exc)

    t = threading.Thread(target=bob)
    t.start()
    # a well-formed frame of the wrong type mid-handshake
    sa.sendall(wire.encode_frame(wire.MsgType.BYE, wire.AUTH_TAG))
    t.join(timeout=20)
    assert not t.is_alive()
    assert errors
    sa.close()
    sb.close()

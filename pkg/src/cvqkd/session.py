"""Two-party networked protocol session.

The connect side plays the sender (Alice); the serve side hosts the
receiver (Bob) together with the channel simulator.  That colocation is a
simulation convenience: the SYMBOLS frame crosses a trust boundary into
the simulator only, and the receiver role consumes nothing from it — all
of Bob's knowledge of the sent values comes from the public ANNOUNCE and
REVEAL frames plus his simulated measurements.

Both parties derive every random choice from named streams under the
shared session seed, and all band decisions are driven by announced
quantities, so a session produces keys byte-identical to the in-process
pipeline run with the same configuration.

Every frame carries a reserved 16-byte authentication tag (all zeros
here) at the head of its payload, standing in for the authenticated
classical channel the protocol assumes.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import bands, channel, pipeline, privamp, reconcile, wire
from .errors import ProtocolAbort, ProtocolError, VerificationFailedError
from .rng import stream
from .wire import AUTH_TAG, MsgType


class Transport:
    """Framed, transcript-recording byte channel."""

    def __init__(self, reader, writer, transcript=None):
        self.reader = reader
        self.writer = writer
        self.transcript = transcript if transcript is not None else []

    def send(self, msg_type, payload=b""):
        body = AUTH_TAG + payload
        self.writer.write(wire.encode_frame(msg_type, body))
        self.writer.flush()
        self.transcript.append(("tx", MsgType(msg_type), body))

    def recv(self, *expected):
        msg_type, body = wire.read_frame(self.reader)
        self.transcript.append(("rx", MsgType(msg_type), body))
        if msg_type == MsgType.ABORT:
            raise ProtocolAbort(body[16:].decode("utf-8", "replace"))
        if expected and msg_type not in expected:
            self.abort(f"unexpected {MsgType(msg_type).name}")
            raise ProtocolError(
                f"expected {[MsgType(e).name for e in expected]}, "
                f"got {MsgType(msg_type).name}"
            )
        if body[:16] != AUTH_TAG:
            self.abort("bad auth tag")
            raise ProtocolError("bad auth tag")
        return msg_type, body[16:]

    def abort(self, reason):
        try:
            self.writer.write(wire.encode_frame(
                MsgType.ABORT, AUTH_TAG + reason.encode()
            ))
            self.writer.flush()
        except (OSError, ValueError):
            pass


@dataclass
class BandPlan:
    """The receiver's public banding announcement."""

    eta_x: float
    eta_p: float
    keep: np.ndarray          # bool over sifted positions
    band_idx: np.ndarray      # uint8 per kept point
    n_bands: int
    boundaries_x: np.ndarray
    boundaries_p: np.ndarray
    p_pred: dict              # (quad, band) -> predicted error
    repeat_ns: dict           # (quad, band) -> repeat length
    order: list               # (quad, band) processing order

    def pack(self):
        out = [struct.pack("<dd", self.eta_x, self.eta_p),
               wire.pack_bits(self.keep.astype(np.uint8)),
               struct.pack("<Q", len(self.band_idx)),
               self.band_idx.astype(np.uint8).tobytes(),
               struct.pack("<I", self.n_bands),
               wire.pack_floats(self.boundaries_x),
               wire.pack_floats(self.boundaries_p)]
        for quad in ("x", "p"):
            out.append(wire.pack_floats(
                [self.p_pred[(quad, k)] for k in range(self.n_bands)]
            ))
            out.append(bytes(
                self.repeat_ns[(quad, k)] for k in range(self.n_bands)
            ))
        out.append(bytes(
            b for quad, k in self.order for b in (quad == "p", k)
        ))
        return b"".join(out)

    @classmethod
    def unpack(cls, buf):
        eta_x, eta_p = struct.unpack_from("<dd", buf, 0)
        keep_u8, off = wire.unpack_bits(buf, 16)
        (n_kept,) = struct.unpack_from("<Q", buf, off)
        off += 8
        band_idx = np.frombuffer(buf, dtype=np.uint8, count=n_kept,
                                 offset=off).copy()
        off += n_kept
        (n_bands,) = struct.unpack_from("<I", buf, off)
        off += 4
        bx, off = wire.unpack_floats(buf, off)
        bp, off = wire.unpack_floats(buf, off)
        p_pred = {}
        repeat_ns = {}
        for quad in ("x", "p"):
            vals, off = wire.unpack_floats(buf, off)
            for k in range(n_bands):
                p_pred[(quad, k)] = float(vals[k])
            for k in range(n_bands):
                repeat_ns[(quad, k)] = buf[off + k]
            off += n_bands
        order = []
        for _ in range(2 * n_bands):
            order.append(("p" if buf[off] else "x", buf[off + 1]))
            off += 2
        return cls(eta_x, eta_p, keep_u8.astype(bool), band_idx, n_bands,
                   bx, bp, p_pred, repeat_ns, order)


@dataclass
class SessionResult:
    key_bits: np.ndarray
    key_bytes: bytes
    confirmed: bool
    records: list
    transcript: list
    report: pipeline.RunReport | None = None
    estimate: channel.ChannelEstimate | None = None


def _sift_layout(n_symbols, revealed_idx):
    """Shared sifted-position layout: x block then p block, revealed
    symbols excluded from each."""
    symbol_mask = np.ones(n_symbols, dtype=bool)
    symbol_mask[revealed_idx] = False
    return symbol_mask


def _make_records(plan, abs_v_a_kept, quad_kept, config):
    """Band records both parties derive identically from the plan."""
    est_like = _EtaPair(plan.eta_x, plan.eta_p)
    kept = bands.SiftedData(
        quad_kept, np.zeros(len(quad_kept), np.uint8),
        np.zeros(len(quad_kept), np.uint8), abs_v_a_kept,
        np.zeros(len(quad_kept)),
    )
    eve_bounds = pipeline.eve_band_bounds(
        kept, plan.band_idx, _NBands(plan.n_bands), est_like,
        config.doubled_exponent,
    )
    records = []
    for quad, k in plan.order:
        qi = 0 if quad == "x" else 1
        sel = (quad_kept == qi) & (plan.band_idx == k)
        rec = pipeline.BandRecord(
            quad, k, 0.0, plan.p_pred[(quad, k)], eve_bounds[(quad, k)],
            n_kept=int(np.count_nonzero(sel)),
        )
        rec.repeat_n = plan.repeat_ns[(quad, k)]
        records.append(rec)
    return records


@dataclass
class _EtaPair:
    eta_x: float
    eta_p: float

    def eta(self, quad):
        return self.eta_x if quad == "x" else self.eta_p


@dataclass
class _NBands:
    n_bands: int


class _RemoteOracle:
    """Parity-oracle proxy: forwards Cascade queries over the wire."""

    def __init__(self, transport):
        self.transport = transport
        self.disclosed_bits = 0

    def start(self, attempt, passes):
        self.transport.send(MsgType.CASCADE_REQ,
                            b"\x00" + struct.pack("<II", attempt, passes))
        self.transport.recv(MsgType.CASCADE_RESP)

    def parities(self, queries):
        body = [b"\x01", struct.pack("<Q", len(queries))]
        for pi, lo, hi in queries:
            body.append(struct.pack("<BQQ", pi, lo, hi))
        self.transport.send(MsgType.CASCADE_REQ, b"".join(body))
        _, payload = self.transport.recv(MsgType.CASCADE_RESP)
        bits, _ = wire.unpack_bits(payload)
        self.disclosed_bits += len(queries)
        return bits[: len(queries)]

    def hash64(self):
        self.transport.send(MsgType.CASCADE_REQ, b"\x02")
        _, payload = self.transport.recv(MsgType.CASCADE_RESP)
        self.disclosed_bits += reconcile.HASH_BITS
        return struct.unpack("<Q", payload)[0]

    def done(self):
        self.transport.send(MsgType.CASCADE_REQ, b"\x03\x01")
        self.transport.recv(MsgType.CASCADE_RESP)


def _serve_cascade(transport, oracle):
    """Answer Cascade queries until the querying side signals completion."""
    while True:
        _, payload = transport.recv(MsgType.CASCADE_REQ)
        kind = payload[0]
        if kind == 0:
            attempt, passes = struct.unpack_from("<II", payload, 1)
            oracle.start(attempt, passes)
            transport.send(MsgType.CASCADE_RESP)
        elif kind == 1:
            (count,) = struct.unpack_from("<Q", payload, 1)
            queries = [struct.unpack_from("<BQQ", payload, 9 + 17 * i)
                       for i in range(count)]
            bits = oracle.parities(queries)
            transport.send(MsgType.CASCADE_RESP, wire.pack_bits(bits))
        elif kind == 2:
            transport.send(MsgType.CASCADE_RESP,
                           struct.pack("<Q", oracle.hash64()))
        elif kind == 3:
            transport.send(MsgType.CASCADE_RESP)
            return bool(payload[1])
        else:
            transport.abort(f"bad cascade kind {kind}")
            raise ProtocolError(f"bad cascade kind {kind}")


def run_alice(reader, writer, config, transcript=None):
    """Sender role: generates symbols, announces magnitudes, serves Cascade
    parities, and produces the final key."""
    t = Transport(reader, writer, transcript)
    config.resolve_var_mod()
    seed = config.seed
    n = config.n_symbols
    params = config.channel_params()

    t.send(MsgType.HELLO, config.to_text().encode())
    _, echo = t.recv(MsgType.HELLO_ACK)
    if echo.decode() != config.to_text():
        t.abort("config mismatch")
        raise ProtocolError("peer did not accept the session configuration")

    symbols = channel.generate_symbols(n, params, seed)
    t.send(MsgType.SYMBOLS, wire.pack_floats(symbols.x_a)
           + wire.pack_floats(symbols.p_a))
    t.send(MsgType.ANNOUNCE_MAGNITUDES, wire.pack_floats(np.abs(symbols.x_a))
           + wire.pack_floats(np.abs(symbols.p_a)))

    idx = pipeline.reveal_indices(seed, n, config.reveal_fraction,
                                  config.min_reveal)
    t.send(MsgType.REVEAL_SUBSET, wire.pack_indices(idx)
           + wire.pack_floats(symbols.x_a[idx])
           + wire.pack_floats(symbols.p_a[idx]))

    _, payload = t.recv(MsgType.KEEP_MASK)
    plan = BandPlan.unpack(payload)

    symbol_mask = _sift_layout(n, idx)
    v_a = np.concatenate([symbols.x_a[symbol_mask],
                          symbols.p_a[symbol_mask]])
    quad_sift = np.repeat(np.array([0, 1], np.uint8),
                          int(symbol_mask.sum()))
    alice_bits = (v_a > 0).astype(np.uint8)
    keep = plan.keep
    if len(keep) != len(v_a):
        t.abort("keep mask length mismatch")
        raise ProtocolError("keep mask length mismatch")
    abs_kept = np.abs(v_a[keep])
    quad_kept = quad_sift[keep]
    bits_kept = alice_bits[keep]

    records = _make_records(plan, abs_kept, quad_kept, config)
    key_parts = _alice_band_loop(t, records, plan, quad_kept, bits_kept,
                                 config)
    alice_key = _finish_keys(records, key_parts, config)

    t.send(MsgType.PA_SEED, _pack_sizing(records, seed))

    confirm_seed = pipeline.confirm_seed_value(seed)
    t.send(MsgType.KEY_CONFIRM,
           wire.pack_bits(privamp.confirm_hash(alice_key, confirm_seed)))
    _, payload = t.recv(MsgType.KEY_CONFIRM)
    confirmed = bool(payload[0])
    t.send(MsgType.BYE)
    t.recv(MsgType.BYE)
    if not confirmed:
        raise ProtocolAbort("key confirmation failed")
    return SessionResult(alice_key, privamp.pack_key(alice_key), confirmed,
                         records, t.transcript)


def _alice_band_loop(t, records, plan, quad_kept, bits_kept, config):
    seed = config.seed
    key_parts = []
    for rec in records:
        qi = 0 if rec.quad == "x" else 1
        sel = (quad_kept == qi) & (plan.band_idx == rec.band)
        a_bits = bits_kept[sel]
        if rec.repeat_n > 1:
            rng = pipeline.ad_stream(seed, rec.quad, rec.band)
            c, masks = reconcile.alice_ad_masks(a_bits, rec.repeat_n, rng)
            t.send(MsgType.AD_MASKS, wire.pack_bits(masks))
            _, payload = t.recv(MsgType.AD_ACCEPT)
            accepted, _ = wire.unpack_bits(payload)
            dist_a = c[accepted[: len(c)].astype(bool)]
            rec.ad_mask_bits = int(len(masks))
        else:
            dist_a = a_bits.copy()
        rec.n_distilled = len(dist_a)
        rec.bob_error_ad = float(reconcile.ad_error(rec.p_pred,
                                                    rec.repeat_n))
        rec.eve_error_ad = float(reconcile.eve_ad_error(rec.eve_error,
                                                        rec.repeat_n))
        if rec.n_distilled > 0:
            oracle = reconcile.ParityOracle(
                dist_a,
                pipeline.cascade_stream_factory(seed, rec.quad, rec.band),
            )
            ok = _serve_cascade(t, oracle)
            if not ok:
                raise ProtocolAbort("peer reported Cascade failure")
            rec.cascade_bits = oracle.disclosed_bits
        rec.eve_error_ir = reconcile.eve_error_after_leak(
            rec.eve_error_ad, rec.cascade_bits, rec.n_distilled
        )
        key_parts.append(dist_a)
    return key_parts


def _finish_keys(records, band_bits, config):
    """Size and hash every band; returns the concatenated key bits."""
    pipeline.size_final_keys(records, config.security_bits)
    parts = []
    for rec, bits in zip(records, band_bits):
        if rec.key_bits == 0:
            continue
        pa_seed = pipeline.pa_seed_value(config.seed, rec.quad, rec.band)
        parts.append(privamp.toeplitz_hash(bits, rec.key_bits, pa_seed))
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def _pack_sizing(records, seed):
    out = [struct.pack("<Q", len(records))]
    for rec in records:
        out.append(struct.pack(
            "<BBQQ", rec.quad == "p", rec.band, rec.key_bits,
            pipeline.pa_seed_value(seed, rec.quad, rec.band),
        ))
    return b"".join(out)


def run_bob(reader, writer, transcript=None):
    """Serve side: channel simulator plus the receiver role.

    The configuration arrives in HELLO; the result carries the receiver's
    key and, as a simulator-side diagnostic, the full stage report
    computed with knowledge of the sent symbols.
    """
    t = Transport(reader, writer, transcript)
    _, payload = t.recv(MsgType.HELLO)
    config = pipeline.PipelineConfig.from_text(payload.decode())
    config.resolve_var_mod()
    t.send(MsgType.HELLO_ACK, config.to_text().encode())
    seed = config.seed
    n = config.n_symbols
    params = config.channel_params()

    # ---- channel simulator (sees the sent values; the receiver does not)
    _, payload = t.recv(MsgType.SYMBOLS)
    x_a, off = wire.unpack_floats(payload)
    p_a, _ = wire.unpack_floats(payload, off)
    sim_symbols = channel.SymbolBatch(x_a, p_a)
    meas, _ = channel.transmit_and_measure(sim_symbols, params, seed)

    # ---- receiver role: public announcements only from here on
    _, payload = t.recv(MsgType.ANNOUNCE_MAGNITUDES)
    abs_x, off = wire.unpack_floats(payload)
    abs_p, _ = wire.unpack_floats(payload, off)

    _, payload = t.recv(MsgType.REVEAL_SUBSET)
    idx, off = wire.unpack_indices(payload)
    rx_a, off = wire.unpack_floats(payload, off)
    rp_a, _ = wire.unpack_floats(payload, off)
    expected_idx = pipeline.reveal_indices(seed, n, config.reveal_fraction,
                                           config.min_reveal)
    if not np.array_equal(idx, expected_idx):
        t.abort("revealed indices do not match the derived subset")
        raise ProtocolError("revealed indices mismatch")
    est = channel.estimate_channel(
        channel.SymbolBatch(rx_a, rp_a),
        channel.MeasurementBatch(meas.x_b[idx], meas.p_b[idx]),
    )

    symbol_mask = _sift_layout(n, idx)
    n_sift_half = int(symbol_mask.sum())
    v_b = np.concatenate([meas.x_b[symbol_mask], meas.p_b[symbol_mask]])
    abs_v_a = np.concatenate([abs_x[symbol_mask], abs_p[symbol_mask]])
    quad_sift = np.repeat(np.array([0, 1], np.uint8), n_sift_half)
    bob_bits = (v_b > 0).astype(np.uint8)
    sifted_pub = bands.SiftedData(quad_sift, np.zeros_like(bob_bits),
                                  bob_bits, abs_v_a, v_b)

    plan, partition, keep = _receiver_plan(sifted_pub, est, config, seed)
    t.send(MsgType.KEEP_MASK, plan.pack())

    kept_pub = sifted_pub.subset(keep)
    records = _make_records(plan, kept_pub.abs_v_a, kept_pub.quad, config)
    key_parts = _bob_band_loop(t, records, plan, kept_pub, config)
    bob_key = _finish_keys(records, key_parts, config)

    _, payload = t.recv(MsgType.PA_SEED)
    _check_sizing(t, payload, records, seed)

    confirm_seed = pipeline.confirm_seed_value(seed)
    _, payload = t.recv(MsgType.KEY_CONFIRM)
    alice_hash, _ = wire.unpack_bits(payload)
    confirmed = (np.array_equal(
        alice_hash, privamp.confirm_hash(bob_key, confirm_seed)
    ) and len(bob_key) > 0)
    t.send(MsgType.KEY_CONFIRM, b"\x01" if confirmed else b"\x00")
    t.recv(MsgType.BYE)
    t.send(MsgType.BYE)
    if not confirmed:
        raise ProtocolAbort("key confirmation failed")

    report, est_full = _simulator_report(sim_symbols, meas, records, est,
                                         config)
    return SessionResult(bob_key, privamp.pack_key(bob_key), confirmed,
                         records, t.transcript, report, est_full)


def _receiver_plan(sifted_pub, est, config, seed):
    """Post-selection and banding from announced data, as a BandPlan."""
    eta_x, eta_p = est.eta("x"), est.eta("p")
    keep = bands.keep_mask(sifted_pub, eta_x, eta_p,
                           config.doubled_exponent)
    calib = sifted_pub.subset(keep)
    if config.holdout:
        n_sift = len(sifted_pub)
        cal_mask = np.zeros(n_sift, dtype=bool)
        cal_mask[stream(seed, "protocol", "holdout").choice(
            n_sift, size=n_sift // 10, replace=False)] = True
        calib = sifted_pub.subset(keep & cal_mask)
    partition = bands.build_partition(calib, eta_x, eta_p, config.n_bands)
    kept = sifted_pub.subset(keep)
    band_idx = partition.band_of(kept, eta_x, eta_p)
    p_pred = pipeline.predicted_band_errors(kept, band_idx, partition, est)
    repeat_ns = {
        key: reconcile.choose_repeat_n(p, config.ad_target, config.ad_cap)
        for key, p in p_pred.items()
    }
    order = pipeline.band_processing_order(p_pred, config.n_bands)
    plan = BandPlan(
        eta_x, eta_p, keep, band_idx.astype(np.uint8), config.n_bands,
        partition.boundaries["x"], partition.boundaries["p"],
        p_pred, repeat_ns, order,
    )
    return plan, partition, keep


def _bob_band_loop(t, records, plan, kept_pub, config):
    seed = config.seed
    key_parts = []
    for rec in records:
        qi = 0 if rec.quad == "x" else 1
        sel = (kept_pub.quad == qi) & (plan.band_idx == rec.band)
        b_bits = kept_pub.bob_bit[sel]
        if rec.repeat_n > 1:
            _, payload = t.recv(MsgType.AD_MASKS)
            masks, _ = wire.unpack_bits(payload)
            accepted, dist_b = reconcile.bob_ad_apply(b_bits, masks,
                                                      rec.repeat_n)
            t.send(MsgType.AD_ACCEPT, wire.pack_bits(accepted))
            rec.ad_mask_bits = int(len(masks))
        else:
            dist_b = b_bits.copy()
        rec.n_distilled = len(dist_b)
        rec.bob_error_ad = float(reconcile.ad_error(rec.p_pred,
                                                    rec.repeat_n))
        rec.eve_error_ad = float(reconcile.eve_ad_error(rec.eve_error,
                                                        rec.repeat_n))
        if rec.n_distilled > 0:
            beta_hat = max(rec.bob_error_ad, 1e-3)
            oracle = _RemoteOracle(t)
            try:
                result = reconcile.cascade_correct(
                    dist_b, oracle, beta_hat,
                    pipeline.cascade_stream_factory(seed, rec.quad,
                                                    rec.band),
                    passes=config.cascade_passes,
                )
            except VerificationFailedError:
                t.send(MsgType.CASCADE_REQ, b"\x03\x00")
                t.recv(MsgType.CASCADE_RESP)
                raise
            oracle.done()
            dist_b = result.bits
            rec.cascade_bits = result.leaked_bits
        rec.eve_error_ir = reconcile.eve_error_after_leak(
            rec.eve_error_ad, rec.cascade_bits, rec.n_distilled
        )
        key_parts.append(dist_b)
    return key_parts


def _check_sizing(t, payload, records, seed):
    (count,) = struct.unpack_from("<Q", payload, 0)
    if count != len(records):
        t.abort("sizing record count mismatch")
        raise ProtocolError("sizing record count mismatch")
    for i, rec in enumerate(records):
        is_p, band, key_bits, pa_seed = struct.unpack_from(
            "<BBQQ", payload, 8 + 18 * i
        )
        quad = "p" if is_p else "x"
        if (quad, band) != (rec.quad, rec.band) \
                or key_bits != rec.key_bits \
                or pa_seed != pipeline.pa_seed_value(seed, quad, band):
            t.abort("privacy-amplification sizing mismatch")
            raise ProtocolError(
                f"sizing mismatch on band {quad}/{band}: "
                f"peer {key_bits}, local {rec.key_bits}"
            )


def _simulator_report(sim_symbols, meas, records, est, config):
    """Diagnostic stage report, computed with simulator-side knowledge."""
    import time as _time

    idx = pipeline.reveal_indices(config.seed, config.n_symbols,
                                  config.reveal_fraction, config.min_reveal)
    symbol_mask = _sift_layout(config.n_symbols, idx)
    sifted_all = bands.sift(sim_symbols, meas)
    sifted = sifted_all.subset(np.concatenate([symbol_mask, symbol_mask]))
    ps = bands.postselect(sifted, est, config.n_bands,
                          config.doubled_exponent)
    band_idx = ps.partition.band_of(ps.kept, est.eta("x"), est.eta("p"))
    for rec in records:
        qi = 0 if rec.quad == "x" else 1
        rec.p_emp = float(ps.partition.p_emp[qi, rec.band])
    _ = band_idx
    report = pipeline.build_report(config, sifted, ps, records, est,
                                   _time.monotonic())
    return report, est


def dump_transcript(path, transcript):
    """One frame per line: direction, message name, payload hex."""
    with open(path, "w") as fh:
        for direction, msg_type, body in transcript:
            fh.write(f"{direction} {msg_type.name} {body.hex()}\n")


def load_transcript(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            direction, name, hexpayload = line.split(" ", 2)
            out.append((direction, MsgType[name], bytes.fromhex(hexpayload)))
    return out


def audit_transcript(transcript):
    """Tally the publicly disclosed key-material bits in a transcript.

    Counts repeat-code mask bits, Cascade parity and verification-hash
    bits, and the final confirmation hash; the totals must match the
    per-band leakage ledger of the run that produced the transcript.
    """
    ad_mask_bits = 0
    parity_bits = 0
    hash_bits = 0
    confirm_bits = 0
    pending_kind = None
    key_confirms = 0
    for _, msg_type, body in transcript:
        payload = body[16:]
        if msg_type == MsgType.AD_MASKS:
            (count,) = struct.unpack_from("<Q", payload, 0)
            ad_mask_bits += count
        elif msg_type == MsgType.CASCADE_REQ:
            pending_kind = payload[0]
            if pending_kind == 1:
                (parity_bits_here,) = struct.unpack_from("<Q", payload, 1)
                parity_bits += parity_bits_here
        elif msg_type == MsgType.CASCADE_RESP:
            if pending_kind == 2:
                hash_bits += reconcile.HASH_BITS
            pending_kind = None
        elif msg_type == MsgType.KEY_CONFIRM:
            if key_confirms == 0:
                confirm_bits += privamp.CONFIRM_BITS
            key_confirms += 1
    total = ad_mask_bits + parity_bits + hash_bits + confirm_bits
    return {
        "ad_mask_bits": int(ad_mask_bits),
        "cascade_parity_bits": int(parity_bits),
        "cascade_hash_bits": int(hash_bits),
        "confirm_bits": int(confirm_bits),
        "total_bits": int(total),
    }

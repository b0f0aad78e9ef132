"""End-to-end in-process pipeline and the stage logic shared with the
two-party session.

Every random draw comes from a stream named under the master seed (see
``rng``), so a networked session with the same seed reproduces this
pipeline bit for bit.  Stage accounting follows the protocol order: raw,
post-selected, advantage-distilled, reconciled, amplified.

Rate basis: 17 MHz symbols/s with two raw bits per symbol.  The stage
report's net-information column is h(p_Eve) - h(p_Bob) of each stage's
pooled error rates: the per-bit information advantage at that point in
the pipeline.  Banded per-symbol net information (the post-selection
target function) is reported separately by the post-selection step.
"""

import time
from dataclasses import dataclass, fields

import numpy as np

from . import bands, channel, privamp, reconcile, security
from .errors import InvalidConfigError, NumericalFailureError
from .rng import stream

STAGES = ("raw", "post_selected", "advantage_distilled", "reconciled",
          "amplified")


@dataclass
class PipelineConfig:
    loss: float = 0.54
    var_mod: float | None = None   # None optimizes at the given loss
    n_symbols: int = 100_000
    n_bands: int = 10
    seed: int = 1
    security_bits: int = 5
    reveal_fraction: float = 0.05
    min_reveal: int = 2000
    cascade_passes: int = 4
    ad_target: float = 0.11
    ad_cap: int = 8
    doubled_exponent: bool = False
    holdout: bool = False
    symbol_rate: float = 17e6

    def __post_init__(self):
        if not 0.0 <= self.loss < 1.0:
            raise InvalidConfigError(f"loss={self.loss} outside [0, 1)")
        if self.n_symbols < 10_000:
            raise InvalidConfigError("need at least 10^4 symbols")
        if self.n_bands < 1:
            raise InvalidConfigError("n_bands must be >= 1")
        if self.var_mod is not None and self.var_mod <= 0.0:
            raise InvalidConfigError(f"var_mod={self.var_mod} must be > 0")

    def resolve_var_mod(self):
        """Fill in the optimizing modulation variance if left unset."""
        if self.var_mod is None:
            self.var_mod = security.optimal_modulation_variance(
                1.0 - self.loss
            )
        return self.var_mod

    def channel_params(self):
        return channel.ChannelParams.from_loss(self.loss,
                                               self.resolve_var_mod())

    def to_text(self):
        out = []
        for f in fields(self):
            val = getattr(self, f.name)
            out.append(f"{f.name}={'' if val is None else val}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text):
        kwargs = {}
        casts = {f.name: f for f in fields(cls)}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, val = line.split("=", 1)
            key = key.strip()
            val = val.strip()
            if key not in casts:
                raise InvalidConfigError(f"unknown config key {key}")
            if val == "":
                kwargs[key] = None
            elif key in ("n_symbols", "n_bands", "seed", "security_bits",
                         "min_reveal", "cascade_passes", "ad_cap"):
                kwargs[key] = int(float(val))
            elif key in ("doubled_exponent", "holdout"):
                kwargs[key] = val.lower() in ("1", "true", "yes")
            else:
                kwargs[key] = float(val)
        return cls(**kwargs)


@dataclass
class BandRecord:
    """Everything tracked about one banded information channel."""

    quad: str
    band: int
    p_emp: float                # empirical error rate (diagnostic)
    p_pred: float               # model-predicted rate; drives all decisions
    eve_error: float            # tracked bound, updated per stage
    repeat_n: int = 1
    n_kept: int = 0
    n_distilled: int = 0
    ad_mask_bits: int = 0
    cascade_bits: int = 0
    confirm_bits: int = 0
    bob_error_ad: float = 0.0   # predicted residual after distillation
    eve_error_ad: float = 0.0
    eve_error_ir: float = 0.0
    key_bits: int = 0

    @property
    def leaked_bits(self):
        return self.ad_mask_bits + self.cascade_bits + self.confirm_bits


@dataclass
class StageRow:
    stage: str
    bits_per_second: float
    p_bob: float
    p_eve: float
    delta_i: float


@dataclass
class RunReport:
    rows: list
    config_text: str
    seed: int
    wall_seconds: float

    def render(self):
        lines = [
            f"{'stage':<22}{'rate (bits/s)':>16}{'P Bob (%)':>12}"
            f"{'P Eve (%)':>12}{'dI (bits)':>12}"
        ]
        for row in self.rows:
            lines.append(
                f"{row.stage:<22}{row.bits_per_second:>16.4g}"
                f"{100 * row.p_bob:>12.2f}{100 * row.p_eve:>12.2f}"
                f"{row.delta_i:>12.4f}"
            )
        return "\n".join(lines)


@dataclass
class PipelineResult:
    report: RunReport
    records: list
    estimate: channel.ChannelEstimate
    gaussianity: list
    postselection: bands.PostselectResult
    alice_key: np.ndarray
    bob_key: np.ndarray
    key_bytes: bytes
    confirmed: bool
    sifted_kept: bands.SiftedData
    band_order: list


def reveal_indices(seed, n_symbols, reveal_fraction, min_reveal):
    k = min(n_symbols // 2, max(min_reveal, int(reveal_fraction * n_symbols)))
    rng = stream(seed, "protocol", "reveal")
    return np.sort(rng.choice(n_symbols, size=k, replace=False))


def predicted_band_errors(sifted_kept, band_idx, partition, est):
    """Model-predicted error rate per band.

    The mean of the pointwise sign-flip probability over the band's kept
    points.  It depends only on announced magnitudes, the receiver's own
    measurements and the channel estimate, so the receiving party can
    compute it without reference bits and announce it; this drives the
    repeat-code length and Cascade block sizing in both run modes.
    """
    u = bands.band_statistic(sifted_kept, est.eta("x"), est.eta("p"))
    pu = security.error_probability_u(u)
    out = {}
    for qi, quad in enumerate(("x", "p")):
        sel = sifted_kept.quad == qi
        vals_q = pu[sel]
        bq = band_idx[sel]
        for k in range(partition.n_bands):
            vals = vals_q[bq == k]
            out[(quad, k)] = float(vals.mean()) if len(vals) else 0.0
    return out


def band_processing_order(p_pred, n_bands):
    """(quad, band) pairs from lowest to highest predicted error."""
    entries = []
    for qi, quad in enumerate(("x", "p")):
        for k in range(n_bands):
            entries.append((p_pred[(quad, k)], qi, k, quad))
    entries.sort()
    return [(quad, k) for _, qi, k, quad in entries]


def band_bits(sifted_kept, band_idx, quad, band):
    qi = 0 if quad == "x" else 1
    sel = (sifted_kept.quad == qi) & (band_idx == band)
    return sifted_kept.alice_bit[sel], sifted_kept.bob_bit[sel]


def eve_band_bounds(sifted_kept, band_idx, partition, est, doubled_exponent):
    """Per-band information-equivalent Eve error bound on the kept points.

    The band's mean of Eve's information bound is converted to the error
    probability of a binary channel with that capacity (her
    modulation-averaged knowledge expressed as a single error rate).
    """
    out = {}
    for qi, quad in enumerate(("x", "p")):
        eta = est.eta(quad)
        sel = sifted_kept.quad == qi
        iae = security.eve_information_quadrature(
            sifted_kept.abs_v_a[sel], eta, doubled_exponent
        )
        bq = band_idx[sel]
        for k in range(partition.n_bands):
            vals = iae[bq == k]
            mean_iae = float(vals.mean()) if len(vals) else 0.0
            out[(quad, k)] = float(
                security.inverse_binary_entropy(1.0 - min(mean_iae, 1.0))
            )
    return out


def ad_stream(seed, quad, band):
    return stream(seed, "protocol", "ad", quad, band)


def cascade_stream_factory(seed, quad, band):
    return lambda attempt: stream(seed, "protocol", "cascade", quad, band,
                                  attempt)


def pa_seed_value(seed, quad, band):
    return int(stream(seed, "protocol", "pa", quad, band).integers(1 << 62))


def confirm_seed_value(seed):
    return int(stream(seed, "protocol", "confirm").integers(1 << 62))


def size_final_keys(records, security_bits):
    """Reserve the confirm-hash disclosure, then size every band.

    The sizing input is Eve's post-distillation error bound (mask leakage
    is already folded into it by the repeat-code update) and the band's
    Cascade leakage.
    """
    if records:
        largest = max(records, key=lambda rec: rec.n_distilled)
        largest.confirm_bits += privamp.CONFIRM_BITS
    for rec in records:
        rec.key_bits = privamp.final_key_length(
            rec.n_distilled, rec.eve_error_ad,
            rec.cascade_bits + rec.confirm_bits, security_bits,
        )
    return records


def run_pipeline(config):
    """Full in-process run; produces keys for both parties plus the stage
    report and the per-band ledger."""
    t0 = time.monotonic()
    config.resolve_var_mod()
    params = config.channel_params()
    seed = config.seed
    n = config.n_symbols

    symbols = channel.generate_symbols(n, params, seed)
    meas, _ = channel.transmit_and_measure(symbols, params, seed)

    # parameter estimation on a revealed subset, excluded from key material
    idx = reveal_indices(seed, n, config.reveal_fraction, config.min_reveal)
    revealed_syms = channel.SymbolBatch(symbols.x_a[idx], symbols.p_a[idx])
    revealed_meas = channel.MeasurementBatch(meas.x_b[idx], meas.p_b[idx])
    est = channel.estimate_channel(revealed_syms, revealed_meas)
    gauss = []
    for label, values in (("x_a_revealed", revealed_syms.x_a),
                          ("p_a_revealed", revealed_syms.p_a),
                          ("x_b", meas.x_b), ("p_b", meas.p_b)):
        sample = values if len(values) <= 100_000 else values[:100_000]
        gauss.append((label, channel.gaussianity_check(sample)))

    sifted_all = bands.sift(symbols, meas)
    symbol_mask = np.ones(n, dtype=bool)
    symbol_mask[idx] = False
    sifted = sifted_all.subset(np.concatenate([symbol_mask, symbol_mask]))

    calib_mask = None
    if config.holdout:
        n_sift = len(sifted)
        calib_mask = np.zeros(n_sift, dtype=bool)
        calib_mask[stream(seed, "protocol", "holdout").choice(
            n_sift, size=n_sift // 10, replace=False)] = True

    ps = bands.postselect(sifted, est, config.n_bands,
                          config.doubled_exponent,
                          calibration_mask=calib_mask)
    partition = ps.partition
    kept = ps.kept
    band_idx = partition.band_of(kept, est.eta("x"), est.eta("p"))
    eve_bounds = eve_band_bounds(kept, band_idx, partition, est,
                                 config.doubled_exponent)
    p_pred = predicted_band_errors(kept, band_idx, partition, est)

    order = band_processing_order(p_pred, partition.n_bands)
    records = []
    alice_parts = []
    bob_parts = []
    for quad, k in order:
        a_bits, b_bits = band_bits(kept, band_idx, quad, k)
        qi = 0 if quad == "x" else 1
        rec = BandRecord(quad, k, float(partition.p_emp[qi, k]),
                         p_pred[(quad, k)], eve_bounds[(quad, k)],
                         n_kept=len(a_bits))
        rec.repeat_n = reconcile.choose_repeat_n(rec.p_pred, config.ad_target,
                                                 config.ad_cap)
        if rec.repeat_n == 1:
            dist_a, dist_b = a_bits.copy(), b_bits.copy()
        else:
            ad = reconcile.advantage_distill(
                a_bits, b_bits, rec.repeat_n, ad_stream(seed, quad, k)
            )
            dist_a, dist_b = ad.alice_bits, ad.bob_bits
            rec.ad_mask_bits = ad.leaked_bits
        rec.n_distilled = len(dist_a)
        rec.bob_error_ad = float(reconcile.ad_error(rec.p_pred, rec.repeat_n))
        rec.eve_error_ad = float(reconcile.eve_ad_error(rec.eve_error,
                                                        rec.repeat_n))
        if rec.n_distilled > 0:
            beta_hat = max(rec.bob_error_ad, 1e-3)
            result, _oracle = reconcile.cascade(
                dist_a, dist_b, beta_hat,
                cascade_stream_factory(seed, quad, k),
                passes=config.cascade_passes,
            )
            dist_b = result.bits
            rec.cascade_bits = result.leaked_bits
        rec.eve_error_ir = reconcile.eve_error_after_leak(
            rec.eve_error_ad, rec.cascade_bits, rec.n_distilled
        )
        records.append(rec)
        alice_parts.append((quad, k, dist_a))
        bob_parts.append((quad, k, dist_b))

    size_final_keys(records, config.security_bits)

    alice_key_parts = []
    bob_key_parts = []
    for rec, (_, _, a_bits), (_, _, b_bits) in zip(records, alice_parts,
                                                   bob_parts):
        if rec.key_bits == 0:
            continue
        pa_seed = pa_seed_value(seed, rec.quad, rec.band)
        alice_key_parts.append(
            privamp.toeplitz_hash(a_bits, rec.key_bits, pa_seed)
        )
        bob_key_parts.append(
            privamp.toeplitz_hash(b_bits, rec.key_bits, pa_seed)
        )
    alice_key = np.concatenate(alice_key_parts) if alice_key_parts else \
        np.zeros(0, dtype=np.uint8)
    bob_key = np.concatenate(bob_key_parts) if bob_key_parts else \
        np.zeros(0, dtype=np.uint8)

    confirmed = privamp.key_confirm(alice_key, bob_key, confirm_seed_value(seed))

    report = build_report(config, sifted, ps, records, est, t0)
    return PipelineResult(
        report, records, est, gauss, ps, alice_key, bob_key,
        privamp.pack_key(bob_key), confirmed, kept, order,
    )


def _h(p):
    return float(security.binary_entropy(p))


def build_report(config, sifted, ps, records, est, t0):
    """Stage table in the protocol's processing order.

    Each row's net information is h(p_Eve) - h(p_Bob) of the stage's
    pooled error rates, i.e. bits of advantage per bit surviving that
    stage; Eve's rates are tracked bounds in her favor.
    """
    n_symbols = config.n_symbols
    symbol_rate = config.symbol_rate
    raw_rate = 2.0 * symbol_rate

    raw_flip = float(np.mean(sifted.alice_bit != sifted.bob_bit))
    eve_raw = float(np.mean(np.concatenate([
        security.helstrom_error(security.eve_overlap(
            sifted.abs_v_a[sifted.quad == qi], est.eta(quad),
            config.doubled_exponent))
        for qi, quad in ((0, "x"), (1, "p"))
    ])))
    rows = [StageRow("raw", raw_rate, raw_flip, eve_raw,
                     _h(eve_raw) - _h(raw_flip))]

    kept = ps.kept
    n_kept = len(kept)
    post_rate = raw_rate * n_kept / len(sifted)
    kept_flip = float(np.mean(kept.alice_bit != kept.bob_bit)) if n_kept else 0.0
    eve_post = float(np.mean(np.concatenate([
        security.helstrom_error(security.eve_overlap(
            kept.abs_v_a[kept.quad == qi], est.eta(quad),
            config.doubled_exponent))
        for qi, quad in ((0, "x"), (1, "p"))
    ]))) if n_kept else 0.5
    rows.append(StageRow("post_selected", post_rate, kept_flip, eve_post,
                         _h(eve_post) - _h(kept_flip)))

    m_total = sum(rec.n_distilled for rec in records)
    if m_total > 0:
        w = np.array([rec.n_distilled / m_total for rec in records])
        bob_ad = float(np.sum(w * np.array([r.bob_error_ad for r in records])))
        eve_ad = float(np.sum(w * np.array([r.eve_error_ad for r in records])))
        eve_ir = float(np.sum(w * np.array([r.eve_error_ir for r in records])))
        ad_rate = symbol_rate * m_total / n_symbols
        rows.append(StageRow("advantage_distilled", ad_rate, bob_ad, eve_ad,
                             _h(eve_ad) - _h(bob_ad)))
        rows.append(StageRow("reconciled", ad_rate, 0.0, eve_ir, _h(eve_ir)))
    else:
        rows.append(StageRow("advantage_distilled", 0.0, 0.0, 0.0, 0.0))
        rows.append(StageRow("reconciled", 0.0, 0.0, 0.0, 0.0))

    key_total = sum(rec.key_bits for rec in records)
    rows.append(StageRow("amplified", symbol_rate * key_total / n_symbols,
                         0.0, 0.5, 1.0 if key_total else 0.0))

    _check_rate_arithmetic(rows)
    return RunReport(rows, config.to_text(), config.seed,
                     time.monotonic() - t0)


def _check_rate_arithmetic(rows):
    """Each stage's rate must be the previous one scaled by a survival
    fraction in [0, 1]."""
    for prev, cur in zip(rows, rows[1:]):
        if cur.bits_per_second > prev.bits_per_second * (1.0 + 1e-12):
            raise NumericalFailureError(
                f"stage {cur.stage} rate {cur.bits_per_second} exceeds "
                f"previous stage rate {prev.bits_per_second}"
            )


def ledger_text(records):
    """key=value dump of the per-band ledger."""
    lines = []
    for rec in records:
        prefix = f"band.{rec.quad}.{rec.band}"
        for name in ("p_emp", "p_pred", "repeat_n", "n_kept", "n_distilled",
                     "ad_mask_bits", "cascade_bits", "confirm_bits",
                     "bob_error_ad", "eve_error", "eve_error_ad",
                     "eve_error_ir", "key_bits"):
            lines.append(f"{prefix}.{name}={getattr(rec, name)}")
    lines.append(f"total.leaked_bits={sum(r.leaked_bits for r in records)}")
    lines.append(f"total.key_bits={sum(r.key_bits for r in records)}")
    return "\n".join(lines) + "\n"

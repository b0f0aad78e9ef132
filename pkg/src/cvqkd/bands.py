"""Sifting, banded information channels, and post-selection.

After Alice announces the magnitudes |v_a|, each quadrature of each symbol
becomes one candidate key bit: the sign of v_a on Alice's side and the sign
of v_b on Bob's.  Bits are partitioned into equal-count bands of the
statistic u = |v_a * v_b| * sqrt(2 * eta) (the flip probability is a
function of u alone), and Bob keeps only the points whose net information
density is positive.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, InvalidConfigError
from . import security


@dataclass
class SiftedData:
    """Per-bit sifted records, x-quadrature block first, then p.

    ``alice_bit`` is private to Alice; Bob's post-selection decision uses
    only ``abs_v_a`` and ``v_b``.
    """

    quad: np.ndarray      # uint8, 0 = x, 1 = p
    alice_bit: np.ndarray  # uint8
    bob_bit: np.ndarray    # uint8
    abs_v_a: np.ndarray
    v_b: np.ndarray

    def __len__(self):
        return len(self.quad)

    def subset(self, mask):
        return SiftedData(
            self.quad[mask], self.alice_bit[mask], self.bob_bit[mask],
            self.abs_v_a[mask], self.v_b[mask],
        )


def sift(symbols, measurements):
    """Turn aligned symbol/measurement batches into sign bits with attached
    magnitudes.  Two bits per symbol, one per quadrature."""
    if len(symbols) != len(measurements):
        raise InvalidConfigError(
            f"length mismatch: {len(symbols)} symbols, "
            f"{len(measurements)} measurements"
        )
    quads = []
    for qi, quad in enumerate(("x", "p")):
        va = symbols.value(quad)
        vb = measurements.value(quad)
        quads.append((
            np.full(len(va), qi, dtype=np.uint8),
            (va > 0).astype(np.uint8),
            (vb > 0).astype(np.uint8),
            np.abs(va),
            vb,
        ))
    return SiftedData(*[np.concatenate(cols) for cols in zip(*quads)])


def band_statistic(sifted, eta_x, eta_p):
    """u = |v_a * v_b| * sqrt(2 * eta) per sifted bit."""
    eta = np.where(sifted.quad == 0, eta_x, eta_p)
    return np.abs(sifted.abs_v_a * sifted.v_b) * np.sqrt(2.0 * eta)


def keep_mask(sifted, eta_x, eta_p, doubled_exponent=False):
    """Bob's post-selection decision: net information density > 0.

    Uses only information available to Bob (announced magnitudes, his own
    outcomes, and the estimated transmissions).
    """
    mask = np.empty(len(sifted), dtype=bool)
    for qi, eta in ((0, eta_x), (1, eta_p)):
        sel = sifted.quad == qi
        di = security.pointwise_net_information(
            sifted.abs_v_a[sel], sifted.v_b[sel], eta, doubled_exponent
        )
        mask[sel] = di > 0.0
    return mask


MIN_POINTS_PER_BAND = 100


@dataclass
class BicPartition:
    """Equal-count bands of the statistic u, per quadrature.

    ``boundaries[quad]`` ascends from 0 to inf in u.  Band index 0 is the
    lowest-error band (the topmost u slice); index n_bands - 1 the highest.
    Stats arrays have shape (2, n_bands) indexed (quadrature, band).
    """

    n_bands: int
    boundaries: dict
    n_good: np.ndarray
    n_error: np.ndarray

    @property
    def p_emp(self):
        tot = self.n_good + self.n_error
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(tot > 0, self.n_error / np.maximum(tot, 1), 0.0)
        return p

    def band_of(self, sifted, eta_x, eta_p):
        """Band index per sifted bit (0 = lowest error)."""
        u = band_statistic(sifted, eta_x, eta_p)
        out = np.empty(len(sifted), dtype=np.int64)
        for qi, quad in enumerate(("x", "p")):
            sel = sifted.quad == qi
            edges = self.boundaries[quad][1:-1]
            raw = np.searchsorted(edges, u[sel], side="right")
            out[sel] = self.n_bands - 1 - raw
        return out

    def weights(self, qi):
        counts = self.n_good[qi] + self.n_error[qi]
        tot = counts.sum()
        return counts / tot if tot > 0 else counts


def build_partition(sifted, eta_x, eta_p, n_bands=10):
    """Quantile-band the sifted bits so each band holds an equal count (+-1)
    per quadrature, and tally good/error counts per band."""
    if n_bands < 1:
        raise InvalidConfigError(f"n_bands={n_bands} must be >= 1")
    u = band_statistic(sifted, eta_x, eta_p)
    errors = sifted.alice_bit != sifted.bob_bit
    boundaries = {}
    n_good = np.zeros((2, n_bands))
    n_error = np.zeros((2, n_bands))
    for qi, quad in enumerate(("x", "p")):
        sel = sifted.quad == qi
        uq = u[sel]
        if len(uq) < n_bands * MIN_POINTS_PER_BAND:
            raise InsufficientDataError(
                f"quadrature {quad}: {len(uq)} points < "
                f"{n_bands * MIN_POINTS_PER_BAND} required for {n_bands} bands"
            )
        qs = np.quantile(uq, np.linspace(0.0, 1.0, n_bands + 1)[1:-1])
        edges = np.concatenate([[0.0], qs, [np.inf]])
        if np.any(np.diff(edges[:-1]) < 0):
            raise InvalidConfigError("band boundaries not increasing")
        boundaries[quad] = edges
        raw = np.searchsorted(edges[1:-1], uq, side="right")
        band = n_bands - 1 - raw
        err_q = errors[sel]
        for k in range(n_bands):
            in_k = band == k
            n_error[qi, k] = np.count_nonzero(err_q[in_k])
            n_good[qi, k] = np.count_nonzero(in_k) - n_error[qi, k]
    return BicPartition(n_bands, boundaries, n_good, n_error)


@dataclass
class PostselectResult:
    mask: np.ndarray
    kept: SiftedData
    partition: BicPartition
    report_pre: security.InfoReport
    report_post: security.InfoReport
    keep_fraction: float


def postselect(sifted, params, n_bands=10, doubled_exponent=False,
               calibration_mask=None, per_band=False):
    """Post-select the sifted bits and report pre/post net information.

    ``params`` may be a ``ChannelParams`` or a ``ChannelEstimate`` (anything
    with eta()/var_mod()).  Net information is reported in bits per symbol
    (kept contributions divided by the number of symbols).  By default the
    partition quantiles are computed on the kept data itself; pass a
    ``calibration_mask`` to compute them on a disjoint subset instead.
    ``per_band`` switches to whole-band keep/drop decisions (keep a band iff
    its mean net information is positive) instead of pointwise selection.
    """
    eta_x, eta_p = params.eta("x"), params.eta("p")
    n_symbols = len(sifted) / 2.0

    mask = keep_mask(sifted, eta_x, eta_p, doubled_exponent)

    calib = sifted.subset(mask & calibration_mask) if calibration_mask is not None \
        else sifted.subset(mask)
    partition = build_partition(calib, eta_x, eta_p, n_bands)

    if per_band:
        report_probe = _empirical_report(
            sifted.subset(mask), partition, params, n_symbols, doubled_exponent
        )
        good_bands = {(row[1], row[0]) for row in report_probe.per_bic
                      if row[4] > 0.0}
        band_idx = partition.band_of(sifted, eta_x, eta_p)
        quad_name = np.where(sifted.quad == 0, "x", "p")
        in_good = np.array([
            (q, b) in good_bands for q, b in zip(quad_name, band_idx)
        ])
        mask = mask & in_good

    kept = sifted.subset(mask)
    report_post = _empirical_report(kept, partition, params, n_symbols,
                                    doubled_exponent)
    report_pre = _raw_report(sifted, params, n_bands, n_symbols,
                             doubled_exponent)
    return PostselectResult(mask, kept, partition, report_pre, report_post,
                            float(np.count_nonzero(mask)) / len(sifted))


def _empirical_report(kept, partition, params, n_symbols, doubled_exponent):
    """Per-symbol net information of a kept dataset under a partition.

    Bob's term is the banded capacity at the empirical error rates; Eve's is
    the empirical mean of her bound over the kept points (the Monte-Carlo
    estimate of the band integral in the net-information formula).
    """
    eta_x, eta_p = params.eta("x"), params.eta("p")
    band_idx = partition.band_of(kept, eta_x, eta_p)
    errors = kept.alice_bit != kept.bob_bit
    per_bic = []
    i_ab = 0.0
    i_ae = 0.0
    for qi, quad in enumerate(("x", "p")):
        sel = kept.quad == qi
        eta = eta_x if qi == 0 else eta_p
        iae_vals = security.eve_information_quadrature(
            kept.abs_v_a[sel], eta, doubled_exponent
        )
        bq = band_idx[sel]
        eq = errors[sel]
        for k in range(partition.n_bands):
            in_k = bq == k
            cnt = np.count_nonzero(in_k)
            if cnt == 0:
                per_bic.append((k, quad, 0.0, 0.0, 0.0))
                continue
            p_emp = np.count_nonzero(eq[in_k]) / cnt
            ab_k = cnt / n_symbols * float(security.channel_capacity(p_emp))
            ae_k = float(np.sum(iae_vals[in_k])) / n_symbols
            per_bic.append((k, quad, ab_k, ae_k, ab_k - ae_k))
            i_ab += ab_k
            i_ae += ae_k
    return security.InfoReport(i_ab, i_ae, i_ab - i_ae, per_bic)


def _raw_report(sifted, params, n_bands, n_symbols, doubled_exponent):
    """Net information of the full (un-post-selected) dataset."""
    partition = build_partition(sifted, params.eta("x"), params.eta("p"),
                                n_bands)
    return _empirical_report(sifted, partition, params, n_symbols,
                             doubled_exponent)


def write_kept_csv(path, kept, band_idx):
    """Audit export of the kept bits."""
    with open(path, "w") as fh:
        fh.write("quadrature,band,alice_bit,bob_bit,abs_v_a,v_b\n")
        for i in range(len(kept)):
            fh.write(
                "%s,%d,%d,%d,%.17g,%.17g\n"
                % ("xp"[kept.quad[i]], band_idx[i], kept.alice_bit[i],
                   kept.bob_bit[i], kept.abs_v_a[i], kept.v_b[i])
            )

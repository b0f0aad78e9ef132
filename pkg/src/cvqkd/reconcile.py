"""Advantage distillation and Cascade error correction.

Both protocols are expressed through a parity/mask oracle so the same code
drives the in-process pipeline (local oracle) and the networked session
(remote oracle); the disclosed-bit ledger is identical either way.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, VerificationFailedError

CASCADE_PASSES = 4
CASCADE_BLOCK_FACTOR = 0.73
HASH_BITS = 64

# x^64 + x^4 + x^3 + x + 1, the usual degree-64 GF(2) reduction polynomial.
_GF64_POLY = (1 << 64) | 0b11011


def ad_error(beta, n):
    """Residual error rate of accepted n-bit repeat blocks."""
    beta = np.asarray(beta, dtype=float)
    bn = beta**n
    gn = (1.0 - beta) ** n
    with np.errstate(invalid="ignore"):
        out = np.where(bn + gn > 0.0, bn / np.maximum(bn + gn, 1e-300), 0.0)
    return out


def eve_ad_error(eps, n):
    """Eavesdropper's block error after n-bit repeat distillation.

    She sees n independent noisy looks at the block bit (her per-bit error
    eps) and decides by maximum likelihood; unlike the receiver she cannot
    condition on block acceptance, so her error is the n-look majority
    error, not the accepted-block formula.
    """
    eps = np.asarray(eps, dtype=float)
    total = np.zeros_like(eps)
    for k in range(int(n) + 1):
        a = eps**k * (1.0 - eps) ** (n - k)
        b = eps ** (n - k) * (1.0 - eps) ** k
        total = total + math.comb(n, k) * np.minimum(a, b)
    return 0.5 * total


def ad_accept_probability(beta, n):
    """Probability that a block survives distillation."""
    beta = np.asarray(beta, dtype=float)
    return beta**n + (1.0 - beta) ** n


def choose_repeat_n(beta, target=0.11, cap=8):
    """Smallest repeat length whose predicted residual error is <= target."""
    for n in range(1, cap + 1):
        if ad_error(beta, n) <= target:
            return n
    return cap


def alice_ad_masks(bits, repeat_n, rng):
    """Alice's side of repeat-code distillation.

    Groups her bits into blocks of ``repeat_n``, draws one fresh random bit c
    per block and announces each block XORed with c.  Returns (c_bits, masks);
    every announced mask bit is public leakage.
    """
    if repeat_n < 1:
        raise InvalidConfigError(f"repeat_n={repeat_n} must be >= 1")
    bits = np.asarray(bits, dtype=np.uint8)
    n_blocks = len(bits) // repeat_n
    blocks = bits[: n_blocks * repeat_n].reshape(n_blocks, repeat_n)
    c = rng.integers(0, 2, n_blocks, dtype=np.uint8)
    masks = blocks ^ c[:, None]
    return c, masks.reshape(-1)


def bob_ad_apply(bits, masks, repeat_n):
    """Bob's side: accept a block iff his masked block is all-equal; the
    common masked value is his estimate of Alice's block bit c."""
    bits = np.asarray(bits, dtype=np.uint8)
    masks = np.asarray(masks, dtype=np.uint8)
    n_blocks = len(masks) // repeat_n
    blocks = bits[: n_blocks * repeat_n].reshape(n_blocks, repeat_n)
    unmasked = blocks ^ masks.reshape(n_blocks, repeat_n)
    accepted = np.all(unmasked == unmasked[:, :1], axis=1)
    values = unmasked[:, 0]
    return accepted, values[accepted]


@dataclass
class AdResult:
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    accepted: np.ndarray
    leaked_bits: int
    repeat_n: int


def advantage_distill(alice_bits, bob_bits, repeat_n, rng):
    """Run both sides of distillation in-process."""
    c, masks = alice_ad_masks(alice_bits, repeat_n, rng)
    accepted, bob_out = bob_ad_apply(bob_bits, masks, repeat_n)
    return AdResult(c[accepted], bob_out, accepted, int(len(masks)), repeat_n)


def poly_hash64(bits):
    """Polynomial hash of a bit string over GF(2^64)."""
    bits = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(bits)
    h = 1  # nonzero init so length is felt
    for i in range(0, len(packed), 8):
        chunk = int.from_bytes(packed[i: i + 8].tobytes(), "big")
        h = (h << 64) | chunk
        for bit in range(127, 63, -1):
            if h >> bit & 1:
                h ^= _GF64_POLY << (bit - 64)
    return h & (1 << 64) - 1


class ParityOracle:
    """Alice's side of Cascade: answers parity queries on her bit string.

    ``start`` fixes the per-attempt permutations (derived from a stream the
    querying side derives identically); ``parities`` answers a batch of
    half-open ranges in permuted coordinates and counts every answered bit
    as disclosed.
    """

    def __init__(self, bits, perm_stream_factory):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self._perm_stream_factory = perm_stream_factory
        self._permuted = None
        self.disclosed_bits = 0

    def start(self, attempt, passes):
        rng = self._perm_stream_factory(attempt)
        n = len(self.bits)
        self._permuted = [
            self.bits[rng.permutation(n)] for _ in range(passes)
        ]

    def parities(self, queries):
        """queries: iterable of (pass_index, lo, hi) in permuted coords."""
        out = np.empty(len(queries), dtype=np.uint8)
        for i, (pi, lo, hi) in enumerate(queries):
            out[i] = np.bitwise_xor.reduce(self._permuted[pi][lo:hi]) \
                if hi > lo else 0
        self.disclosed_bits += len(queries)
        return out

    def hash64(self):
        self.disclosed_bits += HASH_BITS
        return poly_hash64(self.bits)


@dataclass
class CascadeResult:
    bits: np.ndarray
    leaked_bits: int
    attempts: int
    corrected: int


def _parity(arr):
    return int(np.bitwise_xor.reduce(arr)) if len(arr) else 0


def _cascade_attempt(bob, oracle, attempt, beta_est, passes, perm_rng):
    """One Cascade attempt.  Returns (corrected bob bits, corrections)."""
    n = len(bob)
    k1 = max(2, min(n, math.ceil(CASCADE_BLOCK_FACTOR / max(beta_est, 1e-4))))
    oracle.start(attempt, passes)
    perms = [perm_rng.permutation(n) for _ in range(passes)]
    inv = [np.empty(n, dtype=np.int64) for _ in range(passes)]
    for i, perm in enumerate(perms):
        inv[i][perm] = np.arange(n)
    bob = bob.copy()

    # quadrupling the block size per pass keeps the total parity budget
    # within 1.25 h(beta) even at beta ~ 0.15, where doubling overshoots
    block_sizes = [min(n, k1 * 4**i) for i in range(passes)]
    alice_par = [None] * passes  # per pass: dict block -> parity
    queries = 0

    def bob_block_parity(pi, blk):
        k = block_sizes[pi]
        return _parity(bob[perms[pi][blk * k: (blk + 1) * k]])

    def binary_search(pi, blk):
        nonlocal queries
        k = block_sizes[pi]
        lo, hi = blk * k, min((blk + 1) * k, n)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            a_par = int(oracle.parities([(pi, lo, mid)])[0])
            queries += 1
            b_par = _parity(bob[perms[pi][lo:mid]])
            if a_par != b_par:
                hi = mid
            else:
                lo = mid
        return perms[pi][lo]  # global index of the bad bit

    corrections = 0
    for pi in range(passes):
        k = block_sizes[pi]
        n_blocks = (n + k - 1) // k
        ranges = [(pi, b * k, min((b + 1) * k, n)) for b in range(n_blocks)]
        pars = oracle.parities(ranges)
        queries += len(ranges)
        alice_par[pi] = {b: int(pars[b]) for b in range(n_blocks)}

        pending = [(pi, b) for b in range(n_blocks)]
        while pending:
            cpi, blk = pending.pop()
            if alice_par[cpi] is None or blk not in alice_par[cpi]:
                continue
            if bob_block_parity(cpi, blk) == alice_par[cpi][blk]:
                continue
            g = binary_search(cpi, blk)
            bob[g] ^= 1
            corrections += 1
            # the flip changes parities of this bit's blocks in every pass
            # whose top-level parities are already known
            for opi in range(pi + 1):
                ob = int(inv[opi][g]) // block_sizes[opi]
                pending.append((opi, ob))
    return bob, corrections, queries


def cascade_correct(bob_bits, oracle, beta_est, perm_stream_factory,
                    passes=CASCADE_PASSES, max_attempts=3):
    """Correct Bob's bits toward the oracle's, verifying with a 64-bit hash.

    On verification failure (error estimate too low) the attempt is retried
    with a doubled estimate and fresh permutations; all disclosed bits from
    every attempt stay on the ledger.
    """
    bob = np.asarray(bob_bits, dtype=np.uint8).copy()
    leaked = 0
    total_corrected = 0
    for attempt in range(max_attempts):
        before = oracle.disclosed_bits
        perm_rng = perm_stream_factory(attempt)
        bob, corrected, _ = _cascade_attempt(
            bob, oracle, attempt, beta_est * 2**attempt, passes, perm_rng
        )
        total_corrected += corrected
        a_hash = oracle.hash64()
        leaked += oracle.disclosed_bits - before
        if poly_hash64(bob) == a_hash:
            return CascadeResult(bob, leaked, attempt + 1, total_corrected)
    raise VerificationFailedError(
        f"strings still differ after {max_attempts} Cascade attempts "
        f"(initial error estimate {beta_est} too low?)"
    )


def cascade(alice_bits, bob_bits, beta_est, seed_stream_factory,
            passes=CASCADE_PASSES, max_attempts=3):
    """In-process Cascade between two local bit strings.

    ``seed_stream_factory(attempt)`` must return a fresh identical stream
    for both the oracle and the corrector, mirroring the two-party setup.
    """
    if len(alice_bits) != len(bob_bits):
        raise InvalidConfigError("length mismatch")
    if not 0.0 < beta_est < 0.5:
        beta_est = min(max(beta_est, 1e-3), 0.49)
    oracle = ParityOracle(alice_bits, seed_stream_factory)
    return cascade_correct(bob_bits, oracle, beta_est, seed_stream_factory,
                           passes, max_attempts), oracle


def eve_error_after_leak(p_eve, leaked_bits, length):
    """Eve's error bound once every disclosed bit is granted to her.

    Her per-bit Shannon information gains min(leak/length, remaining
    uncertainty) and is converted back to an error probability through the
    inverse binary entropy, rounding her error downward (in her favor).
    """
    from .security import binary_entropy, inverse_binary_entropy

    if length <= 0:
        return 0.0
    info = 1.0 - float(binary_entropy(p_eve))
    info_new = min(1.0, info + leaked_bits / length)
    if info_new >= 1.0:
        return 0.0
    p_new = float(inverse_binary_entropy(1.0 - info_new))
    return min(p_new, float(p_eve))

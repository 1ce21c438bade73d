"""Beam-selection algorithms.

All searches work in the effective-channel domain: with G[k, l, b] =
h_kl^H u_b precomputed, every candidate evaluation reduces to K x K
algebra (digital design, column norms through the codebook Gram matrix,
and the coherent cross-AP sums), which is algebraically identical to the
M-dimensional formulation in :mod:`cfbeam.precode`.

Selection is always committed serially, segment by segment, with
lowest-index tie-breaking so runs are deterministic.
"""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (BCCExhausted, ConfigConflict, InvalidAssignment,
                     OracleBudgetExceeded, SingularEffectiveChannel)
from .precode import COND_LIMIT, MetricsReport

ALGORITHMS = ("exhaustive", "disjoint_linear_dl", "linear", "semilinear",
              "linear_iis")
BCC_MODES = ("full", "init_only", "off")
METRICS = ("rate", "dl")
PRECODERS = ("zf", "mmse")

# canonical cell names used by the harness / CLI
NAMED_ALGORITHMS = {
    "exhaustive": dict(algorithm="exhaustive", metric="rate"),
    "disjoint-linear-dl": dict(algorithm="disjoint_linear_dl", metric="dl"),
    "linear-ii-rate": dict(algorithm="linear", metric="rate"),
    "linear-ii-dl": dict(algorithm="linear", metric="dl"),
    "semilinear-ii-rate": dict(algorithm="semilinear", metric="rate"),
    "linear-iis-rate": dict(algorithm="linear_iis", metric="rate"),
}


@dataclass
class SearchSettings:
    algorithm: str = "linear"
    metric: str = "rate"
    bcc_mode: str = "full"
    n_init: int = 1
    n_iter: int = 1
    precoder: str = "zf"
    oracle_budget: int = 10 ** 6

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigConflict(f"unknown algorithm {self.algorithm!r}")
        if self.metric not in METRICS:
            raise ConfigConflict(f"unknown metric {self.metric!r}")
        if self.bcc_mode not in BCC_MODES:
            raise ConfigConflict(f"unknown bcc_mode {self.bcc_mode!r}")
        if self.precoder not in PRECODERS:
            raise ConfigConflict(f"unknown precoder {self.precoder!r}")
        if self.algorithm == "disjoint_linear_dl" and self.metric != "dl":
            raise ConfigConflict("the disjoint baseline uses the dl metric")
        if self.algorithm in ("linear_iis", "exhaustive") and self.metric != "rate":
            raise ConfigConflict(f"{self.algorithm} uses the rate metric")
        if self.n_init < 1 or self.n_iter < 1:
            raise ConfigConflict("n_init and n_iter must be >= 1")


def settings_from_name(name, **overrides):
    """SearchSettings for a canonical cell name like 'linear-ii-rate'."""
    if name not in NAMED_ALGORITHMS:
        raise ConfigConflict(
            f"unknown algorithm name {name!r}; known: {sorted(NAMED_ALGORITHMS)}")
    kw = dict(NAMED_ALGORITHMS[name])
    kw.update(overrides)
    return SearchSettings(**kw)


@dataclass
class BeamAssignment:
    """L x K matrix of 0-based beam indices b_kl."""

    idx: np.ndarray

    def conflicts(self, B):
        """True where a beam is claimed by more than one user anywhere (6c)."""
        return beam_conflicts(self.idx[None], B)[0]


def beam_conflicts(idx_stack, B):
    """Vectorized constraint-(6c) check on a stack of (L, K) index matrices.

    Returns a bool array: True means some beam is used by >= 2 distinct users.
    """
    idx_stack = np.asarray(idx_stack)
    n, L, K = idx_stack.shape
    used = np.zeros((n, K, B), dtype=bool)
    rows = np.arange(n)
    for k in range(K):
        for l in range(L):
            used[rows, k, idx_stack[:, l, k]] = True
    return (used.sum(axis=1) > 1).any(axis=1)


@dataclass
class SearchResult:
    assignment: BeamAssignment
    report: MetricsReport
    best_metric: float
    enumerated_count: int = 0
    first_sweep_evaluations: int = 0


# ---------------------------------------------------------------------------
# BCC bookkeeping
# ---------------------------------------------------------------------------

class CodebookLog:
    """Per-user sets of still-assignable beams (linear search, Alg. 3)."""

    def __init__(self, B, K, bcc_active):
        self.B = B
        self.avail = np.ones((K, B), dtype=bool)
        self.bcc_active = bcc_active

    def candidates(self, k):
        if not self.bcc_active:
            return np.arange(self.B)
        c = np.flatnonzero(self.avail[k])
        if c.size == 0:
            raise BCCExhausted(f"codebook log of user {k} is empty")
        return c

    def counts(self):
        return self.avail.sum(axis=1)

    def remove(self, b, except_user):
        if not self.bcc_active:
            return
        keep = self.avail[except_user, b]
        self.avail[:, b] = False
        self.avail[except_user, b] = keep

    def record_assignment(self, idx):
        """Remove each user's assigned beams from every other user's log."""
        for k in range(idx.shape[1]):
            for b in np.unique(idx[:, k]):
                self.remove(int(b), except_user=k)


class CombinationSet:
    """Ordered K-tuples of beam indices tested by the semilinear search."""

    def __init__(self, tuples):
        self.tuples = list(tuples)

    @classmethod
    def initial(cls, B, K, distinct):
        if distinct:
            if B < K:
                raise ConfigConflict("distinct combinations need B >= K")
            return cls(itertools.permutations(range(B), K))
        return cls(itertools.product(range(B), repeat=K))

    @property
    def C(self):
        return len(self.tuples)

    def as_array(self):
        return np.asarray(self.tuples, dtype=int)

    def commit(self, chosen):
        """Prune every tuple that reuses a committed beam for another user."""
        K = len(chosen)
        survivors = []
        for t in self.tuples:
            ok = True
            for k in range(K):
                for kp in range(K):
                    if kp != k and t[kp] == chosen[k]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                survivors.append(t)
        self.tuples = survivors


# ---------------------------------------------------------------------------
# Effective-domain digital design and scoring
# ---------------------------------------------------------------------------

def _batch_design(H, precoder, q, noise_W, allow_fallback, strict=True):
    """Design digital precoders for a stack of effective channels.

    H: (n, Ka, Ka). Returns (V, degenerate_mask). ZF candidates whose Gram
    condition number exceeds COND_LIMIT are redesigned with MMSE when the
    fallback is allowed; otherwise they are either rejected (strict) or
    zeroed out so the caller can score them as unusable (non-strict, used
    while ranking candidates).
    """
    n, Ka, _ = H.shape
    A = H @ H.conj().swapaxes(-1, -2)
    eye = np.eye(Ka)
    if precoder == "mmse":
        V = np.linalg.solve(q * A + noise_W * eye, H).conj().swapaxes(-1, -2)
        return V, np.zeros(n, dtype=bool)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    V = np.empty_like(H)
    good = ~bad
    if good.any():
        V[good] = np.linalg.solve(A[good], H[good]).conj().swapaxes(-1, -2)
    if bad.any():
        if allow_fallback:
            V[bad] = np.linalg.solve(q * A[bad] + noise_W * eye,
                                     H[bad]).conj().swapaxes(-1, -2)
        elif strict:
            raise SingularEffectiveChannel(
                "rank-deficient effective channel under BCC")
        else:
            V[bad] = 0.0
    return V, bad


def _compose_T(Gl, gram, act, cand, q, noise_W, precoder, allow_fallback,
               strict=True):
    """Per-candidate composed-channel matrices at one AP.

    Gl: (K, B) effective beams at AP l; cand: (n, K) beam per user.
    Returns T (n, K, K) with T[c, k, j] = h_kl^H u~_jl, plus fallback mask.
    Inactive users get zero columns (their RF chain is off at this AP).
    """
    K = Gl.shape[0]
    Hfull = Gl[:, cand].transpose(1, 0, 2)          # (n, K, K)
    if act.all():
        Hd = Hfull
        sel = cand
    else:
        Hd = Hfull[:, act][:, :, act]
        sel = cand[:, act]
    gram_sel = gram[sel[:, :, None], sel[:, None, :]]
    V, bad = _batch_design(Hd, precoder, q, noise_W, allow_fallback, strict)
    n2 = np.einsum("nkj,nkm,nmj->nj", V.conj(), gram_sel, V).real
    scale = np.zeros_like(n2)
    nz = n2 > 0
    scale[nz] = 1.0 / np.sqrt(n2[nz])
    Vn = V * scale[:, None, :]
    if act.all():
        T = Hfull @ Vn
    else:
        T = np.zeros(Hfull.shape, dtype=complex)
        T[:, :, act] = Hfull[:, :, act] @ Vn
    return T, bad


def _rates_from_A(A, q, noise_W):
    """Per-user rates from the cross-AP composed matrix stack A (n, K, K)."""
    K = A.shape[-1]
    diag = A[..., np.arange(K), np.arange(K)]
    desired = np.abs(diag) ** 2
    total = np.sum(np.abs(A) ** 2, axis=-1)
    sinr = q * desired / (q * (total - desired) + noise_W)
    return sinr, np.log2(1.0 + sinr)


class _NetState:
    """Mutable search state: current assignment and per-AP composed matrices."""

    def __init__(self, G, gram, q, noise_W, idx0, active, settings):
        self.G = G
        self.gram = gram
        self.q = q
        self.noise_W = noise_W
        self.K, self.L, self.B = G.shape
        self.idx = np.array(idx0, dtype=int)
        self.active = active
        self.settings = settings
        self.allow_fallback = settings.bcc_mode != "full"
        self.evals = 0
        self.fallbacks = 0
        self.T = np.zeros((self.L, self.K, self.K), dtype=complex)
        for l in range(self.L):
            self._refresh_ap(l)

    def _refresh_ap(self, l):
        T, bad = _compose_T(self.G[:, l, :], self.gram, self.active[l],
                            self.idx[l][None, :], self.q, self.noise_W,
                            self.settings.precoder, self.allow_fallback,
                            strict=False)
        self.T[l] = T[0]
        if self.allow_fallback:
            self.fallbacks += int(bad.sum())

    def score_candidates(self, l, cand):
        """Metric values for a stack of candidate beam rows at AP l.

        Degenerate candidates (rank-deficient effective channel with no
        fallback allowed) score -inf so they are never committed.
        """
        T, bad = _compose_T(self.G[:, l, :], self.gram, self.active[l], cand,
                            self.q, self.noise_W, self.settings.precoder,
                            self.allow_fallback, strict=False)
        self.evals += cand.shape[0]
        if self.allow_fallback:
            self.fallbacks += int(bad.sum())
        A_other = self.T.sum(axis=0) - self.T[l]
        if self.settings.metric == "rate":
            _, rates = _rates_from_A(A_other[None] + T, self.q, self.noise_W)
            vals = rates.sum(axis=1)
        else:
            K = self.K
            own = np.abs(self.T[:, np.arange(K), np.arange(K)]) ** 2
            other_dl = self.q * (own.sum() - own[l].sum())
            d = np.abs(T[:, np.arange(K), np.arange(K)]) ** 2
            vals = self.q * d.sum(axis=1) + other_dl
        if not self.allow_fallback and bad.any():
            vals = np.where(bad, -np.inf, vals)
        return T, vals

    def commit(self, l, row, T_row):
        self.idx[l] = row
        self.T[l] = T_row

    def metric_value(self):
        if self.settings.metric == "rate":
            _, rates = _rates_from_A(self.T.sum(axis=0)[None], self.q, self.noise_W)
            return float(rates.sum())
        K = self.K
        own = np.abs(self.T[:, np.arange(K), np.arange(K)]) ** 2
        return float(self.q * own.sum())


def evaluate_assignment(G, gram, idx, active, q, noise_W, precoder,
                        allow_fallback, strict=True):
    """Canonical metrics for a fixed assignment (effective-channel domain).

    With ``strict`` off, a degenerate AP contributes nothing instead of
    raising; this mirrors how the searches score candidates.
    """
    K, L, _ = G.shape
    T = np.zeros((L, K, K), dtype=complex)
    fb = 0
    for l in range(L):
        Tl, bad = _compose_T(G[:, l, :], gram, active[l], idx[l][None, :],
                             q, noise_W, precoder, allow_fallback, strict)
        T[l] = Tl[0]
        if allow_fallback:
            fb += int(bad.sum())
    sinr, rates = _rates_from_A(T.sum(axis=0)[None], q, noise_W)
    dl = q * np.abs(T[:, np.arange(K), np.arange(K)].T) ** 2  # (K, L)
    return MetricsReport(
        sinr=sinr[0], rates=rates[0], sum_rate=float(rates.sum()),
        dl_power_W=dl, dl_sum_W=float(dl.sum()), fallback_count=fb)


def effective_beams(realization, codebook):
    """G[k, l, b] = h_kl^H u_b for every link and codeword."""
    return np.einsum("klm,mb->klb", realization.h.conj(), codebook.beams)


# ---------------------------------------------------------------------------
# Search passes
# ---------------------------------------------------------------------------

def linear_search_pass(state, l, log):
    """One AP sweep of the linear search (Alg. 3): per user, test every
    remaining beam with the digital precoder redesigned each time."""
    for k in range(state.K):
        if not state.active[l, k]:
            continue
        cands = log.candidates(k)
        cand = np.tile(state.idx[l], (cands.size, 1))
        cand[:, k] = cands
        T, vals = state.score_candidates(l, cand)
        i = int(np.argmax(vals))
        b = int(cands[i])
        state.commit(l, cand[i], T[i])
        log.remove(b, except_user=k)


def semilinear_search_pass(state, l, combset):
    """One AP sweep of the semilinear search (Alg. 2): score all surviving
    K-tuples as AP l's beams, commit the best, prune the set under BCC."""
    if combset.C == 0:
        raise BCCExhausted("combination set is empty")
    cand = combset.as_array()
    T, vals = state.score_candidates(l, cand)
    i = int(np.argmax(vals))
    state.commit(l, cand[i], T[i])
    if state.settings.bcc_mode == "full":
        combset.commit(tuple(int(b) for b in cand[i]))


def _draw_init(rng, L, K, B, feasible):
    if feasible:
        if B < K:
            raise ConfigConflict("BCC-feasible initialization needs B >= K")
        perm = rng.permutation(B)[:K]
        return np.tile(perm, (L, 1))
    return rng.integers(0, B, size=(L, K))


def _fresh_tracker(state, settings):
    if settings.algorithm == "semilinear":
        return CombinationSet.initial(state.B, state.K,
                                      distinct=settings.bcc_mode == "full")
    log = CodebookLog(state.B, state.K,
                      bcc_active=settings.bcc_mode == "full")
    log.record_assignment(state.idx)
    return log


# ---------------------------------------------------------------------------
# Top-level runners
# ---------------------------------------------------------------------------

def _full_active(realization, active):
    if active is None:
        return np.ones((realization.L, realization.K), dtype=bool)
    return np.asarray(active, dtype=bool)


def _finalize(realization, codebook, settings, G, gram, idx, active,
              best_metric, evals, fallbacks, enumerated, first_sweep, t0):
    q = realization.config.p_T_W / realization.K
    report = evaluate_assignment(
        G, gram, idx, active, q, realization.noise_power_W, settings.precoder,
        allow_fallback=settings.bcc_mode != "full", strict=False)
    report.evaluation_count = evals
    report.fallback_count += fallbacks
    report.wall_time_s = time.perf_counter() - t0
    return SearchResult(
        assignment=BeamAssignment(idx=np.array(idx, dtype=int)),
        report=report, best_metric=best_metric,
        enumerated_count=enumerated, first_sweep_evaluations=first_sweep)


def run_ii(realization, codebook, settings, seed=None, active=None):
    """Multiple initializations and iterations around the linear or
    semilinear pass (Alg. 1)."""
    t0 = time.perf_counter()
    active = _full_active(realization, active)
    if settings.algorithm == "semilinear" and not active.all():
        raise ConfigConflict("RF masking is only supported for linear searches")
    G = effective_beams(realization, codebook)
    gram = codebook.gram
    q = realization.config.p_T_W / realization.K
    rng = np.random.default_rng(seed)
    L, K, B = realization.L, realization.K, codebook.B
    if settings.bcc_mode != "off":
        realization.config.require_bcc_feasible()

    best_val, best_idx = -np.inf, None
    evals = fallbacks = 0
    first_sweep = None
    for _ in range(settings.n_init):
        idx0 = _draw_init(rng, L, K, B, feasible=settings.bcc_mode != "off")
        state = _NetState(G, gram, q, realization.noise_power_W, idx0, active,
                          settings)
        tracker = _fresh_tracker(state, settings)
        for _ in range(settings.n_iter):
            before = state.evals
            for l in range(L):
                if settings.algorithm == "semilinear":
                    semilinear_search_pass(state, l, tracker)
                else:
                    linear_search_pass(state, l, tracker)
            if first_sweep is None:
                first_sweep = state.evals - before
            val = state.metric_value()
            if val > best_val:
                best_val, best_idx = val, state.idx.copy()
        evals += state.evals
        fallbacks += state.fallbacks
    return _finalize(realization, codebook, settings, G, gram, best_idx,
                     active, best_val, evals, fallbacks, 0, first_sweep, t0)


def run_iis(realization, codebook, settings, seed=None, active=None):
    """Linear search with segment prioritization (Alg. 4): every circular
    shift of the AP order is tried from the same initialization."""
    t0 = time.perf_counter()
    active = _full_active(realization, active)
    G = effective_beams(realization, codebook)
    gram = codebook.gram
    q = realization.config.p_T_W / realization.K
    rng = np.random.default_rng(seed)
    L, K, B = realization.L, realization.K, codebook.B
    if settings.bcc_mode != "off":
        realization.config.require_bcc_feasible()

    best_val, best_idx = -np.inf, None
    evals = fallbacks = 0
    first_sweep = None
    for _ in range(settings.n_init):
        idx0 = _draw_init(rng, L, K, B, feasible=settings.bcc_mode != "off")
        order = np.arange(L)
        for _ in range(L):
            state = _NetState(G, gram, q, realization.noise_power_W, idx0,
                              active, settings)
            log = _fresh_tracker(state, settings)
            order_best, order_idx = -np.inf, None
            for _ in range(settings.n_iter):
                before = state.evals
                for l in order:
                    linear_search_pass(state, int(l), log)
                if first_sweep is None:
                    first_sweep = state.evals - before
                val = state.metric_value()
                if val > order_best:
                    order_best, order_idx = val, state.idx.copy()
            if order_best > best_val:
                best_val, best_idx = order_best, order_idx
            evals += state.evals
            fallbacks += state.fallbacks
            order = np.roll(order, -1)
    return _finalize(realization, codebook, settings, G, gram, best_idx,
                     active, best_val, evals, fallbacks, 0, first_sweep, t0)


def disjoint_linear_dl(realization, codebook, settings, seed=None, active=None):
    """Benchmark disjoint design (Alg. 5): analog beams by per-link DL power
    with no digital precoder in the loop; precoders designed once at the end."""
    t0 = time.perf_counter()
    active = _full_active(realization, active)
    G = effective_beams(realization, codebook)
    gram = codebook.gram
    q = realization.config.p_T_W / realization.K
    rng = np.random.default_rng(seed)
    L, K, B = realization.L, realization.K, codebook.B
    if settings.bcc_mode != "off":
        realization.config.require_bcc_feasible()

    idx = _draw_init(rng, L, K, B, feasible=settings.bcc_mode != "off")
    log = CodebookLog(B, K, bcc_active=settings.bcc_mode == "full")
    log.record_assignment(idx)
    evals = 0
    for l in range(L):
        for k in range(K):
            if not active[l, k]:
                continue
            cands = log.candidates(k)
            vals = q * np.abs(G[k, l, cands]) ** 2
            i = int(np.argmax(vals))
            b = int(cands[i])
            idx[l, k] = b
            evals += cands.size
            log.remove(b, except_user=k)
    best = float(q * np.sum(np.abs(G[np.arange(K)[None, :],
                                     np.arange(L)[:, None], idx]) ** 2))
    return _finalize(realization, codebook, settings, G, gram, idx, active,
                     best, evals, 0, 0, evals, t0)


def exhaustive_search(realization, codebook, settings, seed=None, active=None,
                      chunk=4096):
    """Oracle: enumerate every (BCC-feasible) L x K index matrix in
    lexicographic order and keep the sum-rate argmax."""
    t0 = time.perf_counter()
    active = _full_active(realization, active)
    if not active.all():
        raise ConfigConflict("RF masking is only supported for linear searches")
    L, K, B = realization.L, realization.K, codebook.B
    raw = B ** (K * L)
    if raw > settings.oracle_budget:
        raise OracleBudgetExceeded(
            f"B^(KL) = {raw} exceeds budget {settings.oracle_budget}")
    if settings.bcc_mode != "off":
        realization.config.require_bcc_feasible()

    G = effective_beams(realization, codebook)
    gram = codebook.gram
    q = realization.config.p_T_W / realization.K
    allow_fb = settings.bcc_mode != "full"

    combos = np.array(list(itertools.product(range(B), repeat=L * K)),
                      dtype=int).reshape(-1, L, K)
    if settings.bcc_mode == "full":
        combos = combos[~beam_conflicts(combos, B)]

    best_val, best_idx = -np.inf, None
    evals = fallbacks = 0
    for start in range(0, combos.shape[0], chunk):
        block = combos[start:start + chunk]
        A = np.zeros((block.shape[0], K, K), dtype=complex)
        block_bad = np.zeros(block.shape[0], dtype=bool)
        for l in range(L):
            T, bad = _compose_T(G[:, l, :], gram, active[l], block[:, l, :],
                                q, realization.noise_power_W,
                                settings.precoder, allow_fb, strict=False)
            A += T
            block_bad |= bad
            if allow_fb:
                fallbacks += int(bad.sum())
        _, rates = _rates_from_A(A, q, realization.noise_power_W)
        vals = rates.sum(axis=1)
        if not allow_fb and block_bad.any():
            vals = np.where(block_bad, -np.inf, vals)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_idx = float(vals[i]), block[i].copy()
        evals += block.shape[0]
    return _finalize(realization, codebook, settings, G, gram, best_idx,
                     active, best_val, evals, fallbacks, raw, evals, t0)


_RUNNERS = {
    "exhaustive": exhaustive_search,
    "disjoint_linear_dl": disjoint_linear_dl,
    "linear": run_ii,
    "semilinear": run_ii,
    "linear_iis": run_iis,
}


def run_search(realization, codebook, settings, seed=None, active=None):
    """Dispatch to the configured algorithm."""
    return _RUNNERS[settings.algorithm](realization, codebook, settings,
                                        seed=seed, active=active)


def complexity_formula(algorithm, L, K, B, bcc=False):
    """Closed-form evaluation counts for one search sweep."""
    if bcc and B < K:
        raise ConfigConflict("BCC complexity needs B >= K")
    if algorithm == "exhaustive":
        return B ** (K * L)
    if algorithm == "semilinear":
        return L * (math.perm(B, K) if bcc else B ** K)
    if algorithm == "semicentralized":
        # formula only; the algorithm itself is not runnable here
        return K * B ** L
    if algorithm in ("linear", "linear_iis", "disjoint_linear_dl"):
        return L * (math.perm(B, K) if bcc else K * B)
    raise ConfigConflict(f"unknown algorithm {algorithm!r}")

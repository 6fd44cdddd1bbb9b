"""
🎲 Walk Engine
סימולציית ההילוך המקרי האנאיזוטרופי

Two interchangeable ways to run the walk from C(0) = (0, 0):

- direct: every step picks (k, j±1) with probability p_j each and
  (k±1, j) with probability 1/2 - p_j each
- construction: on arriving at row j draw a geometric burst of horizontal
  +-1 steps with P(G = g) = 2p_j (1 - 2p_j)^g, then take one vertical +-1 step

Both consume a stream of uniforms inside numba kernels. Observables: final
site, H_N / V_N, returns to the origin, vertical landings at row 0, and
optionally the local-time field, a dense window of it, or tracked sites.
"""

from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, NamedTuple, Optional, Tuple, Union
from collections import Counter
import logging

import numpy as np
from numba import njit
from tqdm import tqdm

from config_manager import get_engine_config, get_jobs
from logging_system import log_performance
from profiles import CompiledProfile, ProfileSpec

logger = logging.getLogger("anisowalk.engine")


class InvalidProbabilityError(ValueError):
    """Burst probability outside (0, 1/2]"""


class MemoryBudgetError(MemoryError):
    """Requested recording would not fit in the configured memory budget"""


class SiteNotRecordedError(KeyError):
    """Local time asked for a site the observer did not record"""


class Site(NamedTuple):
    k: int
    j: int


ORIGIN = Site(0, 0)

# walk state slots shared by the kernels
S_K, S_J, S_N, S_H, S_V, S_RET, S_XI2, S_BURST, S_PATH = range(9)
STATE_SIZE = 9

_LOW32 = 0xFFFFFFFF


def pack_sites(k, j):
    """Pack signed 32-bit coordinates into one int64 key (k high, j low)"""
    k = np.asarray(k, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return (k << 32) | (j & _LOW32)


def unpack_sites(keys) -> Tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.int64)
    k = keys >> 32
    j = ((keys & _LOW32) ^ 0x80000000) - 0x80000000
    return k, j


# ==================== numba kernels ====================

@njit(cache=True, nogil=True)
def _level_prob(j, code, params, table, offset):
    if code == 0:
        return params[0]
    if code == 1:
        L = table.shape[0]
        r = j % L
        if r < 0:
            r += L
        return table[r]
    if code == 2:
        return 0.25 if j == 0 else 0.5
    if code == 3:
        return 0.25 if j >= 0 else 0.5
    if code == 4:
        if j == 0:
            return params[2]
        m = float(abs(j))
        prev = 0.0
        if m > 1.0:
            prev = (m - 1.0) ** params[1]
        f = (params[0] - 1.0) * (m ** params[1] - prev)
        return 1.0 / (2.0 * (1.0 + f))
    idx = j + offset
    if idx >= 0 and idx < table.shape[0]:
        return table[idx]
    return params[0]


@njit(cache=True, nogil=True)
def _pack(k, j):
    return (k << 32) | (j & 0xFFFFFFFF)


@njit(cache=True, nogil=True)
def _record(state, k, j, path, window, radius, tracked, tracked_counts):
    if k == 0 and j == 0:
        state[S_RET] += 1
    if path.shape[0] > 0:
        path[state[S_PATH]] = _pack(k, j)
        state[S_PATH] += 1
    if window.shape[0] > 0:
        if abs(k) <= radius and abs(j) <= radius:
            window[k + radius, j + radius] += 1
    if tracked.shape[0] > 0:
        key = _pack(k, j)
        for t in range(tracked.shape[0]):
            if tracked[t] == key:
                tracked_counts[t] += 1


@njit(cache=True, nogil=True)
def _walk_direct(state, u, n_target, code, params, table, offset,
                 path, window, radius, tracked, tracked_counts):
    k = state[S_K]
    j = state[S_J]
    used = 0
    m = u.shape[0]
    while state[S_N] < n_target and used < m:
        p = _level_prob(j, code, params, table, offset)
        x = u[used]
        used += 1
        if x < 2.0 * p:
            if x < p:
                j += 1
            else:
                j -= 1
            state[S_V] += 1
            if j == 0:
                state[S_XI2] += 1
        else:
            if x < 0.5 + p:
                k += 1
            else:
                k -= 1
            state[S_H] += 1
        state[S_N] += 1
        _record(state, k, j, path, window, radius, tracked, tracked_counts)
    state[S_K] = k
    state[S_J] = j
    return used


@njit(cache=True, nogil=True)
def _walk_construction(state, u, n_target, code, params, table, offset,
                       path, window, radius, tracked, tracked_counts):
    k = state[S_K]
    j = state[S_J]
    used = 0
    m = u.shape[0]
    while state[S_N] < n_target:
        burst = state[S_BURST]
        if burst < 0:
            p = _level_prob(j, code, params, table, offset)
            if p >= 0.5:
                state[S_BURST] = 0
                continue
            if used >= m:
                break
            x = u[used]
            used += 1
            state[S_BURST] = int(np.floor(np.log1p(-x) / np.log1p(-2.0 * p)))
            continue
        if used >= m:
            break
        x = u[used]
        used += 1
        if burst > 0:
            if x < 0.5:
                k += 1
            else:
                k -= 1
            state[S_H] += 1
            state[S_BURST] = burst - 1
        else:
            if x < 0.5:
                j += 1
            else:
                j -= 1
            state[S_V] += 1
            if j == 0:
                state[S_XI2] += 1
            state[S_BURST] = -1
        state[S_N] += 1
        _record(state, k, j, path, window, radius, tracked, tracked_counts)
    state[S_K] = k
    state[S_J] = j
    return used


@njit(cache=True, nogil=True)
def _reset_state(state):
    for s in range(STATE_SIZE):
        state[s] = 0
    state[S_BURST] = -1


@njit(cache=True, nogil=True)
def _run_block(construction, u, n_target, state, out, r_start, code, params, table, offset,
               tracked, tracked_out):
    """Advance consecutive replicas of one block until the uniforms run out"""
    no_path = np.zeros(0, dtype=np.int64)
    no_window = np.zeros((0, 0), dtype=np.int64)
    pos = 0
    r = r_start
    while r < out.shape[0]:
        if construction:
            used = _walk_construction(state, u[pos:], n_target, code, params, table, offset,
                                      no_path, no_window, 0, tracked, tracked_out[r])
        else:
            used = _walk_direct(state, u[pos:], n_target, code, params, table, offset,
                                no_path, no_window, 0, tracked, tracked_out[r])
        pos += used
        if state[S_N] >= n_target:
            for s in range(STATE_SIZE):
                out[r, s] = state[s]
            r += 1
            _reset_state(state)
        else:
            break
    return r


def _fresh_state() -> np.ndarray:
    state = np.zeros(STATE_SIZE, dtype=np.int64)
    state[S_BURST] = -1
    return state


# ==================== Random streams ====================

def replica_stream(master_seed: int, block: int, block_size: int = 1) -> np.random.Generator:
    """
    Counter-based Philox stream keyed by (master seed, block size, block)

    With block_size 1 the block is the replica index, so each long walk owns
    its stream; short walks share one stream per fixed-size block.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(block_size), int(block)))
    return np.random.Generator(np.random.Philox(seq))


def replica_rng(master_seed: int, replica: int) -> np.random.Generator:
    return replica_stream(master_seed, replica, 1)


SEED_RULE = ("Philox(SeedSequence(seed, spawn_key=(block_size, block))); "
             "block = replica // block_size, replicas consume the block stream in order")


# ==================== Geometric bursts ====================

def _check_burst_probability(p: float):
    if not (0.0 < p <= 0.5):
        raise InvalidProbabilityError(f"burst probability must lie in (0, 1/2], got {p}")


def sample_geometric(p: float, rng: np.random.Generator) -> int:
    """G with P(G = g) = 2p (1 - 2p)^g by inversion; p = 1/2 gives 0"""
    p = float(p)
    _check_burst_probability(p)
    if p == 0.5:
        return 0
    return int(np.floor(np.log1p(-rng.random()) / np.log1p(-2.0 * p)))


def sample_geometric_batch(p: float, size: int, rng: np.random.Generator) -> np.ndarray:
    p = float(p)
    _check_burst_probability(p)
    if p == 0.5:
        return np.zeros(size, dtype=np.int64)
    return np.floor(np.log1p(-rng.random(size)) / np.log1p(-2.0 * p)).astype(np.int64)


# ==================== Observables ====================

class ObserverMode(Enum):
    COUNTERS = "counters"
    TRACKED = "tracked"
    WINDOW = "window"
    FULL = "full"


@dataclass(frozen=True)
class ObserverConfig:
    """What a walk records beyond the counters"""
    mode: ObserverMode = ObserverMode.COUNTERS
    tracked_sites: Tuple[Site, ...] = ()
    window: int = 0

    @classmethod
    def counters(cls) -> "ObserverConfig":
        return cls()

    @classmethod
    def full(cls, tracked_sites: Iterable = ()) -> "ObserverConfig":
        return cls(ObserverMode.FULL, tuple(Site(*s) for s in tracked_sites))

    @classmethod
    def tracked(cls, *sites) -> "ObserverConfig":
        return cls(ObserverMode.TRACKED, tuple(Site(*s) for s in sites))

    @classmethod
    def windowed(cls, radius: int) -> "ObserverConfig":
        if radius < 0:
            raise ValueError(f"window radius must be nonnegative, got {radius}")
        return cls(ObserverMode.WINDOW, window=int(radius))

    @property
    def keeps_field(self) -> bool:
        return self.mode in (ObserverMode.FULL, ObserverMode.WINDOW)

    def required_bytes(self, N: int) -> int:
        if self.mode is ObserverMode.FULL:
            return 8 * N
        if self.mode is ObserverMode.WINDOW:
            return 8 * (2 * self.window + 1) ** 2
        return 8 * len(self.tracked_sites)


@dataclass(eq=False)
class LocalTimeField:
    """
    Sparse local time: sorted packed site keys and their visit counts

    Visits are counted at times 1..N, so the start at time 0 is not a visit.
    A windowed field only knows sites with |k|, |j| <= window.
    """
    keys: np.ndarray
    counts: np.ndarray
    window: Optional[int] = None

    @classmethod
    def from_path(cls, path: np.ndarray) -> "LocalTimeField":
        keys, counts = np.unique(path, return_counts=True)
        return cls(keys.astype(np.int64), counts.astype(np.int64))

    @classmethod
    def from_window(cls, dense: np.ndarray, radius: int) -> "LocalTimeField":
        ks, js = np.nonzero(dense)
        keys = pack_sites(ks - radius, js - radius)
        order = np.argsort(keys)
        return cls(keys[order], dense[ks, js][order].astype(np.int64), window=radius)

    def _check_recorded(self, site: Site):
        if self.window is not None and (abs(site[0]) > self.window or abs(site[1]) > self.window):
            raise SiteNotRecordedError(f"site {tuple(site)} lies outside the recorded window "
                                       f"[-{self.window}, {self.window}]^2")

    def local_time(self, site) -> int:
        self._check_recorded(site)
        key = int(pack_sites(site[0], site[1]))
        idx = int(np.searchsorted(self.keys, key))
        if idx < self.keys.shape[0] and self.keys[idx] == key:
            return int(self.counts[idx])
        return 0

    def range(self) -> int:
        """Number of distinct sites visited at times 1..N"""
        if self.window is not None:
            raise SiteNotRecordedError("range needs the full field, this one is windowed")
        return int(self.keys.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def items(self):
        ks, js = unpack_sites(self.keys)
        for k, j, c in zip(ks.tolist(), js.tolist(), self.counts.tolist()):
            yield Site(k, j), c

    def __eq__(self, other) -> bool:
        if not isinstance(other, LocalTimeField):
            return NotImplemented
        return (self.window == other.window and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.counts, other.counts))


@dataclass(frozen=True)
class WalkState:
    """Position and step counters; h + v == n always"""
    pos: Site = ORIGIN
    n: int = 0
    h: int = 0
    v: int = 0


@dataclass
class WalkSummary:
    """One replica's outcome"""
    final: Site
    n: int
    h: int
    v: int
    returns_to_origin: int
    xi2_zero: int  # landings of the vertical walk on row 0 at vertical times 1..V_N
    local_times: Optional[LocalTimeField] = None
    tracked: Dict[Site, int] = field(default_factory=dict)


def local_time(source: Union[WalkSummary, LocalTimeField], site) -> int:
    """Xi(site, N) from a recorded field, a tracked site, or the origin counter"""
    site = Site(*site)
    if isinstance(source, LocalTimeField):
        return source.local_time(site)
    if source.local_times is not None:
        try:
            return source.local_times.local_time(site)
        except SiteNotRecordedError:
            if site not in source.tracked and site != ORIGIN:
                raise
    if site in source.tracked:
        return source.tracked[site]
    if site == ORIGIN:
        return source.returns_to_origin
    raise SiteNotRecordedError(f"site {tuple(site)} was not recorded by this walk")


def site_range(source: Union[WalkSummary, LocalTimeField]) -> int:
    """R(N): number of distinct sites with positive local time"""
    fld = source if isinstance(source, LocalTimeField) else source.local_times
    if fld is None:
        raise SiteNotRecordedError("range needs a recorded local-time field")
    return fld.range()


# ==================== Single walks ====================

def step_direct(state: WalkState, profile: ProfileSpec, rng: np.random.Generator) -> WalkState:
    """One step of the direct chain"""
    k, j = state.pos
    p = float(profile.p(j))
    x = rng.random()
    if x < 2.0 * p:
        j = j + 1 if x < p else j - 1
        return WalkState(Site(k, j), state.n + 1, state.h, state.v + 1)
    k = k + 1 if x < 0.5 + p else k - 1
    return WalkState(Site(k, j), state.n + 1, state.h + 1, state.v)


def _memory_budget_bytes(memory_budget_mb: Optional[float]) -> float:
    if memory_budget_mb is None:
        memory_budget_mb = get_engine_config().get('memory_budget_mb', 1024)
    return float(memory_budget_mb) * 1024 * 1024


def _run_single(construction: bool, profile: ProfileSpec, N: int, rng: np.random.Generator,
                observer: Optional[ObserverConfig], memory_budget_mb: Optional[float]) -> WalkSummary:
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    observer = observer or ObserverConfig.counters()
    needed = observer.required_bytes(N)
    budget = _memory_budget_bytes(memory_budget_mb)
    if needed > budget:
        raise MemoryBudgetError(
            f"{observer.mode.value} recording needs {needed / 2**20:.1f} MiB, "
            f"budget is {budget / 2**20:.1f} MiB"
        )

    compiled: CompiledProfile = profile.compile()
    path = np.zeros(N if observer.mode is ObserverMode.FULL else 0, dtype=np.int64)
    side = 2 * observer.window + 1 if observer.mode is ObserverMode.WINDOW else 0
    window = np.zeros((side, side), dtype=np.int64)
    tracked = pack_sites([s.k for s in observer.tracked_sites],
                         [s.j for s in observer.tracked_sites]).reshape(-1)
    tracked_counts = np.zeros(tracked.shape[0], dtype=np.int64)
    chunk = int(get_engine_config().get('chunk_size', 1 << 18))
    kernel = _walk_construction if construction else _walk_direct

    state = _fresh_state()
    while state[S_N] < N:
        remaining = N - int(state[S_N])
        size = min(chunk, remaining if not construction else 2 * remaining + 16)
        u = rng.random(size)
        kernel(state, u, N, compiled.code, compiled.params, compiled.table, compiled.offset,
               path, window, observer.window, tracked, tracked_counts)

    fld = None
    if observer.mode is ObserverMode.FULL:
        fld = LocalTimeField.from_path(path[:state[S_PATH]])
    elif observer.mode is ObserverMode.WINDOW:
        fld = LocalTimeField.from_window(window, observer.window)

    return WalkSummary(
        final=Site(int(state[S_K]), int(state[S_J])),
        n=int(state[S_N]),
        h=int(state[S_H]),
        v=int(state[S_V]),
        returns_to_origin=int(state[S_RET]),
        xi2_zero=int(state[S_XI2]),
        local_times=fld,
        tracked={s: int(c) for s, c in zip(observer.tracked_sites, tracked_counts)},
    )


def run_direct(profile: ProfileSpec, N: int, rng: np.random.Generator,
               observer: Optional[ObserverConfig] = None,
               memory_budget_mb: Optional[float] = None) -> WalkSummary:
    """N steps of the direct chain from the origin"""
    return _run_single(False, profile, N, rng, observer, memory_budget_mb)


def run_construction(profile: ProfileSpec, N: int, rng: np.random.Generator,
                     observer: Optional[ObserverConfig] = None,
                     memory_budget_mb: Optional[float] = None) -> WalkSummary:
    """N steps built from geometric horizontal bursts and single vertical steps"""
    return _run_single(True, profile, N, rng, observer, memory_budget_mb)


# ==================== Ensembles ====================

ENGINES = ('direct', 'construction')


@dataclass
class Ensemble:
    """Per-replica observables of an ensemble run, indexed by replica"""
    profile: str
    engine: str
    N: int
    replicas: int
    seed: int
    block_size: int
    final_k: np.ndarray
    final_j: np.ndarray
    h: np.ndarray
    v: np.ndarray
    returns: np.ndarray
    xi2: np.ndarray
    tracked_sites: Tuple[Site, ...] = ()
    tracked: Optional[np.ndarray] = None
    ranges: Optional[np.ndarray] = None
    seed_rule: str = SEED_RULE

    def site_counts(self) -> Counter:
        return Counter(zip(self.final_k.tolist(), self.final_j.tolist()))

    def origin_local_time_counts(self) -> Counter:
        return Counter(self.returns.tolist())

    def tracked_column(self, site) -> np.ndarray:
        return self.tracked[:, self.tracked_sites.index(Site(*site))]


def default_block_size(N: int, observer: ObserverConfig) -> int:
    """Short counter-only walks are packed into blocks, everything else runs one per stream"""
    cfg = get_engine_config()
    if observer.keeps_field or N > int(cfg.get('short_walk_limit', 1024)):
        return 1
    return int(cfg.get('block_size', 4096))


def _simulate_block(construction: bool, compiled: CompiledProfile, N: int, m: int,
                    rng: np.random.Generator, tracked: np.ndarray, chunk: int):
    out = np.zeros((m, STATE_SIZE), dtype=np.int64)
    tracked_out = np.zeros((m, tracked.shape[0]), dtype=np.int64)
    state = _fresh_state()
    r = 0
    per_replica = N if not construction else 2 * N + 16
    while r < m:
        u = rng.random(min(chunk, max(1, (m - r) * per_replica)))
        r = _run_block(construction, u, N, state, out, r, compiled.code, compiled.params,
                       compiled.table, compiled.offset, tracked, tracked_out)
    return out, tracked_out


@log_performance
def run_ensemble(profile: ProfileSpec, N: int, replicas: int, seed: int,
                 engine: str = 'direct', observer: Optional[ObserverConfig] = None,
                 jobs: Optional[int] = None, progress: bool = False,
                 block_size: Optional[int] = None) -> Ensemble:
    """
    Run independent replicas in parallel and collect their observables

    Args:
        profile: step-probability profile
        N: steps per replica
        replicas: number of replicas
        seed: master seed; replica streams derive from it only
        engine: 'direct' or 'construction'
        observer: COUNTERS, TRACKED or FULL (FULL adds per-replica range)
        jobs: worker threads (default from config / core count)
        progress: show a tqdm bar

    Returns:
        Ensemble whose arrays do not depend on jobs or scheduling
    """
    if engine not in ENGINES:
        raise ValueError(f"Unknown engine '{engine}', expected one of {ENGINES}")
    if replicas < 1:
        raise ValueError(f"replicas must be positive, got {replicas}")
    observer = observer or ObserverConfig.counters()
    if observer.mode is ObserverMode.WINDOW:
        raise ValueError("windowed fields are per-walk only; use run_direct/run_construction")

    construction = engine == 'construction'
    jobs = jobs or get_jobs()
    block_size = block_size or default_block_size(N, observer)
    if observer.keeps_field and block_size != 1:
        raise ValueError(f"field recording runs one walk per stream; "
                         f"block_size must be 1, got {block_size}")
    n_blocks = -(-replicas // block_size)
    compiled = profile.compile()
    tracked = pack_sites([s.k for s in observer.tracked_sites],
                         [s.j for s in observer.tracked_sites]).reshape(-1)
    chunk = int(get_engine_config().get('chunk_size', 1 << 18))

    states = np.zeros((replicas, STATE_SIZE), dtype=np.int64)
    tracked_all = np.zeros((replicas, tracked.shape[0]), dtype=np.int64)
    ranges = np.zeros(replicas, dtype=np.int64) if observer.mode is ObserverMode.FULL else None

    def work(block: int):
        lo = block * block_size
        m = min(block_size, replicas - lo)
        rng = replica_stream(seed, block, block_size)
        if observer.mode is ObserverMode.FULL:
            summary = _run_single(construction, profile, N, rng, observer, None)
            row = np.array([summary.final.k, summary.final.j, summary.n, summary.h, summary.v,
                            summary.returns_to_origin, summary.xi2_zero, 0, 0], dtype=np.int64)
            counts = np.array([summary.tracked[s] for s in observer.tracked_sites], dtype=np.int64)
            return block, row[None, :], counts[None, :], summary.local_times.range()
        out, tracked_out = _simulate_block(construction, compiled, N, m, rng, tracked, chunk)
        return block, out, tracked_out, None

    logger.info(f"ensemble {profile.label} engine={engine} N={N} replicas={replicas} "
                f"blocks={n_blocks}x{block_size} jobs={jobs}")

    with ThreadPoolExecutor(max_workers=jobs) as executor:
        futures = [executor.submit(work, b) for b in range(n_blocks)]
        bar = tqdm(total=n_blocks, disable=not progress, desc=f"{engine} N={N}", unit="block")
        for future in as_completed(futures):
            block, out, tracked_out, rng_range = future.result()
            lo = block * block_size
            states[lo:lo + out.shape[0]] = out
            tracked_all[lo:lo + out.shape[0]] = tracked_out
            if ranges is not None:
                ranges[lo] = rng_range
            bar.update(1)
        bar.close()

    if not np.all(states[:, S_H] + states[:, S_V] == N):
        raise RuntimeError("step bookkeeping broke: H_N + V_N != N")

    return Ensemble(
        profile=profile.label, engine=engine, N=N, replicas=replicas, seed=seed,
        block_size=block_size,
        final_k=states[:, S_K].copy(), final_j=states[:, S_J].copy(),
        h=states[:, S_H].copy(), v=states[:, S_V].copy(),
        returns=states[:, S_RET].copy(), xi2=states[:, S_XI2].copy(),
        tracked_sites=observer.tracked_sites, tracked=tracked_all, ranges=ranges,
    )

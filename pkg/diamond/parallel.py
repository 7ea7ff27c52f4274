"""
Strip-decomposed executor: each worker thread owns a contiguous strip of
cells and exchanges one edge with each neighbour per half-step through
point-to-point queues.

Per full step, for the worker owning cells [o, o + k):
  aligned half-step  send the strip's last edge right, receive the halo
                     from the left, solve, send NW(o) left, receive NW(o + k)
                     from the right
  offset half-step   purely local
Periodic runs close the ring; closed ends solve their boundary diamonds
locally. Worker 0 is the gather root.
"""

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import lsq_linear

from .boundary import BoundarySpec
from .core import MeshConfig, SolverConfig
from .diagnostics import error_norm
from .errors import AbortedRunError, InvalidArgumentError, InvalidStateError
from .initialization import ZigZagState, initialize
from .problems import WaveProblem
from .tableau import RKTableau
from .timeloop import DiamondIntegrator, NewtonStats, RunReport, check_final_time

logger = logging.getLogger(__name__)

POLL_SECONDS = 0.05


@dataclass(frozen=True)
class Partition:
    N: int
    p: int
    sizes: Tuple[int, ...]
    offsets: Tuple[int, ...]
    root: int = 0

    @property
    def k(self) -> int:
        return self.N // self.p

    @property
    def extra(self) -> int:
        return self.N - self.p * self.k


def partition(N: int, p: int) -> Partition:
    """Split N cells into p contiguous strips of k or k + 1; the root gets k."""
    if p < 1 or p > N:
        raise InvalidArgumentError(f"need 1 <= workers <= N, got workers={p}, N={N}")
    k, extra = divmod(N, p)
    sizes = tuple([k] * (p - extra) + [k + 1] * extra)
    offsets = tuple(int(o) for o in np.concatenate([[0], np.cumsum(sizes)[:-1]]))
    return Partition(N=N, p=p, sizes=sizes, offsets=offsets, root=0)


@dataclass(frozen=True)
class SpeedupModel:
    """Amdahl's law S(n) = 1 / (B + (1 - B) / n)."""

    B: float
    T1: float
    measured: Tuple[Tuple[int, float], ...] = ()

    def speedup(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return 1.0 / (self.B + (1.0 - self.B) / n)

    @property
    def max_speedup(self) -> float:
        return np.inf if self.B == 0 else 1.0 / self.B


def fit_serial_fraction(timings: Sequence[Tuple[int, float]]) -> SpeedupModel:
    """Least-squares serial fraction from (workers, wall_time) pairs."""
    data = np.asarray(timings, dtype=float).reshape(-1, 2)
    n, T = data[:, 0], data[:, 1]
    if np.any(T <= 0) or np.any(n < 1):
        raise InvalidArgumentError("timings need positive wall times and worker counts")
    if not np.any(n == 1) or len(np.unique(n)) < 2:
        raise InvalidArgumentError("timings need worker count 1 and at least one other count")
    T1 = float(np.mean(T[n == 1]))
    multi = n > 1
    # T(n)/T1 - 1/n = B (1 - 1/n)
    A = (1.0 - 1.0 / n[multi])[:, None]
    y = T[multi] / T1 - 1.0 / n[multi]
    B = float(lsq_linear(A, y, bounds=(0.0, 1.0), method="bvls").x[0])
    return SpeedupModel(B=B, T1=T1, measured=tuple((int(a), float(b)) for a, b in zip(n, T)))


# ---------------------------------------------------------------------------
# Workers
# ---------------------------------------------------------------------------

class _Aborted(Exception):
    pass


@dataclass
class _Message:
    kind: str
    step: int
    rank: int
    payload: object = None


@dataclass
class _WorkerResult:
    edges: np.ndarray
    stats: NewtonStats
    started: float
    finished: float
    messages: int
    row_time: float


@dataclass
class _Shared:
    halo: List[queue.Queue]
    nw: List[queue.Queue]
    gather: queue.Queue
    result: queue.Queue
    failures: queue.Queue
    abort: threading.Event = field(default_factory=threading.Event)


def _recv(q: queue.Queue, abort: threading.Event, kind: str, step: int) -> _Message:
    while True:
        try:
            msg = q.get(timeout=POLL_SECONDS)
        except queue.Empty:
            if abort.is_set():
                raise _Aborted()
            continue
        if msg.kind != kind or msg.step != step:
            raise InvalidStateError(f"expected {kind} for half-step {step}, got {msg.kind} for {msg.step}")
        return msg


class _Worker:
    def __init__(self, rank: int, part: Partition, edges: np.ndarray, integrator: DiamondIntegrator,
                 periodic: bool, half_steps: int, snapshot_every: int, shared: _Shared):
        self.rank, self.part = rank, part
        self.edges = edges
        self.integrator = integrator
        self.half_steps, self.snapshot_every = half_steps, snapshot_every
        self.shared = shared
        p = part.p
        self.left = (rank - 1) % p if (periodic or rank > 0) else None
        self.right = (rank + 1) % p if (periodic or rank < p - 1) else None
        self.offset = part.offsets[rank]
        self.step = 0
        self.messages = 0

    def _send(self, box: queue.Queue, kind: str, payload) -> None:
        box.put(_Message(kind, self.step, self.rank, np.array(payload, copy=True)))
        self.messages += 1

    def _advance(self, row_time: float) -> None:
        integ, shared = self.integrator, self.shared
        if self.step % 2 == 0:
            if self.right is not None:
                self._send(shared.halo[self.right], "halo", self.edges[-1])
            halo = None
            if self.left is not None:
                halo = _recv(shared.halo[self.rank], shared.abort, "halo", self.step).payload
            new, nw_first = integ.aligned_row(self.edges, halo, row_time, self.offset,
                                              left_end=self.left is None, right_end=self.right is None)
            if self.left is not None:
                self._send(shared.nw[self.left], "nw", nw_first)
            if self.right is not None:
                new[-1] = _recv(shared.nw[self.rank], shared.abort, "nw", self.step).payload
            self.edges = new
        else:
            self.edges = integ.offset_row(self.edges, row_time, self.offset)

    def run(self) -> None:
        shared = self.shared
        try:
            row_time = 0.0
            started = time.perf_counter()
            while self.step < self.half_steps:
                self._advance(row_time)
                row_time = row_time + 0.5 * self.integrator.mesh.dt
                self.step += 1
                if self.snapshot_every and self.step % self.snapshot_every == 0:
                    shared.gather.put(_Message("snapshot", self.step, self.rank, self.edges.copy()))
            finished = time.perf_counter()
            result = _WorkerResult(self.edges, self.integrator.stats, started, finished,
                                   self.messages, row_time)
            shared.gather.put(_Message("final", self.step, self.rank, result))
            if self.rank == self.part.root:
                self._gather()
        except _Aborted:
            logger.debug("worker %d stopping after abort", self.rank)
        except Exception as exc:
            logger.error("worker %d failed at half-step %d: %s", self.rank, self.step, exc)
            shared.failures.put((self.rank, self.step, exc))
            shared.abort.set()

    def _gather(self) -> None:
        finals: Dict[int, _WorkerResult] = {}
        snapshots: Dict[int, Dict[int, np.ndarray]] = {}
        while len(finals) < self.part.p:
            try:
                msg = self.shared.gather.get(timeout=POLL_SECONDS)
            except queue.Empty:
                if self.shared.abort.is_set():
                    raise _Aborted()
                continue
            if msg.kind == "final":
                finals[msg.rank] = msg.payload
            else:
                snapshots.setdefault(msg.step, {})[msg.rank] = msg.payload
        self.shared.result.put((finals, snapshots))


def _assemble(strips: Dict[int, np.ndarray], p: int) -> np.ndarray:
    return np.concatenate([strips[rank] for rank in range(p)], axis=0)


def parallel_run(problem: WaveProblem, mesh: MeshConfig, tab: RKTableau, init_method: str,
                 bc: BoundarySpec, cfg: SolverConfig, workers: int, snapshot_every: int = 0) -> RunReport:
    """Run on `workers` threads; the final state matches the serial driver."""
    if workers < 1:
        raise InvalidArgumentError(f"workers must be at least 1, got {workers}")
    half_steps = check_final_time(mesh)
    part = partition(mesh.N, workers)
    state0 = initialize(init_method, problem, mesh, tab, cfg)

    shared = _Shared(halo=[queue.Queue() for _ in range(workers)], nw=[queue.Queue() for _ in range(workers)],
                     gather=queue.Queue(), result=queue.Queue(), failures=queue.Queue())
    team = []
    for rank in range(workers):
        lo = 2 * part.offsets[rank]
        hi = lo + 2 * part.sizes[rank]
        team.append(_Worker(rank, part, state0.edges[lo:hi].copy(),
                            DiamondIntegrator(problem, mesh, tab, bc, cfg),
                            bc.periodic, half_steps, snapshot_every, shared))
    logger.info("parallel run %s: N=%d on %d worker(s), strips %s", problem.name, mesh.N, workers, part.sizes)

    threads = [threading.Thread(target=w.run, name=f"diamond-worker-{w.rank}", daemon=True) for w in team]
    for th in threads:
        th.start()
    for th in threads:
        th.join()

    if not shared.failures.empty():
        rank, step, exc = shared.failures.get()
        raise AbortedRunError(f"worker {rank} failed at half-step {step}: {exc}", worker=rank, step=step) from exc

    try:
        finals, snapshot_parts = shared.result.get_nowait()
    except queue.Empty:
        raise AbortedRunError("gather root returned no result", worker=part.root) from None
    edges = _assemble({rank: res.edges for rank, res in finals.items()}, workers)
    row_time = finals[part.root].row_time
    final = ZigZagState(row_time=row_time, parity=half_steps % 2, edges=edges)

    history: List[ZigZagState] = []
    if snapshot_every:
        history.append(state0)
        t_half = 0.5 * mesh.dt
        for step in sorted(snapshot_parts):
            history.append(ZigZagState(row_time=step * t_half, parity=step % 2,
                                       edges=_assemble(snapshot_parts[step], workers)))
        if half_steps % snapshot_every:
            history.append(final)

    stats = NewtonStats()
    for res in finals.values():
        stats.merge(res.stats)
    wall = max(res.finished for res in finals.values()) - min(res.started for res in finals.values())
    error = error_norm(final, problem, mesh) if problem.exact_u is not None else None
    return RunReport(problem=problem.name, init=init_method, bc=bc.code, r=tab.r, N=mesh.N, dx=mesh.dx,
                     dt=mesh.dt, t_final=mesh.t_final, workers=workers, half_steps=half_steps, error=error,
                     newton=stats, wall_seconds=wall, final_state=final, snapshots=history,
                     messages=sum(res.messages for res in finals.values()),
                     message_values=tab.r * state0.edges.shape[-1])

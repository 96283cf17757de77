"""Worker-pool execution of logical plans.

The engine owns a pool of threads that pull (node, partition) tasks from a
FIFO queue. Plans execute node by node in topological order; narrow nodes
(map/filter) need only the matching child partition, wide nodes (repartition,
groupByKey) gather every child partition first. A warm cache node prunes its
subtree from the job, and a partially evicted one recomputes just the missing
partitions from lineage.

Numpy kernels release the GIL, so threads give real parallelism for the
compute-bound work this engine exists to schedule. Worker count is a pure
scheduling knob: partition layout never depends on it, which is what makes
outputs reproducible across pool sizes.
"""

from __future__ import annotations

import csv
import os
import statistics
import threading
import time
from dataclasses import dataclass, field
from queue import Empty, Queue
from typing import Any, Callable, Iterable, Sequence

from .dataframe import (
    CacheNode,
    FilterNode,
    GroupByKeyNode,
    MapPartitionsNode,
    Partition,
    PlanNode,
    RepartitionNode,
    SCHEMA_CHECKS,
    SourceNode,
    UnionNode,
    check_partition,
    shuffle_hash,
)
from .errors import JobError, OutOfBounds, TundraError

_worker_ctx = threading.local()


def current_worker_index():
    """Index of the pool worker running the caller, or None on the driver."""
    return getattr(_worker_ctx, "index", None)


class WorkerKilled(TundraError):
    """Injected failure: the task's output is discarded and it is rescheduled."""


@dataclass(frozen=True)
class EngineConfig:
    workers: int = 0  # 0 -> resolve from TUNDRA_WORKERS or cpu count
    min_workers: int = 1
    max_workers: int = 64
    seed: int = 0
    fault_plan: tuple[tuple[int, int], ...] = ()

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("TUNDRA_WORKERS")
        if env:
            return max(1, int(env))
        return max(1, os.cpu_count() or 1)

    def validate(self) -> None:
        w = self.resolved_workers()
        if not (self.min_workers <= w <= self.max_workers):
            raise OutOfBounds(
                f"workers={w} outside [{self.min_workers}, {self.max_workers}]")


@dataclass
class JobMetrics:
    wall_time_ms: float = 0.0
    per_partition_ms: list[float] = field(default_factory=list)
    rows_processed: int = 0
    recomputed_partitions: int = 0
    worker_count_timeline: list[tuple[float, int]] = field(default_factory=list)


class BroadcastHandle:
    """Driver-published read-only payload, materialized at most once per worker.

    value() deserializes lazily and caches per worker index, mirroring the
    load-once-per-node behaviour that broadcasting exists to guarantee.
    """

    _next_id = 0
    _id_lock = threading.Lock()

    def __init__(self, payload: bytes, deserialize: Callable[[bytes], Any] | None = None):
        if not payload:
            raise ValueError("broadcast payload must be nonempty")
        with BroadcastHandle._id_lock:
            BroadcastHandle._next_id += 1
            self.id = BroadcastHandle._next_id
        self.payload = payload
        self._deserialize = deserialize or (lambda b: b)
        self._cache: dict[int, Any] = {}
        self._driver_value: Any = None
        self._has_driver_value = False
        self.materializations: dict[int, int] = {}
        self._lock = threading.Lock()

    def value(self) -> Any:
        w = current_worker_index()
        if w is None:
            # Driver-side use; not counted against the per-worker ceiling.
            if not self._has_driver_value:
                self._driver_value = self._deserialize(self.payload)
                self._has_driver_value = True
            return self._driver_value
        with self._lock:
            if w in self._cache:
                return self._cache[w]
        # Deserialize outside the lock; first writer wins the counter.
        obj = self._deserialize(self.payload)
        with self._lock:
            if w not in self._cache:
                self._cache[w] = obj
                self.materializations[w] = self.materializations.get(w, 0) + 1
            return self._cache[w]

    def total_materializations(self) -> int:
        with self._lock:
            return sum(self.materializations.values())


class _Task:
    __slots__ = ("job", "fn", "key")

    def __init__(self, job: "_JobState", fn: Callable[[], Any], key):
        self.job = job
        self.fn = fn
        self.key = key  # (node label, partition index) for error reporting


class _JobState:
    def __init__(self, fault_plan: Iterable[tuple[int, int]]):
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.pending = 0
        self.results: dict[Any, Any] = {}
        self.failed: JobError | None = None
        self.retry: list[_Task] = []
        self.fault_plan = set(fault_plan)
        self.worker_ordinals: dict[int, int] = {}
        self.per_partition_ms: list[float] = []
        self.recomputed = 0

    def take_ordinal(self, worker: int) -> int:
        with self.lock:
            n = self.worker_ordinals.get(worker, 0)
            self.worker_ordinals[worker] = n + 1
            return n

    def should_fail(self, worker: int, ordinal: int) -> bool:
        with self.lock:
            if (worker, ordinal) in self.fault_plan:
                self.fault_plan.discard((worker, ordinal))
                return True
            return False


class Engine:
    """Thread pool executing plan partitions with lineage-based retry."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self.config.validate()
        self._queue: Queue = Queue()
        self._lock = threading.Lock()
        self._threads: dict[int, threading.Thread] = {}
        self._retired: set[int] = set()
        self._target_workers = 0
        self._start_ms = time.monotonic() * 1000.0
        self._timeline: list[tuple[float, int]] = []
        self._shutdown = False
        self.set_worker_count(self.config.resolved_workers(), _initial=True)

    # --- pool management ---

    @property
    def worker_count(self) -> int:
        return self._target_workers

    def set_worker_count(self, n: int, _initial: bool = False) -> None:
        if not _initial and not (self.config.min_workers <= n <= self.config.max_workers):
            raise OutOfBounds(
                f"worker count {n} outside "
                f"[{self.config.min_workers}, {self.config.max_workers}]")
        with self._lock:
            current = self._target_workers
            self._target_workers = n
            self._timeline.append((time.monotonic() * 1000.0 - self._start_ms, n))
            if n > current:
                for idx in range(current, n):
                    self._retired.discard(idx)
                    if idx not in self._threads or not self._threads[idx].is_alive():
                        t = threading.Thread(target=self._worker_loop, args=(idx,),
                                             name=f"tundra-worker-{idx}", daemon=True)
                        self._threads[idx] = t
                        t.start()
            elif n < current:
                for idx in range(n, current):
                    self._retired.add(idx)

    def shutdown(self) -> None:
        with self._lock:
            self._shutdown = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()

    def _worker_loop(self, index: int) -> None:
        _worker_ctx.index = index
        while True:
            with self._lock:
                if self._shutdown or index in self._retired:
                    self._threads.pop(index, None)
                    return
            try:
                item = self._queue.get(timeout=0.05)
            except Empty:
                continue
            self._run_task(item, index)

    def _run_task(self, task: _Task, worker: int) -> None:
        job = task.job
        with job.lock:
            if job.failed is not None:
                job.pending -= 1
                job.cond.notify_all()
                return
        ordinal = job.take_ordinal(worker)
        t0 = time.perf_counter()
        try:
            if job.should_fail(worker, ordinal):
                raise WorkerKilled(f"injected fault at worker {worker}, task {ordinal}")
            result = task.fn()
        except WorkerKilled:
            elapsed = (time.perf_counter() - t0) * 1000.0
            with job.lock:
                job.per_partition_ms.append(elapsed)
                job.recomputed += 1
                job.retry.append(task)
                job.cond.notify_all()
            return
        except BaseException as exc:
            with job.lock:
                if job.failed is None:
                    node_label, pidx = task.key
                    job.failed = JobError(
                        f"partition {pidx} of {node_label} failed: {exc!r}",
                        partition=pidx, cause=exc)
                job.pending -= 1
                job.cond.notify_all()
            return
        elapsed = (time.perf_counter() - t0) * 1000.0
        with job.lock:
            job.per_partition_ms.append(elapsed)
            job.results[task.key] = result
            job.pending -= 1
            job.cond.notify_all()

    def _run_wave(self, job: _JobState, tasks: list[_Task]) -> dict[Any, Any]:
        """Run one barrier of independent tasks; reschedules injected failures."""
        if not tasks:
            return {}
        with job.lock:
            job.pending += len(tasks)
        for t in tasks:
            self._queue.put(t)
        with job.lock:
            while True:
                while job.retry:
                    t = job.retry.pop()
                    self._queue.put(t)
                if job.pending == 0 and not job.retry:
                    break
                job.cond.wait(timeout=0.1)
            if job.failed is not None:
                raise job.failed
            return {t.key: job.results[t.key] for t in tasks}

    # --- generic parallel map (used by estimators for per-partition work) ---

    def map(self, fn: Callable[[Any], Any], items: Sequence[Any]) -> list[Any]:
        job = _JobState(fault_plan=())
        tasks = [_Task(job, (lambda it=it: fn(it)), ("map", i))
                 for i, it in enumerate(items)]
        results = self._run_wave(job, tasks)
        return [results[("map", i)] for i in range(len(items))]

    # --- broadcast ---

    def broadcast(self, payload: bytes,
                  deserialize: Callable[[bytes], Any] | None = None) -> BroadcastHandle:
        return BroadcastHandle(payload, deserialize)

    # --- plan execution ---

    def run_plan(self, root: PlanNode) -> tuple[list[Partition], JobMetrics]:
        t_start = time.perf_counter()
        timeline_from = time.monotonic() * 1000.0 - self._start_ms
        job = _JobState(self.config.fault_plan)

        order = _topo_order(root)
        needed = _needed_partitions(root, order)
        mat: dict[int, dict[int, tuple]] = {}  # id(node) -> {pidx: rows}

        for node in order:
            need = sorted(needed.get(id(node), ()))
            if not need:
                continue
            mat[id(node)] = self._materialize(node, need, mat, job)

        out_parts = [Partition(index=i, rows=mat[id(root)][i])
                     for i in sorted(mat.get(id(root), {}))]
        metrics = JobMetrics(
            wall_time_ms=(time.perf_counter() - t_start) * 1000.0,
            per_partition_ms=list(job.per_partition_ms),
            rows_processed=sum(len(p.rows) for p in out_parts),
            recomputed_partitions=job.recomputed,
            worker_count_timeline=[(ts, n) for ts, n in self._timeline
                                   if ts >= timeline_from] or [self._timeline[-1]],
        )
        return out_parts, metrics

    def _materialize(self, node: PlanNode, need: list[int],
                     mat: dict[int, dict[int, tuple]], job: _JobState) -> dict[int, tuple]:
        if isinstance(node, SourceNode):
            return {i: node.partitions[i] for i in need}

        if isinstance(node, CacheNode):
            child = mat.get(id(node.child), {})
            out = {}
            for i in need:
                if i in node.store:
                    out[i] = node.store[i]
                else:
                    rows = child[i]
                    node.store[i] = rows
                    out[i] = rows
            return out

        if isinstance(node, UnionNode):
            left_n = node.left.num_partitions()
            out = {}
            for i in need:
                if i < left_n:
                    out[i] = mat[id(node.left)][i]
                else:
                    out[i] = mat[id(node.right)][i - left_n]
            return out

        if isinstance(node, MapPartitionsNode):
            child = mat[id(node.child)]
            schema = node.schema

            def run_map(i: int):
                rows = tuple(tuple(r) for r in node.fn(i, list(child[i])))
                if SCHEMA_CHECKS:
                    check_partition(rows, schema)
                return rows

            tasks = [_Task(job, (lambda i=i: run_map(i)), (node.label, i)) for i in need]
            results = self._run_wave(job, tasks)
            return {i: results[(node.label, i)] for i in need}

        if isinstance(node, FilterNode):
            child = mat[id(node.child)]

            def run_filter(i: int):
                return tuple(r for r in child[i] if node.predicate(r))

            tasks = [_Task(job, (lambda i=i: run_filter(i)), ("filter", i)) for i in need]
            results = self._run_wave(job, tasks)
            return {i: results[("filter", i)] for i in need}

        if isinstance(node, RepartitionNode):
            child = mat[id(node.child)]
            all_rows = []
            for i in sorted(child):
                all_rows.extend(child[i])
            n = node.n

            def run_slice(i: int):
                return tuple(all_rows[i::n])

            tasks = [_Task(job, (lambda i=i: run_slice(i)), ("repartition", i)) for i in need]
            results = self._run_wave(job, tasks)
            return {i: results[("repartition", i)] for i in need}

        if isinstance(node, GroupByKeyNode):
            child = mat[id(node.child)]
            src_indices = sorted(child)
            n = node.num_partitions()
            kidx, kdt = node.key_index, node.key_dtype

            def run_bucketize(i: int):
                buckets: list[list] = [[] for _ in range(n)]
                for r in child[i]:
                    buckets[shuffle_hash(r[kidx], kdt, n)].append(r)
                return buckets

            tasks = [_Task(job, (lambda i=i: run_bucketize(i)), ("shuffle-map", i))
                     for i in src_indices]
            bucketized = self._run_wave(job, tasks)

            def run_reduce(j: int):
                groups: dict = {}
                for i in src_indices:
                    for r in bucketized[("shuffle-map", i)][j]:
                        groups.setdefault(r[kidx], []).append(r)
                return tuple((k, rows) for k, rows in groups.items())

            tasks = [_Task(job, (lambda j=j: run_reduce(j)), ("shuffle-reduce", j))
                     for j in need]
            results = self._run_wave(job, tasks)
            return {j: results[("shuffle-reduce", j)] for j in need}

        raise TypeError(f"unknown plan node {type(node).__name__}")


def _topo_order(root: PlanNode) -> list[PlanNode]:
    order: list[PlanNode] = []
    seen: set[int] = set()

    def visit(node: PlanNode):
        if id(node) in seen:
            return
        seen.add(id(node))
        for c in node.children():
            visit(c)
        order.append(node)

    visit(root)
    return order


def _needed_partitions(root: PlanNode, order: list[PlanNode]) -> dict[int, set[int]]:
    """Which partitions of each node a job must compute, honoring warm caches."""
    needed: dict[int, set[int]] = {id(root): set(range(root.num_partitions()))}
    for node in reversed(order):
        need = needed.get(id(node))
        if not need:
            continue
        if isinstance(node, SourceNode):
            continue
        if isinstance(node, CacheNode):
            misses = {i for i in need if i not in node.store}
            if misses:
                needed.setdefault(id(node.child), set()).update(misses)
        elif isinstance(node, (MapPartitionsNode, FilterNode)):
            needed.setdefault(id(node.child), set()).update(need)
        elif isinstance(node, (RepartitionNode, GroupByKeyNode)):
            child = node.children()[0]
            needed.setdefault(id(child), set()).update(range(child.num_partitions()))
        elif isinstance(node, UnionNode):
            left_n = node.left.num_partitions()
            lneed = {i for i in need if i < left_n}
            rneed = {i - left_n for i in need if i >= left_n}
            if lneed:
                needed.setdefault(id(node.left), set()).update(lneed)
            if rneed:
                needed.setdefault(id(node.right), set()).update(rneed)
    return needed


# --- module-default engine (ambient execution context for actions) ---

_default_engine: Engine | None = None
_default_lock = threading.Lock()


def get_engine() -> Engine:
    global _default_engine
    with _default_lock:
        if _default_engine is None:
            _default_engine = Engine(EngineConfig())
        return _default_engine


def set_engine(engine: Engine | None) -> None:
    global _default_engine
    with _default_lock:
        old = _default_engine
        _default_engine = engine
    if old is not None and old is not engine:
        old.shutdown()


def run_job(plan: PlanNode, config: EngineConfig) -> tuple[list[Partition], JobMetrics]:
    """One-shot job on a transient engine."""
    with Engine(config) as eng:
        return eng.run_plan(plan)


# --- scaling benchmark ---

def benchmark_scaling(task: Callable[[Engine], Any], worker_counts: Sequence[int],
                      repetitions: int = 3) -> list[dict]:
    """Median wall time of `task` per worker count.

    `task` receives a fresh engine and must run the work to completion; the
    engine is torn down between runs so pools never bleed across counts.
    """
    if not worker_counts or any(w < 1 for w in worker_counts):
        raise ValueError("worker counts must be a nonempty list of ints >= 1")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    table = []
    for w in worker_counts:
        times = []
        for _ in range(repetitions):
            with Engine(EngineConfig(workers=w, max_workers=max(worker_counts))) as eng:
                t0 = time.perf_counter()
                task(eng)
                times.append((time.perf_counter() - t0) * 1000.0)
        table.append({"workers": w, "median_ms": statistics.median(times),
                      "runs": repetitions})
    return table


def write_benchmark_csv(table: list[dict], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["workers", "median_ms", "runs"])
        for row in table:
            writer.writerow([row["workers"], repr(row["median_ms"]), row["runs"]])

"""Seeded synthetic accounting traces with planted, learnable failure structure.

Each job fails with probability ``sigmoid(logit)`` where::

    logit = base_failure_logit
          + w_user_inexperience * [owner is inexperienced]
          + w_node_vulnerability * (node flag + 0.5 * rack flag)
          + w_name_bugginess     * [owner's job template is buggy]
          + w_offpeak_hour       * [submitted outside the peak window]
          + w_long_wallclock     * (log(wallclock) - mu) / sigma

Every factor is a deterministic function of observable fields (owner,
hostname, normalized job name, submission hour, wallclock), so a classifier
can recover it. Most failed jobs additionally run with abnormal CPU
utilization (stalled near zero or pinned near one), a symptom only visible
to the runtime model.

All randomness comes from ``GeneratorConfig.seed``. The job population
(users, templates, arrivals, sizes) does not depend on the failure weights,
which is what lets :func:`calibrate` tune two weights smoothly.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from .errors import CalibrationError, ContractError
from .features import DEFAULT_SIMILARITY, canonical_name, name_similarity
from .trace import RecordSet, WorkloadRecord, filter_records

log = logging.getLogger(__name__)

FACTORS = ("user_inexperience", "node_vulnerability", "name_bugginess", "offpeak_hour",
           "long_wallclock")
DEFAULT_WEIGHTS = {
    "user_inexperience": 1.0,
    "node_vulnerability": 1.5,
    "name_bugginess": 9.0,
    "offpeak_hour": 1.0,
    "long_wallclock": 0.6,
}

# exit codes of failed jobs and their shares among failures (137 excluded)
FAILURE_EXIT_CODES = (1, 2, 7, 127, 255, 3, 126, 134, 139, 143)
_EXIT_SHARES = np.array([58.16, 8.25, 17.83, 1.44, 12.52] + [1.28 / 5] * 5)
FAILURE_EXIT_P = _EXIT_SHARES / _EXIT_SHARES.sum()

_SOFTWARE = (
    "blast", "namd", "gromacs", "lammps", "vasp", "orca", "bwa", "trinity", "wrf",
    "cp2k", "abinit", "matlab", "rscript", "python", "julia", "openfoam", "comsol",
    "gaussian", "nwchem", "siesta", "quantum", "spades", "bowtie", "hisat", "salmon",
    "cufflinks", "samtools", "velvet", "mrbayes", "raxml", "beast", "plink", "gatk",
    "tophat", "canu", "paraview", "octave", "ansys", "fluent", "starccm",
)
_TASKS = (
    "run", "prod", "equil", "relax", "scan", "sweep", "train", "align", "assemble",
    "mesh", "solve", "anneal", "mcmc", "opt", "freq", "test", "post", "sample",
)

_CONFIG_ALIASES = {"wallclock_mu", "wallclock_sigma"} | {f"weight_{f}" for f in FACTORS}


@dataclass(frozen=True)
class GeneratorConfig:
    n_users: int = 100
    n_nodes: int = 467
    n_racks: int = 10
    days: int = 60
    jobs_per_day_mean: float = 900.0
    user_experience_mix: float = 0.75
    base_failure_logit: float = -5.0
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    wallclock_lognormal: tuple = (7.0, 1.6)
    runtime_cap: int = 172800
    seed: int = 0
    start_epoch: int = 1596240000  # 2020-08-01T00:00:00Z
    n_groups: int = 20
    names_per_user: float = 4.0
    inexperienced_activity: float = 0.4
    template_wallclock_sd: float = 0.5
    buggy_rate_experienced: float = 0.03
    buggy_rate_inexperienced: float = 0.25
    vulnerable_node_rate: float = 0.05
    vulnerable_racks: tuple = (1, 3, 7)
    busy_nodes: int = 20
    peak_start_hour: int = 8
    peak_end_hour: int = 18
    array_job_rate: float = 0.3
    array_mean_size: float = 8.0
    wait_mean: float = 600.0
    failure_signature_rate: float = 0.8
    stall_fraction: float = 0.35
    cancel_rate: float = 0.005
    never_started_rate: float = 0.004

    def __post_init__(self):
        w = dict(DEFAULT_WEIGHTS)
        w.update(self.weights)
        unknown = set(w) - set(FACTORS)
        if unknown:
            raise ContractError(f"unknown failure factors: {sorted(unknown)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "wallclock_lognormal",
                           tuple(float(v) for v in self.wallclock_lognormal))
        object.__setattr__(self, "vulnerable_racks", tuple(int(r) for r in self.vulnerable_racks))
        if self.n_nodes < 1 or self.n_racks < 1 or self.n_users < 1 or self.n_groups < 1:
            raise ContractError("n_nodes, n_racks, n_users and n_groups must be at least 1")
        if self.days < 1:
            raise ContractError("days must be at least 1")
        if self.jobs_per_day_mean < 0:
            raise ContractError("jobs_per_day_mean must be non-negative")
        if not 0 <= self.user_experience_mix <= 1:
            raise ContractError("user_experience_mix must lie in [0, 1]")
        if self.runtime_cap < 1 or self.wallclock_lognormal[1] <= 0:
            raise ContractError("runtime_cap and the wallclock sigma must be positive")
        if not 0 <= self.peak_start_hour < self.peak_end_hour <= 24:
            raise ContractError("peak window must satisfy 0 <= start < end <= 24")
        if not 0 <= self.seed < 2 ** 64:
            raise ContractError("seed must be an unsigned 64-bit integer")

    def with_weights(self, **changes) -> "GeneratorConfig":
        w = dict(self.weights)
        w.update(changes)
        return dataclasses.replace(self, weights=w)

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["wallclock_lognormal"] = list(self.wallclock_lognormal)
        doc["vulnerable_racks"] = list(self.vulnerable_racks)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "GeneratorConfig":
        """Build from a flat document; unknown keys are rejected.

        Besides the field names, ``weight_<factor>`` and
        ``wallclock_mu``/``wallclock_sigma`` are accepted as flat spellings.
        """
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known - _CONFIG_ALIASES
        if unknown:
            raise ContractError(f"unknown generator config keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in doc.items() if k in known}
        weights = dict(kwargs.pop("weights", {}) or {})
        for f in FACTORS:
            if f"weight_{f}" in doc:
                weights[f] = float(doc[f"weight_{f}"])
        kwargs["weights"] = weights
        mu, sigma = kwargs.get("wallclock_lognormal", cls.wallclock_lognormal)
        mu = doc.get("wallclock_mu", mu)
        sigma = doc.get("wallclock_sigma", sigma)
        kwargs["wallclock_lognormal"] = (float(mu), float(sigma))
        return cls(**kwargs)


def load_generator_config(path) -> GeneratorConfig:
    from .config import read_document

    return GeneratorConfig.from_dict(read_document(path))


def save_generator_config(cfg: GeneratorConfig, path) -> None:
    from .config import write_flat_document

    doc = cfg.to_dict()
    weights = doc.pop("weights")
    mu, sigma = doc.pop("wallclock_lognormal")
    doc["wallclock_mu"], doc["wallclock_sigma"] = mu, sigma
    for f in FACTORS:
        doc[f"weight_{f}"] = weights[f]
    write_flat_document(doc, path)


@dataclass
class TraceStats:
    failure_count_rate: float
    failed_cpu_share: float
    failed_mem_share: float
    per_user_rates: dict = field(default_factory=dict)
    per_node_rates: dict = field(default_factory=dict)
    per_hour_rates: list = field(default_factory=lambda: [0.0] * 24)
    per_dow_rates: list = field(default_factory=lambda: [0.0] * 7)

    def headline(self) -> tuple:
        return (self.failure_count_rate, self.failed_cpu_share, self.failed_mem_share)


def _group_rates(keys, y) -> dict:
    uniq, inv = np.unique(keys, return_inverse=True)
    fails = np.bincount(inv, weights=y)
    total = np.bincount(inv)
    return {k.item() if hasattr(k, "item") else k: float(f / t)
            for k, f, t in zip(uniq, fails, total)}


def _dense_rates(keys, y, size) -> list:
    fails = np.bincount(keys, weights=y, minlength=size)
    total = np.bincount(keys, minlength=size)
    return [float(f / t) if t else 0.0 for f, t in zip(fails, total)]


def summary_stats(rs: RecordSet) -> TraceStats:
    """Failure rate and failed CPU / memory shares of a filtered record set."""
    if len(rs) == 0:
        raise ContractError("summary statistics of an empty record set")
    from .trace import labels

    y = labels(rs).astype(np.float64)
    cpu = rs.column("cpu")
    mem = rs.column("mem")
    cpu_total = cpu.sum()
    mem_total = mem.sum()
    sub = rs.column("submission")
    return TraceStats(
        failure_count_rate=float(y.mean()),
        failed_cpu_share=float(cpu[y == 1].sum() / cpu_total) if cpu_total > 0 else 0.0,
        failed_mem_share=float(mem[y == 1].sum() / mem_total) if mem_total > 0 else 0.0,
        per_user_rates=_group_rates(rs.column("owner"), y),
        per_node_rates=_group_rates(rs.column("hostname"), y),
        per_hour_rates=_dense_rates((sub // 3600) % 24, y, 24),
        per_dow_rates=_dense_rates((sub // 86400 + 3) % 7, y, 7),
    )


def hostname(node: int, n_racks: int) -> str:
    """Node i sits in rack (i mod n_racks) + 1, chassis (i div n_racks) + 1."""
    return f"cpu-{node % n_racks + 1}-{node // n_racks + 1}"


def _streams(seed: int):
    names = ("structure", "arrivals", "jobs", "labels", "noise")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}


def _day_volume(cfg: GeneratorConfig) -> np.ndarray:
    day0 = cfg.start_epoch // 86400
    dow = (day0 + np.arange(cfg.days) + 3) % 7
    factor = np.where(dow >= 5, 0.65, 1.14)  # weekly mean ~1
    return cfg.jobs_per_day_mean * factor


def daily_counts(cfg: GeneratorConfig) -> np.ndarray:
    """Number of records the generator emits for each day (before filtering)."""
    return _streams(cfg.seed)["arrivals"].poisson(_day_volume(cfg))


@dataclass
class _Population:
    """Everything about a trace except which jobs fail."""

    n: int
    job_id: np.ndarray
    owner: np.ndarray
    group: np.ndarray
    job_name: np.ndarray
    granted_pe: np.ndarray
    node: np.ndarray
    submission: np.ndarray
    wait: np.ndarray
    wallclock: np.ndarray
    slots: np.ndarray
    mem: np.ndarray
    io: np.ndarray
    iow: np.ndarray
    maxvmem: np.ndarray
    util_ok: np.ndarray
    util_failed: np.ndarray
    u_label: np.ndarray
    exit_code: np.ndarray
    cancelled: np.ndarray
    not_started: np.ndarray
    factors: dict
    owner_names: list
    group_names: list
    host_names: list

    @property
    def ran(self) -> np.ndarray:
        return ~(self.cancelled | self.not_started)


def _user_templates(rng, k, threshold=DEFAULT_SIMILARITY):
    chosen = []
    for _ in range(50 * k):
        if len(chosen) == k:
            break
        t = f"{_SOFTWARE[rng.integers(len(_SOFTWARE))]}_{_TASKS[rng.integers(len(_TASKS))]}"
        c = canonical_name(t)
        if all(name_similarity(c, canonical_name(o)) < threshold for o in chosen):
            chosen.append(t)
    return chosen


def _buggy_templates(key, volume, experienced, rate_exp, rate_inexp) -> np.ndarray:
    """Mark templates buggy in random ``key`` order until they cover ``rate`` of their
    class's expected job volume.

    A per-template coin flip lets a few heavy templates swing the failure
    rate from seed to seed; a volume quota keeps it stable.
    """
    buggy = np.zeros(len(key), dtype=bool)
    for cls, rate in ((True, rate_exp), (False, rate_inexp)):
        idx = np.flatnonzero(experienced == cls)
        if len(idx) == 0 or volume[idx].sum() <= 0:
            continue
        idx = idx[np.argsort(key[idx], kind="stable")]
        share = volume[idx] / volume[idx].sum()
        before = np.cumsum(share) - share
        buggy[idx] = before + share / 2 < rate
    return buggy


def _population(cfg: GeneratorConfig) -> _Population:
    rs = _streams(cfg.seed)
    srng, jrng = rs["structure"], rs["jobs"]

    # users
    U = cfg.n_users
    experienced = np.zeros(U, dtype=bool)
    experienced[srng.permutation(U)[:round(cfg.user_experience_mix * U)]] = True
    activity = srng.lognormal(0.0, 0.8, U) * np.where(experienced, 1.0, cfg.inexperienced_activity)
    activity /= activity.sum()
    user_group = srng.integers(0, cfg.n_groups, U)
    slot_choices = np.array([1, 2, 4, 8, 16, 36, 72])
    user_slots = srng.choice(slot_choices, U, p=[0.3, 0.08, 0.12, 0.15, 0.1, 0.2, 0.05])
    fill = srng.random(U) < 0.3
    user_pe = np.where(user_slots == 1, "NONE",
                       np.where(user_slots > 36, "mpi", np.where(fill, "fill", "sm")))
    templates, template_user, template_key, template_offset = [], [], [], []
    user_template_idx, user_template_p = [], []
    for u in range(U):
        k = 1 + srng.poisson(max(cfg.names_per_user - 1.0, 0.0))
        names = _user_templates(srng, k)
        base = len(templates)
        templates.extend(names)
        template_user.extend([u] * len(names))
        template_key.extend(srng.random(len(names)))
        template_offset.extend(srng.normal(0.0, cfg.template_wallclock_sd, len(names)))
        user_template_idx.append(np.arange(base, base + len(names)))
        user_template_p.append(srng.dirichlet(np.ones(len(names))))
    template_user = np.array(template_user, dtype=np.int64)
    volume = activity[template_user] * np.concatenate(user_template_p)
    template_buggy = _buggy_templates(np.array(template_key), volume, experienced[template_user],
                                      cfg.buggy_rate_experienced, cfg.buggy_rate_inexperienced)
    template_offset = np.array(template_offset)

    # nodes
    N = cfg.n_nodes
    node_rack = np.arange(N) % cfg.n_racks + 1
    node_vuln = (srng.random(N) < cfg.vulnerable_node_rate).astype(float)
    rack_vuln = np.isin(node_rack, cfg.vulnerable_racks).astype(float)
    node_factor = node_vuln + 0.5 * rack_vuln
    popularity = np.ones(N)
    popularity[srng.permutation(N)[:min(cfg.busy_nodes, N)]] = 6.0
    popularity /= popularity.sum()

    # arrivals: events (single jobs or arrays) until each day's record count is met
    counts = daily_counts(cfg)
    hours = np.arange(24)
    peak = (hours >= cfg.peak_start_hour) & (hours < cfg.peak_end_hour)
    prof_exp = np.where(peak, 4.0, 0.5)
    prof_exp /= prof_exp.sum()
    prof_inexp = np.where(peak, 1.2, np.where(hours >= 18, 1.5, 0.7))
    prof_inexp /= prof_inexp.sum()
    ev_user, ev_size, ev_sub = [], [], []
    for d, n_d in enumerate(counts):
        if n_d == 0:
            continue
        m = int(n_d) + 8
        users = jrng.choice(U, m, p=activity)
        is_array = experienced[users] & (jrng.random(m) < cfg.array_job_rate)
        sizes = np.where(is_array, 1 + jrng.geometric(1.0 / max(cfg.array_mean_size, 1.0), m), 1)
        while sizes.sum() < n_d:  # rare: top up with single jobs
            users = np.append(users, jrng.choice(U, m, p=activity))
            sizes = np.append(sizes, np.ones(m, dtype=sizes.dtype))
        cum = np.cumsum(sizes)
        last = int(np.searchsorted(cum, n_d))
        sizes = sizes[:last + 1].copy()
        sizes[-1] -= cum[last] - n_d
        users = users[:last + 1]
        hour = np.where(experienced[users], jrng.choice(24, len(users), p=prof_exp),
                        jrng.choice(24, len(users), p=prof_inexp))
        sub = cfg.start_epoch + d * 86400 + hour * 3600 + jrng.integers(0, 3600, len(users))
        order = np.argsort(sub, kind="stable")
        ev_user.append(users[order])
        ev_size.append(sizes[order])
        ev_sub.append(sub[order])
    if ev_user:
        ev_user = np.concatenate(ev_user)
        ev_size = np.concatenate(ev_size).astype(np.int64)
        ev_sub = np.concatenate(ev_sub).astype(np.int64)
    else:
        ev_user = ev_size = ev_sub = np.zeros(0, dtype=np.int64)
    E = len(ev_user)
    ev_template = np.array([user_template_idx[u][jrng.choice(len(user_template_p[u]), p=user_template_p[u])]
                            for u in ev_user], dtype=np.int64)
    numbered = jrng.random(E) < 0.7
    run_no = jrng.integers(1, 1000, E)
    ev_name = np.array([f"{templates[t]}_{r:03d}" if nb else templates[t]
                        for t, nb, r in zip(ev_template, numbered, run_no)], dtype=object)

    # expand events into records
    ev_index = np.repeat(np.arange(E), ev_size)
    n = len(ev_index)
    owner = ev_user[ev_index]
    template = ev_template[ev_index]
    slots = user_slots[owner].astype(np.int64)
    node = jrng.choice(N, n, p=popularity)
    mu, sigma = cfg.wallclock_lognormal
    wall = np.exp(jrng.normal(mu + template_offset[template], sigma))
    wall = np.clip(np.rint(wall), 1, cfg.runtime_cap).astype(np.int64)
    wait = np.rint(jrng.exponential(cfg.wait_mean * (1.0 + slots / 36.0))).astype(np.int64)
    mem_per_core = jrng.lognormal(0.0, 0.6, n)
    mem = slots * wall * mem_per_core
    maxvmem = slots * mem_per_core * 1e9 * jrng.uniform(1.0, 1.6, n)
    io = wall * slots * jrng.lognormal(math.log(2e-5), 1.0, n)
    iow = wall * jrng.uniform(0.0, 0.05, n)
    util_ok = jrng.uniform(0.3, 0.95, n)
    signature = jrng.random(n) < cfg.failure_signature_rate
    stall = jrng.random(n) < cfg.stall_fraction
    util_sig = np.where(stall, jrng.uniform(0.01, 0.15, n), jrng.uniform(0.97, 1.0, n))
    util_failed = np.where(signature, util_sig, util_ok)
    exit_code = np.asarray(FAILURE_EXIT_CODES)[jrng.choice(len(FAILURE_EXIT_CODES), n, p=FAILURE_EXIT_P)]
    noise = rs["noise"]
    cancelled = noise.random(n) < cfg.cancel_rate
    not_started = (noise.random(n) < cfg.never_started_rate) & ~cancelled
    u_label = rs["labels"].random(n)

    submission = ev_sub[ev_index]
    hour = (submission // 3600) % 24
    offpeak = ~((hour >= cfg.peak_start_hour) & (hour < cfg.peak_end_hour))
    factors = {
        "user_inexperience": (~experienced[owner]).astype(float),
        "node_vulnerability": node_factor[node],
        "name_bugginess": template_buggy[template].astype(float),
        "offpeak_hour": offpeak.astype(float),
        "long_wallclock": (np.log(wall) - mu) / sigma,
    }
    job_id = 1_000_000 + ev_index.astype(np.int64)
    width = len(str(max(U - 1, 1)))
    return _Population(
        n=n, job_id=job_id, owner=owner, group=user_group[owner], job_name=ev_name[ev_index],
        granted_pe=user_pe[owner], node=node, submission=submission, wait=wait,
        wallclock=wall, slots=slots, mem=mem, io=io, iow=iow, maxvmem=maxvmem,
        util_ok=util_ok, util_failed=util_failed, u_label=u_label, exit_code=exit_code,
        cancelled=cancelled, not_started=not_started, factors=factors,
        owner_names=[f"user{u:0{width}d}" for u in range(U)],
        group_names=[f"grp{g:02d}" for g in range(cfg.n_groups)],
        host_names=[hostname(i, cfg.n_racks) for i in range(N)],
    )


def _logit(cfg: GeneratorConfig, pop: _Population, base=None, long_weight=None) -> np.ndarray:
    w = dict(cfg.weights)
    if long_weight is not None:
        w["long_wallclock"] = long_weight
    z = np.full(pop.n, cfg.base_failure_logit if base is None else base)
    for f in FACTORS:
        z = z + w[f] * pop.factors[f]
    return z


def failure_probability(cfg: GeneratorConfig, pop: _Population | None = None) -> np.ndarray:
    pop = _population(cfg) if pop is None else pop
    return expit(_logit(cfg, pop))


def _assemble(cfg: GeneratorConfig, pop: _Population, failed: np.ndarray) -> RecordSet:
    util = np.where(failed, pop.util_failed, pop.util_ok)
    cpu = pop.slots * pop.wallclock * util
    exit_status = np.where(failed, pop.exit_code, 0)
    exit_status = np.where(pop.cancelled, 137, exit_status)
    exit_status = np.where(pop.not_started, 1, exit_status)
    start = pop.submission + pop.wait
    records = []
    owners, groups, hosts = pop.owner_names, pop.group_names, pop.host_names
    for i in range(pop.n):
        if pop.not_started[i]:
            records.append(WorkloadRecord(
                int(pop.job_id[i]), owners[pop.owner[i]], groups[pop.group[i]], pop.job_name[i],
                str(pop.granted_pe[i]), "", int(pop.submission[i]), 0, 0, 0, 0.0, 0.0, 0.0, 0.0,
                0.0, int(pop.slots[i]), 0, int(exit_status[i])))
            continue
        s = int(start[i])
        w = int(pop.wallclock[i])
        records.append(WorkloadRecord(
            int(pop.job_id[i]), owners[pop.owner[i]], groups[pop.group[i]], pop.job_name[i],
            str(pop.granted_pe[i]), hosts[pop.node[i]], int(pop.submission[i]), s, s + w, w,
            float(cpu[i]), float(pop.mem[i]), float(pop.io[i]), float(pop.iow[i]),
            float(pop.maxvmem[i]), int(pop.slots[i]), int(pop.wait[i]), int(exit_status[i])))
    return RecordSet(tuple(records), f"synthetic seed={cfg.seed}")


def generate_trace(cfg: GeneratorConfig) -> RecordSet:
    """Deterministic synthetic trace for ``cfg`` (canonical schema, unfiltered)."""
    pop = _population(cfg)
    failed = pop.u_label < expit(_logit(cfg, pop))
    return _assemble(cfg, pop, failed)


def _expected_stats(pop: _Population, cfg: GeneratorConfig, base: float, long_weight: float):
    ran = pop.ran
    p = expit(_logit(cfg, pop, base, long_weight))[ran]
    size = (pop.slots * pop.wallclock)[ran]
    cpu_f = size * pop.util_failed[ran]
    cpu_s = size * pop.util_ok[ran]
    mem = pop.mem[ran]
    cpu_share = np.sum(p * cpu_f) / np.sum(p * cpu_f + (1 - p) * cpu_s)
    return np.array([p.mean(), cpu_share, np.sum(p * mem) / mem.sum()])


def calibrate(cfg: GeneratorConfig, targets, max_iters: int = 10,
              tol: float = 0.02) -> GeneratorConfig:
    """Tune the base logit and the wallclock weight to hit headline targets."""
    return calibration_run(cfg, targets, max_iters, tol)[0]


def calibration_run(cfg: GeneratorConfig, targets, max_iters: int = 10, tol: float = 0.02):
    """Calibration loop behind :func:`calibrate`.

    ``targets`` is a :class:`TraceStats` or a (count rate, failed cpu share,
    failed mem share) triple. Each round fits the two parameters to the
    expected statistics of the fixed job population, regenerates the trace
    and compares realized statistics against the targets; the residual then
    shifts the next round's aim. Returns ``(config, rounds, stats)`` where
    rounds is the number of adjustments made; raises :class:`CalibrationError` carrying
    the last realized stats when ``max_iters`` adjustments are not enough.
    """
    goal = np.asarray(targets.headline() if isinstance(targets, TraceStats) else targets,
                      dtype=float)[:3]
    if goal.shape != (3,) or np.any(goal < 0) or np.any(goal > 1):
        raise ContractError("targets must be three fractions in [0, 1]")
    pop = _population(cfg)
    current = cfg
    aim = goal.copy()
    achieved = None
    for rounds in range(max_iters + 1):
        failed = pop.u_label < expit(_logit(current, pop))
        stats = summary_stats(filter_records(_assemble(current, pop, failed)))
        achieved = np.array(stats.headline())
        log.info("calibration round %d: base=%.4f long=%.4f -> %s", rounds,
                 current.base_failure_logit, current.weights["long_wallclock"],
                 np.round(achieved, 4))
        if np.all(np.abs(achieved - goal) <= tol):
            return current, rounds, stats
        if rounds == max_iters:
            break
        if rounds > 0:
            aim = np.clip(aim + (goal - achieved), 1e-4, 1 - 1e-4)
        res = least_squares(
            lambda v: _expected_stats(pop, current, v[0], v[1]) - aim,
            x0=[current.base_failure_logit, current.weights["long_wallclock"]],
            bounds=([-30.0, 0.0], [30.0, 10.0]), xtol=1e-12, ftol=1e-12)
        current = dataclasses.replace(current, base_failure_logit=float(res.x[0])).with_weights(
            long_wallclock=float(res.x[1]))
    raise CalibrationError(
        f"calibration did not reach targets {goal.tolist()} within {max_iters} rounds; "
        f"last stats {achieved.tolist()}", stats=achieved.tolist(), config=current)


def reference_targets() -> tuple:
    """Failure count rate and failed CPU / memory shares reported for the source cluster."""
    return (0.085, 0.211, 0.202)


def write_ledger(cfg: GeneratorConfig, path) -> None:
    counts = daily_counts(cfg)
    rows = [{"day": d, "start_epoch": cfg.start_epoch + d * 86400, "records": int(c)}
            for d, c in enumerate(counts)]
    Path(path).write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")

"""Event-sourced advisor sessions with exact crash recovery.

A session is a fold over its append-only event log: the particle set after
event n is a pure function of (master seed, events 0..n).  Every state
mutation draws randomness from a stream keyed by (master seed, sequence
number), so replaying the log reproduces the particle set byte for byte.

Layout on disk: ``{data_dir}/{session_id}/events.jsonl`` plus periodic full
snapshots in ``{data_dir}/{session_id}/snapshots/NNN.json``.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from .crf import LabeledBatch
from .gibbs import GibbsConfig, PriorSpec, gibbs_run
from .reward import ForecastSummary, posterior_mean_forecast
from .smc import ParticleSet, effective_sample_size, filter_update
from .strategies import hpyts_allocate_delayed, hpyts_select

__all__ = [
    "SessionConfig",
    "Session",
    "SessionStore",
    "SessionNotFound",
    "expand_counts",
]

_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]{0,63}$")


class SessionNotFound(KeyError):
    """No session with that id in the store."""


def expand_counts(counts) -> list[str]:
    """Flatten label counts to the canonical seating order.

    Accepts a mapping or a list of ``[label, count]`` pairs.  Labels are
    seated in sorted order; repeated pair entries keep their given order
    among equal labels.  Counts must be positive integers.
    """
    if isinstance(counts, dict):
        pairs = list(counts.items())
    else:
        pairs = [(str(l), c) for l, c in counts]
    pairs.sort(key=lambda lc: lc[0])  # stable: equal labels keep input order
    out: list[str] = []
    for label, count in pairs:
        if not isinstance(count, int) or isinstance(count, bool) or count < 1:
            raise ValueError(f"count for label {label!r} must be a positive integer")
        if not label:
            raise ValueError("empty species label")
        out.extend([str(label)] * count)
    return out


@dataclass(frozen=True)
class SessionConfig:
    """Knobs fixed at session creation."""

    n_particles: int = 100
    default_m: int = 25
    forecast_draws: int = 200
    gibbs_sweeps: int = 400
    gibbs_burn_in: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be >= 2")
        if self.default_m < 1:
            raise ValueError("default_m must be >= 1")
        if self.forecast_draws < 1:
            raise ValueError("forecast_draws must be >= 1")
        if self.gibbs_sweeps - self.gibbs_burn_in < self.n_particles:
            raise ValueError("post-burn-in sweeps cannot cover n_particles states")

    def to_dict(self) -> dict:
        return {
            "n_particles": self.n_particles,
            "default_m": self.default_m,
            "forecast_draws": self.forecast_draws,
            "gibbs_sweeps": self.gibbs_sweeps,
            "gibbs_burn_in": self.gibbs_burn_in,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(**{k: d[k] for k in cls().to_dict() if k in d})


@dataclass
class Session:
    """In-memory view of one advisor session."""

    id: str
    arms: tuple[str, ...]
    config: SessionConfig
    particles: ParticleSet
    last_seq: int
    created: float
    updated: float
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def arm_index(self, name: str) -> int:
        try:
            return self.arms.index(name)
        except ValueError:
            raise ValueError(f"unknown arm {name!r}") from None


def _event_rng(master_seed: int, seq: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, seq]))


class SessionStore:
    """Owns the data directory and the in-memory session table."""

    def __init__(self, data_dir: str, snapshot_every: int = 5):
        if snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        self.data_dir = data_dir
        self.snapshot_every = snapshot_every
        os.makedirs(data_dir, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._table_lock = threading.Lock()
        for sid in sorted(os.listdir(data_dir)):
            if os.path.isfile(self._events_path(sid)):
                self._sessions[sid] = self._load(sid)

    # ---- paths

    def _session_dir(self, sid: str) -> str:
        return os.path.join(self.data_dir, sid)

    def _events_path(self, sid: str) -> str:
        return os.path.join(self._session_dir(sid), "events.jsonl")

    def _snapshot_path(self, sid: str, seq: int) -> str:
        return os.path.join(self._session_dir(sid), "snapshots", f"{seq:03d}.json")

    # ---- event log plumbing

    def _append_event(self, sid: str, event: dict) -> None:
        with open(self._events_path(sid), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _read_events(self, sid: str) -> list[dict]:
        with open(self._events_path(sid)) as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def _write_snapshot(self, session: Session) -> None:
        path = self._snapshot_path(session.id, session.last_seq)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        blob = {"seq": session.last_seq, "particles": session.particles.to_json()}
        # atomic rename so a crash mid-write never leaves a torn snapshot
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(blob, fh, sort_keys=True)
        os.replace(tmp, path)

    def _latest_snapshot(self, sid: str) -> tuple[int, ParticleSet] | None:
        snap_dir = os.path.join(self._session_dir(sid), "snapshots")
        if not os.path.isdir(snap_dir):
            return None
        best = None
        for name in os.listdir(snap_dir):
            if name.endswith(".json"):
                seq = int(name[:-5])
                if best is None or seq > best:
                    best = seq
        if best is None:
            return None
        with open(self._snapshot_path(sid, best)) as fh:
            blob = json.load(fh)
        return blob["seq"], ParticleSet.from_json(blob["particles"])

    # ---- folding events into state

    @staticmethod
    def _fold_created(event: dict) -> tuple[tuple[str, ...], SessionConfig, ParticleSet]:
        arms = tuple(event["arms"])
        config = SessionConfig.from_dict(event["config"])
        rng = _event_rng(config.seed, event["seq"])
        data = [
            LabeledBatch(j, expand_counts(event["counts"][arm]))
            for j, arm in enumerate(arms)
        ]
        gibbs_cfg = GibbsConfig(
            n_sweeps=config.gibbs_sweeps,
            burn_in=config.gibbs_burn_in,
            n_particles=config.n_particles,
        )
        particles = gibbs_run(data, PriorSpec(), gibbs_cfg, rng=rng)
        return arms, config, particles

    @staticmethod
    def _fold_observed(
        session_arms: tuple[str, ...],
        config: SessionConfig,
        particles: ParticleSet,
        event: dict,
    ) -> ParticleSet:
        j = session_arms.index(event["arm"])
        labels = expand_counts(event["counts"])
        rng = _event_rng(config.seed, event["seq"])
        return filter_update(particles, LabeledBatch(j, labels), rng)

    def _load(self, sid: str) -> Session:
        events = self._read_events(sid)
        if not events or events[0]["kind"] != "created":
            raise ValueError(f"session {sid}: event log missing creation event")
        arms, config, particles = self._fold_created(events[0])
        start = 1
        snap = self._latest_snapshot(sid)
        if snap is not None:
            seq, particles = snap
            start = seq + 1
        for event in events:
            if event["seq"] < start or event["kind"] != "observed":
                continue
            particles = self._fold_observed(arms, config, particles, event)
        return Session(
            id=sid,
            arms=arms,
            config=config,
            particles=particles,
            last_seq=events[-1]["seq"],
            created=events[0]["ts"],
            updated=events[-1]["ts"],
        )

    # ---- public API

    def list_ids(self) -> list[str]:
        with self._table_lock:
            return sorted(self._sessions)

    def get(self, sid: str) -> Session:
        with self._table_lock:
            try:
                return self._sessions[sid]
            except KeyError:
                raise SessionNotFound(sid) from None

    def create(
        self,
        arms: list[str],
        counts: dict,
        config: SessionConfig | None = None,
        session_id: str | None = None,
    ) -> Session:
        if not arms:
            raise ValueError("at least one arm is required")
        if len(set(arms)) != len(arms):
            raise ValueError("duplicate arm names")
        for arm in arms:
            if arm not in counts or not expand_counts(counts[arm]):
                raise ValueError(f"arm {arm!r} needs at least one initial observation")
        extra = set(counts) - set(arms)
        if extra:
            raise ValueError(f"counts given for unknown arms: {sorted(extra)}")
        config = config or SessionConfig()
        sid = session_id or uuid.uuid4().hex[:12]
        if not _ID_RE.match(sid):
            raise ValueError("session id must be lowercase alphanumeric/hyphen")
        with self._table_lock:
            if sid in self._sessions or os.path.exists(self._session_dir(sid)):
                raise ValueError(f"session {sid!r} already exists")
            os.makedirs(self._session_dir(sid))
        now = time.time()
        event = {
            "seq": 0,
            "ts": now,
            "kind": "created",
            "arms": list(arms),
            "counts": {a: dict(counts[a]) if isinstance(counts[a], dict) else list(counts[a]) for a in arms},
            "config": config.to_dict(),
        }
        self._append_event(sid, event)
        arms_t, config, particles = self._fold_created(event)
        session = Session(
            id=sid,
            arms=arms_t,
            config=config,
            particles=particles,
            last_seq=0,
            created=now,
            updated=now,
        )
        self._write_snapshot(session)
        with self._table_lock:
            self._sessions[sid] = session
        return session

    def observe(self, sid: str, arm: str, counts) -> Session:
        session = self.get(sid)
        with session.lock:
            j = session.arm_index(arm)  # raises ValueError on unknown arm
            labels = expand_counts(counts)
            if not labels:
                raise ValueError("observation batch is empty")
            seq = session.last_seq + 1
            event = {
                "seq": seq,
                "ts": time.time(),
                "kind": "observed",
                "arm": arm,
                "counts": dict(counts) if isinstance(counts, dict) else list(counts),
            }
            rng = _event_rng(session.config.seed, seq)
            session.particles = filter_update(
                session.particles, LabeledBatch(j, labels), rng
            )
            self._append_event(sid, event)
            session.last_seq = seq
            session.updated = event["ts"]
            if seq % self.snapshot_every == 0:
                self._write_snapshot(session)
        return session

    def recommend(self, sid: str, mode: str, m_budget: int) -> dict:
        """Advise without touching the posterior; log what was advised.

        The event records the (seed, seq) pair feeding the draw, so any
        recommendation can be reproduced after the fact.
        """
        if mode not in ("incidence", "delayed"):
            raise ValueError(f"mode must be incidence or delayed, got {mode!r}")
        if m_budget < 1:
            raise ValueError("M must be >= 1")
        session = self.get(sid)
        with session.lock:
            seq = session.last_seq + 1
            rng = _event_rng(session.config.seed, seq)
            if mode == "incidence":
                arm_idx, draw = hpyts_select(session.particles, m_budget, rng)
                picked = {"arm": session.arms[arm_idx]}
            else:
                alloc, draw = hpyts_allocate_delayed(session.particles, m_budget, rng)
                picked = {
                    "allocation": {
                        session.arms[j]: c for j, c in enumerate(alloc.counts) if c > 0
                    }
                }
            result = {
                "mode": mode,
                "m": m_budget,
                **picked,
                "expected_new": {
                    session.arms[j]: float(draw.expected_new[j])
                    for j in range(len(session.arms))
                },
                "rng_key": [session.config.seed, seq],
            }
            event = {
                "seq": seq,
                "ts": time.time(),
                "kind": "recommended",
                **result,
            }
            self._append_event(sid, event)
            session.last_seq = seq
            session.updated = event["ts"]
        return result

    def forecast(self, sid: str, m_budget: int | None = None) -> list[ForecastSummary]:
        """Read-only per-arm forecast at budget M (default from config)."""
        session = self.get(sid)
        if m_budget is None:
            m_budget = session.config.default_m
        if m_budget < 0:
            raise ValueError("M must be >= 0")
        # read-only: keyed off the last committed event, not a new one
        rng = _event_rng(session.config.seed, session.last_seq)
        return [
            posterior_mean_forecast(
                session.particles, j, m_budget, session.config.forecast_draws, rng
            )
            for j in range(len(session.arms))
        ]

    def history(self, sid: str) -> list[dict]:
        self.get(sid)  # 404 check
        return self._read_events(sid)

    def stats(self, sid: str) -> dict:
        """Exact bookkeeping from the event log, no inference: per-arm
        observation totals and the discovery curve (cumulative distinct
        species after each observation-carrying event)."""
        session = self.get(sid)
        observed = {arm: 0 for arm in session.arms}
        distinct: dict[str, set] = {arm: set() for arm in session.arms}
        seen: set = set()
        curve = []
        for event in self._read_events(sid):
            if event["kind"] == "created":
                batches = {arm: expand_counts(c) for arm, c in event["counts"].items()}
            elif event["kind"] == "observed":
                batches = {event["arm"]: expand_counts(event["counts"])}
            else:
                continue  # recommendations carry no observations
            for arm, labels in batches.items():
                observed[arm] += len(labels)
                distinct[arm].update(labels)
                seen.update(labels)
            curve.append({"seq": event["seq"], "distinct": len(seen)})
        return {
            "arms": [
                {"name": arm, "observed": observed[arm], "distinct": len(distinct[arm])}
                for arm in session.arms
            ],
            "curve": curve,
        }

    def info(self, sid: str) -> dict:
        session = self.get(sid)
        return {
            "id": session.id,
            "arms": list(session.arms),
            "config": session.config.to_dict(),
            "n_events": session.last_seq + 1,
            "ess": float(effective_sample_size(session.particles)),
            "n_particles": session.particles.n_particles,
            "created": session.created,
            "updated": session.updated,
        }

    def replay(self, sid: str) -> ParticleSet:
        """Fold the full event log from scratch; ignores cached state."""
        self.get(sid)
        events = self._read_events(sid)
        arms, config, particles = self._fold_created(events[0])
        for event in events[1:]:
            if event["kind"] == "observed":
                particles = self._fold_observed(arms, config, particles, event)
        return particles

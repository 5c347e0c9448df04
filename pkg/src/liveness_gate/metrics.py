"""ISO 30107-3 style error rates and the Monte-Carlo batch evaluator.

APCER = false accepts / attacks (the classic FAR), BPCER = false rejects /
bona fide (FRR), ACER = their mean (HTER). Rates are stored as fractions and
rendered as percentages at two decimals; acer == (apcer + bpcer) / 2 exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from random import Random
from typing import Mapping

from . import jsonio
from .agents import (
    LiveUserAgent,
    ReplayAgent,
    StaticPhotoAgent,
    drive_session,
    random_face_model,
)
from .session import SessionConfig, SessionStatus, start_session

ATTACK_CLASSES = ("static_photo", "replay")
BONA_FIDE_CLASSES = ("live_user",)
CLASS_ORDER = ("live_user", "static_photo", "replay")


class UndefinedRateError(ValueError):
    """A rate's denominator is zero; the metric is undefined, never NaN."""


@dataclass(frozen=True)
class ConfusionCounts:
    bona_fide_total: int = 0
    attack_total: int = 0
    false_accepts: int = 0  # attacks labeled live
    false_rejects: int = 0  # bona fide labeled attack

    def validate(self) -> None:
        for name in ("bona_fide_total", "attack_total", "false_accepts", "false_rejects"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if self.false_accepts > self.attack_total:
            raise ValueError(
                f"false_accepts={self.false_accepts} exceeds attack_total={self.attack_total}"
            )
        if self.false_rejects > self.bona_fide_total:
            raise ValueError(
                f"false_rejects={self.false_rejects} exceeds bona_fide_total={self.bona_fide_total}"
            )

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.bona_fide_total + other.bona_fide_total,
            self.attack_total + other.attack_total,
            self.false_accepts + other.false_accepts,
            self.false_rejects + other.false_rejects,
        )

    def to_dict(self) -> dict:
        return {
            "bona_fide_total": self.bona_fide_total,
            "attack_total": self.attack_total,
            "false_accepts": self.false_accepts,
            "false_rejects": self.false_rejects,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConfusionCounts":
        if not isinstance(data, dict):
            raise ValueError(f"counts must be a JSON object, got {type(data).__name__}")
        known = {"bona_fide_total", "attack_total", "false_accepts", "false_rejects"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown counts field(s): {', '.join(unknown)}")
        counts = cls(**data)
        counts.validate()
        return counts


def _pct(fraction: float) -> str:
    return f"{fraction * 100.0:.2f}"


@dataclass(frozen=True)
class EvalReport:
    """Rates as fractions plus the counts they came from."""

    apcer: float
    bpcer: float
    acer: float
    accuracy: float
    counts: ConfusionCounts
    per_class: dict[str, ConfusionCounts] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # the pre-ISO names are the same quantities
    @property
    def far(self) -> float:
        return self.apcer

    @property
    def frr(self) -> float:
        return self.bpcer

    @property
    def hter(self) -> float:
        return self.acer

    def display(self) -> dict[str, str]:
        return {
            "apcer_pct": _pct(self.apcer),
            "bpcer_pct": _pct(self.bpcer),
            "acer_pct": _pct(self.acer),
            "accuracy_pct": _pct(self.accuracy),
        }

    def to_obj(self) -> dict:
        return {
            "apcer": self.apcer,
            "bpcer": self.bpcer,
            "acer": self.acer,
            "accuracy": self.accuracy,
            "display": self.display(),
            "counts": self.counts.to_dict(),
            "per_class": {name: c.to_dict() for name, c in self.per_class.items()},
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return jsonio.dumps(self.to_obj())

    def to_csv(self) -> str:
        header = (
            "class,bona_fide_total,attack_total,false_accepts,false_rejects,"
            "apcer_pct,bpcer_pct,acer_pct,accuracy_pct"
        )
        rows = [header]
        for name, c in self.per_class.items():
            apcer = _pct(c.false_accepts / c.attack_total) if c.attack_total else ""
            bpcer = _pct(c.false_rejects / c.bona_fide_total) if c.bona_fide_total else ""
            rows.append(
                f"{name},{c.bona_fide_total},{c.attack_total},"
                f"{c.false_accepts},{c.false_rejects},{apcer},{bpcer},,"
            )
        t = self.counts
        rows.append(
            f"total,{t.bona_fide_total},{t.attack_total},{t.false_accepts},{t.false_rejects},"
            f"{_pct(self.apcer)},{_pct(self.bpcer)},{_pct(self.acer)},{_pct(self.accuracy)}"
        )
        return "\n".join(rows) + "\n"


def compute_metrics(
    counts: ConfusionCounts,
    *,
    per_class: dict[str, ConfusionCounts] | None = None,
    meta: dict | None = None,
) -> EvalReport:
    """Turn confusion counts into the three error rates plus accuracy."""
    counts.validate()
    if counts.attack_total == 0:
        raise UndefinedRateError("APCER undefined: no attack presentations")
    if counts.bona_fide_total == 0:
        raise UndefinedRateError("BPCER undefined: no bona fide presentations")
    apcer = counts.false_accepts / counts.attack_total
    bpcer = counts.false_rejects / counts.bona_fide_total
    total = counts.attack_total + counts.bona_fide_total
    errors = counts.false_accepts + counts.false_rejects
    return EvalReport(
        apcer=apcer,
        bpcer=bpcer,
        acer=(apcer + bpcer) / 2.0,
        accuracy=(total - errors) / total,
        counts=counts,
        per_class=dict(per_class or {}),
        meta=dict(meta or {}),
    )


def derive_seed(master_seed: int, label: str, index: int) -> int:
    """Stable 64-bit per-trial seed from (master, label, index)."""
    digest = hashlib.sha256(f"{master_seed}:{label}:{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class TrialOutcome:
    kind: str
    index: int
    verdict: SessionStatus
    label_live: bool
    is_attack: bool
    duration_ms: int | None  # verdict time minus timer start, session time


def _run_one(config: SessionConfig, agent) -> tuple[SessionStatus, int | None]:
    session = start_session(config)
    result, _ = drive_session(session, agent)
    state = session.state()
    duration = None
    if state.started_at_ms is not None:
        duration = result.events[-1].t_ms - state.started_at_ms
    return result.verdict, duration


def run_agent_trials(
    kind: str,
    trials: int,
    config: SessionConfig,
    master_seed: int,
    *,
    agent_params: dict | None = None,
) -> list[TrialOutcome]:
    """Run independent sessions for one agent class with derived seeds.

    Faces are re-sampled per trial. Replay trials first record a genuine
    LiveUser session under its own seeds, then play that recording into an
    engine with a fresh seed: the strongest scripted 2D attack.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    params = dict(agent_params or {})
    outcomes = []
    is_attack = kind in ATTACK_CLASSES
    for i in range(trials):
        face = random_face_model(
            Random(derive_seed(master_seed, f"{kind}/face", i)), r_ratio=config.r_ratio
        )
        engine_cfg = config.replace(seed=derive_seed(master_seed, f"{kind}/engine", i))
        if kind == "live_user":
            agent = LiveUserAgent(
                face, seed=derive_seed(master_seed, f"{kind}/agent", i), **params
            )
        elif kind == "static_photo":
            agent = StaticPhotoAgent(
                face, seed=derive_seed(master_seed, f"{kind}/agent", i), **params
            )
        elif kind == "replay":
            source_cfg = config.replace(
                seed=derive_seed(master_seed, f"{kind}/source_engine", i)
            )
            live = LiveUserAgent(
                face, seed=derive_seed(master_seed, f"{kind}/source_agent", i), **params
            )
            _, recording = drive_session(start_session(source_cfg), live)
            agent = ReplayAgent(recording)
        else:
            raise ValueError(f"unknown agent kind {kind!r}")
        verdict, duration = _run_one(engine_cfg, agent)
        outcomes.append(
            TrialOutcome(
                kind=kind,
                index=i,
                verdict=verdict,
                label_live=verdict is SessionStatus.PASSED,
                is_attack=is_attack,
                duration_ms=duration,
            )
        )
    return outcomes


def batch_evaluate(
    config: SessionConfig,
    population: Mapping[str, int],
    master_seed: int,
    *,
    agent_params: Mapping[str, dict] | None = None,
) -> EvalReport:
    """Monte-Carlo evaluation: population maps agent class -> trial count.

    LiveUser sessions are the positives, StaticPhoto/Replay the negatives;
    at least one of each side is required or the rates are undefined. A
    session blowing up aborts the batch; the partial report is flagged.
    """
    unknown = sorted(set(population) - set(CLASS_ORDER))
    if unknown:
        raise ValueError(f"unknown agent class(es): {', '.join(unknown)}")
    ordered = [(k, population[k]) for k in CLASS_ORDER if population.get(k, 0) > 0]
    n_pos = sum(n for k, n in ordered if k in BONA_FIDE_CLASSES)
    n_neg = sum(n for k, n in ordered if k in ATTACK_CLASSES)
    if n_pos == 0:
        raise UndefinedRateError("population has no bona fide (live_user) trials")
    if n_neg == 0:
        raise UndefinedRateError("population has no attack trials")

    per_class: dict[str, ConfusionCounts] = {}
    meta = {
        "master_seed": master_seed,
        "engine_config": config.to_dict(),
        "population": {k: n for k, n in ordered},
        "partial": False,
    }
    params = agent_params or {}
    for kind, trials in ordered:
        try:
            outcomes = run_agent_trials(
                kind, trials, config, master_seed, agent_params=params.get(kind)
            )
        except Exception as exc:
            meta["partial"] = True
            meta["error"] = f"{kind}: {exc}"
            break
        passed = sum(1 for o in outcomes if o.label_live)
        if kind in ATTACK_CLASSES:
            per_class[kind] = ConfusionCounts(
                attack_total=trials, false_accepts=passed
            )
        else:
            per_class[kind] = ConfusionCounts(
                bona_fide_total=trials, false_rejects=trials - passed
            )

    totals = ConfusionCounts()
    for c in per_class.values():
        totals = totals + c
    if totals.attack_total == 0 or totals.bona_fide_total == 0:
        # the batch died before covering both sides
        raise UndefinedRateError(f"batch aborted early: {meta.get('error', 'unknown error')}")
    return compute_metrics(totals, per_class=per_class, meta=meta)

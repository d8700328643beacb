"""Virtual-machine reliability model for the simulated processing ranks.

Each rank walks a four-state machine (ideal, faulty, erroneous, failed)
driven by a time-ordered fault schedule.  Transitions land on iteration
boundaries only, so an alive snapshot taken at the top of an iteration is
constant for that whole preconditioner application.  Detected errors are
demoted straight to the failed state and excluded from the iteration; a
repaired rank returns to ideal and is resynchronized from its buddy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class Phase(enum.Enum):
    IDEAL = "ideal"
    FAULTY = "faulty"
    ERRONEOUS = "erroneous"
    FAILED = "failed"


TRANSIENT_FAULT = "transient_fault"
SOFT_ERROR = "soft_error"
FAIL_STOP = "fail_stop"
EVENT_KINDS = (TRANSIENT_FAULT, SOFT_ERROR, FAIL_STOP)


class A1ViolationError(RuntimeError):
    """More than one rank simultaneously erroneous/failed while the
    single-fault assumption is enforced."""


@dataclass
class RankState:
    phase: Phase = Phase.IDEAL
    since: int = 0


@dataclass(frozen=True)
class FaultEvent:
    at_iteration: int
    rank: int
    kind: str
    repair_at: int | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.at_iteration < 0:
            raise ValueError("at_iteration must be nonnegative")
        if self.repair_at is not None and self.repair_at <= self.at_iteration:
            raise ValueError("repair_at must come after at_iteration")


@dataclass
class FaultSchedule:
    events: list[FaultEvent] = field(default_factory=list)
    enforce_a1: bool = False
    horizon: int | None = None

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: e.at_iteration)


# timeline actions, ordered so repairs apply before new onsets at equal time
_REPAIR = 0
_ONSET = 1
_ESCALATE = 2  # erroneous -> failed once the detection latency elapses


def _timeline(schedule: FaultSchedule, detection_latency: int):
    entries = []
    for seq, ev in enumerate(schedule.events):
        if ev.kind == FAIL_STOP:
            entries.append((ev.at_iteration, _ONSET, seq, ev.rank, Phase.FAILED))
            if ev.repair_at is not None:
                entries.append((ev.repair_at, _REPAIR, seq, ev.rank, Phase.IDEAL))
        elif ev.kind == SOFT_ERROR:
            if detection_latency > 0:
                entries.append((ev.at_iteration, _ONSET, seq, ev.rank, Phase.ERRONEOUS))
                entries.append(
                    (ev.at_iteration + detection_latency, _ESCALATE, seq, ev.rank, Phase.FAILED)
                )
            else:
                entries.append((ev.at_iteration, _ONSET, seq, ev.rank, Phase.FAILED))
            if ev.repair_at is not None:
                entries.append((ev.repair_at, _REPAIR, seq, ev.rank, Phase.IDEAL))
        else:  # transient fault: never exercised, silently clears
            entries.append((ev.at_iteration, _ONSET, seq, ev.rank, Phase.FAULTY))
            if ev.repair_at is not None:
                entries.append((ev.repair_at, _REPAIR, seq, ev.rank, Phase.IDEAL))
    entries.sort(key=lambda t: (t[0], t[1], t[2]))
    return entries


class FaultSimulator:
    """Owns all rank states; solvers only ever see immutable snapshots."""

    def __init__(self, schedule: FaultSchedule, n_ranks: int, detection_latency: int = 0):
        for ev in schedule.events:
            if not (0 <= ev.rank < n_ranks):
                raise ValueError(f"event rank {ev.rank} out of range for {n_ranks} ranks")
        if detection_latency < 0:
            raise ValueError("detection latency must be nonnegative")
        self.schedule = schedule
        self.n_ranks = n_ranks
        self.states = [RankState() for _ in range(n_ranks)]
        self._timeline = _timeline(schedule, detection_latency)
        self._cursor = 0
        self._last_iteration = -1

    def advance(self, iteration: int) -> tuple[np.ndarray, list[int]]:
        """Apply every transition due at or before `iteration`.

        Returns (alive snapshot, ranks repaired from the failed state this
        call).  `iteration` must not decrease between calls.
        """
        if iteration < self._last_iteration:
            raise ValueError("advance must be called with nondecreasing iterations")
        self._last_iteration = iteration
        repaired: list[int] = []
        while self._cursor < len(self._timeline) and self._timeline[self._cursor][0] <= iteration:
            when, action, _, rank, phase = self._timeline[self._cursor]
            self._cursor += 1
            state = self.states[rank]
            if action == _REPAIR:
                if state.phase == Phase.FAILED:
                    repaired.append(rank)
                state.phase = Phase.IDEAL
                state.since = when
            elif action == _ESCALATE:
                # only a still-pending (undetected) error escalates; a rank
                # corrected in the meantime stays ideal
                if state.phase == Phase.ERRONEOUS:
                    state.phase = Phase.FAILED
                    state.since = when
            else:
                state.phase = phase
                state.since = when
        if self.schedule.enforce_a1:
            hot = [
                r
                for r, s in enumerate(self.states)
                if s.phase in (Phase.ERRONEOUS, Phase.FAILED)
            ]
            if len(hot) > 1:
                raise A1ViolationError(
                    f"ranks {hot} are simultaneously erroneous/failed at iteration {iteration}"
                )
        return self.alive_snapshot(), repaired

    def alive_snapshot(self) -> np.ndarray:
        """Boolean array: alive means not in the failed state."""
        out = np.array([s.phase != Phase.FAILED for s in self.states], dtype=bool)
        out.flags.writeable = False
        return out


def validate_schedule(
    schedule: FaultSchedule,
    n_ranks: int,
    pairing=None,
    detection_latency: int = 0,
) -> list[str]:
    """Pure validation pass; returns human-readable violations (empty = ok).

    Checks the single-fault assumption when the schedule enforces it,
    pair-wide overlapping failures when a pairing is supplied, and events
    scheduled beyond the horizon.  Permanent events are legal: a rank may
    stay in any state arbitrarily long.
    """
    violations: list[str] = []
    for ev in schedule.events:
        if not (0 <= ev.rank < n_ranks):
            violations.append(f"event rank {ev.rank} out of range for {n_ranks} ranks")
        if schedule.horizon is not None and ev.at_iteration >= schedule.horizon:
            violations.append(
                f"event at iteration {ev.at_iteration} lies beyond the horizon {schedule.horizon}"
            )
    if violations:
        return violations

    phases = [Phase.IDEAL] * n_ranks
    entries = _timeline(schedule, detection_latency)
    for when, action, _, rank, phase in entries:
        if action == _REPAIR:
            phases[rank] = Phase.IDEAL
        elif action == _ESCALATE:
            if phases[rank] == Phase.ERRONEOUS:
                phases[rank] = Phase.FAILED
        else:
            phases[rank] = phase
        hot = [r for r, p in enumerate(phases) if p in (Phase.ERRONEOUS, Phase.FAILED)]
        if schedule.enforce_a1 and len(hot) > 1:
            violations.append(
                f"A1 violated at iteration {when}: ranks {hot} erroneous/failed together"
            )
        if pairing is not None:
            failed = {r for r, p in enumerate(phases) if p == Phase.FAILED}
            for a, b in pairing.pairs:
                if a in failed and b in failed:
                    violations.append(
                        f"pair ({a}, {b}) entirely failed at iteration {when}"
                    )
    # deduplicate while keeping order
    seen: set[str] = set()
    unique = []
    for v in violations:
        if v not in seen:
            seen.add(v)
            unique.append(v)
    return unique


def parse_schedule_lines(lines, enforce_a1: bool = False, horizon: int | None = None) -> FaultSchedule:
    """Parse `iter rank kind [repair_iter]` lines; '#' starts a comment."""
    events = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) not in (3, 4):
            raise ValueError(f"schedule line {lineno}: expected 'iter rank kind [repair_iter]'")
        try:
            at = int(parts[0])
            rank = int(parts[1])
            repair = int(parts[3]) if len(parts) == 4 else None
        except ValueError as exc:
            raise ValueError(f"schedule line {lineno}: {exc}") from exc
        events.append(FaultEvent(at_iteration=at, rank=rank, kind=parts[2], repair_at=repair))
    return FaultSchedule(events=events, enforce_a1=enforce_a1, horizon=horizon)


def load_schedule(path, enforce_a1: bool = False, horizon: int | None = None) -> FaultSchedule:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return parse_schedule_lines(fh, enforce_a1=enforce_a1, horizon=horizon)

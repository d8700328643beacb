import numpy as np
import pytest

from rsclab import FaultEvent, FaultSchedule, FaultSimulator, Phase, build_pairing, validate_schedule
from rsclab.faultsim import A1ViolationError, load_schedule, parse_schedule_lines


def alive_trace(schedule, n_ranks, horizon, **kwargs):
    sim = FaultSimulator(schedule, n_ranks, **kwargs)
    return [sim.advance(k)[0].copy() for k in range(horizon)]


class TestAdvance:
    def test_empty_schedule(self):
        trace = alive_trace(FaultSchedule(), 4, 6)
        assert all(row.all() for row in trace)

    def test_permanent_fail_stop_from_start(self):
        schedule = FaultSchedule([FaultEvent(0, 0, "fail_stop")])
        trace = alive_trace(schedule, 4, 5)
        for row in trace:
            assert not row[0]
            assert row[1:].all()

    def test_repairable_fail_stop_window(self):
        # failed exactly for iterations 3 and 4, repaired at 5
        schedule = FaultSchedule([FaultEvent(3, 2, "fail_stop", repair_at=5)])
        sim = FaultSimulator(schedule, 4)
        expectations = {0: True, 1: True, 2: True, 3: False, 4: False, 5: True, 6: True}
        for k, expect in expectations.items():
            alive, repaired = sim.advance(k)
            assert alive[2] == expect, f"iteration {k}"
            assert (repaired == [2]) == (k == 5)

    def test_transient_fault_never_kills(self):
        schedule = FaultSchedule([FaultEvent(1, 1, "transient_fault", repair_at=4)])
        sim = FaultSimulator(schedule, 2)
        for k in range(6):
            alive, repaired = sim.advance(k)
            assert alive.all()
            assert repaired == []  # silent return to ideal is not a repair
            if 1 <= k < 4:
                assert sim.states[1].phase is Phase.FAULTY
            else:
                assert sim.states[1].phase is Phase.IDEAL

    def test_soft_error_immediate_detection(self):
        sim = FaultSimulator(FaultSchedule([FaultEvent(2, 0, "soft_error")]), 2)
        assert sim.advance(1)[0][0]
        assert not sim.advance(2)[0][0]
        assert sim.states[0].phase is Phase.FAILED

    def test_soft_error_with_detection_latency(self):
        schedule = FaultSchedule([FaultEvent(1, 0, "soft_error")])
        sim = FaultSimulator(schedule, 2, detection_latency=2)
        assert sim.advance(1)[0][0]  # erroneous ranks still participate
        assert sim.states[0].phase is Phase.ERRONEOUS
        assert sim.advance(2)[0][0]
        assert not sim.advance(3)[0][0]  # detected and demoted
        assert sim.states[0].phase is Phase.FAILED

    def test_corrected_error_never_escalates(self):
        schedule = FaultSchedule([FaultEvent(1, 0, "soft_error", repair_at=2)])
        sim = FaultSimulator(schedule, 2, detection_latency=5)
        for k in range(8):
            alive, _ = sim.advance(k)
            assert alive[0]
        assert sim.states[0].phase is Phase.IDEAL

    def test_monotone_iterations_enforced(self):
        sim = FaultSimulator(FaultSchedule(), 2)
        sim.advance(3)
        with pytest.raises(ValueError, match="nondecreasing"):
            sim.advance(2)

    def test_a1_enforcement(self):
        schedule = FaultSchedule(
            [FaultEvent(1, 0, "fail_stop"), FaultEvent(2, 3, "fail_stop")], enforce_a1=True
        )
        sim = FaultSimulator(schedule, 4)
        sim.advance(1)
        with pytest.raises(A1ViolationError):
            sim.advance(2)

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            FaultSimulator(FaultSchedule([FaultEvent(0, 9, "fail_stop")]), 4)

    def test_determinism(self):
        events = [
            FaultEvent(1, 0, "fail_stop", repair_at=4),
            FaultEvent(2, 3, "soft_error", repair_at=7),
            FaultEvent(3, 1, "transient_fault", repair_at=5),
        ]
        a = alive_trace(FaultSchedule(list(events)), 4, 10)
        b = alive_trace(FaultSchedule(list(events)), 4, 10)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


class TestFaultEvent:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            FaultEvent(0, 0, "meteor_strike")

    def test_repair_must_follow(self):
        with pytest.raises(ValueError, match="repair_at"):
            FaultEvent(3, 0, "fail_stop", repair_at=3)


class TestValidateSchedule:
    def test_pair_wide_failure_flagged(self):
        pairing = build_pairing(4)
        schedule = FaultSchedule(
            [FaultEvent(0, 0, "fail_stop"), FaultEvent(1, 1, "fail_stop")]
        )
        violations = validate_schedule(schedule, 4, pairing=pairing)
        assert any("pair (0, 1)" in v for v in violations)

    def test_single_permanent_failure_ok(self):
        pairing = build_pairing(4)
        schedule = FaultSchedule([FaultEvent(0, 0, "fail_stop")])
        assert validate_schedule(schedule, 4, pairing=pairing) == []

    def test_relaxed_a1_two_pairs_ok(self):
        # one erroneous rank per pair is fine when A1 is not enforced
        pairing = build_pairing(4)
        schedule = FaultSchedule(
            [FaultEvent(0, 0, "soft_error"), FaultEvent(0, 2, "soft_error")]
        )
        assert validate_schedule(schedule, 4, pairing=pairing, detection_latency=3) == []

    def test_a1_violation_reported(self):
        schedule = FaultSchedule(
            [FaultEvent(0, 0, "fail_stop"), FaultEvent(1, 2, "fail_stop")], enforce_a1=True
        )
        violations = validate_schedule(schedule, 4)
        assert any("A1" in v for v in violations)

    def test_horizon(self):
        schedule = FaultSchedule([FaultEvent(50, 0, "fail_stop")], horizon=10)
        violations = validate_schedule(schedule, 4)
        assert any("horizon" in v for v in violations)

    def test_rank_range(self):
        schedule = FaultSchedule([FaultEvent(0, 7, "fail_stop")])
        assert any("out of range" in v for v in validate_schedule(schedule, 4))


class TestScheduleFiles:
    def test_parse_lines(self):
        schedule = parse_schedule_lines(
            ["# preamble", "", "3 2 fail_stop 5", "0 1 transient_fault  # inline note"]
        )
        assert len(schedule.events) == 2
        assert schedule.events[0] == FaultEvent(0, 1, "transient_fault")
        assert schedule.events[1] == FaultEvent(3, 2, "fail_stop", repair_at=5)

    def test_bad_line(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_schedule_lines(["3 2"])

    def test_load_schedule(self, tmp_path):
        path = tmp_path / "faults.txt"
        path.write_text("0 0 fail_stop\n2 3 soft_error 6\n")
        schedule = load_schedule(path)
        assert [e.rank for e in schedule.events] == [0, 3]

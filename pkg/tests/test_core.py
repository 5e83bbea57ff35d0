import math

import pytest

from ebdevs import (INF, KernelMessage, LegitimacyError, PortRef, ValidationError,
                    compare_then_tiebreak, time_min)
from ebdevs.core import check_time


def test_time_min_picks_least_and_handles_infinity():
    assert time_min([3.0, INF, 1.5]) == 1.5
    assert time_min([INF, INF]) == INF


def test_time_min_empty_is_an_error():
    with pytest.raises(ValueError):
        time_min([])


@pytest.mark.parametrize("bad", [-1.0, math.nan])
def test_check_time_rejects_negative_and_nan(bad):
    with pytest.raises(ValueError):
        check_time(bad)


def test_tiebreak_uses_select_key():
    entries = [("b", 1.0), ("a", 1.0), ("c", 0.5)]
    assert compare_then_tiebreak(entries) == "c"
    assert compare_then_tiebreak(entries[:2]) == "a"
    assert compare_then_tiebreak(entries[:2], select=lambda d: -ord(d)) == "b"


def test_port_kinds_are_checked():
    PortRef("regular-in", "in")
    with pytest.raises(ValueError):
        PortRef("sideways", "x")


def test_kernel_message_checks_tag_and_time():
    KernelMessage("star", 1.0)
    with pytest.raises(ValueError):
        KernelMessage("bogus", 1.0)
    with pytest.raises(ValueError):
        KernelMessage("x", -2.0)


def test_error_payloads():
    err = LegitimacyError("root/a", 3.0, 7)
    assert (err.path, err.time, err.count) == ("root/a", 3.0, 7)
    assert "root/a" in str(err)
    v = ValidationError(["one", "two"])
    assert v.report == ["one", "two"]

"""Discrete-event simulation with micro-macro channels (EB-DEVS).

Typical use::

    from ebdevs import RootCoordinator, Trace
    trace = Trace()
    RootCoordinator(model, recorder=trace).run_until(100.0)
"""

from .core import (
    BROADCAST_IN,
    BROADCAST_OUT,
    INF,
    SELF,
    CapacityError,
    DevsError,
    KernelMessage,
    LegitimacyError,
    PortRef,
    PortValue,
    SynchronizationError,
    ValidationError,
    compare_then_tiebreak,
    time_min,
)
from .model import Atomic, ClassicAtomic, Coupled, EBCoupled, classic_lift, ensure_valid, validate
from .simulator import GridSampler, LegitimacyGuard, RootCoordinator, Trace, simulate
from .transforms import flatten, lower_to_classic, trace_equivalent

__version__ = "0.1.0"

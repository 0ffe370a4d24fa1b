import numpy as np
import pytest

from lqtbench import ReferenceSignal, ScalarLqtProblem


class RecordingSignal:
    """Wraps a signal and records every sampled time, in call order."""

    def __init__(self, inner: ReferenceSignal):
        self.inner = inner
        self.queries: list[float] = []

    def as_signal(self) -> ReferenceSignal:
        def sampler(s, horizon):
            self.queries.append(s)
            return self.inner.sample(s, horizon)

        return ReferenceSignal.custom(sampler)


def make_scalar(
    a=1.0, b=1.0, q=1.0, r=1.0, horizon=25.0, x0=2.0, signal=None, f=0.02
) -> ScalarLqtProblem:
    if signal is None:
        signal = ReferenceSignal.z1(f)
    return ScalarLqtProblem(a=a, b=b, q=q, r=r, horizon=horizon, x0=x0, signal=signal)


@pytest.fixture
def scalar_problem():
    return make_scalar()

"""Small shared fixtures for solver tests."""
from declip.harness.suite import make_suite


def five_sines(seed=0):
    return make_suite(seed)["sines"]

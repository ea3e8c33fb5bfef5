"""Shared scenario builders plus the acceptance-line terminal summary."""

import math

import pytest

from ductflow import DuctChannelConfig, ReceiverVolume

#: One line per acceptance criterion, echoed after the test run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_channel(radius=10e-6, diffusion=1e-10, mean_velocity=1e-3):
    return DuctChannelConfig(radius_a=radius, diffusion_D=diffusion,
                             mean_velocity=mean_velocity)


def make_receiver(radius=10e-6, distance=200e-6, cphi=math.pi / 2):
    """Receiver scaled with the duct: c_x = c_r = a/2, spanning a quarter turn."""
    return ReceiverVolume(axial_distance_d=distance, extent_cx=radius / 2,
                          extent_cr=radius / 2, extent_cphi=cphi)


@pytest.fixture
def narrow_channel():
    return make_channel(radius=10e-6)


@pytest.fixture
def wide_channel():
    return make_channel(radius=200e-6)


@pytest.fixture
def wide_flow_only():
    return make_channel(radius=200e-6, diffusion=0.0)

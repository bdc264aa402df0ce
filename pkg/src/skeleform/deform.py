"""Skeleton retargeting: rescale a person's segments toward an art style.

The learned route scales every segment of group g by tau_art[g] /
tau_person[g], keeping all joint angles and the neck anchor.  The naive
route copies the art pose's per-joint segment lengths onto the person's
angles; it is kept as a baseline because it distorts left/right
proportions whenever the art pose is foreshortened.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidFactors
from .pose import (
    DEFAULT_TOPOLOGY,
    NUM_GROUPS,
    NUM_JOINTS,
    ROOT,
    KeypointSet,
    PolarPose,
    Topology,
    to_cartesian,
    to_polar,
)


@dataclass(frozen=True)
class GroupFactors:
    """Per-group body-ratio factors, strictly positive and finite."""

    tau: np.ndarray  # (6,) float64

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        if tau.shape != (NUM_GROUPS,):
            raise InvalidFactors(f"expected {NUM_GROUPS} factors, got shape {tau.shape}")
        if not np.all(np.isfinite(tau)) or np.any(tau <= 0.0):
            raise InvalidFactors("factors must be finite and > 0")
        object.__setattr__(self, "tau", tau)


@dataclass(frozen=True)
class GroupLengths:
    """Total segment length per group, root segment excluded."""

    totals: np.ndarray  # (6,) float64


def group_lengths(p: PolarPose, topo: Topology = DEFAULT_TOPOLOGY) -> GroupLengths:
    totals = np.zeros(NUM_GROUPS)
    for j in range(NUM_JOINTS):
        if j == ROOT:
            continue
        totals[topo.group[j]] += p.length[j]
    return GroupLengths(totals=totals)


def scale_groups(
    p: PolarPose, factors: np.ndarray, topo: Topology = DEFAULT_TOPOLOGY
) -> PolarPose:
    """Multiply each non-root segment length by its group's factor."""
    out = p.copy()
    for j in range(NUM_JOINTS):
        if j != ROOT:
            out.length[j] *= factors[topo.group[j]]
    return out


def deform(
    person: KeypointSet,
    tau_person: GroupFactors,
    tau_art: GroupFactors,
    topo: Topology = DEFAULT_TOPOLOGY,
) -> KeypointSet:
    """Retarget a fully visible person pose to the art body ratios."""
    polar = to_polar(person, topo)
    ratio = tau_art.tau / tau_person.tau
    return to_cartesian(scale_groups(polar, ratio, topo), topo)


def deform_naive(
    person: KeypointSet, art: KeypointSet, topo: Topology = DEFAULT_TOPOLOGY
) -> KeypointSet:
    """Baseline: person's angles with the art pose's per-joint lengths."""
    pp = to_polar(person, topo)
    pa = to_polar(art, topo)
    length = pa.length.copy()
    length[ROOT] = pp.length[ROOT]  # the anchor is not a body segment
    return to_cartesian(
        PolarPose(alpha=pp.alpha.copy(), length=length, root_position=pp.root_position.copy()),
        topo,
    )

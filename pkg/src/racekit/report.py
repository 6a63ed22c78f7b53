"""Race report record shared by all detectors."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RaceReport:
    """A witnessed race.

    kind names the race notion ("hb", "lockset", "lockcover", "syncp"); e1 and
    e2 are 0-based event ids with e1 earlier in trace order; var is the
    variable name both events access.  witness, when present, is the event-id
    sequence of a reordering exposing the pair (sync-preserving oracle only).
    """

    kind: str
    e1: int
    e2: int
    var: str
    algo: str
    witness: tuple[int, ...] | None = None

"""Series composition of cycle graphs into a single two-lead graph.

A series spec chains cycles left to right: the entrance lead sits on the
first cycle's entry vertex and the exit lead on the last cycle's exit
vertex, with entry and exit adjacent inside every cycle.  Interior joints
use one of two glue modes:

* ``connecting-edge``: consecutive cycles are joined by a bridging edge
  between the exit vertex of one and the entry vertex of the next, so every
  junction vertex has degree 3.  This is the canonical mode: it is the one
  that reproduces the reference resonance peak positions for the
  triangle-triangle, square-square, and triangle-square-triangle chains
  (see tests/test_compose.py for the calibration).
* ``vertex-merge``: the exit vertex of one cycle is identified with the
  entry vertex of the next, giving a shared degree-4 junction.

All vertices are Neumann-Kirchhoff; junction matrices follow each vertex's
final degree automatically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .graphs import NK, Edge, QuantumGraph

GLUE_VERTEX_MERGE = "vertex-merge"
GLUE_CONNECTING_EDGE = "connecting-edge"

# Fixed by calibration against the reference peak positions; see module doc.
CANONICAL_GLUE = GLUE_CONNECTING_EDGE


@dataclass(frozen=True)
class SeriesSpec:
    """Ordered cycle elements (size, edge-length multiplier) plus glue mode.

    ``glue_multiplier`` is the length of the bridging edge and only matters
    in connecting-edge mode.
    """

    elements: tuple
    glue: str = CANONICAL_GLUE
    glue_multiplier: int = 1

    def __post_init__(self):
        elements = tuple((int(n), int(m)) for n, m in self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise ValueError("series spec needs at least one element")
        for n, m in elements:
            if n < 3:
                raise ValueError(f"cycle size must be >= 3, got {n}")
            if m < 1:
                raise ValueError(f"length multiplier must be a positive integer, got {m}")
        if self.glue not in (GLUE_VERTEX_MERGE, GLUE_CONNECTING_EDGE):
            raise ValueError(f"unknown glue mode {self.glue!r}")
        if int(self.glue_multiplier) < 1:
            raise ValueError(
                f"glue multiplier must be a positive integer, got {self.glue_multiplier}"
            )
        object.__setattr__(self, "glue_multiplier", int(self.glue_multiplier))


def parse_series_shorthand(text: str) -> SeriesSpec:
    """Parse "c3+c4+c3" (vertex-merge) or "c3-c4-c3" (connecting-edge).

    A single element like "c5" uses the canonical glue mode, which never
    matters because there is no junction.  Mixing separators is rejected.
    """
    s = text.strip().lower()
    if not re.fullmatch(r"c\d+([+-]c\d+)*", s):
        raise ValueError(f"malformed composition {text!r}; expected e.g. c3+c3 or c3-c4-c3")
    if "+" in s and "-" in s:
        raise ValueError(f"composition {text!r} mixes + and - glue separators")
    if "+" in s:
        glue, parts = GLUE_VERTEX_MERGE, s.split("+")
    elif "-" in s:
        glue, parts = GLUE_CONNECTING_EDGE, s.split("-")
    else:
        glue, parts = CANONICAL_GLUE, [s]
    elements = tuple((int(p[1:]), 1) for p in parts)
    return SeriesSpec(elements=elements, glue=glue)


def compose_series(spec: SeriesSpec) -> QuantumGraph:
    """Build the chained graph for a series spec.

    Vertices are numbered 1..N in construction order.  Within each cycle the
    entry vertex and exit vertex are adjacent, and the remaining ring runs
    from the exit back around to the entry, matching the standalone cycle
    construction (a single-element spec is exactly make_cycle_graph).
    """
    edges = []
    nvert = 0
    entry_first = exit_prev = None

    for n, mult in spec.elements:
        if spec.glue == GLUE_VERTEX_MERGE and exit_prev is not None:
            # Entry of this cycle is the previous exit; add n-1 new vertices.
            ids = [exit_prev] + list(range(nvert + 1, nvert + n))
            nvert += n - 1
        else:
            ids = list(range(nvert + 1, nvert + n + 1))
            nvert += n
            if exit_prev is not None:
                edges.append(Edge(exit_prev, ids[0], float(spec.glue_multiplier)))
        edges.extend(
            Edge(ids[i], ids[(i + 1) % n], float(mult)) for i in range(n)
        )
        if entry_first is None:
            entry_first = ids[0]
        exit_prev = ids[1]

    return QuantumGraph(
        vertex_ids=tuple(range(1, nvert + 1)),
        boundary=(NK,) * nvert,
        edges=tuple(edges),
        leads=(entry_first, exit_prev),
    )

"""Reference selection graphs in the text format.

Exogenous parents are written out, so parsing adds no nodes.
"""

from __future__ import annotations

from .graph import CausalGraph, parse_graph

FIG1 = """
# treatment and outcome both drive selection
node X endo; node Y endo; node S sel
node U_X exo; node U_Y exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
edge X -> Y; edge X -> S; edge Y -> S
target X -> Y
"""

FIG2A = """
# selection depends on treatment only
node X endo; node Y endo; node S sel
node U_X exo; node U_Y exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
edge X -> Y; edge X -> S
target X -> Y
"""

FIG2B = """
# W confounds X and Y; selection on X
node X endo; node Y endo; node W endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_S -> S
edge X -> Y; edge W -> X; edge W -> Y; edge X -> S
target X -> Y
"""

FIG2C = """
# W drives both X and selection
node X endo; node Y endo; node W endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_S -> S
edge X -> Y; edge W -> X; edge W -> S
target X -> Y
"""

FIG3A = """
# outcome drives selection
node X endo; node Y endo; node S sel
node U_X exo; node U_Y exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
edge X -> Y; edge Y -> S
target X -> Y
"""

FIG3B = """
node X endo; node Y endo; node W1 endo; node W2 endo; node W3 endo; node S sel
node U_X exo; node U_Y exo; node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_W1 -> W1; edge U_W2 -> W2; edge U_W3 -> W3; edge U_S -> S
edge X -> Y; edge W1 -> X; edge W1 -> Y
edge X -> W2; edge W3 -> W2; edge W3 -> S
target X -> Y
"""

FIG3C = """
node X endo; node Y endo; node S sel
node W1 endo; node W2 endo; node W3 endo; node W4 endo
node U_X exo; node U_Y exo; node U_S exo
node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_W4 exo
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
edge U_W1 -> W1; edge U_W2 -> W2; edge U_W3 -> W3; edge U_W4 -> W4
edge X -> Y; edge W1 -> X; edge W1 -> W2; edge W2 -> Y
edge X -> S; edge W3 -> S; edge W4 -> W3; edge W4 -> Y
target X -> Y
"""

# direct, indirect and spurious Y-S paths
FIG8 = """
node X endo; node Y endo; node W endo; node M endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_M exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_M -> M; edge U_S -> S
edge X -> Y; edge X -> S; edge Y -> S; edge Y -> W; edge W -> S
edge M -> S; edge M -> Y
target X -> Y
"""

# no conditioning set separates S from Y*
FIG9 = """
node X endo; node Y endo; node S sel
node W1 endo; node W2 endo; node W3 endo; node W4 endo
node U_X exo; node U_Y exo; node U_S exo
node U_W1 exo; node U_W2 exo; node U_W3 exo; node U_W4 exo
edge U_X -> X; edge U_Y -> Y; edge U_S -> S
edge U_W1 -> W1; edge U_W2 -> W2; edge U_W3 -> W3; edge U_W4 -> W4
edge X -> Y; edge X -> W1; edge W1 -> W2; edge W2 -> Y
edge X -> S; edge W3 -> S; edge W4 -> W3; edge W4 -> Y; edge W2 -> S
target X -> Y
"""

# continuous trial: selection on Z
FIG10A = """
node X endo; node Y endo; node W endo; node Z endo; node S sel
node U_X exo; node U_Y exo; node U_W exo; node U_Z exo; node U_S exo
edge U_X -> X; edge U_Y -> Y; edge U_W -> W; edge U_Z -> Z; edge U_S -> S
edge X -> Y; edge W -> X; edge W -> Y; edge Z -> Y; edge Z -> S
target X -> Y
"""

# continuous trial: selection on W and Z
FIG10B = FIG10A.replace("edge Z -> S", "edge Z -> S; edge W -> S")

SOURCES = {
    "fig1": FIG1,
    "fig2a": FIG2A,
    "fig2b": FIG2B,
    "fig2c": FIG2C,
    "fig3a": FIG3A,
    "fig3b": FIG3B,
    "fig3c": FIG3C,
    "fig8": FIG8,
    "fig9": FIG9,
    "fig10a": FIG10A,
    "fig10b": FIG10B,
}


def load(name: str) -> CausalGraph:
    return parse_graph(SOURCES[name])


# selected cohort of the binary trial: (x, w, z, y, count)
TRIAL_COUNTS = (
    (0, 0, 0, 0, 12), (0, 0, 0, 1, 141),
    (0, 0, 1, 0, 174), (0, 0, 1, 1, 180),
    (0, 1, 0, 0, 42), (0, 1, 0, 1, 100),
    (0, 1, 1, 0, 245), (0, 1, 1, 1, 110),
    (1, 0, 0, 0, 8), (1, 0, 0, 1, 158),
    (1, 0, 1, 0, 73), (1, 0, 1, 1, 266),
    (1, 1, 0, 0, 10), (1, 1, 0, 1, 146),
    (1, 1, 1, 0, 146), (1, 1, 1, 1, 218),
)


def trial_table():
    from .estimators import DiscreteTable

    return DiscreteTable.from_rows(("x", "w", "z", "y"), TRIAL_COUNTS)

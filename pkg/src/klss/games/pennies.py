"""Matching-pennies families and the small worked-example game."""

from ..errors import BadParameter
from ..tree import build_game


def matching_pennies(N: int):
    """N-round-parameterized matching pennies with partial observation.

    Nature draws n uniformly from {1..N}; plus observes floor(n/2), minus
    observes floor((n+1)/2).  Both then pick heads or tails (minus does not
    see plus's choice).  Plus scores n on heads-heads, N-n on tails-tails,
    0 otherwise; scores are rescaled affinely into [-1, 1].
    """
    if N < 2:
        raise BadParameter("matching_pennies requires N >= 2")

    def leaf(n, a, b):
        if a == b == "h":
            u = n / N
        elif a == b == "t":
            u = (N - n) / N
        else:
            u = 0.0
        return {"player": "terminal", "utility": 2.0 * u - 1.0}

    branches = {}
    for n in range(1, N + 1):
        branches[str(n)] = {
            "player": "plus",
            "obs_plus": str(n // 2),
            "obs_minus": str((n + 1) // 2),
            "actions": {
                a: {
                    "player": "minus",
                    "obs_plus": "wait",
                    "obs_minus": "move",
                    "actions": {b: leaf(n, a, b) for b in "ht"},
                }
                for a in "ht"
            },
        }
    desc = {
        "player": "nature",
        "obs_plus": "start",
        "obs_minus": "start",
        "probs": {str(n): 1.0 / N for n in range(1, N + 1)},
        "actions": branches,
    }
    return build_game(desc, name=f"mp-{N}")


def hidden_mp_counterexample(N: int):
    """Matching pennies where only plus learns nature's draw.

    Nature draws n from {1..N} and tells plus only; minus wins (payoff -1 to
    plus) when the pennies match, plus wins (+1) otherwise.  The draw does
    not affect payoffs, so the game is N disguised copies of plain matching
    pennies sharing a single minus infoset.
    """
    if N < 2:
        raise BadParameter("hidden_mp_counterexample requires N >= 2")

    def leaf(a, b):
        return {"player": "terminal", "utility": -1.0 if a == b else 1.0}

    branches = {}
    for n in range(1, N + 1):
        branches[str(n)] = {
            "player": "plus",
            "obs_plus": str(n),
            "obs_minus": "draw",
            "actions": {
                a: {
                    "player": "minus",
                    "obs_plus": "wait",
                    "obs_minus": "move",
                    "actions": {b: leaf(a, b) for b in "ht"},
                }
                for a in "ht"
            },
        }
    desc = {
        "player": "nature",
        "obs_plus": "start",
        "obs_minus": "start",
        "probs": {str(n): 1.0 / N for n in range(1, N + 1)},
        "actions": branches,
    }
    return build_game(desc, name=f"hidden-mp-{N}")


# terminal utilities of the worked example: diagonal payoffs per branch
_FIG1_DIAG = {1: (1, 4), 2: (2, 3), 3: (3, 2), 4: (4, 1)}


def example_fig1():
    """Four-branch modified matching pennies used in the worked example.

    Nature picks a branch from {1, 2, 3, 4, e} uniformly.  Branch e is an
    irrelevant subgame, collapsed to a zero terminal.  On branch n, plus moves
    (infosets R1 = {1,2}, R3 = {3,4}), then minus moves without seeing plus's
    action (infosets C0 = branch 1, C2 = branches {2,3}, C4 = branch 4; the
    corresponding classes at plus's nodes are C0', C2', C4').  Heads-heads
    pays the first entry of the branch's diagonal, tails-tails the second,
    and mismatches pay zero.  Utilities are kept raw so the gadget numbers
    stay in the units used throughout.
    """
    plus_label = {1: "R1", 2: "R1", 3: "R3", 4: "R3"}
    minus_prime = {1: "C0'", 2: "C2'", 3: "C2'", 4: "C4'"}
    minus_label = {1: "C0", 2: "C2", 3: "C2", 4: "C4"}

    branches = {}
    for n in range(1, 5):
        hh, tt = _FIG1_DIAG[n]
        branches[str(n)] = {
            "player": "plus",
            "obs_plus": plus_label[n],
            "obs_minus": minus_prime[n],
            "actions": {
                a: {
                    "player": "minus",
                    "obs_plus": "wait",
                    "obs_minus": minus_label[n],
                    "actions": {
                        b: {
                            "player": "terminal",
                            "utility": float({"h": hh, "t": tt}[a]) if a == b else 0.0,
                        }
                        for b in "ht"
                    },
                }
                for a in "ht"
            },
        }
    branches["e"] = {"player": "terminal", "utility": 0.0}
    desc = {
        "player": "nature",
        "obs_plus": "start",
        "obs_minus": "start",
        "probs": {b: 0.2 for b in branches},
        "actions": branches,
    }
    return build_game(desc, name="fig1")

"""Benchmark and example game constructors."""

from .pennies import matching_pennies, hidden_mp_counterexample, example_fig1
from .poker import kuhn, leduc
from .goofspiel import goofspiel
from .dice import liars_dice
from .darkhex import abrupt_dark_hex
from .catalog import GameCatalogEntry, CATALOG, make_game, game_stats

__all__ = [
    "matching_pennies",
    "hidden_mp_counterexample",
    "example_fig1",
    "kuhn",
    "leduc",
    "goofspiel",
    "liars_dice",
    "abrupt_dark_hex",
    "GameCatalogEntry",
    "CATALOG",
    "make_game",
    "game_stats",
]

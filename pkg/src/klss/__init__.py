"""Subgame solving with limited knowledge in zero-sum extensive-form games."""

from .tree import (
    PLUS,
    MINUS,
    NATURE,
    TERMINAL,
    EMPTY_SEQ,
    Game,
    GameTree,
    Infoset,
    InfosetIndex,
    PayoffAddends,
    SequenceFormStrategy,
    behavior_to_sequence,
    build_game,
    expected_value,
    load_game,
    save_game,
    sequence_to_behavior,
    uniform_strategy,
    validate_strategy,
)

__version__ = "0.1.0"

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_kripke_game
from epigames.exceptions import ShapeError
from epigames.knowledge import (
    common_knowledge_partition,
    is_common_knowledge,
    knowledge_set,
    knows,
    partition_from_relation,
)


def test_partition_from_relation_builds_smallest_equivalence():
    assert partition_from_relation(["1", "2", "3"], [("1", "2")]) == (("1", "2"), ("3",))
    assert partition_from_relation(["a", "b", "c", "d"], [("d", "b"), ("b", "a")]) == (("a", "b", "d"), ("c",))
    assert partition_from_relation(["1", "2"], []) == (("1",), ("2",))


def test_partition_from_relation_rejects_unknown_world():
    with pytest.raises(ShapeError):
        partition_from_relation(["1", "2"], [("1", "9")])


def test_section2_knowledge(section2):
    assert knows(section2, "Row", {"1", "2"}, "1")
    assert not knows(section2, "Row", {"1"}, "1")
    assert knows(section2, "Row", {"3"}, "3")
    assert knowledge_set(section2, "Row", {"1", "2"}) == {"1", "2"}
    # Column knows that Row knows {1, 2} exactly in world 1
    assert knowledge_set(section2, "Column", knowledge_set(section2, "Row", {"1", "2"})) == {"1"}


def test_section2_common_knowledge(section2):
    assert common_knowledge_partition(section2) == (("1", "2", "3"),)
    assert not is_common_knowledge(section2, {"1", "2"}, "1")
    assert is_common_knowledge(section2, {"1", "2", "3"}, "2")


def test_unknown_inputs_raise(section2):
    with pytest.raises(ShapeError):
        knows(section2, "Row", {"7"}, "1")
    with pytest.raises(ShapeError):
        knowledge_set(section2, "Nobody", {"1"})
    with pytest.raises(ShapeError):
        is_common_knowledge(section2, {"1"}, "9")


@given(seed=st.integers(0, 2**32 - 1), mask=st.integers(0, 7))
@settings(max_examples=60, deadline=None)
def test_knowledge_is_truthful_and_introspective(seed, mask):
    game = random_kripke_game(np.random.default_rng(seed))
    event = {w for i, w in enumerate(game.worlds) if mask >> i & 1}
    for p in game.players:
        known = knowledge_set(game, p, event)
        assert known <= event
        assert knowledge_set(game, p, known) == known
    meet = common_knowledge_partition(game)
    for p in game.players:
        for block in game.partitions[p]:
            assert any(set(block) <= set(m) for m in meet)

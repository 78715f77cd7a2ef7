import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

from dishrec.corpus import LexiconSet
from dishrec.fragmenter import LexiconItem


@pytest.fixture
def lex():
    return LexiconSet(
        stopwords=frozenset({"the", "was", "were", "and", "a", "is"}),
        emoticon_map={":)": "POS_EMO", ":(": "NEG_EMO", ":D": "POS_EMO"},
        slang_map={"gr8": ("great",), "chai": ("tea",)},
    )


@pytest.fixture
def food_items():
    return [
        LexiconItem(1, "pasta", (("pasta",),)),
        LexiconItem(2, "pizza", (("pizza",),)),
        LexiconItem(3, "bread", (("bread",),)),
        LexiconItem(7, "garlic bread", (("garlic", "bread"),)),
    ]

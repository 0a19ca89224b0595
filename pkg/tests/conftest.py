import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from derivscope.toygrammar import load_toy_grammar

from cky_oracle import OracleGrammar


@pytest.fixture(scope="session")
def toy_grammar():
    return load_toy_grammar()


@pytest.fixture(scope="session")
def oracle_grammar():
    from importlib import resources

    text = resources.files("derivscope.data").joinpath("toy_grammar.txt").read_text("utf-8")
    return OracleGrammar(text)


# Figure-style fragment derivation used across modules: a determiner, a
# generic adjective and a noun under np_frg.
FRAGMENT_TREE_ENCODED = [
    "np_frg",
    [
        "sp-hd_n",
        {"token": "a", "le": "det"},
        ["aj-hdn_norm", {"token": "generic_adj", "le": "adj"}, {"token": "situation", "le": "noun"}],
    ],
]


@pytest.fixture
def fragment_tree_encoded():
    return [
        "np_frg",
        [
            "sp-hd_n",
            {"token": "a", "le": "det"},
            [
                "aj-hdn_norm",
                {"token": "generic_adj", "le": "adj"},
                {"token": "situation", "le": "noun"},
            ],
        ],
    ]

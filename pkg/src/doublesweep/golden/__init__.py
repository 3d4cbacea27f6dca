"""Published reference values for the benchmark configurations.

The tables are shipped as a static JSON file so that the reproduction
commands and the acceptance tests read the cited numbers from a single
source.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

__all__ = ["load_tables"]


@lru_cache(maxsize=1)
def load_tables() -> dict:
    """Return the golden-data document (tables 1-3 and the 16-node system)."""
    text = resources.files(__package__).joinpath("paper_tables.json").read_text()
    return json.loads(text)

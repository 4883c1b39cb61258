# cython: language_level=3
# Compiled build of the pure-Python search; `bfo.explore` prefers it when present.
include "explore_core.py"

import os
from pathlib import Path

# Reference solutions are expensive at level 7; keep them across test runs in
# a repo-local cache unless the caller already pointed the cache elsewhere.
os.environ.setdefault("SPLITCORRECT_CACHE", str(Path(__file__).parent / ".cache"))

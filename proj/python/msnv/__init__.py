"""Gaze-driven highlighting of chart references in narrative text."""

import json

from ._core import *  # noqa: F401,F403
from ._core import cohort_table, replay as _replay, analyze_logs as _analyze_logs


def replay(runs, fraction=0.4, strategy="desaturate", participant=""):
    """Replays (Document, samples) pairs and returns the report as a dict."""
    return json.loads(_replay(list(runs), fraction, strategy, participant))


def analyze_logs(paths, group="msnv", by=("group",)):
    return json.loads(_analyze_logs([str(p) for p in paths], group, list(by)))


def cohort(reports, exclude=(), invalid_threshold=0.25):
    """Cohort summary over report dicts or report/1 JSON strings."""
    texts = [r if isinstance(r, str) else json.dumps(r) for r in reports]
    return cohort_table(texts, list(exclude), invalid_threshold)

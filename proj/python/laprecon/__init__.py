"""Laparoscopic multi-view acquisition planning and reconstruction evaluation."""

import json as _json

from ._laprecon import *  # noqa: F401,F403
from ._laprecon import run_pipeline as _run_pipeline

__version__ = "0.1.0"


def pipeline(config=None, output_dir=""):
    """Runs the synthetic pipeline. `config` is a dict or JSON text; returns the metrics dict."""
    text = config if isinstance(config, str) else _json.dumps(config or {})
    return _json.loads(_run_pipeline(text, str(output_dir)))

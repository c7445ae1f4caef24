"""Deterministic run artifacts: report.json, report.md, tables/, manifest.json.

report.json and the CSV tables are byte-reproducible for a fixed config
and seed: keys are sorted, floats use shortest round-trip repr, and no
wall-clock data enters them.  Timings, package versions, and platform
notes go to manifest.json, which is excluded from reproducibility
comparisons.
"""

from __future__ import annotations

import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np

__all__ = ["sanitize", "render_markdown", "emit_report"]


def sanitize(obj):
    """Mapping of numpy scalars/arrays and non-finite floats to plain JSON."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if np.isnan(f):
            return "nan"
        if np.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


def _check_payload(c):
    return {
        "name": c.name,
        "law": c.law,
        "passed": bool(c.passed),
        "value": sanitize(c.value),
        "target": c.target,
        "detail": sanitize(c.detail),
    }


def render_markdown(results, cfg) -> str:
    lines = [
        "# kolmocalc verification report",
        "",
        f"structure: `{cfg.structure_label}`  blocks {cfg.structure.block_sizes}  "
        f"Q = {cfg.structure.hom_dim}",
        f"config fingerprint: `{cfg.fingerprint()}`",
        "",
        "| suite | check | law | value | target | status |",
        "|---|---|---|---|---|---|",
    ]
    for sr in results:
        for c in sr.checks:
            status = "PASS" if c.passed else "FAIL"
            val = f"{c.value:.6g}" if isinstance(c.value, (int, float)) else str(c.value)
            lines.append(
                f"| {sr.suite} | {c.name} | {c.law} | {val} | {c.target} | {status} |"
            )
    n_checks = sum(len(sr.checks) for sr in results)
    n_pass = sum(1 for sr in results for c in sr.checks if c.passed)
    lines += ["", f"**{n_pass}/{n_checks} checks passed**", ""]
    return "\n".join(lines)


def emit_report(results, cfg, out_dir, extra_tables=None) -> Path:
    """Write all artifacts under out_dir; returns the directory path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "tables").mkdir(exist_ok=True)

    payload = {
        "config_fingerprint": cfg.fingerprint(),
        "structure": {
            "label": cfg.structure_label,
            "blocks": list(cfg.structure.block_sizes),
            "hom_dim": cfg.structure.hom_dim,
            "weights": [int(w) for w in cfg.structure.weights],
        },
        "quadrature": sanitize(cfg.spec.to_dict()),
        "suites": {
            sr.suite: {
                "passed": bool(sr.passed),
                "checks": [_check_payload(c) for c in sr.checks],
            }
            for sr in results
        },
    }
    (out / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n"
    )
    (out / "report.md").write_text(render_markdown(results, cfg))

    tables = dict(extra_tables or {})
    for sr in results:
        for c in sr.checks:
            cols = {
                k: v
                for k, v in (c.detail or {}).items()
                if isinstance(v, (list, np.ndarray)) and len(v) > 0
            }
            if cols and len({len(v) for v in cols.values()}) == 1:
                tables[f"{sr.suite}_{c.name}"] = cols
    for name, cols in tables.items():
        with open(out / "tables" / f"{name}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            keys = sorted(cols)
            wr.writerow(keys)
            for row in zip(*(cols[k] for k in keys)):
                wr.writerow([sanitize(v) for v in row])

    manifest = {
        "config_fingerprint": cfg.fingerprint(),
        "seed": cfg.spec.seed,
        "suite_seconds": {sr.suite: round(sr.seconds, 3) for sr in results},
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "platform": platform.platform(),
    }
    try:
        import scipy
        import sympy

        manifest["versions"]["scipy"] = scipy.__version__
        manifest["versions"]["sympy"] = sympy.__version__
    except ImportError:
        pass
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return out

"""Collects one verdict per acceptance criterion for the end-of-run summary."""

RESULTS = {}


def record(number, title, ok, detail=""):
    """Store (or AND into) the verdict of criterion ``number``."""
    prev = RESULTS.get(number)
    if prev is not None:
        ok = ok and prev[1]
        detail = "; ".join(x for x in (prev[2], detail) if x)
    RESULTS[number] = (title, bool(ok), detail)


def lines():
    out = []
    for n in sorted(RESULTS):
        title, ok, detail = RESULTS[n]
        out.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else ""))
    return out

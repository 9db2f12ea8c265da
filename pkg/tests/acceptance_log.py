"""Collects one result line per acceptance criterion."""

LINES = []


def record(number, ok, detail):
    """Store and print a criterion verdict; return ``ok`` for asserting."""
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line, flush=True)
    return ok

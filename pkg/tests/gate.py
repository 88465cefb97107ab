"""Shared tally of acceptance outcomes, printed by the terminal-summary hook."""

RESULTS = []


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok

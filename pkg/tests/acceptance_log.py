"""One pass/fail line per acceptance criterion, printed at the end of the run."""

RESULTS: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
    RESULTS[number] = line
    print(line)

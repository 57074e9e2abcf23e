"""Per-criterion result lines collected by the acceptance suite."""
LINES = []


def record(number, ok, detail, asserted=True):
    status = ("PASS" if ok else "FAIL") if asserted else "INFO"
    line = f"criterion {number:>2} {status}: {detail}"
    LINES.append(line)
    print(line)
    return ok

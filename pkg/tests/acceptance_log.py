"""Pass/fail lines of the acceptance suite, echoed at the end of the pytest run."""

LINES = []


def report(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok

"""One-line acceptance verdicts, printed in the terminal summary."""

VERDICTS = {}


def record(number: int, ok: bool, detail: str) -> None:
    VERDICTS[number] = (ok, detail)

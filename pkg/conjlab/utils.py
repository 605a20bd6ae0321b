import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, List, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

PLUS_INF_LITERAL = "+inf"


def format_real(value: float) -> str:
    """Render a real at 17 significant digits; +inf uses the literal sentinel"""
    value = float(value)
    if value == math.inf:
        return PLUS_INF_LITERAL
    if value == -math.inf:
        return "-inf"
    if math.isnan(value):
        return "nan"
    return format(value, ".17g")


def parse_real(text: str) -> float:
    text = text.strip()
    if text == PLUS_INF_LITERAL:
        return math.inf
    return float(text)


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON has no infinities; non-finite reals travel as strings
        return json.dumps(format_real(value)) if not math.isfinite(value) else format_real(value)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps_report(payload: Any, indent: int = 2) -> str:
    """Deterministic JSON: sorted keys, reals at 17 significant digits"""
    return _encode(payload, indent, 0) + "\n"


def write_json(payload: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(payload), encoding="utf-8")
    return path


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([format_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def compensated_sum(values: Iterable[float]) -> float:
    """Correctly rounded sum (Shewchuk partials via math.fsum)"""
    return math.fsum(values)


def parallel_map(fn: Callable[[T], Any], items: Sequence[T], threads: int = 1) -> List[Any]:
    """Ordered map; results do not depend on the thread count"""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def block_slices(total: int, block: int) -> List[slice]:
    block = max(1, int(block))
    return [slice(start, min(start + block, total)) for start in range(0, total, block)]


def make_rng(seed: int | None) -> np.random.Generator:
    return np.random.default_rng(seed)

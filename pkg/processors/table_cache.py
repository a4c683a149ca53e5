"""
On-disk cache for the expensive exact artifacts.

Each entry is one JSON file holding a payload and the SHA-256 of its
canonical serialization. Keys combine the producing module, p, n and the
code version, so a version bump never serves stale tables.
"""

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.conversions import format_rational, parse_rational
from core.data_models import CODE_VERSION, MomentTable, OperatorSpec, RunPolynomial


def _canonical(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _checksum(payload: Any) -> str:
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def operator_to_json(spec: OperatorSpec) -> Dict[str, Any]:
    return {
        "operator": spec.name,
        "p": spec.p,
        "weights": [[format_rational(w), m] for w, m in spec.weights],
    }


def operator_from_json(data: Dict[str, Any]) -> OperatorSpec:
    return OperatorSpec(
        name=str(data["operator"]),
        p=int(data["p"]),
        weights=tuple((parse_rational(w), int(m)) for w, m in data["weights"]),
    )


def table_to_json(table: MomentTable) -> Dict[str, Any]:
    """Serialize with every rational as a "num/den" string."""
    data = operator_to_json(table.spec)
    data.update({
        "n_max": table.n_max,
        "connected": [format_rational(c) for c in table.connected],
        "full": [format_rational(a) for a in table.full],
        "provenance": dict(table.provenance),
    })
    return data


def table_from_json(data: Dict[str, Any]) -> MomentTable:
    """Inverse of table_to_json; the round trip is exact."""
    return MomentTable(
        spec=operator_from_json(data),
        n_max=int(data["n_max"]),
        connected=tuple(parse_rational(c) for c in data["connected"]),
        full=tuple(parse_rational(a) for a in data["full"]),
        provenance=dict(data.get("provenance", {})),
    )


def run_polynomial_to_json(poly: RunPolynomial) -> Dict[str, str]:
    return {",".join(str(part) for part in key): format_rational(c) for key, c in sorted(poly.terms.items())}


def run_polynomial_from_json(n: int, data: Dict[str, str]) -> RunPolynomial:
    terms = {tuple(int(part) for part in key.split(",")): parse_rational(c) for key, c in data.items()}
    return RunPolynomial(n=n, terms=terms)


class TableCache:
    """
    JSON cache rooted at a directory.

    A missing, unreadable or corrupted file is a miss; corruption is
    reported through the warn callback and the caller recomputes.
    """

    def __init__(self, root: Path, warn=print, enabled: bool = True):
        self.root = Path(root)
        self.warn = warn
        self.enabled = enabled

    def key(self, module: str, p: int, n: int, extra: str = "") -> str:
        suffix = f"_{extra}" if extra else ""
        return f"{module}_p{p}_n{n}{suffix}_v{CODE_VERSION}"

    def path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def load(self, key: str) -> Optional[Any]:
        if not self.enabled:
            return None
        path = self.path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            payload = entry["payload"]
            if entry.get("checksum") != _checksum(payload):
                self.warn(f"cache checksum mismatch for {path.name}, recomputing")
                return None
            return payload
        except (OSError, ValueError, KeyError, TypeError) as e:
            self.warn(f"unreadable cache file {path.name} ({e}), recomputing")
            return None

    def store(self, key: str, payload: Any):
        if not self.enabled:
            return
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            entry = {"key": key, "checksum": _checksum(payload), "payload": payload}
            self.path(key).write_text(json.dumps(entry, sort_keys=True), encoding="utf-8")
        except OSError as e:
            self.warn(f"could not write cache file for {key}: {e}")

    # Typed helpers

    def load_base_moments(self, p: int, n_max: int) -> Optional[List[Fraction]]:
        payload = self.load(self.key("base_connected", p, n_max))
        if payload is None:
            return None
        return [parse_rational(c) for c in payload]

    def store_base_moments(self, p: int, moments: List[Fraction]):
        n_max = len(moments) - 1
        self.store(self.key("base_connected", p, n_max), [format_rational(c) for c in moments])

    def load_k_zero(self, p: int, max_n: int) -> Optional[List[Fraction]]:
        payload = self.load(self.key("k_zero", p, max_n))
        if payload is None:
            return None
        return [parse_rational(c) for c in payload]

    def store_k_zero(self, p: int, values: List[Fraction]):
        self.store(self.key("k_zero", p, len(values)), [format_rational(v) for v in values])

    def load_table(self, spec: OperatorSpec, n_max: int) -> Optional[MomentTable]:
        payload = self.load(self.key("moment_table", spec.p, n_max, self._spec_tag(spec)))
        if payload is None:
            return None
        table = table_from_json(payload)
        if table.spec != spec:
            self.warn(f"cached table for {spec.name} has different weights, recomputing")
            return None
        return table

    def store_table(self, table: MomentTable):
        key = self.key("moment_table", table.spec.p, table.n_max, self._spec_tag(table.spec))
        self.store(key, table_to_json(table))

    def load_run_polynomial(self, n: int) -> Optional[RunPolynomial]:
        payload = self.load(self.key("run_polynomial", 0, n))
        if payload is None:
            return None
        return run_polynomial_from_json(n, payload)

    def store_run_polynomial(self, poly: RunPolynomial):
        self.store(self.key("run_polynomial", 0, poly.n), run_polynomial_to_json(poly))

    @staticmethod
    def _spec_tag(spec: OperatorSpec) -> str:
        digest = hashlib.sha256(_canonical(operator_to_json(spec)).encode("utf-8")).hexdigest()
        return f"{spec.name}-{digest[:12]}"

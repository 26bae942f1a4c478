from __future__ import annotations

import importlib
import importlib.metadata as md
import logging
from dataclasses import dataclass, field
from types import ModuleType
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional

from exchangeable_tails.constants import ENTRYPOINT_GROUP

if TYPE_CHECKING:
    from exchangeable_tails.runconfig import RunConfig

log = logging.getLogger(__name__)

_BUILTIN = (
    "exchangeable_tails.checks.normalization",
    "exchangeable_tails.checks.lemma",
    "exchangeable_tails.checks.asymptotic",
    "exchangeable_tails.checks.simulation",
)


@dataclass(slots=True)
class CheckOutcome:
    name: str
    passed: bool
    message: str
    details: Dict[str, Any] = field(default_factory=dict)
    skipped: bool = False

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "skipped": self.skipped,
            "message": self.message,
            "details": self.details,
        }


CheckFn = Callable[["RunConfig"], CheckOutcome]


class CheckRegistry:
    """Global store for verification checks."""

    def __init__(self, discover: bool = True) -> None:
        self._checks: Dict[str, CheckFn] = {}
        if discover:
            self._discover()

    # ---------- public API ----------
    def register(self, name: str, fn: CheckFn) -> None:
        self._checks[name.lower()] = fn

    def unregister(self, name: str) -> None:
        self._checks.pop(name.lower(), None)

    def list_checks(self) -> List[str]:
        return list(self._checks)

    def has(self, name: str) -> bool:
        return name.lower() in self._checks

    def get(self, name: str) -> Optional[CheckFn]:
        return self._checks.get(name.lower())

    def run(self, name: str, cfg: "RunConfig") -> CheckOutcome:
        fn = self.get(name)
        if not fn:
            return CheckOutcome(name, False, f"No check named {name}. Install a plugin.")
        try:
            return fn(cfg)
        except Exception as e:  # a broken check is a failed check
            log.warning("[checks] %s raised %s: %s", name, type(e).__name__, e)
            return CheckOutcome(name, False, f"{type(e).__name__}: {e}")

    # ---------- discovery ----------
    def _load(self, label: str, loader: Callable[[], ModuleType]) -> None:
        try:
            mod = loader()
            if hasattr(mod, "register"):
                mod.register(self)
        except Exception as e:
            log.warning("[checks] %s failed: %s", label, e)

    def _discover(self) -> None:
        for path in _BUILTIN:
            self._load(path, lambda path=path: importlib.import_module(path))
        for ep in md.entry_points(group=ENTRYPOINT_GROUP):
            if ep.value in _BUILTIN:
                continue
            self._load(ep.name, ep.load)


REGISTRY = CheckRegistry()

import logging

from exchangeable_tails import registry as registry_mod
from exchangeable_tails.registry import REGISTRY, CheckOutcome, CheckRegistry

BUILTIN_CHECKS = {
    "normalization",
    "lemma",
    "asymptotic",
    "prefactor",
    "identity",
    "mc",
    "centering",
    "exchangeability",
    "empirical",
}


def test_builtin_checks_are_discovered():
    assert BUILTIN_CHECKS <= set(REGISTRY.list_checks())
    assert REGISTRY.has("Normalization")


def test_register_and_unregister():
    reg = CheckRegistry(discover=False)
    assert reg.list_checks() == []
    reg.register("Always", lambda cfg: CheckOutcome("always", True, "ok"))
    assert reg.has("always")
    assert reg.run("always", None).passed
    reg.unregister("ALWAYS")
    assert not reg.has("always")


def test_unknown_check_fails():
    out = CheckRegistry(discover=False).run("nope", None)
    assert not out.passed
    assert "nope" in out.message


def test_raising_check_is_recorded_as_failure(caplog):
    reg = CheckRegistry(discover=False)

    def broken(cfg):
        raise ArithmeticError("boom")

    reg.register("broken", broken)
    with caplog.at_level(logging.WARNING, logger="exchangeable_tails.registry"):
        out = reg.run("broken", None)
    assert not out.passed
    assert out.message == "ArithmeticError: boom"
    assert "broken" in caplog.text


class _BadEntryPoint:
    name = "bad"
    value = "somewhere.else"

    def load(self):
        raise ImportError("missing module")


class _GoodEntryPoint:
    name = "extra"
    value = "extra.module"

    def load(self):
        class Module:
            @staticmethod
            def register(reg):
                reg.register("extra", lambda cfg: CheckOutcome("extra", True, "fine"))

        return Module


def test_entry_point_discovery(monkeypatch, caplog):
    monkeypatch.setattr(
        registry_mod.md, "entry_points", lambda group: [_BadEntryPoint(), _GoodEntryPoint()]
    )
    with caplog.at_level(logging.WARNING, logger="exchangeable_tails.registry"):
        reg = CheckRegistry()
    assert reg.has("extra")
    assert BUILTIN_CHECKS <= set(reg.list_checks())
    assert "missing module" in caplog.text


def test_outcome_as_dict():
    d = CheckOutcome("x", False, "msg", {"a": 1}, skipped=False).as_dict()
    assert d == {"name": "x", "passed": False, "skipped": False, "message": "msg", "details": {"a": 1}}

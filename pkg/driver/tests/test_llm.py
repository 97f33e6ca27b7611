"""LLM loop: reply parsing, the offline stub, and transcript archiving."""

import os

import pytest

from fourhammer_driver import llm


class TestChooseAction:
    def test_picks_first_legal_integer(self):
        action, fallback = llm.choose_action("I pick 12, not 7.", [7, 12])
        assert (action, fallback) == (12, False)

    def test_skips_illegal_integers(self):
        action, fallback = llm.choose_action("Option 99 looks fun, or 7.", [7, 12])
        assert (action, fallback) == (7, False)

    def test_fallback_prefers_pass(self):
        action, fallback = llm.choose_action("no numbers here", [0, 7, 12])
        assert (action, fallback) == (0, True)

    def test_fallback_lowest_without_pass(self):
        action, fallback = llm.choose_action("???", [7, 12])
        assert (action, fallback) == (7, True)


class TestEndpointResolution:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv(llm.ENDPOINT_ENV_VAR, "http://elsewhere")
        assert llm.resolve_endpoint("http://here") == "http://here"

    def test_env_var_used(self, monkeypatch):
        monkeypatch.setenv(llm.ENDPOINT_ENV_VAR, "http://elsewhere")
        assert llm.resolve_endpoint(None) == "http://elsewhere"

    def test_default_is_stub(self, monkeypatch):
        monkeypatch.delenv(llm.ENDPOINT_ENV_VAR, raising=False)
        assert llm.resolve_endpoint(None) == llm.STUB_ENDPOINT

    def test_unreachable_endpoint_raises(self):
        with pytest.raises(llm.EndpointError):
            llm.complete("http://127.0.0.1:1/missing", "prompt")


class TestStubGame:
    def test_full_game_completes_with_transcript(self, env, tmp_path):
        run_dir = llm.run_llm_game(env, "full_game", 3,
                                   endpoint=llm.STUB_ENDPOINT,
                                   runs_root=str(tmp_path))
        files = sorted(os.listdir(run_dir))
        assert files, "transcript must not be empty"
        first = open(os.path.join(run_dir, "step_0.txt")).read()
        assert "=== PROMPT ===" in first
        assert "PENDING DECISION" in first
        assert "=== REPLY ===" in first
        assert "=== ACTION ===" in first

    def test_transcript_numbers_every_option(self, env, tmp_path):
        run_dir = llm.run_llm_game(env, "single_shooting_maximize", 0,
                                   endpoint=llm.STUB_ENDPOINT,
                                   runs_root=str(tmp_path))
        first = open(os.path.join(run_dir, "step_0.txt")).read()
        assert "9: " in first and "10: " in first

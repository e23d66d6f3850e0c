import hashlib
import time

import httpx
import pytest
import yaml
from typer.testing import CliRunner

from app.main import app
from app.models.record_models import ColumnMap
from app.services.ingest_service import IngestService
from app.services.journal_service import RunJournal
from app.services.llm_service import FakeAssessor
from app.services.report_service import SOURCE_COLUMN
from app.utils.prompt_builder import build_user_message

runner = CliRunner()

# Identity of each screened golden record, in corpus order.
GOLDEN_IDENTITIES = [
    "doi:10.1016/j.technovation.2023.102883",
    "doi:10.1109/access.2023.0001",
    "at:rosaline r.a.a.; ponnuraj n.p.; t.c. s.l.; manisha g."
    "|enhancing lifestyle and health monitoring of elderly populations using csa-tkelm classifier",
    "doi:10.1016/j.ijinfomgt.2024.102000",
    "doi:10.1000/slr.0005",
    "at:lee c.; park d.|founders' heuristics and algorithmic advice",
    "doi:10.1000/slr.0010",
    "doi:10.1000/slr.0011",
    "doi:10.1000/slr.0012",
]


@pytest.fixture
def no_network(monkeypatch):
    """Fails the test if anything tries to send an HTTP request."""

    async def refuse(self, request, **kwargs):
        raise AssertionError(f"unexpected network request to {request.url}")

    monkeypatch.setattr(httpx.AsyncClient, "send", refuse)


def _invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def _expected_results(data_dir, out_dir) -> bytes:
    """Golden results with placeholders filled from the record identities and the fake request ids."""
    cleaned, _ = IngestService().read_records(out_dir / "cleaned_records.csv", ColumnMap(), "cleaned", SOURCE_COLUMN)
    text = (data_dir / "golden_results.csv").read_text(encoding="utf-8")
    for number, (identity, record) in enumerate(zip(GOLDEN_IDENTITIES, cleaned), start=1):
        text = text.replace(f"<fingerprint:{number}>", hashlib.sha256(identity.encode("utf-8")).hexdigest())
        text = text.replace(f"<request-id:{number}>", FakeAssessor.request_id_for(build_user_message(record)))
    return text.encode("utf-8")


def test_run_reproduces_golden_outputs(data_dir, tmp_path, no_network):
    out_dir = tmp_path / "out"
    started = time.perf_counter()
    result = _invoke(
        "run",
        "--config", data_dir / "golden_config.yaml",
        "--out-dir", out_dir,
        "--fake-assessor", data_dir / "fake_rules.yaml",
    )
    elapsed = time.perf_counter() - started

    assert result.exit_code == 0, result.output
    assert elapsed < 2
    assert (out_dir / "results.csv").read_bytes() == _expected_results(data_dir, out_dir)
    assert (out_dir / "summary.txt").read_bytes() == (data_dir / "golden_summary.txt").read_bytes()
    assert "Total duplicates removed: 2" in result.output
    assert len(RunJournal.load(out_dir / "journal" / "golden.jsonl")) == 9
    assert len((out_dir / "removed_records.csv").read_text(encoding="utf-8").splitlines()) == 3


def test_dedup_then_screen_matches_run(data_dir, tmp_path, no_network):
    config = data_dir / "golden_config.yaml"
    out_dir = tmp_path / "out"

    result = _invoke("dedup", "--config", config, "--out-dir", out_dir)
    assert result.exit_code == 0, result.output
    assert "Total articles processed: 12" in result.output
    assert "Total articles removed due to empty fields: 1" in result.output
    assert (out_dir / "stage_one_report.json").exists()

    result = _invoke("screen", "--config", config, "--out-dir", out_dir, "--fake-assessor", data_dir / "fake_rules.yaml")
    assert result.exit_code == 0, result.output
    assert (out_dir / "results.csv").read_bytes() == _expected_results(data_dir, out_dir)
    assert (out_dir / "summary.txt").read_bytes() == (data_dir / "golden_summary.txt").read_bytes()


def test_rerun_replays_journal(data_dir, tmp_path, no_network):
    args = ["--config", data_dir / "golden_config.yaml", "--out-dir", tmp_path, "--fake-assessor", data_dir / "fake_rules.yaml"]
    assert _invoke("run", *args).exit_code == 0
    first = (tmp_path / "results.csv").read_bytes()
    journal_size = (tmp_path / "journal" / "golden.jsonl").stat().st_size

    assert _invoke("run", *args).exit_code == 0
    assert (tmp_path / "results.csv").read_bytes() == first
    assert (tmp_path / "journal" / "golden.jsonl").stat().st_size == journal_size

    assert _invoke("run", *args, "--no-resume").exit_code == 0
    assert list((tmp_path / "journal").glob("golden.jsonl.*.bak"))
    assert (tmp_path / "results.csv").read_bytes() == first


def test_re_parse_works_offline(data_dir, tmp_path, no_network):
    config = data_dir / "golden_config.yaml"
    assert _invoke("run", "--config", config, "--out-dir", tmp_path, "--fake-assessor", data_dir / "fake_rules.yaml").exit_code == 0
    first = (tmp_path / "results.csv").read_bytes()

    result = _invoke("re-parse", "--config", config, "--out-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "results.csv").read_bytes() == first


def test_missing_credential(data_dir, tmp_path):
    out_dir = tmp_path / "out"
    result = _invoke("run", "--config", data_dir / "golden_config.yaml", "--out-dir", out_dir)
    assert result.exit_code == 5
    assert not out_dir.exists()


def test_credential_comes_from_environment(data_dir, tmp_path, monkeypatch):
    """With SLR_SCREEN_API_KEY set the real transport is used; here every request is refused at connect time."""
    monkeypatch.setenv("SLR_SCREEN_API_KEY", "sk-test")
    sent = []

    async def refuse(self, request, **kwargs):
        sent.append(request)
        raise httpx.ConnectError("refused", request=request)

    monkeypatch.setattr(httpx.AsyncClient, "send", refuse)
    result = _invoke("run", "--config", data_dir / "golden_config.yaml", "--out-dir", tmp_path)

    assert result.exit_code == 4
    assert sent and all(r.headers["authorization"] == "Bearer sk-test" for r in sent)
    # max_retries: 2 in the golden config
    assert len(sent) == 9 * 3
    assert "Transport failures: 9" in (tmp_path / "summary.txt").read_text(encoding="utf-8")


def test_invalid_config_writes_nothing(golden_dir, tmp_path):
    config_path = golden_dir / "golden_config.yaml"
    config = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    config["screening"]["concurrency"] = 0
    config_path.write_text(yaml.safe_dump(config), encoding="utf-8")
    out_dir = tmp_path / "out"

    result = _invoke("run", "--config", config_path, "--out-dir", out_dir, "--fake-assessor", golden_dir / "fake_rules.yaml")
    assert result.exit_code == 2
    assert not out_dir.exists()


def test_unknown_config_key(golden_dir):
    config_path = golden_dir / "golden_config.yaml"
    config_path.write_text(config_path.read_text(encoding="utf-8") + "api_key: sk-nope\n", encoding="utf-8")
    assert _invoke("validate-config", "--config", config_path).exit_code == 2


def test_validate_config(data_dir):
    result = _invoke("validate-config", "--config", data_dir / "golden_config.yaml")
    assert result.exit_code == 0, result.output
    assert "Config OK" in result.output


def test_bad_fake_rules(data_dir, tmp_path):
    rules = tmp_path / "rules.yaml"
    rules.write_text("rules:\n  - name: x\n    acceptance: Maybe\n", encoding="utf-8")
    result = _invoke("run", "--config", data_dir / "golden_config.yaml", "--out-dir", tmp_path, "--fake-assessor", rules)
    assert result.exit_code == 2


def test_missing_input_file(golden_dir, tmp_path):
    (golden_dir / "wos.csv").unlink()
    result = _invoke("dedup", "--config", golden_dir / "golden_config.yaml", "--out-dir", tmp_path)
    assert result.exit_code == 3


def test_duplicate_free_input(golden_dir, tmp_path):
    config_path = golden_dir / "golden_config.yaml"
    config = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    config["inputs"] = config["inputs"][:1]
    config_path.write_text(yaml.safe_dump(config), encoding="utf-8")

    result = _invoke("dedup", "--config", config_path, "--out-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert "Total duplicates removed: 0" in result.output


def test_empty_corpus(golden_dir, tmp_path, no_network):
    (golden_dir / "scopus.csv").write_text("Authors,Title,Abstract\n", encoding="utf-8")
    (golden_dir / "wos.csv").write_text("Authors,Article Title,Abstract\n", encoding="utf-8")

    result = _invoke(
        "run", "--config", golden_dir / "golden_config.yaml", "--out-dir", tmp_path,
        "--fake-assessor", golden_dir / "fake_rules.yaml",
    )
    assert result.exit_code == 0, result.output
    assert len((tmp_path / "results.csv").read_text(encoding="utf-8").splitlines()) == 1
    assert (tmp_path / "summary.txt").read_text(encoding="utf-8").startswith("Total articles processed: 0\n")


def test_screen_without_dedup(data_dir, tmp_path):
    result = _invoke(
        "screen", "--config", data_dir / "golden_config.yaml", "--out-dir", tmp_path,
        "--fake-assessor", data_dir / "fake_rules.yaml",
    )
    assert result.exit_code == 3


def test_unwritable_out_dir_is_a_config_error(golden_dir, tmp_path):
    blocker = tmp_path / "not-a-dir"
    blocker.write_text("", encoding="utf-8")
    out_dir = blocker / "out"
    config_path = golden_dir / "golden_config.yaml"
    rules = golden_dir / "fake_rules.yaml"

    result = _invoke("run", "--config", config_path, "--out-dir", out_dir, "--fake-assessor", rules)
    assert result.exit_code == 2
    assert "Stage one" not in result.output
    assert blocker.read_text(encoding="utf-8") == ""

    config = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    config["output"]["out_dir"] = str(out_dir)
    config_path.write_text(yaml.safe_dump(config), encoding="utf-8")
    assert _invoke("validate-config", "--config", config_path).exit_code == 2

import shutil
from pathlib import Path
from typing import List

import pytest

from app.config.settings import get_settings
from app.models.record_models import ArticleRecord
from app.models.screening_models import CriteriaItem, RunConfig, ScreeningCriteria
from app.services.llm_service import FakeAssessor, FakeRule, FakeRuleSet

DATA_DIR = Path(__file__).parent / "data"

AI_TOPIC = "the impact of AI on entrepreneurial decision-making"


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """Every test sees the environment it sets up, never a cached Settings or a developer's key."""
    monkeypatch.delenv("SLR_SCREEN_API_KEY", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def golden_dir(tmp_path) -> Path:
    """A writable copy of the golden fixture corpus, config and rules."""
    target = tmp_path / "golden"
    shutil.copytree(DATA_DIR, target)
    return target


@pytest.fixture
def criteria() -> ScreeningCriteria:
    return ScreeningCriteria(
        topic=AI_TOPIC,
        items=[
            CriteriaItem(
                heading="Relevance to the Topic",
                body="Assess if the article's content is directly related to the use of AI in entrepreneurial "
                "decision-making. Exclude articles that do not focus on this intersection.",
            ),
            CriteriaItem(
                heading="Abstract Analysis",
                body="Analyze the abstract of each article for key insights, methodologies, and findings that "
                "contribute to understanding the impact of AI on entrepreneurial decisions.",
            ),
        ],
    )


@pytest.fixture
def fast_config() -> RunConfig:
    """No real waiting: zero backoff and a rate limit that never throttles."""
    return RunConfig(
        endpoint_url="http://mock/v1/chat/completions",
        max_retries=3,
        base_backoff=0.0,
        rate_limit=1_000_000,
    )


def make_record(index: int, **overrides) -> ArticleRecord:
    values = dict(
        authors=f"Author{index} A.; Coauthor{index} B.",
        title=f"Article number {index} on entrepreneurial AI",
        abstract=f"Abstract {index}: how entrepreneurs use artificial intelligence in decisions.",
        doi=f"10.1000/test.{index:04d}",
        publication_year=2000 + index % 25,
        source="scopus",
    )
    values.update(overrides)
    return ArticleRecord(**values)


@pytest.fixture
def make_records():
    def build(count: int) -> List[ArticleRecord]:
        return [make_record(i) for i in range(count)]

    return build


@pytest.fixture
def accept_all_assessor() -> FakeAssessor:
    return FakeAssessor(
        FakeRuleSet(
            default=FakeRule(
                name="accept", acceptance="Yes", methodology="Theoretical paper", explanation="On topic."
            )
        )
    )

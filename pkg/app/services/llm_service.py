import hashlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Union

import httpx
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from app.exceptions import ConfigError, TransportError
from app.models.screening_models import (
    Acceptance,
    ChatMessage,
    ChatReply,
    RunConfig,
    ScreeningDecision,
)
from app.utils.prompt_builder import CORRECTIVE_SENTENCE, UNKNOWN_YEAR
from app.utils.response_parser import map_methodology, render_decision

logger = logging.getLogger(__name__)


class Assessor(Protocol):
    """Anything that can answer one single-turn chat exchange. Must be safe for concurrent use."""

    call_count: int

    async def complete(self, messages: List[ChatMessage]) -> ChatReply:
        ...

    async def aclose(self) -> None:
        ...


class ChatCompletionsClient:
    """
    Sends one chat-completions request per call over httpx.

    Retries are not handled here; failures surface as TransportError with `retryable`
    set for 429, 5xx, timeouts and connection errors.
    """

    def __init__(self, config: RunConfig, api_key: str, http_client: Optional[httpx.AsyncClient] = None):
        self.config = config
        self._api_key = api_key
        self._owns_client = http_client is None
        self._client = http_client or httpx.AsyncClient(timeout=config.request_timeout)
        self.call_count = 0

    def _build_payload(self, messages: List[ChatMessage]) -> Dict[str, Any]:
        return {
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [message.model_dump() for message in messages],
        }

    async def complete(self, messages: List[ChatMessage]) -> ChatReply:
        self.call_count += 1
        try:
            response = await self._client.post(
                self.config.endpoint_url,
                json=self._build_payload(messages),
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self.config.request_timeout,
            )
        except httpx.TimeoutException as e:
            raise TransportError(f"request timed out: {e}", retryable=True) from e
        except httpx.HTTPError as e:
            raise TransportError(f"connection failed: {e}", retryable=True) from e

        status = response.status_code
        if status == 429 or status >= 500:
            raise TransportError(
                f"endpoint returned {status}",
                status_code=status,
                retryable=True,
                retry_after=self._retry_after(response),
            )
        if status >= 400:
            raise TransportError(f"endpoint returned {status}: {response.text[:200]}", status_code=status)

        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise TransportError(f"malformed reply body: {e}", status_code=status) from e
        # multi-part content arrays are not supported; a reply is one text block
        if content is not None and not isinstance(content, str):
            raise TransportError(
                f"malformed reply body: content is {type(content).__name__}, not text", status_code=status
            )

        return ChatReply(
            content=content or "",
            request_id=str(body.get("id") or response.headers.get("x-request-id", "")),
            created=self._created_at(body.get("created")),
        )

    @staticmethod
    def _created_at(value: Any) -> Optional[datetime]:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return None
        try:
            return datetime.fromtimestamp(value, tz=timezone.utc)
        except (OverflowError, OSError, ValueError):
            logger.warning("Ignoring out-of-range reply timestamp %r", value)
            return None

    @staticmethod
    def _retry_after(response: httpx.Response) -> Optional[float]:
        value = response.headers.get("retry-after")
        if value is None:
            return None
        try:
            return max(0.0, float(value))
        except ValueError:
            return None

    async def aclose(self) -> None:
        if self._owns_client:
            await self._client.aclose()


class FakeRule(BaseModel):
    """Keyword predicates over the abstract (case-insensitive substrings) and the canned reply."""

    model_config = ConfigDict(extra="forbid")

    name: str
    all_of: List[str] = Field(default_factory=list)
    any_of: List[str] = Field(default_factory=list)
    none_of: List[str] = Field(default_factory=list)
    acceptance: str = "No"
    methodology: str = ""
    explanation: str = ""
    # Literal reply text, sent instead of a rendered decision.
    raw_reply: Optional[str] = None

    @field_validator("acceptance", mode="before")
    @classmethod
    def _yaml_booleans(cls, value: Union[bool, str]) -> str:
        # YAML 1.1 reads bare Yes/No as booleans
        if isinstance(value, bool):
            return "Yes" if value else "No"
        return value

    @field_validator("acceptance")
    @classmethod
    def _yes_or_no(cls, value: str) -> str:
        if value.strip().casefold() not in ("yes", "no"):
            raise ValueError("acceptance must be Yes or No")
        return value

    def matches(self, abstract: str) -> bool:
        text = abstract.casefold()
        if any(word.casefold() not in text for word in self.all_of):
            return False
        if self.any_of and not any(word.casefold() in text for word in self.any_of):
            return False
        return not any(word.casefold() in text for word in self.none_of)


class FakeRuleSet(BaseModel):
    model_config = ConfigDict(extra="forbid")

    created_at: datetime = datetime(2024, 1, 1, tzinfo=timezone.utc)
    rules: List[FakeRule] = Field(default_factory=list)
    default: FakeRule = Field(default_factory=lambda: FakeRule(name="default", explanation="No rule matched."))


class FakeAssessor:
    """
    Deterministic, offline stand-in for the model endpoint.

    Reads the article back out of the user message, picks the first rule whose keyword
    predicates match the abstract and replies in the prescribed line format. Never touches
    the network.
    """

    def __init__(self, rule_set: FakeRuleSet):
        self.rule_set = rule_set
        self.call_count = 0

    @classmethod
    def from_file(cls, path: Path) -> "FakeAssessor":
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            return cls(FakeRuleSet.model_validate(data))
        except OSError as e:
            raise ConfigError(f"Cannot read fake assessor rules {path}: {e}") from e
        except (yaml.YAMLError, ValidationError) as e:
            raise ConfigError(f"Invalid fake assessor rules {path}: {e}") from e

    @staticmethod
    def request_id_for(user_message: str) -> str:
        return "fake-" + hashlib.sha256(user_message.encode("utf-8")).hexdigest()[:16]

    async def complete(self, messages: List[ChatMessage]) -> ChatReply:
        self.call_count += 1
        user_message = next(m.content for m in reversed(messages) if m.role == "user")
        corrective_suffix = "\n" + CORRECTIVE_SENTENCE
        if user_message.endswith(corrective_suffix):
            user_message = user_message[: -len(corrective_suffix)]
        article = self._read_article(user_message)

        rule = next((r for r in self.rule_set.rules if r.matches(article["abstract"])), self.rule_set.default)
        logger.debug("Fake assessor matched rule %r", rule.name)
        if rule.raw_reply is not None:
            content = rule.raw_reply
        else:
            methodology, methodology_text = map_methodology(rule.methodology)
            decision = ScreeningDecision(
                acceptance=Acceptance.ACCEPT if rule.acceptance.strip().casefold() == "yes" else Acceptance.REJECT,
                echoed_authors=article["authors"],
                echoed_title=article["title"],
                echoed_year=int(article["year"]) if article["year"].isdigit() else None,
                methodology=methodology,
                methodology_text=methodology_text,
                explanation=rule.explanation,
            )
            content = render_decision(decision)

        return ChatReply(
            content=content,
            request_id=self.request_id_for(user_message),
            created=self.rule_set.created_at,
        )

    @staticmethod
    def _read_article(user_message: str) -> Dict[str, str]:
        # The last three lines are fixed; the abstract may span several lines.
        parts = user_message.rsplit("\n", 3)
        if len(parts) != 4:
            raise TransportError("fake assessor received an unrecognized user message")
        abstract, authors, title, year = parts
        year = year[len("Publication Year: "):]
        return {
            "abstract": abstract[len("Abstract: "):],
            "authors": authors[len("Authors: "):],
            "title": title[len("Article Title: "):],
            "year": "" if year == UNKNOWN_YEAR else year,
        }

    async def aclose(self) -> None:
        return None

from datetime import datetime
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.record_models import RecordFingerprint

DEFAULT_ENDPOINT_URL = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL_NAME = "gpt-4"


class CriteriaItem(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    heading: str = Field(min_length=1)
    body: str = Field(min_length=1)


class ScreeningCriteria(BaseModel):
    """The researcher-authored relevance rules embedded in the model instruction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    topic: str
    items: List[CriteriaItem] = Field(min_length=1)
    extra_guidance: Optional[str] = None

    @field_validator("topic")
    @classmethod
    def _topic_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("topic must be non-empty")
        return value


class RunConfig(BaseModel):
    """Endpoint settings plus the retry, rate and concurrency limits of a screening run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    endpoint_url: str = DEFAULT_ENDPOINT_URL
    model_name: str = DEFAULT_MODEL_NAME
    temperature: float = Field(default=0.0, ge=0.0, le=2.0)
    max_retries: int = Field(default=5, ge=0)
    base_backoff: float = Field(default=1.0, ge=0.0, description="seconds")
    max_backoff: float = Field(default=60.0, ge=0.0, description="seconds")
    rate_limit: float = Field(default=60.0, gt=0.0, description="requests per minute")
    concurrency: int = Field(default=1, ge=1)
    request_timeout: float = Field(default=120.0, gt=0.0, description="seconds")
    parse_retry: int = Field(default=1, ge=0)
    strict_parse: bool = False

    @field_validator("endpoint_url")
    @classmethod
    def _http_url(cls, value: str) -> str:
        if not value.startswith(("http://", "https://")):
            raise ValueError("endpoint_url must be an http(s) URL")
        return value


class Acceptance(str, Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"


class MethodologyKind(str, Enum):
    THEORETICAL = "Theoretical"
    EMPIRICAL_QUANTITATIVE = "EmpiricalQuantitative"
    EMPIRICAL_QUALITATIVE = "EmpiricalQualitative"
    OTHER = "Other"


METHODOLOGY_LABELS = {
    MethodologyKind.THEORETICAL: "Theoretical paper",
    MethodologyKind.EMPIRICAL_QUANTITATIVE: "Empirical (Quantitative)",
    MethodologyKind.EMPIRICAL_QUALITATIVE: "Empirical (Qualitative)",
}


class ScreeningDecision(BaseModel):
    """A parsed model verdict. Echoed metadata is kept for auditing only."""

    model_config = ConfigDict(frozen=True)

    acceptance: Acceptance
    echoed_authors: str = ""
    echoed_title: str = ""
    echoed_year: Optional[int] = None
    methodology: MethodologyKind = MethodologyKind.OTHER
    # Raw methodology text, only set for MethodologyKind.OTHER.
    methodology_text: str = ""
    explanation: str = ""

    @model_validator(mode="after")
    def _text_only_for_other(self) -> "ScreeningDecision":
        if self.methodology != MethodologyKind.OTHER and self.methodology_text:
            raise ValueError("methodology_text is only allowed for Other methodology")
        return self

    @property
    def acceptance_label(self) -> str:
        return "Yes" if self.acceptance == Acceptance.ACCEPT else "No"

    @property
    def methodology_label(self) -> str:
        return METHODOLOGY_LABELS.get(self.methodology, self.methodology_text)


class AssessmentStatus(str, Enum):
    DECIDED = "Decided"
    PARSE_FAILED = "ParseFailed"
    TRANSPORT_FAILED = "TransportFailed"


class AssessmentOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    fingerprint: RecordFingerprint
    raw_response: str = ""
    decision: Optional[ScreeningDecision] = None
    status: AssessmentStatus
    request_id: str = ""
    completed_at: datetime

    @model_validator(mode="after")
    def _decision_iff_decided(self) -> "AssessmentOutcome":
        if (self.status == AssessmentStatus.DECIDED) != (self.decision is not None):
            raise ValueError("decision must be present exactly when status is Decided")
        return self


class ChatMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    role: str
    content: str


class ChatReply(BaseModel):
    """First-choice content of a chat-completions reply plus its request metadata."""

    model_config = ConfigDict(frozen=True)

    content: str
    request_id: str = ""
    created: Optional[datetime] = None

import asyncio
import logging
import random
from datetime import datetime, timezone
from typing import Awaitable, Callable, Iterator, List, Optional

from tenacity import AsyncRetrying, RetryCallState, retry_if_exception, stop_after_attempt

from app.exceptions import DecisionParseError, TransportError
from app.models.record_models import ArticleRecord
from app.models.screening_models import (
    AssessmentOutcome,
    AssessmentStatus,
    ChatMessage,
    ChatReply,
    RunConfig,
    ScreeningCriteria,
    ScreeningDecision,
)
from app.services.journal_service import RunJournal
from app.services.llm_service import Assessor
from app.utils.backoff import NondecreasingJitterWait, is_retryable
from app.utils.normalization import fingerprint
from app.utils.prompt_builder import build_instruction, build_user_message, with_correction
from app.utils.rate_limiter import TokenBucket
from app.utils.response_parser import parse_decision

logger = logging.getLogger(__name__)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class ScreeningService:
    """
    Screens articles against the review criteria through an Assessor.

    Each article is one single-turn exchange: the rendered instruction as the system
    message and the article as the user message.
    """

    def __init__(
        self,
        config: RunConfig,
        transport: Assessor,
        sleep: Callable[[float], Awaitable[None]] = asyncio.sleep,
        clock: Callable[[], datetime] = utc_now,
        rng: Optional[random.Random] = None,
        strip_doi_prefixes: bool = True,
    ):
        self.config = config
        self.transport = transport
        self._sleep = sleep
        self._clock = clock
        self._rng = rng or random.Random()
        self.strip_doi_prefixes = strip_doi_prefixes

    async def assess_one(
        self,
        record: ArticleRecord,
        instruction: str,
        rate_limiter: Optional[TokenBucket] = None,
    ) -> AssessmentOutcome:
        """
        Assesses one article. Never raises for endpoint or reply problems; those end up in
        the outcome status (TransportFailed, ParseFailed) with the last raw reply kept.
        """
        record_fingerprint = fingerprint(record, strip_doi_prefixes=self.strip_doi_prefixes)
        user_message = build_user_message(record)
        raw_response = ""
        request_id = ""
        replied_at: Optional[datetime] = None

        for parse_attempt in range(self.config.parse_retry + 1):
            content = user_message if parse_attempt == 0 else with_correction(user_message)
            messages = [
                ChatMessage(role="system", content=instruction),
                ChatMessage(role="user", content=content),
            ]
            try:
                reply = await self._send(messages, rate_limiter)
            except TransportError as e:
                logger.error("Giving up on %s: %s", record_fingerprint[:12], e)
                return AssessmentOutcome(
                    fingerprint=record_fingerprint,
                    raw_response=raw_response,
                    status=AssessmentStatus.TRANSPORT_FAILED,
                    request_id=request_id,
                    completed_at=self._clock(),
                )

            raw_response = reply.content
            request_id = reply.request_id
            replied_at = reply.created
            try:
                decision = parse_decision(raw_response, strict=self.config.strict_parse)
            except DecisionParseError as e:
                logger.warning(
                    "Unparseable reply for %s (attempt %d/%d): %s",
                    record_fingerprint[:12],
                    parse_attempt + 1,
                    self.config.parse_retry + 1,
                    e.kind.value,
                )
                continue
            return self._decided(record_fingerprint, reply, decision)

        return AssessmentOutcome(
            fingerprint=record_fingerprint,
            raw_response=raw_response,
            status=AssessmentStatus.PARSE_FAILED,
            request_id=request_id,
            completed_at=replied_at or self._clock(),
        )

    def _decided(self, record_fingerprint: str, reply: ChatReply, decision: ScreeningDecision) -> AssessmentOutcome:
        return AssessmentOutcome(
            fingerprint=record_fingerprint,
            raw_response=reply.content,
            decision=decision,
            status=AssessmentStatus.DECIDED,
            request_id=reply.request_id,
            completed_at=reply.created or self._clock(),
        )

    async def _send(self, messages: List[ChatMessage], rate_limiter: Optional[TokenBucket]) -> ChatReply:
        retrying = AsyncRetrying(
            sleep=self._sleep,
            stop=stop_after_attempt(self.config.max_retries + 1),
            wait=NondecreasingJitterWait(self.config.base_backoff, self.config.max_backoff, self._rng),
            retry=retry_if_exception(is_retryable),
            before_sleep=self._log_retry,
            reraise=True,
        )
        async for attempt in retrying:
            with attempt:
                if rate_limiter is not None:
                    await rate_limiter.acquire()
                reply = await self.transport.complete(messages)
        return reply

    @staticmethod
    def _log_retry(retry_state: RetryCallState) -> None:
        logger.warning(
            "Attempt %d failed (%s); retrying in %.2fs",
            retry_state.attempt_number,
            retry_state.outcome.exception() if retry_state.outcome else "unknown error",
            retry_state.next_action.sleep if retry_state.next_action else 0.0,
        )

    async def screen_corpus(
        self,
        records: List[ArticleRecord],
        criteria: ScreeningCriteria,
        journal: RunJournal,
        on_outcome: Optional[Callable[[AssessmentOutcome], None]] = None,
        retry_failed: bool = False,
    ) -> List[AssessmentOutcome]:
        """
        Screens the whole corpus, resuming from the journal.

        Records already journaled are replayed instead of re-sent. New outcomes are journaled
        as soon as they complete, and delivered (to `on_outcome` and in the returned list) in
        input order. At most `config.concurrency` requests are in flight; the rate limit is
        shared by all workers.

        Raises:
            JournalWriteError: the journal could not be written; the run stops and can be resumed.
        """
        instruction = build_instruction(criteria)
        limiter = TokenBucket(self.config.rate_limit)
        results: List[Optional[AssessmentOutcome]] = [None] * len(records)
        to_send: List[int] = []

        for index, record in enumerate(records):
            cached = journal.get(fingerprint(record, strip_doi_prefixes=self.strip_doi_prefixes))
            if cached is None or (retry_failed and cached.status == AssessmentStatus.TRANSPORT_FAILED):
                to_send.append(index)
            else:
                results[index] = cached
        logger.info("Screening %d records (%d replayed from journal)", len(records), len(records) - len(to_send))

        next_to_emit = 0

        def emit_ready() -> None:
            nonlocal next_to_emit
            while next_to_emit < len(results) and results[next_to_emit] is not None:
                if on_outcome is not None:
                    on_outcome(results[next_to_emit])
                next_to_emit += 1

        async def worker(pending: Iterator[int]) -> None:
            for index in pending:
                outcome = await self.assess_one(records[index], instruction, limiter)
                journal.append(outcome)
                results[index] = outcome
                emit_ready()

        emit_ready()
        pending = iter(to_send)
        workers = [asyncio.ensure_future(worker(pending)) for _ in range(min(self.config.concurrency, len(to_send)))]
        try:
            await asyncio.gather(*workers)
        except BaseException:
            for task in workers:
                task.cancel()
            await asyncio.gather(*workers, return_exceptions=True)
            raise
        emit_ready()

        return [outcome for outcome in results if outcome is not None]

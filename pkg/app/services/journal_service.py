import json
import logging
import os
import threading
from pathlib import Path
from typing import IO, Dict, Optional

from pydantic import ValidationError

from app.exceptions import JournalCorruptError, JournalWriteError
from app.models.screening_models import AssessmentOutcome

logger = logging.getLogger(__name__)

JOURNAL_FORMAT_VERSION = 1


def serialize_outcome(outcome: AssessmentOutcome) -> str:
    payload = {"v": JOURNAL_FORMAT_VERSION}
    payload.update(outcome.model_dump(mode="json"))
    if payload.get("decision") is None:
        payload.pop("decision", None)
    return json.dumps(payload, ensure_ascii=False)


def deserialize_outcome(line: str) -> AssessmentOutcome:
    payload = json.loads(line)
    if not isinstance(payload, dict) or payload.pop("v", None) != JOURNAL_FORMAT_VERSION:
        raise ValueError(f"unsupported journal entry version in {line[:60]!r}")
    return AssessmentOutcome.model_validate(payload)


class RunJournal:
    """
    Append-only newline-delimited JSON log of completed assessments, keyed by fingerprint.

    Every append is flushed and fsynced before returning, so a killed run can be resumed
    exactly. On reload the last entry for a fingerprint wins.
    """

    def __init__(self, path: Path, entries: Optional[Dict[str, AssessmentOutcome]] = None):
        self.path = Path(path)
        self.entries: Dict[str, AssessmentOutcome] = dict(entries or {})
        self._handle: Optional[IO[str]] = None
        self._lock = threading.Lock()
        # Byte offset to cut a torn final line back to before the first append.
        self._truncate_at: Optional[int] = None
        self._needs_newline = False

    @classmethod
    def load(cls, path: Path) -> "RunJournal":
        """
        Reads a journal file. A missing file yields an empty journal; a torn final line
        is skipped with a warning.

        Raises:
            JournalCorruptError: a line other than the last one is malformed.
        """
        journal = cls(path)
        if not journal.path.exists():
            return journal

        data = journal.path.read_bytes()
        lines = data.split(b"\n")
        # A trailing "\n" leaves one empty element behind.
        if lines and lines[-1] == b"":
            lines.pop()
        offset = 0
        for number, raw_line in enumerate(lines, start=1):
            is_last = number == len(lines)
            try:
                outcome = deserialize_outcome(raw_line.decode("utf-8"))
            except (UnicodeDecodeError, ValueError, ValidationError) as e:
                if not is_last:
                    raise JournalCorruptError(str(journal.path), number, str(e)) from e
                logger.warning("Skipping incomplete final line %d of journal %s", number, journal.path)
                journal._truncate_at = offset
                break
            journal.entries[outcome.fingerprint] = outcome
            offset += len(raw_line) + 1
            if is_last and not data.endswith(b"\n"):
                journal._needs_newline = True

        logger.info("Loaded %d journal entries from %s", len(journal.entries), journal.path)
        return journal

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, fingerprint: str) -> Optional[AssessmentOutcome]:
        return self.entries.get(fingerprint)

    def append(self, outcome: AssessmentOutcome) -> None:
        line = serialize_outcome(outcome) + "\n"
        with self._lock:
            try:
                handle = self._open()
                handle.write(line)
                handle.flush()
                os.fsync(handle.fileno())
            except OSError as e:
                raise JournalWriteError(f"Cannot append to journal {self.path}: {e}") from e
            self.entries[outcome.fingerprint] = outcome

    def _open(self) -> IO[str]:
        if self._handle is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            if self._truncate_at is not None:
                with open(self.path, "r+b") as raw:
                    raw.truncate(self._truncate_at)
                self._truncate_at = None
            self._handle = open(self.path, "a", encoding="utf-8", newline="\n")
            if self._needs_newline:
                self._handle.write("\n")
                self._needs_newline = False
        return self._handle

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None

    def __enter__(self) -> "RunJournal":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

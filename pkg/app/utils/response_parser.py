import re
from typing import Dict, List, Optional, Tuple

from app.exceptions import DecisionParseError, ParseErrorKind
from app.models.screening_models import Acceptance, MethodologyKind, ScreeningDecision

ACCEPTANCE = "Acceptance"
AUTHORS = "Authors"
ARTICLE_TITLE = "Article Title"
PUBLICATION_YEAR = "Publication Year"
METHODOLOGY = "Methodology"
EXPLANATION = "Explanation"

REPLY_KEYS: List[str] = [ACCEPTANCE, AUTHORS, ARTICLE_TITLE, PUBLICATION_YEAR, METHODOLOGY, EXPLANATION]

_LENIENT_PATTERNS = {key: re.compile(r"^\s*" + re.escape(key) + r":[ ]?(.*)$", re.IGNORECASE) for key in REPLY_KEYS}
_INTEGER = re.compile(r"^[+-]?\d+$")
_NOT_ALNUM = re.compile(r"[\W_]+")

_ACCEPTANCE_VALUES = {"yes": Acceptance.ACCEPT, "no": Acceptance.REJECT}

_METHODOLOGY_FORMS = {
    "theoreticalpaper": MethodologyKind.THEORETICAL,
    "empiricalquantitative": MethodologyKind.EMPIRICAL_QUANTITATIVE,
    "empiricalqualitative": MethodologyKind.EMPIRICAL_QUALITATIVE,
}


def map_methodology(raw: str) -> Tuple[MethodologyKind, str]:
    """
    Maps free methodology text onto the three-way taxonomy.

    Matching ignores case, punctuation and whitespace. Anything else is returned as
    (OTHER, raw) with the text untouched.
    """
    kind = _METHODOLOGY_FORMS.get(_NOT_ALNUM.sub("", raw.casefold()))
    if kind is None:
        return MethodologyKind.OTHER, raw
    return kind, ""


def _match_line(line: str, key: str, strict: bool) -> Optional[str]:
    if strict:
        prefix = f"{key}: "
        return line[len(prefix):] if line.startswith(prefix) else None
    match = _LENIENT_PATTERNS[key].match(line)
    return match.group(1) if match else None


def _extract_fields(raw: str, strict: bool) -> Dict[str, str]:
    """First occurrence of every prescribed key wins; later duplicates are ignored."""
    found: Dict[str, str] = {}
    for line in raw.split("\n"):
        if line.endswith("\r"):
            line = line[:-1]
        for key in REPLY_KEYS:
            if key in found:
                continue
            value = _match_line(line, key, strict)
            if value is not None:
                found[key] = value
                break
    return found


def parse_decision(raw: str, strict: bool = False) -> ScreeningDecision:
    """
    Parses the line-structured model reply into a ScreeningDecision.

    Args:
        raw (str): The reply text.
        strict (bool): Require keys at line start with exact casing, as "<Key>: ".

    Raises:
        DecisionParseError: EmptyReply, MissingAcceptance or UnrecognizedAcceptanceValue.
    """
    if not raw or not raw.strip():
        raise DecisionParseError(ParseErrorKind.EMPTY_REPLY, raw or "")

    fields = _extract_fields(raw, strict)
    if ACCEPTANCE not in fields:
        raise DecisionParseError(ParseErrorKind.MISSING_ACCEPTANCE, raw)

    acceptance = _ACCEPTANCE_VALUES.get(fields[ACCEPTANCE].strip().casefold())
    if acceptance is None:
        raise DecisionParseError(ParseErrorKind.UNRECOGNIZED_ACCEPTANCE_VALUE, fields[ACCEPTANCE])

    year_text = fields.get(PUBLICATION_YEAR, "").strip()
    methodology, methodology_text = map_methodology(fields.get(METHODOLOGY, ""))

    return ScreeningDecision(
        acceptance=acceptance,
        echoed_authors=fields.get(AUTHORS, ""),
        echoed_title=fields.get(ARTICLE_TITLE, ""),
        echoed_year=int(year_text) if _INTEGER.match(year_text) else None,
        methodology=methodology,
        methodology_text=methodology_text,
        explanation=fields.get(EXPLANATION, ""),
    )


def render_decision(decision: ScreeningDecision) -> str:
    """Inverse of parse_decision: the six prescribed lines in canonical order and casing."""
    year = "" if decision.echoed_year is None else str(decision.echoed_year)
    return "\n".join(
        [
            f"{ACCEPTANCE}: {decision.acceptance_label}",
            f"{AUTHORS}: {decision.echoed_authors}",
            f"{ARTICLE_TITLE}: {decision.echoed_title}",
            f"{PUBLICATION_YEAR}: {year}",
            f"{METHODOLOGY}: {decision.methodology_label}",
            f"{EXPLANATION}: {decision.explanation}",
        ]
    )

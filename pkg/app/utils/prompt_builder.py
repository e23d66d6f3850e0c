from app.exceptions import IncompleteRecordError
from app.models.record_models import ArticleRecord
from app.models.screening_models import ScreeningCriteria
from app.utils.normalization import collapse_whitespace, is_complete

INTRO_TEMPLATE = (
    "Your primary function is to analyze academic articles related to {topic}. "
    "You must evaluate each article's relevance and suitability for inclusion in a systematic "
    "literature review (SLR). Consider the following aspects in your evaluation:"
)

CONCLUSION = (
    "Your analysis should conclude with a clear recommendation on whether the article should be "
    "included in the SLR for further analysis. Provide a very brief justification for your decision "
    "based on the criteria above."
)

# Fixed reply format; the parser depends on it, so it is never user-editable.
OUTPUT_FORMAT = "\n".join(
    [
        "your style of output should be like the following:",
        "Acceptance:(if the article is acceptable or not) Yes/No",
        "Authors:",
        "Article Title:",
        "Publication Year:",
        "Methodology:(tell about it's methodology if it's "
        "(theoretical paper- empirical (quantitative)-empirical (qualitative)))",
        "Explanation:",
        "don't add any \\n or anything else except raw text",
    ]
)

CORRECTIVE_SENTENCE = "Reply using exactly the prescribed line format."

UNKNOWN_YEAR = "unknown"


def build_instruction(criteria: ScreeningCriteria) -> str:
    """Renders the system instruction: topic, numbered criteria, optional guidance, fixed output format."""
    numbered = "\n".join(
        f"{position}. {item.heading}: {item.body}" for position, item in enumerate(criteria.items, start=1)
    )
    sections = [INTRO_TEMPLATE.format(topic=criteria.topic), numbered, CONCLUSION]
    if criteria.extra_guidance and criteria.extra_guidance.strip():
        sections.append(criteria.extra_guidance.strip())
    sections.append(OUTPUT_FORMAT)
    return "\n\n".join(sections)


def build_user_message(record: ArticleRecord) -> str:
    if not is_complete(record):
        raise IncompleteRecordError(f"record from {record.source!r} lacks authors, title or abstract")
    year = str(record.publication_year) if record.publication_year is not None else UNKNOWN_YEAR
    return (
        f"Abstract: {record.abstract}\n"
        f"Authors: {collapse_whitespace(record.authors)}\n"
        f"Article Title: {collapse_whitespace(record.title)}\n"
        f"Publication Year: {year}"
    )


def with_correction(user_message: str) -> str:
    return f"{user_message}\n{CORRECTIVE_SENTENCE}"

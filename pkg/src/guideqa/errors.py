"""Exception types shared across the engine.

Every error carries a short machine-parsable message; the CLI maps
ValidationFailure subclasses to exit code 1 and the rest to exit code 2.
"""


class GuideQAError(Exception):
    """Base class for all engine errors."""


class ValidationFailure(GuideQAError):
    """Base for input/validation problems (CLI exit code 1)."""


class ParseError(ValidationFailure):
    """Malformed input file. Carries line/position when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message)


class ValidationError(ValidationFailure):
    """Structurally valid file with inconsistent content; names the offending id."""

    def __init__(self, message, offending_id=None):
        self.offending_id = offending_id
        super().__init__(message)


class TemplateSyntaxError(ValidationFailure):
    """Bad question template. Carries the template id and character offset."""

    def __init__(self, message, template_id=None, offset=None):
        self.template_id = template_id
        self.offset = offset
        prefix = f"template {template_id!r}" if template_id else "template"
        if offset is not None:
            prefix += f" at offset {offset}"
        super().__init__(f"{prefix}: {message}")


class EmptyCorpus(ValidationFailure):
    """Generation or training received zero usable examples."""


class SingleClassCorpus(ValidationFailure):
    """Training corpus covers fewer than two intents; the model would be degenerate."""


class MissingEntity(GuideQAError):
    """The classified intent needs an entity binding the question does not provide."""

    def __init__(self, intent, needed):
        self.intent = intent
        self.needed = needed
        super().__init__(f"intent {intent.value} needs a {needed} binding")


class RecordNotFound(GuideQAError):
    """A bound id no longer resolves in the knowledge base (version skew)."""

    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"knowledge record {record_id!r} not found")


class EmptyQuestion(ValidationFailure):
    """Question text was empty after trimming."""


class UnknownFeedbackId(GuideQAError):
    """Feedback vote referenced an id the responder never issued."""


class AlreadyVoted(GuideQAError):
    """A helpfulness vote was already recorded for this feedback id."""

"""Text helpers for the toy corpus."""


def truncate(text, limit):
    """Clip text to at most limit characters."""
    if len(text) <= limit:
        return text
    return text[:limit + 1]

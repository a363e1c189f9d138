"""Small lookup helpers for the toy corpus."""


def get_category_index(items, key):
    """Return the index of key in items, or -1 when absent."""
    for position, item in enumerate(items):
        if item == key:
            return position
    return 0

def require_values(values):
    if not values:
        raise ValueError("values must not be empty")


def chunks(items, size):
    for start in range(0, len(items), size):
        yield items[start:start + size]

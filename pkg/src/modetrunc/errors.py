class ResourceCapError(RuntimeError):
    """Raised when an operation would materialize more data than allowed.

    Usage errors (bad mode numbers, shape mismatches) raise ValueError
    instead; this exception is reserved for size caps.
    """

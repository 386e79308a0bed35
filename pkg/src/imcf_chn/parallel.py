import os


def worker_count() -> int:
    """Worker pool size: ``IMCF_THREADS`` if set, otherwise all cores."""
    env = os.environ.get("IMCF_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"IMCF_THREADS must be a positive integer, got {env!r}") from None
    return os.cpu_count() or 1

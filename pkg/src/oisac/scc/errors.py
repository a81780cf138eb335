class CapacityExceeded(ValueError):
    pass


class DegenerateConfiguration(ValueError):
    pass


class DetectionFailure(Exception):
    """Marker detection failed; ``reason`` is one of too_few_candidates, stripe_mismatch, ambiguous."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class DecodeFailure(Exception):
    """Frame decoding failed at ``stage`` (detection, rectification or demodulation)."""

    def __init__(self, stage: str, cause: Exception | str | None = None):
        super().__init__(f"decode failed at {stage}" + (f": {cause}" if cause else ""))
        self.stage = stage
        self.cause = cause

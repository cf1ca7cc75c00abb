"""Exception hierarchy shared by the library and the CLI.

Every error carries a short stable ``code`` that the CLI prints as a
one-line ``error[<code>]: <message>`` prefix on stderr.
"""

from __future__ import annotations


class AttnMosaicError(Exception):
    """Base class for all domain errors."""

    code = "error"


class NoTilesError(AttnMosaicError):
    """Tile directory is empty or contains no decodable image."""

    code = "no-tiles"


class GridTooSmallError(AttnMosaicError):
    """Target cannot fit even a single tile at the requested size."""

    code = "grid-too-small"


class GridConstraintError(AttnMosaicError):
    """Explicit grid dimensions exceed the target image."""

    code = "grid-constraint"


class BundleIOError(AttnMosaicError):
    """Bundle emission failed (unwritable directory, missing source file)."""

    code = "io"


class KnowledgeKeyError(AttnMosaicError):
    """Knowledge entry references a tile id that does not exist."""

    code = "unknown-tile"


class EmptyPromptError(AttnMosaicError):
    """Prefill called with a zero-length prompt."""

    code = "empty-prompt"


class DecoderStateError(AttnMosaicError):
    """Decode step called before prefill."""

    code = "decoder-state"


class CurveDomainError(AttnMosaicError):
    """Curve evaluated at a pole or with a non-positive radicand."""

    code = "curve-domain"


class FitFailedError(AttnMosaicError):
    """Nonlinear fit could not make progress; carries the last iterate."""

    code = "fit-failed"

    def __init__(self, message: str, params=None, residual: float | None = None):
        super().__init__(message)
        self.params = params
        self.residual = residual

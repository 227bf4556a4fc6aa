"""webstamp: trusted timestamping and change tracking for web content."""

__version__ = "0.1.0"

from .stampcore import (  # noqa: F401
    Hash256,
    StampCore,
    VerificationReport,
    derive_stamp_hash,
    extend_chain,
    hash_content,
    issue_stamp,
    verify_stamp,
)

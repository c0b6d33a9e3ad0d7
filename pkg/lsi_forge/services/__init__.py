"""Service layer package."""

from .verification_service import VerificationService, get_verification_service

__all__ = ["VerificationService", "get_verification_service"]

"""Stack instantiation: validate, plan, and run a configured deployment."""

from obstack.cli.config import (
    COMPONENTS,
    StackConfig,
    ValidationReport,
    load_config,
    validate_config,
)
from obstack.cli.plan import ValidationFailed, merge_components, startup_order

__all__ = [
    "COMPONENTS",
    "StackConfig",
    "ValidationFailed",
    "ValidationReport",
    "load_config",
    "merge_components",
    "startup_order",
    "validate_config",
]

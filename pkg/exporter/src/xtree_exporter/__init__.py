"""scikit-learn tree models -> the portable xtree JSON schema."""

from .export import ExportError, ExportOptions, export_instances, export_model

__all__ = ["ExportError", "ExportOptions", "export_instances", "export_model"]
__version__ = "0.1.0"

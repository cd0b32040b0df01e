"""Error types for the exporter library and CLI."""


class ExportError(Exception):
    """Base class for exporter failures."""


class ExportConfigError(ExportError):
    """Bad task, backbone id, device, or root path."""


class ExportDataError(ExportError):
    """The image tree yielded no usable samples, or the output broke its contract."""

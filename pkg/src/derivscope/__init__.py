"""derivscope: parseability and rule-usage analysis against a precision grammar."""

__version__ = "0.1.0"

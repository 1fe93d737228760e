"""Critical points at infinity and degree counting for the Nirenberg problem on S^n."""

__version__ = "0.1.0"

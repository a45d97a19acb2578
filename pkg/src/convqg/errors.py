"""Common exception base for the package.

Every domain error raised by convqg derives from ConvqgError so callers
(and the CLI exit-code mapping) can distinguish our failures from bugs.
"""


class ConvqgError(Exception):
    pass

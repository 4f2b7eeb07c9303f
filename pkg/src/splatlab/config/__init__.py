"""Application-level configuration helpers.

"""


from .logging import setup_logging

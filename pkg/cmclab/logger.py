"""cmclab logger."""

import logging

logger = logging.getLogger("cmclab")

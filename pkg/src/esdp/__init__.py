"""esdp: mine sequential API usage patterns from source corpora and answer
developer queries with ranked recommendations and code skeletons."""

__version__ = "0.1.0"

from .abstract import Item, Transaction, render_item  # noqa: F401
from .corpus import Manifest, SourceDescriptor, SourceUnit, TermList  # noqa: F401
from .mine import MiningConfig, SequencePattern  # noqa: F401
from .store import MinedRepository  # noqa: F401

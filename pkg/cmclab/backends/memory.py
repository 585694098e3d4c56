"""cmclab In-Memory backend."""

import attr

from cmclab.backends.base import BaseBackend


@attr.s
class MemoryBackend(BaseBackend):
    """InMemory Backend Adapter

    Examples:
        >>> with MemoryBackend(mesh=mesh) as src:
                src.mesh.vertex_count
    """

    # We put `input` outside the init method
    input: str = attr.ib(init=False, default=":memory:")

    _backend_name = "MEM"

    def write(self, overwrite: bool = True):
        """Write the mesh."""
        pass

    def _read(self):
        pass

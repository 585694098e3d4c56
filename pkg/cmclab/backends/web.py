"""cmclab HTTP backend.

This file is named web.py instead of http.py because http is a Python standard
lib module
"""

from typing import Optional

import attr
import httpx
from cachetools import TTLCache, cached
from cachetools.keys import hashkey

from cmclab.backends.base import BaseBackend
from cmclab.errors import _HTTP_EXCEPTIONS, MeshIOError
from cmclab.mesh import SurfaceMesh
from cmclab.settings import cache_config


@attr.s
class HttpBackend(BaseBackend):
    """Http/Https Backend Adapter"""

    # Read-Only backend, the mesh is never passed in.
    mesh: Optional[SurfaceMesh] = attr.ib(init=False, default=None)

    _backend_name = "HTTP"

    @cached(  # type: ignore
        TTLCache(maxsize=cache_config.maxsize, ttl=cache_config.ttl),
        key=lambda self: hashkey(self.input),
    )
    def _read(self) -> SurfaceMesh:  # type: ignore
        """Get the mesh."""
        try:
            r = httpx.get(self.input, follow_redirects=True)
            r.raise_for_status()
        except httpx.HTTPStatusError as e:
            # post-flight errors
            status_code = e.response.status_code
            exc = _HTTP_EXCEPTIONS.get(status_code, MeshIOError)
            raise exc(f"{self.input}: HTTP {status_code}") from e
        except httpx.RequestError as e:
            # pre-flight errors
            raise MeshIOError(f"{self.input}: {e}") from e

        return self._decode(r.content)

    def write(self, overwrite: bool = True):
        """Write the mesh."""
        raise NotImplementedError

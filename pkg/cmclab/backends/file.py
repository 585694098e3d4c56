"""cmclab File backend."""

import pathlib

import attr

from cmclab.backends.base import BaseBackend
from cmclab.errors import _FILE_EXCEPTIONS, MeshExistsError, MeshIOError
from cmclab.mesh import SurfaceMesh


@attr.s
class FileBackend(BaseBackend):
    """Local File Backend Adapter"""

    _backend_name = "File"

    def write(self, overwrite: bool = False):
        """Write the mesh to a file."""
        path = pathlib.Path(self.input)
        if not overwrite and path.exists():
            raise MeshExistsError("Mesh file already exist, use `overwrite=True`.")

        body = self._encode()
        try:
            with open(path, "wb") as f:
                f.write(body)
        except OSError as e:
            exc = _FILE_EXCEPTIONS.get(type(e), MeshIOError)
            raise exc(str(e)) from e

    def _read(self) -> SurfaceMesh:
        """Get the mesh."""
        try:
            with open(self.input, "rb") as f:
                body = f.read()
        except OSError as e:
            exc = _FILE_EXCEPTIONS.get(type(e), MeshIOError)
            raise exc(str(e)) from e

        return self._decode(body)

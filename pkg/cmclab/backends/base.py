"""cmclab.backends.base: base Backend class."""

import abc
import zlib
from typing import Optional

import attr

from cmclab.backends.utils import _compress_gz, _decompress_gz
from cmclab.errors import MeshIOError, ParseError
from cmclab.formats import MeshFormat, infer_format, parse_mesh, serialize_mesh
from cmclab.logger import logger
from cmclab.mesh import SurfaceMesh, check_mesh


def _convert_format(value) -> Optional[MeshFormat]:
    if value is not None:
        return MeshFormat(value)


@attr.s
class BaseBackend(metaclass=abc.ABCMeta):
    """Base Class for cmclab mesh storage.

    Attributes:
        input (str): mesh path or URL.
        mesh (SurfaceMesh, optional): mesh to write. Read from `input` when not given.
        format (MeshFormat, optional): file format. Inferred from the `input` suffix.
        check (bool): run the closed/oriented/non-degenerate checks on read meshes. Defaults to `True`.

    """

    input: str = attr.ib()
    mesh: Optional[SurfaceMesh] = attr.ib(default=None)
    format: Optional[MeshFormat] = attr.ib(default=None, converter=_convert_format)
    check: bool = attr.ib(default=True)

    _backend_name: str
    _file_byte_size: Optional[int] = 0

    def __attrs_post_init__(self):
        """Post Init: if not passed in init, try to read from self.input."""
        if self.format is None and self.input != ":memory:":
            self.format = infer_format(self.input)

        if self.mesh is None:
            logger.debug(f"reading mesh from {self._backend_name} backend: {self.input}")
            self.mesh = self._read()
            if self.mesh is None:
                raise MeshIOError(f"no mesh available from '{self.input}'")

            if self.check:
                check_mesh(self.mesh)

    @abc.abstractmethod
    def _read(self) -> Optional[SurfaceMesh]:
        """Fetch the mesh."""

    @abc.abstractmethod
    def write(self, overwrite: bool = False):
        """Store the mesh."""

    @property
    def compressed(self) -> bool:
        """Gzip-compressed payload."""
        return self.input.lower().endswith(".gz")

    def _decode(self, body: bytes) -> SurfaceMesh:
        self._file_byte_size = len(body)
        try:
            text = _decompress_gz(body) if self.compressed else body.decode("utf-8")
        except (UnicodeDecodeError, OSError, ValueError, zlib.error) as e:
            raise ParseError(f"cannot decode '{self.input}': {e}") from e

        return parse_mesh(text, self.format)

    def _encode(self) -> bytes:
        text = serialize_mesh(self.mesh, self.format)
        return _compress_gz(text) if self.compressed else text.encode("utf-8")

    def __enter__(self):
        """Support using with Context Managers."""
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        """Support using with Context Managers."""
        pass

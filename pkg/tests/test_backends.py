"""Test backends."""

import os
from unittest.mock import patch

import httpx as _httpx
import numpy
import pytest
from httpx import HTTPStatusError, RequestError

from cmclab.backends import MeshBackend
from cmclab.backends.file import FileBackend
from cmclab.backends.memory import MemoryBackend
from cmclab.backends.utils import _compress_gz
from cmclab.backends.web import HttpBackend
from cmclab.errors import (
    DimensionError,
    MeshExistsError,
    MeshIOError,
    MeshNotFoundError,
    ParseError,
    TopologyError,
)
from cmclab.formats import MeshFormat, serialize_obj
from cmclab.generators import clifford_torus, unit_icosphere
from cmclab.storage import load_mesh, save_mesh

tetrahedron = os.path.join(os.path.dirname(__file__), "fixtures", "tetrahedron.obj")
tetrahedron4d = os.path.join(os.path.dirname(__file__), "fixtures", "tetrahedron4d.ndmesh")
nonmanifold = os.path.join(os.path.dirname(__file__), "fixtures", "nonmanifold.obj")

with open(tetrahedron, "rb") as f:
    tetrahedron_content = f.read()


def test_file_backend():
    """Test File backend."""
    with MeshBackend(tetrahedron) as src:
        assert src._backend_name == "File"
        assert isinstance(src, FileBackend)
        assert src.format == MeshFormat.OBJ
        assert not src.compressed
        assert src.mesh.vertex_count == 4
        assert src._file_byte_size == len(tetrahedron_content)

    with MeshBackend(f"file://{tetrahedron4d}") as src:
        assert isinstance(src, FileBackend)
        assert src.format == MeshFormat.NDMESH
        assert src.mesh.ambient_dim == 4

    with pytest.raises(MeshNotFoundError):
        with MeshBackend("afilethatdoesnotexists.obj"):
            pass

    with pytest.raises(TopologyError):
        with MeshBackend(nonmanifold):
            pass

    with MeshBackend(nonmanifold, check=False) as src:
        assert src.mesh.triangle_count == 3

    with pytest.raises(ValueError):
        MeshBackend("s3://bucket/mesh.obj")


def test_file_backend_write(tmp_path):
    """Write and read back, plain and gzip."""
    mesh = unit_icosphere(1)

    path = str(tmp_path / "sphere.obj")
    with MeshBackend(path, mesh=mesh) as dst:
        dst.write()

    with pytest.raises(MeshExistsError):
        with MeshBackend(path, mesh=mesh) as dst:
            dst.write()

    with MeshBackend(path, mesh=mesh) as dst:
        dst.write(overwrite=True)

    with MeshBackend(path) as src:
        numpy.testing.assert_array_equal(src.mesh.vertices, mesh.vertices)

    path = str(tmp_path / "torus.ndmesh.gz")
    torus = clifford_torus(12, 12)
    with MeshBackend(path, mesh=torus) as dst:
        assert dst.compressed
        dst.write()

    with open(path, "rb") as f:
        assert f.read(2) == b"\x1f\x8b"

    with MeshBackend(path) as src:
        numpy.testing.assert_array_equal(src.mesh.vertices, torus.vertices)
        numpy.testing.assert_array_equal(src.mesh.triangles, torus.triangles)

    with pytest.raises(MeshIOError):
        with MeshBackend(str(tmp_path / "missing" / "sphere.obj"), mesh=mesh) as dst:
            dst.write()


def test_file_backend_format(tmp_path):
    """An explicit format overrides the suffix."""
    path = str(tmp_path / "sphere.txt")
    mesh = unit_icosphere(0)
    with MeshBackend(path, mesh=mesh, format="ndmesh") as dst:
        dst.write()

    with open(path, "r") as f:
        assert f.readline().startswith("ndmesh 3 12 20")

    with pytest.raises(ParseError):
        MeshBackend(path)

    assert MeshBackend(path, format=MeshFormat.NDMESH).mesh.vertex_count == 12


def test_file_backend_corrupt_gzip(tmp_path):
    """Undecodable payloads are parse errors."""
    path = tmp_path / "broken.obj.gz"
    path.write_bytes(b"not a gzip stream")
    with pytest.raises(ParseError):
        MeshBackend(str(path))


def test_memory_backend():
    """Test Memory backend."""
    mesh = unit_icosphere(0)
    with MemoryBackend(mesh=mesh) as src:
        assert src._backend_name == "MEM"
        assert src.input == ":memory:"
        assert src.mesh is mesh
        src.write()

    with MeshBackend(":memory:", mesh=mesh) as src:
        assert isinstance(src, MemoryBackend)

    with pytest.raises(MeshIOError):
        MemoryBackend()


class MockResponse:
    def __init__(self, data):
        self.data = data

    def raise_for_status(self):
        pass

    @property
    def content(self):
        return self.data


@patch("cmclab.backends.web.httpx")
def test_http_backend(httpx):
    """Test HTTP backend."""
    httpx.get.return_value = MockResponse(tetrahedron_content)
    httpx.HTTPStatusError = HTTPStatusError
    httpx.RequestError = RequestError

    with MeshBackend("https://somewhere.com/tetrahedron.obj") as src:
        assert src._backend_name == "HTTP"
        assert isinstance(src, HttpBackend)
        assert src.mesh.vertex_count == 4
    httpx.get.assert_called_once()
    httpx.reset_mock()

    httpx.get.return_value = MockResponse(tetrahedron_content)
    with pytest.raises(NotImplementedError):
        with MeshBackend("https://somewhere.com/tetrahedron-write.obj") as src:
            src.write()
    httpx.get.assert_called_once()
    httpx.reset_mock()

    httpx.get.return_value = MockResponse(_compress_gz(serialize_obj(unit_icosphere(1))))
    with MeshBackend("https://somewhere.com/sphere.obj.gz") as src:
        assert src.mesh.vertex_count == 42


@patch("cmclab.backends.web.httpx")
def test_http_backend_errors(httpx):
    """HTTP errors map to mesh errors."""
    httpx.HTTPStatusError = HTTPStatusError
    httpx.RequestError = RequestError

    request = _httpx.Request("GET", "https://somewhere.com/missing.obj")

    class NotFound(MockResponse):
        def raise_for_status(self):
            raise HTTPStatusError(
                "not found",
                request=request,
                response=_httpx.Response(404, request=request),
            )

    httpx.get.return_value = NotFound(b"")
    with pytest.raises(MeshNotFoundError):
        MeshBackend("https://somewhere.com/missing.obj")

    class Forbidden(MockResponse):
        def raise_for_status(self):
            raise HTTPStatusError(
                "forbidden",
                request=request,
                response=_httpx.Response(403, request=request),
            )

    httpx.get.return_value = Forbidden(b"")
    with pytest.raises(MeshIOError):
        MeshBackend("https://somewhere.com/forbidden.obj")

    httpx.get.side_effect = RequestError("connection refused", request=request)
    with pytest.raises(MeshIOError):
        MeshBackend("https://somewhere.com/unreachable.obj")


def test_storage(tmp_path):
    """load_mesh / save_mesh."""
    mesh = load_mesh(tetrahedron)
    assert mesh.triangle_count == 4

    path = tmp_path / "tetra.ndmesh"
    save_mesh(mesh, path)
    save_mesh(mesh, path)
    again = load_mesh(path)
    numpy.testing.assert_array_equal(again.vertices, mesh.vertices)

    with pytest.raises(TopologyError):
        load_mesh(nonmanifold)


def test_storage_obj_dimension(tmp_path):
    """OBJ is only for surfaces in R³."""
    with pytest.raises(DimensionError):
        load_mesh(tetrahedron4d, format=MeshFormat.OBJ)

    path = tmp_path / "flat.obj"
    path.write_text("v 0 0\nv 1 0\nv 0 1\nf 1 2 3\n")
    with pytest.raises(DimensionError):
        load_mesh(path)

    path = tmp_path / "tall.obj"
    path.write_text("v 0 0 0 0\nv 1 0 0 0\nv 0 1 0 0\nf 1 2 3\n")
    with pytest.raises(DimensionError):
        load_mesh(path)

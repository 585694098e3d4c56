"""cmclab.storage: load and save meshes."""

import pathlib
from typing import Optional, Union

from cmclab.backends import MeshBackend
from cmclab.formats import MeshFormat
from cmclab.mesh import SurfaceMesh


def load_mesh(
    path: Union[str, pathlib.Path], format: Optional[MeshFormat] = None
) -> SurfaceMesh:
    """Read a mesh and check that it is a closed, oriented, non-degenerate surface.

    Raises:
        ParseError: malformed line (the error carries the line number).
        TopologyError: open boundary, non-manifold edge or inconsistent orientation.
        DimensionError: OBJ input whose vertices do not have 3 coordinates.
        MeshNotFoundError: missing file.

    """
    with MeshBackend(str(path), format=format) as src:
        return src.mesh


def save_mesh(
    mesh: SurfaceMesh,
    path: Union[str, pathlib.Path],
    format: Optional[MeshFormat] = None,
) -> None:
    """Write a mesh, replacing any existing file."""
    with MeshBackend(str(path), mesh=mesh, format=format) as dst:
        dst.write(overwrite=True)

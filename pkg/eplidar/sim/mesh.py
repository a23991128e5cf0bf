from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import trimesh

_DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class Material:
    name: str
    reflectivity: float

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"Reflectivity must lie in [0, 1], got {self.reflectivity}")


ASPHALT = Material("asphalt", 0.25)
CLOTHING = Material("clothing", 0.5)
CAR_PAINT = Material("car_paint", 0.8)
METAL = Material("metal", 0.6)
WOOD = Material("wood", 0.35)


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (v, 3)
    triangles: np.ndarray  # (t, 3) int
    material: Material
    _bounds: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if tris.size and (tris.min() < 0 or tris.max() >= verts.shape[0]):
            raise ValueError("Triangle vertex index out of range")
        if tris.size:
            e1 = verts[tris[:, 1]] - verts[tris[:, 0]]
            e2 = verts[tris[:, 2]] - verts[tris[:, 0]]
            area = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
            tris = tris[area > _DEGENERATE_AREA]
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        bounds = np.stack([verts.min(axis=0), verts.max(axis=0)]) if verts.shape[0] else np.zeros((2, 3))
        object.__setattr__(self, "_bounds", bounds)

    @property
    def bounds(self) -> np.ndarray:
        """(2, 3) axis-aligned min/max corners."""
        return self._bounds

    @property
    def corners(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        t = self.triangles
        return self.vertices[t[:, 0]], self.vertices[t[:, 1]], self.vertices[t[:, 2]]

    def transformed(self, matrix: np.ndarray) -> "TriangleMesh":
        """Apply a 4x4 homogeneous transform."""
        verts = trimesh.transform_points(self.vertices, matrix)
        return TriangleMesh(verts, self.triangles, self.material)

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh, material: Material) -> "TriangleMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces), material)


def pose_matrix(x: float, y: float, z: float, heading: float) -> np.ndarray:
    m = trimesh.transformations.rotation_matrix(heading, [0.0, 0.0, 1.0])
    m[:3, 3] = [x, y, z]
    return m


def box_mesh(extents: Sequence[float], material: Material, center=(0.0, 0.0, 0.0), heading: float = 0.0) -> TriangleMesh:
    mesh = trimesh.creation.box(extents=np.asarray(extents, dtype=np.float64))
    return TriangleMesh.from_trimesh(mesh, material).transformed(pose_matrix(*center, heading))


def capsule_mesh(start, end, radius: float, material: Material, count: Sequence[int] = (8, 8)) -> TriangleMesh:
    """Capsule whose axis runs from ``start`` to ``end``."""
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    axis = end - start
    length = float(np.linalg.norm(axis))
    mesh = trimesh.creation.capsule(height=max(length, 1e-6), radius=radius, count=list(count))
    verts = np.array(mesh.vertices, dtype=np.float64)
    # recentre on the origin along z regardless of the library's placement convention
    verts[:, 2] -= 0.5 * (verts[:, 2].min() + verts[:, 2].max())
    align = np.eye(4)
    if length > 1e-9:
        align = trimesh.geometry.align_vectors([0.0, 0.0, 1.0], axis / length)
    align[:3, 3] = 0.5 * (start + end)
    return TriangleMesh(trimesh.transform_points(verts, align), np.asarray(mesh.faces), material)


def icosphere_mesh(radius: float, material: Material, subdivisions: int = 4, center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    mesh = trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius)
    verts = np.asarray(mesh.vertices, dtype=np.float64) + np.asarray(center, dtype=np.float64)
    return TriangleMesh(verts, np.asarray(mesh.faces), material)


def ground_plane(half_size: float = 80.0, material: Material = ASPHALT, z: float = 0.0) -> TriangleMesh:
    s = float(half_size)
    verts = np.array([[-s, -s, z], [s, -s, z], [s, s, z], [-s, s, z]])
    return TriangleMesh(verts, np.array([[0, 1, 2], [0, 2, 3]]), material)

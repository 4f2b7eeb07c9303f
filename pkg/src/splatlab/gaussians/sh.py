"""Real spherical harmonics up to degree 2, with 3DGS color conventions.

"""

from __future__ import annotations

import numpy as np

from ..core.errors import ContractViolation
from ..diffcore import Tensor, as_tensor
from ..diffcore import functional as F


__all__ = [
    "eval_sh",
    "sh_basis",
    "coefficient_count",
    "MAX_DEGREE",
    "SH_C0",
    "SH_C1",
    "SH_C2",
]


MAX_DEGREE = 2

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (
    1.0925484305920792,
    -1.0925484305920792,
    0.31539156525252005,
    -1.0925484305920792,
    0.5462742152960396,
)


def coefficient_count(degree: int) -> int:
    if degree not in range(MAX_DEGREE + 1):
        raise ContractViolation(
            f"'degree' must be in 0..{MAX_DEGREE}; got {degree!r}"
        )
    return (degree + 1) ** 2


def sh_basis(directions, degree: int) -> list[Tensor]:
    """The basis functions evaluated at (n, 3) unit directions.

    Returns one (n,) tensor per coefficient, in the usual band order.
    """
    coefficient_count(degree)
    d = as_tensor(directions)
    ones = np.ones(d.shape[0])
    basis: list = [as_tensor(SH_C0 * ones)]
    if degree >= 1:
        x, y, z = d[:, 0], d[:, 1], d[:, 2]
        basis += [-SH_C1 * y, SH_C1 * z, -SH_C1 * x]
        if degree >= 2:
            xx, yy, zz = x * x, y * y, z * z
            basis += [
                SH_C2[0] * (x * y),
                SH_C2[1] * (y * z),
                SH_C2[2] * (2.0 * zz - xx - yy),
                SH_C2[3] * (x * z),
                SH_C2[4] * (xx - yy),
            ]
    return basis


def eval_sh(sh, directions, degree: int, check_norm: bool = True) -> Tensor:
    """Evaluates view-dependent colors.

    Parameters
    ----------
    sh : Tensor
        (n, (degree + 1) ** 2, 3) coefficients.
    directions : Tensor
        (n, 3) unit view directions (from the camera to the Gaussian).
    degree : int
    check_norm : bool, optional
        Whether to validate that every direction has unit length.

    Returns
    -------
    Tensor
        (n, 3) colors ``max(0, sum_k Y_k(d) c_k + 0.5)``.
    """
    sh, directions = as_tensor(sh), as_tensor(directions)
    count = coefficient_count(degree)
    n = directions.shape[0]
    if sh.shape != (n, count, 3):
        raise ContractViolation(
            f"'sh' must have shape {(n, count, 3)}; got {sh.shape}"
        )
    if check_norm:
        norms = np.linalg.norm(directions.values, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ContractViolation("'directions' must have unit length")
    basis = F.stack(sh_basis(directions, degree), axis=1)
    rgb = F.sum(F.reshape(basis, (n, count, 1)) * sh, axis=1)
    return F.relu(rgb + 0.5)

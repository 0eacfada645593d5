import logging
from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import ConfigError, ConvergenceError

logger = logging.getLogger(__name__)

RATIO = 0.5
STAGE_FACTOR = 20
CERTIFICATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BPCertificate:
    """Post-hoc verification of the perturbed-maximum conclusions."""
    weights_ok: bool
    limit_ok: bool
    sup_ok: bool
    anchor_ok: bool
    near_max_ok: bool
    perturbed_max_ok: bool

    @property
    def passed(self) -> bool:
        return all((self.weights_ok, self.limit_ok, self.sup_ok, self.anchor_ok,
                    self.near_max_ok, self.perturbed_max_ok))


@dataclass(frozen=True, eq=False)
class BPResult:
    """
    Output of the perturbed-maximum construction on a finite space.

    Attributes:
        y_eps (int): Index of the perturbed maximiser.
        centers (tuple): Indices y_1, y_2, ... of the penalty centres.
        weights (tuple): beta_k for each centre; the last entry is the tail
            weight carried by y_eps, so the weights sum to 1.
        delta (np.ndarray): Delta(y) = sum_k beta_k d(y, y_k)^2 at every point.
        eps (float): The tolerance.
        certificate (BPCertificate): Checked conclusions.
    """
    y_eps: int
    centers: tuple
    weights: tuple
    delta: np.ndarray
    eps: float
    certificate: BPCertificate

    def Delta(self, y: int) -> float:
        return float(self.delta[y])


def borwein_preiss(space, F, eps: float, y0: int) -> BPResult:
    """
    Greedy perturbed-maximum iteration on a finite metric space.

    Stage k picks the first maximiser of F - sqrt(eps) * sum_{j<=k} beta_j d(., y_j)^2
    with beta_j = (1 - q) q^(j-1), q = 1/2. The iteration stops when the
    maximiser equals the last centre. A maximiser farther than eps^(1/4)
    from y0 is not taken as a centre; y0 is repeated instead, which
    tightens the penalty around y0. The tail weight q^m is put on the final
    point so that the weights sum to one.

    Args:
        space: FiniteMetricSpace or ProductMetricSpace.
        F: Values at every point.
        eps (float): Tolerance in (0, inf).
        y0 (int): Starting point with F(y0) >= max F - eps.

    Returns:
        BPResult: The construction and its certificate.

    Raises:
        ConvergenceError: If the iteration does not stop within 20 |points| stages.
    """
    F = np.asarray(F, dtype=float)
    n = len(space)
    if F.shape != (n,) or not np.all(np.isfinite(F)):
        raise ConfigError(f"F must be a finite vector with one value per point ({n}).")
    if not eps > 0:
        raise ConfigError(f"eps must be positive, got {eps}.")
    if F[y0] < F.max() - eps:
        raise ConfigError(f"Starting point {y0} is not eps-maximal: F(y0)={F[y0]}, max F={F.max()}.")

    root = np.sqrt(eps)
    radius = eps ** 0.25
    from_y0 = space.distances_from(y0)
    centers, weights = [y0], [1.0 - RATIO]
    penalty = weights[0] * from_y0 ** 2
    for _ in range(STAGE_FACTOR * n):
        candidate = int(np.argmax(F - root * penalty))
        if candidate == centers[-1]:
            break
        nxt = y0 if from_y0[candidate] > radius else candidate
        weight = (1.0 - RATIO) * RATIO ** len(centers)
        centers.append(nxt)
        weights.append(weight)
        penalty = penalty + weight * space.distances_from(nxt) ** 2
    else:
        raise ConvergenceError(f"Perturbed-maximum iteration did not stop within {STAGE_FACTOR * n} stages.")

    y_eps = centers[-1]
    tail = RATIO ** len(centers)
    delta = penalty + tail * space.distances_from(y_eps) ** 2
    all_weights = tuple(weights) + (tail,)

    to_eps = space.distances_from(y_eps)
    perturbed = F - root * delta
    certificate = BPCertificate(
        weights_ok=all(b >= 0 for b in all_weights) and abs(sum(all_weights) - 1.0) <= CERTIFICATE_TOLERANCE,
        limit_ok=centers[-1] == y_eps and to_eps[centers[-1]] <= CERTIFICATE_TOLERANCE,
        sup_ok=max(to_eps[c] for c in centers) <= radius + CERTIFICATE_TOLERANCE,
        anchor_ok=to_eps[y0] <= radius + CERTIFICATE_TOLERANCE,
        near_max_ok=F[y_eps] >= F.max() - eps - CERTIFICATE_TOLERANCE,
        perturbed_max_ok=perturbed[y_eps] >= perturbed.max() - CERTIFICATE_TOLERANCE,
    )
    if not certificate.passed:
        logger.warning(f"Perturbed-maximum certificate failed: {certificate}")
    return BPResult(y_eps=y_eps, centers=tuple(centers), weights=all_weights, delta=delta,
                    eps=eps, certificate=certificate)

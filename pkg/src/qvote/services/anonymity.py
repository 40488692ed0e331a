"""
Ballot anonymity audits.

A coalition of colluding voters sees its own mask rows, every share sent to
its members, and every masked ballot on the chain. Anonymity holds when the
distribution of that view depends on the honest votes only through their sum.

The exhaustive audit enumerates mask matrices for n <= 4. When the full matrix
count exceeds the literal limit it fixes the colluder rows to zero and
enumerates honest rows only: colluder rows are part of the view and enter the
honest ballots as a known shift, so conditioning on them does not change
whether honest vote vectors are distinguishable.
"""

import itertools
from collections import Counter
from collections.abc import Callable, Collection, Sequence
from typing import Literal

import numpy as np
from loguru import logger
from scipy.stats import chi2_contingency

from qvote.config import settings
from qvote.domain.exceptions import RefuseExhaustiveAudit
from qvote.models.report import AuditVerdict
from qvote.services.masking import Modulus, iter_mask_rows

MAX_EXHAUSTIVE_VOTERS = 4


def _check_colluders(n: int, colluders: Collection[int]) -> list[int]:
    members = sorted(set(colluders))
    if any(not 1 <= c <= n for c in members):
        raise ValueError(f"colluders {members} are not all in 1..{n}")
    return members


def _view_codes(
    matrices: np.ndarray, votes: Sequence[int], colluders: Sequence[int], m: int
) -> np.ndarray:
    """
    Encode the coalition view of every matrix as one integer.

    Args:
        matrices: (N, n, n) mask matrices, row = sender, column = receiver
        votes: Full vote vector
        colluders: 1-based colluder indices
        m: Modulus value n+1

    Returns:
        (N,) int64 view codes
    """
    cols = [c - 1 for c in colluders]
    ballots = (np.asarray(votes) + matrices.sum(axis=1)) % m
    parts = [ballots]
    if cols:
        parts.append(matrices[:, cols, :].reshape(len(matrices), -1))
        parts.append(matrices[:, :, cols].reshape(len(matrices), -1))
    digits = np.concatenate(parts, axis=1).astype(np.int64)
    weights = m ** np.arange(digits.shape[1], dtype=np.int64)
    return digits @ weights


def _honest_vectors(n: int, colluders: Sequence[int]) -> list[list[int]]:
    honest = [i for i in range(1, n + 1) if i not in colluders]
    vectors = []
    for bits in itertools.product((0, 1), repeat=len(honest)):
        votes = [0] * n
        for i, bit in zip(honest, bits, strict=True):
            votes[i - 1] = bit
        vectors.append(votes)
    return vectors


def anonymity_audit(
    n: int, colluders: Collection[int] = (), literal_limit: int | None = None
) -> AuditVerdict:
    """
    Exhaustively check that the coalition view reveals only the honest sum.

    Args:
        n: Voter count (at most 4)
        colluders: 1-based indices of colluding voters (their votes fixed to 0)
        literal_limit: Largest matrix count enumerated literally
            (defaults to settings.audit_literal_limit)

    Returns:
        AuditVerdict

    Raises:
        RefuseExhaustiveAudit: If n > 4
    """
    if n > MAX_EXHAUSTIVE_VOTERS:
        raise RefuseExhaustiveAudit(
            f"exhaustive audit supports n <= {MAX_EXHAUSTIVE_VOTERS}, got {n}"
        )
    modulus = Modulus(n)
    members = _check_colluders(n, colluders)
    limit = literal_limit if literal_limit is not None else settings.audit_literal_limit

    if len(members) >= n - 1:
        return AuditVerdict(
            n=n,
            colluders=members,
            mode="exhaustive",
            passed=True,
            status="tally-determined",
            detail="last honest vote inferable from the sum",
        )

    m = modulus.value
    rows = list(iter_mask_rows(n))
    if m ** ((n - 1) * n) <= limit:
        mode: Literal["exhaustive", "factorized"] = "exhaustive"
        view_distribution, enumerated = _literal_views(n, rows, members)
    else:
        mode = "factorized"
        view_distribution, enumerated = _factorized_views(n, rows, members)
    logger.debug(f"Anonymity audit n={n} colluders={members}: {enumerated} {mode}")

    reference: dict[int, tuple[list[int], Counter]] = {}
    for votes in _honest_vectors(n, members):
        distribution = view_distribution(votes)
        total = sum(votes)
        if total not in reference:
            reference[total] = (votes, distribution)
            continue
        base_votes, base_distribution = reference[total]
        if distribution != base_distribution:
            return AuditVerdict(
                n=n,
                colluders=members,
                mode=mode,
                passed=False,
                status="fail",
                matrices_enumerated=enumerated,
                counterexample=[base_votes, votes],
            )

    return AuditVerdict(
        n=n,
        colluders=members,
        mode=mode,
        passed=True,
        status="pass",
        matrices_enumerated=enumerated,
    )


ViewDistribution = Callable[[Sequence[int]], Counter]


def _literal_views(
    n: int, rows: list[tuple[int, ...]], colluders: Sequence[int]
) -> tuple[ViewDistribution, int]:
    """Enumerate every mask matrix; views are integer-coded with numpy."""
    m = n + 1
    row_array = np.array(rows, dtype=np.int8)
    index = np.indices((len(rows),) * n, dtype=np.int32).reshape(n, -1).T
    matrices = np.stack([row_array[index[:, owner]] for owner in range(n)], axis=1)

    def distribution(votes: Sequence[int]) -> Counter:
        values, counts = np.unique(
            _view_codes(matrices, votes, colluders, m), return_counts=True
        )
        return Counter(dict(zip(values.tolist(), counts.tolist(), strict=True)))

    return distribution, len(matrices)


def _shifted(sums: Sequence[int], shift: Sequence[int], m: int) -> tuple[int, ...]:
    return tuple((s + v) % m for s, v in zip(sums, shift, strict=True))


def _factorized_views(
    n: int, rows: list[tuple[int, ...]], colluders: Sequence[int]
) -> tuple[ViewDistribution, int]:
    """
    Convolve honest rows one at a time with colluder rows fixed to zero.

    The view reduces to the shares each honest row sends to the coalition plus
    the honest column sums; colluder ballots follow from the former.
    """
    m = n + 1
    honest = [i for i in range(1, n + 1) if i not in colluders]
    parts = [
        (
            tuple(row[c - 1] for c in colluders),
            tuple(row[i - 1] for i in honest),
        )
        for row in rows
    ]
    base: Counter = Counter({((), (0,) * len(honest)): 1})
    for _ in honest:
        step: Counter = Counter()
        for (visible, sums), weight in base.items():
            for shown, hidden in parts:
                step[(visible + shown, _shifted(sums, hidden, m))] += weight
        base = step

    def distribution(votes: Sequence[int]) -> Counter:
        shift = [votes[i - 1] for i in honest]
        return Counter(
            {
                (visible, _shifted(sums, shift, m)): w
                for (visible, sums), w in base.items()
            }
        )

    return distribution, len(rows) ** len(honest)


def _sample_matrices(n: int, samples: int, rng: np.random.Generator) -> np.ndarray:
    m = n + 1
    free = rng.integers(0, m, size=(samples, n, n - 1))
    last = (-free.sum(axis=2, keepdims=True)) % m
    return np.concatenate([free, last], axis=2)


def sampled_anonymity_audit(
    n: int,
    colluders: Collection[int] = (),
    samples: int | None = None,
    seed: int = 0,
    alpha: float = 0.01,
) -> AuditVerdict:
    """
    Statistical anonymity check for elections too large to enumerate.

    Compares two honest vote vectors with the same sum (first vs last honest
    voter agreeing). For each honest voter, the masked ballot minus the shares
    the coalition knows is tested for homogeneity across the two vectors with a
    chi-square test, Bonferroni-corrected over voters.

    Args:
        n: Voter count
        colluders: 1-based colluder indices
        samples: Samples per vote vector (defaults to settings)
        seed: Sampling seed
        alpha: Family-wise significance level

    Returns:
        AuditVerdict with mode "sampled"
    """
    modulus = Modulus(n)
    members = _check_colluders(n, colluders)
    honest = [i for i in range(1, n + 1) if i not in members]
    if len(honest) <= 1:
        return AuditVerdict(
            n=n,
            colluders=members,
            mode="sampled",
            passed=True,
            status="tally-determined",
            detail="last honest vote inferable from the sum",
        )
    samples = samples or settings.sampled_audit_samples
    m = modulus.value
    rng = np.random.default_rng([seed, n, *members])

    vectors = []
    for agreeing in (honest[0], honest[-1]):
        votes = [0] * n
        votes[agreeing - 1] = 1
        vectors.append(votes)

    cols = [c - 1 for c in members]
    hidden: list[np.ndarray] = []
    for votes in vectors:
        matrices = _sample_matrices(n, samples, rng)
        ballots = (np.asarray(votes) + matrices.sum(axis=1)) % m
        known = matrices[:, cols, :].sum(axis=1) if cols else 0
        hidden.append((ballots - known) % m)

    threshold = alpha / len(honest)
    for voter in honest:
        table = np.stack(
            [np.bincount(h[:, voter - 1], minlength=m) for h in hidden]
        )
        table = table[:, table.sum(axis=0) > 0]
        if table.shape[1] < 2:
            continue
        _, p_value, _, _ = chi2_contingency(table)
        if p_value < threshold:
            return AuditVerdict(
                n=n,
                colluders=members,
                mode="sampled",
                passed=False,
                status="fail",
                matrices_enumerated=samples,
                counterexample=vectors,
                detail=f"voter {voter}: p={p_value:.3g} < {threshold:.3g}",
            )
    return AuditVerdict(
        n=n,
        colluders=members,
        mode="sampled",
        passed=True,
        status="pass",
        matrices_enumerated=samples,
    )

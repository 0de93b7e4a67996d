"""Candidate generation: guided cone sampling over numerical and categorical
coordinates, a per-row feature budget, and two optimizers built on the same
primitive.

Feasibility is enforced by construction: immutable features are never drawn,
numerical steps are projected back into range, and categorical decoding is
restricted to admissible levels plus the no-op. Every batch reserves index 0
for the unedited baseline, which is what makes the select step monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .streams import TAG_EMBEDDING, TAG_EMBEDDING_ANCHOR, ProposalStreams, stream
from .tabular import CATEGORICAL, NUMERICAL, FeatureSchema

Edit = dict[int, np.ndarray]


@dataclass(frozen=True)
class ConeParams:
    """Cone half-angle, relative step bound, and decode temperature."""

    phi: float = math.pi / 4
    lambda_max: float = 0.1
    tau: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.phi <= math.pi):
            raise ValueError(f"phi must lie in [0, pi], got {self.phi}")
        if not (0.0 < self.lambda_max <= 1.0):
            raise ValueError(f"lambda_max must lie in (0, 1], got {self.lambda_max}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass(frozen=True)
class EmbeddingTables:
    """Fixed random level embeddings per categorical feature.

    ``tables[j]`` holds the ``|V_j| x r_j`` embedding matrix for feature
    column ``j``; ``anchors[j]`` is a fixed unit vector used to orient cone
    steps in embedding space; ``scales[j]`` is the mean pairwise distance
    between level embeddings, the unit for step magnitudes. Built once and
    kept constant; identical seeds rebuild identical tables.
    """

    tables: dict[int, np.ndarray] = field(repr=False)
    anchors: dict[int, np.ndarray] = field(repr=False)
    scales: dict[int, float] = field(repr=False)
    seed: int = 0

    def features(self) -> tuple[int, ...]:
        return tuple(sorted(self.tables))


def build_embeddings(schema: tuple[FeatureSchema, ...], seed: int) -> EmbeddingTables:
    """Embedding tables for every categorical feature in ``schema``.

    Entries are i.i.d. standard normal scaled by ``1/sqrt(r)``; the per-feature
    anchor is an independent normalized draw.
    """
    tables: dict[int, np.ndarray] = {}
    anchors: dict[int, np.ndarray] = {}
    scales: dict[int, float] = {}
    for j, feat in enumerate(schema):
        if feat.kind != CATEGORICAL:
            continue
        r = feat.embed_dim
        table = stream(seed, TAG_EMBEDDING, j).standard_normal((feat.n_levels, r)) / math.sqrt(r)
        table.setflags(write=False)
        tables[j] = table
        a = stream(seed, TAG_EMBEDDING_ANCHOR, j).standard_normal(r)
        norm = np.linalg.norm(a)
        a = a / norm if norm > 0 else np.ones(r) / math.sqrt(r)
        a.setflags(write=False)
        anchors[j] = a
        diffs = table[:, None, :] - table[None, :, :]
        dist = np.sqrt(np.sum(diffs * diffs, axis=2))
        iu = np.triu_indices(feat.n_levels, k=1)
        scales[j] = float(np.mean(dist[iu]))
    return EmbeddingTables(tables=tables, anchors=anchors, scales=scales, seed=seed)


def cone_direction(anchor: np.ndarray, phi: float, rng: np.random.Generator) -> np.ndarray:
    """Unit direction within angle ``phi`` of ``anchor``.

    Draws ``psi ~ Uniform[0, phi]`` and a uniform direction orthogonal to the
    anchor, returning ``cos(psi) * anchor + sin(psi) * v``. A zero anchor
    yields a uniform sphere direction. In one dimension the cone degenerates
    to a sign choice: the anchor's sign is kept while ``psi <= pi/2`` and
    flipped beyond.
    """
    anchor = np.asarray(anchor, dtype=float)
    m = anchor.size
    norm = np.linalg.norm(anchor)
    if norm <= 1e-12:
        return _uniform_unit(m, rng)
    unit = anchor / norm
    if phi == 0.0:
        return unit
    psi = rng.uniform(0.0, phi)
    if m == 1:
        return unit if psi <= math.pi / 2 else -unit
    v = _uniform_unit_orthogonal(unit, rng)
    return math.cos(psi) * unit + math.sin(psi) * v


def _uniform_unit(m: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(m)
    norm = np.linalg.norm(v)
    while norm == 0.0:
        v = rng.standard_normal(m)
        norm = np.linalg.norm(v)
    return v / norm


def _uniform_unit_orthogonal(unit: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.standard_normal(unit.size)
        v -= np.dot(v, unit) * unit
        norm = np.linalg.norm(v)
        if norm > 1e-12:
            return v / norm


def propose_numeric_row(
    row: np.ndarray,
    editable_numeric: np.ndarray,
    g_row: np.ndarray,
    cone: ConeParams,
    schema: tuple[FeatureSchema, ...],
    rng: np.random.Generator,
    per_feature_lambda: bool = False,
) -> np.ndarray:
    """One guided cone move over a row's editable numerical coordinates.

    A single direction is drawn in the editable-coordinate subspace around the
    negative guidance vector; each coordinate takes a range-scaled step and is
    projected back into its interval. By default one step size is shared
    across the row; ``per_feature_lambda`` draws one per coordinate.
    """
    row = np.asarray(row, dtype=float).copy()
    idx = np.asarray(editable_numeric, dtype=np.intp)
    if idx.size == 0:
        return row
    direction = cone_direction(-np.asarray(g_row, dtype=float)[idx], cone.phi, rng)
    if per_feature_lambda:
        lam = rng.uniform(0.0, cone.lambda_max, size=idx.size)
    else:
        lam = np.full(idx.size, rng.uniform(0.0, cone.lambda_max))
    for pos, j in enumerate(idx):
        lo, hi = schema[j].range
        row[j] = min(max(row[j] + lam[pos] * (hi - lo) * direction[pos], lo), hi)
    return row


def propose_categorical_row(
    row: np.ndarray,
    editable_cat: np.ndarray,
    g_row: np.ndarray,
    cone: ConeParams,
    tables: EmbeddingTables,
    schema: tuple[FeatureSchema, ...],
    rng: np.random.Generator,
) -> np.ndarray:
    """One guided embedding-space move per editable categorical coordinate.

    The current level's embedding takes a cone-biased step whose sign
    orientation comes from the guidance component on that column, then a level
    is sampled from admissible levels plus the no-op with probability
    proportional to ``exp(-||E[v] - z_target||^2 / tau)``.
    """
    row = np.asarray(row, dtype=float).copy()
    for j in np.asarray(editable_cat, dtype=np.intp):
        feat = schema[j]
        current = int(row[j])
        candidates = sorted(set(feat.admissible_indices()) | {current})
        if len(candidates) == 1:
            continue
        table = tables.tables[j]
        z = table[current]
        g_j = float(np.asarray(g_row, dtype=float)[j])
        if g_j > 0:
            anchor = -tables.anchors[j]
        elif g_j < 0:
            anchor = tables.anchors[j]
        else:
            anchor = np.zeros(table.shape[1])
        direction = cone_direction(anchor, cone.phi, rng)
        lam = rng.uniform(0.0, cone.lambda_max)
        z_target = z + lam * tables.scales[j] * direction
        diffs = table[candidates] - z_target
        logits = -np.sum(diffs * diffs, axis=1) / cone.tau
        logits -= logits.max()
        weights = np.exp(logits)
        probs = weights / weights.sum()
        row[j] = candidates[rng.choice(len(candidates), p=probs)]
    return row


@dataclass(frozen=True)
class CandidateBatch:
    """Sparse candidate edits; index 0 is always the unedited baseline.

    Each edit maps a row index to that row's full replacement vector.
    """

    edits: tuple[Edit, ...]

    @property
    def count(self) -> int:
        return len(self.edits)


def _actionable_features(schema: tuple[FeatureSchema, ...]) -> np.ndarray:
    return np.array([j for j, f in enumerate(schema) if not f.immutable], dtype=np.intp)


def _split_kinds(
    features: np.ndarray, schema: tuple[FeatureSchema, ...]
) -> tuple[np.ndarray, np.ndarray]:
    numeric = np.array([j for j in features if schema[j].kind == NUMERICAL], dtype=np.intp)
    cat = np.array([j for j in features if schema[j].kind == CATEGORICAL], dtype=np.intp)
    return numeric, cat


def _cone_edit_row(
    base_row: np.ndarray,
    features: np.ndarray,
    g_row: np.ndarray,
    cone: ConeParams,
    schema: tuple[FeatureSchema, ...],
    tables: EmbeddingTables,
    rng: np.random.Generator,
    per_feature_lambda: bool,
) -> np.ndarray:
    numeric, cat = _split_kinds(features, schema)
    row = propose_numeric_row(base_row, numeric, g_row, cone, schema, rng, per_feature_lambda)
    if cat.size:
        row = propose_categorical_row(row, cat, g_row, cone, tables, schema, rng)
    return row


def _fresh_row_edit(
    x: np.ndarray,
    row_index: int,
    g_row: np.ndarray,
    cone: ConeParams,
    budget: int,
    schema: tuple[FeatureSchema, ...],
    tables: EmbeddingTables,
    rng: np.random.Generator,
    actionable: np.ndarray,
    per_feature_lambda: bool,
) -> np.ndarray:
    take = min(budget, actionable.size)
    chosen = (
        actionable[rng.choice(actionable.size, size=take, replace=False)]
        if take
        else np.empty(0, dtype=np.intp)
    )
    return _cone_edit_row(
        x[row_index], chosen, g_row, cone, schema, tables, rng, per_feature_lambda
    )


def monte_carlo_propose(
    x: np.ndarray,
    editable_rows: np.ndarray,
    field_vectors: dict[int, np.ndarray],
    cone: ConeParams,
    budget: int,
    n_candidates: int,
    schema: tuple[FeatureSchema, ...],
    tables: EmbeddingTables,
    streams: ProposalStreams,
    per_feature_lambda: bool = False,
) -> CandidateBatch:
    """Independent guided proposals around the current iterate.

    Each of the ``n_candidates`` proposals edits every editable row: a uniform
    random subset of at most ``budget`` actionable features is drawn per row
    and routed to the numerical or categorical cone move.
    """
    if len(editable_rows) == 0 or n_candidates < 1:
        raise ValueError("need a nonempty editable set and at least one candidate")
    actionable = _actionable_features(schema)
    edits: list[Edit] = [{}]
    for m in range(1, n_candidates + 1):
        edit: Edit = {}
        for i in editable_rows:
            i = int(i)
            edit[i] = _fresh_row_edit(
                x, i, field_vectors[i], cone, budget, schema, tables,
                streams.row(m, i), actionable, per_feature_lambda,
            )
        edits.append(edit)
    return CandidateBatch(edits=tuple(edits))


def genetic_propose(
    x: np.ndarray,
    editable_rows: np.ndarray,
    field_vectors: dict[int, np.ndarray],
    cone: ConeParams,
    budget: int,
    n_candidates: int,
    schema: tuple[FeatureSchema, ...],
    tables: EmbeddingTables,
    streams: ProposalStreams,
    elite: tuple[Edit, ...],
    p_mut: float = 0.3,
    per_feature_lambda: bool = False,
) -> CandidateBatch:
    """One generation of recombination plus guided mutation on the editable set.

    Parents are the elite edits carried over from the previous iteration;
    without any, the generation falls back to fresh cone proposals. Crossover
    picks each editable row's edit from either parent with probability 1/2.
    Mutation re-runs the cone move on a row with probability ``p_mut``,
    confined to the features that row's edit already touches (or a fresh
    feature subset when it touches none), which keeps every edited row within
    the feature budget.
    """
    if n_candidates < 2:
        raise ValueError("the genetic optimizer needs at least 2 candidates per generation")
    if len(editable_rows) == 0:
        raise ValueError("need a nonempty editable set")
    actionable = _actionable_features(schema)
    row_set = [int(i) for i in editable_rows]
    edits: list[Edit] = [{}]
    parents = [
        {i: vec for i, vec in parent.items() if i in set(row_set)} for parent in elite
    ]
    for m in range(1, n_candidates + 1):
        edit: Edit = {}
        # One generator per (candidate, row), shared by the crossover pick and
        # any subsequent mutation draws on that row.
        row_rngs = {i: streams.row(m, i) for i in row_set}
        if not parents:
            for i in row_set:
                edit[i] = _fresh_row_edit(
                    x, i, field_vectors[i], cone, budget, schema, tables,
                    row_rngs[i], actionable, per_feature_lambda,
                )
        else:
            crng = streams.candidate(m)
            pa = parents[int(crng.integers(len(parents)))]
            pb = parents[int(crng.integers(len(parents)))]
            for i in row_set:
                rng = row_rngs[i]
                source = pa if rng.random() < 0.5 else pb
                if i in source:
                    # An elite edit from an earlier iteration may no longer fit
                    # the per-row feature budget once the base row has moved;
                    # stale genes are dropped rather than trimmed.
                    if np.sum(source[i] != x[i]) <= budget:
                        edit[i] = source[i].copy()
        if p_mut > 0.0:
            for i in row_set:
                rng = row_rngs[i]
                if rng.random() >= p_mut:
                    continue
                current = edit.get(i, x[i]).copy()
                changed = np.array(
                    [
                        j
                        for j in np.nonzero(current != x[i])[0]
                        if not schema[j].immutable
                    ],
                    dtype=np.intp,
                )
                if changed.size == 0:
                    take = min(budget, actionable.size)
                    changed = (
                        actionable[rng.choice(actionable.size, size=take, replace=False)]
                        if take
                        else np.empty(0, dtype=np.intp)
                    )
                edit[i] = _cone_edit_row(
                    current, changed, field_vectors[i], cone, schema, tables, rng,
                    per_feature_lambda,
                )
        edits.append(edit)
    return CandidateBatch(edits=tuple(edits))

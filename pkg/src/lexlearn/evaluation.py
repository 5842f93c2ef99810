"""Intrinsic and extrinsic lexicon evaluation.

Intrinsic: k-fold cross-validation over documents; each fold's model is
fit on the remaining folds and its word ratings are correlated (Pearson)
against a gold word lexicon over the words both sides cover.  Extrinsic:
score each user by the relative-frequency-weighted average rating of their
lexicon words and correlate the scores with a user-level trait.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, Document, GoldWordLexicon, build_corpus, tokenize
from .errors import (
    DataError,
    LexlearnError,
    RowError,
    SchemaError,
    UndefinedCorrelationError,
)
from .induction import Lexicon, MethodSpec, fit_method
from .numerics import pearson

__all__ = [
    "EvalReport",
    "UserCorpus",
    "eval_intrinsic",
    "eval_extrinsic",
    "load_user_corpora",
    "EVAL_TSV_HEADER",
]


@dataclass
class EvalReport:
    """Cross-validated intrinsic result for one method and construct.

    ``per_fold`` holds one Pearson value per fold, NaN where the fold
    failed; failures carry their reason in ``fold_failures`` and stay out
    of ``mean_r``.  ``coverage`` is the mean fraction of gold words the
    method rated per successful fold.
    """

    method: str
    construct: str
    folds: int
    per_fold: list[float]
    fold_failures: dict[int, str] = field(default_factory=dict)
    mean_r: float = float("nan")
    sd_r: float = float("nan")
    evaluated_vocab_size: int = 0
    coverage: float = 0.0


EVAL_TSV_HEADER = "method\tconstruct\tfolds\tmean_r\tsd_r\tcoverage"


def report_tsv_row(report: EvalReport) -> str:
    return "\t".join(
        [
            report.method,
            report.construct,
            str(report.folds),
            repr(report.mean_r),
            repr(report.sd_r),
            repr(report.coverage),
        ]
    )


def _canonical_documents(corpus: Corpus) -> list[Document]:
    # a fixed pre-shuffle order makes the fold split independent of the
    # incoming document order
    return sorted(
        corpus.documents,
        key=lambda d: (d.id, " ".join(d.tokens), sorted(d.ratings.items())),
    )


def eval_intrinsic(
    corpus: Corpus,
    gold: GoldWordLexicon,
    method: MethodSpec,
    construct: str,
    folds: int = 10,
    seed: int = 0,
) -> EvalReport:
    """Document-partitioned cross-validation against a gold word lexicon.

    Documents are shuffled once (seeded, over a canonical order) and split
    into ``folds`` groups; for each fold the method is fit on the other
    groups' documents and its ratings are correlated with the gold ratings
    over rated-and-gold words.  Folds with undefined correlation are
    recorded as failed and excluded from the mean.
    """
    if folds < 2:
        raise ValueError(f"eval_intrinsic: folds must be >= 2, got {folds}")
    if construct not in gold.constructs:
        raise DataError(
            f"construct {construct!r} not in gold lexicon {list(gold.constructs)}"
        )
    if construct not in corpus.constructs:
        raise DataError(
            f"construct {construct!r} not in corpus {list(corpus.constructs)}"
        )
    overlap = set(corpus.vocab) & set(gold.ratings)
    if len(overlap) < 30:
        raise DataError(
            f"corpus and gold lexicon share only {len(overlap)} words; "
            f"need at least 30"
        )
    gci = gold.constructs.index(construct)
    docs = _canonical_documents(corpus)
    if folds > len(docs):
        raise ValueError(
            f"eval_intrinsic: folds={folds} exceeds document count {len(docs)}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(docs))
    groups = np.array_split(perm, folds)
    fold_seeds = [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(folds)
    ]

    per_fold: list[float] = []
    failures: dict[int, str] = {}
    coverages: list[float] = []
    seen_words: set[str] = set()
    for f, group in enumerate(groups):
        held_out = set(int(i) for i in group)
        train_docs = [docs[i] for i in range(len(docs)) if i not in held_out]
        try:
            sub = build_corpus(train_docs, corpus.constructs)
            lex = fit_method(sub, construct, method, seed=fold_seeds[f])
            rated = lex.ratings_for(construct)
            common = sorted(set(rated) & set(gold.ratings))
            if len(common) < 2:
                raise UndefinedCorrelationError(
                    f"only {len(common)} rated words overlap the gold lexicon"
                )
            pred = [rated[w] for w in common]
            ref = [gold.ratings[w][gci] for w in common]
            r = pearson(pred, ref)
        except LexlearnError as exc:
            per_fold.append(float("nan"))
            failures[f] = str(exc)
            continue
        per_fold.append(r)
        coverages.append(len(common) / len(gold.ratings))
        seen_words.update(common)
    good = [v for v in per_fold if v == v]
    report = EvalReport(
        method=method.kind,
        construct=construct,
        folds=folds,
        per_fold=per_fold,
        fold_failures=failures,
        evaluated_vocab_size=len(seen_words),
    )
    if good:
        report.mean_r = float(np.mean(good))
        report.sd_r = float(np.std(good, ddof=1)) if len(good) > 1 else float("nan")
        report.coverage = float(np.mean(coverages))
    return report


@dataclass(frozen=True)
class UserCorpus:
    """One user's aggregated word usage plus their trait score."""

    user_id: str
    counts: dict[str, int]
    trait_score: float


def eval_extrinsic(
    lexicon: Lexicon, construct: str, users: Sequence[UserCorpus]
) -> tuple[float, dict[str, float]]:
    """Correlate lexicon-based user scores with user trait scores.

    A user's score is the relative-frequency-weighted mean rating over the
    words they share with the lexicon; users with no overlap are excluded
    with a warning.  Returns (Pearson r, user_id -> score).
    """
    ratings = lexicon.ratings_for(construct)
    scores: dict[str, float] = {}
    traits: list[float] = []
    excluded: list[str] = []
    for user in users:
        total = 0
        weighted = 0.0
        for word, count in user.counts.items():
            rating = ratings.get(word)
            if rating is not None:
                total += count
                weighted += rating * count
        if total == 0:
            excluded.append(user.user_id)
            continue
        scores[user.user_id] = weighted / total
        traits.append(user.trait_score)
    if excluded:
        warnings.warn(
            f"{len(excluded)} user(s) share no word with the lexicon and were "
            f"excluded: {excluded[:10]}",
            stacklevel=2,
        )
    if len(scores) < 3:
        raise DataError(
            f"extrinsic evaluation needs at least 3 scorable users, got {len(scores)}"
        )
    r = pearson(list(scores.values()), traits)
    return r, scores


def _infer_delimiter(path: str | Path, delimiter: str | None) -> str:
    if delimiter is not None:
        return delimiter
    return "\t" if Path(path).suffix.lower() == ".tsv" else ","


def load_user_corpora(
    usage_path: str | Path,
    traits_path: str | Path,
    trait_column: str,
    *,
    delimiter: str | None = None,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> list[UserCorpus]:
    """Load per-user word counts plus trait scores from two delimited files.

    The usage file carries either (user_id, text) rows, repeatable per user
    and tokenized here, or pre-counted (user_id, word, count) rows.  The
    traits file maps user_id to numeric trait columns.  Users missing a
    trait row are dropped with a warning.
    """
    sep = _infer_delimiter(usage_path, delimiter)
    counts: dict[str, dict[str, int]] = {}
    with open(usage_path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=sep)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{usage_path}: file is empty") from None
        if "user_id" not in header:
            raise SchemaError(f"{usage_path}: column 'user_id' not found")
        uid_col = header.index("user_id")
        if "text" in header:
            text_col = header.index("text")
            for row in reader:
                user = counts.setdefault(row[uid_col], {})
                for tok in tokenizer(row[text_col]):
                    user[tok] = user.get(tok, 0) + 1
        elif "word" in header and "count" in header:
            word_col = header.index("word")
            count_col = header.index("count")
            for row in reader:
                line = reader.line_num
                try:
                    value = int(float(row[count_col]))
                except ValueError:
                    raise RowError(
                        f"{usage_path}: line {line}: bad count {row[count_col]!r}"
                    ) from None
                if value <= 0:
                    raise RowError(f"{usage_path}: line {line}: count must be positive")
                user = counts.setdefault(row[uid_col], {})
                user[row[word_col]] = user.get(row[word_col], 0) + value
        else:
            raise SchemaError(
                f"{usage_path}: need either a 'text' column or 'word'+'count' columns"
            )
    if not counts:
        raise DataError(f"{usage_path}: no user rows found")

    sep_t = _infer_delimiter(traits_path, delimiter)
    traits: dict[str, float] = {}
    with open(traits_path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle, delimiter=sep_t)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{traits_path}: file is empty") from None
        for name in ("user_id", trait_column):
            if name not in header:
                raise SchemaError(f"{traits_path}: column {name!r} not found")
        uid_col = header.index("user_id")
        trait_col = header.index(trait_column)
        for row in reader:
            line = reader.line_num
            try:
                traits[row[uid_col]] = float(row[trait_col])
            except ValueError:
                raise RowError(
                    f"{traits_path}: line {line}: bad trait value {row[trait_col]!r}"
                ) from None
    users = []
    missing = []
    for uid, words in counts.items():
        if not words:
            continue
        if uid not in traits:
            missing.append(uid)
            continue
        users.append(UserCorpus(uid, words, traits[uid]))
    if missing:
        warnings.warn(
            f"{len(missing)} user(s) have no trait score and were dropped: "
            f"{missing[:10]}",
            stacklevel=2,
        )
    if not users:
        raise DataError("no user has both word counts and a trait score")
    return users

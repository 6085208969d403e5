"""Back-translation strategies: standard, incremental, iterative, and
per-dataset selection (OurBT).

Every strategy works on both directions of a language pair at once. The
"forward" direction translates the bilingual corpus's source language into
its target language; monolingual target-language text, translated by the
backward model, becomes extra forward training data and vice versa.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import BilingualCorpus, MonolingualCorpus, concat_bilingual, save_bilingual, shuffle
from .metrics import EvalResult, bleu, evaluate_all
from .subword import BpeModel
from .translator import BeamConfig, FingerprintMismatch, LexicalBackend, TrainConfig

log = logging.getLogger(__name__)

MERGE_POLICIES = ("merged", "synthetic-only")
SELECTION_POLICIES = ("top_k", "above-baseline")


class BtError(Exception):
    pass


@dataclass
class MonoPool:
    datasets: list[MonolingualCorpus]

    def __post_init__(self):
        ids = [d.id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise BtError(f"duplicate dataset ids in pool: {ids}")
        langs = {d.language for d in self.datasets}
        if len(langs) > 1:
            raise BtError(f"pool mixes languages: {sorted(map(str, langs))}")

    @property
    def N(self) -> int:
        return len(self.datasets)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.datasets]

    def concat(self, ids=None, id: str = "pool") -> MonolingualCorpus:
        chosen = [d for d in self.datasets if ids is None or d.id in set(ids)]
        lang = chosen[0].language if chosen else self.datasets[0].language
        sentences = [s for d in chosen for s in d.sentences]
        return MonolingualCorpus(id, lang, "+".join(d.source_tag for d in chosen), sentences)


@dataclass
class BtConfig:
    strategy: str = "ourbt"
    merge_policy: str = "merged"
    selection_policy: str = "top_k"
    top_k: int = 3
    selection_threshold: float = 0.0
    max_iterations: int = 4
    convergence_epsilon: float = 0.5
    portion_schedule: tuple[float, ...] = (0.25, 0.5, 1.0)
    beam: BeamConfig = field(default_factory=BeamConfig)
    seed: int = 0
    metric_profile: str = "plain"  # tokenization for test-set BLEU/TER rows

    def __post_init__(self):
        if self.merge_policy not in MERGE_POLICIES:
            raise ValueError(f"merge_policy must be one of {MERGE_POLICIES}")
        if self.selection_policy not in SELECTION_POLICIES:
            raise ValueError(f"selection_policy must be one of {SELECTION_POLICIES}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        check_schedule(self.portion_schedule)


def check_schedule(schedule) -> None:
    if not schedule:
        raise ValueError("portion schedule is empty")
    prev = 0.0
    for p in schedule:
        if not 0.0 < p <= 1.0:
            raise ValueError(f"portion {p} outside (0, 1]")
        if p < prev:
            raise ValueError(f"portion schedule must be nondecreasing: {list(schedule)}")
        prev = p


@dataclass
class SyntheticCorpus:
    corpus: BilingualCorpus
    generator: str
    beam: BeamConfig
    mono_id: str

    def __len__(self) -> int:
        return len(self.corpus)

    def header(self) -> dict:
        return {
            "mono": self.mono_id,
            "generator": self.generator,
            "beam_width": self.beam.beam_width,
            "direction": f"{self.corpus.source_language}-{self.corpus.target_language}",
        }


@dataclass
class CandidateResult:
    dataset_id: str
    dataset_index: int
    direction: str
    model_id: str
    bleu_on_valid: float
    baseline_bleu: float


@dataclass
class EvalRow:
    stage: str
    direction: str
    model_id: str
    result: EvalResult | None
    valid_bleu: float | None = None


@dataclass
class BtRunState:
    strategy: str
    directions: tuple[str, str]
    seed: int
    bpe_fingerprint: str
    baseline: dict[str, str] = field(default_factory=dict)
    baseline_valid: dict[str, float] = field(default_factory=dict)
    candidates: list[CandidateResult] = field(default_factory=list)
    selected: dict[str, list[str]] = field(default_factory=dict)
    best_model: dict[str, str] = field(default_factory=dict)
    final: dict[str, str] = field(default_factory=dict)
    rows: list[EvalRow] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    synthetic: dict[str, SyntheticCorpus] = field(default_factory=dict)
    models: dict = field(default_factory=dict, repr=False)

    def final_model(self, direction: str):
        return self.models[self.final[direction]]

    def to_text(self) -> str:
        """Line-oriented ``key<TAB>value`` dump of everything but the models."""
        out = [
            f"strategy\t{self.strategy}",
            f"directions\t{','.join(self.directions)}",
            f"seed\t{self.seed}",
            f"bpe_fingerprint\t{self.bpe_fingerprint}",
        ]
        for d in self.directions:
            if d in self.baseline:
                out.append(f"baseline.{d}\t{self.baseline[d]}")
            if d in self.baseline_valid:
                out.append(f"baseline_valid.{d}\t{self.baseline_valid[d]!r}")
            if d in self.selected:
                out.append(f"selected.{d}\t{','.join(self.selected[d])}")
            if d in self.best_model:
                out.append(f"best_model.{d}\t{self.best_model[d]}")
            if d in self.final:
                out.append(f"final.{d}\t{self.final[d]}")
        for f in self.flags:
            out.append(f"flag\t{f}")
        for mid in sorted(self.models):
            out.append(f"model\t{mid}\t{self.models[mid].digest()}")
        for r in self.rows:
            score = "" if r.result is None else repr(r.result.bleu.score)
            valid = "" if r.valid_bleu is None else repr(r.valid_bleu)
            out.append(f"row\t{r.stage}\t{r.direction}\t{r.model_id}\t{score}\t{valid}")
        return "\n".join(out) + "\n"

    def candidate_table(self) -> str:
        lines = ["dataset_id\tdirection\tbleu\tbaseline"]
        lines += [
            f"{c.dataset_id}\t{c.direction}\t{c.bleu_on_valid:.4f}\t{c.baseline_bleu:.4f}" for c in self.candidates
        ]
        return "\n".join(lines) + "\n"

    def save(self, run_dir) -> None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "state").write_text(self.to_text(), encoding="utf-8")
        (run_dir / "candidates.tsv").write_text(self.candidate_table(), encoding="utf-8")
        syn_dir = run_dir / "synthetic"
        syn_dir.mkdir(exist_ok=True)
        for name, syn in sorted(self.synthetic.items()):
            save_bilingual(syn.corpus, syn_dir / f"{name}.tsv", header=syn.header())


def parse_state(text: str) -> dict:
    """Read a ``state`` file back into plain values (models are referenced by digest)."""
    out: dict = {"rows": [], "flags": [], "models": {}}
    for line in text.splitlines():
        key, *vals = line.split("\t")
        if key == "row":
            stage, direction, mid, score, valid = vals
            out["rows"].append((stage, direction, mid, float(score) if score else None,
                                float(valid) if valid else None))
        elif key == "flag":
            out["flags"].append(vals[0])
        elif key == "model":
            out["models"][vals[0]] = vals[1]
        elif key.startswith("selected."):
            out[key] = [v for v in vals[0].split(",") if v]
        else:
            out[key] = vals[0]
    return out


# ---------------------------------------------------------------- selection


def select_based_on_bleu(candidates: list[CandidateResult], baseline_bleu: float,
                         policy: str = "top_k", k: int = 3, threshold: float = 0.0):
    """Pick datasets whose candidate model beat the baseline on validation BLEU.

    Returns ``(dataset ids, best candidate)``: ids ordered by descending BLEU
    then ascending dataset index, and the top candidate (None when nothing
    beats the baseline). ``top_k`` keeps at most ``k`` of them;
    ``above-baseline`` keeps all that clear ``baseline + threshold``.
    """
    if not candidates:
        raise BtError("no candidates to select from")
    ranked = sorted(candidates, key=lambda c: (-c.bleu_on_valid, c.dataset_index))
    if policy == "top_k":
        chosen = [c for c in ranked if c.bleu_on_valid > baseline_bleu][:k]
    elif policy == "above-baseline":
        chosen = [c for c in ranked if c.bleu_on_valid > baseline_bleu + threshold]
    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    return [c.dataset_id for c in chosen], (chosen[0] if chosen else None)


# ---------------------------------------------------------------- runner


class _Run:
    """Shared plumbing: both directions' data, training, synthesis, evaluation."""

    def __init__(self, strategy, D: BilingualCorpus, bpe: BpeModel, train_cfg: TrainConfig,
                 bt_cfg: BtConfig, valid, test, backend, baselines=None):
        self.bpe = bpe
        self.train_cfg = train_cfg or TrainConfig()
        self.cfg = bt_cfg or BtConfig()
        self.backend = backend or LexicalBackend()
        self.fwd = f"{D.source_language}-{D.target_language}"
        self.bwd = f"{D.target_language}-{D.source_language}"
        self.data = {self.fwd: D, self.bwd: D.reversed()}
        self.valid = {self.fwd: valid, self.bwd: valid.reversed() if valid is not None else None}
        self.test = {self.fwd: test, self.bwd: test.reversed() if test is not None else None}
        self.state = BtRunState(strategy, (self.fwd, self.bwd), self.cfg.seed, bpe.fingerprint)
        if baselines is not None:
            for d, m in zip((self.fwd, self.bwd), baselines):
                self._check_fp(m)
                self.state.models[f"baseline.{d}"] = m
                self.state.baseline[d] = f"baseline.{d}"

    def reverse(self, direction: str) -> str:
        return self.bwd if direction == self.fwd else self.fwd

    def _check_fp(self, model):
        if self.backend.fingerprint(model) != self.bpe.fingerprint:
            raise FingerprintMismatch(f"model BPE {self.backend.fingerprint(model)} != run BPE {self.bpe.fingerprint}")

    def model(self, mid: str):
        return self.state.models[mid]

    def train(self, mid: str, direction: str, corpus: BilingualCorpus) -> str:
        log.info("training %s on %d pairs", mid, len(corpus))
        m = self.backend.train(corpus, self.valid[direction], self.bpe, self.train_cfg)
        self._check_fp(m)
        self.state.models[mid] = m
        return mid

    def baselines(self) -> dict[str, str]:
        for d in (self.fwd, self.bwd):
            if d not in self.state.baseline:
                self.state.baseline[d] = self.train(f"baseline.{d}", d, self.data[d])
        return dict(self.state.baseline)

    def synthesize(self, reverse_mid: str, mono: MonolingualCorpus, name: str) -> SyntheticCorpus:
        syn = synthesize(self.model(reverse_mid), mono, self.cfg.beam, self.bpe, backend=self.backend,
                         generator=reverse_mid)
        self.state.synthetic[name] = syn
        return syn

    def training_corpus(self, direction: str, synthetic: list[SyntheticCorpus], id: str) -> BilingualCorpus:
        parts = [s.corpus for s in synthetic]
        if self.cfg.merge_policy == "merged":
            parts = [self.data[direction]] + parts
        merged = concat_bilingual(parts, id)
        return shuffle(merged, self.cfg.seed)

    def valid_bleu(self, mid: str, direction: str) -> float:
        v = self.valid[direction]
        if v is None or not len(v):
            raise BtError("a validation set is required for BLEU-based decisions")
        hyps = self.backend.translate(self.model(mid), v.sources, self.cfg.beam, self.bpe)
        return bleu(hyps, v.targets).score

    def record(self, stage: str, models: dict[str, str], valid_scores: dict[str, float] | None = None):
        for d in (self.fwd, self.bwd):
            mid = models[d]
            t = self.test[d]
            res = None
            if t is not None and len(t):
                hyps = self.backend.translate(self.model(mid), t.sources, self.cfg.beam, self.bpe)
                res = evaluate_all(hyps, t.targets, profile=self.cfg.metric_profile)
            vs = (valid_scores or {}).get(d)
            self.state.rows.append(EvalRow(stage, d, mid, res, vs))


def synthesize(reverse_model, mono: MonolingualCorpus, beam: BeamConfig, bpe: BpeModel,
               backend=None, generator: str = "model") -> SyntheticCorpus:
    """Translate ``mono`` with ``reverse_model`` into pairs that train the
    opposite direction: ``(machine translation, real sentence)``."""
    backend = backend or LexicalBackend()
    src_lang, tgt_lang = reverse_model.source, reverse_model.target
    if src_lang != mono.language:
        raise BtError(f"reverse model reads {src_lang}, monolingual corpus {mono.id} is {mono.language}")
    hyps = backend.translate(reverse_model, mono.sentences, beam, bpe) if mono.sentences else []
    pairs = [(h, real, f"bt:{mono.source_tag}") for h, real in zip(hyps, mono.sentences)]
    corpus = BilingualCorpus(f"synthetic.{mono.id}", tgt_lang, mono.language, pairs)
    return SyntheticCorpus(corpus, generator, beam, mono.id)


def _standard_pass(run: _Run, reverse: dict[str, str], mono: dict[str, MonolingualCorpus],
                   stage: str, tag: str) -> dict[str, str]:
    """One BT round: synthesize with ``reverse`` models, retrain both directions."""
    out = {}
    for d in (run.fwd, run.bwd):
        m = mono[d]
        if m is None or not len(m):
            log.warning("%s: no monolingual data for %s, keeping %s", stage, d, reverse[d])
            run.state.flags.append(f"no-mono:{stage}:{d}")
            out[d] = reverse[d]
            continue
        syn = run.synthesize(reverse[run.reverse(d)], m, f"{tag}.{d}")
        corpus = run.training_corpus(d, [syn], f"{tag}.{d}")
        out[d] = run.train(f"{tag}.{d}", d, corpus)
    return out


def _mono_for(run: _Run, mono_src, mono_tgt) -> dict:
    # forward training data comes from target-language text and vice versa
    return {run.fwd: mono_tgt, run.bwd: mono_src}


def standard_bt(D, mono_src, mono_tgt, bpe, train_cfg=None, bt_cfg=None, *, valid=None, test=None,
                baselines=None, backend=None):
    """Synthesize once with the baseline models, merge, retrain both directions.

    Returns ``(forward model, backward model, BtRunState)``.
    """
    run = _Run("standard", D, bpe, train_cfg, bt_cfg, valid, test, backend, baselines)
    base = run.baselines()
    run.record("Bilingual", base)
    final = _standard_pass(run, base, _mono_for(run, mono_src, mono_tgt), "StandardBT", "standard")
    run.state.final = final
    run.record("StandardBT", final)
    return run.model(final[run.fwd]), run.model(final[run.bwd]), run.state


def _portion(mono: MonolingualCorpus | None, frac: float, seed: int) -> MonolingualCorpus | None:
    if mono is None:
        return None
    n = len(mono)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    # keep the chosen sentences in pool order so a full portion is the pool itself
    idx = sorted(order[: math.ceil(frac * n - 1e-9)])
    return replace(mono, id=f"{mono.id}@{frac:g}", sentences=[mono.sentences[i] for i in idx])


def incremental_bt(D, mono_src, mono_tgt, portion_schedule=None, bpe=None, train_cfg=None, bt_cfg=None, *,
                   valid=None, test=None, baselines=None, backend=None) -> BtRunState:
    """Back-translate growing prefixes of a seeded shuffle of the monolingual data.

    Each pass retrains from scratch on the bilingual data plus the current
    portion's synthetic pairs; the newest models generate the next portion.
    """
    bt_cfg = bt_cfg or BtConfig()
    schedule = tuple(portion_schedule if portion_schedule is not None else bt_cfg.portion_schedule)
    check_schedule(schedule)
    run = _Run("incremental", D, bpe, train_cfg, bt_cfg, valid, test, backend, baselines)
    current = run.baselines()
    run.record("Bilingual", current)
    for k, frac in enumerate(schedule, 1):
        mono = {
            run.fwd: _portion(mono_tgt, frac, bt_cfg.seed),
            run.bwd: _portion(mono_src, frac, bt_cfg.seed),
        }
        current = _standard_pass(run, current, mono, f"IncBT {frac:.0%}", f"incremental{k}")
        run.record(f"IncBT {frac:.0%}", current)
    run.state.final = current
    return run.state


def iterative_bt(D, mono_src, mono_tgt, bpe, train_cfg=None, bt_cfg=None, *, max_iterations=None,
                 convergence_epsilon=None, valid=None, test=None, baselines=None, init=None, backend=None,
                 stage_prefix="iteration") -> BtRunState:
    """Repeat BT rounds, each re-synthesizing everything with the newest models.

    Stops once validation BLEU improves by less than ``convergence_epsilon``
    in both directions, or after ``max_iterations`` rounds. ``init`` gives
    the models for the first round (default: the baselines).
    """
    bt_cfg = bt_cfg or BtConfig()
    max_iterations = bt_cfg.max_iterations if max_iterations is None else max_iterations
    eps = bt_cfg.convergence_epsilon if convergence_epsilon is None else convergence_epsilon
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    run = _Run("iterative", D, bpe, train_cfg, bt_cfg, valid, test, backend, baselines)
    base = run.baselines()
    run.record("Bilingual", base)
    current = dict(base)
    if init is not None:
        for d, m in zip((run.fwd, run.bwd), init):
            run._check_fp(m)
            run.state.models[f"init.{d}"] = m
            current[d] = f"init.{d}"
    has_valid = valid is not None and len(valid)
    prev = {d: run.valid_bleu(current[d], d) for d in current} if has_valid else {}
    mono = _mono_for(run, mono_src, mono_tgt)
    for t in range(1, max_iterations + 1):
        current = _standard_pass(run, current, mono, f"{stage_prefix} {t}", f"iter{t}")
        scores = {d: run.valid_bleu(current[d], d) for d in current} if has_valid else {}
        run.record(f"{stage_prefix} {t}", current, scores)
        if has_valid and all(scores[d] - prev[d] < eps for d in scores):
            break
        prev = scores
    run.state.final = current
    return run.state


def our_bt(D, pool_src: MonoPool, pool_tgt: MonoPool, bpe, train_cfg=None, bt_cfg=None, *, valid=None,
           test=None, baselines=None, backend=None):
    """Per-dataset candidate BT with BLEU-based dataset and model selection.

    1. Train baselines on ``D``.
    2. For each monolingual dataset and direction, synthesize it with the
       baseline reverse model and train a candidate on ``D`` plus that
       synthetic data; score the candidate by validation BLEU.
    3. Per direction, keep the datasets whose candidates beat the baseline
       (``select_based_on_bleu``) and remember the best candidate model.
    4. Translate each direction's selected datasets with the best model of
       the reverse direction and train the final models on ``D`` plus that.

    Returns ``(forward model, backward model, BtRunState)``.
    """
    if not pool_src.N or not pool_tgt.N:
        raise BtError("our_bt needs non-empty monolingual pools on both sides")
    if valid is None or not len(valid):
        raise BtError("our_bt needs a validation set to rank candidates")
    run = _Run("ourbt", D, bpe, train_cfg, bt_cfg, valid, test, backend, baselines)
    cfg = run.cfg
    base = run.baselines()
    run.record("Bilingual", base)
    pools = {run.fwd: pool_tgt, run.bwd: pool_src}
    for d in (run.fwd, run.bwd):
        run.state.baseline_valid[d] = run.valid_bleu(base[d], d)

    for d in (run.fwd, run.bwd):
        for i, mono in enumerate(pools[d].datasets):
            tag = f"candidate.{mono.id}"
            syn = run.synthesize(base[run.reverse(d)], mono, f"{tag}.{d}")
            mid = run.train(f"{tag}.{d}", d, run.training_corpus(d, [syn], f"{tag}.{d}"))
            run.state.candidates.append(
                CandidateResult(mono.id, i, d, mid, run.valid_bleu(mid, d), run.state.baseline_valid[d])
            )

    for d in (run.fwd, run.bwd):
        cands = [c for c in run.state.candidates if c.direction == d]
        ids, best = select_based_on_bleu(cands, run.state.baseline_valid[d], cfg.selection_policy,
                                         cfg.top_k, cfg.selection_threshold)
        run.state.selected[d] = ids
        run.state.best_model[d] = best.model_id if best else base[d]
        if not ids:
            run.state.flags.append(f"no-selection:{d}")

    final = {}
    for d in (run.fwd, run.bwd):
        ids = run.state.selected[d]
        if not ids:
            final[d] = base[d]
            continue
        mono = pools[d].concat(ids, id=f"selected.{d}")
        syn = run.synthesize(run.state.best_model[run.reverse(d)], mono, f"final.{d}")
        final[d] = run.train(f"ourbt.{d}", d, run.training_corpus(d, [syn], f"ourbt.{d}"))
    run.state.final = final
    run.record("OurBT", final, {d: run.valid_bleu(final[d], d) for d in final})
    return run.model(final[run.fwd]), run.model(final[run.bwd]), run.state

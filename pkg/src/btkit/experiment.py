"""Config-driven, resumable end-to-end runs.

A run directory holds everything a run produced::

    config.snapshot   exact copy of the config text (its hash pins the run)
    stages.log        one line per stage event, with artifact content hashes
    splits/           cleaned corpora and the train/valid/test split
    bpe/              the shared subword model
    models/           every trained model
    synthetic/        back-translated corpora
    bt/               strategy state files and the candidate table
    eval/             per-stage, per-direction test scores
    report.tsv        the result table (one block per direction)

Stages only talk to each other through these files, so a resumed run and a
fresh run go through exactly the same code path.
"""

from __future__ import annotations

import configparser
import hashlib
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import bt as btmod
from .corpus import (
    BilingualCorpus, CleanRuleSet, LanguageTag, clean, concat_bilingual, expand_eval_sets,
    filter_by_source, load_bilingual, load_monolingual, make_splits, read_bilingual, read_manifest,
    save_bilingual, save_monolingual,
)
from .metrics import get_profile
from .report import emit_report
from .subword import learn_bpe, load_bpe, save_bpe
from .translator import BeamConfig, LexicalBackend, TrainConfig, load_model, save_model

log = logging.getLogger(__name__)

STAGES = ("clean", "split", "bpe", "baseline", "bt", "evaluate", "report")
STRATEGIES = ("standard", "incremental", "iterative", "ourbt")


class ConfigError(Exception):
    pass


class RunLockedError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {type(cause).__name__}: {cause}")


# ------------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    manifest: Path
    source_language: str
    target_language: str
    run_dir: Path
    split_seed: int
    name: str = "run"
    exclude_tags: tuple[str, ...] = ()
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    newtest: Path | None = None
    bpe_vocab_size: int = 8000
    clean_rules: CleanRuleSet = field(default_factory=CleanRuleSet)
    train: TrainConfig = field(default_factory=TrainConfig)
    bt: btmod.BtConfig = field(default_factory=btmod.BtConfig)
    metric_profile: str = "plain"
    text: str = ""  # the config file as read, for the snapshot

    def validate(self) -> None:
        if not Path(self.manifest).exists():
            raise ConfigError(f"manifest not found: {self.manifest}")
        if self.newtest is not None and not Path(self.newtest).exists():
            raise ConfigError(f"newtest file not found: {self.newtest}")
        for _, p in self.clean_rules.wordlists:
            if not Path(p).exists():
                raise ConfigError(f"word list not found: {p}")
        if self.bt.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.bt.strategy!r}")
        if self.bpe_vocab_size < 1:
            raise ConfigError("bpe vocab_size must be positive")
        get_profile(self.metric_profile)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:16]


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _words(s: str) -> tuple[str, ...]:
    return tuple(x for x in s.replace(",", " ").split() if x)


def _require_seed(cp, section: str, seed_override) -> int:
    if seed_override is not None:
        return int(seed_override)
    if not cp.has_option(section, "seed"):
        raise ConfigError(f"[{section}] seed must be set explicitly")
    return cp.getint(section, "seed")


def parse_config(text: str, base_dir=".", seed=None, run_dir=None) -> ExperimentConfig:
    """Parse INI-style ``key = value`` text; relative paths resolve against ``base_dir``.

    ``seed`` (if given) overrides every seed in the file; ``run_dir``
    overrides ``[run] output``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0]) from None
    base = Path(base_dir)

    def path(section, key, default=None):
        v = cp.get(section, key, fallback="").strip()
        if not v:
            return default
        p = Path(v)
        return p if p.is_absolute() else base / p

    for sec in ("run", "data", "split"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")
    try:
        out_dir = Path(run_dir) if run_dir is not None else path("run", "output")
        if out_dir is None:
            raise ConfigError("[run] output (or --run-dir) is required")
        manifest = path("data", "manifest")
        if manifest is None:
            raise ConfigError("[data] manifest is required")

        rules = CleanRuleSet()
        if cp.has_section("clean"):
            c = cp["clean"]
            wl = tuple((k[len("wordlist."):], str(path("clean", k))) for k in c if k.startswith("wordlist."))
            rules = CleanRuleSet(
                strip_hyperlinks=c.getboolean("strip_hyperlinks", rules.strip_hyperlinks),
                strip_special_characters=c.getboolean("strip_special_characters", rules.strip_special_characters),
                collapse_whitespace=c.getboolean("collapse_whitespace", rules.collapse_whitespace),
                drop_code_mixed=c.getboolean("drop_code_mixed", rules.drop_code_mixed),
                drop_repetitive=c.getboolean("drop_repetitive", rules.drop_repetitive),
                allowed_punctuation=c.get("allowed_punctuation", rules.allowed_punctuation),
                code_mix_threshold=c.getfloat("code_mix_threshold", rules.code_mix_threshold),
                wordlists=wl,
            )

        t = cp["train"] if cp.has_section("train") else {}
        d = TrainConfig()
        train = TrainConfig(
            batch_size=int(t.get("batch_size", d.batch_size)),
            patience=int(t.get("patience", d.patience)),
            max_epochs=int(t.get("max_epochs", d.max_epochs)),
            seed=_require_seed(cp, "train", seed) if cp.has_section("train") else _require_seed(cp, "run", seed),
            em_tolerance=float(t.get("em_tolerance", d.em_tolerance)),
            lm_smoothing=float(t.get("lm_smoothing", d.lm_smoothing)),
        )

        b = cp["bt"] if cp.has_section("bt") else {}
        db = btmod.BtConfig()
        dbeam = BeamConfig()
        profile = cp.get("run", "metric_profile", fallback="plain").strip()
        bt_cfg = btmod.BtConfig(
            strategy=b.get("strategy", db.strategy).strip(),
            merge_policy=b.get("merge_policy", db.merge_policy).strip(),
            selection_policy=b.get("selection_policy", db.selection_policy).strip(),
            top_k=int(b.get("top_k", db.top_k)),
            selection_threshold=float(b.get("selection_threshold", db.selection_threshold)),
            max_iterations=int(b.get("max_iterations", db.max_iterations)),
            convergence_epsilon=float(b.get("convergence_epsilon", db.convergence_epsilon)),
            portion_schedule=_floats(b["portion_schedule"]) if "portion_schedule" in b else db.portion_schedule,
            beam=BeamConfig(
                beam_width=int(b.get("beam_width", dbeam.beam_width)),
                max_output_length_factor=float(b.get("max_output_length_factor", dbeam.max_output_length_factor)),
                candidates_per_token=int(b.get("candidates_per_token", dbeam.candidates_per_token)),
            ),
            seed=_require_seed(cp, "bt", seed) if cp.has_section("bt") else _require_seed(cp, "run", seed),
            metric_profile=profile,
        )

        ratios = _floats(cp.get("split", "ratios", fallback="0.8 0.1 0.1"))
        if len(ratios) != 3:
            raise ConfigError(f"[split] ratios needs three numbers, got {ratios}")
        cfg = ExperimentConfig(
            manifest=manifest,
            source_language=cp.get("data", "source_language").strip(),
            target_language=cp.get("data", "target_language").strip(),
            run_dir=out_dir,
            split_seed=_require_seed(cp, "split", seed),
            name=cp.get("run", "name", fallback="run").strip(),
            exclude_tags=_words(cp.get("data", "exclude_tags", fallback="")),
            split_ratios=ratios,
            newtest=path("data", "newtest"),
            bpe_vocab_size=cp.getint("bpe", "vocab_size", fallback=8000),
            clean_rules=rules,
            train=train,
            bt=bt_cfg,
            metric_profile=profile,
            text=text,
        )
    except (configparser.Error, KeyError) as e:
        raise ConfigError(str(e).splitlines()[0]) from None
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return cfg


def load_config(path, seed=None, run_dir=None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent, seed=seed, run_dir=run_dir)


# ------------------------------------------------------------------ records


@dataclass(frozen=True)
class StageResult:
    stage: str
    direction: str
    model_id: str
    bleu: float
    sacrebleu: float
    chrf2: float
    ter: float
    valid_bleu: float | None = None


@dataclass
class StageEvent:
    time: str
    stage: str
    status: str  # start | done | failed
    detail: str = ""  # artifact=hash;... or the error


@dataclass
class RunRecord:
    name: str
    run_dir: Path
    config_hash: str
    config_text: str
    stages: list[StageEvent] = field(default_factory=list)
    artifacts: dict[str, Path] = field(default_factory=dict)
    results: list[StageResult] = field(default_factory=list)
    test_fingerprint: str = ""
    executed: list[str] = field(default_factory=list)  # stages actually run this invocation

    def report(self, format: str = "tsv") -> str:
        return emit_report(self, format)


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _dir_hash(path: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(path.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(path)).encode())
            h.update(b"\0")
            h.update(p.read_bytes())
    return h.hexdigest()[:16]


def _artifact_hash(path: Path) -> str:
    return _dir_hash(path) if path.is_dir() else file_hash(path)


def read_stage_log(path) -> list[StageEvent]:
    path = Path(path)
    if not path.exists():
        return []
    events = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            t, stage, status, *rest = line.split("\t")
            events.append(StageEvent(t, stage, status, rest[0] if rest else ""))
    return events


def _parse_artifacts(detail: str) -> dict[str, str]:
    return dict(kv.split("=", 1) for kv in detail.split(";") if "=" in kv)


RESULT_COLUMNS = ("stage", "direction", "model_id", "bleu", "sacrebleu", "chrf2", "ter", "valid_bleu")


def write_results(results: list[StageResult], path) -> None:
    lines = ["\t".join(RESULT_COLUMNS)]
    for r in results:
        vb = "" if r.valid_bleu is None else repr(r.valid_bleu)
        lines.append("\t".join([r.stage, r.direction, r.model_id, repr(r.bleu), repr(r.sacrebleu),
                                repr(r.chrf2), repr(r.ter), vb]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_results(path) -> list[StageResult]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        if not line:
            continue
        stage, direction, mid, b, sb, c, t, vb = line.split("\t")
        out.append(StageResult(stage, direction, mid, float(b), float(sb), float(c), float(t),
                               float(vb) if vb else None))
    return out


def load_record(run_dir) -> RunRecord:
    """Rebuild a RunRecord from a finished run directory."""
    run_dir = Path(run_dir)
    snap = run_dir / "config.snapshot"
    results = run_dir / "eval" / "results.tsv"
    if not snap.exists() or not results.exists():
        raise FileNotFoundError(f"{run_dir} is not a finished run directory")
    cfg = parse_config(snap.read_text(encoding="utf-8"), run_dir=run_dir)
    rec = RunRecord(cfg.name, run_dir, cfg.config_hash, cfg.text, stages=read_stage_log(run_dir / "stages.log"))
    rec.results = read_results(results)
    rec.test_fingerprint = file_hash(run_dir / "splits" / "test.tsv")
    rec.artifacts = _artifact_paths(run_dir)
    return rec


# ------------------------------------------------------------------- runner


@contextmanager
def run_lock(run_dir: Path):
    """Exclusive ownership of a run directory for the duration of a run."""
    lock = run_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLockedError(f"run directory is locked by another run: {lock}") from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


_STAGE_ARTIFACTS = {
    "clean": ("splits/clean",),
    "split": ("splits/train.tsv", "splits/valid.tsv", "splits/test.tsv"),
    "bpe": ("bpe/bpe.codes",),
    "baseline": ("models/baseline",),
    "bt": ("models/bt", "synthetic", "bt"),
    "evaluate": ("eval/results.tsv",),
    "report": ("report.tsv",),
}


def _artifact_paths(run_dir: Path) -> dict[str, Path]:
    return {rel: run_dir / rel for stage in STAGES for rel in _STAGE_ARTIFACTS[stage] if (run_dir / rel).exists()}


class _Runner:
    def __init__(self, cfg: ExperimentConfig, backend=None):
        self.cfg = cfg
        self.dir = Path(cfg.run_dir)
        self.backend = backend or LexicalBackend()
        self.src = LanguageTag(cfg.source_language)
        self.tgt = LanguageTag(cfg.target_language)
        self.fwd = f"{self.src}-{self.tgt}"
        self.bwd = f"{self.tgt}-{self.src}"

    # -- log

    def _log(self, stage: str, status: str, detail: str = "") -> StageEvent:
        ev = StageEvent(datetime.now(timezone.utc).isoformat(timespec="seconds"), stage, status, detail)
        line = "\t".join([ev.time, ev.stage, ev.status] + ([detail] if detail else []))
        with open(self.dir / "stages.log", "a", encoding="utf-8") as f:
            f.write(line + "\n")
        return ev

    def _completed(self) -> set[str]:
        """Stages whose last event is ``done`` and whose artifacts are intact."""
        last = {}
        for ev in read_stage_log(self.dir / "stages.log"):
            last[ev.stage] = ev
        ok = set()
        for stage, ev in last.items():
            if ev.status != "done":
                continue
            arts = _parse_artifacts(ev.detail)
            if all((self.dir / rel).exists() and _artifact_hash(self.dir / rel) == h for rel, h in arts.items()):
                ok.add(stage)
        return ok

    # -- stages

    def _manifest(self):
        entries = read_manifest(self.cfg.manifest)
        bilingual, mono_src, mono_tgt = [], [], []
        fwd_code, bwd_code = self.fwd, self.bwd
        for e in entries:
            if e.language == fwd_code:
                bilingual.append(load_bilingual(e.path, self.src, self.tgt, e.id, e.source_tag))
            elif e.language == bwd_code:
                bilingual.append(load_bilingual(e.path, self.tgt, self.src, e.id, e.source_tag).reversed(e.id))
            elif e.language == str(self.src):
                mono_src.append(load_monolingual(e.path, self.src, e.id, e.source_tag))
            elif e.language == str(self.tgt):
                mono_tgt.append(load_monolingual(e.path, self.tgt, e.id, e.source_tag))
            else:
                log.warning("manifest entry %s (%s) matches neither language; skipped", e.id, e.language)
        if not bilingual:
            raise ConfigError(f"manifest has no {fwd_code} bilingual corpus")
        return bilingual, mono_src, mono_tgt

    def stage_clean(self):
        bilingual, mono_src, mono_tgt = self._manifest()
        out = self.dir / "splits" / "clean"
        out.mkdir(parents=True, exist_ok=True)
        D = concat_bilingual(bilingual, "bilingual")
        D, rep = clean(D, self.cfg.clean_rules)
        save_bilingual(D, out / "bilingual.tsv")
        reports = [f"##bilingual\n{rep.to_text()}"]
        listing = []
        for side, pool in (("src", mono_src), ("tgt", mono_tgt)):
            (out / side).mkdir(exist_ok=True)
            for m in pool:
                cm, r = clean(m, self.cfg.clean_rules)
                save_monolingual(cm, out / side / f"{m.id}.txt")
                listing.append(f"{side}\t{m.id}\t{m.source_tag}")
                reports.append(f"##{m.id}\n{r.to_text()}")
        if self.cfg.newtest is not None:
            extra = load_bilingual(self.cfg.newtest, self.src, self.tgt, "newtest", "newtest")
            extra, r = clean(extra, self.cfg.clean_rules)
            save_bilingual(extra, out / "newtest.tsv")
            reports.append(f"##newtest\n{r.to_text()}")
        (out / "mono.list").write_text("".join(x + "\n" for x in listing), encoding="utf-8")
        (out / "report.txt").write_text("\n".join(reports), encoding="utf-8")

    def _read(self, rel: str, id: str) -> BilingualCorpus:
        return read_bilingual(self.dir / rel, self.src, self.tgt, id)

    def _pools(self):
        base = self.dir / "splits" / "clean"
        pools = {"src": [], "tgt": []}
        for line in (base / "mono.list").read_text(encoding="utf-8").splitlines():
            side, mid, tag = line.split("\t")
            lang = self.src if side == "src" else self.tgt
            pools[side].append(load_monolingual(base / side / f"{mid}.txt", lang, mid, tag))
        return btmod.MonoPool(pools["src"]), btmod.MonoPool(pools["tgt"])

    def stage_split(self):
        D = self._read("splits/clean/bilingual.tsv", "bilingual")
        split = make_splits(D, self.cfg.split_ratios, self.cfg.split_seed)
        newtest = self.dir / "splits" / "clean" / "newtest.tsv"
        if newtest.exists():
            split = expand_eval_sets(split, self._read("splits/clean/newtest.tsv", "newtest"))
        # exclusions touch training data only, so runs with and without a
        # source share (and can be compared on) one test set
        train = filter_by_source(split.train, self.cfg.exclude_tags) if self.cfg.exclude_tags else split.train
        header = {"variant": split.variant, "split_seed": split.split_seed}
        save_bilingual(train, self.dir / "splits" / "train.tsv", header=header)
        save_bilingual(split.valid, self.dir / "splits" / "valid.tsv", header=header)
        save_bilingual(split.test, self.dir / "splits" / "test.tsv", header=header)

    def _splits(self):
        return (self._read("splits/train.tsv", "train"), self._read("splits/valid.tsv", "valid"),
                self._read("splits/test.tsv", "test"))

    def stage_bpe(self):
        train, _, _ = self._splits()
        pool_src, pool_tgt = self._pools()
        model = learn_bpe([train] + pool_src.datasets + pool_tgt.datasets, self.cfg.bpe_vocab_size)
        (self.dir / "bpe").mkdir(exist_ok=True)
        save_bpe(model, self.dir / "bpe" / "bpe.codes")

    def stage_baseline(self):
        train, valid, _ = self._splits()
        bpe = load_bpe(self.dir / "bpe" / "bpe.codes")
        out = self.dir / "models" / "baseline"
        out.mkdir(parents=True, exist_ok=True)
        for d, data, v in ((self.fwd, train, valid), (self.bwd, train.reversed(), valid.reversed())):
            save_model(self.backend.train(data, v, bpe, self.cfg.train), out / f"{d}.model")

    def stage_bt(self):
        train, valid, test = self._splits()
        bpe = load_bpe(self.dir / "bpe" / "bpe.codes")
        pool_src, pool_tgt = self._pools()
        base = tuple(load_model(self.dir / "models" / "baseline" / f"{d}.model") for d in (self.fwd, self.bwd))
        kw = dict(valid=valid, test=test, baselines=base, backend=self.backend)
        cfg, tc = self.cfg.bt, self.cfg.train
        states = []
        if cfg.strategy == "standard":
            *_, st = btmod.standard_bt(train, pool_src.concat(id="mono.src"), pool_tgt.concat(id="mono.tgt"),
                                       bpe, tc, cfg, **kw)
            states.append(("standard", st))
        elif cfg.strategy == "incremental":
            st = btmod.incremental_bt(train, pool_src.concat(id="mono.src"), pool_tgt.concat(id="mono.tgt"),
                                      cfg.portion_schedule, bpe, tc, cfg, **kw)
            states.append(("incremental", st))
        elif cfg.strategy == "iterative":
            st = btmod.iterative_bt(train, pool_src.concat(id="mono.src"), pool_tgt.concat(id="mono.tgt"),
                                    bpe, tc, cfg, **kw)
            states.append(("iterative", st))
        else:
            f, b, st = btmod.our_bt(train, pool_src, pool_tgt, bpe, tc, cfg, **kw)
            # the selected combination under plain standard BT, for contrast
            sel_src = pool_src.concat(st.selected[self.bwd], id="selected.src")
            sel_tgt = pool_tgt.concat(st.selected[self.fwd], id="selected.tgt")
            *_, std = btmod.standard_bt(train, sel_src, sel_tgt, bpe, tc, cfg, **kw)
            it = btmod.iterative_bt(train, sel_src, sel_tgt, bpe, tc, cfg, init=(f, b), **kw)
            # report order: Bilingual, StandardBT, OurBT, iterations
            states += [("standard", std), ("ourbt", st), ("iterative", it)]
        self._save_states(states)

    def _save_states(self, states):
        mdir = self.dir / "models" / "bt"
        sdir = self.dir / "synthetic"
        bdir = self.dir / "bt"
        for p in (mdir, sdir, bdir):
            p.mkdir(parents=True, exist_ok=True)
        stages = []
        for name, st in states:
            (bdir / f"{name}.state").write_text(st.to_text(), encoding="utf-8")
            if st.candidates:
                (bdir / f"{name}.candidates.tsv").write_text(st.candidate_table(), encoding="utf-8")
            for mid, m in sorted(st.models.items()):
                if not mid.startswith(("baseline.", "init.")):
                    save_model(m, mdir / f"{name}.{mid}.model")
            for key, syn in sorted(st.synthetic.items()):
                save_bilingual(syn.corpus, sdir / f"{name}.{key}.tsv", header=syn.header())
            for r in st.rows:
                stages.append((name, r))
        # one Bilingual row per direction, then each strategy's own rows in order
        results = []
        seen_base = set()
        for name, r in stages:
            if r.result is None:
                continue
            if r.stage == "Bilingual":
                if r.direction in seen_base:
                    continue
                seen_base.add(r.direction)
            res = r.result
            results.append(StageResult(r.stage, r.direction, f"{name}.{r.model_id}", res.bleu.score,
                                       res.sacrebleu.score, res.chrf2.score, res.ter.score, r.valid_bleu))
        order = {self.fwd: 0, self.bwd: 1}
        results.sort(key=lambda r: order[r.direction])  # stable: keeps stage order
        write_results(results, bdir / "rows.tsv")

    def stage_evaluate(self):
        (self.dir / "eval").mkdir(exist_ok=True)
        write_results(read_results(self.dir / "bt" / "rows.tsv"), self.dir / "eval" / "results.tsv")

    def stage_report(self):
        results = read_results(self.dir / "eval" / "results.tsv")
        (self.dir / "report.tsv").write_text(emit_report(results, "tsv"), encoding="utf-8")
        (self.dir / "eval" / "report.txt").write_text(emit_report(results, "aligned-text"), encoding="utf-8")


def run_experiment(cfg: ExperimentConfig, backend=None, stop_after: str | None = None) -> RunRecord:
    """Run (or resume) every stage in order, persisting after each.

    Stages already logged as done, with artifacts whose hashes still match,
    are skipped up to the first one that is not; from there on everything
    runs. ``stop_after`` ends the run early after the named stage.
    """
    cfg.validate()
    if stop_after is not None and stop_after not in STAGES:
        raise ValueError(f"unknown stage {stop_after!r}")
    run_dir = Path(cfg.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    snap = run_dir / "config.snapshot"
    if snap.exists() and snap.read_text(encoding="utf-8") != cfg.text:
        raise ConfigError(f"{run_dir} belongs to a different config; use a fresh run directory")
    runner = _Runner(cfg, backend)
    rec = RunRecord(cfg.name, run_dir, cfg.config_hash, cfg.text)
    with run_lock(run_dir):
        if not snap.exists():
            snap.write_text(cfg.text, encoding="utf-8")
        done = runner._completed()
        resuming = True
        for stage in STAGES:
            if resuming and stage in done:
                log.info("stage %s: already done", stage)
            else:
                resuming = False
                runner._log(stage, "start")
                try:
                    getattr(runner, f"stage_{stage}")()
                except Exception as e:
                    runner._log(stage, "failed", f"{type(e).__name__}: {e}".replace("\n", " "))
                    raise StageError(stage, e) from e
                arts = ";".join(f"{rel}={_artifact_hash(run_dir / rel)}" for rel in _STAGE_ARTIFACTS[stage])
                runner._log(stage, "done", arts)
                rec.executed.append(stage)
            if stage == stop_after:
                break
    rec.stages = read_stage_log(run_dir / "stages.log")
    rec.artifacts = _artifact_paths(run_dir)
    if (run_dir / "splits" / "test.tsv").exists():
        rec.test_fingerprint = file_hash(run_dir / "splits" / "test.tsv")
    if (run_dir / "eval" / "results.tsv").exists():
        rec.results = read_results(run_dir / "eval" / "results.tsv")
    return rec
